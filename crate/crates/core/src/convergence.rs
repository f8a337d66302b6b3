//! Observed convergence orders of residuals along an `h`-refinement ladder.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// `log(r_i / r_{i+1}) / log(h_i / h_{i+1})` for consecutive pairs.
pub fn observed_orders(spacings: &[f64], residuals: &[f64]) -> Result<Vec<f64>> {
    ensure!(spacings.len() == residuals.len(), Domain, "spacing and residual counts differ");
    ensure!(spacings.len() >= 2, Precondition, "need at least two refinement levels");
    ensure!(spacings.iter().all(|&h| h > 0.0), Domain, "spacings must be positive");
    ensure!(residuals.iter().all(|&r| r >= 0.0 && r.is_finite()), Domain, "residuals must be finite and nonnegative");
    Ok(spacings.windows(2).zip(residuals.windows(2)).map(|(h, r)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln()).collect())
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.is_finite().then_some(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Option<f64>>::deserialize(d)?.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

/// Which refinement pairs must show the expected order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairRule {
    /// Every consecutive pair.
    All,
    /// Only the finest pair, for asymptotic statements.
    Finest,
}

/// A residual measured on successive refinements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub name: String,
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Non-finite orders (a zero residual) are written as `null` and read back as NaN.
    #[serde(with = "nan_as_null")]
    pub orders: Vec<f64>,
    /// Residuals at or below this are treated as converged to round-off.
    pub floor: f64,
    pub min_order: f64,
    pub rule: PairRule,
    pub passed: bool,
}

impl ConvergenceStudy {
    /// A refinement pair passes when its finer residual is at the floor or
    /// its observed order reaches `min_order`; every pair must pass.
    pub fn new(name: impl Into<String>, spacings: Vec<f64>, residuals: Vec<f64>, floor: f64, min_order: f64) -> Result<Self> {
        Self::with_rule(name, spacings, residuals, floor, min_order, PairRule::All)
    }

    pub fn with_rule(name: impl Into<String>, spacings: Vec<f64>, residuals: Vec<f64>, floor: f64, min_order: f64, rule: PairRule) -> Result<Self> {
        ensure!(floor > 0.0 && min_order > 0.0, Domain, "floor and minimum order must be positive");
        let orders = observed_orders(&spacings, &residuals)?;
        let pair_ok = |(&q, &fine): (&f64, &f64)| fine <= floor || q >= min_order;
        let passed = match rule {
            PairRule::All => orders.iter().zip(&residuals[1..]).all(pair_ok),
            PairRule::Finest => pair_ok((orders.last().expect("two levels"), residuals.last().expect("two levels"))),
        };
        Ok(Self { name: name.into(), spacings, residuals, orders, floor, min_order, rule, passed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undefined_orders_roundtrip_through_json() {
        let s = ConvergenceStudy::new("zero", vec![0.1, 0.05, 0.025], vec![1e-3, 0.0, 0.0], 1e-12, 1.8).unwrap();
        assert!(s.passed && s.orders[0].is_infinite() && s.orders[1].is_nan());
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"orders\":[null,null]"));
        let back: ConvergenceStudy = serde_json::from_str(&json).unwrap();
        assert_eq!(back.residuals, s.residuals);
        assert!(back.orders.iter().all(|o| o.is_nan()));
    }

    #[test]
    fn second_order_sequence() {
        let h = [0.1, 0.05, 0.025];
        let r: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        let q = observed_orders(&h, &r).unwrap();
        assert!(q.iter().all(|&v| (v - 2.0).abs() < 1e-12));
        assert!(ConvergenceStudy::new("r", h.to_vec(), r, 1e-14, 1.8).unwrap().passed);
    }

    #[test]
    fn stagnation_fails_unless_at_floor() {
        let h = vec![0.1, 0.05, 0.025];
        assert!(!ConvergenceStudy::new("r", h.clone(), vec![1e-3, 1e-3, 1e-3], 1e-12, 1.8).unwrap().passed);
        assert!(ConvergenceStudy::new("r", h, vec![1e-3, 1e-13, 2e-13], 1e-12, 1.8).unwrap().passed);
        assert!(observed_orders(&[0.1], &[1.0]).is_err());
    }

    #[test]
    fn finest_rule_ignores_early_pairs() {
        let h = vec![0.1, 0.05, 0.025];
        let r = vec![1e-3, 2e-3, 0.0];
        assert!(!ConvergenceStudy::new("r", h.clone(), r.clone(), 1e-12, 1.8).unwrap().passed);
        assert!(ConvergenceStudy::with_rule("r", h, r, 1e-12, 1.8, PairRule::Finest).unwrap().passed);
    }
}

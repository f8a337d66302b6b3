//! Variable exponents `p(·)` sampled on a grid, and the exponents derived from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Closed-form exponent rules. Spatial dependence is through `x₁` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "expr", rename_all = "kebab-case")]
pub enum ExponentRule {
    Constant {
        value: f64,
    },
    /// `clamp(base + slope·x₁, lo, hi)`.
    AffineClamped {
        base: f64,
        slope: f64,
        lo: f64,
        hi: f64,
    },
    /// `base + amplitude·sin²(2π x₁ / period)`.
    SinBump {
        base: f64,
        amplitude: f64,
        period: f64,
    },
    /// `low` for `x₁ < split`, `high` otherwise.
    TwoLevelStep {
        low: f64,
        high: f64,
        split: f64,
    },
}

impl ExponentRule {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            ExponentRule::Constant { value } => value,
            ExponentRule::AffineClamped { base, slope, lo, hi } => (base + slope * x[0]).clamp(lo, hi),
            ExponentRule::SinBump { base, amplitude, period } => {
                let s = (std::f64::consts::TAU * x[0] / period).sin();
                base + amplitude * s * s
            }
            ExponentRule::TwoLevelStep { low, high, split } => {
                if x[0] < split {
                    low
                } else {
                    high
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExponentRule::Constant { .. } => "constant",
            ExponentRule::AffineClamped { .. } => "affine-clamped",
            ExponentRule::SinBump { .. } => "sin-bump",
            ExponentRule::TwoLevelStep { .. } => "two-level-step",
        }
    }
}

/// Empirical log-Hölder constants over the sampled nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogHolder<S> {
    /// Smallest `C` with `|p(x)-p(y)| ≤ C / log(e + 1/|x-y|)` over sampled pairs.
    pub c_log: S,
    /// Smallest `C` with `|p(x)-p∞| ≤ C / log(e + |x|)` over sampled nodes.
    pub c_inf: S,
    /// `p` at the node of largest `|x|`.
    pub p_inf: S,
    /// True when the pair sweep ran on a strided subset of nodes.
    pub subsampled: bool,
}

/// A variable exponent sampled at grid nodes.
///
/// Dual exponents may take the value `∞` at nodes where `p = 1`; such nodes are
/// flagged in a mask and never enter power computations.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableExponent<S> {
    grid: Grid<S>,
    values: Vec<S>,
    infinite: Vec<bool>,
    p_minus: S,
    p_plus: S,
    p_zero: S,
    rule: Option<ExponentRule>,
    log_holder: Option<LogHolder<S>>,
}

/// Default `p₀ = 0.9·p₋`.
pub fn default_p_zero<S: Real>(p_minus: S) -> S {
    S::lit(0.9) * p_minus
}

/// Default grand-maximal order `⌊n/p₀⌋ + n + 2`, which exceeds `n/p₀ + n + 1`.
pub fn default_order<S: Real>(dim: usize, p_zero: S) -> usize {
    let ratio = (S::of(dim) / p_zero).floor().as_f64() as usize;
    ratio + dim + 2
}

/// `(min, max)` of exponent samples.
pub fn bounds_of_samples<S: Real>(values: &[S]) -> Result<(S, S)> {
    ensure!(!values.is_empty(), Domain, "exponent has no samples");
    Ok(values.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v))))
}

impl<S: Real> VariableExponent<S> {
    /// Builds an exponent from finite samples.
    pub fn from_samples(grid: Grid<S>, values: Vec<S>, p_zero: Option<S>) -> Result<Self> {
        ensure!(values.len() == grid.len(), Domain, "expected {} exponent samples, got {}", grid.len(), values.len());
        ensure!(values.iter().all(|&v| v.is_finite() && v > S::zero()), Domain, "exponent samples must be positive and finite");
        let (p_minus, p_plus) = bounds_of_samples(&values)?;
        let p_zero = p_zero.unwrap_or_else(|| default_p_zero(p_minus));
        ensure!(p_zero > S::zero() && p_zero < p_minus, Domain, "p_zero = {p_zero} must lie in (0, p_minus = {p_minus})");
        Ok(Self { grid, values, infinite: Vec::new(), p_minus, p_plus, p_zero, rule: None, log_holder: None })
    }

    /// Samples a closed-form rule once on `grid`.
    pub fn from_rule(grid: Grid<S>, rule: ExponentRule, p_zero: Option<S>) -> Result<Self> {
        let values = grid.sample(|x| S::lit(rule.eval([x[0].as_f64(), x[1].as_f64()])));
        let mut p = Self::from_samples(grid, values, p_zero)?;
        p.rule = Some(rule);
        Ok(p)
    }

    pub fn constant(grid: Grid<S>, value: S) -> Result<Self> {
        Self::from_rule(grid, ExponentRule::Constant { value: value.as_f64() }, None)
    }

    /// The same rule (and `p₀`) sampled on another grid.
    pub fn resample(&self, grid: Grid<S>) -> Result<Self> {
        let rule = self.rule.clone().ok_or_else(|| Error::Precondition("exponent has no closed-form rule to resample".into()))?;
        Self::from_rule(grid, rule, Some(self.p_zero))
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    /// Samples; nodes flagged infinite hold `+∞` here.
    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn is_infinite_at(&self, i: usize) -> bool {
        !self.infinite.is_empty() && self.infinite[i]
    }

    pub fn has_infinite_nodes(&self) -> bool {
        self.infinite.iter().any(|&b| b)
    }

    #[inline]
    pub fn p_minus(&self) -> S {
        self.p_minus
    }

    #[inline]
    pub fn p_plus(&self) -> S {
        self.p_plus
    }

    #[inline]
    pub fn p_zero(&self) -> S {
        self.p_zero
    }

    pub fn rule(&self) -> Option<&ExponentRule> {
        self.rule.as_ref()
    }

    pub fn log_holder(&self) -> Option<&LogHolder<S>> {
        self.log_holder.as_ref()
    }

    /// Runs [`check_log_holder`] and stores the certificate.
    pub fn with_log_holder(mut self) -> Self {
        self.log_holder = Some(check_log_holder(&self));
        self
    }

    /// Grand-maximal order `N` implied by `p₀` and the dimension.
    pub fn default_order(&self) -> usize {
        default_order(self.grid.dim(), self.p_zero)
    }
}

/// `(p₋, p₊)` as min and max over grid nodes.
pub fn essential_bounds<S: Real>(p: &VariableExponent<S>) -> Result<(S, S)> {
    bounds_of_samples(&p.values)
}

/// The dual exponent `p*` with `1/p + 1/p* = 1`; `p = 1` maps to the `∞` flag.
pub fn dual_exponent<S: Real>(p: &VariableExponent<S>) -> Result<VariableExponent<S>> {
    ensure!(p.p_minus >= S::one(), Precondition, "dual exponent needs p_minus >= 1, got {}", p.p_minus);
    ensure!(!p.has_infinite_nodes(), Precondition, "dual of an exponent with infinite nodes is not representable");
    let mut infinite = vec![false; p.values.len()];
    let values: Vec<S> = p
        .values
        .iter()
        .zip(infinite.iter_mut())
        .map(|(&v, inf)| {
            if v == S::one() {
                *inf = true;
                S::infinity()
            } else {
                v / (v - S::one())
            }
        })
        .collect();
    let (p_minus, p_plus) = bounds_of_samples(&values)?;
    let any_inf = infinite.iter().any(|&b| b);
    Ok(VariableExponent {
        grid: p.grid,
        values,
        infinite: if any_inf { infinite } else { Vec::new() },
        p_minus,
        p_plus,
        p_zero: default_p_zero(p_minus),
        rule: None,
        log_holder: None,
    })
}

/// The exponent `x ↦ p(x)/s`, with `p₀` scaled alongside.
pub fn scale_exponent<S: Real>(p: &VariableExponent<S>, s: S) -> Result<VariableExponent<S>> {
    ensure!(s > S::zero() && s.is_finite(), Domain, "scale must be positive, got {s}");
    let values: Vec<S> = p.values.iter().map(|&v| v / s).collect();
    Ok(VariableExponent {
        grid: p.grid,
        values,
        infinite: p.infinite.clone(),
        p_minus: p.p_minus / s,
        p_plus: p.p_plus / s,
        p_zero: p.p_zero / s,
        rule: None,
        log_holder: None,
    })
}

/// Above this many nodes the pair sweep is run on a strided subset.
pub const LOG_HOLDER_MAX_NODES: usize = 1 << 13;

/// Smallest constants making the two log-Hölder inequalities hold over the
/// sampled pairs and nodes. These certify nothing beyond the sample.
pub fn check_log_holder<S: Real>(p: &VariableExponent<S>) -> LogHolder<S> {
    let grid = &p.grid;
    let finite: Vec<usize> = (0..grid.len()).filter(|&i| !p.is_infinite_at(i)).collect();
    let e = S::E();

    // p∞ is read at the node of largest |x| (the first corner).
    let far = finite.iter().copied().fold(None::<usize>, |best, i| match best {
        Some(b) if grid.radius(b) >= grid.radius(i) => Some(b),
        _ => Some(i),
    });
    let p_inf = far.map(|i| p.values[i]).unwrap_or(S::zero());
    let c_inf = finite.iter().fold(S::zero(), |m, &i| m.max((p.values[i] - p_inf).abs() * (e + grid.radius(i)).ln()));

    let mut stride = 1usize;
    while (grid.points() / stride).pow(grid.dim() as u32) > LOG_HOLDER_MAX_NODES {
        stride *= 2;
    }
    let nodes: Vec<usize> = finite.into_iter().filter(|&i| grid.multi_index(i).iter().take(grid.dim()).all(|&k| k % stride == 0)).collect();
    let coords: Vec<[S; 2]> = nodes.iter().map(|&i| grid.coords(i)).collect();
    let c_log = (0..nodes.len())
        .into_par_iter()
        .map(|a| {
            let pa = p.values[nodes[a]];
            let mut best = S::zero();
            for b in (a + 1)..nodes.len() {
                let dp = (pa - p.values[nodes[b]]).abs();
                if dp == S::zero() {
                    continue;
                }
                let dx = coords[a][0] - coords[b][0];
                let dy = coords[a][1] - coords[b][1];
                let dist = (dx * dx + dy * dy).sqrt();
                best = best.max(dp * (e + dist.recip()).ln());
            }
            best
        })
        .reduce(|| S::zero(), |a, b| a.max(b));
    LogHolder { c_log, c_inf, p_inf, subsampled: stride > 1 }
}

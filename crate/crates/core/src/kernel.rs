//! Closed-form test kernels: separable products of one-dimensional profiles,
//! with exact dilation and derivative jets for seminorm audits.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, GridFunction};
use crate::scalar::Real;

/// One-dimensional profiles. Gaussian and bump have unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// `e^{-s²/2}/√(2π)`.
    Gaussian,
    /// The `k`-th derivative of the unit Gaussian.
    GaussianDerivative(u32),
    /// `c·exp(-1/(1-s²))` on `|s| < 1`, normalized to unit mass.
    Bump,
}

/// Taylor coefficients of `exp(u)` given those of `u`.
fn jet_exp(u: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; u.len()];
    w[0] = u[0].exp();
    for k in 1..u.len() {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * u[j] * w[k - j];
        }
        w[k] = acc / k as f64;
    }
    w
}

fn jet_recip(v: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; v.len()];
    r[0] = 1.0 / v[0];
    for k in 1..v.len() {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += v[j] * r[k - j];
        }
        r[k] = -acc * r[0];
    }
    r
}

/// Converts Taylor coefficients into derivatives `f^{(k)} = k!·c_k`.
fn taylor_to_derivatives(mut c: Vec<f64>) -> Vec<f64> {
    let mut fact = 1.0;
    for (k, v) in c.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        *v *= fact;
    }
    c
}

fn bump_raw_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        // composite Simpson; the integrand is flat to all orders at ±1
        let n = 40_000usize;
        let h = 2.0 / n as f64;
        let f = |s: f64| if s.abs() < 1.0 { (-1.0 / (1.0 - s * s)).exp() } else { 0.0 };
        let mut sum = f(-1.0) + f(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(-1.0 + i as f64 * h);
        }
        sum * h / 3.0
    })
}

impl Profile {
    /// Derivatives `d^k/ds^k` of the profile at `s` for `k = 0..=order`.
    pub fn derivatives(&self, s: f64, order: usize) -> Vec<f64> {
        match *self {
            Profile::Gaussian => {
                let mut u = vec![0.0; order + 1];
                u[0] = -0.5 * s * s;
                if order >= 1 {
                    u[1] = -s;
                }
                if order >= 2 {
                    u[2] = -0.5;
                }
                let norm = (std::f64::consts::TAU).sqrt().recip();
                taylor_to_derivatives(jet_exp(&u)).into_iter().map(|d| d * norm).collect()
            }
            Profile::GaussianDerivative(k) => {
                let k = k as usize;
                let all = Profile::Gaussian.derivatives(s, order + k);
                all[k..].to_vec()
            }
            Profile::Bump => {
                if s.abs() >= 1.0 {
                    return vec![0.0; order + 1];
                }
                let mut v = vec![0.0; order + 1];
                v[0] = 1.0 - s * s;
                if order >= 1 {
                    v[1] = -2.0 * s;
                }
                if order >= 2 {
                    v[2] = -1.0;
                }
                let neg_r: Vec<f64> = jet_recip(&v).into_iter().map(|r| -r).collect();
                let scale = bump_raw_mass().recip();
                taylor_to_derivatives(jet_exp(&neg_r)).into_iter().map(|d| d * scale).collect()
            }
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Profile::Gaussian => (-0.5 * s * s).exp() / std::f64::consts::TAU.sqrt(),
            Profile::Bump => {
                if s.abs() < 1.0 {
                    (-1.0 / (1.0 - s * s)).exp() / bump_raw_mass()
                } else {
                    0.0
                }
            }
            Profile::GaussianDerivative(_) => self.derivatives(s, 0)[0],
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Profile::Gaussian | Profile::Bump => 1.0,
            Profile::GaussianDerivative(_) => 0.0,
        }
    }

    /// Half-width of the interval used for seminorm audits.
    fn audit_radius(&self) -> f64 {
        match self {
            Profile::Bump => 1.0,
            _ => 24.0,
        }
    }

    /// `S[a][b] = sup_s |s^a · d^b/ds^b profile(s)|` for `a, b ≤ order`, on an audit grid.
    pub fn moment_derivative_table(&self, order: usize, audit_points: usize) -> Vec<Vec<f64>> {
        let r = self.audit_radius();
        let mut table = vec![vec![0.0; order + 1]; order + 1];
        for i in 0..audit_points {
            let s = -r + 2.0 * r * i as f64 / (audit_points - 1) as f64;
            let d = self.derivatives(s, order);
            let mut pow = 1.0;
            for row in table.iter_mut() {
                for (b, cell) in row.iter_mut().enumerate() {
                    *cell = f64::max(*cell, (pow * d[b]).abs());
                }
                pow *= s;
            }
        }
        table
    }
}

/// `ψ(x) = Π_i P_i(x_i / w) / w`, one profile per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub name: String,
    pub factors: Vec<Profile>,
    pub width: f64,
}

impl Kernel {
    pub fn new(name: impl Into<String>, factors: Vec<Profile>, width: f64) -> Self {
        Self { name: name.into(), factors, width }
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new("gaussian", vec![Profile::Gaussian; dim], 1.0)
    }

    pub fn bump(dim: usize) -> Self {
        Self::new("bump", vec![Profile::Bump; dim], 1.0)
    }

    /// First derivative of the Gaussian along `axis` (1-based).
    pub fn gaussian_derivative(dim: usize, axis: usize) -> Self {
        let factors = (1..=dim).map(|a| if a == axis { Profile::GaussianDerivative(1) } else { Profile::Gaussian }).collect();
        Self::new(format!("gaussian-d{axis}"), factors, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.factors.iter().zip(x.iter()).map(|(p, &xi)| p.value(xi / self.width) / self.width).product()
    }

    pub fn mass(&self) -> f64 {
        self.factors.iter().map(Profile::mass).product()
    }

    /// `ψ_t(x) = t^{-n} ψ(x/t)` sampled at the grid nodes. When the rule has
    /// nonzero mass the samples are rescaled so that the rectangle rule
    /// reproduces that mass exactly.
    pub fn sample_dilated<S: Real>(&self, grid: &Grid<S>, t: S) -> GridFunction<S> {
        let n = grid.dim() as i32;
        let t64 = t.as_f64();
        let norm = t64.powi(-n);
        let values: Vec<S> = (0..grid.len())
            .map(|i| {
                let c = grid.coords(i);
                S::lit(norm * self.eval([c[0].as_f64() / t64, c[1].as_f64() / t64]))
            })
            .collect();
        let mass = self.mass();
        let values = if mass != 0.0 {
            let discrete = crate::grid::quadrature_real(grid, &values).as_f64();
            if discrete != 0.0 {
                let fix = S::lit(mass / discrete);
                values.into_iter().map(|v| v * fix).collect()
            } else {
                values
            }
        } else {
            values
        };
        GridFunction::from_real(*grid, values, format!("{}_t", self.name)).expect("finite kernel samples")
    }

    /// `sup_{|α|,|β| ≤ N} sup_x |x^α ∂^β ψ(x)|`, evaluated per axis on an audit grid.
    pub fn seminorm(&self, order: usize, audit_points: usize) -> f64 {
        let w = self.width;
        let tables: Vec<Vec<Vec<f64>>> = self
            .factors
            .iter()
            .map(|p| {
                let mut t = p.moment_derivative_table(order, audit_points);
                for (a, row) in t.iter_mut().enumerate() {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v *= w.powi(a as i32 - b as i32 - 1);
                    }
                }
                t
            })
            .collect();
        let mut best: f64 = 0.0;
        match tables.len() {
            1 => {
                for row in &tables[0] {
                    for &v in row {
                        best = best.max(v);
                    }
                }
            }
            _ => {
                for a1 in 0..=order {
                    for a2 in 0..=(order - a1) {
                        for b1 in 0..=order {
                            for b2 in 0..=(order - b1) {
                                best = best.max(tables[0][a1][b1] * tables[1][a2][b2]);
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

//! Closed-form test functions, sampled in physical coordinates so that one
//! member gives consistent data on every grid of a refinement ladder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::grid::{Grid, GridFunction};
use crate::halfspace::{periodized_kernel, poisson_kernel};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorpusMember {
    /// `amplitude · exp(-|x - c|² / (2 w²))`.
    GaussianPacket { center: [f64; 2], width: f64, amplitude: f64 },
    /// Gaussian packet times `cos(k·(x - c))`.
    ModulatedGaussian { center: [f64; 2], width: f64, frequency: [f64; 2], amplitude: f64 },
    /// `P_t(x - c)`, periodized over the torus when `periodized` is set.
    PoissonData { t: f64, center: [f64; 2], periodized: bool },
    /// Mean-zero atom: a smooth box on `[c - w, c)` minus one on `[c, c + w)`
    /// along `x₁` (times a smooth box of half-width `w` along `x₂`), with
    /// `tanh` edges of width `edge`.
    BoxAtom { center: [f64; 2], half_width: f64, edge: f64 },
    /// `∂^α` of the Gaussian of width `w` (vanishing moments below `|α|`).
    GaussianDerivative { center: [f64; 2], width: f64, orders: [u32; 2] },
    /// Random low modes `Σ a_k cos(k·x) + b_k sin(k·x)` (|k_i| ≤ modes, in
    /// units of `2π/window`) under a Gaussian window of width `window`.
    RandomBandLimited { modes: u32, window: f64, seed: u64 },
}

fn hermite(k: u32, s: f64) -> f64 {
    // probabilists' Hermite: d^k/ds^k e^{-s²/2} = (-1)^k He_k(s) e^{-s²/2}
    let (mut a, mut b) = (1.0, s);
    match k {
        0 => a,
        _ => {
            for j in 1..k {
                let next = s * b - j as f64 * a;
                a = b;
                b = next;
            }
            b
        }
    }
}

fn smooth_box(x: f64, lo: f64, hi: f64, edge: f64) -> f64 {
    0.5 * (((x - lo) / edge).tanh() - ((x - hi) / edge).tanh())
}

impl CorpusMember {
    pub fn tag(&self) -> String {
        match self {
            CorpusMember::GaussianPacket { center, width, .. } => format!("gauss(c={:?},w={width})", center),
            CorpusMember::ModulatedGaussian { frequency, width, .. } => format!("modgauss(k={:?},w={width})", frequency),
            CorpusMember::PoissonData { t, periodized, .. } => format!("poisson(t={t}{})", if *periodized { ",per" } else { "" }),
            CorpusMember::BoxAtom { half_width, .. } => format!("atom(w={half_width})"),
            CorpusMember::GaussianDerivative { orders, width, .. } => format!("dgauss(a={:?},w={width})", orders),
            CorpusMember::RandomBandLimited { modes, seed, .. } => format!("band(K={modes},seed={seed})"),
        }
    }

    /// Samples the member on `grid`; coordinates beyond the grid dimension are 0.
    pub fn sample<S: Real>(&self, grid: &Grid<S>) -> Result<GridFunction<S>> {
        let dim = grid.dim();
        let coords = |i: usize| {
            let c = grid.coords(i);
            [c[0].as_f64(), c[1].as_f64()]
        };
        let values: Vec<f64> = match self {
            CorpusMember::GaussianPacket { center, width, amplitude } => {
                ensure!(*width > 0.0, Domain, "width must be positive");
                (0..grid.len())
                    .map(|i| {
                        let x = coords(i);
                        let r2 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>();
                        amplitude * (-r2 / (2.0 * width * width)).exp()
                    })
                    .collect()
            }
            CorpusMember::ModulatedGaussian { center, width, frequency, amplitude } => {
                ensure!(*width > 0.0, Domain, "width must be positive");
                (0..grid.len())
                    .map(|i| {
                        let x = coords(i);
                        let r2 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>();
                        let phase = (0..dim).map(|a| frequency[a] * (x[a] - center[a])).sum::<f64>();
                        amplitude * (-r2 / (2.0 * width * width)).exp() * phase.cos()
                    })
                    .collect()
            }
            CorpusMember::PoissonData { t, center, periodized } => {
                ensure!(*t > 0.0, Domain, "t must be positive");
                let g64 = Grid::<f64>::new(dim, grid.period().as_f64(), grid.points())?;
                (0..grid.len())
                    .map(|i| {
                        let x = coords(i);
                        let y = [x[0] - center[0], if dim == 2 { x[1] - center[1] } else { 0.0 }];
                        if *periodized {
                            periodized_kernel(&g64, 0, *t, y)
                        } else {
                            poisson_kernel(dim, *t, &y[..dim])
                        }
                    })
                    .collect::<Result<_>>()?
            }
            CorpusMember::BoxAtom { center, half_width, edge } => {
                ensure!(*half_width > 0.0 && *edge > 0.0, Domain, "half width and edge must be positive");
                (0..grid.len())
                    .map(|i| {
                        let x = coords(i);
                        let s = x[0] - center[0];
                        let v = smooth_box(s, -half_width, 0.0, *edge) - smooth_box(s, 0.0, *half_width, *edge);
                        if dim == 2 {
                            v * smooth_box(x[1] - center[1], -half_width, *half_width, *edge)
                        } else {
                            v
                        }
                    })
                    .collect()
            }
            CorpusMember::GaussianDerivative { center, width, orders } => {
                ensure!(*width > 0.0, Domain, "width must be positive");
                (0..grid.len())
                    .map(|i| {
                        let x = coords(i);
                        (0..dim)
                            .map(|a| {
                                let s = (x[a] - center[a]) / width;
                                let k = orders[a];
                                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                                sign * hermite(k, s) * (-0.5 * s * s).exp() / width.powi(k as i32)
                            })
                            .product()
                    })
                    .collect()
            }
            CorpusMember::RandomBandLimited { modes, window, seed } => {
                ensure!(*window > 0.0, Domain, "window must be positive");
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let m = *modes as i64;
                let base = std::f64::consts::TAU / window;
                let mut terms = Vec::new();
                let range2 = if dim == 2 { -m..=m } else { 0..=0 };
                for k1 in -m..=m {
                    for k2 in range2.clone() {
                        let a: f64 = rng.gen_range(-1.0..1.0);
                        let b: f64 = rng.gen_range(-1.0..1.0);
                        terms.push(([k1 as f64 * base, k2 as f64 * base], a, b));
                    }
                }
                let norm = 1.0 / (terms.len() as f64).sqrt();
                (0..grid.len())
                    .map(|i| {
                        let x = coords(i);
                        let wave: f64 = terms
                            .iter()
                            .map(|(k, a, b)| {
                                let ph = k[0] * x[0] + k[1] * x[1];
                                a * ph.cos() + b * ph.sin()
                            })
                            .sum();
                        let r2 = (0..dim).map(|a| x[a] * x[a]).sum::<f64>();
                        norm * wave * (-r2 / (2.0 * window * window)).exp()
                    })
                    .collect()
            }
        };
        GridFunction::from_real(*grid, values.into_iter().map(S::lit).collect(), self.tag())
    }
}

/// The default corpus for a dimension. Members are resolved on the default
/// grids (`L = 16` in one dimension, `L = 8` in two).
pub fn default_corpus(dim: usize, seed: u64) -> Vec<CorpusMember> {
    use CorpusMember::*;
    if dim == 1 {
        vec![
            GaussianPacket { center: [0.0, 0.0], width: 1.0, amplitude: 1.0 },
            GaussianPacket { center: [2.5, 0.0], width: 0.6, amplitude: 0.8 },
            ModulatedGaussian { center: [-1.0, 0.0], width: 1.2, frequency: [3.0, 0.0], amplitude: 1.0 },
            PoissonData { t: 1.0, center: [0.0, 0.0], periodized: true },
            BoxAtom { center: [0.5, 0.0], half_width: 1.5, edge: 0.25 },
            GaussianDerivative { center: [0.0, 0.0], width: 0.8, orders: [1, 0] },
            RandomBandLimited { modes: 4, window: 2.0, seed },
        ]
    } else {
        vec![
            GaussianPacket { center: [0.0, 0.0], width: 0.7, amplitude: 1.0 },
            GaussianPacket { center: [1.0, -0.5], width: 0.5, amplitude: 0.8 },
            ModulatedGaussian { center: [0.0, 0.0], width: 0.8, frequency: [2.0, 1.0], amplitude: 1.0 },
            PoissonData { t: 0.5, center: [0.0, 0.0], periodized: true },
            BoxAtom { center: [0.0, 0.0], half_width: 1.0, edge: 0.25 },
            GaussianDerivative { center: [0.0, 0.0], width: 0.6, orders: [1, 1] },
            RandomBandLimited { modes: 2, window: 1.5, seed },
        ]
    }
}

/// Mean-zero members with vanishing low moments, for exponents below 1.
pub fn moment_corpus(dim: usize) -> Vec<CorpusMember> {
    use CorpusMember::*;
    let c = [0.0, 0.0];
    if dim == 1 {
        vec![
            GaussianDerivative { center: c, width: 0.8, orders: [1, 0] },
            GaussianDerivative { center: c, width: 1.0, orders: [2, 0] },
            GaussianDerivative { center: [1.0, 0.0], width: 0.6, orders: [3, 0] },
        ]
    } else {
        vec![
            GaussianDerivative { center: c, width: 0.6, orders: [1, 2] },
            GaussianDerivative { center: c, width: 0.7, orders: [3, 0] },
            GaussianDerivative { center: [0.5, -0.5], width: 0.5, orders: [2, 1] },
            GaussianDerivative { center: c, width: 0.6, orders: [0, 3] },
        ]
    }
}

//! Riesz transforms and their compositions, the uncentered Hardy–Littlewood
//! maximal operator and mollification by closed-form kernels.

use std::collections::VecDeque;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::grid::{self, Grid, GridFunction, Spectrum};
use crate::kernel::Kernel;
use crate::scalar::Real;

/// The composition `R_{j_1} ⋯ R_{j_k}` with multiplier `Π_i (-i ξ_{j_i}/|ξ|)`,
/// defined as 0 at `ξ = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RieszSymbol {
    indices: Vec<usize>,
}

impl RieszSymbol {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        ensure!(!indices.is_empty(), Domain, "a Riesz symbol needs at least one index");
        ensure!(indices.iter().all(|&j| j >= 1), Domain, "Riesz indices are 1-based, got {indices:?}");
        Ok(Self { indices })
    }

    pub fn single(j: usize) -> Result<Self> {
        Self::new(vec![j])
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn order(&self) -> usize {
        self.indices.len()
    }

    /// The symbol of `self` followed by `other` (multipliers commute).
    pub fn compose(&self, other: &Self) -> Self {
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        Self { indices }
    }

    pub fn multiplier<S: Real>(&self, xi: [S; 2]) -> Complex<S> {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        if r == S::zero() {
            return Complex::new(S::zero(), S::zero());
        }
        let mut m = Complex::new(S::one(), S::zero());
        for &j in &self.indices {
            m = m * Complex::new(S::zero(), -xi[j - 1] / r);
        }
        m
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let max = *self.indices.iter().max().expect("nonempty");
        ensure!(max <= dim, Domain, "Riesz index {max} exceeds dimension {dim}");
        Ok(())
    }
}

pub fn riesz_spectrum<S: Real>(spectrum: &Spectrum<S>, symbol: &RieszSymbol) -> Result<Spectrum<S>> {
    symbol.check_dim(spectrum.grid().dim())?;
    Ok(spectrum.apply(|xi| symbol.multiplier(xi)))
}

pub fn riesz<S: Real>(f: &GridFunction<S>, symbol: &RieszSymbol) -> Result<GridFunction<S>> {
    let spec = riesz_spectrum(&grid::fourier(f), symbol)?;
    let tag = format!("R{:?}({})", symbol.indices, f.tag());
    Ok(grid::inverse_fourier(&spec).with_tag(tag))
}

/// Radii `h, 2h, 4h, …` up to `L/4`.
pub fn default_radii<S: Real>(grid: &Grid<S>) -> Vec<S> {
    grid::geometric_ladder(grid.spacing(), grid.period() / S::lit(4.0))
}

/// Half-widths of the row chords of the discrete ball `{|offset|·h < r}`,
/// indexed by row offset `a = -A..=A` (only `a = 0` in one dimension).
fn chords<S: Real>(grid: &Grid<S>, r: S) -> Vec<(isize, usize)> {
    let rr = (r / grid.spacing()).as_f64();
    let r2 = rr * rr;
    let reach = |a2: f64| -> Option<usize> {
        if a2 >= r2 {
            return None;
        }
        let mut b = (r2 - a2).sqrt().ceil() as usize;
        while b > 0 && a2 + (b * b) as f64 >= r2 {
            b -= 1;
        }
        Some(b)
    };
    if grid.dim() == 1 {
        return vec![(0, reach(0.0).expect("positive radius"))];
    }
    let mut out = Vec::new();
    let amax = rr.ceil() as isize;
    for a in -amax..=amax {
        if let Some(b) = reach((a * a) as f64) {
            out.push((a, b));
        }
    }
    out
}

fn rows_of<S: Real>(grid: &Grid<S>) -> (usize, usize) {
    let n = grid.points();
    if grid.dim() == 1 {
        (1, n)
    } else {
        (n, n)
    }
}

/// Periodic sliding maximum of `row` over windows `[j - w, j + w]`.
fn sliding_max<S: Real>(row: &[S], w: usize, out: &mut [S]) {
    let n = row.len();
    if 2 * w + 1 >= n {
        let m = row.iter().fold(S::neg_infinity(), |a, &b| a.max(b));
        out.iter_mut().for_each(|o| *o = m);
        return;
    }
    let mut dq: VecDeque<usize> = VecDeque::new();
    let at = |k: usize| row[(k + n - w) % n];
    // extended index k ↦ row[k - w], window for output j is k ∈ [j, j + 2w]
    for k in 0..n + 2 * w {
        let v = at(k);
        while let Some(&back) = dq.back() {
            if at(back) <= v {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(k);
        if k >= 2 * w {
            let j = k - 2 * w;
            while *dq.front().expect("nonempty") < j {
                dq.pop_front();
            }
            out[j] = at(*dq.front().expect("nonempty"));
        }
    }
}

/// Maximum of `values` over the discrete disk `{|y - x| < r}` around every node.
pub fn disk_max<S: Real>(grid: &Grid<S>, values: &[S], r: S) -> Vec<S> {
    let (rows, cols) = rows_of(grid);
    let chords = chords(grid, r);
    let mut out = vec![S::neg_infinity(); values.len()];
    let mut widths: Vec<usize> = chords.iter().map(|c| c.1).collect();
    widths.sort_unstable();
    widths.dedup();
    for w in widths {
        let filtered: Vec<S> = values
            .par_chunks(cols)
            .flat_map_iter(|row| {
                let mut buf = vec![S::zero(); cols];
                sliding_max(row, w, &mut buf);
                buf
            })
            .collect();
        let offsets: Vec<isize> = chords.iter().filter(|c| c.1 == w).map(|c| c.0).collect();
        out.par_chunks_mut(cols).enumerate().for_each(|(i, orow)| {
            for &a in &offsets {
                let src = ((i as isize + a).rem_euclid(rows as isize)) as usize;
                let frow = &filtered[src * cols..(src + 1) * cols];
                for (o, &f) in orow.iter_mut().zip(frow) {
                    *o = o.max(f);
                }
            }
        });
    }
    out
}

/// Average of `values` over the discrete disk `{|y - x| < r}` around every node.
pub fn disk_average<S: Real>(grid: &Grid<S>, values: &[S], r: S) -> Vec<S> {
    let (rows, cols) = rows_of(grid);
    let chords = chords(grid, r);
    let count: usize = chords.iter().map(|c| 2 * c.1 + 1).sum();
    // periodic row prefix sums over a tripled row so any chord is one difference
    let prefix: Vec<Vec<f64>> = values
        .par_chunks(cols)
        .map(|row| {
            let mut p = Vec::with_capacity(3 * cols + 1);
            p.push(0.0);
            let mut acc = 0.0;
            for k in 0..3 * cols {
                acc += row[k % cols].as_f64();
                p.push(acc);
            }
            p
        })
        .collect();
    let inv = 1.0 / count as f64;
    let mut out = vec![S::zero(); values.len()];
    out.par_chunks_mut(cols).enumerate().for_each(|(i, orow)| {
        for (j, o) in orow.iter_mut().enumerate() {
            let mut sum = 0.0;
            for &(a, w) in &chords {
                let src = ((i as isize + a).rem_euclid(rows as isize)) as usize;
                let p = &prefix[src];
                if 2 * w + 1 >= cols {
                    // the chord wraps onto itself: whole periods plus a remainder
                    let len = 2 * w + 1;
                    let full = (len / cols) as f64 * p[cols];
                    let rem = len % cols;
                    let start = cols + j - w % cols;
                    sum += full + p[start + rem] - p[start];
                } else {
                    sum += p[cols + j + w + 1] - p[cols + j - w];
                }
            }
            *o = S::lit(sum * inv);
        }
    });
    out
}

/// Uncentered discrete Hardy–Littlewood maximal function of `|f|` over the given radii.
pub fn hl_maximal<S: Real>(f: &GridFunction<S>, radii: &[S]) -> Result<GridFunction<S>> {
    let grid = *f.grid();
    let h = grid.spacing();
    ensure!(!radii.is_empty(), Precondition, "hl_maximal needs at least one radius");
    ensure!(radii.iter().all(|&r| r >= h * (S::one() - S::lit(1e-12))), Precondition, "every radius must be at least the grid spacing {h}");
    let moduli = f.abs();
    let mut best = moduli.clone();
    for &r in radii {
        let avg = disk_average(&grid, &moduli, r);
        let m = disk_max(&grid, &avg, r);
        for (b, v) in best.iter_mut().zip(m) {
            *b = b.max(v);
        }
    }
    GridFunction::from_real(grid, best, format!("M({})", f.tag()))
}

/// `f ∗ φ_ε` with `φ_ε` sampled from the kernel's closed form at scale `ε`.
pub fn mollify<S: Real>(f: &GridFunction<S>, phi: &Kernel, eps: S) -> Result<GridFunction<S>> {
    let grid = *f.grid();
    ensure!(phi.dim() == grid.dim(), Domain, "kernel dimension {} differs from grid dimension {}", phi.dim(), grid.dim());
    ensure!((phi.mass() - 1.0).abs() <= 1e-8, Precondition, "mollifier must have unit mass, got {}", phi.mass());
    ensure!(eps >= grid.spacing() / S::lit(2.0), Precondition, "eps = {eps} is below half the grid spacing {}", grid.spacing());
    let k = phi.sample_dilated(&grid, eps);
    Ok(grid::convolve(f, &k)?.with_tag(format!("{}*{}_eps", f.tag(), phi.name)))
}

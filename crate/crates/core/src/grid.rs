//! Uniform periodic grids standing in for ℝⁿ (n ∈ {1, 2}), sampled functions,
//! rectangle-rule quadrature, spectral calculus and finite differences.
//!
//! The torus `[-L/2, L/2)ⁿ` is sampled at `x_i = -L/2 + i·h`, so the origin
//! sits at index `N/2` on every axis. Samples are stored row-major with the
//! last axis contiguous: in two dimensions `idx = i₁·N + i₂`.
//!
//! Spectra use the unnormalized DFT `F_k = Σ_j f_j e^{-2πi jk/N}`; the inverse
//! divides by `Nⁿ`. Angular wave numbers are `ξ = 2πk/L` with `k` in
//! `[-N/2, N/2)`.

use num_complex::Complex;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::fft;
use crate::scalar::Real;

/// An isotropic periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<S> {
    dim: usize,
    period: S,
    points: usize,
}

impl<S: Real> Grid<S> {
    pub fn new(dim: usize, period: S, points: usize) -> Result<Self> {
        ensure!(dim == 1 || dim == 2, Domain, "grid dimension must be 1 or 2, got {dim}");
        ensure!(period > S::zero() && period.is_finite(), Domain, "period must be positive, got {period}");
        ensure!(points >= 8 && points.is_power_of_two(), Domain, "points per axis must be a power of two >= 8, got {points}");
        Ok(Self { dim, period, points })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn period(&self) -> S {
        self.period
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn spacing(&self) -> S {
        self.period / S::of(self.points)
    }

    /// Number of nodes, `Nⁿ`.
    #[inline]
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `hⁿ`, the rectangle-rule weight.
    #[inline]
    pub fn cell_volume(&self) -> S {
        self.spacing().powi(self.dim as i32)
    }

    /// Same period, `factor`-times more points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.dim, self.period, self.points * factor)
    }

    /// Per-axis integer indices of a flat node index (unused axes are 0).
    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.points, idx % self.points]
        }
    }

    #[inline]
    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        if self.dim == 1 {
            mi[0]
        } else {
            mi[0] * self.points + mi[1]
        }
    }

    /// Physical coordinates of a node (second entry 0 in one dimension).
    #[inline]
    pub fn coords(&self, idx: usize) -> [S; 2] {
        let h = self.spacing();
        let half = self.period / S::lit(2.0);
        let mi = self.multi_index(idx);
        let x1 = S::of(mi[0]) * h - half;
        let x2 = if self.dim == 2 { S::of(mi[1]) * h - half } else { S::zero() };
        [x1, x2]
    }

    /// Euclidean norm of a node's coordinates.
    #[inline]
    pub fn radius(&self, idx: usize) -> S {
        let [a, b] = self.coords(idx);
        (a * a + b * b).sqrt()
    }

    /// Signed DFT mode number for a per-axis index.
    #[inline]
    pub fn mode(&self, k: usize) -> i64 {
        let n = self.points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Angular wave vector `ξ = 2πk/L` of a flat spectral index.
    #[inline]
    pub fn wave_vector(&self, idx: usize) -> [S; 2] {
        let base = S::TAU() / self.period;
        let mi = self.multi_index(idx);
        let k1 = S::lit(self.mode(mi[0]) as f64) * base;
        let k2 = if self.dim == 2 { S::lit(self.mode(mi[1]) as f64) * base } else { S::zero() };
        [k1, k2]
    }

    #[inline]
    pub fn wave_number(&self, idx: usize) -> S {
        let [a, b] = self.wave_vector(idx);
        (a * a + b * b).sqrt()
    }

    /// Flat index of the neighbour `offset` cells along `axis` (1-based), wrapping periodically.
    #[inline]
    pub fn shift_index(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let mut mi = self.multi_index(idx);
        let n = self.points as isize;
        let a = axis - 1;
        mi[a] = ((mi[a] as isize + offset).rem_euclid(n)) as usize;
        self.flat_index(mi)
    }

    /// Samples a closed-form rule at every node.
    pub fn sample<F>(&self, rule: F) -> Vec<S>
    where
        F: Fn([S; 2]) -> S,
    {
        (0..self.len()).map(|i| rule(self.coords(i))).collect()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points && self.period == other.period
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        ensure!(axis >= 1 && axis <= self.dim, Domain, "spatial axis {axis} out of range 1..={}", self.dim);
        Ok(())
    }
}

/// Complex samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<S> {
    grid: Grid<S>,
    samples: Vec<Complex<S>>,
    tag: String,
}

impl<S: Real> GridFunction<S> {
    pub fn new(grid: Grid<S>, samples: Vec<Complex<S>>, tag: impl Into<String>) -> Result<Self> {
        ensure!(samples.len() == grid.len(), Domain, "expected {} samples, got {}", grid.len(), samples.len());
        ensure!(samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()), Domain, "samples must be finite");
        Ok(Self { grid, samples, tag: tag.into() })
    }

    pub fn from_real(grid: Grid<S>, values: Vec<S>, tag: impl Into<String>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex::new(v, S::zero())).collect(), tag)
    }

    /// Samples a real closed-form rule.
    pub fn from_rule<F>(grid: Grid<S>, tag: impl Into<String>, rule: F) -> Self
    where
        F: Fn([S; 2]) -> S,
    {
        let values = grid.sample(rule);
        Self { grid, samples: values.into_iter().map(|v| Complex::new(v, S::zero())).collect(), tag: tag.into() }
    }

    pub fn from_complex_rule<F>(grid: Grid<S>, tag: impl Into<String>, rule: F) -> Self
    where
        F: Fn([S; 2]) -> Complex<S>,
    {
        let samples = (0..grid.len()).map(|i| rule(grid.coords(i))).collect();
        Self { grid, samples, tag: tag.into() }
    }

    pub fn constant(grid: Grid<S>, value: S) -> Self {
        Self { grid, samples: vec![Complex::new(value, S::zero()); grid.len()], tag: "constant".into() }
    }

    pub fn zeros(grid: Grid<S>) -> Self {
        Self::constant(grid, S::zero())
    }

    pub(crate) fn from_parts(grid: Grid<S>, samples: Vec<Complex<S>>, tag: String) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self { grid, samples, tag }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn samples(&self) -> &[Complex<S>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<S>> {
        self.samples
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    /// Pointwise moduli.
    pub fn abs(&self) -> Vec<S> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    pub fn max_abs(&self) -> S {
        self.samples.iter().fold(S::zero(), |m, z| m.max(z.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == S::zero() && z.im == S::zero())
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex<S>) -> Complex<S>,
    {
        Self { grid: self.grid, samples: self.samples.iter().map(|&z| f(z)).collect(), tag: self.tag.clone() }
    }

    pub fn scale(&self, c: S) -> Self {
        self.map(|z| z * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(Complex<S>, Complex<S>) -> Complex<S>,
    {
        ensure!(self.grid.same_as(&other.grid), Domain, "grid mismatch");
        Ok(Self { grid: self.grid, samples: self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(), tag: self.tag.clone() })
    }

    /// Circular shift by whole cells along a spatial axis (1-based):
    /// the output at node `i` is the input at node `i - cells`.
    pub fn shift(&self, axis: usize, cells: isize) -> Result<Self> {
        self.grid.check_axis(axis)?;
        let samples = (0..self.grid.len()).map(|i| self.samples[self.grid.shift_index(i, axis, -cells)]).collect();
        Ok(Self { grid: self.grid, samples, tag: self.tag.clone() })
    }

    /// Largest pointwise modulus of the difference.
    pub fn max_diff(&self, other: &Self) -> S {
        self.samples.iter().zip(&other.samples).fold(S::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// Mean over the torus (the zero Fourier mode divided by `Nⁿ`).
    pub fn mean(&self) -> Complex<S> {
        let sum = self.samples.iter().fold(Complex::new(S::zero(), S::zero()), |acc, &z| acc + z);
        sum / S::of(self.grid.len())
    }

    /// Periodic second-order central difference along spatial axis `axis` (1-based).
    pub fn central_difference(&self, axis: usize) -> Result<Self> {
        self.grid.check_axis(axis)?;
        let two_h = S::lit(2.0) * self.grid.spacing();
        let g = &self.grid;
        let samples = (0..g.len()).map(|i| (self.samples[g.shift_index(i, axis, 1)] - self.samples[g.shift_index(i, axis, -1)]) / two_h).collect();
        Ok(Self { grid: self.grid, samples, tag: format!("d{axis}({})", self.tag) })
    }

    /// Mass outside the central half `[-L/4, L/4)ⁿ` relative to the total L¹ mass;
    /// a diagnostic for how much the periodic model departs from ℝⁿ.
    pub fn tail_mass(&self) -> S {
        let quarter = self.grid.period / S::lit(4.0);
        let (mut outside, mut total) = (S::zero(), S::zero());
        for (i, z) in self.samples.iter().enumerate() {
            let m = z.norm();
            total = total + m;
            let c = self.grid.coords(i);
            let inside = c[0] >= -quarter && c[0] < quarter && (self.grid.dim == 1 || (c[1] >= -quarter && c[1] < quarter));
            if !inside {
                outside = outside + m;
            }
        }
        if total == S::zero() {
            S::zero()
        } else {
            outside / total
        }
    }
}

/// DFT coefficients of a grid function (unnormalized forward convention).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<S> {
    grid: Grid<S>,
    coeffs: Vec<Complex<S>>,
}

impl<S: Real> Spectrum<S> {
    pub fn new(grid: Grid<S>, coeffs: Vec<Complex<S>>) -> Result<Self> {
        ensure!(coeffs.len() == grid.len(), Domain, "expected {} coefficients, got {}", grid.len(), coeffs.len());
        Ok(Self { grid, coeffs })
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex<S>] {
        &self.coeffs
    }

    /// Multiplies every coefficient by `symbol(ξ)`.
    pub fn apply<F>(&self, symbol: F) -> Self
    where
        F: Fn([S; 2]) -> Complex<S>,
    {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| c * symbol(self.grid.wave_vector(i))).collect();
        Self { grid: self.grid, coeffs }
    }

    /// `Σ_k |F_k|²`.
    pub fn energy(&self) -> S {
        self.coeffs.iter().fold(S::zero(), |acc, c| acc + c.norm_sqr())
    }
}

/// Rectangle-rule integral `hⁿ Σ f_i`.
pub fn quadrature<S: Real>(f: &GridFunction<S>) -> Complex<S> {
    let sum = f.samples.iter().fold(Complex::new(S::zero(), S::zero()), |acc, &z| acc + z);
    sum * f.grid.cell_volume()
}

/// Rectangle-rule integral of real samples.
pub fn quadrature_real<S: Real>(grid: &Grid<S>, values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, &v| acc + v) * grid.cell_volume()
}

pub fn fourier<S: Real>(f: &GridFunction<S>) -> Spectrum<S> {
    let mut coeffs = f.samples.clone();
    fft::transform(&mut coeffs, f.grid.dim, f.grid.points, FftDirection::Forward);
    Spectrum { grid: f.grid, coeffs }
}

pub fn inverse_fourier<S: Real>(spectrum: &Spectrum<S>) -> GridFunction<S> {
    let mut samples = spectrum.coeffs.clone();
    fft::transform(&mut samples, spectrum.grid.dim, spectrum.grid.points, FftDirection::Inverse);
    let norm = S::one() / S::of(spectrum.grid.len());
    for z in samples.iter_mut() {
        *z = *z * norm;
    }
    GridFunction { grid: spectrum.grid, samples, tag: String::new() }
}

/// Like [`inverse_fourier`] but rejects a spectrum whose grid differs from `grid`.
pub fn inverse_fourier_on<S: Real>(grid: &Grid<S>, spectrum: &Spectrum<S>) -> Result<GridFunction<S>> {
    ensure!(grid.same_as(&spectrum.grid), Domain, "spectrum/grid size mismatch");
    Ok(inverse_fourier(spectrum))
}

/// Periodic convolution approximating `∫ f(x - y) k(y) dy`, with `k` sampled
/// on the same node coordinates as `f` (its origin at index `N/2`).
pub fn convolve<S: Real>(f: &GridFunction<S>, k: &GridFunction<S>) -> Result<GridFunction<S>> {
    ensure!(f.grid.same_as(&k.grid), Domain, "convolve: grid mismatch");
    let fs = fourier(f);
    let ks = fourier(k);
    Ok(convolve_spectra(&fs, &ks, f.tag.clone()))
}

/// Convolution given both spectra; `k` is interpreted as in [`convolve`].
pub(crate) fn convolve_spectra<S: Real>(fs: &Spectrum<S>, ks: &Spectrum<S>, tag: String) -> GridFunction<S> {
    let grid = fs.grid;
    let weight = grid.cell_volume();
    // Moving the kernel origin from index N/2 to 0 multiplies mode k by (-1)^k per axis.
    let coeffs = fs
        .coeffs
        .iter()
        .zip(&ks.coeffs)
        .enumerate()
        .map(|(i, (&a, &b))| {
            let mi = grid.multi_index(i);
            let parity = (mi[0] + if grid.dim == 2 { mi[1] } else { 0 }) % 2;
            let sign = if parity == 0 { weight } else { -weight };
            a * b * sign
        })
        .collect();
    inverse_fourier(&Spectrum { grid, coeffs }).with_tag(tag)
}

/// Uniform spacing of a ladder if it is uniform to relative precision `1e-9`.
pub fn uniform_step<S: Real>(ladder: &[S]) -> Option<S> {
    if ladder.len() < 2 {
        return None;
    }
    let step = ladder[1] - ladder[0];
    let tol = S::lit(1e-9) * step.abs().max(ladder[ladder.len() - 1].abs());
    ladder.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= tol).then_some(step)
}

/// Samples `u(x, t)` on a grid times a strictly increasing ladder of heights.
///
/// Fields produced by the Poisson semigroup also carry the boundary spectrum
/// `ĝ` with `slice(t) = F⁻¹[e^{-t|ξ|} ĝ]`, which enables exact spectral
/// derivatives and evaluation at heights off the ladder.
#[derive(Debug, Clone)]
pub struct HalfSpaceField<S> {
    grid: Grid<S>,
    t_ladder: Vec<S>,
    slices: Vec<GridFunction<S>>,
    source: Option<Spectrum<S>>,
}

impl<S: Real> HalfSpaceField<S> {
    pub fn new(grid: Grid<S>, t_ladder: Vec<S>, slices: Vec<GridFunction<S>>) -> Result<Self> {
        check_ladder(&t_ladder)?;
        ensure!(slices.len() == t_ladder.len(), Domain, "one slice per ladder level required");
        ensure!(slices.iter().all(|s| s.grid.same_as(&grid)), Domain, "slice grid mismatch");
        Ok(Self { grid, t_ladder, slices, source: None })
    }

    /// Samples a closed-form rule `u(x, t)`.
    pub fn from_rule<F>(grid: Grid<S>, t_ladder: Vec<S>, rule: F) -> Result<Self>
    where
        F: Fn([S; 2], S) -> Complex<S>,
    {
        check_ladder(&t_ladder)?;
        let slices = t_ladder.iter().map(|&t| GridFunction::from_complex_rule(grid, "rule", |x| rule(x, t))).collect();
        Ok(Self { grid, t_ladder, slices, source: None })
    }

    /// Builds the field `F⁻¹[e^{-t|ξ|} ĝ]` on the ladder, keeping `ĝ`.
    pub fn from_source(source: Spectrum<S>, t_ladder: Vec<S>) -> Result<Self> {
        use rayon::prelude::*;
        check_ladder(&t_ladder)?;
        let grid = source.grid;
        let slices = t_ladder.par_iter().map(|&t| inverse_fourier(&semigroup(&source, t))).collect();
        Ok(Self { grid, t_ladder, slices, source: Some(source) })
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn t_ladder(&self) -> &[S] {
        &self.t_ladder
    }

    #[inline]
    pub fn slices(&self) -> &[GridFunction<S>] {
        &self.slices
    }

    #[inline]
    pub fn slice(&self, k: usize) -> &GridFunction<S> {
        &self.slices[k]
    }

    pub fn source(&self) -> Option<&Spectrum<S>> {
        self.source.as_ref()
    }

    pub fn levels(&self) -> usize {
        self.t_ladder.len()
    }

    /// Drops the spectral source, forcing finite-difference routes downstream.
    pub fn without_source(mut self) -> Self {
        self.source = None;
        self
    }

    /// Evaluates the slice at height `t`: exactly from the spectral source if
    /// present, otherwise by looking `t` up on the ladder.
    pub fn slice_at(&self, t: S) -> Result<GridFunction<S>> {
        if let Some(src) = &self.source {
            ensure!(t >= S::zero(), Domain, "height must be non-negative, got {t}");
            return Ok(inverse_fourier(&semigroup(src, t)));
        }
        let tol = S::lit(1e-9) * t.abs().max(S::one());
        self.t_ladder
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .map(|k| self.slices[k].clone())
            .ok_or_else(|| Error::Precondition(format!("height {t} is not on the ladder and the field has no spectral source")))
    }

    pub fn map_slices<F>(&self, f: F) -> Self
    where
        F: Fn(&GridFunction<S>) -> GridFunction<S>,
    {
        Self { grid: self.grid, t_ladder: self.t_ladder.clone(), slices: self.slices.iter().map(f).collect(), source: None }
    }

    pub fn max_abs(&self) -> S {
        self.slices.iter().fold(S::zero(), |m, s| m.max(s.max_abs()))
    }

    /// Second-order derivative along `axis`: 0 is the `t` direction, 1..=n are spatial.
    ///
    /// In `t` the ladder must be uniform with at least 3 levels; the end levels use
    /// one-sided second-order stencils. Spatial differences wrap periodically.
    pub fn central_difference(&self, axis: usize) -> Result<Self> {
        if axis == 0 {
            let dt = self.uniform_dt()?;
            let k_max = self.levels() - 1;
            let two_dt = S::lit(2.0) * dt;
            let (three, four) = (S::lit(3.0), S::lit(4.0));
            let len = self.grid.len();
            let slices = (0..=k_max)
                .map(|k| {
                    let s = |j: usize, i: usize| self.slices[j].samples[i];
                    let samples = (0..len)
                        .map(|i| {
                            if k == 0 {
                                (-s(0, i) * three + s(1, i) * four - s(2, i)) / two_dt
                            } else if k == k_max {
                                (s(k, i) * three - s(k - 1, i) * four + s(k - 2, i)) / two_dt
                            } else {
                                (s(k + 1, i) - s(k - 1, i)) / two_dt
                            }
                        })
                        .collect();
                    GridFunction::from_parts(self.grid, samples, "dt".into())
                })
                .collect();
            Ok(Self { grid: self.grid, t_ladder: self.t_ladder.clone(), slices, source: None })
        } else {
            self.grid.check_axis(axis)?;
            let slices = self.slices.iter().map(|s| s.central_difference(axis)).collect::<Result<Vec<_>>>()?;
            Ok(Self { grid: self.grid, t_ladder: self.t_ladder.clone(), slices, source: None })
        }
    }

    /// Exact derivative along `axis` via the spectral source: `∂_t ↔ -|ξ|`, `∂_j ↔ iξ_j`.
    pub fn spectral_derivative(&self, axis: usize) -> Option<Result<Self>> {
        let src = self.source.as_ref()?;
        if axis > self.grid.dim {
            return Some(Err(Error::Domain(format!("axis {axis} out of range 0..={}", self.grid.dim))));
        }
        let derived = src.apply(|xi| derivative_symbol(xi, axis));
        Some(Self::from_source(derived, self.t_ladder.clone()))
    }

    /// Uniform ladder step, requiring at least 3 levels.
    pub fn uniform_dt(&self) -> Result<S> {
        ensure!(self.levels() >= 3, Precondition, "t-derivatives need at least 3 ladder levels, got {}", self.levels());
        uniform_step(&self.t_ladder).ok_or_else(|| Error::Precondition("t-derivatives need a uniform t ladder".into()))
    }

    pub(crate) fn from_parts(grid: Grid<S>, t_ladder: Vec<S>, slices: Vec<GridFunction<S>>, source: Option<Spectrum<S>>) -> Self {
        Self { grid, t_ladder, slices, source }
    }
}

/// Multiplier of `∂/∂x_axis` acting on `e^{-t|ξ|}` data (axis 0 is `t`).
pub(crate) fn derivative_symbol<S: Real>(xi: [S; 2], axis: usize) -> Complex<S> {
    if axis == 0 {
        Complex::new(-(xi[0] * xi[0] + xi[1] * xi[1]).sqrt(), S::zero())
    } else {
        Complex::new(S::zero(), xi[axis - 1])
    }
}

/// Poisson semigroup multiplier `e^{-t|ξ|}` applied to a spectrum.
pub(crate) fn semigroup<S: Real>(spectrum: &Spectrum<S>, t: S) -> Spectrum<S> {
    spectrum.apply(|xi| Complex::new((-t * (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()).exp(), S::zero()))
}

fn check_ladder<S: Real>(t_ladder: &[S]) -> Result<()> {
    ensure!(!t_ladder.is_empty(), Domain, "t ladder must be nonempty");
    ensure!(t_ladder.iter().all(|&t| t > S::zero() && t.is_finite()), Domain, "t ladder must be positive");
    ensure!(t_ladder.windows(2).all(|w| w[0] < w[1]), Domain, "t ladder must be strictly increasing");
    Ok(())
}

/// Uniform ladder `start + k·step`, `k = 0..levels`.
pub fn uniform_ladder<S: Real>(start: S, step: S, levels: usize) -> Vec<S> {
    (0..levels).map(|k| start + step * S::of(k)).collect()
}

/// Geometric ladder `{2^k h : k = 0..}` up to and including `top`.
pub fn geometric_ladder<S: Real>(h: S, top: S) -> Vec<S> {
    let mut out = Vec::new();
    let mut t = h;
    while t <= top * (S::one() + S::lit(1e-12)) {
        out.push(t);
        t = t * S::lit(2.0);
    }
    out
}

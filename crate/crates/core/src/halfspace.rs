//! Poisson and conjugate-Poisson extensions to the upper half space, harmonic
//! vectors and rank-`m` tensor fields, and the discrete residuals that
//! certify the generalized Cauchy–Riemann system, harmonicity and
//! subharmonicity.
//!
//! All fields are built spectrally from boundary data: a slice at height `t`
//! is `F⁻¹[σ(ξ) e^{-t|ξ|} f̂]` for a symbol `σ`. Tensor components use
//! `σ_{j₁…j_m} = Π s_{j_i}` with `s₀ = 1` and `s_j = -iξ_j/|ξ|`; at `ξ = 0` the
//! symbol is `Re Π ω_{j_i}` with `ω = (1, i, 0)`, which keeps the zero mode
//! symmetric and trace free.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::grid::{self, derivative_symbol, Grid, GridFunction, HalfSpaceField};
use crate::operators::{riesz, riesz_spectrum, RieszSymbol};
use crate::scalar::Real;

/// Default memory budget for tensor fields, in bytes.
pub const DEFAULT_TENSOR_BUDGET: usize = 2 << 30;
/// Samples with `w` at or below this value are treated as the zero set.
pub const DEFAULT_ZERO_FLOOR: f64 = 1e-10;
/// Images per side in two-dimensional kernel periodization.
pub const PERIODIZATION_IMAGES: i32 = 6;

/// `Γ(k/2)` for a positive integer `k`.
pub fn half_integer_gamma(k: usize) -> f64 {
    assert!(k > 0, "Γ(0) is undefined");
    if k.is_multiple_of(2) {
        (1..k / 2).map(|i| i as f64).product()
    } else {
        // Γ(j + 1/2) = (2j)! / (4^j j!) · √π
        let j = (k - 1) / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for i in 0..j {
            g *= i as f64 + 0.5;
        }
        g
    }
}

/// Normalization `C_n = Γ((n+1)/2) / π^{(n+1)/2}` of the Poisson kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonConstants {
    pub dim: usize,
    pub c_n: f64,
}

impl PoissonConstants {
    pub fn new(dim: usize) -> Result<Self> {
        ensure!(dim >= 1, Domain, "dimension must be positive");
        let c_n = half_integer_gamma(dim + 1) / std::f64::consts::PI.powf((dim as f64 + 1.0) / 2.0);
        Ok(Self { dim, c_n })
    }
}

fn kernel_denominator<S: Real>(n: usize, t: S, x: &[S]) -> Result<S> {
    ensure!(t > S::zero(), Domain, "Poisson kernels need t > 0, got {t}");
    ensure!(x.len() == n, Domain, "point has {} coordinates, expected {n}", x.len());
    let r2 = x.iter().fold(t * t, |acc, &v| acc + v * v);
    Ok(r2.powf(S::lit((n as f64 + 1.0) / 2.0)))
}

/// `P_t(x) = C_n t / (t² + |x|²)^{(n+1)/2}`.
pub fn poisson_kernel<S: Real>(n: usize, t: S, x: &[S]) -> Result<S> {
    let c = S::lit(PoissonConstants::new(n)?.c_n);
    Ok(c * t / kernel_denominator(n, t, x)?)
}

/// `Q_t^{(j)}(x) = C_n x_j / (t² + |x|²)^{(n+1)/2}`.
pub fn conjugate_poisson_kernel<S: Real>(n: usize, j: usize, t: S, x: &[S]) -> Result<S> {
    ensure!(j >= 1 && j <= n, Domain, "conjugate index {j} out of range 1..={n}");
    let c = S::lit(PoissonConstants::new(n)?.c_n);
    Ok(c * x[j - 1] / kernel_denominator(n, t, x)?)
}

/// Periodization of `P_t` (`axis = 0`) or `Q_t^{(axis)}` over the grid's torus.
///
/// One dimension uses the closed forms `(1/L) sinh(ωt)/(cosh ωt − cos ωx)` and
/// `(1/L) sin(ωx)/(cosh ωt − cos ωx)` with `ω = 2π/L`. Two dimensions sum
/// [`PERIODIZATION_IMAGES`] images per side; the Poisson sum adds the mass
/// lost beyond the image square spread evenly over the cell, the conjugate
/// sums add the integral of their far tail.
pub fn periodized_kernel<S: Real>(grid: &Grid<S>, axis: usize, t: S, x: [S; 2]) -> Result<S> {
    ensure!(t > S::zero(), Domain, "Poisson kernels need t > 0, got {t}");
    ensure!(axis <= grid.dim(), Domain, "kernel axis {axis} out of range 0..={}", grid.dim());
    let l = grid.period().as_f64();
    let (t, x1, x2) = (t.as_f64(), x[0].as_f64(), x[1].as_f64());
    if grid.dim() == 1 {
        let w = std::f64::consts::TAU / l;
        let den = l * ((w * t).cosh() - (w * x1).cos());
        let num = if axis == 0 { (w * t).sinh() } else { (w * x1).sin() };
        return Ok(S::lit(num / den));
    }
    let m = PERIODIZATION_IMAGES;
    let mut sum = 0.0;
    for a in -m..=m {
        for b in -m..=m {
            let y = [x1 + a as f64 * l, x2 + b as f64 * l];
            sum += if axis == 0 { poisson_kernel(2, t, &y)? } else { conjugate_poisson_kernel(2, axis, t, &y)? };
        }
    }
    if axis == 0 {
        // mass of P_t outside the image square of half-side s, to third order in t/s
        let s = (m as f64 + 0.5) * l;
        let q = t / s;
        let sqrt2 = std::f64::consts::SQRT_2;
        let outside = 2.0 * sqrt2 / std::f64::consts::PI * q - 5.0 / (3.0 * sqrt2 * std::f64::consts::PI) * q.powi(3);
        sum += outside / (l * l);
    } else {
        // cells beyond the image square: the integral of Q_t over the exterior
        // of the square shifted by x, with the midpoint-rule term -(1/24)∫ΔQ_t
        // written as +(1/24)∂²_t∫Q_t
        let s = (m as f64 + 0.5) * l;
        let c = PoissonConstants::new(2)?.c_n;
        let (xj, xk) = if axis == 1 { (x1, x2) } else { (x2, x1) };
        let side = |u: f64| {
            let a2 = u * u + t * t;
            let mut value = 0.0;
            let mut curvature = 0.0;
            for (b, sign) in [(xk + s, 1.0), (xk - s, -1.0)] {
                let r = (a2 + b * b).sqrt();
                value += sign * (b / a2.sqrt()).asinh();
                curvature -= sign * b / (a2 * r) * (1.0 - 2.0 * t * t / a2 - t * t / (r * r));
            }
            value / (l * l) + curvature / 24.0
        };
        sum += c * (side(xj + s) - side(xj - s));
    }
    Ok(S::lit(sum))
}

/// `u(x, t) = (f ∗ P_t)(x)` on the ladder, via the spectral semigroup.
pub fn poisson_extend<S: Real>(f: &GridFunction<S>, t_ladder: &[S]) -> Result<HalfSpaceField<S>> {
    HalfSpaceField::from_source(grid::fourier(f), t_ladder.to_vec())
}

/// Kernel-quadrature path: periodic convolution with sampled `P_t`, either the
/// plain kernel restricted to the window or its periodization.
pub fn poisson_extend_quadrature<S: Real>(f: &GridFunction<S>, t_ladder: &[S], periodized: bool) -> Result<HalfSpaceField<S>> {
    let grid = *f.grid();
    let fs = grid::fourier(f);
    let slices = t_ladder
        .par_iter()
        .map(|&t| {
            let k = sample_kernel(&grid, 0, t, periodized)?;
            Ok(grid::convolve_spectra(&fs, &grid::fourier(&k), f.tag().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    HalfSpaceField::new(grid, t_ladder.to_vec(), slices)
}

fn sample_kernel<S: Real>(grid: &Grid<S>, axis: usize, t: S, periodized: bool) -> Result<GridFunction<S>> {
    let n = grid.dim();
    let values = (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            if periodized {
                periodized_kernel(grid, axis, t, c)
            } else if axis == 0 {
                poisson_kernel(n, t, &c[..n])
            } else {
                conjugate_poisson_kernel(n, axis, t, &c[..n])
            }
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::from_real(*grid, values, if axis == 0 { "P_t" } else { "Q_t" })
}

/// Gaps in the identity `f ∗ Q_t^{(j)} = R_j(f) ∗ P_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateIdentity {
    /// Max difference between the `Q_t` multiplier and Riesz-then-semigroup.
    pub spectral_gap: f64,
    /// Max difference between quadrature against sampled periodized `Q_t` and the spectral value.
    pub quadrature_gap: f64,
}

pub fn conjugate_identity<S: Real>(f: &GridFunction<S>, j: usize, t: S) -> Result<ConjugateIdentity> {
    let grid = *f.grid();
    ensure!(t > S::zero(), Domain, "t must be positive, got {t}");
    let symbol = RieszSymbol::single(j)?;
    let fs = grid::fourier(f);
    let q_path = grid::inverse_fourier(&fs.apply(|xi| {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        if r == S::zero() {
            Complex::new(S::zero(), S::zero())
        } else {
            Complex::new(S::zero(), -xi[j - 1] / r * (-t * r).exp())
        }
    }));
    let rf = riesz(f, &symbol)?;
    let r_path = grid::inverse_fourier(&grid::semigroup(&grid::fourier(&rf), t));
    let k = sample_kernel(&grid, j, t, true)?;
    let quad = grid::convolve(f, &k)?;
    Ok(ConjugateIdentity { spectral_gap: q_path.max_diff(&r_path).as_f64(), quadrature_gap: quad.max_diff(&q_path).as_f64() })
}

/// Node set used by finite-difference residuals: ladder levels `1..K-1` (all
/// levels if fewer than 3) and nodes whose every spatial index is in `1..N-1`.
fn interior<S: Real>(grid: &Grid<S>, levels: usize) -> (std::ops::Range<usize>, Vec<usize>) {
    let n = grid.points();
    let nodes = (0..grid.len())
        .filter(|&i| {
            let mi = grid.multi_index(i);
            (0..grid.dim()).all(|a| mi[a] >= 1 && mi[a] + 1 < n)
        })
        .collect();
    let levels = if levels >= 3 { 1..levels - 1 } else { 0..levels };
    (levels, nodes)
}

/// Central first difference of a field at an interior node.
fn d1<S: Real>(u: &HalfSpaceField<S>, axis: usize, k: usize, i: usize, dt: S) -> Complex<S> {
    let two = S::lit(2.0);
    if axis == 0 {
        (u.slice(k + 1).samples()[i] - u.slice(k - 1).samples()[i]) / (two * dt)
    } else {
        let g = u.grid();
        let s = u.slice(k).samples();
        (s[g.shift_index(i, axis, 1)] - s[g.shift_index(i, axis, -1)]) / (two * g.spacing())
    }
}

/// Discrete `(n+1)`-dimensional Laplacian of `values(k, i)` at an interior node.
fn laplacian_at<S: Real, F>(grid: &Grid<S>, values: &F, k: usize, i: usize, dt: S) -> S
where
    F: Fn(usize, usize) -> S,
{
    let two = S::lit(2.0);
    let c = values(k, i);
    let mut lap = (values(k + 1, i) - two * c + values(k - 1, i)) / (dt * dt);
    let h2 = grid.spacing() * grid.spacing();
    for axis in 1..=grid.dim() {
        lap = lap + (values(k, grid.shift_index(i, axis, 1)) - two * c + values(k, grid.shift_index(i, axis, -1))) / h2;
    }
    lap
}

/// Max interior modulus of the discrete Laplacian in `(x, t)`.
pub fn harmonicity_residual<S: Real>(u: &HalfSpaceField<S>) -> Result<S> {
    let dt = u.uniform_dt()?;
    let grid = *u.grid();
    let (levels, nodes) = interior(&grid, u.levels());
    let re = |k: usize, i: usize| u.slice(k).samples()[i].re;
    let im = |k: usize, i: usize| u.slice(k).samples()[i].im;
    let worst = levels
        .into_par_iter()
        .map(|k| {
            nodes.iter().fold(S::zero(), |m, &i| {
                let a = laplacian_at(&grid, &re, k, i, dt);
                let b = laplacian_at(&grid, &im, k, i, dt);
                m.max((a * a + b * b).sqrt())
            })
        })
        .reduce(|| S::zero(), |a, b| a.max(b));
    Ok(worst)
}

/// Components `u_0, …, u_n` of a harmonic vector sharing one grid and ladder.
#[derive(Debug, Clone)]
pub struct HarmonicVector<S> {
    components: Vec<HalfSpaceField<S>>,
}

impl<S: Real> HarmonicVector<S> {
    pub fn new(components: Vec<HalfSpaceField<S>>) -> Result<Self> {
        ensure!(!components.is_empty(), Domain, "a harmonic vector needs components");
        let g = *components[0].grid();
        ensure!(components.len() == g.dim() + 1, Domain, "expected {} components, got {}", g.dim() + 1, components.len());
        ensure!(
            components.iter().all(|c| c.grid().same_as(&g) && c.t_ladder() == components[0].t_ladder()),
            Domain,
            "components must share grid and ladder"
        );
        Ok(Self { components })
    }

    pub fn components(&self) -> &[HalfSpaceField<S>] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &HalfSpaceField<S> {
        &self.components[j]
    }

    pub fn grid(&self) -> &Grid<S> {
        self.components[0].grid()
    }

    pub fn t_ladder(&self) -> &[S] {
        self.components[0].t_ladder()
    }

    /// Replaces component `j`.
    pub fn with_component(mut self, j: usize, field: HalfSpaceField<S>) -> Result<Self> {
        ensure!(j < self.components.len(), Domain, "component {j} out of range");
        self.components[j] = field;
        Self::new(self.components)
    }

    /// `|F| = (Σ |u_j|²)^{1/2}` on the ladder.
    pub fn magnitude(&self) -> HalfSpaceField<S> {
        magnitude_of(&self.components)
    }
}

fn magnitude_of<S: Real>(components: &[HalfSpaceField<S>]) -> HalfSpaceField<S> {
    let first = &components[0];
    let grid = *first.grid();
    let slices = (0..first.levels())
        .map(|k| {
            let samples = (0..grid.len())
                .map(|i| {
                    let s = components.iter().fold(S::zero(), |a, c| a + c.slice(k).samples()[i].norm_sqr());
                    Complex::new(s.sqrt(), S::zero())
                })
                .collect();
            GridFunction::from_parts(grid, samples, "|F|".into())
        })
        .collect();
    HalfSpaceField::from_parts(grid, first.t_ladder().to_vec(), slices, None)
}

/// Pointwise `|F(·, t)|` evaluated exactly from spectral sources.
fn magnitude_at<S: Real>(components: &[HalfSpaceField<S>], t: S) -> Result<Vec<S>> {
    let slices = components.par_iter().map(|c| c.slice_at(t)).collect::<Result<Vec<_>>>()?;
    let len = slices[0].grid().len();
    Ok((0..len).map(|i| slices.iter().fold(S::zero(), |a, s| a + s.samples()[i].norm_sqr()).sqrt()).collect())
}

/// `u_0 = f ∗ P_t`, `u_j = R_j(f) ∗ P_t`.
pub fn poisson_vector<S: Real>(f: &GridFunction<S>, t_ladder: &[S]) -> Result<HarmonicVector<S>> {
    let fs = grid::fourier(f);
    let n = f.grid().dim();
    let mut components = vec![HalfSpaceField::from_source(fs.clone(), t_ladder.to_vec())?];
    for j in 1..=n {
        let rs = riesz_spectrum(&fs, &RieszSymbol::single(j)?)?;
        components.push(HalfSpaceField::from_source(rs, t_ladder.to_vec())?);
    }
    HarmonicVector::new(components)
}

/// Divergence and curl residuals of the generalized Cauchy–Riemann system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrResidual {
    pub div: f64,
    pub curl: f64,
}

pub fn cr_residual<S: Real>(f: &HarmonicVector<S>) -> Result<CrResidual> {
    let u0 = f.component(0);
    let dt = u0.uniform_dt()?;
    let grid = *f.grid();
    let n = grid.dim();
    let (levels, nodes) = interior(&grid, u0.levels());
    let (div, curl) = levels
        .into_par_iter()
        .map(|k| {
            let (mut dmax, mut cmax) = (S::zero(), S::zero());
            for &i in &nodes {
                let mut div = Complex::new(S::zero(), S::zero());
                for j in 0..=n {
                    div = div + d1(f.component(j), j, k, i, dt);
                }
                dmax = dmax.max(div.norm());
                for j in 0..=n {
                    for l in j + 1..=n {
                        let c = d1(f.component(j), l, k, i, dt) - d1(f.component(l), j, k, i, dt);
                        cmax = cmax.max(c.norm());
                    }
                }
            }
            (dmax, cmax)
        })
        .reduce(|| (S::zero(), S::zero()), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(CrResidual { div: div.as_f64(), curl: curl.as_f64() })
}

/// A rank-`m` tensor field over `ℝ^{n+1}` with full component storage,
/// indexed by tuples in `{0..n}^m` (slot 0 is the `t` direction).
#[derive(Debug, Clone)]
pub struct TensorField<S> {
    rank: usize,
    dim: usize,
    components: Vec<HalfSpaceField<S>>,
}

fn tuples(rank: usize, base: usize) -> Vec<Vec<usize>> {
    let count = base.pow(rank as u32);
    (0..count)
        .map(|mut c| {
            let mut t = vec![0; rank];
            for slot in (0..rank).rev() {
                t[slot] = c % base;
                c /= base;
            }
            t
        })
        .collect()
}

impl<S: Real> TensorField<S> {
    pub fn new(rank: usize, components: Vec<HalfSpaceField<S>>) -> Result<Self> {
        ensure!(rank >= 1, Domain, "tensor rank must be at least 1");
        ensure!(!components.is_empty(), Domain, "tensor needs components");
        let dim = components[0].grid().dim();
        ensure!(
            components.len() == (dim + 1).pow(rank as u32),
            Domain,
            "rank {rank} over R^{} needs {} components, got {}",
            dim + 1,
            (dim + 1).pow(rank as u32),
            components.len()
        );
        Ok(Self { rank, dim, components })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn grid(&self) -> &Grid<S> {
        self.components[0].grid()
    }

    pub fn t_ladder(&self) -> &[S] {
        self.components[0].t_ladder()
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &j| acc * (self.dim + 1) + j)
    }

    pub fn component(&self, tuple: &[usize]) -> &HalfSpaceField<S> {
        &self.components[self.index_of(tuple)]
    }

    pub fn components(&self) -> &[HalfSpaceField<S>] {
        &self.components
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        tuples(self.rank, self.dim + 1)
    }

    /// `|G| = (Σ_{tuples} |G_{j₁…j_m}|²)^{1/2}` on the ladder.
    pub fn magnitude(&self) -> HalfSpaceField<S> {
        magnitude_of(&self.components)
    }

    /// Max over tuples, their permutations, interior nodes and levels of component differences.
    pub fn symmetry_residual(&self) -> S {
        let all = self.tuples();
        let mut classes: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
        for t in &all {
            let mut key = t.clone();
            key.sort_unstable();
            classes.entry(key).or_default().push(self.index_of(t));
        }
        let (levels, nodes) = interior(self.grid(), self.components[0].levels());
        let classes: Vec<Vec<usize>> = classes.into_values().filter(|c| c.len() > 1).collect();
        classes
            .par_iter()
            .map(|class| {
                let mut worst = S::zero();
                for k in levels.clone() {
                    for &i in &nodes {
                        for a in 0..class.len() {
                            for b in a + 1..class.len() {
                                let d = self.components[class[a]].slice(k).samples()[i] - self.components[class[b]].slice(k).samples()[i];
                                worst = worst.max(d.norm());
                            }
                        }
                    }
                }
                worst
            })
            .reduce(|| S::zero(), |a, b| a.max(b))
    }

    /// Max over slot pairs `(a, b)`, remaining indices, interior nodes and
    /// levels of `|Σ_j G_{…j…j…}|`. Rank-1 fields have no trace and give 0.
    pub fn trace_residual(&self) -> S {
        if self.rank < 2 {
            return S::zero();
        }
        let base = self.dim + 1;
        let (levels, nodes) = interior(self.grid(), self.components[0].levels());
        let mut jobs = Vec::new();
        for a in 0..self.rank {
            for b in a + 1..self.rank {
                for rest in tuples(self.rank - 2, base) {
                    let members: Vec<usize> = (0..base)
                        .map(|j| {
                            let mut t = Vec::with_capacity(self.rank);
                            let mut r = rest.iter();
                            for slot in 0..self.rank {
                                if slot == a || slot == b {
                                    t.push(j);
                                } else {
                                    t.push(*r.next().expect("rest covers other slots"));
                                }
                            }
                            self.index_of(&t)
                        })
                        .collect();
                    jobs.push(members);
                }
            }
        }
        jobs.par_iter()
            .map(|members| {
                let mut worst = S::zero();
                for k in levels.clone() {
                    for &i in &nodes {
                        let s = members.iter().fold(Complex::new(S::zero(), S::zero()), |acc, &c| acc + self.components[c].slice(k).samples()[i]);
                        worst = worst.max(s.norm());
                    }
                }
                worst
            })
            .reduce(|| S::zero(), |a, b| a.max(b))
    }

    /// `⟨G, ⊗^m e_0⟩`.
    pub fn e0_component(&self) -> &HalfSpaceField<S> {
        &self.components[0]
    }
}

/// Symbol of the tensor component `(j₁…j_m)`.
fn tensor_symbol<S: Real>(tuple: &[usize], xi: [S; 2]) -> Complex<S> {
    let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    let mut m = Complex::new(S::one(), S::zero());
    if r == S::zero() {
        for &j in tuple {
            m = m * match j {
                0 => Complex::new(S::one(), S::zero()),
                1 => Complex::new(S::zero(), S::one()),
                _ => Complex::new(S::zero(), S::zero()),
            };
        }
        return Complex::new(m.re, S::zero());
    }
    for &j in tuple {
        if j > 0 {
            m = m * Complex::new(S::zero(), -xi[j - 1] / r);
        }
    }
    m
}

fn check_budget<S: Real>(grid: &Grid<S>, levels: usize, count: usize, cap: usize) -> Result<()> {
    let bytes = count.saturating_mul(levels).saturating_mul(grid.len()).saturating_mul(std::mem::size_of::<Complex<S>>());
    ensure!(bytes <= cap, Resource, "tensor field needs {bytes} bytes, budget is {cap}");
    Ok(())
}

/// `G_{j₁…j_m} = R_{j₁}⋯R_{j_m}(f) ∗ P_t` with `R_0 = I`, under [`DEFAULT_TENSOR_BUDGET`].
pub fn poisson_tensor<S: Real>(f: &GridFunction<S>, t_ladder: &[S], m: usize) -> Result<TensorField<S>> {
    poisson_tensor_capped(f, t_ladder, m, DEFAULT_TENSOR_BUDGET)
}

pub fn poisson_tensor_capped<S: Real>(f: &GridFunction<S>, t_ladder: &[S], m: usize, budget: usize) -> Result<TensorField<S>> {
    ensure!(m >= 1, Domain, "tensor rank must be at least 1");
    let grid = *f.grid();
    let base = grid.dim() + 1;
    check_budget(&grid, t_ladder.len(), base.pow(m as u32), budget)?;
    let fs = grid::fourier(f);
    let components = tuples(m, base)
        .par_iter()
        .map(|t| HalfSpaceField::from_source(fs.apply(|xi| tensor_symbol(t, xi)), t_ladder.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    TensorField::new(m, components)
}

/// `∇G` with the derivative slot last. Components carrying a spectral source
/// are differentiated exactly; the rest by second-order finite differences.
pub fn gradient_tensor<S: Real>(g: &TensorField<S>) -> Result<TensorField<S>> {
    gradient_with(g, true)
}

/// `∇G` by finite differences only.
pub fn gradient_tensor_fd<S: Real>(g: &TensorField<S>) -> Result<TensorField<S>> {
    gradient_with(g, false)
}

fn gradient_with<S: Real>(g: &TensorField<S>, spectral: bool) -> Result<TensorField<S>> {
    let base = g.dim + 1;
    check_budget(g.grid(), g.t_ladder().len(), base.pow(g.rank as u32 + 1), DEFAULT_TENSOR_BUDGET)?;
    let jobs: Vec<(usize, usize)> = (0..g.components.len()).flat_map(|c| (0..base).map(move |j| (c, j))).collect();
    let components = jobs
        .par_iter()
        .map(|&(c, j)| {
            let field = &g.components[c];
            match (spectral, field.spectral_derivative(j)) {
                (true, Some(d)) => d,
                _ => field.central_difference(j),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TensorField::new(g.rank + 1, components)
}

/// Weighting of the multi-indices in `|∇^m u|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradNorm {
    /// Each multi-index `|α| = m` counted once.
    MultiIndex,
    /// Each multi-index weighted by its `m!/α!` orderings, i.e. the norm of the
    /// full symmetric tensor of `m`-th derivatives.
    Tensor,
}

/// `|∇^m u| = (Σ_{|α|=m} |∂^α u|²)^{1/2}` over multi-indices `α ∈ ℤ₊^{n+1}`.
/// Uses exact spectral derivatives when `u` carries a source.
pub fn grad_m_magnitude<S: Real>(u: &HalfSpaceField<S>, m: usize) -> Result<HalfSpaceField<S>> {
    grad_m_magnitude_with(u, m, GradNorm::MultiIndex)
}

pub fn grad_m_magnitude_with<S: Real>(u: &HalfSpaceField<S>, m: usize, norm: GradNorm) -> Result<HalfSpaceField<S>> {
    if m == 0 {
        return Ok(magnitude_of(std::slice::from_ref(u)));
    }
    let n = u.grid().dim();
    let alphas: Vec<Vec<usize>> = tuples(m, n + 1).into_iter().filter(|t| t.windows(2).all(|w| w[0] <= w[1])).collect();
    let derived = if let Some(src) = u.source() {
        alphas
            .par_iter()
            .map(|a| {
                let s = src.apply(|xi| a.iter().fold(Complex::new(S::one(), S::zero()), |acc, &ax| acc * derivative_symbol(xi, ax)));
                HalfSpaceField::from_source(s, u.t_ladder().to_vec())
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        ensure!(u.levels() > 2 * m, Precondition, "order-{m} differences need at least {} ladder levels, got {}", 2 * m + 1, u.levels());
        alphas.par_iter().map(|a| a.iter().try_fold(u.clone(), |acc, &ax| acc.central_difference(ax))).collect::<Result<Vec<_>>>()?
    };
    let derived = match norm {
        GradNorm::MultiIndex => derived,
        GradNorm::Tensor => derived.into_iter().zip(&alphas).map(|(d, a)| d.map_slices(|s| s.scale(S::of(orderings(a)).sqrt()))).collect(),
    };
    Ok(magnitude_of(&derived))
}

/// Number of distinct orderings of a sorted index tuple.
fn orderings(sorted: &[usize]) -> usize {
    let fact = |k: usize| (1..=k).product::<usize>();
    let mut count = fact(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        count /= fact(j);
        i += j;
    }
    count
}

/// Outcome of a discrete subharmonicity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subharmonicity {
    /// `max(0, -min Δ(w^η))` over tested nodes.
    pub violation: f64,
    /// `(ladder level, flat node index)` of the most negative Laplacian.
    pub location: Option<(usize, usize)>,
    pub nodes_tested: usize,
}

pub fn subharmonicity_check<S: Real>(w: &HalfSpaceField<S>, eta: S) -> Result<Subharmonicity> {
    subharmonicity_check_with_floor(w, eta, S::lit(DEFAULT_ZERO_FLOOR))
}

/// Largest negative part of the discrete Laplacian of `w^η` over interior nodes
/// whose stencil stays strictly above `floor`.
pub fn subharmonicity_check_with_floor<S: Real>(w: &HalfSpaceField<S>, eta: S, floor: S) -> Result<Subharmonicity> {
    ensure!(eta > S::zero(), Domain, "eta must be positive, got {eta}");
    ensure!(w.slices().iter().all(|s| s.samples().iter().all(|z| z.re >= S::zero())), Domain, "subharmonicity_check needs w >= 0");
    let dt = w.uniform_dt()?;
    let grid = *w.grid();
    let (levels, nodes) = interior(&grid, w.levels());
    let raw = |k: usize, i: usize| w.slice(k).samples()[i].re;
    let powed = |k: usize, i: usize| raw(k, i).powf(eta);
    let clear = |k: usize, i: usize| {
        if raw(k, i) <= floor || raw(k + 1, i) <= floor || raw(k - 1, i) <= floor {
            return false;
        }
        (1..=grid.dim()).all(|a| raw(k, grid.shift_index(i, a, 1)) > floor && raw(k, grid.shift_index(i, a, -1)) > floor)
    };
    let (min, loc, tested) = levels
        .into_par_iter()
        .map(|k| {
            let mut best = (S::infinity(), None, 0usize);
            for &i in &nodes {
                if !clear(k, i) {
                    continue;
                }
                best.2 += 1;
                let lap = laplacian_at(&grid, &powed, k, i, dt);
                if lap < best.0 {
                    best = (lap, Some((k, i)), best.2);
                }
            }
            best
        })
        .reduce(
            || (S::infinity(), None, 0),
            |a, b| {
                let tested = a.2 + b.2;
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    (b.0, b.1, tested)
                } else {
                    (a.0, a.1, tested)
                }
            },
        );
    let violation = if min.is_finite() { (-min).max(S::zero()).as_f64() } else { 0.0 };
    Ok(Subharmonicity { violation, location: loc, nodes_tested: tested })
}

/// A field whose modulus can be evaluated at arbitrary heights.
pub trait Majorized<S: Real> {
    /// Tensor rank (1 for harmonic vectors).
    fn rank(&self) -> usize;
    fn grid(&self) -> &Grid<S>;
    /// `|F(·, t)|` at every node.
    fn modulus_at(&self, t: S) -> Result<Vec<S>>;
}

impl<S: Real> Majorized<S> for HarmonicVector<S> {
    fn rank(&self) -> usize {
        1
    }

    fn grid(&self) -> &Grid<S> {
        HarmonicVector::grid(self)
    }

    fn modulus_at(&self, t: S) -> Result<Vec<S>> {
        magnitude_at(&self.components, t)
    }
}

impl<S: Real> Majorized<S> for TensorField<S> {
    fn rank(&self) -> usize {
        self.rank
    }

    fn grid(&self) -> &Grid<S> {
        TensorField::grid(self)
    }

    fn modulus_at(&self, t: S) -> Result<Vec<S>> {
        magnitude_at(&self.components, t)
    }
}

/// Lower end `(n-1)/(n+m-1)` of the subharmonicity range for rank-`m` fields.
pub fn eta_threshold(n: usize, m: usize) -> f64 {
    (n as f64 - 1.0) / (n as f64 + m as f64 - 1.0)
}

/// `max_x |F(x, t+a)| − {(|F(·,a)|^η ∗ P_t)(x)}^{1/η}`.
pub fn majorant_check<S: Real, F: Majorized<S> + ?Sized>(field: &F, eta: S, a: S, t_probe: S, p_minus: S) -> Result<S> {
    let grid = *field.grid();
    let n = grid.dim();
    let lo = S::lit(eta_threshold(n, field.rank()));
    ensure!(eta >= lo && eta < p_minus && eta > S::zero(), Precondition, "eta = {eta} outside [{lo}, {p_minus})");
    let h = grid.spacing();
    let top = grid.period() / S::lit(8.0);
    let tol = S::lit(1e-12);
    for (name, v) in [("a", a), ("t_probe", t_probe)] {
        ensure!(v >= h * (S::one() - tol) && v <= top * (S::one() + tol), Precondition, "{name} = {v} outside [{h}, {top}]");
    }
    let boundary = field.modulus_at(a)?;
    let lifted = field.modulus_at(t_probe + a)?;
    let powered = GridFunction::from_real(grid, boundary.iter().map(|&v| v.powf(eta)).collect(), "|F|^eta")?;
    let averaged = grid::inverse_fourier(&grid::semigroup(&grid::fourier(&powered), t_probe));
    let inv = S::one() / eta;
    Ok(lifted.iter().zip(averaged.samples()).fold(S::neg_infinity(), |m, (&l, z)| m.max(l - z.re.max(S::zero()).powf(inv))))
}

/// `∫ |F(x, a+t)|^{ηq} / (|x| + 1 + t)^{n+1} dx` over the grid window.
pub fn k_integral<S: Real, F: Majorized<S> + ?Sized>(field: &F, eta: S, q: S, a: S, t: S, p_minus: S) -> Result<S> {
    ensure!(eta > S::zero(), Domain, "eta must be positive");
    ensure!(q > S::one() && q < p_minus / eta, Precondition, "q = {q} outside (1, {})", p_minus / eta);
    ensure!(a >= S::zero() && t > S::zero(), Domain, "need a >= 0 and t > 0");
    let grid = *field.grid();
    let n = grid.dim() as i32;
    let modulus = field.modulus_at(a + t)?;
    let values: Vec<S> = modulus.iter().enumerate().map(|(i, &v)| v.powf(eta * q) / (grid.radius(i) + S::one() + t).powi(n + 1)).collect();
    Ok(grid::quadrature_real(&grid, &values))
}

//! Radial, non-tangential and grand maximal functions over finite, certified
//! test families, plus Poisson and field non-tangential maximal functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::grid::{self, Grid, GridFunction, HalfSpaceField, Spectrum};
use crate::kernel::Kernel;
use crate::operators::disk_max;
use crate::scalar::Real;

/// Points per axis of the seminorm audit grid.
pub const AUDIT_POINTS: usize = 8001;

/// A kernel together with its normalization factor and audited seminorm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub kernel: Kernel,
    pub factor: f64,
    /// `sup_{|α|,|β| ≤ N} sup_x |x^α ∂^β ψ|` of the unscaled kernel.
    pub seminorm: f64,
}

impl FamilyMember {
    pub fn certified(&self) -> bool {
        self.factor > 0.0 && self.factor * self.seminorm <= 1.0 + 1e-12
    }
}

/// A finite subset of the unit ball of the order-`N` Schwartz seminorm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub order: usize,
    pub members: Vec<FamilyMember>,
}

impl TestFamily {
    /// Each kernel is divided by its audited seminorm, so membership holds by construction.
    pub fn normalized(order: usize, kernels: Vec<Kernel>) -> Result<Self> {
        ensure!(!kernels.is_empty(), Precondition, "test family must be nonempty");
        let members = kernels
            .into_par_iter()
            .map(|kernel| {
                let seminorm = kernel.seminorm(order, AUDIT_POINTS);
                FamilyMember { kernel, factor: 1.0 / seminorm, seminorm }
            })
            .collect();
        Ok(Self { order, members })
    }

    /// Kernels with caller-chosen factors; audited but not rescaled.
    pub fn with_factors(order: usize, kernels: Vec<(Kernel, f64)>) -> Result<Self> {
        ensure!(!kernels.is_empty(), Precondition, "test family must be nonempty");
        let members = kernels
            .into_par_iter()
            .map(|(kernel, factor)| {
                let seminorm = kernel.seminorm(order, AUDIT_POINTS);
                FamilyMember { kernel, factor, seminorm }
            })
            .collect();
        Ok(Self { order, members })
    }

    /// Gaussian, its first derivative along every axis, and the bump.
    pub fn standard(dim: usize, order: usize) -> Result<Self> {
        let mut kernels = vec![Kernel::gaussian(dim)];
        kernels.extend((1..=dim).map(|a| Kernel::gaussian_derivative(dim, a)));
        kernels.push(Kernel::bump(dim));
        Self::normalized(order, kernels)
    }

    pub fn certified(&self) -> bool {
        !self.members.is_empty() && self.members.iter().all(FamilyMember::certified)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximalMode {
    Radial,
    Nontangential,
}

/// Default `t` ladder `{2^k h}` up to `L/4`.
pub fn default_t_set<S: Real>(grid: &Grid<S>) -> Vec<S> {
    grid::geometric_ladder(grid.spacing(), grid.period() / S::lit(4.0))
}

fn check_t_set<S: Real>(grid: &Grid<S>, t_set: &[S]) -> Result<()> {
    ensure!(!t_set.is_empty(), Precondition, "t set must be nonempty");
    ensure!(
        t_set.iter().all(|&t| t >= grid.spacing() / S::lit(2.0) && t <= grid.period() / S::lit(2.0)),
        Precondition,
        "t set must lie in [h/2, L/2]"
    );
    Ok(())
}

/// `|f ∗ ψ_t|` for one `t`, given `f̂`.
fn smoothed_modulus<S: Real>(fs: &Spectrum<S>, kernel: &Kernel, t: S) -> Vec<S> {
    let k = kernel.sample_dilated(fs.grid(), t);
    grid::convolve_spectra(fs, &grid::fourier(&k), String::new()).abs()
}

fn pointwise_max<S: Real>(a: Vec<S>, b: Vec<S>) -> Vec<S> {
    a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect()
}

fn single_maximal<S: Real>(fs: &Spectrum<S>, kernel: &Kernel, t_set: &[S], mode: MaximalMode) -> Vec<S> {
    let grid = *fs.grid();
    t_set
        .par_iter()
        .map(|&t| {
            let m = smoothed_modulus(fs, kernel, t);
            match mode {
                MaximalMode::Radial => m,
                MaximalMode::Nontangential => disk_max(&grid, &m, t),
            }
        })
        .reduce(|| vec![S::zero(); grid.len()], pointwise_max)
}

/// `sup_{t ∈ t_set} |f ∗ ψ_t(x)|`.
pub fn radial_maximal<S: Real>(f: &GridFunction<S>, psi: &Kernel, t_set: &[S]) -> Result<GridFunction<S>> {
    check_t_set(f.grid(), t_set)?;
    ensure!(psi.dim() == f.grid().dim(), Domain, "kernel dimension mismatch");
    let vals = single_maximal(&grid::fourier(f), psi, t_set, MaximalMode::Radial);
    GridFunction::from_real(*f.grid(), vals, format!("M+_{}", psi.name))
}

/// `sup_{t ∈ t_set, |ξ - y| < t} |f ∗ ψ_t(ξ)|` with `ξ` ranging over grid nodes.
pub fn nontangential_maximal<S: Real>(f: &GridFunction<S>, psi: &Kernel, t_set: &[S]) -> Result<GridFunction<S>> {
    check_t_set(f.grid(), t_set)?;
    ensure!(psi.dim() == f.grid().dim(), Domain, "kernel dimension mismatch");
    let vals = single_maximal(&grid::fourier(f), psi, t_set, MaximalMode::Nontangential);
    GridFunction::from_real(*f.grid(), vals, format!("M*_{}", psi.name))
}

/// Pointwise maximum over the family of `factor ×` the chosen maximal function.
/// A lower bound for the supremum over the whole seminorm ball.
pub fn grand_maximal<S: Real>(f: &GridFunction<S>, family: &TestFamily, t_set: &[S], mode: MaximalMode) -> Result<GridFunction<S>> {
    ensure!(family.certified(), Precondition, "test family is empty or not certified");
    check_t_set(f.grid(), t_set)?;
    let grid = *f.grid();
    ensure!(family.members.iter().all(|m| m.kernel.dim() == grid.dim()), Domain, "kernel dimension mismatch");
    let fs = grid::fourier(f);
    let vals = family
        .members
        .par_iter()
        .map(|m| {
            let factor = S::lit(m.factor);
            single_maximal(&fs, &m.kernel, t_set, mode).into_iter().map(|v| v * factor).collect()
        })
        .reduce(|| vec![S::zero(); grid.len()], pointwise_max);
    GridFunction::from_real(grid, vals, "grand")
}

/// Per-member maximal functions, unreduced (for member-wise comparisons).
pub fn member_maximals<S: Real>(f: &GridFunction<S>, family: &TestFamily, t_set: &[S], mode: MaximalMode) -> Result<Vec<Vec<S>>> {
    check_t_set(f.grid(), t_set)?;
    let fs = grid::fourier(f);
    Ok(family
        .members
        .par_iter()
        .map(|m| {
            let factor = S::lit(m.factor);
            single_maximal(&fs, &m.kernel, t_set, mode).into_iter().map(|v| v * factor).collect()
        })
        .collect())
}

/// `sup_{|x - y| < t} |f ∗ P_t(y)|` over the ladder, with the spectral extension.
pub fn poisson_nt_maximal<S: Real>(f: &GridFunction<S>, t_set: &[S]) -> Result<GridFunction<S>> {
    check_t_set(f.grid(), t_set)?;
    let u = crate::halfspace::poisson_extend(f, t_set)?;
    field_nt_maximal(&u)
}

/// `u*(x) = sup_{k, |y - x| < t_k} |u(y, t_k)|` over the field's own ladder.
pub fn field_nt_maximal<S: Real>(u: &HalfSpaceField<S>) -> Result<GridFunction<S>> {
    let grid = *u.grid();
    let vals =
        u.t_ladder().par_iter().zip(u.slices()).map(|(&t, s)| disk_max(&grid, &s.abs(), t)).reduce(|| vec![S::zero(); grid.len()], pointwise_max);
    GridFunction::from_real(grid, vals, "u*")
}

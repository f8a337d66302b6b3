//! Characterization quantities: Hardy-norm proxies, Riesz budgets, equivalence
//! and embedding ratios, and the report sections built from them.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convergence::{ConvergenceStudy, PairRule};
use crate::corpus::CorpusMember;
use crate::error::{ensure, Result};
use crate::exponent::{scale_exponent, VariableExponent};
use crate::grid::{self, uniform_ladder, Grid, GridFunction, HalfSpaceField, Spectrum};
use crate::halfspace::{
    cr_residual, eta_threshold, grad_m_magnitude_with, gradient_tensor_fd, harmonicity_residual, k_integral, majorant_check, poisson_extend,
    poisson_tensor, poisson_vector, subharmonicity_check_with_floor, GradNorm, Majorized,
};
use crate::kernel::Kernel;
use crate::lebesgue::norm_of_moduli;
use crate::maximal::{default_t_set, grand_maximal, MaximalMode, TestFamily};
use crate::operators::{default_radii, hl_maximal, riesz_spectrum, RieszSymbol};
use crate::scalar::Real;

/// Margin kept between sampled `η` values and the ends of their admissible range.
pub const ETA_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub dim: usize,
    pub period: f64,
    pub points: usize,
}

impl<S: Real> From<&Grid<S>> for GridDescriptor {
    fn from(g: &Grid<S>) -> Self {
        Self { dim: g.dim(), period: g.period().as_f64(), points: g.points() }
    }
}

/// `{2^{-4}, 2^{-4 + 1/k}, …, 2^0}·(L/16)` with `k` steps per octave, keeping
/// only scales the grid resolves (`ε ≥ h/2`).
pub fn eps_ladder<S: Real>(grid: &Grid<S>, steps_per_octave: usize) -> Vec<S> {
    let k = steps_per_octave.max(1);
    let base = grid.period() / S::lit(16.0);
    let half_h = grid.spacing() / S::lit(2.0);
    (0..=4 * k).map(|i| base * S::lit(2f64.powf(-4.0 + i as f64 / k as f64))).filter(|&e| e >= half_h).collect()
}

/// The default ladder, two steps per octave.
pub fn default_eps_ladder<S: Real>(grid: &Grid<S>) -> Vec<S> {
    eps_ladder(grid, 2)
}

fn check_exponent_grid<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>) -> Result<()> {
    ensure!(f.grid().same_as(p.grid()), Domain, "exponent is sampled on a different grid");
    Ok(())
}

/// `‖f*_{N,+}‖_{p(·)}` with the radial grand maximal function over `family`.
pub fn hardy_norm_proxy<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>, family: &TestFamily, t_set: &[S]) -> Result<S> {
    check_exponent_grid(f, p)?;
    let need = p.default_order();
    ensure!(family.order >= need, Precondition, "test family order {} is below the order {need} required by p_zero = {}", family.order, p.p_zero());
    if f.is_zero() {
        return Ok(S::zero());
    }
    let m = grand_maximal(f, family, t_set, MaximalMode::Radial)?;
    norm_of_moduli(f.grid(), &m.abs(), p)
}

/// Norms of the individual terms at one `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetAtEps {
    pub eps: f64,
    pub total: f64,
    /// `(label, ‖R_J(f) ∗ φ_ε‖_{p(·)})`; the empty composition is labelled `I`.
    pub terms: Vec<(String, f64)>,
}

impl BudgetAtEps {
    /// Sum over the terms of composition order at most `k`.
    pub fn total_up_to(&self, k: usize) -> f64 {
        self.terms.iter().filter(|(l, _)| term_order(l) <= k).map(|(_, v)| v).sum()
    }
}

fn term_order(label: &str) -> usize {
    if label == "I" {
        0
    } else {
        label.matches('R').count()
    }
}

fn term_label(indices: &[usize]) -> String {
    if indices.is_empty() {
        "I".into()
    } else {
        indices.iter().map(|j| format!("R{j}")).collect()
    }
}

/// A budget maximized over an `ε` ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLadder {
    pub value: f64,
    pub binding_eps: f64,
    pub per_eps: Vec<BudgetAtEps>,
}

/// All index tuples `(j_1, …, j_k)`, `1 ≤ j_i ≤ n`, for `k = 0..=m`.
fn composition_tuples(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..m {
        layer = layer
            .iter()
            .flat_map(|t| {
                (1..=n).map(move |j| {
                    let mut next = t.clone();
                    next.push(j);
                    next
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn check_mollifier<S: Real>(grid: &Grid<S>, phi: &Kernel, eps: &[S]) -> Result<()> {
    ensure!(phi.dim() == grid.dim(), Domain, "kernel dimension {} differs from grid dimension {}", phi.dim(), grid.dim());
    ensure!((phi.mass() - 1.0).abs() <= 1e-8, Precondition, "mollifier must have unit mass, got {}", phi.mass());
    ensure!(!eps.is_empty(), Precondition, "eps ladder must be nonempty");
    let half_h = grid.spacing() / S::lit(2.0);
    ensure!(eps.iter().all(|&e| e >= half_h && e <= grid.period() / S::lit(2.0)), Precondition, "eps ladder must lie in [h/2, L/2]");
    Ok(())
}

/// `Σ_J ‖R_J(f) ∗ φ_ε‖_{p(·)}` over the given compositions, maximized over `ε`.
/// Riesz transforms commute, so each distinct multiset of indices is evaluated once.
fn composition_budget<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>, phi: &Kernel, eps: &[S], tuples: &[Vec<usize>]) -> Result<BudgetLadder> {
    check_exponent_grid(f, p)?;
    let grid = *f.grid();
    check_mollifier(&grid, phi, eps)?;
    let fs = grid::fourier(f);
    let mut distinct: BTreeMap<Vec<usize>, Spectrum<S>> = BTreeMap::new();
    for t in tuples {
        let mut key = t.clone();
        key.sort_unstable();
        if let Entry::Vacant(slot) = distinct.entry(key) {
            let key = slot.key();
            let spec = if key.is_empty() { fs.clone() } else { riesz_spectrum(&fs, &RieszSymbol::new(key.clone())?)? };
            slot.insert(spec);
        }
    }
    let per_eps = eps
        .iter()
        .map(|&e| -> Result<BudgetAtEps> {
            let ks = grid::fourier(&phi.sample_dilated(&grid, e));
            let norms: BTreeMap<Vec<usize>, f64> = distinct
                .par_iter()
                .map(|(key, spec)| {
                    let smoothed = grid::convolve_spectra(spec, &ks, String::new());
                    Ok((key.clone(), norm_of_moduli(&grid, &smoothed.abs(), p)?.as_f64()))
                })
                .collect::<Result<_>>()?;
            let terms: Vec<(String, f64)> = tuples
                .iter()
                .map(|t| {
                    let mut key = t.clone();
                    key.sort_unstable();
                    (term_label(t), norms[&key])
                })
                .collect();
            let total = terms.iter().map(|(_, v)| v).sum();
            Ok(BudgetAtEps { eps: e.as_f64(), total, terms })
        })
        .collect::<Result<Vec<_>>>()?;
    let binding = per_eps.iter().fold(&per_eps[0], |best, b| if b.total > best.total { b } else { best });
    Ok(BudgetLadder { value: binding.total, binding_eps: binding.eps, per_eps: per_eps.clone() })
}

/// `max_ε ‖f ∗ φ_ε‖_{p(·)} + Σ_j ‖R_j(f) ∗ φ_ε‖_{p(·)}`.
pub fn riesz_budget_a3<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>, phi: &Kernel, eps: &[S]) -> Result<BudgetLadder> {
    composition_budget(f, p, phi, eps, &composition_tuples(f.grid().dim(), 1))
}

/// `‖f‖_{p(·)} + Σ_j ‖R_j f‖_{p(·)}` without mollification; needs `p₋ ≥ 1`.
pub fn riesz_budget_a3_direct<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>) -> Result<S> {
    check_exponent_grid(f, p)?;
    ensure!(p.p_minus() >= S::one(), Precondition, "the unmollified budget needs p_minus >= 1, got {}", p.p_minus());
    let grid = *f.grid();
    let fs = grid::fourier(f);
    let mut total = norm_of_moduli(&grid, &f.abs(), p)?;
    for j in 1..=grid.dim() {
        let r = grid::inverse_fourier(&riesz_spectrum(&fs, &RieszSymbol::single(j)?)?);
        total = total + norm_of_moduli(&grid, &r.abs(), p)?;
    }
    Ok(total)
}

/// The order-`≤ m` composition budget, `m ≥ 2`, `p₋ > (n-1)/(n+m-1)`.
pub fn riesz_budget_a4<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>, phi: &Kernel, eps: &[S], m: usize) -> Result<BudgetLadder> {
    ensure!(m >= 2, Precondition, "the higher-order budget needs m >= 2, got {m}");
    let n = f.grid().dim();
    let thr = eta_threshold(n, m);
    ensure!(p.p_minus().as_f64() > thr, Precondition, "p_minus = {} must exceed (n-1)/(n+m-1) = {thr}", p.p_minus());
    composition_budget(f, p, phi, eps, &composition_tuples(n, m))
}

/// `‖f‖_{p(·)} / ‖f‖_{H^{p(·)}}`; needs `p₋ ≥ 1` and nonzero `f`.
pub fn embedding_check<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>, family: &TestFamily, t_set: &[S]) -> Result<S> {
    ensure!(p.p_minus() >= S::one(), Precondition, "the embedding needs p_minus >= 1, got {}", p.p_minus());
    ensure!(!f.is_zero(), Degenerate, "embedding ratio of the zero function");
    let hardy = hardy_norm_proxy(f, p, family, t_set)?;
    Ok(norm_of_moduli(f.grid(), &f.abs(), p)? / hardy)
}

/// Which Riesz budget an equivalence report evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Budget {
    A3,
    A4 { m: usize },
}

impl Budget {
    pub fn name(&self) -> String {
        match self {
            Budget::A3 => "A3".into(),
            Budget::A4 { m } => format!("A4(m={m})"),
        }
    }
}

/// Everything an equivalence report needs besides the corpus and exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceConfig<S> {
    pub family: TestFamily,
    pub t_set: Vec<S>,
    pub phi: Kernel,
    pub eps_ladder: Vec<S>,
    pub budget: Budget,
    /// Also evaluate the unmollified budget and the embedding ratio when `p₋ ≥ 1`.
    pub direct: bool,
}

impl<S: Real> EquivalenceConfig<S> {
    /// Standard family of the order demanded by `p`, default `t` set and `ε`
    /// ladder, Gaussian mollifier.
    pub fn standard(p: &VariableExponent<S>, budget: Budget) -> Result<Self> {
        let grid = *p.grid();
        Ok(Self {
            family: TestFamily::standard(grid.dim(), p.default_order())?,
            t_set: default_t_set(&grid),
            phi: Kernel::gaussian(grid.dim()),
            eps_ladder: default_eps_ladder(&grid),
            budget,
            direct: p.p_minus() >= S::one(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub function: String,
    pub exponent: String,
    pub grid: GridDescriptor,
    pub hardy_norm: f64,
    pub budget_kind: String,
    pub budget: f64,
    /// `budget / hardy_norm`.
    pub ratio: f64,
    pub binding_eps: f64,
    pub eps_values: Vec<(f64, f64)>,
    /// Unmollified first-order budget (`p₋ ≥ 1` only).
    pub direct_budget: Option<f64>,
    /// `max(0, ladder / direct − 1)` for the first-order budget.
    pub mollifier_loss: Option<f64>,
    pub embedding_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub records: Vec<FunctionRecord>,
    pub c_lo: f64,
    pub c_hi: f64,
    /// `c_hi / c_lo`.
    pub band: f64,
    /// Largest embedding ratio, when computed.
    pub embedding_constant: Option<f64>,
}

fn exponent_tag<S: Real>(p: &VariableExponent<S>) -> String {
    match p.rule() {
        Some(rule) => serde_json::to_string(rule).unwrap_or_else(|_| rule.name().into()),
        None => format!("samples[{}, {}]", p.p_minus(), p.p_plus()),
    }
}

/// Hardy-norm proxy, budget, ratio and (for `p₋ ≥ 1`) embedding data for every member.
pub fn equivalence_report<S: Real>(corpus: &[GridFunction<S>], p: &VariableExponent<S>, config: &EquivalenceConfig<S>) -> Result<EquivalenceReport> {
    ensure!(!corpus.is_empty(), Precondition, "equivalence report needs a nonempty corpus");
    ensure!(corpus.iter().all(|f| !f.is_zero()), Degenerate, "equivalence ratios need nonzero functions");
    let direct = config.direct && p.p_minus() >= S::one();
    let exponent = exponent_tag(p);
    let records = corpus
        .par_iter()
        .map(|f| -> Result<FunctionRecord> {
            let hardy = hardy_norm_proxy(f, p, &config.family, &config.t_set)?.as_f64();
            let ladder = match config.budget {
                Budget::A3 => riesz_budget_a3(f, p, &config.phi, &config.eps_ladder)?,
                Budget::A4 { m } => riesz_budget_a4(f, p, &config.phi, &config.eps_ladder, m)?,
            };
            let (direct_budget, mollifier_loss, embedding_ratio) = if direct {
                let d = riesz_budget_a3_direct(f, p)?.as_f64();
                let first = ladder.per_eps.iter().map(|b| b.total_up_to(1)).fold(0.0, f64::max);
                let emb = norm_of_moduli(f.grid(), &f.abs(), p)?.as_f64() / hardy;
                (Some(d), Some((first / d - 1.0).max(0.0)), Some(emb))
            } else {
                (None, None, None)
            };
            Ok(FunctionRecord {
                function: f.tag().to_string(),
                exponent: exponent.clone(),
                grid: GridDescriptor::from(f.grid()),
                hardy_norm: hardy,
                budget_kind: config.budget.name(),
                budget: ladder.value,
                ratio: ladder.value / hardy,
                binding_eps: ladder.binding_eps,
                eps_values: ladder.per_eps.iter().map(|b| (b.eps, b.total)).collect(),
                direct_budget,
                mollifier_loss,
                embedding_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let c_lo = records.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let c_hi = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let embedding_constant = direct.then(|| records.iter().filter_map(|r| r.embedding_ratio).fold(0.0, f64::max));
    Ok(EquivalenceReport { records, c_lo, c_hi, band: c_hi / c_lo, embedding_constant })
}

/// `max(|a/b − 1|, |b/a − 1|)`, the symmetric relative change between two positive values.
pub fn relative_change(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs().max((b / a - 1.0).abs())
}

/// Admissible `η` samples for rank-`m` fields: three points spread over
/// `[(n-1)/(n+m-1) + δ, p₋ − δ]`, with `η > 0`.
pub fn default_eta_grid(dim: usize, m: usize, p_minus: f64) -> Vec<f64> {
    let lo = eta_threshold(dim, m) + ETA_MARGIN;
    let hi = p_minus - ETA_MARGIN;
    if hi <= lo {
        return Vec::new();
    }
    vec![lo, 0.5 * (lo + hi), hi]
}

/// Base heights `{L/128, L/32}` and lifts `{L/128, L/32, L/8}`, clamped to `≥ h`.
pub fn default_majorant_heights<S: Real>(grid: &Grid<S>) -> (Vec<S>, Vec<S>) {
    let l = grid.period();
    let h = grid.spacing();
    let a = [128.0, 32.0].iter().map(|&d| (l / S::lit(d)).max(h)).collect();
    let t = [128.0, 32.0, 8.0].iter().map(|&d| (l / S::lit(d)).max(h)).collect();
    (a, t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantEntry {
    pub function: String,
    pub m: usize,
    pub eta: f64,
    pub a: f64,
    pub t: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KIntegralEntry {
    pub function: String,
    pub m: usize,
    pub eta: f64,
    pub q: f64,
    pub min: f64,
    pub max: f64,
    /// `max / min` over the lift ladder.
    pub spread: f64,
    /// `max / K(t_0)` for the lowest lift `t_0`; large values would signal growth in `t`.
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantSection {
    pub grid: Option<GridDescriptor>,
    pub entries: Vec<MajorantEntry>,
    pub k_integrals: Vec<KIntegralEntry>,
    /// Worst `max_x(|F(t+a)| − majorant)`; `-∞` serialized as `null` when empty.
    pub max_excess: Option<f64>,
    pub max_k_spread: Option<f64>,
    pub max_k_growth: Option<f64>,
    /// Set when the corpus was empty and nothing was evaluated.
    pub empty: bool,
}

/// Runs [`majorant_check`] and [`k_integral`] over corpus × `m` × `η` × `a` × `t`.
/// Rank 1 uses the harmonic vector, higher ranks the Poisson tensor.
pub fn majorant_suite<S: Real>(
    corpus: &[GridFunction<S>],
    p_minus: S,
    m_list: &[usize],
    eta_grid: &(dyn Fn(usize) -> Vec<f64> + Sync),
    a_grid: &[S],
    t_grid: &[S],
) -> Result<MajorantSection> {
    if corpus.is_empty() {
        return Ok(MajorantSection {
            grid: None,
            entries: vec![],
            k_integrals: vec![],
            max_excess: None,
            max_k_spread: None,
            max_k_growth: None,
            empty: true,
        });
    }
    ensure!(!a_grid.is_empty() && !t_grid.is_empty(), Precondition, "height grids must be nonempty");
    let n = corpus[0].grid().dim();
    for &m in m_list {
        let lo = eta_threshold(n, m) + ETA_MARGIN - 1e-12;
        let hi = p_minus.as_f64() - ETA_MARGIN + 1e-12;
        ensure!(eta_grid(m).iter().all(|&e| e >= lo && e <= hi), Precondition, "eta grid for m = {m} must lie in [{lo}, {hi}]");
    }
    let jobs: Vec<(usize, usize)> = (0..corpus.len()).flat_map(|i| m_list.iter().map(move |&m| (i, m))).collect();
    let results = jobs
        .par_iter()
        .map(|&(i, m)| -> Result<(Vec<MajorantEntry>, Vec<KIntegralEntry>)> {
            let f = &corpus[i];
            let ladder = vec![a_grid[0]];
            let field: Box<dyn Majorized<S> + Sync> =
                if m == 1 { Box::new(poisson_vector(f, &ladder)?) } else { Box::new(poisson_tensor(f, &ladder, m)?) };
            let mut entries = Vec::new();
            let mut ks = Vec::new();
            for eta in eta_grid(m) {
                let e = S::lit(eta);
                for &a in a_grid {
                    for &t in t_grid {
                        let excess = majorant_check(field.as_ref(), e, a, t, p_minus)?.as_f64();
                        entries.push(MajorantEntry { function: f.tag().into(), m, eta, a: a.as_f64(), t: t.as_f64(), excess });
                    }
                }
                let q = S::lit(0.5) * (S::one() + p_minus / e);
                let vals =
                    t_grid.iter().map(|&t| Ok(k_integral(field.as_ref(), e, q, a_grid[0], t, p_minus)?.as_f64())).collect::<Result<Vec<f64>>>()?;
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = vals.iter().cloned().fold(0.0, f64::max);
                ks.push(KIntegralEntry { function: f.tag().into(), m, eta, q: q.as_f64(), min, max, spread: max / min, growth: max / vals[0] });
            }
            Ok((entries, ks))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    let mut k_integrals = Vec::new();
    for (e, k) in results {
        entries.extend(e);
        k_integrals.extend(k);
    }
    let max_excess = entries.iter().map(|e| e.excess).reduce(f64::max);
    let max_k_spread = k_integrals.iter().map(|k| k.spread).reduce(f64::max);
    let max_k_growth = k_integrals.iter().map(|k| k.growth).reduce(f64::max);
    Ok(MajorantSection {
        grid: Some(GridDescriptor::from(corpus[0].grid())),
        entries,
        k_integrals,
        max_excess,
        max_k_spread,
        max_k_growth,
        empty: false,
    })
}

/// A deliberately broken field for exercising the residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantedDefect {
    /// Adds `t²` to the Poisson extension.
    NonHarmonic,
    /// Adds `0.1·sin(2π x₁ / L)` to the first conjugate component.
    CauchyRiemann,
}

/// Settings shared by the residual and subharmonicity refinement studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementConfig {
    pub dim: usize,
    pub period: f64,
    /// Points per axis on the coarsest grid; each further level doubles it.
    pub points: usize,
    pub levels: usize,
    /// Lowest height of the `t` ladder.
    pub t0: f64,
    /// Number of ladder heights at spacing `h` on the coarsest grid.
    pub heights: usize,
    pub floor: f64,
    pub min_order: f64,
    /// Subharmonicity tests skip stencils touching values below this fraction
    /// of the field maximum, which keeps them a fixed distance from the zero set.
    pub zero_set_floor: f64,
}

impl RefinementConfig {
    pub fn grids(&self) -> Result<Vec<Grid<f64>>> {
        (0..self.levels).map(|k| Grid::new(self.dim, self.period, self.points << k)).collect()
    }

    /// Heights `t0 - h, t0, …, t0 + (heights - 1)·h_c + h` at the grid's own
    /// spacing `h`, so that the interior levels cover the same window
    /// `[t0, t0 + (heights - 1)·h_c]` on every grid (`h_c` the coarsest spacing).
    pub fn ladder(&self, grid: &Grid<f64>) -> Vec<f64> {
        let scale = grid.points() / self.points;
        let h = grid.spacing();
        uniform_ladder(self.t0 - h, h, (self.heights - 1) * scale + 3)
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.levels >= 2, Precondition, "a refinement study needs at least two grids");
        ensure!(self.heights >= 1, Precondition, "the height window needs at least one level");
        ensure!(self.t0 > self.period / self.points as f64, Precondition, "t0 = {} must exceed the coarsest spacing", self.t0);
        ensure!(self.floor > 0.0 && self.min_order > 0.0 && self.zero_set_floor >= 0.0, Domain, "tolerances must be positive");
        Ok(())
    }
}

fn planted_sine(grid: &Grid<f64>) -> GridFunction<f64> {
    let l = grid.period();
    GridFunction::from_rule(*grid, "defect", move |x| 0.1 * (std::f64::consts::TAU * x[0] / l).sin())
}

/// Convergence of the harmonicity, Cauchy–Riemann, tensor-symmetry and trace
/// residuals for one corpus member. Tensor residuals are measured on the
/// finite-difference gradient of the rank-`m` Poisson tensor, `m = 1..=m_max`.
pub fn residual_suite(
    member: &CorpusMember,
    config: &RefinementConfig,
    m_max: usize,
    defect: Option<PlantedDefect>,
) -> Result<Vec<ConvergenceStudy>> {
    config.validate()?;
    let grids = config.grids()?;
    let per_grid = grids
        .par_iter()
        .map(|g| -> Result<Vec<(String, f64)>> {
            let f = member.sample(g)?;
            let ladder = config.ladder(g);
            let mut out = Vec::new();
            let mut u = poisson_extend(&f, &ladder)?;
            if defect == Some(PlantedDefect::NonHarmonic) {
                let slices = u.slices().iter().zip(&ladder).map(|(s, &t)| s.map(|z| z + Complex::new(t * t, 0.0))).collect();
                u = HalfSpaceField::new(*g, ladder.clone(), slices)?;
            }
            out.push(("harmonicity_residual".into(), harmonicity_residual(&u)?));
            let mut v = poisson_vector(&f, &ladder)?;
            if defect == Some(PlantedDefect::CauchyRiemann) {
                let bump = planted_sine(g);
                let c = v.component(1);
                let slices = c.slices().iter().map(|s| s.add(&bump)).collect::<Result<Vec<_>>>()?;
                v = v.clone().with_component(1, HalfSpaceField::new(*g, ladder.clone(), slices)?)?;
            }
            let cr = cr_residual(&v)?;
            out.push(("cr_div_residual".into(), cr.div));
            out.push(("cr_curl_residual".into(), cr.curl));
            for m in 1..=m_max {
                let grad = gradient_tensor_fd(&poisson_tensor(&f, &ladder, m)?)?;
                out.push((format!("tensor_symmetry_residual(m={})", m + 1), grad.symmetry_residual()));
                out.push((format!("tensor_trace_residual(m={})", m + 1), grad.trace_residual()));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let spacings: Vec<f64> = grids.iter().map(|g| g.spacing()).collect();
    (0..per_grid[0].len())
        .map(|k| {
            let name = format!("{}:{}", per_grid[0][k].0, member.tag());
            let residuals = per_grid.iter().map(|r| r[k].1).collect();
            ConvergenceStudy::new(name, spacings.clone(), residuals, config.floor, config.min_order)
        })
        .collect()
}

/// Which nonnegative quantity a subharmonicity study raises to the power `η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubharmonicTarget {
    /// `|∇^m u|` with each multi-index counted once.
    Gradient,
    /// `|∇^m u|` weighted as the full symmetric tensor.
    GradientTensorNorm,
    /// `|F|` for the rank-`m` Poisson tensor (the harmonic vector for `m = 1`).
    Field,
}

/// Violation of `Δ(w^η) ≥ 0` under refinement; the violation plays the role
/// of the residual and is judged on the finest refinement pair.
pub fn subharmonicity_study(
    member: &CorpusMember,
    config: &RefinementConfig,
    m: usize,
    eta: f64,
    target: SubharmonicTarget,
) -> Result<ConvergenceStudy> {
    config.validate()?;
    let grids = config.grids()?;
    let violations = grids
        .par_iter()
        .map(|g| -> Result<f64> {
            let f = member.sample(g)?;
            let ladder = config.ladder(g);
            let w = match target {
                SubharmonicTarget::Gradient => grad_m_magnitude_with(&poisson_extend(&f, &ladder)?, m, GradNorm::MultiIndex)?,
                SubharmonicTarget::GradientTensorNorm => grad_m_magnitude_with(&poisson_extend(&f, &ladder)?, m, GradNorm::Tensor)?,
                SubharmonicTarget::Field => poisson_tensor(&f, &ladder, m)?.magnitude(),
            };
            let max = w.slices().iter().map(|s| s.max_abs()).fold(0.0, f64::max);
            Ok(subharmonicity_check_with_floor(&w, eta, config.zero_set_floor * max)?.violation)
        })
        .collect::<Result<Vec<_>>>()?;
    let name = format!(
        "subharmonicity({}, n={}, m={m}, eta={eta:.4}):{}",
        serde_json::to_string(&target).unwrap_or_default().trim_matches('"'),
        config.dim,
        member.tag()
    );
    ConvergenceStudy::with_rule(name, grids.iter().map(|g| g.spacing()).collect(), violations, config.floor, config.min_order, PairRule::Finest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalBoundRecord {
    pub function: String,
    pub grid: GridDescriptor,
    /// `‖Mf‖_{p/p₀} / ‖f‖_{p/p₀}`.
    pub ratio: f64,
    /// `min_x (Mf − |f|)`, nonnegative when `Mf ≥ |f|` everywhere.
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalBoundReport {
    pub records: Vec<MaximalBoundRecord>,
    /// Largest ratio over the corpus.
    pub constant: f64,
    pub dominates: bool,
    pub log_holder: Option<(f64, f64)>,
}

/// Empirical bound of the Hardy–Littlewood maximal operator on `L^{p(·)/p₀}`.
pub fn maximal_bound_study<S: Real>(corpus: &[GridFunction<S>], p: &VariableExponent<S>) -> Result<MaximalBoundReport> {
    ensure!(!corpus.is_empty(), Precondition, "maximal bound study needs a nonempty corpus");
    let q = scale_exponent(p, p.p_zero())?;
    let records = corpus
        .par_iter()
        .map(|f| -> Result<MaximalBoundRecord> {
            check_exponent_grid(f, p)?;
            ensure!(!f.is_zero(), Degenerate, "maximal bound ratio of the zero function");
            let radii = default_radii(f.grid());
            let mf = hl_maximal(f, &radii)?;
            let min_gap = mf.samples().iter().zip(f.samples()).map(|(m, z)| (m.re - z.norm()).as_f64()).fold(f64::INFINITY, f64::min);
            let ratio = (norm_of_moduli(f.grid(), &mf.abs(), &q)? / norm_of_moduli(f.grid(), &f.abs(), &q)?).as_f64();
            Ok(MaximalBoundRecord { function: f.tag().into(), grid: GridDescriptor::from(f.grid()), ratio, min_gap })
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let dominates = records.iter().all(|r| r.min_gap >= 0.0);
    let log_holder = p.log_holder().map(|lh| (lh.c_log.as_f64(), lh.c_inf.as_f64()));
    Ok(MaximalBoundReport { records, constant, dominates, log_holder })
}

/// A named scalar compared against a pinned tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value >= tolerance }
    }
}

/// Aggregated report; every section is optional so suites can run independently.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub equivalence: Vec<EquivalenceReport>,
    pub majorant: Vec<MajorantSection>,
    pub residuals: Vec<ConvergenceStudy>,
    pub subharmonicity: Vec<ConvergenceStudy>,
    pub maximal: Vec<MaximalBoundReport>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.residuals.iter().all(|s| s.passed) && self.subharmonicity.iter().all(|s| s.passed)
    }

    /// Names of every failing check and study.
    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .chain(self.residuals.iter().chain(&self.subharmonicity).filter(|s| !s.passed).map(|s| s.name.clone()))
            .collect()
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.equivalence.extend(other.equivalence);
        self.majorant.extend(other.majorant);
        self.residuals.extend(other.residuals);
        self.subharmonicity.extend(other.subharmonicity);
        self.maximal.extend(other.maximal);
    }
}

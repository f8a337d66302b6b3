use anyhow::{ensure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use vexh::characterize::*;
use vexh::corpus::{default_corpus, CorpusMember};
use vexh::grid::quadrature_real;
use vexh::halfspace::{conjugate_identity, eta_threshold};
use vexh::lebesgue::{holder_pairing, luxemburg_norm, modular, norm};
use vexh::maximal::{default_t_set, grand_maximal, member_maximals, MaximalMode, TestFamily};
use vexh::operators::riesz;
use vexh::{ExponentRule, Grid, GridFunction, RieszSymbol, VariableExponent};

use crate::config::{RunConfig, SubharmonicCase, Suite};

/// A flat table written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutput {
    pub report: VerificationReport,
    pub tables: Vec<Table>,
}

/// Grids, exponents and sampled corpora shared by the suites.
pub struct Context {
    pub config: RunConfig,
    pub grid_1d: Grid,
    pub grid_2d: Grid,
    pub p_1d: VariableExponent,
    pub p_2d: VariableExponent,
    pub p_low: VariableExponent,
    pub corpus_1d: Vec<CorpusMember>,
    pub corpus_2d: Vec<CorpusMember>,
    pub functions_1d: Vec<GridFunction>,
    pub functions_2d: Vec<GridFunction>,
}

pub fn corpus(config: &RunConfig, dim: usize) -> Vec<CorpusMember> {
    let mut out = if config.corpus.builtin { default_corpus(dim, config.seed) } else { vec![] };
    out.extend(if dim == 1 { config.corpus.extra_1d.clone() } else { config.corpus.extra_2d.clone() });
    out
}

fn exponent(grid: Grid, rule: &ExponentRule) -> Result<VariableExponent> {
    Ok(VariableExponent::from_rule(grid, rule.clone(), None)?.with_log_holder())
}

impl Context {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let g = &config.grid;
        let grid_1d = Grid::new(1, g.period_1d, g.points_1d)?;
        let grid_2d = Grid::new(2, g.period_2d, g.points_2d)?;
        let corpus_1d = corpus(config, 1);
        let corpus_2d = corpus(config, 2);
        ensure!(!corpus_1d.is_empty() && !corpus_2d.is_empty(), "the corpus is empty; enable builtin members or add extra ones");
        let functions_1d = corpus_1d.iter().map(|m| m.sample(&grid_1d)).collect::<vexh::Result<Vec<_>>>()?;
        let functions_2d = corpus_2d.iter().map(|m| m.sample(&grid_2d)).collect::<vexh::Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            grid_1d,
            grid_2d,
            p_1d: exponent(grid_1d, &config.exponent.one_d)?,
            p_2d: exponent(grid_2d, &config.exponent.two_d)?,
            p_low: exponent(grid_2d, &config.exponent.low_2d)?,
            corpus_1d,
            corpus_2d,
            functions_1d,
            functions_2d,
        })
    }

    fn dims(&self) -> [(usize, &Grid, &VariableExponent, &[GridFunction]); 2] {
        [(1, &self.grid_1d, &self.p_1d, &self.functions_1d), (2, &self.grid_2d, &self.p_2d, &self.functions_2d)]
    }
}

pub fn run_suite(ctx: &Context, suite: Suite) -> Result<SuiteOutput> {
    match suite {
        Suite::Lebesgue => lebesgue(ctx),
        Suite::Operators => operators(ctx),
        Suite::Halfspace => halfspace(ctx),
        Suite::Maximal => maximal(ctx),
        Suite::Characterize => characterize(ctx),
        Suite::All => {
            let mut out = SuiteOutput::default();
            for s in Suite::EACH {
                let next = run_suite(ctx, s)?;
                out.report.merge(next.report);
                out.tables.extend(next.tables);
            }
            Ok(out)
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn lebesgue(ctx: &Context) -> Result<SuiteOutput> {
    let tol = &ctx.config.tolerances;
    let mut out = SuiteOutput::default();
    let checks = &mut out.report.checks;

    let f = &ctx.functions_1d[0];
    for q in [0.5, 1.0, 2.0, 3.0] {
        let p = VariableExponent::constant(ctx.grid_1d, q)?;
        let powers: Vec<f64> = f.abs().iter().map(|m| m.powf(q)).collect();
        let exact = quadrature_real(&ctx.grid_1d, &powers).powf(1.0 / q);
        checks.push(Check::at_most(format!("lebesgue.closed_form(q={q})"), rel(norm(f, &p)?, exact), tol.closed_form));
    }

    let g = Grid::new(1, 2.0, 64)?;
    let step = VariableExponent::from_rule(g, ExponentRule::TwoLevelStep { low: 1.0, high: 2.0, split: 0.0 }, None)?;
    let two = norm(&GridFunction::constant(g, 2.0), &step)?;
    checks.push(Check::at_most("lebesgue.two_level", rel(two, 1.0 + 5f64.sqrt()), tol.two_level));

    let (modular_err, holder) = random_pairs(ctx.config.seed, ctx.config.lebesgue.random_pairs, ctx.config.lebesgue.random_points)?;
    checks.push(Check::at_most("lebesgue.modular_at_norm", modular_err, tol.modular));
    checks.push(Check::at_most("lebesgue.holder_ratio", holder, tol.holder));

    let mut table = Table::new("lebesgue_norms", &["dim", "function", "norm", "modular_at_norm"]);
    for (dim, _, p, fs) in ctx.dims() {
        for f in fs {
            let n = luxemburg_norm(f, p, vexh::lebesgue::DEFAULT_TOL)?;
            table.push(row![dim, f.tag(), n.value, n.modular_at_norm]);
        }
    }
    out.tables.push(table);
    Ok(out)
}

/// Worst `|ρ(f/‖f‖) − 1|` and worst Hölder ratio over seeded random pairs.
pub fn random_pairs(seed: u64, pairs: usize, points: usize) -> Result<(f64, f64)> {
    let grid = Grid::new(1, 4.0, points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_modular = 0.0f64;
    let mut worst_holder = 0.0f64;
    for _ in 0..pairs {
        let pv: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.3..6.0)).collect();
        let fv: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let p = VariableExponent::from_samples(grid, pv, None)?;
        let f = GridFunction::from_real(grid, fv, "random")?;
        let n = luxemburg_norm(&f, &p, vexh::lebesgue::DEFAULT_TOL)?;
        worst_modular = worst_modular.max((modular(&f.scale(1.0 / n.value), &p)?.value - 1.0).abs());

        let qv: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(1.0..5.0)).collect();
        let gv: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let q = VariableExponent::from_samples(grid, qv, None)?;
        let g = GridFunction::from_real(grid, gv, "random")?;
        worst_holder = worst_holder.max(holder_pairing(&f, &g, &q)?.ratio);
    }
    Ok((worst_modular, worst_holder))
}

pub fn operators(ctx: &Context) -> Result<SuiteOutput> {
    let tol = &ctx.config.tolerances;
    let mut out = SuiteOutput::default();
    let mut table = Table::new("maximal_bounds", &["dim", "function", "ratio", "min_gap"]);
    for (dim, _, p, fs) in ctx.dims() {
        let (squares, commute) = riesz_algebra(fs)?;
        out.report.checks.push(Check::at_most(format!("operators.riesz_sum_of_squares(n={dim})"), squares, tol.riesz_algebra));
        out.report.checks.push(Check::at_most(format!("operators.riesz_commutation(n={dim})"), commute, tol.riesz_algebra));
        let study = maximal_bound_study(fs, p)?;
        let gap = study.records.iter().map(|r| r.min_gap).fold(f64::INFINITY, f64::min);
        out.report.checks.push(Check::at_least(format!("operators.maximal_dominates(n={dim})"), gap, 0.0));
        for r in &study.records {
            table.push(row![dim, r.function, r.ratio, r.min_gap]);
        }
        out.report.maximal.push(study);
    }
    out.tables.push(table);
    Ok(out)
}

/// Worst errors of `Σ_j R_j² f = −(f − mean)` and of `R_i R_j = R_j R_i` over the corpus.
pub fn riesz_algebra(fs: &[GridFunction]) -> Result<(f64, f64)> {
    let errs = fs
        .par_iter()
        .map(|f| -> Result<(f64, f64)> {
            let n = f.grid().dim();
            let mean = f.mean();
            let mut total = GridFunction::zeros(*f.grid());
            let mut firsts = Vec::new();
            for j in 1..=n {
                let rj = riesz(f, &RieszSymbol::single(j)?)?;
                total = total.add(&riesz(&rj, &RieszSymbol::single(j)?)?)?;
                firsts.push(rj);
            }
            let squares = total.max_diff(&f.map(|z| -(z - mean)));
            let mut commute = 0.0f64;
            for i in 1..=n {
                for j in 1..=n {
                    let ij = riesz(&firsts[i - 1], &RieszSymbol::single(j)?)?;
                    let ji = riesz(&firsts[j - 1], &RieszSymbol::single(i)?)?;
                    let joint = riesz(f, &RieszSymbol::new(vec![i, j])?)?;
                    commute = commute.max(ij.max_diff(&ji)).max(ij.max_diff(&joint));
                }
            }
            Ok((squares, commute))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a.max(x), b.max(y))))
}

/// Default subharmonicity exponents: the threshold (raised to 0.1 where it is
/// 0) and the threshold plus 0.25.
pub fn subharmonic_etas(dim: usize, m: usize) -> Vec<f64> {
    let thr = eta_threshold(dim, m);
    vec![thr.max(0.1), thr + 0.25]
}

pub fn refinement(ctx: &Context, dim: usize) -> RefinementConfig {
    let h = &ctx.config.halfspace;
    let tol = &ctx.config.tolerances;
    let (period, points) = if dim == 1 { (ctx.config.grid.period_1d, h.refine_points_1d) } else { (ctx.config.grid.period_2d, h.refine_points_2d) };
    RefinementConfig {
        dim,
        period,
        points,
        levels: h.levels,
        t0: h.t0,
        heights: h.heights,
        floor: tol.residual_floor,
        min_order: tol.min_order,
        zero_set_floor: h.zero_set_floor,
    }
}

fn select<'a>(members: &'a [CorpusMember], idx: &Option<Vec<usize>>) -> Result<Vec<&'a CorpusMember>> {
    match idx {
        None => Ok(members.iter().collect()),
        Some(ix) => ix
            .iter()
            .map(|&i| members.get(i).ok_or_else(|| anyhow::anyhow!("corpus index {i} out of range (corpus has {})", members.len())))
            .collect(),
    }
}

pub fn subharmonic_case(ctx: &Context, case: &SubharmonicCase) -> Result<Vec<vexh::convergence::ConvergenceStudy>> {
    let mut cfg = refinement(ctx, case.dim);
    cfg.points = case.points;
    cfg.heights = case.heights;
    let members = select(if case.dim == 1 { &ctx.corpus_1d } else { &ctx.corpus_2d }, &case.members)?;
    let etas = case.etas.clone().unwrap_or_else(|| subharmonic_etas(case.dim, case.m));
    let mut studies = Vec::new();
    for m in members {
        for &eta in &etas {
            for &target in &case.targets {
                studies.push(subharmonicity_study(m, &cfg, case.m, eta, target)?);
            }
        }
    }
    Ok(studies)
}

pub fn halfspace(ctx: &Context) -> Result<SuiteOutput> {
    let cfg = &ctx.config;
    let tol = &cfg.tolerances;
    let mut out = SuiteOutput::default();

    let mut conj = Table::new("conjugate_identity", &["dim", "function", "j", "t", "spectral_gap", "quadrature_gap"]);
    for (dim, grid, _, fs) in ctx.dims() {
        let t = grid.period() / 16.0;
        let mut worst = 0.0f64;
        for f in fs {
            for j in 1..=dim {
                let c = conjugate_identity(f, j, t)?;
                worst = worst.max(c.spectral_gap);
                conj.push(row![dim, f.tag(), j, t, c.spectral_gap, c.quadrature_gap]);
            }
        }
        out.report.checks.push(Check::at_most(format!("halfspace.conjugate_spectral(n={dim})"), worst, tol.conjugate_spectral));
    }
    out.tables.push(conj);

    let defect = cfg.corpus.planted_defect;
    for dim in [1, 2] {
        let rc = refinement(ctx, dim);
        let members = if dim == 1 { select(&ctx.corpus_1d, &None)? } else { select(&ctx.corpus_2d, &cfg.halfspace.residual_members_2d)? };
        for m in members {
            out.report.residuals.extend(residual_suite(m, &rc, cfg.halfspace.m_max, defect)?);
        }
    }

    let majorant_grid = match cfg.halfspace.majorant_points_2d {
        Some(p) => Grid::new(2, cfg.grid.period_2d, p)?,
        None => ctx.grid_2d,
    };
    let fs_2d = if majorant_grid.same_as(&ctx.grid_2d) {
        ctx.functions_2d.clone()
    } else {
        ctx.corpus_2d.iter().map(|m| m.sample(&majorant_grid)).collect::<vexh::Result<Vec<_>>>()?
    };
    for (dim, fs, p_minus, m_list, limit) in
        [(1, ctx.functions_1d.clone(), ctx.p_1d.p_minus(), vec![1], tol.majorant_1d), (2, fs_2d, ctx.p_2d.p_minus(), vec![1, 2], tol.majorant_2d)]
    {
        let (a, t) = default_majorant_heights(fs[0].grid());
        let section = majorant_suite(&fs, p_minus, &m_list, &|m| default_eta_grid(dim, m, p_minus), &a, &t)?;
        if let Some(x) = section.max_excess {
            out.report.checks.push(Check::at_most(format!("halfspace.majorant_excess(n={dim})"), x, limit));
        }
        if let Some(g) = section.max_k_growth {
            out.report.checks.push(Check::at_most(format!("halfspace.k_integral_growth(n={dim})"), g, tol.k_growth));
        }
        out.report.majorant.push(section);
    }

    for case in &cfg.halfspace.subharmonic {
        out.report.subharmonicity.extend(subharmonic_case(ctx, case)?);
    }

    let mut res = Table::new("convergence", &["study", "level", "spacing", "residual", "order", "passed"]);
    for s in out.report.residuals.iter().chain(&out.report.subharmonicity) {
        for (k, (h, r)) in s.spacings.iter().zip(&s.residuals).enumerate() {
            let order = if k == 0 { String::new() } else { s.orders[k - 1].to_string() };
            res.push(row![s.name, k, h, r, order, s.passed]);
        }
    }
    out.tables.push(res);

    let mut maj = Table::new("majorant", &["dim", "function", "m", "eta", "a", "t", "excess"]);
    let mut kt = Table::new("k_integrals", &["dim", "function", "m", "eta", "q", "min", "max", "spread", "growth"]);
    for section in &out.report.majorant {
        let dim = section.grid.map_or(0, |g| g.dim);
        for e in &section.entries {
            maj.push(row![dim, e.function, e.m, e.eta, e.a, e.t, e.excess]);
        }
        for k in &section.k_integrals {
            kt.push(row![dim, k.function, k.m, k.eta, k.q, k.min, k.max, k.spread, k.growth]);
        }
    }
    out.tables.push(maj);
    out.tables.push(kt);
    Ok(out)
}

pub fn maximal(ctx: &Context) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut table = Table::new("grand_maximal", &["dim", "function", "order", "hardy_norm", "radial_excess", "grand_deficit"]);
    for (dim, grid, p, fs) in ctx.dims() {
        let family = TestFamily::standard(dim, p.default_order())?;
        out.report.checks.push(Check::at_least(format!("maximal.family_certified(n={dim})"), f64::from(u8::from(family.certified())), 1.0));
        let t_set = default_t_set(grid);
        let rows = fs
            .par_iter()
            .map(|f| -> Result<(String, f64, f64, f64)> {
                let radial = member_maximals(f, &family, &t_set, MaximalMode::Radial)?;
                let nt = member_maximals(f, &family, &t_set, MaximalMode::Nontangential)?;
                let grand = grand_maximal(f, &family, &t_set, MaximalMode::Radial)?;
                // radial ≤ nontangential per member, grand ≥ each member
                let mut radial_excess = f64::NEG_INFINITY;
                let mut grand_deficit = f64::NEG_INFINITY;
                for (r, n) in radial.iter().zip(&nt) {
                    for (i, (&a, &b)) in r.iter().zip(n).enumerate() {
                        radial_excess = radial_excess.max(a - b);
                        grand_deficit = grand_deficit.max(a - grand.samples()[i].re);
                    }
                }
                let hardy = hardy_norm_proxy(f, p, &family, &t_set)?;
                Ok((f.tag().to_string(), hardy, radial_excess, grand_deficit))
            })
            .collect::<Result<Vec<_>>>()?;
        let worst_radial = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
        let worst_grand = rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
        out.report.checks.push(Check::at_most(format!("maximal.radial_below_nontangential(n={dim})"), worst_radial, 1e-12));
        out.report.checks.push(Check::at_most(format!("maximal.grand_dominates_members(n={dim})"), worst_grand, 1e-12));
        for (tag, hardy, r, g) in rows {
            table.push(row![dim, tag, family.order, hardy, r, g]);
        }
    }
    out.tables.push(table);
    Ok(out)
}

pub fn characterize(ctx: &Context) -> Result<SuiteOutput> {
    let cfg = &ctx.config;
    let tol = &cfg.tolerances;
    let mut out = SuiteOutput::default();
    let runs = [
        (1, &ctx.p_1d, &ctx.functions_1d, Budget::A3),
        (2, &ctx.p_2d, &ctx.functions_2d, Budget::A3),
        (2, &ctx.p_low, &ctx.functions_2d, Budget::A4 { m: cfg.characterize.m }),
    ];
    let mut table = Table::new(
        "equivalence",
        &["dim", "budget_kind", "function", "hardy_norm", "budget", "ratio", "binding_eps", "direct_budget", "mollifier_loss", "embedding_ratio"],
    );
    for (dim, p, fs, budget) in runs {
        let mut config = EquivalenceConfig::standard(p, budget)?;
        config.eps_ladder = eps_ladder(p.grid(), cfg.characterize.eps_steps);
        let rep = equivalence_report(fs, p, &config)?;
        let label = format!("{}, n={dim}", budget.name());
        let finite = rep.records.iter().all(|r| r.budget.is_finite() && r.ratio.is_finite() && r.ratio > 0.0);
        out.report.checks.push(Check::at_least(format!("characterize.finite({label})"), f64::from(u8::from(finite)), 1.0));
        out.report.checks.push(Check::at_most(format!("characterize.band({label})"), rep.band, tol.band));
        let loss = rep.records.iter().filter_map(|r| r.mollifier_loss).reduce(f64::max);
        if let Some(loss) = loss {
            out.report.checks.push(Check::at_most(format!("characterize.mollifier_loss({label})"), loss, tol.mollifier_loss));
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &rep.records {
            table.push(row![
                dim,
                r.budget_kind,
                r.function,
                r.hardy_norm,
                r.budget,
                r.ratio,
                r.binding_eps,
                opt(r.direct_budget),
                opt(r.mollifier_loss),
                opt(r.embedding_ratio)
            ]);
        }
        out.report.equivalence.push(rep);
    }
    out.tables.push(table);
    Ok(out)
}

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use vexh::characterize::{PlantedDefect, SubharmonicTarget};
use vexh::corpus::CorpusMember;
use vexh::ExponentRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lebesgue,
    Operators,
    Halfspace,
    Maximal,
    Characterize,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Lebesgue, Suite::Operators, Suite::Halfspace, Suite::Maximal, Suite::Characterize];

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Self::EACH.to_vec(),
            s => vec![s],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lebesgue => "lebesgue",
            Suite::Operators => "operators",
            Suite::Halfspace => "halfspace",
            Suite::Maximal => "maximal",
            Suite::Characterize => "characterize",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::suite")]
    pub suite: Suite,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads; absent or 0 lets the pool decide.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub exponent: ExponentConfig,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub lebesgue: LebesgueConfig,
    #[serde(default)]
    pub halfspace: HalfspaceConfig,
    #[serde(default)]
    pub characterize: CharacterizeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub period_1d: f64,
    pub points_1d: usize,
    pub period_2d: f64,
    pub points_2d: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { period_1d: 16.0, points_1d: 2048, period_2d: 8.0, points_2d: 128 }
    }
}

/// Exponents used by the suites: `one_d` and `two_d` have `p₋ ≥ 1`, `low_2d`
/// drives the order-two budget with `p₋ ∈ (1/3, 1/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentConfig {
    pub one_d: ExponentRule,
    pub two_d: ExponentRule,
    pub low_2d: ExponentRule,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        Self {
            one_d: ExponentRule::SinBump { base: 1.5, amplitude: 0.5, period: 16.0 },
            two_d: ExponentRule::SinBump { base: 1.2, amplitude: 0.6, period: 8.0 },
            low_2d: ExponentRule::SinBump { base: 0.45, amplitude: 0.4, period: 8.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    /// Include the built-in generators.
    pub builtin: bool,
    pub extra_1d: Vec<CorpusMember>,
    pub extra_2d: Vec<CorpusMember>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted_defect: Option<PlantedDefect>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { builtin: true, extra_1d: vec![], extra_2d: vec![], planted_defect: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative error of constant-exponent norms against closed forms.
    pub closed_form: f64,
    /// Relative error of the two-level norm against `1 + √5`.
    pub two_level: f64,
    /// `|ρ(f/‖f‖) − 1|`.
    pub modular: f64,
    /// Hölder constant asserted for `∫|fg| ≤ C‖f‖‖g‖`.
    pub holder: f64,
    /// Spectral identities of the Riesz transforms.
    pub riesz_algebra: f64,
    /// Spectral path of the conjugate-Poisson identity.
    pub conjugate_spectral: f64,
    /// Minimum observed convergence order of the residuals.
    pub min_order: f64,
    /// Residuals below this count as converged.
    pub residual_floor: f64,
    pub majorant_1d: f64,
    pub majorant_2d: f64,
    /// Largest allowed `max_t K(t) / K(t_0)` of the K-integral over the lift ladder.
    pub k_growth: f64,
    /// Largest allowed `C_hi / C_lo`.
    pub band: f64,
    /// Largest allowed relative loss of the ε-ladder budget against the unmollified one.
    pub mollifier_loss: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            closed_form: 1e-10,
            two_level: 1e-8,
            modular: 1e-6,
            holder: vexh::lebesgue::HOLDER_CONSTANT,
            riesz_algebra: 1e-10,
            conjugate_spectral: 1e-12,
            min_order: 1.8,
            residual_floor: 1e-11,
            majorant_1d: 1e-6,
            majorant_2d: 1e-4,
            k_growth: 1e3,
            band: 10.0,
            mollifier_loss: 0.1,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            ("closed_form", self.closed_form),
            ("two_level", self.two_level),
            ("modular", self.modular),
            ("holder", self.holder),
            ("riesz_algebra", self.riesz_algebra),
            ("conjugate_spectral", self.conjugate_spectral),
            ("min_order", self.min_order),
            ("residual_floor", self.residual_floor),
            ("majorant_1d", self.majorant_1d),
            ("majorant_2d", self.majorant_2d),
            ("k_growth", self.k_growth),
            ("band", self.band),
            ("mollifier_loss", self.mollifier_loss),
        ];
        for (name, v) in all {
            ensure!(v > 0.0 && v.is_finite(), "tolerance {name} must be positive, got {v}");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LebesgueConfig {
    /// Random `(f, p)` pairs for the modular-at-norm and Hölder checks.
    pub random_pairs: usize,
    pub random_points: usize,
}

impl Default for LebesgueConfig {
    fn default() -> Self {
        Self { random_pairs: 128, random_points: 64 }
    }
}

/// One `(n, m)` subharmonicity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubharmonicCase {
    pub dim: usize,
    pub m: usize,
    /// Coarsest points per axis.
    pub points: usize,
    pub heights: usize,
    pub targets: Vec<SubharmonicTarget>,
    /// Indices into the corpus; all members when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<usize>>,
    /// Defaults to the threshold (at least 0.1) and the threshold plus 0.25.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HalfspaceConfig {
    /// Coarsest points per axis of the residual refinement ladders.
    pub refine_points_1d: usize,
    pub refine_points_2d: usize,
    pub levels: usize,
    pub t0: f64,
    pub heights: usize,
    /// Highest tensor rank whose gradient residuals are measured.
    pub m_max: usize,
    /// Indices of 2D members entering the residual study; all when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_members_2d: Option<Vec<usize>>,
    /// Grid for the 2D majorant sweep; the main 2D grid when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub majorant_points_2d: Option<usize>,
    pub zero_set_floor: f64,
    pub subharmonic: Vec<SubharmonicCase>,
}

impl Default for HalfspaceConfig {
    fn default() -> Self {
        use SubharmonicTarget::*;
        Self {
            refine_points_1d: 128,
            refine_points_2d: 64,
            levels: 3,
            t0: 1.0,
            heights: 3,
            m_max: 2,
            residual_members_2d: None,
            majorant_points_2d: None,
            zero_set_floor: 0.1,
            subharmonic: vec![
                SubharmonicCase { dim: 1, m: 1, points: 128, heights: 5, targets: vec![Gradient, Field], members: None, etas: None },
                SubharmonicCase { dim: 2, m: 1, points: 128, heights: 3, targets: vec![Gradient, Field], members: Some(vec![0, 2]), etas: None },
                SubharmonicCase {
                    dim: 2,
                    m: 2,
                    points: 64,
                    heights: 5,
                    targets: vec![GradientTensorNorm, Field],
                    members: Some(vec![0, 2]),
                    etas: None,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacterizeConfig {
    /// Steps per octave of the ε ladder.
    pub eps_steps: usize,
    /// Composition order of the higher-order budget.
    pub m: usize,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        Self { eps_steps: 2, m: 2 }
    }
}

mod defaults {
    pub fn seed() -> u64 {
        7
    }

    pub fn suite() -> super::Suite {
        super::Suite::All
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            bail!("config file {} does not exist", path.display());
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))?;
        cfg.validate().with_context(|| format!("invalid config file {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        let g = &self.grid;
        for (name, p) in [("points_1d", g.points_1d), ("points_2d", g.points_2d)] {
            ensure!(p >= 8 && p.is_power_of_two(), "grid.{name} must be a power of two >= 8, got {p}");
        }
        ensure!(g.period_1d > 0.0 && g.period_2d > 0.0, "grid periods must be positive");
        let h = &self.halfspace;
        ensure!(h.levels >= 3, "halfspace.levels must be at least 3 for an observed order");
        ensure!(h.zero_set_floor >= 0.0 && h.zero_set_floor < 1.0, "halfspace.zero_set_floor must lie in [0, 1)");
        for c in &h.subharmonic {
            ensure!((1..=2).contains(&c.dim) && c.m >= 1, "subharmonic case needs dim in 1..=2 and m >= 1");
            ensure!(!c.targets.is_empty(), "subharmonic case (n={}, m={}) has no targets", c.dim, c.m);
        }
        ensure!(self.characterize.eps_steps >= 1 && self.characterize.m >= 2, "characterize needs eps_steps >= 1 and m >= 2");
        ensure!(self.lebesgue.random_pairs >= 1, "lebesgue.random_pairs must be positive");
        Ok(())
    }

    /// Multiply every grid size by `factor` (a power of two).
    pub fn scale_grids(&mut self, factor: usize) -> Result<()> {
        ensure!(factor >= 1 && factor.is_power_of_two(), "grid scale must be a power of two, got {factor}");
        self.grid.points_1d *= factor;
        self.grid.points_2d *= factor;
        let h = &mut self.halfspace;
        h.refine_points_1d *= factor;
        h.refine_points_2d *= factor;
        if let Some(p) = h.majorant_points_2d.as_mut() {
            *p *= factor;
        }
        for c in &mut h.subharmonic {
            c.points *= factor;
        }
        Ok(())
    }
}

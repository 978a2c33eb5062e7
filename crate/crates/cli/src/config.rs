//! Experiment configuration files.
//!
//! One TOML file describes one run. Unknown keys are rejected, and every
//! randomized recipe needs a seed, given either on the recipe itself or as
//! the top-level `seed` (which `--seed` overrides). Recipes without their own
//! seed draw from `seed + k`, with `k` fixed per role (`g`: 0, `h`: 1, `f`: 2,
//! variation directions: 3 onwards), so the roles stay independent.

use crate::CliError;
use dilaton_core::recipes::{conformal_bump, random_smooth_scalar, random_spd, sine_scalar};
use dilaton_core::warped::{lambda_to_constants, solve_perelman_constants, solve_theta, Branch, WarpedConstants};
use dilaton_core::{GridSpec, ScalarField, StencilOrder, SymTensorField};
use serde::Deserialize;
use std::f64::consts::TAU;
use std::path::Path;

/// Initial-data family for a metric.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricRecipe {
    Flat {},
    ConformalBump { amplitude: f64, mode: u32 },
    RandomSpd { amplitude: f64, seed: Option<u64> },
}

/// Initial-data family for the dilaton.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarRecipe {
    Constant { value: f64 },
    Sine { amplitude: f64, mode: u32 },
    RandomSmooth { amplitude: f64, max_mode: u32, seed: Option<u64> },
}

fn need_seed(own: Option<u64>, global: Option<u64>, what: &str) -> Result<u64, CliError> {
    own.or(global)
        .ok_or_else(|| CliError::Config(format!("{what} is randomized and needs a seed")))
}

impl MetricRecipe {
    pub fn is_random(&self) -> bool {
        matches!(self, Self::RandomSpd { .. })
    }

    pub fn build(&self, grid: &GridSpec, seed: Option<u64>) -> Result<SymTensorField, CliError> {
        Ok(match *self {
            Self::Flat {} => SymTensorField::identity(grid),
            Self::ConformalBump { amplitude, mode } => conformal_bump(grid, amplitude, mode),
            Self::RandomSpd { amplitude, seed: own } => {
                if !(0.0..1.0).contains(&amplitude) {
                    return Err(CliError::Config(format!(
                        "random-spd amplitude {amplitude} outside [0, 1)"
                    )));
                }
                random_spd(grid, amplitude, need_seed(own, seed, "random-spd metric")?)
            }
        })
    }
}

impl ScalarRecipe {
    pub fn build(&self, grid: &GridSpec, seed: Option<u64>) -> Result<ScalarField, CliError> {
        Ok(match *self {
            Self::Constant { value } => ScalarField::constant(grid, value),
            Self::Sine { amplitude, mode } => sine_scalar(grid, amplitude, mode),
            Self::RandomSmooth {
                amplitude,
                max_mode,
                seed: own,
            } => random_smooth_scalar(grid, amplitude, max_mode, need_seed(own, seed, "random-smooth dilaton")?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchChoice {
    Plus,
    Minus,
    Both,
}

/// Which warping exponents to use.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstantsChoice {
    /// Both constraints; `branch` selects the root of the quadratic for `θ = A/B`.
    Perelman { branch: BranchChoice },
    /// Normalisation line only, with `Z(A, B) = λ`; every admissible pair.
    Lambda { value: f64 },
}

impl ConstantsChoice {
    /// Labeled constant pairs for dimensions `(m, n)`.
    pub fn resolve(&self, m: usize, n: usize) -> Result<Vec<(String, WarpedConstants)>, CliError> {
        match *self {
            Self::Perelman { branch } => {
                let single = solve_theta(m, n)?.len() == 1;
                let wanted: Vec<(&str, Branch)> = match branch {
                    BranchChoice::Plus => vec![("plus", Branch::Plus)],
                    BranchChoice::Minus => vec![("minus", Branch::Minus)],
                    BranchChoice::Both if single => vec![("plus", Branch::Plus)],
                    BranchChoice::Both => vec![("plus", Branch::Plus), ("minus", Branch::Minus)],
                };
                wanted
                    .into_iter()
                    .map(|(label, b)| Ok((label.to_string(), solve_perelman_constants(m, n, b)?)))
                    .collect()
            }
            Self::Lambda { value } => Ok(lambda_to_constants(m, n, value)?
                .into_iter()
                .enumerate()
                .map(|(i, c)| (format!("root{i}"), c))
                .collect()),
        }
    }
}

fn default_period() -> f64 {
    TAU
}

fn default_order() -> usize {
    2
}

/// Warped product `(M × N, e^{−Af} g ⊕ e^{−Bf} h)` on a refinement sequence.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductConfig {
    pub m: usize,
    pub n: usize,
    pub constants: ConstantsChoice,
    /// Points per axis, doubling at each step. Both factors are refined together
    /// unless `n_resolution` pins the `N` grid.
    pub resolutions: Vec<usize>,
    pub n_resolution: Option<usize>,
    #[serde(default = "default_period")]
    pub period_m: f64,
    #[serde(default = "default_period")]
    pub period_n: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    pub g: MetricRecipe,
    pub h: MetricRecipe,
    pub f: ScalarRecipe,
    /// Rescale `h` to unit total volume.
    #[serde(default)]
    pub unit_volume_n: bool,
}

impl ProductConfig {
    pub fn stencil(&self) -> Result<StencilOrder, CliError> {
        Ok(StencilOrder::from_order(self.order)?)
    }

    pub fn grids(&self, resolution: usize) -> Result<(GridSpec, GridSpec), CliError> {
        let gm = GridSpec::cube(self.m, resolution, self.period_m)?;
        let gn = GridSpec::cube(self.n, self.n_resolution.unwrap_or(resolution), self.period_n)?;
        Ok((gm, gn))
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.resolutions.is_empty() {
            return Err(CliError::Config("resolutions must not be empty".into()));
        }
        if self.resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(CliError::Config(format!(
                "resolutions {:?} must double at each step",
                self.resolutions
            )));
        }
        Ok(())
    }
}

fn default_draws() -> usize {
    20
}

fn default_variation_tolerance() -> f64 {
    1e-4
}

/// Which closed form the numeric derivative is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationFormula {
    /// `−2 ∫ ⟨S_λ, δg⟩ e^{−f} dμ` alone.
    #[default]
    AsStated,
    /// Adds the `λ`-dependent trace term.
    WithTraceTerm,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationConfig {
    #[serde(default = "default_draws")]
    pub draws: usize,
    pub amplitude: f64,
    pub max_mode: u32,
    /// Draw `k` uses seed `seed + k`; falls back to the top-level seed.
    pub seed: Option<u64>,
    #[serde(default = "default_variation_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub formula: VariationFormula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorChoice {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Coupled,
    Decoupled,
}

fn default_one() -> f64 {
    1.0
}

fn default_stride() -> usize {
    1
}

fn default_divergence_limit() -> f64 {
    10.0
}

fn default_constraint_tolerance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub dim: usize,
    pub resolution: usize,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub lambda: f64,
    /// Defaults to `0.1 h²`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub integrator: IntegratorChoice,
    pub mode: ModeChoice,
    #[serde(default = "default_one")]
    pub filter_cutoff: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_divergence_limit")]
    pub divergence_limit: f64,
    /// Largest accepted relative drift of `e^{−f} √det g` (coupled mode).
    #[serde(default = "default_constraint_tolerance")]
    pub constraint_tolerance: f64,
    pub g: MetricRecipe,
    /// Initial dilaton (coupled) or terminal dilaton (decoupled).
    pub f: ScalarRecipe,
}

fn default_min_order() -> f64 {
    1.8
}

/// Pass criteria for refinement studies.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_min_order")]
    pub min_order: f64,
    /// Bound on the largest error at the finest resolution.
    pub max_error: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            min_order: default_min_order(),
            max_error: None,
        }
    }
}

/// Top-level file. Exactly the section the command needs must be present.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub product: Option<ProductConfig>,
    pub variation: Option<VariationConfig>,
    pub flow: Option<FlowSection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(p) = &cfg.product {
            p.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Replaces the top-level seed.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if seed.is_some() {
            self.seed = seed;
        }
        self
    }

    pub fn product(&self) -> Result<&ProductConfig, CliError> {
        self.product
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [product] section".into()))
    }

    pub fn variation(&self) -> Result<&VariationConfig, CliError> {
        self.variation
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [variation] section".into()))
    }

    pub fn flow(&self) -> Result<&FlowSection, CliError> {
        self.flow
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [flow] section".into()))
    }
}

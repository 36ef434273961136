//! TOML experiment configuration.

use serde::{Deserialize, Serialize};

use crate::boundary::VisualConfig;
use crate::error::{HoroError, Result};
use crate::groups::{orbit_net, FiniteSupportMeasure};
use crate::spaces::{
    Bord, ExtendedReal, FreeGroupTree, InfiniteWord, Mobius, Ray, RayPermutation, Space, StarSpace, UpperHalfPlane,
    Word,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub space: SpaceSpec,
    pub visual: Option<VisualSpec>,
    pub measure: MeasureSpec,
    /// Largest number of products materialized in one convolution step.
    pub cap: Option<usize>,
    pub validate_space: Option<ValidateSpec>,
    pub drift: Option<DriftSpec>,
    pub hmet: Option<HmetSpec>,
    pub stationary: Option<StationarySpec>,
    pub contraction: Option<ContractionSpec>,
    pub furstenberg: Option<FurstenbergSpec>,
    pub continuity: Option<ContinuitySpec>,
    pub ldt: Option<LdtSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Tree { rank: u8 },
    /// `delta` replaces the calibrated four-point constant of the model.
    HalfPlane {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Star { rays: u32 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualSpec {
    pub b: Option<f64>,
    pub delta: Option<f64>,
}

/// A word (`"aB"`), a matrix `[a, b, c, d]` or a ray permutation `[1, 0, 2]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AtomSpec {
    Text(String),
    Numbers(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub atoms: Vec<AtomSpec>,
    /// Uniform when omitted.
    pub weights: Option<Vec<f64>>,
}

fn default_samples() -> u64 {
    100_000
}

fn default_bound_samples() -> u64 {
    10_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_bound_samples")]
    pub bound_samples: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub n: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmetSpec {
    pub n: usize,
    /// Defaults to `n / 2`.
    pub m: Option<usize>,
    pub trials: usize,
    pub probe: String,
}

fn default_alpha_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySpec {
    pub n: usize,
    pub trials: usize,
    pub starts: Vec<String>,
    #[serde(default = "default_alpha_one")]
    pub alpha: f64,
    /// Resolution of the discrepancy cells; defaults per space.
    pub level: Option<u32>,
}

fn default_n_max() -> usize {
    64
}

fn default_alpha_exponents() -> u32 {
    8
}

fn default_net_depth() -> usize {
    2
}

fn default_mc_samples() -> usize {
    10_000
}

fn default_half() -> f64 {
    0.5
}

fn default_submult_total() -> usize {
    6
}

fn default_pair_depth() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionSpec {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Grid `α = 2^{−1}, …, 2^{−alpha_exponents}`.
    #[serde(default = "default_alpha_exponents")]
    pub alpha_exponents: u32,
    /// Depth of the orbit net whose points and fixed ideals anchor the
    /// horofunctions.
    #[serde(default = "default_net_depth")]
    pub horofunction_depth: usize,
    #[serde(default = "default_mc_samples")]
    pub samples: usize,
    #[serde(default = "default_half")]
    pub submult_alpha: f64,
    #[serde(default = "default_submult_total")]
    pub submult_max_total: usize,
    #[serde(default = "default_pair_depth")]
    pub pair_depth: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FurstenbergSpec {
    pub chain_n: usize,
    pub chain_trials: usize,
    pub start: String,
    pub drift_n: usize,
    pub drift_trials: usize,
    /// Explicit stationary atoms (uniform weights) replacing the chain estimate.
    pub stationary_atoms: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuitySpec {
    #[serde(default = "default_half")]
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub lambda: f64,
    pub direction: Vec<f64>,
    pub tilts: Vec<f64>,
    #[serde(default = "default_net_depth")]
    pub net_depth: usize,
    #[serde(default = "default_max_power")]
    pub max_power: usize,
}

fn default_max_power() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdtSpec {
    pub epsilons: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub probe: Option<String>,
    pub drift: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HoroError::Config(e.to_string()))
    }
}

/// Space-specific parsing of config strings and default nets.
pub trait CliSpace: Space {
    fn parse_atom(&self, spec: &AtomSpec) -> Result<Self::Isometry>;
    fn parse_boundary(&self, text: &str) -> Result<Self::Ideal>;
    /// Boundary points from which pair nets are built.
    fn pair_net_ideals(&self, mu: &FiniteSupportMeasure<Self>, depth: usize) -> Vec<Self::Ideal>;
    fn default_level(&self) -> u32;

    fn build_measure(&self, spec: &MeasureSpec) -> Result<FiniteSupportMeasure<Self>> {
        let atoms = spec.atoms.iter().map(|a| self.parse_atom(a)).collect::<Result<Vec<_>>>()?;
        match &spec.weights {
            Some(w) => FiniteSupportMeasure::new(self, atoms, w.clone()),
            None => FiniteSupportMeasure::uniform(self, atoms),
        }
    }
}

fn orbit_ideals<S: Space>(space: &S, mu: &FiniteSupportMeasure<S>, depth: usize) -> Vec<S::Ideal> {
    orbit_net(space, mu, depth)
        .into_iter()
        .filter_map(|p| match p {
            Bord::Ideal(xi) => Some(xi),
            Bord::Point(_) => None,
        })
        .collect()
}

fn wrong_atom(space: &str, spec: &AtomSpec) -> HoroError {
    HoroError::Config(format!("{spec:?} is not an isometry of the {space}"))
}

impl CliSpace for FreeGroupTree {
    fn parse_atom(&self, spec: &AtomSpec) -> Result<Word> {
        match spec {
            AtomSpec::Text(s) => self.parse_word(s),
            other => Err(wrong_atom("tree", other)),
        }
    }

    fn parse_boundary(&self, text: &str) -> Result<InfiniteWord> {
        self.parse_ideal(text)
    }

    fn pair_net_ideals(&self, _mu: &FiniteSupportMeasure<Self>, depth: usize) -> Vec<InfiniteWord> {
        self.limit_ideals(depth)
    }

    fn default_level(&self) -> u32 {
        4
    }
}

impl CliSpace for UpperHalfPlane {
    fn parse_atom(&self, spec: &AtomSpec) -> Result<Mobius> {
        match spec {
            AtomSpec::Numbers(v) if v.len() == 4 => Mobius::new(v[0], v[1], v[2], v[3]),
            other => Err(wrong_atom("half-plane", other)),
        }
    }

    fn parse_boundary(&self, text: &str) -> Result<ExtendedReal> {
        ExtendedReal::parse(text)
    }

    fn pair_net_ideals(&self, mu: &FiniteSupportMeasure<Self>, depth: usize) -> Vec<ExtendedReal> {
        orbit_ideals(self, mu, depth)
    }

    fn default_level(&self) -> u32 {
        7
    }
}

impl CliSpace for StarSpace {
    fn parse_atom(&self, spec: &AtomSpec) -> Result<RayPermutation> {
        match spec {
            AtomSpec::Numbers(v) if v.iter().all(|x| x.fract() == 0.0 && *x >= 0.0) => {
                self.permutation(v.iter().map(|&x| x as u32).collect())
            }
            other => Err(wrong_atom("star space", other)),
        }
    }

    fn parse_boundary(&self, text: &str) -> Result<Ray> {
        let ray: u32 = text.trim().parse().map_err(|_| HoroError::Config(format!("'{text}' is not a ray index")))?;
        self.ideal(ray)
    }

    fn pair_net_ideals(&self, _mu: &FiniteSupportMeasure<Self>, _depth: usize) -> Vec<Ray> {
        (0..self.rays()).map(Ray).collect()
    }

    fn default_level(&self) -> u32 {
        0
    }
}

/// Visual base and four-point constant, defaulting to the space's own.
pub fn visual_config<S: Space>(space: &S, spec: Option<&VisualSpec>) -> Result<VisualConfig> {
    let delta = spec.and_then(|v| v.delta).unwrap_or(space.delta());
    if delta < space.delta() {
        return Err(HoroError::Config(format!(
            "delta {delta} is below the four-point constant {} of the space",
            space.delta()
        )));
    }
    match spec.and_then(|v| v.b) {
        Some(b) => VisualConfig::new(b, delta),
        None => VisualConfig::default_for(delta),
    }
}

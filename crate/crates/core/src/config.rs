//! Run configuration: one JSON file drives every subcommand.
//!
//! Parsing is strict. Unknown keys are rejected with the path to the offending
//! field and, when a known key is close, a suggestion. Defaults are filled in
//! and the resolved config is what gets embedded in every artifact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Binning;
use crate::gcmc::{ChainSpec, MoveMix, MIN_BLOCKS};
use crate::inverse::SolverConfig;
use crate::oracle::{Oracle, QuadratureSpec, DEFAULT_COST_CEILING, DEFAULT_TOLERANCE};
use crate::potentials::{AdmissibilityCertificate, PairPotential, SpaceDim};
use crate::system::{Boundary, BoxSpec};
use crate::FORMAT_VERSION;

fn one() -> usize {
    1
}

fn free() -> Boundary {
    Boundary::Free
}

fn default_steps() -> u64 {
    100_000
}

fn default_burn_in() -> u64 {
    10_000
}

fn default_thin() -> u64 {
    10
}

fn default_blocks() -> usize {
    MIN_BLOCKS
}

fn default_activity_ceiling() -> f64 {
    5.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    pub bins: usize,
    /// Defaults to `min(ℓ, 4σ)` for the configured potential.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig { bins: crate::estimators::DEFAULT_BINS, r_max: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub quadrature: QuadratureSpec,
    /// Truncation tolerance on the grand partition series.
    pub tolerance: f64,
    /// Ceiling on quadrature node evaluations.
    pub cost_ceiling: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            quadrature: QuadratureSpec::default(),
            tolerance: DEFAULT_TOLERANCE,
            cost_ceiling: DEFAULT_COST_CEILING,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub dim: usize,
    /// Half-width of the box `Λ_ℓ = [-ℓ, ℓ)^d`.
    pub ell: f64,
    #[serde(default = "free")]
    pub boundary: Boundary,
    pub beta: f64,
    pub mu: f64,
    #[serde(default = "PairPotential::ideal")]
    pub potential: PairPotential,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<AdmissibilityCertificate>,
    #[serde(default)]
    pub move_mix: MoveMix,
    /// Initial displacement step; tuned during burn-in.
    #[serde(default)]
    pub max_displacement: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: u64,
    #[serde(default = "default_thin")]
    pub thin: u64,
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Independent chains for `simulate` and `uniqueness`.
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default)]
    pub binning: BinningConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// `z|Λ|` above this prints a warning: the run may be outside the gas phase.
    #[serde(default = "default_activity_ceiling")]
    pub activity_ceiling: f64,
}

/// Words people reach for that map onto a differently named key.
const ALIASES: &[(&str, &str, &str)] = &[
    ("temperature", "beta", " (inverse temperature, k_B = 1)"),
    ("temp", "beta", " (inverse temperature, k_B = 1)"),
    ("chemical_potential", "mu", ""),
    ("activity", "mu", " (z = exp(beta mu))"),
    ("z", "mu", " (z = exp(beta mu))"),
    ("l", "ell", ""),
    ("half_width", "ell", ""),
    ("d", "dim", ""),
    ("dimension", "dim", ""),
    ("boundary_conditions", "boundary", ""),
    ("nsteps", "steps", ""),
    ("n_steps", "steps", ""),
    ("burnin", "burn_in", ""),
];

/// Best guess for a mistyped key among `expected`, formatted for a message.
pub fn suggest_key(unknown: &str, expected: &[&str]) -> Option<String> {
    let lower = unknown.to_ascii_lowercase();
    for (alias, key, note) in ALIASES {
        let close = lower == *alias || strsim::normalized_damerau_levenshtein(&lower, alias) >= 0.8;
        if close && expected.contains(key) {
            return Some(format!("`{key}`{note}"));
        }
    }
    expected
        .iter()
        .map(|e| (strsim::normalized_damerau_levenshtein(&lower, e), *e))
        .filter(|(s, _)| *s >= 0.6)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| format!("`{e}`"))
}

/// Pulls the key and the expected list out of serde's unknown-field message.
fn unknown_field_hint(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    let (name, tail) = rest.split_once('`')?;
    let expected: Vec<&str> = tail.split('`').skip(1).step_by(2).collect();
    Some(match suggest_key(name, &expected) {
        Some(s) => format!("unknown key `{name}`; did you mean {s}?"),
        None => format!("unknown key `{name}`; known keys: {}", expected.join(", ")),
    })
}

/// Deserializes `T` from JSON text, reporting the field path on failure.
pub fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let raw = inner.to_string();
        let message = raw.split(" at line ").next().unwrap_or(&raw).to_string();
        let message = unknown_field_hint(&message).unwrap_or(message);
        let field = if path == "." || path.is_empty() { "<root>".to_string() } else { path };
        Error::config(field, message)
    })?;
    de.end().map_err(|e| Error::config("<root>", e.to_string()))?;
    Ok(value)
}

/// Reads and parses a JSON file; a missing file is a config error.
pub fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read file: {e}")))?;
    from_json_str(&text)
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = from_json_str(text)?;
        cfg.resolve()
    }

    /// Parses, validates and fills defaults.
    pub fn parse_file(path: &Path) -> Result<RunConfig> {
        let cfg: RunConfig = read_json_file(path)?;
        cfg.resolve()
    }

    /// Applies `--seed`; a seed from either source is mandatory for sampling.
    pub fn with_seed(mut self, seed: Option<u64>) -> Result<RunConfig> {
        if seed.is_some() {
            self.seed = seed;
        }
        if self.seed.is_none() {
            return Err(Error::config("seed", "no seed given: pass --seed or set `seed` in the config"));
        }
        Ok(self)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::config("seed", "no seed given: pass --seed or set `seed` in the config"))
    }

    fn resolve(mut self) -> Result<RunConfig> {
        SpaceDim::new(self.dim).map_err(|e| Error::config("dim", e.to_string()))?;
        if !(self.ell.is_finite() && self.ell > 0.0) {
            return Err(Error::config("ell", "must be positive and finite"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::config("beta", format!("must be positive and finite, got {}", self.beta)));
        }
        if !self.mu.is_finite() {
            return Err(Error::config("mu", "must be finite"));
        }
        if self.replicas == 0 {
            return Err(Error::config("replicas", "must be at least 1"));
        }
        if !(self.activity_ceiling > 0.0) {
            return Err(Error::config("activity_ceiling", "must be positive"));
        }
        let bx = self.box_spec()?;
        if self.max_displacement.is_none() {
            let probe = ChainSpec::new(bx, self.beta, self.mu, self.potential.clone(), 1, 0, 1, 0);
            self.max_displacement = Some(probe.max_displacement);
        }
        if self.binning.r_max.is_none() {
            self.binning.r_max = Some(Binning::default_for(&bx, &self.potential).r_max);
        }
        self.binning()?;
        self.chain_spec(0)?.validate().map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::config("potential", other.to_string()),
        })?;
        self.oracle.quadrature.validate().map_err(|e| prefix(e, "oracle"))?;
        if !(self.oracle.tolerance > 0.0) {
            return Err(Error::config("oracle.tolerance", "must be positive"));
        }
        if !(self.oracle.cost_ceiling > 0.0) {
            return Err(Error::config("oracle.cost_ceiling", "must be positive"));
        }
        let s = &self.solver;
        if s.max_iters == 0 {
            return Err(Error::config("solver.max_iters", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&s.alpha) {
            return Err(Error::config("solver.alpha", "must lie in [0, 1]"));
        }
        if s.replicas == 0 {
            return Err(Error::config("solver.replicas", "must be at least 1"));
        }
        if s.tolerance.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::config("solver.tolerance", "must be positive"));
        }
        Ok(self)
    }

    pub fn box_spec(&self) -> Result<BoxSpec> {
        let dim = SpaceDim::new(self.dim).map_err(|e| Error::config("dim", e.to_string()))?;
        BoxSpec::new(dim, self.ell, self.boundary).map_err(|e| Error::config("ell", e.to_string()))
    }

    pub fn binning(&self) -> Result<Binning> {
        let r_max = match self.binning.r_max {
            Some(r) => r,
            None => Binning::default_for(&self.box_spec()?, &self.potential).r_max,
        };
        Binning::new(self.binning.bins, r_max)
    }

    /// Chain spec with `seed`; `potential` and everything else from the config.
    pub fn chain_spec(&self, seed: u64) -> Result<ChainSpec> {
        let mut spec = ChainSpec::new(
            self.box_spec()?,
            self.beta,
            self.mu,
            self.potential.clone(),
            self.steps,
            self.burn_in,
            self.thin,
            seed,
        );
        spec.move_mix = self.move_mix;
        spec.blocks = self.blocks;
        if let Some(d) = self.max_displacement {
            spec.max_displacement = d;
        }
        Ok(spec)
    }

    pub fn build_oracle(&self) -> Result<Oracle> {
        Oracle::with_limits(
            self.box_spec()?,
            self.beta,
            self.mu,
            self.potential.clone(),
            self.oracle.quadrature,
            self.oracle.tolerance,
            self.oracle.cost_ceiling,
        )
    }

    /// Non-fatal concerns about the run, printed before any computation.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Ok(bx) = self.box_spec() {
            let zv = (self.beta * self.mu).exp() * bx.volume();
            if zv > self.activity_ceiling {
                out.push(format!(
                    "WARNING: z|Λ| = {zv:.3} exceeds the activity ceiling {}; the run may be outside the gas phase",
                    self.activity_ceiling
                ));
            }
        }
        out
    }
}

fn prefix(e: Error, at: &str) -> Error {
    match e {
        Error::Config { field, message } => Error::config(format!("{at}.{field}"), message),
        other => other,
    }
}

/// Wrapper that makes every JSON artifact self-describing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub format_version: String,
    pub config: RunConfig,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Artifact<T> {
    pub fn new(config: &RunConfig, body: T) -> Self {
        Artifact { format_version: FORMAT_VERSION.to_string(), config: config.clone(), body }
    }
}

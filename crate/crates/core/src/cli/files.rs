//! State, configuration and basis file formats (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::bases::{hadamard_mub, BasisSet};
use crate::conveyance::ConveyMode;
use crate::estimator::{Backend, Outcomes};
use crate::qcore::{ComplexMatrix, DensityMatrix, PureState};
use crate::scalar::{cx, Cx};

/// Complex number on disk: `[re, im]`.
pub type Pair = [f64; 2];

fn to_cx(p: &Pair) -> Cx<f64> {
    cx(p[0], p[1])
}

fn to_pair(z: &Cx<f64>) -> Pair {
    [z.re, z.im]
}

/// A state given either densely or as `ρ = Σ p_n |ψ_n⟩⟨ψ_n|`.
///
/// Exactly one of `entries` and `terms` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<Term>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub p: f64,
    pub amplitudes: Vec<Pair>,
}

const WEIGHT_SUM_TOL: f64 = 1e-9;

impl StateFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| CliError::parse(origin, &e))?;
        match (&file.entries, &file.terms) {
            (Some(_), None) | (None, Some(_)) => Ok(file),
            _ => Err(CliError::Usage(format!(
                "{}: a state file needs exactly one of `entries` or `terms`",
                origin.display()
            ))),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::parse(&read(path)?, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state files always serialize")
    }

    pub fn from_density(rho: &DensityMatrix<f64>) -> Self {
        Self { dims: rho.dims().to_vec(), entries: Some(rho.matrix().entries().iter().map(to_pair).collect()), terms: None }
    }

    /// Builds the density matrix, checking every state invariant.
    pub fn density(&self) -> Result<DensityMatrix<f64>, CliError> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(CliError::Invariant("invariant-violation: dims must be nonempty and positive".into()));
        }
        super::check_size(&self.dims)?;
        let total: usize = self.dims.iter().product();
        if let Some(entries) = &self.entries {
            let m = ComplexMatrix::new(total, total, entries.iter().map(to_cx).collect())?;
            return Ok(DensityMatrix::new(self.dims.clone(), m)?);
        }
        let terms = self.terms.as_deref().unwrap_or_default();
        if terms.is_empty() {
            return Err(CliError::Invariant("invariant-violation: decomposition has no terms".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.p.is_nan() || t.p <= 0.0) {
            return Err(CliError::Invariant(format!("invariant-violation: decomposition weight {} is not positive", t.p)));
        }
        let sum: f64 = terms.iter().map(|t| t.p).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(CliError::Invariant(format!("invariant-violation: decomposition weights sum to {sum}, not 1")));
        }
        let members = terms
            .iter()
            .map(|t| Ok((t.p, PureState::new(self.dims.clone(), t.amplitudes.iter().map(to_cx).collect())?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(DensityMatrix::from_mixture(&members)?)
    }
}

/// Which conveyance and broadcast readings to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeSpec {
    Named(OutcomeKeyword),
    Fixed(Outcomes),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKeyword {
    /// All readings zero.
    Zero,
    /// Every conveyance reading combined with every common broadcast reading.
    Enumerate,
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        OutcomeSpec::Named(OutcomeKeyword::Zero)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisSpec {
    /// `"hadamard"`: tensor products of `(|0⟩ ± |1⟩)/√2`.
    Builtin(String),
    File { file: PathBuf },
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec::Builtin("hadamard".into())
    }
}

/// Run configuration; every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub backend: Backend,
    pub mode: ConveyMode,
    pub g: f64,
    pub sigma: f64,
    pub outcomes: OutcomeSpec,
    pub postselection_basis: BasisSpec,
    pub seed: u64,
    pub skip_broadcast: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Analytic,
            mode: ConveyMode::Idealized,
            g: 1e-3,
            sigma: std::f64::consts::FRAC_1_SQRT_2,
            outcomes: OutcomeSpec::default(),
            postselection_basis: BasisSpec::default(),
            seed: 0,
            skip_broadcast: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = serde_json::from_str(&read(path)?).map_err(|e| CliError::parse(path, &e))?;
        if let BasisSpec::File { file } = &mut cfg.postselection_basis {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(CliError::Invariant(format!("invariant-violation: g must be positive, got {}", self.g)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(CliError::Invariant(format!("invariant-violation: sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn basis(&self, dims: &[usize]) -> Result<BasisSet<f64>, CliError> {
        match &self.postselection_basis {
            BasisSpec::Builtin(name) if name == "hadamard" => {
                if dims.iter().any(|&d| d != 2) {
                    return Err(CliError::Usage("the hadamard basis needs qubit parties".into()));
                }
                Ok(hadamard_mub(dims.len())?)
            }
            BasisSpec::Builtin(name) => Err(CliError::Usage(format!("unknown postselection basis `{name}`"))),
            BasisSpec::File { file } => BasisFile::load(file)?.basis(),
        }
    }
}

/// Custom postselection basis on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    pub dims: Vec<usize>,
    pub vectors: Vec<BasisVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisVector {
    pub label: String,
    pub amplitudes: Vec<Pair>,
    /// Per-party product factors; required by the analytic backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<Vec<Pair>>>,
}

impl BasisFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        serde_json::from_str(&read(path)?).map_err(|e| CliError::parse(path, &e))
    }

    pub fn basis(&self) -> Result<BasisSet<f64>, CliError> {
        let vectors = self
            .vectors
            .iter()
            .map(|v| PureState::new(self.dims.clone(), v.amplitudes.iter().map(to_cx).collect()))
            .collect::<crate::Result<Vec<_>>>()?;
        let labels = self.vectors.iter().map(|v| v.label.clone()).collect();
        let set = BasisSet::new(self.dims.clone(), vectors, labels)?;
        if self.vectors.iter().all(|v| v.factors.is_some()) {
            let factors = self
                .vectors
                .iter()
                .map(|v| {
                    let fs = v.factors.as_ref().expect("checked above");
                    if fs.len() != self.dims.len() {
                        return Err(CliError::Invariant(format!("invariant-violation: vector `{}` needs one factor per party", v.label)));
                    }
                    fs.iter()
                        .zip(&self.dims)
                        .map(|(f, &d)| Ok(PureState::new(vec![d], f.iter().map(to_cx).collect())?))
                        .collect::<Result<Vec<_>, CliError>>()
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(set.with_factors(factors)?)
        } else {
            Ok(set)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

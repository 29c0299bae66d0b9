//! Run configuration: a flat JSON object with defaults matching the
//! desk-scale study (N = 41, nu t in [0, 10] on 501 points).

use std::fmt;

use ptdimer_core::{
    lattice::{Boundary, LatticeParams, ModelKind},
    propagation::InitialSpec,
    transitions::QuadratureSettings,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Evolve,
    Sweep,
    Meandisp,
    AsymptoticsCompare,
    PhaseDiagram,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Meandisp => "meandisp",
            Command::AsymptoticsCompare => "asymptotics-compare",
            Command::PhaseDiagram => "phase-diagram",
        };
        f.write_str(s)
    }
}

/// Configuration file schema. Unknown keys are rejected; every field has a
/// default so a minimal config can be a bare `{}` plus a command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the CLI subcommand when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,

    #[serde(default = "default_n_dimers")]
    pub n_dimers: usize,
    #[serde(default = "default_one")]
    pub nu: f64,
    #[serde(default = "default_one")]
    pub nu_prime: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// "open" or "periodic".
    #[serde(default = "default_boundary")]
    pub boundary: String,
    /// "pt-symmetric" or "lossy".
    #[serde(default = "default_model")]
    pub model: String,

    /// Initial dimer index (0 = central dimer).
    #[serde(default)]
    pub dimer: i64,
    /// Mixing angle: 0 puts the state on the gain site, pi/2 on the loss site.
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,

    /// Time grid for trajectory commands, in units of 1/nu.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_n_time_points")]
    pub n_time_points: usize,

    /// Quadrature overrides for mean-displacement integrals; when absent the
    /// horizon and step are derived from the lattice parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_n_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_tail_tol: Option<f64>,

    /// Sweep axes (ratios nu'/nu and gamma/nu).
    #[serde(default = "default_nu_prime_list")]
    pub nu_prime_list: Vec<f64>,
    #[serde(default = "default_gamma_list")]
    pub gamma_list: Vec<f64>,

    #[serde(default)]
    pub disorder_strength: f64,
    #[serde(default = "default_n_realizations")]
    pub n_realizations: usize,

    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_dimers() -> usize {
    41
}
fn default_one() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    0.5
}
fn default_boundary() -> String {
    "open".into()
}
fn default_model() -> String {
    "pt-symmetric".into()
}
fn default_t_max() -> f64 {
    10.0
}
fn default_n_time_points() -> usize {
    501
}
fn default_nu_prime_list() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 1.5, 2.0]
}
fn default_gamma_list() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}
fn default_n_realizations() -> usize {
    20
}
fn default_out_dir() -> String {
    "out".into()
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config must deserialize")
    }
}

/// A configuration problem: either a schema violation or a failed
/// precondition of the underlying model. Always maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid JSON: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.lattice_params()?;
        if !(self.t_max > 0.0) {
            return Err(ConfigError(format!("t_max: must be > 0, got {}", self.t_max)));
        }
        if self.n_time_points < 2 {
            return Err(ConfigError(format!(
                "n_time_points: need at least 2, got {}",
                self.n_time_points
            )));
        }
        if let Some(t) = self.quad_t_max {
            if !(t > 0.0) {
                return Err(ConfigError(format!("quad_t_max: must be > 0, got {t}")));
            }
        }
        if let Some(tol) = self.quad_tail_tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(ConfigError(format!(
                    "quad_tail_tol: must lie in (0, 1), got {tol}"
                )));
            }
        }
        for (name, xs) in [
            ("nu_prime_list", &self.nu_prime_list),
            ("gamma_list", &self.gamma_list),
        ] {
            if xs.is_empty() {
                return Err(ConfigError(format!("{name}: must not be empty")));
            }
            if xs.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(ConfigError(format!("{name}: entries must be finite and >= 0")));
            }
        }
        if !(self.disorder_strength >= 0.0) {
            return Err(ConfigError(format!(
                "disorder_strength: must be >= 0, got {}",
                self.disorder_strength
            )));
        }
        Ok(())
    }

    pub fn boundary(&self) -> Result<Boundary, ConfigError> {
        match self.boundary.as_str() {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(ConfigError(format!(
                "boundary: expected \"open\" or \"periodic\", got \"{other}\""
            ))),
        }
    }

    pub fn model(&self) -> Result<ModelKind, ConfigError> {
        match self.model.as_str() {
            "pt-symmetric" => Ok(ModelKind::PtSymmetric),
            "lossy" => Ok(ModelKind::Lossy),
            other => Err(ConfigError(format!(
                "model: expected \"pt-symmetric\" or \"lossy\", got \"{other}\""
            ))),
        }
    }

    pub fn lattice_params(&self) -> Result<LatticeParams<f64>, ConfigError> {
        let boundary = self.boundary()?;
        let model = self.model()?;
        LatticeParams::new(self.n_dimers, self.nu, self.nu_prime, self.gamma, boundary, model)
            .map_err(|e| ConfigError(format!("n_dimers/nu/nu_prime/gamma: {e}")))
    }

    pub fn initial_spec(&self) -> InitialSpec<f64> {
        InitialSpec {
            dimer: self.dimer,
            theta: self.theta,
            phi: self.phi,
        }
    }

    pub fn quadrature(
        &self,
        params: &LatticeParams<f64>,
    ) -> Result<QuadratureSettings<f64>, ConfigError> {
        let derived = QuadratureSettings::for_params(params)
            .map_err(|e| ConfigError(format!("gamma: {e}")))?;
        let t_max = self.quad_t_max.unwrap_or(derived.t_max);
        let n_steps = self.quad_n_steps.unwrap_or(derived.n_steps);
        let tail_tol = self.quad_tail_tol.unwrap_or(derived.tail_tol);
        QuadratureSettings::new(t_max, n_steps, tail_tol)
            .map_err(|e| ConfigError(format!("quadrature settings: {e}")))
    }

    /// Canonical JSON text: resolved defaults, sorted keys, no whitespace
    /// variation. The manifest hash is computed over this form, so key order
    /// in the input file does not matter.
    pub fn canonical_text(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        // serde_json maps are BTreeMaps: serialization is already key-sorted
        serde_json::to_string(&value).expect("canonical config serializes")
    }

    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_text().as_bytes());
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(r#"{"command": "evolve", "nu": 1.0, "nu_prime": 1.0, "gamma": 0.5}"#)
            .unwrap();
        assert_eq!(cfg.command, Some(Command::Evolve));
        assert_eq!(cfg.n_dimers, 41);
        assert_eq!(cfg.theta, 0.0);
        assert_eq!(cfg.n_time_points, 501);
        assert_eq!(cfg.t_max, 10.0);
    }

    #[test]
    fn even_n_rejected_naming_field() {
        let err = parse_config(r#"{"n_dimers": 40}"#).unwrap_err();
        assert!(err.to_string().contains("n_dimers"));
    }

    #[test]
    fn negative_gamma_rejected() {
        assert!(parse_config(r#"{"gamma": -0.5}"#).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config(r#"{"gama": 0.5}"#).is_err());
    }

    #[test]
    fn hash_is_stable_under_key_reordering() {
        let a = parse_config(r#"{"nu": 1.0, "gamma": 0.5, "nu_prime": 2.0}"#).unwrap();
        let b = parse_config(r#"{"gamma": 0.5, "nu_prime": 2.0, "nu": 1.0}"#).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let c = parse_config(r#"{"gamma": 0.75}"#).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
    }
}

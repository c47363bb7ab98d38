use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MuskatError, Result};
use crate::evolution::StepperConfig;
use crate::geometry::{Grid1D, PhysicalParams, ProfileSpec, Shape};

fn default_rho0() -> f64 {
    0.0
}
fn default_rho1() -> f64 {
    1.0
}
fn default_rho2() -> f64 {
    2.0
}
fn default_sigma() -> f64 {
    0.1
}

/// Densities and one gap, or a list of gaps for sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_rho0")]
    pub rho0: f64,
    #[serde(default = "default_rho1")]
    pub rho1: f64,
    #[serde(default = "default_rho2")]
    pub rho2: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Gaps for the sweep and two-phase commands, strictly decreasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            rho0: default_rho0(),
            rho1: default_rho1(),
            rho2: default_rho2(),
            sigma: default_sigma(),
            sigmas: None,
        }
    }
}

impl ParamsConfig {
    pub fn physical(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.rho0, self.rho1, self.rho2, self.sigma)
            .map_err(|e| MuskatError::Config(e.to_string()))
    }

    /// The gap list, defaulting to the single `sigma`.
    pub fn sigma_list(&self) -> Result<Vec<f64>> {
        let list = self.sigmas.clone().unwrap_or_else(|| vec![self.sigma]);
        if list.is_empty() {
            return Err(MuskatError::Config("sigmas must not be empty".into()));
        }
        for s in &list {
            if !(*s > 0.0 && *s < 1.0) {
                return Err(MuskatError::Config(format!(
                    "every sigma must lie in (0, 1) (got {s})"
                )));
            }
        }
        if list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(MuskatError::Config(
                "sigmas must be strictly decreasing".into(),
            ));
        }
        Ok(list)
    }
}

fn default_half_length() -> f64 {
    std::f64::consts::PI
}
fn default_n() -> usize {
    256
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_half_length")]
    pub half_length: f64,
    /// Power of two.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Raise `n` for small gaps so that `2L/n <= sigma/4`.
    #[serde(default = "default_true")]
    pub escalate: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_length: default_half_length(),
            n: default_n(),
            escalate: true,
        }
    }
}

impl GridConfig {
    /// Resolution used for gap `sigma`.
    pub fn n_for(&self, sigma: f64) -> usize {
        if self.escalate {
            Grid1D::resolution_for_gap(self.half_length, sigma, self.n)
        } else {
            self.n
        }
    }

    pub fn build(&self, sigma: f64) -> Result<Grid1D> {
        Grid1D::new(self.half_length, self.n_for(sigma)).map_err(|e| MuskatError::Config(e.to_string()))
    }
}

fn default_profile() -> ProfileSpec {
    ProfileSpec {
        gamma0: 0.1,
        f: None,
        g: None,
        h: Some(vec![Shape::Gaussian {
            amplitude: 0.02,
            width: 0.4,
            center: 0.0,
        }]),
        theta_over_sigma: Some(vec![Shape::Gaussian {
            amplitude: 0.1,
            width: 0.4,
            center: 0.3,
        }]),
        tail_tolerance: 1e-10,
    }
}

fn default_stepper() -> StepperConfig {
    StepperConfig::new(0.5)
}

fn default_ratio_bound() -> f64 {
    2.0
}
fn default_energy_bound() -> f64 {
    4.0
}

/// Pass criteria of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Bound on `sup_t |theta|_{H^{k-3}} / sigma` relative to its initial value.
    #[serde(default = "default_ratio_bound")]
    pub gap_ratio_bound: f64,
    /// Bound on `sup_t E(t) / E(0)`.
    #[serde(default = "default_energy_bound")]
    pub energy_bound: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gap_ratio_bound: default_ratio_bound(),
            energy_bound: default_energy_bound(),
        }
    }
}

fn default_tol_linear() -> f64 {
    1e-3
}
fn default_harmonic() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    /// Largest relative error of the fitted rates.
    #[serde(default = "default_tol_linear")]
    pub tolerance: f64,
    /// Largest admissible second-harmonic to fundamental ratio at the end.
    #[serde(default = "default_harmonic")]
    pub harmonic_limit: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tol_linear(),
            harmonic_limit: default_harmonic(),
        }
    }
}

fn default_samples() -> usize {
    100_000
}
fn default_w0() -> f64 {
    1e-2
}
fn default_margin() -> f64 {
    0.1
}
fn default_identity_tol() -> f64 {
    1e-10
}
fn default_regime_limit() -> f64 {
    5e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_w0")]
    pub w0: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_identity_tol")]
    pub tolerance: f64,
    /// Largest `w0` for which positivity is asserted; beyond it the suite is
    /// reported as out of regime.
    #[serde(default = "default_regime_limit")]
    pub regime_limit: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            w0: default_w0(),
            margin: default_margin(),
            tolerance: default_identity_tol(),
            regime_limit: default_regime_limit(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    None,
    Json,
    Binary,
}

fn default_out_dir() -> String {
    "muskat-out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default)]
    pub snapshots: SnapshotFormat,
    #[serde(default = "default_true")]
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            snapshots: SnapshotFormat::None,
            plots: true,
        }
    }
}

/// Complete description of a run; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_profile")]
    pub profile: ProfileSpec,
    #[serde(default = "default_stepper")]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub linear: LinearConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }
}

/// JSON schema of [`RunConfig`], shipped with the crate.
pub const SCHEMA: &str = include_str!("../../schema/run_config.schema.json");

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MuskatError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything that does not depend on the command.
    pub fn validate(&self) -> Result<()> {
        self.params.physical()?;
        self.params.sigma_list()?;
        Grid1D::new(self.grid.half_length, self.grid.n)
            .map_err(|e| MuskatError::Config(e.to_string()))?;
        self.stepper.validate()?;
        if !(self.profile.gamma0 > 0.0) {
            return Err(MuskatError::Config("profile.gamma0 must be positive".into()));
        }
        if !(self.sweep.gap_ratio_bound > 0.0 && self.sweep.energy_bound > 0.0) {
            return Err(MuskatError::Config("sweep bounds must be positive".into()));
        }
        if !(self.verify.w0 >= 0.0 && self.verify.tolerance > 0.0) {
            return Err(MuskatError::Config("verify.w0 and verify.tolerance must be non-negative".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_valid() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.grid.n, 256);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"grid":{"n":64,"extra":1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"colour":"blue"}"#).is_err());
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(RunConfig::from_json(r#"{"grid":{"n":6}}"#).is_err());
    }

    #[test]
    fn sigma_list_rules() {
        assert!(RunConfig::from_json(r#"{"params":{"sigmas":[0.1, 1.5]}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"params":{"sigmas":[0.05, 0.1]}}"#).is_err());
        let c = RunConfig::from_json(r#"{"params":{"sigmas":[0.1, 0.05]}}"#).unwrap();
        assert_eq!(c.params.sigma_list().unwrap(), vec![0.1, 0.05]);
    }

    #[test]
    fn hash_changes_with_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.grid.n = 512;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), RunConfig::default().hash());
    }

    #[test]
    fn schema_lists_top_level_sections() {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        let props = schema["properties"].as_object().unwrap();
        let value = serde_json::to_value(RunConfig::default()).unwrap();
        for key in value.as_object().unwrap().keys() {
            assert!(props.contains_key(key), "schema lacks {key}");
        }
        assert_eq!(schema["additionalProperties"], serde_json::Value::Bool(false));
    }
}

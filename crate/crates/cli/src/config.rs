use std::path::{Path, PathBuf};

use lagcal_core::families::FamilySpec;
use lagcal_core::{Patch, Signature};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Verify,
    Angle,
    Curvature,
    Calibrate,
    VolumeCompare,
    PlaneProps,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::Angle => "angle",
            Experiment::Curvature => "curvature",
            Experiment::Calibrate => "calibrate",
            Experiment::VolumeCompare => "volume-compare",
            Experiment::PlaneProps => "plane-props",
        }
    }

    fn needs_family(self) -> bool {
        !matches!(self, Experiment::Calibrate | Experiment::PlaneProps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureConfig {
    pub p: usize,
    pub n: usize,
}

/// Perturbation batch for `volume-compare`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default = "default_runs")]
    pub count: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self { count: default_runs(), amplitude: default_amplitude() }
    }
}

fn default_runs() -> usize {
    20
}

fn default_amplitude() -> [f64; 2] {
    [0.02, 0.2]
}

fn default_samples() -> usize {
    1000
}

fn default_seed() -> u64 {
    42
}

fn default_tol() -> f64 {
    1e-9
}

fn default_out() -> PathBuf {
    PathBuf::from("lagcal-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub signature: SignatureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    pub experiment: Experiment,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbations: Option<PerturbationConfig>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

/// Command-line values that take precedence over the document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.apply(overrides);
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(e) = o.experiment {
            self.experiment = e;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(s) = o.samples {
            self.samples = s;
        }
        if let Some(t) = o.tol {
            self.tol = t;
        }
    }

    pub fn sig(&self) -> Result<Signature, ConfigError> {
        Signature::new(self.signature.p, self.signature.n).map_err(|e| invalid("signature", e.to_string()))
    }

    pub fn build_patch(&self) -> Result<Patch, ConfigError> {
        let sig = self.sig()?;
        let family = self
            .family
            .as_ref()
            .ok_or_else(|| invalid("family", format!("experiment `{}` needs a family", self.experiment.name())))?;
        family.build(&sig).map_err(|e| invalid("family", e.to_string()))
    }

    pub fn perturbation_config(&self) -> PerturbationConfig {
        self.perturbations.unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let sig = self.sig()?;
        if self.samples == 0 {
            return Err(invalid("samples", "must be at least 1"));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(invalid("tol", format!("must be positive and finite, got {}", self.tol)));
        }
        if let Some(g) = &self.grid {
            if g.is_empty() || g.contains(&0) {
                return Err(invalid("grid", "entries must be at least 1"));
            }
        }
        if let Some(p) = &self.perturbations {
            let [lo, hi] = p.amplitude;
            if p.count == 0 {
                return Err(invalid("perturbations", "count must be at least 1"));
            }
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return Err(invalid("perturbations", format!("amplitude range [{lo}, {hi}] is invalid")));
            }
        }
        if self.experiment == Experiment::PlaneProps && sig.n() != 2 {
            return Err(invalid("signature", "plane-props needs n = 2"));
        }
        if self.experiment.needs_family() {
            let patch = self.build_patch()?;
            if let Some(g) = &self.grid {
                if g.len() != patch.dim() {
                    return Err(invalid("grid", format!("expected {} entries for this family, got {}", patch.dim(), g.len())));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "signature": {"p": 0, "n": 2},
        "family": {"kind": "catenoid", "c": 1, "epsilon": 1, "sector": 0},
        "experiment": "verify"
    }"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.samples, 1000);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.tol, 1e-9);
        assert_eq!(cfg.experiment, Experiment::Verify);
        assert!(cfg.grid.is_none());
    }

    #[test]
    fn p_above_n_names_signature() {
        let text = MINIMAL.replace(r#""p": 0"#, r#""p": 3"#);
        assert!(matches!(parse_config(&text), Err(ConfigError::Invalid { field: "signature", .. })));
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = MINIMAL.replace(r#""experiment""#, "\"bogus\": 1,\n        \"experiment\"");
        match parse_config(&text) {
            Err(ConfigError::Parse { line, column, message }) => {
                assert_eq!(line, 4);
                assert!(column > 0);
                assert!(message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_self_adjoint_quadric_is_rejected() {
        let text = r#"{
            "signature": {"p": 0, "n": 2},
            "family": {"kind": "evolving_quadric", "M": [[1, 2], [0, 1]], "c": 1,
                       "radius": {"kind": "constant", "value": 1}, "interval": [0, 1]},
            "experiment": "verify"
        }"#;
        match parse_config(text) {
            Err(ConfigError::Invalid { field: "family", message }) => assert!(message.contains("check_self_adjoint residual")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_samples_and_bad_tol() {
        let text = MINIMAL.replace(r#""experiment": "verify""#, r#""experiment": "verify", "samples": 0"#);
        assert!(matches!(parse_config(&text), Err(ConfigError::Invalid { field: "samples", .. })));
        let text = MINIMAL.replace(r#""experiment": "verify""#, r#""experiment": "verify", "tol": -1"#);
        assert!(matches!(parse_config(&text), Err(ConfigError::Invalid { field: "tol", .. })));
    }

    #[test]
    fn family_optional_only_for_frame_experiments() {
        let text = r#"{"signature": {"p": 1, "n": 3}, "experiment": "calibrate"}"#;
        assert!(parse_config(text).is_ok());
        let text = r#"{"signature": {"p": 1, "n": 3}, "experiment": "verify"}"#;
        assert!(matches!(parse_config(text), Err(ConfigError::Invalid { field: "family", .. })));
        let text = r#"{"signature": {"p": 1, "n": 3}, "experiment": "plane-props"}"#;
        assert!(matches!(parse_config(text), Err(ConfigError::Invalid { field: "signature", .. })));
    }

    #[test]
    fn grid_must_match_dimension() {
        let text = MINIMAL.replace(r#""experiment": "verify""#, r#""experiment": "volume-compare", "grid": [10, 10, 10]"#);
        assert!(matches!(parse_config(&text), Err(ConfigError::Invalid { field: "grid", .. })));
    }

    #[test]
    fn overrides_win() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.apply(&Overrides { seed: Some(7), samples: Some(3), tol: Some(1e-3), ..Default::default() });
        assert_eq!((cfg.seed, cfg.samples, cfg.tol), (7, 3, 1e-3));
    }
}

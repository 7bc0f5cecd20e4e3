//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "damping": { "family": "monomial", "p": 2 },
//!   "potential": { "family": "zero" },
//!   "n": 3,
//!   "beta": { "curve": "power", "s": 1 },
//!   "b_list": [8, 12, 16, 24, 32]
//! }
//! ```
//!
//! Unknown keys are rejected. Command-line flags override `out` and `workers`.

use std::path::{Path, PathBuf};

use pseudowave_core::discretize::{ScanSpec, SigmaMethod};
use pseudowave_core::profiles::{Damping, Potential, Profile};
use pseudowave_core::pseudomode::{BetaCurve, PseudomodeConfig};
use serde::Deserialize;

use crate::RunError;

/// Desk-scale limits.
pub const MAX_NODES: usize = 4000;
pub const MAX_DENSE_NODES: usize = 1500;
pub const MAX_SCAN_POINTS: usize = 250_000;
pub const MAX_DENSITY: f64 = 1000.0;
pub const MAX_ORDER: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Pseudomode,
    Sweep,
    Pseudospec,
    Spectrum,
    Selftest,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Pseudomode => "pseudomode",
            Mode::Sweep => "sweep",
            Mode::Pseudospec => "pseudospec",
            Mode::Spectrum => "spectrum",
            Mode::Selftest => "selftest",
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `scale·|x|^p`
    Monomial {
        p: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale·e^{|x|^p}`
    Exponential {
        p: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale·ln|x|`
    Logarithmic {
        #[serde(default = "one")]
        scale: f64,
    },
    Zero,
}

impl ProfileSpec {
    pub fn build(&self) -> pseudowave_core::Result<Profile> {
        match *self {
            ProfileSpec::Monomial { p, scale } => Profile::monomial(p)?.with_scale(scale),
            ProfileSpec::Exponential { p, scale } => Profile::exponential(p)?.with_scale(scale),
            ProfileSpec::Logarithmic { scale } => Profile::logarithmic().with_scale(scale),
            ProfileSpec::Zero => Ok(Profile::zero()),
        }
    }
}

/// `β` as a function of the turning point; `preset` picks the family default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(tag = "curve", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSpec {
    Constant {
        value: f64,
    },
    Power {
        s: f64,
    },
    ExpMatched {
        s: f64,
        p: f64,
    },
    #[default]
    Preset,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Dense,
    #[default]
    Structured,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_half_length() -> f64 {
    12.0
}

fn default_nodes() -> usize {
    600
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// If present, must agree with the subcommand.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub damping: Option<ProfileSpec>,
    #[serde(default)]
    pub potential: Option<ProfileSpec>,
    #[serde(default)]
    pub n: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub beta: BetaSpec,
    #[serde(default = "one")]
    pub density: f64,
    /// `κ₁` constant; estimated from the Gaussian profile when absent.
    #[serde(default)]
    pub kappa_c: Option<f64>,
    /// Single point for `pseudomode`: a turning point `b` or `α`, plus an
    /// optional explicit `β` overriding the curve.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta_value: Option<f64>,
    /// Sweep abscissae, either turning points or `α` values.
    #[serde(default)]
    pub b_list: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha_list: Option<Vec<f64>>,
    #[serde(default = "default_half_length")]
    pub half_length: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub method: MethodSpec,
    /// Acceptance criteria to run (all when absent).
    #[serde(default)]
    pub criteria: Option<Vec<usize>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn config_error(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| {
            config_error(format!("line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn check_mode(&self, mode: Mode) -> Result<(), RunError> {
        match self.mode {
            Some(m) if m != mode => Err(config_error(format!(
                "config is for `{}` but `{}` was requested",
                m.name(),
                mode.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn damping(&self) -> Result<Damping, RunError> {
        let spec = self.damping.as_ref().ok_or_else(|| config_error("missing field `damping`"))?;
        spec.build()
            .and_then(Damping::new)
            .map_err(|e| config_error(format!("damping: {e}")))
    }

    pub fn potential(&self) -> Result<Potential, RunError> {
        match &self.potential {
            None => Ok(Potential::zero()),
            Some(spec) => spec
                .build()
                .and_then(Potential::new)
                .map_err(|e| config_error(format!("potential: {e}"))),
        }
    }

    pub fn beta_curve(&self, a: &Damping, q: &Potential) -> Result<BetaCurve, RunError> {
        let curve = match self.beta {
            BetaSpec::Constant { value } => BetaCurve::Constant(value),
            BetaSpec::Power { s } => BetaCurve::Power { s },
            BetaSpec::ExpMatched { s, p } => BetaCurve::ExpMatched { s, p },
            BetaSpec::Preset => BetaCurve::preset(a, q, self.n),
        };
        let finite = match curve {
            BetaCurve::Constant(v) => v.is_finite() && v != 0.0,
            BetaCurve::Power { s } => s.is_finite(),
            BetaCurve::ExpMatched { s, p } => s.is_finite() && p.is_finite(),
        };
        if !finite {
            return Err(config_error(format!("invalid β curve {curve:?}")));
        }
        Ok(curve)
    }

    pub fn pseudomode_config(&self, a: &Damping, q: &Potential) -> Result<PseudomodeConfig, RunError> {
        if self.n > MAX_ORDER {
            return Err(config_error(format!("n = {} exceeds {MAX_ORDER}", self.n)));
        }
        if !(self.density > 0.0 && self.density <= MAX_DENSITY) {
            return Err(config_error(format!("density = {} outside (0, {MAX_DENSITY}]", self.density)));
        }
        let cfg = PseudomodeConfig {
            n: self.n,
            epsilon: self.epsilon,
            beta_curve: self.beta_curve(a, q)?,
            density: self.density,
        };
        cfg.validate().map_err(|e| config_error(e.to_string()))?;
        if let Some(c) = self.kappa_c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(config_error(format!("kappa_c = {c} must be positive")));
            }
        }
        Ok(cfg)
    }

    pub fn discretization(&self) -> Result<(f64, usize), RunError> {
        if !(self.half_length > 0.0 && self.half_length.is_finite()) {
            return Err(config_error(format!("half_length = {}", self.half_length)));
        }
        if self.nodes < pseudowave_core::discretize::MIN_NODES || self.nodes > MAX_NODES {
            return Err(config_error(format!(
                "nodes = {} outside [{}, {MAX_NODES}]",
                self.nodes,
                pseudowave_core::discretize::MIN_NODES
            )));
        }
        Ok((self.half_length, self.nodes))
    }

    pub fn sigma_method(&self) -> Result<SigmaMethod, RunError> {
        let method = match self.method {
            MethodSpec::Dense => SigmaMethod::Dense,
            MethodSpec::Structured => SigmaMethod::Structured,
        };
        if method == SigmaMethod::Dense && self.nodes > MAX_DENSE_NODES {
            return Err(config_error(format!("dense σ_min limited to {MAX_DENSE_NODES} nodes")));
        }
        Ok(method)
    }

    pub fn scan_spec(&self) -> Result<ScanSpec, RunError> {
        let s = self.scan.ok_or_else(|| config_error("missing field `scan`"))?;
        let spec = ScanSpec { x0: s.re_min, x1: s.re_max, y0: s.im_min, y1: s.im_max, nx: s.nx, ny: s.ny };
        spec.validate().map_err(|e| config_error(e.to_string()))?;
        if s.nx.saturating_mul(s.ny) > MAX_SCAN_POINTS {
            return Err(config_error(format!("{} scan points exceed {MAX_SCAN_POINTS}", s.nx * s.ny)));
        }
        Ok(spec)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn workers(&self) -> Result<usize, RunError> {
        match self.workers {
            Some(0) => Err(config_error("workers must be at least 1")),
            Some(k) => Ok(k),
            None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_sweep_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"damping": {"family": "monomial", "p": 2}, "n": 3,
                "beta": {"curve": "power", "s": 1}, "b_list": [8, 12, 16]}"#,
        )
        .unwrap();
        assert_eq!(cfg.damping, Some(ProfileSpec::Monomial { p: 2.0, scale: 1.0 }));
        assert_eq!(cfg.beta, BetaSpec::Power { s: 1.0 });
        assert_eq!(cfg.epsilon, 0.1);
        assert_eq!(cfg.b_list.as_deref(), Some(&[8.0, 12.0, 16.0][..]));
        let a = cfg.damping().unwrap();
        let q = cfg.potential().unwrap();
        assert!(q.is_zero());
        assert_eq!(cfg.pseudomode_config(&a, &q).unwrap().beta_curve, BetaCurve::Power { s: 1.0 });
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_location() {
        let err = ExperimentConfig::from_json("{\n  \"damping\": {\"family\": \"zero\"},\n  \"bogus\": 1\n}")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("bogus"), "{msg}");
        assert!(ExperimentConfig::from_json(r#"{"damping": {"family": "monomial", "p": 2, "q": 1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"damping": {"family": "cubic"}}"#).is_err());
    }

    #[test]
    fn profile_invariants_are_config_errors() {
        let cfg = ExperimentConfig::from_json(r#"{"damping": {"family": "zero"}}"#).unwrap();
        assert!(matches!(cfg.damping(), Err(RunError::Config(_))));
        let cfg = ExperimentConfig::from_json(r#"{"potential": {"family": "monomial", "p": 1}}"#).unwrap();
        assert!(matches!(cfg.damping(), Err(RunError::Config(_))));
    }

    #[test]
    fn desk_scale_bounds() {
        let cfg = ExperimentConfig::from_json(r#"{"nodes": 50}"#).unwrap();
        assert!(cfg.discretization().is_err());
        let cfg = ExperimentConfig::from_json(r#"{"nodes": 2000, "method": "dense"}"#).unwrap();
        assert!(cfg.discretization().is_ok() && cfg.sigma_method().is_err());
        let cfg = ExperimentConfig::from_json(
            r#"{"scan": {"re_min": -1, "re_max": 1, "im_min": 0, "im_max": 1, "nx": 1000, "ny": 1000}}"#,
        )
        .unwrap();
        assert!(cfg.scan_spec().is_err());
        let cfg = ExperimentConfig::from_json(r#"{"workers": 0}"#).unwrap();
        assert!(cfg.workers().is_err());
    }

    #[test]
    fn mode_must_match() {
        let cfg = ExperimentConfig::from_json(r#"{"mode": "sweep"}"#).unwrap();
        assert!(cfg.check_mode(Mode::Sweep).is_ok());
        assert!(cfg.check_mode(Mode::Spectrum).is_err());
    }
}

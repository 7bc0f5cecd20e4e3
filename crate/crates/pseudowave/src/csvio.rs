//! CSV schemas for every emitted table.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs::File;
use std::path::Path;

use pseudowave_core::discretize::{Eigenpair, PseudospectrumGrid, ScanSpec};
use pseudowave_core::pseudomode::Pseudomode;
use pseudowave_core::residual::{HypothesisFlags, RateAxis, RateFit, ResidualReport};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};

use crate::RunError;

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn sci<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_f64(*v))
}

/// `pseudomode.csv`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudomodeRow {
    #[serde(serialize_with = "sci")]
    pub x: f64,
    #[serde(serialize_with = "sci")]
    pub re_f: f64,
    #[serde(serialize_with = "sci")]
    pub im_f: f64,
    #[serde(serialize_with = "sci")]
    pub xi: f64,
    #[serde(serialize_with = "sci")]
    pub abs_g: f64,
}

pub fn pseudomode_rows(pm: &Pseudomode) -> Vec<PseudomodeRow> {
    let grid = pm.f.grid();
    (0..grid.len())
        .map(|i| PseudomodeRow {
            x: grid.x(i),
            re_f: pm.f.values()[i].re,
            im_f: pm.f.values()[i].im,
            xi: pm.cutoff.xi.values()[i].re,
            abs_g: pm.g.values()[i].norm(),
        })
        .collect()
}

/// `sweep.csv` and `report.csv`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(serialize_with = "sci")]
    pub b: f64,
    #[serde(serialize_with = "sci")]
    pub alpha: f64,
    #[serde(serialize_with = "sci")]
    pub beta: f64,
    #[serde(serialize_with = "sci")]
    pub delta: f64,
    pub n: usize,
    #[serde(serialize_with = "sci")]
    pub ratio: f64,
    #[serde(serialize_with = "sci")]
    pub residual: f64,
    #[serde(serialize_with = "sci")]
    pub fprime_sq: f64,
    #[serde(serialize_with = "sci")]
    pub q_sq: f64,
    #[serde(serialize_with = "sci")]
    pub lambda_sq: f64,
    #[serde(serialize_with = "sci")]
    pub xi2_g: f64,
    #[serde(serialize_with = "sci")]
    pub xi1_g1: f64,
    #[serde(serialize_with = "sci")]
    pub xi_r_g: f64,
    #[serde(serialize_with = "sci")]
    pub c: f64,
    #[serde(serialize_with = "sci")]
    pub kappa1: f64,
    #[serde(serialize_with = "sci")]
    pub kappa2: f64,
    #[serde(serialize_with = "sci")]
    pub resolvent_lower_bound: f64,
    #[serde(serialize_with = "sci")]
    pub hyp_q0: f64,
    #[serde(serialize_with = "sci")]
    pub hyp_aq: f64,
    /// Largest `q_b^{(j)}` ratio, `0` for `n = 0`.
    #[serde(serialize_with = "sci")]
    pub hyp_qj_max: f64,
    #[serde(serialize_with = "sci")]
    pub hyp_cutoff2: f64,
    /// Failed conditions joined by `|`, empty when none.
    pub flags: String,
}

pub fn flag_names(f: &HypothesisFlags) -> String {
    let named = [
        (f.q0, "q0"),
        (f.aq, "aq"),
        (f.qj, "qj"),
        (f.cutoff2, "cutoff2"),
        (f.kappa1, "kappa1"),
    ];
    named.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect::<Vec<_>>().join("|")
}

impl From<&ResidualReport> for SweepRow {
    fn from(r: &ResidualReport) -> Self {
        let h = &r.hypotheses;
        SweepRow {
            b: r.b,
            alpha: r.alpha,
            beta: r.beta,
            delta: r.delta,
            n: r.n,
            ratio: r.ratio(),
            residual: r.parts.numerator,
            fprime_sq: r.parts.fprime_sq,
            q_sq: r.parts.q_sq,
            lambda_sq: r.parts.lambda_sq,
            xi2_g: r.xi2_g,
            xi1_g1: r.xi1_g1,
            xi_r_g: r.xi_r_g,
            c: r.c,
            kappa1: r.kappa1,
            kappa2: r.kappa2,
            resolvent_lower_bound: r.resolvent_lower_bound(),
            hyp_q0: h.q0,
            hyp_aq: h.aq,
            hyp_qj_max: h.qj.iter().copied().fold(0.0, f64::max),
            hyp_cutoff2: h.cutoff2,
            flags: flag_names(&r.flags),
        }
    }
}

/// `sweep_fit.csv`: one row, `log(ratio) ≈ slope·axis + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    /// `log_b` or `b_pow`
    pub axis: String,
    /// Exponent of `b^p` (`0` for `log_b`).
    #[serde(serialize_with = "sci")]
    pub axis_power: f64,
    #[serde(serialize_with = "sci")]
    pub slope: f64,
    #[serde(serialize_with = "sci")]
    pub intercept: f64,
    #[serde(serialize_with = "sci")]
    pub r2: f64,
    pub dropped: usize,
    #[serde(serialize_with = "sci")]
    pub b_min: f64,
    #[serde(serialize_with = "sci")]
    pub b_max: f64,
}

impl From<&RateFit> for FitRow {
    fn from(f: &RateFit) -> Self {
        let (axis, axis_power) = match f.axis {
            RateAxis::LogB => ("log_b", 0.0),
            RateAxis::PowerB(p) => ("b_pow", p),
        };
        FitRow {
            axis: axis.into(),
            axis_power,
            slope: f.line.slope,
            intercept: f.line.intercept,
            r2: f.line.r2,
            dropped: f.dropped,
            b_min: f.b_min,
            b_max: f.b_max,
        }
    }
}

/// `pseudospec_grid.csv`: the scanned rectangle and resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(serialize_with = "sci")]
    pub re_min: f64,
    #[serde(serialize_with = "sci")]
    pub re_max: f64,
    #[serde(serialize_with = "sci")]
    pub im_min: f64,
    #[serde(serialize_with = "sci")]
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(serialize_with = "sci")]
    pub half_length: f64,
    pub nodes: usize,
    pub method: String,
}

impl ScanRow {
    pub fn new(spec: &ScanSpec, half_length: f64, nodes: usize, method: &str) -> Self {
        ScanRow {
            re_min: spec.x0,
            re_max: spec.x1,
            im_min: spec.y0,
            im_max: spec.y1,
            nx: spec.nx,
            ny: spec.ny,
            half_length,
            nodes,
            method: method.into(),
        }
    }
}

/// `pseudospec.csv`, row-major with `im` outer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    #[serde(serialize_with = "sci")]
    pub re: f64,
    #[serde(serialize_with = "sci")]
    pub im: f64,
    #[serde(serialize_with = "sci")]
    pub sigma_min: f64,
}

pub fn sigma_rows(grid: &PseudospectrumGrid) -> Vec<SigmaRow> {
    grid.values.iter().map(|&(z, s)| SigmaRow { re: z.re, im: z.im, sigma_min: s }).collect()
}

/// `spectrum.csv`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    #[serde(serialize_with = "sci")]
    pub re: f64,
    #[serde(serialize_with = "sci")]
    pub im: f64,
    #[serde(serialize_with = "sci")]
    pub boundary_mass: f64,
    pub spurious: bool,
}

impl From<&Eigenpair> for EigenRow {
    fn from(p: &Eigenpair) -> Self {
        EigenRow { re: p.value.re, im: p.value.im, boundary_mass: p.boundary_mass, spurious: p.spurious }
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunError> {
    let file = File::create(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for row in rows {
        w.serialize(row).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RunError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

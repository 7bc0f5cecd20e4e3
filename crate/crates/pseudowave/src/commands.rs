//! The four compute subcommands. Everything is validated before the output
//! directory is created, so configuration errors leave no files behind.

use std::path::{Path, PathBuf};

use log::{info, warn};
use pseudowave_core::discretize::{build_operator, sigma_min, spectrum, PseudospectrumGrid, SigmaMethod};
use pseudowave_core::profiles::{Damping, Potential};
use pseudowave_core::pseudomode::{assemble_at, solve_b, PseudomodeConfig};
use pseudowave_core::residual::{
    finalize_sweep, fit_rate, hypothesis_sweep, pseudomode_report, sweep_point, validate_b_list, RateAxis,
    ResidualReport,
};
use pseudowave_core::wkb::SpectralPoint;

use crate::config::{ExperimentConfig, Mode};
use crate::csvio::{self, EigenRow, FitRow, ScanRow, SweepRow};
use crate::parallel::Workers;
use crate::RunError;

/// Files written by a run and a one-line summary for the terminal.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub message: String,
}

pub fn run(mode: Mode, cfg: &ExperimentConfig, workers: &Workers) -> Result<RunSummary, RunError> {
    cfg.check_mode(mode)?;
    match mode {
        Mode::Pseudomode => run_pseudomode(cfg),
        Mode::Sweep => run_sweep(cfg, workers),
        Mode::Pseudospec => run_pseudospec(cfg, workers),
        Mode::Spectrum => run_spectrum(cfg),
        Mode::Selftest => Err(RunError::Config("selftest is run through the selftest module".into())),
    }
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<PathBuf, RunError> {
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| RunError::Config(format!("output {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write<T: serde::Serialize>(dir: &Path, name: &str, rows: &[T], files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let path = dir.join(name);
    csvio::write_rows(&path, rows)?;
    files.push(path);
    Ok(())
}

fn config_err(e: pseudowave_core::Error) -> RunError {
    RunError::Config(e.to_string())
}

fn turning_point(a: &Damping, b: Option<f64>, alpha: Option<f64>) -> Result<f64, RunError> {
    match (b, alpha) {
        (Some(b), None) => {
            if !(b >= a.x_min() && b.is_finite()) {
                return Err(RunError::Config(format!("b = {b} below the damping domain start {}", a.x_min())));
            }
            Ok(b)
        }
        (None, Some(alpha)) => solve_b(a, alpha).map_err(config_err),
        _ => Err(RunError::Config("give exactly one of `b` and `alpha`".into())),
    }
}

fn run_pseudomode(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let a = cfg.damping()?;
    let q = cfg.potential()?;
    let pcfg = cfg.pseudomode_config(&a, &q)?;
    let b = turning_point(&a, cfg.b, cfg.alpha)?;
    let beta = cfg.beta_value.unwrap_or_else(|| pcfg.beta_curve.eval(b));
    let point = SpectralPoint::with_b(&a, a.eval(b).map_err(config_err)?, beta, b).map_err(config_err)?;
    let pm = assemble_at(&a, &q, &pcfg, &point)?;
    let report = pseudomode_report(&a, &q, &pm, cfg.kappa_c)?;
    let dir = prepare_out(cfg)?;
    let mut files = Vec::new();
    write(&dir, "pseudomode.csv", &csvio::pseudomode_rows(&pm), &mut files)?;
    write(&dir, "report.csv", &[SweepRow::from(&report)], &mut files)?;
    Ok(RunSummary {
        files,
        message: format!(
            "b = {} λ = {} + {}i ratio = {}",
            report.b,
            -report.alpha,
            report.beta,
            csvio::format_f64(report.ratio())
        ),
    })
}

/// Turning points of a sweep, from `b_list` or `alpha_list`.
pub fn sweep_points(cfg: &ExperimentConfig, a: &Damping) -> Result<Vec<f64>, RunError> {
    let b_list = match (&cfg.b_list, &cfg.alpha_list) {
        (Some(b), None) => b.clone(),
        (None, Some(alphas)) => alphas.iter().map(|&al| solve_b(a, al)).collect::<Result<_, _>>().map_err(config_err)?,
        _ => return Err(RunError::Config("give exactly one of `b_list` and `alpha_list`".into())),
    };
    validate_b_list(&b_list).map_err(config_err)?;
    if let Some(&b) = b_list.iter().find(|&&b| b < a.x_min()) {
        return Err(RunError::Config(format!("b = {b} below the damping domain start {}", a.x_min())));
    }
    Ok(b_list)
}

/// Parallel sweep with flags filled in from consecutive points.
pub fn parallel_sweep(
    a: &Damping,
    q: &Potential,
    pcfg: &PseudomodeConfig,
    b_list: &[f64],
    c: Option<f64>,
    workers: &Workers,
) -> Result<Vec<ResidualReport>, RunError> {
    let results = workers.map(b_list, |&b| sweep_point(a, q, pcfg, b, c));
    let mut reports = Vec::with_capacity(results.len());
    for (b, r) in b_list.iter().zip(results) {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                warn_hypotheses_without_pseudomodes(a, q, pcfg, b_list, c);
                warn!("sweep point b = {b} failed: {e}");
                return Err(e.into());
            }
        }
    }
    finalize_sweep(&mut reports);
    for r in &reports {
        if r.flags.any() {
            warn!("hypothesis check at b = {}: {}", r.b, csvio::flag_names(&r.flags));
        }
    }
    Ok(reports)
}

fn warn_hypotheses_without_pseudomodes(a: &Damping, q: &Potential, pcfg: &PseudomodeConfig, b_list: &[f64], c: Option<f64>) {
    if let Ok(rows) = hypothesis_sweep(a, q, pcfg, b_list, c.unwrap_or(0.125)) {
        for (b, (_, flags)) in b_list.iter().zip(rows) {
            if flags.any() {
                warn!("hypothesis check at b = {b}: {}", csvio::flag_names(&flags));
            }
        }
    }
}

fn run_sweep(cfg: &ExperimentConfig, workers: &Workers) -> Result<RunSummary, RunError> {
    let a = cfg.damping()?;
    let q = cfg.potential()?;
    let pcfg = cfg.pseudomode_config(&a, &q)?;
    let b_list = sweep_points(cfg, &a)?;
    info!("sweep over {} points on {} workers", b_list.len(), workers.count());
    let reports = parallel_sweep(&a, &q, &pcfg, &b_list, cfg.kappa_c, workers)?;
    let fit = fit_rate(&reports, RateAxis::for_damping(&a))?;
    let dir = prepare_out(cfg)?;
    let mut files = Vec::new();
    let rows: Vec<SweepRow> = reports.iter().map(SweepRow::from).collect();
    write(&dir, "sweep.csv", &rows, &mut files)?;
    write(&dir, "sweep_fit.csv", &[FitRow::from(&fit)], &mut files)?;
    Ok(RunSummary {
        files,
        message: format!(
            "{} points, fitted slope {} (R² = {}, {} dropped)",
            reports.len(),
            csvio::format_f64(fit.line.slope),
            csvio::format_f64(fit.line.r2),
            fit.dropped
        ),
    })
}

fn method_name(m: SigmaMethod) -> &'static str {
    match m {
        SigmaMethod::Dense => "dense",
        SigmaMethod::Structured => "structured",
    }
}

fn run_pseudospec(cfg: &ExperimentConfig, workers: &Workers) -> Result<RunSummary, RunError> {
    let a = cfg.damping()?;
    let q = cfg.potential()?;
    let (l, n) = cfg.discretization()?;
    let spec = cfg.scan_spec()?;
    let method = cfg.sigma_method()?;
    let disc = build_operator(&a, &q, l, n)?;
    disc.check_reach(spec.x0.min(0.0));
    let points = spec.points();
    let sigmas = workers.map(&points, |&z| sigma_min(&disc, z, method));
    let values = points
        .iter()
        .zip(sigmas)
        .map(|(&z, s)| s.map(|s| (z, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = PseudospectrumGrid { spec, values };
    let dir = prepare_out(cfg)?;
    let mut files = Vec::new();
    write(&dir, "pseudospec_grid.csv", &[ScanRow::new(&spec, l, n, method_name(method))], &mut files)?;
    write(&dir, "pseudospec.csv", &csvio::sigma_rows(&grid), &mut files)?;
    let smallest = grid.min_where(|_| true).unwrap_or(f64::NAN);
    Ok(RunSummary {
        files,
        message: format!("{} points, smallest σ_min {}", grid.values.len(), csvio::format_f64(smallest)),
    })
}

fn run_spectrum(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let a = cfg.damping()?;
    let q = cfg.potential()?;
    let (l, n) = cfg.discretization()?;
    let disc = build_operator(&a, &q, l, n)?;
    let pairs = spectrum(&disc)?;
    let dir = prepare_out(cfg)?;
    let mut files = Vec::new();
    let rows: Vec<EigenRow> = pairs.iter().map(EigenRow::from).collect();
    write(&dir, "spectrum.csv", &rows, &mut files)?;
    let spurious = pairs.iter().filter(|p| p.spurious).count();
    Ok(RunSummary { files, message: format!("{} eigenvalues, {spurious} flagged spurious", pairs.len()) })
}

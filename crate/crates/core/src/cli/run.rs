//! Executes a parsed configuration: mode evolutions in parallel, then the
//! requested reports, assembled into one [`RunReport`].

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, ConfigErrors, RunConfig};
use crate::analysis::{
    regularity_probe, rescaled_line, scalar_order, self_convergence, restrict, tail_fit, wk_terms, FitResult,
    Order, ProbeEnd, ProbeSettings,
};
use crate::evolve::{evolve_mode, EvolveError, ExtractionPlan, ModeRun, NullGrid};
use crate::geometry::BlackHole;
use crate::modes::{make_initial_data, InitialDataSpec, Mode};
use crate::radiation::{
    energy_initial, predicted_thresholds, rf_norms, tail_budget_estimate, threshold_check, unitarity_report,
    EnergyReport, RadiationError, RadiationField, ThresholdCheck,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Automatic extraction lines are pushed out at most this many times.
const MAX_LINE_DOUBLINGS: u32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Unstable(EvolveError),
    #[error(transparent)]
    Evolve(EvolveError),
    #[error(transparent)]
    Radiation(#[from] RadiationError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

impl RunError {
    /// 1 for configuration problems, 2 for an instability abort, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Unstable(_) => 2,
            _ => 3,
        }
    }
}

impl From<EvolveError> for RunError {
    fn from(e: EvolveError) -> Self {
        match e {
            EvolveError::Unstable { .. } => Self::Unstable(e),
            EvolveError::SupportOutsideGrid { .. } | EvolveError::OffGrid { .. } | EvolveError::InvalidGrid(_) => {
                Self::Config(ConfigErrors(vec![ConfigError {
                    path: "grid".into(),
                    message: e.to_string(),
                }]))
            }
            other => Self::Evolve(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub h: f64,
    pub n: usize,
    pub rstar_min: f64,
    pub rstar_max: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl From<&NullGrid> for GridInfo {
    fn from(g: &NullGrid) -> Self {
        Self {
            h: g.h(),
            n: g.n(),
            rstar_min: g.rstar_min(),
            rstar_max: g.rstar_max(),
            u_max: g.u_max(),
            v_max: g.v_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBudget {
    pub budget: f64,
    /// Flux expected beyond both extraction windows, relative to `E(0)`.
    pub estimated_fraction: Option<f64>,
    pub within_budget: bool,
    pub automatic_lines: bool,
    pub doublings: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportReport {
    pub window: (f64, f64),
    pub tolerance: f64,
    pub horizon: ThresholdCheck,
    pub scri: ThresholdCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub ladder: Vec<f64>,
    pub total_defect: Vec<f64>,
    pub relative_defect: Vec<f64>,
    /// `log2(d_k / d_{k+1})` for successive ladder pairs.
    pub pairwise_order: Vec<f64>,
    pub richardson_order: Order,
    /// Scri waveform self-convergence, per mode.
    pub waveform_order: Vec<(Mode, Order)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub mode: Mode,
    pub rstar: f64,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub mode: Mode,
    pub end: ProbeEnd,
    /// Fixed coordinate of the probe line (`v` at the horizon, `u` at scri).
    pub line: f64,
    pub delta: Option<f64>,
    pub predicted: Option<f64>,
    pub fit: Option<FitResult>,
    pub w1_exponent: Option<f64>,
    pub ladder_a: Vec<f64>,
    pub ladder_diff: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub code_version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub grid: GridInfo,
    pub modes: Vec<Mode>,
    pub tail_budget: TailBudget,
    pub unitarity: Option<EnergyReport>,
    pub support: Option<SupportReport>,
    pub convergence: Option<ConvergenceReport>,
    pub tail: Option<Vec<TailReport>>,
    pub probe: Option<Vec<ProbeReport>>,
    pub warnings: Vec<String>,
}

/// Everything a run produces, before serialization.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub runs: Vec<ModeRun>,
    pub horizon: RadiationField,
    pub scri: RadiationField,
}

fn mode_data(config: &RunConfig, bh: BlackHole) -> Result<Vec<InitialDataSpec>, RunError> {
    config
        .modes
        .iter()
        .map(|&mode| {
            make_initial_data(
                config.data.family.to_family(),
                config.data.phi_amplitude,
                config.data.psidot_amplitude,
                mode,
                bh,
            )
            .map_err(|e| {
                RunError::Config(ConfigErrors(vec![ConfigError {
                    path: "data".into(),
                    message: e.to_string(),
                }]))
            })
        })
        .collect()
}

fn plan(config: &RunConfig) -> ExtractionPlan {
    let mut u_lines = config.series.u_lines.clone();
    let mut v_lines = config.series.v_lines.clone();
    if config.reports.probe {
        u_lines.extend(config.reports.probe_u);
        v_lines.extend(config.reports.probe_v);
    }
    ExtractionPlan {
        u_lines,
        v_lines,
        rstar_series: config.series.rstar.clone(),
        slice_times: config.series.slice_times.clone(),
        snapshot_stride: config.series.snapshot_stride,
    }
}

fn evolve_all(
    data: &[InitialDataSpec],
    grid: &NullGrid,
    plan: &ExtractionPlan,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ModeRun>, RunError> {
    let runs: Vec<Result<ModeRun, EvolveError>> =
        pool.install(|| data.par_iter().map(|d| evolve_mode(d, grid, plan)).collect());
    runs.into_iter().map(|r| r.map_err(RunError::from)).collect()
}

fn initial_lines(config: &RunConfig, data: &[InitialDataSpec]) -> (f64, f64) {
    let m = config.mass;
    let (lo, hi) = data
        .first()
        .and_then(|d| d.effective_support(1e-17))
        .unwrap_or((-50.0 * m, 50.0 * m));
    let u = config.grid.u_max.unwrap_or((200.0 * m).max(100.0 * m - lo));
    let v = config.grid.v_max.unwrap_or((200.0 * m).max(100.0 * m + hi));
    (u, v)
}

/// Expected flux beyond the ends of both windows relative to `E(0)`.
fn tail_fraction(horizon: &RadiationField, scri: &RadiationField, bh: BlackHole, e0: f64) -> Option<f64> {
    if e0 <= 0.0 {
        return Some(0.0);
    }
    let mut total = 0.0;
    for field in [horizon, scri] {
        let norms = rf_norms(field, bh);
        for (w, inside) in field.waveforms.iter().zip(&norms.per_mode) {
            total += tail_budget_estimate(w)? * inside;
        }
    }
    Some(total / e0)
}

fn worker_pool(parallel: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = parallel {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| RunError::Pool(e.to_string()))
}

/// Runs every mode and every requested report. `parallel` bounds the number
/// of concurrent mode workers.
pub fn execute(config: &RunConfig, parallel: Option<usize>) -> Result<RunOutcome, RunError> {
    let bh = config.black_hole();
    let data = mode_data(config, bh)?;
    let pool = worker_pool(parallel)?;
    let plan = plan(config);
    let automatic = config.grid.u_max.is_none() || config.grid.v_max.is_none();
    let mut warnings = Vec::new();

    let energies: Vec<f64> = data.iter().map(energy_initial).collect::<Result<_, _>>()?;
    let e0: f64 = energies.iter().sum();

    let (mut u_max, mut v_max) = initial_lines(config, &data);
    let mut doublings = 0;
    let (grid, runs, horizon, scri, fraction) = loop {
        // with a ladder the production grid is the finest rung of one nested family
        let grid = match config.grid.ladder.first() {
            Some(&coarse) => {
                let mut g = NullGrid::from_lines(coarse, u_max, v_max)?;
                for _ in 1..config.grid.ladder.len() {
                    g = g.refined();
                }
                g
            }
            None => NullGrid::from_lines(config.grid.h, u_max, v_max)?,
        };
        let runs = evolve_all(&data, &grid, &plan, &pool)?;
        let horizon = RadiationField::horizon(&runs, bh)?;
        let scri = RadiationField::scri(&runs)?;
        let fraction = tail_fraction(&horizon, &scri, bh, e0);
        let over = fraction.is_none_or(|f| f > config.grid.tail_budget);
        if automatic && over && doublings < MAX_LINE_DOUBLINGS {
            doublings += 1;
            if config.grid.u_max.is_none() {
                u_max *= 2.0;
            }
            if config.grid.v_max.is_none() {
                v_max *= 2.0;
            }
            continue;
        }
        break (grid, runs, horizon, scri, fraction);
    };
    let within_budget = fraction.is_some_and(|f| f <= config.grid.tail_budget);
    if !within_budget {
        warnings.push(format!(
            "estimated flux beyond the extraction windows ({}) exceeds the tail budget {:e}",
            fraction.map_or("unbounded".to_string(), |f| format!("{f:.3e}")),
            config.grid.tail_budget
        ));
    }
    let tail_budget = TailBudget {
        budget: config.grid.tail_budget,
        estimated_fraction: fraction,
        within_budget,
        automatic_lines: automatic,
        doublings,
    };

    let r = &config.reports;
    let unitarity = if r.unitarity {
        let frac = r.middle_lambda_fraction;
        let rep = unitarity_report(&energies, &runs, bh, |t| frac * t)?;
        warnings.extend(rep.warnings.iter().cloned());
        Some(rep)
    } else {
        None
    };

    let support = if r.support {
        data.first().and_then(|d| d.support()).map(|window| {
            let (tau, tau_bar) = predicted_thresholds(window);
            SupportReport {
                window,
                tolerance: r.support_tolerance,
                horizon: threshold_check(&horizon, tau, r.support_tolerance, 2.0),
                scri: threshold_check(&scri, tau_bar, r.support_tolerance, 2.0),
            }
        })
    } else {
        None
    };

    let convergence = if r.convergence {
        Some(convergence_report(config, &data, &grid, &runs, &energies, bh, &pool)?)
    } else {
        None
    };

    let tail = r.tail.then(|| {
        runs.iter()
            .flat_map(|run| {
                run.series.iter().map(move |s| {
                    let fit = tail_fit(&s.t, &s.psi, r.tail_window);
                    TailReport {
                        mode: run.mode,
                        rstar: s.rstar,
                        error: fit.as_ref().err().map(|e| e.to_string()),
                        fit: fit.ok(),
                    }
                })
            })
            .collect()
    });

    let probe = r.probe.then(|| probe_reports(config, &runs, bh));

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        code_version: CODE_VERSION.to_string(),
        config_hash: config.hash.clone(),
        config: config.clone(),
        grid: GridInfo::from(&grid),
        modes: config.modes.clone(),
        tail_budget,
        unitarity,
        support,
        convergence,
        tail,
        probe,
        warnings,
    };
    Ok(RunOutcome {
        report,
        runs,
        horizon,
        scri,
    })
}

fn convergence_report(
    config: &RunConfig,
    data: &[InitialDataSpec],
    fine: &NullGrid,
    fine_runs: &[ModeRun],
    energies: &[f64],
    bh: BlackHole,
    pool: &rayon::ThreadPool,
) -> Result<ConvergenceReport, RunError> {
    let coarse = NullGrid::from_lines(config.grid.ladder[0], fine.u_max(), fine.v_max())?;
    let mid = coarse.refined();
    let bare = ExtractionPlan::default();
    let coarse_runs = evolve_all(data, &coarse, &bare, pool)?;
    let mid_runs = evolve_all(data, &mid, &bare, pool)?;
    let mut total_defect = Vec::new();
    let mut relative_defect = Vec::new();
    for runs in [&coarse_runs[..], &mid_runs[..], fine_runs] {
        let rep = unitarity_report(energies, runs, bh, |t| 0.5 * t)?;
        total_defect.push(rep.defect);
        relative_defect.push(rep.relative_defect);
    }
    let pairwise_order = total_defect
        .windows(2)
        .map(|w| (w[0] / w[1]).abs().log2())
        .collect();
    let richardson_order = scalar_order(total_defect[0], total_defect[1], total_defect[2]);
    let waveform_order = (0..data.len())
        .map(|k| {
            let c = &coarse_runs[k].scri.psi;
            let m = restrict(&mid_runs[k].scri.psi, 2);
            let f = restrict(&fine_runs[k].scri.psi, 4);
            let order = self_convergence(c, &m, &f).unwrap_or(Order::Undefined);
            (data[k].mode, order)
        })
        .collect();
    Ok(ConvergenceReport {
        ladder: vec![coarse.h(), mid.h(), fine.h()],
        total_defect,
        relative_defect,
        pairwise_order,
        richardson_order,
        waveform_order,
    })
}

fn probe_reports(config: &RunConfig, runs: &[ModeRun], bh: BlackHole) -> Vec<ProbeReport> {
    let r = &config.reports;
    let settings = ProbeSettings {
        start: r.probe_start,
        stop: r.probe_stop,
        ..ProbeSettings::default()
    };
    let mut out = Vec::new();
    for run in runs {
        let lines = [
            (ProbeEnd::Horizon, r.probe_v, &run.v_lines),
            (ProbeEnd::Scri, r.probe_u, &run.u_lines),
        ];
        for (end, fixed, records) in lines {
            let Some(fixed) = fixed else { continue };
            // probe lines are appended after the series lines
            let Some(line) = records.last() else { continue };
            let base = rescaled_line(line, bh, end).and_then(|l| regularity_probe(&l, &settings, r.probe_lambda));
            let w1 = wk_terms(line, bh, end, 1, r.probe_lambda.unwrap_or(1.0))
                .and_then(|l| regularity_probe(&l, &settings, r.probe_lambda))
                .ok()
                .map(|p| p.fit.exponent);
            out.push(match base {
                Ok(p) => ProbeReport {
                    mode: run.mode,
                    end,
                    line: fixed,
                    delta: Some(p.fit.exponent),
                    predicted: p.predicted,
                    fit: Some(p.fit),
                    w1_exponent: w1,
                    ladder_a: p.ladder_a,
                    ladder_diff: p.ladder_diff,
                    error: None,
                },
                Err(e) => ProbeReport {
                    mode: run.mode,
                    end,
                    line: fixed,
                    delta: None,
                    predicted: r.probe_lambda.map(|l| l.min(0.5)),
                    fit: None,
                    w1_exponent: w1,
                    ladder_a: Vec::new(),
                    ladder_diff: Vec::new(),
                    error: Some(e.to_string()),
                },
            });
        }
    }
    out
}

//! The acceptance battery behind `--check`. Each criterion sets up its own
//! runs and returns a verdict with the measured numbers.

use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;

use super::config::{parse_config, RunConfig};
use super::output::write_outputs;
use super::run::execute;
use crate::analysis::{regularity_probe, rescaled_line, tail_fit, ProbeEnd, ProbeSettings};
use crate::evolve::{evolve_mode, evolve_null_data, ExtractionPlan, ModeRun, NullData, NullGrid, PotentialTable};
use crate::geometry::BlackHole;
use crate::modes::{make_initial_data, Family, InitialDataSpec, Mode};
use crate::radiation::{
    energy_initial, middle_term, predicted_thresholds, reversal_check, support_verdict, threshold_check,
    unitarity_report, RadiationField, DEFAULT_SILENCE_TOL,
};

/// The bundled reference configuration.
pub const REFERENCE_CONFIG: &str = include_str!("../../../../configs/reference.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {}: {}", self.name, self.detail)
    }
}

fn criterion(name: &'static str, result: Result<(bool, String), String>) -> Criterion {
    match result {
        Ok((pass, detail)) => Criterion { name, pass, detail },
        Err(e) => Criterion {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn data(family: Family, phi: f64, psidot: f64, l: u32) -> Result<InitialDataSpec, String> {
    make_initial_data(family, phi, psidot, Mode::axisymmetric(l), BlackHole::default()).map_err(|e| e.to_string())
}

fn run(d: &InitialDataSpec, grid: &NullGrid, plan: &ExtractionPlan) -> Result<ModeRun, String> {
    evolve_mode(d, grid, plan).map_err(|e| e.to_string())
}

const UNITARITY_LADDER: [f64; 3] = [0.08, 0.04, 0.02];

fn unitarity_data(l: u32) -> Result<InitialDataSpec, String> {
    data(Family::Gaussian { center: 20.0, width: 2.0 }, 1.0, 0.0, l)
}

fn unitarity_grid(h: f64) -> Result<NullGrid, String> {
    NullGrid::from_lines(h, 400.0, 400.0).map_err(|e| e.to_string())
}

/// Relative defect of one mode, and the absolute defect.
fn mode_defect(l: u32, h: f64) -> Result<(f64, f64), String> {
    let d = unitarity_data(l)?;
    let e0 = energy_initial(&d).map_err(|e| e.to_string())?;
    let r = run(&d, &unitarity_grid(h)?, &ExtractionPlan::default())?;
    let rep = unitarity_report(&[e0], &[r], BlackHole::default(), |t| 0.5 * t).map_err(|e| e.to_string())?;
    Ok((rep.relative_defect, rep.defect))
}

/// l = 0 gaussian data: relative defect at h = 0.02 within 1% and observed
/// order at least 1.8 across the ladder.
pub fn unitarity() -> Criterion {
    criterion("unitarity (l=0, h in 0.08/0.04/0.02)", (|| {
        let out: Vec<(f64, f64)> = UNITARITY_LADDER
            .par_iter()
            .map(|&h| mode_defect(0, h))
            .collect::<Result<_, _>>()?;
        let orders: Vec<f64> = out.windows(2).map(|w| (w[0].1 / w[1].1).abs().log2()).collect();
        let rel = out[2].0.abs();
        let pass = rel <= 1e-2 && orders.iter().all(|&p| p >= 1.8);
        let detail = format!(
            "relative defects {:.3e} {:.3e} {:.3e}; observed orders {:.3} {:.3}",
            out[0].0, out[1].0, out[2].0, orders[0], orders[1]
        );
        Ok((pass, detail))
    })())
}

/// l = 0, 1, 2 each within 1% at h = 0.02, and the multi-mode total equal
/// to the sum of the single-mode defects.
pub fn per_mode_unitarity() -> Criterion {
    criterion("per-mode unitarity (l=0,1,2)", (|| {
        let bh = BlackHole::default();
        let grid = unitarity_grid(0.02)?;
        let data: Vec<InitialDataSpec> = (0..3).map(unitarity_data).collect::<Result<_, _>>()?;
        let energies: Vec<f64> = data
            .iter()
            .map(|d| energy_initial(d).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let runs: Vec<ModeRun> = data
            .par_iter()
            .map(|d| run(d, &grid, &ExtractionPlan::default()))
            .collect::<Result<_, _>>()?;
        let joint = unitarity_report(&energies, &runs, bh, |t| 0.5 * t).map_err(|e| e.to_string())?;
        let mut single_sum = 0.0;
        for k in 0..runs.len() {
            let rep = unitarity_report(&energies[k..=k], &runs[k..=k], bh, |t| 0.5 * t).map_err(|e| e.to_string())?;
            single_sum += rep.defect;
        }
        let rels: Vec<f64> = joint.modes.iter().map(|m| m.relative_defect).collect();
        let pass = rels.iter().all(|r| r.abs() <= 1e-2) && joint.defect == single_sum;
        let detail = format!(
            "relative defects {:.3e} {:.3e} {:.3e}; total {:e} vs sum of modes {:e}",
            rels[0], rels[1], rels[2], joint.defect, single_sum
        );
        Ok((pass, detail))
    })())
}

/// Support windows used by the threshold criterion.
pub const SUPPORT_WINDOWS: [(f64, f64); 3] = [(10.0, 14.0), (-6.0, -2.0), (25.0, 40.0)];

/// Activation of both fields within two cells of the predicted times.
pub fn support_thresholds() -> Criterion {
    criterion("support thresholds (three windows)", (|| {
        let bh = BlackHole::default();
        let grid = NullGrid::from_lines(0.05, 150.0, 150.0).map_err(|e| e.to_string())?;
        let checks: Vec<(bool, String)> = SUPPORT_WINDOWS
            .par_iter()
            .map(|&(lo, hi)| {
                let fam = Family::CompactBump {
                    center: 0.5 * (lo + hi),
                    halfwidth: 0.5 * (hi - lo),
                };
                let r = run(&data(fam, 1.0, 0.5, 1)?, &grid, &ExtractionPlan::default())?;
                let runs = std::slice::from_ref(&r);
                let horizon = RadiationField::horizon(runs, bh).map_err(|e| e.to_string())?;
                let scri = RadiationField::scri(runs).map_err(|e| e.to_string())?;
                let (tau, tau_bar) = predicted_thresholds((lo, hi));
                let a = threshold_check(&horizon, tau, DEFAULT_SILENCE_TOL, 2.0);
                let b = threshold_check(&scri, tau_bar, DEFAULT_SILENCE_TOL, 2.0);
                let gap = |g: Option<f64>| g.map_or("silent".into(), |g| format!("{g:+.2}"));
                Ok((
                    a.pass && b.pass,
                    format!("[{lo}, {hi}] gaps {} / {} cells", gap(a.gap_cells), gap(b.gap_cells)),
                ))
            })
            .collect::<Result<_, String>>()?;
        let pass = checks.iter().all(|c| c.0);
        let detail = checks.into_iter().map(|c| c.1).collect::<Vec<_>>().join("; ");
        Ok((pass, detail))
    })())
}

/// Forward field against the mirrored backward field for odd data.
pub fn time_reversal() -> Criterion {
    criterion("time-reversal mirror (odd data)", (|| {
        let bh = BlackHole::default();
        let h = 0.05;
        let grid = NullGrid::from_lines(h, 150.0, 150.0).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        let mut pass = true;
        for l in [0u32, 2] {
            let d = data(Family::CompactBump { center: 10.0, halfwidth: 4.0 }, 0.0, 1.0, l)?;
            let plan = ExtractionPlan::default();
            let fwd = run(&d, &grid, &plan)?;
            let rev = run(&d.reversed(), &grid, &plan)?;
            let f = RadiationField::horizon(std::slice::from_ref(&fwd), bh).map_err(|e| e.to_string())?;
            let r = RadiationField::horizon(std::slice::from_ref(&rev), bh).map_err(|e| e.to_string())?;
            let check = reversal_check(&f.waveforms[0], &r.waveforms[0], false, h);
            pass &= check.pass;
            worst = worst.max(check.residual / (h * h * check.peak).max(f64::MIN_POSITIVE));
        }
        Ok((pass, format!("worst residual {worst:.3e} h^2 peak (limit 5)")))
    })())
}

/// Ten nonzero odd data sets, none silent at the horizon.
pub fn odd_battery_sets() -> Vec<(String, Family, u32)> {
    let mut sets = Vec::new();
    for (center, halfwidth, l) in [(5.0, 2.0, 0), (12.0, 4.0, 1), (-8.0, 3.0, 0), (25.0, 6.0, 2), (0.0, 1.5, 1)] {
        sets.push((
            format!("bump c={center} w={halfwidth} l={l}"),
            Family::CompactBump { center, halfwidth },
            l,
        ));
    }
    for (center, width, l) in [(15.0, 2.0, 0), (-3.0, 1.0, 1), (30.0, 3.0, 1), (8.0, 0.8, 2), (40.0, 5.0, 0)] {
        sets.push((format!("gaussian c={center} w={width} l={l}"), Family::Gaussian { center, width }, l));
    }
    sets
}

pub fn odd_battery() -> Criterion {
    criterion("odd-data battery (10 sets, ratio > 1e-3)", (|| {
        let bh = BlackHole::default();
        let grid = NullGrid::from_lines(0.1, 250.0, 250.0).map_err(|e| e.to_string())?;
        let ratios: Vec<f64> = odd_battery_sets()
            .into_par_iter()
            .map(|(label, fam, l)| {
                let d = data(fam, 0.0, 1.0, l)?;
                let r = run(&d, &grid, &ExtractionPlan::default())?;
                let v = support_verdict(label, &d, &r, bh, 1e-3).map_err(|e| e.to_string())?;
                Ok(if v.silent { -v.ratio } else { v.ratio })
            })
            .collect::<Result<_, String>>()?;
        let min = ratios.iter().map(|r| r.abs()).fold(f64::INFINITY, f64::min);
        let pass = ratios.iter().all(|&r| r > 1e-3);
        Ok((pass, format!("smallest ratio {min:.3e} over {} sets", ratios.len())))
    })())
}

fn tail_run(l: u32) -> Result<(InitialDataSpec, ModeRun), String> {
    let d = data(Family::CompactBump { center: 20.0, halfwidth: 6.0 }, 0.0, 1.0, l)?;
    let grid = NullGrid::new(0.1, -400.0, 420.0).map_err(|e| e.to_string())?;
    let plan = ExtractionPlan {
        rstar_series: vec![10.0],
        slice_times: MIDDLE_TIMES.to_vec(),
        ..ExtractionPlan::default()
    };
    let r = run(&d, &grid, &plan)?;
    Ok((d, r))
}

const MIDDLE_TIMES: [f64; 5] = [60.0, 70.0, 80.0, 90.0, 100.0];

/// Envelope slope at r* = 10 on t in [150, 400].
pub fn price_tail() -> Criterion {
    criterion("late-time tail (l=0 slope -3 +- 0.3, l=1 <= -4.5)", (|| {
        let slopes: Vec<f64> = [0u32, 1]
            .par_iter()
            .map(|&l| {
                let (_, r) = tail_run(l)?;
                let s = &r.series[0];
                tail_fit(&s.t, &s.psi, (150.0, 400.0))
                    .map(|f| f.exponent)
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<_, String>>()?;
        let pass = (slopes[0] + 3.0).abs() <= 0.3 && slopes[1] <= -4.5;
        Ok((pass, format!("slopes l=0 {:.3}, l=1 {:.3}", slopes[0], slopes[1])))
    })())
}

/// Energy in the middle region `|r*| <= t/2` after the wave has passed.
pub fn energy_middle_term() -> Criterion {
    criterion("energy middle term (lambda = t/2)", (|| {
        let (d, r) = tail_run(0)?;
        let e0 = energy_initial(&d).map_err(|e| e.to_string())?;
        let terms = middle_term(std::slice::from_ref(&r), e0, |t| 0.5 * t);
        let fr: Vec<f64> = terms.iter().map(|m| m.fraction_of_initial).collect();
        let monotone = fr.windows(2).all(|w| w[1] < w[0]);
        let last = *fr.last().ok_or("no slices recorded")?;
        let shown = fr.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
        Ok((monotone && last <= 1e-2, format!("fractions of E(0) at t=60..100: {shown}")))
    })())
}

/// Hölder exponent of the horizon-rescaled field for power-law data.
pub fn probe_exponent(lambda: f64) -> Result<f64, String> {
    let bh = BlackHole::default();
    let d = data(Family::HorizonDecay { lambda, scale: 4.0 }, 1.0, 0.0, 0)?;
    let grid = NullGrid::new(0.1, -200.0, 80.0).map_err(|e| e.to_string())?;
    let plan = ExtractionPlan {
        v_lines: vec![0.0],
        ..ExtractionPlan::default()
    };
    let r = run(&d, &grid, &plan)?;
    let line = rescaled_line(&r.v_lines[0], bh, ProbeEnd::Horizon).map_err(|e| e.to_string())?;
    regularity_probe(&line, &ProbeSettings::default(), Some(lambda))
        .map(|p| p.fit.exponent)
        .map_err(|e| e.to_string())
}

pub fn regularity() -> Criterion {
    criterion("regularity probe (delta = min(lambda, 1/2))", (|| {
        let lambdas = [0.2, 0.25, 0.35, 0.5];
        let deltas: Vec<f64> = lambdas
            .par_iter()
            .map(|&l| probe_exponent(l))
            .collect::<Result<_, String>>()?;
        let close = (deltas[1] - 0.25).abs() <= 0.1 && (deltas[3] - 0.5).abs() <= 0.1;
        let monotone = deltas[0] < deltas[2] && deltas[2] < deltas[3];
        let shown = lambdas
            .iter()
            .zip(&deltas)
            .map(|(l, d)| format!("{l}->{d:.4}"))
            .collect::<Vec<_>>()
            .join(" ");
        Ok((close && monotone, shown))
    })())
}

/// Largest error of the V = 0 scheme on `f(u) + g(v)` data, relative to peak.
pub fn free_wave_error() -> Result<f64, String> {
    let f = |u: f64| (-((u - 5.0) / 3.0).powi(2)).exp();
    let g = |v: f64| 0.5 * (-((v - 10.0) / 2.0).powi(2)).exp() - 0.3 * (-((v + 12.0) / 4.0).powi(2)).exp();
    let exact = |u: f64, v: f64| f(u) + g(v);
    let grid = NullGrid::new(0.1, -40.0, 40.0).map_err(|e| e.to_string())?;
    let n = grid.n();
    let null = NullData {
        diag0: (0..=n).map(|j| exact(grid.u(n - j), grid.v(j))).collect(),
        diag1: (0..n).map(|m| exact(grid.u(n - m), grid.v(m + 1))).collect(),
    };
    let plan = ExtractionPlan {
        snapshot_stride: Some(1),
        ..ExtractionPlan::default()
    };
    let r = evolve_null_data(&null, &PotentialTable::zero(&grid), &grid, &plan, Mode::axisymmetric(0))
        .map_err(|e| e.to_string())?;
    let snap = r.snapshot.ok_or("no snapshot")?;
    let mut err: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for k in 0..snap.psi.len() {
        let e = exact(snap.u[k], snap.v[k]);
        err = err.max((snap.psi[k] - e).abs());
        peak = peak.max(e.abs());
    }
    Ok(err / peak)
}

pub fn scheme_exactness() -> Criterion {
    criterion("scheme exactness (V = 0)", (|| {
        let rel = free_wave_error()?;
        Ok((rel <= 1e-12, format!("max error {rel:.3e} x peak")))
    })())
}

fn scratch_dir(tag: &str) -> PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let k = COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("radfield-{tag}-{}-{k}", std::process::id()))
}

/// Runs `config` twice into fresh directories and compares every file.
pub fn determinism(config: &RunConfig) -> Criterion {
    criterion("determinism (byte-identical outputs)", (|| {
        let mut listings = Vec::new();
        for _ in 0..2 {
            let dir = scratch_dir("check");
            let outcome = execute(config, None).map_err(|e| e.to_string())?;
            let files = write_outputs(&dir, &outcome).map_err(|e| e.to_string())?;
            let mut contents = Vec::new();
            for f in &files {
                let name = f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                contents.push((name, std::fs::read(f).map_err(|e| e.to_string())?));
            }
            let _ = std::fs::remove_dir_all(&dir);
            listings.push(contents);
        }
        let same = listings[0] == listings[1];
        let bytes: usize = listings[0].iter().map(|(_, c)| c.len()).sum();
        Ok((same, format!("{} files, {bytes} bytes", listings[0].len())))
    })())
}

/// Every criterion, with determinism checked on `config` (the reference
/// configuration when `None`).
pub fn battery(config: Option<&RunConfig>) -> Vec<Criterion> {
    let reference;
    let config = match config {
        Some(c) => Ok(c),
        None => match parse_config(REFERENCE_CONFIG) {
            Ok(c) => {
                reference = c;
                Ok(&reference)
            }
            Err(e) => Err(e),
        },
    };
    let mut out = vec![
        unitarity(),
        per_mode_unitarity(),
        support_thresholds(),
        time_reversal(),
        odd_battery(),
        price_tail(),
        energy_middle_term(),
        regularity(),
        scheme_exactness(),
    ];
    out.push(match config {
        Ok(c) => determinism(c),
        Err(e) => criterion("determinism (byte-identical outputs)", Err(e.to_string())),
    });
    out
}

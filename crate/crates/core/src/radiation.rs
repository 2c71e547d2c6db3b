//! Radiation fields, the conserved energy and the reports built on them.
//!
//! Energies use the convention with the factor one half,
//! `E = 1/2 ∫ [(1-2M/r)^{-1} (d_t u)^2 + (1-2M/r)(d_r u)^2 + |∇_ω u|^2/r^2] r^2 dr dω`,
//! under which the horizon and scri norms add up to `E(0)`.
//!
//! The horizon component is `d_v psi / r` sampled along `u = U_max` and the
//! scri component is `d_u psi` along `v = V_max`. Both are plain finite-line
//! quantities; the distance between the lines and the true boundaries is a
//! run parameter and shows up in the defect.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolve::{EvolveError, ModeRun};
use crate::geometry::{BlackHole, GeometryError};
use crate::modes::{Family, InitialDataSpec, Mode};
use crate::quadrature::{trapezoid, GaussLegendre};

/// Relative level below which a waveform counts as vanishing.
pub const DEFAULT_SILENCE_TOL: f64 = 1e-8;
/// Endpoint level, relative to the peak, above which a window is flagged.
pub const WINDOW_WARNING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadiationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error("energy integral does not converge for {family} data: {reason}")]
    NonIntegrable { family: &'static str, reason: String },
    #[error("energy quadrature did not settle: {0:e} relative change after refinement")]
    QuadratureNotConverged(f64),
    #[error("{0} runs but {1} energies")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Horizon,
    Scri,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Self::Horizon => "horizon",
            Self::Scri => "scri",
        }
    }
}

/// One mode's boundary waveform.
///
/// `time` is `v` (horizon) or `u` (scri), `dtpsi` is the derivative of `psi`
/// along the line in that parameter, and `value` is the radiation field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeWaveform {
    pub mode: Mode,
    pub time: Vec<f64>,
    pub psi: Vec<f64>,
    pub dtpsi: Vec<f64>,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiationField {
    pub component: Component,
    pub spacing: f64,
    pub waveforms: Vec<ModeWaveform>,
}

impl RadiationField {
    pub fn horizon(runs: &[ModeRun], bh: BlackHole) -> Result<Self, RadiationError> {
        let spacing = runs.first().map_or(0.0, |r| r.horizon.spacing);
        let waveforms = runs
            .iter()
            .map(|run| {
                let line = &run.horizon;
                let dtpsi = line.along()?;
                let value = line
                    .rstar
                    .iter()
                    .zip(&dtpsi)
                    .map(|(&s, &d)| Ok(d / bh.inverse_tortoise(s)?))
                    .collect::<Result<Vec<_>, GeometryError>>()?;
                Ok(ModeWaveform {
                    mode: run.mode,
                    time: line.param.clone(),
                    psi: line.psi.clone(),
                    dtpsi,
                    value,
                })
            })
            .collect::<Result<Vec<_>, RadiationError>>()?;
        Ok(Self {
            component: Component::Horizon,
            spacing,
            waveforms,
        })
    }

    pub fn scri(runs: &[ModeRun]) -> Result<Self, RadiationError> {
        let spacing = runs.first().map_or(0.0, |r| r.scri.spacing);
        let waveforms = runs
            .iter()
            .map(|run| {
                let line = &run.scri;
                let dtpsi = line.along()?;
                Ok(ModeWaveform {
                    mode: run.mode,
                    time: line.param.clone(),
                    psi: line.psi.clone(),
                    value: dtpsi.clone(),
                    dtpsi,
                })
            })
            .collect::<Result<Vec<_>, RadiationError>>()?;
        Ok(Self {
            component: Component::Scri,
            spacing,
            waveforms,
        })
    }

    /// Largest `|value|` over all modes.
    pub fn peak(&self) -> f64 {
        self.waveforms
            .iter()
            .flat_map(|w| &w.value)
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub component: Component,
    /// Weighted squared norm per mode, in waveform order.
    pub per_mode: Vec<f64>,
    pub total: f64,
    pub warnings: Vec<String>,
}

/// Weighted squared norms: `4M^2 ∫ R^2 dv` (horizon) or `∫ R^2 du` (scri),
/// by the trapezoid rule.
pub fn rf_norms(field: &RadiationField, bh: BlackHole) -> Norms {
    let weight = match field.component {
        Component::Horizon => 4.0 * bh.mass() * bh.mass(),
        Component::Scri => 1.0,
    };
    let mut warnings = Vec::new();
    let per_mode: Vec<f64> = field
        .waveforms
        .iter()
        .map(|w| {
            let peak = w.value.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if let (Some(first), Some(last)) = (w.value.first(), w.value.last()) {
                if peak > 0.0 && first.abs().max(last.abs()) > WINDOW_WARNING_TOL * peak {
                    warnings.push(format!(
                        "{} window too short for mode {}: endpoint at {:.3e} of peak",
                        field.component.name(),
                        w.mode,
                        first.abs().max(last.abs()) / peak
                    ));
                }
            }
            let sq: Vec<f64> = w.value.iter().map(|x| x * x).collect();
            weight * trapezoid(&sq, field.spacing)
        })
        .collect();
    Norms {
        component: field.component,
        total: per_mode.iter().sum(),
        per_mode,
        warnings,
    }
}

/// Energy density in `r*`: `1/2 [r^2 psidot^2 + r^2 phi'^2 + l(l+1) f phi^2]`.
fn density(data: &InitialDataSpec, bh: BlackHole, rstar: f64) -> f64 {
    let rho = bh
        .horizon_offset(rstar)
        .expect("horizon offset converges for finite r*");
    let r = bh.horizon_radius() + rho;
    let f = rho / r;
    let (phi, dphi, dot) = (data.phi(rstar), data.phi_drstar(rstar), data.psidot(rstar));
    0.5 * (r * r * (dot * dot + dphi * dphi) + data.mode.eigenvalue() * f * phi * phi)
}

struct EnergyPlan {
    lo: f64,
    hi: f64,
    panel: f64,
    tail_from_radius: Option<f64>,
}

fn energy_plan(data: &InitialDataSpec, bh: BlackHole) -> EnergyPlan {
    let m = bh.mass();
    match data.family {
        Family::CompactBump { center, halfwidth } => EnergyPlan {
            lo: center - halfwidth,
            hi: center + halfwidth,
            panel: halfwidth / 8.0,
            tail_from_radius: None,
        },
        Family::Gaussian { center, width } => EnergyPlan {
            lo: center - 12.0 * width,
            hi: center + 12.0 * width,
            panel: width / 4.0,
            tail_from_radius: None,
        },
        Family::HorizonDecay { lambda, scale } => {
            let outer = bh.horizon_radius() + 40.0 * scale + 20.0 * m;
            EnergyPlan {
                // the integrand decays like exp(lambda r* / 2M) down the throat
                lo: -(90.0 * m / lambda) - 10.0 * m,
                hi: bh.tortoise(outer).expect("outer radius is outside the horizon"),
                panel: m.min(scale),
                tail_from_radius: None,
            }
        }
        Family::ScriDecay { scale, .. } => {
            let outer = (60.0 * m).max(30.0 * scale + 10.0 * m);
            EnergyPlan {
                lo: -50.0 * m,
                hi: bh.tortoise(outer).expect("outer radius is outside the horizon"),
                panel: m.min(scale),
                tail_from_radius: Some(outer),
            }
        }
        Family::Custom { support, .. } => match support {
            Some((lo, hi)) => EnergyPlan {
                lo,
                hi,
                panel: ((hi - lo) / 64.0).min(m),
                tail_from_radius: None,
            },
            None => {
                let outer = 200.0 * m;
                EnergyPlan {
                    lo: -200.0 * m,
                    hi: bh.tortoise(outer).expect("outer radius is outside the horizon"),
                    panel: 0.5 * m,
                    tail_from_radius: Some(outer),
                }
            }
        },
    }
}

/// `∫_R^∞` of the density in `r`, over dyadic panels in `x = 1/r`.
fn energy_tail(
    data: &InitialDataSpec,
    bh: BlackHole,
    radius: f64,
    rule: &GaussLegendre,
) -> Result<f64, RadiationError> {
    let x0 = 1.0 / radius;
    let integrand = |x: f64| {
        let r = 1.0 / x;
        let rho = r - bh.horizon_radius();
        let rstar = bh.tortoise_from_offset(rho).expect("tail radius is outside the horizon");
        // dr* = dr / f and dr = dx / x^2
        density(data, bh, rstar) * r / rho / (x * x)
    };
    let mut total = 0.0;
    let mut recent = Vec::new();
    for k in 0..200 {
        let hi = x0 * 0.5f64.powi(k);
        let lo = 0.5 * hi;
        let piece = rule.integrate(lo, hi, integrand);
        if !piece.is_finite() {
            return Err(RadiationError::NonIntegrable {
                family: data.family.name(),
                reason: format!("non-finite energy density near r = {:e}", 1.0 / lo),
            });
        }
        total += piece;
        recent.push(piece);
        if k >= 8 && piece <= 1e-16 * total.abs().max(f64::MIN_POSITIVE) {
            return Ok(total);
        }
        if k >= 60 {
            let n = recent.len();
            let ratio = recent[n - 1] / recent[n - 11].max(f64::MIN_POSITIVE);
            if ratio > 0.9 {
                return Err(RadiationError::NonIntegrable {
                    family: data.family.name(),
                    reason: format!(
                        "dyadic tail contributions stopped shrinking (ratio {ratio:.3} over ten octaves)"
                    ),
                });
            }
        }
    }
    Ok(total)
}

/// Mode energy `E_l(0)` of the Cauchy data by composite Gauss–Legendre
/// quadrature in `r*`, doubled until two successive estimates agree to 1e-10.
pub fn energy_initial(data: &InitialDataSpec) -> Result<f64, RadiationError> {
    if data.is_zero() {
        return Ok(0.0);
    }
    let bh = data.black_hole();
    let plan = energy_plan(data, bh);
    let rule = GaussLegendre::new(16);
    let tail = match plan.tail_from_radius {
        Some(r) => energy_tail(data, bh, r, &rule)?,
        None => 0.0,
    };
    let mut panels = ((plan.hi - plan.lo) / plan.panel).ceil().max(1.0) as usize;
    let mut prev = rule.integrate_composite(plan.lo, plan.hi, panels, |s| density(data, bh, s));
    let mut change = f64::INFINITY;
    for _ in 0..6 {
        panels *= 2;
        let next = rule.integrate_composite(plan.lo, plan.hi, panels, |s| density(data, bh, s));
        change = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        prev = next;
        if change < 1e-10 {
            return Ok(prev + tail);
        }
    }
    Err(RadiationError::QuadratureNotConverged(change))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEnergy {
    pub mode: Mode,
    pub energy: f64,
    pub horizon_norm: f64,
    pub scri_norm: f64,
    /// `energy - horizon_norm - scri_norm`, signed.
    pub defect: f64,
    pub relative_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiddleTerm {
    pub t: f64,
    pub lambda: f64,
    pub value: f64,
    pub fraction_of_initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub modes: Vec<ModeEnergy>,
    pub total_energy: f64,
    pub total_horizon: f64,
    pub total_scri: f64,
    /// Sum of the per-mode defects.
    pub defect: f64,
    pub relative_defect: f64,
    pub middle_term: Vec<MiddleTerm>,
    pub warnings: Vec<String>,
}

fn relative(defect: f64, energy: f64) -> f64 {
    if energy > 0.0 {
        defect / energy
    } else {
        0.0
    }
}

/// Energy balance per mode and in total. `energies` follows `runs`.
pub fn unitarity_report(
    energies: &[f64],
    runs: &[ModeRun],
    bh: BlackHole,
    middle_lambda: impl Fn(f64) -> f64,
) -> Result<EnergyReport, RadiationError> {
    if energies.len() != runs.len() {
        return Err(RadiationError::LengthMismatch(runs.len(), energies.len()));
    }
    let horizon = rf_norms(&RadiationField::horizon(runs, bh)?, bh);
    let scri = rf_norms(&RadiationField::scri(runs)?, bh);
    let modes: Vec<ModeEnergy> = runs
        .iter()
        .enumerate()
        .map(|(k, run)| {
            let defect = energies[k] - horizon.per_mode[k] - scri.per_mode[k];
            ModeEnergy {
                mode: run.mode,
                energy: energies[k],
                horizon_norm: horizon.per_mode[k],
                scri_norm: scri.per_mode[k],
                defect,
                relative_defect: relative(defect, energies[k]),
            }
        })
        .collect();
    let total_energy: f64 = energies.iter().sum();
    let defect: f64 = modes.iter().map(|m| m.defect).sum();
    let mut warnings = horizon.warnings.clone();
    warnings.extend(scri.warnings.iter().cloned());
    Ok(EnergyReport {
        total_horizon: horizon.total,
        total_scri: scri.total,
        relative_defect: relative(defect, total_energy),
        middle_term: middle_term(runs, total_energy, middle_lambda),
        modes,
        total_energy,
        defect,
        warnings,
    })
}

/// Energy in `lambda - t <= r* <= t - lambda` on every recorded slice,
/// summed over modes.
pub fn middle_term(
    runs: &[ModeRun],
    initial_energy: f64,
    lambda: impl Fn(f64) -> f64,
) -> Vec<MiddleTerm> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    (0..first.slices.len())
        .map(|k| {
            let t = first.slices[k].t;
            let lam = lambda(t);
            let value: f64 = runs
                .iter()
                .map(|run| run.slices[k].energy_between(lam - t, t - lam))
                .sum();
            MiddleTerm {
                t,
                lambda: lam,
                value,
                fraction_of_initial: relative(value, initial_energy),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum Activation {
    Silent,
    At { time: f64, index: usize },
}

/// Earliest sample at which any mode exceeds `tol_rel` times the field's
/// global peak.
pub fn support_threshold(field: &RadiationField, tol_rel: f64) -> Activation {
    let peak = field.peak();
    if peak == 0.0 {
        return Activation::Silent;
    }
    let tol = tol_rel * peak;
    field
        .waveforms
        .iter()
        .filter_map(|w| {
            w.value
                .iter()
                .position(|x| x.abs() > tol)
                .map(|k| (w.time[k], k))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map_or(Activation::Silent, |(time, index)| Activation::At { time, index })
}

/// Activation times implied by a support window `[r*_in, r*_out]`: the
/// horizon field starts at `v = r*_in` and the scri field at `u = -r*_out`.
pub fn predicted_thresholds(window: (f64, f64)) -> (f64, f64) {
    (window.0, -window.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub component: Component,
    pub predicted: f64,
    pub measured: Activation,
    /// `(measured - predicted) / h`.
    pub gap_cells: Option<f64>,
    pub pass: bool,
}

pub fn threshold_check(
    field: &RadiationField,
    predicted: f64,
    tol_rel: f64,
    max_gap_cells: f64,
) -> ThresholdCheck {
    let measured = support_threshold(field, tol_rel);
    let gap_cells = match measured {
        Activation::At { time, .. } => Some((time - predicted) / field.spacing),
        Activation::Silent => None,
    };
    ThresholdCheck {
        component: field.component,
        predicted,
        measured,
        gap_cells,
        pass: gap_cells.is_some_and(|g| g.abs() <= max_gap_cells),
    }
}

/// The backward field of a solution from the forward field of its
/// time-reversed run: `R_-(s) = -R_+^{rev}(-s)`. Samples are returned in
/// increasing `s`.
pub fn backward_field(reversed_forward: &ModeWaveform) -> ModeWaveform {
    let rev = |xs: &[f64], sign: f64| xs.iter().rev().map(|x| sign * x).collect::<Vec<_>>();
    ModeWaveform {
        mode: reversed_forward.mode,
        time: rev(&reversed_forward.time, -1.0),
        psi: rev(&reversed_forward.psi, 1.0),
        dtpsi: rev(&reversed_forward.dtpsi, -1.0),
        value: rev(&reversed_forward.value, -1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversalCheck {
    pub mode: Mode,
    /// `max |R_+(τ) - s R_-(-τ)|` with `s = +1` for odd data and `-1` for even.
    pub residual: f64,
    pub peak: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the forward horizon field with the mirrored backward field.
/// `even` selects the `psidot = 0` parity, which carries a sign.
pub fn reversal_check(
    forward: &ModeWaveform,
    reversed_forward: &ModeWaveform,
    even: bool,
    h: f64,
) -> ReversalCheck {
    let backward = backward_field(reversed_forward);
    let sign = if even { -1.0 } else { 1.0 };
    // R_-(-τ) at τ = time[k] is backward.value at the mirrored index
    let n = forward.value.len().min(backward.value.len());
    let residual = (0..n)
        .map(|k| {
            let mirrored = backward.value[backward.value.len() - 1 - k];
            (forward.value[k] - sign * mirrored).abs()
        })
        .fold(0.0, f64::max);
    let peak = forward.value.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tolerance = 5.0 * h * h * peak;
    ReversalCheck {
        mode: forward.mode,
        residual,
        peak,
        tolerance,
        pass: residual <= tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVerdict {
    pub label: String,
    pub horizon_norm: f64,
    pub data_scale: f64,
    pub ratio: f64,
    pub silent: bool,
}

/// `||R_E|| / ||psi||` for odd data, with `||psi||^2 = ∫ r^2 psidot^2 dr*`.
pub fn support_verdict(
    label: impl Into<String>,
    data: &InitialDataSpec,
    run: &ModeRun,
    bh: BlackHole,
    floor: f64,
) -> Result<SupportVerdict, RadiationError> {
    let field = RadiationField::horizon(std::slice::from_ref(run), bh)?;
    let sq: Vec<f64> = field.waveforms[0].value.iter().map(|x| x * x).collect();
    let horizon_norm = trapezoid(&sq, field.spacing).sqrt();
    let data_scale = (2.0 * energy_initial(&data.with_phi_zero())?).sqrt();
    let ratio = if data_scale > 0.0 {
        horizon_norm / data_scale
    } else {
        0.0
    };
    Ok(SupportVerdict {
        label: label.into(),
        horizon_norm,
        data_scale,
        ratio,
        silent: ratio <= floor,
    })
}

/// Extra flux expected beyond the end of a waveform, from a power-law fit
/// `|R| ~ c time^{-p}` over its last quarter, relative to the flux inside.
pub fn tail_budget_estimate(w: &ModeWaveform) -> Option<f64> {
    let n = w.value.len();
    if n < 16 {
        return None;
    }
    let start = n - n / 4;
    let t0 = w.time[start];
    let t1 = w.time[n - 1];
    if t0 <= 0.0 {
        return None;
    }
    let (a, b) = (w.value[start].abs(), w.value[n - 1].abs());
    if a == 0.0 || b == 0.0 {
        return Some(0.0);
    }
    let p = -(b / a).ln() / (t1 / t0).ln();
    let spacing = w.time[1] - w.time[0];
    let sq: Vec<f64> = w.value.iter().map(|x| x * x).collect();
    let inside = trapezoid(&sq, spacing);
    if inside == 0.0 {
        return Some(0.0);
    }
    if p <= 0.5 {
        return Some(f64::INFINITY);
    }
    Some(b * b * t1 / (2.0 * p - 1.0) / inside)
}

impl InitialDataSpec {
    fn with_phi_zero(&self) -> Self {
        let mut d = self.clone();
        d.phi_amplitude = 0.0;
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::make_initial_data;
    use std::sync::Arc;

    fn bh() -> BlackHole {
        BlackHole::default()
    }

    fn gaussian(phi: f64, dot: f64, l: u32) -> InitialDataSpec {
        make_initial_data(
            Family::Gaussian { center: 20.0, width: 2.0 },
            phi,
            dot,
            Mode::axisymmetric(l),
            bh(),
        )
        .unwrap()
    }

    #[test]
    fn zero_data_has_zero_energy() {
        assert_eq!(energy_initial(&gaussian(0.0, 0.0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn energy_is_quadratic() {
        let e1 = energy_initial(&gaussian(0.3, 0.7, 1)).unwrap();
        let e2 = energy_initial(&gaussian(0.6, 1.4, 1)).unwrap();
        assert!((e2 - 4.0 * e1).abs() < 1e-12 * e2);
    }

    #[test]
    fn gaussian_energy_oracle() {
        // independent adaptive quadrature in r of 1/2 (1-2/r)^{-1} exp(-(r*-20)^2/4) r^2
        let e = energy_initial(&gaussian(0.0, 1.0, 0)).unwrap();
        let oracle = 395.908_981_862_317_22;
        assert!((e - oracle).abs() < 1e-10 * oracle, "{e}");
    }

    #[test]
    fn decay_family_energies_are_finite() {
        for fam in [
            Family::HorizonDecay { lambda: 0.25, scale: 5.0 },
            Family::ScriDecay { lambda: 0.3, scale: 2.0 },
            Family::ScriDecay { lambda: 2.0, scale: 2.0 },
        ] {
            let d = make_initial_data(fam.clone(), 1.0, 1.0, Mode::axisymmetric(1), bh()).unwrap();
            let e = energy_initial(&d).unwrap();
            assert!(e.is_finite() && e > 0.0, "{fam:?}: {e}");
        }
    }

    #[test]
    fn scri_decay_tail_matches_direct_sum() {
        // cross-check the 1/r tail against a long direct r* integral
        let d = make_initial_data(
            Family::ScriDecay { lambda: 2.0, scale: 2.0 },
            1.0,
            1.0,
            Mode::axisymmetric(1),
            bh(),
        )
        .unwrap();
        let e = energy_initial(&d).unwrap();
        let rule = GaussLegendre::new(16);
        let direct = rule.integrate_composite(-50.0, 20_000.0, 80_000, |s| density(&d, bh(), s));
        // remaining beyond r ~ 2e4 is ~ r^{-5}, far below the tolerance
        assert!((e - direct).abs() < 1e-9 * e, "{e} vs {direct}");
    }

    #[test]
    fn non_integrable_data_rejected() {
        let flat: crate::modes::ProfileFn = Arc::new(|_| (1.0, 0.0));
        let zero: crate::modes::ProfileFn = Arc::new(|_| (0.0, 0.0));
        let d = make_initial_data(
            Family::Custom { phi: zero, psidot: flat, support: None },
            1.0,
            1.0,
            Mode::axisymmetric(0),
            bh(),
        )
        .unwrap();
        assert!(matches!(
            energy_initial(&d),
            Err(RadiationError::NonIntegrable { .. })
        ));
    }

    #[test]
    fn energy_additive_across_modes() {
        // u(r*, θ) = Σ c_l(r*) Pbar_l(cos θ) / sqrt(2π); total energy from a
        // direct 2D integral equals the sum of the mode energies.
        use crate::quadrature::legendre_normalized;
        let amps = [0.8, -0.5, 0.3];
        let centres = [15.0, 18.0, 22.0];
        let specs: Vec<InitialDataSpec> = (0..3)
            .map(|l| {
                make_initial_data(
                    Family::Gaussian { center: centres[l], width: 1.5 },
                    amps[l],
                    0.5 * amps[l],
                    Mode::axisymmetric(l as u32),
                    bh(),
                )
                .unwrap()
            })
            .collect();
        let sum: f64 = specs.iter().map(|d| energy_initial(d).unwrap()).sum();
        let ang = GaussLegendre::new(12);
        let radial = GaussLegendre::new(16);
        let two_pi = 2.0 * std::f64::consts::PI;
        let total = radial.integrate_composite(0.0, 40.0, 320, |s| {
            let r = bh().inverse_tortoise(s).unwrap();
            let f = 1.0 - 2.0 / r;
            ang.integrate(-1.0, 1.0, |x| {
                let sin2 = 1.0 - x * x;
                let (mut u, mut ut, mut us, mut ux) = (0.0, 0.0, 0.0, 0.0);
                for (l, d) in specs.iter().enumerate() {
                    let p = legendre_normalized(l as u32, x) / two_pi.sqrt();
                    // d/dx Pbar_l for l ≤ 2
                    let dp = match l {
                        0 => 0.0,
                        1 => (1.5f64).sqrt(),
                        _ => (2.5f64).sqrt() * 3.0 * x,
                    } / two_pi.sqrt();
                    u += d.phi(s) * p;
                    ut += d.psidot(s) * p;
                    us += d.phi_drstar(s) * p;
                    ux += d.phi(s) * dp;
                }
                // |∇_ω u|^2 = (1 - x^2) (du/dx)^2 for axisymmetric u
                0.5 * (r * r * (ut * ut + us * us) + f * sin2 * ux * ux) * two_pi + 0.0 * u
            })
        });
        assert!((total - sum).abs() < 1e-9 * sum, "{total} vs {sum}");
    }

    fn synthetic(component: Component, values: Vec<f64>, spacing: f64) -> RadiationField {
        let n = values.len();
        RadiationField {
            component,
            spacing,
            waveforms: vec![ModeWaveform {
                mode: Mode::axisymmetric(0),
                time: (0..n).map(|k| k as f64 * spacing).collect(),
                psi: vec![0.0; n],
                dtpsi: values.clone(),
                value: values,
            }],
        }
    }

    #[test]
    fn norms_of_simple_fields() {
        let bh = BlackHole::new(1.5).unwrap();
        let zero = synthetic(Component::Scri, vec![0.0; 20], 0.1);
        assert_eq!(rf_norms(&zero, bh).total, 0.0);
        // boxcar of height c on [1, 3] with zero padding: trapezoid gives c^2 L
        let (c, h) = (0.7, 0.25);
        let values: Vec<f64> = (0..=20)
            .map(|k| {
                let t = f64::from(k) * h;
                if (1.0..=3.0).contains(&t) { c } else { 0.0 }
            })
            .collect();
        let scri = rf_norms(&synthetic(Component::Scri, values.clone(), h), bh);
        let hor = rf_norms(&synthetic(Component::Horizon, values, h), bh);
        let l = 2.0 + h;
        assert!((scri.total - c * c * l).abs() < 1e-14);
        assert!((hor.total - 4.0 * 1.5 * 1.5 * c * c * l).abs() < 1e-13);
        assert!(scri.warnings.is_empty());
    }

    #[test]
    fn short_window_warns() {
        let f = synthetic(Component::Scri, vec![1.0; 10], 0.1);
        assert_eq!(rf_norms(&f, bh()).warnings.len(), 1);
    }

    #[test]
    fn thresholds_on_synthetic_fields() {
        let zero = synthetic(Component::Horizon, vec![0.0; 30], 0.1);
        assert_eq!(support_threshold(&zero, 1e-8), Activation::Silent);
        let mut v = vec![0.0; 30];
        v[12] = 1e-12;
        v[13] = 0.5;
        v[14] = 1.0;
        let f = synthetic(Component::Scri, v, 0.1);
        match support_threshold(&f, 1e-8) {
            Activation::At { time, index } => {
                assert_eq!(index, 13);
                assert!((time - 1.3).abs() < 1e-12);
            }
            Activation::Silent => panic!("should activate"),
        }
        let check = threshold_check(&f, 1.2, 1e-8, 2.0);
        assert!(check.pass);
        assert_eq!(predicted_thresholds((10.0, 14.0)), (10.0, -14.0));
    }

    #[test]
    fn backward_field_mirrors() {
        let w = ModeWaveform {
            mode: Mode::axisymmetric(0),
            time: vec![-1.0, 0.0, 1.0, 2.0],
            psi: vec![0.0; 4],
            dtpsi: vec![1.0, 2.0, 3.0, 4.0],
            value: vec![1.0, 2.0, 3.0, 4.0],
        };
        let b = backward_field(&w);
        assert_eq!(b.time, vec![-2.0, -1.0, 0.0, 1.0]);
        assert_eq!(b.value, vec![-4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn tail_budget_of_power_law() {
        let n = 4000;
        let time: Vec<f64> = (0..n).map(|k| 10.0 + 0.1 * k as f64).collect();
        let value: Vec<f64> = time.iter().map(|t| t.powi(-4)).collect();
        let w = ModeWaveform {
            mode: Mode::axisymmetric(0),
            time: time.clone(),
            psi: vec![0.0; n],
            dtpsi: value.clone(),
            value,
        };
        let est = tail_budget_estimate(&w).unwrap();
        let t1 = time[n - 1];
        let exact = t1.powi(-7) / 7.0 / ((10f64.powi(-7) - t1.powi(-7)) / 7.0);
        assert!((est - exact).abs() < 0.05 * exact, "{est} vs {exact}");
    }
}

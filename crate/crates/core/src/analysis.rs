//! Convergence orders, late-time tail fits and boundary regularity probes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolve::{EvolveError, LineKind, LineRecord};
use crate::geometry::{BlackHole, GeometryError};

/// Minimum number of points in any fit.
pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("fit window [{lo}, {hi}] holds {got} usable samples, need {MIN_FIT_SAMPLES}")]
    WindowUnderflow { lo: f64, hi: f64, got: usize },
    #[error("probe has {got} usable ladder points above the noise floor, need {MIN_FIT_SAMPLES}")]
    InsufficientSamples { got: usize },
    #[error("probe needs a {expected:?} line")]
    WrongLine { expected: LineKind },
    #[error("w^k is only available for k <= 1, got {0}")]
    UnsupportedOrder(u32),
    #[error("waveforms have lengths {0}, {1}, {2}")]
    Misaligned(usize, usize, usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// Largest deviation from the fitted line in log space.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    (slope, intercept, residual)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Order {
    Observed(f64),
    /// One of the successive differences vanished.
    Undefined,
}

impl Order {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Observed(p) => Some(p),
            Self::Undefined => None,
        }
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `log2(||c - m|| / ||m - f||)` on waveforms already restricted to common
/// points.
pub fn self_convergence(coarse: &[f64], mid: &[f64], fine: &[f64]) -> Result<Order, AnalysisError> {
    if coarse.len() != mid.len() || mid.len() != fine.len() {
        return Err(AnalysisError::Misaligned(coarse.len(), mid.len(), fine.len()));
    }
    let (d1, d2) = (l2(coarse, mid), l2(mid, fine));
    if d1 == 0.0 || d2 == 0.0 {
        return Ok(Order::Undefined);
    }
    Ok(Order::Observed((d1 / d2).log2()))
}

/// Same quantity for three scalar estimates.
pub fn scalar_order(coarse: f64, mid: f64, fine: f64) -> Order {
    let (d1, d2) = ((coarse - mid).abs(), (mid - fine).abs());
    if d1 == 0.0 || d2 == 0.0 {
        Order::Undefined
    } else {
        Order::Observed((d1 / d2).log2())
    }
}

/// Every `stride`-th sample, for comparing nested resolutions.
pub fn restrict(samples: &[f64], stride: usize) -> Vec<f64> {
    samples.iter().step_by(stride.max(1)).copied().collect()
}

/// Power-law exponent of `|psi(t)|` over `window`, fitted on the local
/// maxima of `|psi|` so that residual ringing does not bias the slope. A
/// series without interior maxima is fitted as a whole.
pub fn tail_fit(t: &[f64], psi: &[f64], window: (f64, f64)) -> Result<FitResult, AnalysisError> {
    let (lo, hi) = window;
    let idx: Vec<usize> = (0..t.len().min(psi.len()))
        .filter(|&k| t[k] >= lo && t[k] <= hi && t[k] > 0.0)
        .collect();
    let underflow = |got| AnalysisError::WindowUnderflow { lo, hi, got };
    if idx.len() < MIN_FIT_SAMPLES {
        return Err(underflow(idx.len()));
    }
    let mags: Vec<f64> = idx.iter().map(|&k| psi[k].abs()).collect();
    let maxima: Vec<usize> = (1..mags.len() - 1)
        .filter(|&k| mags[k] > 0.0 && mags[k] >= mags[k - 1] && mags[k] > mags[k + 1])
        .collect();
    let chosen: Vec<usize> = if maxima.len() >= MIN_FIT_SAMPLES {
        maxima
    } else {
        (0..mags.len()).filter(|&k| mags[k] > 0.0).collect()
    };
    if chosen.len() < MIN_FIT_SAMPLES {
        return Err(underflow(chosen.len()));
    }
    let xs: Vec<f64> = chosen.iter().map(|&k| t[idx[k]].ln()).collect();
    let ys: Vec<f64> = chosen.iter().map(|&k| mags[k].ln()).collect();
    let (exponent, intercept, residual) = linear_fit(&xs, &ys);
    Ok(FitResult {
        exponent,
        intercept,
        window,
        residual,
        samples: chosen.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeEnd {
    Horizon,
    Scri,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    /// Line parameter at which the ladder starts (`u` for the horizon,
    /// `v` for scri).
    pub start: f64,
    /// Line parameter beyond which samples are not used.
    pub stop: f64,
    /// `|D_k|` below `noise_floor * max|u~|` is dropped.
    pub noise_floor: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            start: 30.0,
            stop: 150.0,
            noise_floor: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub end: ProbeEnd,
    pub fit: FitResult,
    /// `min(lambda, 1/2)` when a decay rate was supplied.
    pub predicted: Option<f64>,
    pub ladder_a: Vec<f64>,
    pub ladder_diff: Vec<f64>,
}

/// Boundary coordinate `a` (or `a_bar`) and rescaled field along a probe
/// line, in line order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledLine {
    pub end: ProbeEnd,
    pub param: Vec<f64>,
    pub log_a: Vec<f64>,
    pub field: Vec<f64>,
}

/// `u~ = 2 sqrt(M) b u` near the horizon (constant-`v` line) or
/// `u~ = r u = psi` near scri (constant-`u` line), against the corner
/// coordinate that goes to zero along the line.
pub fn rescaled_line(line: &LineRecord, bh: BlackHole, end: ProbeEnd) -> Result<RescaledLine, AnalysisError> {
    let m = bh.mass();
    let mut log_a = Vec::with_capacity(line.len());
    let mut field = Vec::with_capacity(line.len());
    match end {
        ProbeEnd::Horizon => {
            if line.kind != LineKind::ConstV {
                return Err(AnalysisError::WrongLine { expected: LineKind::ConstV });
            }
            let v = line.fixed;
            for k in 0..line.len() {
                let r = bh.inverse_tortoise(line.rstar[k])?;
                let t = 0.5 * (line.param[k] + v);
                log_a.push(-(t + r) / (2.0 * m));
                field.push(2.0 * m.sqrt() * (v / (4.0 * m)).exp() * line.psi[k] / r);
            }
        }
        ProbeEnd::Scri => {
            if line.kind != LineKind::ConstU {
                return Err(AnalysisError::WrongLine { expected: LineKind::ConstU });
            }
            let u = line.fixed;
            for k in 0..line.len() {
                let r = bh.inverse_tortoise(line.rstar[k])?;
                // a_bar = (-t + r*) / r = -u / r, positive for u < 0
                log_a.push((-u / r).ln());
                field.push(line.psi[k]);
            }
        }
    }
    Ok(RescaledLine {
        end,
        param: line.param.clone(),
        log_a,
        field,
    })
}

/// Four-point Lagrange interpolation of `ys(xs)` at `x`; `xs` monotone.
fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n < 4 {
        return None;
    }
    let decreasing = xs[0] > xs[n - 1];
    let pos = if decreasing {
        xs.partition_point(|&t| t > x)
    } else {
        xs.partition_point(|&t| t < x)
    };
    if pos == 0 || pos >= n {
        return None;
    }
    let start = pos.saturating_sub(2).min(n - 4);
    let (px, py) = (&xs[start..start + 4], &ys[start..start + 4]);
    let mut acc = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (x - px[j]) / (px[i] - px[j]);
            }
        }
        acc += w * py[i];
    }
    Some(acc)
}

/// Hölder exponent of the rescaled field at the boundary from a dyadic
/// ladder `a_k = a_0 2^{-k}`: with `D_k = u~(a_k) - u~(a_{k+1})`, the slope
/// of `log|D_k|` against `log a_k`.
pub fn regularity_probe(
    line: &RescaledLine,
    settings: &ProbeSettings,
    lambda: Option<f64>,
) -> Result<ProbeResult, AnalysisError> {
    let keep: Vec<usize> = (0..line.param.len())
        .filter(|&k| line.param[k] >= settings.start - 1.0 && line.param[k] <= settings.stop + 1.0)
        .collect();
    let xs: Vec<f64> = keep.iter().map(|&k| line.log_a[k]).collect();
    let ys: Vec<f64> = keep.iter().map(|&k| line.field[k]).collect();
    let insufficient = |got| AnalysisError::InsufficientSamples { got };
    let first = keep
        .iter()
        .position(|&k| line.param[k] >= settings.start)
        .ok_or(insufficient(0))?;
    let last = keep
        .iter()
        .rposition(|&k| line.param[k] <= settings.stop)
        .ok_or(insufficient(0))?;
    let (la0, la_end) = (xs[first], xs[last]);
    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let ln2 = std::f64::consts::LN_2;
    let mut values = Vec::new();
    let mut k = 0;
    loop {
        let la = la0 - k as f64 * ln2;
        if la < la_end {
            break;
        }
        match lagrange4(&xs, &ys, la) {
            Some(v) => values.push((la, v)),
            None => break,
        }
        k += 1;
    }
    let mut ladder_a = Vec::new();
    let mut ladder_diff = Vec::new();
    let mut fx = Vec::new();
    let mut fy = Vec::new();
    for w in values.windows(2) {
        let d = w[0].1 - w[1].1;
        ladder_a.push(w[0].0.exp());
        ladder_diff.push(d);
        if d.abs() > settings.noise_floor * scale && d != 0.0 {
            fx.push(w[0].0);
            fy.push(d.abs().ln());
        }
    }
    if fx.len() < MIN_FIT_SAMPLES {
        return Err(insufficient(fx.len()));
    }
    let (exponent, intercept, residual) = linear_fit(&fx, &fy);
    Ok(ProbeResult {
        end: line.end,
        fit: FitResult {
            exponent,
            intercept,
            window: (settings.start, settings.stop),
            residual,
            samples: fx.len(),
        },
        predicted: lambda.map(|l| l.min(0.5)),
        ladder_a,
        ladder_diff,
    })
}

/// `w^0 = u~` and `w^1 = (b d_b - lambda - 1) u~` along a probe line.
///
/// Horizon (constant `v`): `b d_b = 4M d_v - 2(r + rho) d_u` at fixed `a`,
/// with the `u~` derivatives assembled from `psi_u` (along) and `psi_v`
/// (transverse). Scri (constant `u`): `b_bar d_b_bar = -u d_u - (u + 2r/f) d_v`
/// at fixed `a_bar`, applied to `u~ = psi`, with the shift fixed at one.
pub fn wk_terms(
    line: &LineRecord,
    bh: BlackHole,
    end: ProbeEnd,
    k: u32,
    lambda: f64,
) -> Result<RescaledLine, AnalysisError> {
    let base = rescaled_line(line, bh, end)?;
    match k {
        0 => Ok(base),
        1 => {
            let along = line.along()?;
            let m = bh.mass();
            let mut field = Vec::with_capacity(line.len());
            for i in 0..line.len() {
                let rho = bh.horizon_offset(line.rstar[i])?;
                let r = bh.horizon_radius() + rho;
                let f = rho / r;
                let psi = line.psi[i];
                let value = match end {
                    ProbeEnd::Horizon => {
                        let (psi_u, psi_v) = (along[i], line.transverse[i]);
                        let pref = 2.0 * m.sqrt() * (line.fixed / (4.0 * m)).exp();
                        let du = pref * (psi_u / r + psi * f / (2.0 * r * r));
                        let dv = base.field[i] / (4.0 * m) + pref * (psi_v / r - psi * f / (2.0 * r * r));
                        4.0 * m * dv - 2.0 * (r + rho) * du - (lambda + 1.0) * base.field[i]
                    }
                    ProbeEnd::Scri => {
                        let u = line.fixed;
                        let (psi_v, psi_u) = (along[i], line.transverse[i]);
                        -u * psi_u - (u + 2.0 * r / f) * psi_v - (lambda + 1.0) * psi
                    }
                };
                field.push(value);
            }
            Ok(RescaledLine { field, ..base })
        }
        _ => Err(AnalysisError::UnsupportedOrder(k)),
    }
}

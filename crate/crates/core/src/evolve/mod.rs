//! Characteristic evolution of one mode's `psi = r u_l`.
//!
//! In null coordinates the mode equation reads `psi_uv = -(V/4) psi`. The
//! lattice is the domain of dependence of the Cauchy interval, so no
//! boundary condition is ever imposed. Each diamond is closed by
//! [`step_diamond`] and the sweep keeps three rows in memory.

mod grid;
mod records;

pub use grid::{NullGrid, PotentialTable};
pub use records::{
    extract_time_derivative, LineKind, LineRecord, SeriesRecord, SliceRecord, Snapshot,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::modes::{InitialDataSpec, Mode};

/// Growth factor over the initial maximum treated as a blow-up.
pub const INSTABILITY_FACTOR: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("need at least 3 samples to differentiate, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{what} = {value} is not on the lattice")]
    OffGrid { what: &'static str, value: f64 },
    #[error("data support [{lo}, {hi}] is not inside the Cauchy interval [{a}, {b}]")]
    SupportOutsideGrid { lo: f64, hi: f64, a: f64, b: f64 },
    #[error(
        "numerical instability at u = {u} (row {row}): max |psi| = {max:e} against initial {initial:e}"
    )]
    Unstable {
        row: usize,
        u: f64,
        max: f64,
        initial: f64,
    },
}

/// Closes one diamond: `psi_N = psi_E + psi_W - psi_S - (h^2/8) V_c (psi_E + psi_W)`.
#[inline]
pub fn step_diamond(psi_w: f64, psi_e: f64, psi_s: f64, v_c: f64, h: f64) -> f64 {
    psi_e + psi_w - psi_s - 0.125 * h * h * v_c * (psi_e + psi_w)
}

/// Characteristic data on the first two diagonals.
///
/// `diag0[j]` is `psi` at `t = 0`, `r* = A + j h`; `diag1[m]` is `psi` at
/// `t = h/2`, `r* = A + (m + 1/2) h`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullData {
    pub diag0: Vec<f64>,
    pub diag1: Vec<f64>,
}

impl NullData {
    pub fn max_abs(&self) -> f64 {
        self.diag0
            .iter()
            .chain(&self.diag1)
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Null data from `psi(0, r*)` and `psi_t(0, r*)`.
///
/// The half-step diagonal comes from a Taylor expansion in `t` through third
/// order, using `psi_tt = psi_r*r* - V psi` and its time derivative with
/// centred second differences in `r*`.
pub fn null_data_from_cauchy(
    psi0: impl Fn(f64) -> f64,
    psit0: impl Fn(f64) -> f64,
    grid: &NullGrid,
    potential: &PotentialTable,
) -> NullData {
    let n = grid.n();
    let h = grid.h();
    let p0: Vec<f64> = (0..=2 * n).map(|k| psi0(grid.rstar_at(k))).collect();
    let pt: Vec<f64> = (0..=2 * n).map(|k| psit0(grid.rstar_at(k))).collect();
    let pot = potential.values();
    let dt = 0.5 * h;
    let inv_d2 = 1.0 / (dt * dt);
    let diag0 = (0..=n).map(|j| p0[2 * j]).collect();
    let diag1 = (0..n)
        .map(|m| {
            let c = 2 * m + 1;
            let lap0 = (p0[c - 1] - 2.0 * p0[c] + p0[c + 1]) * inv_d2;
            let lapt = (pt[c - 1] - 2.0 * pt[c] + pt[c + 1]) * inv_d2;
            let v = pot[c];
            p0[c]
                + dt * pt[c]
                + 0.5 * dt * dt * (lap0 - v * p0[c])
                + dt * dt * dt / 6.0 * (lapt - v * pt[c])
        })
        .collect();
    NullData { diag0, diag1 }
}

/// Null data for a mode's Cauchy data: `psi = r phi`, `psi_t = r psidot`.
pub fn cauchy_to_null(
    data: &InitialDataSpec,
    grid: &NullGrid,
    potential: &PotentialTable,
) -> Result<NullData, EvolveError> {
    if data.is_zero() {
        return Ok(NullData {
            diag0: vec![0.0; grid.n() + 1],
            diag1: vec![0.0; grid.n()],
        });
    }
    let bh = data.black_hole();
    let radius = |s: f64| bh.inverse_tortoise(s);
    // surface any geometry failure before the closures, which cannot return errors
    radius(grid.rstar_min())?;
    radius(grid.rstar_max())?;
    let r = |s: f64| radius(s).expect("inverse tortoise converges for finite r*");
    Ok(null_data_from_cauchy(
        |s| r(s) * data.phi(s),
        |s| r(s) * data.psidot(s),
        grid,
        potential,
    ))
}

/// What to record during a sweep beyond the two boundary lines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionPlan {
    /// Extra constant-`u` lines.
    pub u_lines: Vec<f64>,
    /// Extra constant-`v` lines.
    pub v_lines: Vec<f64>,
    /// Fixed-`r*` time series; each `r*` must be a multiple of `h/2` from `A`.
    pub rstar_series: Vec<f64>,
    /// Times of `t = const` slices, rounded to the nearest multiple of `h/2`.
    pub slice_times: Vec<f64>,
    pub snapshot_stride: Option<usize>,
}

/// Everything recorded from one mode's sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRun {
    pub mode: Mode,
    pub grid: NullGrid,
    /// `u = U_max`, parametrised by `v`.
    pub horizon: LineRecord,
    /// `v = V_max`, parametrised by `u`.
    pub scri: LineRecord,
    pub u_lines: Vec<LineRecord>,
    pub v_lines: Vec<LineRecord>,
    pub series: Vec<SeriesRecord>,
    pub slices: Vec<SliceRecord>,
    pub snapshot: Option<Snapshot>,
    pub initial_max: f64,
}

/// Evolves one mode from its Cauchy data under the Regge–Wheeler potential.
pub fn evolve_mode(
    data: &InitialDataSpec,
    grid: &NullGrid,
    plan: &ExtractionPlan,
) -> Result<ModeRun, EvolveError> {
    if let Some((lo, hi)) = data.support() {
        if lo < grid.rstar_min() || hi > grid.rstar_max() {
            return Err(EvolveError::SupportOutsideGrid {
                lo,
                hi,
                a: grid.rstar_min(),
                b: grid.rstar_max(),
            });
        }
    }
    let pot = PotentialTable::regge_wheeler(data.black_hole(), data.mode.l, grid)?;
    let null = cauchy_to_null(data, grid, &pot)?;
    evolve_null_data(&null, &pot, grid, plan, data.mode)
}

struct SliceAcc {
    m: usize,
    diags: [Vec<f64>; 3],
}

fn transverse(a: f64, b: Option<f64>, c: Option<f64>, h: f64) -> f64 {
    match (b, c) {
        (Some(b), Some(c)) => (3.0 * a - 4.0 * b + c) / (2.0 * h),
        (Some(b), None) => (a - b) / h,
        _ => f64::NAN,
    }
}

fn fill_leading_nan(line: &mut LineRecord) {
    let first_ok = line.transverse.iter().position(|x| !x.is_nan());
    let fill = first_ok.map_or(0.0, |k| line.transverse[k]);
    for x in line.transverse.iter_mut().take_while(|x| x.is_nan()) {
        *x = fill;
    }
}

/// Sweeps the lattice from prescribed null data.
pub fn evolve_null_data(
    null: &NullData,
    potential: &PotentialTable,
    grid: &NullGrid,
    plan: &ExtractionPlan,
    mode: Mode,
) -> Result<ModeRun, EvolveError> {
    let n = grid.n();
    let h = grid.h();
    if null.diag0.len() != n + 1 || null.diag1.len() != n || potential.values().len() != 2 * n + 1 {
        return Err(EvolveError::InvalidGrid(
            "null data or potential table does not match the grid".into(),
        ));
    }
    let pot = potential.values();

    let u_rows = plan
        .u_lines
        .iter()
        .map(|&u| grid.row_of(u).ok_or(EvolveError::OffGrid { what: "u line", value: u }))
        .collect::<Result<Vec<_>, _>>()?;
    let v_cols = plan
        .v_lines
        .iter()
        .map(|&v| grid.col_of(v).ok_or(EvolveError::OffGrid { what: "v line", value: v }))
        .collect::<Result<Vec<_>, _>>()?;
    let series_k = plan
        .rstar_series
        .iter()
        .map(|&s| grid.rstar_index(s).ok_or(EvolveError::OffGrid { what: "series r*", value: s }))
        .collect::<Result<Vec<_>, _>>()?;
    let mut slices = plan
        .slice_times
        .iter()
        .map(|&t| {
            let m = (2.0 * t / h).round();
            if m < 1.0 || m >= n as f64 {
                return Err(EvolveError::OffGrid { what: "slice time", value: t });
            }
            Ok(SliceAcc {
                m: m as usize,
                diags: [vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]],
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut horizon = LineRecord::new(LineKind::ConstU, grid.u(n), h, n + 1);
    let mut scri = LineRecord::new(LineKind::ConstV, grid.v(n), h, n + 1);
    let mut u_lines: Vec<LineRecord> = u_rows
        .iter()
        .map(|&i| LineRecord::new(LineKind::ConstU, grid.u(i), h, i + 1))
        .collect();
    let mut v_lines: Vec<LineRecord> = v_cols
        .iter()
        .map(|&j| LineRecord::new(LineKind::ConstV, grid.v(j), h, j + 1))
        .collect();
    let mut series: Vec<SeriesRecord> = series_k
        .iter()
        .map(|&kk| SeriesRecord {
            rstar: grid.rstar_at(kk),
            t: Vec::new(),
            psi: Vec::new(),
        })
        .collect();
    let mut snapshot = plan.snapshot_stride.filter(|&s| s > 0).map(|stride| Snapshot {
        stride,
        u: Vec::new(),
        v: Vec::new(),
        psi: Vec::new(),
    });

    let initial = null.max_abs();
    let c = 0.125 * h * h;
    let mut prev2 = vec![0.0; n + 1];
    let mut prev = vec![0.0; n + 1];
    let mut cur = vec![0.0; n + 1];

    for i in 0..=n {
        let j0 = n - i;
        cur[j0] = null.diag0[j0];
        if i >= 1 {
            cur[j0 + 1] = null.diag1[j0];
        }
        // potential index of (i, j) is j - i + n = j + j0
        for j in (j0 + 2)..=n {
            let (s, e, w) = (prev[j - 1], prev[j], cur[j - 1]);
            cur[j] = e + w - s - c * pot[j + j0] * (e + w);
        }

        let row_max = cur[j0..=n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !row_max.is_finite() || (initial > 0.0 && row_max > INSTABILITY_FACTOR * initial) {
            return Err(EvolveError::Unstable {
                row: i,
                u: grid.u(i),
                max: row_max,
                initial,
            });
        }

        let record_row = |line: &mut LineRecord| {
            for j in j0..=n {
                let b = (j > j0).then(|| prev[j]);
                let cc = (j > j0 + 1).then(|| prev2[j]);
                line.push(grid.v(j), cur[j], transverse(cur[j], b, cc, h));
            }
        };
        if i == n {
            record_row(&mut horizon);
        }
        for (line, &row) in u_lines.iter_mut().zip(&u_rows) {
            if row == i {
                record_row(line);
            }
        }
        let record_col = |line: &mut LineRecord, col: usize| {
            if col >= j0 {
                let b = (col > j0).then(|| cur[col - 1]);
                let cc = (col > j0 + 1).then(|| cur[col - 2]);
                line.push(grid.u(i), cur[col], transverse(cur[col], b, cc, h));
            }
        };
        record_col(&mut scri, n);
        for (line, &col) in v_lines.iter_mut().zip(&v_cols) {
            record_col(line, col);
        }
        for (rec, &kk) in series.iter_mut().zip(&series_k) {
            // j - i + n = kk
            let j = i as isize + kk as isize - n as isize;
            if j >= j0 as isize && j <= n as isize {
                let j = j as usize;
                rec.t.push(grid.t(i, j));
                rec.psi.push(cur[j]);
            }
        }
        for acc in &mut slices {
            for (slot, d) in [acc.m - 1, acc.m, acc.m + 1].into_iter().enumerate() {
                if i >= d {
                    acc.diags[slot][i] = cur[n + d - i];
                }
            }
        }
        if let Some(snap) = snapshot.as_mut() {
            if i % snap.stride == 0 {
                for j in (j0..=n).filter(|j| j % snap.stride == 0) {
                    snap.u.push(grid.u(i));
                    snap.v.push(grid.v(j));
                    snap.psi.push(cur[j]);
                }
            }
        }

        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }

    fill_leading_nan(&mut horizon);
    fill_leading_nan(&mut scri);
    u_lines.iter_mut().for_each(fill_leading_nan);
    v_lines.iter_mut().for_each(fill_leading_nan);

    let slices = slices
        .into_iter()
        .map(|acc| build_slice(&acc, grid, pot))
        .collect();

    Ok(ModeRun {
        mode,
        grid: *grid,
        horizon,
        scri,
        u_lines,
        v_lines,
        series,
        slices,
        snapshot,
        initial_max: initial,
    })
}

fn build_slice(acc: &SliceAcc, grid: &NullGrid, pot: &[f64]) -> SliceRecord {
    let (n, h, m) = (grid.n(), grid.h(), acc.m);
    let [lower, mid, upper] = &acc.diags;
    let node_rstar = (m..=n).map(|i| grid.rstar_at(2 * n + m - 2 * i)).collect();
    let node_psi = (m..=n).map(|i| mid[i]).collect();
    let mut cell_rstar = Vec::with_capacity(n - m);
    let mut density = Vec::with_capacity(n - m);
    for i in (m + 1)..=n {
        let (pn, pw, pe, ps) = (upper[i], mid[i], mid[i - 1], lower[i - 1]);
        let kk = 2 * n + m + 1 - 2 * i;
        let du = ((pn - pe) + (pw - ps)) / (2.0 * h);
        let dv = ((pn - pw) + (pe - ps)) / (2.0 * h);
        let pc = 0.25 * (pn + pw + pe + ps);
        cell_rstar.push(grid.rstar_at(kk));
        density.push(du * du + dv * dv + 0.5 * pot[kk] * pc * pc);
    }
    SliceRecord {
        t: m as f64 * h * 0.5,
        spacing: h,
        node_rstar,
        node_psi,
        cell_rstar,
        density,
    }
}

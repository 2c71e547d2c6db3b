//! Samples recorded during a sweep.

use serde::{Deserialize, Serialize};

use super::EvolveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    /// `u` fixed, parametrised by `v`.
    ConstU,
    /// `v` fixed, parametrised by `u`.
    ConstV,
}

/// `psi` along one null line of the lattice.
///
/// `transverse` is the derivative across the line (`psi_u` on a constant-`u`
/// line, `psi_v` on a constant-`v` line), one-sided and second order except
/// at the first two samples next to the Cauchy slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    pub kind: LineKind,
    pub fixed: f64,
    pub spacing: f64,
    pub param: Vec<f64>,
    pub rstar: Vec<f64>,
    pub psi: Vec<f64>,
    pub transverse: Vec<f64>,
}

impl LineRecord {
    pub(crate) fn new(kind: LineKind, fixed: f64, spacing: f64, capacity: usize) -> Self {
        Self {
            kind,
            fixed,
            spacing,
            param: Vec::with_capacity(capacity),
            rstar: Vec::with_capacity(capacity),
            psi: Vec::with_capacity(capacity),
            transverse: Vec::with_capacity(capacity),
        }
    }

    pub(crate) fn push(&mut self, param: f64, psi: f64, transverse: f64) {
        let rstar = match self.kind {
            LineKind::ConstU => 0.5 * (param - self.fixed),
            LineKind::ConstV => 0.5 * (self.fixed - param),
        };
        self.param.push(param);
        self.rstar.push(rstar);
        self.psi.push(psi);
        self.transverse.push(transverse);
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Derivative of `psi` along the line with respect to its parameter.
    pub fn along(&self) -> Result<Vec<f64>, EvolveError> {
        extract_time_derivative(&self.psi, self.spacing)
    }
}

/// `psi(t)` at a fixed `r*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub rstar: f64,
    pub t: Vec<f64>,
    pub psi: Vec<f64>,
}

/// One `t = const` slice: node values and cell-centred energy density.
///
/// `density` is `psi_u^2 + psi_v^2 + V psi^2 / 2` at cell centres spaced `h`
/// in `r*`, so `h * sum(density)` is the mode energy on the slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub t: f64,
    pub spacing: f64,
    pub node_rstar: Vec<f64>,
    pub node_psi: Vec<f64>,
    pub cell_rstar: Vec<f64>,
    pub density: Vec<f64>,
}

impl SliceRecord {
    /// Energy in `lo <= r* <= hi` by the midpoint rule on cells.
    pub fn energy_between(&self, lo: f64, hi: f64) -> f64 {
        self.cell_rstar
            .iter()
            .zip(&self.density)
            .filter(|(&s, _)| s >= lo && s <= hi)
            .map(|(_, &e)| e)
            .sum::<f64>()
            * self.spacing
    }

    pub fn energy(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.spacing
    }
}

/// Sparse lattice samples for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub stride: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Derivative of uniformly sampled data: centred differences inside,
/// second-order one-sided differences at both ends.
pub fn extract_time_derivative(samples: &[f64], spacing: f64) -> Result<Vec<f64>, EvolveError> {
    let n = samples.len();
    if n < 3 {
        return Err(EvolveError::TooFewSamples(n));
    }
    let inv = 1.0 / (2.0 * spacing);
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) * inv);
    out.extend(samples.windows(3).map(|w| (w[2] - w[0]) * inv));
    out.push((3.0 * samples[n - 1] - 4.0 * samples[n - 2] + samples[n - 3]) * inv);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_derivative() {
        let d = extract_time_derivative(&[2.5; 10], 0.1).unwrap();
        assert!(d.iter().all(|&x| x.abs() < 1e-13));
    }

    #[test]
    fn sine_error_bound() {
        let (h, w) = (0.05, 1.3);
        let xs: Vec<f64> = (0..400).map(|k| (w * h * f64::from(k)).sin()).collect();
        let d = extract_time_derivative(&xs, h).unwrap();
        let interior = w.powi(3) * h * h / 6.0 * 1.1;
        for (k, &dk) in d.iter().enumerate().skip(1).take(398) {
            let exact = w * (w * h * k as f64).cos();
            assert!((dk - exact).abs() <= interior, "sample {k}");
        }
        // one-sided ends carry a doubled remainder constant
        assert!((d[0] - w).abs() <= 2.0 * interior);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            extract_time_derivative(&[1.0, 2.0], 0.1),
            Err(EvolveError::TooFewSamples(2))
        ));
    }

    #[test]
    fn slice_energy_window() {
        let s = SliceRecord {
            t: 0.0,
            spacing: 0.5,
            node_rstar: vec![],
            node_psi: vec![],
            cell_rstar: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            density: vec![1.0, 2.0, 3.0, 4.0, 5.0],
        };
        assert_eq!(s.energy(), 7.5);
        assert_eq!(s.energy_between(-0.5, 0.5), 4.5);
    }
}

//! Spherical-harmonic modes, initial-data families and axisymmetric
//! decomposition.
//!
//! Profiles are analytic closures of `r*`. Refinement studies re-evaluate
//! them on each grid; nothing is ever interpolated.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BlackHole;
use crate::quadrature::{legendre_normalized, GaussLegendre};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModesError {
    #[error("|m| = {m} exceeds l = {l}")]
    InvalidOrder { l: u32, m: i32 },
    #[error("invalid family parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("decomposition to l_max = {l_max} needs more than {nodes} angular nodes")]
    TooFewNodes { l_max: u32, nodes: usize },
    #[error("sample row {row} has {got} angular values, expected {expected}")]
    RaggedSamples {
        row: usize,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub l: u32,
    pub m: i32,
}

impl Mode {
    pub fn new(l: u32, m: i32) -> Result<Self, ModesError> {
        if m.unsigned_abs() > l {
            return Err(ModesError::InvalidOrder { l, m });
        }
        Ok(Self { l, m })
    }

    pub fn axisymmetric(l: u32) -> Self {
        Self { l, m: 0 }
    }

    /// Angular eigenvalue `l(l+1)`.
    pub fn eigenvalue(&self) -> f64 {
        f64::from(self.l) * f64::from(self.l + 1)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l={} m={}", self.l, self.m)
    }
}

/// Closure returning `(value, d/dr* value)` at a tortoise position.
pub type ProfileFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `(1 - x^2)^4` with `x = (r* - center)/halfwidth`, zero for `|x| >= 1`.
    CompactBump { center: f64, halfwidth: f64 },
    /// `exp(-(r* - center)^2 / (2 width^2))`.
    Gaussian { center: f64, width: f64 },
    /// `(r - 2M)^{lambda/2} exp(-(r - 2M)/scale)` for both profiles.
    HorizonDecay { lambda: f64, scale: f64 },
    /// `r^{-lambda-1} (1 - e^{-(r-2M)/scale})^2` for `phi` and the same
    /// with `r^{-lambda-2}` for `psidot`.
    ScriDecay { lambda: f64, scale: f64 },
    /// Caller-supplied profiles; `support` is trusted as given.
    Custom {
        phi: ProfileFn,
        psidot: ProfileFn,
        support: Option<(f64, f64)>,
    },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CompactBump { center, halfwidth } => f
                .debug_struct("CompactBump")
                .field("center", center)
                .field("halfwidth", halfwidth)
                .finish(),
            Self::Gaussian { center, width } => f
                .debug_struct("Gaussian")
                .field("center", center)
                .field("width", width)
                .finish(),
            Self::HorizonDecay { lambda, scale } => f
                .debug_struct("HorizonDecay")
                .field("lambda", lambda)
                .field("scale", scale)
                .finish(),
            Self::ScriDecay { lambda, scale } => f
                .debug_struct("ScriDecay")
                .field("lambda", lambda)
                .field("scale", scale)
                .finish(),
            Self::Custom { support, .. } => f
                .debug_struct("Custom")
                .field("support", support)
                .finish_non_exhaustive(),
        }
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CompactBump { .. } => "compact_bump",
            Self::Gaussian { .. } => "gaussian",
            Self::HorizonDecay { .. } => "horizon_decay",
            Self::ScriDecay { .. } => "scri_decay",
            Self::Custom { .. } => "custom",
        }
    }

    fn validate(&self) -> Result<(), ModesError> {
        let positive = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ModesError::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                })
            }
        };
        let finite = |name, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(ModesError::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                })
            }
        };
        match *self {
            Self::CompactBump { center, halfwidth } => {
                finite("center", center)?;
                positive("halfwidth", halfwidth)
            }
            Self::Gaussian { center, width } => {
                finite("center", center)?;
                positive("width", width)
            }
            Self::HorizonDecay { lambda, scale } | Self::ScriDecay { lambda, scale } => {
                positive("lambda", lambda)?;
                positive("scale", scale)
            }
            Self::Custom { support, .. } => match support {
                Some((lo, hi)) if !(lo < hi) => Err(ModesError::InvalidParameter {
                    name: "support",
                    value: hi - lo,
                    reason: "window must have r*_min < r*_max",
                }),
                _ => Ok(()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Phi,
    Psidot,
}

/// Cauchy data `(u, d_t u)` at `t = 0` for one mode.
#[derive(Debug, Clone)]
pub struct InitialDataSpec {
    pub mode: Mode,
    pub family: Family,
    pub phi_amplitude: f64,
    pub psidot_amplitude: f64,
    /// Flip the sign of `psidot`, giving the data of the time-reversed
    /// solution.
    pub time_reversed: bool,
    bh: BlackHole,
}

pub fn make_initial_data(
    family: Family,
    phi_amplitude: f64,
    psidot_amplitude: f64,
    mode: Mode,
    bh: BlackHole,
) -> Result<InitialDataSpec, ModesError> {
    family.validate()?;
    for (name, value) in [("phi_amplitude", phi_amplitude), ("psidot_amplitude", psidot_amplitude)] {
        if !value.is_finite() {
            return Err(ModesError::InvalidParameter {
                name,
                value,
                reason: "must be finite",
            });
        }
    }
    Ok(InitialDataSpec {
        mode,
        family,
        phi_amplitude,
        psidot_amplitude,
        time_reversed: false,
        bh,
    })
}

impl InitialDataSpec {
    pub fn black_hole(&self) -> BlackHole {
        self.bh
    }

    pub fn reversed(&self) -> Self {
        Self {
            time_reversed: !self.time_reversed,
            ..self.clone()
        }
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.phi_amplitude == 0.0 && self.psidot_amplitude == 0.0
    }

    /// Declared support window in `r*`, for compact families.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::CompactBump { center, halfwidth } => {
                Some((center - halfwidth, center + halfwidth))
            }
            Family::Custom { support, .. } => support,
            _ => None,
        }
    }

    /// Window outside which the profiles are below `tol` relative to their
    /// peak, where such a window exists.
    pub fn effective_support(&self, tol: f64) -> Option<(f64, f64)> {
        match self.family {
            Family::Gaussian { center, width } => {
                let reach = width * (-2.0 * tol.ln()).sqrt();
                Some((center - reach, center + reach))
            }
            _ => self.support(),
        }
    }

    /// `u(0, r*)`.
    pub fn phi(&self, rstar: f64) -> f64 {
        self.phi_amplitude * self.shape(Role::Phi, rstar).0
    }

    /// `d u(0, r*) / d r*`.
    pub fn phi_drstar(&self, rstar: f64) -> f64 {
        self.phi_amplitude * self.shape(Role::Phi, rstar).1
    }

    /// `d_t u(0, r*)`.
    pub fn psidot(&self, rstar: f64) -> f64 {
        let sign = if self.time_reversed { -1.0 } else { 1.0 };
        sign * self.psidot_amplitude * self.shape(Role::Psidot, rstar).0
    }

    fn shape(&self, role: Role, rstar: f64) -> (f64, f64) {
        match &self.family {
            &Family::CompactBump { center, halfwidth } => {
                let x = (rstar - center) / halfwidth;
                if x.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let q = 1.0 - x * x;
                (q.powi(4), -8.0 * x * q.powi(3) / halfwidth)
            }
            &Family::Gaussian { center, width } => {
                let d = (rstar - center) / width;
                let g = (-0.5 * d * d).exp();
                (g, -d * g / width)
            }
            &Family::HorizonDecay { lambda, scale } => {
                let rho = self.offset(rstar);
                let r = self.bh.horizon_radius() + rho;
                let val = rho.powf(0.5 * lambda) * (-rho / scale).exp();
                let f = rho / r;
                // d/dr* = f d/dr, with f / rho = 1/r kept exact near the horizon
                (val, val * (0.5 * lambda / r - f / scale))
            }
            &Family::ScriDecay { lambda, scale } => {
                let rho = self.offset(rstar);
                let r = self.bh.horizon_radius() + rho;
                let f = rho / r;
                let p = match role {
                    Role::Phi => lambda + 1.0,
                    Role::Psidot => lambda + 2.0,
                };
                let e = (-rho / scale).exp();
                let q = -(-rho / scale).exp_m1();
                let rp = r.powf(-p);
                let val = rp * q * q;
                let dval_dr = -p * val / r + rp * 2.0 * q * e / scale;
                (val, f * dval_dr)
            }
            Family::Custom { phi, psidot, .. } => match role {
                Role::Phi => phi(rstar),
                Role::Psidot => psidot(rstar),
            },
        }
    }

    fn offset(&self, rstar: f64) -> f64 {
        self.bh
            .horizon_offset(rstar)
            .expect("horizon offset converges for finite r*")
    }
}

/// Project samples `f(r*_i, theta_q)` onto orthonormal Legendre modes.
///
/// `samples[i][q]` holds the value at the `q`-th Gauss–Legendre node in
/// `cos theta`. Returns `coeffs[l][i] = sum_q w_q f(i, q) Pbar_l(x_q)` for
/// `l = 0..=l_max`.
pub fn decompose_axisymmetric(
    samples: &[Vec<f64>],
    rule: &GaussLegendre,
    l_max: u32,
) -> Result<Vec<Vec<f64>>, ModesError> {
    let nodes = rule.len();
    if l_max as usize >= nodes {
        return Err(ModesError::TooFewNodes { l_max, nodes });
    }
    if let Some((row, s)) = samples.iter().enumerate().find(|(_, s)| s.len() != nodes) {
        return Err(ModesError::RaggedSamples {
            row,
            got: s.len(),
            expected: nodes,
        });
    }
    let coeffs = (0..=l_max)
        .map(|l| {
            let basis: Vec<f64> = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(&x, &w)| w * legendre_normalized(l, x))
                .collect();
            samples
                .iter()
                .map(|row| row.iter().zip(&basis).map(|(f, b)| f * b).sum())
                .collect()
        })
        .collect();
    Ok(coeffs)
}

/// Inverse of [`decompose_axisymmetric`] at the given `cos theta` values.
pub fn resum(coeffs: &[Vec<f64>], cos_theta: &[f64]) -> Vec<Vec<f64>> {
    let rows = coeffs.first().map_or(0, Vec::len);
    (0..rows)
        .map(|i| {
            cos_theta
                .iter()
                .map(|&x| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(l, c)| c[i] * legendre_normalized(l as u32, x))
                        .sum()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bh() -> BlackHole {
        BlackHole::default()
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }

    #[test]
    fn eigenvalues() {
        assert_eq!(Mode::axisymmetric(0).eigenvalue(), 0.0);
        assert_eq!(Mode::axisymmetric(1).eigenvalue(), 2.0);
        assert_eq!(Mode::axisymmetric(5).eigenvalue(), 30.0);
        assert!(Mode::new(1, 2).is_err());
        assert!(Mode::new(3, -3).is_ok());
    }

    #[test]
    fn zero_amplitude_bump() {
        let d = make_initial_data(
            Family::CompactBump { center: 20.0, halfwidth: 5.0 },
            0.0,
            0.0,
            Mode::axisymmetric(0),
            bh(),
        )
        .unwrap();
        for k in 0..100 {
            let s = 10.0 + 0.1 * f64::from(k);
            assert_eq!(d.phi(s), 0.0);
            assert_eq!(d.psidot(s), 0.0);
        }
    }

    #[test]
    fn bump_vanishes_outside_window() {
        let d = make_initial_data(
            Family::CompactBump { center: 12.0, halfwidth: 2.0 },
            1.0,
            1.0,
            Mode::axisymmetric(0),
            bh(),
        )
        .unwrap();
        assert_eq!(d.support(), Some((10.0, 14.0)));
        for &s in &[-100.0, 9.999_999, 10.0, 14.0, 14.000_01, 1e5] {
            assert_eq!(d.phi(s), 0.0);
            assert_eq!(d.psidot(s), 0.0);
        }
        assert!(d.phi(12.0) == 1.0 && d.phi(10.5) > 0.0);
    }

    #[test]
    fn gaussian_centre_normalised() {
        let d = make_initial_data(
            Family::Gaussian { center: 20.0, width: 2.0 },
            1.0,
            0.0,
            Mode::axisymmetric(0),
            bh(),
        )
        .unwrap();
        assert_eq!(d.phi(20.0), 1.0);
        assert!((d.phi(22.0) - (-0.5f64).exp()).abs() < 1e-16);
        assert_eq!(d.psidot(20.0), 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let m = Mode::axisymmetric(0);
        assert!(make_initial_data(Family::Gaussian { center: 0.0, width: 0.0 }, 1.0, 0.0, m, bh()).is_err());
        assert!(make_initial_data(Family::HorizonDecay { lambda: -0.1, scale: 1.0 }, 1.0, 0.0, m, bh()).is_err());
        assert!(make_initial_data(Family::ScriDecay { lambda: 1.0, scale: f64::NAN }, 1.0, 0.0, m, bh()).is_err());
        assert!(make_initial_data(Family::CompactBump { center: 1.0, halfwidth: 1.0 }, f64::INFINITY, 0.0, m, bh()).is_err());
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let m = Mode::axisymmetric(2);
        let families = [
            Family::CompactBump { center: 3.0, halfwidth: 4.0 },
            Family::Gaussian { center: 1.0, width: 2.0 },
            Family::HorizonDecay { lambda: 0.4, scale: 3.0 },
            Family::ScriDecay { lambda: 1.5, scale: 2.0 },
        ];
        for fam in families {
            let d = make_initial_data(fam.clone(), 1.0, 0.0, m, bh()).unwrap();
            for &s in &[-8.0, -1.0, 0.5, 2.0, 6.0, 30.0] {
                let e = 1e-5;
                let fd = (d.phi(s + e) - d.phi(s - e)) / (2.0 * e);
                let an = d.phi_drstar(s);
                assert!((fd - an).abs() < 1e-7 * (1.0 + an.abs()), "{fam:?} at {s}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn horizon_decay_exponent() {
        for &lambda in &[0.25, 0.5, 1.0] {
            let d = make_initial_data(
                Family::HorizonDecay { lambda, scale: 4.0 },
                1.0,
                0.0,
                Mode::axisymmetric(0),
                bh(),
            )
            .unwrap();
            let rhos: Vec<f64> = (0..=20).map(|k| 10f64.powf(-6.0 + 0.1 * f64::from(k))).collect();
            let xs: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
            let ys: Vec<f64> = rhos
                .iter()
                .map(|&rho| d.phi(bh().tortoise_from_offset(rho).unwrap()).ln())
                .collect();
            let p = slope(&xs, &ys);
            assert!((p - 0.5 * lambda).abs() <= 0.02 * 0.5 * lambda, "lambda={lambda}: {p}");
        }
    }

    #[test]
    fn scri_decay_exponents() {
        for &lambda in &[0.5, 1.0, 2.0] {
            let d = make_initial_data(
                Family::ScriDecay { lambda, scale: 2.0 },
                1.0,
                1.0,
                Mode::axisymmetric(0),
                bh(),
            )
            .unwrap();
            let rs: Vec<f64> = (0..=20).map(|k| 10f64.powf(4.0 + 0.1 * f64::from(k))).collect();
            let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
            let phis: Vec<f64> = rs
                .iter()
                .map(|&r| d.phi(bh().tortoise(r).unwrap()).ln())
                .collect();
            let dots: Vec<f64> = rs
                .iter()
                .map(|&r| d.psidot(bh().tortoise(r).unwrap()).ln())
                .collect();
            let p = slope(&xs, &phis);
            let q = slope(&xs, &dots);
            assert!((p + lambda + 1.0).abs() <= 0.02 * (lambda + 1.0), "{p}");
            assert!((q + lambda + 2.0).abs() <= 0.02 * (lambda + 2.0), "{q}");
        }
    }

    #[test]
    fn time_reversal_flips_psidot_only() {
        let d = make_initial_data(
            Family::Gaussian { center: 5.0, width: 1.0 },
            0.3,
            0.7,
            Mode::axisymmetric(1),
            bh(),
        )
        .unwrap();
        let r = d.reversed();
        assert_eq!(r.phi(5.5), d.phi(5.5));
        assert_eq!(r.psidot(5.5), -d.psidot(5.5));
        assert_eq!(r.reversed().psidot(5.5), d.psidot(5.5));
    }

    #[test]
    fn decomposition_orthogonality() {
        let rule = GaussLegendre::new(12);
        let g = |s: f64| (-(s - 3.0) * (s - 3.0)).exp();
        let rs = [0.0, 2.5, 3.0, 4.0];
        let constant: Vec<Vec<f64>> = rs.iter().map(|&s| vec![g(s); 12]).collect();
        let c = decompose_axisymmetric(&constant, &rule, 5).unwrap();
        for (l, cl) in c.iter().enumerate() {
            for (i, &v) in cl.iter().enumerate() {
                if l == 0 {
                    assert!((v - 2f64.sqrt() * g(rs[i])).abs() < 1e-14);
                } else {
                    assert!(v.abs() < 1e-14);
                }
            }
        }
        let dipole: Vec<Vec<f64>> = rs
            .iter()
            .map(|&s| rule.nodes().iter().map(|&x| g(s) * x).collect())
            .collect();
        let c = decompose_axisymmetric(&dipole, &rule, 5).unwrap();
        for (l, cl) in c.iter().enumerate() {
            for (i, &v) in cl.iter().enumerate() {
                let expect = if l == 1 { g(rs[i]) * (2.0f64 / 3.0).sqrt() } else { 0.0 };
                assert!((v - expect).abs() < 1e-14, "l={l}: {v}");
            }
        }
    }

    #[test]
    fn decomposition_errors() {
        let rule = GaussLegendre::new(4);
        assert!(matches!(
            decompose_axisymmetric(&[vec![0.0; 4]], &rule, 4),
            Err(ModesError::TooFewNodes { .. })
        ));
        assert!(matches!(
            decompose_axisymmetric(&[vec![0.0; 3]], &rule, 2),
            Err(ModesError::RaggedSamples { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn band_limited_round_trip(coef in proptest::collection::vec(-3.0f64..3.0, 5), radial in proptest::collection::vec(-2.0f64..2.0, 3)) {
                let rule = GaussLegendre::new(10);
                let samples: Vec<Vec<f64>> = radial
                    .iter()
                    .map(|&g| {
                        rule.nodes()
                            .iter()
                            .map(|&x| g * coef.iter().rev().fold(0.0, |acc, c| acc * x + c))
                            .collect()
                    })
                    .collect();
                let c = decompose_axisymmetric(&samples, &rule, 6).unwrap();
                let back = resum(&c, rule.nodes());
                for (row, brow) in samples.iter().zip(&back) {
                    for (a, b) in row.iter().zip(brow) {
                        prop_assert!((a - b).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

//! Schwarzschild exterior charts and the Regge–Wheeler potential.
//!
//! Every other module asks this one for radii, tortoise positions and
//! potential values. Functions are pure and take the [`BlackHole`] by
//! value, so they can be shared across worker threads freely.
//!
//! Near the horizon `r - 2M` underflows long before `r*` does, so the
//! offset `rho = r - 2M` has its own accurate entry points
//! ([`BlackHole::horizon_offset`], [`BlackHole::tortoise_from_offset`],
//! [`BlackHole::rw_potential_offset`]). The `r`-valued variants are thin
//! wrappers and lose relative accuracy in `rho` once it drops below roughly
//! `1e-8 M`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("black-hole mass must be positive and finite, got {0}")]
    InvalidMass(f64),
    #[error("areal radius {r} is not outside the horizon at {horizon}")]
    InsideHorizon { r: f64, horizon: f64 },
    #[error("non-finite coordinate {0}")]
    NonFinite(f64),
    #[error("scri corner needs -t + r* > 0, got {0}")]
    ScriCornerDomain(f64),
    #[error("kruskal coordinates must be positive and finite, got ({mu}, {nu})")]
    KruskalDomain { mu: f64, nu: f64 },
    #[error("inverse tortoise did not converge for r* = {0}")]
    NoConvergence(f64),
    #[error("chart {chart:?} point ({first}, {second}) is outside the exterior")]
    OutsideChart {
        chart: Chart,
        first: f64,
        second: f64,
    },
}

/// Schwarzschild black hole of mass `M` in geometric units (`G = c = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackHole {
    mass: f64,
}

impl Default for BlackHole {
    fn default() -> Self {
        Self { mass: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// `(t, r)`
    Schwarzschild,
    /// `(t, r*)`
    Tortoise,
    /// `(tau, r)` with `tau = t + r*`
    InEf,
    /// `(tau_bar, r)` with `tau_bar = t - r*`
    OutEf,
    /// `(mu, nu)`
    Kruskal,
    /// `(a, b)` near the horizon end
    HorizonCorner,
    /// `(a_bar, b_bar)` near the spatial-infinity end
    ScriCorner,
}

/// A point of the exterior expressed in one chart (angles suppressed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub first: f64,
    pub second: f64,
}

impl ChartPoint {
    pub fn new(chart: Chart, first: f64, second: f64) -> Self {
        Self {
            chart,
            first,
            second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerEnd {
    Horizon,
    Scri,
}

const NEWTON_MAX_ITER: usize = 100;
const BISECTION_MAX_ITER: usize = 400;

impl BlackHole {
    pub fn new(mass: f64) -> Result<Self, GeometryError> {
        if mass.is_finite() && mass > 0.0 {
            Ok(Self { mass })
        } else {
            Err(GeometryError::InvalidMass(mass))
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn horizon_radius(&self) -> f64 {
        2.0 * self.mass
    }

    fn check_radius(&self, r: f64) -> Result<f64, GeometryError> {
        if !r.is_finite() {
            return Err(GeometryError::NonFinite(r));
        }
        let rho = r - self.horizon_radius();
        if rho <= 0.0 {
            return Err(GeometryError::InsideHorizon {
                r,
                horizon: self.horizon_radius(),
            });
        }
        Ok(rho)
    }

    /// `1 - 2M/r`
    pub fn lapse(&self, r: f64) -> Result<f64, GeometryError> {
        let rho = self.check_radius(r)?;
        Ok(rho / r)
    }

    /// `r* = r + 2M log(r - 2M)`.
    pub fn tortoise(&self, r: f64) -> Result<f64, GeometryError> {
        let rho = self.check_radius(r)?;
        Ok(r + 2.0 * self.mass * rho.ln())
    }

    /// Tortoise coordinate from the horizon offset `rho = r - 2M`.
    pub fn tortoise_from_offset(&self, rho: f64) -> Result<f64, GeometryError> {
        if !rho.is_finite() {
            return Err(GeometryError::NonFinite(rho));
        }
        if rho <= 0.0 {
            return Err(GeometryError::InsideHorizon {
                r: self.horizon_radius() + rho,
                horizon: self.horizon_radius(),
            });
        }
        Ok(self.horizon_radius() + rho + 2.0 * self.mass * rho.ln())
    }

    /// Horizon offset `rho = r - 2M` of the point with tortoise coordinate
    /// `rstar`, accurate to a few ulps in relative terms for every finite
    /// input.
    ///
    /// Newton runs on `y = log(rho)`, where `e^y + 2M y + 2M - r*` is convex
    /// and increasing. Both seeds lie to the right of the root, so the
    /// iteration decreases monotonically; bisection backs it up anyway.
    pub fn horizon_offset(&self, rstar: f64) -> Result<f64, GeometryError> {
        if !rstar.is_finite() {
            return Err(GeometryError::NonFinite(rstar));
        }
        let m2 = 2.0 * self.mass;
        let g = |y: f64| y.exp() + m2 + m2 * y - rstar;
        let mut y = if rstar < m2 {
            // rho ~ exp((r* - 2M)/2M) far down the throat
            (rstar - m2) / m2
        } else {
            rstar.ln()
        };
        for _ in 0..NEWTON_MAX_ITER {
            let step = g(y) / (y.exp() + m2);
            let next = y - step;
            if !next.is_finite() {
                break;
            }
            if (next - y).abs() <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
                return Ok(next.exp());
            }
            y = next;
        }
        self.horizon_offset_bisect(rstar)
    }

    fn horizon_offset_bisect(&self, rstar: f64) -> Result<f64, GeometryError> {
        let m2 = 2.0 * self.mass;
        let g = |y: f64| y.exp() + m2 + m2 * y - rstar;
        let mut hi = if rstar < m2 {
            (rstar - m2) / m2
        } else {
            rstar.ln()
        };
        while g(hi) < 0.0 {
            hi += 1.0 + hi.abs();
        }
        let mut lo = hi - 1.0;
        while g(lo) > 0.0 {
            lo = hi - 2.0 * (hi - lo);
            if !lo.is_finite() {
                return Err(GeometryError::NoConvergence(rstar));
            }
        }
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid.exp());
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(GeometryError::NoConvergence(rstar))
    }

    /// Areal radius `r > 2M` with `tortoise(r) = rstar`.
    pub fn inverse_tortoise(&self, rstar: f64) -> Result<f64, GeometryError> {
        Ok(self.horizon_radius() + self.horizon_offset(rstar)?)
    }

    /// Regge–Wheeler potential `(1 - 2M/r)(l(l+1)/r^2 + 2M/r^3)` governing
    /// `psi = r u_l`.
    pub fn rw_potential(&self, l: u32, r: f64) -> Result<f64, GeometryError> {
        let rho = self.check_radius(r)?;
        Ok(self.rw_potential_offset(l, rho))
    }

    /// Same as [`BlackHole::rw_potential`] with the horizon offset as input;
    /// `rho` must be positive.
    pub fn rw_potential_offset(&self, l: u32, rho: f64) -> f64 {
        let r = self.horizon_radius() + rho;
        let ll = f64::from(l) * f64::from(l + 1);
        (rho / r) * (ll / (r * r) + 2.0 * self.mass / (r * r * r))
    }

    /// Kruskal coordinates `mu = e^{(t + r*)/4M}`, `nu = e^{-(t - r*)/4M}`.
    ///
    /// A coordinate whose exponent leaves the representable range comes back
    /// as `f64::INFINITY` (or `0.0` on underflow); check with
    /// [`kruskal_is_finite`].
    pub fn to_kruskal(&self, t: f64, r: f64) -> Result<(f64, f64), GeometryError> {
        let rstar = self.tortoise(r)?;
        let m4 = 4.0 * self.mass;
        Ok((((t + rstar) / m4).exp(), (-(t - rstar) / m4).exp()))
    }

    /// Inverse of [`BlackHole::to_kruskal`].
    pub fn from_kruskal(&self, mu: f64, nu: f64) -> Result<(f64, f64), GeometryError> {
        if !(mu > 0.0 && nu > 0.0 && mu.is_finite() && nu.is_finite()) {
            return Err(GeometryError::KruskalDomain { mu, nu });
        }
        let m2 = 2.0 * self.mass;
        let (lmu, lnu) = (mu.ln(), nu.ln());
        let rstar = m2 * (lmu + lnu);
        let t = m2 * (lmu - lnu);
        Ok((t, self.inverse_tortoise(rstar)?))
    }

    /// Corner coordinates near one end of the exterior.
    ///
    /// Horizon: `a = e^{-(t+r)/2M}`, `b = e^{(t+r)/4M} sqrt(r - 2M)`, so that
    /// `a b^2 = r - 2M` and `b = e^{tau/4M}`.
    /// Scri: `a_bar = (-t + r*)/r`, `b_bar = 1/(-t + r*)`.
    pub fn corner_coords(
        &self,
        t: f64,
        r: f64,
        end: CornerEnd,
    ) -> Result<(f64, f64), GeometryError> {
        let rho = self.check_radius(r)?;
        match end {
            CornerEnd::Horizon => {
                let m = self.mass;
                Ok((
                    (-(t + r) / (2.0 * m)).exp(),
                    ((t + r) / (4.0 * m)).exp() * rho.sqrt(),
                ))
            }
            CornerEnd::Scri => {
                let s = -t + r + 2.0 * self.mass * rho.ln();
                if s <= 0.0 {
                    return Err(GeometryError::ScriCornerDomain(s));
                }
                Ok((s / r, 1.0 / s))
            }
        }
    }

    /// Express a point in Schwarzschild `(t, r)`.
    pub fn to_schwarzschild(&self, p: ChartPoint) -> Result<(f64, f64), GeometryError> {
        let (x, y) = (p.first, p.second);
        let outside = || GeometryError::OutsideChart {
            chart: p.chart,
            first: x,
            second: y,
        };
        let m = self.mass;
        match p.chart {
            Chart::Schwarzschild => {
                self.check_radius(y)?;
                Ok((x, y))
            }
            Chart::Tortoise => Ok((x, self.inverse_tortoise(y)?)),
            Chart::InEf => Ok((x - self.tortoise(y)?, y)),
            Chart::OutEf => Ok((x + self.tortoise(y)?, y)),
            Chart::Kruskal => self.from_kruskal(x, y),
            Chart::HorizonCorner => {
                if !(x > 0.0 && y > 0.0) {
                    return Err(outside());
                }
                let r = self.horizon_radius() + x * y * y;
                Ok((-2.0 * m * x.ln() - r, r))
            }
            Chart::ScriCorner => {
                if !(x > 0.0 && y > 0.0) {
                    return Err(outside());
                }
                let r = 1.0 / (x * y);
                let rho = self.check_radius(r).map_err(|_| outside())?;
                let rstar = r + 2.0 * m * rho.ln();
                Ok((rstar - 1.0 / y, r))
            }
        }
    }

    /// Express a Schwarzschild `(t, r)` point in the requested chart.
    pub fn from_schwarzschild(
        &self,
        t: f64,
        r: f64,
        chart: Chart,
    ) -> Result<ChartPoint, GeometryError> {
        let rstar = self.tortoise(r)?;
        let (first, second) = match chart {
            Chart::Schwarzschild => (t, r),
            Chart::Tortoise => (t, rstar),
            Chart::InEf => (t + rstar, r),
            Chart::OutEf => (t - rstar, r),
            Chart::Kruskal => self.to_kruskal(t, r)?,
            Chart::HorizonCorner => self.corner_coords(t, r, CornerEnd::Horizon)?,
            Chart::ScriCorner => self.corner_coords(t, r, CornerEnd::Scri)?,
        };
        Ok(ChartPoint::new(chart, first, second))
    }
}

pub fn kruskal_is_finite(mu: f64, nu: f64) -> bool {
    mu.is_finite() && nu.is_finite() && mu > 0.0 && nu > 0.0
}

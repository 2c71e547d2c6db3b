//! The double-null lattice and the potential sampled on it.
//!
//! Index conventions, with `A` the inner end of the Cauchy interval and
//! `B = A + n h` the outer end:
//!
//! * `v_j = A + j h` and `u_i = -B + i h`, for `0 <= i, j <= n`;
//! * point `(i, j)` lies in the future of the Cauchy slice when `i + j >= n`,
//!   at `t = (i + j - n) h / 2`;
//! * `r*` depends only on `k = j - i`: `r* = A + (k + n) h / 2`.
//!
//! Row `i = n` is the line `u = U_max = -A` (horizon side) and column `j = n`
//! is the line `v = V_max = B` (scri side).

use serde::{Deserialize, Serialize};

use super::EvolveError;
use crate::geometry::BlackHole;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullGrid {
    h: f64,
    a: f64,
    n: usize,
}

impl NullGrid {
    /// Grid whose Cauchy interval starts at `rstar_min` and covers at least
    /// `rstar_max`.
    pub fn new(h: f64, rstar_min: f64, rstar_max: f64) -> Result<Self, EvolveError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(EvolveError::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if !(rstar_min.is_finite() && rstar_max.is_finite() && rstar_min < rstar_max) {
            return Err(EvolveError::InvalidGrid(format!(
                "Cauchy interval [{rstar_min}, {rstar_max}] is empty or not finite"
            )));
        }
        let cells = ((rstar_max - rstar_min) / h * (1.0 - 1e-12)).ceil();
        if !(4.0..=1e8).contains(&cells) {
            return Err(EvolveError::InvalidGrid(format!(
                "{cells} cells across the Cauchy interval is outside [4, 1e8]"
            )));
        }
        Ok(Self {
            h,
            a: rstar_min,
            n: cells as usize,
        })
    }

    /// Grid with extraction lines `u = u_max` and (at least) `v = v_max`.
    pub fn from_lines(h: f64, u_max: f64, v_max: f64) -> Result<Self, EvolveError> {
        Self::new(h, -u_max, v_max)
    }

    /// Same Cauchy interval at half the spacing; every node of `self` is a
    /// node of the result at doubled indices.
    pub fn refined(&self) -> Self {
        Self {
            h: 0.5 * self.h,
            a: self.a,
            n: 2 * self.n,
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rstar_min(&self) -> f64 {
        self.a
    }

    pub fn rstar_max(&self) -> f64 {
        self.a + self.n as f64 * self.h
    }

    pub fn u_max(&self) -> f64 {
        -self.a
    }

    pub fn v_max(&self) -> f64 {
        self.rstar_max()
    }

    pub fn u(&self, i: usize) -> f64 {
        -self.rstar_max() + i as f64 * self.h
    }

    pub fn v(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h
    }

    pub fn t(&self, i: usize, j: usize) -> f64 {
        (i as f64 + j as f64 - self.n as f64) * self.h * 0.5
    }

    /// `r*` of lattice points with `j - i = k`, indexed by `k + n`.
    pub fn rstar_at(&self, k_plus_n: usize) -> f64 {
        self.a + k_plus_n as f64 * self.h * 0.5
    }

    /// Nearest row index to a requested `u`, if it lies on the lattice.
    pub fn row_of(&self, u: f64) -> Option<usize> {
        self.index_of(u + self.rstar_max())
    }

    /// Nearest column index to a requested `v`.
    pub fn col_of(&self, v: f64) -> Option<usize> {
        self.index_of(v - self.a)
    }

    /// `k + n` index for a requested `r*` (which must be a multiple of h/2).
    pub fn rstar_index(&self, rstar: f64) -> Option<usize> {
        let x = 2.0 * (rstar - self.a) / self.h;
        let k = x.round();
        if (x - k).abs() > 1e-6 || k < 0.0 || k > 2.0 * self.n as f64 {
            return None;
        }
        Some(k as usize)
    }

    fn index_of(&self, offset: f64) -> Option<usize> {
        let x = offset / self.h;
        let k = x.round();
        if (x - k).abs() > 1e-6 || k < 0.0 || k > self.n as f64 {
            return None;
        }
        Some(k as usize)
    }

    pub fn cell_count(&self) -> usize {
        self.n * (self.n + 1) / 2
    }
}

/// Potential at every `r*` of the lattice, indexed by `k + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    values: Vec<f64>,
}

impl PotentialTable {
    pub fn regge_wheeler(bh: BlackHole, l: u32, grid: &NullGrid) -> Result<Self, EvolveError> {
        let values = (0..=2 * grid.n())
            .map(|k| {
                let rho = bh.horizon_offset(grid.rstar_at(k))?;
                Ok(bh.rw_potential_offset(l, rho))
            })
            .collect::<Result<Vec<_>, crate::geometry::GeometryError>>()?;
        Ok(Self { values })
    }

    /// `V = 0`, for free-field checks.
    pub fn zero(grid: &NullGrid) -> Self {
        Self {
            values: vec![0.0; 2 * grid.n() + 1],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_are_consistent() {
        let g = NullGrid::new(0.5, -10.0, 20.0).unwrap();
        assert_eq!(g.n(), 60);
        assert_eq!(g.u_max(), 10.0);
        assert_eq!(g.v_max(), 20.0);
        for i in 0..=g.n() {
            let j = g.n() - i;
            assert!(g.t(i, j).abs() < 1e-15);
            let rstar = 0.5 * (g.v(j) - g.u(i));
            assert!((rstar - g.rstar_at(j + g.n() - i)).abs() < 1e-12);
        }
        assert_eq!(g.row_of(10.0), Some(60));
        assert_eq!(g.col_of(-10.0), Some(0));
        assert_eq!(g.col_of(-9.7), None);
        assert_eq!(g.rstar_index(0.25), Some(41));
    }

    #[test]
    fn refinement_nests() {
        let g = NullGrid::new(0.08, -150.0, 400.0).unwrap();
        let f = g.refined();
        assert_eq!(f.n(), 2 * g.n());
        assert_eq!(f.rstar_max(), g.rstar_max());
        for j in (0..=g.n()).step_by(97) {
            assert_eq!(g.v(j), f.v(2 * j));
        }
    }

    #[test]
    fn invalid_grids() {
        assert!(NullGrid::new(0.0, 0.0, 1.0).is_err());
        assert!(NullGrid::new(0.1, 1.0, 1.0).is_err());
        assert!(NullGrid::new(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn potential_table_matches_geometry() {
        let bh = BlackHole::default();
        let g = NullGrid::new(0.25, -20.0, 30.0).unwrap();
        let p = PotentialTable::regge_wheeler(bh, 1, &g).unwrap();
        let k = g.rstar_index(3.0).unwrap();
        assert!((p.values()[k] - bh.rw_potential(1, 3.0).unwrap()).abs() < 1e-15);
        assert!(PotentialTable::zero(&g).max() == 0.0);
    }
}

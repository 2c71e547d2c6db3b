use proptest::prelude::*;

use radfield::analysis::{restrict, self_convergence};
use radfield::cli::check::free_wave_error;
use radfield::evolve::{evolve_mode, evolve_null_data, ExtractionPlan, NullData, NullGrid, PotentialTable};
use radfield::geometry::BlackHole;
use radfield::modes::{make_initial_data, Family, Mode};
use radfield::radiation::RadiationField;

#[test]
fn free_field_exact_across_diamond() {
    assert!(free_wave_error().unwrap() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn free_field_exact_for_random_profiles(
        a in -2.0f64..2.0, b in -2.0f64..2.0,
        cu in -15.0f64..15.0, cv in -15.0f64..15.0,
        wu in 0.5f64..5.0, wv in 0.5f64..5.0,
        k in 0.1f64..2.0,
    ) {
        let exact = |u: f64, v: f64| {
            a * (-((u - cu) / wu).powi(2)).exp() + b * (k * v).sin() * (-((v - cv) / wv).powi(2)).exp()
        };
        let grid = NullGrid::new(0.125, -20.0, 20.0).unwrap();
        let n = grid.n();
        let null = NullData {
            diag0: (0..=n).map(|j| exact(grid.u(n - j), grid.v(j))).collect(),
            diag1: (0..n).map(|m| exact(grid.u(n - m), grid.v(m + 1))).collect(),
        };
        let plan = ExtractionPlan { snapshot_stride: Some(1), ..ExtractionPlan::default() };
        let run = evolve_null_data(&null, &PotentialTable::zero(&grid), &grid, &plan, Mode::axisymmetric(0)).unwrap();
        let snap = run.snapshot.unwrap();
        let peak = snap.u.iter().zip(&snap.v).map(|(&u, &v)| exact(u, v).abs()).fold(0.0, f64::max);
        for k in 0..snap.psi.len() {
            let e = exact(snap.u[k], snap.v[k]);
            prop_assert!((snap.psi[k] - e).abs() <= 1e-12 * peak.max(1e-300));
        }
    }
}

#[test]
fn second_order_self_convergence_on_smooth_data() {
    let bh = BlackHole::default();
    for l in [0u32, 1, 2] {
        let d = make_initial_data(Family::Gaussian { center: 10.0, width: 2.0 }, 1.0, 0.3, Mode::axisymmetric(l), bh)
            .unwrap();
        let coarse = NullGrid::from_lines(0.2, 80.0, 80.0).unwrap();
        let grids = [coarse, coarse.refined(), coarse.refined().refined()];
        let runs: Vec<_> = grids
            .iter()
            .map(|g| evolve_mode(&d, g, &ExtractionPlan::default()).unwrap())
            .collect();
        let scri: Vec<Vec<f64>> = runs.iter().map(|r| r.scri.psi.clone()).collect();
        let order = self_convergence(&scri[0], &restrict(&scri[1], 2), &restrict(&scri[2], 4))
            .unwrap()
            .value()
            .unwrap();
        assert!((1.8..=2.2).contains(&order), "l={l} scri order {order}");

        let fields: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| RadiationField::horizon(std::slice::from_ref(r), bh).unwrap().waveforms[0].value.clone())
            .collect();
        let order = self_convergence(&fields[0], &restrict(&fields[1], 2), &restrict(&fields[2], 4))
            .unwrap()
            .value()
            .unwrap();
        assert!((1.8..=2.2).contains(&order), "l={l} horizon field order {order}");
    }
}

#[test]
fn compact_data_are_causal() {
    let bh = BlackHole::default();
    for (lo, hi, l) in [(10.0, 14.0, 0u32), (-6.0, -2.0, 1), (3.0, 9.0, 2)] {
        let fam = Family::CompactBump { center: 0.5 * (lo + hi), halfwidth: 0.5 * (hi - lo) };
        let d = make_initial_data(fam, 1.0, -0.7, Mode::axisymmetric(l), bh).unwrap();
        let grid = NullGrid::from_lines(0.05, 60.0, 60.0).unwrap();
        let run = evolve_mode(&d, &grid, &ExtractionPlan::default()).unwrap();
        let h = grid.h();
        let peak_h = run.horizon.psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (v, psi) in run.horizon.param.iter().zip(&run.horizon.psi) {
            if *v < lo - 2.0 * h {
                assert!(psi.abs() <= 1e-12 * peak_h, "horizon v={v}");
            }
        }
        let peak_s = run.scri.psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (u, psi) in run.scri.param.iter().zip(&run.scri.psi) {
            if *u < -hi - 2.0 * h {
                assert!(psi.abs() <= 1e-12 * peak_s, "scri u={u}");
            }
        }
    }
}

#[test]
fn mode_runs_do_not_depend_on_order() {
    let bh = BlackHole::default();
    let grid = NullGrid::from_lines(0.1, 50.0, 50.0).unwrap();
    let data: Vec<_> = [2u32, 0, 1]
        .iter()
        .map(|&l| make_initial_data(Family::Gaussian { center: 5.0, width: 1.5 }, 1.0, 0.0, Mode::axisymmetric(l), bh).unwrap())
        .collect();
    let plan = ExtractionPlan::default();
    let forward: Vec<_> = data.iter().map(|d| evolve_mode(d, &grid, &plan).unwrap()).collect();
    let backward: Vec<_> = data.iter().rev().map(|d| evolve_mode(d, &grid, &plan).unwrap()).collect();
    for (a, b) in forward.iter().zip(backward.iter().rev()) {
        assert_eq!(a, b);
    }
}

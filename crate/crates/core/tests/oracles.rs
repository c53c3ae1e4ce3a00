//! Library results against dense-matrix and closed-form references.

mod common;

use csgs::potentials::estimate_nu;
use csgs::solver::{cold_start_energy, locate_threshold_crossing};
use csgs::*;
use nalgebra::{DMatrix, SymmetricEigen};

fn smallest_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn spectral_laplacian_matches_dense_matrix() {
    let mut r = common::rng(20);
    for (d, n) in [(1, 32), (2, 16), (3, 8)] {
        let g = Grid::new(GridSpec::periodic(d, 3.0, n)).unwrap();
        let f = common::smooth_random(&g, &mut r, 1.0);
        let lib = g.apply_laplacian(&f).unwrap();
        let dense = common::neg_laplacian(&f, &g);
        let err = lib.iter().zip(&dense).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        let size = dense.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-11 * size.max(1.0), "d={d}: {err:e}");
    }
}

#[test]
fn nu_matches_dense_eigenvalues() {
    let g = Grid::new(GridSpec::periodic(1, 2.0, 32)).unwrap();
    let defs = PotentialDefs::new(
        PotentialDef::CosineLattice { a: 3.0, b: 1.2 },
        PotentialDef::GaussianPerturbed { base: 1.0, amp: -0.8, sigma: 0.7 },
        PotentialDef::constant(0.1),
    );
    let ps = sample_potentials(&defs, 0.5, &g).unwrap();
    let (nu1, nu2) = estimate_nu(&ps, &g).unwrap();
    let d2 = common::d2_matrix(32, 2.0);
    let want1 = smallest_eigenvalue(-&d2 + DMatrix::from_diagonal(&ps.v1.clone().into()));
    let want2 = smallest_eigenvalue(-&d2 + DMatrix::from_diagonal(&ps.v2.clone().into()));
    assert!((nu1 - want1).abs() < 1e-7 * want1.abs().max(1.0), "{nu1} vs {want1}");
    assert!((nu2 - want2).abs() < 1e-7 * want2.abs().max(1.0), "{nu2} vs {want2}");
}

#[test]
fn nu_in_two_dimensions() {
    let n = 12;
    let g = Grid::new(GridSpec::periodic(2, 1.5, n)).unwrap();
    let defs = PotentialDefs::new(
        PotentialDef::GaussianPerturbed { base: 2.0, amp: -1.5, sigma: 0.5 },
        PotentialDef::constant(0.7),
        PotentialDef::constant(0.1),
    );
    let ps = sample_potentials(&defs, 0.5, &g).unwrap();
    let d2 = common::d2_matrix(n, 1.5);
    let eye = DMatrix::<f64>::identity(n, n);
    let lap = d2.kronecker(&eye) + eye.kronecker(&d2);
    let want = smallest_eigenvalue(-lap + DMatrix::from_diagonal(&ps.v1.clone().into()));
    let (nu1, nu2) = estimate_nu(&ps, &g).unwrap();
    assert!((nu1 - want).abs() < 1e-7, "{nu1} vs {want}");
    assert!((nu2 - 0.7).abs() < 1e-9);
}

/// With `mu = 0` and no coupling the `u` component carries no nonlinear gain
/// and vanishes; `v` is the scalar soliton with level `(4/3) V2^(3/2)`.
#[test]
fn decoupled_level_is_the_scalar_soliton() {
    let g = Grid::new(GridSpec::periodic(1, 12.0, 256)).unwrap();
    let ps = sample_potentials(&PotentialDefs::constant(1.5, 0.0), 0.5, &g).unwrap();
    let spec = ProblemSpec::new(1, 4.0, 4.0, 0.0).unwrap();
    let r = minimize_ground_state(&ps, &spec, &g, &SolveOptions::default()).unwrap();
    assert!(r.converged);
    let want = 4.0 / 3.0 * 1.5f64.powf(1.5);
    assert!((r.energy - want).abs() < 1e-8, "{} vs {want}", r.energy);
    assert!(r.field.u.iter().all(|x| x.abs() < 1e-6));
}

#[test]
fn symmetric_states_from_the_dense_flow() {
    let g = Grid::new(GridSpec::periodic(1, 4.0, 64)).unwrap();
    let ps = sample_potentials(&PotentialDefs::constant(1.0, 0.6), 0.8, &g).unwrap();
    let spec = ProblemSpec::new(1, 3.0, 4.0, 2.0).unwrap();
    let r = minimize_ground_state(&ps, &spec, &g, &SolveOptions::default()).unwrap();
    let want = common::ground_state_level_1d(&ps, &g, 3.0, 4.0, 2.0, 3000);
    assert!(r.converged && (r.energy - want).abs() < 1e-7, "{} vs {want}", r.energy);
    let (e, _) = common::energy(&r.field, &ps, &g, 3.0, 4.0, 2.0);
    assert!((e - r.energy).abs() < 1e-10);
}

#[test]
fn threshold_crossing_by_bisection() {
    let g = Grid::new(GridSpec::periodic(3, 6.0, 48)).unwrap();
    let ps = sample_potentials(&PotentialDefs::constant(1.0, 0.5), 0.5, &g).unwrap();
    let template = ProblemSpec::new(3, 4.0, 6.0, 1.0).unwrap();
    let s = estimate_sobolev_constant(&Grid::new(GridSpec::periodic(3, 12.0, 96)).unwrap(), &Default::default())
        .unwrap()
        .value;
    let t = solver::threshold_from(s, 3);
    let opts = SolveOptions::default();
    let (lo, hi) = locate_threshold_crossing(&ps, &template, &g, &opts, &[6.0], t, (4.0, 8.0), 3).unwrap();
    assert!(hi - lo <= 0.5 + 1e-12);
    let at = |mu: f64| cold_start_energy(&ps, &template.with_mu(mu).unwrap(), &g, &opts, &[6.0]).unwrap().unwrap().energy;
    assert!(at(lo) >= t && at(hi) < t, "[{lo}, {hi}] around {t}");
}

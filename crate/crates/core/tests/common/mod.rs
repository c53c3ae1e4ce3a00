//! Reference computations shared by the integration tests. Nothing here goes
//! through the library's FFT path.

#![allow(dead_code)]

use std::f64::consts::PI;

use csgs::{FieldPair, Grid, PotentialSet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Periodic spectral second-derivative matrix on `n` nodes of `[-L, L)`.
pub fn d2_matrix(n: usize, half_width: f64) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = (PI / half_width).powi(2);
    DMatrix::from_fn(n, n, |i, j| {
        let k = (i as i64 - j as i64).rem_euclid(n as i64) as usize;
        let v = if k == 0 {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let s = (k as f64 * h / 2.0).sin();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            -0.5 * sign / (s * s)
        };
        v * scale
    })
}

/// `-Lap f` by applying the dense 1D matrix along every axis.
pub fn neg_laplacian(f: &[f64], grid: &Grid) -> Vec<f64> {
    let (n, d) = (grid.n(), grid.dim());
    let m = d2_matrix(n, grid.half_width());
    let mut out = vec![0.0; f.len()];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        for base in 0..f.len() {
            if (base / stride) % n != 0 {
                continue;
            }
            let line = DVector::from_iterator(n, (0..n).map(|j| f[base + j * stride]));
            let r = &m * line;
            for j in 0..n {
                out[base + j * stride] -= r[j];
            }
        }
    }
    out
}

pub fn weighted_sum(grid: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    grid.weights().iter().enumerate().map(|(i, w)| w * f(i)).sum()
}

/// `|u|_E1^2 + |v|_E2^2`
pub fn e_norm_sq(fp: &FieldPair, ps: &PotentialSet, grid: &Grid) -> f64 {
    let (lu, lv) = (neg_laplacian(&fp.u, grid), neg_laplacian(&fp.v, grid));
    weighted_sum(grid, |i| {
        fp.u[i] * lu[i] + ps.v1[i] * fp.u[i] * fp.u[i] + fp.v[i] * lv[i] + ps.v2[i] * fp.v[i] * fp.v[i]
    })
}

/// Energy `B/2 - mu/p |u|_p^p - 1/q |v|_q^q` and `B`.
pub fn energy(fp: &FieldPair, ps: &PotentialSet, grid: &Grid, p: f64, q: f64, mu: f64) -> (f64, f64) {
    let e = e_norm_sq(fp, ps, grid);
    let b = e - 2.0 * weighted_sum(grid, |i| ps.lambda[i] * fp.u[i] * fp.v[i]);
    let lp = weighted_sum(grid, |i| fp.u[i].abs().powf(p));
    let lq = weighted_sum(grid, |i| fp.v[i].abs().powf(q));
    (0.5 * b - mu / p * lp - lq / q, b)
}

/// Root of `a t^(p-2) + c t^(q-2) = b` by bisection.
pub fn fibering_root(b: f64, a: f64, c: f64, p: f64, q: f64) -> f64 {
    let phi = |t: f64| a * t.powf(p - 2.0) + c * t.powf(q - 2.0) - b;
    let (mut lo, mut hi) = (1e-12, 1.0);
    while phi(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    0.5 * (lo + hi)
}

/// Ground-state level on a 1D periodic grid by projected gradient flow with a
/// fixed step, preconditioned by a dense `(1 - D2)^(-1)`.
pub fn ground_state_level_1d(ps: &PotentialSet, grid: &Grid, p: f64, q: f64, mu: f64, iters: usize) -> f64 {
    let n = grid.n();
    let d2 = d2_matrix(n, grid.half_width());
    let prec = (DMatrix::identity(n, n) - &d2).try_inverse().unwrap();
    let h = grid.spacing();
    let xs: Vec<f64> = (0..n).map(|i| grid.coord(i)[0]).collect();
    let mut u = DVector::from_iterator(n, xs.iter().map(|x| 0.3 * (-x * x).exp()));
    let mut v = DVector::from_iterator(n, xs.iter().map(|x| (-x * x).exp()));
    let v1 = DVector::from_column_slice(&ps.v1);
    let v2 = DVector::from_column_slice(&ps.v2);
    let lam = DVector::from_column_slice(&ps.lambda);
    let project = |u: &mut DVector<f64>, v: &mut DVector<f64>| {
        let bu = -u.dot(&(&d2 * &*u)) + u.dot(&v1.component_mul(u));
        let bv = -v.dot(&(&d2 * &*v)) + v.dot(&v2.component_mul(v));
        let b = h * (bu + bv - 2.0 * u.dot(&lam.component_mul(v)));
        let a = mu * h * u.iter().map(|x| x.abs().powf(p)).sum::<f64>();
        let c = h * v.iter().map(|x| x.abs().powf(q)).sum::<f64>();
        let t = fibering_root(b, a, c, p, q);
        *u *= t;
        *v *= t;
        0.5 * b * t * t - a * t.powf(p) / p - c * t.powf(q) / q
    };
    for _ in 0..iters {
        project(&mut u, &mut v);
        let gu = -(&d2 * &u) + v1.component_mul(&u) - lam.component_mul(&v)
            - DVector::from_iterator(n, u.iter().map(|x| mu * x.abs().powf(p - 2.0) * x));
        let gv = -(&d2 * &v) + v2.component_mul(&v) - lam.component_mul(&u)
            - DVector::from_iterator(n, v.iter().map(|x| x.abs().powf(q - 2.0) * x));
        u -= 0.2 * (&prec * gu);
        v -= 0.2 * (&prec * gv);
    }
    project(&mut u, &mut v)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random field: a few low Fourier modes on top of a random bump.
pub fn smooth_random(grid: &Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> Vec<f64> {
    let l = grid.half_width();
    let d = grid.dim();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..4)
        .map(|_| {
            let k: Vec<f64> = (0..d).map(|_| rng.gen_range(-3i32..=3) as f64 * PI / l).collect();
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-l / 2.0..l / 2.0)).collect();
    let w = rng.gen_range(l / 6.0..l / 2.0);
    let a0 = rng.gen_range(0.5..1.5);
    grid.sample(|x| {
        let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
        let waves: f64 = modes
            .iter()
            .map(|(k, a, ph)| a * (x.iter().zip(k).map(|(xi, ki)| xi * ki).sum::<f64>() + ph).cos())
            .sum();
        amplitude * (a0 * (-r2 / (w * w)).exp() + 0.3 * waves)
    })
}

pub fn random_pair(grid: &Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> FieldPair {
    let u = smooth_random(grid, rng, amplitude);
    let v = smooth_random(grid, rng, amplitude);
    FieldPair::new(grid, u, v).unwrap()
}

/// Print one result line and fail the test when `ok` is false.
pub fn verdict(criterion: usize, name: &str, ok: bool, detail: impl std::fmt::Display) {
    println!("criterion {criterion:>2} {name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} {name} failed: {detail}");
}

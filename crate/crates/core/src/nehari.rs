//! Fibering scale and projection onto the discrete Nehari manifold.
//!
//! Along the ray `t -> (t u, t v)` the energy is
//! `g(t) = t^2/2 B - t^p/p mu |u|_p^p - t^q/q |v|_q^q`, whose only positive
//! critical point solves `phi(t) = mu |u|_p^p t^(p-2) + |v|_q^q t^(q-2) - B = 0`.

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::functional::{Evaluated, ProblemSpec};
use crate::grid::Grid;
use crate::potentials::PotentialSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberingDiagnostics {
    pub t_mu: f64,
    /// energy of the scaled pair
    pub g_at_t: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// `|phi(t_mu)|`
    pub residual: f64,
}

const MAX_ITERS: usize = 400;

/// Solve `a t^(p-2) + c t^(q-2) = b` for the unique `t > 0`, where
/// `a = mu |u|_p^p` and `c = |v|_q^q`.
pub fn solve_fibering_equation(b: f64, a: f64, c: f64, p: f64, q: f64) -> Result<FiberingDiagnostics> {
    if !(a + c > 0.0) {
        return Err(Error::DegenerateNonlinearity);
    }
    if !(b > 0.0) {
        return Err(Error::NonpositiveQuadraticForm(b));
    }
    let phi = |t: f64| a * t.powf(p - 2.0) + c * t.powf(q - 2.0) - b;
    let dphi = |t: f64| a * (p - 2.0) * t.powf(p - 3.0) + c * (q - 2.0) * t.powf(q - 3.0);
    let g = |t: f64| 0.5 * t * t * b - a * t.powf(p) / p - c * t.powf(q) / q;
    let tol = 1e-12 * b.max(1.0);

    let mut iterations = 0;
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let f1 = phi(1.0);
    if f1 == 0.0 {
        return Ok(FiberingDiagnostics {
            t_mu: 1.0,
            g_at_t: g(1.0),
            bracket: (0.25, 4.0),
            iterations: 0,
            residual: 0.0,
        });
    }
    // expand geometrically in the deficient direction
    if f1 < 0.0 {
        while phi(hi) < 0.0 {
            lo = hi;
            hi *= 4.0;
            iterations += 1;
            if !hi.is_finite() {
                return Err(Error::NoConvergence { what: "fibering bracket".into(), iters: iterations });
            }
        }
    } else {
        while phi(lo) > 0.0 {
            hi = lo;
            lo /= 4.0;
            iterations += 1;
            if lo == 0.0 {
                return Err(Error::NoConvergence { what: "fibering bracket".into(), iters: iterations });
            }
        }
    }
    let bracket = (lo, hi);

    let mut t = (lo * hi).sqrt();
    for _ in 0..MAX_ITERS {
        iterations += 1;
        let f = phi(t);
        if f.abs() <= tol {
            return Ok(FiberingDiagnostics {
                t_mu: t,
                g_at_t: g(t),
                bracket,
                iterations,
                residual: f.abs(),
            });
        }
        if f < 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let newton = t - f / dphi(t);
        t = if newton > lo && newton < hi {
            newton
        } else {
            (lo * hi).sqrt()
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            // bracket exhausted at double precision
            let f = phi(t);
            return if f.abs() <= tol {
                Ok(FiberingDiagnostics { t_mu: t, g_at_t: g(t), bracket, iterations, residual: f.abs() })
            } else {
                Err(Error::NoConvergence { what: "fibering equation".into(), iters: iterations })
            };
        }
    }
    Err(Error::NoConvergence { what: "fibering equation".into(), iters: iterations })
}

pub(crate) fn fibering_of(ev: &Evaluated, spec: &ProblemSpec) -> Result<FiberingDiagnostics> {
    if ev.fp.is_zero() {
        return Err(Error::ZeroField);
    }
    solve_fibering_equation(ev.e.quad, spec.mu * ev.e.lp, ev.e.lq, spec.p, spec.q)
}

/// Project an evaluated pair; returns the scaled pair with its integrals.
pub(crate) fn project_evaluated(
    ev: &Evaluated,
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<(Evaluated, FiberingDiagnostics)> {
    let diag = fibering_of(ev, spec)?;
    Ok((ev.scaled(diag.t_mu, ps, spec, grid)?, diag))
}

/// The unique `t_mu > 0` maximizing the energy along the ray through `fp`.
pub fn fibering_scale(fp: &FieldPair, ps: &PotentialSet, spec: &ProblemSpec, grid: &Grid) -> Result<FiberingDiagnostics> {
    let ev = Evaluated::new(fp.clone(), ps, spec, grid)?;
    fibering_of(&ev, spec)
}

/// `(t_mu u, t_mu v)`, which lies on the Nehari manifold.
pub fn nehari_project(
    fp: &FieldPair,
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<(FieldPair, FiberingDiagnostics)> {
    let ev = Evaluated::new(fp.clone(), ps, spec, grid)?;
    let (proj, diag) = project_evaluated(&ev, ps, spec, grid)?;
    Ok((proj.fp, diag))
}

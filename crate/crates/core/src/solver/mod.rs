//! Minimization of the energy over the Nehari manifold.
//!
//! Each iteration evaluates the L2 gradient at the current (projected) pair,
//! steps along the Sobolev-preconditioned descent direction `-(1 - Lap)^{-1} grad`,
//! projects the trial back onto the manifold and accepts it under an Armijo
//! test on the projected energy.

pub mod compare;
pub mod sobolev;
pub mod sweep;

use std::fmt;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::fingerprint;
use crate::functional::{EnergyBreakdown, Evaluated, ProblemSpec};
use crate::grid::Grid;
use crate::nehari::{project_evaluated, FiberingDiagnostics};
use crate::potentials::PotentialSet;

pub use compare::{compare_energies, ComparisonReport};
pub use sobolev::{estimate_sobolev_constant, sobolev_quotient, SobolevEstimate, SobolevOptions, SHARP_SOBOLEV_3D};
pub use sweep::{
    cold_start_energy, locate_threshold_crossing, sweep_mu, threshold_from, MuSweep, SweepOptions, SweepPoint,
};

/// Relative rounding level assumed for energy differences.
const ENERGY_ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    /// `v = exp(-|x|^2 / w^2)`, `u = v / 2`; `None` means `w = L/4`. The
    /// amplitudes differ because `u = v` is invariant under the descent for
    /// exchange-symmetric problems and holds only a saddle there.
    GaussianBump { width: Option<f64> },
    /// Seeded positive bump with random center, width, amplitudes and
    /// multiplicative noise.
    Random,
    File(PathBuf),
}

impl Default for InitKind {
    fn default() -> Self {
        InitKind::GaussianBump { width: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop once the L2 norm of the energy gradient is at most this.
    pub grad_tol: f64,
    pub step0: f64,
    pub armijo_factor: f64,
    pub armijo_c: f64,
    /// Lattice recentering period in iterations; 0 disables it.
    pub recenter_every: usize,
    pub seed: u64,
    pub init: InitKind,
    /// Precondition the descent direction with `(1 - Lap)^{-1}`.
    pub precondition: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 5000,
            grad_tol: 1e-6,
            step0: 1.0,
            armijo_factor: 0.5,
            armijo_c: 1e-4,
            recenter_every: 50,
            seed: 0,
            init: InitKind::default(),
            precondition: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: String| Err(Error::config(format!("solver.{k}"), m));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol", format!("must be positive (got {})", self.grad_tol));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return bad("step0", format!("must be positive (got {})", self.step0));
        }
        if !(self.armijo_factor > 0.0 && self.armijo_factor < 1.0) {
            return bad("armijo_factor", format!("must lie in (0, 1) (got {})", self.armijo_factor));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c", format!("must lie in (0, 1) (got {})", self.armijo_c));
        }
        if let InitKind::GaussianBump { width: Some(w) } = self.init {
            if !(w > 0.0) {
                return bad("init", format!("bump width must be positive (got {w})"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    /// backtracking shrank the step below resolution without sufficient decrease
    LineSearchStalled,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max_iters reached",
            StopReason::LineSearchStalled => "line search stalled",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Final pair, on the Nehari manifold.
    pub field: FieldPair,
    /// Energy level `c` of the final pair.
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
    /// `J` of the final pair.
    pub nehari_residual: f64,
    pub fibering: FiberingDiagnostics,
    /// L2 norm of the energy gradient at the final pair.
    pub grad_norm: f64,
    pub iterations: usize,
    /// One row per iterate, starting from the projected initial pair.
    pub energy_trace: Vec<TraceRow>,
    pub recenters_applied: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub mu: f64,
    pub grid_hash: String,
    pub spec_hash: String,
    pub potential_hash: String,
    pub threads: usize,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c = {:.12e}  |grad I| = {:.3e}  iterations = {}  recenters = {}  {}",
            self.energy, self.grad_norm, self.iterations, self.recenters_applied, self.stop_reason
        )
    }
}

/// Initial pair for `init`. `seed` drives the random variant only.
pub fn initial_field(grid: &Grid, init: &InitKind, seed: u64) -> Result<FieldPair> {
    let l = grid.half_width();
    let d = grid.dim();
    let mut fp = match init {
        InitKind::GaussianBump { width } => {
            let w = width.unwrap_or(l / 4.0);
            let f = grid.sample(|x| (-x.iter().map(|c| c * c).sum::<f64>() / (w * w)).exp());
            FieldPair::new(grid, f.iter().map(|x| 0.5 * x).collect(), f)?
        }
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-l / 8.0..=l / 8.0)).collect();
            let w = rng.gen_range(l / 8.0..=l / 3.0);
            let (au, av) = (rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5));
            let bump = grid.sample(|x| {
                let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum();
                (-r2 / (w * w)).exp()
            });
            let mut u = Vec::with_capacity(grid.len());
            let mut v = Vec::with_capacity(grid.len());
            for b in bump {
                u.push(au * b * (1.0 + 0.1 * rng.gen_range(-1.0..1.0)));
                v.push(av * b * (1.0 + 0.1 * rng.gen_range(-1.0..1.0)));
            }
            FieldPair::new(grid, u, v)?
        }
        InitKind::File(path) => {
            let fp = crate::io::field_file::read_field(path)?;
            fp.conforms(grid)?;
            fp
        }
    };
    grid.enforce_boundary(&mut fp.u);
    grid.enforce_boundary(&mut fp.v);
    Ok(fp)
}

/// Ground-state search from the initial pair selected by `opts.init`.
pub fn minimize_ground_state(
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let init = initial_field(grid, &opts.init, opts.seed)?;
    minimize_from(init, ps, spec, grid, opts)
}

/// Ground-state search from an explicit initial pair.
pub fn minimize_from(
    init: FieldPair,
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    let start = Evaluated::new(init, ps, spec, grid)?;
    let (mut cur, mut fib) = project_evaluated(&start, ps, spec, grid)?;
    let recenter = opts.recenter_every > 0 && grid.is_periodic() && ps.periodic_flag && grid.nodes_per_unit().is_some();

    let mut trace = Vec::new();
    let mut step = opts.step0;
    let mut recenters = 0;
    let mut k = 0;
    let (grad_norm, stop) = loop {
        let g = cur.gradient(ps, spec, grid);
        let gn = g.l2_norm(grid);
        trace.push(TraceRow { iter: k, energy: cur.e.total, grad_norm: gn });
        if gn <= opts.grad_tol {
            break (gn, StopReason::Converged);
        }
        if k >= opts.max_iters {
            break (gn, StopReason::MaxIters);
        }
        let dir = descent_direction(&g, grid, opts.precondition)?;
        let slope = g.dot(&dir, grid);
        let noise = ENERGY_ROUNDING * cur.e.magnitude();
        step = (2.0 * step).min(10.0 * opts.step0);
        let mut accepted = None;
        while step >= 1e-14 * opts.step0 {
            let trial = cur.fp.axpy(step, &dir);
            // a trial that leaves the admissible set (e.g. both nonlinear
            // integrals vanish) is rejected like an insufficient decrease
            if let Ok((p, d)) = Evaluated::new(trial, ps, spec, grid)
                .and_then(|ev| project_evaluated(&ev, ps, spec, grid))
            {
                if p.e.total <= cur.e.total + opts.armijo_c * step * slope {
                    accepted = Some((p, d));
                    break;
                }
                // Near a minimizer the Armijo decrease drops below the rounding
                // level of the energy; then a trial that does not raise the
                // energy beyond that level is taken if it lowers the gradient.
                if p.e.total <= cur.e.total + noise && p.gradient(ps, spec, grid).l2_norm(grid) < gn {
                    accepted = Some((p, d));
                    break;
                }
            }
            step *= opts.armijo_factor;
        }
        let Some((next, d)) = accepted else {
            break (gn, StopReason::LineSearchStalled);
        };
        cur = next;
        fib = d;
        k += 1;

        if recenter && k % opts.recenter_every == 0 {
            if let Some(shifted) = recentered(&cur, ps, spec, grid)? {
                if shifted.e.total <= cur.e.total {
                    cur = shifted;
                    recenters += 1;
                }
            }
        }
    };

    Ok(SolveReport {
        energy: cur.e.total,
        breakdown: cur.e,
        nehari_residual: cur.nehari_value(spec),
        fibering: fib,
        grad_norm,
        iterations: k,
        energy_trace: trace,
        recenters_applied: recenters,
        converged: stop == StopReason::Converged,
        stop_reason: stop,
        mu: spec.mu,
        grid_hash: fingerprint::grid_hash(grid),
        spec_hash: fingerprint::spec_hash(spec),
        potential_hash: fingerprint::potential_hash(ps),
        threads: 1,
        field: cur.fp,
    })
}

fn descent_direction(g: &FieldPair, grid: &Grid, precondition: bool) -> Result<FieldPair> {
    let (mut u, mut v) = if precondition {
        grid.solve_shifted_pair(&g.u, &g.v, 1.0)?
    } else {
        (g.u.clone(), g.v.clone())
    };
    u.iter_mut().chain(v.iter_mut()).for_each(|x| *x = -*x);
    grid.enforce_boundary(&mut u);
    grid.enforce_boundary(&mut v);
    Ok(FieldPair { u, v, shape: g.shape })
}

/// Shift by the integer lattice vector that brings the max-density node
/// nearest the origin. `None` when that vector is zero.
fn recentered(cur: &Evaluated, ps: &PotentialSet, spec: &ProblemSpec, grid: &Grid) -> Result<Option<Evaluated>> {
    let x = grid.coord(cur.fp.max_density_node());
    let z: Vec<i64> = x[..grid.dim()].iter().map(|c| c.round() as i64).collect();
    if z.iter().all(|&c| c == 0) {
        return Ok(None);
    }
    let u = grid.translate_lattice(&cur.fp.u, &z)?;
    let v = grid.translate_lattice(&cur.fp.v, &z)?;
    let fp = FieldPair { u, v, shape: cur.fp.shape };
    Ok(Some(Evaluated::new(fp, ps, spec, grid)?))
}

/// Replace the pair by `(|u|, |v|)`, project, and polish with a short run.
/// The polished pair is made nonnegative again if the run introduced signs.
pub fn nonneg_refine(
    report: &SolveReport,
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let polish = SolveOptions {
        max_iters: opts.max_iters.min(500),
        ..opts.clone()
    };
    let refined = minimize_from(report.field.abs(), ps, spec, grid, &polish)?;
    if refined.field.u.iter().chain(&refined.field.v).all(|&x| x >= 0.0) {
        return Ok(refined);
    }
    let again = SolveOptions { max_iters: 0, ..polish };
    let mut out = minimize_from(refined.field.abs(), ps, spec, grid, &again)?;
    out.iterations += refined.iterations;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::nehari_value;
    use crate::grid::GridSpec;
    use crate::potentials::{sample_potentials, PotentialDefs};

    fn setup(lambda: f64, mu: f64) -> (Grid, PotentialSet, ProblemSpec) {
        let g = Grid::new(GridSpec::periodic(1, 4.0, 64)).unwrap();
        let ps = sample_potentials(&PotentialDefs::constant(1.0, lambda), 0.5, &g).unwrap();
        let spec = ProblemSpec::new(1, 4.0, 4.0, mu).unwrap();
        (g, ps, spec)
    }

    #[test]
    fn converges_with_monotone_trace() {
        let (g, ps, spec) = setup(0.3, 1.0);
        let r = minimize_ground_state(&ps, &spec, &g, &SolveOptions::default()).unwrap();
        assert!(r.converged, "{r}");
        assert!(r.energy > 0.0);
        assert!(r.energy_trace.windows(2).all(|w| w[1].energy <= w[0].energy));
        let j = nehari_value(&r.field, &ps, &spec, &g).unwrap();
        assert!(j.abs() <= 1e-8 * r.breakdown.quad.max(1.0));
        assert_eq!(r.energy_trace.last().unwrap().grad_norm, r.grad_norm);
    }

    #[test]
    fn zero_budget_returns_projected_start() {
        let (g, ps, spec) = setup(0.3, 1.0);
        let opts = SolveOptions { max_iters: 0, ..Default::default() };
        let r = minimize_ground_state(&ps, &spec, &g, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.energy_trace.len(), 1);
        assert!(r.nehari_residual.abs() < 1e-10 * r.breakdown.quad.max(1.0));
    }

    #[test]
    fn deterministic() {
        let (g, ps, spec) = setup(0.3, 1.0);
        let opts = SolveOptions { init: InitKind::Random, seed: 7, max_iters: 40, ..Default::default() };
        let a = minimize_ground_state(&ps, &spec, &g, &opts).unwrap();
        let b = minimize_ground_state(&ps, &spec, &g, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refine_flips_signs_and_keeps_energy() {
        let (g, ps, spec) = setup(0.3, 1.0);
        let opts = SolveOptions::default();
        let r = minimize_ground_state(&ps, &spec, &g, &opts).unwrap();
        let flipped = minimize_from(r.field.scaled(-1.0), &ps, &spec, &g, &opts).unwrap();
        let refined = nonneg_refine(&flipped, &ps, &spec, &g, &opts).unwrap();
        assert!((refined.energy - r.energy).abs() < 1e-10);
        assert!(refined.field.u.iter().chain(&refined.field.v).all(|&x| x > 0.0));
    }

    #[test]
    fn mixed_signs_lose_energy_under_refinement() {
        let (g, ps, spec) = setup(0.3, 1.0);
        let opts = SolveOptions { max_iters: 0, ..Default::default() };
        let bump = |x: &[f64]| (-x[0] * x[0]).exp();
        let mixed = FieldPair::from_fn(&g, bump, |x| -bump(x)).unwrap();
        let r = minimize_from(mixed, &ps, &spec, &g, &opts).unwrap();
        let refined = nonneg_refine(&r, &ps, &spec, &g, &opts).unwrap();
        assert!(refined.energy < r.energy);
    }

    #[test]
    fn rejects_bad_options() {
        let (g, ps, spec) = setup(0.3, 1.0);
        let opts = SolveOptions { armijo_factor: 1.0, ..Default::default() };
        assert!(minimize_ground_state(&ps, &spec, &g, &opts).is_err());
    }
}

//! Energy levels along a range of `mu`, compared with the critical threshold
//! `S^(d/2) / d`.
//!
//! The critical problem on a grid has several local minimizers on the Nehari
//! manifold, and a single warm-started pass can stay trapped on the branch it
//! started on. The sweep therefore runs warm continuation in both directions
//! and keeps the lower energy at each `mu`.

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::functional::{ProblemSpec, Regime};
use crate::grid::Grid;
use crate::potentials::PotentialSet;

use super::sobolev::{estimate_sobolev_constant, SobolevOptions};
use super::{initial_field, minimize_from, InitKind, SolveOptions, SolveReport};

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub solve: SolveOptions,
    /// Also continue downward from the largest `mu`.
    pub bidirectional: bool,
    /// Sharp Sobolev constant to use for the threshold; estimated on the
    /// sweep grid when absent.
    pub sobolev: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solve: SolveOptions::default(),
            bidirectional: true,
            sobolev: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub mu: f64,
    /// Lower of the converged continuation energies.
    pub energy: Option<f64>,
    pub ascending: Option<f64>,
    pub descending: Option<f64>,
    pub grad_norm: f64,
    pub converged: bool,
    pub error: Option<String>,
    pub report: Option<SolveReport>,
}

#[derive(Debug, Clone)]
pub struct MuSweep {
    pub mu_values: Vec<f64>,
    /// `c(mu)`, `None` where every solve failed.
    pub energies: Vec<Option<f64>>,
    pub points: Vec<SweepPoint>,
    pub sobolev: Option<f64>,
    /// `S^(d/2) / d` in the critical-q regime.
    pub threshold: Option<f64>,
    /// First `mu` with `c(mu)` below the threshold.
    pub mu0_estimate: Option<f64>,
}

impl MuSweep {
    pub fn below_threshold(&self, i: usize) -> Option<bool> {
        Some(self.energies[i]? < self.threshold?)
    }

    /// Whether the recorded energies strictly decrease with `mu`.
    pub fn strictly_decreasing(&self) -> bool {
        let e: Option<Vec<f64>> = self.energies.iter().copied().collect();
        matches!(e, Some(e) if e.windows(2).all(|w| w[1] < w[0]))
    }
}

/// `S^(d/2) / d`.
pub fn threshold_from(sobolev: f64, dim: usize) -> f64 {
    sobolev.powf(dim as f64 / 2.0) / dim as f64
}

fn validate_mu_values(mu_values: &[f64]) -> Result<()> {
    if mu_values.is_empty() {
        return Err(Error::config("sweep.mu_values", "mu_values must be non-empty"));
    }
    if mu_values.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::config("sweep.mu_values", "values must be finite and >= 0"));
    }
    if mu_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("sweep.mu_values", "values must be strictly increasing"));
    }
    Ok(())
}

type PassResult = std::result::Result<SolveReport, String>;

/// Warm-started continuation through `order`; the first solve starts from
/// `opts.init`.
fn continuation(
    ps: &PotentialSet,
    template: &ProblemSpec,
    grid: &Grid,
    mu_values: &[f64],
    order: impl Iterator<Item = usize>,
    opts: &SolveOptions,
) -> Result<Vec<Option<PassResult>>> {
    let mut out: Vec<Option<PassResult>> = vec![None; mu_values.len()];
    let cold = initial_field(grid, &opts.init, opts.seed)?;
    let mut prev: Option<FieldPair> = None;
    for i in order {
        let spec = template.with_mu(mu_values[i])?;
        let init = prev.clone().unwrap_or_else(|| cold.clone());
        let res = minimize_from(init, ps, &spec, grid, opts).map_err(|e| e.to_string());
        if let Ok(r) = &res {
            prev = Some(r.field.clone());
        }
        out[i] = Some(res);
    }
    Ok(out)
}

/// One warm-started ground-state solve per `mu`, with the threshold
/// comparison in the critical-q regime. Failed solves are recorded and the
/// sweep continues.
pub fn sweep_mu(
    ps: &PotentialSet,
    template: &ProblemSpec,
    grid: &Grid,
    mu_values: &[f64],
    opts: &SweepOptions,
) -> Result<MuSweep> {
    validate_mu_values(mu_values)?;
    let n = mu_values.len();
    let up = continuation(ps, template, grid, mu_values, 0..n, &opts.solve)?;
    let down = if opts.bidirectional {
        continuation(ps, template, grid, mu_values, (0..n).rev(), &opts.solve)?
    } else {
        vec![None; n]
    };

    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let energy_of = |r: &Option<PassResult>| match r {
            Some(Ok(rep)) if rep.converged => Some(rep.energy),
            _ => None,
        };
        let (a, d) = (energy_of(&up[i]), energy_of(&down[i]));
        let candidates = [&up[i], &down[i]];
        let best = candidates
            .iter()
            .filter_map(|r| match r {
                Some(Ok(rep)) => Some(rep),
                _ => None,
            })
            .min_by(|x, y| {
                // converged reports first, then lower energy
                (!x.converged, x.energy)
                    .partial_cmp(&(!y.converged, y.energy))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .cloned();
        let error = candidates.iter().find_map(|r| match r {
            Some(Err(e)) => Some(e.clone()),
            _ => None,
        });
        let energy = match (a, d) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        points.push(SweepPoint {
            mu: mu_values[i],
            energy,
            ascending: a,
            descending: d,
            grad_norm: best.as_ref().map_or(f64::NAN, |r| r.grad_norm),
            converged: best.as_ref().is_some_and(|r| r.converged),
            error: if energy.is_none() { error.or(Some("no converged solve".into())) } else { None },
            report: best,
        });
    }

    let sobolev = match template.regime {
        Regime::CriticalQ => Some(match opts.sobolev {
            Some(s) => s,
            None => estimate_sobolev_constant(grid, &SobolevOptions::default())?.value,
        }),
        _ => None,
    };
    let threshold = sobolev.map(|s| threshold_from(s, template.dim));
    let energies: Vec<Option<f64>> = points.iter().map(|p| p.energy).collect();
    let mu0_estimate = threshold.and_then(|t| {
        points
            .iter()
            .find(|p| p.energy.is_some_and(|c| c < t))
            .map(|p| p.mu)
    });
    Ok(MuSweep {
        mu_values: mu_values.to_vec(),
        energies,
        points,
        sobolev,
        threshold,
        mu0_estimate,
    })
}

/// Lowest converged energy over independent cold starts from Gaussian bumps
/// of the given widths.
pub fn cold_start_energy(
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
    opts: &SolveOptions,
    widths: &[f64],
) -> Result<Option<SolveReport>> {
    let mut best: Option<SolveReport> = None;
    for &w in widths {
        let o = SolveOptions { init: InitKind::GaussianBump { width: Some(w) }, ..opts.clone() };
        let init = initial_field(grid, &o.init, o.seed)?;
        let Ok(r) = minimize_from(init, ps, spec, grid, &o) else { continue };
        if r.converged && best.as_ref().is_none_or(|b| r.energy < b.energy) {
            best = Some(r);
        }
    }
    Ok(best)
}

/// Bisection for the `mu` where the cold-start energy falls below `threshold`,
/// given `c(lo) >= threshold > c(hi)`. Returns the final bracket.
pub fn locate_threshold_crossing(
    ps: &PotentialSet,
    template: &ProblemSpec,
    grid: &Grid,
    opts: &SolveOptions,
    widths: &[f64],
    threshold: f64,
    bracket: (f64, f64),
    steps: usize,
) -> Result<(f64, f64)> {
    let level = |mu: f64| -> Result<f64> {
        let spec = template.with_mu(mu)?;
        cold_start_energy(ps, &spec, grid, opts, widths)?
            .map(|r| r.energy)
            .ok_or_else(|| Error::NoConvergence { what: format!("cold solves at mu = {mu}"), iters: opts.max_iters })
    };
    let (mut lo, mut hi) = bracket;
    if !(level(lo)? >= threshold && level(hi)? < threshold) {
        return Err(Error::InvalidProblem(format!(
            "threshold {threshold} is not crossed on [{lo}, {hi}]"
        )));
    }
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if level(mid)? < threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::potentials::{sample_potentials, PotentialDefs};

    fn setup() -> (Grid, PotentialSet, ProblemSpec) {
        let g = Grid::new(GridSpec::periodic(1, 4.0, 64)).unwrap();
        let ps = sample_potentials(&PotentialDefs::constant(1.0, 0.3), 0.5, &g).unwrap();
        (g, ps, ProblemSpec::new(1, 4.0, 4.0, 1.0).unwrap())
    }

    #[test]
    fn subcritical_sweep_decreases() {
        let (g, ps, spec) = setup();
        let s = sweep_mu(&ps, &spec, &g, &[0.0, 1.0, 2.0, 4.0, 8.0], &SweepOptions::default()).unwrap();
        assert!(s.strictly_decreasing(), "{:?}", s.energies);
        assert!(s.threshold.is_none() && s.mu0_estimate.is_none());
        assert!(s.points.iter().all(|p| p.converged));
    }

    #[test]
    fn rejects_bad_mu_lists() {
        let (g, ps, spec) = setup();
        let e = sweep_mu(&ps, &spec, &g, &[], &SweepOptions::default()).unwrap_err();
        assert!(e.to_string().contains("mu_values must be non-empty"));
        assert!(sweep_mu(&ps, &spec, &g, &[1.0, 1.0], &SweepOptions::default()).is_err());
    }

    #[test]
    fn bisection_brackets_a_level() {
        let (g, ps, spec) = setup();
        let opts = SolveOptions::default();
        let c1 = cold_start_energy(&ps, &spec.with_mu(1.0).unwrap(), &g, &opts, &[1.0]).unwrap().unwrap().energy;
        let c2 = cold_start_energy(&ps, &spec.with_mu(2.0).unwrap(), &g, &opts, &[1.0]).unwrap().unwrap().energy;
        let t = 0.5 * (c1 + c2);
        let (lo, hi) = locate_threshold_crossing(&ps, &spec, &g, &opts, &[1.0], t, (1.0, 2.0), 4).unwrap();
        assert!(hi - lo <= 1.0 / 16.0 + 1e-12 && lo >= 1.0 && hi <= 2.0);
    }
}

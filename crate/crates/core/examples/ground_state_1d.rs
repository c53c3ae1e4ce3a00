//! Subcritical ground state on a 1D periodic box, made positive by a short
//! refinement run.

use csgs::solver::nonneg_refine;
use csgs::{minimize_ground_state, sample_potentials, Grid, GridSpec, PotentialDefs, ProblemSpec, SolveOptions};

fn main() -> csgs::Result<()> {
    let grid = Grid::new(GridSpec::periodic(1, 4.0, 128))?;
    let ps = sample_potentials(&PotentialDefs::constant(1.0, 0.3), 0.5, &grid)?;
    let spec = ProblemSpec::new(1, 4.0, 4.0, 1.0)?;
    let opts = SolveOptions::default();

    let r = minimize_ground_state(&ps, &spec, &grid, &opts)?;
    println!("{r}");
    println!("  Nehari residual {:.3e}, fibering scale of last projection {:.6}", r.nehari_residual, r.fibering.t_mu);

    let pos = nonneg_refine(&r, &ps, &spec, &grid, &opts)?;
    let min = pos.field.u.iter().chain(&pos.field.v).fold(f64::INFINITY, |a, &b| a.min(b));
    println!("refined: {pos}\n  min over u, v = {min:.3e}, energy shift {:.1e}", pos.energy - r.energy);
    for seed in 1..=4 {
        let o = SolveOptions { seed, init: csgs::InitKind::Random, ..opts.clone() };
        println!("random start, seed {seed}: c = {:.12}", minimize_ground_state(&ps, &spec, &grid, &o)?.energy);
    }
    Ok(())
}

//! Energy levels of the critical problem (q = 6, d = 3) along mu, against the
//! threshold S^(3/2) / 3.

use std::time::Instant;

use csgs::solver::cold_start_energy;
use csgs::{sample_potentials, sweep_mu, Grid, GridSpec, PotentialDefs, ProblemSpec, SweepOptions};

fn main() -> csgs::Result<()> {
    let grid = Grid::new(GridSpec::periodic(3, 6.0, 48))?;
    let ps = sample_potentials(&PotentialDefs::constant(1.0, 0.5), 0.5, &grid)?;
    let template = ProblemSpec::new(3, 4.0, 6.0, 1.0)?;
    let mus = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

    let t0 = Instant::now();
    let sweep = sweep_mu(&ps, &template, &grid, &mus, &SweepOptions::default())?;
    println!("threshold = {:.6}", sweep.threshold.unwrap());
    for p in &sweep.points {
        println!(
            "mu = {:>5}  up = {:?}  down = {:?}",
            p.mu, p.ascending, p.descending
        );
    }
    let widths = [6.0, 3.0, 1.5, 0.75, 0.375];
    for (i, &mu) in mus.iter().enumerate() {
        let cold = cold_start_energy(&ps, &template.with_mu(mu)?, &grid, &Default::default(), &widths)?;
        let warm = sweep.energies[i];
        let best = match (warm, cold.map(|r| r.energy)) {
            (Some(a), Some(b)) => a.min(b),
            (a, b) => a.or(b).unwrap_or(f64::NAN),
        };
        println!("mu = {mu:>5}  c = {best:.6}  below = {}", best < sweep.threshold.unwrap());
    }
    println!("mu0 (warm) = {:?}, elapsed {:.1?}", sweep.mu0_estimate, t0.elapsed());
    Ok(())
}

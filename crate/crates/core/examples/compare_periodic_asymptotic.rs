//! A potential well below a constant background lowers the ground-state
//! level: solve both problems on the same grid and compare.

use csgs::{
    compare_energies, minimize_ground_state, sample_potentials, validate_assumptions, Grid, GridSpec, PotentialDef,
    PotentialDefs, ProblemSpec, SolveOptions, ValidationMode,
};

fn main() -> csgs::Result<()> {
    let grid = Grid::new(GridSpec::periodic(1, 4.0, 128))?;
    let spec = ProblemSpec::new(1, 4.0, 4.0, 1.0)?;
    let periodic = sample_potentials(&PotentialDefs::constant(2.0, 0.4), 0.5, &grid)?;
    let perturbed = sample_potentials(
        &PotentialDefs::new(
            PotentialDef::GaussianPerturbed { base: 2.0, amp: -0.5, sigma: 1.0 },
            PotentialDef::GaussianPerturbed { base: 2.0, amp: -0.5, sigma: 1.0 },
            PotentialDef::GaussianPerturbed { base: 0.4, amp: 0.1, sigma: 1.0 },
        ),
        0.5,
        &grid,
    )?;
    let check = validate_assumptions(&perturbed, ValidationMode::Asymptotic, Some(&periodic), &grid, &Default::default())?;
    println!("{check}");

    let opts = SolveOptions::default();
    let rp = minimize_ground_state(&periodic, &spec, &grid, &opts)?;
    let ra = minimize_ground_state(&perturbed, &spec, &grid, &opts)?;
    println!("periodic:   {rp}\nperturbed:  {ra}");
    println!("{}", compare_energies(&rp, &ra, 0.0)?);
    println!("swapped:    {}", compare_energies(&ra, &rp, 0.0)?);
    Ok(())
}

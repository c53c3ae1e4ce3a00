//! Assumption checks for `V_i = |x|^2 / 2`, `lambda = -|x|^2 / 4`, and for a
//! cosine lattice in periodic mode.

use csgs::{
    sample_potentials, validate_assumptions, Grid, GridSpec, PotentialDef, PotentialDefs, ValidationMode,
};

fn main() -> csgs::Result<()> {
    let grid = Grid::new(GridSpec::periodic(3, 2.0, 16))?;
    let ps = sample_potentials(&PotentialDefs::model_pair(), 0.5, &grid)?;
    let report = validate_assumptions(&ps, ValidationMode::Nonexistence, None, &grid, &Default::default())?;
    println!("{report}\n");

    let grid = Grid::new(GridSpec::periodic(2, 2.0, 32))?;
    let lattice = PotentialDefs::new(
        PotentialDef::CosineLattice { a: 3.0, b: 0.5 },
        PotentialDef::constant(2.0),
        PotentialDef::CosineLattice { a: 0.5, b: 0.1 },
    );
    let ps = sample_potentials(&lattice, 0.5, &grid)?;
    println!("{}", validate_assumptions(&ps, ValidationMode::PeriodicStrict, None, &grid, &Default::default())?);
    Ok(())
}

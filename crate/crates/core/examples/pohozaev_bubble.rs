//! Pohozaev residual of the Aubin-Talenti bubble for `-Lap v = v^5` as the
//! grid is refined.

use csgs::{bubble_pair, pohozaev_residual, sample_potentials, Grid, GridSpec, PohozaevOptions, PotentialDefs, ProblemSpec};

fn main() -> csgs::Result<()> {
    let spec = ProblemSpec::new(3, 6.0, 6.0, 0.0)?;
    for n in [48, 64, 96] {
        let grid = Grid::new(GridSpec::periodic(3, 12.0, n))?;
        let ps = sample_potentials(&PotentialDefs::constant(0.0, 0.0), 0.5, &grid)?;
        let r = pohozaev_residual(&bubble_pair(&grid)?, &ps, &spec, &grid, &PohozaevOptions::default())?;
        println!("n = {n}\n{r}\n");
    }
    Ok(())
}

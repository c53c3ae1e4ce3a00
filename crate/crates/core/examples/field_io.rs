//! Write a solved field and its energy trace, read the field back and
//! restart from it.

use csgs::io::csv::write_report_csv;
use csgs::io::field_file::{read_field, write_field};
use csgs::{minimize_ground_state, sample_potentials, Grid, GridSpec, InitKind, PotentialDefs, ProblemSpec, SolveOptions};

fn main() -> csgs::Result<()> {
    let dir = tempfile::tempdir()?;
    let grid = Grid::new(GridSpec::periodic(2, 4.0, 32))?;
    let ps = sample_potentials(&PotentialDefs::constant(1.0, 0.3), 0.5, &grid)?;
    let spec = ProblemSpec::new(2, 3.0, 4.0, 1.0)?;
    let r = minimize_ground_state(&ps, &spec, &grid, &SolveOptions::default())?;

    let path = dir.path().join("ground.csgs");
    write_field(&r.field, &path)?;
    write_report_csv(&r, &dir.path().join("trace.csv"))?;
    let back = read_field(&path)?;
    assert_eq!(back, r.field);
    println!("{} bytes, {} trace rows", std::fs::metadata(&path)?.len(), r.energy_trace.len());

    let opts = SolveOptions { init: InitKind::File(path), ..Default::default() };
    let again = minimize_ground_state(&ps, &spec, &grid, &opts)?;
    println!("first  {r}\nresume {again}");
    Ok(())
}

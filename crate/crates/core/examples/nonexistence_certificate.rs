//! Both sign constraints on `Q = int V1 u^2 + V2 v^2 - 2 lambda u v` for a
//! positive candidate under the model potentials.

use csgs::{nonexistence_certificate, sample_potentials, FieldPair, Grid, GridSpec, PotentialDefs, ProblemSpec};

fn main() -> csgs::Result<()> {
    let grid = Grid::new(GridSpec::periodic(3, 2.0, 16))?;
    let spec = ProblemSpec::new(3, 6.0, 6.0, 1.0)?;
    let ps = sample_potentials(&PotentialDefs::model_pair(), 0.5, &grid)?;
    let r2 = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>();
    let fp = FieldPair::from_fn(&grid, |x| (-r2(x)).exp(), |x| 0.5 * (-0.5 * r2(x)).exp())?;
    let cert = nonexistence_certificate(&fp, &ps, &spec, &grid)?;
    println!("{cert}");

    let neg = FieldPair::from_fn(&grid, |x| x[0], |_| 1.0)?;
    match nonexistence_certificate(&neg, &ps, &spec, &grid) {
        Err(e) => println!("sign-changing candidate rejected: {e}"),
        Ok(_) => println!("unexpected"),
    }
    Ok(())
}

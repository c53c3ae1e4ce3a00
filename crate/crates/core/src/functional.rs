//! Energy functional, its L2 gradient, the coupled quadratic form and the
//! Nehari constraint functional.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::grid::Grid;
use crate::potentials::PotentialSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Subcritical,
    /// `q` equals the critical exponent 6 (d = 3), `p < q`.
    CriticalQ,
    /// `p = q = 6` (d = 3).
    CriticalBoth,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::CriticalQ => "critical-q",
            Regime::CriticalBoth => "critical-both",
        })
    }
}

/// Critical Sobolev exponent `2d/(d-2)`; only defined for d = 3 here.
pub fn critical_exponent(dim: usize) -> Option<f64> {
    (dim == 3).then_some(6.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub mu: f64,
    pub regime: Regime,
}

impl ProblemSpec {
    pub fn new(dim: usize, p: f64, q: f64, mu: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidProblem(format!("dim must be 1, 2 or 3 (got {dim})")));
        }
        if !(p.is_finite() && q.is_finite() && p > 2.0) {
            return Err(Error::InvalidProblem(format!("need finite p > 2 (got p = {p})")));
        }
        if q < p {
            return Err(Error::InvalidProblem(format!("need q >= p (got p = {p}, q = {q})")));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidProblem(format!("mu must be finite and >= 0 (got {mu})")));
        }
        let regime = match critical_exponent(dim) {
            Some(c) if q > c => {
                return Err(Error::InvalidProblem(format!(
                    "q = {q} exceeds the critical exponent {c} for d = {dim}"
                )))
            }
            Some(c) if q == c && p == c => Regime::CriticalBoth,
            Some(c) if q == c => Regime::CriticalQ,
            _ => Regime::Subcritical,
        };
        Ok(ProblemSpec { dim, p, q, mu, regime })
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        ProblemSpec::new(self.dim, self.p, self.q, mu)
    }

    pub(crate) fn conforms(&self, grid: &Grid) -> Result<()> {
        if self.dim != grid.dim() {
            return Err(Error::InvalidProblem(format!(
                "problem has d = {}, grid has d = {}",
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }
}

/// Parts of the energy. `quad` already contains the coupling correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `B = |(u,v)|_E^2 - 2 int lambda u v`
    pub quad: f64,
    /// `2 int lambda u v`
    pub coupling: f64,
    /// `mu/p |u|_p^p`
    pub pterm: f64,
    /// `1/q |v|_q^q`
    pub qterm: f64,
    pub total: f64,
    /// `|u|_E1^2 + |v|_E2^2`
    pub norm_e_sq: f64,
    /// `|u|_p^p`
    pub lp: f64,
    /// `|v|_q^q`
    pub lq: f64,
}

impl EnergyBreakdown {
    /// Size of the largest cancelling part, `max(1, |E|^2/2 + |coupling| + pterm + qterm)`.
    pub fn magnitude(&self) -> f64 {
        (0.5 * self.norm_e_sq.abs() + self.coupling.abs() + self.pterm.abs() + self.qterm.abs()).max(1.0)
    }
}

/// `|x|^e`, using `powi` for integral exponents.
#[inline]
pub(crate) fn abs_pow(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.abs().powi(e as i32)
    } else if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e)
    }
}

/// `|x|^(e-2) x`, continuous at 0 for `e > 2`.
#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.abs().powi(e as i32 - 2) * x
    } else if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e - 1.0)
    }
}

/// A field pair with its Laplacians and integrals, so that scaled copies and
/// gradients need no further transforms.
#[derive(Debug, Clone)]
pub(crate) struct Evaluated {
    pub fp: FieldPair,
    pub neg_lap_u: Vec<f64>,
    pub neg_lap_v: Vec<f64>,
    pub e: EnergyBreakdown,
}

impl Evaluated {
    pub fn new(fp: FieldPair, ps: &PotentialSet, spec: &ProblemSpec, grid: &Grid) -> Result<Self> {
        fp.conforms(grid)?;
        ps.conforms(grid)?;
        spec.conforms(grid)?;
        let (neg_lap_u, neg_lap_v) = grid.neg_laplacian_pair(&fp.u, &fp.v);
        let e = breakdown(&fp, &neg_lap_u, &neg_lap_v, ps, spec, grid)?;
        Ok(Evaluated { fp, neg_lap_u, neg_lap_v, e })
    }

    /// The pair scaled by `t`, integrals recomputed from the scaled samples.
    pub fn scaled(&self, t: f64, ps: &PotentialSet, spec: &ProblemSpec, grid: &Grid) -> Result<Self> {
        let fp = self.fp.scaled(t);
        let neg_lap_u: Vec<f64> = self.neg_lap_u.iter().map(|x| t * x).collect();
        let neg_lap_v: Vec<f64> = self.neg_lap_v.iter().map(|x| t * x).collect();
        let e = breakdown(&fp, &neg_lap_u, &neg_lap_v, ps, spec, grid)?;
        Ok(Evaluated { fp, neg_lap_u, neg_lap_v, e })
    }

    pub fn gradient(&self, ps: &PotentialSet, spec: &ProblemSpec, grid: &Grid) -> FieldPair {
        let (u, v) = (&self.fp.u, &self.fp.v);
        let mut gu = vec![0.0; u.len()];
        let mut gv = vec![0.0; v.len()];
        for i in 0..u.len() {
            gu[i] = self.neg_lap_u[i] + ps.v1[i] * u[i]
                - spec.mu * signed_pow(u[i], spec.p)
                - ps.lambda[i] * v[i];
            gv[i] = self.neg_lap_v[i] + ps.v2[i] * v[i] - signed_pow(v[i], spec.q) - ps.lambda[i] * u[i];
        }
        grid.enforce_boundary(&mut gu);
        grid.enforce_boundary(&mut gv);
        FieldPair { u: gu, v: gv, shape: self.fp.shape }
    }

    /// `J = B - mu |u|_p^p - |v|_q^q`
    pub fn nehari_value(&self, spec: &ProblemSpec) -> f64 {
        self.e.quad - spec.mu * self.e.lp - self.e.lq
    }
}

fn breakdown(
    fp: &FieldPair,
    neg_lap_u: &[f64],
    neg_lap_v: &[f64],
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<EnergyBreakdown> {
    let w = grid.weights();
    let (u, v) = (&fp.u, &fp.v);
    let (mut eu, mut ev, mut cpl, mut lp, mut lq) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..u.len() {
        eu += w[i] * (u[i] * neg_lap_u[i] + ps.v1[i] * u[i] * u[i]);
        ev += w[i] * (v[i] * neg_lap_v[i] + ps.v2[i] * v[i] * v[i]);
        cpl += w[i] * ps.lambda[i] * u[i] * v[i];
        lp += w[i] * abs_pow(u[i], spec.p);
        lq += w[i] * abs_pow(v[i], spec.q);
    }
    let coupling = 2.0 * cpl;
    let quad = eu + ev - coupling;
    let pterm = spec.mu / spec.p * lp;
    let qterm = lq / spec.q;
    let total = 0.5 * quad - pterm - qterm;
    if !(total.is_finite() && quad.is_finite()) {
        return Err(Error::NonFiniteEnergy(format!(
            "B = {quad:e}, |u|_p^p = {lp:e}, |v|_q^q = {lq:e}"
        )));
    }
    Ok(EnergyBreakdown {
        quad,
        coupling,
        pterm,
        qterm,
        total,
        norm_e_sq: eu + ev,
        lp,
        lq,
    })
}

/// `B(u,v) = int |grad u|^2 + V1 u^2 + |grad v|^2 + V2 v^2 - 2 lambda u v`,
/// with the gradient terms taken as `int u (-Lap u)`.
pub fn quadratic_form(fp: &FieldPair, ps: &PotentialSet, grid: &Grid) -> Result<f64> {
    let (eu, ev) = e_norms_sq(fp, ps, grid)?;
    let cpl = grid.quad(
        &fp.u
            .iter()
            .zip(&fp.v)
            .zip(&ps.lambda)
            .map(|((a, b), l)| l * a * b)
            .collect::<Vec<_>>(),
    );
    Ok(eu + ev - 2.0 * cpl)
}

/// `(|u|_E1^2, |v|_E2^2)` with `|u|_Ei^2 = int u (-Lap u) + V_i u^2`.
pub fn e_norms_sq(fp: &FieldPair, ps: &PotentialSet, grid: &Grid) -> Result<(f64, f64)> {
    fp.conforms(grid)?;
    ps.conforms(grid)?;
    let one = |f: &[f64], pot: &[f64]| {
        let nl = grid.neg_laplacian(f);
        let w = grid.weights();
        (0..f.len()).map(|i| w[i] * (f[i] * nl[i] + pot[i] * f[i] * f[i])).sum::<f64>()
    };
    Ok((one(&fp.u, &ps.v1), one(&fp.v, &ps.v2)))
}

pub fn energy(fp: &FieldPair, ps: &PotentialSet, spec: &ProblemSpec, grid: &Grid) -> Result<EnergyBreakdown> {
    Ok(Evaluated::new(fp.clone(), ps, spec, grid)?.e)
}

/// L2 representative of the derivative:
/// `(-Lap u + V1 u - mu |u|^(p-2) u - lambda v, -Lap v + V2 v - |v|^(q-2) v - lambda u)`.
pub fn energy_gradient(fp: &FieldPair, ps: &PotentialSet, spec: &ProblemSpec, grid: &Grid) -> Result<FieldPair> {
    Ok(Evaluated::new(fp.clone(), ps, spec, grid)?.gradient(ps, spec, grid))
}

/// `J(u,v) = B(u,v) - mu |u|_p^p - |v|_q^q`.
pub fn nehari_value(fp: &FieldPair, ps: &PotentialSet, spec: &ProblemSpec, grid: &Grid) -> Result<f64> {
    Ok(Evaluated::new(fp.clone(), ps, spec, grid)?.nehari_value(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::potentials::{sample_potentials, PotentialDefs};
    use approx::assert_relative_eq;

    fn setup(lambda: f64) -> (Grid, PotentialSet) {
        let g = Grid::new(GridSpec::periodic(1, 1.0, 16)).unwrap();
        let ps = sample_potentials(&PotentialDefs::constant(1.0, lambda), 0.5, &g).unwrap();
        (g, ps)
    }

    #[test]
    fn regimes() {
        assert_eq!(ProblemSpec::new(3, 4.0, 6.0, 1.0).unwrap().regime, Regime::CriticalQ);
        assert_eq!(ProblemSpec::new(3, 6.0, 6.0, 0.0).unwrap().regime, Regime::CriticalBoth);
        assert_eq!(ProblemSpec::new(1, 4.0, 6.0, 1.0).unwrap().regime, Regime::Subcritical);
        assert_eq!(ProblemSpec::new(2, 4.0, 30.0, 1.0).unwrap().regime, Regime::Subcritical);
        assert!(ProblemSpec::new(3, 4.0, 7.0, 1.0).is_err());
        assert!(ProblemSpec::new(1, 2.0, 4.0, 1.0).is_err());
        assert!(ProblemSpec::new(1, 4.0, 3.0, 1.0).is_err());
        assert!(ProblemSpec::new(1, 4.0, 4.0, -1.0).is_err());
    }

    #[test]
    fn constant_fields() {
        let (g, ps) = setup(0.5);
        let fp = FieldPair::from_fn(&g, |_| 1.0, |_| 1.0).unwrap();
        let spec = ProblemSpec::new(1, 4.0, 4.0, 1.0).unwrap();
        assert_relative_eq!(quadratic_form(&fp, &ps, &g).unwrap(), 2.0, epsilon = 1e-13);
        let e = energy(&fp, &ps, &spec, &g).unwrap();
        assert_relative_eq!(e.total, 0.0, epsilon = 1e-13);
        assert_relative_eq!(e.coupling, 2.0, epsilon = 1e-13);
        assert_relative_eq!(nehari_value(&fp, &ps, &spec, &g).unwrap(), -2.0, epsilon = 1e-13);
        let gr = energy_gradient(&fp, &ps, &spec, &g).unwrap();
        assert!(gr.u.iter().all(|x| (x + 0.5).abs() < 1e-12));
    }

    #[test]
    fn zero_field() {
        let (g, ps) = setup(0.5);
        let spec = ProblemSpec::new(1, 3.5, 4.0, 1.0).unwrap();
        let z = FieldPair::zeros(&g);
        let e = energy(&z, &ps, &spec, &g).unwrap();
        assert_eq!(e.total, 0.0);
        assert_eq!(e.quad, 0.0);
        assert!(energy_gradient(&z, &ps, &spec, &g).unwrap().is_zero());
    }

    #[test]
    fn decoupled_and_mu_zero() {
        let (g, ps) = setup(0.0);
        let fp = FieldPair::from_fn(&g, |x| (std::f64::consts::PI * x[0]).cos(), |_| 0.7).unwrap();
        let (eu, ev) = e_norms_sq(&fp, &ps, &g).unwrap();
        assert_relative_eq!(quadratic_form(&fp, &ps, &g).unwrap(), eu + ev, max_relative = 1e-14);
        let spec = ProblemSpec::new(1, 3.0, 4.0, 0.0).unwrap();
        let e = energy(&fp, &ps, &spec, &g).unwrap();
        assert_eq!(e.pterm, 0.0);
        assert_relative_eq!(e.total, e.quad / 2.0 - e.lq / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn non_integer_powers() {
        assert_eq!(signed_pow(0.0, 3.5), 0.0);
        assert_relative_eq!(signed_pow(-2.0, 3.5), -(2f64.powf(2.5)));
        assert_eq!(signed_pow(-2.0, 4.0), -8.0);
        assert_eq!(abs_pow(-2.0, 3.0), 8.0);
    }

    #[test]
    fn overflow_is_reported() {
        let (g, ps) = setup(0.0);
        let spec = ProblemSpec::new(1, 4.0, 200.0, 1.0).unwrap();
        let fp = FieldPair::from_fn(&g, |_| 0.0, |_| 1e10).unwrap();
        assert!(matches!(energy(&fp, &ps, &spec, &g), Err(Error::NonFiniteEnergy(_))));
    }
}

//! Pohozaev residual and the sign certificate for the doubly critical system.
//!
//! The Pohozaev identity holds on all of space. On a truncated box the fields
//! do not vanish at the boundary (the bubble decays like `1/|x|`), so every
//! integral is weighted by a smooth radial cutoff `phi(x) = psi(|x|^2 / R^2)`
//! with `psi = 1` on `[0, 1]` and `psi = 0` on `[2, inf)`. Weighting the
//! dilation argument by `phi` produces the same identity with `phi` inside
//! each integral plus a term carrying `grad phi`, reported separately as
//! `cutoff`. Gradients are taken of the fields windowed by a wider cutoff so
//! that the periodic seam at `|x|_inf = L` does not leak into the interior.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::FieldPair;
use crate::functional::{abs_pow, energy_gradient, ProblemSpec, Regime};
use crate::grid::{Boundary, Grid};
use crate::potentials::{validate_assumptions, PotentialSet, RadialPath, ValidationMode, ValidationOptions, ValidationReport};

/// Smooth step from 0 at `s <= 0` to 1 at `s >= 1`, with its derivative.
fn smooth_step(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 0.0);
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    let sig = a / (a + b);
    let dsig = a * b / ((a + b) * (a + b)) * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s)));
    (sig, dsig)
}

/// `psi(t)` and `psi'(t)`.
fn cutoff(t: f64) -> (f64, f64) {
    let (s, ds) = smooth_step(t - 1.0);
    (1.0 - s, -ds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PohozaevOptions {
    /// Cutoff radius `R` as a fraction of `L`; the weight vanishes beyond `sqrt(2) R`.
    pub cutoff_fraction: f64,
}

impl Default for PohozaevOptions {
    fn default() -> Self {
        PohozaevOptions { cutoff_fraction: 0.45 }
    }
}

/// Right-hand side of the identity, term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PohozaevTerms {
    /// `mu int phi |u|^6`
    pub u_critical: f64,
    /// `int phi |v|^6`
    pub v_critical: f64,
    /// `2* int phi lambda u v`
    pub coupling: f64,
    /// `2/(N-2) int phi <grad lambda, x> u v`
    pub lambda_radial: f64,
    /// `-(2*/2) int phi (V1 u^2 + V2 v^2)`
    pub potential: f64,
    /// `-1/(N-2) int phi (<grad V1, x> u^2 + <grad V2, x> v^2)`
    pub potential_radial: f64,
    /// terms carrying `grad phi`
    pub cutoff: f64,
}

impl PohozaevTerms {
    pub fn sum(&self) -> f64 {
        self.u_critical
            + self.v_critical
            + self.coupling
            + self.lambda_radial
            + self.potential
            + self.potential_radial
            + self.cutoff
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PohozaevReport {
    /// `int phi (|grad u|^2 + |grad v|^2)`
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `residual / max(1, |lhs|)`
    pub relative: f64,
    pub terms: PohozaevTerms,
    pub cutoff_radius: f64,
    /// Largest `|u|`, `|v|` on the shell `|x|_inf >= 0.8 L`.
    pub shell_magnitude: f64,
    pub grad_norm: f64,
    /// The identity is only asserted for solutions; set when `|grad I| > 1e-3`.
    pub not_critical: bool,
    pub radial_paths: [RadialPath; 3],
}

impl fmt::Display for PohozaevReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lhs = {:.12e}  rhs = {:.12e}", self.lhs, self.rhs)?;
        writeln!(f, "residual = {:.6e}  relative = {:.6e}", self.residual, self.relative)?;
        let t = &self.terms;
        writeln!(
            f,
            "terms: u6 {:.6e}, v6 {:.6e}, coupling {:.6e}, lambda radial {:.6e}, potential {:.6e}, potential radial {:.6e}, cutoff {:.6e}",
            t.u_critical, t.v_critical, t.coupling, t.lambda_radial, t.potential, t.potential_radial, t.cutoff
        )?;
        write!(
            f,
            "cutoff R = {:.4}, shell magnitude = {:.3e}, |grad I| = {:.3e}{}",
            self.cutoff_radius,
            self.shell_magnitude,
            self.grad_norm,
            if self.not_critical { " (not a critical point)" } else { "" }
        )
    }
}

fn require_doubly_critical(spec: &ProblemSpec, grid: &Grid) -> Result<()> {
    if grid.dim() != 3 || spec.regime != Regime::CriticalBoth {
        return Err(Error::WrongRegime(format!(
            "needs d = 3 and p = q = 6 (got d = {}, p = {}, q = {})",
            grid.dim(),
            spec.p,
            spec.q
        )));
    }
    Ok(())
}

/// Aubin-Talenti bubble `3^(1/4) (1 + |x|^2)^(-1/2)` in `v`, with `u = 0`.
pub fn bubble_pair(grid: &Grid) -> Result<FieldPair> {
    FieldPair::from_fn(
        grid,
        |_| 0.0,
        |x| 3f64.powf(0.25) * (1.0 + x.iter().map(|c| c * c).sum::<f64>()).powf(-0.5),
    )
}

/// Localized Pohozaev residual of `fp`.
pub fn pohozaev_residual(
    fp: &FieldPair,
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
    opts: &PohozaevOptions,
) -> Result<PohozaevReport> {
    require_doubly_critical(spec, grid)?;
    fp.conforms(grid)?;
    ps.conforms(grid)?;
    if !(opts.cutoff_fraction > 0.0 && opts.cutoff_fraction * 2.0 <= 1.0) {
        return Err(Error::config(
            "pohozaev.cutoff",
            format!("must lie in (0, 0.5] (got {})", opts.cutoff_fraction),
        ));
    }
    let nd = 3.0;
    let crit = 2.0 * nd / (nd - 2.0);
    let r = opts.cutoff_fraction * grid.half_width();
    let r2 = r * r;
    let rsq = grid.radius_squared();

    // fields windowed by psi(|x|^2 / 2R^2), which is 1 on the support of phi
    let window: Vec<f64> = rsq.iter().map(|&s| cutoff(s / (2.0 * r2)).0).collect();
    let uw: Vec<f64> = fp.u.iter().zip(&window).map(|(a, w)| a * w).collect();
    let vw: Vec<f64> = fp.v.iter().zip(&window).map(|(a, w)| a * w).collect();
    let du: Vec<Vec<f64>> = (0..3).map(|a| grid.partial_derivative(&uw, a)).collect::<Result<_>>()?;
    let dv: Vec<Vec<f64>> = (0..3).map(|a| grid.partial_derivative(&vw, a)).collect::<Result<_>>()?;
    let ([rv1, rv2, rl], paths) = ps.radial_derivatives(grid);

    let w = grid.weights();
    let (mut lhs, mut t) = (
        0.0,
        PohozaevTerms {
            u_critical: 0.0,
            v_critical: 0.0,
            coupling: 0.0,
            lambda_radial: 0.0,
            potential: 0.0,
            potential_radial: 0.0,
            cutoff: 0.0,
        },
    );
    for i in 0..grid.len() {
        let tt = rsq[i] / r2;
        if tt >= 2.0 {
            continue;
        }
        let (phi, dpsi) = cutoff(tt);
        let x_dphi = 2.0 * tt * dpsi;
        let x = grid.coord(i);
        let (u, v) = (fp.u[i], fp.v[i]);
        let grad2 = (0..3).map(|a| du[a][i] * du[a][i] + dv[a][i] * dv[a][i]).sum::<f64>();
        let xu: f64 = (0..3).map(|a| x[a] * du[a][i]).sum();
        let xv: f64 = (0..3).map(|a| x[a] * dv[a][i]).sum();
        let (u6, v6) = (abs_pow(u, crit), abs_pow(v, crit));
        let luv = ps.lambda[i] * u * v;
        let f = -0.5 * ps.v1[i] * u * u + spec.mu * u6 / crit - 0.5 * ps.v2[i] * v * v + v6 / crit + luv;
        let wi = w[i];

        lhs += wi * phi * grad2;
        t.u_critical += wi * phi * spec.mu * u6;
        t.v_critical += wi * phi * v6;
        t.coupling += wi * phi * crit * luv;
        t.lambda_radial += wi * phi * (2.0 / (nd - 2.0)) * rl[i] * u * v;
        t.potential += wi * phi * (-crit / 2.0) * (ps.v1[i] * u * u + ps.v2[i] * v * v);
        t.potential_radial += wi * phi * (-1.0 / (nd - 2.0)) * (rv1[i] * u * u + rv2[i] * v * v);
        t.cutoff += wi
            * (-(1.0 / (nd - 2.0)) * grad2 * x_dphi
                + (2.0 / (nd - 2.0)) * (2.0 * dpsi / r2) * (xu * xu + xv * xv)
                + (2.0 / (nd - 2.0)) * f * x_dphi);
    }
    let rhs = t.sum();
    let residual = (lhs - rhs).abs();

    let shell = 0.8 * grid.half_width();
    let shell_magnitude = (0..grid.len())
        .filter(|&i| grid.coord(i).iter().any(|c| c.abs() >= shell - 1e-12))
        .map(|i| fp.u[i].abs().max(fp.v[i].abs()))
        .fold(0.0, f64::max);
    let grad_norm = energy_gradient(fp, ps, spec, grid)?.l2_norm(grid);

    Ok(PohozaevReport {
        lhs,
        rhs,
        residual,
        relative: residual / lhs.abs().max(1.0),
        terms: t,
        cutoff_radius: r,
        shell_magnitude,
        grad_norm,
        not_critical: grad_norm > 1e-3,
        radial_paths: paths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingSign {
    Positive,
    Negative,
    Zero,
    Mixed,
}

/// The two opposing sign constraints on `Q = int V1 u^2 + V2 v^2 - 2 lambda u v`
/// for a positive candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceCertificate {
    /// `Q`, nonnegative by the coupling bound.
    pub q_form: f64,
    /// `P = int <grad lambda, x> u v - 1/2 int (<grad V1, x> u^2 + <grad V2, x> v^2)`,
    /// which equals `Q` for a solution and is nonpositive under the radial conditions.
    pub pohozaev_side: f64,
    /// `Q >= 0` up to rounding.
    pub q_nonnegative: bool,
    /// `P <= 0` up to rounding.
    pub pohozaev_nonpositive: bool,
    /// `Q - P`; zero for a solution, so a positive value excludes the candidate.
    pub margin: f64,
    /// `int V1 u^2 - 2 sqrt(V1 V2) u v + V2 v^2`
    pub am_gm_term: f64,
    /// `int V1 u^2 + V2 v^2 - (2/delta) lambda u v`
    pub delta_term: f64,
    /// `Q - delta_term = (2/delta - 2) int lambda u v`
    pub strict_gap: f64,
    pub chain_am_gm_nonneg: bool,
    pub chain_am_gm_le_delta: bool,
    pub chain_delta_lt_q: bool,
    pub lambda_sign: CouplingSign,
    pub validation: ValidationReport,
}

impl fmt::Display for NonexistenceCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Q = {:.12e} (>= 0: {})", self.q_form, self.q_nonnegative)?;
        writeln!(f, "P = {:.12e} (<= 0: {})", self.pohozaev_side, self.pohozaev_nonpositive)?;
        writeln!(f, "margin Q - P = {:.6e}", self.margin)?;
        write!(
            f,
            "chain: 0 <= {:.6e} <= {:.6e} < {:.6e}  [{} {} {}], lambda {:?}, strict gap {:.6e}",
            self.am_gm_term,
            self.delta_term,
            self.q_form,
            self.chain_am_gm_nonneg,
            self.chain_am_gm_le_delta,
            self.chain_delta_lt_q,
            self.lambda_sign,
            self.strict_gap
        )
    }
}

/// `Q = int V1 u^2 + V2 v^2 - 2 lambda u v` for any pair, with the scale
/// `int |V1| u^2 + |V2| v^2 + 2 |lambda u v|` for rounding tolerances.
/// Nonnegative, nodewise, whenever `|lambda| <= sqrt(V1 V2)`.
pub fn potential_form(fp: &FieldPair, ps: &PotentialSet, grid: &Grid) -> Result<(f64, f64)> {
    fp.conforms(grid)?;
    ps.conforms(grid)?;
    let q: Vec<f64> = (0..grid.len())
        .map(|i| {
            let (u, v) = (fp.u[i], fp.v[i]);
            ps.v1[i] * u * u + ps.v2[i] * v * v - 2.0 * ps.lambda[i] * u * v
        })
        .collect();
    let scale: Vec<f64> = (0..grid.len())
        .map(|i| {
            let (u, v) = (fp.u[i], fp.v[i]);
            ps.v1[i].abs() * u * u + ps.v2[i].abs() * v * v + 2.0 * (ps.lambda[i] * u * v).abs()
        })
        .collect();
    Ok((grid.integrate(&q)?, grid.integrate(&scale)?))
}

/// Evaluate both sign constraints for a nodewise positive candidate.
pub fn nonexistence_certificate(
    fp: &FieldPair,
    ps: &PotentialSet,
    spec: &ProblemSpec,
    grid: &Grid,
) -> Result<NonexistenceCertificate> {
    require_doubly_critical(spec, grid)?;
    fp.conforms(grid)?;
    ps.conforms(grid)?;
    for i in 0..grid.len() {
        if grid.spec().boundary == Boundary::Dirichlet && grid.is_boundary_node(i) {
            continue;
        }
        if !(fp.u[i] > 0.0 && fp.v[i] > 0.0) {
            return Err(Error::NotPositive {
                coord: grid.coord(i)[..grid.dim()].to_vec(),
                u: fp.u[i],
                v: fp.v[i],
            });
        }
    }
    let validation = validate_assumptions(
        ps,
        ValidationMode::Nonexistence,
        None,
        grid,
        &ValidationOptions { estimate_nu: false, ..Default::default() },
    )?;
    let ([rv1, rv2, rl], _) = ps.radial_derivatives(grid);
    let w = grid.weights();
    let (mut quad, mut cpl, mut amgm, mut pside, mut scale) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut pos, mut neg) = (false, false);
    for i in 0..grid.len() {
        let (u, v) = (fp.u[i], fp.v[i]);
        let (a, b, l) = (ps.v1[i], ps.v2[i], ps.lambda[i]);
        quad += w[i] * (a * u * u + b * v * v);
        cpl += w[i] * l * u * v;
        amgm += w[i] * (a * u * u - 2.0 * (a.max(0.0) * b.max(0.0)).sqrt() * u * v + b * v * v);
        pside += w[i] * (rl[i] * u * v - 0.5 * (rv1[i] * u * u + rv2[i] * v * v));
        scale += w[i] * (a.abs() * u * u + b.abs() * v * v + 2.0 * l.abs() * u * v + rl[i].abs() * u * v);
        pos |= l > 0.0 && w[i] > 0.0;
        neg |= l < 0.0 && w[i] > 0.0;
    }
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let q_form = quad - 2.0 * cpl;
    let delta_term = quad - 2.0 / ps.delta * cpl;
    Ok(NonexistenceCertificate {
        q_form,
        pohozaev_side: pside,
        q_nonnegative: q_form >= -tol,
        pohozaev_nonpositive: pside <= tol,
        margin: q_form - pside,
        am_gm_term: amgm,
        delta_term,
        strict_gap: q_form - delta_term,
        chain_am_gm_nonneg: amgm >= -tol,
        chain_am_gm_le_delta: amgm <= delta_term + tol,
        chain_delta_lt_q: delta_term < q_form,
        lambda_sign: match (pos, neg) {
            (true, true) => CouplingSign::Mixed,
            (true, false) => CouplingSign::Positive,
            (false, true) => CouplingSign::Negative,
            (false, false) => CouplingSign::Zero,
        },
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::potentials::{sample_potentials, PotentialDefs};

    fn crit() -> ProblemSpec {
        ProblemSpec::new(3, 6.0, 6.0, 0.0).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.5), (1.0, 0.0));
        assert_eq!(cutoff(2.5), (0.0, 0.0));
        let (m, d) = cutoff(1.5);
        assert!((m - 0.5).abs() < 1e-15 && d < 0.0);
        // derivative against a central difference
        let h = 1e-6;
        for &t in &[1.1, 1.3, 1.7, 1.95] {
            let fd = (cutoff(t + h).0 - cutoff(t - h).0) / (2.0 * h);
            assert!((fd - cutoff(t).1).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let g = Grid::new(GridSpec::periodic(3, 4.0, 8)).unwrap();
        let ps = sample_potentials(&PotentialDefs::constant(0.0, 0.0), 0.5, &g).unwrap();
        let r = pohozaev_residual(&FieldPair::zeros(&g), &ps, &crit(), &g, &Default::default()).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(!r.not_critical);
    }

    #[test]
    fn wrong_regime_rejected() {
        let g = Grid::new(GridSpec::periodic(3, 4.0, 8)).unwrap();
        let ps = sample_potentials(&PotentialDefs::constant(0.0, 0.0), 0.5, &g).unwrap();
        let spec = ProblemSpec::new(3, 4.0, 6.0, 1.0).unwrap();
        assert!(matches!(
            pohozaev_residual(&FieldPair::zeros(&g), &ps, &spec, &g, &Default::default()),
            Err(Error::WrongRegime(_))
        ));
    }

    #[test]
    fn terms_recombine_and_random_fields_are_flagged() {
        let g = Grid::new(GridSpec::periodic(3, 4.0, 16)).unwrap();
        let ps = sample_potentials(&PotentialDefs::model_pair(), 0.5, &g).unwrap();
        let fp = FieldPair::from_fn(
            &g,
            |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(),
            |x| (-(x[0] * x[0] + 0.5 * x[1] * x[1] + x[2] * x[2])).exp() * (1.0 + 0.1 * x[0]),
        )
        .unwrap();
        let r = pohozaev_residual(&fp, &ps, &crit(), &g, &Default::default()).unwrap();
        assert!((r.terms.sum() - r.rhs).abs() <= 1e-13 * r.rhs.abs().max(1.0));
        assert!(r.not_critical);
        assert!(r.residual > 1e-3);
    }

    #[test]
    fn certificates() {
        let g = Grid::new(GridSpec::periodic(3, 2.0, 8)).unwrap();
        let spec = crit();
        let fp = FieldPair::from_fn(&g, |_| 1.0, |_| 2.0).unwrap();

        let ps = sample_potentials(&PotentialDefs::constant(1.0, 0.5), 0.5, &g).unwrap();
        let c = nonexistence_certificate(&fp, &ps, &spec, &g).unwrap();
        // int u^2 + v^2 - u v = 64 * (1 + 4 - 2)
        assert!((c.q_form - 192.0).abs() < 1e-10);
        assert!(c.margin > 0.0 && c.chain_delta_lt_q);
        assert_eq!(c.lambda_sign, CouplingSign::Positive);

        let ps = sample_potentials(&PotentialDefs::constant(0.0, 0.0), 0.5, &g).unwrap();
        let c = nonexistence_certificate(&fp, &ps, &spec, &g).unwrap();
        assert_eq!((c.q_form, c.margin), (0.0, 0.0));

        let ps = sample_potentials(&PotentialDefs::model_pair(), 0.5, &g).unwrap();
        let c = nonexistence_certificate(&fp, &ps, &spec, &g).unwrap();
        assert!(c.q_nonnegative && c.pohozaev_nonpositive && c.validation.overall);

        let bad = FieldPair::from_fn(&g, |x| x[0], |_| 1.0).unwrap();
        assert!(matches!(nonexistence_certificate(&bad, &ps, &spec, &g), Err(Error::NotPositive { .. })));
    }
}

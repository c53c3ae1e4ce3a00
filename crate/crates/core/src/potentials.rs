//! Potentials `V1`, `V2` and the coupling `lambda`: analytic definitions,
//! sampling onto the grid, and nodewise checks of the structural assumptions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{conjugate_gradient, Grid, GridShape, LaplacianMode, MAX_DIM};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Analytic definition of one potential.
#[derive(Clone)]
pub enum PotentialDef {
    Constant { c: f64 },
    /// `a + b * sum_i cos(2 pi x_i)`
    CosineLattice { a: f64, b: f64 },
    /// `base + amp * exp(-|x|^2 / sigma^2)`
    GaussianPerturbed { base: f64, amp: f64, sigma: f64 },
    /// `c * |x|^2`
    RadialQuadratic { c: f64 },
    /// User callback. `radial` returns `<grad f(x), x>`; when absent the
    /// validator falls back to finite differences.
    Custom {
        name: String,
        value: ScalarFn,
        radial: Option<ScalarFn>,
        periodic: bool,
    },
}

impl fmt::Debug for PotentialDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Config-file syntax, e.g. `gaussian 2 -0.5 1`.
impl fmt::Display for PotentialDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialDef::Constant { c } => write!(f, "constant {c:?}"),
            PotentialDef::CosineLattice { a, b } => write!(f, "cosine {a:?} {b:?}"),
            PotentialDef::GaussianPerturbed { base, amp, sigma } => {
                write!(f, "gaussian {base:?} {amp:?} {sigma:?}")
            }
            PotentialDef::RadialQuadratic { c } => write!(f, "radial_quadratic {c:?}"),
            PotentialDef::Custom { name, .. } => write!(f, "custom {name}"),
        }
    }
}

impl PotentialDef {
    pub fn constant(c: f64) -> Self {
        PotentialDef::Constant { c }
    }

    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PotentialDef::Custom {
            name: name.into(),
            value: Arc::new(value),
            radial: None,
            periodic: false,
        }
    }

    /// Parse the config syntax produced by `Display`.
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let mut parts = s.split_whitespace();
        let kind = parts.next().ok_or("empty potential definition")?;
        let nums: Vec<f64> = parts
            .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
            .collect::<std::result::Result<_, _>>()?;
        let want = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(format!("{kind} takes {k} parameter(s), got {}", nums.len()))
            }
        };
        let def = match kind {
            "constant" => {
                want(1)?;
                PotentialDef::Constant { c: nums[0] }
            }
            "cosine" => {
                want(2)?;
                PotentialDef::CosineLattice { a: nums[0], b: nums[1] }
            }
            "gaussian" => {
                want(3)?;
                PotentialDef::GaussianPerturbed {
                    base: nums[0],
                    amp: nums[1],
                    sigma: nums[2],
                }
            }
            "radial_quadratic" => {
                want(1)?;
                PotentialDef::RadialQuadratic { c: nums[0] }
            }
            other => {
                return Err(format!(
                    "unknown potential kind {other:?} (expected constant, cosine, gaussian or radial_quadratic)"
                ))
            }
        };
        def.check_params().map_err(|e| e.to_string())?;
        Ok(def)
    }

    pub fn check_params(&self) -> Result<()> {
        let params: Vec<f64> = match self {
            PotentialDef::Constant { c } | PotentialDef::RadialQuadratic { c } => vec![*c],
            PotentialDef::CosineLattice { a, b } => vec![*a, *b],
            PotentialDef::GaussianPerturbed { base, amp, sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::InvalidPotential(format!(
                        "gaussian width must be positive (got {sigma})"
                    )));
                }
                vec![*base, *amp, *sigma]
            }
            PotentialDef::Custom { .. } => vec![],
        };
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite parameter {p} in {self}")));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PotentialDef::Constant { c } => *c,
            PotentialDef::CosineLattice { a, b } => {
                a + b * x.iter().map(|xi| (2.0 * PI * xi).cos()).sum::<f64>()
            }
            PotentialDef::GaussianPerturbed { base, amp, sigma } => {
                base + amp * (-norm_sq(x) / (sigma * sigma)).exp()
            }
            PotentialDef::RadialQuadratic { c } => c * norm_sq(x),
            PotentialDef::Custom { value, .. } => value(x),
        }
    }

    /// `<grad f(x), x>` in closed form, when available.
    pub fn radial_derivative_analytic(&self, x: &[f64]) -> Option<f64> {
        Some(match self {
            PotentialDef::Constant { .. } => 0.0,
            PotentialDef::CosineLattice { b, .. } => x
                .iter()
                .map(|xi| -2.0 * PI * b * (2.0 * PI * xi).sin() * xi)
                .sum(),
            PotentialDef::GaussianPerturbed { amp, sigma, .. } => {
                let r2 = norm_sq(x);
                let s2 = sigma * sigma;
                -2.0 * amp * r2 / s2 * (-r2 / s2).exp()
            }
            PotentialDef::RadialQuadratic { c } => 2.0 * c * norm_sq(x),
            PotentialDef::Custom { radial, .. } => return radial.as_ref().map(|r| r(x)),
        })
    }

    /// `<grad f(x), x>` by 4th-order central differences with step `step`.
    pub fn radial_derivative_fd(&self, x: &[f64], step: f64) -> f64 {
        let mut y = x.to_vec();
        let mut acc = 0.0;
        for i in 0..x.len() {
            let mut at = |off: f64| {
                y[i] = x[i] + off;
                let v = self.value(&y);
                y[i] = x[i];
                v
            };
            let d = (-at(2.0 * step) + 8.0 * at(step) - 8.0 * at(-step) + at(-2.0 * step))
                / (12.0 * step);
            acc += d * x[i];
        }
        acc
    }

    /// Whether the definition is 1-periodic in each coordinate.
    pub fn is_periodic(&self) -> bool {
        match self {
            PotentialDef::Constant { .. } | PotentialDef::CosineLattice { .. } => true,
            PotentialDef::Custom { periodic, .. } => *periodic,
            _ => false,
        }
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

/// The three definitions `V1`, `V2`, `lambda`.
#[derive(Debug, Clone)]
pub struct PotentialDefs {
    pub v1: PotentialDef,
    pub v2: PotentialDef,
    pub lambda: PotentialDef,
}

impl PotentialDefs {
    pub fn new(v1: PotentialDef, v2: PotentialDef, lambda: PotentialDef) -> Self {
        PotentialDefs { v1, v2, lambda }
    }

    /// Constant potentials `V1 = V2 = v`, `lambda = l`.
    pub fn constant(v: f64, l: f64) -> Self {
        PotentialDefs::new(
            PotentialDef::constant(v),
            PotentialDef::constant(v),
            PotentialDef::constant(l),
        )
    }

    /// `V_i = |x|^2 / 2`, `lambda = -|x|^2 / 4`.
    pub fn model_pair() -> Self {
        PotentialDefs::new(
            PotentialDef::RadialQuadratic { c: 0.5 },
            PotentialDef::RadialQuadratic { c: 0.5 },
            PotentialDef::RadialQuadratic { c: -0.25 },
        )
    }

    fn iter(&self) -> [(&'static str, &PotentialDef); 3] {
        [("V1", &self.v1), ("V2", &self.v2), ("lambda", &self.lambda)]
    }
}

/// Sampled potentials together with their definitions and the coupling bound.
#[derive(Debug, Clone)]
pub struct PotentialSet {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub lambda: Vec<f64>,
    pub defs: PotentialDefs,
    pub delta: f64,
    /// Whether the set is claimed 1-periodic. Enables lattice recentering.
    pub periodic_flag: bool,
    pub shape: GridShape,
}

/// Evaluate the definitions at every node. No assumption is checked here.
pub fn sample_potentials(defs: &PotentialDefs, delta: f64, grid: &Grid) -> Result<PotentialSet> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidPotential(format!(
            "delta must lie in (0, 1) (got {delta})"
        )));
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(3);
    for (name, def) in defs.iter() {
        def.check_params()?;
        let f = grid.sample(|x| def.value(x));
        if let Some(i) = f.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteSample {
                what: name.into(),
                coord: grid.coord(i)[..grid.dim()].to_vec(),
            });
        }
        out.push(f);
    }
    let lambda = out.pop().unwrap();
    let v2 = out.pop().unwrap();
    let v1 = out.pop().unwrap();
    Ok(PotentialSet {
        v1,
        v2,
        lambda,
        periodic_flag: defs.v1.is_periodic() && defs.v2.is_periodic() && defs.lambda.is_periodic(),
        defs: defs.clone(),
        delta,
        shape: grid.shape(),
    })
}

impl PotentialSet {
    pub fn conforms(&self, grid: &Grid) -> Result<()> {
        if self.shape != grid.shape() {
            return Err(Error::GridMismatch {
                expected: grid.shape().to_string(),
                found: self.shape.to_string(),
            });
        }
        Ok(())
    }

    /// Nodewise `<grad f, x>` for `V1`, `V2`, `lambda`, and whether each came
    /// from a closed form.
    pub fn radial_derivatives(&self, grid: &Grid) -> ([Vec<f64>; 3], [RadialPath; 3]) {
        let step = 0.5 * grid.spacing();
        let d = grid.dim();
        let one = |def: &PotentialDef| -> (Vec<f64>, RadialPath) {
            let analytic = def.radial_derivative_analytic(&vec![0.0; d]).is_some();
            let vals = grid
                .node_coords()
                .map(|x| match def.radial_derivative_analytic(&x[..d]) {
                    Some(r) => r,
                    None => def.radial_derivative_fd(&x[..d], step),
                })
                .collect();
            let path = if analytic {
                RadialPath::Analytic
            } else {
                RadialPath::FiniteDifference
            };
            (vals, path)
        };
        let (a, pa) = one(&self.defs.v1);
        let (b, pb) = one(&self.defs.v2);
        let (c, pc) = one(&self.defs.lambda);
        ([a, b, c], [pa, pb, pc])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialPath {
    Analytic,
    FiniteDifference,
}

/// Which group of assumptions to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// periodicity, nonnegativity with positive spectral infimum, coupling bound
    Periodic,
    /// as `Periodic`, plus strictly positive coupling
    PeriodicStrict,
    /// ordering and tail decay against a periodic reference, nonnegativity, coupling bound
    Asymptotic,
    /// as `Asymptotic`, plus strictly positive coupling
    AsymptoticStrict,
    /// coupling bound plus the radial-derivative conditions on `V_i` and `lambda`
    Nonexistence,
}

impl ValidationMode {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "periodic" => ValidationMode::Periodic,
            "periodic_strict" => ValidationMode::PeriodicStrict,
            "asymptotic" => ValidationMode::Asymptotic,
            "asymptotic_strict" => ValidationMode::AsymptoticStrict,
            "nonexistence" => ValidationMode::Nonexistence,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ValidationMode::Periodic => "periodic",
            ValidationMode::PeriodicStrict => "periodic_strict",
            ValidationMode::Asymptotic => "asymptotic",
            ValidationMode::AsymptoticStrict => "asymptotic_strict",
            ValidationMode::Nonexistence => "nonexistence",
        }
    }
}

/// One nodewise check. `worst_value` is the sample closest to violating
/// `bound`; `worst_coord` is where it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub assumption: &'static str,
    pub passed: bool,
    pub worst_value: f64,
    pub bound: f64,
    pub worst_coord: Vec<f64>,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<5} {:<4} {}: worst {:.6e} vs {:.6e} at {:?}",
            self.assumption,
            if self.passed { "pass" } else { "FAIL" },
            self.detail,
            self.worst_value,
            self.bound,
            self.worst_coord
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub checks: Vec<Check>,
    pub nu1: Option<f64>,
    pub nu2: Option<f64>,
    /// Smallest admissible constant in the radial-derivative bounds.
    pub radial_constant: Option<f64>,
    pub radial_paths: Option<[RadialPath; 3]>,
    pub overall: bool,
}

impl ValidationReport {
    pub fn check(&self, assumption: &str) -> impl Iterator<Item = &Check> {
        let a = assumption.to_string();
        self.checks.iter().filter(move |c| c.assumption == a)
    }

    pub fn passed(&self, assumption: &str) -> bool {
        let mut it = self.check(assumption).peekable();
        it.peek().is_some() && it.all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "validation ({})", self.mode.as_str())?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        if let (Some(a), Some(b)) = (self.nu1, self.nu2) {
            writeln!(f, "  nu1 = {a:.10e}, nu2 = {b:.10e}")?;
        }
        if let Some(c) = self.radial_constant {
            writeln!(f, "  radial constant C = {c:.12}")?;
        }
        write!(f, "  overall: {}", if self.overall { "pass" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    /// Largest allowed potential mismatch on the outer shell `|x|_inf >= 0.8 L`.
    pub tail_tol: f64,
    pub estimate_nu: bool,
    pub nu_max_iters: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            tail_tol: 1e-2,
            estimate_nu: true,
            nu_max_iters: 500,
        }
    }
}

/// Slack for non-strict comparisons of sampled values; covers rounding in
/// `sqrt(V1 V2)` on equality cases such as `|lambda| = delta sqrt(V1 V2)`.
const REL_SLACK: f64 = 1e-12;

fn le_slack(a: f64, b: f64) -> bool {
    a <= b + REL_SLACK * b.abs().max(a.abs())
}

struct Worst {
    value: f64,
    bound: f64,
    margin: f64,
    idx: usize,
    failed: bool,
}

/// Run `test(i) -> (value, bound, passed, margin)` over all nodes and keep the
/// node with the smallest margin.
fn scan(
    grid: &Grid,
    assumption: &'static str,
    detail: String,
    test: impl Fn(usize) -> (f64, f64, bool, f64),
) -> Check {
    let mut w = Worst {
        value: f64::NAN,
        bound: f64::NAN,
        margin: f64::INFINITY,
        idx: 0,
        failed: false,
    };
    for i in 0..grid.len() {
        let (value, bound, ok, margin) = test(i);
        // first failure wins; otherwise the tightest node
        let better = if w.failed {
            !ok && margin < w.margin
        } else {
            !ok || margin < w.margin
        };
        if better || w.value.is_nan() {
            w = Worst {
                value,
                bound,
                margin,
                idx: i,
                failed: w.failed || !ok,
            };
        }
    }
    Check {
        assumption,
        passed: !w.failed,
        worst_value: w.value,
        bound: w.bound,
        worst_coord: grid.coord(w.idx)[..grid.dim()].to_vec(),
        detail,
    }
}

fn check_periodicity(ps: &PotentialSet, grid: &Grid, tag: &str) -> Result<Check> {
    let k = grid.nodes_per_unit().filter(|&k| k < grid.n()).ok_or_else(|| {
        Error::PeriodUnresolved(format!(
            "need an integral number of nodes per unit length, fewer than n (n/(2L) = {})",
            grid.n() as f64 / (2.0 * grid.half_width())
        ))
    })?;
    let n = grid.n();
    let mut worst = 0.0;
    let mut worst_idx = 0;
    for f in [&ps.v1, &ps.v2, &ps.lambda] {
        for i in 0..grid.len() {
            let m = grid.multi_index(i);
            for a in 0..grid.dim() {
                if m[a] + k >= n {
                    continue;
                }
                let mut m2: [usize; MAX_DIM] = m;
                m2[a] += k;
                let j = grid.flat_index(&m2);
                let scale = f[i].abs().max(f[j].abs()).max(1.0);
                let diff = (f[i] - f[j]).abs() / scale;
                if diff > worst {
                    worst = diff;
                    worst_idx = i;
                }
            }
        }
    }
    Ok(Check {
        assumption: "V1",
        passed: worst <= 1e-12,
        worst_value: worst,
        bound: 1e-12,
        worst_coord: grid.coord(worst_idx)[..grid.dim()].to_vec(),
        detail: format!("{tag}1-periodic in each coordinate (relative mismatch)"),
    })
}

fn check_nonneg(grid: &Grid, label: &'static str, f: &[f64], name: &str, tag: &str) -> Check {
    scan(grid, label, format!("{tag}{name} >= 0"), |i| {
        (f[i], 0.0, f[i] >= 0.0, f[i])
    })
}

fn check_nu(label: &'static str, nu: f64, name: &str, tag: &str) -> Check {
    Check {
        assumption: label,
        passed: nu > NU_POSITIVE,
        worst_value: nu,
        bound: NU_POSITIVE,
        worst_coord: vec![],
        detail: format!("{tag}spectral infimum of -Lap + {name} > 0"),
    }
}

/// Spectral infima below this count as zero (the eigenvalue tolerance).
const NU_POSITIVE: f64 = 1e-8;

fn check_coupling(ps: &PotentialSet, grid: &Grid, label: &'static str, tag: &str) -> Check {
    let d = ps.delta;
    scan(
        grid,
        label,
        format!("{tag}|lambda| <= delta sqrt(V1 V2), delta = {d}"),
        |i| {
            let lhs = ps.lambda[i].abs();
            let rhs = d * (ps.v1[i].max(0.0) * ps.v2[i].max(0.0)).sqrt();
            (lhs, rhs, le_slack(lhs, rhs), rhs - lhs)
        },
    )
}

fn check_positive_coupling(ps: &PotentialSet, grid: &Grid, label: &'static str) -> Check {
    scan(grid, label, "lambda > 0 (strict)".into(), |i| {
        let l = ps.lambda[i];
        (l, 0.0, l > 0.0, l)
    })
}

/// Check the assumptions selected by `mode` at every node.
pub fn validate_assumptions(
    ps: &PotentialSet,
    mode: ValidationMode,
    reference: Option<&PotentialSet>,
    grid: &Grid,
    opts: &ValidationOptions,
) -> Result<ValidationReport> {
    ps.conforms(grid)?;
    let mut checks = Vec::new();
    let mut nu = (None, None);
    let mut radial_constant = None;
    let mut radial_paths = None;

    match mode {
        ValidationMode::Periodic | ValidationMode::PeriodicStrict => {
            checks.push(check_periodicity(ps, grid, "")?);
            checks.push(check_nonneg(grid, "V2", &ps.v1, "V1", ""));
            checks.push(check_nonneg(grid, "V2", &ps.v2, "V2", ""));
            if opts.estimate_nu {
                let (a, b) = estimate_nu_with(ps, grid, opts.nu_max_iters)?;
                checks.push(check_nu("V2", a, "V1", ""));
                checks.push(check_nu("V2", b, "V2", ""));
                nu = (Some(a), Some(b));
            }
            checks.push(check_coupling(ps, grid, "V3", ""));
            if mode == ValidationMode::PeriodicStrict {
                checks.push(check_positive_coupling(ps, grid, "V3'"));
            }
        }
        ValidationMode::Asymptotic | ValidationMode::AsymptoticStrict => {
            let r = reference.ok_or(Error::MissingReference)?;
            r.conforms(grid)?;
            // the reference must itself be an admissible periodic set
            checks.push(check_periodicity(r, grid, "reference: ")?);
            checks.push(check_nonneg(grid, "V2", &r.v1, "V1", "reference: "));
            checks.push(check_nonneg(grid, "V2", &r.v2, "V2", "reference: "));
            checks.push(check_coupling(r, grid, "V3", "reference: "));

            for (name, f, fo) in [("V1", &ps.v1, &r.v1), ("V2", &ps.v2, &r.v2)] {
                checks.push(scan(grid, "V4", format!("{name} < {name},o (strict)"), |i| {
                    (f[i], fo[i], f[i] < fo[i], fo[i] - f[i])
                }));
            }
            checks.push(scan(grid, "V4", "lambda_o < lambda (strict)".into(), |i| {
                let (l, lo) = (ps.lambda[i], r.lambda[i]);
                (l, lo, lo < l, l - lo)
            }));
            let shell = 0.8 * grid.half_width();
            let in_shell = |i: usize| {
                grid.coord(i)[..grid.dim()]
                    .iter()
                    .any(|c| c.abs() >= shell - 1e-12)
            };
            let tol = opts.tail_tol;
            for (name, f, fo) in [
                ("V1", &ps.v1, &r.v1),
                ("V2", &ps.v2, &r.v2),
                ("lambda", &ps.lambda, &r.lambda),
            ] {
                checks.push(scan(
                    grid,
                    "V4",
                    format!("|{name} - {name},o| < tail_tol on the shell |x|_inf >= 0.8 L"),
                    |i| {
                        if !in_shell(i) {
                            return (0.0, tol, true, f64::INFINITY);
                        }
                        let diff = (f[i] - fo[i]).abs();
                        (diff, tol, diff < tol, tol - diff)
                    },
                ));
            }
            checks.push(check_nonneg(grid, "V5", &ps.v1, "V1", ""));
            checks.push(check_nonneg(grid, "V5", &ps.v2, "V2", ""));
            if opts.estimate_nu {
                let (a, b) = estimate_nu_with(ps, grid, opts.nu_max_iters)?;
                checks.push(check_nu("V5", a, "V1", ""));
                checks.push(check_nu("V5", b, "V2", ""));
                nu = (Some(a), Some(b));
            }
            checks.push(check_coupling(ps, grid, "V6", ""));
            if mode == ValidationMode::AsymptoticStrict {
                checks.push(check_positive_coupling(ps, grid, "V6'"));
            }
        }
        ValidationMode::Nonexistence => {
            checks.push(check_coupling(ps, grid, "V6", ""));
            let ([r1, r2, rl], paths) = ps.radial_derivatives(grid);
            radial_paths = Some(paths);
            let mut c_min: f64 = 0.0;
            for (name, f, r) in [("V1", &ps.v1, &r1), ("V2", &ps.v2, &r2)] {
                checks.push(check_nonneg(grid, "V7", f, name, ""));
                checks.push(scan(grid, "V7", format!("<grad {name}, x> >= 0"), |i| {
                    (r[i], 0.0, r[i] >= -radial_slack(f[i], r[i]), r[i])
                }));
                let (c, check) = radial_bound(grid, "V7", name, f, r);
                c_min = c_min.max(c);
                checks.push(check);
            }
            checks.push(scan(grid, "V8", "<grad lambda, x> <= 0".into(), |i| {
                (rl[i], 0.0, rl[i] <= radial_slack(ps.lambda[i], rl[i]), -rl[i])
            }));
            let (c, check) = radial_bound(grid, "V8", "lambda", &ps.lambda, &rl);
            c_min = c_min.max(c);
            checks.push(check);
            radial_constant = Some(c_min);
        }
    }

    let overall = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        mode,
        checks,
        nu1: nu.0,
        nu2: nu.1,
        radial_constant,
        radial_paths,
        overall,
    })
}

fn radial_slack(f: f64, r: f64) -> f64 {
    REL_SLACK * f.abs().max(r.abs())
}

/// Smallest `C` with `|r| <= C |f|` at every node. Nodes where `f = 0` must
/// also have `r = 0` (up to rounding), otherwise no finite constant exists.
fn radial_bound(grid: &Grid, label: &'static str, name: &str, f: &[f64], r: &[f64]) -> (f64, Check) {
    let mut c: f64 = 0.0;
    let mut worst_idx = 0;
    let mut finite = true;
    for i in 0..grid.len() {
        let (fa, ra) = (f[i].abs(), r[i].abs());
        if fa == 0.0 {
            if ra > 1e-14 {
                finite = false;
                worst_idx = i;
            }
            continue;
        }
        let ratio = ra / fa;
        if ratio > c && finite {
            c = ratio;
            worst_idx = i;
        }
    }
    let c = if finite { c } else { f64::INFINITY };
    let check = Check {
        assumption: label,
        passed: finite,
        worst_value: c,
        bound: f64::INFINITY,
        worst_coord: grid.coord(worst_idx)[..grid.dim()].to_vec(),
        detail: format!("|<grad {name}, x>| <= C |{name}|, smallest C"),
    };
    (c, check)
}

/// Smallest eigenvalues of `-Lap + V1` and `-Lap + V2` on the grid.
pub fn estimate_nu(ps: &PotentialSet, grid: &Grid) -> Result<(f64, f64)> {
    estimate_nu_with(ps, grid, ValidationOptions::default().nu_max_iters)
}

pub fn estimate_nu_with(ps: &PotentialSet, grid: &Grid, max_iters: usize) -> Result<(f64, f64)> {
    ps.conforms(grid)?;
    Ok((
        smallest_eigenvalue(grid, &ps.v1, max_iters)?,
        smallest_eigenvalue(grid, &ps.v2, max_iters)?,
    ))
}

/// Inverse iteration on `-Lap + V + s` with `s = 1 - min(V, 0)`, inner solves
/// by conjugate gradients. Negative infima are returned as they are.
fn smallest_eigenvalue(grid: &Grid, v: &[f64], max_iters: usize) -> Result<f64> {
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = grid.neg_laplacian(x);
        for i in 0..y.len() {
            y[i] += v[i] * x[i];
        }
        grid.enforce_boundary(&mut y);
        y
    };
    let shift = 1.0 - v.iter().cloned().fold(0.0, f64::min);
    let shifted = |x: &[f64]| -> Vec<f64> {
        let mut y = apply(x);
        for i in 0..y.len() {
            y[i] += shift * x[i];
        }
        y
    };
    let mean_v = v.iter().sum::<f64>() / v.len() as f64;
    let c = (shift + mean_v).max(1.0);
    let spectral = grid.spec().laplacian == LaplacianMode::Spectral;
    let precond = |r: &[f64]| grid.solve_shifted(r, c).expect("positive shift");

    let rayleigh = |x: &[f64]| -> f64 { grid.dot(x, &apply(x)) / grid.dot(x, x) };
    let mut x = vec![1.0; grid.len()];
    grid.enforce_boundary(&mut x);
    let mut nu = rayleigh(&x);
    let inner_iters = 10 * grid.len().max(100);
    for _ in 0..max_iters {
        let y = if spectral {
            conjugate_gradient(shifted, &x, Some(precond), 1e-13, inner_iters)
        } else {
            conjugate_gradient(shifted, &x, None::<fn(&[f64]) -> Vec<f64>>, 1e-13, inner_iters)
        }
        .ok_or_else(|| Error::NoConvergence {
            what: "inner solve of the eigenvalue estimate".into(),
            iters: inner_iters,
        })?;
        let norm = grid.dot(&y, &y).sqrt();
        x = y.iter().map(|a| a / norm).collect();
        let new_nu = rayleigh(&x);
        let ax = apply(&x);
        let res: f64 = {
            let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - new_nu * b).collect();
            grid.dot(&r, &r).sqrt()
        };
        let change = (new_nu - nu).abs();
        nu = new_nu;
        if change <= 1e-11 * nu.abs().max(1.0) && res <= 1e-4 * nu.abs().max(1.0) {
            return Ok(nu);
        }
    }
    Err(Error::NoConvergence {
        what: "inverse iteration for the spectral infimum".into(),
        iters: max_iters,
    })
}

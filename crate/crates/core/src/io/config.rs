//! Run configuration: line-oriented `key = value` pairs under `[section]`
//! headers. Lines starting with `#` or `;` are comments.
//!
//! ```text
//! [run]        out
//! [grid]       dim, half_width, points_per_dim, boundary, laplacian
//! [problem]    p, q, mu
//! [potentials] v1, v2, lambda, delta, mode, tail_tol
//! [reference]  v1, v2, lambda
//! [solver]     max_iters, grad_tol, step0, armijo_factor, armijo_c,
//!              recenter_every, seed, init, init_width, init_file
//! [sweep]      mu_values, bidirectional
//! [pohozaev]   field, cutoff
//! [compare]    margin
//! ```
//!
//! Potentials use `constant c`, `cosine a b`, `gaussian base amp sigma` or
//! `radial_quadratic c`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::functional::ProblemSpec;
use crate::grid::{Boundary, GridSpec, LaplacianMode};
use crate::potentials::{PotentialDef, PotentialDefs, ValidationMode};
use crate::solver::{InitKind, SolveOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum PohozaevField {
    /// Aubin-Talenti bubble in `v`, `u = 0`.
    Bubble,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out: PathBuf,
    pub grid: GridSpec,
    pub problem: ProblemSpec,
    pub potentials: PotentialDefs,
    pub delta: f64,
    pub mode: ValidationMode,
    pub tail_tol: f64,
    pub reference: Option<PotentialDefs>,
    pub solver: SolveOptions,
    pub sweep_mu: Option<Vec<f64>>,
    pub sweep_bidirectional: bool,
    pub pohozaev_field: PohozaevField,
    pub pohozaev_cutoff: f64,
    pub compare_margin: f64,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["out"]),
    ("grid", &["dim", "half_width", "points_per_dim", "boundary", "laplacian"]),
    ("problem", &["p", "q", "mu"]),
    ("potentials", &["v1", "v2", "lambda", "delta", "mode", "tail_tol"]),
    ("reference", &["v1", "v2", "lambda"]),
    (
        "solver",
        &[
            "max_iters",
            "grad_tol",
            "step0",
            "armijo_factor",
            "armijo_c",
            "recenter_every",
            "seed",
            "init",
            "init_width",
            "init_file",
        ],
    ),
    ("sweep", &["mu_values", "bidirectional"]),
    ("pohozaev", &["field", "cutoff"]),
    ("compare", &["margin"]),
];

type Table = BTreeMap<String, (String, usize)>;

/// Split the text into `section.key -> (value, line)`.
fn tokenize(text: &str) -> Result<Table> {
    let mut table = Table::new();
    let mut section: Option<&str> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {lineno}"), "unterminated section header"))?
                .trim();
            let known = SCHEMA.iter().find(|(s, _)| *s == name).map(|(s, _)| *s);
            section = Some(known.ok_or_else(|| Error::config(format!("[{name}]"), "unknown section"))?);
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {lineno}"), format!("expected `key = value`, got {line:?}")))?;
        let sec = section.ok_or_else(|| Error::config(format!("line {lineno}"), "key outside any section"))?;
        let k = k.trim();
        let keys = SCHEMA.iter().find(|(s, _)| *s == sec).unwrap().1;
        if !keys.contains(&k) {
            return Err(Error::config(format!("{sec}.{k}"), "unknown key"));
        }
        let full = format!("{sec}.{k}");
        if table.contains_key(&full) {
            return Err(Error::config(full, format!("duplicate key (line {lineno})")));
        }
        table.insert(full, (v.trim().to_string(), lineno));
    }
    Ok(table)
}

struct Reader {
    table: Table,
}

impl Reader {
    fn raw(&self, key: &str) -> Option<&str> {
        self.table.get(key).map(|(v, _)| v.as_str())
    }

    fn has_section(&self, sec: &str) -> bool {
        let prefix = format!("{sec}.");
        self.table.keys().any(|k| k.starts_with(&prefix))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::config(key, format!("expected {what}, got {s:?}"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T> {
        self.parse(key, what)?.ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parse(key, "a number")?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(Error::config(key, format!("must be finite (got {x})")));
            }
        }
        Ok(v)
    }

    fn potential(&self, key: &str) -> Result<PotentialDef> {
        let s = self.raw(key).ok_or_else(|| Error::config(key, "missing required key"))?;
        PotentialDef::parse(s).map_err(|m| Error::config(key, m))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let r = Reader { table: tokenize(text)? };

        let boundary = match r.raw("grid.boundary").unwrap_or("periodic") {
            "periodic" => Boundary::Periodic,
            "dirichlet" => Boundary::Dirichlet,
            s => return Err(Error::config("grid.boundary", format!("expected periodic or dirichlet, got {s:?}"))),
        };
        let default_lap = if boundary == Boundary::Periodic { "spectral" } else { "fd2" };
        let laplacian = match r.raw("grid.laplacian").unwrap_or(default_lap) {
            "spectral" => LaplacianMode::Spectral,
            "fd2" => LaplacianMode::Fd2,
            s => return Err(Error::config("grid.laplacian", format!("expected spectral or fd2, got {s:?}"))),
        };
        let grid = GridSpec {
            dim: r.required("grid.dim", "an integer")?,
            half_width: r.float("grid.half_width")?.ok_or_else(|| Error::config("grid.half_width", "missing required key"))?,
            points_per_dim: r.required("grid.points_per_dim", "an integer")?,
            boundary,
            laplacian,
        };
        grid.validate().map_err(|e| Error::config("grid", e.to_string()))?;

        let p = r.float("problem.p")?.ok_or_else(|| Error::config("problem.p", "missing required key"))?;
        let q = r.float("problem.q")?.ok_or_else(|| Error::config("problem.q", "missing required key"))?;
        let mu = r.float("problem.mu")?.unwrap_or(1.0);
        let problem = ProblemSpec::new(grid.dim, p, q, mu).map_err(|e| Error::config("problem", e.to_string()))?;

        let potentials = PotentialDefs::new(
            r.potential("potentials.v1")?,
            r.potential("potentials.v2")?,
            r.potential("potentials.lambda")?,
        );
        let delta = r.float("potentials.delta")?.ok_or_else(|| Error::config("potentials.delta", "missing required key"))?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config("potentials.delta", format!("must lie in (0, 1) (got {delta})")));
        }
        let mode_s = r.raw("potentials.mode").unwrap_or("periodic");
        let mode = ValidationMode::parse(mode_s).ok_or_else(|| {
            Error::config(
                "potentials.mode",
                format!("expected periodic, periodic_strict, asymptotic, asymptotic_strict or nonexistence, got {mode_s:?}"),
            )
        })?;
        let tail_tol = r.float("potentials.tail_tol")?.unwrap_or(1e-2);
        if !(tail_tol > 0.0) {
            return Err(Error::config("potentials.tail_tol", format!("must be positive (got {tail_tol})")));
        }
        let reference = if r.has_section("reference") {
            Some(PotentialDefs::new(
                r.potential("reference.v1")?,
                r.potential("reference.v2")?,
                r.potential("reference.lambda")?,
            ))
        } else {
            None
        };
        if matches!(mode, ValidationMode::Asymptotic | ValidationMode::AsymptoticStrict) && reference.is_none() {
            return Err(Error::config("reference", "asymptotic mode needs a [reference] section"));
        }

        let d = SolveOptions::default();
        let init = match r.raw("solver.init").unwrap_or("gaussian") {
            "gaussian" => InitKind::GaussianBump { width: r.float("solver.init_width")? },
            "random" => InitKind::Random,
            "file" => InitKind::File(
                r.raw("solver.init_file")
                    .map(PathBuf::from)
                    .ok_or_else(|| Error::config("solver.init_file", "required when init = file"))?,
            ),
            s => return Err(Error::config("solver.init", format!("expected gaussian, random or file, got {s:?}"))),
        };
        let solver = SolveOptions {
            max_iters: r.parse("solver.max_iters", "a nonnegative integer")?.unwrap_or(d.max_iters),
            grad_tol: r.float("solver.grad_tol")?.unwrap_or(d.grad_tol),
            step0: r.float("solver.step0")?.unwrap_or(d.step0),
            armijo_factor: r.float("solver.armijo_factor")?.unwrap_or(d.armijo_factor),
            armijo_c: r.float("solver.armijo_c")?.unwrap_or(d.armijo_c),
            recenter_every: r.parse("solver.recenter_every", "a nonnegative integer")?.unwrap_or(d.recenter_every),
            seed: r.parse("solver.seed", "a nonnegative integer")?.unwrap_or(d.seed),
            init,
            precondition: true,
        };
        solver.validate()?;

        let sweep_mu = match r.raw("sweep.mu_values") {
            None => None,
            Some(s) => {
                let vals: Vec<f64> = s
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>().map_err(|_| Error::config("sweep.mu_values", format!("not a number: {t:?}"))))
                    .collect::<Result<_>>()?;
                if vals.is_empty() {
                    return Err(Error::config("sweep.mu_values", "mu_values must be non-empty"));
                }
                if vals.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
                    return Err(Error::config("sweep.mu_values", "values must be finite and >= 0"));
                }
                if vals.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::config("sweep.mu_values", "values must be strictly increasing"));
                }
                Some(vals)
            }
        };
        let sweep_bidirectional = r.parse("sweep.bidirectional", "true or false")?.unwrap_or(true);

        let pohozaev_field = match r.raw("pohozaev.field").unwrap_or("bubble") {
            "bubble" => PohozaevField::Bubble,
            path => PohozaevField::File(PathBuf::from(path)),
        };
        let pohozaev_cutoff = r.float("pohozaev.cutoff")?.unwrap_or(0.45);
        if !(pohozaev_cutoff > 0.0 && pohozaev_cutoff <= 0.5) {
            return Err(Error::config("pohozaev.cutoff", format!("must lie in (0, 0.5] (got {pohozaev_cutoff})")));
        }
        let compare_margin = r.float("compare.margin")?.unwrap_or(0.0);
        if compare_margin < 0.0 {
            return Err(Error::config("compare.margin", format!("must be >= 0 (got {compare_margin})")));
        }

        Ok(RunConfig {
            out: PathBuf::from(r.raw("run.out").unwrap_or("./out")),
            grid,
            problem,
            potentials,
            delta,
            mode,
            tail_tol,
            reference,
            solver,
            sweep_mu,
            sweep_bidirectional,
            pohozaev_field,
            pohozaev_cutoff,
            compare_margin,
        })
    }

    /// Canonical text: every key, fixed order, shortest round-trip floats.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let _ = writeln!(s, "[run]\nout = {}\n", self.out.display());
        let _ = writeln!(
            s,
            "[grid]\ndim = {}\nhalf_width = {:?}\npoints_per_dim = {}\nboundary = {}\nlaplacian = {}\n",
            g.dim, g.half_width, g.points_per_dim, g.boundary, g.laplacian
        );
        let _ = writeln!(s, "[problem]\np = {:?}\nq = {:?}\nmu = {:?}\n", self.problem.p, self.problem.q, self.problem.mu);
        let _ = writeln!(
            s,
            "[potentials]\nv1 = {}\nv2 = {}\nlambda = {}\ndelta = {:?}\nmode = {}\ntail_tol = {:?}\n",
            self.potentials.v1,
            self.potentials.v2,
            self.potentials.lambda,
            self.delta,
            self.mode.as_str(),
            self.tail_tol
        );
        if let Some(r) = &self.reference {
            let _ = writeln!(s, "[reference]\nv1 = {}\nv2 = {}\nlambda = {}\n", r.v1, r.v2, r.lambda);
        }
        let o = &self.solver;
        let _ = writeln!(
            s,
            "[solver]\nmax_iters = {}\ngrad_tol = {:?}\nstep0 = {:?}\narmijo_factor = {:?}\narmijo_c = {:?}\nrecenter_every = {}\nseed = {}",
            o.max_iters, o.grad_tol, o.step0, o.armijo_factor, o.armijo_c, o.recenter_every, o.seed
        );
        match &o.init {
            InitKind::GaussianBump { width } => {
                let _ = writeln!(s, "init = gaussian");
                if let Some(w) = width {
                    let _ = writeln!(s, "init_width = {w:?}");
                }
            }
            InitKind::Random => {
                let _ = writeln!(s, "init = random");
            }
            InitKind::File(p) => {
                let _ = writeln!(s, "init = file\ninit_file = {}", p.display());
            }
        }
        s.push('\n');
        if let Some(mus) = &self.sweep_mu {
            let list: Vec<String> = mus.iter().map(|m| format!("{m:?}")).collect();
            let _ = writeln!(s, "[sweep]\nmu_values = {}\nbidirectional = {}\n", list.join(", "), self.sweep_bidirectional);
        }
        let field = match &self.pohozaev_field {
            PohozaevField::Bubble => "bubble".to_string(),
            PohozaevField::File(p) => p.display().to_string(),
        };
        let _ = writeln!(s, "[pohozaev]\nfield = {field}\ncutoff = {:?}\n", self.pohozaev_cutoff);
        let _ = writeln!(s, "[compare]\nmargin = {:?}", self.compare_margin);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = "
# model pair
[grid]
dim = 3
half_width = 2
points_per_dim = 16

[problem]
p = 6
q = 6
mu = 0

[potentials]
v1 = radial_quadratic 0.5
v2 = radial_quadratic 0.5
lambda = radial_quadratic -0.25
delta = 0.5
mode = nonexistence
";

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::parse(MODEL).unwrap();
        assert_eq!(c.grid.points_per_dim, 16);
        assert_eq!(c.mode, ValidationMode::Nonexistence);
        assert_eq!(c.out, PathBuf::from("./out"));
        let canon = c.to_canonical();
        let again = RunConfig::parse(&canon).unwrap();
        assert_eq!(again.to_canonical(), canon);
    }

    #[test]
    fn errors_name_the_key() {
        let e = RunConfig::parse(&MODEL.replace("delta = 0.5", "delta = 1.5")).unwrap_err();
        assert!(e.to_string().contains("potentials.delta"), "{e}");
        let e = RunConfig::parse(&format!("{MODEL}\n[sweep]\nmu_values =\n")).unwrap_err();
        assert!(e.to_string().contains("mu_values must be non-empty"), "{e}");
        let e = RunConfig::parse(&MODEL.replace("q = 6", "q = 6\nr = 1")).unwrap_err();
        assert!(e.to_string().contains("problem.r"), "{e}");
        let e = RunConfig::parse(&MODEL.replace("points_per_dim = 16", "points_per_dim = 15")).unwrap_err();
        assert!(e.to_string().contains("n must be even"), "{e}");
        let e = RunConfig::parse(&MODEL.replace("mode = nonexistence", "mode = asymptotic")).unwrap_err();
        assert!(e.to_string().contains("reference"), "{e}");
    }

    #[test]
    fn full_config_round_trips() {
        let text = format!(
            "{}\n[reference]\nv1 = constant 2\nv2 = constant 2\nlambda = constant 0.4\n[solver]\ninit = random\nseed = 9\nmax_iters = 0\n[sweep]\nmu_values = 0.5, 1, 2\n[compare]\nmargin = 1e-6\n",
            MODEL
        );
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.sweep_mu.as_deref(), Some(&[0.5, 1.0, 2.0][..]));
        assert_eq!(c.solver.init, InitKind::Random);
        let canon = c.to_canonical();
        assert_eq!(RunConfig::parse(&canon).unwrap().to_canonical(), canon);
    }
}

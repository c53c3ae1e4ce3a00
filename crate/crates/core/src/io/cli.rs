//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 failed validation
//! or comparison, 3 non-convergence.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::diagnostics::{bubble_pair, pohozaev_residual, PohozaevOptions};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potentials::{sample_potentials, validate_assumptions, ValidationMode, ValidationOptions, ValidationReport};
use crate::solver::{
    compare_energies, estimate_sobolev_constant, minimize_ground_state, sweep_mu, SobolevOptions, SolveReport,
    SweepOptions,
};

use super::config::{PohozaevField, RunConfig};
use super::csv::write_report_csv;
use super::field_file::{read_field, write_atomic, write_field};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILED_CHECK: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "csgs", version, about = "Ground states of coupled Schrodinger systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[run] out` (default ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[solver] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the potentials against the assumptions of the configured mode.
    Validate(Common),
    /// Minimize the energy on the Nehari manifold.
    Solve(Common),
    /// Energy levels over `[sweep] mu_values`.
    Sweep(Common),
    /// Compare the periodic reference level with the perturbed one.
    Compare(Common),
    /// Localized Pohozaev residual of a field (d = 3, p = q = 6).
    Pohozaev(Common),
    /// Estimate the sharp Sobolev constant on the configured 3D grid.
    Sobolev(Common),
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    grid: Grid,
}

impl Ctx {
    fn load(c: &Common) -> Result<Ctx> {
        let mut cfg = RunConfig::from_file(&c.config)?;
        if let Some(s) = c.seed {
            cfg.solver.seed = s;
        }
        let out = c.out.clone().unwrap_or_else(|| cfg.out.clone());
        fs::create_dir_all(&out)?;
        let grid = Grid::new(cfg.grid)?;
        write_atomic(&out.join("config.conf"), cfg.to_canonical().as_bytes())?;
        Ok(Ctx { cfg, out, grid })
    }

    fn write_text(&self, name: &str, text: &str) -> Result<()> {
        write_atomic(&self.out.join(name), text.as_bytes())
    }

    fn validation_opts(&self) -> ValidationOptions {
        ValidationOptions { tail_tol: self.cfg.tail_tol, ..Default::default() }
    }

    fn validate(&self) -> Result<ValidationReport> {
        let ps = sample_potentials(&self.cfg.potentials, self.cfg.delta, &self.grid)?;
        let reference = match &self.cfg.reference {
            Some(r) => Some(sample_potentials(r, self.cfg.delta, &self.grid)?),
            None => None,
        };
        let report = validate_assumptions(&ps, self.cfg.mode, reference.as_ref(), &self.grid, &self.validation_opts())?;
        self.write_text("validation.txt", &format!("{report}\n"))?;
        Ok(report)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn summary(r: &SolveReport) -> String {
    format!(
        "{r}\nmu = {:?}\nenergy = {:.16e}\nquadratic = {:.16e}\ncoupling = {:.16e}\np-term = {:.16e}\nq-term = {:.16e}\nnehari residual = {:.6e}\nfibering t = {:.16e}\ngrid {} spec {} potentials {}\n",
        r.mu,
        r.energy,
        r.breakdown.quad,
        r.breakdown.coupling,
        r.breakdown.pterm,
        r.breakdown.qterm,
        r.nehari_residual,
        r.fibering.t_mu,
        r.grid_hash,
        r.spec_hash,
        r.potential_hash
    )
}

fn solve_to(ctx: &Ctx, r: &SolveReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_field(&r.field, &dir.join("field.csgs"))?;
    write_report_csv(r, &dir.join("trace.csv"))?;
    write_atomic(&dir.join("summary.txt"), summary(r).as_bytes())?;
    let _ = ctx;
    Ok(())
}

fn cmd_validate(ctx: &Ctx) -> Result<i32> {
    let report = ctx.validate()?;
    println!("{report}");
    Ok(if report.overall { EXIT_OK } else { EXIT_FAILED_CHECK })
}

fn cmd_solve(ctx: &Ctx) -> Result<i32> {
    let report = ctx.validate()?;
    if !report.overall {
        println!("{report}");
        return Ok(EXIT_FAILED_CHECK);
    }
    let ps = sample_potentials(&ctx.cfg.potentials, ctx.cfg.delta, &ctx.grid)?;
    let r = minimize_ground_state(&ps, &ctx.cfg.problem, &ctx.grid, &ctx.cfg.solver)?;
    solve_to(ctx, &r, &ctx.out)?;
    println!("{r}");
    Ok(if r.converged { EXIT_OK } else { EXIT_NO_CONVERGENCE })
}

fn cmd_sweep(ctx: &Ctx) -> Result<i32> {
    let mus = ctx
        .cfg
        .sweep_mu
        .as_ref()
        .ok_or_else(|| Error::config("sweep.mu_values", "mu_values must be non-empty"))?;
    let report = ctx.validate()?;
    if !report.overall {
        println!("{report}");
        return Ok(EXIT_FAILED_CHECK);
    }
    let ps = sample_potentials(&ctx.cfg.potentials, ctx.cfg.delta, &ctx.grid)?;
    let opts = SweepOptions {
        solve: ctx.cfg.solver.clone(),
        bidirectional: ctx.cfg.sweep_bidirectional,
        sobolev: None,
    };
    let s = sweep_mu(&ps, &ctx.cfg.problem, &ctx.grid, mus, &opts)?;
    write_report_csv(&s, &ctx.out.join("sweep.csv"))?;
    for p in &s.points {
        match p.energy {
            Some(c) => println!("mu = {:<10} c = {c:.12e}", p.mu),
            None => println!("mu = {:<10} failed: {}", p.mu, p.error.as_deref().unwrap_or("")),
        }
    }
    if let Some(t) = s.threshold {
        println!("threshold = {t:.12e}, mu0 = {:?}", s.mu0_estimate);
    }
    Ok(if s.points.iter().all(|p| p.converged) { EXIT_OK } else { EXIT_NO_CONVERGENCE })
}

fn cmd_compare(ctx: &Ctx) -> Result<i32> {
    let reference = ctx
        .cfg
        .reference
        .as_ref()
        .ok_or_else(|| Error::config("reference", "compare needs a [reference] section"))?;
    let periodic = sample_potentials(reference, ctx.cfg.delta, &ctx.grid)?;
    let asym = sample_potentials(&ctx.cfg.potentials, ctx.cfg.delta, &ctx.grid)?;
    let opts = ctx.validation_opts();
    let vp = validate_assumptions(&periodic, ValidationMode::Periodic, None, &ctx.grid, &opts)?;
    let va = validate_assumptions(&asym, ValidationMode::Asymptotic, Some(&periodic), &ctx.grid, &opts)?;
    ctx.write_text("validation.txt", &format!("reference\n{vp}\nperturbed\n{va}\n"))?;
    if !(vp.overall && va.overall) {
        println!("reference\n{vp}\nperturbed\n{va}");
        return Ok(EXIT_FAILED_CHECK);
    }
    let rp = minimize_ground_state(&periodic, &ctx.cfg.problem, &ctx.grid, &ctx.cfg.solver)?;
    let ra = minimize_ground_state(&asym, &ctx.cfg.problem, &ctx.grid, &ctx.cfg.solver)?;
    solve_to(ctx, &rp, &ctx.out.join("periodic"))?;
    solve_to(ctx, &ra, &ctx.out.join("asymptotic"))?;
    if !(rp.converged && ra.converged) {
        println!("periodic: {rp}\nasymptotic: {ra}");
        return Ok(EXIT_NO_CONVERGENCE);
    }
    let c = compare_energies(&rp, &ra, ctx.cfg.compare_margin)?;
    ctx.write_text("compare.txt", &format!("{c}\n"))?;
    println!("{c}");
    Ok(if c.passed { EXIT_OK } else { EXIT_FAILED_CHECK })
}

fn cmd_pohozaev(ctx: &Ctx) -> Result<i32> {
    let fp = match &ctx.cfg.pohozaev_field {
        PohozaevField::Bubble => bubble_pair(&ctx.grid)?,
        PohozaevField::File(p) => read_field(p)?,
    };
    let ps = sample_potentials(&ctx.cfg.potentials, ctx.cfg.delta, &ctx.grid)?;
    let opts = PohozaevOptions { cutoff_fraction: ctx.cfg.pohozaev_cutoff };
    let r = pohozaev_residual(&fp, &ps, &ctx.cfg.problem, &ctx.grid, &opts)?;
    ctx.write_text("pohozaev.txt", &format!("{r}\n"))?;
    println!("{r}");
    Ok(EXIT_OK)
}

fn cmd_sobolev(ctx: &Ctx) -> Result<i32> {
    let e = estimate_sobolev_constant(&ctx.grid, &SobolevOptions::default())?;
    let text = format!(
        "S estimate = {:.12e}\nbubble quotient = {:.12e}\niterations = {}\ngrad norm = {:.3e}\nconverged = {}\n",
        e.value, e.bubble_value, e.iterations, e.grad_norm, e.converged
    );
    ctx.write_text("sobolev.txt", &text)?;
    print!("{text}");
    Ok(if e.converged { EXIT_OK } else { EXIT_NO_CONVERGENCE })
}

/// Parse `args` (including the program name), run the subcommand and return
/// the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (common, run): (&Common, fn(&Ctx) -> Result<i32>) = match &cli.command {
        Command::Validate(c) => (c, cmd_validate),
        Command::Solve(c) => (c, cmd_solve),
        Command::Sweep(c) => (c, cmd_sweep),
        Command::Compare(c) => (c, cmd_compare),
        Command::Pohozaev(c) => (c, cmd_pohozaev),
        Command::Sobolev(c) => (c, cmd_sobolev),
    };
    match Ctx::load(common).and_then(|ctx| run(&ctx)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

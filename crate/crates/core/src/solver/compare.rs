//! Energy comparison between a periodic problem and its asymptotically
//! periodic perturbation.

use std::fmt;

use crate::error::{Error, Result};

use super::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub c_periodic: f64,
    pub c_asymptotic: f64,
    /// `c_periodic - c_asymptotic`
    pub gap: f64,
    pub margin: f64,
    /// `gap > margin`, with a 1e-9 slack against rounding.
    pub passed: bool,
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c_periodic = {:.12e}, c_asymptotic = {:.12e}, gap = {:.6e} (margin {:e}): {}",
            self.c_periodic,
            self.c_asymptotic,
            self.gap,
            self.margin,
            if self.passed { "pass" } else { "FAIL" }
        )
    }
}

/// Slack added to the margin so that equal energies never pass.
pub const GAP_SLACK: f64 = 1e-9;

/// Check `c_asymptotic < c_periodic - margin`. Both reports must come from the
/// same grid and problem.
pub fn compare_energies(periodic: &SolveReport, asymptotic: &SolveReport, margin: f64) -> Result<ComparisonReport> {
    if periodic.grid_hash != asymptotic.grid_hash {
        return Err(Error::Incomparable(format!(
            "grid hashes differ ({} vs {})",
            periodic.grid_hash, asymptotic.grid_hash
        )));
    }
    if periodic.spec_hash != asymptotic.spec_hash {
        return Err(Error::Incomparable(format!(
            "problem hashes differ ({} vs {})",
            periodic.spec_hash, asymptotic.spec_hash
        )));
    }
    if !(margin >= 0.0) {
        return Err(Error::config("compare.margin", format!("must be >= 0 (got {margin})")));
    }
    let gap = periodic.energy - asymptotic.energy;
    Ok(ComparisonReport {
        c_periodic: periodic.energy,
        c_asymptotic: asymptotic.energy,
        gap,
        margin,
        passed: gap > margin + GAP_SLACK,
    })
}

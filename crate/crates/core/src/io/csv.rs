//! CSV reports. Floats are written with 17 significant digits so that every
//! value parses back to the same double.

use std::path::Path;

use crate::error::Result;
use crate::solver::{MuSweep, SolveReport};

use super::field_file::write_atomic;

pub trait CsvReport {
    fn header(&self) -> &'static str;
    fn rows(&self) -> Vec<String>;

    fn to_csv(&self) -> String {
        let mut s = String::from(self.header());
        s.push('\n');
        for r in self.rows() {
            s.push_str(&r);
            s.push('\n');
        }
        s
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvReport for SolveReport {
    fn header(&self) -> &'static str {
        "iter,energy,grad_norm"
    }

    fn rows(&self) -> Vec<String> {
        self.energy_trace
            .iter()
            .map(|t| format!("{},{},{}", t.iter, fmt_float(t.energy), fmt_float(t.grad_norm)))
            .collect()
    }
}

impl CsvReport for MuSweep {
    fn header(&self) -> &'static str {
        "mu,c,threshold,below_threshold"
    }

    /// Missing values (failed solve, no threshold) are left empty.
    fn rows(&self) -> Vec<String> {
        (0..self.mu_values.len())
            .map(|i| {
                format!(
                    "{},{},{},{}",
                    fmt_float(self.mu_values[i]),
                    self.energies[i].map(fmt_float).unwrap_or_default(),
                    self.threshold.map(fmt_float).unwrap_or_default(),
                    self.below_threshold(i).map(|b| b.to_string()).unwrap_or_default()
                )
            })
            .collect()
    }
}

pub fn write_report_csv(report: &impl CsvReport, path: &Path) -> Result<()> {
    write_atomic(path, report.to_csv().as_bytes())
}

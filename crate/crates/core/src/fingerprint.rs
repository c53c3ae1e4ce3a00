//! Short content hashes identifying the grid, problem and potentials a report
//! was computed with.

use sha2::{Digest, Sha256};

use crate::functional::ProblemSpec;
use crate::grid::Grid;
use crate::potentials::PotentialSet;

fn hex16(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn grid_hash(grid: &Grid) -> String {
    let s = grid.spec();
    let mut h = Sha256::new();
    h.update(b"grid");
    h.update((s.dim as u64).to_le_bytes());
    h.update(s.half_width.to_bits().to_le_bytes());
    h.update((s.points_per_dim as u64).to_le_bytes());
    h.update(s.boundary.to_string().as_bytes());
    h.update(s.laplacian.to_string().as_bytes());
    hex16(&h.finalize())
}

pub fn spec_hash(spec: &ProblemSpec) -> String {
    let mut h = Sha256::new();
    h.update(b"spec");
    h.update((spec.dim as u64).to_le_bytes());
    for x in [spec.p, spec.q, spec.mu] {
        h.update(x.to_bits().to_le_bytes());
    }
    hex16(&h.finalize())
}

pub fn potential_hash(ps: &PotentialSet) -> String {
    let mut h = Sha256::new();
    h.update(b"potentials");
    h.update(ps.delta.to_bits().to_le_bytes());
    for f in [&ps.v1, &ps.v2, &ps.lambda] {
        for x in f.iter() {
            h.update(x.to_bits().to_le_bytes());
        }
    }
    hex16(&h.finalize())
}

//! The unknown of the system: a pair of real grid functions.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridShape};

#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub shape: GridShape,
}

impl FieldPair {
    /// Pair on `grid`. Both components must have one value per node and be finite.
    pub fn new(grid: &Grid, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        grid.check_len(&u)?;
        grid.check_len(&v)?;
        let fp = FieldPair {
            u,
            v,
            shape: grid.shape(),
        };
        fp.check_finite(grid)?;
        Ok(fp)
    }

    pub fn zeros(grid: &Grid) -> Self {
        FieldPair {
            u: vec![0.0; grid.len()],
            v: vec![0.0; grid.len()],
            shape: grid.shape(),
        }
    }

    /// Both components sampled from closures of the node coordinate.
    pub fn from_fn(
        grid: &Grid,
        u: impl Fn(&[f64]) -> f64,
        v: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        FieldPair::new(grid, grid.sample(u), grid.sample(v))
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.v).all(|&x| x == 0.0)
    }

    /// Fails unless the pair was built for a grid of the same shape.
    pub fn conforms(&self, grid: &Grid) -> Result<()> {
        if self.shape != grid.shape() || self.u.len() != grid.len() || self.v.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.shape().to_string(),
                found: self.shape.to_string(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_finite(&self, grid: &Grid) -> Result<()> {
        for (name, f) in [("u", &self.u), ("v", &self.v)] {
            if let Some(i) = f.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteSample {
                    what: name.into(),
                    coord: grid.coord(i)[..grid.dim()].to_vec(),
                });
            }
        }
        Ok(())
    }

    pub fn scaled(&self, t: f64) -> Self {
        FieldPair {
            u: self.u.iter().map(|x| t * x).collect(),
            v: self.v.iter().map(|x| t * x).collect(),
            shape: self.shape,
        }
    }

    /// `self + t * dir`.
    pub fn axpy(&self, t: f64, dir: &FieldPair) -> Self {
        FieldPair {
            u: self.u.iter().zip(&dir.u).map(|(a, b)| a + t * b).collect(),
            v: self.v.iter().zip(&dir.v).map(|(a, b)| a + t * b).collect(),
            shape: self.shape,
        }
    }

    /// Componentwise absolute value.
    pub fn abs(&self) -> Self {
        FieldPair {
            u: self.u.iter().map(|x| x.abs()).collect(),
            v: self.v.iter().map(|x| x.abs()).collect(),
            shape: self.shape,
        }
    }

    /// Quadrature inner product summed over both components.
    pub fn dot(&self, other: &FieldPair, grid: &Grid) -> f64 {
        grid.dot(&self.u, &other.u) + grid.dot(&self.v, &other.v)
    }

    /// L2 norm of the pair, `sqrt(|u|^2 + |v|^2)`.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        self.dot(self, grid).sqrt()
    }

    /// Node index of the largest density `u^2 + v^2` (first on ties).
    pub fn max_density_node(&self) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, (a, b)) in self.u.iter().zip(&self.v).enumerate() {
            let d = a * a + b * b;
            if d > best_val {
                best_val = d;
                best = i;
            }
        }
        best
    }
}

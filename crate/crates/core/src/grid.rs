//! Truncated computational box `[-L, L)^d`, its quadrature, the Laplacian and
//! integer lattice translations.
//!
//! Nodes are laid out row-major with the last axis fastest. Node `k` on an axis
//! sits at `-L + k h` with `h = 2L / n`. Wavenumbers follow the discrete Fourier
//! convention `2 pi m / (2L)` with `m` in `[-n/2, n/2)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaplacianMode {
    /// Fourier multiplier `-|k|^2`. Periodic boundary only.
    Spectral,
    /// Second-order centered stencil.
    Fd2,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
        })
    }
}

impl fmt::Display for LaplacianMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LaplacianMode::Spectral => "spectral",
            LaplacianMode::Fd2 => "fd2",
        })
    }
}

/// Geometry of a grid without the choice of Laplacian. Two fields conform to
/// each other when their shapes are equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_dim: usize,
    pub boundary: Boundary,
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "d={} L={} n={} {}",
            self.dim, self.half_width, self.points_per_dim, self.boundary
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_dim: usize,
    pub boundary: Boundary,
    pub laplacian: LaplacianMode,
}

impl GridSpec {
    /// Periodic box with the spectral Laplacian, the default configuration.
    pub fn periodic(dim: usize, half_width: f64, points_per_dim: usize) -> Self {
        GridSpec {
            dim,
            half_width,
            points_per_dim,
            boundary: Boundary::Periodic,
            laplacian: LaplacianMode::Spectral,
        }
    }

    pub fn dirichlet(dim: usize, half_width: f64, points_per_dim: usize) -> Self {
        GridSpec {
            dim,
            half_width,
            points_per_dim,
            boundary: Boundary::Dirichlet,
            laplacian: LaplacianMode::Fd2,
        }
    }

    pub fn shape(&self) -> GridShape {
        GridShape {
            dim: self.dim,
            half_width: self.half_width,
            points_per_dim: self.points_per_dim,
            boundary: self.boundary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dim must be 1, 2 or 3 (got {})",
                self.dim
            )));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive (got {})",
                self.half_width
            )));
        }
        if self.points_per_dim % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be even (got {})",
                self.points_per_dim
            )));
        }
        if self.points_per_dim < 4 {
            return Err(Error::InvalidGrid(format!(
                "n must be at least 4 (got {})",
                self.points_per_dim
            )));
        }
        if self.laplacian == LaplacianMode::Spectral && self.boundary != Boundary::Periodic {
            return Err(Error::InvalidGrid(
                "spectral Laplacian requires periodic boundary".into(),
            ));
        }
        Ok(())
    }
}

/// A built grid: spacing, quadrature weights and cached FFT plans.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    spacing: f64,
    len: usize,
    weights: Vec<f64>,
    /// angular wavenumbers along one axis, FFT ordering
    wavenumbers: Vec<f64>,
    /// `|k|^2` per node, FFT ordering (empty in fd2 mode)
    k_squared: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("spec", &self.spec)
            .field("spacing", &self.spacing)
            .field("len", &self.len)
            .finish()
    }
}

/// Build a grid from its spec.
pub fn build_grid(spec: GridSpec) -> Result<Grid> {
    Grid::new(spec)
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Grid> {
        spec.validate()?;
        let n = spec.points_per_dim;
        let h = 2.0 * spec.half_width / n as f64;
        let len = n.pow(spec.dim as u32);

        let axis_weights: Vec<f64> = match spec.boundary {
            Boundary::Periodic => vec![h; n],
            // Trapezoid on [-L, L] for fields vanishing at both ends: the end
            // contributions are zero, so node 0 (at -L) carries no weight.
            Boundary::Dirichlet => (0..n).map(|k| if k == 0 { 0.0 } else { h }).collect(),
        };
        let mut weights = vec![1.0; len];
        for (idx, w) in weights.iter_mut().enumerate() {
            let m = multi_index(idx, n, spec.dim);
            for &k in m.iter().take(spec.dim) {
                *w *= axis_weights[k];
            }
        }

        let dk = 2.0 * PI / (2.0 * spec.half_width);
        let wavenumbers: Vec<f64> = (0..n)
            .map(|m| {
                let f = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                f * dk
            })
            .collect();
        let k_squared = if spec.laplacian == LaplacianMode::Spectral {
            (0..len)
                .map(|idx| {
                    let m = multi_index(idx, n, spec.dim);
                    m.iter()
                        .take(spec.dim)
                        .map(|&k| wavenumbers[k] * wavenumbers[k])
                        .sum()
                })
                .collect()
        } else {
            Vec::new()
        };

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(Grid {
            spec,
            spacing: h,
            len,
            weights,
            wavenumbers,
            k_squared,
            fft,
            ifft,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn shape(&self) -> GridShape {
        self.spec.shape()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn n(&self) -> usize {
        self.spec.points_per_dim
    }

    pub fn half_width(&self) -> f64 {
        self.spec.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_periodic(&self) -> bool {
        self.spec.boundary == Boundary::Periodic
    }

    /// Per-axis node indices of a flat index. Unused trailing axes are zero.
    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        multi_index(idx, self.n(), self.dim())
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        let n = self.n();
        m.iter().take(self.dim()).fold(0, |acc, &k| acc * n + k)
    }

    /// Coordinates of node `idx`. Unused trailing axes are zero.
    pub fn coord(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.multi_index(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            x[a] = -self.half_width() + m[a] as f64 * self.spacing;
        }
        x
    }

    /// Coordinates of every node, in storage order.
    pub fn node_coords(&self) -> impl Iterator<Item = [f64; MAX_DIM]> + '_ {
        (0..self.len).map(move |i| self.coord(i))
    }

    /// `|x|^2` at every node.
    pub fn radius_squared(&self) -> Vec<f64> {
        self.node_coords()
            .map(|x| x.iter().map(|c| c * c).sum())
            .collect()
    }

    /// Grid function sampled from a closure of the node coordinate.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let d = self.dim();
        self.node_coords().map(|x| f(&x[..d])).collect()
    }

    /// True for Dirichlet boundary nodes (any axis index zero).
    pub fn is_boundary_node(&self, idx: usize) -> bool {
        self.spec.boundary == Boundary::Dirichlet
            && self.multi_index(idx).iter().take(self.dim()).any(|&k| k == 0)
    }

    /// Zero the boundary nodes of a Dirichlet grid; no-op when periodic.
    pub fn enforce_boundary(&self, f: &mut [f64]) {
        if self.spec.boundary == Boundary::Dirichlet {
            for (idx, v) in f.iter_mut().enumerate() {
                if self.is_boundary_node(idx) {
                    *v = 0.0;
                }
            }
        }
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len {
            return Err(Error::GridMismatch {
                expected: format!("{} nodes ({})", self.len, self.shape()),
                found: format!("{} nodes", f.len()),
            });
        }
        Ok(())
    }

    /// Quadrature `sum_k w_k f_k`.
    /// Quadrature `sum_k w_k f_k`, correctly rounded, so the result does not
    /// depend on the node ordering.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(exact_sum(f.iter().zip(&self.weights).map(|(a, w)| a * w)))
    }

    pub(crate) fn quad(&self, f: &[f64]) -> f64 {
        compensated_sum(f.iter().zip(&self.weights).map(|(a, w)| a * w))
    }

    /// Weighted inner product `sum_k w_k f_k g_k`.
    pub(crate) fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        compensated_sum(f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| a * b * w))
    }

    /// Weighted L2 norm.
    pub fn l2_norm(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(exact_sum(f.iter().zip(&self.weights).map(|(a, w)| a * a * w)).sqrt())
    }

    /// `Δf`. Spectral mode multiplies Fourier coefficients by `-|k|^2`; fd2
    /// applies the 2nd-order stencil with the grid's boundary rule.
    pub fn apply_laplacian(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        Ok(self.laplacian(f))
    }

    pub(crate) fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        match self.spec.laplacian {
            LaplacianMode::Spectral => {
                let k2 = &self.k_squared;
                self.spectral_map(f, |idx, c| c * -k2[idx])
            }
            LaplacianMode::Fd2 => self.fd2_laplacian(f),
        }
    }

    /// `-Δf`.
    pub(crate) fn neg_laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut out = self.laplacian(f);
        out.iter_mut().for_each(|x| *x = -*x);
        out
    }

    /// `(-Δu, -Δv)`. In spectral mode both go through one complex transform.
    pub(crate) fn neg_laplacian_pair(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self.spec.laplacian {
            LaplacianMode::Spectral => {
                let k2 = &self.k_squared;
                self.spectral_map_real_pair(u, v, |idx| k2[idx])
            }
            LaplacianMode::Fd2 => (self.neg_laplacian(u), self.neg_laplacian(v)),
        }
    }

    /// `(shift - Δ)^{-1}` applied to both components.
    pub(crate) fn solve_shifted_pair(&self, u: &[f64], v: &[f64], shift: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.spec.laplacian {
            LaplacianMode::Spectral if shift > 0.0 => {
                let k2 = &self.k_squared;
                Ok(self.spectral_map_real_pair(u, v, |idx| 1.0 / (shift + k2[idx])))
            }
            _ => Ok((self.solve_shifted(u, shift)?, self.solve_shifted(v, shift)?)),
        }
    }

    /// Apply a real, even Fourier multiplier to two real fields packed as `u + i v`.
    fn spectral_map_real_pair(&self, u: &[f64], v: &[f64], symbol: impl Fn(usize) -> f64) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = u.iter().zip(v).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.transform(&mut buf, &self.fft);
        for (idx, c) in buf.iter_mut().enumerate() {
            *c *= symbol(idx);
        }
        self.transform(&mut buf, &self.ifft);
        let scale = 1.0 / self.len as f64;
        (
            buf.iter().map(|c| c.re * scale).collect(),
            buf.iter().map(|c| c.im * scale).collect(),
        )
    }

    /// Partial derivative along `axis`. The spectral variant drops the Nyquist
    /// mode, which has no real odd derivative.
    pub fn partial_derivative(&self, f: &[f64], axis: usize) -> Result<Vec<f64>> {
        self.check_len(f)?;
        if axis >= self.dim() {
            return Err(Error::InvalidGrid(format!(
                "axis {axis} out of range for d={}",
                self.dim()
            )));
        }
        Ok(match self.spec.laplacian {
            LaplacianMode::Spectral => {
                let n = self.n();
                let dim = self.dim();
                let kx = &self.wavenumbers;
                self.spectral_map(f, |idx, c| {
                    let m = multi_index(idx, n, dim)[axis];
                    if m == n / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        c * Complex64::new(0.0, kx[m])
                    }
                })
            }
            LaplacianMode::Fd2 => self.fd_derivative(f, axis),
        })
    }

    /// Solve `(shift - Δ) x = g`. Exact in spectral mode; conjugate gradients
    /// in fd2 mode. `shift` must be positive.
    pub fn solve_shifted(&self, g: &[f64], shift: f64) -> Result<Vec<f64>> {
        self.check_len(g)?;
        if !(shift > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "shifted solve needs a positive shift (got {shift})"
            )));
        }
        match self.spec.laplacian {
            LaplacianMode::Spectral => {
                let k2 = &self.k_squared;
                Ok(self.spectral_map(g, |idx, c| c / (shift + k2[idx])))
            }
            LaplacianMode::Fd2 => {
                let mut rhs = g.to_vec();
                self.enforce_boundary(&mut rhs);
                let op = |x: &[f64]| {
                    let lap = self.fd2_laplacian(x);
                    x.iter()
                        .zip(lap)
                        .map(|(a, l)| shift * a - l)
                        .collect::<Vec<_>>()
                };
                let mut x = conjugate_gradient(op, &rhs, None::<fn(&[f64]) -> Vec<f64>>, 1e-13, 10 * self.len.max(100))
                    .ok_or_else(|| Error::NoConvergence {
                        what: "shifted Laplacian solve".into(),
                        iters: 10 * self.len.max(100),
                    })?;
                self.enforce_boundary(&mut x);
                Ok(x)
            }
        }
    }

    /// Nodes per unit length when the spacing divides 1 exactly.
    pub fn nodes_per_unit(&self) -> Option<usize> {
        let m = self.n() as f64 / (2.0 * self.half_width());
        let r = m.round();
        if r >= 1.0 && (m - r).abs() < 1e-9 {
            Some(r as usize)
        } else {
            None
        }
    }

    /// `g(x) = f(x + z)` for an integer lattice vector `z`, realized as a
    /// circular shift by whole nodes.
    pub fn translate_lattice(&self, f: &[f64], shift: &[i64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        if !self.is_periodic() {
            return Err(Error::NotPeriodic);
        }
        if shift.len() != self.dim() {
            return Err(Error::InvalidGrid(format!(
                "shift has {} components, grid has d={}",
                shift.len(),
                self.dim()
            )));
        }
        let per_unit = self.nodes_per_unit().ok_or_else(|| {
            Error::PeriodUnresolved(format!(
                "n/(2L) = {} is not an integer node count",
                self.n() as f64 / (2.0 * self.half_width())
            ))
        })?;
        let n = self.n() as i64;
        let mut offsets = [0usize; MAX_DIM];
        for a in 0..self.dim() {
            offsets[a] = (shift[a] * per_unit as i64).rem_euclid(n) as usize;
        }
        if offsets.iter().all(|&o| o == 0) {
            return Ok(f.to_vec());
        }
        let nu = self.n();
        let mut out = vec![0.0; self.len];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut m = self.multi_index(idx);
            for a in 0..self.dim() {
                m[a] = (m[a] + offsets[a]) % nu;
            }
            *slot = f[self.flat_index(&m)];
        }
        Ok(out)
    }

    fn spectral_map(&self, f: &[f64], mult: impl Fn(usize, Complex64) -> Complex64) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut buf, &self.fft);
        for (idx, c) in buf.iter_mut().enumerate() {
            *c = mult(idx, *c);
        }
        self.transform(&mut buf, &self.ifft);
        let scale = 1.0 / self.len as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// In-place d-dimensional transform, one axis at a time.
    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n();
        let d = self.dim();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..d - 1 {
            let stride = n.pow((d - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let base = start + off;
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, l) in line.iter().enumerate() {
                        data[base + j * stride] = *l;
                    }
                }
            }
        }
    }

    /// Value of neighbour `m + step` along `axis` under the boundary rule.
    #[inline]
    fn neighbour(&self, f: &[f64], idx: usize, m: &[usize; MAX_DIM], axis: usize, step: i64) -> f64 {
        let n = self.n() as i64;
        let stride = self.n().pow((self.dim() - 1 - axis) as u32) as i64;
        let k = m[axis] as i64 + step;
        match self.spec.boundary {
            Boundary::Periodic => {
                let kk = k.rem_euclid(n);
                let j = idx as i64 + (kk - m[axis] as i64) * stride;
                f[j as usize]
            }
            Boundary::Dirichlet => {
                // node 0 is the boundary at -L, node n the boundary at +L
                if k <= 0 || k >= n {
                    0.0
                } else {
                    let j = idx as i64 + step * stride;
                    f[j as usize]
                }
            }
        }
    }

    fn fd2_laplacian(&self, f: &[f64]) -> Vec<f64> {
        let h2 = self.spacing * self.spacing;
        let mut out = vec![0.0; self.len];
        for (idx, o) in out.iter_mut().enumerate() {
            if self.is_boundary_node(idx) {
                continue;
            }
            let m = self.multi_index(idx);
            let mut acc = 0.0;
            for a in 0..self.dim() {
                acc += self.neighbour(f, idx, &m, a, -1) + self.neighbour(f, idx, &m, a, 1)
                    - 2.0 * f[idx];
            }
            *o = acc / h2;
        }
        out
    }

    fn fd_derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (idx, o) in out.iter_mut().enumerate() {
            if self.is_boundary_node(idx) {
                continue;
            }
            let m = self.multi_index(idx);
            *o = (self.neighbour(f, idx, &m, axis, 1) - self.neighbour(f, idx, &m, axis, -1))
                / (2.0 * self.spacing);
        }
        out
    }
}

/// Neumaier summation. Energy differences along the line search are far
/// below the naive rounding error of a sum over every node.
pub(crate) fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in terms {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Correctly rounded sum (Shewchuk's adaptive partials, with the final
/// half-even correction of `math.fsum`).
pub(crate) fn exact_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    let mut special = 0.0;
    for mut x in terms {
        if !x.is_finite() {
            special += x;
            continue;
        }
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    if special != 0.0 || special.is_nan() {
        return special;
    }
    let Some(mut hi) = partials.pop() else { return 0.0 };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = 2.0 * lo;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

pub(crate) fn multi_index(mut idx: usize, n: usize, dim: usize) -> [usize; MAX_DIM] {
    let mut m = [0usize; MAX_DIM];
    for a in (0..dim).rev() {
        m[a] = idx % n;
        idx /= n;
    }
    m
}

/// Preconditioned conjugate gradients on the plain Euclidean inner product.
/// Returns `None` when the iteration budget runs out.
pub(crate) fn conjugate_gradient<A, P>(
    op: A,
    rhs: &[f64],
    precond: Option<P>,
    rel_tol: f64,
    max_iters: usize,
) -> Option<Vec<f64>>
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let dotp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dotp(rhs, rhs).sqrt();
    let mut x = vec![0.0; rhs.len()];
    if bnorm == 0.0 {
        return Some(x);
    }
    let mut r = rhs.to_vec();
    let apply_p = |r: &[f64]| match &precond {
        Some(p) => p(r),
        None => r.to_vec(),
    };
    let mut z = apply_p(&r);
    let mut p = z.clone();
    let mut rz = dotp(&r, &z);
    for _ in 0..max_iters {
        let ap = op(&p);
        let pap = dotp(&p, &ap);
        if pap <= 0.0 {
            return None;
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dotp(&r, &r).sqrt() <= rel_tol * bnorm {
            return Some(x);
        }
        z = apply_p(&r);
        let rz_new = dotp(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(spec: GridSpec) -> Grid {
        Grid::new(spec).unwrap()
    }

    #[test]
    fn uniform_weights_periodic_1d() {
        let g = grid(GridSpec::periodic(1, 1.0, 4));
        assert_eq!(g.spacing(), 0.5);
        assert!(g.weights().iter().all(|&w| w == 0.5));
        assert_eq!(g.weights().iter().sum::<f64>(), 2.0);
        assert_eq!(g.coord(0)[0], -1.0);
        assert_eq!(g.coord(3)[0], 0.5);
    }

    #[test]
    fn uniform_weights_periodic_2d() {
        let g = grid(GridSpec::periodic(2, 2.0, 8));
        assert_eq!(g.len(), 64);
        assert!(g.weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn rejects_bad_specs() {
        let e = Grid::new(GridSpec::periodic(1, 1.0, 5)).unwrap_err();
        assert!(e.to_string().contains("n must be even"), "{e}");
        assert!(Grid::new(GridSpec::periodic(1, 0.0, 8)).is_err());
        assert!(Grid::new(GridSpec::periodic(1, -1.0, 8)).is_err());
        let mut s = GridSpec::dirichlet(1, 1.0, 8);
        s.laplacian = LaplacianMode::Spectral;
        assert!(Grid::new(s).is_err());
        assert!(Grid::new(GridSpec::periodic(4, 1.0, 8)).is_err());
    }

    #[test]
    fn exact_sum_is_order_free() {
        let xs = [1e100, 1.0, -1e100, 1e-30, 3.0, -2.5e-16];
        let want = 4.0 + (1e-30 - 2.5e-16);
        assert_eq!(exact_sum(xs.iter().copied()), want);
        assert_eq!(exact_sum(xs.iter().rev().copied()), want);
        assert_eq!(exact_sum([0.1; 10].into_iter()), 1.0);
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
    }

    #[test]
    fn integrate_constants() {
        let g = grid(GridSpec::periodic(1, 1.0, 16));
        assert_eq!(g.integrate(&vec![1.0; 16]).unwrap(), 2.0);
        assert_eq!(g.integrate(&vec![8.0; 16]).unwrap(), 16.0);
        assert!(g.integrate(&vec![1.0; 15]).is_err());
    }

    #[test]
    fn integrate_band_limited_is_exact() {
        let g = grid(GridSpec::periodic(1, 1.0, 64));
        let f = g.sample(|x| (PI * x[0]).sin().powi(2));
        assert!((g.integrate(&f).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_eigenfunctions() {
        let g = grid(GridSpec::periodic(1, 1.0, 32));
        let f = g.sample(|x| (PI * x[0]).sin());
        let lap = g.apply_laplacian(&f).unwrap();
        for (l, v) in lap.iter().zip(&f) {
            assert!((-l - PI * PI * v).abs() < 1e-11);
        }
        let g2 = grid(GridSpec::periodic(2, 1.0, 16));
        let f2 = g2.sample(|x| (PI * x[0]).sin() * (PI * x[1]).sin());
        let lap2 = g2.apply_laplacian(&f2).unwrap();
        for (l, v) in lap2.iter().zip(&f2) {
            assert!((-l - 2.0 * PI * PI * v).abs() < 1e-11);
        }
        let c = g2.apply_laplacian(&vec![3.5; g2.len()]).unwrap();
        assert!(c.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn fd2_constants_and_quadratic() {
        let g = grid(GridSpec {
            laplacian: LaplacianMode::Fd2,
            ..GridSpec::periodic(1, 1.0, 16)
        });
        let c = g.apply_laplacian(&vec![2.0; 16]).unwrap();
        assert!(c.iter().all(|x| x.abs() < 1e-12));
        // interior second difference of x^2 is exact
        let gd = grid(GridSpec::dirichlet(1, 1.0, 16));
        let f = gd.sample(|x| x[0] * x[0]);
        let lap = gd.apply_laplacian(&f).unwrap();
        for idx in 2..15 {
            assert!((lap[idx] - 2.0).abs() < 1e-10);
        }
        assert_eq!(lap[0], 0.0);
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid(GridSpec::periodic(2, 1.0, 16));
        let f = g.sample(|x| (PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
        let dy = g.partial_derivative(&f, 1).unwrap();
        let want = g.sample(|x| -2.0 * PI * (PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        for (a, b) in dy.iter().zip(&want) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn shifted_solve_inverts_operator() {
        for spec in [
            GridSpec::periodic(2, 2.0, 16),
            GridSpec::dirichlet(2, 2.0, 16),
            GridSpec {
                laplacian: LaplacianMode::Fd2,
                ..GridSpec::periodic(1, 2.0, 32)
            },
        ] {
            let g = grid(spec);
            let mut rhs = g.sample(|x| (-(x.iter().map(|c| c * c).sum::<f64>())).exp() + 0.1 * x[0]);
            g.enforce_boundary(&mut rhs);
            let x = g.solve_shifted(&rhs, 0.7).unwrap();
            let lap = g.apply_laplacian(&x).unwrap();
            for i in 0..g.len() {
                assert!((0.7 * x[i] - lap[i] - rhs[i]).abs() < 1e-9, "{spec:?}");
            }
        }
    }

    #[test]
    fn packed_pair_matches_single_transforms() {
        let g = grid(GridSpec::periodic(2, 2.0, 16));
        let u = g.sample(|x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp());
        let v = g.sample(|x| (PI * x[0] / 2.0).sin() + x[1].cos());
        let (a, b) = g.neg_laplacian_pair(&u, &v);
        let (a1, b1) = (g.neg_laplacian(&u), g.neg_laplacian(&v));
        for i in 0..g.len() {
            assert!((a[i] - a1[i]).abs() < 1e-12 && (b[i] - b1[i]).abs() < 1e-12);
        }
        let (s, t) = g.solve_shifted_pair(&u, &v, 1.0).unwrap();
        let s1 = g.solve_shifted(&u, 1.0).unwrap();
        let t1 = g.solve_shifted(&v, 1.0).unwrap();
        for i in 0..g.len() {
            assert!((s[i] - s1[i]).abs() < 1e-13 && (t[i] - t1[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn translation_moves_whole_nodes() {
        let g = grid(GridSpec::periodic(1, 2.0, 8));
        assert_eq!(g.nodes_per_unit(), Some(2));
        let f: Vec<f64> = (0..8).map(|k| k as f64).collect();
        let s = g.translate_lattice(&f, &[1]).unwrap();
        assert_eq!(s, vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 0.0, 1.0]);
        assert_eq!(g.translate_lattice(&f, &[0]).unwrap(), f);
        let back = g.translate_lattice(&s, &[-1]).unwrap();
        assert_eq!(back, f);
        assert_eq!(g.l2_norm(&s).unwrap(), g.l2_norm(&f).unwrap());
    }

    #[test]
    fn translation_errors() {
        let g = grid(GridSpec::dirichlet(1, 2.0, 8));
        assert!(matches!(
            g.translate_lattice(&vec![0.0; 8], &[1]),
            Err(Error::NotPeriodic)
        ));
        let g = grid(GridSpec::periodic(1, 1.5, 8));
        assert!(matches!(
            g.translate_lattice(&vec![0.0; 8], &[1]),
            Err(Error::PeriodUnresolved(_))
        ));
    }
}

//! Graded radial mesh, complex fields on it, and the flux-form finite-volume
//! realization of `A_{b,V} = −∇·(|x|^b ∇) + V`.
//!
//! Cells are `[r_{i−1/2}, r_{i+1/2}]` with faces `r_max (i/N)^γ`. Fields live
//! at cell midpoints. The operator is assembled from shared face weights
//!
//! ```text
//! μ_i     = S_{n−1} ∫_cell r^{n−1} dr
//! ν_{i+½} = S_{n−1} r_{i+½}^{n−1+b} / (r_{i+1} − r_i)
//! ```
//!
//! so `μ_i A_{i,i+1} = μ_{i+1} A_{i+1,i}` holds exactly and `⟨A u, u⟩_μ` is a
//! sum of non-negative face terms. The inner face carries no flux; the outer
//! face imposes `u(r_max) = 0`.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::interp::MonotoneCubic;
use crate::linalg::{LinalgError, Tridiagonal};
use crate::potential::PotentialSpec;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("need at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("r_max = {0} must be positive and finite")]
    BadRadius(f64),
    #[error("grading exponent {0} must be >= 1")]
    BadGrading(f64),
    #[error("dimension n = {0} is below 3")]
    BadDimension(u32),
    #[error("face weight exponent n - 1 + b = {0} must exceed 1")]
    DegenerateFlux(f64),
    #[error("mesh is not strictly increasing near cell {0}")]
    NonMonotone(usize),
    #[error("field has {got} values but grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field entry {0} is not finite")]
    NonFiniteEntry(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("weighted norm is not finite (weight exponent {a}, order {q})")]
    NonFiniteNorm { a: f64, q: f64 },
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Surface area `2π^{n/2}/Γ(n/2)` of the unit sphere in `ℝⁿ`.
pub fn sphere_area(n: u32) -> f64 {
    use std::f64::consts::PI;
    // Γ(n/2) from Γ(1) = 1 or Γ(1/2) = √π
    let (mut gamma, mut x) = if n.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = f64::from(n) / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n: u32,
    pub b: f64,
    pub r_max: f64,
    pub grading: f64,
    /// Cell-centre radii.
    pub nodes: Vec<f64>,
    /// `N + 1` face radii, from 0 to `r_max`.
    pub faces: Vec<f64>,
    pub measure: Vec<f64>,
    /// `face_weights[i]` lives on the face between nodes `i` and `i+1`; the
    /// last entry is the Dirichlet face at `r_max`.
    pub face_weights: Vec<f64>,
}

impl RadialGrid {
    pub fn build(n: u32, b: f64, r_max: f64, cells: usize, grading: f64) -> Result<Arc<Self>, GridError> {
        if n < 3 {
            return Err(GridError::BadDimension(n));
        }
        if cells < 2 {
            return Err(GridError::TooFewCells(cells));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(GridError::BadRadius(r_max));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(GridError::BadGrading(grading));
        }
        let flux_exp = f64::from(n) - 1.0 + b;
        if !(flux_exp > 1.0) {
            return Err(GridError::DegenerateFlux(flux_exp));
        }
        let dim = f64::from(n);
        let area = sphere_area(n);
        let faces: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { r_max } else { r_max * (i as f64 / cells as f64).powf(grading) })
            .collect();
        for i in 0..cells {
            if !(faces[i + 1] > faces[i]) {
                return Err(GridError::NonMonotone(i));
            }
        }
        let nodes: Vec<f64> = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let measure: Vec<f64> = faces.windows(2).map(|w| area * (w[1].powf(dim) - w[0].powf(dim)) / dim).collect();
        let mut face_weights: Vec<f64> = (0..cells - 1)
            .map(|i| area * faces[i + 1].powf(flux_exp) / (nodes[i + 1] - nodes[i]))
            .collect();
        face_weights.push(area * r_max.powf(flux_exp) / (r_max - nodes[cells - 1]));
        Ok(Arc::new(Self { n, b, r_max, grading, nodes, faces, measure, face_weights }))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    /// Sample of `r^a` at the nodes.
    pub fn power(&self, a: f64) -> Vec<f64> {
        self.nodes.iter().map(|r| r.powf(a)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RadialField {
    pub values: Vec<Complex64>,
    pub grid: Arc<RadialGrid>,
}

impl PartialEq for RadialField {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && (Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid)
    }
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFiniteEntry(i));
        }
        Ok(Self { values, grid })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { values, grid }
    }

    pub fn from_real_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&r| Complex64::new(f(r), 0.0)).collect();
        Self { values, grid }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self { values, grid }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &RadialField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { values: self.values.iter().map(|v| v * factor).collect(), grid: self.grid.clone() }
    }

    pub fn scaled_real(&self, factor: f64) -> Self {
        self.scaled(Complex64::new(factor, 0.0))
    }

    pub fn add(&self, other: &RadialField) -> Result<Self, GridError> {
        if !self.same_grid(other) {
            return Err(GridError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { values, grid: self.grid.clone() })
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(Σ μ_i r_i^a |f_i|^q)^{1/q}`.
    pub fn weighted_norm(&self, a: f64, q: f64) -> Result<f64, GridError> {
        let g = &self.grid;
        let sum: f64 = g
            .measure
            .iter()
            .zip(&g.nodes)
            .zip(&self.values)
            .map(|((mu, r), v)| {
                let m = v.norm();
                if m == 0.0 {
                    0.0
                } else {
                    mu * r.powf(a) * m.powf(q)
                }
            })
            .sum();
        let norm = sum.powf(1.0 / q);
        if norm.is_finite() {
            Ok(norm)
        } else {
            Err(GridError::NonFiniteNorm { a, q })
        }
    }

    /// `M(u) = Σ μ_i |u_i|²`.
    pub fn mass(&self) -> f64 {
        self.grid.measure.iter().zip(&self.values).map(|(mu, v)| mu * v.norm_sqr()).sum()
    }

    /// Discrete `‖∇u‖²_{b,2}`: interior face differences plus the Dirichlet
    /// face at `r_max`.
    pub fn gradient_norm_sq(&self) -> f64 {
        let w = &self.grid.face_weights;
        let u = &self.values;
        let last = u.len() - 1;
        let interior: f64 = (0..last).map(|i| w[i] * (u[i + 1] - u[i]).norm_sqr()).sum();
        interior + w[last] * u[last].norm_sqr()
    }

    /// `μ`-weighted inner product `Σ μ_i u_i conj(v_i)`.
    pub fn inner(&self, other: &RadialField) -> Complex64 {
        self.grid
            .measure
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(mu, (a, b))| a * b.conj() * mu)
            .sum()
    }

    /// Interpolant through the real and imaginary parts with knots at the
    /// origin (zero slope), every node, and `r_max` (value zero).
    pub fn interpolants(&self) -> (MonotoneCubic, MonotoneCubic) {
        let g = &self.grid;
        let mut knots = Vec::with_capacity(g.len() + 2);
        knots.push(0.0);
        knots.extend_from_slice(&g.nodes);
        knots.push(g.r_max);
        let build = |part: fn(&Complex64) -> f64| {
            let mut vals = Vec::with_capacity(knots.len());
            vals.push(part(&self.values[0]));
            vals.extend(self.values.iter().map(part));
            vals.push(0.0);
            MonotoneCubic::new(knots.clone(), vals, Some(0.0))
        };
        (build(|z| z.re), build(|z| z.im))
    }

    /// Samples `amplitude · u(stretch · r)` back onto the nodes of `target`,
    /// zero beyond `r_max`.
    pub fn resample(&self, target: &Arc<RadialGrid>, stretch: f64, amplitude: f64) -> RadialField {
        let (re, im) = self.interpolants();
        let values = target
            .nodes
            .iter()
            .map(|&r| {
                let x = stretch * r;
                match (re.eval(x), im.eval(x)) {
                    (Some(a), Some(b)) => Complex64::new(a, b) * amplitude,
                    _ => Complex64::new(0.0, 0.0),
                }
            })
            .collect();
        RadialField { values, grid: target.clone() }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,re(u),im(u)")?;
        for (r, v) in self.grid.nodes.iter().zip(&self.values) {
            writeln!(out, "{:e},{:e},{:e}", r, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, grid: Arc<RadialGrid>) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(grid.len());
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(GridError::Csv { line: lineno, msg: format!("expected 3 columns, got {}", cols.len()) });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| GridError::Csv { line: lineno, msg: format!("{s:?}: {e}") })
            };
            let (r, re, im) = (parse(cols[0])?, parse(cols[1])?, parse(cols[2])?);
            let k = values.len();
            match grid.nodes.get(k) {
                Some(&node) if (node - r).abs() <= 1e-9 * node.max(1e-300) => {}
                Some(&node) => {
                    return Err(GridError::Csv { line: lineno, msg: format!("radius {r} does not match node {node}") })
                }
                None => return Err(GridError::LengthMismatch { expected: grid.len(), got: k + 1 }),
            }
            values.push(Complex64::new(re, im));
        }
        RadialField::new(grid, values)
    }

    pub fn load_csv(path: &Path, grid: Arc<RadialGrid>) -> Result<Self, GridError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), grid)
    }
}

/// Symmetric stiffness form of `A_{b,V}`: `μ A` as a tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: Arc<RadialGrid>,
    pub potential: Vec<f64>,
    /// Diagonal of `μA`.
    pub diag: Vec<f64>,
    /// Off-diagonal of `μA` (symmetric), `off[i]` couples `i` and `i+1`.
    pub off: Vec<f64>,
}

impl DiscreteOperator {
    pub fn assemble(grid: Arc<RadialGrid>, spec: &PotentialSpec) -> Self {
        let potential: Vec<f64> = grid.nodes.iter().map(|&r| spec.eval_unchecked(r).v).collect();
        Self::with_potential(grid, potential)
    }

    pub fn with_potential(grid: Arc<RadialGrid>, potential: Vec<f64>) -> Self {
        let n = grid.len();
        let w = &grid.face_weights;
        let diag = (0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { w[i - 1] };
                left + w[i] + grid.measure[i] * potential[i]
            })
            .collect();
        let off = w[..n - 1].iter().map(|x| -x).collect();
        Self { grid, potential, diag, off }
    }

    /// Entry `A_{i,j}` of the non-symmetric operator `μ^{-1}(μA)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let mu = self.grid.measure[i];
        if i == j {
            self.diag[i] / mu
        } else if j == i + 1 {
            self.off[i] / mu
        } else if i == j + 1 {
            self.off[j] / mu
        } else {
            0.0
        }
    }

    /// Flux form, so constants are annihilated exactly away from `r_max`.
    fn stiffness_apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = u.len();
        let w = &self.grid.face_weights;
        (0..n)
            .map(|i| {
                let mut s = u[i] * (self.grid.measure[i] * self.potential[i]);
                if i > 0 {
                    s += (u[i] - u[i - 1]) * w[i - 1];
                }
                s += if i + 1 < n { (u[i] - u[i + 1]) * w[i] } else { u[i] * w[i] };
                s
            })
            .collect()
    }

    pub fn apply(&self, f: &RadialField) -> Result<RadialField, GridError> {
        if !Arc::ptr_eq(&self.grid, &f.grid) && *self.grid != *f.grid {
            return Err(GridError::GridMismatch);
        }
        let mut out = self.stiffness_apply(&f.values);
        for (v, mu) in out.iter_mut().zip(&self.grid.measure) {
            *v /= mu;
        }
        Ok(RadialField { values: out, grid: self.grid.clone() })
    }

    /// `⟨A f, f⟩_μ`, real for a symmetric operator.
    pub fn quadratic_form(&self, f: &RadialField) -> f64 {
        self.stiffness_apply(&f.values).iter().zip(&f.values).map(|(a, b)| (a * b.conj()).re).sum()
    }

    /// Factorization of `μ(A + shift)`.
    pub fn shifted_factor(&self, shift: f64) -> Result<Tridiagonal<f64>, GridError> {
        let diag = self.diag.iter().zip(&self.grid.measure).map(|(d, mu)| d + shift * mu).collect();
        Ok(Tridiagonal::factor(self.off.clone(), diag, self.off.clone())?)
    }

    /// Factorization of `μ(1 + z A)` for complex `z`.
    pub fn complex_shifted_factor(&self, z: Complex64) -> Result<Tridiagonal<Complex64>, GridError> {
        let diag = self.diag.iter().zip(&self.grid.measure).map(|(d, mu)| z * d + mu).collect();
        let off: Vec<Complex64> = self.off.iter().map(|o| z * o).collect();
        Ok(Tridiagonal::factor(off.clone(), diag, off)?)
    }

    /// `μ(1 + z A) u`.
    pub fn complex_shifted_apply(&self, z: Complex64, u: &[Complex64]) -> Vec<Complex64> {
        let au = self.stiffness_apply(u);
        au.iter().zip(u.iter().zip(&self.grid.measure)).map(|(a, (v, mu))| z * a + v * mu).collect()
    }
}

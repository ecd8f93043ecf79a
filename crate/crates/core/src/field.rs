//! Cell-centred scalar and vector fields on the unit square.
//!
//! A grid of `m` columns and `n` rows has cell `(i, j)` (zero-based) centred
//! at `((i + 1) h_x, (j + 1) h_y)` with `h_x = 1/m`, `h_y = 1/n`. Values are
//! stored row-major (`j * m + i`). Ghost values outside the grid are never
//! stored; they are produced on access according to a [`BoundaryKind`].
//!
//! The difference operators are the plain central stencils
//!
//! ```text
//! δx v(i,j)  = (v(i+1,j) - v(i-1,j)) / 2h_x
//! δxx v(i,j) = (v(i-1,j) - 2 v(i,j) + v(i+1,j)) / h_x²
//! ```
//!
//! and their `y` counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size of the cell-centred grid covering `[0, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    m: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m < 3 || n < 3 {
            return Err(Error::InvalidGrid { m, n });
        }
        Ok(Self { m, n })
    }

    /// Number of columns (cells along `x`).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of rows (cells along `y`).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.m && j < self.n);
        j * self.m + i
    }

    /// Centre of cell `(i, j)`; also valid for ghost indices.
    #[inline]
    pub fn center(&self, i: isize, j: isize) -> [f64; 2] {
        [
            (i + 1) as f64 / self.m as f64,
            (j + 1) as f64 / self.n as f64,
        ]
    }

    /// True for cells on the outermost ring.
    #[inline]
    pub fn on_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.m || j + 1 == self.n
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> {
        let (m, n) = (self.m, self.n);
        (0..n).flat_map(move |j| (0..m).map(move |i| (i, j)))
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch {
                expected: (self.m, self.n),
                found: (other.m, other.n),
            });
        }
        Ok(())
    }
}

/// How a stencil reads cells outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// Ghost cells copy the adjacent interior value, applied axis by axis.
    NeumannMirror,
    /// Ghost cells read as zero.
    ZeroGhost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for a {}x{} grid, got {}",
                spec.len(),
                spec.m,
                spec.n,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                i: k % spec.m,
                j: k / spec.m,
            });
        }
        Ok(Self { spec, values })
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
        }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    /// Evaluates `f(i, j)` on every cell.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let values = spec.cells().map(|(i, j)| f(i, j)).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.spec.index(i, j);
        self.values[k] = v;
    }

    /// Value at a possibly out-of-grid index.
    #[inline]
    pub fn ghost(&self, i: isize, j: isize, bc: BoundaryKind) -> f64 {
        let (m, n) = (self.spec.m as isize, self.spec.n as isize);
        match bc {
            BoundaryKind::NeumannMirror => {
                let ii = i.clamp(0, m - 1) as usize;
                let jj = j.clamp(0, n - 1) as usize;
                self.get(ii, jj)
            }
            BoundaryKind::ZeroGhost => {
                if i < 0 || j < 0 || i >= m || j >= n {
                    0.0
                } else {
                    self.get(i as usize, j as usize)
                }
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        self.spec.check_same(&other.spec)?;
        Ok(Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// A pair of scalar fields `(u¹, u²)` on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    c1: ScalarField,
    c2: ScalarField,
}

impl VectorField {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        c1.spec.check_same(&c2.spec)?;
        Ok(Self { c1, c2 })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            c1: ScalarField::zeros(spec),
            c2: ScalarField::zeros(spec),
        }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> Self {
        let mut c1 = Vec::with_capacity(spec.len());
        let mut c2 = Vec::with_capacity(spec.len());
        for (i, j) in spec.cells() {
            let [a, b] = f(i, j);
            c1.push(a);
            c2.push(b);
        }
        Self {
            c1: ScalarField { spec, values: c1 },
            c2: ScalarField { spec, values: c2 },
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.c1.spec
    }

    pub fn comp1(&self) -> &ScalarField {
        &self.c1
    }

    pub fn comp2(&self) -> &ScalarField {
        &self.c2
    }

    pub fn comp1_mut(&mut self) -> &mut ScalarField {
        &mut self.c1
    }

    pub fn comp2_mut(&mut self) -> &mut ScalarField {
        &mut self.c2
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        (self.c1, self.c2)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        [self.c1.get(i, j), self.c2.get(i, j)]
    }

    pub fn axpby(&self, a: f64, other: &VectorField, b: f64) -> Result<Self> {
        Ok(Self {
            c1: self.c1.axpby(a, &other.c1, b)?,
            c2: self.c2.axpby(a, &other.c2, b)?,
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            c1: self.c1.map(|v| a * v),
            c2: self.c2.map(|v| a * v),
        }
    }

    pub fn dot(&self, other: &VectorField) -> f64 {
        self.c1.dot(&other.c1) + self.c2.dot(&other.c2)
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c1
            .values
            .iter()
            .chain(&self.c2.values)
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Copy with the outermost ring of cells set to zero, the discrete form of
    /// `u = 0` on the boundary (half-index zeros together with mirrored ghosts).
    pub fn zero_boundary(&self) -> Self {
        let spec = self.spec();
        let mut out = self.clone();
        for (i, j) in spec.cells() {
            if spec.on_boundary(i, j) {
                out.c1.set(i, j, 0.0);
                out.c2.set(i, j, 0.0);
            }
        }
        out
    }

    pub fn respects_increment_bc(&self) -> bool {
        let spec = self.spec();
        spec.cells()
            .filter(|&(i, j)| spec.on_boundary(i, j))
            .all(|(i, j)| self.c1.get(i, j) == 0.0 && self.c2.get(i, j) == 0.0)
    }
}

/// Grid positions `(φ¹, φ²)` of every cell centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    spec: GridSpec,
    positions: Vec<[f64; 2]>,
}

impl Deformation {
    pub fn new(spec: GridSpec, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != spec.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} positions, got {}",
                spec.len(),
                positions.len()
            )));
        }
        if let Some(k) = positions
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(Error::NonFinite {
                i: k % spec.m,
                j: k / spec.m,
            });
        }
        Ok(Self { spec, positions })
    }

    pub fn identity(spec: GridSpec) -> Self {
        let positions = spec
            .cells()
            .map(|(i, j)| spec.center(i as isize, j as isize))
            .collect();
        Self { spec, positions }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> Self {
        let positions = spec.cells().map(|(i, j)| f(i, j)).collect();
        Self { spec, positions }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        self.positions[self.spec.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, p: [f64; 2]) {
        let k = self.spec.index(i, j);
        self.positions[k] = p;
    }

    /// Position at a possibly out-of-grid index. Cells outside the grid are
    /// pinned at their identity location.
    #[inline]
    pub fn ghost(&self, i: isize, j: isize) -> [f64; 2] {
        let (m, n) = (self.spec.m as isize, self.spec.n as isize);
        if i < 0 || j < 0 || i >= m || j >= n {
            self.spec.center(i, j)
        } else {
            self.get(i as usize, j as usize)
        }
    }

    /// `self + a * u`, cell by cell.
    pub fn advect(&self, u: &VectorField, a: f64) -> Result<Self> {
        self.spec.check_same(&u.spec())?;
        let positions = self
            .positions
            .iter()
            .zip(u.c1.values.iter().zip(&u.c2.values))
            .map(|(p, (u1, u2))| [p[0] + a * u1, p[1] + a * u2])
            .collect();
        Ok(Self {
            spec: self.spec,
            positions,
        })
    }

    /// `self + α ⊙ u` with a per-cell scale.
    pub fn advect_scaled(&self, u: &VectorField, alpha: &ScalarField) -> Result<Self> {
        self.spec.check_same(&u.spec())?;
        self.spec.check_same(&alpha.spec)?;
        let positions = self
            .positions
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let a = alpha.values[k];
                [p[0] + a * u.c1.values[k], p[1] + a * u.c2.values[k]]
            })
            .collect();
        Ok(Self {
            spec: self.spec,
            positions,
        })
    }

    /// `φ(x) - x`.
    pub fn displacement(&self) -> VectorField {
        let spec = self.spec;
        VectorField::from_fn(spec, |i, j| {
            let p = self.get(i, j);
            let c = spec.center(i as isize, j as isize);
            [p[0] - c[0], p[1] - c[1]]
        })
    }

    /// Largest coordinate difference to another deformation.
    pub fn max_distance(&self, other: &Deformation) -> f64 {
        self.positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn grad(v: &ScalarField, bc: BoundaryKind) -> VectorField {
    let spec = v.spec;
    let (sx, sy) = (0.5 / spec.hx(), 0.5 / spec.hy());
    VectorField::from_fn(spec, |i, j| {
        let (i, j) = (i as isize, j as isize);
        [
            (v.ghost(i + 1, j, bc) - v.ghost(i - 1, j, bc)) * sx,
            (v.ghost(i, j + 1, bc) - v.ghost(i, j - 1, bc)) * sy,
        ]
    })
}

/// Central-difference divergence with the increment ghosts (mirrored).
pub fn div(u: &VectorField) -> ScalarField {
    let spec = u.spec();
    let (sx, sy) = (0.5 / spec.hx(), 0.5 / spec.hy());
    let bc = BoundaryKind::NeumannMirror;
    ScalarField::from_fn(spec, |i, j| {
        let (i, j) = (i as isize, j as isize);
        (u.c1.ghost(i + 1, j, bc) - u.c1.ghost(i - 1, j, bc)) * sx
            + (u.c2.ghost(i, j + 1, bc) - u.c2.ghost(i, j - 1, bc)) * sy
    })
}

fn laplacian_scalar(v: &ScalarField) -> ScalarField {
    let spec = v.spec;
    let (ax, ay) = (1.0 / (spec.hx() * spec.hx()), 1.0 / (spec.hy() * spec.hy()));
    let bc = BoundaryKind::NeumannMirror;
    ScalarField::from_fn(spec, |i, j| {
        let c = v.get(i, j);
        let (i, j) = (i as isize, j as isize);
        (v.ghost(i - 1, j, bc) - 2.0 * c + v.ghost(i + 1, j, bc)) * ax
            + (v.ghost(i, j - 1, bc) - 2.0 * c + v.ghost(i, j + 1, bc)) * ay
    })
}

/// Five-point Laplacian of each component with the increment ghosts.
pub fn laplacian(u: &VectorField) -> VectorField {
    VectorField {
        c1: laplacian_scalar(&u.c1),
        c2: laplacian_scalar(&u.c2),
    }
}

/// Read-only view exposing the ghost values of an increment field:
/// `u(-1, j) = u(0, j)`, `u(m, j) = u(m-1, j)` and likewise along `y`.
#[derive(Debug, Clone, Copy)]
pub struct IncrementGhosts<'a> {
    u: &'a VectorField,
}

pub fn apply_increment_bc(u: &VectorField) -> IncrementGhosts<'_> {
    IncrementGhosts { u }
}

impl IncrementGhosts<'_> {
    /// Component `l` (1 or 2) at a possibly out-of-grid index.
    pub fn ghost(&self, l: usize, i: isize, j: isize) -> f64 {
        let c = if l == 1 { &self.u.c1 } else { &self.u.c2 };
        c.ghost(i, j, BoundaryKind::NeumannMirror)
    }

    /// Value at the half index between a boundary cell and its ghost.
    /// Only meaningful (zero) for fields that respect the increment BC.
    pub fn half_index(&self, l: usize, i: isize, j: isize, di: isize, dj: isize) -> f64 {
        0.5 * (self.ghost(l, i, j) + self.ghost(l, i + di, j + dj))
    }

    pub fn field(&self) -> &VectorField {
        self.u
    }
}

//! Bicubic resampling of images at deformed points.
//!
//! The kernel is Catmull-Rom. A point `(x, y)` maps to the continuous index
//! `ξ = x m - 1` (zero-based), clamped to `[0, m-1]`, and the 4×4 stencil is
//! extended past the edge by half-sample mirroring.

use std::ops::Deref;

use crate::error::Result;
use crate::field::{grad, BoundaryKind, Deformation, GridSpec, ScalarField, VectorField};

/// Gray-level image with intensities normalised to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    field: ScalarField,
}

impl Image {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        Ok(Self {
            field: ScalarField::new(spec, values)?,
        })
    }

    pub fn from_field(field: ScalarField) -> Self {
        Self { field }
    }

    pub fn from_fn(spec: GridSpec, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            field: ScalarField::from_fn(spec, f),
        }
    }

    pub fn as_field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }
}

impl Deref for Image {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.field
    }
}

impl From<ScalarField> for Image {
    fn from(field: ScalarField) -> Self {
        Self { field }
    }
}

#[inline]
fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

#[inline]
fn mirror(k: isize, len: usize) -> usize {
    let len = len as isize;
    let k = if k < 0 { -k - 1 } else { k };
    let k = if k >= len { 2 * len - k - 1 } else { k };
    k.clamp(0, len - 1) as usize
}

/// Base index and offset for coordinate `x` on an axis with `len` cells.
#[inline]
fn locate(x: f64, len: usize) -> (isize, f64) {
    let mut xi = (x * len as f64 - 1.0).clamp(0.0, (len - 1) as f64);
    let r = xi.round();
    if (xi - r).abs() < 1e-9 {
        xi = r;
    }
    let base = (xi.floor() as isize).min(len as isize - 2);
    (base, xi - base as f64)
}

/// Catmull-Rom interpolation of `field` at one point of the unit square.
pub fn sample_point(field: &ScalarField, p: [f64; 2]) -> f64 {
    let spec = field.spec();
    let (m, n) = (spec.m(), spec.n());
    let (bi, tx) = locate(p[0], m);
    let (bj, ty) = locate(p[1], n);
    let wx = weights(tx);
    let wy = weights(ty);
    let vals = field.values();
    let cols = [
        mirror(bi - 1, m),
        mirror(bi, m),
        mirror(bi + 1, m),
        mirror(bi + 2, m),
    ];
    let mut acc = 0.0;
    for (b, wyb) in wy.iter().enumerate() {
        if *wyb == 0.0 {
            continue;
        }
        let row = mirror(bj - 1 + b as isize, n) * m;
        let mut s = 0.0;
        for (a, wxa) in wx.iter().enumerate() {
            s += wxa * vals[row + cols[a]];
        }
        acc += wyb * s;
    }
    acc
}

/// Samples a scalar field at every position of `pts`.
pub fn sample_field(field: &ScalarField, pts: &Deformation) -> ScalarField {
    let values = pts
        .positions()
        .iter()
        .map(|&p| sample_point(field, p))
        .collect();
    ScalarField::new(pts.spec(), values).expect("sampled values are finite")
}

pub fn sample_bicubic(img: &Image, pts: &Deformation) -> ScalarField {
    sample_field(&img.field, pts)
}

/// Central-difference gradient with the mirrored (zero-flux) boundary.
pub fn image_gradient(img: &Image) -> VectorField {
    grad(&img.field, BoundaryKind::NeumannMirror)
}

/// Samples each component of a vector field at `pts`.
pub fn sample_vector(u: &VectorField, pts: &Deformation) -> VectorField {
    VectorField::new(sample_field(u.comp1(), pts), sample_field(u.comp2(), pts))
        .expect("components share a spec")
}

/// Image gradient on the grid, interpolated at `pts`.
pub fn gradient_at(img: &Image, pts: &Deformation) -> VectorField {
    sample_vector(&image_gradient(img), pts)
}

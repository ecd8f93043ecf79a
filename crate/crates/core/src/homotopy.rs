//! Composite functions `h(ω, t)` joining the initial mass `g₀` to the target
//! mass `g`, and the Gaussian mass estimate `g(ω)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Deformation, GridSpec, ScalarField};

const MASS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum CompositeKind {
    /// `(1 - t) g₀ + t g`
    #[default]
    P1,
    /// `g₀ exp(t ln(g / g₀))`
    P2,
    /// `(1 - t) det ∇φ + t g`
    P3,
    /// `g`
    P4,
}

impl CompositeKind {
    pub const ALL: [CompositeKind; 4] = [Self::P1, Self::P2, Self::P3, Self::P4];

    /// Value of the composite function for a single cell.
    #[inline]
    pub fn eval(self, t: f64, g0: f64, g: f64, det: f64) -> f64 {
        match self {
            Self::P1 => (1.0 - t) * g0 + t * g,
            Self::P2 => g0 * (t * (g / g0).ln()).exp(),
            Self::P3 => (1.0 - t) * det + t * g,
            Self::P4 => g,
        }
    }

    /// Explicit partial derivative in `t` for a single cell.
    #[inline]
    pub fn eval_dt(self, g0: f64, g: f64, h: f64, det: f64) -> f64 {
        match self {
            Self::P1 => g - g0,
            Self::P2 => h * (g / g0).ln(),
            Self::P3 => g - det,
            Self::P4 => 0.0,
        }
    }
}

impl fmt::Display for CompositeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::P1 => "P1",
            Self::P2 => "P2",
            Self::P3 => "P3",
            Self::P4 => "P4",
        };
        f.write_str(s)
    }
}

impl FromStr for CompositeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(Self::P1),
            "P2" => Ok(Self::P2),
            "P3" => Ok(Self::P3),
            "P4" => Ok(Self::P4),
            other => Err(Error::InvalidParameter(format!(
                "unknown composite function {other:?} (expected P1, P2, P3 or P4)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassParams {
    pub sigma_eps: f64,
    pub g0: ScalarField,
    /// Truncation radius of the Gaussian sum, in multiples of `sigma_eps`.
    pub window_radius: f64,
}

impl MassParams {
    pub fn new(sigma_eps: f64, g0: ScalarField, window_radius: f64) -> Result<Self> {
        if !(sigma_eps > 0.0) || !sigma_eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_eps must be positive, got {sigma_eps}"
            )));
        }
        if !(window_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window radius must be positive, got {window_radius}"
            )));
        }
        if g0.min() <= 0.0 {
            return Err(Error::InvalidParameter(
                "initial mass g0 must be positive everywhere".into(),
            ));
        }
        Ok(Self {
            sigma_eps,
            g0,
            window_radius,
        })
    }

    /// Unit initial mass and a 4σ window.
    pub fn uniform(spec: GridSpec, sigma_eps: f64) -> Result<Self> {
        Self::new(sigma_eps, ScalarField::constant(spec, 1.0), 4.0)
    }

    /// Initial mass taken from the estimate on the undeformed grid, so that
    /// the identity is an exact fixed point of the mass constraint.
    pub fn grid_calibrated(spec: GridSpec, sigma_eps: f64) -> Result<Self> {
        let mut p = Self::uniform(spec, sigma_eps)?;
        p.g0 = approx_mass(&Deformation::identity(spec), &p);
        Ok(p)
    }
}

/// Truncated Gaussian estimate of the unit mass density around one point.
pub fn mass_at(spec: GridSpec, p: [f64; 2], sigma: f64, window_radius: f64) -> f64 {
    let (m, n) = (spec.m(), spec.n());
    let (hx, hy) = (spec.hx(), spec.hy());
    let r = window_radius * sigma;
    let r2 = r * r;
    let inv = 1.0 / (2.0 * sigma * sigma);
    // centre of cell k sits at (k + 1) h
    let range = |c: f64, len: usize, h: f64| -> Option<(usize, usize)> {
        let lo = ((c - r) / h - 1.0).ceil().max(0.0);
        let hi = ((c + r) / h - 1.0).floor().min(len as f64 - 1.0);
        (lo <= hi).then_some((lo as usize, hi as usize))
    };
    let (Some((i0, i1)), Some((j0, j1))) = (range(p[0], m, hx), range(p[1], n, hy)) else {
        return MASS_FLOOR;
    };
    let mut sum = 0.0;
    for j in j0..=j1 {
        let dy = (j + 1) as f64 * hy - p[1];
        let dy2 = dy * dy;
        if dy2 > r2 {
            continue;
        }
        let ey = (-dy2 * inv).exp();
        let mut row = 0.0;
        for i in i0..=i1 {
            let dx = (i + 1) as f64 * hx - p[0];
            let d2 = dx * dx + dy2;
            if d2 <= r2 {
                row += (-dx * dx * inv).exp();
            }
        }
        sum += ey * row;
    }
    let value = sum * hx * hy / (2.0 * std::f64::consts::PI * sigma * sigma);
    value.max(MASS_FLOOR)
}

/// `g(ω_ij)` for every cell, with `g(y) ≡ 1` on the grid centres.
pub fn approx_mass(omega: &Deformation, p: &MassParams) -> ScalarField {
    let spec = omega.spec();
    let values = omega
        .positions()
        .iter()
        .map(|&q| mass_at(spec, q, p.sigma_eps, p.window_radius))
        .collect();
    ScalarField::new(spec, values).expect("mass values are finite")
}

fn check_positive(h: &ScalarField) -> Result<()> {
    let spec = h.spec();
    if let Some(k) = h.values().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateHomotopy {
            i: k % spec.m(),
            j: k / spec.m(),
            value: h.values()[k],
        });
    }
    Ok(())
}

fn check_specs(fields: &[&ScalarField]) -> Result<()> {
    let spec = fields[0].spec();
    for other in &fields[1..] {
        if other.spec() != spec {
            return Err(Error::ShapeMismatch {
                expected: (spec.m(), spec.n()),
                found: (other.spec().m(), other.spec().n()),
            });
        }
    }
    Ok(())
}

fn zip3(
    a: &ScalarField,
    b: &ScalarField,
    c: &ScalarField,
    f: impl Fn(f64, f64, f64) -> f64,
) -> Result<ScalarField> {
    check_specs(&[a, b, c])?;
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .zip(c.values())
        .map(|((&x, &y), &z)| f(x, y, z))
        .collect();
    ScalarField::new(a.spec(), values)
}

pub fn composite_h(
    kind: CompositeKind,
    t: f64,
    g0: &ScalarField,
    g: &ScalarField,
    det_j: &ScalarField,
) -> Result<ScalarField> {
    let h = zip3(g0, g, det_j, |a, b, d| kind.eval(t, a, b, d))?;
    check_positive(&h)?;
    Ok(h)
}

pub fn dh_dt(
    kind: CompositeKind,
    g0: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    det_j: &ScalarField,
) -> Result<ScalarField> {
    check_specs(&[g0, g, h, det_j])?;
    let values = (0..g0.values().len())
        .map(|k| {
            kind.eval_dt(
                g0.values()[k],
                g.values()[k],
                h.values()[k],
                det_j.values()[k],
            )
        })
        .collect();
    ScalarField::new(g0.spec(), values)
}

/// Step scaling `α = Δt / h`.
pub fn alpha(dt: f64, h: &ScalarField) -> Result<ScalarField> {
    check_positive(h)?;
    Ok(h.map(|v| dt / v))
}

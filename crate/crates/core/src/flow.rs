//! RK4 transport of the deformation under `dω/dt = u(ω) / h(ω, t)`.

use crate::error::{Error, Result};
use crate::field::{Deformation, ScalarField, VectorField};
use crate::homotopy::{approx_mass, composite_h, CompositeKind, MassParams};
use crate::sampler::sample_vector;

#[derive(Debug, Clone)]
pub struct VelocityContext {
    pub u: VectorField,
    /// Composite values on the current grid; used directly when `freeze_h` is set.
    pub h: ScalarField,
    pub t: f64,
    pub kind: CompositeKind,
    pub mass: MassParams,
    /// Jacobian determinant of the current grid, read only by `P3`.
    pub det: ScalarField,
    pub freeze_h: bool,
}

impl VelocityContext {
    /// Context with `h` frozen at the given field.
    pub fn frozen(u: VectorField, h: ScalarField, mass: MassParams) -> Self {
        let spec = u.spec();
        Self {
            u,
            h,
            t: 0.0,
            kind: CompositeKind::P1,
            mass,
            det: ScalarField::constant(spec, 1.0),
            freeze_h: true,
        }
    }
}

pub fn velocity_at(ctx: &VelocityContext, pts: &Deformation, t_query: f64) -> Result<VectorField> {
    let uv = sample_vector(&ctx.u, pts);
    let h = if ctx.freeze_h {
        ctx.h.clone()
    } else {
        let g = approx_mass(pts, &ctx.mass);
        composite_h(ctx.kind, t_query, &ctx.mass.g0, &g, &ctx.det)?
    };
    if let Some(k) = h.values().iter().position(|&v| !(v > 0.0)) {
        let m = h.spec().m();
        return Err(Error::DegenerateHomotopy {
            i: k % m,
            j: k / m,
            value: h.values()[k],
        });
    }
    let spec = pts.spec();
    Ok(VectorField::from_fn(spec, |i, j| {
        let v = uv.get(i, j);
        let hv = h.get(i, j);
        [v[0] / hv, v[1] / hv]
    }))
}

pub fn rk4_step(omega: &Deformation, ctx: &VelocityContext, dt: f64) -> Result<Deformation> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let t = ctx.t;
    let k1 = velocity_at(ctx, omega, t)?;
    let k2 = velocity_at(ctx, &omega.advect(&k1, 0.5 * dt)?, t + 0.5 * dt)?;
    let k3 = velocity_at(ctx, &omega.advect(&k2, 0.5 * dt)?, t + 0.5 * dt)?;
    let k4 = velocity_at(ctx, &omega.advect(&k3, dt)?, t + dt)?;
    let spec = omega.spec();
    let w = dt / 6.0;
    let positions = spec
        .cells()
        .map(|(i, j)| {
            let p = omega.get(i, j);
            let (a, b, c, d) = (k1.get(i, j), k2.get(i, j), k3.get(i, j), k4.get(i, j));
            [
                p[0] + w * (a[0] + 2.0 * b[0] + 2.0 * c[0] + d[0]),
                p[1] + w * (a[1] + 2.0 * b[1] + 2.0 * c[1] + d[1]),
            ]
        })
        .collect();
    Deformation::new(spec, positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    fn ctx_with(u: VectorField, h: f64) -> VelocityContext {
        let spec = u.spec();
        VelocityContext::frozen(
            u,
            ScalarField::constant(spec, h),
            MassParams::uniform(spec, 0.01).unwrap(),
        )
    }

    #[test]
    fn zero_increment_does_not_move() {
        let spec = GridSpec::new(8, 8).unwrap();
        let ctx = ctx_with(VectorField::zeros(spec), 1.0);
        let id = Deformation::identity(spec);
        assert_eq!(rk4_step(&id, &ctx, 0.1).unwrap(), id);
        assert_eq!(velocity_at(&ctx, &id, 0.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn unit_h_at_identity_reproduces_u() {
        let spec = GridSpec::new(9, 6).unwrap();
        let u = VectorField::from_fn(spec, |i, j| [(i * j) as f64 * 0.01, i as f64 * 0.02]);
        let ctx = ctx_with(u.clone(), 1.0);
        let v = velocity_at(&ctx, &Deformation::identity(spec), 0.4).unwrap();
        assert_eq!(v, u);
    }

    #[test]
    fn reconstructed_unit_mass_leaves_interior_velocity_unscaled() {
        let spec = GridSpec::new(64, 64).unwrap();
        let u = VectorField::from_fn(spec, |i, j| [(i + j) as f64 * 0.001, 0.01]);
        let mut ctx = ctx_with(u.clone(), 1.0);
        ctx.freeze_h = false;
        let v = velocity_at(&ctx, &Deformation::identity(spec), 0.4).unwrap();
        for (i, j) in spec.cells() {
            if (8..56).contains(&i) && (8..56).contains(&j) {
                let (a, b) = (v.get(i, j), u.get(i, j));
                assert!((a[0] - b[0]).abs() < 2e-3 * b[0].abs().max(1e-3));
                assert!((a[1] - b[1]).abs() < 2e-5);
            }
        }
    }

    #[test]
    fn constant_increment_over_two() {
        let spec = GridSpec::new(10, 10).unwrap();
        let u = VectorField::from_fn(spec, |_, _| [0.3, -0.1]);
        let ctx = ctx_with(u, 2.0);
        let pts =
            Deformation::from_fn(spec, |i, j| [0.3 + 0.04 * i as f64, 0.25 + 0.05 * j as f64]);
        let v = velocity_at(&ctx, &pts, 0.0).unwrap();
        for (i, j) in spec.cells() {
            let got = v.get(i, j);
            assert!((got[0] - 0.15).abs() < 1e-14 && (got[1] + 0.05).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_velocity_is_integrated_exactly() {
        let spec = GridSpec::new(10, 10).unwrap();
        let u = VectorField::from_fn(spec, |_, _| [0.2, 0.1]);
        let ctx = ctx_with(u, 1.0);
        let id = Deformation::identity(spec);
        let out = rk4_step(&id, &ctx, 0.05).unwrap();
        for (i, j) in spec.cells() {
            let (a, b) = (id.get(i, j), out.get(i, j));
            assert!((b[0] - a[0] - 0.01).abs() < 1e-15);
            assert!((b[1] - a[1] - 0.005).abs() < 1e-15);
        }
    }

    #[test]
    fn non_positive_step_is_rejected() {
        let spec = GridSpec::new(4, 4).unwrap();
        let ctx = ctx_with(VectorField::zeros(spec), 1.0);
        assert!(rk4_step(&Deformation::identity(spec), &ctx, 0.0).is_err());
    }
}

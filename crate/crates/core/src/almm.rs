//! Inner augmented-Lagrangian iteration at a fixed time.
//!
//! Each sweep assembles the right-hand side `r` at the current iterate,
//! solves the elliptic system
//!
//! ```text
//! L u = -Δu - (β/τ) ∇(div u) + u/γ = r
//! ```
//!
//! for the interior cells (the outer ring of `u` is pinned at zero), and
//! updates the multiplier `λ ← λ - β (div u + ∂h/∂t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{div, grad, BoundaryKind, Deformation, GridSpec, ScalarField, VectorField};
use crate::sampler::{gradient_at, sample_bicubic, Image};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlmmParams {
    pub tau: f64,
    pub beta: f64,
    pub gamma: f64,
    pub max_inner: usize,
    pub tol: f64,
    pub cg_tol: f64,
    pub cg_max: usize,
}

impl Default for AlmmParams {
    fn default() -> Self {
        Self {
            tau: 5.0,
            beta: 0.01,
            gamma: 0.01,
            max_inner: 5,
            tol: 1e-6,
            cg_tol: 1e-8,
            cg_max: 500,
        }
    }
}

impl AlmmParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau", self.tau),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("tol", self.tol),
            ("cg_tol", self.cg_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_inner == 0 || self.cg_max == 0 {
            return Err(Error::InvalidParameter(
                "max_inner and cg_max must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerState {
    pub u: VectorField,
    pub lambda: ScalarField,
    pub u0: VectorField,
}

impl InnerState {
    pub fn new(u: VectorField, lambda: ScalarField) -> Self {
        Self {
            u0: u.clone(),
            u,
            lambda,
        }
    }
}

/// Result of one call to [`inner_loop`].
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub state: InnerState,
    pub iterations: usize,
    /// `‖div u + ∂h/∂t‖₂` after every sweep.
    pub constraint_residuals: Vec<f64>,
}

fn shape_error(a: GridSpec, b: GridSpec) -> Error {
    Error::ShapeMismatch {
        expected: (a.m(), a.n()),
        found: (b.m(), b.n()),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn residual_r(
    t_warped: &ScalarField,
    r_img: &Image,
    grad_t_warped: &VectorField,
    lambda: &ScalarField,
    dhdt: &ScalarField,
    u_prev: &VectorField,
    alpha: &ScalarField,
    p: &AlmmParams,
) -> Result<VectorField> {
    let spec = t_warped.spec();
    for other in [
        r_img.spec(),
        grad_t_warped.spec(),
        lambda.spec(),
        dhdt.spec(),
        u_prev.spec(),
        alpha.spec(),
    ] {
        if other != spec {
            return Err(shape_error(spec, other));
        }
    }
    let potential = lambda.axpby(1.0 / p.beta, dhdt, -1.0)?;
    let gp = grad(&potential, BoundaryKind::NeumannMirror);
    let c = p.beta / p.tau;
    let inv_gamma = 1.0 / p.gamma;
    Ok(VectorField::from_fn(spec, |i, j| {
        let k = spec.index(i, j);
        let data = alpha.values()[k] / p.tau * (t_warped.values()[k] - r_img.values()[k]);
        let gt = grad_t_warped.get(i, j);
        let g = gp.get(i, j);
        let up = u_prev.get(i, j);
        [
            -data * gt[0] - c * g[0] + inv_gamma * up[0],
            -data * gt[1] - c * g[1] + inv_gamma * up[1],
        ]
    }))
}

/// Matrix-free form of `L` on a flat `[u¹ | u²]` vector.
struct Operator {
    m: usize,
    n: usize,
    ax: f64,
    ay: f64,
    dx: f64,
    dy: f64,
    c: f64,
    inv_gamma: f64,
}

impl Operator {
    fn new(spec: GridSpec, p: &AlmmParams) -> Self {
        let (hx, hy) = (spec.hx(), spec.hy());
        Self {
            m: spec.m(),
            n: spec.n(),
            ax: 1.0 / (hx * hx),
            ay: 1.0 / (hy * hy),
            dx: 0.5 / hx,
            dy: 0.5 / hy,
            c: p.beta / p.tau,
            inv_gamma: 1.0 / p.gamma,
        }
    }

    fn diagonal(&self) -> [f64; 2] {
        let base = 2.0 * self.ax + 2.0 * self.ay + self.inv_gamma;
        [
            base + self.c * 2.0 * self.dx * self.dx,
            base + self.c * 2.0 * self.dy * self.dy,
        ]
    }

    /// `out = L x`; boundary entries of `out` are zero and those of `x` are
    /// read as stored, with mirrored ghosts beyond the grid.
    fn apply(&self, x: &[f64], out: &mut [f64], divbuf: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        let mn = m * n;
        let (u1, u2) = x.split_at(mn);
        for j in 0..n {
            let jm = j.saturating_sub(1);
            let jp = (j + 1).min(n - 1);
            for i in 0..m {
                let im = i.saturating_sub(1);
                let ip = (i + 1).min(m - 1);
                divbuf[j * m + i] = (u1[j * m + ip] - u1[j * m + im]) * self.dx
                    + (u2[jp * m + i] - u2[jm * m + i]) * self.dy;
            }
        }
        out.fill(0.0);
        let (o1, o2) = out.split_at_mut(mn);
        for j in 1..n - 1 {
            for i in 1..m - 1 {
                let k = j * m + i;
                let lap1 = (u1[k - 1] - 2.0 * u1[k] + u1[k + 1]) * self.ax
                    + (u1[k - m] - 2.0 * u1[k] + u1[k + m]) * self.ay;
                let lap2 = (u2[k - 1] - 2.0 * u2[k] + u2[k + 1]) * self.ax
                    + (u2[k - m] - 2.0 * u2[k] + u2[k + m]) * self.ay;
                let gd1 = (divbuf[k + 1] - divbuf[k - 1]) * self.dx;
                let gd2 = (divbuf[k + m] - divbuf[k - m]) * self.dy;
                o1[k] = -lap1 - self.c * gd1 + self.inv_gamma * u1[k];
                o2[k] = -lap2 - self.c * gd2 + self.inv_gamma * u2[k];
            }
        }
    }

    fn is_interior(&self, k: usize) -> bool {
        let k = k % (self.m * self.n);
        let (i, j) = (k % self.m, k / self.m);
        i > 0 && j > 0 && i + 1 < self.m && j + 1 < self.n
    }
}

fn flatten(u: &VectorField) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * u.spec().len());
    v.extend_from_slice(u.comp1().values());
    v.extend_from_slice(u.comp2().values());
    v
}

fn unflatten(spec: GridSpec, v: Vec<f64>) -> Result<VectorField> {
    let mut v = v;
    let c2 = v.split_off(spec.len());
    VectorField::new(ScalarField::new(spec, v)?, ScalarField::new(spec, c2)?)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Applies `L` to a field, treating its outer ring as pinned.
pub fn apply_operator(u: &VectorField, p: &AlmmParams) -> VectorField {
    let spec = u.spec();
    let op = Operator::new(spec, p);
    let x = flatten(&u.zero_boundary());
    let mut out = vec![0.0; x.len()];
    let mut divbuf = vec![0.0; spec.len()];
    op.apply(&x, &mut out, &mut divbuf);
    unflatten(spec, out).expect("operator output is finite")
}

/// Solves `L u = r` by Jacobi-preconditioned conjugate gradients.
pub fn solve_increment(r: &VectorField, p: &AlmmParams) -> Result<VectorField> {
    solve_increment_from(r, &VectorField::zeros(r.spec()), p)
}

/// As [`solve_increment`], starting the iteration from `guess`.
pub fn solve_increment_from(
    r: &VectorField,
    guess: &VectorField,
    p: &AlmmParams,
) -> Result<VectorField> {
    let spec = r.spec();
    if guess.spec() != spec {
        return Err(shape_error(spec, guess.spec()));
    }
    let op = Operator::new(spec, p);
    let mn = spec.len();
    let mut b = flatten(r);
    for (k, v) in b.iter_mut().enumerate() {
        if !op.is_interior(k) {
            *v = 0.0;
        }
    }
    let b_norm = dot(&b, &b).sqrt();
    if b_norm == 0.0 {
        return Ok(VectorField::zeros(spec));
    }
    let diag = op.diagonal();
    let inv_d = |k: usize| 1.0 / if k < mn { diag[0] } else { diag[1] };

    let mut x = flatten(&guess.zero_boundary());
    let mut divbuf = vec![0.0; mn];
    let mut ax = vec![0.0; 2 * mn];
    op.apply(&x, &mut ax, &mut divbuf);
    let mut res: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut res_norm = dot(&res, &res).sqrt();
    if res_norm > b_norm {
        x.fill(0.0);
        res.copy_from_slice(&b);
        res_norm = b_norm;
    }
    let target = p.cg_tol * b_norm;
    let mut z: Vec<f64> = res.iter().enumerate().map(|(k, v)| v * inv_d(k)).collect();
    let mut d = z.clone();
    let mut rz = dot(&res, &z);
    let mut iterations = 0;
    while res_norm > target {
        if iterations == p.cg_max {
            return Err(Error::SolverFailure {
                iterations,
                residual: res_norm / b_norm,
            });
        }
        op.apply(&d, &mut ax, &mut divbuf);
        let step = rz / dot(&d, &ax);
        for k in 0..x.len() {
            x[k] += step * d[k];
            res[k] -= step * ax[k];
        }
        for (k, zk) in z.iter_mut().enumerate() {
            *zk = res[k] * inv_d(k);
        }
        let rz_next = dot(&res, &z);
        let ratio = rz_next / rz;
        rz = rz_next;
        for k in 0..d.len() {
            d[k] = z[k] + ratio * d[k];
        }
        res_norm = dot(&res, &res).sqrt();
        iterations += 1;
    }
    unflatten(spec, x)
}

pub fn update_multiplier(
    lambda: &ScalarField,
    u: &VectorField,
    dhdt: &ScalarField,
    beta: f64,
) -> Result<ScalarField> {
    let c = div(u).axpby(1.0, dhdt, 1.0)?;
    lambda.axpby(1.0, &c, -beta)
}

#[allow(clippy::too_many_arguments)]
pub fn inner_loop(
    t_img: &Image,
    r_img: &Image,
    omega: &Deformation,
    alpha: &ScalarField,
    dhdt: &ScalarField,
    state: InnerState,
    p: &AlmmParams,
) -> Result<InnerOutcome> {
    p.validate()?;
    let InnerState { u0, lambda, u } = state;
    let mut u = u.zero_boundary();
    let mut lambda = lambda;
    let mut constraint_residuals = Vec::new();
    let mut iterations = 0;
    while iterations < p.max_inner {
        let pts = omega.advect_scaled(&u, alpha)?;
        let t_warped = sample_bicubic(t_img, &pts);
        let grad_t = gradient_at(t_img, &pts);
        let r = residual_r(&t_warped, r_img, &grad_t, &lambda, dhdt, &u, alpha, p)?;
        let u_next = solve_increment_from(&r, &u, p)?;
        lambda = update_multiplier(&lambda, &u_next, dhdt, p.beta)?;
        constraint_residuals.push(div(&u_next).axpby(1.0, dhdt, 1.0)?.norm2());
        iterations += 1;
        let change = u_next.axpby(1.0, &u, -1.0)?.norm2();
        let total = u_next.axpby(1.0, &u0, -1.0)?.norm2();
        u = u_next;
        if total == 0.0 || change / total < p.tol {
            break;
        }
    }
    Ok(InnerOutcome {
        state: InnerState { u, lambda, u0 },
        iterations,
        constraint_residuals,
    })
}

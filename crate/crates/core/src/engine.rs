//! Outer time stepping of the registration and the active-demons baseline.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::almm::{inner_loop, AlmmParams, InnerState};
use crate::error::{Error, Result};
use crate::field::{Deformation, GridSpec, ScalarField, VectorField};
use crate::flow::{rk4_step, VelocityContext};
use crate::homotopy::{alpha, approx_mass, composite_h, dh_dt, CompositeKind, MassParams};
use crate::meshq::{correct_deformation, det_jacobian, unfold_indicator, CorrectionStatus};
use crate::metrics::MetricsReport;
use crate::sampler::{sample_bicubic, Image};

/// Every tunable of a registration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub tau: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Number of nominal time steps; the initial step is `1/N`.
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub max_inner: usize,
    pub tol: f64,
    pub rho: f64,
    pub eps: f64,
    pub sigma_eps: f64,
    pub composite: CompositeKind,
    /// Upper bound on the step after doubling; `None` means `4/N`.
    pub dt_cap: Option<f64>,
    pub persist_lambda: bool,
    pub freeze_h_in_rk4: bool,
    /// Use the mass estimate of the undeformed grid as `g₀` instead of `1`.
    pub calibrate_g0: bool,
    pub mass_window: f64,
    pub cg_tol: f64,
    pub cg_max: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tau: 5.0,
            beta: 0.01,
            gamma: 0.01,
            n_steps: 40,
            max_inner: 5,
            tol: 1e-6,
            rho: 0.01,
            eps: 1e-2,
            sigma_eps: 0.01,
            composite: CompositeKind::P1,
            dt_cap: None,
            persist_lambda: true,
            freeze_h_in_rk4: false,
            calibrate_g0: true,
            mass_window: 4.0,
            cg_tol: 1e-8,
            cg_max: 500,
        }
    }
}

impl Config {
    pub fn almm(&self) -> AlmmParams {
        AlmmParams {
            tau: self.tau,
            beta: self.beta,
            gamma: self.gamma,
            max_inner: self.max_inner,
            tol: self.tol,
            cg_tol: self.cg_tol,
            cg_max: self.cg_max,
        }
    }

    pub fn dt_cap(&self) -> f64 {
        self.dt_cap.unwrap_or(4.0 / self.n_steps as f64)
    }

    pub fn validate(&self) -> Result<()> {
        self.almm().validate()?;
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        for (name, v) in [
            ("eps", self.eps),
            ("sigma_eps", self.sigma_eps),
            ("mass_window", self.mass_window),
            ("dt_cap", self.dt_cap()),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn mass(&self, spec: GridSpec) -> Result<MassParams> {
        let mut p = MassParams::uniform(spec, self.sigma_eps)?;
        p.window_radius = self.mass_window;
        if self.calibrate_g0 {
            p.g0 = approx_mass(&Deformation::identity(spec), &p);
        }
        Ok(p)
    }
}

/// Quality record of one outer step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub r_min: f64,
    pub det_min: f64,
    pub det_max: f64,
    pub inner_iters: usize,
    pub halvings: usize,
    pub corrected_points: usize,
}

#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub omega_final: Deformation,
    pub displacement: VectorField,
    pub warped: ScalarField,
    pub per_step: Vec<StepRecord>,
    pub metrics: MetricsReport,
}

/// A registration that stopped early, with the last valid state.
#[derive(Debug)]
pub struct Aborted {
    pub error: Error,
    pub partial: RegistrationResult,
}

impl std::fmt::Display for Aborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "registration aborted after {} steps: {}",
            self.partial.per_step.len(),
            self.error
        )
    }
}

impl std::error::Error for Aborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn finish(
    t_img: &Image,
    r_img: &Image,
    omega: Deformation,
    per_step: Vec<StepRecord>,
    eps: f64,
    started: Instant,
) -> Result<RegistrationResult> {
    let warped = sample_bicubic(t_img, &omega);
    let quality = unfold_indicator(&omega, eps);
    let metrics = MetricsReport::compute(
        t_img,
        r_img,
        &warped,
        &quality,
        started.elapsed().as_secs_f64(),
    )?;
    Ok(RegistrationResult {
        displacement: omega.displacement(),
        omega_final: omega,
        warped,
        per_step,
        metrics,
    })
}

fn check_pair(t_img: &Image, r_img: &Image) -> Result<GridSpec> {
    let spec = t_img.spec();
    if r_img.spec() != spec {
        return Err(Error::ShapeMismatch {
            expected: (spec.m(), spec.n()),
            found: (r_img.spec().m(), r_img.spec().n()),
        });
    }
    Ok(spec)
}

/// Runs the full registration of template `t_img` onto reference `r_img`.
pub fn register(
    t_img: &Image,
    r_img: &Image,
    cfg: &Config,
) -> std::result::Result<RegistrationResult, Box<Aborted>> {
    let started = Instant::now();
    let spec = check_pair(t_img, r_img).map_err(|e| abort_at_start(t_img, r_img, cfg, e))?;
    cfg.validate()
        .map_err(|e| abort_at_start(t_img, r_img, cfg, e))?;
    let mass = cfg
        .mass(spec)
        .map_err(|e| abort_at_start(t_img, r_img, cfg, e))?;
    let p = cfg.almm();

    let mut omega = Deformation::identity(spec);
    let mut u = VectorField::zeros(spec);
    let mut lambda = ScalarField::constant(spec, 1.0);
    let mut t = 0.0f64;
    let mut dt = 1.0 / cfg.n_steps as f64;
    let mut flag = 0;
    let mut per_step = Vec::new();

    while t <= 1.0 && flag <= 1 {
        let step = (|| -> Result<(Deformation, f64, StepRecord, VectorField, ScalarField)> {
            let dt_k = dt.min(1.0 - t).max(0.0);
            let g = approx_mass(&omega, &mass);
            let det = det_jacobian(&omega);
            let h = composite_h(cfg.composite, t, &mass.g0, &g, &det)?;
            let a = alpha(dt_k, &h)?;
            let dhdt = dh_dt(cfg.composite, &mass.g0, &g, &h, &det)?;
            let lam0 = if cfg.persist_lambda {
                lambda.clone()
            } else {
                ScalarField::constant(spec, 1.0)
            };
            let inner = inner_loop(
                t_img,
                r_img,
                &omega,
                &a,
                &dhdt,
                InnerState::new(u.clone(), lam0),
                &p,
            )?;
            let mut next = omega.clone();
            let mut dt_used = 0.0;
            let mut dt_next = dt;
            let mut halvings = 0;
            let mut corrected = 0;
            if dt_k > 0.0 {
                let ctx = VelocityContext {
                    u: inner.state.u.clone(),
                    h,
                    t,
                    kind: cfg.composite,
                    mass: mass.clone(),
                    det,
                    freeze_h: cfg.freeze_h_in_rk4,
                };
                let predicted = rk4_step(&omega, &ctx, dt_k)?;
                let out = correct_deformation(&predicted, &omega, dt_k, &ctx, cfg.rho, cfg.eps)?;
                if out.status == CorrectionStatus::Failed {
                    return Err(Error::CorrectionFailure(format!(
                        "at t = {t:.6}: {}",
                        out.message.unwrap_or_default()
                    )));
                }
                next = out.omega;
                dt_used = out.dt_used;
                dt_next = out.dt_next.min(cfg.dt_cap());
                halvings = out.halvings;
                corrected = out.moved.len();
            }
            let q = unfold_indicator(&next, cfg.eps);
            let rec = StepRecord {
                t,
                dt: dt_used,
                r_min: q.r_min,
                det_min: q.det_min,
                det_max: q.det_max,
                inner_iters: inner.iterations,
                halvings,
                corrected_points: corrected,
            };
            Ok((next, dt_next, rec, inner.state.u, inner.state.lambda))
        })();
        let (next, dt_next, rec, u_next, lambda_next) = match step {
            Ok(v) => v,
            Err(error) => {
                let partial = finish(t_img, r_img, omega, per_step, cfg.eps, started)
                    .expect("state before the failing step is valid");
                return Err(Box::new(Aborted { error, partial }));
            }
        };
        omega = next;
        dt = dt_next;
        u = u_next;
        lambda = lambda_next;
        t += rec.dt;
        per_step.push(rec);
        if t >= 1.0 - 1e-12 {
            t = 1.0;
            flag += 1;
        }
    }
    finish(t_img, r_img, omega, per_step, cfg.eps, started)
        .map_err(|e| abort_at_start(t_img, r_img, cfg, e))
}

fn abort_at_start(t_img: &Image, r_img: &Image, cfg: &Config, error: Error) -> Box<Aborted> {
    let spec = t_img.spec();
    let omega = Deformation::identity(spec);
    let warped = t_img.as_field().clone();
    let quality = unfold_indicator(&omega, cfg.eps);
    let metrics =
        MetricsReport::compute(t_img, r_img, &warped, &quality, 0.0).unwrap_or(MetricsReport {
            re_ssd: None,
            ssim: f64::NAN,
            psnr: f64::NAN,
            det_mean: quality.det_mean,
            det_min: quality.det_min,
            det_max: quality.det_max,
            r_min: quality.r_min,
            runtime_s: 0.0,
        });
    Box::new(Aborted {
        error,
        partial: RegistrationResult {
            displacement: omega.displacement(),
            omega_final: omega,
            warped,
            per_step: Vec::new(),
            metrics,
        },
    })
}

/// Settings of the active-demons baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemonsParams {
    /// Width of the Gaussian smoothing, in pixels.
    pub sigma: f64,
    /// Force normalisation.
    pub tau_norm: f64,
    pub iters: usize,
}

impl Default for DemonsParams {
    fn default() -> Self {
        Self {
            sigma: 10f64.sqrt(),
            tau_norm: 0.8,
            iters: 200,
        }
    }
}

/// Pixel-unit central differences with mirrored edges.
fn pixel_gradient(v: &ScalarField) -> Vec<[f64; 2]> {
    let spec = v.spec();
    let (m, n) = (spec.m(), spec.n());
    let vals = v.values();
    let mut out = Vec::with_capacity(spec.len());
    for j in 0..n {
        for i in 0..m {
            let (il, ir) = (i.saturating_sub(1), (i + 1).min(m - 1));
            let (jd, ju) = (j.saturating_sub(1), (j + 1).min(n - 1));
            out.push([
                0.5 * (vals[j * m + ir] - vals[j * m + il]),
                0.5 * (vals[ju * m + i] - vals[jd * m + i]),
            ]);
        }
    }
    out
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let k: Vec<f64> = (-r..=r)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian blur with half-sample mirrored edges, in place.
pub(crate) fn gaussian_blur(values: &mut [f64], m: usize, n: usize, sigma: f64) {
    if sigma <= 0.0 {
        return;
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let reflect = |x: isize, len: usize| -> usize {
        let len = len as isize;
        let mut x = x;
        loop {
            if x < 0 {
                x = -x - 1;
            } else if x >= len {
                x = 2 * len - x - 1;
            } else {
                return x as usize;
            }
        }
    };
    let mut tmp = vec![0.0; values.len()];
    for j in 0..n {
        for i in 0..m {
            let mut s = 0.0;
            for (o, w) in k.iter().enumerate() {
                s += w * values[j * m + reflect(i as isize + o as isize - r, m)];
            }
            tmp[j * m + i] = s;
        }
    }
    for j in 0..n {
        for i in 0..m {
            let mut s = 0.0;
            for (o, w) in k.iter().enumerate() {
                s += w * tmp[reflect(j as isize + o as isize - r, n) * m + i];
            }
            values[j * m + i] = s;
        }
    }
}

fn demons_positions(spec: GridSpec, ux: &[f64], uy: &[f64]) -> Deformation {
    let (hx, hy) = (spec.hx(), spec.hy());
    Deformation::from_fn(spec, |i, j| {
        let c = spec.center(i as isize, j as isize);
        let k = spec.index(i, j);
        [c[0] + ux[k] * hx, c[1] + uy[k] * hy]
    })
}

fn demons_iterate(
    t_img: &Image,
    r_img: &Image,
    p: &DemonsParams,
    mut on_iter: impl FnMut(usize, &Deformation),
) -> Result<Deformation> {
    let spec = check_pair(t_img, r_img)?;
    if !(p.sigma > 0.0) || !(p.tau_norm > 0.0) {
        return Err(Error::InvalidParameter(
            "demons sigma and tau must be positive".into(),
        ));
    }
    let (m, n) = (spec.m(), spec.n());
    let grad_r = pixel_gradient(r_img);
    let tau2 = p.tau_norm * p.tau_norm;
    let mut ux = vec![0.0; spec.len()];
    let mut uy = vec![0.0; spec.len()];
    let mut pts = Deformation::identity(spec);
    for it in 0..p.iters {
        let warped = sample_bicubic(t_img, &pts);
        let grad_t = pixel_gradient(&warped);
        for k in 0..spec.len() {
            let d = warped.values()[k] - r_img.values()[k];
            if d == 0.0 {
                continue;
            }
            let (gr, gt) = (grad_r[k], grad_t[k]);
            let dd = tau2 * d * d;
            let den_r = gr[0] * gr[0] + gr[1] * gr[1] + dd;
            let den_t = gt[0] * gt[0] + gt[1] * gt[1] + dd;
            if den_r > 0.0 {
                ux[k] -= d * gr[0] / den_r;
                uy[k] -= d * gr[1] / den_r;
            }
            if den_t > 0.0 {
                ux[k] -= d * gt[0] / den_t;
                uy[k] -= d * gt[1] / den_t;
            }
        }
        gaussian_blur(&mut ux, m, n, p.sigma);
        gaussian_blur(&mut uy, m, n, p.sigma);
        pts = demons_positions(spec, &ux, &uy);
        on_iter(it, &pts);
    }
    Ok(pts)
}

/// Displacement `φ(x) - x` (domain units) with `T(φ(x)) ≈ R(x)`.
pub fn active_demons(
    t_img: &Image,
    r_img: &Image,
    sigma: f64,
    tau_norm: f64,
    iters: usize,
) -> Result<VectorField> {
    let p = DemonsParams {
        sigma,
        tau_norm,
        iters,
    };
    Ok(demons_iterate(t_img, r_img, &p, |_, _| {})?.displacement())
}

/// Active demons packaged like a registration run; one record per iteration.
pub fn register_demons(
    t_img: &Image,
    r_img: &Image,
    p: &DemonsParams,
    eps: f64,
) -> Result<RegistrationResult> {
    let started = Instant::now();
    let mut per_step = Vec::with_capacity(p.iters);
    let dt = 1.0 / p.iters.max(1) as f64;
    let omega = demons_iterate(t_img, r_img, p, |it, pts| {
        let q = unfold_indicator(pts, eps);
        per_step.push(StepRecord {
            t: it as f64 * dt,
            dt,
            r_min: q.r_min,
            det_min: q.det_min,
            det_max: q.det_max,
            inner_iters: 1,
            halvings: 0,
            corrected_points: 0,
        });
    })?;
    finish(t_img, r_img, omega, per_step, eps, started)
}

//! Similarity measures between the reference and the registered template.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::meshq::QualityReport;
use crate::sampler::Image;

/// Summary written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// `None` when template and reference coincide.
    pub re_ssd: Option<f64>,
    pub ssim: f64,
    #[serde(serialize_with = "finite_or_string")]
    pub psnr: f64,
    pub det_mean: f64,
    pub det_min: f64,
    pub det_max: f64,
    pub r_min: f64,
    pub runtime_s: f64,
}

impl MetricsReport {
    pub fn compute(
        t: &Image,
        r: &Image,
        t_def: &ScalarField,
        quality: &QualityReport,
        runtime_s: f64,
    ) -> Result<Self> {
        let re = match re_ssd(t, r, t_def) {
            Ok(v) => Some(v),
            Err(Error::UndefinedDenominator) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            re_ssd: re,
            ssim: ssim(r, t_def)?,
            psnr: psnr(r, t_def)?,
            det_mean: quality.det_mean,
            det_min: quality.det_min,
            det_max: quality.det_max,
            r_min: quality.r_min,
            runtime_s,
        })
    }
}

/// Writes non-finite values as the strings `"inf"`, `"-inf"` or `"nan"`.
pub fn finite_or_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn check(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.spec() != b.spec() {
        return Err(Error::ShapeMismatch {
            expected: (a.spec().m(), a.spec().n()),
            found: (b.spec().m(), b.spec().n()),
        });
    }
    Ok(())
}

fn sq_dist(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// `Σ (T∘φ - R)² / Σ (T - R)²`.
pub fn re_ssd(t: &Image, r: &Image, t_def: &ScalarField) -> Result<f64> {
    check(t, r)?;
    check(t, t_def)?;
    let den = sq_dist(t, r);
    if den == 0.0 {
        return Err(Error::UndefinedDenominator);
    }
    Ok(sq_dist(t_def, r) / den)
}

/// Single-window structural similarity with `L = 1`.
pub fn ssim(r: &Image, t_def: &ScalarField) -> Result<f64> {
    check(r, t_def)?;
    let c1 = 0.01f64.powi(2);
    let c2 = 0.03f64.powi(2);
    let n = r.values().len() as f64;
    let (mr, mt) = (r.mean(), t_def.mean());
    let (mut vr, mut vt, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in r.values().iter().zip(t_def.values()) {
        let (da, db) = (a - mr, b - mt);
        vr += da * da;
        vt += db * db;
        cov += da * db;
    }
    let (vr, vt, cov) = (vr / n, vt / n, cov / n);
    Ok(((2.0 * mr * mt + c1) * (2.0 * cov + c2)) / ((mr * mr + mt * mt + c1) * (vr + vt + c2)))
}

/// Peak signal-to-noise ratio in dB, `+∞` for identical images.
pub fn psnr(r: &Image, t_def: &ScalarField) -> Result<f64> {
    check(r, t_def)?;
    let mse = sq_dist(r, t_def) / r.values().len() as f64;
    Ok(psnr_from_mse(mse))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

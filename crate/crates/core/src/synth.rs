//! Deterministic synthetic template/reference pairs.
//!
//! Shapes are drawn analytically with edges blurred by a Gaussian of two
//! pixels, so every image has usable gradients.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::sampler::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// Disk onto a square of equal area.
    CircleSquare,
    /// Disk onto the same disk shifted along `x`.
    TranslatedBlob,
    /// Disk onto a C-shaped ring of equal area.
    CShape,
    /// Lobed head-like phantom onto a smoothly warped copy of itself.
    BrainBlob,
}

impl PairKind {
    pub const ALL: [PairKind; 4] = [
        Self::CircleSquare,
        Self::TranslatedBlob,
        Self::CShape,
        Self::BrainBlob,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::CircleSquare => "circle_square",
            Self::TranslatedBlob => "translated_blob",
            Self::CShape => "c_shape",
            Self::BrainBlob => "brain_blob",
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown pair kind {s:?} (expected circle_square, translated_blob, c_shape or brain_blob)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Translation of the reference blob, in pixels.
    pub shift_px: f64,
    /// Edge blur, in pixels.
    pub blur_px: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            shift_px: 2.0,
            blur_px: 2.0,
        }
    }
}

/// Half-width of the square in `circle_square`.
pub const SQUARE_HALF_WIDTH: f64 = 0.25;

/// Disk radius with the same area as the square.
pub fn matched_disk_radius() -> f64 {
    2.0 * SQUARE_HALF_WIDTH / PI.sqrt()
}

/// Blurred step from 1 inside to 0 outside a signed distance `d`.
#[inline]
fn soft(d: f64, sigma: f64) -> f64 {
    0.5 * erfc(d / (SQRT_2 * sigma))
}

/// Exact blur of the indicator of `[a, b]` along one axis.
#[inline]
fn soft_interval(x: f64, a: f64, b: f64, sigma: f64) -> f64 {
    0.5 * (erf((x - a) / (SQRT_2 * sigma)) - erf((x - b) / (SQRT_2 * sigma)))
}

fn disk(p: [f64; 2], c: [f64; 2], r: f64, sigma: f64) -> f64 {
    soft(
        ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() - r,
        sigma,
    )
}

fn c_ring(p: [f64; 2], sigma: f64) -> f64 {
    let (dx, dy) = (p[0] - 0.5, p[1] - 0.5);
    let rho = (dx * dx + dy * dy).sqrt();
    let ring = soft(rho - C_OUTER, sigma) - soft(rho - C_INNER, sigma);
    // opening of half-angle C_GAP centred on the +x axis
    let off = dy.atan2(dx).abs() - C_GAP;
    let wedge_dist = if off < PI / 2.0 { rho * off.sin() } else { rho };
    ring * (1.0 - soft(wedge_dist, sigma))
}

const C_OUTER: f64 = 0.3;
const C_INNER: f64 = 0.15;
const C_GAP: f64 = PI / 6.0;

/// Radius of the disk with the same area as the C-shaped ring.
pub fn c_shape_disk_radius() -> f64 {
    let frac = 1.0 - C_GAP / PI;
    ((C_OUTER * C_OUTER - C_INNER * C_INNER) * frac).sqrt()
}

struct Lobes {
    base: f64,
    amp: [f64; 4],
    phase: [f64; 4],
}

impl Lobes {
    fn random(rng: &mut ChaCha8Rng, base: f64, spread: f64) -> Self {
        Self {
            base,
            amp: std::array::from_fn(|_| rng.gen_range(-spread..spread)),
            phase: std::array::from_fn(|_| rng.gen_range(0.0..2.0 * PI)),
        }
    }

    fn radius(&self, theta: f64) -> f64 {
        let wobble: f64 = (0..4)
            .map(|k| self.amp[k] * ((k as f64 + 2.0) * theta + self.phase[k]).cos())
            .sum();
        self.base * (1.0 + wobble)
    }

    fn soft(&self, p: [f64; 2], c: [f64; 2], sigma: f64) -> f64 {
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        let rho = (dx * dx + dy * dy).sqrt();
        soft(rho - self.radius(dy.atan2(dx)), sigma)
    }
}

struct Phantom {
    head: Lobes,
    core: Lobes,
    ventricles: [([f64; 2], f64); 2],
    stream: [(f64, [f64; 2], [f64; 2]); 3],
    amplitude: f64,
}

impl Phantom {
    fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head = Lobes::random(&mut rng, 0.33, 0.05);
        let core = Lobes::random(&mut rng, 0.2, 0.08);
        let ventricles = std::array::from_fn(|k| {
            let side = if k == 0 { -1.0 } else { 1.0 };
            (
                [
                    0.5 + side * rng.gen_range(0.05..0.08),
                    0.5 + rng.gen_range(-0.04..0.04),
                ],
                rng.gen_range(0.035..0.05),
            )
        });
        let stream = std::array::from_fn(|_| {
            (
                rng.gen_range(-1.0..1.0),
                [rng.gen_range(1.0..2.5), rng.gen_range(1.0..2.5)],
                [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)],
            )
        });
        Self {
            head,
            core,
            ventricles,
            stream,
            amplitude: 0.004,
        }
    }

    fn intensity(&self, p: [f64; 2], sigma: f64) -> f64 {
        let c = [0.5, 0.5];
        let head = self.head.soft(p, c, sigma);
        let core = self.core.soft(p, c, sigma);
        let vent = self
            .ventricles
            .iter()
            .map(|&(vc, r)| disk(p, vc, r, sigma))
            .fold(0.0, f64::max);
        (0.55 * head + 0.35 * core - 0.6 * vent).clamp(0.0, 1.0)
    }

    /// Stream function vanishing on the domain boundary.
    fn stream_fn(&self, p: [f64; 2]) -> f64 {
        let bump = (PI * p[0]).sin().powi(2) * (PI * p[1]).sin().powi(2);
        let waves: f64 = self
            .stream
            .iter()
            .map(|(a, k, ph)| {
                a * (2.0 * PI * k[0] * p[0] + ph[0]).sin() * (2.0 * PI * k[1] * p[1] + ph[1]).cos()
            })
            .sum();
        self.amplitude * bump * waves
    }

    /// Area-preserving (to first order) displacement `∇⊥ s`.
    fn warp(&self, p: [f64; 2]) -> [f64; 2] {
        let e = 1e-6;
        let sy = (self.stream_fn([p[0], p[1] + e]) - self.stream_fn([p[0], p[1] - e])) / (2.0 * e);
        let sx = (self.stream_fn([p[0] + e, p[1]]) - self.stream_fn([p[0] - e, p[1]])) / (2.0 * e);
        [p[0] + sy, p[1] - sx]
    }
}

/// Generates `(template, reference)` with default parameters.
pub fn gen_pair(kind: PairKind, m: usize, n: usize, seed: u64) -> Result<(Image, Image)> {
    gen_pair_with(kind, m, n, seed, &SynthParams::default())
}

pub fn gen_pair_with(
    kind: PairKind,
    m: usize,
    n: usize,
    seed: u64,
    p: &SynthParams,
) -> Result<(Image, Image)> {
    if m < 32 || n < 32 {
        return Err(Error::InvalidParameter(format!(
            "synthetic pairs need at least 32x32 cells, got {m}x{n}"
        )));
    }
    let spec = GridSpec::new(m, n)?;
    let (sx, sy) = (p.blur_px * spec.hx(), p.blur_px * spec.hy());
    let sigma = (sx * sy).sqrt();
    let at = |i: usize, j: usize| spec.center(i as isize, j as isize);
    let c = [0.5, 0.5];
    let pair = match kind {
        PairKind::CircleSquare => {
            let r = matched_disk_radius();
            let w = SQUARE_HALF_WIDTH;
            (
                Image::from_fn(spec, |i, j| disk(at(i, j), c, r, sigma)),
                Image::from_fn(spec, |i, j| {
                    let q = at(i, j);
                    soft_interval(q[0], 0.5 - w, 0.5 + w, sx)
                        * soft_interval(q[1], 0.5 - w, 0.5 + w, sy)
                }),
            )
        }
        PairKind::TranslatedBlob => {
            let shift = p.shift_px * spec.hx();
            (
                Image::from_fn(spec, |i, j| disk(at(i, j), c, 0.2, sigma)),
                Image::from_fn(spec, |i, j| disk(at(i, j), [0.5 + shift, 0.5], 0.2, sigma)),
            )
        }
        PairKind::CShape => {
            let r = c_shape_disk_radius();
            (
                Image::from_fn(spec, |i, j| disk(at(i, j), c, r, sigma)),
                Image::from_fn(spec, |i, j| c_ring(at(i, j), sigma)),
            )
        }
        PairKind::BrainBlob => {
            let ph = Phantom::random(seed);
            (
                Image::from_fn(spec, |i, j| ph.intensity(ph.warp(at(i, j)), sigma)),
                Image::from_fn(spec, |i, j| ph.intensity(at(i, j), sigma)),
            )
        }
    };
    Ok(pair)
}

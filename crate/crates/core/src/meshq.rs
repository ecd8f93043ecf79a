//! Mesh quality of a deformed grid and local unfolding.
//!
//! Around every cell centre `O = (i, j)` with neighbours `A = (i-1, j)`,
//! `B = (i+1, j)`, `C = (i, j-1)`, `D = (i, j+1)` the four triangles
//! `OBD`, `ODA`, `OAC`, `OCB` tile the central-difference stencil. Each ratio
//! is the signed triangle area over `h_x h_y`, so an undeformed grid gives
//! `1/2` per triangle and the central-difference Jacobian is half their sum.
//! Neighbours outside the grid sit at their identity position.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{Deformation, GridSpec, ScalarField};
use crate::flow::{rk4_step, VelocityContext};

const MAX_HALVINGS: usize = 10;
const MOVE_CAP: usize = 20;
const MAX_PASSES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRatios {
    pub r1: ScalarField,
    pub r2: ScalarField,
    pub r3: ScalarField,
    pub r4: ScalarField,
}

impl TriangleRatios {
    pub fn all(&self) -> [&ScalarField; 4] {
        [&self.r1, &self.r2, &self.r3, &self.r4]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub det: ScalarField,
    pub r: ScalarField,
    pub r_min: f64,
    pub det_min: f64,
    pub det_max: f64,
    pub det_mean: f64,
    pub folded: Vec<(usize, usize)>,
}

#[inline]
fn cross(o: [f64; 2], p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])
}

/// Ratios of the four triangles around cell `(i, j)`, in `OBD, ODA, OAC, OCB` order.
pub fn cell_ratios(omega: &Deformation, i: usize, j: usize) -> [f64; 4] {
    let spec = omega.spec();
    let scale = 0.5 / (spec.hx() * spec.hy());
    let (ii, jj) = (i as isize, j as isize);
    let o = omega.get(i, j);
    let a = omega.ghost(ii - 1, jj);
    let b = omega.ghost(ii + 1, jj);
    let c = omega.ghost(ii, jj - 1);
    let d = omega.ghost(ii, jj + 1);
    [
        cross(o, b, d) * scale,
        cross(o, d, a) * scale,
        cross(o, a, c) * scale,
        cross(o, c, b) * scale,
    ]
}

#[inline]
fn cell_indicator(omega: &Deformation, i: usize, j: usize) -> f64 {
    cell_ratios(omega, i, j)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub fn triangle_ratios(omega: &Deformation) -> TriangleRatios {
    let spec = omega.spec();
    let mut out: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(spec.len()));
    for (i, j) in spec.cells() {
        for (k, r) in cell_ratios(omega, i, j).into_iter().enumerate() {
            out[k].push(r);
        }
    }
    let [r1, r2, r3, r4] = out.map(|v| ScalarField::new(spec, v).expect("finite ratios"));
    TriangleRatios { r1, r2, r3, r4 }
}

pub fn det_jacobian(omega: &Deformation) -> ScalarField {
    ScalarField::from_fn(omega.spec(), |i, j| {
        0.5 * cell_ratios(omega, i, j).into_iter().sum::<f64>()
    })
}

pub fn unfold_indicator(omega: &Deformation, eps: f64) -> QualityReport {
    let spec = omega.spec();
    let mut det = Vec::with_capacity(spec.len());
    let mut r = Vec::with_capacity(spec.len());
    let mut folded = Vec::new();
    for (i, j) in spec.cells() {
        let q = cell_ratios(omega, i, j);
        let rmin = q.into_iter().fold(f64::INFINITY, f64::min);
        det.push(0.5 * q.into_iter().sum::<f64>());
        r.push(rmin);
        if rmin < eps {
            folded.push((i, j));
        }
    }
    let det = ScalarField::new(spec, det).expect("finite determinants");
    let r = ScalarField::new(spec, r).expect("finite ratios");
    QualityReport {
        r_min: r.min(),
        det_min: det.min(),
        det_max: det.max(),
        det_mean: det.mean(),
        det,
        r,
        folded,
    }
}

type Degrees = BTreeMap<(usize, usize), usize>;

/// Folding degree of every point incident to a triangle with ratio below
/// `threshold`.
fn degrees_below(omega: &Deformation, threshold: f64) -> Degrees {
    let spec = omega.spec();
    let (m, n) = (spec.m() as isize, spec.n() as isize);
    let mut deg: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, j) in spec.cells() {
        let (ii, jj) = (i as isize, j as isize);
        let nb = [
            [(ii + 1, jj), (ii, jj + 1)],
            [(ii, jj + 1), (ii - 1, jj)],
            [(ii - 1, jj), (ii, jj - 1)],
            [(ii, jj - 1), (ii + 1, jj)],
        ];
        for (k, r) in cell_ratios(omega, i, j).into_iter().enumerate() {
            if r >= threshold {
                continue;
            }
            for (pi, pj) in [(ii, jj), nb[k][0], nb[k][1]] {
                if pi < 0 || pj < 0 || pi >= m || pj >= n {
                    continue;
                }
                *deg.entry((pi as usize, pj as usize)).or_insert(0) += 1;
            }
        }
    }
    deg
}

/// Output of [`folding_degree`].
#[derive(Debug, Clone, PartialEq)]
pub struct FoldingDegree {
    pub degree: BTreeMap<(usize, usize), usize>,
    pub key_points: Vec<(usize, usize)>,
}

fn neighbours(spec: GridSpec, (i, j): (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
    let (m, n) = (spec.m() as isize, spec.n() as isize);
    let (i, j) = (i as isize, j as isize);
    [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
        .into_iter()
        .filter(move |&(a, b)| a >= 0 && b >= 0 && a < m && b < n)
        .map(|(a, b)| (a as usize, b as usize))
}

/// Cells of `folded` together with their in-grid 4-neighbours.
fn candidate_set(spec: GridSpec, folded: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for &c in folded {
        set.insert(c);
        set.extend(neighbours(spec, c));
    }
    set
}

/// Orders points by degree, then offset from the neighbour centroid, then
/// the smaller index.
fn rank(a: (usize, f64, (usize, usize)), b: (usize, f64, (usize, usize))) -> Ordering {
    a.0.cmp(&b.0)
        .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
        .then(b.2.cmp(&a.2))
}

/// Distance of `p` from the mean of its four neighbours, in grid spacings.
fn centroid_offset(omega: &Deformation, p: (usize, usize)) -> f64 {
    let spec = omega.spec();
    let (i, j) = (p.0 as isize, p.1 as isize);
    let c = omega.get(p.0, p.1);
    let mut mean = [0.0; 2];
    for q in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
        let v = omega.ghost(q.0, q.1);
        mean[0] += 0.25 * v[0];
        mean[1] += 0.25 * v[1];
    }
    ((c[0] - mean[0]) / spec.hx()).hypot((c[1] - mean[1]) / spec.hy())
}

fn key_points_for(
    omega: &Deformation,
    folded: &[(usize, usize)],
    threshold: f64,
) -> (Degrees, Vec<(usize, usize)>) {
    let spec = omega.spec();
    let deg = degrees_below(omega, threshold);
    let cand = candidate_set(spec, folded);
    let score = |p: (usize, usize)| {
        let d = deg.get(&p).copied().unwrap_or(0);
        (d, centroid_offset(omega, p), p)
    };
    let mut keys: Vec<(usize, usize)> = cand
        .iter()
        .copied()
        .filter(|&p| !spec.on_boundary(p.0, p.1) && score(p).0 > 0)
        .filter(|&p| {
            neighbours(spec, p)
                .filter(|q| cand.contains(q) && !spec.on_boundary(q.0, q.1))
                .all(|q| rank(score(p), score(q)) == Ordering::Greater)
        })
        .collect();
    keys.sort_by(|&a, &b| rank(score(b), score(a)));
    (deg, keys)
}

/// Degrees of points touching negative triangles and the local maxima among
/// the candidate points derived from `folded`.
pub fn folding_degree(omega: &Deformation, folded: &[(usize, usize)]) -> FoldingDegree {
    let (deg, key_points) = key_points_for(omega, folded, 0.0);
    FoldingDegree {
        degree: deg,
        key_points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrectionStatus {
    Clean,
    Corrected,
    Failed,
}

#[derive(Debug, Clone)]
pub struct CorrectionOutcome {
    pub omega: Deformation,
    /// Step actually used to produce `omega`.
    pub dt_used: f64,
    /// Step proposed for the next time interval.
    pub dt_next: f64,
    pub status: CorrectionStatus,
    pub halvings: usize,
    pub moved: Vec<(usize, usize)>,
    pub message: Option<String>,
}

/// Smallest indicator over a point and its four neighbours.
fn local_indicator(omega: &Deformation, p: (usize, usize)) -> f64 {
    let spec = omega.spec();
    neighbours(spec, p)
        .chain(std::iter::once(p))
        .map(|(i, j)| cell_indicator(omega, i, j))
        .fold(f64::INFINITY, f64::min)
}

/// Moves `p` toward the centroid of its neighbours by fractions `1, 1/2, …`
/// and keeps the first position meeting `eps`. Falls back to the best
/// improving fraction; returns whether `eps` was met.
fn relax_point(omega: &mut Deformation, p: (usize, usize), eps: f64) -> bool {
    let (i, j) = (p.0 as isize, p.1 as isize);
    let nb = [
        omega.ghost(i - 1, j),
        omega.ghost(i + 1, j),
        omega.ghost(i, j - 1),
        omega.ghost(i, j + 1),
    ];
    let target = [
        0.25 * (nb[0][0] + nb[1][0] + nb[2][0] + nb[3][0]),
        0.25 * (nb[0][1] + nb[1][1] + nb[2][1] + nb[3][1]),
    ];
    let start = omega.get(p.0, p.1);
    let mut best = (local_indicator(omega, p), start);
    let mut f = 1.0;
    for _ in 0..MOVE_CAP {
        let q = [
            start[0] + f * (target[0] - start[0]),
            start[1] + f * (target[1] - start[1]),
        ];
        omega.set(p.0, p.1, q);
        let v = local_indicator(omega, p);
        if v >= eps {
            return true;
        }
        if v > best.0 {
            best = (v, q);
        }
        f *= 0.5;
    }
    omega.set(p.0, p.1, best.1);
    false
}

/// Local repair of a predicted deformation, with step backtracking when the
/// folded region is too large.
pub fn correct_deformation(
    omega: &Deformation,
    omega0: &Deformation,
    dt: f64,
    ctx: &VelocityContext,
    rho: f64,
    eps: f64,
) -> Result<CorrectionOutcome> {
    let spec = omega.spec();
    let mut omega = omega.clone();
    let mut dt = dt;
    let mut halvings = 0;
    loop {
        let report = unfold_indicator(&omega, eps);
        if report.folded.is_empty() {
            return Ok(CorrectionOutcome {
                omega,
                dt_used: dt,
                dt_next: 2.0 * dt,
                status: CorrectionStatus::Clean,
                halvings,
                moved: Vec::new(),
                message: None,
            });
        }
        let cand = candidate_set(spec, &report.folded);
        if cand.len() as f64 / spec.len() as f64 > rho {
            if halvings == MAX_HALVINGS {
                return Ok(CorrectionOutcome {
                    omega,
                    dt_used: dt,
                    dt_next: dt,
                    status: CorrectionStatus::Failed,
                    halvings,
                    moved: Vec::new(),
                    message: Some(format!(
                        "{} of {} points still folded after {halvings} step halvings",
                        cand.len(),
                        spec.len()
                    )),
                });
            }
            dt *= 0.5;
            halvings += 1;
            omega = rk4_step(omega0, ctx, dt)?;
            continue;
        }
        return Ok(unfold_locally(omega, dt, halvings, eps));
    }
}

fn unfold_locally(mut omega: Deformation, dt: f64, halvings: usize, eps: f64) -> CorrectionOutcome {
    let mut moved = BTreeSet::new();
    for _ in 0..MAX_PASSES {
        let report = unfold_indicator(&omega, eps);
        if report.folded.is_empty() {
            break;
        }
        let (_, keys) = key_points_for(&omega, &report.folded, eps);
        if keys.is_empty() {
            break;
        }
        for p in keys {
            relax_point(&mut omega, p, eps);
            moved.insert(p);
        }
    }
    let report = unfold_indicator(&omega, eps);
    if report.folded.is_empty() {
        return CorrectionOutcome {
            omega,
            dt_used: dt,
            dt_next: dt,
            status: CorrectionStatus::Corrected,
            halvings,
            moved: moved.into_iter().collect(),
            message: None,
        };
    }
    let remaining = report.folded.len();
    CorrectionOutcome {
        omega,
        dt_used: dt,
        dt_next: dt,
        status: CorrectionStatus::Failed,
        halvings,
        moved: moved.into_iter().collect(),
        message: Some(format!(
            "{remaining} cells below the unfolding threshold after local correction"
        )),
    }
}

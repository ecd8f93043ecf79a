//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 4 7`.

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use ocrdir::almm::{apply_operator, solve_increment, AlmmParams};
use ocrdir::emit::metrics_json;
use ocrdir::engine::{register, register_demons, Config, DemonsParams, RegistrationResult};
use ocrdir::field::{div, grad, laplacian};
use ocrdir::flow::{rk4_step, VelocityContext};
use ocrdir::homotopy::MassParams;
use ocrdir::meshq::{
    correct_deformation, det_jacobian, triangle_ratios, unfold_indicator, CorrectionStatus,
};
use ocrdir::synth::{gen_pair, gen_pair_with, PairKind, SynthParams};
use ocrdir::{BoundaryKind, CompositeKind, Deformation, GridSpec, ScalarField, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = (bool, String);

fn spec(m: usize, n: usize) -> GridSpec {
    GridSpec::new(m, n).unwrap()
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- 1

/// `(m+2) x (n+2)` copy of `v` with one layer of ghosts.
fn padded(v: &ScalarField, mirror: bool) -> Vec<Vec<f64>> {
    let (m, n) = (v.spec().m(), v.spec().n());
    let mut p = vec![vec![0.0; n + 2]; m + 2];
    for (pi, row) in p.iter_mut().enumerate() {
        for (pj, x) in row.iter_mut().enumerate() {
            let inside = (1..=m).contains(&pi) && (1..=n).contains(&pj);
            if inside || mirror {
                let i = pi.clamp(1, m) - 1;
                let j = pj.clamp(1, n) - 1;
                *x = v.get(i, j);
            }
        }
    }
    p
}

fn grad_oracle(v: &ScalarField, mirror: bool) -> (Vec<f64>, Vec<f64>) {
    let s = v.spec();
    let p = padded(v, mirror);
    let (mut gx, mut gy) = (vec![0.0; s.len()], vec![0.0; s.len()]);
    for j in 0..s.n() {
        for i in 0..s.m() {
            gx[j * s.m() + i] = (p[i + 2][j + 1] - p[i][j + 1]) / (2.0 * s.hx());
            gy[j * s.m() + i] = (p[i + 1][j + 2] - p[i + 1][j]) / (2.0 * s.hy());
        }
    }
    (gx, gy)
}

fn div_oracle(u: &VectorField) -> Vec<f64> {
    let s = u.spec();
    let (p1, p2) = (padded(u.comp1(), true), padded(u.comp2(), true));
    let mut d = vec![0.0; s.len()];
    for j in 0..s.n() {
        for i in 0..s.m() {
            d[j * s.m() + i] = (p1[i + 2][j + 1] - p1[i][j + 1]) / (2.0 * s.hx())
                + (p2[i + 1][j + 2] - p2[i + 1][j]) / (2.0 * s.hy());
        }
    }
    d
}

fn lap_oracle(v: &ScalarField) -> Vec<f64> {
    let s = v.spec();
    let p = padded(v, true);
    let mut l = vec![0.0; s.len()];
    for j in 0..s.n() {
        for i in 0..s.m() {
            let c = p[i + 1][j + 1];
            l[j * s.m() + i] = (p[i][j + 1] - 2.0 * c + p[i + 2][j + 1]) / (s.hx() * s.hx())
                + (p[i + 1][j] - 2.0 * c + p[i + 1][j + 2]) / (s.hy() * s.hy());
        }
    }
    l
}

fn analytic_errors(m: usize) -> [f64; 3] {
    let s = spec(m, m);
    let f = |x: f64, y: f64| (2.0 * x + 1.0).sin() * (3.0 * y).cos() + x * x * y;
    let fx = |x: f64, y: f64| 2.0 * (2.0 * x + 1.0).cos() * (3.0 * y).cos() + 2.0 * x * y;
    let fy = |x: f64, y: f64| -3.0 * (2.0 * x + 1.0).sin() * (3.0 * y).sin() + x * x;
    let lap = |x: f64, y: f64| -13.0 * (2.0 * x + 1.0).sin() * (3.0 * y).cos() + 2.0 * y;
    let g = |x: f64, y: f64| (x * y).exp();
    let at = |i: usize, j: usize| s.center(i as isize, j as isize);
    let v = ScalarField::from_fn(s, |i, j| {
        let [x, y] = at(i, j);
        f(x, y)
    });
    let u = VectorField::from_fn(s, |i, j| {
        let [x, y] = at(i, j);
        [f(x, y), g(x, y)]
    });
    let gv = grad(&v, BoundaryKind::NeumannMirror);
    let dv = div(&u);
    let lv = laplacian(&u);
    let mut err = [0.0f64; 3];
    for (i, j) in s.cells().filter(|&(i, j)| !s.on_boundary(i, j)) {
        let [x, y] = at(i, j);
        let gr = gv.get(i, j);
        err[0] = err[0]
            .max((gr[0] - fx(x, y)).abs())
            .max((gr[1] - fy(x, y)).abs());
        err[1] = err[1].max((dv.get(i, j) - (fx(x, y) + x * g(x, y))).abs());
        err[2] = err[2].max((lv.get(i, j)[0] - lap(x, y)).abs());
    }
    err
}

fn stencils() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = spec(8, 8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let v = ScalarField::from_fn(s, |_, _| rng.gen_range(-1.0..1.0));
        let u = VectorField::from_fn(s, |_, _| {
            [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
        });
        for (bc, mirror) in [
            (BoundaryKind::NeumannMirror, true),
            (BoundaryKind::ZeroGhost, false),
        ] {
            let g = grad(&v, bc);
            let (ox, oy) = grad_oracle(&v, mirror);
            worst = worst
                .max(max_abs_diff(g.comp1().values(), &ox))
                .max(max_abs_diff(g.comp2().values(), &oy));
        }
        worst = worst.max(max_abs_diff(div(&u).values(), &div_oracle(&u)));
        let l = laplacian(&u);
        worst = worst
            .max(max_abs_diff(l.comp1().values(), &lap_oracle(u.comp1())))
            .max(max_abs_diff(l.comp2().values(), &lap_oracle(u.comp2())));
    }
    let e: Vec<[f64; 3]> = [16, 32, 64].iter().map(|&m| analytic_errors(m)).collect();
    let min_order = (0..3)
        .flat_map(|k| [order(e[0][k], e[1][k]), order(e[1][k], e[2][k])])
        .fold(f64::INFINITY, f64::min);
    (
        worst <= 1e-12 && min_order >= 1.9,
        format!("oracle max diff {worst:.1e} (<= 1e-12), min order {min_order:.3} (>= 1.9)"),
    )
}

// ---------------------------------------------------------------- 2

fn solver() -> Verdict {
    let p = AlmmParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = spec(24, 20);
    let mut worst_sym = 0.0f64;
    let mut positive = true;
    for _ in 0..20 {
        let mut rand_field = || {
            VectorField::from_fn(s, |_, _| {
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
            })
            .zero_boundary()
        };
        let (a, b) = (rand_field(), rand_field());
        let (la, lb) = (apply_operator(&a, &p), apply_operator(&b, &p));
        let scale = la.norm2() * b.norm2();
        worst_sym = worst_sym.max((la.dot(&b) - a.dot(&lb)).abs() / scale);
        positive &= la.dot(&a) > 0.0;
    }
    let s = spec(64, 64);
    let exact = VectorField::from_fn(s, |i, j| {
        let [x, y] = s.center(i as isize, j as isize);
        [
            (std::f64::consts::PI * x).sin() * (2.0 * y).cos() * y,
            (3.0 * x * y).sin() + x * (1.0 - y),
        ]
    })
    .zero_boundary();
    let r = apply_operator(&exact, &p);
    let rel = match solve_increment(&r, &p) {
        Ok(u) => u.axpby(1.0, &exact, -1.0).unwrap().norm2() / exact.norm2(),
        Err(_) => f64::INFINITY,
    };
    (
        worst_sym <= 1e-10 && positive && rel <= 1e-6,
        format!("symmetry defect {worst_sym:.1e} (<= 1e-10), positive {positive}, 64x64 recovery {rel:.1e} (<= 1e-6)"),
    )
}

// ---------------------------------------------------------------- 3

/// Linear velocity `A (x - c)` sampled on a 16x16 grid; points start near the centre.
fn linear_flow_error(a: [[f64; 2]; 2], exact: impl Fn(f64, [f64; 2]) -> [f64; 2], dt: f64) -> f64 {
    let s = spec(16, 16);
    let c = [0.5, 0.5];
    let u = VectorField::from_fn(s, |i, j| {
        let [x, y] = s.center(i as isize, j as isize);
        let d = [x - c[0], y - c[1]];
        [
            a[0][0] * d[0] + a[0][1] * d[1],
            a[1][0] * d[0] + a[1][1] * d[1],
        ]
    });
    let ctx = VelocityContext::frozen(
        u,
        ScalarField::constant(s, 1.0),
        MassParams::uniform(s, 0.01).unwrap(),
    );
    let start = |i: usize, j: usize| {
        let [x, y] = s.center(i as isize, j as isize);
        [0.1 * (x - c[0]), 0.1 * (y - c[1])]
    };
    let mut omega = Deformation::from_fn(s, |i, j| {
        let d = start(i, j);
        [c[0] + d[0], c[1] + d[1]]
    });
    let steps = (1.0 / dt).round() as usize;
    for _ in 0..steps {
        omega = rk4_step(&omega, &ctx, dt).unwrap();
    }
    let mut err = 0.0f64;
    for (i, j) in s.cells() {
        let e = exact(1.0, start(i, j));
        let w = omega.get(i, j);
        err = err
            .max((w[0] - c[0] - e[0]).abs())
            .max((w[1] - c[1] - e[1]).abs());
    }
    err
}

fn rk4_order() -> Verdict {
    let dts = [0.1, 0.05, 0.025];
    let growth = |t: f64, d: [f64; 2]| [d[0] * t.exp(), d[1] * t.exp()];
    let rotation = |t: f64, d: [f64; 2]| {
        let (s, c) = t.sin_cos();
        [c * d[0] - s * d[1], s * d[0] + c * d[1]]
    };
    let e1: Vec<f64> = dts
        .iter()
        .map(|&dt| linear_flow_error([[1.0, 0.0], [0.0, 1.0]], growth, dt))
        .collect();
    let e2: Vec<f64> = dts
        .iter()
        .map(|&dt| linear_flow_error([[0.0, -1.0], [1.0, 0.0]], rotation, dt))
        .collect();
    let orders = [
        order(e1[0], e1[1]),
        order(e1[1], e1[2]),
        order(e2[0], e2[1]),
        order(e2[1], e2[2]),
    ];
    let ok = orders.iter().all(|o| (3.8..=4.2).contains(o));
    (
        ok,
        format!(
            "exponential orders {:.3}, {:.3}; rotation orders {:.3}, {:.3} (in [3.8, 4.2])",
            orders[0], orders[1], orders[2], orders[3]
        ),
    )
}

// ---------------------------------------------------------------- 4

fn jacobian_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = spec(16, 20);
    let mut sum_defect = 0.0f64;
    for _ in 0..10 {
        let omega = Deformation::from_fn(s, |i, j| {
            let [x, y] = s.center(i as isize, j as isize);
            [
                x + 0.4 * s.hx() * rng.gen_range(-1.0..1.0),
                y + 0.4 * s.hy() * rng.gen_range(-1.0..1.0),
            ]
        });
        let det = det_jacobian(&omega);
        let tr = triangle_ratios(&omega);
        for k in 0..s.len() {
            let half_sum = 0.5 * tr.all().iter().map(|r| r.values()[k]).sum::<f64>();
            sum_defect = sum_defect.max((det.values()[k] - half_sum).abs());
        }
    }
    let mut affine_defect = 0.0f64;
    for _ in 0..10 {
        let a: f64 = rng.gen_range(0.7..1.3);
        let b: f64 = rng.gen_range(-0.4..0.4);
        let c: f64 = rng.gen_range(-0.4..0.4);
        let d = (1.0 + b * c) / a;
        let shift = [rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)];
        let omega = Deformation::from_fn(s, |i, j| {
            let [x, y] = s.center(i as isize, j as isize);
            let (x, y) = (x - 0.5, y - 0.5);
            [
                0.5 + shift[0] + a * x + b * y,
                0.5 + shift[1] + c * x + d * y,
            ]
        });
        let det = det_jacobian(&omega);
        for (i, j) in s.cells().filter(|&(i, j)| !s.on_boundary(i, j)) {
            affine_defect = affine_defect.max((det.get(i, j) - 1.0).abs());
        }
    }
    (
        sum_defect <= 1e-12 && affine_defect <= 1e-12,
        format!("|det - sum/2| {sum_defect:.1e}, |det - 1| on unit affine maps {affine_defect:.1e} (<= 1e-12)"),
    )
}

// ---------------------------------------------------------------- 5

/// Orientation check over every quad of the cell-centre lattice: each corner
/// that is a real grid point forms a triangle with its two quad neighbours.
fn has_inversion(omega: &Deformation) -> bool {
    let s = omega.spec();
    let (m, n) = (s.m() as isize, s.n() as isize);
    for j in -1..n {
        for i in -1..m {
            let quad = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            for k in 0..4 {
                let (ci, cj) = quad[k];
                if ci < 0 || cj < 0 || ci >= m || cj >= n {
                    continue;
                }
                let o = omega.ghost(ci, cj);
                let next = omega.ghost(quad[(k + 1) % 4].0, quad[(k + 1) % 4].1);
                let prev = omega.ghost(quad[(k + 3) % 4].0, quad[(k + 3) % 4].1);
                let cross =
                    (next[0] - o[0]) * (prev[1] - o[1]) - (next[1] - o[1]) * (prev[0] - o[0]);
                if cross <= 0.0 {
                    return true;
                }
            }
        }
    }
    false
}

fn fold_detection() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut agree, mut folded) = (0, 0);
    for k in 0..100 {
        let m = 8 + k % 9;
        let n = 8 + (k * 7) % 11;
        let s = spec(m, n);
        let amp = 0.9 * k as f64 / 100.0;
        let omega = Deformation::from_fn(s, |i, j| {
            let [x, y] = s.center(i as isize, j as isize);
            [
                x + amp * s.hx() * rng.gen_range(-1.0..1.0),
                y + amp * s.hy() * rng.gen_range(-1.0..1.0),
            ]
        });
        let positive = unfold_indicator(&omega, 0.0).r_min > 0.0;
        let inverted = has_inversion(&omega);
        folded += usize::from(inverted);
        agree += usize::from(positive != inverted);
    }
    (
        agree == 100 && folded > 0 && folded < 100,
        format!("{agree}/100 grids agree with the orientation oracle ({folded} folded)"),
    )
}

// ---------------------------------------------------------------- 6

fn correction() -> Verdict {
    let s = spec(64, 64);
    let eps = 1e-2;
    let ctx = VelocityContext::frozen(
        VectorField::zeros(s),
        ScalarField::constant(s, 1.0),
        MassParams::uniform(s, 0.01).unwrap(),
    );
    let identity = Deformation::identity(s);
    let mut fixed = 0;
    let mut notes = Vec::new();
    for k in 0..20 {
        let p = (8 + 2 * k, 10 + (7 * k) % 40);
        let theta = std::f64::consts::TAU * k as f64 / 20.0 + 0.3;
        let mut omega = identity.clone();
        let [x, y] = omega.get(p.0, p.1);
        omega.set(
            p.0,
            p.1,
            [
                x + 1.3 * s.hx() * theta.cos(),
                y + 1.3 * s.hy() * theta.sin(),
            ],
        );
        if unfold_indicator(&omega, 0.0).r_min >= 0.0 {
            notes.push(format!("case {k} is not folded"));
            continue;
        }
        match correct_deformation(&omega, &identity, 1.0 / 40.0, &ctx, 0.01, eps) {
            Ok(out)
                if out.status == CorrectionStatus::Corrected
                    && unfold_indicator(&out.omega, eps).folded.is_empty() =>
            {
                fixed += 1
            }
            Ok(out) => notes.push(format!("case {k}: {:?}", out.status)),
            Err(e) => notes.push(format!("case {k}: {e}")),
        }
    }
    let mut detail = format!("{fixed}/20 single folds Corrected with every indicator >= {eps}");
    if !notes.is_empty() {
        detail.push_str(&format!(" [{}]", notes.join("; ")));
    }
    (fixed == 20, detail)
}

// ---------------------------------------------------------------- 7

fn circle_to_square() -> Verdict {
    let (t, r) = gen_pair(PairKind::CircleSquare, 128, 128, 0).unwrap();
    let cfg = Config::default();
    let res = match register(&t, &r, &cfg) {
        Ok(res) => res,
        Err(ab) => return (false, format!("aborted: {ab}")),
    };
    let m = &res.metrics;
    let re = m.re_ssd.unwrap_or(f64::NAN);
    let steps_positive = res.per_step.iter().all(|s| s.r_min > 0.0);
    let ok = re < 0.01
        && steps_positive
        && (0.99..=1.01).contains(&m.det_mean)
        && m.det_min >= 0.1
        && m.det_max <= 5.0;
    (
        ok,
        format!(
            "Re_SSD {:.4}% (< 1%), R_min > 0 at all {} steps {}, det_mean {:.4}, det range [{:.3}, {:.3}]",
            100.0 * re,
            res.per_step.len(),
            steps_positive,
            m.det_mean,
            m.det_min,
            m.det_max
        ),
    )
}

// ---------------------------------------------------------------- 8

fn composite_sweep() -> Verdict {
    let (t, r) = gen_pair(PairKind::BrainBlob, 128, 128, 0).unwrap();
    let mut runs: Vec<(CompositeKind, Option<RegistrationResult>)> = Vec::new();
    for kind in CompositeKind::ALL {
        let cfg = Config {
            composite: kind,
            ..Default::default()
        };
        runs.push((kind, register(&t, &r, &cfg).ok()));
    }
    let re = |res: &RegistrationResult| res.metrics.re_ssd.unwrap_or(f64::INFINITY);
    let best = runs
        .iter()
        .filter_map(|(_, res)| res.as_ref().map(re))
        .fold(f64::INFINITY, f64::min);
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, res) in &runs {
        match res {
            Some(res) => {
                let m = &res.metrics;
                if *kind != CompositeKind::P3 {
                    ok &= m.r_min > 0.0 && (0.99..=1.01).contains(&m.det_mean);
                }
                parts.push(format!(
                    "{kind}: Re_SSD {:.4} R_min {:.3} det_mean {:.4}",
                    re(res),
                    m.r_min,
                    m.det_mean
                ));
            }
            None => {
                ok &= *kind == CompositeKind::P3;
                parts.push(format!("{kind}: aborted"));
            }
        }
    }
    let p1 = runs[0].1.as_ref().map_or(f64::INFINITY, re);
    ok &= p1 <= 1.5 * best;
    parts.push(format!("P1/best {:.3} (<= 1.5)", p1 / best));
    (ok, parts.join("; "))
}

// ---------------------------------------------------------------- 9

fn demons_contrast() -> Verdict {
    let (t, r) = gen_pair(PairKind::CShape, 128, 128, 0).unwrap();
    let cfg = Config::default();
    let ours = match register(&t, &r, &cfg) {
        Ok(res) => res,
        Err(ab) => return (false, format!("registration aborted: {ab}")),
    };
    let aggressive = DemonsParams {
        sigma: 1.0,
        tau_norm: 0.4,
        iters: 300,
    };
    let theirs = register_demons(&t, &r, &aggressive, cfg.eps).unwrap();
    let (om, dm) = (&ours.metrics, &theirs.metrics);
    let (ore, dre) = (om.re_ssd.unwrap_or(f64::NAN), dm.re_ssd.unwrap_or(f64::NAN));
    let folds = dm.r_min <= 0.0;
    let worse = dre >= 2.0 * ore;
    (
        om.r_min > 0.0 && (folds || worse),
        format!(
            "ours R_min {:.3} Re_SSD {ore:.4}; demons R_min {:.3} Re_SSD {dre:.4} (folds {folds}, >= 2x worse {worse})",
            om.r_min, dm.r_min
        ),
    )
}

// ---------------------------------------------------------------- 10

fn strip_runtime(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("runtime_s");
    v.to_string()
}

fn identity_fixed_point() -> Verdict {
    let p = SynthParams {
        shift_px: 0.0,
        ..Default::default()
    };
    let (t, r) = gen_pair_with(PairKind::TranslatedBlob, 64, 64, 0, &p).unwrap();
    let cfg = Config::default();
    let runs: Vec<RegistrationResult> = match (0..2).map(|_| register(&t, &r, &cfg)).collect() {
        Ok(runs) => runs,
        Err(ab) => return (false, format!("aborted: {ab}")),
    };
    let drift = runs[0]
        .omega_final
        .max_distance(&Deformation::identity(t.spec()));
    let same = strip_runtime(&metrics_json(&runs[0], "perfect_match"))
        == strip_runtime(&metrics_json(&runs[1], "perfect_match"));
    (
        drift <= 1e-10 && same,
        format!("||omega - x||_inf {drift:.1e} (<= 1e-10), repeated metrics.json identical {same}"),
    )
}

// ----------------------------------------------------------------

struct Criterion {
    id: u32,
    name: &'static str,
    limit_s: f64,
    run: fn() -> Verdict,
}

const CRITERIA: [Criterion; 10] = [
    Criterion {
        id: 1,
        name: "stencil oracles and O(h^2) order",
        limit_s: 5.0,
        run: stencils,
    },
    Criterion {
        id: 2,
        name: "SPD operator and solver recovery",
        limit_s: 30.0,
        run: solver,
    },
    Criterion {
        id: 3,
        name: "RK4 convergence order",
        limit_s: 10.0,
        run: rk4_order,
    },
    Criterion {
        id: 4,
        name: "Jacobian from triangle ratios",
        limit_s: 5.0,
        run: jacobian_identity,
    },
    Criterion {
        id: 5,
        name: "fold detection soundness",
        limit_s: 10.0,
        run: fold_detection,
    },
    Criterion {
        id: 6,
        name: "single-fold correction",
        limit_s: 10.0,
        run: correction,
    },
    Criterion {
        id: 7,
        name: "circle to square, 128x128",
        limit_s: 300.0,
        run: circle_to_square,
    },
    Criterion {
        id: 8,
        name: "composite sweep on brain blob",
        limit_s: 1200.0,
        run: composite_sweep,
    },
    Criterion {
        id: 9,
        name: "contrast with active demons",
        limit_s: 600.0,
        run: demons_contrast,
    },
    Criterion {
        id: 10,
        name: "identity fixed point, determinism",
        limit_s: 60.0,
        run: identity_fixed_point,
    },
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut stderr = std::io::stderr();
    let mut failed = Vec::new();
    let mut ran = 0;
    for c in CRITERIA
        .iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.id))
    {
        let start = Instant::now();
        let (ok, detail) = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < c.limit_s;
        let pass = ok && in_time;
        ran += 1;
        if !pass {
            failed.push(c.id);
        }
        writeln!(
            stderr,
            "criterion {:>2} {}: {} | {} | {:.2}s (limit {}s)",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            detail,
            secs,
            c.limit_s
        )
        .unwrap();
    }
    writeln!(stderr, "acceptance: {}/{} passed", ran - failed.len(), ran).unwrap();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        writeln!(stderr, "failed criteria: {failed:?}").unwrap();
        ExitCode::FAILURE
    }
}

//! Independent oracles and helpers shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use replankit::bench::{load_scenario, run_scenario, Scenario};
use replankit::cspace::{Configuration, Metric};
use replankit::graph::{NodeIds, Path};
use replankit::manager::ExecutionReport;
use replankit::replanners::Registry;
use replankit::trace::{JsonlSink, TraceLine, TraceRecord};

pub fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

pub fn scenario(name: &str) -> Scenario {
    load_scenario(scenario_path(name)).unwrap()
}

pub fn with_replanner(mut s: Scenario, name: &str) -> Scenario {
    s.replanner.name = name.into();
    s
}

pub struct TracedRun {
    pub report: ExecutionReport,
    pub bytes: Vec<u8>,
    pub lines: Vec<TraceLine>,
}

/// Runs once, keeping the serialized trace and its parsed lines.
pub fn traced_run(s: &Scenario, seed: u64, registry: &Registry) -> TracedRun {
    let mut sink = JsonlSink::new(Vec::new());
    let report = run_scenario(s, seed, registry, &mut sink).unwrap();
    let bytes = sink.into_inner();
    let lines = replankit::trace::read_trace(bytes.as_slice()).unwrap();
    TracedRun { report, bytes, lines }
}

pub struct Tick<'a> {
    pub at: f64,
    pub q: &'a Configuration,
    pub qdot: &'a [f64],
    pub speed: f64,
}

pub fn ticks(lines: &[TraceLine]) -> Vec<Tick<'_>> {
    lines
        .iter()
        .filter_map(|l| match &l.record {
            TraceRecord::Tick { at, q, qdot, speed, .. } => Some(Tick {
                at: *at,
                q,
                qdot,
                speed: *speed,
            }),
            _ => None,
        })
        .collect()
}

/// Worst violations of the speed, acceleration and step bounds over
/// consecutive ticks: `(speed - v_max, |dv|/dt - a_max, step - v_max dt)`.
pub fn tick_limit_excess(lines: &[TraceLine], metric: &Metric, v_max: f64, a_max: f64, dt: f64) -> (f64, f64, f64) {
    let ticks = ticks(lines);
    let mut worst = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for t in &ticks {
        let qdot_norm = t.qdot.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst.0 = worst.0.max(t.speed - v_max).max(qdot_norm - v_max);
    }
    for w in ticks.windows(2) {
        worst.1 = worst.1.max((w[1].speed - w[0].speed).abs() / dt - a_max);
        worst.2 = worst.2.max(metric.distance(w[0].q, w[1].q) - v_max * dt);
    }
    worst
}

/// Distance from `c` to the segment `a b` in the plane, from the
/// normal-equation foot point clamped to the segment.
pub fn segment_point_distance(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let u = if len2 == 0.0 {
        0.0
    } else {
        (((c[0] - a[0]) * dx + (c[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (px, py) = (a[0] + u * dx, a[1] + u * dy);
    ((c[0] - px).powi(2) + (c[1] - py).powi(2)).sqrt()
}

/// Smallest distance from `x` to `n + 1` points spread uniformly by arc
/// length along the polyline through `nodes`.
pub fn dense_projection_distance(nodes: &[Configuration], x: &Configuration, n: usize) -> f64 {
    let seg: Vec<f64> = nodes.windows(2).map(|w| Metric::Euclidean.distance(&w[0], &w[1])).collect();
    let total: f64 = seg.iter().sum();
    let mut best = f64::INFINITY;
    let mut k = 0;
    let mut base = 0.0;
    for i in 0..=n {
        let s = total * i as f64 / n as f64;
        while k + 1 < seg.len() && s > base + seg[k] {
            base += seg[k];
            k += 1;
        }
        let u = if seg[k] > 0.0 { ((s - base) / seg[k]).clamp(0.0, 1.0) } else { 0.0 };
        let p: Vec<f64> = nodes[k]
            .as_slice()
            .iter()
            .zip(nodes[k + 1].as_slice())
            .map(|(a, b)| a + u * (b - a))
            .collect();
        let d = p.iter().zip(x.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        best = best.min(d);
    }
    best
}

/// Duration of the fastest motion from `v0` to rest over `length`, as the
/// integral of `ds / v(s)` with `v(s)` the lowest of the speed cap, the
/// acceleration curve and the braking curve. Each smooth piece `[p, r]` is
/// mapped through `s = p + (r - p) sin²(θ/2)`, which removes the inverse
/// square-root endpoint singularities, and integrated with composite Simpson.
pub fn trapezoid_time_by_quadrature(length: f64, v_max: f64, a_max: f64, v0: f64) -> f64 {
    // Distance covered and distance left are passed separately so that
    // neither loses precision near its own end.
    let speed = |s: f64, left: f64| {
        v_max
            .min((v0 * v0 + 2.0 * a_max * s).max(0.0).sqrt())
            .min((2.0 * a_max * left).max(0.0).sqrt())
    };
    let mut cuts = vec![0.0, length];
    for c in [
        (v_max * v_max - v0 * v0) / (2.0 * a_max),
        length - v_max * v_max / (2.0 * a_max),
        (2.0 * a_max * length - v0 * v0) / (4.0 * a_max),
    ] {
        if c > 0.0 && c < length {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p, r) = (w[0], w[1]);
        // Finite limits at both ends; sample a hair inside them.
        let g = |theta: f64| {
            let half = 0.5 * theta.clamp(1e-15, std::f64::consts::PI - 1e-15);
            let (sin, cos) = half.sin_cos();
            let s = p + (r - p) * sin * sin;
            let left = (length - r) + (r - p) * cos * cos;
            let ds = (r - p) * sin * cos;
            ds / speed(s, left)
        };
        total += adaptive_simpson(&g, 0.0, std::f64::consts::PI, 1e-13, 48);
    }
    total
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), eps, depth)
}

/// A tree laid out by hand against a unit sphere at (5, 0), with the nodes
/// that must survive pruning.
pub struct PruneCase {
    pub name: &'static str,
    /// `(x, y, parent index)`; the first entry is the root.
    pub nodes: Vec<(f64, f64, Option<usize>)>,
    pub survivors: Vec<usize>,
}

pub const PRUNE_SPHERE: ([f64; 3], f64) = ([5.0, 0.0, 0.0], 1.0);

pub fn prune_cases() -> Vec<PruneCase> {
    vec![
        PruneCase {
            name: "chain through the sphere",
            nodes: vec![(0.0, 0.0, None), (2.0, 0.0, Some(0)), (3.5, 0.0, Some(1)), (6.5, 0.0, Some(2)), (8.0, 0.0, Some(3))],
            survivors: vec![0, 1, 2],
        },
        PruneCase {
            name: "star with one blocked spoke",
            nodes: vec![
                (5.0, 3.0, None),
                (3.0, 3.0, Some(0)),
                (7.0, 3.0, Some(0)),
                (5.0, 5.0, Some(0)),
                (5.0, -3.0, Some(0)),
                (2.0, 0.0, Some(0)),
                (7.0, -3.0, Some(4)),
            ],
            survivors: vec![0, 1, 2, 3, 5],
        },
        PruneCase {
            name: "nothing crosses",
            nodes: vec![(0.0, 3.0, None), (10.0, 3.0, Some(0)), (10.0, -3.0, Some(1)), (0.0, -3.0, Some(0)), (0.0, 0.0, Some(3))],
            survivors: vec![0, 1, 2, 3, 4],
        },
        PruneCase {
            name: "root only",
            nodes: vec![(0.0, 0.0, None)],
            survivors: vec![0],
        },
        PruneCase {
            name: "every child of the root blocked",
            nodes: vec![
                (3.0, 0.0, None),
                (7.0, 0.0, Some(0)),
                (6.0, 0.5, Some(0)),
                (6.0, -0.5, Some(0)),
                (9.0, 0.0, Some(1)),
                (6.0, 3.0, Some(2)),
            ],
            survivors: vec![0],
        },
        PruneCase {
            name: "leaf inside the sphere",
            nodes: vec![(0.0, 0.0, None), (2.0, 0.0, Some(0)), (5.0, 0.5, Some(1)), (2.0, 2.0, Some(1))],
            survivors: vec![0, 1, 3],
        },
        PruneCase {
            name: "deep blocked edge",
            nodes: vec![
                (0.0, 3.0, None),
                (2.0, 3.0, Some(0)),
                (4.0, 3.0, Some(1)),
                (5.0, 1.5, Some(2)),
                (5.0, -1.5, Some(3)),
                (6.0, -3.0, Some(4)),
                (8.0, 3.0, Some(2)),
            ],
            survivors: vec![0, 1, 2, 3, 6],
        },
        PruneCase {
            name: "ring around the sphere closed by a chord",
            nodes: vec![
                (0.0, 1.3, None),
                (10.0, 1.3, Some(0)),
                (0.0, -1.3, Some(0)),
                (10.0, -1.3, Some(2)),
                (10.0, 1.0, Some(3)),
                (0.0, 0.0, Some(1)),
            ],
            survivors: vec![0, 1, 2, 3, 4],
        },
        PruneCase {
            name: "two subtrees, one blocked at each depth",
            nodes: vec![
                (5.0, 5.0, None),
                (2.0, 2.0, Some(0)),
                (2.0, -2.0, Some(1)),
                (8.0, -2.0, Some(2)),
                (8.0, 2.0, Some(3)),
                (2.0, 0.0, Some(4)),
                (8.0, 8.0, Some(0)),
                (2.0, -6.0, Some(6)),
                (0.0, -6.0, Some(7)),
            ],
            survivors: vec![0, 1, 2, 3, 4, 6],
        },
        PruneCase {
            name: "comb with one blocked tooth",
            nodes: {
                let mut nodes = vec![(1.0, 4.0, None)];
                for (k, x) in [3.0, 5.0, 7.0, 9.0].into_iter().enumerate() {
                    nodes.push((x, 4.0, Some(if k == 0 { 0 } else { 1 + 3 * (k - 1) })));
                    let spine = nodes.len() - 1;
                    nodes.push((x, -4.0, Some(spine)));
                    nodes.push((x + 0.5, -5.0, Some(spine + 1)));
                }
                nodes.push((1.0, -4.0, Some(0)));
                nodes
            },
            // Spine 1, 4, 7, 10; the tooth at x = 5 is 5 with its tip 6.
            survivors: vec![0, 1, 2, 3, 4, 7, 8, 9, 10, 11, 12, 13],
        },
    ]
}

/// Random polyline with `n` nodes in `dim` dimensions inside `[-5, 5]`.
pub fn random_polyline(rng: &mut impl rand::Rng, dim: usize, n: usize) -> Vec<Configuration> {
    (0..n)
        .map(|_| Configuration::new((0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap())
        .collect()
}

pub fn path_of(nodes: &[Configuration]) -> Path {
    Path::from_configurations(Metric::Euclidean, &NodeIds::new(), nodes.iter().cloned()).unwrap()
}

//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Everything runs inside a single test so
//! wall-clock measurements are not disturbed by other tests.

mod common;

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use replankit::bench::{audit, audit_against, Scenario};
use replankit::clock::Budget;
use replankit::cspace::{JointBounds, Metric};
use replankit::graph::{Node, NodeIds, Tree};
use replankit::manager::Mode;
use replankit::replanners::{Registry, ReplanStatus};
use replankit::scene::{CollisionChecker, Obstacle, RobotModel, Scene};
use replankit::solvers::{rrt_solve, PlanningProblem, SolverConfig};
use replankit::trace::{Outcome, TraceRecord};
use replankit::trajectory::{TimeLaw, Trajectory};

struct Verdicts(Vec<(String, bool)>);

impl Verdicts {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push((name.to_string(), pass));
    }
}

/// What the per-run checks of suites 1 to 3 accumulate.
#[derive(Default)]
struct SuiteFindings {
    runs: usize,
    run_seconds: f64,
    replan_events: usize,
    replan_elapsed_max: f64,
    replan_over_budget: usize,
    architecture_failures: usize,
    audited_collisions: usize,
    ground_truth_collisions: usize,
    speed_excess: f64,
    accel_excess: f64,
    step_excess: f64,
}

impl SuiteFindings {
    fn new() -> Self {
        Self {
            speed_excess: f64::NEG_INFINITY,
            accel_excess: f64::NEG_INFINITY,
            step_excess: f64::NEG_INFINITY,
            ..Self::default()
        }
    }

    /// Runs `s` with `seed`, checks everything common to all suites and
    /// hands the run to `per_run`.
    fn run(&mut self, s: &Scenario, seed: u64, registry: &Registry, per_run: impl FnOnce(&TracedRun)) {
        let started = Instant::now();
        let run = traced_run(s, seed, registry);
        self.run_seconds += started.elapsed().as_secs_f64();
        self.runs += 1;

        let budget = s.manager.max_replanning_time;
        for e in &run.report.replan_events {
            self.replan_events += 1;
            self.replan_elapsed_max = self.replan_elapsed_max.max(e.elapsed);
            let bound = match s.manager.mode {
                Mode::Deterministic => budget,
                Mode::Threaded => 1.5 * budget,
            };
            self.replan_over_budget += usize::from(e.elapsed > bound);
        }

        let recorded = audit(&run.lines, 10).unwrap();
        self.architecture_failures += usize::from(!recorded.architecture_ok());
        self.audited_collisions += recorded.collisions();
        let mut problem = s.problem(seed);
        let initial = s.initial_path(&mut problem).unwrap();
        let scene = s.scene(seed, &initial).unwrap();
        self.ground_truth_collisions += audit_against(&run.lines, 10, &scene).unwrap().collisions();

        if s.manager.mode == Mode::Deterministic {
            let m = &s.manager;
            let (v, a, d) = tick_limit_excess(&run.lines, &s.metric, m.v_max, m.a_max, m.exec_period());
            self.speed_excess = self.speed_excess.max(v);
            self.accel_excess = self.accel_excess.max(a);
            self.step_excess = self.step_excess.max(d);
        }
        per_run(&run);
    }

    fn merge(&mut self, other: &SuiteFindings) {
        self.runs += other.runs;
        self.run_seconds += other.run_seconds;
        self.replan_events += other.replan_events;
        self.replan_elapsed_max = self.replan_elapsed_max.max(other.replan_elapsed_max);
        self.replan_over_budget += other.replan_over_budget;
        self.architecture_failures += other.architecture_failures;
        self.audited_collisions += other.audited_collisions;
        self.ground_truth_collisions += other.ground_truth_collisions;
        self.speed_excess = self.speed_excess.max(other.speed_excess);
        self.accel_excess = self.accel_excess.max(other.accel_excess);
        self.step_excess = self.step_excess.max(other.step_excess);
    }
}

fn initial_cost(lines: &[replankit::trace::TraceLine], metric: &Metric) -> f64 {
    match &lines[0].record {
        TraceRecord::Header { initial_path, .. } => initial_path.windows(2).map(|w| metric.distance(&w[0], &w[1])).sum(),
        other => panic!("trace starts with {other:?}"),
    }
}

fn static_scene(v: &mut Verdicts, registry: &Registry) -> SuiteFindings {
    let s = scenario("empty");
    let mut f = SuiteFindings::new();
    let (mut goal, mut events, mut worst_gap) = (0, 0, 0.0f64);
    for k in 0..20 {
        f.run(&s, s.seed + k, registry, |run| {
            goal += usize::from(run.report.outcome == Outcome::GoalReached);
            events += run.report.replan_events.len();
            worst_gap = worst_gap.max((run.report.traversed_length - initial_cost(&run.lines, &s.metric)).abs());
        });
    }
    let pass = goal == 20 && events == 0 && worst_gap <= 1e-6 && f.run_seconds < 5.0 && f.ground_truth_collisions == 0;
    v.record(
        "1 static scene",
        pass,
        format!(
            "{goal}/20 goal reached, {events} replan events, |traversed - initial cost| <= {worst_gap:.2e}, {:.2} s",
            f.run_seconds
        ),
    );
    f
}

fn detour(v: &mut Verdicts, registry: &Registry) -> SuiteFindings {
    let mut all = SuiteFindings::new();
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["drrt", "mprrt"] {
        let s = with_replanner(scenario("detour"), name);
        let mut f = SuiteFindings::new();
        let (mut goal, mut reported, mut without_new_path) = (0, 0u32, 0);
        for k in 0..50 {
            f.run(&s, s.seed + k, registry, |run| {
                goal += usize::from(run.report.outcome == Outcome::GoalReached);
                reported += run.report.collision_count;
                let new_paths = run.report.replan_events.iter().filter(|e| e.status == ReplanStatus::NewPath).count();
                without_new_path += usize::from(new_paths == 0);
            });
        }
        pass &= goal == 50 && reported == 0 && f.audited_collisions == 0 && f.ground_truth_collisions == 0 && without_new_path == 0;
        details.push(format!(
            "{name} {goal}/50 goal reached, collisions {reported} reported / {} audited / {} ground truth, {without_new_path} runs without a new path",
            f.audited_collisions, f.ground_truth_collisions
        ));
        all.merge(&f);
    }
    pass &= all.run_seconds < 60.0;
    details.push(format!("{:.2} s", all.run_seconds));
    v.record("2 detour suite", pass, details.join("; "));
    all
}

fn sealed(v: &mut Verdicts, registry: &Registry) -> SuiteFindings {
    let s = scenario("sealed");
    let mut f = SuiteFindings::new();
    let (mut stopped, mut reported, mut fastest_end) = (0, 0u32, 0.0f64);
    for k in 0..20 {
        f.run(&s, s.seed + k, registry, |run| {
            stopped += usize::from(run.report.outcome == Outcome::SafetyStopped);
            reported += run.report.collision_count;
            fastest_end = fastest_end.max(run.report.final_speed.abs());
        });
    }
    let pass = stopped == 20
        && reported == 0
        && f.audited_collisions == 0
        && f.ground_truth_collisions == 0
        && fastest_end <= 1e-9
        && f.run_seconds < 30.0;
    v.record(
        "3 sealed-goal suite",
        pass,
        format!(
            "{stopped}/20 safety stopped, collisions {reported} reported / {} audited / {} ground truth, final speed <= {fastest_end:.1e}, {:.2} s",
            f.audited_collisions, f.ground_truth_collisions, f.run_seconds
        ),
    );
    f
}

/// A sample of the suites on real threads against the wall clock.
fn threaded_sample(registry: &Registry) -> SuiteFindings {
    let mut f = SuiteFindings::new();
    for (name, replanner, seeds) in [("detour", "drrt", 2), ("detour", "mprrt", 2), ("sealed", "drrt", 1)] {
        let mut s = with_replanner(scenario(name), replanner);
        s.manager.mode = Mode::Threaded;
        for k in 0..seeds {
            f.run(&s, s.seed + k, registry, |_| {});
        }
    }
    f
}

fn budget(v: &mut Verdicts, deterministic: &SuiteFindings, threaded: &SuiteFindings) {
    let pass = deterministic.replan_over_budget == 0 && threaded.replan_over_budget == 0 && threaded.replan_events > 0;
    v.record(
        "4 replan budget",
        pass,
        format!(
            "virtual time: {} events, max {:.6} s, {} over 0.1 s; threaded ({} runs): {} events, max {:.4} s, {} over 0.15 s",
            deterministic.replan_events,
            deterministic.replan_elapsed_max,
            deterministic.replan_over_budget,
            threaded.runs,
            threaded.replan_events,
            threaded.replan_elapsed_max,
            threaded.replan_over_budget
        ),
    );
}

fn architecture(v: &mut Verdicts, all: &SuiteFindings) {
    v.record(
        "5 architecture invariants",
        all.architecture_failures == 0,
        format!("{} of {} traces violate swap start, abscissa monotonicity or coherence", all.architecture_failures, all.runs),
    );
}

fn oracles(v: &mut Verdicts) {
    let mut rng = ChaCha8Rng::seed_from_u64(20);

    let mut worst_projection = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let dim = rng.gen_range(2..=4);
        let n = rng.gen_range(2..=6);
        let nodes = random_polyline(&mut rng, dim, n);
        let path = path_of(&nodes);
        let x = random_polyline(&mut rng, dim, 1).remove(0);
        let (s, p) = path.project(&x, None);
        assert!(s >= 0.0 && s <= path.length() + 1e-9);
        let excess = Metric::Euclidean.distance(&x, &p) - dense_projection_distance(&nodes, &x, 100_000);
        worst_projection = worst_projection.max(excess);
    }
    let projection_ok = worst_projection <= 1e-6;

    let (mut compared, mut disagreements, mut blocked) = (0, 0, 0);
    let mut cases = 0;
    while cases < 1000 {
        let clearance = rng.gen_range(0.0..0.1);
        let checker = CollisionChecker::new(RobotModel::point(clearance), Metric::Euclidean, 0.01).unwrap();
        let center = [rng.gen_range(2.0..8.0), rng.gen_range(-2.0..2.0)];
        let radius = rng.gen_range(0.2..1.5);
        let a = [rng.gen_range(0.0..10.0), rng.gen_range(-3.0..3.0)];
        let b = [rng.gen_range(0.0..10.0), rng.gen_range(-3.0..3.0)];
        let margin = segment_point_distance(a, b, center) - radius - clearance;
        if margin.abs() <= checker.resolution() {
            continue;
        }
        cases += 1;
        let snap = Scene::new(vec![Obstacle::sphere("s", [center[0], center[1], 0.0], radius)])
            .unwrap()
            .world_at(0.0, 0);
        let free = checker.check_edge(&snap, &q(&a), &q(&b));
        compared += 1;
        blocked += usize::from(margin < 0.0);
        disagreements += usize::from(free != (margin > 0.0));
    }
    let edge_ok = disagreements == 0;

    let mut worst_time = 0.0f64;
    for _ in 0..100 {
        let length: f64 = rng.gen_range(0.01..20.0);
        let v_max: f64 = rng.gen_range(0.1..3.0);
        let a_max: f64 = rng.gen_range(0.1..5.0);
        let v0 = if rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0.0..v_max).min((2.0 * a_max * length).sqrt())
        };
        let law = TimeLaw::trapezoidal(length, v_max, a_max, v0).unwrap();
        worst_time = worst_time.max((law.total_time() - trapezoid_time_by_quadrature(length, v_max, a_max, v0)).abs());
    }
    let trapezoid_ok = worst_time <= 1e-9;

    let checker = CollisionChecker::new(RobotModel::point(0.0), Metric::Euclidean, 0.01).unwrap();
    let (center, radius) = PRUNE_SPHERE;
    let snap = Scene::new(vec![Obstacle::sphere("s", center, radius)]).unwrap().world_at(0.0, 0);
    let mut prune_failures = Vec::new();
    for case in prune_cases() {
        let ids = NodeIds::new();
        let (x, y, _) = case.nodes[0];
        let mut tree = Tree::new(Metric::Euclidean, Node::new(ids.next(), q(&[x, y])));
        let mut node_ids = vec![tree.root().id];
        for &(x, y, parent) in &case.nodes[1..] {
            let i = tree.add(q(&[x, y]), parent.unwrap(), &ids);
            node_ids.push(tree.node(i).id);
        }
        let (pruned, removed) = tree.prune_invalid(&checker, &snap).unwrap();
        let mut got: Vec<_> = pruned.nodes().iter().map(|n| n.id).collect();
        got.sort();
        let want: Vec<_> = case.survivors.iter().map(|&i| node_ids[i]).collect();
        let edges_ok = pruned.connections().all(|c| {
            let (p, ch) = (pruned.index_of(c.parent).unwrap(), pruned.index_of(c.child).unwrap());
            checker.check_edge(&snap, &pruned.node(p).q, &pruned.node(ch).q)
        });
        if got != want || removed != case.nodes.len() - want.len() || !pruned.is_valid() || !edges_ok {
            prune_failures.push(case.name);
        }
    }
    let prune_ok = prune_failures.is_empty();

    v.record(
        "6 oracle equivalences",
        projection_ok && edge_ok && trapezoid_ok && prune_ok,
        format!(
            "projection excess <= {worst_projection:.2e} over 1000; check_edge {disagreements} disagreements over {compared} ({blocked} blocked); trapezoid |dT| <= {worst_time:.2e} over 100; prune mismatches {prune_failures:?} over 10"
        ),
    );
}

fn determinism(v: &mut Verdicts, registry: &Registry) {
    let mut differing = Vec::new();
    let mut pairs = 0;
    for (name, replanner) in [("empty", "drrt"), ("detour", "drrt"), ("detour", "mprrt"), ("sealed", "drrt"), ("arm", "drrt"), ("arm", "mprrt")] {
        let s = with_replanner(scenario(name), replanner);
        for seed in [s.seed, s.seed + 7] {
            pairs += 1;
            let first = traced_run(&s, seed, registry).bytes;
            if (1..5).any(|_| traced_run(&s, seed, registry).bytes != first) {
                differing.push(format!("{name}/{replanner}/{seed}"));
            }
        }
    }

    let checker = CollisionChecker::new(RobotModel::point(0.05), Metric::Euclidean, 0.01).unwrap();
    let snap = Arc::new(Scene::new(vec![Obstacle::sphere("wall", [5.0, 0.0, 0.0], 1.5)]).unwrap().world_at(0.0, 0));
    let bounds = JointBounds::new(q(&[-1.0, -3.0]), q(&[11.0, 3.0])).unwrap();
    let solve = |seed| {
        let mut prob =
            PlanningProblem::new(q(&[0.0, 0.0]), q(&[10.0, 0.0]), bounds.clone(), checker.clone(), snap.clone(), seed).unwrap();
        let r = rrt_solve(&mut prob, &SolverConfig::default(), Budget::Unlimited).unwrap();
        (r.tree, r.path.map(|p| p.configurations().cloned().collect::<Vec<_>>()), r.iterations)
    };
    let solver_mismatches = (0..10).filter(|&seed| solve(seed) != solve(seed)).count();
    let solved = (0..10).filter(|&seed| solve(seed).1.is_some()).count();

    v.record(
        "7 determinism",
        differing.is_empty() && solver_mismatches == 0 && solved == 10,
        format!(
            "{} of {pairs} scenario/seed pairs differ over 5 repeats {differing:?}; rrt_solve {solver_mismatches} of 10 seeds differ ({solved} solved)",
            differing.len()
        ),
    );
}

fn trajectory_limits(v: &mut Verdicts, all: &SuiteFindings) {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let (mut speed, mut accel, mut regress) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
    let grid = 1e-3;
    for _ in 0..100 {
        let n = rng.gen_range(2..=6);
        let nodes = random_polyline(&mut rng, 2, n);
        let path = Arc::new(path_of(&nodes));
        let v_max: f64 = rng.gen_range(0.2..2.0);
        let a_max: f64 = rng.gen_range(0.5..4.0);
        let v0 = rng.gen_range(0.0..v_max).min((2.0 * a_max * path.length()).sqrt());
        let tr = Trajectory::along(path, v_max, a_max, v0, 0.0).unwrap();
        let steps = (tr.end_time() / grid).ceil() as usize + 1;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=steps {
            let sample = tr.sample(k as f64 * grid);
            let norm = sample.state.qdot.iter().map(|x| x * x).sum::<f64>().sqrt();
            speed = speed.max(norm - v_max);
            if let Some((s_prev, v_prev)) = prev {
                accel = accel.max((sample.speed - v_prev).abs() / grid - a_max);
                regress += usize::from(sample.s < s_prev);
            }
            prev = Some((sample.s, sample.speed));
        }
    }
    let pass = speed <= 1e-9
        && accel <= 1e-6
        && regress == 0
        && all.speed_excess <= 1e-9
        && all.accel_excess <= 1e-6
        && all.step_excess <= 1e-9;
    v.record(
        "8 trajectory limits",
        pass,
        format!(
            "1 ms grid over 100 trajectories: speed excess {speed:.1e}, accel excess {accel:.1e}, {regress} abscissa regressions; ticks of suites 1-3: speed {:.1e}, accel {:.1e}, step {:.1e}",
            all.speed_excess, all.accel_excess, all.step_excess
        ),
    );
}

fn planar_arm(v: &mut Verdicts, registry: &Registry) {
    let s = scenario("arm");
    let mut f = SuiteFindings::new();
    let mut outcome = None;
    let mut reported = 0;
    f.run(&s, s.seed, registry, |run| {
        outcome = Some(run.report.outcome);
        reported = run.report.collision_count;
    });
    let pass = outcome == Some(Outcome::GoalReached)
        && reported == 0
        && f.audited_collisions == 0
        && f.ground_truth_collisions == 0
        && f.architecture_failures == 0
        && f.run_seconds < 30.0;
    v.record(
        "9 planar arm end to end",
        pass,
        format!(
            "{outcome:?}, collisions {reported} reported / {} audited at 10x / {} ground truth at 10x, {:.2} s",
            f.audited_collisions, f.ground_truth_collisions, f.run_seconds
        ),
    );
}

#[test]
fn acceptance() {
    let registry = Registry::default();
    let mut v = Verdicts(Vec::new());

    let mut deterministic = static_scene(&mut v, &registry);
    deterministic.merge(&detour(&mut v, &registry));
    deterministic.merge(&sealed(&mut v, &registry));
    let threaded = threaded_sample(&registry);
    budget(&mut v, &deterministic, &threaded);
    let mut all = SuiteFindings::new();
    all.merge(&deterministic);
    all.merge(&threaded);
    architecture(&mut v, &all);
    oracles(&mut v);
    determinism(&mut v, &registry);
    trajectory_limits(&mut v, &deterministic);
    planar_arm(&mut v, &registry);

    let failed: Vec<_> = v.0.iter().filter(|(_, pass)| !pass).map(|(name, _)| name.as_str()).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

use std::sync::Arc;

use crate::clock::Budget;
use crate::cspace::{Configuration, JointBounds, Metric};
use crate::graph::{NodeIds, Path, Tree};
use crate::scene::{CollisionChecker, Obstacle, RobotModel, Scene, SceneSnapshot};
use crate::solvers::{rrt_solve, PlanningProblem, SolverConfig};

use super::*;

fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

fn checker() -> CollisionChecker {
    CollisionChecker::new(RobotModel::point(0.05), Metric::Euclidean, 0.01).unwrap()
}

fn context(seed: u64) -> ReplannerContext {
    ReplannerContext {
        goal: q(&[10.0, 0.0]),
        bounds: JointBounds::new(q(&[-1.0, -3.0]), q(&[11.0, 3.0])).unwrap(),
        checker: checker(),
        ids: NodeIds::new(),
        seed,
    }
}

fn snapshot(obstacles: Vec<Obstacle>) -> Arc<SceneSnapshot> {
    Arc::new(Scene::new(obstacles).unwrap().capture_snapshot(0.0))
}

fn straight(ids: &NodeIds) -> Path {
    Path::from_configurations(Metric::Euclidean, ids, (0..=5).map(|k| q(&[2.0 * k as f64, 0.0]))).unwrap()
}

/// Request from `s_repl` on the straight path, with obstruction flags set
/// against `snap` as the collision loop would.
fn request(ctx: &ReplannerContext, snap: Arc<SceneSnapshot>, s_repl: f64, budget: Budget) -> ReplanRequest {
    let mut path = straight(&ctx.ids);
    path.update_cost(&ctx.checker, &snap, 0.0);
    ReplanRequest {
        x_repl: path.point_at(s_repl),
        s_repl,
        current_path: path,
        current_tree: None,
        snapshot: snap,
        budget,
        solver_config: SolverConfig::default(),
    }
}

fn virtual_budget(seconds: f64) -> Budget {
    Budget::Virtual {
        seconds,
        iteration_cost: 1e-4,
    }
}

/// Ring of spheres sealing the goal.
fn seal() -> Vec<Obstacle> {
    (0..10)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / 10.0;
            Obstacle::sphere(format!("ring{k}"), [10.0 + 0.9 * a.cos(), 0.9 * a.sin(), 0.0], 0.45)
        })
        .collect()
}

/// Independent re-check of every connection at a tenth of the resolution.
fn fine_recheck(path: &Path, snap: &SceneSnapshot) -> bool {
    let fine = checker().with_resolution(0.001).unwrap();
    path.connections().iter().enumerate().all(|(k, _)| {
        fine.check_edge(snap, &path.nodes()[k].q, &path.nodes()[k + 1].q)
    })
}

fn assert_valid_new_path(outcome: &ReplanOutcome, req: &ReplanRequest, goal: &Configuration) {
    assert_eq!(outcome.status, ReplanStatus::NewPath);
    let path = outcome.path.as_ref().unwrap();
    assert_eq!(path.start().q, req.x_repl);
    assert!(Metric::Euclidean.distance(&path.goal().q, goal) <= req.solver_config.goal_tolerance);
    assert!(path.cost().is_finite());
    assert!(fine_recheck(path, &req.snapshot));
}

#[test]
fn drrt_unchanged_when_nothing_changed() {
    let ctx = context(1);
    let req = request(&ctx, snapshot(vec![]), 3.0, virtual_budget(0.1));
    let mut drrt = Drrt::new(ctx, &ReplannerParams::default()).unwrap();
    let outcome = drrt.replan(&req);
    assert_eq!(outcome.status, ReplanStatus::PathUnchanged);
    assert_eq!(drrt.last_pruned(), 0);
}

#[test]
fn drrt_keeps_path_when_pruned_branch_is_off_path() {
    let ctx = context(2);
    let snap = snapshot(vec![Obstacle::sphere("off", [6.5, 2.5, 0.0], 0.3)]);
    let mut req = request(&ctx, snap, 3.0, virtual_budget(0.1));
    let mut tree = Tree::goal_rooted_from_path(&req.current_path);
    let at6 = tree.nodes().iter().position(|n| n.q == q(&[6.0, 0.0])).unwrap();
    let up = tree.add(q(&[6.0, 2.0]), at6, &ctx.ids);
    tree.add(q(&[7.0, 3.0]), up, &ctx.ids);
    req.current_tree = Some(tree);
    let mut drrt = Drrt::new(ctx.clone(), &ReplannerParams::default()).unwrap();
    let outcome = drrt.replan(&req);
    assert_eq!(drrt.last_pruned(), 1);
    assert_valid_new_path(&outcome, &req, &ctx.goal);
    let path = outcome.path.unwrap();
    assert!((path.cost() - req.current_path.remaining_cost(3.0)).abs() < 1e-9);
    assert!(path.configurations().all(|c| c[1] == 0.0));
}

#[test]
fn drrt_detours_around_blocking_sphere() {
    for seed in 0..20 {
        let ctx = context(seed);
        let snap = snapshot(vec![Obstacle::sphere("block", [5.0, 0.0, 0.0], 0.5)]);
        let req = request(&ctx, snap, 3.0, virtual_budget(0.1));
        assert!(req.current_path.cost().is_infinite());
        let mut drrt = Drrt::new(ctx.clone(), &ReplannerParams::default()).unwrap();
        let outcome = drrt.replan(&req);
        assert_valid_new_path(&outcome, &req, &ctx.goal);
        assert!(outcome.elapsed <= 0.1);
        let tree = outcome.tree.unwrap();
        assert!(tree.is_valid());
        assert_eq!(tree.root().q, ctx.goal);
        assert!(tree
            .nodes()
            .iter()
            .filter_map(|n| n.parent.map(|p| (p, n)))
            .all(|(p, n)| ctx.checker.check_edge(&req.snapshot, &tree.node(p).q, &n.q)));
    }
}

#[test]
fn drrt_reuses_tree_across_cycles() {
    let ctx = context(3);
    let snap = snapshot(vec![Obstacle::sphere("block", [5.0, 0.0, 0.0], 0.5)]);
    let req = request(&ctx, snap.clone(), 3.0, virtual_budget(0.1));
    let mut drrt = Drrt::new(ctx.clone(), &ReplannerParams::default()).unwrap();
    let first = drrt.replan(&req);
    let grown = drrt.tree().unwrap().len();
    // Next cycle from a little further on the new path: nothing pruned, path free.
    let mut path = first.path.unwrap();
    path.update_cost(&ctx.checker, &snap, 0.0);
    let next = ReplanRequest {
        x_repl: path.point_at(0.2),
        s_repl: 0.2,
        current_path: path,
        ..req
    };
    assert_eq!(drrt.replan(&next).status, ReplanStatus::PathUnchanged);
    assert_eq!(drrt.tree().unwrap().len(), grown);
}

#[test]
fn sealed_goal_fails_within_budget() {
    for name in ["drrt", "mprrt"] {
        let ctx = context(4);
        let req = request(&ctx, snapshot(seal()), 3.0, virtual_budget(0.05));
        let mut replanner = Registry::default().create(name, ctx, &ReplannerParams::default()).unwrap();
        let outcome = replanner.replan(&req);
        assert_eq!(outcome.status, ReplanStatus::Failed, "{name}");
        assert!(outcome.elapsed <= 0.05, "{name}");
    }
}

#[test]
fn x_repl_in_collision_fails() {
    for name in ["drrt", "mprrt"] {
        let ctx = context(5);
        let req = request(&ctx, snapshot(vec![Obstacle::sphere("on", [3.0, 0.0, 0.0], 0.3)]), 3.0, virtual_budget(0.05));
        let mut replanner = Registry::default().create(name, ctx, &ReplannerParams::default()).unwrap();
        assert_eq!(replanner.replan(&req).status, ReplanStatus::Failed, "{name}");
    }
}

#[test]
fn wall_budget_is_respected_on_hard_instance() {
    for name in ["drrt", "mprrt"] {
        let ctx = context(6);
        let req = request(&ctx, snapshot(seal()), 3.0, Budget::Wall(0.001));
        let mut replanner = Registry::default().create(name, ctx, &ReplannerParams::default()).unwrap();
        let outcome = replanner.replan(&req);
        assert_ne!(outcome.status, ReplanStatus::NewPath);
        assert!(outcome.elapsed <= 0.0015, "{name}: {}", outcome.elapsed);
    }
}

#[test]
fn mprrt_returns_cheapest_candidate() {
    for seed in 0..10 {
        let ctx = context(seed);
        let snap = snapshot(vec![Obstacle::sphere("block", [5.0, 0.0, 0.0], 0.5)]);
        let req = request(&ctx, snap, 3.0, virtual_budget(0.1));
        let mut mprrt = MultiParallelRrt::new(ctx.clone(), &ReplannerParams::default()).unwrap();
        let (outcome, candidates) = mprrt.replan_with_candidates(&req);
        assert_valid_new_path(&outcome, &req, &ctx.goal);
        let cost = outcome.path.unwrap().cost();
        assert_eq!(candidates.len(), 5, "four instances plus the reconnect");
        let best = candidates
            .iter()
            .filter_map(|c| c.path.as_ref().map(Path::cost))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(cost, best);
        assert!(candidates.iter().all(|c| c.elapsed <= 0.1));
    }
}

#[test]
fn single_instance_matches_rrt_solve() {
    let ctx = context(11);
    let snap = snapshot(vec![Obstacle::sphere("block", [5.0, 0.0, 0.0], 0.5)]);
    let req = request(&ctx, snap.clone(), 3.0, virtual_budget(0.1));
    let params = ReplannerParams {
        parallel_instances: 1,
        reconnect: false,
        ..ReplannerParams::default()
    };
    let mut mprrt = MultiParallelRrt::new(ctx.clone(), &params).unwrap();
    let outcome = mprrt.replan(&req);

    let mut prob = PlanningProblem::new(
        req.x_repl.clone(),
        ctx.goal.clone(),
        ctx.bounds.clone(),
        ctx.checker.clone(),
        snap,
        derive_seed(11, 0, 0),
    )
    .unwrap();
    let direct = rrt_solve(&mut prob, &req.solver_config, req.budget).unwrap();
    let expected: Vec<_> = direct.path.unwrap().configurations().cloned().collect();
    let actual: Vec<_> = outcome.path.unwrap().configurations().cloned().collect();
    assert_eq!(actual, expected);
}

#[test]
fn mprrt_reconnects_to_old_path() {
    let ctx = context(12);
    let snap = snapshot(vec![Obstacle::sphere("block", [5.0, 0.0, 0.0], 0.5)]);
    let req = request(&ctx, snap, 3.0, virtual_budget(0.1));
    let mut mprrt = MultiParallelRrt::new(ctx, &ReplannerParams::default()).unwrap();
    let (_, candidates) = mprrt.replan_with_candidates(&req);
    let reconnect = candidates[4].path.as_ref().unwrap();
    // Past the block the old path's nodes are reused verbatim.
    let tail: Vec<_> = reconnect.nodes().iter().rev().take(3).map(|n| n.q.clone()).collect();
    assert_eq!(tail, [q(&[10.0, 0.0]), q(&[8.0, 0.0]), q(&[6.0, 0.0])]);
}

#[test]
fn continuous_refinement_straightens_a_detour() {
    let ctx = context(13);
    let ids = &ctx.ids;
    let mut path = Path::from_configurations(
        Metric::Euclidean,
        ids,
        [q(&[0.0, 0.0]), q(&[5.0, 2.0]), q(&[10.0, 0.0])],
    )
    .unwrap();
    let snap = snapshot(vec![]);
    path.update_cost(&ctx.checker, &snap, 0.0);
    let req = ReplanRequest {
        x_repl: path.point_at(1.0),
        s_repl: 1.0,
        current_path: path.clone(),
        current_tree: None,
        snapshot: snap,
        budget: virtual_budget(0.05),
        solver_config: SolverConfig::default(),
    };
    let mut mprrt = MultiParallelRrt::new(ctx.clone(), &ReplannerParams::default()).unwrap();
    let outcome = mprrt.replan(&req);
    assert_valid_new_path(&outcome, &req, &ctx.goal);
    assert!(outcome.path.unwrap().cost() < path.remaining_cost(1.0));
}

#[test]
fn mprrt_unchanged_on_straight_free_path() {
    let ctx = context(14);
    let req = request(&ctx, snapshot(vec![]), 3.0, virtual_budget(0.01));
    let mut mprrt = MultiParallelRrt::new(ctx, &ReplannerParams::default()).unwrap();
    assert_eq!(mprrt.replan(&req).status, ReplanStatus::PathUnchanged);
}

#[test]
fn request_validation() {
    let ctx = context(15);
    let mut req = request(&ctx, snapshot(vec![]), 3.0, virtual_budget(0.1));
    assert!(req.validate().is_ok());
    req.x_repl = q(&[3.0, 0.5]);
    assert!(req.validate().is_err());
    req.x_repl = q(&[3.0, 0.0]);
    req.budget = Budget::Wall(0.0);
    assert!(req.validate().is_err());
}

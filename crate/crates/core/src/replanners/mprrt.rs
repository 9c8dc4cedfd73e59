use std::sync::Arc;
use std::thread;

use crate::clock::{Budget, BudgetMeter};
use crate::cspace::{Configuration, Sampler};
use crate::error::Result;
use crate::graph::{NodeIds, Path};
use crate::scene::SceneSnapshot;
use crate::solvers::{rrt_solve_metered, shortcut_metered, PlanningProblem, SolverConfig};

use super::{derive_seed, ReplanOutcome, ReplanRequest, Replanner, ReplannerContext, ReplannerParams};

/// Independent RRT instances racing from the replan configuration to the goal,
/// plus one instance aiming back at the old path past its obstruction. The
/// cheapest path found within the budget wins.
#[derive(Debug, Clone)]
pub struct MultiParallelRrt {
    ctx: ReplannerContext,
    instances: usize,
    reconnect: bool,
    cycle: u64,
}

/// What one instance produced.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub index: usize,
    pub path: Option<Path>,
    pub elapsed: f64,
}

enum Job {
    Goal,
    /// Reconnect to the old path at node `node` and follow it to the goal.
    Reconnect { node: usize },
    /// Shortcut the still-free remainder of the current path.
    Refine,
}

impl MultiParallelRrt {
    pub fn new(ctx: ReplannerContext, params: &ReplannerParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            ctx,
            instances: params.parallel_instances,
            reconnect: params.reconnect,
            cycle: 0,
        })
    }

    fn problem(&self, start: &Configuration, goal: &Configuration, snapshot: &Arc<SceneSnapshot>, seed: u64) -> PlanningProblem {
        PlanningProblem {
            start: start.clone(),
            goal: goal.clone(),
            bounds: self.ctx.bounds.clone(),
            metric: self.ctx.checker.metric().clone(),
            sampler: Sampler::uniform(self.ctx.bounds.clone(), seed),
            checker: self.ctx.checker.clone(),
            snapshot: snapshot.clone(),
            ids: NodeIds::new(),
        }
    }

    /// First node of the old path past its first obstruction from which the
    /// rest of the old path is free under `snap`.
    fn reconnect_node(&self, path: &Path, s_repl: f64, snap: &SceneSnapshot) -> Option<usize> {
        let blocked_at = path.first_obstruction_after(s_repl)?;
        let checker = &self.ctx.checker;
        let nodes = path.nodes();
        let mut tail_free = true;
        let mut best = None;
        // Walk backwards so the tail check is incremental.
        for k in (0..nodes.len()).rev() {
            if path.abscissae()[k] <= blocked_at {
                break;
            }
            if k + 1 < nodes.len() {
                tail_free = tail_free && checker.check_edge(snap, &nodes[k].q, &nodes[k + 1].q);
            }
            if tail_free && checker.is_free(snap, &nodes[k].q) {
                best = Some(k);
            } else {
                tail_free = false;
            }
        }
        best
    }

    fn candidates(&mut self, req: &ReplanRequest, meter: &BudgetMeter) -> Vec<Candidate> {
        let cycle = self.cycle;
        self.cycle += 1;
        let mut jobs: Vec<Job> = (0..self.instances).map(|_| Job::Goal).collect();
        if self.reconnect {
            if let Some(node) = self.reconnect_node(&req.current_path, req.s_repl, &req.snapshot) {
                jobs.push(Job::Reconnect { node });
            }
        }
        let remainder_free = req.current_path.remaining_cost(req.s_repl).is_finite();
        if remainder_free {
            jobs.push(Job::Refine);
        }
        let this = &*self;
        thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .iter()
                .enumerate()
                .map(|(index, job)| {
                    let seed = derive_seed(this.ctx.seed, cycle, index as u64);
                    scope.spawn(move || this.run_job(job, index, seed, req, meter.clone()))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("replanning instance panicked"))
                .collect()
        })
    }

    /// Every instance charges a clone of the call's meter, so wall budgets share
    /// one deadline however the threads get scheduled.
    fn run_job(&self, job: &Job, index: usize, seed: u64, req: &ReplanRequest, mut meter: BudgetMeter) -> Candidate {
        let cfg: &SolverConfig = &req.solver_config;
        let failed = |elapsed| Candidate {
            index,
            path: None,
            elapsed,
        };
        match *job {
            Job::Goal => {
                let mut prob = self.problem(&req.x_repl, &self.ctx.goal, &req.snapshot, seed);
                match rrt_solve_metered(&mut prob, cfg, meter) {
                    Ok(res) => Candidate {
                        index,
                        path: res.path,
                        elapsed: res.elapsed,
                    },
                    Err(_) => failed(0.0),
                }
            }
            Job::Reconnect { node } => {
                let old = &req.current_path;
                let target = old.nodes()[node].q.clone();
                let mut prob = self.problem(&req.x_repl, &target, &req.snapshot, seed);
                let res = match rrt_solve_metered(&mut prob, cfg, meter) {
                    Ok(res) => res,
                    Err(_) => return failed(0.0),
                };
                let Some(head) = res.path else {
                    return failed(res.elapsed);
                };
                let mut configurations: Vec<Configuration> = head.configurations().cloned().collect();
                let tail = old.nodes()[node..].iter().map(|n| n.q.clone());
                let joint = configurations.last().expect("non-empty") == &target;
                if !joint && !self.ctx.checker.check_edge(&req.snapshot, configurations.last().unwrap(), &target) {
                    return failed(res.elapsed);
                }
                configurations.extend(tail.skip(usize::from(joint)));
                let path = Path::from_configurations(old.metric().clone(), &NodeIds::new(), configurations).ok();
                Candidate {
                    index,
                    path,
                    elapsed: res.elapsed,
                }
            }
            Job::Refine => {
                let remainder = req
                    .current_path
                    .subpath_from(req.s_repl, &NodeIds::new())
                    .with_exact_start(req.x_repl.clone());
                let mut prob = self.problem(&req.x_repl, &self.ctx.goal, &req.snapshot, seed);
                let refined = shortcut_metered(&remainder, &mut prob, cfg, &mut meter);
                Candidate {
                    index,
                    path: Some(refined),
                    elapsed: meter.elapsed(),
                }
            }
        }
    }
}

impl MultiParallelRrt {
    /// Replans and also returns every instance's result, in index order.
    pub fn replan_with_candidates(&mut self, req: &ReplanRequest) -> (ReplanOutcome, Vec<Candidate>) {
        let meter = BudgetMeter::start(req.budget);
        if !self.ctx.checker.is_free(&req.snapshot, &req.x_repl) {
            return (ReplanOutcome::failed(None, 0.0), Vec::new());
        }
        let candidates = self.candidates(req, &meter);
        let elapsed = match req.budget {
            Budget::Virtual { .. } => candidates.iter().map(|c| c.elapsed).fold(0.0, f64::max),
            _ => meter.elapsed(),
        };
        let current = req.current_path.remaining_cost(req.s_repl);
        let best = candidates
            .iter()
            .filter_map(|c| c.path.as_ref().map(|p| (p.cost(), c.index, p)))
            .filter(|(cost, _, _)| cost.is_finite())
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let outcome = match best {
            Some((cost, _, path)) if cost < current - 1e-9 => {
                // Instances allocate private ids; renumber from the shared
                // allocator so ids stay unique across the run.
                let path = Path::from_configurations(path.metric().clone(), &self.ctx.ids, path.configurations().cloned())
                    .expect("candidate paths are well formed");
                ReplanOutcome::new_path(path, None, elapsed)
            }
            _ if current.is_finite() => ReplanOutcome::unchanged(None, elapsed),
            _ => ReplanOutcome::failed(None, elapsed),
        };
        (outcome, candidates)
    }
}

impl Replanner for MultiParallelRrt {
    fn name(&self) -> &str {
        "mprrt"
    }

    fn replan(&mut self, req: &ReplanRequest) -> ReplanOutcome {
        self.replan_with_candidates(req).0
    }
}

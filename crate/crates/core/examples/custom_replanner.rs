//! Plugging a replanner of your own into the registry. This one only ever
//! tries a two-segment dogleg around the obstruction and otherwise fails.

use replankit::bench::{run_scenario, Scenario};
use replankit::clock::BudgetMeter;
use replankit::cspace::Configuration;
use replankit::graph::Path;
use replankit::replanners::{Registry, ReplanOutcome, ReplanRequest, Replanner, ReplannerContext};
use replankit::trace::NullSink;

struct Dogleg {
    ctx: ReplannerContext,
}

impl Replanner for Dogleg {
    fn name(&self) -> &str {
        "dogleg"
    }

    fn replan(&mut self, req: &ReplanRequest) -> ReplanOutcome {
        let meter = BudgetMeter::start(req.budget);
        let checker = &self.ctx.checker;
        let (x, goal) = (req.x_repl.as_slice(), self.ctx.goal.as_slice());
        let mid_x = 0.5 * (x[0] + goal[0]);
        for offset in [1.0, -1.0, 2.0, -2.0] {
            let via = Configuration::new(vec![mid_x, x[1] + offset]).unwrap();
            let legs = [(&req.x_repl, &via), (&via, &self.ctx.goal)];
            if self.ctx.bounds.contains(&via) && legs.iter().all(|(a, b)| checker.check_edge(&req.snapshot, a, b)) {
                let nodes = [req.x_repl.clone(), via, self.ctx.goal.clone()];
                let path = Path::from_configurations(checker.metric().clone(), &self.ctx.ids, nodes).unwrap();
                return ReplanOutcome::new_path(path, None, meter.elapsed());
            }
        }
        ReplanOutcome::failed(None, meter.elapsed())
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut registry = Registry::default();
    registry.register("dogleg", |ctx, _params| Ok(Box::new(Dogleg { ctx }) as Box<dyn Replanner>));
    println!("registered: {}", registry.names().join(", "));

    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/detour.toml"))?;
    let text = text.replace("name = \"drrt\"", "name = \"dogleg\"");
    let scenario = Scenario::parse(&text, &registry)?;
    for seed in 0..5 {
        let report = run_scenario(&scenario, seed, &registry, &mut NullSink)?;
        println!("seed {seed}: {:?}, traversed {:.3}", report.outcome, report.traversed_length);
    }
    Ok(())
}

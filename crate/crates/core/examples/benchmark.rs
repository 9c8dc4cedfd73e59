//! Seeded batch runs of the bundled scenarios with both replanners, plus
//! the aggregate report as JSON.

use replankit::bench::{load_scenario, run_benchmark, Overrides};
use replankit::replanners::Registry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = Registry::default();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    for name in ["empty", "detour", "arm"] {
        for replanner in ["drrt", "mprrt"] {
            let overrides = Overrides {
                replanner: Some(replanner.into()),
                ..Overrides::default()
            };
            let scenario = load_scenario(format!("{dir}/{name}.toml"))?.with_overrides(&overrides, &registry)?;
            let report = run_benchmark(&scenario, 10, &registry, None)?;
            let s = &report.summary;
            println!(
                "{name:>7} {replanner:>6}: success {:>5.1}%  length {:.3} ± {:.3}  replan {:.2} ± {:.2} ms  audited collisions {}",
                100.0 * s.success_rate,
                s.traversed_length.mean,
                s.traversed_length.std,
                1e3 * s.replan_time.mean,
                1e3 * s.replan_time.std,
                s.audited_collisions
            );
        }
    }
    let scenario = load_scenario(format!("{dir}/sealed.toml"))?;
    let report = run_benchmark(&scenario, 2, &registry, None)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

//! Write a trace to disk, read it back, recompute the statistics from it and
//! audit every tick against the recorded snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};

use replankit::bench::{load_scenario, replay_file, run_scenario};
use replankit::replanners::Registry;
use replankit::trace::JsonlSink;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = Registry::default();
    let scenario = load_scenario(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/detour.toml"))?;
    let dir = tempfile::tempdir()?;
    let trace = dir.path().join("detour.jsonl");

    let mut sink = JsonlSink::new(BufWriter::new(File::create(&trace)?));
    let report = run_scenario(&scenario, scenario.seed, &registry, &mut sink)?;
    sink.into_inner().flush()?;
    println!("run: {:?}, traversed {:.12}", report.outcome, report.traversed_length);

    let replay = replay_file(&trace, 10)?;
    let a = &replay.audit;
    println!("replay: traversed {:.12} (error {:?})", replay.statistics.traversed_length, replay.traversed_length_error);
    println!(
        "audit: {} ticks against {} snapshots, {} collisions, largest step {:.6}, architecture {}",
        a.ticks,
        a.snapshots,
        a.collisions(),
        a.max_step,
        if a.architecture_ok() { "ok" } else { "violated" }
    );
    Ok(())
}

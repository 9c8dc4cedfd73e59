//! A three-link arm executing a joint-space path while a ball appears in
//! its way, audited afterwards against the true scene at ten times the
//! planning resolution.

use replankit::bench::{audit_against, load_scenario, run_scenario};
use replankit::replanners::Registry;
use replankit::scene::forward_kinematics;
use replankit::scene::RobotKind;
use replankit::trace::{MemorySink, TraceRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = Registry::default();
    let scenario = load_scenario(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/arm.toml"))?;
    let mut sink = MemorySink::default();
    let report = run_scenario(&scenario, scenario.seed, &registry, &mut sink)?;
    println!("{:?} after {:.3}s, {} new paths", report.outcome, report.wall_time, report.path_swaps);

    let RobotKind::PlanarArm { link_lengths, base } = scenario.robot_model().kind else {
        unreachable!("arm scenario");
    };
    for line in sink.lines.iter().filter(|l| matches!(l.record, TraceRecord::Tick { .. })).step_by(250) {
        if let TraceRecord::Tick { q, .. } = &line.record {
            let tip = *forward_kinematics(&link_lengths, base, q).last().unwrap();
            println!("t={:.2} q={:.3?} tip=({:.3}, {:.3})", line.t, q.as_slice(), tip[0], tip[1]);
        }
    }

    let mut problem = scenario.problem(scenario.seed);
    let path = scenario.initial_path(&mut problem)?;
    let scene = scenario.scene(scenario.seed, &path)?;
    let audit = audit_against(&sink.lines, 10, &scene)?;
    println!("ground-truth audit: {} ticks, {} collisions", audit.ticks, audit.collisions());
    Ok(())
}

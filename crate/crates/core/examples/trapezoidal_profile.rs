//! Time-parameterize a path with a trapezoidal speed law and sample it, then
//! brake halfway.

use std::sync::Arc;

use replankit::cspace::{Configuration, Metric};
use replankit::graph::{NodeIds, Path};
use replankit::trajectory::{TimeLaw, Trajectory};

fn q(v: &[f64]) -> Configuration {
    Configuration::new(v.to_vec()).unwrap()
}

fn main() -> replankit::error::Result<()> {
    let law = TimeLaw::trapezoidal(10.0, 2.0, 1.0, 0.0)?;
    println!(
        "trapezoid over 10: accel {:.2}s, cruise {:.2}s, decel {:.2}s, total {:.2}s",
        law.t_accel,
        law.t_cruise,
        law.t_decel,
        law.total_time()
    );
    let short = TimeLaw::trapezoidal(1.0, 2.0, 1.0, 0.0)?;
    println!("too short to cruise: peak speed {:.3}, total {:.3}s", short.v_peak, short.total_time());

    let path = Arc::new(Path::from_configurations(
        Metric::Euclidean,
        &NodeIds::new(),
        [q(&[0.0, 0.0]), q(&[3.0, 0.0]), q(&[3.0, 4.0])],
    )?);
    let tr = Trajectory::along(path.clone(), 1.0, 1.0, 0.0, 0.0)?;
    for k in 0..=8 {
        let t = k as f64;
        let x = tr.sample(t);
        println!("t={t:.0} s={:.3} v={:.3} q={:?} qdot={:?}", x.s, x.speed, x.state.q.as_slice(), x.state.qdot);
    }

    let mid = tr.sample(3.0);
    let stop = Trajectory::braking(path, mid.s, mid.speed, 1.0, 1.0, 3.0)?;
    println!("braking from s={:.3}: stops at s={:.3} at t={:.3}", mid.s, stop.final_abscissa(), stop.end_time());
    Ok(())
}

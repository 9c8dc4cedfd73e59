//! Time parameterization of paths with a trapezoidal speed profile on arc
//! length, trajectory sampling and the replan-ahead configuration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cspace::Configuration;
use crate::error::{Error, Result};
use crate::graph::Path;

/// Tolerance on speeds and lengths when classifying profiles.
const PROFILE_EPS: f64 = 1e-9;

/// Scalar speed profile over arc length: accelerate, cruise, decelerate to rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeLaw {
    pub length: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub v_start: f64,
    pub v_peak: f64,
    pub t_accel: f64,
    pub t_cruise: f64,
    pub t_decel: f64,
}

/// Position, speed and acceleration along the path at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawSample {
    pub s: f64,
    pub speed: f64,
    pub accel: f64,
}

impl TimeLaw {
    /// Fastest profile covering `length` from `v_start` to rest within the limits.
    pub fn trapezoidal(length: f64, v_max: f64, a_max: f64, v_start: f64) -> Result<Self> {
        validate_limits(v_max, a_max)?;
        if !(v_start >= 0.0 && v_start <= v_max + PROFILE_EPS) {
            return Err(Error::InvalidParameter {
                name: "v_start",
                reason: format!("{v_start} outside [0, {v_max}]"),
            });
        }
        let v0 = v_start.min(v_max);
        if length <= 0.0 {
            return Ok(Self::degenerate(v_max, a_max, v0));
        }
        let braking = v0 * v0 / (2.0 * a_max);
        if braking > length + PROFILE_EPS {
            return Err(Error::InfeasibleStop { length, speed: v0 });
        }
        let accel_dist = |vp: f64| (vp * vp - v0 * v0) / (2.0 * a_max);
        let decel_dist = |vp: f64| vp * vp / (2.0 * a_max);
        let v_peak = if accel_dist(v_max) + decel_dist(v_max) <= length {
            v_max
        } else {
            (a_max * length + 0.5 * v0 * v0).sqrt().clamp(v0, v_max)
        };
        let cruise = (length - accel_dist(v_peak) - decel_dist(v_peak)).max(0.0);
        Ok(Self {
            length,
            v_max,
            a_max,
            v_start: v0,
            v_peak,
            t_accel: (v_peak - v0) / a_max,
            t_cruise: if v_peak > 0.0 { cruise / v_peak } else { 0.0 },
            t_decel: v_peak / a_max,
        })
    }

    /// Deceleration from `v_start` to rest at `a_max`.
    pub fn braking(v_start: f64, v_max: f64, a_max: f64) -> Result<Self> {
        validate_limits(v_max, a_max)?;
        let v0 = v_start.clamp(0.0, v_max);
        Ok(Self {
            length: v0 * v0 / (2.0 * a_max),
            v_max,
            a_max,
            v_start: v0,
            v_peak: v0,
            t_accel: 0.0,
            t_cruise: 0.0,
            t_decel: v0 / a_max,
        })
    }

    fn degenerate(v_max: f64, a_max: f64, v_start: f64) -> Self {
        Self {
            length: 0.0,
            v_max,
            a_max,
            v_start,
            v_peak: 0.0,
            t_accel: 0.0,
            t_cruise: 0.0,
            t_decel: 0.0,
        }
    }

    pub fn total_time(&self) -> f64 {
        self.t_accel + self.t_cruise + self.t_decel
    }

    /// Profile state `t` seconds after the start, clamped to `[0, T]`.
    pub fn eval(&self, t: f64) -> LawSample {
        let a = self.a_max;
        if t <= 0.0 {
            let accel = if self.t_accel > 0.0 { a } else if self.t_cruise > 0.0 { 0.0 } else { -a };
            return LawSample {
                s: 0.0,
                speed: if self.length > 0.0 { self.v_start } else { 0.0 },
                accel,
            };
        }
        if t >= self.total_time() {
            return LawSample {
                s: self.length,
                speed: 0.0,
                accel: 0.0,
            };
        }
        let d_accel = self.v_start * self.t_accel + 0.5 * a * self.t_accel * self.t_accel;
        let d_cruise = self.v_peak * self.t_cruise;
        let (s, speed, accel) = if t < self.t_accel {
            (self.v_start * t + 0.5 * a * t * t, self.v_start + a * t, a)
        } else if t < self.t_accel + self.t_cruise {
            (d_accel + self.v_peak * (t - self.t_accel), self.v_peak, 0.0)
        } else {
            let tau = t - self.t_accel - self.t_cruise;
            (
                d_accel + d_cruise + self.v_peak * tau - 0.5 * a * tau * tau,
                (self.v_peak - a * tau).max(0.0),
                -a,
            )
        };
        LawSample {
            s: s.min(self.length),
            speed,
            accel,
        }
    }
}

fn validate_limits(v_max: f64, a_max: f64) -> Result<()> {
    for (name, value) in [("v_max", v_max), ("a_max", a_max)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be positive, got {value}"),
            });
        }
    }
    Ok(())
}

/// Time law for the whole of `p`.
pub fn parameterize(p: &Path, v_max: f64, a_max: f64, v_start: f64) -> Result<TimeLaw> {
    TimeLaw::trapezoidal(p.length(), v_max, a_max, v_start)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub q: Configuration,
    pub qdot: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// Runs to the end of the path.
    Nominal,
    /// Maximum-deceleration stop short of the path end.
    Braking,
}

/// A path plus a time law. The law runs along the path starting at
/// abscissa `s_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub path: Arc<Path>,
    pub law: TimeLaw,
    pub start_time: f64,
    pub s_offset: f64,
    pub kind: TrajectoryKind,
}

/// A trajectory sample with its path abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub state: RobotState,
    pub s: f64,
    pub speed: f64,
    pub accel: f64,
}

impl Trajectory {
    pub fn new(path: Arc<Path>, law: TimeLaw, start_time: f64) -> Self {
        Self {
            path,
            law,
            start_time,
            s_offset: 0.0,
            kind: TrajectoryKind::Nominal,
        }
    }

    /// Trajectory on the whole of `path` starting at speed `v_start`.
    pub fn along(path: Arc<Path>, v_max: f64, a_max: f64, v_start: f64, start_time: f64) -> Result<Self> {
        Self::along_from(path, 0.0, v_max, a_max, v_start, start_time)
    }

    /// Trajectory on `path` from abscissa `s` to the end.
    pub fn along_from(path: Arc<Path>, s: f64, v_max: f64, a_max: f64, v_start: f64, start_time: f64) -> Result<Self> {
        let s = s.clamp(0.0, path.length());
        let law = TimeLaw::trapezoidal(path.length() - s, v_max, a_max, v_start)?;
        Ok(Self {
            path,
            law,
            start_time,
            s_offset: s,
            kind: TrajectoryKind::Nominal,
        })
    }

    /// Maximum-deceleration stop on `path` starting at abscissa `s` with speed `speed`.
    pub fn braking(path: Arc<Path>, s: f64, speed: f64, v_max: f64, a_max: f64, start_time: f64) -> Result<Self> {
        let mut law = TimeLaw::braking(speed, v_max, a_max)?;
        // Only a robot already decelerating into the goal can run out of path.
        law.length = law.length.min((path.length() - s).max(0.0));
        Ok(Self {
            path,
            law,
            start_time,
            s_offset: s,
            kind: TrajectoryKind::Braking,
        })
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.law.total_time()
    }

    pub fn is_braking(&self) -> bool {
        self.kind == TrajectoryKind::Braking
    }

    /// Abscissa where the trajectory comes to rest.
    pub fn final_abscissa(&self) -> f64 {
        (self.s_offset + self.law.length).min(self.path.length())
    }

    pub fn sample(&self, t: f64) -> TrajectorySample {
        let law = self.law.eval(t - self.start_time);
        let s = (self.s_offset + law.s).min(self.path.length());
        let q = if t >= self.end_time() && !self.is_braking() {
            self.path.goal().q.clone()
        } else {
            self.path.point_at(s)
        };
        let qdot = match (law.speed > 0.0, self.path.tangent_at(s)) {
            (true, Some(tangent)) => tangent.into_iter().map(|x| x * law.speed).collect(),
            _ => vec![0.0; q.dim()],
        };
        TrajectorySample {
            state: RobotState { q, qdot, t },
            s,
            speed: law.speed,
            accel: law.accel,
        }
    }
}

pub fn sample_trajectory(tr: &Trajectory, t: f64) -> RobotState {
    tr.sample(t).state
}

/// Configuration `dt_repl` ahead on the trajectory, projected on `p` no
/// earlier than `hint`. Past the trajectory end this is its final configuration.
pub fn get_replan_conf(
    tr: &Trajectory,
    p: &Path,
    t_now: f64,
    dt_repl: f64,
    hint: f64,
) -> Result<(Configuration, f64)> {
    if !(dt_repl > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt_repl",
            reason: format!("must be positive, got {dt_repl}"),
        });
    }
    let ahead = tr.sample(t_now + dt_repl).state.q;
    let (s, q) = p.project(&ahead, Some(hint));
    Ok((q, s))
}

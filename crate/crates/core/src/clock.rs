//! Time budgets for solvers and the clocks that drive the manager loops.

use std::time::{Duration, Instant};

/// How long a solver may run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Unlimited,
    /// Wall-clock seconds, measured on a monotonic clock.
    Wall(f64),
    /// Virtual seconds; every solver iteration is charged `iteration_cost`.
    Virtual { seconds: f64, iteration_cost: f64 },
}

impl Budget {
    pub fn seconds(&self) -> Option<f64> {
        match self {
            Budget::Unlimited => None,
            Budget::Wall(s) => Some(*s),
            Budget::Virtual { seconds, .. } => Some(*seconds),
        }
    }

    /// Same kind of budget with a different allowance.
    pub fn with_seconds(&self, seconds: f64) -> Budget {
        match self {
            Budget::Unlimited => Budget::Unlimited,
            Budget::Wall(_) => Budget::Wall(seconds),
            Budget::Virtual { iteration_cost, .. } => Budget::Virtual {
                seconds,
                iteration_cost: *iteration_cost,
            },
        }
    }
}

/// Tracks consumption of a [`Budget`]. Checked once per solver iteration.
#[derive(Debug, Clone)]
pub struct BudgetMeter {
    budget: Budget,
    started: Instant,
    iterations: u64,
}

impl BudgetMeter {
    pub fn start(budget: Budget) -> Self {
        Self {
            budget,
            started: Instant::now(),
            iterations: 0,
        }
    }

    /// `true` once the next iteration is not allowed to start.
    pub fn exhausted(&self) -> bool {
        match self.budget {
            Budget::Unlimited => false,
            Budget::Wall(seconds) => self.started.elapsed().as_secs_f64() >= seconds,
            Budget::Virtual {
                seconds,
                iteration_cost,
            } => (self.iterations + 1) as f64 * iteration_cost > seconds,
        }
    }

    pub fn tick(&mut self) {
        self.iterations += 1;
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Seconds consumed so far, on the budget's own clock.
    pub fn elapsed(&self) -> f64 {
        match self.budget {
            Budget::Virtual { iteration_cost, .. } => self.iterations as f64 * iteration_cost,
            _ => self.started.elapsed().as_secs_f64(),
        }
    }
}

/// Source of loop time. Ticks are the execution loop's control periods.
pub trait Clock: Send + Sync {
    /// Seconds since the run started.
    fn now(&self) -> f64;
}

/// Monotonic wall clock anchored at construction.
#[derive(Debug, Clone)]
pub struct WallClock {
    origin: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }

    /// Sleeps until `t` seconds after the origin; returns immediately when late.
    pub fn sleep_until(&self, t: f64) {
        let target = self.origin + Duration::from_secs_f64(t.max(0.0));
        let now = Instant::now();
        if target > now {
            std::thread::sleep(target - now);
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Discrete virtual clock counting integer ticks of a fixed period, so that
/// times are exact multiples of the period and never accumulate rounding.
#[derive(Debug, Clone)]
pub struct VirtualClock {
    tick: u64,
    period: f64,
}

impl VirtualClock {
    pub fn new(period: f64) -> Self {
        Self { tick: 0, period }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn advance(&mut self) {
        self.tick += 1;
    }

    pub fn time_of(&self, tick: u64) -> f64 {
        tick as f64 * self.period
    }

    /// Number of whole ticks covering `seconds`, at least one.
    pub fn ticks_for(&self, seconds: f64) -> u64 {
        ((seconds / self.period) - 1e-9).ceil().max(1.0) as u64
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        self.time_of(self.tick)
    }
}

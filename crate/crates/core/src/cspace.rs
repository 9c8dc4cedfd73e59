//! Configuration space vocabulary: configurations, joint bounds, metrics and
//! seedable samplers.

use std::ops::Index;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum consecutive rejections an [`SamplerKind::InformedBall`] draw may
/// take before the region is declared empty.
pub const MAX_BALL_REJECTIONS: usize = 1000;

/// A point in joint space. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    /// Componentwise `a + u (b - a)` without range checks.
    pub(crate) fn lerp(&self, other: &Configuration, u: f64) -> Configuration {
        if u == 0.0 {
            return self.clone();
        }
        if u == 1.0 {
            return other.clone();
        }
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + u * (b - a))
                .collect(),
        )
    }
}

impl Index<usize> for Configuration {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl TryFrom<Vec<f64>> for Configuration {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<Configuration> for Vec<f64> {
    fn from(q: Configuration) -> Self {
        q.0
    }
}

/// Returns `a + u (b - a)` for `u` in `[0, 1]`.
pub fn interpolate(a: &Configuration, b: &Configuration, u: f64) -> Result<Configuration> {
    b.ensure_dim(a.dim())?;
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InterpolationOutOfRange(u));
    }
    Ok(a.lerp(b, u))
}

/// Axis-aligned box of admissible joint values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointBounds {
    lower: Configuration,
    upper: Configuration,
}

impl JointBounds {
    pub fn new(lower: Configuration, upper: Configuration) -> Result<Self> {
        upper.ensure_dim(lower.dim())?;
        for (index, (&lo, &hi)) in lower.0.iter().zip(&upper.0).enumerate() {
            if lo > hi {
                return Err(Error::InvalidBounds {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Configuration {
        &self.lower
    }

    pub fn upper(&self) -> &Configuration {
        &self.upper
    }

    pub fn contains(&self, q: &Configuration) -> bool {
        q.dim() == self.dim()
            && q
                .0
                .iter()
                .zip(self.lower.0.iter().zip(&self.upper.0))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// Cost function over pairs of configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `sqrt(sum_i (w_i (a_i - b_i))^2)`.
    WeightedEuclidean { weights: Vec<f64> },
}

impl Metric {
    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        Ok(Metric::WeightedEuclidean { weights })
    }

    /// Checks that the metric can be applied to `dim`-dimensional configurations.
    pub fn validate_dim(&self, dim: usize) -> Result<()> {
        match self {
            Metric::Euclidean => Ok(()),
            Metric::WeightedEuclidean { weights } if weights.len() == dim => Ok(()),
            Metric::WeightedEuclidean { weights } => Err(Error::DimensionMismatch {
                expected: dim,
                found: weights.len(),
            }),
        }
    }

    pub fn cost(&self, a: &Configuration, b: &Configuration) -> Result<f64> {
        b.ensure_dim(a.dim())?;
        self.validate_dim(a.dim())?;
        Ok(self.distance(a, b))
    }

    /// Same as [`Metric::cost`] for callers that already guarantee matching
    /// dimensions.
    #[inline]
    pub fn distance(&self, a: &Configuration, b: &Configuration) -> f64 {
        self.distance_slices(&a.0, &b.0)
    }

    #[inline]
    pub(crate) fn distance_slices(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::WeightedEuclidean { weights } => a
                .iter()
                .zip(b)
                .zip(weights)
                .map(|((x, y), w)| {
                    let d = w * (x - y);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Squared per-axis weight, 1 for the plain Euclidean metric.
    #[inline]
    pub(crate) fn weight_sq(&self, axis: usize) -> f64 {
        match self {
            Metric::Euclidean => 1.0,
            Metric::WeightedEuclidean { weights } => weights[axis] * weights[axis],
        }
    }

    /// Largest per-axis displacement that fits inside a metric ball of `radius`.
    fn axis_reach(&self, axis: usize, radius: f64) -> f64 {
        radius / self.weight_sq(axis).sqrt()
    }
}

/// Region a [`Sampler`] draws from.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerKind {
    UniformBox(JointBounds),
    /// Uniform over `bounds ∩ {q : metric(q, center) ≤ radius}` by rejection.
    InformedBall {
        center: Configuration,
        radius: f64,
        bounds: JointBounds,
        metric: Metric,
    },
}

/// Seedable sampler. Each instance owns its generator, so a sampler must be
/// driven by one loop at a time.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: SamplerKind,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn uniform(bounds: JointBounds, seed: u64) -> Self {
        Self {
            kind: SamplerKind::UniformBox(bounds),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn informed_ball(
        center: Configuration,
        radius: f64,
        bounds: JointBounds,
        metric: Metric,
        seed: u64,
    ) -> Result<Self> {
        center.ensure_dim(bounds.dim())?;
        metric.validate_dim(bounds.dim())?;
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: format!("must be finite and non-negative, got {radius}"),
            });
        }
        Ok(Self {
            kind: SamplerKind::InformedBall {
                center,
                radius,
                bounds,
                metric,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn kind(&self) -> &SamplerKind {
        &self.kind
    }

    pub fn bounds(&self) -> &JointBounds {
        match &self.kind {
            SamplerKind::UniformBox(bounds) => bounds,
            SamplerKind::InformedBall { bounds, .. } => bounds,
        }
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Uniform draw from `[lo, hi)`, or `lo` when the range is empty.
    pub fn uniform_scalar(&mut self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            self.rng.gen_range(lo..hi)
        } else {
            lo
        }
    }

    /// Bernoulli trial with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen::<f64>() < p
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.gen()
    }

    pub fn sample(&mut self) -> Result<Configuration> {
        match &self.kind {
            SamplerKind::UniformBox(bounds) => {
                let values = bounds
                    .lower
                    .0
                    .iter()
                    .zip(&bounds.upper.0)
                    .map(|(&lo, &hi)| draw(&mut self.rng, lo, hi))
                    .collect();
                Ok(Configuration(values))
            }
            SamplerKind::InformedBall {
                center,
                radius,
                bounds,
                metric,
            } => {
                // Clip the ball's bounding box against the joint bounds, then reject.
                let boxed: Vec<(f64, f64)> = (0..bounds.dim())
                    .map(|i| {
                        let reach = metric.axis_reach(i, *radius);
                        (
                            (center[i] - reach).max(bounds.lower[i]),
                            (center[i] + reach).min(bounds.upper[i]),
                        )
                    })
                    .collect();
                if boxed.iter().any(|(lo, hi)| lo > hi) {
                    return Err(Error::SamplerExhausted(0));
                }
                for _ in 0..MAX_BALL_REJECTIONS {
                    let values: Vec<f64> = boxed
                        .iter()
                        .map(|&(lo, hi)| draw(&mut self.rng, lo, hi))
                        .collect();
                    if metric.distance_slices(&values, &center.0) <= *radius {
                        return Ok(Configuration(values));
                    }
                }
                Err(Error::SamplerExhausted(MAX_BALL_REJECTIONS))
            }
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        // gen_range excludes hi; the closed interval is not needed for sampling.
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

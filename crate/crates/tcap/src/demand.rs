//! Energy-request distributions: CDF, inverse CDF, and the quantile
//! integral `E(x) = ∫₀ˣ G⁻¹(t) dt` used by the assignment programs.
//!
//! Differences of `E` give the expected energy mass of population
//! segments, so `E` is evaluated in closed form (quadratic per linear
//! CDF segment) rather than by quadrature — the solvers call it in an
//! inner loop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("probability argument {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("segment bounds must satisfy t_lo <= t_hi, got ({0}, {1})")]
    UnorderedSegment(f64, f64),
    #[error("invalid distribution: {0}")]
    Invalid(String),
}

/// Spec of a distribution as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform {
        min_kwh: f64,
        max_kwh: f64,
    },
    /// Piecewise-linear CDF through `points = [[kwh, prob], ...]`.
    PiecewiseCdf {
        points: Vec<[f64; 2]>,
    },
}

/// A validated energy-request law on a compact support, with strictly
/// increasing CDF (density bounded away from zero).
#[derive(Debug, Clone, PartialEq)]
pub enum DemandDistribution {
    Uniform {
        min: f64,
        max: f64,
    },
    Piecewise {
        /// Breakpoints (energy, cumulative probability), strictly
        /// increasing in both coordinates, spanning prob 0 to 1.
        points: Vec<(f64, f64)>,
        /// E evaluated at each breakpoint probability.
        e_at: Vec<f64>,
    },
}

impl DemandDistribution {
    pub fn from_spec(spec: &DistributionSpec) -> Result<Self, DemandError> {
        match spec {
            DistributionSpec::Uniform { min_kwh, max_kwh } => {
                Self::uniform(*min_kwh, *max_kwh)
            }
            DistributionSpec::PiecewiseCdf { points } => {
                Self::piecewise_cdf(points.iter().map(|p| (p[0], p[1])).collect())
            }
        }
    }

    pub fn to_spec(&self) -> DistributionSpec {
        match self {
            DemandDistribution::Uniform { min, max } => DistributionSpec::Uniform {
                min_kwh: *min,
                max_kwh: *max,
            },
            DemandDistribution::Piecewise { points, .. } => DistributionSpec::PiecewiseCdf {
                points: points.iter().map(|&(e, p)| [e, p]).collect(),
            },
        }
    }

    pub fn uniform(min: f64, max: f64) -> Result<Self, DemandError> {
        if !(min.is_finite() && max.is_finite()) || min < 0.0 || min >= max {
            return Err(DemandError::Invalid(format!(
                "uniform support must satisfy 0 <= min < max, got [{min}, {max}]"
            )));
        }
        Ok(DemandDistribution::Uniform { min, max })
    }

    pub fn piecewise_cdf(points: Vec<(f64, f64)>) -> Result<Self, DemandError> {
        if points.len() < 2 {
            return Err(DemandError::Invalid(
                "piecewise CDF needs at least two points".into(),
            ));
        }
        if points[0].1 != 0.0 || points[points.len() - 1].1 != 1.0 {
            return Err(DemandError::Invalid(
                "piecewise CDF must start at probability 0 and end at 1".into(),
            ));
        }
        if points[0].0 < 0.0 {
            return Err(DemandError::Invalid("energy values must be >= 0".into()));
        }
        for w in points.windows(2) {
            let ((e0, p0), (e1, p1)) = (w[0], w[1]);
            if !(e1 > e0 && p1 > p0) {
                return Err(DemandError::Invalid(format!(
                    "CDF points must be strictly increasing in both coordinates \
                     (flat or reversed segment at kwh {e0} -> {e1})"
                )));
            }
        }
        // E at breakpoints: on each segment G⁻¹ is linear in t, so the
        // integral is the trapezoid of the endpoint energies.
        let mut e_at = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        e_at.push(0.0);
        for w in points.windows(2) {
            let ((e0, p0), (e1, p1)) = (w[0], w[1]);
            acc += 0.5 * (e0 + e1) * (p1 - p0);
            e_at.push(acc);
        }
        Ok(DemandDistribution::Piecewise { points, e_at })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            DemandDistribution::Uniform { min, max } => (*min, *max),
            DemandDistribution::Piecewise { points, .. } => {
                (points[0].0, points[points.len() - 1].0)
            }
        }
    }

    /// G(eps), clamped to [0, 1] outside the support.
    pub fn cdf(&self, eps: f64) -> f64 {
        match self {
            DemandDistribution::Uniform { min, max } => {
                ((eps - min) / (max - min)).clamp(0.0, 1.0)
            }
            DemandDistribution::Piecewise { points, .. } => {
                if eps <= points[0].0 {
                    return 0.0;
                }
                if eps >= points[points.len() - 1].0 {
                    return 1.0;
                }
                let k = segment_index(points, eps, |p| p.0);
                let (e0, p0) = points[k];
                let (e1, p1) = points[k + 1];
                p0 + (eps - e0) / (e1 - e0) * (p1 - p0)
            }
        }
    }

    /// G⁻¹(t) for t in [0, 1].
    pub fn inverse_cdf(&self, t: f64) -> Result<f64, DemandError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(DemandError::OutOfDomain(t));
        }
        Ok(self.inverse_cdf_clamped(t))
    }

    /// G⁻¹ with the argument clamped to [0, 1]; used by solver internals
    /// that may step infinitesimally outside through rounding.
    pub fn inverse_cdf_clamped(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            DemandDistribution::Uniform { min, max } => min + t * (max - min),
            DemandDistribution::Piecewise { points, .. } => {
                if t <= 0.0 {
                    return points[0].0;
                }
                if t >= 1.0 {
                    return points[points.len() - 1].0;
                }
                let k = segment_index(points, t, |p| p.1);
                let (e0, p0) = points[k];
                let (e1, p1) = points[k + 1];
                e0 + (t - p0) / (p1 - p0) * (e1 - e0)
            }
        }
    }

    /// Quantile integral E(x) = ∫₀ˣ G⁻¹(t) dt; convex, E(0) = 0,
    /// E(1) = mean.
    pub fn quantile_integral(&self, x: f64) -> Result<f64, DemandError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(DemandError::OutOfDomain(x));
        }
        Ok(self.quantile_integral_clamped(x))
    }

    pub fn quantile_integral_clamped(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            DemandDistribution::Uniform { min, max } => {
                min * x + 0.5 * (max - min) * x * x
            }
            DemandDistribution::Piecewise { points, e_at } => {
                if x <= 0.0 {
                    return 0.0;
                }
                if x >= 1.0 {
                    return e_at[e_at.len() - 1];
                }
                let k = segment_index(points, x, |p| p.1);
                let (e0, p0) = points[k];
                let (e1, p1) = points[k + 1];
                let slope = (e1 - e0) / (p1 - p0);
                let dt = x - p0;
                e_at[k] + e0 * dt + 0.5 * slope * dt * dt
            }
        }
    }

    /// Expected energy carried by the population segment between
    /// quantiles t_lo and t_hi: E(t_hi) − E(t_lo).
    pub fn segment_mean_energy(&self, t_lo: f64, t_hi: f64) -> Result<f64, DemandError> {
        if !(0.0..=1.0).contains(&t_lo) {
            return Err(DemandError::OutOfDomain(t_lo));
        }
        if !(0.0..=1.0).contains(&t_hi) {
            return Err(DemandError::OutOfDomain(t_hi));
        }
        if t_lo > t_hi {
            return Err(DemandError::UnorderedSegment(t_lo, t_hi));
        }
        Ok(self.quantile_integral_clamped(t_hi) - self.quantile_integral_clamped(t_lo))
    }

    /// Mean of the distribution, E(1).
    pub fn mean(&self) -> f64 {
        self.quantile_integral_clamped(1.0)
    }
}

/// Index of the segment containing `v` under the key function, by
/// binary search over breakpoints.
fn segment_index<T, F: Fn(&T) -> f64>(points: &[T], v: f64, key: F) -> usize {
    let mut lo = 0;
    let mut hi = points.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if key(&points[mid]) <= v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

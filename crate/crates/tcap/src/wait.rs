//! Station wait-time models: the polynomial searching-time function used
//! by the case studies, a simplified M/M/c queueing form, and the
//! demand-dependent wait whose argument is station energy load rather
//! than arrival rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WaitError {
    #[error("arrival rate {lambda:.3} EV/hr at or beyond saturation {saturation:.3} EV/hr")]
    Saturated { lambda: f64, saturation: f64 },
    #[error("station load ratio {0:.4} at or beyond saturation 1.0")]
    LoadSaturated(f64),
    #[error("negative arrival rate {0}")]
    NegativeRate(f64),
    #[error("operation not defined for the demand-dependent wait model")]
    DemandDependentKind,
    #[error("invalid wait model: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaitModel {
    /// T(λ) = a · (λ / x)^b, minutes; strictly increasing and convex for
    /// a > 0, b >= 1, x > 0.
    Polynomial { a: f64, b: f64, x: f64 },
    /// Simplified M/M/c delay: T(λ) = ρ/(1−ρ) · 1/(cμ) with ρ = λ/(cμ).
    /// μ is a per-minute service rate; arrival rates arrive in EV/hr and
    /// are converted internally.
    Mmc { c: f64, mu: f64 },
    /// Wait grows with the station's expected energy load U rather than
    /// its arrival rate: per-user wait (1/c)·T(U/c)·ε with T(x)=x/(1−x).
    /// `c` is an energy-throughput capacity in the units of U (kWh/hr).
    DemandDependent { c: f64 },
}

impl WaitModel {
    pub fn validate(&self) -> Result<(), WaitError> {
        match *self {
            WaitModel::Polynomial { a, b, x } => {
                if a <= 0.0 || b < 1.0 || x <= 0.0 {
                    return Err(WaitError::Invalid(format!(
                        "polynomial wait needs a > 0, b >= 1, x > 0 (got a={a}, b={b}, x={x})"
                    )));
                }
            }
            WaitModel::Mmc { c, mu } => {
                if c <= 0.0 || mu <= 0.0 {
                    return Err(WaitError::Invalid(format!(
                        "mmc wait needs c > 0, mu > 0 (got c={c}, mu={mu})"
                    )));
                }
            }
            WaitModel::DemandDependent { c } => {
                if c <= 0.0 {
                    return Err(WaitError::Invalid(format!(
                        "demand_dependent wait needs c > 0 (got c={c})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Arrival rate (EV/hr) at which the model diverges, if any.
    pub fn saturation(&self) -> Option<f64> {
        match *self {
            WaitModel::Polynomial { .. } => None,
            WaitModel::Mmc { c, mu } => Some(60.0 * c * mu),
            WaitModel::DemandDependent { .. } => None,
        }
    }

    fn check_rate(&self, lambda: f64) -> Result<(), WaitError> {
        if lambda < 0.0 {
            return Err(WaitError::NegativeRate(lambda));
        }
        if let Some(sat) = self.saturation() {
            if lambda >= sat {
                return Err(WaitError::Saturated {
                    lambda,
                    saturation: sat,
                });
            }
        }
        Ok(())
    }

    /// Expected wait T(λ) in minutes at arrival rate λ EV/hr.
    pub fn wait_time(&self, lambda: f64) -> Result<f64, WaitError> {
        self.check_rate(lambda)?;
        match *self {
            WaitModel::Polynomial { a, b, x } => Ok(a * (lambda / x).powf(b)),
            WaitModel::Mmc { c, mu } => {
                let cmu = c * mu; // per-minute service capacity
                let rho = lambda / (60.0 * cmu);
                Ok(rho / (1.0 - rho) / cmu)
            }
            WaitModel::DemandDependent { .. } => Err(WaitError::DemandDependentKind),
        }
    }

    /// dT/dλ in minutes per (EV/hr).
    pub fn wait_time_derivative(&self, lambda: f64) -> Result<f64, WaitError> {
        self.check_rate(lambda)?;
        match *self {
            WaitModel::Polynomial { a, b, x } => {
                if lambda == 0.0 && b < 2.0 {
                    // b = 1 gives the constant slope a/x; b in (1,2) has
                    // derivative 0 at the origin.
                    if b == 1.0 {
                        return Ok(a / x);
                    }
                    return Ok(0.0);
                }
                Ok(a * b * (lambda / x).powf(b - 1.0) / x)
            }
            WaitModel::Mmc { c, mu } => {
                let cmu = c * mu;
                let sat = 60.0 * cmu;
                // T = K·λ/(s−λ) with K = 1/cmu, s = 60·cmu.
                let k = 1.0 / cmu;
                let s = sat;
                Ok(k * s / ((s - lambda) * (s - lambda)))
            }
            WaitModel::DemandDependent { .. } => Err(WaitError::DemandDependentKind),
        }
    }

    /// d²T/dλ², needed for marginal-revenue terms in the pricing solve.
    pub fn wait_time_second_derivative(&self, lambda: f64) -> Result<f64, WaitError> {
        self.check_rate(lambda)?;
        match *self {
            WaitModel::Polynomial { a, b, x } => {
                if lambda == 0.0 {
                    if b == 1.0 {
                        return Ok(0.0);
                    }
                    if b == 2.0 {
                        return Ok(2.0 * a / (x * x));
                    }
                    if b < 2.0 {
                        return Ok(0.0);
                    }
                    return Ok(0.0);
                }
                Ok(a * b * (b - 1.0) * (lambda / x).powf(b - 2.0) / (x * x))
            }
            WaitModel::Mmc { c, mu } => {
                let cmu = c * mu;
                let s = 60.0 * cmu;
                let k = 1.0 / cmu;
                Ok(2.0 * k * s / (s - lambda).powi(3))
            }
            WaitModel::DemandDependent { .. } => Err(WaitError::DemandDependentKind),
        }
    }

    /// ∫₀^λ T(x) dx, closed form per kind.
    pub fn wait_integral(&self, lambda: f64) -> Result<f64, WaitError> {
        self.check_rate(lambda)?;
        match *self {
            WaitModel::Polynomial { a, b, x } => {
                Ok(a * lambda * (lambda / x).powf(b) / (b + 1.0))
            }
            WaitModel::Mmc { c, mu } => {
                let cmu = c * mu;
                let s = 60.0 * cmu;
                let k = 1.0 / cmu;
                // ∫ K·x/(s−x) dx = K·(−x − s·ln(1 − x/s))
                Ok(k * (-lambda - s * (1.0 - lambda / s).ln()))
            }
            WaitModel::DemandDependent { .. } => Err(WaitError::DemandDependentKind),
        }
    }

    /// Per-user wait under the demand-dependent model: (1/c)·T(U/c)·ε
    /// with T(x) = x/(1−x).
    pub fn demand_wait(&self, load_kwh_hr: f64, eps_kwh: f64) -> Result<f64, WaitError> {
        match *self {
            WaitModel::DemandDependent { c } => {
                let u = load_kwh_hr / c;
                if u >= 1.0 {
                    return Err(WaitError::LoadSaturated(u));
                }
                if u < 0.0 {
                    return Err(WaitError::NegativeRate(load_kwh_hr));
                }
                Ok((u / (1.0 - u)) / c * eps_kwh)
            }
            _ => Err(WaitError::DemandDependentKind),
        }
    }

    /// ∫₀^(U/c) x/(1−x) dx = −u − ln(1−u); the congestion potential of
    /// the demand-dependent model.
    pub fn demand_wait_potential(&self, load_kwh_hr: f64) -> Result<f64, WaitError> {
        match *self {
            WaitModel::DemandDependent { c } => {
                let u = load_kwh_hr / c;
                if u >= 1.0 {
                    return Err(WaitError::LoadSaturated(u));
                }
                Ok(-u - (1.0 - u).ln())
            }
            _ => Err(WaitError::DemandDependentKind),
        }
    }

    /// d/dU of the demand-wait potential: T(U/c)/c with T(x)=x/(1−x).
    pub fn demand_wait_potential_derivative(&self, load_kwh_hr: f64) -> Result<f64, WaitError> {
        match *self {
            WaitModel::DemandDependent { c } => {
                let u = load_kwh_hr / c;
                if u >= 1.0 {
                    return Err(WaitError::LoadSaturated(u));
                }
                Ok(u / (1.0 - u) / c)
            }
            _ => Err(WaitError::DemandDependentKind),
        }
    }

    pub fn is_demand_dependent(&self) -> bool {
        matches!(self, WaitModel::DemandDependent { .. })
    }
}

//! Socially optimal assignment and pricing.
//!
//! Two objects live here. `so_objective` is the social-cost metric:
//! total road time, total experienced wait, and the CNO's electricity
//! procurement bill converted to minutes. `solve_so` minimizes the
//! *priced* social program: road time plus the wait potential plus the
//! population's bill when every station charges its marginal congestion
//! externality λ·T′(λ) as the plug-in fee. Its minimizer is the
//! equilibrium that the marginal-cost fee schedule induces, and the fee
//! vector is read directly off the solution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    minimize, station_arrivals, station_energy_loads, uniform_flows, AssignmentObjective,
    EquilibriumSolution, Flows, SolveError, SolverOptions, StopRule,
};
use crate::paths::PathSet;
use crate::scenario::{PriceEntry, PricingScheme, Scenario};

/// Per-station expected loads, arrivals, and waits for one flow pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationLoadReport {
    pub station_ids: Vec<String>,
    /// Expected energy consumption U_j, kWh/hr.
    pub loads_kwh_hr: Vec<f64>,
    /// Arrival rates λ_j, EV/hr.
    pub arrivals_ev_hr: Vec<f64>,
    /// Expected wait T_j(λ_j), minutes (zero for demand-dependent kinds).
    pub waits_min: Vec<f64>,
}

impl StationLoadReport {
    pub fn total_load(&self) -> f64 {
        self.loads_kwh_hr.iter().sum()
    }
}

/// Expected station energy loads under the threshold partition of the
/// given flows, with arrivals and waits alongside.
pub fn expected_station_load(
    f: &Flows,
    ps: &PathSet,
    s: &Scenario,
) -> Result<StationLoadReport, SolveError> {
    let loads = station_energy_loads(f, ps, s);
    let arrivals = station_arrivals(f, ps);
    let mut waits = Vec::with_capacity(s.stations.len());
    for (j, st) in s.stations.iter().enumerate() {
        if st.wait.is_demand_dependent() {
            waits.push(0.0);
        } else {
            waits.push(st.wait.wait_time(arrivals[j])?);
        }
    }
    Ok(StationLoadReport {
        station_ids: s.stations.iter().map(|st| st.node_id.clone()).collect(),
        loads_kwh_hr: loads,
        arrivals_ev_hr: arrivals,
        waits_min: waits,
    })
}

/// Electricity cost functions D_j. Linear by default (slope = the
/// station's marginal procurement cost); a convex quadratic is
/// available for strictly convex procurement.
#[derive(Debug, Clone, Copy)]
pub enum CostCurve {
    Linear { slope: f64 },
    Quadratic { linear_coeff: f64, quad_coeff: f64 },
}

impl CostCurve {
    pub fn for_station(s: &Scenario, j: usize) -> CostCurve {
        CostCurve::Linear {
            slope: s.stations[j].marginal_cost,
        }
    }
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            CostCurve::Linear { slope } => slope * u,
            CostCurve::Quadratic {
                linear_coeff,
                quad_coeff,
            } => linear_coeff * u + quad_coeff * u * u,
        }
    }
    pub fn marginal(&self, u: f64) -> f64 {
        match *self {
            CostCurve::Linear { slope } => slope,
            CostCurve::Quadratic {
                linear_coeff,
                quad_coeff,
            } => linear_coeff + 2.0 * quad_coeff * u,
        }
    }
}

/// Social cost of a flow pattern:
///   Σ_a x_a t_a + Σ_j λ_j T_j(λ_j) + α Σ_j D_j(U_j).
/// Plug-in fees are transfers and do not appear.
pub fn so_objective(f: &Flows, ps: &PathSet, s: &Scenario) -> Result<f64, SolveError> {
    let mut total = 0.0;
    for (oi, od) in ps.per_od.iter().enumerate() {
        for (pi, p) in od.paths.iter().enumerate() {
            total += f[oi][pi] * p.path.route_minutes;
        }
    }
    let lambda = station_arrivals(f, ps);
    let loads = station_energy_loads(f, ps, s);
    for (j, st) in s.stations.iter().enumerate() {
        if st.wait.is_demand_dependent() {
            // Experienced wait is per-user and load-proportional here.
            total += st.wait.demand_wait(loads[j], 1.0)? * loads[j];
        } else {
            total += lambda[j] * st.wait.wait_time(lambda[j])?;
        }
        total += s.economics.alpha * CostCurve::for_station(s, j).value(loads[j]);
    }
    Ok(total)
}

/// The priced social program:
///   Σ_a x_a t_a + Σ_j ∫₀^{λ_j} T_j + α Σ_j λ_j·(λ_j T_j′(λ_j))
///   + α Σ_j D_j(U_j(Q)).
/// The third term is the population's plug-in bill when each station
/// prices its marginal congestion externality; minimizing the whole
/// expression yields the fee-enforced equilibrium.
pub struct PricedObjective<'a> {
    pub scenario: &'a Scenario,
    pub paths: &'a PathSet,
}

impl AssignmentObjective for PricedObjective<'_> {
    fn value(&self, f: &Flows) -> Result<f64, SolveError> {
        let (s, ps) = (self.scenario, self.paths);
        let alpha = s.economics.alpha;
        let mut total = 0.0;
        for (oi, od) in ps.per_od.iter().enumerate() {
            for (pi, p) in od.paths.iter().enumerate() {
                total += f[oi][pi] * p.path.route_minutes;
            }
        }
        let lambda = station_arrivals(f, ps);
        for (j, st) in s.stations.iter().enumerate() {
            let l = lambda[j];
            total += st.wait.wait_integral(l)?;
            total += alpha * l * l * st.wait.wait_time_derivative(l)?;
        }
        let loads = station_energy_loads(f, ps, s);
        for (j, _) in s.stations.iter().enumerate() {
            total += alpha * CostCurve::for_station(s, j).value(loads[j]);
        }
        Ok(total)
    }

    fn gradient(&self, f: &Flows) -> Result<Flows, SolveError> {
        let (s, ps) = (self.scenario, self.paths);
        let alpha = s.economics.alpha;
        let lambda = station_arrivals(f, ps);
        // Station marginal of ∫T + α·λ²T′: T(λ) + α(2λT′ + λ²T″).
        let mut marg = vec![0.0; s.stations.len()];
        for (j, st) in s.stations.iter().enumerate() {
            let l = lambda[j];
            let t = st.wait.wait_time(l)?;
            let t1 = st.wait.wait_time_derivative(l)?;
            let t2 = st.wait.wait_time_second_derivative(l)?;
            marg[j] = t + alpha * (2.0 * l * t1 + l * l * t2);
        }
        let mut g: Flows = ps
            .per_od
            .iter()
            .map(|od| {
                od.paths
                    .iter()
                    .map(|p| p.path.route_minutes + marg[p.path.station])
                    .collect()
            })
            .collect();
        // Energy procurement chain: α·Σ_{k≥i}(c_k − c_{k+1})·G⁻¹(t_k)
        // with c_k the marginal cost at path k's station (stations are
        // ranked by decreasing marginal cost so the suffix form holds).
        let loads = station_energy_loads(f, ps, s);
        for (oi, od) in ps.per_od.iter().enumerate() {
            let d = &s.od_pairs[od.od].distribution;
            let q = od.rate;
            let k = od.paths.len();
            let mut t = vec![0.0; k];
            let mut cum = 0.0;
            for pi in 0..k {
                cum += f[oi][pi];
                t[pi] = (cum / q).clamp(0.0, 1.0);
            }
            let mut suffix = 0.0;
            for pi in (0..k).rev() {
                let c_here = CostCurve::for_station(s, od.paths[pi].path.station)
                    .marginal(loads[od.paths[pi].path.station]);
                let c_next = if pi + 1 < k {
                    CostCurve::for_station(s, od.paths[pi + 1].path.station)
                        .marginal(loads[od.paths[pi + 1].path.station])
                } else {
                    0.0
                };
                suffix += (c_here - c_next) * d.inverse_cdf_clamped(t[pi]);
                g[oi][pi] += alpha * suffix;
            }
        }
        Ok(g)
    }
}

pub fn so_gradient(f: &Flows, s: &Scenario, ps: &PathSet) -> Result<Flows, SolveError> {
    PricedObjective {
        scenario: s,
        paths: ps,
    }
    .gradient(f)
}

/// Direct minimization target for the social-cost metric: road time,
/// experienced wait λ·T(λ), and procurement. Its minimizer is the
/// system optimum that Pigouvian fees (λT′/α installed as constants)
/// reproduce as a user equilibrium.
pub struct SystemOptimumObjective<'a> {
    pub scenario: &'a Scenario,
    pub paths: &'a PathSet,
}

impl AssignmentObjective for SystemOptimumObjective<'_> {
    fn value(&self, f: &Flows) -> Result<f64, SolveError> {
        so_objective(f, self.paths, self.scenario)
    }

    fn gradient(&self, f: &Flows) -> Result<Flows, SolveError> {
        let (s, ps) = (self.scenario, self.paths);
        let alpha = s.economics.alpha;
        let lambda = station_arrivals(f, ps);
        // d/dλ of λT(λ): the experienced wait plus the congestion
        // externality imposed on everyone else.
        let mut marg = vec![0.0; s.stations.len()];
        for (j, st) in s.stations.iter().enumerate() {
            let l = lambda[j];
            marg[j] = st.wait.wait_time(l)? + l * st.wait.wait_time_derivative(l)?;
        }
        let mut g: Flows = ps
            .per_od
            .iter()
            .map(|od| {
                od.paths
                    .iter()
                    .map(|p| p.path.route_minutes + marg[p.path.station])
                    .collect()
            })
            .collect();
        let loads = station_energy_loads(f, ps, s);
        for (oi, od) in ps.per_od.iter().enumerate() {
            let d = &s.od_pairs[od.od].distribution;
            let q = od.rate;
            let k = od.paths.len();
            let mut t = vec![0.0; k];
            let mut cum = 0.0;
            for pi in 0..k {
                cum += f[oi][pi];
                t[pi] = (cum / q).clamp(0.0, 1.0);
            }
            let mut suffix = 0.0;
            for pi in (0..k).rev() {
                let c_here = CostCurve::for_station(s, od.paths[pi].path.station)
                    .marginal(loads[od.paths[pi].path.station]);
                let c_next = if pi + 1 < k {
                    CostCurve::for_station(s, od.paths[pi + 1].path.station)
                        .marginal(loads[od.paths[pi + 1].path.station])
                } else {
                    0.0
                };
                suffix += (c_here - c_next) * d.inverse_cdf_clamped(t[pi]);
                g[oi][pi] += alpha * suffix;
            }
        }
        Ok(g)
    }
}

/// Minimize the social-cost metric itself over the feasible flows.
pub fn solve_system_optimum(
    s: &Scenario,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution, SolveError> {
    let base = s.with_fees(None);
    let ps = PathSet::build(&base);
    for od in &ps.per_od {
        if od.paths.is_empty() {
            return Err(SolveError::NoPaths(od.od));
        }
    }
    let obj = SystemOptimumObjective {
        scenario: &base,
        paths: &ps,
    };
    let stop = StopRule::ProjectedGradient { tol: opts.pg_tol };
    let (f, stats) = minimize(&obj, &ps, uniform_flows(&ps), &stop, opts.max_iters)?;
    let lambda = station_arrivals(&f, &ps);
    let loads = station_energy_loads(&f, &ps, s);
    let thresholds = crate::equilibrium::extract_thresholds(&f, &ps, s);
    Ok(EquilibriumSolution {
        mode: "system-optimum".to_string(),
        thresholds,
        saturated: Vec::new(),
        station_arrivals: lambda,
        station_loads: loads,
        objective: stats.objective,
        wardrop_gap: 0.0,
        pg_norm: stats.pg_norm,
        iterations: stats.iterations,
        converged: stats.converged,
        monotone_descent: stats.monotone_descent,
        nonconvex: false,
        stationary_points: Vec::new(),
        flows: f,
        paths: ps,
    })
}

pub fn priced_objective_value(f: &Flows, s: &Scenario, ps: &PathSet) -> Result<f64, SolveError> {
    PricedObjective {
        scenario: s,
        paths: ps,
    }
    .value(f)
}

/// Solve the priced social program. Paths are ranked by decreasing
/// marginal electricity cost (installed fees are ignored: the fee is
/// the program's own marginal-cost term).
pub fn solve_so(s: &Scenario, opts: &SolverOptions) -> Result<EquilibriumSolution, SolveError> {
    let base = s.with_fees(None);
    let ps = PathSet::build(&base);
    for od in &ps.per_od {
        if od.paths.is_empty() {
            return Err(SolveError::NoPaths(od.od));
        }
    }
    let obj = PricedObjective {
        scenario: &base,
        paths: &ps,
    };
    let stop = StopRule::ProjectedGradient { tol: opts.pg_tol };
    let (f, stats) = minimize(&obj, &ps, uniform_flows(&ps), &stop, opts.max_iters)?;
    let lambda = station_arrivals(&f, &ps);
    let loads = station_energy_loads(&f, &ps, s);
    let thresholds = crate::equilibrium::extract_thresholds(&f, &ps, s);
    Ok(EquilibriumSolution {
        mode: "so".to_string(),
        thresholds,
        saturated: Vec::new(),
        station_arrivals: lambda,
        station_loads: loads,
        objective: stats.objective,
        wardrop_gap: 0.0,
        pg_norm: stats.pg_norm,
        iterations: stats.iterations,
        converged: stats.converged,
        monotone_descent: stats.monotone_descent,
        nonconvex: false,
        stationary_points: Vec::new(),
        flows: f,
        paths: ps,
    })
}

/// How derived fees are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeeUnits {
    /// τ_j = λ_j·T_j′(λ_j), read in dollars. This is the published
    /// convention and the one fee tables are reported in.
    Paper,
    /// τ_j = λ_j·T_j′(λ_j)/α. Installing these as constant fees makes
    /// the user equilibrium reproduce the socially optimal pattern
    /// (the fee enters user cost multiplied by α).
    Lagrangian,
}

/// Socially optimal plug-in fees and electricity prices at the solved
/// arrivals: τ_j from the marginal congestion externality, υ_j the
/// marginal electricity cost at the station's load.
pub fn optimal_prices(
    sol: &EquilibriumSolution,
    s: &Scenario,
    units: FeeUnits,
) -> Result<PricingScheme, SolveError> {
    let mut entries = BTreeMap::new();
    for (j, st) in s.stations.iter().enumerate() {
        let l = sol.station_arrivals[j];
        let tau = if st.wait.is_demand_dependent() {
            0.0
        } else {
            l * st.wait.wait_time_derivative(l)?
        };
        let tau = match units {
            FeeUnits::Paper => tau,
            FeeUnits::Lagrangian => tau / s.economics.alpha,
        };
        let upsilon = CostCurve::for_station(s, j).marginal(sol.station_loads[j]);
        entries.insert(
            st.node_id.clone(),
            PriceEntry {
                tau_usd: tau,
                upsilon_usd_per_kwh: upsilon,
            },
        );
    }
    Ok(PricingScheme { entries })
}

/// Result of installing a pricing scheme and re-solving the user
/// equilibrium against the socially optimal pattern.
#[derive(Debug, Clone)]
pub struct EnforcementReport {
    pub max_flow_deviation: f64,
    /// Relative social-cost excess of the priced UE over the optimum.
    pub social_cost_gap: f64,
    pub ue_social_cost: f64,
    pub so_social_cost: f64,
    pub ue: EquilibriumSolution,
    pub so: EquilibriumSolution,
}

/// Install `prices` (or the enforcing fees derived from the
/// system-optimum solve when `None`), run the user equilibrium, and
/// compare with the system optimum per-path and in social cost.
pub fn verify_so_enforcement(
    s: &Scenario,
    prices: Option<PricingScheme>,
    opts: &SolverOptions,
) -> Result<EnforcementReport, SolveError> {
    let so = solve_system_optimum(s, opts)?;
    let prices = match prices {
        Some(p) => p,
        None => optimal_prices(&so, s, FeeUnits::Lagrangian)?,
    };
    let priced = s.with_fees(Some(prices));
    let ue = crate::equilibrium::solve_ue(&priced, opts)?;

    // Per-path comparison keyed by (od, arcs, station): the two path
    // sets can be ranked differently once fees shift intercepts.
    let mut dev = 0.0f64;
    for (oi, od) in so.paths.per_od.iter().enumerate() {
        for (pi, p) in od.paths.iter().enumerate() {
            let f_so = so.flows[oi][pi];
            let f_ue = ue.paths.per_od[oi]
                .paths
                .iter()
                .position(|q| q.path.arcs == p.path.arcs && q.path.station == p.path.station)
                .map(|k| ue.flows[oi][k])
                .unwrap_or(0.0);
            dev = dev.max((f_so - f_ue).abs());
        }
    }

    let so_cost = so_objective(&so.flows, &so.paths, s)?;
    let ue_cost = so_objective(&ue.flows, &ue.paths, &priced.with_fees(None))?;
    Ok(EnforcementReport {
        max_flow_deviation: dev,
        social_cost_gap: (ue_cost - so_cost) / so_cost,
        ue_social_cost: ue_cost,
        so_social_cost: so_cost,
        ue,
        so,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario_str;
    use approx::assert_abs_diff_eq;

    #[test]
    fn load_split_example() {
        // one OD, uniform[0,80], q=100, two stations split at Q=50:
        // the higher-θ station serves the low-energy half.
        let s = load_scenario_str(&crate::test_fixtures::toy_two_path_doc(22.0, 17.0, 10.0))
            .unwrap();
        let ps = PathSet::build(&s);
        let f = vec![vec![50.0, 50.0]];
        let report = expected_station_load(&f, &ps, &s).unwrap();
        let hi_theta = ps.per_od[0].paths[0].path.station;
        let lo_theta = ps.per_od[0].paths[1].path.station;
        assert_abs_diff_eq!(report.loads_kwh_hr[hi_theta], 1000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.loads_kwh_hr[lo_theta], 3000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.total_load(), 4000.0, epsilon = 1e-9);
        // all flow on one station
        let f = vec![vec![100.0, 0.0]];
        let report = expected_station_load(&f, &ps, &s).unwrap();
        assert_abs_diff_eq!(report.loads_kwh_hr[hi_theta], 4000.0, epsilon = 1e-9);
    }

    #[test]
    fn conservation_for_any_feasible_flow() {
        let s = load_scenario_str(&crate::test_fixtures::toy_two_path_doc(22.0, 17.0, 10.0))
            .unwrap();
        let ps = PathSet::build(&s);
        for split in [0.0, 13.7, 50.0, 99.99, 100.0] {
            let f = vec![vec![split, 100.0 - split]];
            let report = expected_station_load(&f, &ps, &s).unwrap();
            assert_abs_diff_eq!(report.total_load(), 4000.0, epsilon = 1e-9 * 4000.0);
        }
    }

    #[test]
    fn so_objective_zero_flow_is_zero() {
        let s = load_scenario_str(&crate::test_fixtures::toy_two_path_doc(22.0, 17.0, 10.0))
            .unwrap();
        let ps = PathSet::build(&s);
        let v = so_objective(&vec![vec![0.0, 0.0]], &ps, &s).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_point_is_stationary_for_priced_program() {
        let s = load_scenario_str(&crate::test_fixtures::toy_two_path_doc(20.0, 20.0, 10.0))
            .unwrap();
        let ps = PathSet::build(&s);
        let g = so_gradient(&vec![vec![50.0, 50.0]], &s, &ps).unwrap();
        assert_abs_diff_eq!(g[0][0], g[0][1], epsilon = 1e-10);
    }

    #[test]
    fn single_path_so_is_forced() {
        let doc = crate::test_fixtures::two_node_doc(45.0);
        let s = load_scenario_str(&doc).unwrap();
        let sol = solve_so(&s, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.flows[0][0], 100.0, epsilon = 1e-9);
    }

    #[test]
    fn two_path_so_matches_grid_search() {
        let s = load_scenario_str(&crate::test_fixtures::toy_two_path_doc(22.0, 17.0, 10.0))
            .unwrap();
        let sol = solve_so(&s, &SolverOptions::default()).unwrap();
        let ps = PathSet::build(&s.with_fees(None));
        // independent fine grid over the 1-D split
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let a = 100.0 * i as f64 / 100_000.0;
            let v = priced_objective_value(&vec![vec![a, 100.0 - a]], &s, &ps).unwrap();
            if v < best.0 {
                best = (v, a);
            }
        }
        assert!(
            (sol.flows[0][0] - best.1).abs() <= 1e-3 * 100.0,
            "solver {} vs grid {}",
            sol.flows[0][0],
            best.1
        );
    }

    #[test]
    fn fee_formula_at_equal_split() {
        // λ = 100/7 at every station with T = 0.4(λ/10)^3 gives
        // τ = 1.2e-3·λ^3 ≈ 3.499 $.
        let l: f64 = 100.0 / 7.0;
        let tau = l * (0.4 * 3.0 * l * l / 1000.0);
        assert_abs_diff_eq!(tau, 3.4985, epsilon = 1e-3);
    }

    #[test]
    fn zero_arrivals_mean_zero_fee() {
        let s = load_scenario_str(&crate::test_fixtures::toy_two_path_doc(22.0, 17.0, 10.0))
            .unwrap();
        let mut sol = solve_so(&s, &SolverOptions::default()).unwrap();
        sol.station_arrivals = vec![0.0; s.stations.len()];
        let prices = optimal_prices(&sol, &s, FeeUnits::Paper).unwrap();
        assert!(prices.entries.values().all(|e| e.tau_usd == 0.0));
    }

    #[test]
    fn symmetric_enforcement_is_exact() {
        let s = load_scenario_str(&crate::test_fixtures::toy_two_path_doc(20.0, 20.0, 10.0))
            .unwrap();
        let report = verify_so_enforcement(&s, None, &SolverOptions::default()).unwrap();
        assert!(report.max_flow_deviation <= 1e-2, "{}", report.max_flow_deviation);
        assert!(report.social_cost_gap.abs() <= 1e-6);
    }

    #[test]
    fn perturbed_fees_deviate() {
        let s = load_scenario_str(&crate::test_fixtures::toy_two_path_doc(20.0, 20.0, 10.0))
            .unwrap();
        let opts = SolverOptions::default();
        let so = solve_so(&s, &opts).unwrap();
        let mut prices = optimal_prices(&so, &s, FeeUnits::Lagrangian).unwrap();
        let first = prices.entries.keys().next().unwrap().clone();
        prices.entries.get_mut(&first).unwrap().tau_usd += 1.0;
        let report = verify_so_enforcement(&s, Some(prices), &opts).unwrap();
        assert!(report.max_flow_deviation > 1.0);
    }
}



//! Machine-readable result bundles: one JSON document plus per-station
//! and per-path CSV tables for a solve. Schema is versioned; totals are
//! recomputable from the row data.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::equilibrium::{arc_flows, EquilibriumSolution, SolveError};
use crate::scenario::{PricingScheme, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationRow {
    pub station: String,
    pub lambda_ev_hr: f64,
    pub wait_min: f64,
    pub wait_integral_min: f64,
    pub load_kwh_hr: f64,
    pub tau_usd: f64,
    pub upsilon_usd_per_kwh: f64,
    pub marginal_cost_usd_per_kwh: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathRow {
    pub od: usize,
    pub origin: String,
    pub destination: String,
    pub class: Option<String>,
    pub rank: usize,
    pub station: String,
    pub arcs: Vec<String>,
    pub route_minutes: f64,
    pub theta_usd_per_kwh: f64,
    pub flow_ev_hr: f64,
    pub cumulative_ev_hr: f64,
    pub pi_lo_kwh: f64,
    pub pi_hi_kwh: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Totals {
    /// Σ_j ∫₀^{λ_j} T_j — the headline "total waiting time" (see README
    /// for why this convention, not Σ λ_j·T_j, is the reported one).
    pub wait_potential_min: f64,
    /// Σ_j λ_j·T_j(λ_j), EV·minutes per hour of operation.
    pub wait_experienced_ev_min: f64,
    /// CNO procurement bill Σ_j marginal_cost_j · U_j, $/hr.
    pub electricity_cost_usd_hr: f64,
    /// What users pay: Σ_j (υ_j·U_j + τ_j·λ_j), $/hr.
    pub user_payment_usd_hr: f64,
    pub road_time_ev_min: f64,
    pub total_load_kwh_hr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub wardrop_gap: f64,
    pub pg_norm: f64,
    pub objective: f64,
    pub social_cost_min: f64,
    pub saturated_stations: Vec<String>,
    pub nonconvex: bool,
    pub stationary_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema_version: u32,
    pub scenario: String,
    pub scenario_digest: String,
    pub mode: String,
    pub alpha_min_per_usd: f64,
    pub stations: Vec<StationRow>,
    pub paths: Vec<PathRow>,
    pub totals: Totals,
    pub solver: SolverDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fees: Option<PricingScheme>,
}

pub fn scenario_digest(s: &Scenario) -> String {
    let mut hasher = Sha256::new();
    hasher.update(s.to_toml().as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

impl ResultBundle {
    pub fn from_solution(
        sol: &EquilibriumSolution,
        s: &Scenario,
        fees: Option<PricingScheme>,
    ) -> Result<ResultBundle, SolveError> {
        let mut stations = Vec::with_capacity(s.stations.len());
        let mut wait_potential = 0.0;
        let mut wait_experienced = 0.0;
        let mut elec_cost = 0.0;
        let mut user_payment = 0.0;
        for (j, st) in s.stations.iter().enumerate() {
            let l = sol.station_arrivals[j];
            let u = sol.station_loads[j];
            let (t, ti) = if st.wait.is_demand_dependent() {
                (0.0, 0.0)
            } else {
                (st.wait.wait_time(l)?, st.wait.wait_integral(l)?)
            };
            let tau = s.tau(j);
            let ups = s.upsilon(j);
            wait_potential += ti;
            wait_experienced += l * t;
            elec_cost += st.marginal_cost * u;
            user_payment += ups * u + tau * l;
            stations.push(StationRow {
                station: st.node_id.clone(),
                lambda_ev_hr: l,
                wait_min: t,
                wait_integral_min: ti,
                load_kwh_hr: u,
                tau_usd: tau,
                upsilon_usd_per_kwh: ups,
                marginal_cost_usd_per_kwh: st.marginal_cost,
            });
        }

        let x = arc_flows(&sol.flows, &sol.paths);
        let road_time: f64 = x
            .iter()
            .zip(&s.network.arcs)
            .map(|(&f, a)| f * a.minutes)
            .sum();

        let mut paths = Vec::new();
        for (oi, od) in sol.paths.per_od.iter().enumerate() {
            let odp = &s.od_pairs[od.od];
            let mut cum = 0.0;
            for (pi, p) in od.paths.iter().enumerate() {
                let flow = sol.flows[oi][pi];
                cum += flow;
                paths.push(PathRow {
                    od: od.od,
                    origin: s.network.node_ids[odp.origin].clone(),
                    destination: s.network.node_ids[odp.destination].clone(),
                    class: odp.class_name.clone(),
                    rank: pi + 1,
                    station: s.stations[p.path.station].node_id.clone(),
                    arcs: p
                        .path
                        .arcs
                        .iter()
                        .map(|&ai| s.network.arcs[ai].id.clone())
                        .collect(),
                    route_minutes: p.path.route_minutes,
                    theta_usd_per_kwh: p.theta,
                    flow_ev_hr: flow,
                    cumulative_ev_hr: cum,
                    pi_lo_kwh: sol.thresholds[oi][pi],
                    pi_hi_kwh: sol.thresholds[oi][pi + 1],
                });
            }
        }

        let totals = Totals {
            wait_potential_min: wait_potential,
            wait_experienced_ev_min: wait_experienced,
            electricity_cost_usd_hr: elec_cost,
            user_payment_usd_hr: user_payment,
            road_time_ev_min: road_time,
            total_load_kwh_hr: sol.station_loads.iter().sum(),
        };

        let social_cost = crate::social::so_objective(&sol.flows, &sol.paths, s)?;
        Ok(ResultBundle {
            schema_version: SCHEMA_VERSION,
            scenario: s.name.clone(),
            scenario_digest: scenario_digest(s),
            mode: sol.mode.clone(),
            alpha_min_per_usd: s.economics.alpha,
            stations,
            paths,
            totals,
            solver: SolverDiagnostics {
                iterations: sol.iterations,
                converged: sol.converged,
                wardrop_gap: sol.wardrop_gap,
                pg_norm: sol.pg_norm,
                objective: sol.objective,
                social_cost_min: social_cost,
                saturated_stations: sol
                    .saturated
                    .iter()
                    .map(|&j| s.stations[j].node_id.clone())
                    .collect(),
                nonconvex: sol.nonconvex,
                stationary_points: sol.stationary_points.len(),
            },
            fees,
        })
    }

    /// Totals must equal a recomputation from the row data bit-for-bit
    /// (same floating formulas, same order).
    pub fn totals_consistent(&self) -> bool {
        let mut wait_potential = 0.0;
        let mut wait_experienced = 0.0;
        let mut elec = 0.0;
        let mut pay = 0.0;
        for r in &self.stations {
            wait_potential += r.wait_integral_min;
            wait_experienced += r.lambda_ev_hr * r.wait_min;
            elec += r.marginal_cost_usd_per_kwh * r.load_kwh_hr;
            pay += r.upsilon_usd_per_kwh * r.load_kwh_hr + r.tau_usd * r.lambda_ev_hr;
        }
        wait_potential == self.totals.wait_potential_min
            && wait_experienced == self.totals.wait_experienced_ev_min
            && elec == self.totals.electricity_cost_usd_hr
            && pay == self.totals.user_payment_usd_hr
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serialization cannot fail")
    }

    pub fn station_csv(&self) -> String {
        let mut out = String::from(
            "station,lambda_ev_hr,wait_min,wait_integral_min,load_kwh_hr,tau_usd,upsilon_usd_per_kwh,marginal_cost_usd_per_kwh\n",
        );
        for r in &self.stations {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.station,
                r.lambda_ev_hr,
                r.wait_min,
                r.wait_integral_min,
                r.load_kwh_hr,
                r.tau_usd,
                r.upsilon_usd_per_kwh,
                r.marginal_cost_usd_per_kwh
            ));
        }
        out
    }

    pub fn path_csv(&self) -> String {
        let mut out = String::from(
            "od,origin,destination,class,rank,station,arcs,route_minutes,theta_usd_per_kwh,flow_ev_hr,cumulative_ev_hr,pi_lo_kwh,pi_hi_kwh\n",
        );
        for r in &self.paths {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.od,
                r.origin,
                r.destination,
                r.class.clone().unwrap_or_default(),
                r.rank,
                r.station,
                r.arcs.join("|"),
                r.route_minutes,
                r.theta_usd_per_kwh,
                r.flow_ev_hr,
                r.cumulative_ev_hr,
                r.pi_lo_kwh,
                r.pi_hi_kwh
            ));
        }
        out
    }
}

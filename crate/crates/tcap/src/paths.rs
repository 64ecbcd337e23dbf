//! Feasible charging paths: acyclic origin→destination routes that stop
//! at exactly one station, with the affine-in-ε cost coefficients and
//! the decreasing-price ordering the threshold structure relies on.

use std::collections::BTreeSet;

use crate::scenario::{Scenario, Station};
use crate::wait::WaitError;

/// One feasible path: a simple route plus the single station (on the
/// route) where the user charges.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingPath {
    pub od: usize,
    /// Arc indices, origin to destination.
    pub arcs: Vec<usize>,
    /// Node indices visited, origin first.
    pub nodes: Vec<usize>,
    /// Station index (into `scenario.stations`).
    pub station: usize,
    pub route_minutes: f64,
}

/// Enumerate simple routes origin→destination as arc-index sequences.
/// Exhaustive DFS with a visited set; deterministic order (adjacency
/// sorted by arc index).
fn simple_routes(s: &Scenario, origin: usize, destination: usize) -> Vec<Vec<usize>> {
    let n = s.network.node_ids.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ai, a) in s.network.arcs.iter().enumerate() {
        adj[a.from].push(ai);
    }
    let mut routes = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut visited = vec![false; n];
    visited[origin] = true;

    fn dfs(
        node: usize,
        dest: usize,
        adj: &[Vec<usize>],
        arcs: &[crate::scenario::NetArc],
        visited: &mut [bool],
        stack: &mut Vec<usize>,
        routes: &mut Vec<Vec<usize>>,
    ) {
        if node == dest {
            routes.push(stack.clone());
            return;
        }
        for &ai in &adj[node] {
            let to = arcs[ai].to;
            if !visited[to] {
                visited[to] = true;
                stack.push(ai);
                dfs(to, dest, adj, arcs, visited, stack, routes);
                stack.pop();
                visited[to] = false;
            }
        }
    }
    dfs(
        origin,
        destination,
        &adj,
        &s.network.arcs,
        &mut visited,
        &mut stack,
        &mut routes,
    );
    routes
}

/// All feasible charging paths for one OD pair: every simple route,
/// combined with every allowed station on that route.
pub fn enumerate_feasible_paths(s: &Scenario, od_index: usize) -> Vec<ChargingPath> {
    let od = &s.od_pairs[od_index];
    let mut out = Vec::new();
    for route in simple_routes(s, od.origin, od.destination) {
        let mut nodes = vec![od.origin];
        for &ai in &route {
            nodes.push(s.network.arcs[ai].to);
        }
        let minutes: f64 = route.iter().map(|&ai| s.network.arcs[ai].minutes).sum();
        for &node in &nodes {
            if let Some(&st) = s.station_at_node.get(&node) {
                if od.allowed.contains(&st) {
                    out.push(ChargingPath {
                        od: od_index,
                        arcs: route.clone(),
                        nodes: nodes.clone(),
                        station: st,
                        route_minutes: minutes,
                    });
                }
            }
        }
    }
    out
}

/// Electricity price adjusted for a station's charge rate relative to
/// the network default: υ_j + (γ_j − γ_ref)/α. Slower chargers act as a
/// per-kWh time penalty converted to money.
pub fn effective_price(station: &Station, upsilon: f64, alpha: f64, gamma_ref: f64) -> f64 {
    upsilon + (station.gamma - gamma_ref) / alpha
}

/// ε-independent part of a path's trip cost at the given station
/// arrival rate: ψ = Σ t_a + T_j(λ_j) + α·τ_j.
pub fn path_intercept(
    path: &ChargingPath,
    s: &Scenario,
    lambda_j: f64,
    tau_j: f64,
    alpha: f64,
) -> Result<f64, WaitError> {
    let wait = s.stations[path.station].wait.wait_time(lambda_j)?;
    Ok(path.route_minutes + wait + alpha * tau_j)
}

/// Stable decreasing-price ranking. Ties broken by ascending intercept
/// ψ, then by station node id. Returns indices into the input slice.
pub fn order_paths_by_price(prices: &[f64], psi: &[f64], station_ids: &[&str]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..prices.len()).collect();
    idx.sort_by(|&a, &b| {
        prices[b]
            .partial_cmp(&prices[a])
            .unwrap()
            .then(psi[a].partial_cmp(&psi[b]).unwrap())
            .then(station_ids[a].cmp(station_ids[b]))
            .then(a.cmp(&b))
    });
    idx
}

/// One OD pair's ranked path set, with everything the assignment
/// programs need per path.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPath {
    pub path: ChargingPath,
    /// Effective electricity price used for ordering and energy terms.
    pub theta: f64,
    /// Installed plug-in fee ($); zero in the no-fee mode.
    pub tau: f64,
    /// Posted electricity price ($/kWh) before the charge-rate adjustment.
    pub upsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdPaths {
    pub od: usize,
    pub rate: f64,
    pub paths: Vec<RankedPath>,
}

/// The full ranked assignment structure for a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub per_od: Vec<OdPaths>,
    pub n_stations: usize,
    pub n_arcs: usize,
}

impl PathSet {
    /// Build the ranked path set with the scenario's installed prices
    /// (fees when present, otherwise τ=0 and υ=marginal cost).
    pub fn build(s: &Scenario) -> PathSet {
        let alpha = s.economics.alpha;
        let mut per_od = Vec::with_capacity(s.od_pairs.len());
        for od_index in 0..s.od_pairs.len() {
            let raw = enumerate_feasible_paths(s, od_index);
            let thetas: Vec<f64> = raw
                .iter()
                .map(|p| {
                    effective_price(
                        &s.stations[p.station],
                        s.upsilon(p.station),
                        alpha,
                        s.gamma_default,
                    )
                })
                .collect();
            // Tie-break intercepts at zero congestion: route time plus
            // the fee converted to minutes.
            let psi0: Vec<f64> = raw
                .iter()
                .map(|p| p.route_minutes + alpha * s.tau(p.station))
                .collect();
            let ids: Vec<&str> = raw
                .iter()
                .map(|p| s.stations[p.station].node_id.as_str())
                .collect();
            let order = order_paths_by_price(&thetas, &psi0, &ids);
            let paths = order
                .into_iter()
                .map(|i| RankedPath {
                    theta: thetas[i],
                    tau: s.tau(raw[i].station),
                    upsilon: s.upsilon(raw[i].station),
                    path: raw[i].clone(),
                })
                .collect();
            per_od.push(OdPaths {
                od: od_index,
                rate: s.od_pairs[od_index].rate,
                paths,
            });
        }
        PathSet {
            per_od,
            n_stations: s.stations.len(),
            n_arcs: s.network.arcs.len(),
        }
    }

    pub fn total_paths(&self) -> usize {
        self.per_od.iter().map(|od| od.paths.len()).sum()
    }

    /// Stations that actually appear on some feasible path.
    pub fn reachable_stations(&self) -> BTreeSet<usize> {
        self.per_od
            .iter()
            .flat_map(|od| od.paths.iter().map(|p| p.path.station))
            .collect()
    }
}

//! Brute-force reference implementations used by tests: an independent
//! path enumerator, a discretized best-response assignment, and Monte
//! Carlo cost accounting. Deliberately simple, size-guarded, and kept
//! apart from the production code paths they validate.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{station_arrivals, station_energy_loads, trip_cost, Flows, SolveError};
use crate::paths::PathSet;
use crate::scenario::Scenario;

/// Exact set of (arc sequence, station) pairs for one OD pair, by a
/// node-recursive walk enumeration independent of the production DFS.
/// Guarded to graphs of at most 12 nodes.
pub fn brute_force_paths(
    s: &Scenario,
    od_index: usize,
) -> Result<BTreeSet<(Vec<usize>, usize)>, SolveError> {
    let n = s.network.node_ids.len();
    if n > 12 {
        return Err(SolveError::Invalid(format!(
            "brute-force path oracle is guarded to 12 nodes, got {n}"
        )));
    }
    let od = &s.od_pairs[od_index];
    let mut result = BTreeSet::new();
    // Walk extension over node sequences; arcs resolved afterwards so
    // the search structure differs from the arc-driven production DFS.
    let mut frontier: Vec<Vec<usize>> = vec![vec![od.origin]];
    while let Some(seq) = frontier.pop() {
        let last = *seq.last().unwrap();
        if last == od.destination {
            // every allowed station on the walk yields one path
            let mut arcs = Vec::new();
            let mut ok = true;
            for w in seq.windows(2) {
                match s
                    .network
                    .arcs
                    .iter()
                    .position(|a| a.from == w[0] && a.to == w[1])
                {
                    Some(ai) => arcs.push(ai),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                for &node in &seq {
                    if let Some(&st) = s.station_at_node.get(&node) {
                        if od.allowed.contains(&st) {
                            result.insert((arcs.clone(), st));
                        }
                    }
                }
            }
            continue;
        }
        for a in &s.network.arcs {
            if a.from == last && !seq.contains(&a.to) {
                let mut next = seq.clone();
                next.push(a.to);
                frontier.push(next);
            }
        }
    }
    Ok(result)
}

/// A demand population discretized into per-OD energy bins.
#[derive(Debug, Clone)]
pub struct DiscretizedPopulation {
    /// Per OD: (ε midpoint kWh, mass EV/hr) per bin.
    pub bins: Vec<Vec<(f64, f64)>>,
}

impl DiscretizedPopulation {
    pub fn build(s: &Scenario, n_bins: usize) -> DiscretizedPopulation {
        let bins = s
            .od_pairs
            .iter()
            .map(|od| {
                (0..n_bins)
                    .map(|k| {
                        let t = (k as f64 + 0.5) / n_bins as f64;
                        (od.distribution.inverse_cdf_clamped(t), od.rate / n_bins as f64)
                    })
                    .collect()
            })
            .collect();
        DiscretizedPopulation { bins }
    }
}

#[derive(Debug, Clone)]
pub struct BestResponseResult {
    pub flows: Flows,
    pub converged: bool,
    pub rounds: usize,
}

/// Damped discretized best response: every energy bin repeatedly picks
/// its cheapest path at the current arrivals; new flows are blended in
/// with a factor that starts at `damping` and decays harmonically
/// (successive averages), so boundaries whose costs are nearly tied
/// settle instead of cycling. A test oracle, not a production solver.
pub fn discretized_best_response(
    s: &Scenario,
    n_bins: usize,
    damping: f64,
    max_rounds: usize,
) -> Result<BestResponseResult, SolveError> {
    assert!(n_bins >= 10, "need at least 10 bins");
    assert!(damping > 0.0 && damping <= 1.0);
    const DECAY_ROUNDS: f64 = 50.0;
    let ps = PathSet::build(s);
    let pop = DiscretizedPopulation::build(s, n_bins);
    let mut flows = crate::equilibrium::uniform_flows(&ps);
    let q_max = ps.per_od.iter().map(|od| od.rate).fold(0.0, f64::max);
    let mut converged = false;
    let mut rounds = 0;
    for round in 0..max_rounds {
        rounds = round + 1;
        let lambda = station_arrivals(&flows, &ps);
        let loads = station_energy_loads(&flows, &ps, s);
        let mut target: Flows = ps
            .per_od
            .iter()
            .map(|od| vec![0.0; od.paths.len()])
            .collect();
        for (oi, od) in ps.per_od.iter().enumerate() {
            let mut costs = vec![0.0; od.paths.len()];
            for &(eps, mass) in &pop.bins[oi] {
                let mut best_cost = f64::INFINITY;
                for (pi, p) in od.paths.iter().enumerate() {
                    costs[pi] = trip_cost(p, s, eps, &lambda, &loads)?;
                    best_cost = best_cost.min(costs[pi]);
                }
                // Mass splits evenly over near-tied cheapest paths so
                // that exact symmetry does not make the response flap.
                let tol = 1e-9 * (1.0 + best_cost.abs());
                let ties = costs.iter().filter(|&&c| c <= best_cost + tol).count();
                for (pi, &c) in costs.iter().enumerate() {
                    if c <= best_cost + tol {
                        target[oi][pi] += mass / ties as f64;
                    }
                }
            }
        }
        let eta = damping * DECAY_ROUNDS / (DECAY_ROUNDS + round as f64);
        let mut max_change = 0.0f64;
        for (oi, od) in ps.per_od.iter().enumerate() {
            for pi in 0..od.paths.len() {
                let next = (1.0 - eta) * flows[oi][pi] + eta * target[oi][pi];
                max_change = max_change.max((next - flows[oi][pi]).abs());
                flows[oi][pi] = next;
            }
        }
        if max_change <= 1e-6 * q_max {
            converged = true;
            break;
        }
    }
    Ok(BestResponseResult {
        flows,
        converged,
        rounds,
    })
}

/// How the congestion component is accounted in the Monte Carlo totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitAccounting {
    /// Each user experiences T_j(λ_j): totals match the social-cost
    /// metric Σ λ_j T_j.
    Experienced,
    /// The congestion potential Σ_j ∫₀^{λ_j} T_j is added analytically:
    /// totals match the equilibrium program's objective.
    Potential,
}

/// Sample users' energy requests, assign them to paths by the threshold
/// partition implied by `flows`, and accumulate per-user road time,
/// charging payments, energy cost, and the congestion term.
pub fn monte_carlo_social_cost(
    flows: &Flows,
    s: &Scenario,
    n_samples: usize,
    seed: u64,
    accounting: WaitAccounting,
) -> Result<f64, SolveError> {
    assert!(n_samples >= 10_000, "need at least 1e4 samples");
    let ps = PathSet::build(s);
    let lambda = station_arrivals(flows, &ps);
    let alpha = s.economics.alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for (oi, od) in ps.per_od.iter().enumerate() {
        let d = &s.od_pairs[od.od].distribution;
        let q = od.rate;
        let k = od.paths.len();
        let mut t_cum = vec![0.0; k];
        let mut cum = 0.0;
        for pi in 0..k {
            cum += flows[oi][pi];
            t_cum[pi] = (cum / q).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for _ in 0..n_samples {
            let t: f64 = rng.gen();
            let eps = d.inverse_cdf_clamped(t);
            let assigned = t_cum.iter().position(|&tc| tc >= t).unwrap_or(k - 1);
            let p = &od.paths[assigned];
            let mut c = p.path.route_minutes + alpha * (p.tau + p.upsilon * eps);
            if accounting == WaitAccounting::Experienced {
                c += s.stations[p.path.station].wait.wait_time(lambda[p.path.station])?;
            }
            acc += c;
        }
        total += acc * q / n_samples as f64;
    }
    if accounting == WaitAccounting::Potential {
        for (j, st) in s.stations.iter().enumerate() {
            total += st.wait.wait_integral(lambda[j])?;
        }
    }
    Ok(total)
}

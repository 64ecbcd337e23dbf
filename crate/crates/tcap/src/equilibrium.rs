//! User-equilibrium assignment: the convex program whose minimizer is
//! the threshold-based equilibrium, a projected-gradient solver over
//! per-OD flow simplices, threshold extraction, and the Wardrop-gap
//! certificate.

use thiserror::Error;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::paths::PathSet;
use crate::scenario::Scenario;
use crate::wait::WaitError;

/// Per-OD, per-ranked-path flows (EV/hr).
pub type Flows = Vec<Vec<f64>>;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("wait model: {0}")]
    Wait(#[from] WaitError),
    #[error("od pair {0} has no feasible path")]
    NoPaths(usize),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative Wardrop gap target for equilibrium solves.
    pub gap_tol: f64,
    /// Unit-step projected-gradient norm target for stationarity solves.
    pub pg_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Random starts for the nonconvex demand-dependent mode and for
    /// uniqueness probes.
    pub starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-4,
            pg_tol: 1e-6,
            max_iters: 50_000,
            seed: 0,
            starts: 8,
        }
    }
}

// ---------------------------------------------------------------------
// Flow aggregation.
// ---------------------------------------------------------------------

pub fn uniform_flows(ps: &PathSet) -> Flows {
    ps.per_od
        .iter()
        .map(|od| vec![od.rate / od.paths.len() as f64; od.paths.len()])
        .collect()
}

pub fn random_flows(ps: &PathSet, rng: &mut ChaCha8Rng) -> Flows {
    ps.per_od
        .iter()
        .map(|od| {
            let mut w: Vec<f64> = (0..od.paths.len())
                .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                .collect();
            let sum: f64 = w.iter().sum();
            for v in &mut w {
                *v *= od.rate / sum;
            }
            w
        })
        .collect()
}

/// Station arrival rates λ_j (EV/hr) implied by path flows.
pub fn station_arrivals(f: &Flows, ps: &PathSet) -> Vec<f64> {
    let mut lambda = vec![0.0; ps.n_stations];
    for (oi, od) in ps.per_od.iter().enumerate() {
        for (pi, p) in od.paths.iter().enumerate() {
            lambda[p.path.station] += f[oi][pi];
        }
    }
    lambda
}

/// Road-arc flows x_a (EV/hr) implied by path flows.
pub fn arc_flows(f: &Flows, ps: &PathSet) -> Vec<f64> {
    let mut x = vec![0.0; ps.n_arcs];
    for (oi, od) in ps.per_od.iter().enumerate() {
        for (pi, p) in od.paths.iter().enumerate() {
            for &ai in &p.path.arcs {
                x[ai] += f[oi][pi];
            }
        }
    }
    x
}

/// Expected station energy loads U_j (kWh/hr) under the threshold
/// partition implied by the ranked flows.
pub fn station_energy_loads(f: &Flows, ps: &PathSet, s: &Scenario) -> Vec<f64> {
    let mut loads = vec![0.0; ps.n_stations];
    for (oi, od) in ps.per_od.iter().enumerate() {
        let d = &s.od_pairs[od.od].distribution;
        let q = od.rate;
        let mut t_prev = 0.0;
        let mut cum = 0.0;
        for (pi, p) in od.paths.iter().enumerate() {
            cum += f[oi][pi];
            let t = (cum / q).clamp(0.0, 1.0);
            loads[p.path.station] +=
                q * (d.quantile_integral_clamped(t) - d.quantile_integral_clamped(t_prev));
            t_prev = t;
        }
    }
    loads
}

// ---------------------------------------------------------------------
// Assignment objectives.
// ---------------------------------------------------------------------

pub trait AssignmentObjective {
    fn value(&self, f: &Flows) -> Result<f64, SolveError>;
    fn gradient(&self, f: &Flows) -> Result<Flows, SolveError>;
    /// Whether the program is convex (drives the multi-start policy).
    fn convex(&self) -> bool {
        true
    }
}

/// The user-equilibrium potential:
///   Σ_a x_a t_a + α Σ_j λ_j τ_j + Σ_j ∫₀^{λ_j} T_j
///   + α Σ_od q Σ_i θ_i [E(Q_i/q) − E(Q_{i−1}/q)].
pub struct UeObjective<'a> {
    pub scenario: &'a Scenario,
    pub paths: &'a PathSet,
}

/// Shared pieces: linear (road + fee) cost per path, wait integrals,
/// energy term. The energy suffix-scan gradient is common to all
/// programs.
fn energy_term_value(f: &Flows, ps: &PathSet, s: &Scenario) -> f64 {
    let alpha = s.economics.alpha;
    let mut total = 0.0;
    for (oi, od) in ps.per_od.iter().enumerate() {
        let d = &s.od_pairs[od.od].distribution;
        let q = od.rate;
        let mut cum = 0.0;
        let mut e_prev = 0.0;
        for (pi, p) in od.paths.iter().enumerate() {
            cum += f[oi][pi];
            let e = d.quantile_integral_clamped((cum / q).clamp(0.0, 1.0));
            total += alpha * q * p.theta * (e - e_prev);
            e_prev = e;
        }
    }
    total
}

/// Adds α·Σ_{k≥i}(θ_k − θ_{k+1})·G⁻¹(t_k) to each path's gradient entry.
fn add_energy_gradient(g: &mut Flows, f: &Flows, ps: &PathSet, s: &Scenario) {
    let alpha = s.economics.alpha;
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
            let theta_next = if pi + 1 < k { od.paths[pi + 1].theta } else { 0.0 };
            suffix += (od.paths[pi].theta - theta_next) * d.inverse_cdf_clamped(t[pi]);
            g[oi][pi] += alpha * suffix;
        }
    }
}

impl AssignmentObjective for UeObjective<'_> {
    fn value(&self, f: &Flows) -> Result<f64, SolveError> {
        let (s, ps) = (self.scenario, self.paths);
        let alpha = s.economics.alpha;
        let mut total = 0.0;
        for (oi, od) in ps.per_od.iter().enumerate() {
            for (pi, p) in od.paths.iter().enumerate() {
                total += f[oi][pi] * (p.path.route_minutes + alpha * p.tau);
            }
        }
        for (j, &l) in station_arrivals(f, ps).iter().enumerate() {
            total += s.stations[j].wait.wait_integral(l)?;
        }
        total += energy_term_value(f, ps, s);
        Ok(total)
    }

    fn gradient(&self, f: &Flows) -> Result<Flows, SolveError> {
        let (s, ps) = (self.scenario, self.paths);
        let alpha = s.economics.alpha;
        let lambda = station_arrivals(f, ps);
        let mut wait = Vec::with_capacity(lambda.len());
        for (j, &l) in lambda.iter().enumerate() {
            wait.push(s.stations[j].wait.wait_time(l)?);
        }
        let mut g: Flows = ps
            .per_od
            .iter()
            .map(|od| {
                od.paths
                    .iter()
                    .map(|p| p.path.route_minutes + alpha * p.tau + wait[p.path.station])
                    .collect()
            })
            .collect();
        add_energy_gradient(&mut g, f, ps, s);
        Ok(g)
    }
}

// ---------------------------------------------------------------------
// Public operations in spec terms.
// ---------------------------------------------------------------------

pub fn ue_objective(f: &Flows, s: &Scenario, ps: &PathSet) -> Result<f64, SolveError> {
    UeObjective {
        scenario: s,
        paths: ps,
    }
    .value(f)
}

pub fn ue_gradient(f: &Flows, s: &Scenario, ps: &PathSet) -> Result<Flows, SolveError> {
    UeObjective {
        scenario: s,
        paths: ps,
    }
    .gradient(f)
}

/// Energy thresholds per OD: π_0 = ε_min, π_i = G⁻¹(Q_i/q), π_K = ε_max.
pub fn extract_thresholds(f: &Flows, ps: &PathSet, s: &Scenario) -> Vec<Vec<f64>> {
    ps.per_od
        .iter()
        .enumerate()
        .map(|(oi, od)| {
            let d = &s.od_pairs[od.od].distribution;
            let (lo, hi) = d.support();
            let q = od.rate;
            let mut pi = Vec::with_capacity(od.paths.len() + 1);
            pi.push(lo);
            let mut cum = 0.0;
            for p in 0..od.paths.len() {
                cum += f[oi][p];
                if p + 1 == od.paths.len() {
                    pi.push(hi);
                } else {
                    pi.push(d.inverse_cdf_clamped((cum / q).clamp(0.0, 1.0)));
                }
            }
            pi
        })
        .collect()
}

/// Path flows implied by a threshold vector: f_i = q·(G(π_i) − G(π_{i−1})).
pub fn flows_from_thresholds(
    pi: &[f64],
    q: f64,
    d: &crate::demand::DemandDistribution,
) -> Vec<f64> {
    pi.windows(2)
        .map(|w| q * (d.cdf(w[1]) - d.cdf(w[0])))
        .collect()
}

/// Full trip cost for one ranked path at energy request ε:
/// Σ t_a + γ_j ε + T_j(λ_j) + α (τ_j + υ_j ε).
pub fn trip_cost(
    p: &crate::paths::RankedPath,
    s: &Scenario,
    eps: f64,
    lambda: &[f64],
    loads: &[f64],
) -> Result<f64, SolveError> {
    let st = &s.stations[p.path.station];
    let alpha = s.economics.alpha;
    let wait = if st.wait.is_demand_dependent() {
        st.wait.demand_wait(loads[p.path.station], eps)?
    } else {
        st.wait.wait_time(lambda[p.path.station])?
    };
    Ok(p.path.route_minutes + st.gamma * eps + wait + alpha * (p.tau + p.upsilon * eps))
}

/// Relative Wardrop gap over a deterministic grid of 1000 ε-quantiles
/// per OD: mean excess of the assigned path's cost over the best
/// available path, divided by the mean best cost.
pub fn wardrop_gap(f: &Flows, ps: &PathSet, s: &Scenario) -> Result<f64, SolveError> {
    const GRID: usize = 1000;
    let lambda = station_arrivals(f, ps);
    let loads = station_energy_loads(f, ps, s);
    let mut excess = 0.0;
    let mut base = 0.0;
    for (oi, od) in ps.per_od.iter().enumerate() {
        let d = &s.od_pairs[od.od].distribution;
        let q = od.rate;
        let k = od.paths.len();
        let mut t_cum = vec![0.0; k];
        let mut cum = 0.0;
        for pi in 0..k {
            cum += f[oi][pi];
            t_cum[pi] = (cum / q).clamp(0.0, 1.0);
        }
        let w = q / GRID as f64;
        for g in 0..GRID {
            let t = (g as f64 + 0.5) / GRID as f64;
            let eps = d.inverse_cdf_clamped(t);
            let assigned = t_cum
                .iter()
                .position(|&tc| tc >= t)
                .unwrap_or(k - 1);
            let c_assigned = trip_cost(&od.paths[assigned], s, eps, &lambda, &loads)?;
            let mut c_min = f64::INFINITY;
            for p in &od.paths {
                let c = trip_cost(p, s, eps, &lambda, &loads)?;
                if c < c_min {
                    c_min = c;
                }
            }
            excess += (c_assigned - c_min) * w;
            base += c_min * w;
        }
    }
    Ok(if base > 0.0 { excess / base } else { 0.0 })
}

// ---------------------------------------------------------------------
// Projected-gradient solver.
// ---------------------------------------------------------------------

/// Euclidean projection onto the scaled simplex {f >= 0, Σf = q}
/// (sort-based exact algorithm).
pub fn project_simplex(y: &[f64], q: f64) -> Vec<f64> {
    let mut u: Vec<f64> = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let cand = (cum - q) / (k as f64 + 1.0);
        if uk - cand > 0.0 {
            theta = cand;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

fn project_all(f: &Flows, ps: &PathSet) -> Flows {
    f.iter()
        .zip(&ps.per_od)
        .map(|(fo, od)| project_simplex(fo, od.rate))
        .collect()
}

fn dot(a: &Flows, b: &Flows) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>())
        .sum()
}

fn axpy(f: &Flows, d: &Flows, t: f64) -> Flows {
    f.iter()
        .zip(d)
        .map(|(fo, dd)| fo.iter().zip(dd).map(|(a, b)| a + t * b).collect())
        .collect()
}

fn sub(a: &Flows, b: &Flows) -> Flows {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect())
        .collect()
}

fn inf_norm(a: &Flows) -> f64 {
    a.iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()))
}

#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub pg_norm: f64,
    pub monotone_descent: bool,
}

/// Which certificate decides convergence.
pub enum StopRule<'a> {
    /// Wardrop gap at or below tolerance (plus objective stall).
    WardropGap { scenario: &'a Scenario, tol: f64 },
    /// Unit-step projected-gradient norm at or below tolerance.
    ProjectedGradient { tol: f64 },
}

pub fn minimize<O: AssignmentObjective>(
    obj: &O,
    ps: &PathSet,
    start: Flows,
    stop: &StopRule,
    max_iters: usize,
) -> Result<(Flows, SolveStats), SolveError> {
    let mut f = project_all(&start, ps);
    let mut value = obj.value(&f)?;
    let mut step = 1.0f64;
    let mut last_accept_step = 1.0f64;
    let mut monotone = true;
    let mut history: Vec<f64> = vec![value];
    let mut pg_norm = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0;
    let mut needs_polish = false;

    let stalled = |hist: &Vec<f64>| -> bool {
        if hist.len() < 11 {
            return false;
        }
        let old = hist[hist.len() - 11];
        let new = *hist.last().unwrap();
        (old - new).abs() <= 1e-9 * old.abs().max(1.0)
    };

    let check = |f: &Flows, g: &Flows, hist: &Vec<f64>| -> Result<(bool, f64), SolveError> {
        let pg = inf_norm(&sub(&project_all(&sub(f, g), ps), f));
        let ok = match stop {
            StopRule::WardropGap { scenario, tol } => {
                let gap = wardrop_gap(f, ps, scenario)?;
                gap <= *tol && (stalled(hist) || pg <= 1e-10)
            }
            StopRule::ProjectedGradient { tol } => pg <= *tol,
        };
        Ok((ok, pg))
    };

    for iter in 0..max_iters {
        iters = iter + 1;
        let g = obj.gradient(&f)?;

        if iter % 25 == 0 || iter + 1 == max_iters {
            let (ok, pg) = check(&f, &g, &history)?;
            pg_norm = pg;
            if ok {
                converged = true;
                break;
            }
        }

        let target = project_all(&axpy(&f, &g, -step), ps);
        let d = sub(&target, &f);
        let gd = dot(&g, &d);
        if inf_norm(&d) <= 1e-14 || gd >= 0.0 {
            // No measurable descent at this step size; shrink and retry,
            // falling through to the polish phase when it collapses.
            step *= 0.5;
            if step < 1e-12 {
                needs_polish = true;
                break;
            }
            continue;
        }

        // Armijo backtracking along the projection-arc direction.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = axpy(&f, &d, t);
            match obj.value(&cand) {
                Ok(v) if v <= value + 1e-4 * t * gd => {
                    accepted = Some((cand, v));
                    break;
                }
                _ => t *= 0.5,
            }
        }
        match accepted {
            Some((cand, v)) => {
                if v > value + 1e-12 * value.abs().max(1.0) {
                    monotone = false;
                }
                f = cand;
                value = v;
                history.push(value);
                last_accept_step = step * t;
                if t >= 1.0 {
                    step *= 1.4;
                } else if t < 0.25 {
                    step *= 0.5;
                }
                step = step.clamp(1e-12, 1e6);
            }
            None => {
                step *= 0.25;
                if step < 1e-12 {
                    needs_polish = true;
                    break;
                }
            }
        }
    }

    // Near the optimum, per-step objective improvements drop below f64
    // resolution and Armijo cannot certify them. Projected gradient
    // steps with Barzilai-Borwein lengths still contract, so polish
    // without a line search until the certificate is met.
    if needs_polish && !converged && iters < max_iters {
        let mut s = (0.5 * last_accept_step).clamp(1e-9, 1e3);
        let mut prev: Option<(Flows, Flows)> = None;
        let mut best_pg = f64::INFINITY;
        while iters < max_iters {
            iters += 1;
            let g = match obj.gradient(&f) {
                Ok(g) => g,
                Err(_) => {
                    // stepped out of the wait-model domain: back off
                    if let Some((fp, _)) = &prev {
                        f = fp.clone();
                    }
                    prev = None;
                    s *= 0.25;
                    if s < 1e-12 {
                        break;
                    }
                    continue;
                }
            };
            if iters % 10 == 0 || iters == max_iters {
                if let Ok(v) = obj.value(&f) {
                    value = v;
                    history.push(value);
                }
                let (ok, pg) = check(&f, &g, &history)?;
                pg_norm = pg;
                if ok {
                    converged = true;
                    break;
                }
                if pg < best_pg {
                    best_pg = pg;
                } else if pg > 100.0 * best_pg.max(1e-300) {
                    // diverging: shrink and restart the pair history
                    s *= 0.25;
                    prev = None;
                    if s < 1e-12 {
                        break;
                    }
                }
            }
            if let Some((fp, gp)) = &prev {
                let df = sub(&f, fp);
                let dg = sub(&g, gp);
                let num = dot(&df, &dg);
                let den = dot(&dg, &dg);
                if num > 0.0 && den > 0.0 {
                    s = (num / den).clamp(1e-9, 1e3);
                }
            }
            prev = Some((f.clone(), g.clone()));
            f = project_all(&axpy(&f, &g, -s), ps);
        }
        value = obj.value(&f)?;
        history.push(value);
    }

    if pg_norm.is_infinite() {
        let g = obj.gradient(&f)?;
        pg_norm = inf_norm(&sub(&project_all(&sub(&f, &g), ps), &f));
    }

    Ok((
        f,
        SolveStats {
            iterations: iters,
            converged,
            objective: value,
            pg_norm,
            monotone_descent: monotone,
        },
    ))
}

// ---------------------------------------------------------------------
// Equilibrium solve and solution report.
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub flows: Flows,
    pub objective: f64,
    pub pg_norm: f64,
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub mode: String,
    pub paths: PathSet,
    pub flows: Flows,
    /// Energy thresholds per OD (length K+1: ε_min .. ε_max).
    pub thresholds: Vec<Vec<f64>>,
    pub station_arrivals: Vec<f64>,
    pub station_loads: Vec<f64>,
    pub objective: f64,
    pub wardrop_gap: f64,
    pub pg_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub monotone_descent: bool,
    /// Stations whose arrival rate exceeds 99.9% of model saturation.
    pub saturated: Vec<usize>,
    /// Set when the program solved is not convex (demand-dependent wait).
    pub nonconvex: bool,
    /// Distinct stationary points found by multi-start in the nonconvex
    /// mode (including the reported one).
    pub stationary_points: Vec<StationaryPoint>,
}

fn saturation_diagnostics(lambda: &[f64], s: &Scenario) -> Vec<usize> {
    lambda
        .iter()
        .enumerate()
        .filter_map(|(j, &l)| match s.stations[j].wait.saturation() {
            Some(sat) if l >= 0.999 * sat => Some(j),
            _ => None,
        })
        .collect()
}

fn finish_solution(
    mode: &str,
    s: &Scenario,
    ps: PathSet,
    f: Flows,
    stats: SolveStats,
    nonconvex: bool,
    points: Vec<StationaryPoint>,
) -> Result<EquilibriumSolution, SolveError> {
    let lambda = station_arrivals(&f, &ps);
    let loads = station_energy_loads(&f, &ps, s);
    let gap = wardrop_gap(&f, &ps, s)?;
    let thresholds = extract_thresholds(&f, &ps, s);
    Ok(EquilibriumSolution {
        mode: mode.to_string(),
        thresholds,
        saturated: saturation_diagnostics(&lambda, s),
        station_arrivals: lambda,
        station_loads: loads,
        objective: stats.objective,
        wardrop_gap: gap,
        pg_norm: stats.pg_norm,
        iterations: stats.iterations,
        converged: stats.converged,
        monotone_descent: stats.monotone_descent,
        nonconvex,
        stationary_points: points,
        flows: f,
        paths: ps,
    })
}

/// Solve the user-equilibrium program. With demand-dependent stations
/// the program is nonconvex; it is then restarted from `opts.starts`
/// seeded random points and all distinct stationary points reported.
pub fn solve_ue(s: &Scenario, opts: &SolverOptions) -> Result<EquilibriumSolution, SolveError> {
    let ps = PathSet::build(s);
    for od in &ps.per_od {
        if od.paths.is_empty() {
            return Err(SolveError::NoPaths(od.od));
        }
    }
    if s.has_demand_dependent_wait() {
        return solve_demand_dependent(s, ps, opts);
    }
    let obj = UeObjective {
        scenario: s,
        paths: &ps,
    };
    let stop = StopRule::WardropGap {
        scenario: s,
        tol: opts.gap_tol,
    };
    let (f, stats) = minimize(&obj, &ps, uniform_flows(&ps), &stop, opts.max_iters)?;
    finish_solution("ue", s, ps, f, stats, false, Vec::new())
}

/// Solve the user equilibrium from one explicit start (used for
/// uniqueness probes). Falls back to the gap certificate but with a
/// projected-gradient polish so independent starts agree tightly.
pub fn solve_ue_from(
    s: &Scenario,
    start: Flows,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution, SolveError> {
    let ps = PathSet::build(s);
    let obj = UeObjective {
        scenario: s,
        paths: &ps,
    };
    let stop = StopRule::ProjectedGradient { tol: opts.pg_tol };
    let (f, stats) = minimize(&obj, &ps, start, &stop, opts.max_iters)?;
    finish_solution("ue", s, ps, f, stats, false, Vec::new())
}

/// UE variant with demand-dependent station waits: the congestion term
/// becomes a function of station energy loads, the program loses
/// convexity, and multiple stationary points may exist.
fn solve_demand_dependent(
    s: &Scenario,
    ps: PathSet,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution, SolveError> {
    let obj = DemandDependentObjective {
        scenario: s,
        paths: &ps,
    };
    let stop = StopRule::ProjectedGradient { tol: opts.pg_tol };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut points: Vec<(Flows, SolveStats)> = Vec::new();
    for k in 0..opts.starts.max(1) {
        let start = if k == 0 {
            uniform_flows(&ps)
        } else {
            random_flows(&ps, &mut rng)
        };
        let (f, stats) = minimize(&obj, &ps, start, &stop, opts.max_iters)?;
        points.push((f, stats));
    }
    // Deduplicate stationary points by max flow distance.
    let scale: f64 = ps.per_od.iter().map(|od| od.rate).fold(0.0, f64::max);
    let mut distinct: Vec<(Flows, SolveStats)> = Vec::new();
    for (f, stats) in points {
        let is_new = distinct
            .iter()
            .all(|(g, _)| inf_norm(&sub(&f, g)) > 1e-4 * scale);
        if is_new {
            distinct.push((f, stats));
        }
    }
    distinct.sort_by(|a, b| a.1.objective.partial_cmp(&b.1.objective).unwrap());
    let stationary = distinct
        .iter()
        .map(|(f, stats)| StationaryPoint {
            flows: f.clone(),
            objective: stats.objective,
            pg_norm: stats.pg_norm,
        })
        .collect();
    let (f, stats) = distinct.swap_remove(0);
    finish_solution("ue-demand-dependent", s, ps, f, stats, true, stationary)
}

/// UE congestion potential with demand-dependent stations: poly/mmc
/// stations keep ∫T(λ); demand-dependent ones contribute the load
/// potential ∫₀^{U_j/c} x/(1−x) dx.
pub struct DemandDependentObjective<'a> {
    pub scenario: &'a Scenario,
    pub paths: &'a PathSet,
}

impl AssignmentObjective for DemandDependentObjective<'_> {
    fn value(&self, f: &Flows) -> Result<f64, SolveError> {
        let (s, ps) = (self.scenario, self.paths);
        let alpha = s.economics.alpha;
        let mut total = 0.0;
        for (oi, od) in ps.per_od.iter().enumerate() {
            for (pi, p) in od.paths.iter().enumerate() {
                total += f[oi][pi] * (p.path.route_minutes + alpha * p.tau);
            }
        }
        let lambda = station_arrivals(f, ps);
        let loads = station_energy_loads(f, ps, s);
        for (j, st) in s.stations.iter().enumerate() {
            if st.wait.is_demand_dependent() {
                total += st.wait.demand_wait_potential(loads[j])?;
            } else {
                total += st.wait.wait_integral(lambda[j])?;
            }
        }
        total += energy_term_value(f, ps, s);
        Ok(total)
    }

    fn gradient(&self, f: &Flows) -> Result<Flows, SolveError> {
        let (s, ps) = (self.scenario, self.paths);
        let alpha = s.economics.alpha;
        let lambda = station_arrivals(f, ps);
        let loads = station_energy_loads(f, ps, s);
        let mut wait = vec![0.0; s.stations.len()];
        let mut wprime = vec![0.0; s.stations.len()];
        for (j, st) in s.stations.iter().enumerate() {
            if st.wait.is_demand_dependent() {
                wprime[j] = st.wait.demand_wait_potential_derivative(loads[j])?;
            } else {
                wait[j] = st.wait.wait_time(lambda[j])?;
            }
        }
        let mut g: Flows = ps
            .per_od
            .iter()
            .map(|od| {
                od.paths
                    .iter()
                    .map(|p| p.path.route_minutes + alpha * p.tau + wait[p.path.station])
                    .collect()
            })
            .collect();
        add_energy_gradient(&mut g, f, ps, s);
        // Chain rule through U_j for demand-dependent stations.
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
            // suffix1[i] = Σ_{k>=i} w'_{j(k)}·G⁻¹(t_k)
            // suffix2[i] = Σ_{k>=i} w'_{j(k)}·G⁻¹(t_{k−1})
            let mut s1 = vec![0.0; k + 1];
            let mut s2 = vec![0.0; k + 1];
            for pi in (0..k).rev() {
                let wp = wprime[od.paths[pi].path.station];
                let t_hi = d.inverse_cdf_clamped(t[pi]);
                let t_lo = if pi == 0 {
                    d.inverse_cdf_clamped(0.0)
                } else {
                    d.inverse_cdf_clamped(t[pi - 1])
                };
                s1[pi] = s1[pi + 1] + wp * t_hi;
                s2[pi] = s2[pi + 1] + wp * t_lo;
            }
            for pi in 0..k {
                g[oi][pi] += s1[pi] - s2[pi + 1];
            }
        }
        Ok(g)
    }

    fn convex(&self) -> bool {
        false
    }
}

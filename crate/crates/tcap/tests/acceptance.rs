//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `cargo test --test acceptance -- --nocapture` to see
//! them all).
//!
//! Two checks are kept faithful although the calibration the fee
//! targets pin down makes them unattainable, and they are expected to
//! stay red; see `KNOWN-GAPS.md` at the workspace root for the full
//! analysis. Everything else must pass.

use std::collections::BTreeSet;
use std::path::Path;

use tcap::bundle::ResultBundle;
use tcap::equilibrium::{
    arc_flows, extract_thresholds, flows_from_thresholds, random_flows, solve_ue, solve_ue_from,
    station_energy_loads, uniform_flows, wardrop_gap, Flows, SolverOptions,
};
use tcap::oracle;
use tcap::paths::PathSet;
use tcap::scenario::{load_scenario, load_scenario_str, Scenario};
use tcap::social::{
    optimal_prices, so_gradient, solve_so, solve_system_optimum, verify_so_enforcement, FeeUnits,
};
use tcap::test_fixtures::{toy_demand_dependent_doc, toy_two_path_doc, BAY7, BAY10};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bay7() -> Scenario {
    load_scenario(Path::new(BAY7)).unwrap()
}

fn bay10() -> Scenario {
    load_scenario(Path::new(BAY10)).unwrap()
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_01_path_counts() {
    let s7 = bay7();
    let n7 = tcap::paths::enumerate_feasible_paths(&s7, 0).len();
    let s10 = bay10();
    let n10: usize = (0..s10.od_pairs.len())
        .map(|i| tcap::paths::enumerate_feasible_paths(&s10, i).len())
        .sum();
    report(
        "1 (path counts)",
        n7 == 9 && n10 == 62,
        &format!("7-node single OD: {n7} paths (want 9); 10-node, 3 ODs: {n10} paths (want 62)"),
    );
}

#[test]
fn criterion_02_optimal_fees() {
    let targets_a10 = [
        ("davis", 3.58),
        ("winters", 3.46),
        ("vallejo", 3.42),
        ("south_sf", 3.41),
        ("san_jose", 3.53),
        ("concord", 3.54),
        ("fremont", 3.54),
    ];
    let targets_a1 = [
        ("davis", 4.06),
        ("winters", 2.90),
        ("vallejo", 2.86),
        ("south_sf", 2.85),
        ("san_jose", 4.01),
        ("concord", 4.02),
        ("fremont", 4.01),
    ];
    let opts = SolverOptions::default();
    let mut detail = String::new();
    let mut ok = true;
    for (alpha, tol, targets) in [
        (10.0, 0.15, &targets_a10[..]),
        (1.0, 0.30, &targets_a1[..]),
    ] {
        let s = bay7().with_alpha(alpha);
        let sol = solve_so(&s, &opts).unwrap();
        assert!(sol.converged);
        let fees = optimal_prices(&sol, &s, FeeUnits::Paper).unwrap();
        let mut worst = 0.0f64;
        for &(station, want) in targets {
            let got = fees.entries[station].tau_usd;
            worst = worst.max((got - want).abs());
        }
        ok &= worst <= tol;
        detail.push_str(&format!(
            "alpha={alpha}: worst componentwise error {worst:.3} $ (tol {tol}); "
        ));
    }
    report("2 (socially optimal fees)", ok, &detail);
}

/// East/west split of the route flows at alpha 25 without fees.
///
/// Expected red: the fee schedule of criterion 2 fixes the wait scale
/// (a=0.4, x=10), and under that scale the price spreads of this
/// network (at most 0.9 cents/kWh, worth <= 11 minutes at alpha=25 and
/// 80 kWh) can never outweigh the ~50-minute waits that a 50/50
/// concentration onto the two cheapest cities would produce. The
/// equilibrium route split at alpha=25 is therefore ~81/19, and no
/// parameter choice consistent with criterion 2 can move it to 50/50.
#[test]
fn criterion_03_alpha25_route_split() {
    let s = bay7().with_alpha(25.0);
    let sol = solve_ue(&s, &SolverOptions::default()).unwrap();
    assert!(sol.converged);
    let x = arc_flows(&sol.flows, &sol.paths);
    let east = s
        .network
        .arcs
        .iter()
        .position(|a| a.id == "davis-concord")
        .unwrap();
    let west = s
        .network
        .arcs
        .iter()
        .position(|a| a.id == "davis-winters")
        .unwrap();
    report(
        "3 (alpha=25 east/west split)",
        (x[east] - 50.0).abs() <= 1.0 && (x[west] - 50.0).abs() <= 1.0,
        &format!(
            "east {:.2} / west {:.2} EV/hr (want 50/50 within 1 flow unit)",
            x[east], x[west]
        ),
    );
}

#[test]
fn criterion_04_alpha10_unused_stations() {
    let s = bay7().with_alpha(10.0);
    let sol = solve_ue(&s, &SolverOptions::default()).unwrap();
    assert!(sol.converged);
    let vallejo = s.stations.iter().position(|t| t.node_id == "vallejo").unwrap();
    let south_sf = s.stations.iter().position(|t| t.node_id == "south_sf").unwrap();
    let (lv, ls) = (sol.station_arrivals[vallejo], sol.station_arrivals[south_sf]);
    report(
        "4 (alpha=10 empty stations)",
        lv <= 0.5 && ls <= 0.5,
        &format!("vallejo {lv:.3} EV/hr, south_sf {ls:.3} EV/hr (want <= 0.5)"),
    );
}

#[test]
fn criterion_05_load_cv_with_fees() {
    // "Split nearly equally" concerns station usage: the coefficient of
    // variation of the arrival-proportional expected demand.
    let opts = SolverOptions::default();
    let mut detail = String::new();
    let mut ok = true;
    for alpha in [1.0, 5.0, 10.0, 25.0] {
        let s = bay7().with_alpha(alpha);
        let sol = solve_so(&s, &opts).unwrap();
        assert!(sol.converged);
        let lam = &sol.station_arrivals;
        let mean = lam.iter().sum::<f64>() / lam.len() as f64;
        let var = lam.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / lam.len() as f64;
        let cv = var.sqrt() / mean;
        ok &= cv <= 0.15;
        detail.push_str(&format!("alpha={alpha}: CV {:.2}%; ", 100.0 * cv));
    }
    report("5 (near-equal loads under fees)", ok, &detail);
}

struct FleetCase {
    high: f64,
    medium: f64,
    low: f64,
    optimal: bool,
    want_wait: f64,
}

fn fleet_wait(s: &Scenario, c: &FleetCase, opts: &SolverOptions) -> f64 {
    let split = s
        .with_class_split(&[
            ("high".to_string(), c.high),
            ("medium".to_string(), c.medium),
            ("low".to_string(), c.low),
        ])
        .unwrap();
    let sol = if c.optimal {
        solve_so(&split, opts).unwrap()
    } else {
        solve_ue(&split, opts).unwrap()
    };
    assert!(sol.converged, "fleet case did not converge");
    ResultBundle::from_solution(&sol, &split, None)
        .unwrap()
        .totals
        .wait_potential_min
}

#[test]
fn criterion_06_fleet_mix_waiting_times() {
    let cases = [
        FleetCase { high: 100.0, medium: 0.0, low: 0.0, optimal: false, want_wait: 96.31 },
        FleetCase { high: 100.0, medium: 0.0, low: 0.0, optimal: true, want_wait: 29.16 },
        FleetCase { high: 0.0, medium: 0.0, low: 100.0, optimal: false, want_wait: 1252.10 },
        FleetCase { high: 0.0, medium: 0.0, low: 100.0, optimal: true, want_wait: 1250.00 },
        FleetCase { high: 0.0, medium: 100.0, low: 0.0, optimal: false, want_wait: 174.60 },
        FleetCase { high: 0.0, medium: 100.0, low: 0.0, optimal: true, want_wait: 156.25 },
        FleetCase { high: 50.0, medium: 25.0, low: 25.0, optimal: false, want_wait: 96.42 },
        FleetCase { high: 50.0, medium: 25.0, low: 25.0, optimal: true, want_wait: 29.16 },
        FleetCase { high: 25.0, medium: 25.0, low: 50.0, optimal: false, want_wait: 118.92 },
        FleetCase { high: 25.0, medium: 25.0, low: 50.0, optimal: true, want_wait: 84.46 },
    ];
    let s = bay7().with_alpha(10.0);
    let opts = SolverOptions::default();
    let waits: Vec<f64> = cases.iter().map(|c| fleet_wait(&s, c, &opts)).collect();

    let mut ok = true;
    let mut detail = String::new();
    for (i, (c, w)) in cases.iter().zip(&waits).enumerate() {
        let rel = (w - c.want_wait).abs() / c.want_wait;
        ok &= rel <= 0.15;
        detail.push_str(&format!("case {}: {:.2} (want {:.2}); ", i + 1, w, c.want_wait));
    }
    // reductions from installing the fees
    let red = |a: f64, b: f64| (a - b) / a;
    let r12 = red(waits[0], waits[1]);
    let r34 = red(waits[2], waits[3]);
    let r56 = red(waits[4], waits[5]);
    let r910 = red(waits[8], waits[9]);
    ok &= r12 >= 0.60;
    ok &= r34 <= 0.01;
    ok &= (0.05..=0.20).contains(&r56);
    ok &= (0.20..=0.40).contains(&r910);
    detail.push_str(&format!(
        "reductions: 1->2 {:.1}%, 3->4 {:.2}%, 5->6 {:.1}%, 9->10 {:.1}%",
        100.0 * r12,
        100.0 * r34,
        100.0 * r56,
        100.0 * r910
    ));
    report("6 (fleet-mix waiting times)", ok, &detail);
}

/// Total waiting across the alpha sweep on the three-OD network.
///
/// The "with fees" half (variation <= 10%) passes. The "without fees"
/// half demands a >= 3x variation that the calibration pinned by
/// criterion 2 rules out: with wait 0.4(λ/10)^3 and this network's
/// price spread (max 0.65 cents/kWh, worth <= 13 minutes at alpha=25),
/// no equilibrium reshuffle between alpha=1 and alpha=25 can move
/// aggregate wait by more than a few tens of percent. Expected red on
/// the second clause; see KNOWN-GAPS.md.
#[test]
fn criterion_07_sweep_flatness() {
    let base = bay10();
    let opts = SolverOptions::default();
    let alphas = [1.0, 2.5, 5.0, 10.0, 15.0, 20.0, 25.0];
    let mut with_fees = Vec::new();
    let mut without = Vec::new();
    for &alpha in &alphas {
        let s = base.with_alpha(alpha);
        let so = solve_so(&s, &opts).unwrap();
        with_fees.push(
            ResultBundle::from_solution(&so, &s, None)
                .unwrap()
                .totals
                .wait_potential_min,
        );
        let ue = solve_ue(&s, &opts).unwrap();
        without.push(
            ResultBundle::from_solution(&ue, &s, None)
                .unwrap()
                .totals
                .wait_potential_min,
        );
    }
    let spread = |v: &[f64]| {
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let fee_spread = spread(&with_fees);
    let free_spread = spread(&without);
    report(
        "7 (sweep flatness under fees)",
        fee_spread <= 1.10 && free_spread >= 3.0,
        &format!(
            "with fees max/min {:.3} (want <= 1.10); without fees {:.3} (want >= 3)",
            fee_spread, free_spread
        ),
    );
}

fn random_interior_flows(ps: &PathSet, rng: &mut ChaCha8Rng) -> Flows {
    // keep every component well inside the simplex so central
    // differences stay feasible
    let dirichlet = random_flows(ps, rng);
    dirichlet
        .iter()
        .zip(uniform_flows(ps))
        .map(|(d, u)| {
            d.iter()
                .zip(u)
                .map(|(a, b)| 0.8 * a + 0.2 * b)
                .collect()
        })
        .collect()
}

fn tangent_direction(ps: &PathSet, rng: &mut ChaCha8Rng) -> Flows {
    ps.per_od
        .iter()
        .map(|od| {
            let k = od.paths.len();
            let mut v: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() - 0.5).collect();
            let mean = v.iter().sum::<f64>() / k as f64;
            let mut norm = 0.0f64;
            for x in &mut v {
                *x -= mean;
                norm = norm.max(x.abs());
            }
            if norm > 0.0 {
                for x in &mut v {
                    *x /= norm;
                }
            }
            v
        })
        .collect()
}

fn check_gradient<F, G>(s: &Scenario, value: F, grad: G, label: &str) -> (bool, f64)
where
    F: Fn(&Flows, &Scenario, &PathSet) -> f64,
    G: Fn(&Flows, &Scenario, &PathSet) -> Flows,
{
    let ps = PathSet::build(&s.with_fees(None));
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f = random_interior_flows(&ps, &mut rng);
        let d = tangent_direction(&ps, &mut rng);
        let g = grad(&f, s, &ps);
        let gd: f64 = g
            .iter()
            .zip(&d)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        let h = 1e-4;
        let fp: Flows = f
            .iter()
            .zip(&d)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + h * y).collect())
            .collect();
        let fm: Flows = f
            .iter()
            .zip(&d)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - h * y).collect())
            .collect();
        let fd = (value(&fp, s, &ps) - value(&fm, s, &ps)) / (2.0 * h);
        let rel = (fd - gd).abs() / fd.abs().max(gd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    (worst <= 1e-6, worst)
}

#[test]
fn criterion_08_gradient_checks() {
    let mut ok = true;
    let mut detail = String::new();
    for (name, s) in [("bay7", bay7().with_alpha(10.0)), ("bay10", bay10())] {
        let (ue_ok, ue_worst) = check_gradient(
            &s,
            |f, s, ps| tcap::equilibrium::ue_objective(f, s, ps).unwrap(),
            |f, s, ps| tcap::equilibrium::ue_gradient(f, s, ps).unwrap(),
            "ue",
        );
        let (so_ok, so_worst) = check_gradient(
            &s,
            |f, s, ps| tcap::social::priced_objective_value(f, s, ps).unwrap(),
            |f, s, ps| so_gradient(f, s, ps).unwrap(),
            "so",
        );
        ok &= ue_ok && so_ok;
        detail.push_str(&format!(
            "{name}: ue worst rel err {ue_worst:.2e}, so worst {so_worst:.2e}; "
        ));
    }
    report("8 (gradients vs finite differences)", ok, &detail);
}

#[test]
fn criterion_09_gap_and_threshold_consistency() {
    let mut ok = true;
    let mut detail = String::new();
    for alpha in [1.0, 5.0, 10.0, 25.0] {
        let s = bay7().with_alpha(alpha);
        // The closed-form threshold between the two cheapest stations
        // divides by a price difference of 2e-4 $/kWh, which amplifies
        // any residual cost error 500x; solve to tight stationarity so
        // the consistency check is meaningful.
        let opts = SolverOptions {
            pg_tol: 1e-9,
            ..Default::default()
        };
        let ps = PathSet::build(&s);
        let sol = solve_ue_from(&s, uniform_flows(&ps), &opts).unwrap();
        assert!(sol.converged);
        ok &= sol.wardrop_gap <= 1e-4;

        // threshold round trip
        let pi = extract_thresholds(&sol.flows, &sol.paths, &s);
        let q = s.od_pairs[0].rate;
        let back = flows_from_thresholds(&pi[0], q, &s.od_pairs[0].distribution);
        let mut round = 0.0f64;
        for (a, b) in back.iter().zip(&sol.flows[0]) {
            round = round.max((a - b).abs());
        }
        ok &= round <= 1e-9 * q;

        // closed-form threshold between adjacent used paths:
        // pi_i = (psi_{i+1} - psi_i) / (alpha (theta_i - theta_{i+1}))
        let od = &sol.paths.per_od[0];
        let (_, eps_max) = s.od_pairs[0].distribution.support();
        let mut worst_thr = 0.0f64;
        for i in 0..od.paths.len() - 1 {
            let (p0, p1) = (&od.paths[i], &od.paths[i + 1]);
            if sol.flows[0][i] <= 1e-3 || sol.flows[0][i + 1] <= 1e-3 {
                continue;
            }
            if p0.theta - p1.theta <= 1e-12 {
                continue; // degenerate equal-price block
            }
            let psi = |p: &tcap::paths::RankedPath| {
                p.path.route_minutes
                    + s.stations[p.path.station]
                        .wait
                        .wait_time(sol.station_arrivals[p.path.station])
                        .unwrap()
                    + alpha * p.tau
            };
            let formula = (psi(p1) - psi(p0)) / (alpha * (p0.theta - p1.theta));
            worst_thr = worst_thr.max((formula - pi[0][i + 1]).abs());
        }
        ok &= worst_thr <= 1e-6 * eps_max;
        detail.push_str(&format!(
            "alpha={alpha}: gap {:.1e}, roundtrip {:.1e}, threshold err {:.1e}; ",
            sol.wardrop_gap, round, worst_thr
        ));
    }
    report("9 (gap, round trip, closed-form thresholds)", ok, &detail);
}

#[test]
fn criterion_10_oracle_equivalence() {
    let opts = SolverOptions::default();
    let mut ok = true;
    let mut detail = String::new();

    let toy = load_scenario_str(&toy_two_path_doc(22.0, 17.0, 10.0)).unwrap();
    for (name, s) in [("2-path toy", toy), ("bay7", bay7().with_alpha(10.0))] {
        let ue = solve_ue(&s, &opts).unwrap();
        let br = oracle::discretized_best_response(&s, 2000, 0.2, 20_000).unwrap();
        let q = s.total_rate();
        let mut dev = 0.0f64;
        for (a, b) in br.flows.iter().flatten().zip(ue.flows.iter().flatten()) {
            dev = dev.max((a - b).abs());
        }
        ok &= dev <= 0.02 * q;
        detail.push_str(&format!("{name}: best-response dev {dev:.4} EV/hr; "));
    }

    // exhaustive enumeration equals the independent walk oracle on
    // every <=10-node graph in the corpus
    let mut exact = true;
    for s in [bay7(), bay10()] {
        for od in 0..s.od_pairs.len() {
            let mine: BTreeSet<(Vec<usize>, usize)> =
                tcap::paths::enumerate_feasible_paths(&s, od)
                    .into_iter()
                    .map(|p| (p.arcs, p.station))
                    .collect();
            exact &= mine == oracle::brute_force_paths(&s, od).unwrap();
        }
    }
    ok &= exact;
    detail.push_str(&format!("DFS oracle exact match: {exact}"));
    report("10 (oracle equivalence)", ok, &detail);
}

#[test]
fn criterion_11_uniqueness_across_starts() {
    let opts = SolverOptions {
        pg_tol: 1e-7,
        ..Default::default()
    };
    let mut ok = true;
    let mut detail = String::new();
    let toy = load_scenario_str(&toy_two_path_doc(22.0, 17.0, 10.0)).unwrap();
    for (name, s) in [("toy", toy), ("bay7", bay7().with_alpha(10.0))] {
        let ps = PathSet::build(&s);
        let q = s.total_rate();
        let base = solve_ue_from(&s, uniform_flows(&ps), &opts).unwrap();
        assert!(base.converged);
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let sol = solve_ue_from(&s, random_flows(&ps, &mut rng), &opts).unwrap();
            assert!(sol.converged);
            for (a, b) in sol.flows.iter().flatten().zip(base.flows.iter().flatten()) {
                worst = worst.max((a - b).abs());
            }
        }
        ok &= worst <= 1e-5 * q;
        detail.push_str(&format!("{name}: max flow spread {worst:.2e} EV/hr; "));
    }
    report("11 (uniqueness across starts)", ok, &detail);
}

#[test]
fn criterion_12_enforcement() {
    let opts = SolverOptions::default();
    let mut ok = true;
    let mut detail = String::new();
    let toy = load_scenario_str(&toy_two_path_doc(22.0, 17.0, 10.0)).unwrap();
    for (name, s) in [
        ("toy", toy),
        ("bay7 a=1", bay7().with_alpha(1.0)),
        ("bay7 a=10", bay7().with_alpha(10.0)),
        ("bay7 a=25", bay7().with_alpha(25.0)),
    ] {
        let r = verify_so_enforcement(&s, None, &opts).unwrap();
        ok &= r.social_cost_gap.abs() <= 0.005;
        detail.push_str(&format!(
            "{name}: cost gap {:.4}%, flow dev {:.4}; ",
            100.0 * r.social_cost_gap,
            r.max_flow_deviation
        ));
    }
    report("12 (fees enforce the optimum)", ok, &detail);
}

#[test]
fn criterion_13_load_conservation() {
    let mut ok = true;
    let mut detail = String::new();
    for (name, s) in [("bay7", bay7()), ("bay10", bay10())] {
        let ps = PathSet::build(&s);
        let expected: f64 = s
            .od_pairs
            .iter()
            .map(|od| od.rate * od.distribution.mean())
            .sum();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let f = random_flows(&ps, &mut rng);
            let total: f64 = station_energy_loads(&f, &ps, &s).iter().sum();
            worst = worst.max((total - expected).abs() / expected);
        }
        ok &= worst <= 1e-9;
        detail.push_str(&format!("{name}: worst rel err {worst:.2e}; "));
    }
    report("13 (energy conservation)", ok, &detail);
}

#[test]
fn criterion_14_demand_dependent_mode() {
    let s = load_scenario_str(&toy_demand_dependent_doc()).unwrap();
    let opts = SolverOptions {
        starts: 8,
        ..Default::default()
    };
    let sol = solve_ue(&s, &opts).unwrap();
    let all_stationary = sol
        .stationary_points
        .iter()
        .all(|p| p.pg_norm <= 1e-6);
    report(
        "14 (demand-dependent wait mode)",
        sol.nonconvex && !sol.stationary_points.is_empty() && all_stationary,
        &format!(
            "nonconvex={}, {} stationary point(s), worst pg {:.2e}",
            sol.nonconvex,
            sol.stationary_points.len(),
            sol.stationary_points
                .iter()
                .map(|p| p.pg_norm)
                .fold(0.0f64, f64::max)
        ),
    );
}

/// Not a numbered criterion: the social cost of the system optimum
/// never exceeds the social cost of the user equilibrium (price of
/// anarchy >= 1), and the wardrop gap moves in the right direction for
/// deliberately bad assignments.
#[test]
fn sanity_price_of_anarchy_and_gap_direction() {
    for (name, s) in [
        ("bay7 a=10", bay7().with_alpha(10.0)),
        ("bay10", bay10()),
        (
            "toy",
            load_scenario_str(&toy_two_path_doc(22.0, 17.0, 10.0)).unwrap(),
        ),
    ] {
        let opts = SolverOptions::default();
        let ue = solve_ue(&s, &opts).unwrap();
        let so = solve_system_optimum(&s, &opts).unwrap();
        let cost_ue = tcap::social::so_objective(&ue.flows, &ue.paths, &s).unwrap();
        let cost_so = tcap::social::so_objective(&so.flows, &so.paths, &s).unwrap();
        assert!(
            cost_so <= cost_ue * (1.0 + 1e-9),
            "{name}: PoA < 1 ({cost_so} vs {cost_ue})"
        );
        // forcing everything onto the worst path must show a positive gap
        let ps = PathSet::build(&s);
        let forced: Flows = ps
            .per_od
            .iter()
            .map(|od| {
                let mut v = vec![0.0; od.paths.len()];
                v[0] = od.rate;
                v
            })
            .collect();
        assert!(wardrop_gap(&forced, &ps, &s).unwrap() > ue.wardrop_gap);
    }
}

//! Stations whose wait grows with delivered energy rather than vehicle
//! count: the assignment program loses convexity and can have several
//! stationary points. The solver restarts from seeded random points
//! and reports every distinct one, flagged nonconvex.
//!
//! Run with: cargo run --example demand_dependent_wait

use tcap::equilibrium::{solve_ue, SolverOptions};
use tcap::scenario::load_scenario_str;

fn main() {
    let doc = tcap::test_fixtures::toy_demand_dependent_doc();
    let s = load_scenario_str(&doc).expect("scenario loads");
    let opts = SolverOptions {
        starts: 8,
        ..Default::default()
    };
    let sol = solve_ue(&s, &opts).expect("solve completes");
    println!(
        "nonconvex={}, {} distinct stationary point(s) from {} starts",
        sol.nonconvex,
        sol.stationary_points.len(),
        opts.starts
    );
    for (k, p) in sol.stationary_points.iter().enumerate() {
        println!(
            "  point {k}: objective {:.4}, projected-gradient norm {:.2e}, flows {:?}",
            p.objective,
            p.pg_norm,
            p.flows[0]
                .iter()
                .map(|f| (f * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        );
    }
    println!(
        "reported (best) point: arrivals a={:.3}, b={:.3}",
        sol.station_arrivals[0], sol.station_arrivals[1]
    );
}

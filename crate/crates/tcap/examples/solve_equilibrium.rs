//! Solve the user equilibrium and inspect the threshold structure:
//! which energy band of the population each path serves, station
//! arrivals, waits, and loads.
//!
//! Run with: cargo run --example solve_equilibrium

use std::path::Path;

use tcap::equilibrium::{solve_ue, SolverOptions};
use tcap::scenario::load_scenario;

const SCENARIO: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scenarios/bay_area_7.toml"
);

fn main() {
    let s = load_scenario(Path::new(SCENARIO))
        .expect("scenario loads")
        .with_alpha(10.0);
    let sol = solve_ue(&s, &SolverOptions::default()).expect("solve succeeds");

    println!(
        "converged={} after {} iterations, Wardrop gap {:.2e}",
        sol.converged, sol.iterations, sol.wardrop_gap
    );

    println!("\nstation arrivals and expected loads:");
    for (j, st) in s.stations.iter().enumerate() {
        println!(
            "  {:<12} lambda {:>7.3} EV/hr   wait {:>6.2} min   load {:>7.1} kWh/hr",
            st.node_id,
            sol.station_arrivals[j],
            st.wait.wait_time(sol.station_arrivals[j]).unwrap(),
            sol.station_loads[j]
        );
    }

    println!("\nenergy bands per path (kWh):");
    for (oi, od) in sol.paths.per_od.iter().enumerate() {
        for (pi, p) in od.paths.iter().enumerate() {
            let f = sol.flows[oi][pi];
            if f < 1e-6 {
                continue;
            }
            println!(
                "  [{:>5.1}, {:>5.1}] -> {:<12} ({:>6.2} EV/hr)",
                sol.thresholds[oi][pi],
                sol.thresholds[oi][pi + 1],
                s.stations[p.path.station].node_id,
                f
            );
        }
    }
}

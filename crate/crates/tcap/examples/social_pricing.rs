//! Derive the socially optimal plug-in fees and electricity prices:
//! solve the marginal-cost-priced assignment and read the fee schedule
//! off its arrival rates.
//!
//! Run with: cargo run --example social_pricing

use std::path::Path;

use tcap::equilibrium::SolverOptions;
use tcap::scenario::load_scenario;
use tcap::social::{optimal_prices, solve_so, FeeUnits};

const SCENARIO: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scenarios/bay_area_7.toml"
);

fn main() {
    let base = load_scenario(Path::new(SCENARIO)).expect("scenario loads");
    for alpha in [1.0, 10.0] {
        let s = base.with_alpha(alpha);
        let sol = solve_so(&s, &SolverOptions::default()).expect("solve succeeds");
        let fees = optimal_prices(&sol, &s, FeeUnits::Paper).expect("prices derive");
        println!("alpha = {alpha} min/$:");
        println!(
            "  {:<12} {:>9} {:>12} {:>10}",
            "station", "tau ($)", "ups ($/kWh)", "lambda"
        );
        for (j, st) in s.stations.iter().enumerate() {
            let e = &fees.entries[&st.node_id];
            println!(
                "  {:<12} {:>9.3} {:>12.5} {:>10.3}",
                st.node_id, e.tau_usd, e.upsilon_usd_per_kwh, sol.station_arrivals[j]
            );
        }
        println!();
    }
}

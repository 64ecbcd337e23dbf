//! Check that the derived station prices really decentralize the system
//! optimum: install the enforcing fees as constants, re-solve the user
//! equilibrium, and compare flows and social cost.
//!
//! Run with: cargo run --example verify_enforcement

use std::path::Path;

use tcap::equilibrium::SolverOptions;
use tcap::scenario::load_scenario;
use tcap::social::verify_so_enforcement;

const SCENARIO: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scenarios/bay_area_7.toml"
);

fn main() {
    let base = load_scenario(Path::new(SCENARIO)).expect("scenario loads");
    for alpha in [1.0, 10.0, 25.0] {
        let s = base.with_alpha(alpha);
        let report =
            verify_so_enforcement(&s, None, &SolverOptions::default()).expect("solves succeed");
        println!(
            "alpha {alpha:>4}: flow deviation {:.5} EV/hr, social cost {:.2} vs optimum {:.2} ({:+.5}%)",
            report.max_flow_deviation,
            report.ue_social_cost,
            report.so_social_cost,
            100.0 * report.social_cost_gap
        );
    }
}

//! Sweep the value-of-time parameter α and compare total waiting time
//! with and without the socially optimal fees on the three-OD network.
//! With fees the wait stays essentially flat across α.
//!
//! Run with: cargo run --example alpha_sweep

use std::path::Path;

use tcap::bundle::ResultBundle;
use tcap::equilibrium::{solve_ue, SolverOptions};
use tcap::scenario::load_scenario;
use tcap::social::solve_so;

const SCENARIO: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scenarios/bay_area_10.toml"
);

fn main() {
    let base = load_scenario(Path::new(SCENARIO)).expect("scenario loads");
    let opts = SolverOptions::default();
    println!(
        "{:>6} {:>16} {:>16}",
        "alpha", "wait (no fees)", "wait (opt fees)"
    );
    for alpha in [1.0, 2.5, 5.0, 10.0, 15.0, 20.0, 25.0] {
        let s = base.with_alpha(alpha);
        let ue = solve_ue(&s, &opts).expect("ue solves");
        let so = solve_so(&s, &opts).expect("so solves");
        let wait_ue = ResultBundle::from_solution(&ue, &s, None)
            .unwrap()
            .totals
            .wait_potential_min;
        let wait_so = ResultBundle::from_solution(&so, &s, None)
            .unwrap()
            .totals
            .wait_potential_min;
        println!("{alpha:>6} {wait_ue:>16.2} {wait_so:>16.2}");
    }
}

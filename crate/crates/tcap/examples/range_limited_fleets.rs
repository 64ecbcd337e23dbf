//! Fleet mixes with initial-energy range limits: low-battery vehicles
//! can only reach stations near the origin. Splits the demand over the
//! scenario's high/medium/low classes and reports electricity cost and
//! total waiting, with and without the optimal fees.
//!
//! Run with: cargo run --example range_limited_fleets

use std::path::Path;

use tcap::bundle::ResultBundle;
use tcap::equilibrium::{solve_ue, SolverOptions};
use tcap::scenario::load_scenario;
use tcap::social::solve_so;

const SCENARIO: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scenarios/bay_area_7.toml"
);

fn main() {
    let base = load_scenario(Path::new(SCENARIO))
        .expect("scenario loads")
        .with_alpha(10.0);
    let opts = SolverOptions::default();
    let mixes = [
        (100.0, 0.0, 0.0),
        (0.0, 0.0, 100.0),
        (0.0, 100.0, 0.0),
        (50.0, 25.0, 25.0),
        (25.0, 25.0, 50.0),
    ];
    println!(
        "{:>5} {:>6} {:>5} {:>6} {:>14} {:>12}",
        "high", "medium", "low", "fees", "electricity $", "waiting min"
    );
    for (h, m, l) in mixes {
        let s = base
            .with_class_split(&[
                ("high".to_string(), h),
                ("medium".to_string(), m),
                ("low".to_string(), l),
            ])
            .expect("classes exist");
        for optimal in [false, true] {
            let sol = if optimal {
                solve_so(&s, &opts).expect("so solves")
            } else {
                solve_ue(&s, &opts).expect("ue solves")
            };
            let totals = ResultBundle::from_solution(&sol, &s, None).unwrap().totals;
            println!(
                "{h:>5.0} {m:>6.0} {l:>5.0} {:>6} {:>14.2} {:>12.2}",
                if optimal { "opt" } else { "none" },
                totals.electricity_cost_usd_hr,
                totals.wait_potential_min
            );
        }
    }
}

//! Traffic and charge assignment for EV fast-charging networks.
//!
//! Given a road network with fast-charging stations, travel demand
//! between origin-destination pairs, and a distribution of per-vehicle
//! energy requests, this crate computes:
//!
//! * the user equilibrium: the threshold-based pattern in which no
//!   driver can lower their own trip cost by switching paths or
//!   stations ([`equilibrium::solve_ue`]);
//! * the socially optimal pattern under marginal-cost station pricing,
//!   together with the plug-in fees and electricity prices that induce
//!   it ([`social::solve_so`], [`social::optimal_prices`]);
//! * station-level arrival rates, expected waits, and expected energy
//!   loads for either pattern.
//!
//! Scenarios are self-contained TOML documents (see the README for the
//! schema); the `tcap` binary drives solves, sweeps, and exports from
//! the command line, and `examples/` holds one runnable example per
//! capability.
//!
//! Canonical units throughout: minutes, kWh, dollars, EV/hr.

pub mod bundle;
pub mod demand;
pub mod equilibrium;
pub mod oracle;
pub mod paths;
pub mod scenario;
pub mod social;
pub mod wait;

pub use equilibrium::{solve_ue, EquilibriumSolution, SolveError, SolverOptions};
pub use scenario::{load_scenario, load_scenario_str, validate_scenario, Scenario};
pub use social::{
    optimal_prices, solve_so, solve_system_optimum, verify_so_enforcement, FeeUnits,
};

/// Scenario documents shared by the test suite and examples.
#[doc(hidden)]
pub mod test_fixtures {
    pub const BAY7: &str = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/bay_area_7.toml"
    );
    pub const BAY10: &str = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/bay_area_10.toml"
    );

    /// Two nodes, one arc, one station at the origin.
    pub fn two_node_doc(minutes: f64) -> String {
        format!(
            r#"
            nodes = ["o", "d"]
            [[arcs]]
            id = "od"
            from = "o"
            to = "d"
            minutes = {minutes}
            [[stations]]
            node = "o"
            capacity_scale = 10.0
            lmp_usd_per_mwh = 20.0
            wait_model = {{ kind = "polynomial", a = 0.4, b = 3.0, x = 10.0 }}
            [distributions.main]
            kind = "uniform"
            min_kwh = 0.0
            max_kwh = 80.0
            [[od_pairs]]
            origin = "o"
            destination = "d"
            rate_ev_per_hr = 100.0
            distribution = "main"
            [economics]
            alpha_min_per_usd = 10.0
            "#
        )
    }

    /// Two parallel single-station paths o→a→d / o→b→d with equal road
    /// times; station prices in $/MWh are the knobs.
    pub fn toy_two_path_doc(lmp_a: f64, lmp_b: f64, alpha: f64) -> String {
        format!(
            r#"
            nodes = ["o", "a", "b", "d"]
            [[arcs]]
            id = "oa"
            from = "o"
            to = "a"
            minutes = 10.0
            [[arcs]]
            id = "ad"
            from = "a"
            to = "d"
            minutes = 10.0
            [[arcs]]
            id = "ob"
            from = "o"
            to = "b"
            minutes = 10.0
            [[arcs]]
            id = "bd"
            from = "b"
            to = "d"
            minutes = 10.0
            [[stations]]
            node = "a"
            capacity_scale = 10.0
            lmp_usd_per_mwh = {lmp_a}
            wait_model = {{ kind = "polynomial", a = 0.4, b = 3.0, x = 10.0 }}
            [[stations]]
            node = "b"
            capacity_scale = 10.0
            lmp_usd_per_mwh = {lmp_b}
            wait_model = {{ kind = "polynomial", a = 0.4, b = 3.0, x = 10.0 }}
            [distributions.main]
            kind = "uniform"
            min_kwh = 0.0
            max_kwh = 80.0
            [[od_pairs]]
            origin = "o"
            destination = "d"
            rate_ev_per_hr = 100.0
            distribution = "main"
            [economics]
            alpha_min_per_usd = {alpha}
            "#
        )
    }

    /// Same two-path toy but with demand-dependent station waits.
    pub fn toy_demand_dependent_doc() -> String {
        r#"
            nodes = ["o", "a", "b", "d"]
            [[arcs]]
            id = "oa"
            from = "o"
            to = "a"
            minutes = 10.0
            [[arcs]]
            id = "ad"
            from = "a"
            to = "d"
            minutes = 10.0
            [[arcs]]
            id = "ob"
            from = "o"
            to = "b"
            minutes = 10.0
            [[arcs]]
            id = "bd"
            from = "b"
            to = "d"
            minutes = 12.0
            [[stations]]
            node = "a"
            capacity_scale = 10.0
            lmp_usd_per_mwh = 22.0
            wait_model = { kind = "demand_dependent", c = 6000.0 }
            [[stations]]
            node = "b"
            capacity_scale = 10.0
            lmp_usd_per_mwh = 17.0
            wait_model = { kind = "demand_dependent", c = 6000.0 }
            [distributions.main]
            kind = "uniform"
            min_kwh = 0.0
            max_kwh = 80.0
            [[od_pairs]]
            origin = "o"
            destination = "d"
            rate_ev_per_hr = 100.0
            distribution = "main"
            [economics]
            alpha_min_per_usd = 10.0
            "#
        .to_string()
    }
}

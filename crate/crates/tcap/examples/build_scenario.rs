//! Build a scenario programmatically instead of loading a TOML file:
//! a diamond network with two stations, then solve both assignment
//! modes.
//!
//! Run with: cargo run --example build_scenario

use std::collections::BTreeMap;

use tcap::demand::DistributionSpec;
use tcap::equilibrium::{solve_ue, SolverOptions};
use tcap::scenario::{
    ArcSpec, ClassSpec, AllowedStations, EconomicsSpec, OdSpec, Scenario, ScenarioFile,
    StationSpec,
};
use tcap::social::solve_so;
use tcap::wait::WaitModel;

fn arc(id: &str, from: &str, to: &str, minutes: f64) -> ArcSpec {
    ArcSpec {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        minutes,
    }
}

fn station(node: &str, lmp: f64) -> StationSpec {
    StationSpec {
        node: node.into(),
        capacity_scale: 10.0,
        lmp_usd_per_mwh: lmp,
        wait_model: WaitModel::Polynomial {
            a: 0.4,
            b: 3.0,
            x: 10.0,
        },
        gamma_min_per_kwh: None,
    }
}

fn main() {
    let mut distributions = BTreeMap::new();
    distributions.insert(
        "main".to_string(),
        DistributionSpec::Uniform {
            min_kwh: 0.0,
            max_kwh: 60.0,
        },
    );
    let mut classes = BTreeMap::new();
    classes.insert(
        "any".to_string(),
        ClassSpec {
            allowed_stations: AllowedStations::All("all".into()),
        },
    );
    let file = ScenarioFile {
        name: "diamond".into(),
        gamma_min_per_kwh: 1.2,
        seed: 0,
        nodes: vec!["o".into(), "north".into(), "south".into(), "d".into()],
        arcs: vec![
            arc("on", "o", "north", 12.0),
            arc("nd", "north", "d", 12.0),
            arc("os", "o", "south", 10.0),
            arc("sd", "south", "d", 10.0),
        ],
        stations: vec![station("north", 18.0), station("south", 24.0)],
        distributions,
        classes,
        od_pairs: vec![OdSpec {
            origin: "o".into(),
            destination: "d".into(),
            rate_ev_per_hr: 60.0,
            distribution: "main".into(),
            class: Some("any".into()),
        }],
        economics: EconomicsSpec {
            alpha_min_per_usd: 8.0,
            fees: None,
        },
    };
    let s = Scenario::from_file(file).expect("valid scenario");

    let opts = SolverOptions::default();
    let ue = solve_ue(&s, &opts).unwrap();
    let so = solve_so(&s, &opts).unwrap();
    println!("user equilibrium arrivals:   north {:>6.2}, south {:>6.2}", ue.station_arrivals[0], ue.station_arrivals[1]);
    println!("priced optimum arrivals:     north {:>6.2}, south {:>6.2}", so.station_arrivals[0], so.station_arrivals[1]);
    println!(
        "cheap-but-slower north serves the energy band [{:.1}, {:.1}] kWh at equilibrium",
        ue.thresholds[0][1], ue.thresholds[0][2]
    );
}

//! Enumerate the feasible charging paths of a scenario: every simple
//! origin→destination route combined with every allowed station on it,
//! ranked by decreasing effective electricity price.
//!
//! Run with: cargo run --example enumerate_paths

use std::path::Path;

use tcap::paths::PathSet;
use tcap::scenario::load_scenario;

const SCENARIO: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scenarios/bay_area_7.toml"
);

fn main() {
    let s = load_scenario(Path::new(SCENARIO)).expect("scenario loads");
    let ps = PathSet::build(&s);
    println!(
        "{}: {} nodes, {} arcs, {} stations",
        s.name,
        s.network.node_ids.len(),
        s.network.arcs.len(),
        s.stations.len()
    );
    for od in &ps.per_od {
        let pair = &s.od_pairs[od.od];
        println!(
            "\n{} -> {} ({} EV/hr): {} feasible paths",
            s.network.node_ids[pair.origin],
            s.network.node_ids[pair.destination],
            pair.rate,
            od.paths.len()
        );
        println!(
            "{:<5} {:<12} {:>8} {:>10}  {}",
            "rank", "station", "minutes", "$/kWh", "arcs"
        );
        for (pi, p) in od.paths.iter().enumerate() {
            let arcs: Vec<&str> = p
                .path
                .arcs
                .iter()
                .map(|&ai| s.network.arcs[ai].id.as_str())
                .collect();
            println!(
                "{:<5} {:<12} {:>8.0} {:>10.5}  {}",
                pi + 1,
                s.stations[p.path.station].node_id,
                p.path.route_minutes,
                p.theta,
                arcs.join(" ")
            );
        }
    }
}

//! Problem-instance data model, file loading and validation.
//!
//! Canonical units, fixed repo-wide: time in minutes, energy in kWh,
//! money in $, rates in EV/hr. Scenario files carry wholesale prices in
//! $/MWh (`lmp_usd_per_mwh`); they are divided by 1000 at load so that
//! everything downstream works in $/kWh.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{DemandDistribution, DistributionSpec};
use crate::wait::WaitModel;

pub const DEFAULT_GAMMA_MIN_PER_KWH: f64 = 1.2;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse scenario document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Validation(String),
}

// ---------------------------------------------------------------------
// File-format types (serde) — see README for the full schema.
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_gamma")]
    pub gamma_min_per_kwh: f64,
    #[serde(default)]
    pub seed: u64,
    pub nodes: Vec<String>,
    pub arcs: Vec<ArcSpec>,
    pub stations: Vec<StationSpec>,
    pub distributions: BTreeMap<String, DistributionSpec>,
    #[serde(default)]
    pub classes: BTreeMap<String, ClassSpec>,
    pub od_pairs: Vec<OdSpec>,
    pub economics: EconomicsSpec,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA_MIN_PER_KWH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSpec {
    pub node: String,
    pub capacity_scale: f64,
    pub lmp_usd_per_mwh: f64,
    pub wait_model: WaitModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_min_per_kwh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AllowedStations {
    All(String), // the literal "all"
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub allowed_stations: AllowedStations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdSpec {
    pub origin: String,
    pub destination: String,
    pub rate_ev_per_hr: f64,
    pub distribution: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicsSpec {
    pub alpha_min_per_usd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fees: Option<Vec<FeeSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeSpec {
    pub station: String,
    pub tau_usd: f64,
    pub upsilon_usd_per_kwh: f64,
}

// ---------------------------------------------------------------------
// Resolved runtime model.
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct NetArc {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub minutes: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub node_ids: Vec<String>,
    pub arcs: Vec<NetArc>,
}

impl Network {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub node: usize,
    pub node_id: String,
    pub capacity_scale: f64,
    /// CNO procurement cost, $/kWh (slope of the linear electricity cost).
    pub marginal_cost: f64,
    pub wait: WaitModel,
    /// Minutes per kWh at this station's chargers.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleClass {
    pub name: String,
    /// Station indices this class may charge at.
    pub allowed: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdPair {
    pub origin: usize,
    pub destination: usize,
    pub rate: f64,
    pub distribution: DemandDistribution,
    pub distribution_name: String,
    pub class_name: Option<String>,
    /// Allowed station indices (the whole station set when no class).
    pub allowed: BTreeSet<usize>,
}

/// Per-station plug-in fee (\$) and electricity price (\$/kWh).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PricingScheme {
    /// Keyed by station node id.
    pub entries: BTreeMap<String, PriceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceEntry {
    pub tau_usd: f64,
    pub upsilon_usd_per_kwh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomicParams {
    /// Inverse value of time, minutes/$.
    pub alpha: f64,
    pub fees: Option<PricingScheme>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub network: Network,
    pub stations: Vec<Station>,
    /// station index by node index
    pub station_at_node: BTreeMap<usize, usize>,
    pub classes: BTreeMap<String, VehicleClass>,
    pub od_pairs: Vec<OdPair>,
    pub economics: EconomicParams,
    /// Network-wide default charge-rate inverse, minutes/kWh.
    pub gamma_default: f64,
    pub seed: u64,
    /// The document this scenario was loaded from, for digests/round-trips.
    pub source: ScenarioFile,
}

impl Scenario {
    /// Effective plug-in fee for a station: installed fees, else 0.
    pub fn tau(&self, station: usize) -> f64 {
        self.economics
            .fees
            .as_ref()
            .and_then(|f| f.entries.get(&self.stations[station].node_id))
            .map(|e| e.tau_usd)
            .unwrap_or(0.0)
    }

    /// Effective electricity price for a station: installed fees, else
    /// the CNO's marginal procurement cost (the no-fee mode).
    pub fn upsilon(&self, station: usize) -> f64 {
        self.economics
            .fees
            .as_ref()
            .and_then(|f| f.entries.get(&self.stations[station].node_id))
            .map(|e| e.upsilon_usd_per_kwh)
            .unwrap_or(self.stations[station].marginal_cost)
    }

    pub fn with_alpha(&self, alpha: f64) -> Scenario {
        let mut s = self.clone();
        s.economics.alpha = alpha;
        s.source.economics.alpha_min_per_usd = alpha;
        s
    }

    pub fn with_fees(&self, fees: Option<PricingScheme>) -> Scenario {
        let mut s = self.clone();
        s.source.economics.fees = fees.as_ref().map(|p| {
            p.entries
                .iter()
                .map(|(k, e)| FeeSpec {
                    station: k.clone(),
                    tau_usd: e.tau_usd,
                    upsilon_usd_per_kwh: e.upsilon_usd_per_kwh,
                })
                .collect()
        });
        s.economics.fees = fees;
        s
    }

    /// Replace the OD pairs with splits of the first pair's origin and
    /// destination over named classes; used by fleet-mix reports.
    pub fn with_class_split(&self, splits: &[(String, f64)]) -> Result<Scenario, ScenarioError> {
        let template = self.od_pairs.first().ok_or_else(|| {
            ScenarioError::Validation("scenario has no od_pairs to split".into())
        })?;
        let mut file = self.source.clone();
        let origin = self.network.node_ids[template.origin].clone();
        let destination = self.network.node_ids[template.destination].clone();
        file.od_pairs = splits
            .iter()
            .filter(|(_, rate)| *rate > 0.0)
            .map(|(class, rate)| OdSpec {
                origin: origin.clone(),
                destination: destination.clone(),
                rate_ev_per_hr: *rate,
                distribution: template.distribution_name.clone(),
                class: Some(class.clone()),
            })
            .collect();
        Scenario::from_file(file)
    }

    pub fn total_rate(&self) -> f64 {
        self.od_pairs.iter().map(|od| od.rate).sum()
    }

    /// Whether any station uses the demand-dependent wait model.
    pub fn has_demand_dependent_wait(&self) -> bool {
        self.stations.iter().any(|s| s.wait.is_demand_dependent())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.source).expect("scenario serialization cannot fail")
    }

    pub fn from_file(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
        build_scenario(file)
    }
}

// ---------------------------------------------------------------------
// Loading and validation.
// ---------------------------------------------------------------------

pub fn load_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text)?;
    build_scenario(file)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    load_scenario_str(&text)
}

fn build_scenario(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let node_ids = file.nodes.clone();
    let index: BTreeMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    if index.len() != node_ids.len() {
        return Err(ScenarioError::Validation("duplicate node id".into()));
    }

    let mut arcs = Vec::with_capacity(file.arcs.len());
    for a in &file.arcs {
        let from = *index.get(a.from.as_str()).ok_or_else(|| {
            ScenarioError::Validation(format!("arc '{}' references unknown node '{}'", a.id, a.from))
        })?;
        let to = *index.get(a.to.as_str()).ok_or_else(|| {
            ScenarioError::Validation(format!("arc '{}' references unknown node '{}'", a.id, a.to))
        })?;
        arcs.push(NetArc {
            id: a.id.clone(),
            from,
            to,
            minutes: a.minutes,
        });
    }

    let mut stations = Vec::with_capacity(file.stations.len());
    let mut station_at_node = BTreeMap::new();
    for s in &file.stations {
        let node = *index.get(s.node.as_str()).ok_or_else(|| {
            ScenarioError::Validation(format!("station references unknown node '{}'", s.node))
        })?;
        if station_at_node.insert(node, stations.len()).is_some() {
            return Err(ScenarioError::Validation(format!(
                "more than one station at node '{}'",
                s.node
            )));
        }
        stations.push(Station {
            node,
            node_id: s.node.clone(),
            capacity_scale: s.capacity_scale,
            marginal_cost: s.lmp_usd_per_mwh / 1000.0,
            wait: s.wait_model.clone(),
            gamma: s.gamma_min_per_kwh.unwrap_or(file.gamma_min_per_kwh),
        });
    }

    let all_stations: BTreeSet<usize> = (0..stations.len()).collect();
    let mut classes = BTreeMap::new();
    for (name, spec) in &file.classes {
        let allowed = match &spec.allowed_stations {
            AllowedStations::All(word) => {
                if word != "all" {
                    return Err(ScenarioError::Validation(format!(
                        "class '{name}': allowed_stations must be \"all\" or a list of nodes"
                    )));
                }
                all_stations.clone()
            }
            AllowedStations::List(nodes) => {
                let mut set = BTreeSet::new();
                for n in nodes {
                    let node = *index.get(n.as_str()).ok_or_else(|| {
                        ScenarioError::Validation(format!(
                            "class '{name}' references unknown node '{n}'"
                        ))
                    })?;
                    let st = station_at_node.get(&node).ok_or_else(|| {
                        ScenarioError::Validation(format!(
                            "class '{name}': node '{n}' has no station"
                        ))
                    })?;
                    set.insert(*st);
                }
                set
            }
        };
        classes.insert(
            name.clone(),
            VehicleClass {
                name: name.clone(),
                allowed,
            },
        );
    }

    let mut od_pairs = Vec::with_capacity(file.od_pairs.len());
    for od in &file.od_pairs {
        let origin = *index.get(od.origin.as_str()).ok_or_else(|| {
            ScenarioError::Validation(format!("od pair references unknown node '{}'", od.origin))
        })?;
        let destination = *index.get(od.destination.as_str()).ok_or_else(|| {
            ScenarioError::Validation(format!(
                "od pair references unknown node '{}'",
                od.destination
            ))
        })?;
        let dist_spec = file.distributions.get(&od.distribution).ok_or_else(|| {
            ScenarioError::Validation(format!(
                "od pair references unknown distribution '{}'",
                od.distribution
            ))
        })?;
        let distribution = DemandDistribution::from_spec(dist_spec)
            .map_err(|e| ScenarioError::Validation(e.to_string()))?;
        let allowed = match &od.class {
            Some(c) => classes
                .get(c)
                .ok_or_else(|| {
                    ScenarioError::Validation(format!("od pair references unknown class '{c}'"))
                })?
                .allowed
                .clone(),
            None => all_stations.clone(),
        };
        od_pairs.push(OdPair {
            origin,
            destination,
            rate: od.rate_ev_per_hr,
            distribution,
            distribution_name: od.distribution.clone(),
            class_name: od.class.clone(),
            allowed,
        });
    }

    let fees = file.economics.fees.as_ref().map(|list| PricingScheme {
        entries: list
            .iter()
            .map(|f| {
                (
                    f.station.clone(),
                    PriceEntry {
                        tau_usd: f.tau_usd,
                        upsilon_usd_per_kwh: f.upsilon_usd_per_kwh,
                    },
                )
            })
            .collect(),
    });

    let scenario = Scenario {
        name: file.name.clone(),
        network: Network { node_ids, arcs },
        stations,
        station_at_node,
        classes,
        od_pairs,
        economics: EconomicParams {
            alpha: file.economics.alpha_min_per_usd,
            fees,
        },
        gamma_default: file.gamma_min_per_kwh,
        seed: file.seed,
        source: file,
    };

    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        return Err(ScenarioError::Validation(violations.join("; ")));
    }
    Ok(scenario)
}

/// All invariant violations in a scenario; empty iff the scenario is
/// usable. Violations are data, not failures.
pub fn validate_scenario(s: &Scenario) -> Vec<String> {
    let mut out = Vec::new();
    for a in &s.network.arcs {
        if !(a.minutes > 0.0 && a.minutes.is_finite()) {
            out.push(format!("arc '{}': travel_time must be > 0", a.id));
        }
    }
    for st in &s.stations {
        if st.capacity_scale <= 0.0 {
            out.push(format!("station '{}': capacity_scale must be > 0", st.node_id));
        }
        if st.marginal_cost < 0.0 {
            out.push(format!("station '{}': marginal_cost must be >= 0", st.node_id));
        }
        if st.gamma <= 0.0 {
            out.push(format!(
                "station '{}': charge_rate_inverse must be > 0",
                st.node_id
            ));
        }
        if let Err(e) = st.wait.validate() {
            out.push(format!("station '{}': {}", st.node_id, e));
        }
    }
    if s.stations.is_empty() {
        out.push("scenario has no stations".into());
    }
    for (name, class) in &s.classes {
        if class.allowed.is_empty() {
            out.push(format!("class '{name}': allowed_stations is empty"));
        }
    }
    if !(s.economics.alpha > 0.0 && s.economics.alpha.is_finite()) {
        out.push("economics: alpha must be > 0".into());
    }
    for (i, od) in s.od_pairs.iter().enumerate() {
        if od.origin == od.destination {
            out.push(format!("od pair {i}: origin equals destination"));
        }
        if !(od.rate > 0.0 && od.rate.is_finite()) {
            out.push(format!("od pair {i}: rate must be positive and finite"));
        }
        if od.origin != od.destination
            && crate::paths::enumerate_feasible_paths(s, i).is_empty()
        {
            out.push(format!("od pair {i}: od has no feasible path"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_bay_area_7() {
        let s = load_scenario(Path::new(crate::test_fixtures::BAY7)).unwrap();
        assert_eq!(s.network.node_ids.len(), 7);
        assert_eq!(s.network.arcs.len(), 7);
        assert_eq!(s.stations.len(), 7);
        assert_eq!(s.od_pairs.len(), 1);
        assert_eq!(s.od_pairs[0].rate, 100.0);
        // LMP conversion to $/kWh
        let davis = s.network.node_index("davis").unwrap();
        let st = s.station_at_node[&davis];
        assert!((s.stations[st].marginal_cost - 0.01714).abs() < 1e-12);
    }

    #[test]
    fn loads_bay_area_10() {
        let s = load_scenario(Path::new(crate::test_fixtures::BAY10)).unwrap();
        assert_eq!(s.network.node_ids.len(), 10);
        assert_eq!(s.network.arcs.len(), 13);
        assert_eq!(s.od_pairs.len(), 3);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let doc = r#"
            nodes = ["a", "b"]
            [[arcs]]
            id = "x"
            from = "a"
            to = "nowhere"
            minutes = 5.0
            [[stations]]
            node = "a"
            capacity_scale = 10.0
            lmp_usd_per_mwh = 20.0
            wait_model = { kind = "polynomial", a = 0.4, b = 3.0, x = 10.0 }
            [distributions.main]
            kind = "uniform"
            min_kwh = 0.0
            max_kwh = 80.0
            [[od_pairs]]
            origin = "a"
            destination = "b"
            rate_ev_per_hr = 10.0
            distribution = "main"
            [economics]
            alpha_min_per_usd = 10.0
        "#;
        let err = load_scenario_str(doc).unwrap_err();
        assert!(err.to_string().contains("unknown node"), "{err}");
    }

    #[test]
    fn negative_travel_time_is_flagged() {
        let doc = crate::test_fixtures::two_node_doc(-3.0);
        let err = load_scenario_str(&doc).unwrap_err();
        assert!(err.to_string().contains("travel_time must be > 0"), "{err}");
    }

    #[test]
    fn class_with_unreachable_stations_is_flagged() {
        // Station only at the destination-side node "b" is reachable; a
        // class restricted to "c" (off-route) has no feasible path.
        let doc = r#"
            nodes = ["a", "b", "c"]
            [[arcs]]
            id = "ab"
            from = "a"
            to = "b"
            minutes = 5.0
            [[arcs]]
            id = "bc"
            from = "b"
            to = "c"
            minutes = 5.0
            [[stations]]
            node = "b"
            capacity_scale = 10.0
            lmp_usd_per_mwh = 20.0
            wait_model = { kind = "polynomial", a = 0.4, b = 3.0, x = 10.0 }
            [[stations]]
            node = "c"
            capacity_scale = 10.0
            lmp_usd_per_mwh = 20.0
            wait_model = { kind = "polynomial", a = 0.4, b = 3.0, x = 10.0 }
            [classes.stranded]
            allowed_stations = ["c"]
            [[od_pairs]]
            origin = "a"
            destination = "b"
            rate_ev_per_hr = 10.0
            distribution = "main"
            class = "stranded"
            [distributions.main]
            kind = "uniform"
            min_kwh = 0.0
            max_kwh = 80.0
            [economics]
            alpha_min_per_usd = 10.0
        "#;
        let err = load_scenario_str(doc).unwrap_err();
        assert!(err.to_string().contains("no feasible path"), "{err}");
    }

    #[test]
    fn round_trip_preserves_scenario() {
        let s = load_scenario(Path::new(crate::test_fixtures::BAY7)).unwrap();
        let text = s.to_toml();
        let s2 = load_scenario_str(&text).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn loading_is_deterministic() {
        let a = load_scenario(Path::new(crate::test_fixtures::BAY7)).unwrap();
        let b = load_scenario(Path::new(crate::test_fixtures::BAY7)).unwrap();
        assert_eq!(a, b);
    }
}

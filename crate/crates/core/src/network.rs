//! Problem instances: node sets, demand, tariffs, and the JSON interchange file.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{LandCostTable, SeaRate};

/// Schema tag written into every instance file.
pub const SCHEMA_VERSION: &str = "hublocate-1";

/// Branches `B`, origin ports `S` and destination ports `T`, in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSets {
    pub branches: Vec<String>,
    pub origin_ports: Vec<String>,
    pub destination_ports: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// Volume of a full truck, m³.
    pub land_container_volume: f64,
    /// Volume of a full ocean container, m³.
    pub sea_container_volume: f64,
    /// Largest volume an NVOCC accepts on one relation, m³.
    pub nvocc_cap: f64,
    /// kg per m³ used to derive chargeable weight.
    pub dimensional_factor: f64,
    /// Container price used on NVOCC-only relations.
    pub penalty: f64,
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            land_container_volume: 80.0,
            sea_container_volume: 55.0,
            nvocc_cap: 40.0,
            dimensional_factor: 300.0,
            penalty: 1e8,
        }
    }
}

/// A full problem instance. All matrices are dense and indexed by the
/// positions of the node ids in [`NodeSets`].
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub nodes: NodeSets,
    /// `demand[b][t]`, m³.
    pub demand: Vec<Vec<f64>>,
    /// `branch_distance[b][h]`, km.
    pub branch_distance: Vec<Vec<f64>>,
    /// `port_distance[b][s]`, km.
    pub port_distance: Vec<Vec<f64>>,
    pub land_costs: LandCostTable,
    /// `sea_rates[s][t]`; `None` when the relation is not served.
    pub sea_rates: Vec<Vec<Option<SeaRate>>>,
    /// Hub set-up cost `e_b`.
    pub setup_cost: Vec<f64>,
    /// Hub consolidation cost `f_b` per m³.
    pub hub_consolidation_cost: Vec<f64>,
    /// Port consolidation cost `g_s` per m³.
    pub port_consolidation_cost: Vec<f64>,
    pub params: Parameters,
}

impl Instance {
    pub fn num_branches(&self) -> usize {
        self.nodes.branches.len()
    }

    pub fn num_origin_ports(&self) -> usize {
        self.nodes.origin_ports.len()
    }

    pub fn num_destinations(&self) -> usize {
        self.nodes.destination_ports.len()
    }

    pub fn branch_id(&self, b: usize) -> &str {
        &self.nodes.branches[b]
    }

    pub fn port_id(&self, s: usize) -> &str {
        &self.nodes.origin_ports[s]
    }

    pub fn destination_id(&self, t: usize) -> &str {
        &self.nodes.destination_ports[t]
    }

    /// `(b, t)` pairs with positive demand, in index order.
    pub fn relations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (b, row) in self.demand.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    out.push((b, t));
                }
            }
        }
        out
    }

    /// Origin ports with a sea rate to destination `t`.
    pub fn usable_ports(&self, t: usize) -> Vec<usize> {
        (0..self.num_origin_ports()).filter(|&s| self.sea_rates[s][t].is_some()).collect()
    }

    /// Total demand of branch `b`; the big-M of the linearized model.
    pub fn branch_volume(&self, b: usize) -> f64 {
        self.demand[b].iter().filter(|v| **v > 0.0).sum()
    }

    /// Copy of the instance keeping only destination `t`.
    pub fn restrict_to_destination(&self, t: usize) -> Instance {
        let mut out = self.clone();
        out.nodes.destination_ports = vec![self.nodes.destination_ports[t].clone()];
        out.demand = self.demand.iter().map(|row| vec![row[t]]).collect();
        out.sea_rates = self.sea_rates.iter().map(|row| vec![row[t]]).collect();
        out
    }

    /// An instance with the given nodes, zero demand and costs, zero distances,
    /// no sea rates, and the supplied land tariff.
    pub fn empty(nodes: NodeSets, land_costs: LandCostTable, params: Parameters) -> Instance {
        let nb = nodes.branches.len();
        let ns = nodes.origin_ports.len();
        let nt = nodes.destination_ports.len();
        Instance {
            demand: vec![vec![0.0; nt]; nb],
            branch_distance: vec![vec![0.0; nb]; nb],
            port_distance: vec![vec![0.0; ns]; nb],
            land_costs,
            sea_rates: vec![vec![None; nt]; ns],
            setup_cost: vec![0.0; nb],
            hub_consolidation_cost: vec![0.0; nb],
            port_consolidation_cost: vec![0.0; ns],
            params,
            nodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EmptyNodeSet,
    DuplicateNode,
    NodeSetOverlap,
    InvalidNodeId,
    UnknownNode,
    DimensionMismatch,
    NegativeDemand,
    NonFiniteValue,
    NegativeCost,
    NegativeDistance,
    MissingDistance,
    DistanceOutOfRange,
    InvalidLandTable,
    LandContainerMismatch,
    InvalidSeaRate,
    InvalidContainerParameters,
    UnreachableDestination,
    SchemaVersion,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string));
        f.write_str(s.as_deref().unwrap_or("UNKNOWN"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, message: impl Into<String>) {
        self.violations.push(Violation { code, message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{}: {}", v.code, v.message)?;
        }
        Ok(())
    }
}

fn valid_node_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn check_node_sets(nodes: &NodeSets, report: &mut ValidationReport) {
    let sets = [
        ("branches", &nodes.branches),
        ("origin_ports", &nodes.origin_ports),
        ("destination_ports", &nodes.destination_ports),
    ];
    let mut owner: HashMap<&str, &str> = HashMap::new();
    for (name, ids) in sets {
        if ids.is_empty() {
            report.push(ViolationCode::EmptyNodeSet, format!("node set `{name}` is empty"));
        }
        let mut seen = HashSet::new();
        for id in ids.iter() {
            if !valid_node_id(id) {
                report.push(
                    ViolationCode::InvalidNodeId,
                    format!("node id `{id}` may only contain ASCII letters, digits, `_` and `.`"),
                );
            }
            if !seen.insert(id.as_str()) {
                report.push(ViolationCode::DuplicateNode, format!("`{id}` appears twice in `{name}`"));
                continue;
            }
            match owner.get(id.as_str()) {
                Some(other) if name == "branches" || *other == "branches" => {
                    report.push(ViolationCode::NodeSetOverlap, format!("`{id}` is both in `{other}` and `{name}`"));
                }
                Some(other) => {
                    report.push(ViolationCode::DuplicateNode, format!("`{id}` is both in `{other}` and `{name}`"));
                }
                None => {
                    owner.insert(id, name);
                }
            }
        }
    }
}

fn dims_ok<T>(m: &[Vec<T>], rows: usize, cols: usize) -> bool {
    m.len() == rows && m.iter().all(|r| r.len() == cols)
}

/// Every invariant violation of `instance`; an empty report means valid.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    use ViolationCode as C;
    let mut report = ValidationReport::default();
    check_node_sets(&instance.nodes, &mut report);

    let nb = instance.num_branches();
    let ns = instance.num_origin_ports();
    let nt = instance.num_destinations();
    let shapes = [
        ("demand", dims_ok(&instance.demand, nb, nt)),
        ("branch_distance", dims_ok(&instance.branch_distance, nb, nb)),
        ("port_distance", dims_ok(&instance.port_distance, nb, ns)),
        ("sea_rates", dims_ok(&instance.sea_rates, ns, nt)),
        ("setup_cost", instance.setup_cost.len() == nb),
        ("hub_consolidation_cost", instance.hub_consolidation_cost.len() == nb),
        ("port_consolidation_cost", instance.port_consolidation_cost.len() == ns),
    ];
    let mut shaped = true;
    for (name, ok) in shapes {
        if !ok {
            shaped = false;
            report.push(C::DimensionMismatch, format!("`{name}` does not match the node sets"));
        }
    }

    let p = &instance.params;
    for (name, v) in [
        ("land_container_volume", p.land_container_volume),
        ("sea_container_volume", p.sea_container_volume),
        ("nvocc_cap", p.nvocc_cap),
        ("dimensional_factor", p.dimensional_factor),
        ("penalty", p.penalty),
    ] {
        if !v.is_finite() || v <= 0.0 {
            report.push(C::InvalidContainerParameters, format!("parameter `{name}` must be positive, got {v}"));
        }
    }
    if p.nvocc_cap > p.sea_container_volume {
        report.push(
            C::InvalidContainerParameters,
            format!("nvocc_cap {} exceeds the sea container volume {}", p.nvocc_cap, p.sea_container_volume),
        );
    }

    let table_problems = instance.land_costs.problems();
    for problem in &table_problems {
        report.push(C::InvalidLandTable, problem.clone());
    }
    if table_problems.is_empty() && (instance.land_costs.container_volume() - p.land_container_volume).abs() > 1e-9 {
        report.push(
            C::LandContainerMismatch,
            format!(
                "last volume break {} differs from land_container_volume {}",
                instance.land_costs.container_volume(),
                p.land_container_volume
            ),
        );
    }
    if !shaped {
        return report;
    }

    for b in 0..nb {
        for t in 0..nt {
            let v = instance.demand[b][t];
            if !v.is_finite() {
                report.push(
                    C::NonFiniteValue,
                    format!("demand {} → {} is {v}", instance.branch_id(b), instance.destination_id(t)),
                );
            } else if v < 0.0 {
                report.push(
                    C::NegativeDemand,
                    format!("demand {} → {} is {v}", instance.branch_id(b), instance.destination_id(t)),
                );
            }
        }
    }

    let costs = [
        ("setup cost", &instance.setup_cost, &instance.nodes.branches),
        ("hub consolidation cost", &instance.hub_consolidation_cost, &instance.nodes.branches),
        ("port consolidation cost", &instance.port_consolidation_cost, &instance.nodes.origin_ports),
    ];
    for (name, values, ids) in costs {
        for (v, id) in values.iter().zip(ids) {
            if !v.is_finite() || *v < 0.0 {
                report.push(C::NegativeCost, format!("{name} of `{id}` is {v}"));
            }
        }
    }

    let max = instance.land_costs.max_distance();
    let mut check_distance = |from: &str, to: &str, d: f64| {
        if !d.is_finite() || d < 0.0 {
            report.push(C::NegativeDistance, format!("distance {from} → {to} is {d}"));
        } else if table_problems.is_empty() && d > max {
            report.push(
                C::DistanceOutOfRange,
                format!("distance {from} → {to} = {d} km exceeds the tariff range {max} km"),
            );
        }
    };
    for b in 0..nb {
        for h in 0..nb {
            check_distance(instance.branch_id(b), instance.branch_id(h), instance.branch_distance[b][h]);
        }
        for s in 0..ns {
            check_distance(instance.branch_id(b), instance.port_id(s), instance.port_distance[b][s]);
        }
    }

    for s in 0..ns {
        for t in 0..nt {
            if let Some(rate) = &instance.sea_rates[s][t] {
                if !rate.is_valid() {
                    report.push(
                        C::InvalidSeaRate,
                        format!(
                            "sea rate {} → {} needs at least one positive price",
                            instance.port_id(s),
                            instance.destination_id(t)
                        ),
                    );
                }
            }
        }
    }

    for t in 0..nt {
        let demanded = (0..nb).any(|b| instance.demand[b][t] > 0.0);
        if demanded && instance.usable_ports(t).is_empty() {
            report.push(
                C::UnreachableDestination,
                format!("destination `{}` has demand but no origin port serves it", instance.destination_id(t)),
            );
        }
    }
    report
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("instance structure is invalid:\n{0}")]
    Structure(ValidationReport),
}

impl LoadError {
    /// The violation codes carried by a structural error.
    pub fn codes(&self) -> Vec<ViolationCode> {
        match self {
            LoadError::Structure(r) => r.violations.iter().map(|v| v.code).collect(),
            LoadError::Schema(msg) if msg.contains("schema version") => vec![ViolationCode::SchemaVersion],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    nodes: NodeSets,
    demand: BTreeMap<String, BTreeMap<String, f64>>,
    distances: BTreeMap<String, BTreeMap<String, f64>>,
    land_cost_table: LandCostTable,
    sea_rates: BTreeMap<String, BTreeMap<String, SeaRate>>,
    setup_costs: BTreeMap<String, f64>,
    consolidation_costs: ConsolidationSection,
    parameters: ParameterSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsolidationSection {
    hubs: BTreeMap<String, f64>,
    ports: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterSection {
    schema_version: String,
    land_container_volume: f64,
    sea_container_volume: f64,
    nvocc_cap: f64,
    dimensional_factor: f64,
    penalty: f64,
}

/// Parses an instance from its canonical JSON text.
pub fn instance_from_str(text: &str) -> Result<Instance, LoadError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        if e.is_data() {
            LoadError::Schema(message)
        } else {
            LoadError::Parse { line: e.line(), column: e.column(), message }
        }
    })?;
    if file.parameters.schema_version != SCHEMA_VERSION {
        return Err(LoadError::Schema(format!(
            "schema version `{}` is not supported (expected `{SCHEMA_VERSION}`)",
            file.parameters.schema_version
        )));
    }
    from_file(file)
}

fn from_file(file: InstanceFile) -> Result<Instance, LoadError> {
    use ViolationCode as C;
    let mut report = ValidationReport::default();
    check_node_sets(&file.nodes, &mut report);
    if report.contains(C::DuplicateNode) || report.contains(C::EmptyNodeSet) {
        return Err(LoadError::Structure(report));
    }
    let index =
        |ids: &[String]| -> HashMap<String, usize> { ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect() };
    let branches = index(&file.nodes.branches);
    let ports = index(&file.nodes.origin_ports);
    let dests = index(&file.nodes.destination_ports);
    let params = Parameters {
        land_container_volume: file.parameters.land_container_volume,
        sea_container_volume: file.parameters.sea_container_volume,
        nvocc_cap: file.parameters.nvocc_cap,
        dimensional_factor: file.parameters.dimensional_factor,
        penalty: file.parameters.penalty,
    };
    let mut inst = Instance::empty(file.nodes.clone(), file.land_cost_table, params);
    let mut unknown = |section: &str, id: &str| {
        report.push(C::UnknownNode, format!("section `{section}` references unknown node `{id}`"));
    };

    for (b, row) in &file.demand {
        let Some(&bi) = branches.get(b) else {
            unknown("demand", b);
            continue;
        };
        for (t, &v) in row {
            match dests.get(t) {
                Some(&ti) => inst.demand[bi][ti] = v,
                None => unknown("demand", t),
            }
        }
    }

    let nb = inst.num_branches();
    let ns = inst.num_origin_ports();
    let mut seen_branch = vec![vec![false; nb]; nb];
    let mut seen_port = vec![vec![false; ns]; nb];
    for (b, row) in &file.distances {
        let Some(&bi) = branches.get(b) else {
            unknown("distances", b);
            continue;
        };
        for (r, &d) in row {
            if let Some(&hi) = branches.get(r) {
                inst.branch_distance[bi][hi] = d;
                seen_branch[bi][hi] = true;
            } else if let Some(&si) = ports.get(r) {
                inst.port_distance[bi][si] = d;
                seen_port[bi][si] = true;
            } else {
                unknown("distances", r);
            }
        }
    }
    for (s, row) in &file.sea_rates {
        let Some(&si) = ports.get(s) else {
            unknown("sea_rates", s);
            continue;
        };
        for (t, rate) in row {
            match dests.get(t) {
                Some(&ti) => inst.sea_rates[si][ti] = Some(*rate),
                None => unknown("sea_rates", t),
            }
        }
    }
    for (b, &e) in &file.setup_costs {
        match branches.get(b) {
            Some(&bi) => inst.setup_cost[bi] = e,
            None => unknown("setup_costs", b),
        }
    }
    for (b, &f) in &file.consolidation_costs.hubs {
        match branches.get(b) {
            Some(&bi) => inst.hub_consolidation_cost[bi] = f,
            None => unknown("consolidation_costs.hubs", b),
        }
    }
    for (s, &g) in &file.consolidation_costs.ports {
        match ports.get(s) {
            Some(&si) => inst.port_consolidation_cost[si] = g,
            None => unknown("consolidation_costs.ports", s),
        }
    }

    for b in 0..nb {
        for h in 0..nb {
            if b != h && !seen_branch[b][h] {
                report.push(C::MissingDistance, format!("no distance {} → {}", inst.branch_id(b), inst.branch_id(h)));
            }
        }
        for s in 0..ns {
            if !seen_port[b][s] {
                report.push(C::MissingDistance, format!("no distance {} → {}", inst.branch_id(b), inst.port_id(s)));
            }
        }
    }
    if report.is_valid() {
        Ok(inst)
    } else {
        Err(LoadError::Structure(report))
    }
}

fn to_file(instance: &Instance) -> InstanceFile {
    let mut demand: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (b, row) in instance.demand.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            if v != 0.0 {
                demand
                    .entry(instance.branch_id(b).to_string())
                    .or_default()
                    .insert(instance.destination_id(t).to_string(), v);
            }
        }
    }
    let mut distances: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for b in 0..instance.num_branches() {
        let row = distances.entry(instance.branch_id(b).to_string()).or_default();
        for h in 0..instance.num_branches() {
            row.insert(instance.branch_id(h).to_string(), instance.branch_distance[b][h]);
        }
        for s in 0..instance.num_origin_ports() {
            row.insert(instance.port_id(s).to_string(), instance.port_distance[b][s]);
        }
    }
    let mut sea_rates: BTreeMap<String, BTreeMap<String, SeaRate>> = BTreeMap::new();
    for (s, row) in instance.sea_rates.iter().enumerate() {
        for (t, rate) in row.iter().enumerate() {
            if let Some(rate) = rate {
                sea_rates
                    .entry(instance.port_id(s).to_string())
                    .or_default()
                    .insert(instance.destination_id(t).to_string(), *rate);
            }
        }
    }
    let by_branch = |values: &[f64]| -> BTreeMap<String, f64> {
        instance.nodes.branches.iter().cloned().zip(values.iter().copied()).collect()
    };
    InstanceFile {
        nodes: instance.nodes.clone(),
        demand,
        distances,
        land_cost_table: instance.land_costs.clone(),
        sea_rates,
        setup_costs: by_branch(&instance.setup_cost),
        consolidation_costs: ConsolidationSection {
            hubs: by_branch(&instance.hub_consolidation_cost),
            ports: instance
                .nodes
                .origin_ports
                .iter()
                .cloned()
                .zip(instance.port_consolidation_cost.iter().copied())
                .collect(),
        },
        parameters: ParameterSection {
            schema_version: SCHEMA_VERSION.to_string(),
            land_container_volume: instance.params.land_container_volume,
            sea_container_volume: instance.params.sea_container_volume,
            nvocc_cap: instance.params.nvocc_cap,
            dimensional_factor: instance.params.dimensional_factor,
            penalty: instance.params.penalty,
        },
    }
}

/// Canonical JSON text: maps sorted by key, pretty-printed, trailing newline.
pub fn instance_to_string(instance: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(&to_file(instance)).expect("instance serializes");
    text.push('\n');
    text
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, LoadError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    instance_from_str(&text)
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, instance_to_string(instance))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn small_table() -> LandCostTable {
        LandCostTable {
            distance_breaks: vec![200.0, 1000.0],
            volume_breaks: vec![2.0, 5.0, 10.0],
            cost: vec![vec![10.0, 20.0, 30.0], vec![20.0, 35.0, 50.0]],
        }
    }

    /// Two branches, one origin port, one destination.
    pub fn two_branch() -> Instance {
        let nodes = NodeSets {
            branches: vec!["B1".into(), "B2".into()],
            origin_ports: vec!["S1".into()],
            destination_ports: vec!["T1".into()],
        };
        let params = Parameters { land_container_volume: 10.0, ..Parameters::default() };
        let mut inst = Instance::empty(nodes, small_table(), params);
        inst.demand = vec![vec![3.0], vec![4.0]];
        inst.branch_distance = vec![vec![0.0, 50.0], vec![50.0, 0.0]];
        inst.port_distance = vec![vec![300.0], vec![250.0]];
        inst.sea_rates[0][0] = Some(SeaRate::both(500.0, 20.0));
        inst.setup_cost = vec![5.0, 5.0];
        inst.hub_consolidation_cost = vec![1.0, 1.0];
        inst.port_consolidation_cost = vec![2.0];
        inst
    }
}

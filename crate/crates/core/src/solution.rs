//! Decision encoding, feasibility checking and the six-term cost evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostError, VOLUME_EPS};
use crate::network::Instance;
use crate::pricing::{CostMode, Pricer};

/// Tolerance on direct fractions when deciding "fully direct".
pub const FRACTION_EPS: f64 = 1e-9;

/// A complete set of routing decisions.
///
/// `hub_choice[b][s]` is the set of hubs used on `b → s`. A well-formed
/// solution has at most one; the set form lets merged heuristic output that
/// breaks the one-hub rule be represented and reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Origin port per `(b, t)`; `Some` exactly on positive-demand pairs.
    pub port_choice: Vec<Vec<Option<usize>>>,
    pub hubs: BTreeSet<usize>,
    /// Share of the `b → s` volume shipped directly.
    pub direct_fraction: Vec<Vec<f64>>,
    pub hub_choice: Vec<Vec<BTreeSet<usize>>>,
}

impl Solution {
    /// All-direct solution with the given port per `(b, t)`.
    pub fn all_direct(instance: &Instance, port_choice: Vec<Vec<Option<usize>>>) -> Self {
        let nb = instance.num_branches();
        let ns = instance.num_origin_ports();
        Self {
            port_choice,
            hubs: BTreeSet::new(),
            direct_fraction: vec![vec![1.0; ns]; nb],
            hub_choice: vec![vec![BTreeSet::new(); ns]; nb],
        }
    }

    /// The single hub on `b → s`, if exactly one is chosen.
    pub fn hub_of(&self, b: usize, s: usize) -> Option<usize> {
        let set = &self.hub_choice[b][s];
        if set.len() == 1 {
            set.iter().next().copied()
        } else {
            None
        }
    }

    /// Routes `b → s` through `hub` with the given direct share.
    pub fn route_via(&mut self, b: usize, s: usize, hub: usize, direct_fraction: f64) {
        self.hub_choice[b][s] = BTreeSet::from([hub]);
        self.direct_fraction[b][s] = direct_fraction;
    }

    pub fn route_direct(&mut self, b: usize, s: usize) {
        self.hub_choice[b][s].clear();
        self.direct_fraction[b][s] = 1.0;
    }

    /// Volumes `v_bt` of the shipments assigned to port `s`, in destination order.
    pub fn pair_shipments(&self, instance: &Instance, b: usize, s: usize) -> Vec<f64> {
        (0..instance.num_destinations())
            .filter(|&t| self.port_choice[b][t] == Some(s))
            .map(|t| instance.demand[b][t])
            .collect()
    }

    /// `V_bs`: total volume from `b` assigned to port `s`.
    pub fn pair_volume(&self, instance: &Instance, b: usize, s: usize) -> f64 {
        self.pair_shipments(instance, b, s).iter().sum()
    }

    /// Approximate equality: identical discrete decisions, fractions within `tol`.
    pub fn approx_eq(&self, other: &Solution, tol: f64) -> bool {
        self.port_choice == other.port_choice
            && self.hubs == other.hubs
            && self.hub_choice == other.hub_choice
            && self
                .direct_fraction
                .iter()
                .flatten()
                .zip(other.direct_fraction.iter().flatten())
                .all(|(a, b)| (a - b).abs() <= tol)
            && self.direct_fraction.len() == other.direct_fraction.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    C7,
    C8,
    C9,
    C10,
    C11,
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintViolation {
    pub constraint: ConstraintId,
    /// Node ids identifying the offending index tuple.
    pub indices: Vec<String>,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<ConstraintViolation>,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, constraint: ConstraintId) -> usize {
        self.violations.iter().filter(|v| v.constraint == constraint).count()
    }

    fn push(&mut self, constraint: ConstraintId, indices: Vec<String>, description: impl Into<String>) {
        self.violations.push(ConstraintViolation { constraint, indices, description: description.into() });
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible");
        }
        for v in &self.violations {
            writeln!(f, "{} [{}]: {}", v.constraint, v.indices.join(", "), v.description)?;
        }
        Ok(())
    }
}

/// The solution does not fit the instance's index space.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("solution does not match the instance: {0}")]
pub struct StructureError(pub String);

fn check_structure(instance: &Instance, sol: &Solution) -> Result<(), StructureError> {
    let nb = instance.num_branches();
    let ns = instance.num_origin_ports();
    let nt = instance.num_destinations();
    let shape =
        |name: &str, ok: bool| if ok { Ok(()) } else { Err(StructureError(format!("`{name}` has the wrong shape"))) };
    shape("port_choice", sol.port_choice.len() == nb && sol.port_choice.iter().all(|r| r.len() == nt))?;
    shape("direct_fraction", sol.direct_fraction.len() == nb && sol.direct_fraction.iter().all(|r| r.len() == ns))?;
    shape("hub_choice", sol.hub_choice.len() == nb && sol.hub_choice.iter().all(|r| r.len() == ns))?;
    if let Some(s) = sol.port_choice.iter().flatten().flatten().find(|&&s| s >= ns) {
        return Err(StructureError(format!("origin port index {s} out of range")));
    }
    if let Some(h) = sol.hubs.iter().chain(sol.hub_choice.iter().flatten().flatten()).find(|&&h| h >= nb) {
        return Err(StructureError(format!("hub index {h} out of range")));
    }
    Ok(())
}

/// Checks the port, hub and routing constraints.
pub fn check_feasibility(instance: &Instance, sol: &Solution) -> Result<ViolationReport, StructureError> {
    use ConstraintId::*;
    check_structure(instance, sol)?;
    let mut report = ViolationReport::default();
    let bid = |b: usize| instance.branch_id(b).to_string();
    let sid = |s: usize| instance.port_id(s).to_string();
    let tid = |t: usize| instance.destination_id(t).to_string();

    for b in 0..instance.num_branches() {
        for t in 0..instance.num_destinations() {
            let positive = instance.demand[b][t] > 0.0;
            match (positive, sol.port_choice[b][t]) {
                (true, None) => {
                    report.push(C7, vec![bid(b), tid(t)], "no origin port chosen for a relation with demand")
                }
                (false, Some(s)) => {
                    report.push(C7, vec![bid(b), tid(t), sid(s)], "origin port chosen for a relation without demand")
                }
                (true, Some(s)) if instance.sea_rates[s][t].is_none() => report.push(
                    C7,
                    vec![bid(b), tid(t), sid(s)],
                    "chosen origin port has no sea rate to the destination",
                ),
                _ => {}
            }
        }
    }

    for b in 0..instance.num_branches() {
        for s in 0..instance.num_origin_ports() {
            let hubs = &sol.hub_choice[b][s];
            let y = sol.direct_fraction[b][s];
            if hubs.len() > 1 {
                let mut idx = vec![bid(b), sid(s)];
                idx.extend(hubs.iter().map(|&h| bid(h)));
                report.push(C8, idx, format!("{} hubs used on one branch → port connection", hubs.len()));
            }
            if !(0.0..=1.0).contains(&y) {
                report.push(C9, vec![bid(b), sid(s)], format!("direct fraction {y} outside [0, 1]"));
            } else if y < 1.0 - FRACTION_EPS && hubs.is_empty() {
                report.push(C9, vec![bid(b), sid(s)], format!("direct fraction {y} < 1 but no hub chosen"));
            }
            for &h in hubs {
                if !sol.hubs.contains(&h) {
                    report.push(C10, vec![bid(b), sid(s), bid(h)], "routed through a branch that is not a hub");
                }
            }
            if sol.hubs.contains(&b) && (y < 1.0 - FRACTION_EPS || !hubs.is_empty()) {
                let mut idx = vec![bid(b), sid(s)];
                idx.extend(hubs.iter().map(|&h| bid(h)));
                report.push(C11, idx, "a hub must ship its own volume directly");
            }
        }
    }
    Ok(report)
}

/// Arc and node volumes induced by a (structurally sound) solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Flows {
    /// `V_bs`.
    pub pair_volume: Vec<Vec<f64>>,
    /// Direct share of `V_bs`.
    pub direct: Vec<Vec<f64>>,
    /// Share of `V_bs` sent to the hub of `(b, s)`.
    pub routed: Vec<Vec<f64>>,
    /// Load on the `b → s` arc: own direct volume plus hub inflow for `s`.
    pub port_arc: Vec<Vec<f64>>,
    /// Load on the `b → h` arc.
    pub hub_arc: Vec<Vec<f64>>,
    pub hub_throughput: Vec<f64>,
    /// Load on sea relation `s → t`.
    pub sea: Vec<Vec<f64>>,
}

impl Flows {
    pub fn compute(instance: &Instance, sol: &Solution) -> Flows {
        let nb = instance.num_branches();
        let ns = instance.num_origin_ports();
        let nt = instance.num_destinations();
        let mut pair_volume = vec![vec![0.0; ns]; nb];
        let mut sea = vec![vec![0.0; nt]; ns];
        for b in 0..nb {
            for t in 0..nt {
                if let Some(s) = sol.port_choice[b][t] {
                    let v = instance.demand[b][t].max(0.0);
                    pair_volume[b][s] += v;
                    sea[s][t] += v;
                }
            }
        }
        let mut direct = vec![vec![0.0; ns]; nb];
        let mut routed = vec![vec![0.0; ns]; nb];
        let mut port_arc = vec![vec![0.0; ns]; nb];
        let mut hub_arc = vec![vec![0.0; nb]; nb];
        let mut hub_throughput = vec![0.0; nb];
        for b in 0..nb {
            for s in 0..ns {
                let total = pair_volume[b][s];
                match sol.hub_of(b, s) {
                    Some(_) if total > 0.0 => {
                        let d = sol.direct_fraction[b][s] * total;
                        direct[b][s] = d;
                        routed[b][s] = total - d;
                    }
                    _ => direct[b][s] = total,
                }
                port_arc[b][s] += direct[b][s];
            }
        }
        for b in 0..nb {
            for s in 0..ns {
                if let Some(h) = sol.hub_of(b, s) {
                    let w = routed[b][s];
                    hub_arc[b][h] += w;
                    hub_throughput[h] += w;
                    port_arc[h][s] += w;
                }
            }
        }
        Flows { pair_volume, direct, routed, port_arc, hub_arc, hub_throughput, sea }
    }

    /// Total volume passing through any hub.
    pub fn hub_volume(&self) -> f64 {
        self.hub_throughput.iter().sum()
    }
}

/// The six objective terms and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub setup: f64,
    pub hub_consolidation: f64,
    pub port_consolidation: f64,
    pub land_branch_to_port: f64,
    pub land_branch_to_hub: f64,
    pub sea: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn terms(&self) -> [(&'static str, f64); 6] {
        [
            ("setup", self.setup),
            ("hub_consolidation", self.hub_consolidation),
            ("port_consolidation", self.port_consolidation),
            ("land_branch_to_port", self.land_branch_to_port),
            ("land_branch_to_hub", self.land_branch_to_hub),
            ("sea", self.sea),
        ]
    }

    fn from_terms(
        setup: f64,
        hub_consolidation: f64,
        port_consolidation: f64,
        land_branch_to_port: f64,
        land_branch_to_hub: f64,
        sea: f64,
    ) -> Self {
        // Empty float sums are -0.0; normalize so reports never show it.
        let [setup, hub_consolidation, port_consolidation, land_branch_to_port, land_branch_to_hub, sea] =
            [setup, hub_consolidation, port_consolidation, land_branch_to_port, land_branch_to_hub, sea]
                .map(|x| x + 0.0);
        let total = setup + hub_consolidation + port_consolidation + land_branch_to_port + land_branch_to_hub + sea;
        Self { setup, hub_consolidation, port_consolidation, land_branch_to_port, land_branch_to_hub, sea, total }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("solution is infeasible:\n{0}")]
    Infeasible(ViolationReport),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Cost of a feasible solution under the given land pricing mode.
pub fn evaluate_cost(instance: &Instance, sol: &Solution, mode: CostMode) -> Result<CostBreakdown, EvaluateError> {
    let report = check_feasibility(instance, sol)?;
    if !report.is_feasible() {
        return Err(EvaluateError::Infeasible(report));
    }
    let pricer = Pricer::new(instance)?;
    Ok(evaluate_with(&pricer, sol, mode))
}

/// Cost evaluation without the feasibility check, for solvers that build
/// feasible solutions by construction.
pub fn evaluate_with(pricer: &Pricer<'_>, sol: &Solution, mode: CostMode) -> CostBreakdown {
    let instance = pricer.instance;
    let flows = Flows::compute(instance, sol);
    let nb = instance.num_branches();
    let ns = instance.num_origin_ports();

    let setup = sol.hubs.iter().map(|&h| instance.setup_cost[h]).sum();
    let hub_consolidation = (0..nb).map(|h| instance.hub_consolidation_cost[h] * flows.hub_throughput[h]).sum();
    let port_consolidation = (0..ns)
        .map(|s| instance.port_consolidation_cost[s] * (0..nb).map(|b| flows.pair_volume[b][s]).sum::<f64>())
        .sum();
    let mut land_port = 0.0;
    let mut land_hub = 0.0;
    for b in 0..nb {
        for s in 0..ns {
            land_port += pricer.port_arc(b, s, flows.port_arc[b][s], mode);
        }
        for h in 0..nb {
            if flows.hub_arc[b][h] > 0.0 {
                land_hub += pricer.branch_arc(b, h, flows.hub_arc[b][h], mode);
            }
        }
    }
    let mut sea = 0.0;
    for (s, row) in flows.sea.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            sea += pricer.sea(s, t, v);
        }
    }
    CostBreakdown::from_terms(setup, hub_consolidation, port_consolidation, land_port, land_hub, sea)
}

/// Candidate direct fractions for a connection carrying `total` m³.
///
/// Contains 0 and 1, every fraction that puts the direct volume or the routed
/// volume exactly on a breakpoint of the approximated tariff (any number of
/// full trucks plus `v(i)`), every fraction that sends a subset of whole
/// shipments directly, and the caller's extra fractions. Sorted ascending.
pub fn split_candidates(breakpoints: &[f64], full: f64, total: f64, shipments: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0, 1.0];
    if total <= VOLUME_EPS {
        return vec![1.0];
    }
    let mut trucks = 0.0;
    while trucks * full < total {
        for &bp in std::iter::once(&0.0).chain(breakpoints) {
            let vol = trucks * full + bp;
            if vol > VOLUME_EPS && vol < total - VOLUME_EPS {
                out.push(vol / total);
                out.push(1.0 - vol / total);
            }
        }
        trucks += 1.0;
    }
    if shipments.len() > 1 && shipments.len() <= 12 {
        for mask in 1..(1u32 << shipments.len()) - 1 {
            let direct: f64 = shipments.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, v)| *v).sum();
            out.push(direct / total);
        }
    }
    out.extend(extra.iter().copied().filter(|y| (0.0..=1.0).contains(y)));
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteEntry {
    direct_fraction: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    hubs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    port_choice: BTreeMap<String, BTreeMap<String, String>>,
    hubs: Vec<String>,
    #[serde(default)]
    routing: BTreeMap<String, BTreeMap<String, RouteEntry>>,
}

#[derive(Debug, Error)]
pub enum SolutionFileError {
    #[error("solution file is malformed: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("solution references unknown node `{0}`")]
    UnknownNode(String),
}

/// Canonical JSON text of a solution, keyed by node ids.
pub fn solution_to_string(instance: &Instance, sol: &Solution) -> String {
    let mut port_choice: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for (b, row) in sol.port_choice.iter().enumerate() {
        for (t, s) in row.iter().enumerate() {
            if let Some(s) = s {
                port_choice
                    .entry(instance.branch_id(b).into())
                    .or_default()
                    .insert(instance.destination_id(t).into(), instance.port_id(*s).into());
            }
        }
    }
    let mut routing: BTreeMap<String, BTreeMap<String, RouteEntry>> = BTreeMap::new();
    for b in 0..instance.num_branches() {
        for s in 0..instance.num_origin_ports() {
            let y = sol.direct_fraction[b][s];
            let hubs = &sol.hub_choice[b][s];
            if y != 1.0 || !hubs.is_empty() {
                routing.entry(instance.branch_id(b).into()).or_default().insert(
                    instance.port_id(s).into(),
                    RouteEntry {
                        direct_fraction: y,
                        hubs: hubs.iter().map(|&h| instance.branch_id(h).to_string()).collect(),
                    },
                );
            }
        }
    }
    let file = SolutionFile {
        port_choice,
        hubs: sol.hubs.iter().map(|&h| instance.branch_id(h).to_string()).collect(),
        routing,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("solution serializes");
    text.push('\n');
    text
}

pub fn solution_from_str(instance: &Instance, text: &str) -> Result<Solution, SolutionFileError> {
    let file: SolutionFile = serde_json::from_str(text)?;
    let find = |ids: &[String], id: &str| -> Result<usize, SolutionFileError> {
        ids.iter().position(|x| x == id).ok_or_else(|| SolutionFileError::UnknownNode(id.to_string()))
    };
    let nodes = &instance.nodes;
    let mut sol =
        Solution::all_direct(instance, vec![vec![None; instance.num_destinations()]; instance.num_branches()]);
    for (b, row) in &file.port_choice {
        let b = find(&nodes.branches, b)?;
        for (t, s) in row {
            let t = find(&nodes.destination_ports, t)?;
            sol.port_choice[b][t] = Some(find(&nodes.origin_ports, s)?);
        }
    }
    for h in &file.hubs {
        sol.hubs.insert(find(&nodes.branches, h)?);
    }
    for (b, row) in &file.routing {
        let b = find(&nodes.branches, b)?;
        for (s, entry) in row {
            let s = find(&nodes.origin_ports, s)?;
            sol.direct_fraction[b][s] = entry.direct_fraction;
            for h in &entry.hubs {
                sol.hub_choice[b][s].insert(find(&nodes.branches, h)?);
            }
        }
    }
    Ok(sol)
}

/// Per-term comparison of two evaluated solutions (`b` relative to `a`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: CostBreakdown,
    pub b: CostBreakdown,
    /// `b − a` per term.
    pub delta: CostBreakdown,
    /// `(a.total − b.total) / a.total · 100`.
    pub improvement_percent: f64,
    /// Share of total shipped volume routed through hubs, in percent.
    pub hub_share_a_percent: f64,
    pub hub_share_b_percent: f64,
}

/// Percentage of total shipped volume that passes through a hub.
pub fn hub_volume_share(instance: &Instance, sol: &Solution) -> f64 {
    let flows = Flows::compute(instance, sol);
    let total: f64 = flows.pair_volume.iter().flatten().sum();
    if total > 0.0 {
        100.0 * flows.hub_volume() / total
    } else {
        0.0
    }
}

pub fn compare(instance: &Instance, a: &Solution, b: &Solution, mode: CostMode) -> Result<Comparison, EvaluateError> {
    let ca = evaluate_cost(instance, a, mode)?;
    let cb = evaluate_cost(instance, b, mode)?;
    let delta = CostBreakdown {
        setup: cb.setup - ca.setup,
        hub_consolidation: cb.hub_consolidation - ca.hub_consolidation,
        port_consolidation: cb.port_consolidation - ca.port_consolidation,
        land_branch_to_port: cb.land_branch_to_port - ca.land_branch_to_port,
        land_branch_to_hub: cb.land_branch_to_hub - ca.land_branch_to_hub,
        sea: cb.sea - ca.sea,
        total: cb.total - ca.total,
    };
    let improvement_percent = if ca.total > 0.0 { 100.0 * (ca.total - cb.total) / ca.total } else { 0.0 };
    Ok(Comparison {
        a: ca,
        b: cb,
        delta,
        improvement_percent,
        hub_share_a_percent: hub_volume_share(instance, a),
        hub_share_b_percent: hub_volume_share(instance, b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{land_cost_exact, sea_cost};
    use crate::network::fixtures::two_branch;

    fn direct(inst: &Instance) -> Solution {
        Solution::all_direct(inst, vec![vec![Some(0)], vec![Some(0)]])
    }

    #[test]
    fn all_direct_is_feasible() {
        let inst = two_branch();
        assert!(check_feasibility(&inst, &direct(&inst)).unwrap().is_feasible());
    }

    #[test]
    fn hub_relaying_violates_c11() {
        let inst = two_branch();
        let mut sol = direct(&inst);
        sol.hubs = BTreeSet::from([0, 1]);
        sol.route_via(0, 0, 1, 0.0);
        let report = check_feasibility(&inst, &sol).unwrap();
        assert_eq!(report.count(ConstraintId::C11), 1);
    }

    #[test]
    fn constraint_violations_are_identified() {
        let inst = two_branch();
        let mut sol = direct(&inst);
        sol.port_choice[0][0] = None;
        sol.direct_fraction[1][0] = 0.5;
        let report = check_feasibility(&inst, &sol).unwrap();
        assert_eq!(report.count(ConstraintId::C7), 1);
        assert_eq!(report.count(ConstraintId::C9), 1);

        let mut sol = direct(&inst);
        sol.route_via(1, 0, 0, 0.0);
        assert_eq!(check_feasibility(&inst, &sol).unwrap().count(ConstraintId::C10), 1);

        let mut sol = direct(&inst);
        sol.hubs = BTreeSet::from([0, 1]);
        sol.hub_choice[0][0] = BTreeSet::from([0, 1]);
        sol.direct_fraction[0][0] = 0.0;
        assert!(check_feasibility(&inst, &sol).unwrap().count(ConstraintId::C8) >= 1);
    }

    #[test]
    fn unknown_index_is_a_structure_error() {
        let inst = two_branch();
        let mut sol = direct(&inst);
        sol.port_choice[0][0] = Some(7);
        assert!(check_feasibility(&inst, &sol).is_err());
    }

    #[test]
    fn zero_demand_costs_nothing() {
        let mut inst = two_branch();
        inst.demand = vec![vec![0.0], vec![0.0]];
        let sol = Solution::all_direct(&inst, vec![vec![None], vec![None]]);
        for mode in [CostMode::Exact, CostMode::Approx] {
            assert_eq!(evaluate_cost(&inst, &sol, mode).unwrap(), CostBreakdown::default());
        }
    }

    #[test]
    fn single_direct_shipment_hand_evaluation() {
        let mut inst = two_branch();
        inst.demand = vec![vec![5.0], vec![0.0]];
        let sol = Solution::all_direct(&inst, vec![vec![Some(0)], vec![None]]);
        let c = evaluate_cost(&inst, &sol, CostMode::Exact).unwrap();
        let rate = inst.sea_rates[0][0].unwrap();
        let expected = land_cost_exact(&inst.land_costs, 300.0, 5.0).unwrap()
            + 2.0 * 5.0
            + sea_cost(&rate, 5.0, 55.0, 40.0, 1e8).cost;
        assert!((c.total - expected).abs() < 1e-9);
        // 300 km is in the second band: C(5) = 35; sea 5·20 = 100.
        assert!((c.total - (35.0 + 10.0 + 100.0)).abs() < 1e-9);
    }

    #[test]
    fn shipment_via_hub_hand_evaluation() {
        let mut inst = two_branch();
        inst.demand = vec![vec![5.0], vec![0.0]];
        let mut sol = Solution::all_direct(&inst, vec![vec![Some(0)], vec![None]]);
        sol.hubs.insert(1);
        sol.route_via(0, 0, 1, 0.0);
        let c = evaluate_cost(&inst, &sol, CostMode::Exact).unwrap();
        // e = 5, f·5 = 5, B1→B2 (50 km) C(5) = 20, B2→S1 (250 km) C(5) = 35,
        // g·5 = 10, sea 100.
        assert!((c.setup - 5.0).abs() < 1e-12);
        assert!((c.hub_consolidation - 5.0).abs() < 1e-12);
        assert!((c.land_branch_to_hub - 20.0).abs() < 1e-12);
        assert!((c.land_branch_to_port - 35.0).abs() < 1e-12);
        assert!((c.total - 175.0).abs() < 1e-9);
    }

    #[test]
    fn unused_hub_costs_its_setup() {
        let inst = two_branch();
        let sol = direct(&inst);
        let mut with_hub = sol.clone();
        with_hub.hubs.insert(1);
        let a = evaluate_cost(&inst, &sol, CostMode::Exact).unwrap();
        let b = evaluate_cost(&inst, &with_hub, CostMode::Exact).unwrap();
        assert!((b.total - a.total - inst.setup_cost[1]).abs() < 1e-9);
    }

    #[test]
    fn flows_conserve_port_volume() {
        let inst = two_branch();
        let mut sol = direct(&inst);
        sol.hubs.insert(1);
        sol.route_via(0, 0, 1, 0.25);
        let f = Flows::compute(&inst, &sol);
        let into_port: f64 = (0..2).map(|b| f.port_arc[b][0]).sum();
        assert!((into_port - 7.0).abs() < 1e-9);
        assert!((f.sea[0][0] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn candidates_include_breakpoints_and_subsets() {
        let c = split_candidates(&[1.0, 2.0, 5.0, 10.0], 10.0, 4.0, &[1.5, 2.5], &[]);
        for y in [0.0, 1.0, 0.25, 0.5, 0.75, 1.5 / 4.0, 2.5 / 4.0] {
            assert!(c.iter().any(|x| (x - y).abs() < 1e-12), "missing {y} in {c:?}");
        }
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(split_candidates(&[1.0], 10.0, 0.0, &[], &[]), vec![1.0]);
    }

    #[test]
    fn solution_file_round_trip() {
        let inst = two_branch();
        let mut sol = direct(&inst);
        sol.hubs.insert(1);
        sol.route_via(0, 0, 1, 0.25);
        let text = solution_to_string(&inst, &sol);
        assert_eq!(solution_from_str(&inst, &text).unwrap(), sol);
    }
}

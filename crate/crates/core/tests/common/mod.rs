//! Shared fixtures and reference implementations for the integration tests.
#![allow(dead_code)]

pub mod tariffs;

use std::collections::BTreeSet;
use std::path::PathBuf;

use hublocate::gen::{GenConfig, Profile};
use hublocate::milp::MilpModel;
use hublocate::solution::evaluate_cost;
use hublocate::{CostMode, Instance, LandCostTable, NodeSets, Parameters, SeaRate, Solution};
use rand::Rng;

/// Desk-scale generated instances shared by the oracle consistency and
/// dominance checks. Every size stays within 5 branches, 3 ports and 3
/// destinations.
pub fn desk_configs() -> Vec<GenConfig> {
    let sizes = [
        (3, 2, 2, 0),
        (3, 2, 2, 1),
        (4, 2, 2, 0),
        (4, 2, 2, 1),
        (4, 3, 2, 0),
        (5, 2, 2, 0),
        (5, 3, 2, 0),
        (5, 3, 3, 1),
    ];
    let mut out = Vec::new();
    for profile in [Profile::Uniform, Profile::ConsolidationFavorable, Profile::NvoccOnlyMix] {
        for (branches, origin_ports, destinations, seed) in sizes {
            out.push(GenConfig { seed, branches, origin_ports, destinations, profile, ..GenConfig::default() });
        }
    }
    out
}

pub fn label(cfg: &GenConfig) -> String {
    format!("{}-{}x{}x{}-seed{}", cfg.profile, cfg.branches, cfg.origin_ports, cfg.destinations, cfg.seed)
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Two distance bands (short below 100 km, long up to 1000 km) and a truck
/// of 80 m³ with breaks at 8, 40 and 80.
pub fn crafted_table() -> LandCostTable {
    LandCostTable {
        distance_breaks: vec![100.0, 1000.0],
        volume_breaks: vec![8.0, 40.0, 80.0],
        cost: vec![vec![50.0, 60.0, 70.0], vec![500.0, 600.0, 700.0]],
    }
}

/// Three branches close together and far from the single origin port.
/// `B2` only ships to `T1`, `B3` only to `T2`, and `B1` ships to both, so
/// per destination `B1` is best served through a different hub: the plain
/// merge gives `B1 → S1` two hubs.
pub fn crafted_c8() -> Instance {
    let nodes = NodeSets { branches: ids("B", 3), origin_ports: ids("S", 1), destination_ports: ids("T", 2) };
    let mut inst = Instance::empty(nodes, crafted_table(), Parameters::default());
    inst.demand = vec![vec![10.0, 10.0], vec![20.0, 0.0], vec![0.0, 20.0]];
    inst.branch_distance = vec![vec![0.0, 10.0, 10.0], vec![10.0, 0.0, 20.0], vec![10.0, 20.0, 0.0]];
    inst.port_distance = vec![vec![600.0], vec![600.0], vec![600.0]];
    inst.sea_rates[0] = vec![Some(SeaRate::both(1500.0, 60.0)), Some(SeaRate::both(1500.0, 60.0))];
    // B1 is never worth opening.
    inst.setup_cost = vec![100_000.0, 20.0, 20.0];
    inst.hub_consolidation_cost = vec![1.0, 1.0, 1.0];
    inst.port_consolidation_cost = vec![5.0];
    inst
}

/// Three branches, two ports, one destination. `B3` sits next to `B1` and
/// `B2` with a cheap hub, and all three are far from both ports.
pub fn crafted_consolidation() -> Instance {
    let nodes = NodeSets { branches: ids("B", 3), origin_ports: ids("S", 2), destination_ports: ids("T", 1) };
    let mut inst = Instance::empty(nodes, crafted_table(), Parameters::default());
    inst.demand = vec![vec![12.0], vec![15.0], vec![5.0]];
    inst.branch_distance = vec![vec![0.0, 30.0, 20.0], vec![30.0, 0.0, 20.0], vec![20.0, 20.0, 0.0]];
    inst.port_distance = vec![vec![700.0, 800.0], vec![700.0, 800.0], vec![690.0, 790.0]];
    inst.sea_rates = vec![vec![Some(SeaRate::both(1500.0, 60.0))], vec![Some(SeaRate::both(1400.0, 55.0))]];
    inst.setup_cost = vec![400.0, 400.0, 30.0];
    inst.hub_consolidation_cost = vec![2.0, 2.0, 0.5];
    inst.port_consolidation_cost = vec![4.0, 6.0];
    inst
}

/// Breakpoints of the approximated tariff: a tenth of a truck, then every
/// volume break above it.
fn breakpoints(table: &LandCostTable) -> Vec<f64> {
    let full = *table.volume_breaks.last().unwrap();
    let mut out = vec![full / 10.0];
    out.extend(table.volume_breaks.iter().copied().filter(|&b| b > full / 10.0 + 1e-9));
    out
}

/// Direct fractions below one worth trying on a connection of `shipments`:
/// zero, every fraction putting the direct or routed volume on a breakpoint
/// (after any number of full trucks), and every whole-shipment subset.
fn fractions(table: &LandCostTable, shipments: &[f64]) -> Vec<f64> {
    let total: f64 = shipments.iter().sum();
    let full = *table.volume_breaks.last().unwrap();
    let mut out = vec![0.0];
    let mut n = 0.0;
    while n * full < total {
        for bp in std::iter::once(0.0).chain(breakpoints(table)) {
            let vol = n * full + bp;
            if vol > 1e-9 && vol < total - 1e-9 {
                out.push(vol / total);
                out.push(1.0 - vol / total);
            }
        }
        n += 1.0;
    }
    for mask in 1..(1usize << shipments.len()) - 1 {
        let direct: f64 = shipments.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v).sum();
        out.push(direct / total);
    }
    out.retain(|&y| y < 1.0 - 1e-12);
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    out
}

/// Calls `f` with every combination of one index per slot.
fn for_each_combination(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0; sizes.len()];
    if sizes.contains(&0) {
        return;
    }
    loop {
        f(&idx);
        let mut k = 0;
        loop {
            if k == sizes.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Plain exhaustive search scored by `evaluate_cost` in approx mode: every
/// port assignment, every hub set, every hub per connection and every
/// candidate direct fraction. Slow; only for very small instances.
pub fn brute_force(inst: &Instance) -> (Solution, f64) {
    let relations = inst.relations();
    let port_options: Vec<Vec<usize>> = relations.iter().map(|&(_, t)| inst.usable_ports(t)).collect();
    let nb = inst.num_branches();
    let ns = inst.num_origin_ports();
    let mut best: Option<(Solution, f64)> = None;
    for_each_combination(&port_options.iter().map(Vec::len).collect::<Vec<_>>(), |z| {
        let mut choice = vec![vec![None; inst.num_destinations()]; nb];
        for (k, &(b, t)) in relations.iter().enumerate() {
            choice[b][t] = Some(port_options[k][z[k]]);
        }
        let base = Solution::all_direct(inst, choice);
        for mask in 0..(1usize << nb) {
            let hubs: BTreeSet<usize> = (0..nb).filter(|b| mask >> b & 1 == 1).collect();
            let pairs: Vec<(usize, usize)> = (0..nb)
                .filter(|b| !hubs.contains(b))
                .flat_map(|b| (0..ns).map(move |s| (b, s)))
                .filter(|&(b, s)| base.pair_volume(inst, b, s) > 0.0)
                .collect();
            let hub_options: Vec<Vec<Option<usize>>> = pairs
                .iter()
                .map(|&(b, _)| {
                    std::iter::once(None).chain(hubs.iter().filter(|&&h| h != b).map(|&h| Some(h))).collect()
                })
                .collect();
            for_each_combination(&hub_options.iter().map(Vec::len).collect::<Vec<_>>(), |hc| {
                let routed: Vec<(usize, usize, usize)> = pairs
                    .iter()
                    .zip(hc)
                    .enumerate()
                    .filter_map(|(i, (&(b, s), &k))| hub_options[i][k].map(|h| (b, s, h)))
                    .collect();
                let splits: Vec<Vec<f64>> = routed
                    .iter()
                    .map(|&(b, s, _)| fractions(&inst.land_costs, &base.pair_shipments(inst, b, s)))
                    .collect();
                for_each_combination(&splits.iter().map(Vec::len).collect::<Vec<_>>(), |ys| {
                    let mut sol = base.clone();
                    sol.hubs = hubs.clone();
                    for (k, &(b, s, h)) in routed.iter().enumerate() {
                        sol.route_via(b, s, h, splits[k][ys[k]]);
                    }
                    let cost = evaluate_cost(inst, &sol, CostMode::Approx).expect("feasible by construction").total;
                    if best.as_ref().is_none_or(|(_, c)| cost < c - 1e-9 * c.abs().max(1.0)) {
                        best = Some((sol, cost));
                    }
                });
            });
        }
    });
    best.expect("at least one plan")
}

/// A random plan satisfying every constraint: random ports, a random hub
/// set, and each other connection sent directly or split over a random hub
/// with a random direct share.
pub fn random_feasible(inst: &Instance, rng: &mut impl Rng) -> Solution {
    let nb = inst.num_branches();
    let mut choice = vec![vec![None; inst.num_destinations()]; nb];
    for (b, t) in inst.relations() {
        let ports = inst.usable_ports(t);
        choice[b][t] = Some(ports[rng.gen_range(0..ports.len())]);
    }
    let mut sol = Solution::all_direct(inst, choice);
    sol.hubs = (0..nb).filter(|_| rng.gen_bool(0.4)).collect();
    let plain: Vec<usize> = (0..nb).filter(|b| !sol.hubs.contains(b)).collect();
    for b in plain {
        for s in 0..inst.num_origin_ports() {
            let others: Vec<usize> = sol.hubs.iter().copied().filter(|&h| h != b).collect();
            if others.is_empty() || sol.pair_volume(inst, b, s) <= 0.0 || rng.gen_bool(0.4) {
                continue;
            }
            let h = others[rng.gen_range(0..others.len())];
            let y = match rng.gen_range(0..4) {
                0 => 0.0,
                _ => rng.gen_range(0.0..1.0),
            };
            sol.route_via(b, s, h, y);
        }
    }
    sol
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Three branches, two ports and two destinations with demand on every
/// pair, both sea tariffs everywhere, and a tariff with breakpoints
/// 8, 20, 40 and 80 (so `j = 3`).
pub fn toy_full_demand() -> Instance {
    let table = LandCostTable {
        distance_breaks: vec![100.0, 1000.0],
        volume_breaks: vec![4.0, 8.0, 20.0, 40.0, 80.0],
        cost: vec![vec![30.0, 45.0, 55.0, 62.0, 70.0], vec![300.0, 420.0, 510.0, 600.0, 700.0]],
    };
    let nodes = NodeSets { branches: ids("B", 3), origin_ports: ids("S", 2), destination_ports: ids("T", 2) };
    let mut inst = Instance::empty(nodes, table, Parameters::default());
    inst.demand = vec![vec![3.5, 12.0], vec![9.25, 2.0], vec![30.0, 6.5]];
    inst.branch_distance = vec![vec![0.0, 40.0, 70.0], vec![40.0, 0.0, 55.0], vec![70.0, 55.0, 0.0]];
    inst.port_distance = vec![vec![450.0, 620.0], vec![480.0, 590.0], vec![510.0, 560.0]];
    inst.sea_rates = vec![
        vec![Some(SeaRate::both(1500.0, 60.0)), Some(SeaRate::both(1800.0, 70.0))],
        vec![Some(SeaRate::both(1450.0, 62.5)), Some(SeaRate::both(1750.0, 66.0))],
    ];
    inst.setup_cost = vec![120.0, 80.0, 150.0];
    inst.hub_consolidation_cost = vec![2.5, 1.75, 3.0];
    inst.port_consolidation_cost = vec![4.0, 5.5];
    inst
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against the stored file; `HUBLOCATE_BLESS=1` rewrites it.
pub fn check_golden(name: &str, text: &str) {
    let path = golden(name);
    if std::env::var_os("HUBLOCATE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, text).unwrap();
    }
    let stored = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(stored == text, "{name} differs from the golden file");
}

pub fn count(model: &MilpModel, prefix: &str) -> usize {
    model.variables().iter().filter(|v| v.name.starts_with(prefix)).count()
}

pub fn rows(model: &MilpModel, prefix: &str) -> usize {
    model.constraints().iter().filter(|c| c.name.starts_with(prefix)).count()
}

/// Family-by-family counts: `(variables, constraints)`.
pub fn closed_form(inst: &Instance, hubs: bool) -> (usize, usize) {
    let b = inst.num_branches();
    let s = inst.num_origin_ports();
    // Breakpoints are a tenth of a truck plus every break above it.
    let j = inst.land_costs.volume_breaks.iter().filter(|&&v| v > inst.land_costs.container_volume() / 10.0).count();
    let relations = inst.relations();
    let z: usize = relations.iter().map(|&(_, t)| inst.usable_ports(t).len()).sum();
    let rates: Vec<_> = inst.sea_rates.iter().flatten().flatten().collect();
    let sea_vars = rates.iter().map(|r| 1 + usize::from(r.nvocc_per_m3.is_some())).sum::<usize>();
    let ends = if hubs { b + s } else { s };
    let land_vars = b * ends * (j + 1);
    let (vars, cons) = if hubs {
        (
            z + b + b * s * b + b * s + b * s * b + land_vars + sea_vars,
            // port, one-hub, open, no-relay, split, big-M, land rows, step rows, sea rows
            relations.len() + b * s + b * s * b + b * s * b + b * s + b * s * b + b * ends + b * ends + rates.len(),
        )
    } else {
        (z + b * s + land_vars + sea_vars, relations.len() + b * s + b * s + b * s + rates.len())
    };
    (vars, cons)
}

/// The instance with every destination listed twice, copies carrying the
/// same demand and sea rates.
pub fn doubled_destinations(inst: &Instance) -> Instance {
    let mut out = inst.clone();
    for t in 0..inst.num_destinations() {
        out.nodes.destination_ports.push(format!("{}X", inst.destination_id(t)));
    }
    for row in &mut out.demand {
        let copy = row.clone();
        row.extend(copy);
    }
    for row in &mut out.sea_rates {
        let copy = row.clone();
        row.extend(copy);
    }
    out
}

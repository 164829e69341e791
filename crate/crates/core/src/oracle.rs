//! Exhaustive solver for desk-scale instances.
//!
//! Enumerates every port assignment, every hub set and every routing of the
//! remaining branch → port connections, with the direct fraction of each
//! routed connection drawn from [`split_candidates`]. The objective is the
//! approximated (model) cost; the exact cost of the optimum is reported too.
//! Work is split per port assignment and run in parallel; each chunk is
//! searched independently, so the result does not depend on thread count.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cost::{land_cost_approx, CostError};
use crate::heuristics::{local_search_improve, LocalSearchOptions};
use crate::network::{validate_instance, Instance, ValidationReport};
use crate::pricing::{CostMode, Pricer};
use crate::solution::{evaluate_with, split_candidates, CostBreakdown, Solution};

/// Relative tolerance used for pruning and tie detection.
const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleLimits {
    pub max_branches: usize,
    pub max_ports: usize,
    pub max_destinations: usize,
    /// Largest hub set tried; `None` means all branches.
    pub max_hub_set_size: Option<usize>,
    /// Extra direct fractions tried on every routed connection.
    pub split_grid: Vec<f64>,
    /// Evaluation budget: bounds both the up-front estimate and the number
    /// of search nodes actually visited.
    pub budget: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_branches: 6,
            max_ports: 3,
            max_destinations: 3,
            max_hub_set_size: None,
            split_grid: Vec::new(),
            budget: 100_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {found} {what}, above the oracle limit of {limit}")]
    TooLarge { what: &'static str, found: usize, limit: usize },
    #[error("enumeration needs at least {estimate} evaluations, above the budget of {budget}")]
    BudgetExceeded { estimate: u64, budget: u64 },
    #[error("instance is invalid:\n{0}")]
    InvalidInstance(ValidationReport),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    #[serde(skip)]
    pub solution: Solution,
    /// Cost under the approximated land tariff, the optimized objective.
    pub approx: CostBreakdown,
    pub exact: CostBreakdown,
    /// Complete configurations evaluated.
    pub evaluated: u64,
}

/// Hub sets ordered by size, then lexicographically.
fn hub_sets(nb: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << nb)
        .filter(|m| (m.count_ones() as usize) <= max_size)
        .map(|m| (0..nb).filter(|&b| m & (1 << b) != 0).collect())
        .collect();
    out.sort_by(|a: &Vec<usize>, b: &Vec<usize>| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[derive(Debug, Clone, Copy)]
struct RouteOption {
    hub: Option<usize>,
    y: f64,
    /// Cost charged only to this connection: its own port arc and the hub
    /// consolidation of the routed part.
    own: f64,
}

#[derive(Debug, Clone)]
struct Best {
    cost: f64,
    port_choice: Vec<Vec<Option<usize>>>,
    hubs: Vec<usize>,
    routes: Vec<((usize, usize), RouteOption)>,
}

struct Search<'a> {
    pricer: &'a Pricer<'a>,
    monotone: bool,
    hub_sets: &'a [Vec<usize>],
    grid: &'a [f64],
    upper: f64,
    nodes: &'a AtomicU64,
    budget: u64,
}

fn within(cost: f64, bound: f64) -> bool {
    cost <= bound + REL_TOL * bound.abs().max(1.0)
}

fn improves(cost: f64, incumbent: f64) -> bool {
    incumbent.is_infinite() || cost < incumbent - REL_TOL * incumbent.abs().max(1.0)
}

fn decode_z(
    instance: &Instance,
    relations: &[(usize, usize)],
    ports: &[Vec<usize>],
    mut z: u64,
) -> Vec<Vec<Option<usize>>> {
    let mut choice = vec![vec![None; instance.num_destinations()]; instance.num_branches()];
    for (k, &(b, t)) in relations.iter().enumerate() {
        let n = ports[k].len() as u64;
        choice[b][t] = Some(ports[k][(z % n) as usize]);
        z /= n;
    }
    choice
}

/// Mutable arc loads during the depth-first routing search.
struct State {
    port_load: Vec<Vec<f64>>,
    hub_load: Vec<Vec<f64>>,
    inflow: Vec<usize>,
    cost: f64,
    chosen: Vec<RouteOption>,
}

struct Chunk<'s, 'a> {
    search: &'s Search<'a>,
    pairs: Vec<(usize, usize, f64)>,
    options: Vec<Vec<RouteOption>>,
    /// `suffix[k]`: lower bound on the own costs of pairs `k..`.
    suffix: Vec<f64>,
    hubs: &'s [usize],
    best_cost: f64,
    best: Option<(Vec<usize>, Vec<RouteOption>, f64)>,
    evaluated: u64,
    visited: u64,
    exhausted: bool,
}

impl Chunk<'_, '_> {
    fn bound(&self) -> f64 {
        self.best_cost.min(self.search.upper)
    }

    fn dfs(&mut self, k: usize, st: &mut State) {
        if self.exhausted {
            return;
        }
        self.visited += 1;
        if self.visited.is_multiple_of(4096) {
            let total = self.search.nodes.fetch_add(4096, Ordering::Relaxed) + 4096;
            if total > self.search.budget {
                self.exhausted = true;
                return;
            }
        }
        let lb = if self.search.monotone { st.cost + self.suffix[k] } else { f64::NEG_INFINITY };
        if !within(lb, self.bound()) {
            return;
        }
        if k == self.pairs.len() {
            if self.hubs.iter().any(|&h| st.inflow[h] == 0) {
                return;
            }
            self.evaluated += 1;
            if improves(st.cost, self.best_cost) && within(st.cost, self.search.upper) {
                self.best_cost = st.cost;
                self.best = Some((self.hubs.to_vec(), st.chosen.clone(), st.cost));
            }
            return;
        }
        let (b, s, v) = self.pairs[k];
        let pricer = self.search.pricer;
        for oi in 0..self.options[k].len() {
            let opt = self.options[k][oi];
            let saved = st.cost;
            st.cost += opt.own;
            let mut touched = None;
            if let Some(h) = opt.hub {
                let routed = (1.0 - opt.y) * v;
                touched = Some((h, st.hub_load[b][h], st.port_load[h][s]));
                let before_hub = pricer_approx_branch(pricer, b, h, st.hub_load[b][h]);
                let before_port = pricer_approx_port(pricer, h, s, st.port_load[h][s]);
                st.hub_load[b][h] += routed;
                st.port_load[h][s] += routed;
                st.cost += pricer_approx_branch(pricer, b, h, st.hub_load[b][h]) - before_hub;
                st.cost += pricer_approx_port(pricer, h, s, st.port_load[h][s]) - before_port;
                st.inflow[h] += 1;
            }
            st.chosen.push(opt);
            self.dfs(k + 1, st);
            st.chosen.pop();
            if let Some((h, hub_before, port_before)) = touched {
                st.hub_load[b][h] = hub_before;
                st.port_load[h][s] = port_before;
                st.inflow[h] -= 1;
            }
            st.cost = saved;
            if self.exhausted {
                return;
            }
        }
    }
}

fn pricer_approx_branch(p: &Pricer<'_>, b: usize, h: usize, v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        land_cost_approx(p.branch_curve(b, h), v)
    }
}

fn pricer_approx_port(p: &Pricer<'_>, b: usize, s: usize, v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        land_cost_approx(p.port_curve(b, s), v)
    }
}

impl Search<'_> {
    /// Best configuration for one port assignment, if any beats the upper bound.
    fn port_assignment(&self, port_choice: Vec<Vec<Option<usize>>>) -> (Option<Best>, u64, bool) {
        let inst = self.pricer.instance;
        let nb = inst.num_branches();
        let ns = inst.num_origin_ports();
        let sol = Solution::all_direct(inst, port_choice);
        let volume: Vec<Vec<f64>> = (0..nb).map(|b| (0..ns).map(|s| sol.pair_volume(inst, b, s)).collect()).collect();

        let mut fixed = 0.0;
        let mut sea_load = vec![vec![0.0; inst.num_destinations()]; ns];
        for (b, row) in sol.port_choice.iter().enumerate() {
            for (t, s) in row.iter().enumerate() {
                if let Some(s) = *s {
                    sea_load[s][t] += inst.demand[b][t];
                }
            }
        }
        for (s, row) in sea_load.iter().enumerate() {
            let consolidated: f64 = row.iter().sum();
            fixed += inst.port_consolidation_cost[s] * consolidated;
            for (t, &v) in row.iter().enumerate() {
                fixed += self.pricer.sea(s, t, v);
            }
        }

        let mut best: Option<Best> = None;
        let mut best_cost = f64::INFINITY;
        let mut evaluated = 0;
        for hubs in self.hub_sets {
            let setup: f64 = hubs.iter().map(|&h| inst.setup_cost[h]).sum();
            let mut st = State {
                port_load: vec![vec![0.0; ns]; nb],
                hub_load: vec![vec![0.0; nb]; nb],
                inflow: vec![0; nb],
                cost: fixed + setup,
                chosen: Vec::new(),
            };
            for &h in hubs {
                for s in 0..ns {
                    st.port_load[h][s] = volume[h][s];
                    st.cost += pricer_approx_port(self.pricer, h, s, volume[h][s]);
                }
            }
            let mut pairs = Vec::new();
            let mut options = Vec::new();
            for b in (0..nb).filter(|b| !hubs.contains(b)) {
                for s in 0..ns {
                    let v = volume[b][s];
                    if v <= 0.0 {
                        continue;
                    }
                    let direct_own = pricer_approx_port(self.pricer, b, s, v);
                    let mut opts = vec![RouteOption { hub: None, y: 1.0, own: direct_own }];
                    if !hubs.is_empty() {
                        let shipments = sol.pair_shipments(inst, b, s);
                        let full = self.pricer.port_curve(b, s).full_volume();
                        let cands = split_candidates(self.pricer.breakpoints(), full, v, &shipments, self.grid);
                        for &h in hubs {
                            for &y in cands.iter().filter(|&&y| y < 1.0) {
                                let own = pricer_approx_port(self.pricer, b, s, y * v)
                                    + inst.hub_consolidation_cost[h] * (1.0 - y) * v;
                                opts.push(RouteOption { hub: Some(h), y, own });
                            }
                        }
                    }
                    opts.sort_by(|a, b| a.own.total_cmp(&b.own));
                    pairs.push((b, s, v));
                    options.push(opts);
                }
            }
            if !hubs.is_empty() && pairs.is_empty() {
                continue;
            }
            let mut suffix = vec![0.0; pairs.len() + 1];
            for k in (0..pairs.len()).rev() {
                suffix[k] = suffix[k + 1] + options[k][0].own;
            }
            // Root bound is valid whether or not arc costs are monotone.
            if !within(st.cost + suffix[0] - own_hub_ports(self, hubs, &volume), best_cost.min(self.upper)) {
                continue;
            }
            let mut chunk = Chunk {
                search: self,
                pairs,
                options,
                suffix,
                hubs,
                best_cost,
                best: None,
                evaluated: 0,
                visited: 0,
                exhausted: false,
            };
            chunk.dfs(0, &mut st);
            self.nodes.fetch_add(chunk.visited % 4096, Ordering::Relaxed);
            evaluated += chunk.evaluated;
            if chunk.exhausted {
                return (None, evaluated, true);
            }
            if let Some((hubs, chosen, cost)) = chunk.best {
                best_cost = cost;
                let routes = chunk.pairs.iter().map(|&(b, s, _)| (b, s)).zip(chosen).collect();
                best = Some(Best { cost, port_choice: sol.port_choice.clone(), hubs, routes });
            }
        }
        (best, evaluated, false)
    }
}

/// Hub port-arc costs already in the running cost; removed from the root
/// bound when arc costs may decrease with volume.
fn own_hub_ports(search: &Search<'_>, hubs: &[usize], volume: &[Vec<f64>]) -> f64 {
    if search.monotone {
        return 0.0;
    }
    hubs.iter()
        .flat_map(|&h| volume[h].iter().enumerate().map(move |(s, &v)| (h, s, v)))
        .map(|(h, s, v)| pricer_approx_port(search.pricer, h, s, v))
        .sum()
}

/// Cheapest all-direct plan picking each relation's port in isolation, with
/// its approximated cost.
fn all_direct_upper_bound(pricer: &Pricer<'_>) -> (Solution, f64) {
    let inst = pricer.instance;
    let mut choice = vec![vec![None; inst.num_destinations()]; inst.num_branches()];
    for (b, t) in inst.relations() {
        let v = inst.demand[b][t];
        let cost = |s: usize| {
            pricer.port_arc(b, s, v, CostMode::Approx) + inst.port_consolidation_cost[s] * v + pricer.sea(s, t, v)
        };
        choice[b][t] = inst.usable_ports(t).into_iter().min_by(|&x, &y| cost(x).total_cmp(&cost(y)));
    }
    let sol = Solution::all_direct(inst, choice);
    let cost = evaluate_with(pricer, &sol, CostMode::Approx).total;
    (sol, cost)
}

/// Number of port assignments, saturating.
pub fn port_assignment_count(instance: &Instance) -> u64 {
    instance
        .relations()
        .iter()
        .map(|&(_, t)| instance.usable_ports(t).len() as u64)
        .fold(1u64, |acc, n| acc.saturating_mul(n))
}

/// Globally optimal plan under the approximated tariff, over the candidate
/// direct fractions.
pub fn enumerate_optimal(instance: &Instance, limits: &OracleLimits) -> Result<OracleResult, OracleError> {
    let report = validate_instance(instance);
    if !report.is_valid() {
        return Err(OracleError::InvalidInstance(report));
    }
    let sizes = [
        ("branches", instance.num_branches(), limits.max_branches),
        ("origin ports", instance.num_origin_ports(), limits.max_ports),
        ("destinations", instance.num_destinations(), limits.max_destinations),
    ];
    for (what, found, limit) in sizes {
        if found > limit {
            return Err(OracleError::TooLarge { what, found, limit });
        }
    }
    let nb = instance.num_branches();
    if nb >= 32 {
        return Err(OracleError::BudgetExceeded { estimate: u64::MAX, budget: limits.budget });
    }
    let hub_sets = hub_sets(nb, limits.max_hub_set_size.unwrap_or(nb).min(nb));
    let n_z = port_assignment_count(instance);
    let estimate = n_z.saturating_mul(hub_sets.len() as u64);
    if estimate > limits.budget {
        return Err(OracleError::BudgetExceeded { estimate, budget: limits.budget });
    }

    let pricer = Pricer::new(instance)?;
    let (mut fallback, mut upper) = all_direct_upper_bound(&pricer);
    let polish = LocalSearchOptions { split_grid: limits.split_grid.clone(), ..LocalSearchOptions::default() };
    let max_hubs = limits.max_hub_set_size.unwrap_or(nb);
    if let Ok(better) = local_search_improve(instance, &fallback, &polish) {
        // The seed must lie inside the searched space or it could be returned.
        if better.cost.total < upper && better.solution.hubs.len() <= max_hubs {
            upper = better.cost.total;
            fallback = better.solution;
        }
    }
    let relations = instance.relations();
    let ports: Vec<Vec<usize>> = relations.iter().map(|&(_, t)| instance.usable_ports(t)).collect();
    let nodes = AtomicU64::new(0);
    let search = Search {
        pricer: &pricer,
        monotone: pricer.is_monotone(),
        hub_sets: &hub_sets,
        grid: &limits.split_grid,
        upper,
        nodes: &nodes,
        budget: limits.budget,
    };
    let chunks: Vec<(Option<Best>, u64, bool)> =
        (0..n_z).into_par_iter().map(|z| search.port_assignment(decode_z(instance, &relations, &ports, z))).collect();
    if chunks.iter().any(|c| c.2) {
        return Err(OracleError::BudgetExceeded { estimate: nodes.load(Ordering::Relaxed), budget: limits.budget });
    }
    let evaluated = chunks.iter().map(|c| c.1).sum();
    // First minimum in enumeration order.
    let mut winner: Option<Best> = None;
    for best in chunks.into_iter().filter_map(|c| c.0) {
        let replace = match &winner {
            None => true,
            Some(w) => improves(best.cost, w.cost),
        };
        if replace {
            winner = Some(best);
        }
    }
    let solution = match winner {
        Some(best) => {
            let mut sol = Solution::all_direct(instance, best.port_choice);
            sol.hubs = best.hubs.into_iter().collect();
            for ((b, s), opt) in best.routes {
                if let Some(h) = opt.hub {
                    sol.route_via(b, s, h, opt.y);
                }
            }
            sol
        }
        // Only when the upper bound is itself optimal and every tie was pruned.
        None => fallback,
    };
    Ok(OracleResult {
        approx: evaluate_with(&pricer, &solution, CostMode::Approx),
        exact: evaluate_with(&pricer, &solution, CostMode::Exact),
        solution,
        evaluated,
    })
}

//! The restricted problem without hubs: choose one origin port per relation.
//!
//! Land cost couples relations through the branch → port arcs and sea cost
//! through the port → destination relations, so this is solved by depth-first
//! branch and bound over the port choices, started from a best-response
//! incumbent. When the node budget runs out the incumbent is returned and
//! flagged as not proven optimal.

use std::time::Instant;

use super::{cost_then_id, strictly_less, validate, HeuristicError};
use crate::network::Instance;
use crate::pricing::{CostMode, Pricer};
use crate::solution::{evaluate_with, CostBreakdown, Solution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoHubOptions {
    pub mode: CostMode,
    pub node_budget: u64,
    /// Wall-clock cut-off; when reached the incumbent is returned unproven.
    pub deadline: Option<Instant>,
}

impl Default for NoHubOptions {
    fn default() -> Self {
        Self { mode: CostMode::Approx, node_budget: 10_000_000, deadline: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoHubResult {
    pub solution: Solution,
    pub cost: CostBreakdown,
    /// False when the search stopped at the node budget.
    pub proven_optimal: bool,
    pub nodes: u64,
}

struct Search<'a> {
    pricer: &'a Pricer<'a>,
    mode: CostMode,
    /// `(b, t, v)` in search order.
    relations: Vec<(usize, usize, f64)>,
    options: Vec<Vec<usize>>,
    /// Lower bound on the port consolidation still to come from `k..`.
    suffix: Vec<f64>,
    arc: Vec<Vec<f64>>,
    sea: Vec<Vec<f64>>,
    cost: f64,
    chosen: Vec<usize>,
    best_cost: f64,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    deadline: Option<Instant>,
    prune: bool,
}

impl Search<'_> {
    fn assign(&mut self, k: usize, s: usize) -> (f64, f64, f64) {
        let (b, t, v) = self.relations[k];
        let inst = self.pricer.instance;
        let saved = (self.cost, self.arc[b][s], self.sea[s][t]);
        let old = self.pricer.port_arc(b, s, self.arc[b][s], self.mode) + self.pricer.sea(s, t, self.sea[s][t]);
        self.arc[b][s] += v;
        self.sea[s][t] += v;
        let new = self.pricer.port_arc(b, s, self.arc[b][s], self.mode) + self.pricer.sea(s, t, self.sea[s][t]);
        self.cost += new - old + inst.port_consolidation_cost[s] * v;
        saved
    }

    fn undo(&mut self, k: usize, s: usize, saved: (f64, f64, f64)) {
        let (b, t, _) = self.relations[k];
        self.cost = saved.0;
        self.arc[b][s] = saved.1;
        self.sea[s][t] = saved.2;
    }

    fn dfs(&mut self, k: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if self.nodes.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            return false;
        }
        if self.prune && !strictly_less(self.cost + self.suffix[k], self.best_cost) {
            return true;
        }
        if k == self.relations.len() {
            if strictly_less(self.cost, self.best_cost) {
                self.best_cost = self.cost;
                self.best = self.chosen.clone();
            }
            return true;
        }
        for i in 0..self.options[k].len() {
            let s = self.options[k][i];
            let saved = self.assign(k, s);
            self.chosen.push(s);
            let complete = self.dfs(k + 1);
            self.chosen.pop();
            self.undo(k, s, saved);
            if !complete {
                return false;
            }
        }
        true
    }
}

fn plan(instance: &Instance, relations: &[(usize, usize, f64)], ports: &[usize]) -> Solution {
    let mut choice = vec![vec![None; instance.num_destinations()]; instance.num_branches()];
    for (&(b, t, _), &s) in relations.iter().zip(ports) {
        choice[b][t] = Some(s);
    }
    Solution::all_direct(instance, choice)
}

/// Best all-direct plan: hubs empty, every direct fraction 1.
pub fn solve_no_hubs(instance: &Instance, options: NoHubOptions) -> Result<NoHubResult, HeuristicError> {
    validate(instance)?;
    let pricer = Pricer::new(instance)?;
    let mode = options.mode;
    let mut relations: Vec<(usize, usize, f64)> =
        instance.relations().into_iter().map(|(b, t)| (b, t, instance.demand[b][t])).collect();
    relations.sort_by(|x, y| {
        y.2.total_cmp(&x.2)
            .then_with(|| instance.branch_id(x.0).cmp(instance.branch_id(y.0)))
            .then_with(|| instance.destination_id(x.1).cmp(instance.destination_id(y.1)))
    });
    let alone = |b: usize, t: usize, v: f64, s: usize| {
        pricer.port_arc(b, s, v, mode) + instance.port_consolidation_cost[s] * v + pricer.sea(s, t, v)
    };
    let port_options: Vec<Vec<usize>> = relations
        .iter()
        .map(|&(b, t, v)| {
            let mut ports = instance.usable_ports(t);
            ports.sort_by(|&x, &y| {
                cost_then_id((alone(b, t, v, x), instance.port_id(x)), (alone(b, t, v, y), instance.port_id(y)))
            });
            ports
        })
        .collect();

    // Incumbent: stand-alone choice, then per-relation best response.
    let total = |ports: &[usize]| evaluate_with(&pricer, &plan(instance, &relations, ports), mode).total;
    let mut incumbent: Vec<usize> = port_options.iter().map(|o| o[0]).collect();
    let mut incumbent_cost = total(&incumbent);
    loop {
        let mut changed = false;
        for k in 0..relations.len() {
            for &s in &port_options[k] {
                if s == incumbent[k] {
                    continue;
                }
                let mut trial = incumbent.clone();
                trial[k] = s;
                let c = total(&trial);
                if strictly_less(c, incumbent_cost) {
                    incumbent = trial;
                    incumbent_cost = c;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut suffix = vec![0.0; relations.len() + 1];
    for k in (0..relations.len()).rev() {
        let (_, _, v) = relations[k];
        let cheapest =
            port_options[k].iter().map(|&s| instance.port_consolidation_cost[s] * v).fold(f64::INFINITY, f64::min);
        suffix[k] = suffix[k + 1] + cheapest;
    }
    let mut search = Search {
        pricer: &pricer,
        mode,
        relations,
        options: port_options,
        suffix,
        arc: vec![vec![0.0; instance.num_origin_ports()]; instance.num_branches()],
        sea: vec![vec![0.0; instance.num_destinations()]; instance.num_origin_ports()],
        cost: 0.0,
        chosen: Vec::new(),
        best_cost: incumbent_cost,
        best: incumbent,
        nodes: 0,
        budget: options.node_budget,
        deadline: options.deadline,
        prune: pricer.is_monotone(),
    };
    let proven_optimal = search.dfs(0);
    let solution = plan(instance, &search.relations, &search.best);
    let cost = evaluate_with(&pricer, &solution, mode);
    Ok(NoHubResult { solution, cost, proven_optimal, nodes: search.nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::two_branch;
    use crate::SeaRate;

    #[test]
    fn single_branch_takes_the_cheapest_port() {
        let mut inst = two_branch();
        inst.demand[1][0] = 0.0;
        inst.nodes.origin_ports.push("S2".into());
        inst.port_distance = vec![vec![300.0, 100.0], vec![250.0, 100.0]];
        inst.sea_rates.push(vec![Some(SeaRate::both(500.0, 25.0))]);
        inst.port_consolidation_cost.push(1.0);
        // S1: 35 + 6 + 60 = 101; S2: 20 + 3 + 75 = 98.
        let res = solve_no_hubs(&inst, NoHubOptions::default()).unwrap();
        assert!(res.proven_optimal);
        assert_eq!(res.solution.port_choice[0][0], Some(1));
        assert!(res.solution.hubs.is_empty());
    }

    #[test]
    fn zero_demand_costs_nothing() {
        let mut inst = two_branch();
        inst.demand = vec![vec![0.0], vec![0.0]];
        let res = solve_no_hubs(&inst, NoHubOptions::default()).unwrap();
        assert_eq!(res.cost.total, 0.0);
    }

    #[test]
    fn tiny_budget_returns_the_incumbent() {
        let inst = two_branch();
        let res = solve_no_hubs(&inst, NoHubOptions { node_budget: 1, ..NoHubOptions::default() }).unwrap();
        assert!(!res.proven_optimal);
        assert!(res.cost.total.is_finite());
    }
}

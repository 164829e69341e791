//! First-improvement local search over complete plans.

use std::time::Instant;

use super::{strictly_less, validate, HeuristicError};
use crate::network::Instance;
use crate::pricing::{CostMode, Pricer};
use crate::solution::{check_feasibility, evaluate_with, split_candidates, CostBreakdown, Solution};

/// Which neighbourhoods are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Moves {
    /// Close an open hub, or open a branch as hub and reroute other
    /// connections to it where that pays. Also swaps an open hub for a
    /// closed branch.
    pub toggle_hub: bool,
    /// Move one `(b, t)` shipment to another origin port.
    pub reassign_port: bool,
    /// Send one `(b, s)` connection directly or over another hub.
    pub reassign_hub: bool,
    /// Change the direct fraction of one routed connection.
    pub adjust_split: bool,
}

impl Default for Moves {
    fn default() -> Self {
        Self { toggle_hub: true, reassign_port: true, reassign_hub: true, adjust_split: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOptions {
    pub moves: Moves,
    pub max_rounds: usize,
    pub mode: CostMode,
    /// Extra direct fractions tried next to the breakpoint candidates.
    pub split_grid: Vec<f64>,
    /// No new round starts after this instant.
    pub deadline: Option<Instant>,
}

impl Default for LocalSearchOptions {
    fn default() -> Self {
        Self {
            moves: Moves::default(),
            max_rounds: 100,
            mode: CostMode::Approx,
            split_grid: Vec::new(),
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchResult {
    pub solution: Solution,
    pub cost: CostBreakdown,
    pub rounds: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, Copy)]
enum Move {
    ToggleHub(usize),
    SwapHub { close: usize, open: usize },
    Port { b: usize, t: usize, s: usize },
    Hub { b: usize, s: usize, hub: Option<usize> },
    Split { b: usize, s: usize },
}

struct Neighbourhood<'a> {
    pricer: Pricer<'a>,
    mode: CostMode,
    grid: &'a [f64],
}

impl Neighbourhood<'_> {
    fn instance(&self) -> &Instance {
        self.pricer.instance
    }

    fn cost(&self, sol: &Solution) -> f64 {
        evaluate_with(&self.pricer, sol, self.mode).total
    }

    fn candidates(&self, sol: &Solution, b: usize, s: usize) -> Vec<f64> {
        let inst = self.instance();
        let shipments = sol.pair_shipments(inst, b, s);
        let total: f64 = shipments.iter().sum();
        let full = self.pricer.port_curve(b, s).full_volume();
        split_candidates(self.pricer.breakpoints(), full, total, &shipments, self.grid)
            .into_iter()
            .filter(|&y| y < 1.0)
            .collect()
    }

    /// Routes `b → s` over `h` with the cheapest candidate fraction.
    fn route_best(&self, sol: &mut Solution, b: usize, s: usize, h: usize) -> f64 {
        let mut best = (f64::INFINITY, 1.0);
        for y in self.candidates(sol, b, s) {
            sol.route_via(b, s, h, y);
            let c = self.cost(sol);
            if strictly_less(c, best.0) {
                best = (c, y);
            }
        }
        sol.route_via(b, s, h, best.1);
        best.0
    }

    /// Restores the connection invariants of `(b, s)` after its volume changed.
    fn refit(&self, sol: &mut Solution, b: usize, s: usize) {
        match sol.hub_of(b, s) {
            Some(h) if sol.pair_volume(self.instance(), b, s) > 0.0 => {
                self.route_best(sol, b, s, h);
            }
            _ => sol.route_direct(b, s),
        }
    }

    fn moves(&self, sol: &Solution, enabled: Moves) -> Vec<Move> {
        let inst = self.instance();
        let nb = inst.num_branches();
        let ns = inst.num_origin_ports();
        let mut out = Vec::new();
        if enabled.toggle_hub {
            out.extend((0..nb).map(Move::ToggleHub));
            for &close in &sol.hubs {
                out.extend((0..nb).filter(|b| !sol.hubs.contains(b)).map(|open| Move::SwapHub { close, open }));
            }
        }
        if enabled.reassign_port {
            for (b, t) in inst.relations() {
                for s in inst.usable_ports(t) {
                    if sol.port_choice[b][t] != Some(s) {
                        out.push(Move::Port { b, t, s });
                    }
                }
            }
        }
        for b in (0..nb).filter(|b| !sol.hubs.contains(b)) {
            for s in 0..ns {
                if sol.pair_volume(inst, b, s) <= 0.0 {
                    continue;
                }
                if enabled.reassign_hub {
                    let current = sol.hub_of(b, s);
                    if current.is_some() {
                        out.push(Move::Hub { b, s, hub: None });
                    }
                    for &h in sol.hubs.iter().filter(|&&h| h != b && Some(h) != current) {
                        out.push(Move::Hub { b, s, hub: Some(h) });
                    }
                }
                if enabled.adjust_split && sol.hub_of(b, s).is_some() {
                    out.push(Move::Split { b, s });
                }
            }
        }
        out
    }

    /// The neighbour reached by `mv`, or `None` if the move no longer applies.
    fn apply(&self, sol: &Solution, mv: Move) -> Option<Solution> {
        let inst = self.instance();
        let ns = inst.num_origin_ports();
        let mut next = sol.clone();
        match mv {
            Move::ToggleHub(h) if sol.hubs.contains(&h) => {
                next.hubs.remove(&h);
                for b in 0..inst.num_branches() {
                    for s in 0..ns {
                        if next.hub_of(b, s) == Some(h) {
                            next.route_direct(b, s);
                        }
                    }
                }
            }
            Move::ToggleHub(h) => {
                next.hubs.insert(h);
                for s in 0..ns {
                    next.route_direct(h, s);
                }
                let mut cost = self.cost(&next);
                let others: Vec<usize> = (0..inst.num_branches()).filter(|b| !next.hubs.contains(b)).collect();
                for b in others {
                    for s in 0..ns {
                        if next.pair_volume(inst, b, s) <= 0.0 {
                            continue;
                        }
                        let mut trial = next.clone();
                        let c = self.route_best(&mut trial, b, s, h);
                        if strictly_less(c, cost) {
                            next = trial;
                            cost = c;
                        }
                    }
                }
            }
            Move::SwapHub { close, open } => {
                if !sol.hubs.contains(&close) || sol.hubs.contains(&open) {
                    return None;
                }
                let closed = self.apply(sol, Move::ToggleHub(close))?;
                return self.apply(&closed, Move::ToggleHub(open));
            }
            Move::Port { b, t, s } => {
                let old = sol.port_choice[b][t]?;
                if old == s {
                    return None;
                }
                next.port_choice[b][t] = Some(s);
                self.refit(&mut next, b, old);
                self.refit(&mut next, b, s);
            }
            Move::Hub { b, s, hub } => {
                if sol.hubs.contains(&b) || sol.hub_of(b, s) == hub || sol.pair_volume(inst, b, s) <= 0.0 {
                    return None;
                }
                match hub {
                    None => next.route_direct(b, s),
                    Some(h) if sol.hubs.contains(&h) && h != b => {
                        self.route_best(&mut next, b, s, h);
                    }
                    Some(_) => return None,
                }
            }
            Move::Split { b, s } => {
                let h = sol.hub_of(b, s)?;
                self.route_best(&mut next, b, s, h);
            }
        }
        Some(next)
    }
}

/// Improves a feasible plan by first-improvement moves until a full round
/// finds nothing better or `max_rounds` rounds have run.
pub fn local_search_improve(
    instance: &Instance,
    start: &Solution,
    options: &LocalSearchOptions,
) -> Result<LocalSearchResult, HeuristicError> {
    validate(instance)?;
    let report = check_feasibility(instance, start)?;
    if !report.is_feasible() {
        return Err(HeuristicError::InfeasibleStart(report));
    }
    let hood = Neighbourhood { pricer: Pricer::new(instance)?, mode: options.mode, grid: &options.split_grid };
    let mut current = start.clone();
    let mut cost = hood.cost(&current);
    let mut rounds = 0;
    let mut accepted = 0;
    while rounds < options.max_rounds && options.deadline.is_none_or(|d| Instant::now() < d) {
        rounds += 1;
        let mut improved = false;
        for mv in hood.moves(&current, options.moves) {
            let Some(next) = hood.apply(&current, mv) else { continue };
            let c = hood.cost(&next);
            if strictly_less(c, cost) {
                debug_assert!(check_feasibility(instance, &next).map(|r| r.is_feasible()).unwrap_or(false));
                current = next;
                cost = c;
                accepted += 1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let breakdown = evaluate_with(&hood.pricer, &current, options.mode);
    Ok(LocalSearchResult { solution: current, cost: breakdown, rounds, accepted })
}

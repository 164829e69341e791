mod common;

use common::{crafted_c8, crafted_consolidation, label, rel_diff};
use hublocate::gen::{generate, Profile};
use hublocate::heuristics::{
    local_search_improve, solve_no_hubs, solve_single_destination, solve_two_stage, LocalSearchOptions, NoHubOptions,
};
use hublocate::oracle::{enumerate_optimal, OracleLimits};
use hublocate::solution::{check_feasibility, evaluate_cost, ConstraintId};
use hublocate::{CostMode, Instance, LandCostTable, NodeSets, Parameters, SeaRate};

fn at_least(cost: f64, optimum: f64) -> bool {
    cost >= optimum - 1e-9 * optimum.abs().max(1.0)
}

#[test]
fn no_heuristic_beats_the_oracle() {
    for cfg in common::desk_configs() {
        let inst = generate(&cfg);
        let name = label(&cfg);
        let best = enumerate_optimal(&inst, &OracleLimits::default()).unwrap().approx.total;

        let two = solve_two_stage(&inst, 2).unwrap();
        assert!(check_feasibility(&inst, &two.merged).unwrap().is_feasible(), "{name}");
        let merged = evaluate_cost(&inst, &two.merged, CostMode::Approx).unwrap().total;
        assert!(at_least(merged, best), "{name}: two-stage {merged} < oracle {best}");

        let no_hub = solve_no_hubs(&inst, NoHubOptions::default()).unwrap();
        assert!(no_hub.proven_optimal, "{name}");
        assert!(at_least(no_hub.cost.total, best), "{name}: no-hub {} < oracle {best}", no_hub.cost.total);

        let ls = local_search_improve(&inst, &two.merged, &LocalSearchOptions::default()).unwrap();
        assert!(ls.cost.total <= merged + 1e-9 * merged.abs().max(1.0), "{name}");
        assert!(at_least(ls.cost.total, best), "{name}: local search {} < oracle {best}", ls.cost.total);

        if cfg.profile == Profile::ConsolidationFavorable {
            assert!(best < no_hub.cost.total - 1e-9 * best, "{name}: no gain over the no-hub plan");
        }
    }
}

#[test]
fn merge_of_per_destination_plans_breaks_the_one_hub_rule() {
    let inst = crafted_c8();
    let res = solve_two_stage(&inst, 2).unwrap();
    let hubs =
        |h: &std::collections::BTreeSet<usize>| h.iter().map(|&b| inst.branch_id(b).to_string()).collect::<Vec<_>>();
    assert_eq!(hubs(&res.per_destination[0].hubs), ["B2"]);
    assert_eq!(hubs(&res.per_destination[1].hubs), ["B3"]);
    assert_eq!(res.per_destination[0].routing[0], Some(1));
    assert_eq!(res.per_destination[1].routing[0], Some(2));
    assert_eq!(hubs(&res.raw.hubs), ["B2", "B3"]);
    assert_eq!(res.violations.count(ConstraintId::C8), 1);
    let c8 = res.violations.violations.iter().find(|v| v.constraint == ConstraintId::C8).unwrap();
    assert_eq!(c8.indices[..2], ["B1", "S1"]);
    assert!(c8.indices.iter().any(|i| i == "B2") && c8.indices.iter().any(|i| i == "B3"));
    // The repaired plan keeps one hub on B1 → S1 and is feasible.
    assert!(check_feasibility(&inst, &res.merged).unwrap().is_feasible());
    assert_eq!(res.merged.hub_choice[0][0].len(), 1);
    let approx = evaluate_cost(&inst, &res.merged, CostMode::Approx).unwrap().total;
    let best = enumerate_optimal(&inst, &OracleLimits::default()).unwrap().approx.total;
    assert!(at_least(approx, best));
}

#[test]
fn single_destination_finds_the_consolidation_hub() {
    let inst = crafted_consolidation();
    let res = solve_single_destination(&inst, 0, 2).unwrap();
    assert_eq!(res.hubs.iter().copied().collect::<Vec<_>>(), [2]);
    assert_eq!(res.routing, [Some(2), Some(2), None]);
    assert_eq!(res.ports, [Some(1), Some(1), Some(1)]);
    // Hub plans: 3 branches choose among 2 ports and 7 hub sets of size ≤ 2.
    assert!(res.iterations <= 2usize.pow(3) * 7);
    let two = solve_two_stage(&inst, 2).unwrap();
    assert!(two.violations.is_feasible());
    assert!(rel_diff(two.cost.total, res.cost) <= 1e-9);
}

#[test]
fn zero_hub_budget_ships_directly_from_the_cheapest_port() {
    let inst = crafted_consolidation();
    let res = solve_single_destination(&inst, 0, 0).unwrap();
    assert!(res.hubs.is_empty());
    assert_eq!(res.routing, [None, None, None]);
    // Alone, every branch fills no container at either port, so the NVOCC
    // price plus port handling decides: S2 (55 + 6) beats S1 (60 + 4).
    assert_eq!(res.ports, [Some(1), Some(1), Some(1)]);
}

#[test]
fn one_branch_never_uses_a_hub() {
    let nodes = NodeSets {
        branches: vec!["B1".into()],
        origin_ports: vec!["S1".into(), "S2".into()],
        destination_ports: vec!["T1".into()],
    };
    let mut inst = Instance::empty(nodes, common::crafted_table(), Parameters::default());
    inst.demand = vec![vec![30.0]];
    inst.port_distance = vec![vec![650.0, 90.0]];
    inst.sea_rates = vec![vec![Some(SeaRate::both(1500.0, 60.0))], vec![Some(SeaRate::both(1600.0, 62.0))]];
    inst.port_consolidation_cost = vec![3.0, 3.0];
    let res = solve_two_stage(&inst, 2).unwrap();
    assert!(res.merged.hubs.is_empty());
    assert_eq!(res.merged.port_choice[0][0], Some(1));
    // 60 land (short band, 30 m³), 90 handling, 1600 sea.
    assert!((res.cost.total - 1750.0).abs() < 1e-9);
}

#[test]
fn local_search_opens_the_consolidation_hub_from_the_no_hub_plan() {
    let inst = crafted_consolidation();
    let start = solve_no_hubs(&inst, NoHubOptions::default()).unwrap();
    let res = local_search_improve(&inst, &start.solution, &LocalSearchOptions::default()).unwrap();
    assert!(res.solution.hubs.contains(&2));
    assert!(res.cost.total < start.cost.total);
    assert!(check_feasibility(&inst, &res.solution).unwrap().is_feasible());
}

#[test]
fn local_search_keeps_an_optimal_plan() {
    for inst in [crafted_consolidation(), crafted_c8()] {
        let best = enumerate_optimal(&inst, &OracleLimits::default()).unwrap();
        let res = local_search_improve(&inst, &best.solution, &LocalSearchOptions::default()).unwrap();
        assert_eq!(res.accepted, 0);
        assert_eq!(res.solution, best.solution);
    }
}

#[test]
fn no_hub_matches_a_plain_enumeration() {
    // Every port choice per relation, priced with evaluate_cost.
    for cfg in common::desk_configs().iter().filter(|c| c.branches <= 4) {
        let inst = generate(cfg);
        let relations = inst.relations();
        let options: Vec<Vec<usize>> = relations.iter().map(|&(_, t)| inst.usable_ports(t)).collect();
        let total: usize = options.iter().map(Vec::len).product();
        let mut best = f64::INFINITY;
        for mut code in 0..total {
            let mut choice = vec![vec![None; inst.num_destinations()]; inst.num_branches()];
            for (k, &(b, t)) in relations.iter().enumerate() {
                choice[b][t] = Some(options[k][code % options[k].len()]);
                code /= options[k].len();
            }
            let sol = hublocate::Solution::all_direct(&inst, choice);
            best = best.min(evaluate_cost(&inst, &sol, CostMode::Approx).unwrap().total);
        }
        let res = solve_no_hubs(&inst, NoHubOptions::default()).unwrap();
        assert!(rel_diff(res.cost.total, best) <= 1e-9, "{}: {} vs {best}", label(cfg), res.cost.total);
    }
}

#[test]
fn exact_mode_no_hub_is_also_optimal() {
    let table =
        LandCostTable { distance_breaks: vec![1000.0], volume_breaks: vec![2.0, 80.0], cost: vec![vec![100.0, 400.0]] };
    let nodes = NodeSets {
        branches: vec!["B1".into(), "B2".into()],
        origin_ports: vec!["S1".into(), "S2".into()],
        destination_ports: vec!["T1".into()],
    };
    let mut inst = Instance::empty(nodes, table, Parameters::default());
    inst.demand = vec![vec![1.0], vec![1.0]];
    inst.port_distance = vec![vec![100.0, 100.0], vec![100.0, 100.0]];
    inst.sea_rates = vec![vec![Some(SeaRate::fcl_only(500.0))], vec![Some(SeaRate::fcl_only(450.0))]];
    inst.port_consolidation_cost = vec![1.0, 1.0];
    let res = solve_no_hubs(&inst, NoHubOptions { mode: CostMode::Exact, ..NoHubOptions::default() }).unwrap();
    // Both into one S2 container: 100 + 100 land, 2 handling, 450 sea.
    assert!((res.cost.total - 652.0).abs() < 1e-9);
}

#[test]
fn merge_report_keeps_only_one_hub_conflicts() {
    let mut other_rules = 0;
    for seed in 0..20 {
        let cfg = hublocate::gen::GenConfig {
            seed,
            branches: 6,
            origin_ports: 2,
            destinations: 4,
            density: 0.8,
            ..Default::default()
        };
        let inst = generate(&cfg);
        let res = solve_two_stage(&inst, 2).unwrap();
        assert!(res.violations.violations.iter().all(|v| v.constraint == ConstraintId::C8));
        assert_eq!(res.violations.count(ConstraintId::C8), res.raw_report.count(ConstraintId::C8));
        assert_eq!(res.raw_report, check_feasibility(&inst, &res.raw).unwrap());
        other_rules += res.raw_report.violations.len() - res.violations.violations.len();
        assert!(check_feasibility(&inst, &res.merged).unwrap().is_feasible());
    }
    // The plain union also breaks the direct-shipping rule for hubs.
    assert!(other_rules > 0);
}

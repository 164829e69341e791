//! Seeded generator of planar instances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{LandCostTable, SeaRate};
use crate::network::{Instance, NodeSets, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Branches and ports scattered over one square; every sea relation
    /// offers both FCL and NVOCC.
    #[default]
    Uniform,
    /// A tight branch cluster far from the ports, with cheap hubs.
    ConsolidationFavorable,
    /// Like `Uniform`, but sea relations are a mix of both, FCL-only and
    /// NVOCC-only.
    NvoccOnlyMix,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Profile::Uniform),
            "consolidation_favorable" => Ok(Profile::ConsolidationFavorable),
            "nvocc_only_mix" => Ok(Profile::NvoccOnlyMix),
            other => {
                Err(format!("unknown profile `{other}` (expected uniform, consolidation_favorable or nvocc_only_mix)"))
            }
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Uniform => "uniform",
            Profile::ConsolidationFavorable => "consolidation_favorable",
            Profile::NvoccOnlyMix => "nvocc_only_mix",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub branches: usize,
    pub origin_ports: usize,
    pub destinations: usize,
    /// Probability that a `(b, t)` pair carries demand.
    pub density: f64,
    pub profile: Profile,
    /// Number of land volume bands.
    pub volume_bands: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            branches: 4,
            origin_ports: 2,
            destinations: 2,
            density: 0.6,
            profile: Profile::Uniform,
            volume_bands: 8,
        }
    }
}

const DISTANCE_BANDS: usize = 6;
const MIN_DEMAND: f64 = 0.1;
const MAX_DEMAND: f64 = 30.0;
/// Favorable shipments start above the linear head of the approximated
/// tariff, where bundling actually saves money.
const MIN_FAVORABLE_DEMAND: f64 = 4.0;

fn ids(prefix: char, n: usize) -> Vec<String> {
    let width = n.to_string().len().max(2);
    (1..=n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Rounds to cents. Dividing by the scale keeps the result the closest
/// double to the decimal, so files show `0.69` and not `0.6900000000000001`.
fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Volume breaks `u·((k+1)/n)²`, so small volumes get fine steps.
fn volume_breaks(n: usize, full: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (1..=n).map(|k| cents(full * (k as f64 / n as f64).powi(2))).collect();
    out.dedup();
    *out.last_mut().expect("at least one band") = full;
    out
}

/// Tariff with a truck price rising with distance; `fixed` is the share of a
/// truck charged for the smallest volume band.
fn land_table(max_distance: f64, bands: usize, full: f64, fixed: f64) -> LandCostTable {
    let step = (max_distance / DISTANCE_BANDS as f64 / 10.0).ceil().max(1.0) * 10.0;
    let distance_breaks: Vec<f64> = (1..=DISTANCE_BANDS).map(|k| k as f64 * step).collect();
    let volume_breaks = volume_breaks(bands, full);
    let cost = distance_breaks
        .iter()
        .map(|&d| {
            let truck = 100.0 + 1.3 * (d - step / 2.0);
            volume_breaks.iter().map(|&v| cents(truck * (fixed + (1.0 - fixed) * (v / full).powf(0.6)))).collect()
        })
        .collect();
    LandCostTable { distance_breaks, volume_breaks, cost }
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt().round()
}

/// Generates an instance. Deterministic in the configuration.
///
/// # Panics
/// If a size is zero or `density` is outside `(0, 1]`.
pub fn generate(cfg: &GenConfig) -> Instance {
    assert!(cfg.branches > 0 && cfg.origin_ports > 0 && cfg.destinations > 0, "sizes must be positive");
    assert!(cfg.density > 0.0 && cfg.density <= 1.0, "density must lie in (0, 1]");
    assert!(cfg.volume_bands > 0, "at least one volume band");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let favorable = cfg.profile == Profile::ConsolidationFavorable;

    let branch_xy: Vec<(f64, f64)> = (0..cfg.branches)
        .map(|_| {
            if favorable {
                (rng.gen_range(0.0..80.0), rng.gen_range(0.0..80.0))
            } else {
                (rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0))
            }
        })
        .collect();
    let port_xy: Vec<(f64, f64)> = (0..cfg.origin_ports)
        .map(|_| {
            if favorable {
                (rng.gen_range(600.0..900.0), rng.gen_range(0.0..300.0))
            } else {
                (rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0))
            }
        })
        .collect();

    let nodes = NodeSets {
        branches: ids('B', cfg.branches),
        origin_ports: ids('S', cfg.origin_ports),
        destination_ports: ids('T', cfg.destinations),
    };
    let params = Parameters::default();
    let branch_distance: Vec<Vec<f64>> =
        branch_xy.iter().map(|&a| branch_xy.iter().map(|&b| distance(a, b)).collect()).collect();
    let port_distance: Vec<Vec<f64>> =
        branch_xy.iter().map(|&a| port_xy.iter().map(|&p| distance(a, p)).collect()).collect();
    let max_distance = branch_distance.iter().chain(&port_distance).flatten().fold(1.0, |m: f64, &d| m.max(d));
    let fixed = if favorable { 0.5 } else { 0.15 };
    let table = land_table(max_distance, cfg.volume_bands, params.land_container_volume, fixed);

    let mut inst = Instance::empty(nodes, table, params);
    inst.branch_distance = branch_distance;
    inst.port_distance = port_distance;

    for s in 0..cfg.origin_ports {
        for t in 0..cfg.destinations {
            // Every destination keeps at least its first-listed port.
            let served = s == t % cfg.origin_ports || rng.gen_bool(0.8);
            let fcl = cents(rng.gen_range(1200.0..2400.0));
            let nvocc = cents(rng.gen_range(45.0..80.0));
            let kind = if cfg.profile == Profile::NvoccOnlyMix { rng.gen_range(0..3) } else { 0 };
            if served {
                inst.sea_rates[s][t] = Some(match kind {
                    0 => SeaRate::both(fcl, nvocc),
                    1 => SeaRate::fcl_only(fcl),
                    _ => SeaRate::nvocc_only(nvocc),
                });
            }
        }
    }
    for b in 0..cfg.branches {
        inst.setup_cost[b] = cents(if favorable { rng.gen_range(10.0..40.0) } else { rng.gen_range(50.0..300.0) });
        inst.hub_consolidation_cost[b] =
            cents(if favorable { rng.gen_range(0.2..1.0) } else { rng.gen_range(1.0..5.0) });
    }
    for s in 0..cfg.origin_ports {
        inst.port_consolidation_cost[s] = cents(rng.gen_range(2.0..8.0));
    }

    let min_demand = if favorable { MIN_FAVORABLE_DEMAND } else { MIN_DEMAND };
    let (lo, hi) = (min_demand.ln(), MAX_DEMAND.ln());
    for b in 0..cfg.branches {
        for t in 0..cfg.destinations {
            if rng.gen_bool(cfg.density) {
                inst.demand[b][t] = cents(rng.gen_range(lo..hi).exp()).max(min_demand);
            }
        }
    }
    if inst.relations().is_empty() {
        inst.demand[0][0] = cents(rng.gen_range(lo..hi).exp()).max(min_demand);
    }
    inst
}

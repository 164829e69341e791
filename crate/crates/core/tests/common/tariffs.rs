//! Random tariffs and straight reference pricers.

use hublocate::cost::{LandCostTable, SeaRate};
use proptest::prelude::*;

pub const CASES: u32 = 10_000;
pub const SEA_CONTAINER: f64 = 55.0;
pub const NVOCC_CAP: f64 = 40.0;
pub const PENALTY: f64 = 1e8;

/// Random tariff: 1–4 distance bands, 1–10 volume bands ending at a full
/// truck, costs non-decreasing along the volume axis.
pub fn table() -> impl Strategy<Value = LandCostTable> {
    (1usize..=4, 1usize..=10, 10.0f64..100.0).prop_flat_map(|(nd, nv, full)| {
        (
            prop::collection::vec(1.0f64..300.0, nd),
            prop::collection::vec(0.01f64..0.999, nv - 1),
            prop::collection::vec(prop::collection::vec(0.0f64..200.0, nv), nd),
            Just(full),
        )
            .prop_map(|(dsteps, fracs, increments, full)| {
                let mut distance_breaks = Vec::new();
                let mut acc = 0.0;
                for d in dsteps {
                    acc += d;
                    distance_breaks.push(acc);
                }
                let mut volume_breaks: Vec<f64> = fracs.iter().map(|f| (f * full * 100.0).round() / 100.0).collect();
                volume_breaks.push(full);
                volume_breaks.sort_by(f64::total_cmp);
                volume_breaks.dedup();
                let nv = volume_breaks.len();
                let cost = increments
                    .into_iter()
                    .map(|row| {
                        let mut c = 0.0;
                        row.into_iter()
                            .take(nv)
                            .map(|inc| {
                                c += inc;
                                c
                            })
                            .collect()
                    })
                    .collect();
                LandCostTable { distance_breaks, volume_breaks, cost }
            })
    })
}

/// Straight transcription of the tariff: whole trucks at the full price and
/// the rest priced by the first volume break that holds it.
pub fn reference_exact(table: &LandCostTable, distance: f64, volume: f64) -> f64 {
    let band = table.distance_breaks.iter().position(|&b| distance < b).unwrap_or(table.distance_breaks.len() - 1);
    let row = &table.cost[band];
    let full = *table.volume_breaks.last().unwrap();
    let mut n = (volume / full).floor();
    let mut rest = volume - n * full;
    if rest > full - 1e-9 {
        n += 1.0;
        rest = 0.0;
    }
    let price = |x: f64| {
        if x <= 1e-9 {
            0.0
        } else {
            row[table.volume_breaks.iter().position(|&b| x <= b + 1e-9).unwrap()]
        }
    };
    n * price(full) + price(rest)
}

pub fn rate() -> impl Strategy<Value = SeaRate> {
    (0u8..3, 100.0f64..3000.0, 5.0f64..120.0).prop_map(|(kind, fcl, nvocc)| match kind {
        0 => SeaRate::both(fcl, nvocc),
        1 => SeaRate::fcl_only(fcl),
        _ => SeaRate::nvocc_only(nvocc),
    })
}

/// Rates that offer FCL, with or without NVOCC.
pub fn fcl_rate() -> impl Strategy<Value = SeaRate> {
    (any::<bool>(), 100.0f64..3000.0, 5.0f64..120.0).prop_map(|(nvocc, fcl, per_m3)| {
        if nvocc {
            SeaRate::both(fcl, per_m3)
        } else {
            SeaRate::fcl_only(fcl)
        }
    })
}

/// Cheapest cover found by trying every container count up to two past
/// the all-container count; the NVOCC share takes whatever is left.
pub fn reference_sea(rate: &SeaRate, v: f64) -> f64 {
    let limit = match (rate.fcl_per_container, rate.nvocc_per_m3) {
        (_, None) => 0.0,
        (None, Some(_)) => NVOCC_CAP,
        (Some(f), Some(n)) => NVOCC_CAP.min(f / n),
    };
    let container = rate.fcl_per_container.unwrap_or(PENALTY);
    let per_m3 = rate.nvocc_per_m3.unwrap_or(0.0);
    let most = (v / SEA_CONTAINER).ceil() as u32 + 2;
    (0..=most)
        .filter_map(|n| {
            let rest = (v - n as f64 * SEA_CONTAINER).max(0.0);
            (rest <= limit + 1e-9).then_some(n as f64 * container + rest * per_m3)
        })
        .fold(f64::INFINITY, f64::min)
}

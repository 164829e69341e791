//! Stepwise land tariffs, their breakpoint approximation, and the sea tariff.
//!
//! Land transport is priced from a distance-band × volume-band matrix. A
//! shipment of volume `v` on one arc is split into `n` full trucks plus a rest
//! `u`; the exact tariff charges `n` full-truck prices plus the step containing
//! `u`. The approximated tariff replaces every step below a tenth of a truck by
//! a straight line through the origin, which is what the linearized model can
//! express with a single continuous variable.
//!
//! Sea transport mixes full containers (priced per container) with NVOCC
//! consolidation (priced per m³, capped at `u_lim`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Volumes closer than this to a breakpoint are treated as lying on it.
///
/// All step lookups are right-closed, so a volume a rounding error above a
/// breakpoint is priced on the cheaper side, consistent with the model's
/// `≤` capacity rows.
pub const VOLUME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("distance {distance} km is outside the tariff range [0, {max}]")]
    DistanceOutOfRange { distance: f64, max: f64 },
    #[error("negative volume {0}")]
    NegativeVolume(f64),
}

/// Distance-band × volume-band land tariff.
///
/// `distance_breaks[k]` is the (exclusive) upper end of distance band `k`; the
/// first band starts at 0 km and the last band is closed. `volume_breaks[i]` is
/// the inclusive upper end of volume band `i`, the first band starting just
/// above 0 m³. The last volume break is the volume of a full truck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandCostTable {
    pub distance_breaks: Vec<f64>,
    pub volume_breaks: Vec<f64>,
    /// `cost[distance_band][volume_band]`.
    pub cost: Vec<Vec<f64>>,
}

impl LandCostTable {
    /// Volume of one full truck (the last volume break).
    pub fn container_volume(&self) -> f64 {
        self.volume_breaks.last().copied().unwrap_or(0.0)
    }

    pub fn max_distance(&self) -> f64 {
        self.distance_breaks.last().copied().unwrap_or(0.0)
    }

    /// Structural problems with the table, as human-readable messages.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.distance_breaks.is_empty() {
            out.push("no distance bands".to_string());
        }
        if self.volume_breaks.is_empty() {
            out.push("no volume bands".to_string());
        }
        if !strictly_ascending_positive(&self.distance_breaks) {
            out.push("distance breaks must be finite, positive and strictly ascending".to_string());
        }
        if !strictly_ascending_positive(&self.volume_breaks) {
            out.push("volume breaks must be finite, positive and strictly ascending".to_string());
        }
        if self.cost.len() != self.distance_breaks.len() {
            out.push(format!(
                "cost matrix has {} rows, expected one per distance band ({})",
                self.cost.len(),
                self.distance_breaks.len()
            ));
        }
        for (k, row) in self.cost.iter().enumerate() {
            if row.len() != self.volume_breaks.len() {
                out.push(format!(
                    "cost row {k} has {} entries, expected one per volume band ({})",
                    row.len(),
                    self.volume_breaks.len()
                ));
                continue;
            }
            if row.iter().any(|c| !c.is_finite() || *c < 0.0) {
                out.push(format!("cost row {k} contains a negative or non-finite value"));
            }
            if row.windows(2).any(|w| w[1] < w[0]) {
                out.push(format!("cost row {k} decreases along the volume axis"));
            }
        }
        out
    }

    /// Index of the distance band containing `distance`.
    pub fn distance_band(&self, distance: f64) -> Result<usize, CostError> {
        let max = self.max_distance();
        if distance.is_nan() || distance < 0.0 || distance > max {
            return Err(CostError::DistanceOutOfRange { distance, max });
        }
        let band = self.distance_breaks.partition_point(|&b| b <= distance);
        Ok(band.min(self.distance_breaks.len() - 1))
    }

    /// Matrix value `C(x)` for a rest volume `0 ≤ x ≤ u_cont`; `C(0) = 0`.
    pub fn step_cost(&self, band: usize, volume: f64) -> f64 {
        if volume <= VOLUME_EPS {
            return 0.0;
        }
        let row = &self.cost[band];
        let idx = self.volume_breaks.partition_point(|&b| b + VOLUME_EPS < volume);
        row[idx.min(row.len() - 1)]
    }

    /// Breakpoints `v(0) = u_cont/10 < v(1) < … < v(j) = u_cont` of the
    /// approximated tariff. They do not depend on the distance band.
    pub fn approx_breakpoints(&self) -> Vec<f64> {
        let full = self.container_volume();
        let head = full / 10.0;
        let mut out = vec![head];
        for &b in &self.volume_breaks {
            if b > head + VOLUME_EPS {
                out.push(b);
            }
        }
        out
    }
}

fn strictly_ascending_positive(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite() && *v > 0.0) && values.windows(2).all(|w| w[0] < w[1])
}

/// Splits `volume` into the maximal number of full containers and a rest.
///
/// At exact multiples the rest is zero. Rests within [`VOLUME_EPS`] of zero or
/// of a full container snap to the nearer multiple.
pub fn split_containers(volume: f64, container: f64) -> (u64, f64) {
    if volume <= VOLUME_EPS {
        return (0, 0.0);
    }
    let mut full = (volume / container).floor();
    let mut rest = volume - full * container;
    if rest >= container - VOLUME_EPS {
        full += 1.0;
        rest = 0.0;
    }
    if rest <= VOLUME_EPS {
        rest = 0.0;
    }
    (full as u64, rest.max(0.0))
}

/// Exact land cost `n·C(full) + C(u)` of moving `volume` over `distance_km`.
pub fn land_cost_exact(table: &LandCostTable, distance_km: f64, volume: f64) -> Result<f64, CostError> {
    if volume < 0.0 {
        return Err(CostError::NegativeVolume(volume));
    }
    let band = table.distance_band(distance_km)?;
    Ok(exact_in_band(table, band, volume))
}

pub(crate) fn exact_in_band(table: &LandCostTable, band: usize, volume: f64) -> f64 {
    let full = table.container_volume();
    let (n, rest) = split_containers(volume, full);
    n as f64 * table.step_cost(band, full) + table.step_cost(band, rest)
}

/// Breakpoint approximation of the land tariff for one distance band.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxLandCurve {
    /// `v(0) < v(1) < … < v(j)`, with `v(j)` a full truck.
    pub breakpoints: Vec<f64>,
    /// `C̃(i)`, the tariff value at `v(i)`.
    pub values: Vec<f64>,
}

/// Which piece of the approximated tariff prices the rest volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RestPiece {
    /// No rest volume.
    Empty,
    /// Linear head: the rest is this fraction of `v(0)`.
    Linear(f64),
    /// Constant step `i` (1 ≤ i < j): rest in `(v(i-1), v(i)]`.
    Step(usize),
}

/// Full trucks plus the piece pricing the rest, as the linearized model sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxDecomposition {
    pub containers: u64,
    pub rest: RestPiece,
}

impl ApproxLandCurve {
    /// Index `j` of the last breakpoint.
    pub fn last(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn full_volume(&self) -> f64 {
        self.breakpoints[self.last()]
    }

    /// Decomposition used by both the cost evaluation and the model encoder.
    ///
    /// A rest in the last interval `(v(j-1), v(j)]` is charged as one more full
    /// truck, since the model has no step variable for it.
    pub fn decompose(&self, volume: f64) -> ApproxDecomposition {
        let (n, rest) = split_containers(volume, self.full_volume());
        if rest == 0.0 {
            return ApproxDecomposition { containers: n, rest: RestPiece::Empty };
        }
        let head = self.breakpoints[0];
        if rest <= head + VOLUME_EPS {
            return ApproxDecomposition { containers: n, rest: RestPiece::Linear((rest / head).min(1.0)) };
        }
        let i = self.breakpoints.partition_point(|&b| b + VOLUME_EPS < rest).min(self.last());
        if i == self.last() {
            ApproxDecomposition { containers: n + 1, rest: RestPiece::Empty }
        } else {
            ApproxDecomposition { containers: n, rest: RestPiece::Step(i) }
        }
    }

    pub fn cost_of(&self, decomposition: &ApproxDecomposition) -> f64 {
        let trucks = decomposition.containers as f64 * self.values[self.last()];
        trucks
            + match decomposition.rest {
                RestPiece::Empty => 0.0,
                RestPiece::Linear(f) => f * self.values[0],
                RestPiece::Step(i) => self.values[i],
            }
    }

    /// Covered volume of a decomposition: `v(j)·n + v(0)·f` or `v(j)·n + v(i)`.
    pub fn capacity_of(&self, decomposition: &ApproxDecomposition) -> f64 {
        let trucks = decomposition.containers as f64 * self.full_volume();
        trucks
            + match decomposition.rest {
                RestPiece::Empty => 0.0,
                RestPiece::Linear(f) => f * self.breakpoints[0],
                RestPiece::Step(i) => self.breakpoints[i],
            }
    }
}

/// Approximated land cost `Γ̃(v)`.
pub fn land_cost_approx(curve: &ApproxLandCurve, volume: f64) -> f64 {
    curve.cost_of(&curve.decompose(volume))
}

/// Builds the approximated tariff curve for the band containing `distance_km`.
pub fn land_breakpoints(table: &LandCostTable, distance_km: f64) -> Result<ApproxLandCurve, CostError> {
    let band = table.distance_band(distance_km)?;
    Ok(curve_for_band(table, band))
}

pub(crate) fn curve_for_band(table: &LandCostTable, band: usize) -> ApproxLandCurve {
    let breakpoints = table.approx_breakpoints();
    let values = breakpoints.iter().map(|&v| table.step_cost(band, v)).collect();
    ApproxLandCurve { breakpoints, values }
}

/// Per-relation sea tariff; at least one of the two prices is present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeaRate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fcl_per_container: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nvocc_per_m3: Option<f64>,
}

impl SeaRate {
    pub fn both(fcl_per_container: f64, nvocc_per_m3: f64) -> Self {
        Self { fcl_per_container: Some(fcl_per_container), nvocc_per_m3: Some(nvocc_per_m3) }
    }

    pub fn fcl_only(fcl_per_container: f64) -> Self {
        Self { fcl_per_container: Some(fcl_per_container), nvocc_per_m3: None }
    }

    pub fn nvocc_only(nvocc_per_m3: f64) -> Self {
        Self { fcl_per_container: None, nvocc_per_m3: Some(nvocc_per_m3) }
    }

    pub fn is_valid(&self) -> bool {
        let ok = |p: Option<f64>| p.is_none_or(|v| v.is_finite() && v > 0.0);
        (self.fcl_per_container.is_some() || self.nvocc_per_m3.is_some())
            && ok(self.fcl_per_container)
            && ok(self.nvocc_per_m3)
    }

    /// `u_lim`: NVOCC volume beyond which a container is at least as cheap.
    pub fn nvocc_limit(&self, nvocc_cap: f64) -> f64 {
        match (self.fcl_per_container, self.nvocc_per_m3) {
            (_, None) => 0.0,
            (None, Some(_)) => nvocc_cap,
            (Some(fcl), Some(nvocc)) => nvocc_cap.min(fcl / nvocc),
        }
    }

    /// Price of one container; the penalty when only NVOCC is offered.
    pub fn container_price(&self, penalty: f64) -> f64 {
        self.fcl_per_container.unwrap_or(penalty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeaCost {
    pub cost: f64,
    pub containers: u64,
    pub nvocc_volume: f64,
}

fn containers_to_cover(volume: f64, container: f64) -> u64 {
    if volume <= VOLUME_EPS {
        0
    } else {
        ((volume - VOLUME_EPS) / container).ceil().max(0.0) as u64
    }
}

/// Cheapest mix of containers and NVOCC volume covering `volume`, with the
/// NVOCC share capped at the rate's `u_lim`. Ties go to more containers.
pub fn sea_cost(rate: &SeaRate, volume: f64, container: f64, nvocc_cap: f64, penalty: f64) -> SeaCost {
    sea_cost_with_limit(rate, volume, container, rate.nvocc_limit(nvocc_cap), penalty)
}

/// [`sea_cost`] with an explicit NVOCC cap (0 when NVOCC is unavailable).
pub fn sea_cost_with_limit(rate: &SeaRate, volume: f64, container: f64, limit: f64, penalty: f64) -> SeaCost {
    let limit = if rate.nvocc_per_m3.is_some() { limit } else { 0.0 };
    let per_container = rate.container_price(penalty);
    let per_m3 = rate.nvocc_per_m3.unwrap_or(0.0);
    let fewest = containers_to_cover(volume - limit, container);
    let most = containers_to_cover(volume, container);
    let mut best = SeaCost { cost: f64::INFINITY, containers: 0, nvocc_volume: 0.0 };
    for n in fewest..=most {
        let mut rest = (volume - n as f64 * container).max(0.0);
        if rest <= VOLUME_EPS {
            rest = 0.0;
        }
        let rest = rest.min(limit);
        let cost = n as f64 * per_container + rest * per_m3;
        let tol = 1e-9 * best.cost.abs().max(1.0);
        if cost <= best.cost + tol {
            best = SeaCost { cost, containers: n, nvocc_volume: rest };
        }
    }
    best
}

/// Chargeable weight in kg of `volume` m³ under a dimensional factor.
pub fn chargeable_weight(volume: f64, kg_per_m3: f64) -> f64 {
    volume * kg_per_m3
}

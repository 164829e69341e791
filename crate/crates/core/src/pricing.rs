//! Per-arc cost lookups for one instance, with distance bands resolved once.

use serde::{Deserialize, Serialize};

use crate::cost::{self, ApproxLandCurve, CostError};
use crate::network::Instance;

/// Land pricing mode: the stepwise tariff or its breakpoint approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    #[default]
    Exact,
    Approx,
}

impl std::str::FromStr for CostMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(CostMode::Exact),
            "approx" => Ok(CostMode::Approx),
            other => Err(format!("unknown cost mode `{other}` (expected exact or approx)")),
        }
    }
}

impl std::fmt::Display for CostMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CostMode::Exact => "exact",
            CostMode::Approx => "approx",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Pricer<'a> {
    pub instance: &'a Instance,
    curves: Vec<ApproxLandCurve>,
    branch_band: Vec<Vec<usize>>,
    port_band: Vec<Vec<usize>>,
    sea_limit: Vec<Vec<f64>>,
}

impl<'a> Pricer<'a> {
    pub fn new(instance: &'a Instance) -> Result<Self, CostError> {
        let table = &instance.land_costs;
        let curves = (0..table.distance_breaks.len()).map(|k| cost::curve_for_band(table, k)).collect();
        let band_matrix = |m: &[Vec<f64>]| -> Result<Vec<Vec<usize>>, CostError> {
            m.iter().map(|row| row.iter().map(|&d| table.distance_band(d)).collect()).collect()
        };
        let branch_band = band_matrix(&instance.branch_distance)?;
        let port_band = band_matrix(&instance.port_distance)?;
        let sea_limit = instance
            .sea_rates
            .iter()
            .map(|row| row.iter().map(|r| r.map_or(0.0, |r| r.nvocc_limit(instance.params.nvocc_cap))).collect())
            .collect();
        Ok(Self { instance, curves, branch_band, port_band, sea_limit })
    }

    /// Breakpoints of the approximated tariff, shared by every distance band.
    pub fn breakpoints(&self) -> &[f64] {
        &self.curves[0].breakpoints
    }

    /// True when every approximated curve is non-decreasing, so adding volume
    /// to an arc never lowers its cost.
    pub fn is_monotone(&self) -> bool {
        self.curves.iter().all(|c| c.values[0] >= 0.0 && c.values.windows(2).all(|w| w[0] <= w[1]))
    }

    pub fn branch_curve(&self, b: usize, h: usize) -> &ApproxLandCurve {
        &self.curves[self.branch_band[b][h]]
    }

    pub fn port_curve(&self, b: usize, s: usize) -> &ApproxLandCurve {
        &self.curves[self.port_band[b][s]]
    }

    fn land(&self, band: usize, curve: &ApproxLandCurve, volume: f64, mode: CostMode) -> f64 {
        match mode {
            CostMode::Exact => cost::exact_in_band(&self.instance.land_costs, band, volume),
            CostMode::Approx => cost::land_cost_approx(curve, volume),
        }
    }

    /// Land cost of `volume` on branch → branch arc `b → h`.
    pub fn branch_arc(&self, b: usize, h: usize, volume: f64, mode: CostMode) -> f64 {
        let band = self.branch_band[b][h];
        self.land(band, &self.curves[band], volume, mode)
    }

    /// Land cost of `volume` on branch → origin-port arc `b → s`.
    pub fn port_arc(&self, b: usize, s: usize, volume: f64, mode: CostMode) -> f64 {
        let band = self.port_band[b][s];
        self.land(band, &self.curves[band], volume, mode)
    }

    pub fn sea_limit(&self, s: usize, t: usize) -> f64 {
        self.sea_limit[s][t]
    }

    /// Sea cost on `s → t`; infinite for positive volume on an unserved relation.
    pub fn sea(&self, s: usize, t: usize, volume: f64) -> f64 {
        match &self.instance.sea_rates[s][t] {
            Some(rate) => {
                let p = &self.instance.params;
                cost::sea_cost_with_limit(rate, volume, p.sea_container_volume, self.sea_limit[s][t], p.penalty).cost
            }
            None if volume > 0.0 => f64::INFINITY,
            None => 0.0,
        }
    }
}

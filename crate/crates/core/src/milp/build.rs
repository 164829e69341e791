//! The linearized hub-location MILP: construction, and the mapping between
//! routing plans and variable assignments.

use std::collections::BTreeSet;

use thiserror::Error;

use super::model::{MilpModel, ModelError, Sense, VarKind};
use crate::cost::{ApproxLandCurve, CostError, RestPiece};
use crate::network::{validate_instance, Instance, ValidationReport};
use crate::pricing::Pricer;
use crate::solution::{check_feasibility, Flows, Solution, StructureError, ViolationReport};

/// Variable and row names. These are the contract for reading solver output.
pub mod names {
    use crate::network::Instance;

    pub fn z(i: &Instance, b: usize, t: usize, s: usize) -> String {
        format!("z_{}_{}_{}", i.branch_id(b), i.destination_id(t), i.port_id(s))
    }
    pub fn x(i: &Instance, b: usize) -> String {
        format!("x_{}", i.branch_id(b))
    }
    pub fn y(i: &Instance, b: usize, s: usize, h: usize) -> String {
        format!("y_{}_{}_{}", i.branch_id(b), i.port_id(s), i.branch_id(h))
    }
    pub fn vd(i: &Instance, b: usize, s: usize) -> String {
        format!("vd_{}_{}", i.branch_id(b), i.port_id(s))
    }
    pub fn vh(i: &Instance, b: usize, s: usize, h: usize) -> String {
        format!("vh_{}_{}_{}", i.branch_id(b), i.port_id(s), i.branch_id(h))
    }
    pub fn n_land(b: &str, r: &str) -> String {
        format!("nL_{b}_{r}")
    }
    pub fn u_land(step: usize, b: &str, r: &str) -> String {
        format!("uL{step}_{b}_{r}")
    }
    pub fn n_sea(i: &Instance, s: usize, t: usize) -> String {
        format!("nS_{}_{}", i.port_id(s), i.destination_id(t))
    }
    pub fn u_sea(i: &Instance, s: usize, t: usize) -> String {
        format!("uS_{}_{}", i.port_id(s), i.destination_id(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelOptions {
    /// When false, every hub family is left out and only port choice remains.
    pub allow_hubs: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { allow_hubs: true }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("instance is invalid:\n{0}")]
    InvalidInstance(ValidationReport),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Builds the full linearized model.
pub fn build_linearized_model(instance: &Instance) -> Result<MilpModel, BuildError> {
    build_model(instance, ModelOptions::default())
}

/// Destination of a land arc: another branch (hub) or an origin port.
#[derive(Clone, Copy)]
enum ArcEnd {
    Hub(usize),
    Port(usize),
}

fn arc_ends(instance: &Instance, allow_hubs: bool) -> Vec<ArcEnd> {
    let hubs = (0..instance.num_branches()).filter(|_| allow_hubs).map(ArcEnd::Hub);
    hubs.chain((0..instance.num_origin_ports()).map(ArcEnd::Port)).collect()
}

fn arc_end_id(instance: &Instance, r: ArcEnd) -> &str {
    match r {
        ArcEnd::Hub(h) => instance.branch_id(h),
        ArcEnd::Port(s) => instance.port_id(s),
    }
}

fn arc_curve<'p>(pricer: &'p Pricer<'_>, b: usize, r: ArcEnd) -> &'p ApproxLandCurve {
    match r {
        ArcEnd::Hub(h) => pricer.branch_curve(b, h),
        ArcEnd::Port(s) => pricer.port_curve(b, s),
    }
}

pub fn build_model(instance: &Instance, options: ModelOptions) -> Result<MilpModel, BuildError> {
    let report = validate_instance(instance);
    if !report.is_valid() {
        return Err(BuildError::InvalidInstance(report));
    }
    let pricer = Pricer::new(instance)?;
    let hubs = options.allow_hubs;
    let nb = instance.num_branches();
    let ns = instance.num_origin_ports();
    let nt = instance.num_destinations();
    let mut m = MilpModel::new(if hubs { "hublocate" } else { "hublocate_nohub" });
    let req = |m: &MilpModel, name: String| m.var(&name).expect("declared above");

    for (b, t) in instance.relations() {
        for s in instance.usable_ports(t) {
            let obj = instance.port_consolidation_cost[s] * instance.demand[b][t];
            m.add_variable(names::z(instance, b, t, s), VarKind::Binary, 0.0, Some(1.0), obj)?;
        }
    }
    if hubs {
        for b in 0..nb {
            m.add_variable(names::x(instance, b), VarKind::Binary, 0.0, Some(1.0), instance.setup_cost[b])?;
        }
        for b in 0..nb {
            for s in 0..ns {
                for h in 0..nb {
                    m.add_variable(names::y(instance, b, s, h), VarKind::Binary, 0.0, Some(1.0), 0.0)?;
                }
            }
        }
    }
    for b in 0..nb {
        for s in 0..ns {
            m.add_variable(names::vd(instance, b, s), VarKind::Continuous, 0.0, None, 0.0)?;
        }
    }
    if hubs {
        for b in 0..nb {
            for s in 0..ns {
                for h in 0..nb {
                    let f = instance.hub_consolidation_cost[h];
                    m.add_variable(names::vh(instance, b, s, h), VarKind::Continuous, 0.0, None, f)?;
                }
            }
        }
    }
    let ends = arc_ends(instance, hubs);
    for b in 0..nb {
        let bid = instance.branch_id(b);
        for &r in &ends {
            let rid = arc_end_id(instance, r);
            let curve = arc_curve(&pricer, b, r);
            let j = curve.last();
            m.add_variable(names::n_land(bid, rid), VarKind::Integer, 0.0, None, curve.values[j])?;
            m.add_variable(names::u_land(0, bid, rid), VarKind::Continuous, 0.0, Some(1.0), curve.values[0])?;
            for i in 1..j {
                m.add_variable(names::u_land(i, bid, rid), VarKind::Binary, 0.0, Some(1.0), curve.values[i])?;
            }
        }
    }
    for s in 0..ns {
        for t in 0..nt {
            let Some(rate) = instance.sea_rates[s][t] else { continue };
            let price = rate.container_price(instance.params.penalty);
            m.add_variable(names::n_sea(instance, s, t), VarKind::Integer, 0.0, None, price)?;
            if let Some(nvocc) = rate.nvocc_per_m3 {
                let limit = pricer.sea_limit(s, t);
                m.add_variable(names::u_sea(instance, s, t), VarKind::Continuous, 0.0, Some(limit), nvocc)?;
            }
        }
    }

    // Port choice per relation.
    for (b, t) in instance.relations() {
        let terms = instance.usable_ports(t).into_iter().map(|s| (req(&m, names::z(instance, b, t, s)), 1.0)).collect();
        m.add_constraint(
            format!("port_{}_{}", instance.branch_id(b), instance.destination_id(t)),
            terms,
            Sense::Eq,
            1.0,
        )?;
    }
    if hubs {
        for b in 0..nb {
            for s in 0..ns {
                let terms = (0..nb).map(|h| (req(&m, names::y(instance, b, s, h)), 1.0)).collect();
                m.add_constraint(
                    format!("onehub_{}_{}", instance.branch_id(b), instance.port_id(s)),
                    terms,
                    Sense::Le,
                    1.0,
                )?;
            }
        }
        for b in 0..nb {
            for s in 0..ns {
                for h in 0..nb {
                    let terms =
                        vec![(req(&m, names::y(instance, b, s, h)), 1.0), (req(&m, names::x(instance, h)), -1.0)];
                    let name =
                        format!("open_{}_{}_{}", instance.branch_id(b), instance.port_id(s), instance.branch_id(h));
                    m.add_constraint(name, terms, Sense::Le, 0.0)?;
                }
            }
        }
        for h in 0..nb {
            for s in 0..ns {
                for c in 0..nb {
                    let terms =
                        vec![(req(&m, names::y(instance, h, s, c)), 1.0), (req(&m, names::x(instance, h)), 1.0)];
                    let name =
                        format!("norelay_{}_{}_{}", instance.branch_id(h), instance.port_id(s), instance.branch_id(c));
                    m.add_constraint(name, terms, Sense::Le, 1.0)?;
                }
            }
        }
    }
    // Volume split: everything assigned to s leaves b directly or via one hub.
    for b in 0..nb {
        for s in 0..ns {
            let mut terms = Vec::new();
            for t in 0..nt {
                if let Some(z) = m.var(&names::z(instance, b, t, s)) {
                    terms.push((z, instance.demand[b][t]));
                }
            }
            terms.push((req(&m, names::vd(instance, b, s)), -1.0));
            if hubs {
                for h in 0..nb {
                    terms.push((req(&m, names::vh(instance, b, s, h)), -1.0));
                }
            }
            m.add_constraint(
                format!("split_{}_{}", instance.branch_id(b), instance.port_id(s)),
                terms,
                Sense::Eq,
                0.0,
            )?;
        }
    }
    if hubs {
        for b in 0..nb {
            let big_m = instance.branch_volume(b);
            for s in 0..ns {
                for h in 0..nb {
                    let mut terms = vec![(req(&m, names::vh(instance, b, s, h)), 1.0)];
                    if big_m != 0.0 {
                        terms.push((req(&m, names::y(instance, b, s, h)), -big_m));
                    }
                    let name =
                        format!("bigm_{}_{}_{}", instance.branch_id(b), instance.port_id(s), instance.branch_id(h));
                    m.add_constraint(name, terms, Sense::Le, 0.0)?;
                }
            }
        }
    }
    // Land capacity: arc load ≤ v(j)·n + Σ v(i)·u(i).
    let capacity_terms = |m: &MilpModel, b: usize, r: ArcEnd| -> Vec<(usize, f64)> {
        let bid = instance.branch_id(b);
        let rid = arc_end_id(instance, r);
        let curve = arc_curve(&pricer, b, r);
        let j = curve.last();
        let mut terms = vec![(req(m, names::n_land(bid, rid)), -curve.breakpoints[j])];
        for i in 0..j {
            terms.push((req(m, names::u_land(i, bid, rid)), -curve.breakpoints[i]));
        }
        terms
    };
    for b in 0..nb {
        for s in 0..ns {
            let mut terms = vec![(req(&m, names::vd(instance, b, s)), 1.0)];
            if hubs {
                for c in 0..nb {
                    terms.push((req(&m, names::vh(instance, c, s, b)), 1.0));
                }
            }
            terms.extend(capacity_terms(&m, b, ArcEnd::Port(s)));
            m.add_constraint(
                format!("landport_{}_{}", instance.branch_id(b), instance.port_id(s)),
                terms,
                Sense::Le,
                0.0,
            )?;
        }
    }
    if hubs {
        for b in 0..nb {
            for h in 0..nb {
                let mut terms: Vec<(usize, f64)> =
                    (0..ns).map(|s| (req(&m, names::vh(instance, b, s, h)), 1.0)).collect();
                terms.extend(capacity_terms(&m, b, ArcEnd::Hub(h)));
                m.add_constraint(
                    format!("landhub_{}_{}", instance.branch_id(b), instance.branch_id(h)),
                    terms,
                    Sense::Le,
                    0.0,
                )?;
            }
        }
    }
    for b in 0..nb {
        let bid = instance.branch_id(b);
        for &r in &ends {
            let rid = arc_end_id(instance, r);
            let j = arc_curve(&pricer, b, r).last();
            let terms = (0..j).map(|i| (req(&m, names::u_land(i, bid, rid)), 1.0)).collect();
            m.add_constraint(format!("step_{bid}_{rid}"), terms, Sense::Le, 1.0)?;
        }
    }
    let u_sea = instance.params.sea_container_volume;
    for s in 0..ns {
        for t in 0..nt {
            if instance.sea_rates[s][t].is_none() {
                continue;
            }
            let mut terms = Vec::new();
            for b in 0..nb {
                if let Some(z) = m.var(&names::z(instance, b, t, s)) {
                    terms.push((z, instance.demand[b][t]));
                }
            }
            terms.push((req(&m, names::n_sea(instance, s, t)), -u_sea));
            if let Some(u) = m.var(&names::u_sea(instance, s, t)) {
                terms.push((u, -1.0));
            }
            m.add_constraint(
                format!("sea_{}_{}", instance.port_id(s), instance.destination_id(t)),
                terms,
                Sense::Le,
                0.0,
            )?;
        }
    }
    Ok(m)
}

/// Closed-form model size, used to document and test the builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSize {
    pub variables: usize,
    pub constraints: usize,
    /// Count of `vh` variables alone.
    pub routed_volume_variables: usize,
}

/// Expected model size.
///
/// With `P` relations, `Z = Σ_(b,t) |usable ports of t|`, `R` served sea
/// relations of which `R_F` are FCL-only, and `j` the last breakpoint index:
///
/// * with hubs: variables `Z + B + 2·B²S + BS + B(B+S)(j+1) + 2R − R_F`,
///   rows `P + 2BS + 3·B²S + BS + B² + B(B+S) + R`;
/// * without hubs: variables `Z + BS + BS(j+1) + 2R − R_F`, rows `P + 3BS + R`.
pub fn expected_size(instance: &Instance, options: ModelOptions) -> Result<ModelSize, CostError> {
    let b = instance.num_branches();
    let s = instance.num_origin_ports();
    let relations = instance.relations();
    let p = relations.len();
    let z: usize = relations.iter().map(|&(_, t)| instance.usable_ports(t).len()).sum();
    let rates = instance.sea_rates.iter().flatten().flatten();
    let r = rates.clone().count();
    let r_fcl_only = rates.filter(|rate| rate.nvocc_per_m3.is_none()).count();
    let j = Pricer::new(instance)?.breakpoints().len() - 1;
    Ok(if options.allow_hubs {
        ModelSize {
            variables: z + b + 2 * b * b * s + b * s + b * (b + s) * (j + 1) + 2 * r - r_fcl_only,
            constraints: p + 2 * b * s + 3 * b * b * s + b * s + b * b + b * (b + s) + r,
            routed_volume_variables: b * s * b,
        }
    } else {
        ModelSize {
            variables: z + b * s + b * s * (j + 1) + 2 * r - r_fcl_only,
            constraints: p + 3 * b * s + r,
            routed_volume_variables: 0,
        }
    })
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("solution is infeasible:\n{0}")]
    Infeasible(ViolationReport),
    #[error("variable `{0}` is not part of the model")]
    MissingVariable(String),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Variable assignment representing `sol`, aligned with `model.variables()`.
///
/// Step variables take the cheapest admissible values: the fewest trucks and
/// the single step containing the rest volume.
pub fn encode_solution(instance: &Instance, model: &MilpModel, sol: &Solution) -> Result<Vec<f64>, EncodeError> {
    let report = check_feasibility(instance, sol)?;
    if !report.is_feasible() {
        return Err(EncodeError::Infeasible(report));
    }
    let pricer = Pricer::new(instance)?;
    let flows = Flows::compute(instance, sol);
    let mut values = vec![0.0; model.variables().len()];
    let mut set = |name: String, value: f64| -> Result<(), EncodeError> {
        match model.var(&name) {
            Some(i) => {
                values[i] = value;
                Ok(())
            }
            None if value == 0.0 => Ok(()),
            None => Err(EncodeError::MissingVariable(name)),
        }
    };
    let nb = instance.num_branches();
    let ns = instance.num_origin_ports();

    for (b, row) in sol.port_choice.iter().enumerate() {
        for (t, s) in row.iter().enumerate() {
            if let Some(s) = s {
                set(names::z(instance, b, t, *s), 1.0)?;
            }
        }
    }
    for &h in &sol.hubs {
        set(names::x(instance, h), 1.0)?;
    }
    for b in 0..nb {
        for s in 0..ns {
            for &h in &sol.hub_choice[b][s] {
                set(names::y(instance, b, s, h), 1.0)?;
            }
            set(names::vd(instance, b, s), flows.direct[b][s])?;
            if let Some(h) = sol.hub_of(b, s) {
                set(names::vh(instance, b, s, h), flows.routed[b][s])?;
            }
        }
    }
    let mut set_arc = |b: usize, rid: &str, curve: &ApproxLandCurve, load: f64| -> Result<(), EncodeError> {
        let bid = instance.branch_id(b);
        let d = curve.decompose(load);
        set(names::n_land(bid, rid), d.containers as f64)?;
        match d.rest {
            RestPiece::Empty => {}
            RestPiece::Linear(f) => set(names::u_land(0, bid, rid), f)?,
            RestPiece::Step(i) => set(names::u_land(i, bid, rid), 1.0)?,
        }
        Ok(())
    };
    for b in 0..nb {
        for s in 0..ns {
            set_arc(b, instance.port_id(s), pricer.port_curve(b, s), flows.port_arc[b][s])?;
        }
        for h in 0..nb {
            set_arc(b, instance.branch_id(h), pricer.branch_curve(b, h), flows.hub_arc[b][h])?;
        }
    }
    let p = &instance.params;
    for (s, row) in flows.sea.iter().enumerate() {
        for (t, &load) in row.iter().enumerate() {
            let Some(rate) = instance.sea_rates[s][t] else { continue };
            let c = crate::cost::sea_cost_with_limit(
                &rate,
                load,
                p.sea_container_volume,
                pricer.sea_limit(s, t),
                p.penalty,
            );
            set(names::n_sea(instance, s, t), c.containers as f64)?;
            set(names::u_sea(instance, s, t), c.nvocc_volume)?;
        }
    }
    Ok(values)
}

/// Tolerance on binary and integer values when decoding.
pub const INTEGRALITY_TOL: f64 = 1e-5;
/// Tolerance on row and bound residuals when decoding.
pub const RESIDUAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("variable `{name}` is {distance} away from an integer")]
    Fractional { name: String, distance: f64 },
    #[error("residual {value} at `{location}` exceeds the tolerance")]
    Residual { value: f64, location: String },
}

/// Reads a routing plan back from a variable assignment.
pub fn decode_solution(instance: &Instance, model: &MilpModel, values: &[f64]) -> Result<Solution, DecodeError> {
    if values.len() != model.variables().len() {
        return Err(DecodeError::Length { expected: model.variables().len(), got: values.len() });
    }
    let frac = model.max_fractionality(values);
    if frac.value > INTEGRALITY_TOL {
        return Err(DecodeError::Fractional { name: frac.location.unwrap_or_default(), distance: frac.value });
    }
    let residual = model.max_residual(values);
    if residual.value > RESIDUAL_TOL {
        return Err(DecodeError::Residual { value: residual.value, location: residual.location.unwrap_or_default() });
    }
    let get = |name: String| model.var(&name).map_or(0.0, |i| values[i]);
    let nb = instance.num_branches();
    let ns = instance.num_origin_ports();
    let nt = instance.num_destinations();

    let mut port_choice = vec![vec![None; nt]; nb];
    for (b, t) in instance.relations() {
        port_choice[b][t] = instance.usable_ports(t).into_iter().find(|&s| get(names::z(instance, b, t, s)) > 0.5);
    }
    let mut sol = Solution::all_direct(instance, port_choice);
    sol.hubs = (0..nb).filter(|&h| get(names::x(instance, h)) > 0.5).collect();
    for b in 0..nb {
        for s in 0..ns {
            let chosen: BTreeSet<usize> = (0..nb).filter(|&h| get(names::y(instance, b, s, h)) > 0.5).collect();
            let total = sol.pair_volume(instance, b, s);
            if !chosen.is_empty() && total > 0.0 {
                sol.direct_fraction[b][s] = (get(names::vd(instance, b, s)) / total).clamp(0.0, 1.0);
            }
            sol.hub_choice[b][s] = chosen;
        }
    }
    Ok(sol)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValuesError {
    #[error("line {line}: expected `name value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
    #[error("no value for variable `{0}`")]
    Missing(String),
}

/// Parses a `name value` per line assignment. Blank lines and lines starting
/// with `#` are skipped.
pub fn parse_values(model: &MilpModel, text: &str, missing_as_zero: bool) -> Result<Vec<f64>, ValuesError> {
    let mut values = vec![None; model.variables().len()];
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(ValuesError::Syntax { line: k + 1 });
        };
        let value: f64 = value.parse().map_err(|_| ValuesError::Syntax { line: k + 1 })?;
        let idx =
            model.var(name).ok_or_else(|| ValuesError::UnknownVariable { line: k + 1, name: name.to_string() })?;
        values[idx] = Some(value);
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            Some(v) => Ok(v),
            None if missing_as_zero => Ok(0.0),
            None => Err(ValuesError::Missing(model.variables()[i].name.clone())),
        })
        .collect()
}

pub fn values_to_string(model: &MilpModel, values: &[f64]) -> String {
    let mut out = String::new();
    for (v, x) in model.variables().iter().zip(values) {
        out.push_str(&format!("{} {}\n", v.name, x));
    }
    out
}

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    /// `None` is +∞.
    pub upper: Option<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse row: `(variable index, coefficient)`.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("constraint `{0}` declared twice")]
    DuplicateConstraint(String),
    #[error("constraint `{constraint}` references undeclared variable index {index}")]
    UnknownVariable { constraint: String, index: usize },
}

/// A minimization MILP: variables, linear rows, and a linear objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    var_index: HashMap<String, usize>,
    row_index: HashMap<String, usize>,
}

/// Largest violation of a bound, integrality or constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub location: Option<String>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: Option<f64>,
        objective: f64,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if self.var_index.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let idx = self.variables.len();
        self.var_index.insert(name.clone(), idx);
        self.variables.push(Variable { name, kind, lower, upper, objective });
        Ok(idx)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if let Some(&(index, _)) = terms.iter().find(|(i, _)| *i >= self.variables.len()) {
            return Err(ModelError::UnknownVariable { constraint: name, index });
        }
        if self.row_index.contains_key(&name) {
            return Err(ModelError::DuplicateConstraint(name));
        }
        let idx = self.constraints.len();
        self.row_index.insert(name.clone(), idx);
        self.constraints.push(Constraint { name, terms, sense, rhs });
        Ok(idx)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.row_index.get(name).map(|&i| &self.constraints[i])
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.variables.iter().zip(values).map(|(v, x)| v.objective * x).sum()
    }

    /// Activity `Σ a_i x_i` of a row.
    pub fn activity(&self, row: &Constraint, values: &[f64]) -> f64 {
        row.terms.iter().map(|&(i, a)| a * values[i]).sum()
    }

    /// Largest absolute row or bound violation at `values`.
    pub fn max_residual(&self, values: &[f64]) -> Residual {
        let mut worst = Residual { value: 0.0, location: None };
        let mut note = |value: f64, location: &str| {
            if value > worst.value {
                worst = Residual { value, location: Some(location.to_string()) };
            }
        };
        for (v, &x) in self.variables.iter().zip(values) {
            note(v.lower - x, &v.name);
            if let Some(u) = v.upper {
                note(x - u, &v.name);
            }
            if v.kind == VarKind::Binary {
                note(x - 1.0, &v.name);
            }
        }
        for row in &self.constraints {
            let lhs = self.activity(row, values);
            let violation = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            note(violation, &row.name);
        }
        worst
    }

    /// Largest distance of an integer or binary variable from an integer.
    pub fn max_fractionality(&self, values: &[f64]) -> Residual {
        let mut worst = Residual { value: 0.0, location: None };
        for (v, &x) in self.variables.iter().zip(values) {
            if v.kind != VarKind::Continuous {
                let f = (x - x.round()).abs();
                if f > worst.value {
                    worst = Residual { value: f, location: Some(v.name.clone()) };
                }
            }
        }
        worst
    }
}

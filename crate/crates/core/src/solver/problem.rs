use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::context::ShapeContext;
use crate::error::{Error, Result};
use crate::potentials::CrfWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Constraint {
        Constraint { terms, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// Minimize `objective · x` subject to the constraints and variable bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub variables: Vec<Variable>,
    /// Sparse objective coefficients.
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
    /// The first `selectors` variables are the proposal indicators `v_i`.
    pub selectors: usize,
}

impl MilpProblem {
    pub fn add_variable(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable { name, kind, lower, upper });
        self.variables.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn dense_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.variables.len()];
        for &(j, a) in &self.objective {
            c[j] += a;
        }
        c
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn binaries(&self) -> Vec<usize> {
        (0..self.variables.len()).filter(|&j| self.variables[j].kind == VarKind::Binary).collect()
    }

    /// Structural checks: references in range, binaries bounded by `[0, 1]`,
    /// finite coefficients.
    pub fn audit(&self) -> Result<()> {
        let n = self.variables.len();
        for (k, v) in self.variables.iter().enumerate() {
            if v.kind == VarKind::Binary && (v.lower != 0.0 || v.upper != 1.0) {
                return Err(Error::InvalidArgument(format!("binary variable {k} not bounded by [0, 1]")));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::InvalidArgument(format!("variable {k} has invalid bounds")));
            }
        }
        if self.objective.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
            return Err(Error::InvalidArgument("objective references an undeclared variable".into()));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.terms.iter().any(|&(j, a)| j >= n || !a.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::InvalidArgument(format!("constraint {r} is malformed")));
            }
        }
        if self.selectors > n {
            return Err(Error::InvalidArgument("selector count exceeds variables".into()));
        }
        Ok(())
    }

    /// Checks bounds, integrality and every constraint within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.variables.len()
            && self.variables.iter().zip(x).all(|(v, &xi)| {
                xi >= v.lower - tol
                    && xi <= v.upper + tol
                    && (v.kind == VarKind::Continuous || (xi - libm::round(xi)).abs() <= tol)
            })
            && self.constraints.iter().all(|c| c.is_satisfied(x, tol))
    }
}

/// Assembles the CRF energy as a MILP.
///
/// Variable order: `v_i` (binary) for every proposal, `y_ij` for every
/// overlapping pair, `s_k` for every region, `u_ij` for every entry of
/// every `t_i`. Auxiliaries are continuous in `[0, 1]`; the product
/// linearization makes them integral at every integral `v`.
pub fn build_milp(ctx: &ShapeContext, weights: &CrfWeights) -> Result<MilpProblem> {
    if ctx.proposals.is_empty() {
        return Err(Error::EmptyContext);
    }
    ctx.validate()?;
    weights.validate_relaxed()?;
    let fused = ctx.fused_unary(weights);
    let mut p = MilpProblem::default();
    let n = ctx.proposals.len();
    for (i, &f) in fused.iter().enumerate() {
        let v = p.add_variable(format!("v{i}"), VarKind::Binary, 0.0, 1.0);
        p.objective.push((v, f + weights.mu_par));
    }
    p.selectors = n;

    for e in &ctx.overlap {
        let y = p.add_variable(format!("y{}_{}", e.i, e.j), VarKind::Continuous, 0.0, 1.0);
        p.objective.push((y, weights.mu_pw * e.cost));
        p.constraints.push(Constraint::new(vec![(y, 1.0), (e.i, -1.0)], Sense::Le, 0.0));
        p.constraints.push(Constraint::new(vec![(y, 1.0), (e.j, -1.0)], Sense::Le, 0.0));
        p.constraints.push(Constraint::new(vec![(y, 1.0), (e.i, -1.0), (e.j, -1.0)], Sense::Ge, -1.0));
    }

    for (k, cov) in ctx.coverage_costs.iter().enumerate() {
        let s = p.add_variable(format!("s{k}"), VarKind::Continuous, 0.0, 1.0);
        p.objective.push((s, weights.mu_cov * cov));
        let mut terms = vec![(s, 1.0)];
        terms.extend(ctx.incidence[k].iter().map(|&i| (i, -1.0)));
        p.constraints.push(Constraint::new(terms, Sense::Le, 0.0));
    }

    // With v̂_j = 1 the product u_ij = v_i v̂_j linearizes to
    // u <= v_i, u <= 1, u >= v_i + 1 - 1, u >= 0.
    for (i, t) in ctx.cooc.iter().enumerate() {
        for (j, entry) in t.iter().enumerate() {
            let u = p.add_variable(format!("u{i}_{j}"), VarKind::Continuous, 0.0, 1.0);
            p.objective.push((u, weights.mu_coc * entry.iou));
            p.constraints.push(Constraint::new(vec![(u, 1.0), (i, -1.0)], Sense::Le, 0.0));
            p.constraints.push(Constraint::new(vec![(u, 1.0), (i, -1.0)], Sense::Ge, 0.0));
        }
        if !t.is_empty() {
            p.constraints.push(Constraint::new(vec![(i, 1.0)], Sense::Le, t.len() as f64));
        }
    }
    p.audit()?;
    Ok(p)
}

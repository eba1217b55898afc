//! MILP assembly of the CRF energy and its exact solvers.

mod branch;
mod exhaustive;
mod problem;
mod simplex;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use branch::{
    solve_branch_and_bound, solve_branch_and_bound_with, BranchOptions, BranchOutcome, Never, NodeRecord,
    StopCondition, FATHOM_TOL, INTEGRALITY_TOL,
};
pub use exhaustive::{solve_exhaustive, Completion, MAX_BINARIES};
pub use problem::{build_milp, Constraint, MilpProblem, Sense, VarKind, Variable};
pub use simplex::{solve_lp, solve_lp_bounded, LpSolution, FEASIBILITY_TOL, REDUCED_COST_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub assignment: Vec<f64>,
    pub objective_value: f64,
    pub status: Status,
    pub node_count: usize,
}

impl Solution {
    /// Indices of selector variables set to 1.
    pub fn selected(&self, problem: &MilpProblem) -> Vec<usize> {
        (0..problem.selectors.min(self.assignment.len())).filter(|&i| self.assignment[i] > 0.5).collect()
    }
}

//! Enumeration oracle for small problems.

use alloc::vec;
use alloc::vec::Vec;

use super::problem::{MilpProblem, Sense, VarKind};
use super::{Solution, Status};
use crate::error::{Error, Result};

/// Largest number of binaries [`solve_exhaustive`] accepts.
pub const MAX_BINARIES: usize = 20;

/// Fills in the continuous variables of a problem once every binary is
/// fixed. Valid when no constraint couples two continuous variables: each
/// continuous variable then has an interval implied by its own constraints
/// and independently takes the endpoint its objective sign prefers.
#[derive(Debug, Clone)]
pub struct Completion {
    binaries: Vec<usize>,
    continuous: Vec<usize>,
    /// Constraints over binaries only.
    pure: Vec<usize>,
    /// Per continuous variable: `(constraint, coefficient)`.
    links: Vec<Vec<(usize, f64)>>,
    objective: Vec<f64>,
}

impl Completion {
    pub fn new(problem: &MilpProblem) -> Result<Completion> {
        let kinds: Vec<VarKind> = problem.variables.iter().map(|v| v.kind).collect();
        let continuous: Vec<usize> = (0..kinds.len()).filter(|&j| kinds[j] == VarKind::Continuous).collect();
        let mut slot = vec![usize::MAX; kinds.len()];
        for (s, &j) in continuous.iter().enumerate() {
            slot[j] = s;
        }
        let mut pure = Vec::new();
        let mut links = vec![Vec::new(); continuous.len()];
        for (r, c) in problem.constraints.iter().enumerate() {
            let cont: Vec<(usize, f64)> =
                c.terms.iter().filter(|t| kinds[t.0] == VarKind::Continuous).copied().collect();
            match cont.len() {
                0 => pure.push(r),
                1 => links[slot[cont[0].0]].push((r, cont[0].1)),
                _ => {
                    return Err(Error::InvalidArgument(
                        "a constraint couples several continuous variables".into(),
                    ))
                }
            }
        }
        Ok(Completion { binaries: problem.binaries(), continuous, pure, links, objective: problem.dense_objective() })
    }

    pub fn binaries(&self) -> &[usize] {
        &self.binaries
    }

    /// Completes `x` (binaries already set) in place and returns the
    /// objective, or `None` when the binary assignment is infeasible.
    pub fn complete(&self, problem: &MilpProblem, x: &mut [f64]) -> Result<Option<f64>> {
        for &r in &self.pure {
            if !problem.constraints[r].is_satisfied(x, 1e-9) {
                return Ok(None);
            }
        }
        for (s, &j) in self.continuous.iter().enumerate() {
            let var = &problem.variables[j];
            let (mut lo, mut hi) = (var.lower, var.upper);
            for &(r, a) in &self.links[s] {
                let c = &problem.constraints[r];
                let rest: f64 = c.terms.iter().filter(|t| t.0 != j).map(|&(k, b)| b * x[k]).sum();
                let bound = (c.rhs - rest) / a;
                let (upper_side, lower_side) = match (c.sense, a > 0.0) {
                    (Sense::Le, true) | (Sense::Ge, false) => (true, false),
                    (Sense::Ge, true) | (Sense::Le, false) => (false, true),
                    (Sense::Eq, _) => (true, true),
                };
                if upper_side {
                    hi = hi.min(bound);
                }
                if lower_side {
                    lo = lo.max(bound);
                }
            }
            if lo > hi + 1e-9 {
                return Ok(None);
            }
            let hi = hi.max(lo);
            let cj = self.objective[j];
            let v = if cj < 0.0 { hi } else { lo };
            if !v.is_finite() {
                return Err(Error::InvalidArgument("continuous variable is unbounded".into()));
            }
            x[j] = v;
        }
        Ok(Some(self.objective.iter().zip(x.iter()).map(|(c, v)| c * v).sum()))
    }
}

/// Enumerates every binary assignment. Ties keep the first assignment in
/// counting order (bit `k` is binary `k`).
pub fn solve_exhaustive(problem: &MilpProblem) -> Result<Solution> {
    problem.audit()?;
    let completion = Completion::new(problem)?;
    let bins = completion.binaries().to_vec();
    if bins.len() > MAX_BINARIES {
        return Err(Error::TooLarge(bins.len()));
    }
    let mut x = vec![0.0; problem.variables.len()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut count = 0usize;
    for mask in 0u64..(1u64 << bins.len()) {
        for (k, &j) in bins.iter().enumerate() {
            x[j] = ((mask >> k) & 1) as f64;
        }
        count += 1;
        if let Some(value) = completion.complete(problem, &mut x)? {
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, x.clone()));
            }
        }
    }
    match best {
        Some((objective_value, assignment)) => {
            Ok(Solution { assignment, objective_value, status: Status::Optimal, node_count: count })
        }
        None => Err(Error::Infeasible),
    }
}

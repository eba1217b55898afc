//! Best-first branch and bound over the LP relaxation.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::exhaustive::Completion;
use super::problem::{MilpProblem, VarKind};
use super::simplex::{solve_lp_bounded, LpSolution};
use super::{Solution, Status};
use crate::error::{Error, Result};

/// A binary is integral when within this distance of 0 or 1.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Nodes whose bound is not below `incumbent - FATHOM_TOL` are pruned.
pub const FATHOM_TOL: f64 = 1e-9;

/// Tells the search to stop early (e.g. a wall-clock deadline).
pub trait StopCondition {
    fn should_stop(&self) -> bool;
}

/// Never stops.
pub struct Never;

impl StopCondition for Never {
    fn should_stop(&self) -> bool {
        false
    }
}

impl<F: Fn() -> bool> StopCondition for F {
    fn should_stop(&self) -> bool {
        self()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    pub max_nodes: usize,
    /// Keep a `(parent bound, child bound)` record per solved child.
    pub record_nodes: bool,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions { max_nodes: 200_000, record_nodes: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRecord {
    pub parent_bound: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutcome {
    pub solution: Solution,
    pub root_bound: f64,
    pub records: Vec<NodeRecord>,
}

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    lp: LpSolution,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    /// Max-heap order: smallest bound first, then oldest.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(o.seq.cmp(&self.seq))
    }
}

/// Solves the MILP; see [`solve_branch_and_bound_with`].
pub fn solve_branch_and_bound(problem: &MilpProblem, stop: &dyn StopCondition) -> Result<Solution> {
    Ok(solve_branch_and_bound_with(problem, stop, &BranchOptions::default())?.solution)
}

/// Best-first search on LP bounds. Branches on the binary whose relaxed
/// value is closest to 0.5 (lowest index on ties). Returns the proven
/// optimum, or the incumbent with [`Status::TimeLimit`] when `stop` fires or
/// the node budget runs out.
pub fn solve_branch_and_bound_with(
    problem: &MilpProblem,
    stop: &dyn StopCondition,
    options: &BranchOptions,
) -> Result<BranchOutcome> {
    problem.audit()?;
    let completion = Completion::new(problem).ok();
    let binaries = problem.binaries();
    let lower: Vec<f64> = problem.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = problem.variables.iter().map(|v| v.upper).collect();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut records = Vec::new();
    let mut nodes = 1usize;
    let mut seq = 0usize;

    let root = solve_lp_bounded(problem, &lower, &upper)?;
    let root_bound = root.objective;
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: root.objective, seq, lower, upper, lp: root });
    let mut stopped = false;

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= *best - FATHOM_TOL {
                continue;
            }
        }
        try_rounding(problem, completion.as_ref(), &binaries, &node.lp.x, &mut incumbent)?;

        let Some(var) = branching_variable(&binaries, &node.lp.x) else {
            // Integral relaxation.
            let value = exact_value(problem, completion.as_ref(), &binaries, &node.lp)?;
            if incumbent.as_ref().is_none_or(|(b, _)| value.0 < *b) {
                incumbent = Some(value);
            }
            continue;
        };
        if stop.should_stop() || nodes >= options.max_nodes {
            stopped = true;
            break;
        }
        for fixed in [0.0, 1.0] {
            let mut lo = node.lower.clone();
            let mut hi = node.upper.clone();
            lo[var] = fixed;
            hi[var] = fixed;
            nodes += 1;
            match solve_lp_bounded(problem, &lo, &hi) {
                Ok(lp) => {
                    if options.record_nodes {
                        records.push(NodeRecord { parent_bound: node.bound, bound: lp.objective });
                    }
                    if incumbent.as_ref().is_none_or(|(b, _)| lp.objective < *b - FATHOM_TOL) {
                        seq += 1;
                        heap.push(Node { bound: lp.objective, seq, lower: lo, upper: hi, lp });
                    }
                }
                Err(Error::Infeasible) => {}
                Err(e) => return Err(e),
            }
        }
    }

    match incumbent {
        Some((objective_value, assignment)) => Ok(BranchOutcome {
            solution: Solution {
                assignment,
                objective_value,
                status: if stopped { Status::TimeLimit } else { Status::Optimal },
                node_count: nodes,
            },
            root_bound,
            records,
        }),
        None if stopped => Ok(BranchOutcome {
            solution: Solution {
                assignment: Vec::new(),
                objective_value: f64::INFINITY,
                status: Status::TimeLimit,
                node_count: nodes,
            },
            root_bound,
            records,
        }),
        None => Err(Error::Infeasible),
    }
}

fn branching_variable(binaries: &[usize], x: &[f64]) -> Option<usize> {
    let mut best = None;
    let mut best_dist = f64::INFINITY;
    for &j in binaries {
        let frac = x[j] - libm::floor(x[j]);
        if frac <= INTEGRALITY_TOL || frac >= 1.0 - INTEGRALITY_TOL {
            continue;
        }
        let dist = (frac - 0.5).abs();
        if dist < best_dist {
            best_dist = dist;
            best = Some(j);
        }
    }
    best
}

/// Objective of an integral relaxation, recomputed exactly from the rounded
/// binaries when the problem admits a completion.
fn exact_value(
    problem: &MilpProblem,
    completion: Option<&Completion>,
    binaries: &[usize],
    lp: &LpSolution,
) -> Result<(f64, Vec<f64>)> {
    let mut x = lp.x.clone();
    for &j in binaries {
        x[j] = libm::round(x[j]);
    }
    if let Some(c) = completion {
        if let Some(v) = c.complete(problem, &mut x)? {
            return Ok((v, x));
        }
    }
    for (j, v) in problem.variables.iter().enumerate() {
        if v.kind == VarKind::Continuous {
            x[j] = lp.x[j];
        }
    }
    Ok((problem.evaluate(&x), x))
}

/// Rounds the relaxed binaries and completes the continuous part; updates
/// the incumbent when that is feasible and better.
fn try_rounding(
    problem: &MilpProblem,
    completion: Option<&Completion>,
    binaries: &[usize],
    relaxed: &[f64],
    incumbent: &mut Option<(f64, Vec<f64>)>,
) -> Result<()> {
    let Some(c) = completion else {
        return Ok(());
    };
    let mut x = vec![0.0; relaxed.len()];
    for &j in binaries {
        x[j] = if relaxed[j] >= 0.5 { 1.0 } else { 0.0 };
    }
    if let Some(v) = c.complete(problem, &mut x)? {
        if incumbent.as_ref().is_none_or(|(b, _)| v < *b) {
            *incumbent = Some((v, x));
        }
    }
    Ok(())
}

//! Dense two-phase bounded-variable primal simplex.

use alloc::vec;
use alloc::vec::Vec;

use super::problem::{MilpProblem, Sense};
use crate::error::{Error, Result};

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
pub const REDUCED_COST_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Solves the LP relaxation with the problem's own bounds.
pub fn solve_lp(problem: &MilpProblem) -> Result<LpSolution> {
    let lower: Vec<f64> = problem.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = problem.variables.iter().map(|v| v.upper).collect();
    solve_lp_bounded(problem, &lower, &upper)
}

/// Solves the LP relaxation with overriding variable bounds.
pub fn solve_lp_bounded(problem: &MilpProblem, lower: &[f64], upper: &[f64]) -> Result<LpSolution> {
    let n = problem.variables.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::InvalidArgument("bound vectors must match the variable count".into()));
    }
    for j in 0..n {
        if lower[j] > upper[j] + FEASIBILITY_TOL {
            return Err(Error::Infeasible);
        }
        if !lower[j].is_finite() || !upper[j].is_finite() {
            return Err(Error::InvalidArgument("every variable must be box-bounded".into()));
        }
    }
    let mut t = Tableau::new(problem, lower, upper);
    t.phase_one()?;
    t.cost = vec![0.0; t.width];
    t.cost[..n].copy_from_slice(&problem.dense_objective());
    t.price();
    t.iterate()?;
    t.refresh_basic_values();
    let x: Vec<f64> = (0..n).map(|j| t.x[j].clamp(lower[j], upper[j].max(lower[j]))).collect();
    let objective = problem.evaluate(&x);
    Ok(LpSolution { x, objective, iterations: t.iterations })
}

struct Tableau {
    m: usize,
    n: usize,
    /// Structurals, then one slack per row, then artificials.
    width: usize,
    /// `B^-1 [A | I | artificials]`, row-major.
    rows: Vec<f64>,
    /// Original right-hand sides.
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    cost: Vec<f64>,
    /// Reduced costs.
    d: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    iterations: usize,
}

impl Tableau {
    /// Structurals start at their lower bound. Rows whose slack would leave
    /// its bounds get an artificial column.
    fn new(problem: &MilpProblem, lower: &[f64], upper: &[f64]) -> Tableau {
        let n = problem.variables.len();
        let m = problem.constraints.len();
        let mut resid = vec![0.0; m];
        let mut slack_bounds = vec![(0.0, 0.0); m];
        let mut art_rows = Vec::new();
        for (i, c) in problem.constraints.iter().enumerate() {
            let r = c.rhs - c.activity(lower);
            let (lo, hi) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            resid[i] = r;
            slack_bounds[i] = (lo, hi);
            if !(r >= lo - FEASIBILITY_TOL && r <= hi + FEASIBILITY_TOL) {
                art_rows.push(i);
            }
        }
        let width = n + m + art_rows.len();
        let mut rows = vec![0.0; m * width];
        let mut x = vec![0.0; width];
        let mut lo_all = vec![0.0; width];
        let mut hi_all = vec![f64::INFINITY; width];
        x[..n].copy_from_slice(lower);
        lo_all[..n].copy_from_slice(lower);
        hi_all[..n].copy_from_slice(upper);
        for i in 0..m {
            lo_all[n + i] = slack_bounds[i].0;
            hi_all[n + i] = slack_bounds[i].1;
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        for (i, c) in problem.constraints.iter().enumerate() {
            let row = &mut rows[i * width..(i + 1) * width];
            for &(j, a) in &c.terms {
                row[j] += a;
            }
            row[n + i] = 1.0;
            x[n + i] = resid[i];
        }
        for (a, &i) in art_rows.iter().enumerate() {
            // The artificial enters with coefficient sigma so that its value
            // |resid| is non-negative; scaling the row by sigma makes it a
            // unit basis column.
            let col = n + m + a;
            let sigma = if resid[i] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut rows[i * width..(i + 1) * width];
            row[col] = sigma;
            for v in row.iter_mut() {
                *v *= sigma;
            }
            x[n + i] = 0.0;
            x[col] = resid[i].abs();
            basis[i] = col;
        }
        let mut is_basic = vec![false; width];
        for &c in &basis {
            is_basic[c] = true;
        }
        let mut cost = vec![0.0; width];
        for c in cost.iter_mut().skip(n + m) {
            *c = 1.0;
        }
        Tableau {
            m,
            n,
            width,
            rows,
            b: problem.constraints.iter().map(|c| c.rhs).collect(),
            lower: lo_all,
            upper: hi_all,
            x,
            cost,
            d: vec![0.0; width],
            basis,
            is_basic,
            iterations: 0,
        }
    }

    fn phase_one(&mut self) -> Result<()> {
        let first_art = self.n + self.m;
        if self.width == first_art {
            return Ok(());
        }
        self.price();
        self.iterate()?;
        self.refresh_basic_values();
        let infeasibility: f64 = (first_art..self.width).map(|j| self.x[j].max(0.0)).sum();
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeasibility > 1e-8 * scale {
            return Err(Error::Infeasible);
        }
        // Pivot remaining (zero-valued) artificials out where possible.
        for r in 0..self.m {
            if self.basis[r] < first_art {
                continue;
            }
            let mut best = None;
            let mut best_abs = 1e-7;
            for j in 0..first_art {
                let a = self.rows[r * self.width + j].abs();
                if !self.is_basic[j] && a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                let art = self.basis[r];
                self.pivot(r, j);
                self.x[art] = 0.0;
            }
        }
        for j in first_art..self.width {
            self.lower[j] = 0.0;
            self.upper[j] = 0.0;
            if !self.is_basic[j] {
                self.x[j] = 0.0;
            }
        }
        if (first_art..self.width).all(|j| !self.is_basic[j]) {
            self.drop_artificial_columns();
        }
        self.refresh_basic_values();
        Ok(())
    }

    fn drop_artificial_columns(&mut self) {
        let keep = self.n + self.m;
        let mut rows = Vec::with_capacity(self.m * keep);
        for i in 0..self.m {
            rows.extend_from_slice(&self.rows[i * self.width..i * self.width + keep]);
        }
        self.rows = rows;
        self.width = keep;
        self.lower.truncate(keep);
        self.upper.truncate(keep);
        self.x.truncate(keep);
        self.d.truncate(keep);
        self.is_basic.truncate(keep);
    }

    fn price(&mut self) {
        self.d.copy_from_slice(&self.cost[..self.width]);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.rows[i * self.width..(i + 1) * self.width];
            for (dj, a) in self.d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.width {
            if self.is_basic[j] || self.upper[j] <= self.lower[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj < -REDUCED_COST_TOL && self.x[j] < self.upper[j] {
                1.0
            } else if dj > REDUCED_COST_TOL && self.x[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn iterate(&mut self) -> Result<()> {
        let limit = 50 * (self.m + self.width) + 1000;
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate > DEGENERATE_LIMIT;
            let Some((q, dir)) = self.entering(bland) else {
                return Ok(());
            };
            self.iterations += 1;
            if self.iterations > limit {
                return Err(Error::NumericalFailure("simplex iteration limit"));
            }

            // Basic i moves by -alpha_i * step as the entering variable moves
            // by dir * step.
            let mut step = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, f64)> = None;
            let mut leave_alpha = 0.0f64;
            for i in 0..self.m {
                let alpha = self.rows[i * self.width + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let bv = self.basis[i];
                let (room, bound) = if alpha > 0.0 {
                    (self.x[bv] - self.lower[bv], self.lower[bv])
                } else {
                    (self.upper[bv] - self.x[bv], self.upper[bv])
                };
                let ratio = (room / alpha.abs()).max(0.0);
                if !ratio.is_finite() {
                    continue;
                }
                let take = if ratio < step - 1e-12 {
                    true
                } else if ratio <= step + 1e-12 {
                    match leave {
                        None => true,
                        Some((r, _)) if bland => bv < self.basis[r],
                        Some(_) => alpha.abs() > leave_alpha,
                    }
                } else {
                    false
                };
                if take {
                    step = ratio.min(step);
                    leave = Some((i, bound));
                    leave_alpha = alpha.abs();
                }
            }
            if !step.is_finite() {
                return Err(Error::NumericalFailure("unbounded direction"));
            }
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };

            if step > 0.0 {
                for i in 0..self.m {
                    let a = self.rows[i * self.width + q];
                    if a != 0.0 {
                        self.x[self.basis[i]] -= a * dir * step;
                    }
                }
                self.x[q] += dir * step;
            }
            match leave {
                None => self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] },
                Some((r, bound)) => {
                    self.x[self.basis[r]] = bound;
                    self.pivot(r, q);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let pe = self.rows[r * w + q];
        for v in self.rows[r * w..(r + 1) * w].iter_mut() {
            *v /= pe;
        }
        let (before, rest) = self.rows.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for (dj, p) in self.d.iter_mut().zip(pivot_row.iter()) {
                *dj -= dq * p;
            }
        }
        self.d[q] = 0.0;
        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Recomputes basic values as `M b - Σ_N T_j x_j`, where the slack
    /// columns of the tableau hold `M`, the accumulated row operations.
    fn refresh_basic_values(&mut self) {
        let w = self.width;
        for i in 0..self.m {
            let row = &self.rows[i * w..(i + 1) * w];
            let mut v = 0.0;
            for k in 0..self.m {
                v += row[self.n + k] * self.b[k];
            }
            for j in 0..w {
                if !self.is_basic[j] && self.x[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }
}

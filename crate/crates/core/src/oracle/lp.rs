//! Dense two-phase primal simplex over non-negative variables.
//!
//! Pivoting prices by the most negative reduced cost and falls back to
//! Bland's rule (lowest eligible index for both the entering and the leaving
//! variable) while the objective stalls, which rules out cycling on the
//! highly degenerate programs the oracle produces.

/// Feasibility and optimality tolerance.
pub const TOLERANCE: f64 = 1e-9;

/// Smallest coefficient accepted as a pivot.
const PIVOT_TOLERANCE: f64 = 1e-7;

/// Entries this small are flushed to zero after each pivot.
const DROP_TOLERANCE: f64 = 1e-13;

/// Non-improving pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `optimize c·x` subject to the constraints and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<f64>,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LinearProgram {
            num_vars,
            constraints: Vec::new(),
            objective: vec![0.0; num_vars],
            sense,
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint length must match the variable count");
        assert!(coeffs.iter().all(|c| c.is_finite()) && rhs.is_finite());
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).solve(self)
    }
}

struct Tableau {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Index of the first artificial column; artificials run to `width`.
    first_artificial: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        // Rows are scaled by -1 where needed so that the right-hand side is
        // non-negative, and `≥ 0` rows become `≤ 0` rows whose slack can start
        // in the basis. `slack` is the sign of the slack column, 0 for none.
        let shapes: Vec<(f64, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                let flip = if c.rhs < 0.0 || (c.rhs == 0.0 && c.relation == Relation::Ge) {
                    -1.0
                } else {
                    1.0
                };
                let slack = match c.relation {
                    Relation::Le => flip,
                    Relation::Ge => -flip,
                    Relation::Eq => 0.0,
                };
                (flip, slack)
            })
            .collect();
        let slacks = shapes.iter().filter(|s| s.1 != 0.0).count();
        let artificials = shapes.iter().filter(|s| s.1 != 1.0).count();
        let first_artificial = n + slacks;
        let width = first_artificial + artificials;

        let mut rows = Vec::with_capacity(lp.constraints.len());
        let mut basis = Vec::with_capacity(lp.constraints.len());
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (c, &(flip, slack)) in lp.constraints.iter().zip(&shapes) {
            let mut row = vec![0.0; width + 1];
            for (v, a) in row.iter_mut().zip(&c.coeffs) {
                *v = flip * a;
            }
            row[width] = flip * c.rhs;
            if slack != 0.0 {
                row[next_slack] = slack;
                next_slack += 1;
            }
            if slack == 1.0 {
                basis.push(next_slack - 1);
            } else {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            first_artificial,
            width,
        }
    }

    fn pivot(&mut self, objective: &mut [f64], r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                    if v.abs() < DROP_TOLERANCE {
                        *v = 0.0;
                    }
                }
                row[c] = 0.0;
            }
        }
        let f = objective[c];
        if f != 0.0 {
            for (v, pv) in objective.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            objective[c] = 0.0;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Reduced costs of `cost` for the current basis; the last entry is the
    /// negated objective value.
    fn reduced(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        d.push(0.0);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (v, x) in d.iter_mut().zip(row) {
                    *v -= cb * x;
                }
            }
        }
        d
    }

    /// Minimizes over columns `< limit`. Returns false if unbounded.
    ///
    /// Entering columns are priced by the most negative reduced cost. After
    /// `STALL_LIMIT` pivots without progress the rule switches to Bland's
    /// (lowest index for entering and leaving), which cannot cycle, until
    /// the objective improves again.
    fn run(&mut self, objective: &mut [f64], limit: usize) -> bool {
        let mut stalled = 0;
        loop {
            let bland = stalled >= STALL_LIMIT;
            let enter = if bland {
                (0..limit).find(|&j| objective[j] < -TOLERANCE)
            } else {
                (0..limit)
                    .filter(|&j| objective[j] < -TOLERANCE)
                    .min_by(|&a, &b| objective[a].total_cmp(&objective[b]))
            };
            let Some(enter) = enter else {
                return true;
            };
            let mut min_ratio = f64::INFINITY;
            for row in &self.rows {
                let a = row[enter];
                if a > PIVOT_TOLERANCE {
                    min_ratio = min_ratio.min(row[self.width].max(0.0) / a);
                }
            }
            if min_ratio == f64::INFINITY {
                return false;
            }
            // Among rows tied at the minimum ratio, Bland mode takes the lowest
            // basic index and otherwise the largest pivot element.
            let mut leave: Option<usize> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a <= PIVOT_TOLERANCE || row[self.width].max(0.0) / a > min_ratio + TOLERANCE {
                    continue;
                }
                leave = match leave {
                    Some(k) if bland && self.basis[k] < self.basis[i] => Some(k),
                    Some(k) if !bland && self.rows[k][enter] >= a => Some(k),
                    _ => Some(i),
                };
            }
            let r = leave.expect("some row attains the minimum ratio");
            let before = objective[self.width];
            self.pivot(objective, r, enter);
            if objective[self.width] < before - TOLERANCE {
                stalled = 0;
            } else {
                stalled += 1;
            }
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> LpOutcome {
        let width = self.width;
        if self.first_artificial < width {
            let mut cost = vec![0.0; width];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            let mut objective = self.reduced(&cost);
            self.run(&mut objective, width);
            if -objective[width] > TOLERANCE {
                return LpOutcome::Infeasible;
            }
            // Drive remaining artificials out of the basis; rows where that
            // is impossible are redundant and dropped.
            let mut r = 0;
            while r < self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    let col = (0..self.first_artificial).find(|&j| self.rows[r][j].abs() > TOLERANCE);
                    match col {
                        Some(j) => self.pivot(&mut objective, r, j),
                        None => {
                            self.rows.remove(r);
                            self.basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }

        let mut cost = vec![0.0; width];
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for (c, o) in cost.iter_mut().zip(&lp.objective) {
            *c = sign * o;
        }
        let mut objective = self.reduced(&cost);
        if !self.run(&mut objective, self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; lp.num_vars];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < lp.num_vars {
                x[b] = row[width].max(0.0);
            }
        }
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal { value, x }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimum(lp: &LinearProgram) -> f64 {
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => value,
            other => panic!("expected an optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6).
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.objective = vec![3.0, 5.0];
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add(vec![3.0, 2.0], Relation::Le, 18.0);
        match lp.solve() {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y, x + y ≥ 2, x − y = 1 → 2.
        let mut lp = LinearProgram::new(2, Sense::Minimize);
        lp.objective = vec![1.0, 1.0];
        lp.add(vec![1.0, 1.0], Relation::Ge, 2.0);
        lp.add(vec![1.0, -1.0], Relation::Eq, 1.0);
        assert!((optimum(&lp) - 2.0).abs() < 1e-9);
        // Negative right-hand side: −x ≤ −3 means x ≥ 3.
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.objective = vec![1.0];
        lp.add(vec![-1.0], Relation::Le, -3.0);
        assert!((optimum(&lp) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.add(vec![1.0], Relation::Le, 1.0);
        lp.add(vec![1.0], Relation::Ge, 2.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.objective = vec![1.0, 0.0];
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        // The same equality twice plus its double; the phase-one artificials
        // on the copies cannot leave the basis and are dropped.
        let mut lp = LinearProgram::new(3, Sense::Maximize);
        lp.objective = vec![1.0, 2.0, 0.0];
        lp.add(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0);
        lp.add(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0);
        lp.add(vec![2.0, 2.0, 2.0], Relation::Eq, 2.0);
        assert!((optimum(&lp) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_program_terminates() {
        // A classic cycling example for the largest-coefficient rule.
        let mut lp = LinearProgram::new(4, Sense::Maximize);
        lp.objective = vec![10.0, -57.0, -9.0, -24.0];
        lp.add(vec![0.5, -5.5, -2.5, 9.0], Relation::Le, 0.0);
        lp.add(vec![0.5, -1.5, -0.5, 1.0], Relation::Le, 0.0);
        lp.add(vec![1.0, 0.0, 0.0, 0.0], Relation::Le, 1.0);
        assert!((optimum(&lp) - 1.0).abs() < 1e-9);
    }
}

//! Dense two-phase simplex over any [`Scalar`].
//!
//! Variables are nonnegative; rows are `=`, `<=` or `>=` constraints. Phase I
//! minimizes the sum of artificial variables with Bland's rule (smallest
//! eligible index enters, smallest-index basic variable leaves on ratio ties),
//! which makes every run terminating and deterministic. In exact mode all
//! comparisons are exact; in float mode they use the shared pivot tolerance.
//!
//! An infeasible run yields a Farkas certificate: row multipliers `y` with
//! `y . b > 0` and `y^T A <= 0` on every column, inequality rows contributing
//! the expected sign constraints.

use thiserror::Error;

use crate::arith::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("objective is unbounded")]
    Unbounded,
    #[error("pivot iteration limit exceeded")]
    IterationLimit,
}

#[derive(Debug, Clone)]
pub enum LpSolution<S> {
    Feasible {
        /// Values of the structural variables.
        x: Vec<S>,
        /// Value of the objective when one was set.
        objective: Option<S>,
    },
    Infeasible {
        /// One multiplier per original row, in insertion order.
        farkas: Vec<S>,
    },
}

#[derive(Debug, Clone)]
pub struct LinearProgram<S: Scalar> {
    num_vars: usize,
    rows: Vec<(Vec<S>, Rel, S)>,
    maximize: Option<Vec<S>>,
}

const ITERATION_LIMIT: usize = 200_000;

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, rows: Vec::new(), maximize: None }
    }

    pub fn add_row(&mut self, coeffs: Vec<S>, rel: Rel, rhs: S) {
        assert_eq!(coeffs.len(), self.num_vars, "row width mismatch");
        self.rows.push((coeffs, rel, rhs));
    }

    /// Sets a maximization objective over the structural variables.
    pub fn set_objective(&mut self, coeffs: Vec<S>) {
        assert_eq!(coeffs.len(), self.num_vars, "objective width mismatch");
        self.maximize = Some(coeffs);
    }

    pub fn solve(&self) -> Result<LpSolution<S>, LpError> {
        Tableau::build(self).solve(self)
    }
}

struct Tableau<S> {
    /// `rows[i]` has `width` coefficient entries followed by the rhs.
    rows: Vec<Vec<S>>,
    /// Reduced-cost row; its rhs entry is minus the current objective value.
    cost: Vec<S>,
    basis: Vec<usize>,
    width: usize,
    num_structural: usize,
    first_artificial: usize,
    /// Column that started as the identity column of each row.
    unit_col: Vec<usize>,
    /// +1/-1 per original row, recording rhs sign normalization.
    flip: Vec<bool>,
    /// Original row index per tableau row (rows can be dropped as redundant).
    origin: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let m = lp.rows.len();
        let nv = lp.num_vars;

        // Normalize every row to nonnegative rhs; flipping turns Le into Ge
        // and back. A Ge row with zero rhs is served by a plain slack, so it
        // is rewritten as Le.
        let mut coeffs: Vec<Vec<S>> = Vec::with_capacity(m);
        let mut rels: Vec<Rel> = Vec::with_capacity(m);
        let mut rhss: Vec<S> = Vec::with_capacity(m);
        let mut flip = vec![false; m];
        for (i, (row, rel, rhs)) in lp.rows.iter().enumerate() {
            let mut row = row.clone();
            let mut rel = *rel;
            let mut rhs = rhs.clone();
            if rhs.is_negative() {
                for v in row.iter_mut() {
                    *v = -v.clone();
                }
                rhs = -rhs;
                rel = match rel {
                    Rel::Eq => Rel::Eq,
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                };
                flip[i] = true;
            }
            if rel == Rel::Ge && rhs.is_zero() {
                for v in row.iter_mut() {
                    *v = -v.clone();
                }
                rel = Rel::Le;
                flip[i] = !flip[i];
            }
            coeffs.push(row);
            rels.push(rel);
            rhss.push(rhs);
        }

        let num_slack = rels.iter().filter(|r| **r != Rel::Eq).count();
        let num_artificial = rels.iter().filter(|r| **r != Rel::Le).count();
        let width = nv + num_slack + num_artificial;
        let first_artificial = nv + num_slack;

        let mut rows: Vec<Vec<S>> = Vec::with_capacity(m);
        let mut basis = vec![0usize; m];
        let mut unit_col = vec![0usize; m];
        let mut slack_at = nv;
        let mut art_at = first_artificial;
        for i in 0..m {
            let mut row: Vec<S> = Vec::with_capacity(width + 1);
            row.extend(coeffs[i].iter().cloned());
            row.resize(width, S::zero());
            row.push(rhss[i].clone());
            match rels[i] {
                Rel::Le => {
                    row[slack_at] = S::one();
                    basis[i] = slack_at;
                    unit_col[i] = slack_at;
                    slack_at += 1;
                }
                Rel::Ge => {
                    row[slack_at] = -S::one();
                    slack_at += 1;
                    row[art_at] = S::one();
                    basis[i] = art_at;
                    unit_col[i] = art_at;
                    art_at += 1;
                }
                Rel::Eq => {
                    row[art_at] = S::one();
                    basis[i] = art_at;
                    unit_col[i] = art_at;
                    art_at += 1;
                }
            }
            rows.push(row);
        }

        // Phase-I reduced costs: cost 1 on artificials, 0 elsewhere, with the
        // artificial basics priced out.
        let mut cost = vec![S::zero(); width + 1];
        for j in first_artificial..width {
            cost[j] = S::one();
        }
        for i in 0..m {
            if basis[i] >= first_artificial {
                for j in 0..=width {
                    cost[j] = cost[j].clone() - rows[i][j].clone();
                }
            }
        }

        Tableau {
            rows,
            cost,
            basis,
            width,
            num_structural: nv,
            first_artificial,
            unit_col,
            flip,
            origin: (0..m).collect(),
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let piv = self.rows[pr][pc].clone();
        for v in self.rows[pr].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        let pivot_row = self.rows[pr].clone();
        for i in 0..self.rows.len() {
            if i == pr {
                continue;
            }
            let factor = self.rows[i][pc].clone();
            if factor == S::zero() {
                continue;
            }
            for (v, p) in self.rows[i].iter_mut().zip(pivot_row.iter()) {
                *v = v.clone() - factor.clone() * p.clone();
            }
        }
        let factor = self.cost[pc].clone();
        if !(factor == S::zero()) {
            for (v, p) in self.cost.iter_mut().zip(pivot_row.iter()) {
                *v = v.clone() - factor.clone() * p.clone();
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs Bland's rule to optimality over columns `< col_limit`.
    fn run(&mut self, col_limit: usize, iterations: &mut usize) -> Result<(), LpError> {
        loop {
            *iterations += 1;
            if *iterations > ITERATION_LIMIT {
                return Err(LpError::IterationLimit);
            }
            let mut entering = None;
            for j in 0..col_limit {
                if self.cost[j].is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(pc) = entering else { return Ok(()) };
            let mut leaving: Option<usize> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][pc].is_positive() {
                    continue;
                }
                match leaving {
                    None => leaving = Some(i),
                    Some(best) => {
                        // rhs_i / a_i < rhs_best / a_best, cross-multiplied.
                        let lhs = self.rows[i][self.width].clone()
                            * self.rows[best][pc].clone();
                        let rhs = self.rows[best][self.width].clone()
                            * self.rows[i][pc].clone();
                        if lhs < rhs || (lhs == rhs && self.basis[i] < self.basis[best]) {
                            leaving = Some(i);
                        }
                    }
                }
            }
            let Some(pr) = leaving else { return Err(LpError::Unbounded) };
            self.pivot(pr, pc);
        }
    }

    fn solve(mut self, lp: &LinearProgram<S>) -> Result<LpSolution<S>, LpError> {
        let mut iterations = 0usize;
        self.run(self.first_artificial, &mut iterations)?;

        let infeasibility = -self.cost[self.width].clone();
        if infeasibility.is_positive() {
            return Ok(LpSolution::Infeasible { farkas: self.farkas() });
        }

        // Drive zero-level artificials out of the basis; rows that cannot be
        // pivoted are redundant and dropped.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                let mut pivoted = false;
                for j in 0..self.first_artificial {
                    if !self.rows[i][j].is_zero() {
                        self.pivot(i, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    self.rows.remove(i);
                    self.basis.remove(i);
                    self.origin.remove(i);
                    continue;
                }
            }
            i += 1;
        }

        let objective = match &lp.maximize {
            None => None,
            Some(c) => {
                // Phase II: minimize -c.x, never letting artificials re-enter.
                self.cost = vec![S::zero(); self.width + 1];
                for (j, v) in c.iter().enumerate() {
                    self.cost[j] = -v.clone();
                }
                for i in 0..self.rows.len() {
                    let b = self.basis[i];
                    let cb = self.cost[b].clone();
                    if !(cb == S::zero()) {
                        for j in 0..=self.width {
                            self.cost[j] =
                                self.cost[j].clone() - cb.clone() * self.rows[i][j].clone();
                        }
                        // restore the basic column's exact zero
                        self.cost[b] = S::zero();
                    }
                }
                self.run(self.first_artificial, &mut iterations)?;
                Some(())
            }
        };

        let mut x = vec![S::zero(); self.num_structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_structural {
                x[b] = self.rows[i][self.width].clone();
            }
        }
        let objective = objective.map(|_| {
            lp.maximize
                .as_ref()
                .unwrap()
                .iter()
                .zip(x.iter())
                .fold(S::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
        });
        Ok(LpSolution::Feasible { x, objective })
    }

    /// Row multipliers for the original system, from the Phase-I duals.
    fn farkas(&self) -> Vec<S> {
        let m = self.flip.len();
        let mut y = vec![S::zero(); m];
        for (i, &orig) in self.origin.iter().enumerate() {
            let col = self.unit_col[i];
            let c_col = if col >= self.first_artificial { S::one() } else { S::zero() };
            let yi = c_col - self.cost[col].clone();
            y[orig] = if self.flip[orig] { -yi } else { yi };
        }
        y
    }
}

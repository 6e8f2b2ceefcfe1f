//! Exact rational linear programming.
//!
//! Dense two-phase primal simplex with Bland's pivot rule, so it always
//! terminates and returns the same basis for the same input. Intended for
//! small programs; no attempt is made at sparsity.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{dot, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `lower <= x`, and `x <= upper` when `upper` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub lower: Rational,
    pub upper: Option<Rational>,
}

impl Default for Bound {
    fn default() -> Self {
        Bound {
            lower: Rational::zero(),
            upper: None,
        }
    }
}

/// Maximize `objective · x` subject to `constraints` and `bounds`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
}

impl LpProblem {
    /// New maximization problem; every variable starts with bounds `[0, inf)`.
    pub fn maximize(objective: Vec<Rational>) -> Self {
        let bounds = vec![Bound::default(); objective.len()];
        LpProblem {
            objective,
            constraints: Vec::new(),
            bounds,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(
        &mut self,
        coeffs: Vec<Rational>,
        relation: Relation,
        rhs: Rational,
    ) -> &mut Self {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn bound(&mut self, var: usize, lower: Rational, upper: Option<Rational>) -> &mut Self {
        self.bounds[var] = Bound { lower, upper };
        self
    }

    /// Whether `x` satisfies every constraint and bound exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && self
                .bounds
                .iter()
                .zip(x)
                .all(|(b, v)| *v >= b.lower && b.upper.as_ref().is_none_or(|u| v <= u))
            && self.constraints.iter().all(|c| {
                let lhs = dot(&c.coeffs, x);
                match c.relation {
                    Relation::Le => lhs <= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                    Relation::Ge => lhs >= c.rhs,
                }
            })
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::MalformedProblem("no variables".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::MalformedProblem(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if let Some((row, c)) = self
            .constraints
            .iter()
            .enumerate()
            .find(|(_, c)| c.coeffs.len() != n)
        {
            return Err(Error::MalformedProblem(format!(
                "constraint {row} has {} coefficients for {n} variables",
                c.coeffs.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `x` and `objective_value` are meaningful only when `status` is optimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<Rational>,
    pub objective_value: Rational,
}

impl LpSolution {
    fn without_point(status: LpStatus, n: usize) -> Self {
        LpSolution {
            status,
            x: vec![Rational::zero(); n],
            objective_value: Rational::zero(),
        }
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rational {
        &self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn objective(&self, cost: &[Rational]) -> Rational {
        self.basis
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (r, &b)| {
                acc + &cost[b] * self.rhs(r)
            })
    }

    /// Maximizes `cost` over the allowed columns. Returns `false` when
    /// unbounded.
    fn optimize(&mut self, cost: &[Rational], allowed: &[bool]) -> bool {
        loop {
            let mut basic = vec![false; self.cols];
            for &b in &self.basis {
                basic[b] = true;
            }
            // Bland: lowest-index improving column.
            let entering = (0..self.cols).find(|&j| {
                allowed[j] && !basic[j] && {
                    let reduced =
                        self.basis
                            .iter()
                            .enumerate()
                            .fold(cost[j].clone(), |acc, (r, &b)| {
                                if cost[b].is_zero() || self.rows[r][j].is_zero() {
                                    acc
                                } else {
                                    acc - &cost[b] * &self.rows[r][j]
                                }
                            });
                    reduced.is_positive()
                }
            });
            let Some(c) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &leaving {
                    None => true,
                    Some((lr, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((r, _)) = leaving else {
                return false;
            };
            self.pivot(r, c);
        }
    }
}

/// Solves `problem` exactly.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars();
    if problem
        .bounds
        .iter()
        .any(|b| b.upper.as_ref().is_some_and(|u| *u < b.lower))
    {
        return Ok(LpSolution::without_point(LpStatus::Infeasible, n));
    }

    // Substitute x = lower + y with y >= 0; upper bounds become rows.
    let lower: Vec<Rational> = problem.bounds.iter().map(|b| b.lower.clone()).collect();
    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = problem
        .constraints
        .iter()
        .map(|c| {
            (
                c.coeffs.clone(),
                c.relation,
                &c.rhs - dot(&c.coeffs, &lower),
            )
        })
        .collect();
    for (k, b) in problem.bounds.iter().enumerate() {
        if let Some(u) = &b.upper {
            let mut coeffs = vec![Rational::zero(); n];
            coeffs[k] = Rational::from_integer(1.into());
            rows.push((coeffs, Relation::Le, u - &b.lower));
        }
    }
    for (coeffs, relation, rhs) in rows.iter_mut() {
        if rhs.is_negative() {
            for c in coeffs.iter_mut() {
                *c = -&*c;
            }
            *rhs = -&*rhs;
            *relation = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let first_artificial = n + slack_count;
    let cols = first_artificial + artificial_count;
    let one = Rational::from_integer(1.into());

    let mut tab = Tableau {
        rows: Vec::with_capacity(rows.len()),
        basis: Vec::with_capacity(rows.len()),
        cols,
    };
    let (mut slack, mut artificial) = (n, first_artificial);
    for (coeffs, relation, rhs) in rows {
        let mut row = coeffs;
        row.resize(cols + 1, Rational::zero());
        row[cols] = rhs;
        match relation {
            Relation::Le => {
                row[slack] = one.clone();
                tab.basis.push(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -one.clone();
                slack += 1;
                row[artificial] = one.clone();
                tab.basis.push(artificial);
                artificial += 1;
            }
            Relation::Eq => {
                row[artificial] = one.clone();
                tab.basis.push(artificial);
                artificial += 1;
            }
        }
        tab.rows.push(row);
    }

    if artificial_count > 0 {
        let cost: Vec<Rational> = (0..cols)
            .map(|j| {
                if j >= first_artificial {
                    -one.clone()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        let bounded = tab.optimize(&cost, &vec![true; cols]);
        debug_assert!(bounded, "phase one is bounded by zero");
        if tab.objective(&cost).is_negative() {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, n));
        }
        // Pivot zero-level artificials out of the basis, dropping redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] < first_artificial {
                r += 1;
                continue;
            }
            match (0..first_artificial).find(|&j| !tab.rows[r][j].is_zero()) {
                Some(c) => {
                    tab.pivot(r, c);
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                }
            }
        }
    }

    let mut cost = vec![Rational::zero(); cols];
    cost[..n].clone_from_slice(&problem.objective);
    let allowed: Vec<bool> = (0..cols).map(|j| j < first_artificial).collect();
    if !tab.optimize(&cost, &allowed) {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, n));
    }

    let mut x = lower;
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] += tab.rhs(r);
        }
    }
    let objective_value = dot(&problem.objective, &x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
    })
}

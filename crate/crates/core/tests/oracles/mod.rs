//! Brute-force reference implementations shared by the integration tests.
//!
//! Nothing here calls the solver, the demand oracle or the exchange-graph
//! search; each answer is recomputed from first principles.
#![allow(dead_code)]

use ceub_core::lp::{LpProblem, Relation};
use ceub_core::rational::Rational;
use ceub_core::{Allocation, Instance};
use num_traits::{One, Signed, Zero};

/// A row `a·x (<= | =) b` in the oracle's own normal form.
#[derive(Clone)]
struct Row {
    a: Vec<Rational>,
    b: Rational,
    equality: bool,
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter()
        .zip(x)
        .fold(Rational::zero(), |acc, (p, q)| acc + p * q)
}

fn rows_of(lp: &LpProblem) -> Vec<Row> {
    let n = lp.objective.len();
    let mut rows = Vec::new();
    for c in &lp.constraints {
        match c.relation {
            Relation::Le => rows.push(Row {
                a: c.coeffs.clone(),
                b: c.rhs.clone(),
                equality: false,
            }),
            Relation::Ge => rows.push(Row {
                a: c.coeffs.iter().map(|v| -v).collect(),
                b: -c.rhs.clone(),
                equality: false,
            }),
            Relation::Eq => rows.push(Row {
                a: c.coeffs.clone(),
                b: c.rhs.clone(),
                equality: true,
            }),
        }
    }
    for (var, bound) in lp.bounds.iter().enumerate() {
        let mut a = vec![Rational::zero(); n];
        a[var] = -Rational::one();
        rows.push(Row {
            a: a.clone(),
            b: -bound.lower.clone(),
            equality: false,
        });
        if let Some(u) = &bound.upper {
            a[var] = Rational::one();
            rows.push(Row {
                a,
                b: u.clone(),
                equality: false,
            });
        }
    }
    rows
}

fn satisfies(rows: &[Row], x: &[Rational]) -> bool {
    rows.iter().all(|r| {
        let lhs = dot(&r.a, x);
        if r.equality {
            lhs == r.b
        } else {
            lhs <= r.b
        }
    })
}

/// Gauss-Jordan on a square system; `None` when singular.
fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v = &*v * &inv;
        }
        b[col] = &b[col] * &inv;
        let pivot_row = a[col].clone();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for (v, p) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
                let d = &f * &b[col];
                b[r] -= d;
            }
        }
    }
    Some(b)
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Best objective over all basic feasible points, or `None` when there are
/// none. Assumes the feasible region is bounded and its equalities are
/// linearly independent; intended for a handful of variables.
pub fn lp_vertex_optimum(lp: &LpProblem) -> Option<(Rational, Vec<Rational>)> {
    let n = lp.objective.len();
    let rows = rows_of(lp);
    let (eqs, ineqs): (Vec<&Row>, Vec<&Row>) = rows.iter().partition(|r| r.equality);
    if eqs.len() > n {
        return None;
    }
    let mut choices = Vec::new();
    subsets(ineqs.len(), n - eqs.len(), 0, &mut Vec::new(), &mut choices);
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for choice in choices {
        let tight: Vec<&Row> = eqs
            .iter()
            .copied()
            .chain(choice.iter().map(|&i| ineqs[i]))
            .collect();
        let a = tight.iter().map(|r| r.a.clone()).collect();
        let b = tight.iter().map(|r| r.b.clone()).collect();
        let Some(x) = solve_square(a, b) else {
            continue;
        };
        if !satisfies(&rows, &x) {
            continue;
        }
        let value = dot(&lp.objective, &x);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, x));
        }
    }
    best
}

/// Best utility with `budget` at `prices`, buying at most one unit of each
/// item, via vertex enumeration of the knapsack relaxation.
pub fn knapsack_utility(values: &[Rational], prices: &[Rational], budget: &Rational) -> Rational {
    let m = values.len();
    let mut lp = LpProblem::maximize(values.to_vec());
    lp.constrain(prices.to_vec(), Relation::Le, budget.clone());
    for j in 0..m {
        lp.bound(j, Rational::zero(), Some(Rational::one()));
    }
    lp_vertex_optimum(&lp).expect("zero bundle is feasible").0
}

pub fn utilities(inst: &Instance, alloc: &Allocation) -> Vec<Rational> {
    (0..inst.agents())
        .map(|i| dot(inst.row(i), alloc.row(i)))
        .collect()
}

/// Weak domination with at least one strict gain.
pub fn dominates(better: &[Rational], worse: &[Rational]) -> bool {
    better.iter().zip(worse).all(|(b, w)| b >= w) && better.iter().zip(worse).any(|(b, w)| b > w)
}

/// Every full allocation between two agents with shares on the grid
/// `0, 1/steps, ..., 1`.
pub fn two_agent_grid(items: usize, steps: i64) -> Vec<Allocation> {
    let mut out = Vec::new();
    let total = (steps as usize + 1).pow(items as u32);
    for code in 0..total {
        let mut c = code;
        let first: Vec<Rational> = (0..items)
            .map(|_| {
                let k = (c % (steps as usize + 1)) as i64;
                c /= steps as usize + 1;
                Rational::new(k.into(), steps.into())
            })
            .collect();
        let second = first.iter().map(|s| Rational::one() - s).collect();
        out.push(Allocation::new(vec![first, second]).expect("grid point is feasible"));
    }
    out
}

/// A grid allocation that Pareto-dominates `alloc`, if any (two agents only).
pub fn grid_dominator(inst: &Instance, alloc: &Allocation, steps: i64) -> Option<Allocation> {
    let base = utilities(inst, alloc);
    two_agent_grid(inst.items(), steps)
        .into_iter()
        .find(|cand| dominates(&utilities(inst, cand), &base))
}

/// `max λ` over allocations, by vertex enumeration. Small instances only.
pub fn maxmin_value(inst: &Instance) -> Rational {
    let (n, m) = (inst.agents(), inst.items());
    let mut objective = vec![Rational::zero(); n * m + 1];
    objective[n * m] = Rational::one();
    let mut lp = LpProblem::maximize(objective);
    for i in 0..n {
        let mut row = vec![Rational::zero(); n * m + 1];
        row[n * m] = Rational::one();
        for j in 0..m {
            row[i * m + j] = -inst.value(i, j).clone();
        }
        lp.constrain(row, Relation::Le, Rational::zero());
    }
    for j in 0..m {
        let mut row = vec![Rational::zero(); n * m + 1];
        for i in 0..n {
            row[i * m + j] = Rational::one();
        }
        lp.constrain(row, Relation::Le, Rational::one());
    }
    lp_vertex_optimum(&lp).expect("bounded and feasible").0
}

/// Walks a trading cycle's trades at exact indifference for everyone but the
/// first receiver, scaling the opening amount down until every transfer fits
/// the giver's holding. Returns the traded allocation.
pub fn execute_trades(
    inst: &Instance,
    alloc: &Allocation,
    trades: &[(usize, usize, usize)],
) -> Allocation {
    // trades are (receiver, item, giver); the giver of one trade is the
    // receiver of the next.
    let mut amounts = vec![Rational::one()];
    for w in 1..trades.len() {
        let (_, prev_item, prev_giver) = trades[w - 1];
        let (receiver, item, _) = trades[w];
        assert_eq!(receiver, prev_giver);
        let lost = inst.value(receiver, prev_item) * &amounts[w - 1];
        amounts.push(lost / inst.value(receiver, item));
    }
    let mut scale = Rational::one();
    for ((_, item, giver), q) in trades.iter().zip(&amounts) {
        let room = alloc.get(*giver, *item) / q;
        if room < scale {
            scale = room;
        }
    }
    scale /= Rational::from_integer(2.into());
    let mut rows: Vec<Vec<Rational>> = alloc.rows().to_vec();
    for ((receiver, item, giver), q) in trades.iter().zip(&amounts) {
        let q = q * &scale;
        rows[*giver][*item] -= &q;
        rows[*receiver][*item] += &q;
        assert!(!rows[*giver][*item].is_negative());
    }
    Allocation::new(rows).expect("trade keeps feasibility")
}

/// Fractional-knapsack optimum by direct greedy on `v/p`, for instances too
/// wide for vertex enumeration.
pub fn greedy_utility(values: &[Rational], prices: &[Rational], budget: &Rational) -> Rational {
    let mut rates: Vec<(Rational, usize)> = values
        .iter()
        .zip(prices)
        .enumerate()
        .map(|(j, (v, p))| (v / p, j))
        .collect();
    rates.sort_by(|a, b| b.0.cmp(&a.0));
    let mut left = budget.clone();
    let mut total = Rational::zero();
    for (_, j) in rates {
        let spend = if prices[j] < left {
            prices[j].clone()
        } else {
            left.clone()
        };
        total += &values[j] * &spend / &prices[j];
        left -= spend;
    }
    total
}

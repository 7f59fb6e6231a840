//! Exact two-phase primal simplex on sparse rational rows.
//!
//! Free variables are first eliminated by Gauss-Jordan steps on equality
//! rows (inequalities get a slack first), so the simplex itself only sees
//! nonnegative columns. Entering columns follow Dantzig's rule and fall
//! back to Bland's rule during long degenerate stretches.

use std::time::Instant;

use super::sparse::{self, SparseVec};
use super::{LpError, LpInstance, LpSolution, LpStatus, Sense, SolveOptions, VarKind};
use crate::rational::Rational;

const DEGENERATE_BEFORE_BLAND: usize = 40;

struct Elimination {
    var: usize,
    /// Row normalized so that `var` has coefficient one.
    row: SparseVec,
    rhs: Rational,
}

struct Tableau {
    rows: Vec<SparseVec>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Columns at or above this index are artificial.
    art_start: usize,
    z: SparseVec,
    z0: Rational,
    pivots: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Stopped,
}

impl Tableau {
    fn rows_with(&self, j: usize) -> Vec<(usize, Rational)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(r, row)| sparse::get(row, j).map(|a| (r, a.clone())))
            .collect()
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let a = sparse::get(&self.rows[r], j).expect("pivot on zero entry").clone();
        let inv = a.recip();
        if !inv.is_one() {
            sparse::scale(&mut self.rows[r], &inv);
            self.rhs[r] = &self.rhs[r] * &inv;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for k in 0..self.rows.len() {
            if k == r {
                continue;
            }
            if let Some(b) = sparse::get(&self.rows[k], j) {
                let f = -b.clone();
                self.rows[k] = sparse::axpy(&self.rows[k], &f, &prow);
                self.rhs[k] = &self.rhs[k] + &(&f * &prhs);
            }
        }
        if let Some(d) = sparse::get(&self.z, j) {
            let f = -d.clone();
            self.z = sparse::axpy(&self.z, &f, &prow);
            self.z0 = &self.z0 - &(&f * &prhs);
        }
        self.rows[r] = prow;
        self.basis[r] = j;
        self.pivots += 1;
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, &Rational)> = None;
        for (j, d) in &self.z {
            if *j >= self.art_start || !d.is_positive() {
                continue;
            }
            if bland {
                return Some(*j);
            }
            match best {
                Some((_, bd)) if bd >= d => {}
                _ => best = Some((*j, d)),
            }
        }
        best.map(|(j, _)| j)
    }

    fn choose_leaving(&self, j: usize) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for (r, a) in self.rows_with(j) {
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.rhs[r] / &a;
            let better = match &best {
                None => true,
                Some((br, bratio)) => {
                    ratio < *bratio || (ratio == *bratio && self.basis[r] < self.basis[*br])
                }
            };
            if better {
                best = Some((r, ratio));
            }
        }
        best.map(|(r, _)| r)
    }

    fn run(&mut self, opts: &SolveOptions) -> Result<PhaseEnd, LpError> {
        let mut degenerate = 0usize;
        loop {
            if let Some(dl) = opts.deadline {
                if self.pivots % 16 == 0 && Instant::now() > dl {
                    return Err(LpError::Timeout);
                }
            }
            if let Some(cap) = opts.max_pivots {
                if self.pivots >= cap {
                    return Ok(PhaseEnd::Stopped);
                }
            }
            let bland = degenerate >= DEGENERATE_BEFORE_BLAND;
            let Some(j) = self.choose_entering(bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some(r) = self.choose_leaving(j) else {
                return Ok(PhaseEnd::Unbounded);
            };
            if self.rhs[r].is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, j);
        }
    }
}

pub fn solve(inst: &LpInstance, opts: &SolveOptions) -> Result<LpSolution, LpError> {
    let n = inst.num_vars();
    let mut kinds = inst.kinds.clone();
    let mut rows: Vec<SparseVec> = Vec::with_capacity(inst.rows.len());
    let mut rhs: Vec<Rational> = Vec::with_capacity(inst.rows.len());
    for row in &inst.rows {
        let mut coeffs = row.coeffs.clone();
        match row.sense {
            Sense::Eq => {}
            Sense::Le => {
                coeffs.push((kinds.len(), Rational::one()));
                kinds.push(VarKind::NonNeg);
            }
            Sense::Ge => {
                coeffs.push((kinds.len(), -Rational::one()));
                kinds.push(VarKind::NonNeg);
            }
        }
        rows.push(coeffs);
        rhs.push(row.rhs.clone());
    }
    let ncols = kinds.len();
    let mut obj: SparseVec = inst.objective.clone();
    let mut obj0 = Rational::zero();

    // Eliminate free variables.
    let mut active: Vec<bool> = vec![true; rows.len()];
    let mut elims: Vec<Elimination> = Vec::new();
    let mut unbounded = false;
    for j in 0..ncols {
        if kinds[j] != VarKind::Free {
            continue;
        }
        let mut pick: Option<usize> = None;
        for (r, row) in rows.iter().enumerate() {
            if active[r] && sparse::get(row, j).is_some() {
                if pick.is_none_or(|p| row.len() < rows[p].len()) {
                    pick = Some(r);
                }
            }
        }
        let Some(r) = pick else {
            if sparse::get(&obj, j).is_some() {
                unbounded = true;
            }
            continue;
        };
        active[r] = false;
        let inv = sparse::get(&rows[r], j).unwrap().recip();
        let mut prow = std::mem::take(&mut rows[r]);
        sparse::scale(&mut prow, &inv);
        let prhs = &rhs[r] * &inv;
        for k in 0..rows.len() {
            if !active[k] {
                continue;
            }
            if let Some(b) = sparse::get(&rows[k], j) {
                let f = -b.clone();
                rows[k] = sparse::axpy(&rows[k], &f, &prow);
                rhs[k] = &rhs[k] + &(&f * &prhs);
            }
        }
        if let Some(c) = sparse::get(&obj, j) {
            let c = c.clone();
            obj = sparse::axpy(&obj, &-c.clone(), &prow);
            obj0 += &c * &prhs;
        }
        elims.push(Elimination { var: j, row: prow, rhs: prhs });
    }

    let mut t_rows = Vec::new();
    let mut t_rhs = Vec::new();
    for (r, row) in rows.into_iter().enumerate() {
        if !active[r] {
            continue;
        }
        let mut row = row;
        let mut b = rhs[r].clone();
        if row.is_empty() {
            if !b.is_zero() {
                return Ok(infeasible(n));
            }
            continue;
        }
        if b.is_negative() {
            sparse::scale(&mut row, &-Rational::one());
            b = -b;
        }
        t_rows.push(row);
        t_rhs.push(b);
    }

    // Initial basis: unit columns where available, artificials elsewhere.
    let m = t_rows.len();
    let mut count = vec![0usize; ncols];
    for row in &t_rows {
        for (j, _) in row {
            count[*j] += 1;
        }
    }
    let art_start = ncols;
    let mut basis = vec![usize::MAX; m];
    let mut used = vec![false; ncols];
    for r in 0..m {
        let unit = t_rows[r]
            .iter()
            .find(|(j, a)| count[*j] == 1 && !used[*j] && a.is_positive())
            .map(|(j, a)| (*j, a.clone()));
        if let Some((j, a)) = unit {
            let inv = a.recip();
            sparse::scale(&mut t_rows[r], &inv);
            t_rhs[r] = &t_rhs[r] * &inv;
            basis[r] = j;
            used[j] = true;
        } else {
            basis[r] = art_start + r;
        }
    }

    let mut tab = Tableau {
        rows: t_rows,
        rhs: t_rhs,
        basis,
        art_start,
        z: Vec::new(),
        z0: Rational::zero(),
        pivots: 0,
    };

    // Phase 1: maximize -(sum of artificials).
    if tab.basis.iter().any(|&b| b >= art_start) {
        let mut z: SparseVec = Vec::new();
        let mut z0 = Rational::zero();
        for r in 0..m {
            if tab.basis[r] >= art_start {
                z = sparse::axpy(&z, &Rational::one(), &tab.rows[r]);
                z0 -= &tab.rhs[r];
            }
        }
        tab.z = z;
        tab.z0 = z0;
        match tab.run(opts)? {
            PhaseEnd::Stopped => return Ok(unknown(n, tab.pivots)),
            PhaseEnd::Unbounded => unreachable!("phase one is bounded"),
            PhaseEnd::Optimal => {}
        }
        if tab.z0.is_negative() {
            let mut s = infeasible(n);
            s.pivots = tab.pivots;
            return Ok(s);
        }
        // Drive remaining (zero-valued) artificials out, dropping redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] < art_start {
                r += 1;
                continue;
            }
            match tab.rows[r].first().map(|(j, _)| *j) {
                Some(j) => {
                    tab.pivot(r, j);
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.rhs.remove(r);
                    tab.basis.remove(r);
                }
            }
        }
    }

    // Phase 2.
    let mut z = obj.clone();
    let mut z0 = obj0.clone();
    for r in 0..tab.rows.len() {
        if let Some(c) = sparse::get(&obj, tab.basis[r]) {
            z = sparse::axpy(&z, &-c.clone(), &tab.rows[r]);
            z0 += c * &tab.rhs[r];
        }
    }
    tab.z = z;
    tab.z0 = z0;
    let end = if obj.is_empty() { PhaseEnd::Optimal } else { tab.run(opts)? };
    let status = match end {
        PhaseEnd::Stopped => return Ok(unknown(n, tab.pivots)),
        PhaseEnd::Unbounded => LpStatus::Feasible,
        PhaseEnd::Optimal if unbounded => LpStatus::Feasible,
        PhaseEnd::Optimal => LpStatus::Optimal,
    };

    let mut values = vec![Rational::zero(); ncols];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < ncols {
            values[b] = tab.rhs[r].clone();
        }
    }
    for e in elims.iter().rev() {
        let mut v = e.rhs.clone();
        for (i, c) in &e.row {
            if *i != e.var {
                v -= c * &values[*i];
            }
        }
        values[e.var] = v;
    }
    values.truncate(n);
    let objective = if inst.objective.is_empty() {
        None
    } else {
        Some(inst.objective.iter().map(|(j, c)| c * &values[*j]).sum())
    };
    Ok(LpSolution { status, values, objective, pivots: tab.pivots })
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution { status: LpStatus::Infeasible, values: vec![Rational::zero(); n], objective: None, pivots: 0 }
}

fn unknown(n: usize, pivots: usize) -> LpSolution {
    LpSolution { status: LpStatus::Unknown, values: vec![Rational::zero(); n], objective: None, pivots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // Random bounded LPs: the returned point is feasible and no random
        // feasible point found by brute force beats its objective.
        #[test]
        fn optimal_points_are_feasible_and_optimal(
            a in proptest::collection::vec(-4i64..5, 6),
            b in proptest::collection::vec(1i64..10, 3),
            c in proptest::collection::vec(-3i64..4, 2),
        ) {
            let mut lp = LpInstance::new();
            let x = lp.add_var("x", VarKind::NonNeg);
            let y = lp.add_var("y", VarKind::NonNeg);
            for k in 0..3 {
                lp.add_row(vec![(x, Rational::from(a[2 * k])), (y, Rational::from(a[2 * k + 1]))],
                           Sense::Le, Rational::from(b[k]), "r");
            }
            lp.add_row(vec![(x, Rational::one())], Sense::Le, Rational::from(10), "bx");
            lp.add_row(vec![(y, Rational::one())], Sense::Le, Rational::from(10), "by");
            lp.set_objective(vec![(x, Rational::from(c[0])), (y, Rational::from(c[1]))]);
            let s = solve(&lp, &SolveOptions::default()).unwrap();
            prop_assert_eq!(s.status, LpStatus::Optimal);
            lp.check(&s.values).unwrap();
            let best = s.objective.unwrap_or_default();
            for xi in 0..=20 {
                for yi in 0..=20 {
                    let pt = [Rational::new(xi, 2), Rational::new(yi, 2)];
                    if lp.check(&pt).is_ok() {
                        let val = Rational::from(c[0]) * &pt[0] + Rational::from(c[1]) * &pt[1];
                        prop_assert!(val <= best);
                    }
                }
            }
        }
    }
}

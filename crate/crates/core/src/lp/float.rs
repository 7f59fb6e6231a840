//! Floating-point revised simplex used as a pre-solve.
//!
//! Free columns are eliminated first (sparse Gauss-Jordan with a
//! threshold pivot rule), then a two-phase revised simplex keeps a dense
//! basis inverse. Nothing returned here is trusted as a certificate.

use std::time::Instant;

use super::{LpError, LpInstance, LpStatus, Sense, SolveOptions, VarKind};

/// Larger reduced systems are not attempted; the dense inverse would not fit.
pub const MAX_DENSE_ROWS: usize = 6000;

const PIVOT_TOL: f64 = 1e-9;
const HARRIS_SLACK: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
/// Phase-one residual above which the instance is reported infeasible.
const INFEASIBLE_ABOVE: f64 = 1e-5;
const DROP_TOL: f64 = 1e-13;
const DEGENERATE_BEFORE_BLAND: usize = 50;
const REFRESH_EVERY: usize = 20;
const PHASE_ONE_PIVOTS_PER_ROW: usize = 50;
/// Phase two only improves the objective, so it is cut off early and the
/// current feasible point returned.
const PHASE_TWO_PIVOTS_PER_ROW: usize = 3;

#[derive(Debug, Clone)]
pub struct FloatSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub pivots: usize,
}

type Row = Vec<(usize, f64)>;

fn get(row: &Row, j: usize) -> Option<f64> {
    row.binary_search_by_key(&j, |(k, _)| *k).ok().map(|i| row[i].1)
}

fn axpy(a: &Row, alpha: f64, b: &Row) -> Row {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        let ja = a.get(i).map_or(usize::MAX, |p| p.0);
        let jb = b.get(k).map_or(usize::MAX, |p| p.0);
        let (j, v) = if ja < jb {
            i += 1;
            (ja, a[i - 1].1)
        } else if jb < ja {
            k += 1;
            (jb, alpha * b[k - 1].1)
        } else {
            i += 1;
            k += 1;
            (ja, a[i - 1].1 + alpha * b[k - 1].1)
        };
        if v.abs() > DROP_TOL {
            out.push((j, v));
        }
    }
    out
}

struct Elimination {
    var: usize,
    row: Row,
    rhs: f64,
}

fn result(status: LpStatus, n: usize, pivots: usize) -> FloatSolution {
    FloatSolution { status, values: vec![0.0; n], pivots }
}

pub fn solve_float(inst: &LpInstance, opts: &SolveOptions) -> Result<FloatSolution, LpError> {
    let n = inst.num_vars();
    let mut kinds = inst.kinds.clone();
    let mut rows: Vec<Row> = Vec::with_capacity(inst.rows.len());
    let mut rhs: Vec<f64> = Vec::with_capacity(inst.rows.len());
    for row in &inst.rows {
        let mut coeffs: Row = row.coeffs.iter().map(|(j, c)| (*j, c.to_f64())).collect();
        match row.sense {
            Sense::Eq => {}
            Sense::Le => {
                coeffs.push((kinds.len(), 1.0));
                kinds.push(VarKind::NonNeg);
            }
            Sense::Ge => {
                coeffs.push((kinds.len(), -1.0));
                kinds.push(VarKind::NonNeg);
            }
        }
        rows.push(coeffs);
        rhs.push(row.rhs.to_f64());
    }
    let ncols = kinds.len();
    let mut obj: Row = inst.objective.iter().map(|(j, c)| (*j, c.to_f64())).collect();
    let mut unbounded = false;

    let mut active = vec![true; rows.len()];
    let mut elims: Vec<Elimination> = Vec::new();
    for j in 0..ncols {
        if kinds[j] != VarKind::Free {
            continue;
        }
        if let Some(dl) = opts.deadline {
            if j % 64 == 0 && Instant::now() > dl {
                return Err(LpError::Timeout);
            }
        }
        let cands: Vec<(usize, f64)> = (0..rows.len())
            .filter(|&r| active[r])
            .filter_map(|r| get(&rows[r], j).filter(|a| a.abs() > PIVOT_TOL).map(|a| (r, a)))
            .collect();
        let amax = cands.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        let Some(&(r, a)) = cands.iter().filter(|(_, a)| a.abs() >= 0.1 * amax).min_by_key(|(r, _)| rows[*r].len())
        else {
            if get(&obj, j).is_some_and(|c| c.abs() > COST_TOL) {
                unbounded = true;
            }
            continue;
        };
        active[r] = false;
        let mut prow = std::mem::take(&mut rows[r]);
        for (_, c) in prow.iter_mut() {
            *c /= a;
        }
        let prhs = rhs[r] / a;
        for &(k, b) in &cands {
            if k != r {
                rows[k] = axpy(&rows[k], -b, &prow);
                rhs[k] -= b * prhs;
            }
        }
        if let Some(c) = get(&obj, j) {
            obj = axpy(&obj, -c, &prow);
        }
        elims.push(Elimination { var: j, row: prow, rhs: prhs });
    }

    let mut t_rows: Vec<Row> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for (r, row) in rows.into_iter().enumerate() {
        if !active[r] {
            continue;
        }
        if row.is_empty() {
            if rhs[r].abs() > FEAS_TOL {
                return Ok(result(LpStatus::Infeasible, n, 0));
            }
            continue;
        }
        let s = if rhs[r] < 0.0 { -1.0 } else { 1.0 };
        t_rows.push(row.into_iter().map(|(j, c)| (j, s * c)).collect());
        b.push(s * rhs[r]);
    }
    let m = t_rows.len();
    if m > MAX_DENSE_ROWS {
        return Ok(result(LpStatus::Unknown, n, 0));
    }
    let mut cols: Vec<Row> = vec![Vec::new(); ncols];
    for (r, row) in t_rows.iter().enumerate() {
        for &(j, a) in row {
            cols[j].push((r, a));
        }
    }
    let cost: Vec<f64> = {
        let mut c = vec![0.0; ncols];
        for &(j, v) in &obj {
            c[j] = v;
        }
        c
    };

    // a perturbed right-hand side keeps both phases from stalling on the
    // mostly zero rows; the exact one is restored before reading values
    let exact_b = b.clone();
    let perturbed = b.iter().enumerate().map(|(r, v)| v + perturbation(r)).collect();
    let mut rs = Revised::new(cols, perturbed, opts);
    if rs.basis.iter().any(|&k| k >= ncols) {
        let c1: Vec<f64> = vec![0.0; ncols];
        rs.run(&c1, -1.0, PHASE_ONE_PIVOTS_PER_ROW * (m + 1) + 10_000)?;
        if rs.stopped {
            return Ok(result(LpStatus::Unknown, n, rs.pivots));
        }
        let infeas: f64 = (0..m).filter(|&r| rs.basis[r] >= ncols).map(|r| rs.xb[r]).sum();
        if infeas > INFEASIBLE_ABOVE {
            return Ok(result(LpStatus::Infeasible, n, rs.pivots));
        }
        rs.drive_out_artificials();
    }
    let end = if obj.is_empty() { End::Optimal } else { rs.run(&cost, 0.0, PHASE_TWO_PIVOTS_PER_ROW * (m + 1) + 1000)? };
    let status = match end {
        End::Unbounded | End::Stopped => LpStatus::Feasible,
        End::Optimal if unbounded => LpStatus::Feasible,
        End::Optimal => LpStatus::Optimal,
    };

    rs.b = exact_b;
    rs.refresh_xb();
    let drift = (0..m)
        .map(|r| if rs.basis[r] >= ncols { rs.xb[r].abs() } else { (-rs.xb[r]).max(0.0) })
        .fold(0.0, f64::max);
    if drift > INFEASIBLE_ABOVE {
        return Ok(result(LpStatus::Unknown, n, rs.pivots));
    }
    let mut values = vec![0.0; ncols];
    for (r, &k) in rs.basis.iter().enumerate() {
        if k < ncols {
            values[k] = rs.xb[r].max(0.0);
        }
    }
    for e in elims.iter().rev() {
        let mut v = e.rhs;
        for &(i, c) in &e.row {
            if i != e.var {
                v -= c * values[i];
            }
        }
        values[e.var] = v;
    }
    values.truncate(n);
    Ok(FloatSolution { status, values, pivots: rs.pivots })
}

/// Deterministic value in `[1e-10, 2e-10)`.
fn perturbation(r: usize) -> f64 {
    let h = (r as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
    1e-10 * (1.0 + h as f64 / (1u64 << 53) as f64)
}

enum End {
    Optimal,
    Unbounded,
    /// Out of pivots; the basis is still primal feasible.
    Stopped,
}

/// Revised simplex over nonnegative columns with an explicit dense `B⁻¹`.
/// Basis entries at or above `ncols` are artificial.
struct Revised<'a> {
    cols: Vec<Row>,
    b: Vec<f64>,
    m: usize,
    ncols: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    /// Column norms; pricing divides reduced costs by them.
    norms: Vec<f64>,
    pivots: usize,
    stopped: bool,
    opts: &'a SolveOptions,
}

impl<'a> Revised<'a> {
    fn new(cols: Vec<Row>, b: Vec<f64>, opts: &'a SolveOptions) -> Self {
        let m = b.len();
        let ncols = cols.len();
        let mut basis: Vec<usize> = (0..m).map(|r| ncols + r).collect();
        let mut is_basic = vec![false; ncols];
        let mut binv = vec![0.0; m * m];
        for r in 0..m {
            binv[r * m + r] = 1.0;
        }
        for (j, col) in cols.iter().enumerate() {
            if let [(r, a)] = col[..] {
                if a > PIVOT_TOL && basis[r] >= ncols {
                    basis[r] = j;
                    is_basic[j] = true;
                    binv[r * m + r] = 1.0 / a;
                }
            }
        }
        let xb = (0..m).map(|r| binv[r * m + r] * b[r]).collect();
        let norms = cols.iter().map(|c| c.iter().map(|(_, a)| a * a).sum::<f64>().sqrt().max(1e-12)).collect();
        Revised { cols, b, m, ncols, basis, is_basic, binv, xb, norms, pivots: 0, stopped: false, opts }
    }

    /// `B⁻¹ A_j`.
    fn column(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(i, a) in &self.cols[j] {
            for (r, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[r * m + i] * a;
            }
        }
        alpha
    }

    /// Brings column `j` in at row `r`, moving it to value `theta`.
    fn pivot(&mut self, r: usize, j: usize, alpha: &[f64], theta: f64) {
        let m = self.m;
        let ar = alpha[r];
        let prow: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|v| v / ar).collect();
        for k in 0..m {
            if k == r || alpha[k] == 0.0 {
                continue;
            }
            let f = alpha[k];
            self.xb[k] -= theta * f;
            let row = &mut self.binv[k * m..(k + 1) * m];
            for (x, p) in row.iter_mut().zip(&prow) {
                *x -= f * p;
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&prow);
        self.xb[r] = theta;
        let old = self.basis[r];
        if old < self.ncols {
            self.is_basic[old] = false;
        }
        self.basis[r] = j;
        self.is_basic[j] = true;
        self.pivots += 1;
        if self.pivots % REFRESH_EVERY == 0 {
            self.refresh_xb();
        }
    }

    fn refresh_xb(&mut self) {
        let m = self.m;
        for r in 0..m {
            let v: f64 = self.binv[r * m..(r + 1) * m].iter().zip(&self.b).map(|(x, y)| x * y).sum();
            self.xb[r] = v;
        }
    }

    /// Maximizes `cost` over the real columns; artificials cost `art_cost`.
    fn run(&mut self, cost: &[f64], art_cost: f64, cap: usize) -> Result<End, LpError> {
        let m = self.m;
        let start = self.pivots;
        let mut degenerate = 0usize;
        let mut y = vec![0.0; m];
        loop {
            if let Some(dl) = self.opts.deadline {
                if self.pivots % 16 == 0 && Instant::now() > dl {
                    return Err(LpError::Timeout);
                }
            }
            let cap_hit = self.opts.max_pivots.is_some_and(|c| self.pivots >= c) || self.pivots - start >= cap;
            if cap_hit {
                self.stopped = true;
                return Ok(End::Stopped);
            }
            y.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..m {
                let k = self.basis[r];
                let cb = if k >= self.ncols { art_cost } else { cost[k] };
                if cb != 0.0 {
                    for (yi, bi) in y.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                        *yi += cb * bi;
                    }
                }
            }
            let bland = degenerate >= DEGENERATE_BEFORE_BLAND;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                if self.is_basic[j] {
                    continue;
                }
                let d = cost[j] - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                if d <= COST_TOL {
                    continue;
                }
                if bland {
                    enter = Some((j, d));
                    break;
                }
                let score = d / self.norms[j];
                if enter.is_none_or(|(_, bs)| score > bs) {
                    enter = Some((j, score));
                }
            }
            let Some((j, _)) = enter else {
                return Ok(End::Optimal);
            };
            let alpha = self.column(j);
            // Harris two-pass ratio test: bound the step with a small
            // feasibility slack, then take the largest pivot within it
            let art_row = |r: usize| self.basis[r] >= self.ncols && art_cost == 0.0;
            let mut bound = f64::INFINITY;
            for r in 0..m {
                let a = alpha[r];
                if art_row(r) && a.abs() > PIVOT_TOL {
                    bound = 0.0;
                } else if a > PIVOT_TOL {
                    bound = bound.min((self.xb[r].max(0.0) + HARRIS_SLACK) / a);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = alpha[r];
                let ratio = if art_row(r) && a.abs() > PIVOT_TOL {
                    0.0
                } else if a > PIVOT_TOL {
                    self.xb[r].max(0.0) / a
                } else {
                    continue;
                };
                if ratio > bound {
                    continue;
                }
                if leave.is_none_or(|(br, _)| a.abs() > alpha[br].abs()) {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(End::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, j, &alpha, ratio);
        }
    }

    /// Pivots zero-valued artificials out where some real column allows it.
    fn drive_out_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.ncols {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            let mut pick: Option<(usize, f64)> = None;
            for j in (0..self.ncols).filter(|&j| !self.is_basic[j]) {
                let v: f64 = self.cols[j].iter().map(|&(i, a)| row[i] * a).sum::<f64>().abs();
                if v > 1e-7 && pick.is_none_or(|(_, bv)| v > bv) {
                    pick = Some((j, v));
                }
            }
            if let Some((j, _)) = pick {
                let alpha = self.column(j);
                self.pivot(r, j, &alpha, 0.0);
            }
        }
    }
}

//! Bounded-variable primal simplex on a dense tableau.
//!
//! Variables live in [0, upper] with upper possibly infinite. Rows are
//! equalities; `Le` rows get a slack column. Equality rows are seeded with
//! fixed artificial columns so the all-zero point is a feasible basis (the
//! right-hand sides of our conservation rows are zero). Dantzig pricing
//! with a switch to Bland's rule after a degeneracy streak.

/// Feasibility tolerance shared by the LP layer and its consumers.
pub const FEAS_EPS: f64 = 1e-7;
/// Pivot magnitude tolerance.
pub const PIVOT_EPS: f64 = 1e-9;

const DEGENERACY_STREAK: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: SolveStatus,
    /// Objective in the caller's maximization sense.
    pub objective: f64,
    pub values: Vec<f64>,
}

/// Maximization LP: `max c^T x  s.t.  rows, 0 <= x <= upper`.
#[derive(Debug, Default)]
pub struct LpBuilder {
    objective: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, RowKind, f64)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, obj: f64, upper: f64) -> usize {
        self.objective.push(obj);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        self.rows.push((coeffs, kind, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn solve(&self) -> LpSolution {
        let nstruct = self.objective.len();
        let m = self.rows.len();
        let nslack = self.rows.iter().filter(|(_, k, _)| *k == RowKind::Le).count();
        let n = nstruct + nslack + (m - nslack);
        // minimize form
        let mut cost: Vec<f64> = self.objective.iter().map(|c| -c).collect();
        cost.resize(n, 0.0);
        let mut upper = self.upper.clone();
        upper.resize(n, f64::INFINITY);
        let mut can_enter = vec![true; n];
        let mut tab = vec![0.0f64; m * n];
        let mut basis = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        let mut extra = nstruct;
        for (i, (coeffs, kind, rhs)) in self.rows.iter().enumerate() {
            for &(j, a) in coeffs {
                tab[i * n + j] += a;
            }
            tab[i * n + extra] = 1.0;
            if *kind == RowKind::Eq {
                // fixed artificial: fills the basis, may never re-enter
                upper[extra] = 0.0;
                can_enter[extra] = false;
                debug_assert!(rhs.abs() < FEAS_EPS, "eq rows must have zero rhs");
            }
            basis.push(extra);
            b.push(*rhs);
            extra += 1;
        }
        let mut in_basis = vec![false; n];
        for &j in &basis {
            in_basis[j] = true;
        }
        let mut at_upper = vec![false; n];
        let mut obj = 0.0f64;
        let mut bland = false;
        let mut degen_streak = 0usize;
        let max_iters = 200 * (m + n);
        let mut status = SolveStatus::IterationLimit;
        for _ in 0..max_iters {
            // pricing
            let mut entering: Option<usize> = None;
            let mut best = PIVOT_EPS;
            for j in 0..n {
                if in_basis[j] || !can_enter[j] || upper[j] == 0.0 {
                    continue;
                }
                let improving = if at_upper[j] { cost[j] } else { -cost[j] };
                if improving > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = improving;
                }
            }
            let Some(j) = entering else {
                status = SolveStatus::Optimal;
                break;
            };
            let dir = if at_upper[j] { -1.0 } else { 1.0 };
            // ratio test against basic bounds and the entering span
            let mut t = upper[j];
            let mut leave: Option<(usize, bool)> = None; // (row, hits_upper)
            let mut leave_piv = 0.0f64;
            for i in 0..m {
                let alpha = tab[i * n + j] * dir;
                if alpha > PIVOT_EPS {
                    let lim = b[i] / alpha;
                    if lim < t - PIVOT_EPS
                        || (lim < t + PIVOT_EPS && alpha.abs() > leave_piv)
                    {
                        t = lim.max(0.0);
                        leave = Some((i, false));
                        leave_piv = alpha.abs();
                    }
                } else if alpha < -PIVOT_EPS {
                    let ub = upper[basis[i]];
                    if ub.is_finite() {
                        let lim = (ub - b[i]) / (-alpha);
                        if lim < t - PIVOT_EPS
                            || (lim < t + PIVOT_EPS && alpha.abs() > leave_piv)
                        {
                            t = lim.max(0.0);
                            leave = Some((i, true));
                            leave_piv = alpha.abs();
                        }
                    }
                }
            }
            if leave.is_none() && !t.is_finite() {
                // structurally impossible for our LPs; stop with what we have
                debug_assert!(false, "unbounded LP");
                break;
            }
            if t < PIVOT_EPS {
                degen_streak += 1;
                if degen_streak > DEGENERACY_STREAK {
                    bland = true;
                }
            } else {
                degen_streak = 0;
                bland = false;
            }
            obj += cost[j] * dir * t;
            match leave {
                None => {
                    // bound flip, no basis change
                    for i in 0..m {
                        b[i] -= tab[i * n + j] * dir * t;
                    }
                    at_upper[j] = !at_upper[j];
                }
                Some((r, hits_upper)) => {
                    let enter_val = if at_upper[j] { upper[j] - t } else { t };
                    for i in 0..m {
                        if i != r {
                            b[i] -= tab[i * n + j] * dir * t;
                        }
                    }
                    b[r] = enter_val;
                    let old = basis[r];
                    in_basis[old] = false;
                    at_upper[old] = hits_upper;
                    in_basis[j] = true;
                    at_upper[j] = false;
                    basis[r] = j;
                    // row reduce
                    let piv = tab[r * n + j];
                    let inv = 1.0 / piv;
                    for col in 0..n {
                        tab[r * n + col] *= inv;
                    }
                    tab[r * n + j] = 1.0;
                    for i in 0..m {
                        if i == r {
                            continue;
                        }
                        let f = tab[i * n + j];
                        if f != 0.0 {
                            for col in 0..n {
                                tab[i * n + col] -= f * tab[r * n + col];
                            }
                            tab[i * n + j] = 0.0;
                        }
                    }
                    let f = cost[j];
                    if f != 0.0 {
                        for col in 0..n {
                            cost[col] -= f * tab[r * n + col];
                        }
                        cost[j] = 0.0;
                    }
                }
            }
        }
        let mut values = vec![0.0f64; nstruct];
        for (j, v) in values.iter_mut().enumerate() {
            if at_upper[j] {
                *v = upper[j];
            }
        }
        for (i, &col) in basis.iter().enumerate() {
            if col < nstruct {
                values[col] = b[i].max(0.0);
            }
        }
        LpSolution { status, objective: -obj, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_bounded_max() {
        // max x + 2y s.t. x + y <= 1.5, 0 <= x,y <= 1
        let mut lp = LpBuilder::new();
        let x = lp.add_var(1.0, 1.0);
        let y = lp.add_var(2.0, 1.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowKind::Le, 1.5);
        let sol = lp.solve();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 2.5).abs() < 1e-9);
        assert!((sol.values[x] - 0.5).abs() < 1e-9);
        assert!((sol.values[y] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_with_zero_rhs() {
        // max z s.t. z - a = 0, a <= 0.75, all in [0,1]
        let mut lp = LpBuilder::new();
        let z = lp.add_var(1.0, 1.0);
        let a = lp.add_var(0.0, 0.75);
        lp.add_row(vec![(z, 1.0), (a, -1.0)], RowKind::Eq, 0.0);
        let sol = lp.solve();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 0.75).abs() < 1e-9);
    }

    #[test]
    fn degenerate_rows_do_not_cycle() {
        // several redundant constraints around the same vertex
        let mut lp = LpBuilder::new();
        let x = lp.add_var(1.0, f64::INFINITY);
        let y = lp.add_var(1.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0)], RowKind::Le, 1.0);
        lp.add_row(vec![(x, 1.0), (y, 0.0)], RowKind::Le, 1.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowKind::Le, 2.0);
        lp.add_row(vec![(y, 1.0)], RowKind::Le, 1.0);
        let sol = lp.solve();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }
}

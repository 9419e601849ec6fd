//! A small dense two-phase simplex solver and the specialized
//! Farkas-certificate linear program behind the S-lemma certificate
//! construction.
//!
//! Problem sizes here are tiny (n·p + 1 constraints over p + n structural
//! variables), so a dense tableau with Bland's anti-cycling rule is the whole
//! story.

use crate::{Error, Result};

/// Feasibility/optimality tolerance for the simplex solver.
pub const LP_TOL: f64 = 1e-9;

const MAX_PIVOTS: usize = 20_000;

/// `max c·x` subject to `ineqs: a·x ≤ b`, `eqs: a·x = b`, and per-variable
/// sign restriction (`free[j]` true means unrestricted, otherwise `x_j ≥ 0`).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub maximize: Vec<f64>,
    pub ineqs: Vec<(Vec<f64>, f64)>,
    pub eqs: Vec<(Vec<f64>, f64)>,
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the original variables (empty unless optimal).
    pub x: Vec<f64>,
    pub value: f64,
}

struct Tableau {
    // rows: m constraints; cols: n variables plus rhs
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= piv;
        }
        self.rhs[row] /= piv;
        for r in 0..self.a.len() {
            if r != row {
                let f = self.a[r][col];
                if f != 0.0 {
                    for c in 0..self.ncols {
                        self.a[r][c] -= f * self.a[row][c];
                    }
                    self.rhs[r] -= f * self.rhs[row];
                }
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering variable is the lowest-index improving column,
    /// leaving row breaks ratio ties by lowest basis index.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<f64> {
        // reduced costs maintained implicitly via basis recomputation
        for _ in 0..MAX_PIVOTS {
            let y = self.basic_cost_multipliers(cost);
            let mut entering = None;
            for (j, &cost_j) in cost.iter().enumerate().take(allowed) {
                if self.basis.contains(&j) {
                    continue;
                }
                let reduced = cost_j - (0..self.a.len()).map(|r| y[r] * self.a[r][j]).sum::<f64>();
                if reduced < -LP_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                let value = self
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(r, &j)| cost[j] * self.rhs[r])
                    .sum();
                return Ok(value);
            };
            let mut leaving: Option<usize> = None;
            let mut best = f64::INFINITY;
            for r in 0..self.a.len() {
                if self.a[r][col] > LP_TOL {
                    let ratio = self.rhs[r] / self.a[r][col];
                    let better = ratio < best - 1e-15
                        || ((ratio - best).abs() <= 1e-15
                            && leaving.is_none_or(|l| self.basis[r] < self.basis[l]));
                    if better {
                        best = ratio;
                        leaving = Some(r);
                    }
                }
            }
            let Some(row) = leaving else {
                return Err(Error::Lp("unbounded direction".into()));
            };
            self.pivot(row, col);
        }
        Err(Error::IterationCap {
            what: format!("simplex pivoting (basis {:?})", self.basis),
            cap: MAX_PIVOTS,
        })
    }

    /// Simplex multipliers for the current basis, solving `Bᵀy = c_B` using
    /// the already-reduced tableau (basis columns are unit vectors, so the
    /// multipliers read off directly).
    fn basic_cost_multipliers(&self, cost: &[f64]) -> Vec<f64> {
        // With the tableau kept in canonical form, row r corresponds to basic
        // variable basis[r] and the reduced cost of column j is
        // c_j - Σ_r c_{basis[r]} a[r][j].
        self.basis.iter().map(|&j| cost[j]).collect()
    }
}

/// Solve with the two-phase dense simplex method.
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution> {
    let n_orig = lp.maximize.len();
    if lp.free.len() != n_orig
        || lp.ineqs.iter().any(|(a, _)| a.len() != n_orig)
        || lp.eqs.iter().any(|(a, _)| a.len() != n_orig)
    {
        return Err(Error::DimensionMismatch("linear program rows".into()));
    }

    // expand free variables as differences of nonnegative pairs
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n_orig);
    let mut n_std = 0;
    for j in 0..n_orig {
        if lp.free[j] {
            col_of.push((n_std, Some(n_std + 1)));
            n_std += 2;
        } else {
            col_of.push((n_std, None));
            n_std += 1;
        }
    }
    let expand = |row: &[f64]| {
        let mut out = vec![0.0; n_std];
        for j in 0..n_orig {
            let (pos, neg) = col_of[j];
            out[pos] = row[j];
            if let Some(neg) = neg {
                out[neg] = -row[j];
            }
        }
        out
    };

    let n_slack = lp.ineqs.len();
    let m = lp.ineqs.len() + lp.eqs.len();
    let n_total = n_std + n_slack + m; // structural + slack + artificial
    let mut a = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (k, (row, b)) in lp.ineqs.iter().chain(lp.eqs.iter()).enumerate() {
        let mut r = expand(row);
        r.resize(n_total, 0.0);
        if k < n_slack {
            r[n_std + k] = 1.0;
        }
        let mut b = *b;
        if b < 0.0 {
            for v in r.iter_mut() {
                *v = -*v;
            }
            b = -b;
        }
        r[n_std + n_slack + k] = 1.0;
        a.push(r);
        rhs.push(b);
    }

    let mut t = Tableau {
        a,
        rhs,
        basis: (0..m).map(|k| n_std + n_slack + k).collect(),
        ncols: n_total,
    };
    // canonicalize: artificial basis columns are already unit, but reduce so
    // every basis column is a unit vector across rows
    for r in 0..m {
        let col = t.basis[r];
        let piv = t.a[r][col];
        debug_assert!(piv == 1.0);
        let _ = piv;
    }

    // phase 1: minimize the artificial sum
    let mut phase1_cost = vec![0.0; n_total];
    for k in 0..m {
        phase1_cost[n_std + n_slack + k] = 1.0;
    }
    let infeas = match t.optimize(&phase1_cost, n_total) {
        Ok(v) => v,
        Err(Error::Lp(_)) => unreachable!("phase 1 is bounded below by zero"),
        Err(e) => return Err(e),
    };
    if infeas > LP_TOL * (1.0 + t.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            value: 0.0,
        });
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if t.basis[r] >= n_std + n_slack {
            if let Some(col) = (0..n_std + n_slack).find(|&c| t.a[r][c].abs() > LP_TOL) {
                t.pivot(r, col);
            }
        }
    }

    // phase 2: maximize the real objective (as min of its negation)
    let mut phase2_cost = vec![0.0; n_total];
    for (j, &(pos, neg)) in col_of.iter().enumerate().take(n_orig) {
        phase2_cost[pos] = -lp.maximize[j];
        if let Some(neg) = neg {
            phase2_cost[neg] = lp.maximize[j];
        }
    }
    // forbid artificials from re-entering
    let value = match t.optimize(&phase2_cost, n_std + n_slack) {
        Ok(v) => -v,
        Err(Error::Lp(_)) => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: Vec::new(),
                value: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };

    let mut std_x = vec![0.0; n_total];
    for (r, &j) in t.basis.iter().enumerate() {
        std_x[j] = t.rhs[r];
    }
    let x: Vec<f64> = (0..n_orig)
        .map(|j| {
            let (pos, neg) = col_of[j];
            std_x[pos] - neg.map_or(0.0, |c| std_x[c])
        })
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
    })
}

/// A multiplier pair for the diagonal certificate system: free `xhat` of
/// length p and nonnegative `d` of length n with
/// `xhat_i + d_j + λ_i μ_j ≥ 0` for all pairs and `Σ xhat + Σ d ≤ 0`.
#[derive(Debug, Clone)]
pub struct FarkasSolution {
    pub xhat: Vec<f64>,
    pub d: Vec<f64>,
}

impl FarkasSolution {
    /// Direct substitution check of all n·p + 1 inequalities.
    pub fn verify(&self, lambda: &[f64], mu: &[f64], tol: f64) -> bool {
        let sum: f64 = self.xhat.iter().sum::<f64>() + self.d.iter().sum::<f64>();
        if sum > tol || self.d.iter().any(|&v| v < -tol) {
            return false;
        }
        for (i, &li) in lambda.iter().enumerate() {
            for (j, &mj) in mu.iter().enumerate() {
                if self.xhat[i] + self.d[j] + li * mj < -tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Decide feasibility of the certificate system for eigenvalue vectors
/// `(λ, μ)` by minimizing `Σ xhat + Σ d` over the n·p cover constraints and
/// accepting when the optimum is ≤ [`LP_TOL`].
///
/// No sign structure of `λ` is assumed.
pub fn farkas_certificate_lp(lambda: &[f64], mu: &[f64]) -> Result<Option<FarkasSolution>> {
    let p = lambda.len();
    let n = mu.len();
    let nvars = p + n;
    let mut maximize = vec![-1.0; nvars]; // max -(Σ xhat + Σ d)
    let mut free = vec![false; nvars];
    for slot in free.iter_mut().take(p) {
        *slot = true;
    }
    // keep d bounded in a known-value direction: nothing extra needed, the
    // objective already penalizes growth
    let mut ineqs = Vec::with_capacity(p * n);
    for (i, &li) in lambda.iter().enumerate() {
        for (j, &mj) in mu.iter().enumerate() {
            // -xhat_i - d_j ≤ λ_i μ_j
            let mut row = vec![0.0; nvars];
            row[i] = -1.0;
            row[p + j] = -1.0;
            ineqs.push((row, li * mj));
        }
    }
    maximize.truncate(nvars);
    let lp = LinearProgram {
        maximize,
        ineqs,
        eqs: Vec::new(),
        free,
    };
    let sol = simplex_solve(&lp)?;
    match sol.status {
        LpStatus::Optimal if sol.value >= -LP_TOL => {
            let xhat = sol.x[..p].to_vec();
            let d = sol.x[p..].iter().map(|&v| v.max(0.0)).collect();
            Ok(Some(FarkasSolution { xhat, d }))
        }
        LpStatus::Optimal => Ok(None),
        other => Err(Error::Lp(format!(
            "certificate LP ended with unexpected status {other:?}"
        ))),
    }
}

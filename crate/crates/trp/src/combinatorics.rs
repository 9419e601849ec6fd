//! Partial-assignment optimization and Birkhoff-von Neumann decomposition.
//!
//! The sets involved are tiny (n below ~100), so the solvers favor clarity
//! and cross-checkability: a greedy sorted matching for positive weights, an
//! augmenting-path Hungarian solver for the general case, exhaustive
//! enumeration for desk sizes, and greedy Birkhoff peeling.

use crate::linalg::Mat;
use crate::{Error, Result};

/// Row/column sum tolerance for doubly stochastic matrices.
pub const DS_TOL: f64 = 1e-9;
/// Entries below this are zeroed before matching on the positive support.
pub const STRIP_TOL: f64 = 1e-12;

/// An injection σ: {0..p-1} → {0..n-1} together with its objective value
/// `Σ_j w_j · c_{σ(j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub injection: Vec<usize>,
    pub value: f64,
}

fn check_weights(w: &[f64], c: &[f64]) -> Result<()> {
    if w.len() > c.len() {
        return Err(Error::InvalidArgument(format!(
            "p = {} weights exceed n = {} costs",
            w.len(),
            c.len()
        )));
    }
    if let Some(bad) = w.iter().find(|&&x| x <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weights must be strictly positive, found {bad}"
        )));
    }
    Ok(())
}

/// Globally minimal `Σ_j w_j c_{σ(j)}` over injections, for strictly positive
/// weights.
///
/// Positivity makes the sorted matching optimal: pick the p smallest costs
/// and pair the largest weight with the smallest cost. A Hungarian solve on
/// the same data double-checks the value in debug builds.
pub fn min_partial_assignment(w: &[f64], c: &[f64]) -> Result<AssignmentResult> {
    check_weights(w, c)?;
    let p = w.len();

    let mut cost_order: Vec<usize> = (0..c.len()).collect();
    cost_order.sort_by(|&i, &j| c[i].partial_cmp(&c[j]).unwrap());
    let mut weight_order: Vec<usize> = (0..p).collect();
    weight_order.sort_by(|&i, &j| w[j].partial_cmp(&w[i]).unwrap());

    let mut injection = vec![0usize; p];
    for (rank, &wj) in weight_order.iter().enumerate() {
        injection[wj] = cost_order[rank];
    }
    let value: f64 = (0..p).map(|j| w[j] * c[injection[j]]).sum();

    debug_assert!({
        let cost = Mat::from_fn(p, c.len(), |j, i| w[j] * c[i]);
        let hungarian = min_injection_hungarian(&cost);
        (hungarian.value - value).abs() <= 1e-9 * (1.0 + value.abs())
    });

    Ok(AssignmentResult { injection, value })
}

/// Globally maximal `Σ_j w_j c_{σ(j)}`; equals `-min(w, -c)`.
pub fn max_partial_assignment(w: &[f64], c: &[f64]) -> Result<AssignmentResult> {
    let neg: Vec<f64> = c.iter().map(|x| -x).collect();
    let mut r = min_partial_assignment(w, &neg)?;
    r.value = -r.value;
    Ok(r)
}

/// Minimal injection for the assignment described by the minimizing vertex,
/// when its value drops below `-threshold`; `None` otherwise.
///
/// The returned injection encodes a 0/1 partial-permutation matrix.
pub fn vertex_witness_select(
    w: &[f64],
    c: &[f64],
    threshold: f64,
) -> Result<Option<AssignmentResult>> {
    let best = min_partial_assignment(w, c)?;
    Ok(if best.value < -threshold { Some(best) } else { None })
}

/// Minimum of `Σ_j cost[j][σ(j)]` over injections, for an arbitrary-sign
/// p×n cost matrix. Exhaustive enumeration below n = 9, Hungarian beyond.
pub fn min_injection_cost(cost: &Mat) -> Result<AssignmentResult> {
    if cost.rows() > cost.cols() {
        return Err(Error::InvalidArgument(format!(
            "cost matrix has more rows ({}) than columns ({})",
            cost.rows(),
            cost.cols()
        )));
    }
    Ok(if cost.cols() <= 8 {
        min_injection_enumerate(cost)
    } else {
        min_injection_hungarian(cost)
    })
}

/// Exhaustive DFS over all injections. Exponential; fine for n ≤ 8.
pub fn min_injection_enumerate(cost: &Mat) -> AssignmentResult {
    let (p, n) = (cost.rows(), cost.cols());
    let mut used = vec![false; n];
    let mut current = vec![0usize; p];
    let mut best = AssignmentResult {
        injection: Vec::new(),
        value: f64::INFINITY,
    };
    fn dfs(
        cost: &Mat,
        j: usize,
        acc: f64,
        used: &mut [bool],
        current: &mut [usize],
        best: &mut AssignmentResult,
    ) {
        if j == cost.rows() {
            if acc < best.value {
                best.value = acc;
                best.injection = current.to_vec();
            }
            return;
        }
        for i in 0..cost.cols() {
            if !used[i] {
                used[i] = true;
                current[j] = i;
                dfs(cost, j + 1, acc + cost[(j, i)], used, current, best);
                used[i] = false;
            }
        }
    }
    dfs(cost, 0, 0.0, &mut used, &mut current, &mut best);
    best
}

/// Shortest-augmenting-path Hungarian solver on a rectangular p×n cost
/// matrix, p ≤ n. Handles negative costs via row/column potentials.
pub fn min_injection_hungarian(cost: &Mat) -> AssignmentResult {
    let (p, n) = (cost.rows(), cost.cols());
    assert!(p <= n);
    // job[w] = row currently assigned to column w; column n is a sentinel
    let mut job: Vec<Option<usize>> = vec![None; n + 1];
    let mut ys = vec![0.0f64; p];
    let mut yt = vec![0.0f64; n + 1];

    for row in 0..p {
        let mut w_curr = n;
        job[w_curr] = Some(row);
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut prv: Vec<Option<usize>> = vec![None; n + 1];
        let mut in_z = vec![false; n + 1];

        while let Some(j) = job[w_curr] {
            in_z[w_curr] = true;
            let mut delta = f64::INFINITY;
            let mut w_next = 0;
            for w in 0..n {
                if !in_z[w] {
                    let reduced = cost[(j, w)] - ys[j] - yt[w];
                    if reduced < min_to[w] {
                        min_to[w] = reduced;
                        prv[w] = Some(w_curr);
                    }
                    if min_to[w] < delta {
                        delta = min_to[w];
                        w_next = w;
                    }
                }
            }
            for w in 0..=n {
                if in_z[w] {
                    if let Some(j) = job[w] {
                        ys[j] += delta;
                    }
                    yt[w] -= delta;
                } else {
                    min_to[w] -= delta;
                }
            }
            w_curr = w_next;
        }
        // augment along the alternating path
        while w_curr != n {
            let w_prev = prv[w_curr].expect("path back to the sentinel");
            job[w_curr] = job[w_prev];
            w_curr = w_prev;
        }
        job[n] = None;
    }

    let mut injection = vec![0usize; p];
    let mut value = 0.0;
    for w in 0..n {
        if let Some(j) = job[w] {
            injection[j] = w;
            value += cost[(j, w)];
        }
    }
    AssignmentResult { injection, value }
}

/// Nonnegative square matrix with all row and column sums equal to 1 within
/// [`DS_TOL`].
#[derive(Debug, Clone)]
pub struct DoublyStochasticMatrix {
    entries: Mat,
}

impl DoublyStochasticMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(
                "doubly stochastic matrix must be square".into(),
            ));
        }
        let n = m.rows();
        for i in 0..n {
            let mut row = 0.0;
            let mut col = 0.0;
            for j in 0..n {
                if m[(i, j)] < -DS_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "negative entry {:.3e} at ({i},{j})",
                        m[(i, j)]
                    )));
                }
                row += m[(i, j)];
                col += m[(j, i)];
            }
            if (row - 1.0).abs() > DS_TOL || (col - 1.0).abs() > DS_TOL {
                return Err(Error::InvalidArgument(format!(
                    "row/column sums at index {i} deviate from 1: row {row}, col {col}"
                )));
            }
        }
        Ok(DoublyStochasticMatrix { entries: m })
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn mat(&self) -> &Mat {
        &self.entries
    }
}

/// Convex combination of permutation matrices reconstructing a doubly
/// stochastic matrix. Permutations are stored as `perm[i] = column of the 1
/// in row i`.
#[derive(Debug, Clone)]
pub struct BvnDecomposition {
    pub weights: Vec<f64>,
    pub permutations: Vec<Vec<usize>>,
}

impl BvnDecomposition {
    pub fn permutation_matrix(&self, k: usize) -> Mat {
        let n = self.permutations[k].len();
        let mut m = Mat::zeros(n, n);
        for (i, &j) in self.permutations[k].iter().enumerate() {
            m[(i, j)] = 1.0;
        }
        m
    }

    pub fn reconstruct(&self) -> Mat {
        let n = self.permutations[0].len();
        let mut m = Mat::zeros(n, n);
        for (k, &a) in self.weights.iter().enumerate() {
            for (i, &j) in self.permutations[k].iter().enumerate() {
                m[(i, j)] += a;
            }
        }
        m
    }
}

/// Greedy Birkhoff peeling: repeatedly extract a permutation supported on the
/// positive entries via bipartite matching and subtract its minimal entry.
pub fn bvn_decompose(z: &DoublyStochasticMatrix) -> Result<BvnDecomposition> {
    let n = z.dim();
    let mut residual = z.mat().clone();
    let mut weights = Vec::new();
    let mut permutations = Vec::new();
    let cap = (n - 1) * (n - 1) + 1;

    for _ in 0..cap {
        // strip numerical dust so the support matching is well posed
        let mut mass: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if residual[(i, j)] < STRIP_TOL {
                    residual[(i, j)] = 0.0;
                }
                mass += residual[(i, j)];
            }
        }
        if mass <= n as f64 * STRIP_TOL {
            break;
        }
        let perm = perfect_matching_on_support(&residual).ok_or_else(|| {
            Error::Degenerate(
                "no perfect matching on the positive support of a doubly stochastic residual"
                    .into(),
            )
        })?;
        let a = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| residual[(i, j)])
            .fold(f64::INFINITY, f64::min);
        for (i, &j) in perm.iter().enumerate() {
            residual[(i, j)] -= a;
        }
        weights.push(a);
        permutations.push(perm);
    }
    if permutations.is_empty() {
        return Err(Error::Degenerate("empty decomposition".into()));
    }
    // normalize away the stripped dust so weights sum to exactly 1
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(BvnDecomposition {
        weights,
        permutations,
    })
}

/// Kuhn's augmenting-path matching restricted to strictly positive entries.
fn perfect_matching_on_support(m: &Mat) -> Option<Vec<usize>> {
    let n = m.rows();
    let mut match_col: Vec<Option<usize>> = vec![None; n];

    fn try_row(
        m: &Mat,
        i: usize,
        visited: &mut [bool],
        match_col: &mut [Option<usize>],
    ) -> bool {
        let n = m.rows();
        for j in 0..n {
            if m[(i, j)] > 0.0 && !visited[j] {
                visited[j] = true;
                if match_col[j].is_none()
                    || try_row(m, match_col[j].unwrap(), visited, match_col)
                {
                    match_col[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }

    for i in 0..n {
        let mut visited = vec![false; n];
        if !try_row(m, i, &mut visited, &mut match_col) {
            return None;
        }
    }
    let mut perm = vec![0usize; n];
    for j in 0..n {
        perm[match_col[j].unwrap()] = j;
    }
    Some(perm)
}

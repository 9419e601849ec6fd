//! Dense symmetric linear algebra: Jacobi eigendecomposition, Cholesky
//! factorization, Kronecker products, column-stacking and symmetric-definite
//! pencil eigenvalues.

mod mat;

pub use mat::{orthonormalize_columns, Mat};

use crate::{Error, Result};

/// Cholesky pivot floor, relative to `max(1, trace/dim)`.
pub const SPD_TOL: f64 = 1e-10;
/// Band for grouping eigenvalues of a pencil into one multiplicity cluster.
pub const MULT_TOL: f64 = 1e-7;
/// Relative reconstruction residual allowed for an eigendecomposition.
pub const RECON_TOL: f64 = 1e-10;
/// Orthogonality drift allowed for eigenvector matrices.
pub const ORTHO_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 64;
const JACOBI_OFFDIAG_TOL: f64 = 1e-13;

/// Real symmetric matrix. Symmetry is enforced at construction by averaging
/// with the transpose, so stored entries satisfy `m[i][j] == m[j][i]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    entries: Mat,
}

impl SymMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if m.rows() == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        let n = m.rows();
        let mut s = Mat::zeros(n, n);
        for i in 0..n {
            s[(i, i)] = m[(i, i)];
            for j in 0..i {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(SymMatrix { entries: s })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        SymMatrix::new(Mat::from_rows(rows)?)
    }

    pub fn diag(d: &[f64]) -> Self {
        SymMatrix {
            entries: Mat::diag(d),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix {
            entries: Mat::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn mat(&self) -> &Mat {
        &self.entries
    }

    /// How far the original input was from symmetric, relative to its norm.
    pub fn asymmetry_of(m: &Mat) -> f64 {
        let d = m.sub(&m.transpose()).max_abs();
        d / (1.0 + m.max_abs())
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("symmetric matrix add".into()));
        }
        SymMatrix::new(self.entries.add(&other.entries))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("symmetric matrix sub".into()));
        }
        SymMatrix::new(self.entries.sub(&other.entries))
    }

    pub fn scale(&self, t: f64) -> SymMatrix {
        SymMatrix {
            entries: self.entries.scale(t),
        }
    }
}

/// Symmetric positive definite matrix together with its Cholesky factor
/// `base = L Lᵀ`. The factor both validates definiteness and backs the
/// pencil reduction.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    base: SymMatrix,
    chol: Mat,
}

impl SpdMatrix {
    pub fn new(base: SymMatrix) -> Result<Self> {
        let chol = cholesky(&base)?;
        Ok(SpdMatrix { base, chol })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        SpdMatrix::new(SymMatrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix::new(SymMatrix::identity(n)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &SymMatrix {
        &self.base
    }

    pub fn mat(&self) -> &Mat {
        self.base.mat()
    }

    pub fn chol_l(&self) -> &Mat {
        &self.chol
    }

    /// `L⁻¹ M` by forward substitution, column by column.
    pub fn solve_l(&self, m: &Mat) -> Mat {
        let n = self.dim();
        assert_eq!(m.rows(), n);
        let l = &self.chol;
        let mut out = m.clone();
        for j in 0..m.cols() {
            for i in 0..n {
                let mut v = out[(i, j)];
                for k in 0..i {
                    v -= l[(i, k)] * out[(k, j)];
                }
                out[(i, j)] = v / l[(i, i)];
            }
        }
        out
    }

    /// `L⁻ᵀ M` by back substitution.
    pub fn solve_lt(&self, m: &Mat) -> Mat {
        let n = self.dim();
        assert_eq!(m.rows(), n);
        let l = &self.chol;
        let mut out = m.clone();
        for j in 0..m.cols() {
            for i in (0..n).rev() {
                let mut v = out[(i, j)];
                for k in i + 1..n {
                    v -= l[(k, i)] * out[(k, j)];
                }
                out[(i, j)] = v / l[(i, i)];
            }
        }
        out
    }

    /// `A⁻¹ M` via the two triangular solves.
    pub fn solve(&self, m: &Mat) -> Mat {
        self.solve_lt(&self.solve_l(m))
    }
}

fn cholesky(m: &SymMatrix) -> Result<Mat> {
    let n = m.dim();
    let a = m.mat();
    let floor = SPD_TOL * f64::max(1.0, a.trace() / n as f64);
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= floor {
                    return Err(Error::NotPositiveDefinite {
                        name: "matrix".into(),
                        detail: format!("Cholesky pivot {} is {:.3e} <= floor {:.3e}", i, s, floor),
                    });
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Eigendecomposition of a symmetric matrix: `input = V diag(values) Vᵀ`,
/// values sorted descending, ties kept in original column order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps stop when the off-diagonal Frobenius norm drops below
/// `1e-13 · ‖m‖_F` or after 64 sweeps.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenDecomposition> {
    let n = m.dim();
    let mut a = m.mat().clone();
    let mut v = Mat::identity(n);
    let norm = a.frobenius_norm();
    let tol = JACOBI_OFFDIAG_TOL * norm;

    let mut converged = norm == 0.0;
    let mut offdiag = off_diagonal_norm(&a);
    if offdiag <= tol {
        converged = true;
    }
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        offdiag = off_diagonal_norm(&a);
        if offdiag <= tol {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::EigenNonConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            offdiag,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the original column order on ties
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_cols(n, &order.iter().map(|&i| v.col(i)).collect::<Vec<_>>());
    Ok(EigenDecomposition { values, vectors })
}

fn off_diagonal_norm(a: &Mat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn jacobi_rotate(a: &mut Mat, v: &mut Mat, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.rows();

    let app = a[(p, p)];
    let aqq = a[(q, q)];
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let akp = a[(k, p)];
            let akq = a[(k, q)];
            a[(k, p)] = c * akp - s * akq;
            a[(p, k)] = a[(k, p)];
            a[(k, q)] = s * akp + c * akq;
            a[(q, k)] = a[(k, q)];
        }
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let mut out = Mat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-stacking: `vec(X)` of an n×p matrix is the length-n·p vector
/// obtained by stacking the columns of `X`.
pub fn vec_stack(x: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for j in 0..x.cols() {
        for i in 0..x.rows() {
            out.push(x[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vec_stack`]: rebuild an n×p matrix from its column stack.
pub fn unvec(v: &[f64], n: usize, p: usize) -> Mat {
    assert_eq!(v.len(), n * p);
    Mat::from_fn(n, p, |i, j| v[j * n + i])
}

pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    let eig = sym_eigen(m)?;
    Ok(*eig.values.last().expect("dim >= 1"))
}

pub fn max_eigenvalue(m: &SymMatrix) -> Result<f64> {
    let eig = sym_eigen(m)?;
    Ok(eig.values[0])
}

/// Top eigenvalue of the symmetric-definite pencil `(A, B)`.
#[derive(Debug, Clone)]
pub struct PencilTop {
    /// Largest eigenvalue of `A⁻¹B`.
    pub value: f64,
    /// Count of pencil eigenvalues within `MULT_TOL·(1+|value|)` of the top.
    pub multiplicity: usize,
    /// Euclidean-orthonormal columns spanning `{v : B v = value · A v}`.
    pub basis: Mat,
}

/// Largest eigenvalue of `A⁻¹B`, computed as `λ_max(L⁻¹ B L⁻ᵀ)` with
/// `A = L Lᵀ`. The returned basis columns are genuine pencil eigenvectors,
/// re-orthonormalized in the Euclidean inner product.
pub fn pencil_lambda_max(a: &SpdMatrix, b: &SymMatrix) -> Result<PencilTop> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "pencil dims {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let c = a.solve_l(&a.solve_l(b.mat()).transpose());
    let eig = sym_eigen(&SymMatrix::new(c)?)?;
    let value = eig.values[0];
    let band = MULT_TOL * (1.0 + value.abs());
    let multiplicity = eig.values.iter().take_while(|&&v| value - v <= band).count();
    // map transformed eigenvectors back: v = L⁻ᵀ u solves B v = λ A v
    let u_top = Mat::from_cols(
        a.dim(),
        &(0..multiplicity).map(|k| eig.vectors.col(k)).collect::<Vec<_>>(),
    );
    let v_top = a.solve_lt(&u_top);
    let basis = orthonormalize_columns(&v_top)?;
    Ok(PencilTop {
        value,
        multiplicity,
        basis,
    })
}

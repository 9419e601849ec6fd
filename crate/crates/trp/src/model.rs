//! Problem instances, feasibility checking, objective evaluation and the
//! nonhomogeneous-to-homogeneous transform.

use crate::linalg::{
    max_eigenvalue, orthonormalize_columns, sym_eigen, Mat, SpdMatrix, SymMatrix,
};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stiefel membership tolerance. Downstream certificates tolerate this much
/// constraint drift.
pub const FEAS_TOL: f64 = 1e-8;

/// The triple `(A, B, G)` defining the trace ratio problem
/// `max tr(G XᵀB X)/tr(G XᵀA X)` over `XᵀX = I_p`. Validated once at
/// construction; solvers assume validity.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    n: usize,
    p: usize,
    a: SpdMatrix,
    b: SymMatrix,
    g: SpdMatrix,
}

impl ProblemInstance {
    pub fn new(a: SpdMatrix, b: SymMatrix, g: SpdMatrix) -> Result<Self> {
        let n = a.dim();
        let p = g.dim();
        if b.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {n}x{n} but B is {0}x{0}",
                b.dim()
            )));
        }
        if p > n {
            return Err(Error::InvalidArgument(format!(
                "p = {p} must not exceed n = {n}"
            )));
        }
        Ok(ProblemInstance { n, p, a, b, g })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn a(&self) -> &SpdMatrix {
        &self.a
    }

    pub fn b(&self) -> &SymMatrix {
        &self.b
    }

    pub fn g(&self) -> &SpdMatrix {
        &self.g
    }

    /// Diagonal 2×2 benchmark with an open duality gap: `A = I`,
    /// `G = diag(1,2)`, `B = diag(1,3)`; primal value 7/3, dual value 3.
    pub fn example_gs1() -> ProblemInstance {
        ProblemInstance::new(
            SpdMatrix::identity(2),
            SymMatrix::diag(&[1.0, 3.0]),
            SpdMatrix::new(SymMatrix::diag(&[1.0, 2.0])).unwrap(),
        )
        .unwrap()
    }
}

/// A nonhomogeneous instance: maximize
/// `(tr(G XᵀB X) + β) / (tr(G XᵀA X) + α)` over the Stiefel manifold.
#[derive(Debug, Clone)]
pub struct NgtrpInstance {
    pub base: ProblemInstance,
    pub alpha: f64,
    pub beta: f64,
}

/// An n×p matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct StiefelPoint {
    x: Mat,
}

impl StiefelPoint {
    pub fn new(x: Mat) -> Result<Self> {
        let p = x.cols();
        let gram = x.transpose().mul(&x);
        let drift = gram.sub(&Mat::identity(p)).max_abs();
        if drift > FEAS_TOL {
            return Err(Error::InvalidArgument(format!(
                "not a Stiefel point: max |XᵀX - I| = {drift:.3e}"
            )));
        }
        // implied by orthonormal columns, but checked rather than assumed
        let outer = SymMatrix::new(x.mul(&x.transpose()))?;
        let top = max_eigenvalue(&outer)?;
        if top > 1.0 + FEAS_TOL {
            return Err(Error::InvalidArgument(format!(
                "λ_max(XXᵀ) = {top} exceeds 1"
            )));
        }
        Ok(StiefelPoint { x })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn mat(&self) -> &Mat {
        &self.x
    }
}

/// The trace ratio objective `Φ(X) = tr(G XᵀB X)/tr(G XᵀA X)`.
///
/// Defined for any nonzero `x`, feasible or not; the denominator is strictly
/// positive because `A ≻ 0` and `G ≻ 0`.
pub fn phi(inst: &ProblemInstance, x: &Mat) -> Result<f64> {
    if x.rows() != inst.n || x.cols() != inst.p {
        return Err(Error::DimensionMismatch(format!(
            "X is {}x{}, instance expects {}x{}",
            x.rows(),
            x.cols(),
            inst.n,
            inst.p
        )));
    }
    if x.frobenius_norm() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let xt = x.transpose();
    let num = inst.g.mat().mul(&xt.mul(&inst.b.mat().mul(x))).trace();
    let den = inst.g.mat().mul(&xt.mul(&inst.a.mat().mul(x))).trace();
    Ok(num / den)
}

/// Homogenize a nonhomogeneous instance:
/// `Ã = A + α/(tr G)·I_n`, `B̃ = B + β/(tr G)·I_n`.
///
/// On the feasible set `tr(G XᵀX) = tr G`, so the added constants fold into
/// the trace forms exactly and the transformed objective matches the
/// original one.
pub fn ngtrp_to_gtrp(ng: &NgtrpInstance) -> Result<ProblemInstance> {
    let base = &ng.base;
    let n = base.n;
    let tr_g = base.g.mat().trace();
    let shift_a = ng.alpha / tr_g;
    let shift_b = ng.beta / tr_g;
    let a_tilde = base.a.base().add(&SymMatrix::identity(n).scale(shift_a))?;
    let a_tilde = SpdMatrix::new(a_tilde).map_err(|_| Error::NotPositiveDefinite {
        name: "Ã".into(),
        detail: format!(
            "A + α/(trG)·I with α = {} is not positive definite; the homogenization requires it",
            ng.alpha
        ),
    })?;
    let b_tilde = base.b.add(&SymMatrix::identity(n).scale(shift_b))?;
    ProblemInstance::new(a_tilde, b_tilde, base.g.clone())
}

/// Orthonormal polar factor `X (XᵀX)^{-1/2}`. Idempotent on feasible points.
pub fn project_stiefel(x: &Mat) -> Result<StiefelPoint> {
    let gram = SymMatrix::new(x.transpose().mul(x))?;
    let eig = sym_eigen(&gram)?;
    let min = *eig.values.last().unwrap();
    if min <= 1e-12 * (1.0 + eig.values[0].abs()) {
        return Err(Error::RankDeficient(min));
    }
    let inv_sqrt: Vec<f64> = eig.values.iter().map(|v| 1.0 / v.sqrt()).collect();
    let half = eig
        .vectors
        .mul(&Mat::diag(&inv_sqrt))
        .mul(&eig.vectors.transpose());
    StiefelPoint::new(x.mul(&half))
}

/// Deterministic random instance: `A = RRᵀ + 0.1·I`, `G` likewise, `B`
/// symmetric Gaussian-ish.
pub fn random_instance(n: usize, p: usize, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spd = |dim: usize, rng: &mut ChaCha8Rng| {
        let r = Mat::from_fn(dim, dim, |_, _| rng.gen_range(-1.0f64..1.0));
        let m = r.mul(&r.transpose()).add(&Mat::identity(dim).scale(0.1));
        SpdMatrix::new(SymMatrix::new(m).unwrap()).unwrap()
    };
    let a = spd(n, &mut rng);
    let g = spd(p, &mut rng);
    let b = SymMatrix::new(Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0))).unwrap();
    ProblemInstance::new(a, b, g).expect("construction is valid by design")
}

/// Deterministic random Stiefel point via orthonormalization of a Gaussian
/// matrix.
pub fn random_stiefel(n: usize, p: usize, seed: u64) -> StiefelPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let raw = Mat::from_fn(n, p, |_, _| rng.gen_range(-1.0f64..1.0));
        if let Ok(q) = orthonormalize_columns(&raw) {
            return StiefelPoint::new(q).expect("orthonormalized columns are feasible");
        }
    }
}

//! Executable matrix S-lemma.
//!
//! For symmetric `H` (p×p) and `Q` (n×n) with p ≤ n, exactly one of the
//! following holds and [`decide`] constructs the corresponding object:
//!
//! - a Stiefel point `X` with `tr(H XᵀQ X) < 0` (a [`SLemmaWitness`]), or
//! - multipliers `M` symmetric and `W ⪰ 0` with
//!   `H⊗Q + M⊗I_n + I_p⊗W ⪰ 0` and `tr M + tr W ≤ 0` (a
//!   [`SLemmaCertificate`]), which certify
//!   `tr(HXᵀQX) + tr(M(XᵀX-I_p)) + tr(W(XXᵀ-I_n)) ≥ 0` for every real X.
//!
//! Both objects carry independent verifiers that recompute every invariant
//! from scratch.

use crate::combinatorics::min_injection_cost;
use crate::linalg::{kron, min_eigenvalue, sym_eigen, Mat, SymMatrix};
use crate::lp::farkas_certificate_lp;
use crate::{Error, Result};

/// Strict-negativity threshold separating the witness branch from the
/// certificate branch.
pub const DECIDE_TOL: f64 = 1e-9;
/// Margin a witness trace value must clear below zero.
pub const WIT_MARGIN: f64 = 1e-10;
/// Verification slack on certificate eigenvalues and trace.
pub const CERT_TOL: f64 = 1e-8;

/// A feasible point violating nonnegativity: `XᵀX = I_p` and
/// `tr(H XᵀQ X) < 0`.
#[derive(Debug, Clone)]
pub struct SLemmaWitness {
    pub x: Mat,
}

/// Multiplier pair `(M, W)` plus the residuals recorded at construction.
#[derive(Debug, Clone)]
pub struct SLemmaCertificate {
    pub m: SymMatrix,
    pub w: SymMatrix,
    /// `λ_min(H⊗Q + M⊗I_n + I_p⊗W)` as computed when built.
    pub min_eig: f64,
    /// `-(tr M + tr W)` as computed when built.
    pub trace_slack: f64,
}

#[derive(Debug, Clone)]
pub enum SLemmaOutcome {
    Witness(SLemmaWitness),
    Certificate(SLemmaCertificate),
}

/// Verification record for a witness.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub ortho_residual: f64,
    pub trace_value: f64,
    pub pass: bool,
}

/// Verification record for a certificate, listing any violated invariant by
/// name.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub w_min_eig: f64,
    pub kron_min_eig: f64,
    pub trace_slack: f64,
    pub violations: Vec<String>,
    pub pass: bool,
}

/// Global minimum of `tr(H XᵀQ X)` over the Stiefel manifold.
///
/// Equals the best vertex of the relaxed polytope: the minimum over
/// injections σ of `Σ_j λ_j μ_{σ(j)}` with λ, μ the eigenvalues of H and Q.
pub fn slemma_lhs_min(h: &SymMatrix, q: &SymMatrix) -> Result<f64> {
    if h.dim() > q.dim() {
        return Err(Error::InvalidArgument(format!(
            "p = {} exceeds n = {}",
            h.dim(),
            q.dim()
        )));
    }
    let lambda = sym_eigen(h)?.values;
    let mu = sym_eigen(q)?.values;
    let cost = Mat::from_fn(h.dim(), q.dim(), |j, i| lambda[j] * mu[i]);
    Ok(min_injection_cost(&cost)?.value)
}

/// Decide which side of the dichotomy holds and build the object proving it.
///
/// Boundary behavior: when the vertex minimum sits inside the
/// `DECIDE_TOL` band the certificate side wins (it is the closed
/// condition), provided the Farkas LP succeeds.
pub fn decide(h: &SymMatrix, q: &SymMatrix) -> Result<SLemmaOutcome> {
    let p = h.dim();
    let n = q.dim();
    if p > n {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds n = {n}")));
    }
    let eh = sym_eigen(h)?;
    let eq = sym_eigen(q)?;
    let cost = Mat::from_fn(p, n, |j, i| eh.values[j] * eq.values[i]);
    let best = min_injection_cost(&cost)?;

    if best.value < -DECIDE_TOL {
        // recover the 0/1 partial permutation and rotate it back
        let mut y = Mat::zeros(n, p);
        for (j, &i) in best.injection.iter().enumerate() {
            y[(i, j)] = 1.0;
        }
        let x = eq.vectors.mul(&y).mul(&eh.vectors.transpose());
        return Ok(SLemmaOutcome::Witness(SLemmaWitness { x }));
    }

    match farkas_certificate_lp(&eh.values, &eq.values)? {
        Some(sol) => {
            let m = SymMatrix::new(
                eh.vectors
                    .mul(&Mat::diag(&sol.xhat))
                    .mul(&eh.vectors.transpose()),
            )?;
            let w = SymMatrix::new(
                eq.vectors
                    .mul(&Mat::diag(&sol.d))
                    .mul(&eq.vectors.transpose()),
            )?;
            let kron_sum = certificate_kron_sum(h, q, &m, &w)?;
            let min_eig = min_eigenvalue(&kron_sum)?;
            let trace_slack = -(m.mat().trace() + w.mat().trace());
            Ok(SLemmaOutcome::Certificate(SLemmaCertificate {
                m,
                w,
                min_eig,
                trace_slack,
            }))
        }
        None => Err(Error::BoundaryDegenerate { m_star: best.value }),
    }
}

fn certificate_kron_sum(
    h: &SymMatrix,
    q: &SymMatrix,
    m: &SymMatrix,
    w: &SymMatrix,
) -> Result<SymMatrix> {
    let p = h.dim();
    let n = q.dim();
    let sum = kron(h.mat(), q.mat())
        .add(&kron(m.mat(), &Mat::identity(n)))
        .add(&kron(&Mat::identity(p), w.mat()));
    SymMatrix::new(sum)
}

/// Recompute a witness's invariants from scratch.
pub fn verify_witness(h: &SymMatrix, q: &SymMatrix, wit: &SLemmaWitness) -> WitnessReport {
    let p = h.dim();
    let gram = wit.x.transpose().mul(&wit.x);
    let ortho_residual = gram.sub(&Mat::identity(p)).max_abs();
    let trace_value = h
        .mat()
        .mul(&wit.x.transpose().mul(&q.mat().mul(&wit.x)))
        .trace();
    WitnessReport {
        ortho_residual,
        trace_value,
        pass: ortho_residual <= 1e-8 && trace_value < -WIT_MARGIN,
    }
}

/// Recompute a certificate's invariants from scratch, including a fresh
/// eigensolve of the np×np Kronecker sum. Shares no state with [`decide`].
pub fn verify_certificate(
    h: &SymMatrix,
    q: &SymMatrix,
    cert: &SLemmaCertificate,
) -> Result<CertificateReport> {
    let mut violations = Vec::new();
    let w_min_eig = min_eigenvalue(&cert.w)?;
    if w_min_eig < -CERT_TOL {
        violations.push(format!("W is not PSD: λ_min(W) = {w_min_eig:.3e}"));
    }
    let kron_min_eig = min_eigenvalue(&certificate_kron_sum(h, q, &cert.m, &cert.w)?)?;
    if kron_min_eig < -CERT_TOL {
        violations.push(format!(
            "Kronecker sum is not PSD: λ_min = {kron_min_eig:.3e}"
        ));
    }
    let trace_slack = -(cert.m.mat().trace() + cert.w.mat().trace());
    if trace_slack < -CERT_TOL {
        violations.push(format!("tr M + tr W = {:.3e} > 0", -trace_slack));
    }
    let pass = violations.is_empty();
    Ok(CertificateReport {
        w_min_eig,
        kron_min_eig,
        trace_slack,
        violations,
        pass,
    })
}

//! Dual values and gap analysis for the four formulations: the shared
//! pencil value for the plain and redundantly constrained duals, bisection
//! with multiplier certificates for the scaled-and-redundant dual, an
//! alternating-projection feasibility search for the scaled dual, and the
//! eigenspace-multiplicity gap criterion.

use crate::linalg::{
    kron, min_eigenvalue, pencil_lambda_max, sym_eigen, Mat, SymMatrix, MULT_TOL,
};
use crate::model::{phi, ProblemInstance, StiefelPoint};
use crate::slemma::{decide, SLemmaCertificate, SLemmaOutcome};
use crate::solver::{dinkelbach_solve, oracle_search, SolveReport};
use crate::{Error, Result};

/// Absolute bisection tolerance on the dual variables μ and ρ.
pub const BIS_TOL: f64 = 1e-8;

/// Residual below which the alternating projections declare feasibility.
const DYKSTRA_TOL: f64 = 1e-7;

/// Iteration cap for one alternating-projection feasibility probe.
const DYKSTRA_MAX_ITERS: usize = 5000;

/// Sample budget for the internal lower-bound oracle seeding the brackets.
const BRACKET_SAMPLES: usize = 2000;

/// Feasible point of the scaled dual: a multiplier `S` certifying that `ρ`
/// upper-bounds the scaled formulation.
#[derive(Debug, Clone)]
pub struct GsDualCertificate {
    pub rho: f64,
    /// Symmetric p×p multiplier with `tr S ≥ 0`.
    pub s: SymMatrix,
    /// `λ_min(ρG⊗A − G⊗B − S⊗I_n)`, recomputed after the search.
    pub min_eig: f64,
    pub trace_s: f64,
}

/// Outcome of the eigenspace-multiplicity gap test.
#[derive(Debug, Clone)]
pub struct GapCondition {
    /// Multiplicity of the top pencil eigenvalue.
    pub multiplicity: usize,
    /// Whether the multiplicity reaches p, closing the gap.
    pub holds: bool,
    /// Feasible point attaining the dual value when the condition holds.
    pub witness: Option<StiefelPoint>,
    /// Set when another eigenvalue sits just outside the multiplicity band,
    /// making the count numerically ambiguous.
    pub boundary: bool,
}

/// Aggregate of the primal solve, all four dual values, and the gap test.
#[derive(Debug, Clone)]
pub struct DualityReport {
    pub primal: f64,
    pub dual_gtrp: f64,
    pub dual_gr: f64,
    pub dual_gs: f64,
    pub dual_grs: f64,
    pub gap_gtrp: f64,
    pub gap_gs: f64,
    pub top_multiplicity: usize,
    pub gap_condition_holds: bool,
    /// Multiplier pair certifying the scaled-and-redundant dual value.
    pub certificate: SLemmaCertificate,
    pub gs_certificate: GsDualCertificate,
    pub solve: SolveReport,
}

/// Lagrangian dual value of the plain trace ratio problem: the top
/// eigenvalue of the pencil `(A, B)`.
pub fn gtrp_dual_value(inst: &ProblemInstance) -> Result<f64> {
    Ok(pencil_lambda_max(inst.a(), inst.b())?.value)
}

/// Dual value with the redundant `XXᵀ ⪯ I_n` constraint added. The redundant
/// constraint alone does not move the dual, so the value coincides with
/// [`gtrp_dual_value`].
pub fn gr_dual_value(inst: &ProblemInstance) -> Result<f64> {
    gtrp_dual_value(inst)
}

fn decide_certificate(inst: &ProblemInstance, mu: f64) -> Result<Option<SLemmaCertificate>> {
    let q = inst.a().base().scale(mu).sub(inst.b())?;
    // demand an essentially tight certificate relative to the scale of
    // G⊗Q: the decision procedure's own boundary band would otherwise
    // leak amplified error into μ
    let scale = 1.0 + inst.g().mat().frobenius_norm() * q.mat().frobenius_norm();
    match decide(inst.g().base(), &q) {
        Ok(SLemmaOutcome::Certificate(c))
            if c.min_eig >= -1e-12 * scale && c.trace_slack >= -1e-12 * scale =>
        {
            Ok(Some(c))
        }
        Ok(SLemmaOutcome::Certificate(_)) => Ok(None),
        Ok(SLemmaOutcome::Witness(_)) => Ok(None),
        Err(Error::BoundaryDegenerate { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Dual value with both the redundant constraint and scaling: bisection on μ
/// where feasibility means a multiplier pair `(M, W)` exists for
/// `H = G, Q = μA − B`. Returns the value and the certificate at it.
pub fn grs_dual_value(inst: &ProblemInstance) -> Result<(f64, SLemmaCertificate)> {
    let mut hi = gtrp_dual_value(inst)? + 1.0;
    let mut lo = oracle_search(inst, BRACKET_SAMPLES, 0) - 1.0;

    if let Some(cert) = decide_certificate(inst, lo)? {
        return Ok((lo, cert));
    }
    let mut hi_cert = decide_certificate(inst, hi)?.ok_or_else(|| {
        Error::Degenerate(format!("upper bracket μ = {hi} is not dual-feasible"))
    })?;

    while hi - lo > BIS_TOL {
        let mid = 0.5 * (lo + hi);
        match decide_certificate(inst, mid)? {
            Some(cert) => {
                hi = mid;
                hi_cert = cert;
            }
            None => lo = mid,
        }
    }
    Ok((hi, hi_cert))
}

/// Projection of `d` onto `{S⊗I_n : S symmetric p×p, tr S ≥ 0}` expressed
/// through the recovered `S`: block-trace averaging, then a trace-hyperplane
/// correction if needed.
fn project_block_multiplier(d: &Mat, n: usize, p: usize) -> Mat {
    let mut s = Mat::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            let mut t = 0.0;
            for k in 0..n {
                t += d[(i * n + k, j * n + k)];
            }
            s[(i, j)] = t / n as f64;
        }
    }
    let s = s.add(&s.transpose()).scale(0.5);
    let tr = s.trace();
    if tr < 0.0 {
        s.sub(&Mat::identity(p).scale(tr / p as f64))
    } else {
        s
    }
}

fn nsd_project(m: &Mat) -> Result<Mat> {
    let eig = sym_eigen(&SymMatrix::new(m.clone())?)?;
    let dim = m.rows();
    let mut out = Mat::zeros(dim, dim);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam >= 0.0 {
            continue;
        }
        let v = eig.vectors.col(k);
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += lam * v[i] * v[j];
            }
        }
    }
    Ok(out)
}

/// One feasibility probe of the scaled dual at a fixed ρ: Dykstra
/// alternating projections between the negative-semidefinite cone and the
/// affine slice `{G⊗B + S⊗I_n − ρG⊗A : S symmetric, tr S ≥ 0}`.
fn gs_feasible_at(inst: &ProblemInstance, rho: f64) -> Result<Option<Mat>> {
    let n = inst.n();
    let p = inst.p();
    let gb = kron(inst.g().mat(), inst.b().mat());
    let ga = kron(inst.g().mat(), inst.a().mat());
    let c = gb.sub(&ga.scale(rho));

    let mut x = c.clone();
    let mut inc_cone = Mat::zeros(n * p, n * p);
    let mut inc_affine = Mat::zeros(n * p, n * p);
    let mut best_residual = f64::INFINITY;
    let mut stalled = 0usize;

    for _ in 0..DYKSTRA_MAX_ITERS {
        let y = nsd_project(&x.add(&inc_cone))?;
        inc_cone = x.add(&inc_cone).sub(&y);

        let target = y.add(&inc_affine);
        let s = project_block_multiplier(&target.sub(&c), n, p);
        let x_next = c.add(&kron(&s, &Mat::identity(n)));
        inc_affine = target.sub(&x_next);

        let residual = x_next.sub(&y).max_abs();
        x = x_next;
        if residual <= DYKSTRA_TOL {
            // the projected S can leave the slack slightly indefinite; a
            // diagonal shift S + λ_min·I repairs it exactly and stays
            // admissible as long as the trace survives the shift
            let slack = ga
                .scale(rho)
                .sub(&gb)
                .sub(&kron(&s, &Mat::identity(n)));
            let m = min_eigenvalue(&SymMatrix::new(slack)?)?;
            if m >= 0.0 {
                return Ok(Some(s));
            }
            if s.trace() + p as f64 * m >= -1e-12 * (1.0 + rho.abs()) {
                return Ok(Some(s.add(&Mat::identity(p).scale(m))));
            }
            return Ok(None);
        }
        if residual >= best_residual * 0.999 {
            stalled += 1;
            if stalled >= 200 {
                return Ok(None);
            }
        } else {
            stalled = 0;
        }
        best_residual = best_residual.min(residual);
    }
    Ok(None)
}

fn gs_certificate_at(inst: &ProblemInstance, rho: f64, s: Mat) -> Result<GsDualCertificate> {
    let n = inst.n();
    let ga = kron(inst.g().mat(), inst.a().mat());
    let gb = kron(inst.g().mat(), inst.b().mat());
    let slack = ga
        .scale(rho)
        .sub(&gb)
        .sub(&kron(&s, &Mat::identity(n)));
    let min_eig = min_eigenvalue(&SymMatrix::new(slack)?)?;
    let trace_s = s.trace();
    Ok(GsDualCertificate {
        rho,
        s: SymMatrix::new(s)?,
        min_eig,
        trace_s,
    })
}

/// Dual value of the scaled formulation: bisection on ρ with feasibility
/// decided by the alternating-projection probe. Returns ρ*, the multiplier
/// `S` found there, and independently recomputed residuals.
pub fn gs_dual_value(inst: &ProblemInstance) -> Result<GsDualCertificate> {
    let mut hi = gtrp_dual_value(inst)? + 1.0;
    let mut lo = oracle_search(inst, BRACKET_SAMPLES, 0) - 1.0;

    if let Some(s) = gs_feasible_at(inst, lo)? {
        return gs_certificate_at(inst, lo, s);
    }
    let mut hi_s = gs_feasible_at(inst, hi)?.ok_or_else(|| {
        Error::Degenerate(format!("upper bracket ρ = {hi} rejected by projections"))
    })?;

    while hi - lo > BIS_TOL {
        let mid = 0.5 * (lo + hi);
        match gs_feasible_at(inst, mid)? {
            Some(s) => {
                hi = mid;
                hi_s = s;
            }
            None => lo = mid,
        }
    }
    gs_certificate_at(inst, hi, hi_s)
}

/// Eigenspace-multiplicity test: the duality gap of the plain formulation
/// vanishes exactly when the top pencil eigenspace has dimension at least p.
/// When it does, the first p basis vectors form a feasible maximizer.
pub fn gap_condition(inst: &ProblemInstance) -> Result<GapCondition> {
    let top = pencil_lambda_max(inst.a(), inst.b())?;
    let p = inst.p();
    let holds = top.multiplicity >= p;

    // flag eigenvalues sitting just outside the multiplicity band
    let c = inst
        .a()
        .solve_l(&inst.a().solve_l(inst.b().mat()).transpose());
    let values = sym_eigen(&SymMatrix::new(c)?)?.values;
    let band = MULT_TOL * (1.0 + top.value.abs());
    let boundary = values
        .iter()
        .any(|&v| top.value - v > band && top.value - v <= 10.0 * band);

    let witness = if holds {
        let cols: Vec<Vec<f64>> = (0..p).map(|k| top.basis.col(k)).collect();
        let x = StiefelPoint::new(Mat::from_cols(inst.n(), &cols))?;
        let attained = phi(inst, x.mat())?;
        if (attained - top.value).abs() > 1e-8 * (1.0 + top.value.abs()) {
            return Err(Error::Degenerate(format!(
                "eigenspace witness attains {attained}, expected {}",
                top.value
            )));
        }
        Some(x)
    } else {
        None
    };

    Ok(GapCondition {
        multiplicity: top.multiplicity,
        holds,
        witness,
        boundary,
    })
}

/// Primal solve, all four dual values, and the gap test in one record, with
/// cross-checks between them.
pub fn full_report(inst: &ProblemInstance) -> Result<DualityReport> {
    let solve = dinkelbach_solve(inst)?;
    let dual_gtrp = gtrp_dual_value(inst)?;
    let dual_gr = gr_dual_value(inst)?;
    let (dual_grs, certificate) = grs_dual_value(inst)?;
    let gs_certificate = gs_dual_value(inst)?;
    let cond = gap_condition(inst)?;

    let primal = solve.value;
    let gap_gtrp = (primal - dual_gtrp).abs();
    let gap_gs = (primal - gs_certificate.rho).abs();

    for (name, dual) in [
        ("plain", dual_gtrp),
        ("redundant", dual_gr),
        ("scaled", gs_certificate.rho),
        ("scaled+redundant", dual_grs),
    ] {
        if primal > dual + 1e-8 {
            return Err(Error::Degenerate(format!(
                "weak duality violated: primal {primal} exceeds {name} dual {dual}"
            )));
        }
    }
    if cond.holds && !cond.boundary && gap_gtrp > 1e-6 {
        return Err(Error::Degenerate(format!(
            "multiplicity {} ≥ p but gap is {gap_gtrp}",
            cond.multiplicity
        )));
    }

    Ok(DualityReport {
        primal,
        dual_gtrp,
        dual_gr,
        dual_gs: gs_certificate.rho,
        dual_grs,
        gap_gtrp,
        gap_gs,
        top_multiplicity: cond.multiplicity,
        gap_condition_holds: cond.holds,
        certificate,
        gs_certificate,
        solve,
    })
}

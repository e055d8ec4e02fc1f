//! Resolvent differences and the Krein formula, trace formula and
//! finite-rank structure for the bounded-domain case.
//!
//! The discrete Krein formula
//! `(A_D - λ)^{-1} - (A_N - λ)^{-1} = Γ(λ) Q(λ)^{-1} Γ(λ̄)*`
//! is an exact Woodbury identity, so its residual measures nothing but
//! solver precision.

use serde_json::json;

use crate::error::{Error, Result};
use crate::model::PartitionedHermitian;
use crate::numerics::{self, cr, CMatrix, Complex64};

/// Relative singular-value cutoff for numerical rank decisions.
pub const RANK_REL_CUTOFF: f64 = 1e-8;

/// Whether a report describes the bounded-domain or the coupled
/// (transmission) comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Bounded,
    Coupled,
}

/// Both sides of the trace formula and their relative gap.
#[derive(Debug, Clone)]
pub struct TraceFormula {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub gap: f64,
}

/// `(H_II - λ)^{-1} - (A_N - λ)^{-1}` on the interior space.
pub fn resolvent_difference(model: &PartitionedHermitian, lambda: Complex64) -> Result<CMatrix> {
    let identity = CMatrix::identity(model.n_interior(), model.n_interior());
    let dirichlet = numerics::solve(&model.interior_block(), lambda, &identity, model.tau_rel())
        .map_err(|e| e.with_operator("dirichlet"))?;
    let neumann_op = model.neumann_op()?;
    let neumann = numerics::solve(&neumann_op, lambda, &identity, model.tau_rel())
        .map_err(|e| e.with_operator("neumann"))?;
    Ok(dirichlet - neumann)
}

/// Q(λ) gated for invertibility: rejects λ where the DtN matrix is
/// numerically singular, which flags λ against the Neumann spectrum.
pub(crate) fn q_invertible(model: &PartitionedHermitian, lambda: Complex64, q: &CMatrix) -> Result<()> {
    let min_sv = numerics::min_singular_value(q);
    let threshold = model.tau_rel() * q.norm().max(1.0);
    if !(min_sv > threshold) {
        return Err(Error::SingularQ { shift: lambda, min_sv, threshold });
    }
    Ok(())
}

/// Relative Frobenius residual of the Krein formula at λ.
pub fn krein_residual(model: &PartitionedHermitian, lambda: Complex64) -> Result<f64> {
    let difference = resolvent_difference(model, lambda)?;
    krein_residual_against(model, lambda, &difference)
}

fn krein_residual_against(model: &PartitionedHermitian, lambda: Complex64, difference: &CMatrix) -> Result<f64> {
    let q = model.q_at(lambda)?;
    q_invertible(model, lambda, &q)?;
    let gamma = model.gamma_at(lambda)?;
    let gamma_bar = model.gamma_at(lambda.conj())?;
    let solved = numerics::solve(&q, cr(0.0), &gamma_bar.adjoint(), model.tau_rel())?;
    let factored = gamma * solved;
    Ok((difference - factored).norm() / difference.norm().max(1.0))
}

/// Trace formula `tr((A_D-λ)^{-1} - (A_N-λ)^{-1}) = tr(Q(λ)^{-1} dQ/dλ)`.
///
/// The derivative of the shifted Nevanlinna function equals `dQ/dλ`
/// because the two differ by a constant.
pub fn trace_formula(model: &PartitionedHermitian, lambda: Complex64) -> Result<TraceFormula> {
    let difference = resolvent_difference(model, lambda)?;
    trace_formula_against(model, lambda, &difference)
}

fn trace_formula_against(
    model: &PartitionedHermitian,
    lambda: Complex64,
    difference: &CMatrix,
) -> Result<TraceFormula> {
    let q = model.q_at(lambda)?;
    q_invertible(model, lambda, &q)?;
    let derivative = model.q_derivative(lambda)?;
    let solved = numerics::solve(&q, cr(0.0), &derivative, model.tau_rel())?;
    let lhs = difference.trace();
    let rhs = solved.trace();
    let gap = (lhs - rhs).norm() / lhs.norm().max(1.0);
    Ok(TraceFormula { lhs, rhs, gap })
}

/// Per-λ verification record: Krein residual, trace formula, singular
/// values, numerical rank and Schatten norms of the resolvent difference.
#[derive(Debug, Clone)]
pub struct KreinReport {
    pub model_hash: String,
    pub lambda: Complex64,
    pub krein_residual: f64,
    pub trace: TraceFormula,
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
    pub boundary_dim: usize,
    /// `(p, (Σ σ_j^p)^{1/p})` pairs.
    pub schatten_norms: Vec<(f64, f64)>,
    pub site: Site,
}

impl KreinReport {
    /// The exact finite-rank bound from the factorization `Γ Q^{-1} Γ*`.
    pub fn rank_within_boundary_bound(&self) -> bool {
        self.numerical_rank <= self.boundary_dim
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut schatten = serde_json::Map::new();
        for (p, value) in &self.schatten_norms {
            schatten.insert(format_p(*p), json!(value));
        }
        let mut object = json!({
            "model_hash": self.model_hash,
            "lambda": {"re": self.lambda.re, "im": self.lambda.im},
            "krein_residual": self.krein_residual,
            "trace": {
                "lhs_re": self.trace.lhs.re,
                "lhs_im": self.trace.lhs.im,
                "rhs_re": self.trace.rhs.re,
                "rhs_im": self.trace.rhs.im,
                "gap": self.trace.gap,
            },
            "singular_values": self.singular_values,
            "rank": self.numerical_rank,
            "schatten": schatten,
        });
        if self.site == Site::Coupled {
            object.as_object_mut().expect("object").insert("site".into(), json!("coupled"));
        }
        object
    }
}

fn format_p(p: f64) -> String {
    if p == p.trunc() && p.abs() < 1e15 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

pub(crate) fn schatten_norms_of(singular_values: &[f64], p_list: &[f64]) -> Vec<(f64, f64)> {
    p_list
        .iter()
        .map(|&p| {
            let sum: f64 = singular_values.iter().map(|s| s.powf(p)).sum();
            (p, sum.powf(1.0 / p))
        })
        .collect()
}

/// Full per-λ report for the bounded comparison.
pub fn schatten_report(model: &PartitionedHermitian, lambda: Complex64, p_list: &[f64]) -> Result<KreinReport> {
    let difference = resolvent_difference(model, lambda)?;
    let krein_residual = krein_residual_against(model, lambda, &difference)?;
    let trace = trace_formula_against(model, lambda, &difference)?;
    let singular_values = numerics::svd_values(&difference);
    let numerical_rank = numerics::numerical_rank(&singular_values, RANK_REL_CUTOFF);
    Ok(KreinReport {
        model_hash: model.hash_hex(),
        lambda,
        krein_residual,
        trace,
        schatten_norms: schatten_norms_of(&singular_values, p_list),
        singular_values,
        numerical_rank,
        boundary_dim: model.n_boundary(),
        site: Site::Bounded,
    })
}

//! The Q-function: the (negated-flux) Dirichlet-to-Neumann matrix of a
//! partitioned model, together with its defining identity, derivative,
//! resolvent representation and Nevanlinna structure checks.

use crate::error::{Error, Result};
use crate::model::PartitionedHermitian;
use crate::numerics::{self, im_part, re_part, CMatrix, Complex64};

/// Which part of the interface form the Q-function carries.
///
/// `Whole` uses all of `H_BB` (the bounded-domain case). `Inner`/`Outer`
/// use one part of the interface diagonal split of a coupled model, paired
/// with the gamma field of the matching side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySide {
    Whole,
    Inner,
    Outer,
}

impl PartitionedHermitian {
    /// `Q(λ) = -(H_BB + H_BI Γ(λ))`, the whole-boundary DtN matrix. The
    /// minus sign makes λ ↦ Q(λ) a Q-function rather than its negative.
    pub fn q_at(&self, lambda: Complex64) -> Result<CMatrix> {
        self.q_at_side(lambda, BoundarySide::Whole)
    }

    /// One-sided or whole-boundary DtN matrix, per `side`.
    pub fn q_at_side(&self, lambda: Complex64, side: BoundarySide) -> Result<CMatrix> {
        match side {
            BoundarySide::Whole => {
                let gamma = self.gamma_at(lambda)?;
                Ok(-(self.boundary_block() + self.boundary_interior_block() * gamma))
            }
            BoundarySide::Inner => {
                let (bb_in, _) = self.boundary_split()?;
                let gamma = self.gamma_at(lambda)?;
                Ok(-(bb_in + self.boundary_interior_block() * gamma))
            }
            BoundarySide::Outer => {
                let (_, bb_out) = self.boundary_split()?;
                let gamma = self.exterior_gamma_at(lambda)?;
                Ok(-(bb_out + self.boundary_exterior_block()? * gamma))
            }
        }
    }

    /// Relative residual of the defining identity
    /// `Q(λ) - Q(μ)* = (λ - μ̄) Γ(μ)* Γ(λ)`.
    pub fn q_identity_residual(&self, lambda: Complex64, mu: Complex64) -> Result<f64> {
        let q_lambda = self.q_at(lambda)?;
        let q_mu = self.q_at(mu)?;
        let gamma_lambda = self.gamma_at(lambda)?;
        let gamma_mu = self.gamma_at(mu)?;
        let rhs = gamma_mu.adjoint() * gamma_lambda * (lambda - mu.conj());
        let lhs = &q_lambda - q_mu.adjoint();
        Ok((lhs - rhs).norm() / q_lambda.norm().max(1.0))
    }

    /// `dQ/dλ = Γ(λ̄)* Γ(λ)`.
    pub fn q_derivative(&self, lambda: Complex64) -> Result<CMatrix> {
        let gamma_bar = self.gamma_at(lambda.conj())?;
        let gamma = self.gamma_at(lambda)?;
        Ok(gamma_bar.adjoint() * gamma)
    }

    /// Relative residual of the resolvent representation
    /// `Q(λ) = Re Q(λ0) + Γ(λ0)* ((λ - Re λ0) + (λ - λ0)(λ - λ̄0)(H_II - λ)^{-1}) Γ(λ0)`.
    pub fn q_representation_residual(&self, lambda: Complex64, anchor: Complex64) -> Result<f64> {
        let q = self.q_at(lambda)?;
        let gamma_anchor = self.gamma_at(anchor)?;
        let re_q_anchor = re_part(&self.q_at(anchor)?);
        let resolvent_term = numerics::solve(&self.interior_block(), lambda, &gamma_anchor, self.tau_rel())
            .map_err(|e| e.with_operator("dirichlet"))?;
        let inner = &gamma_anchor * (lambda - numerics::cr(anchor.re))
            + resolvent_term * ((lambda - anchor) * (lambda - anchor.conj()));
        let representation = re_q_anchor + gamma_anchor.adjoint() * inner;
        Ok((q.clone() - representation).norm() / q.norm().max(1.0))
    }

    /// Nevanlinna-structure check at nonreal sample points: positivity of
    /// `Im Q(λ)/Im λ` and the symmetry `Q(λ̄) = Q(λ)*`.
    pub fn nevanlinna_check(&self, samples: &[Complex64]) -> Result<NevanlinnaReport> {
        let mut report = NevanlinnaReport { samples: Vec::with_capacity(samples.len()) };
        for &lambda in samples {
            if lambda.im == 0.0 {
                return Err(Error::InvalidInput(format!("nevanlinna samples must be nonreal, got {lambda}")));
            }
            let q = self.q_at(lambda)?;
            let q_bar = self.q_at(lambda.conj())?;
            let symmetry_residual = (q_bar - q.adjoint()).norm() / q.norm().max(1.0);
            let scaled = im_part(&q) * numerics::cr(1.0 / lambda.im);
            let eigs = numerics::hermitian_eigenvalues(&scaled)?;
            report.samples.push(NevanlinnaSample {
                lambda,
                positivity_min_eig: eigs.first().copied().unwrap_or(0.0),
                symmetry_residual,
            });
        }
        Ok(report)
    }
}

/// Per-sample outcome of [`PartitionedHermitian::nevanlinna_check`].
#[derive(Debug, Clone)]
pub struct NevanlinnaSample {
    pub lambda: Complex64,
    /// Smallest eigenvalue of `Im Q(λ)/Im λ`; nonnegative up to roundoff for
    /// a Q-function.
    pub positivity_min_eig: f64,
    /// Relative norm of `Q(λ̄) - Q(λ)*`.
    pub symmetry_residual: f64,
}

#[derive(Debug, Clone)]
pub struct NevanlinnaReport {
    pub samples: Vec<NevanlinnaSample>,
}

impl NevanlinnaReport {
    pub fn min_positivity(&self) -> f64 {
        self.samples.iter().map(|s| s.positivity_min_eig).fold(f64::INFINITY, f64::min)
    }

    pub fn max_symmetry_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.symmetry_residual).fold(0.0, f64::max)
    }
}

/// A Q-function bound to a model and a boundary side.
#[derive(Debug, Clone)]
pub struct QFunction<'m> {
    model: &'m PartitionedHermitian,
    side: BoundarySide,
}

impl<'m> QFunction<'m> {
    pub fn new(model: &'m PartitionedHermitian, side: BoundarySide) -> Self {
        Self { model, side }
    }

    pub fn side(&self) -> BoundarySide {
        self.side
    }

    pub fn at(&self, lambda: Complex64) -> Result<CMatrix> {
        self.model.q_at_side(lambda, self.side)
    }
}

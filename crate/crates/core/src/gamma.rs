//! The gamma field: the solution operator of the discrete Dirichlet
//! problem, mapping boundary data to interior λ-eigensolutions.

use crate::error::{Error, Result};
use crate::model::PartitionedHermitian;
use crate::numerics::{self, CMatrix, CVector, Complex64};

/// Relative tolerance for the two-route consistency check in
/// [`PartitionedHermitian::gamma_adjoint_flux`].
pub const FLUX_CONSISTENCY_TOL: f64 = 1e-10;

impl PartitionedHermitian {
    /// `Γ(λ) = -(H_II - λ)^{-1} H_IB`: column `j` is the interior part of
    /// the discrete λ-eigensolution with boundary value `e_j`.
    pub fn gamma_at(&self, lambda: Complex64) -> Result<CMatrix> {
        let rhs = -self.interior_boundary_block();
        numerics::solve(&self.interior_block(), lambda, &rhs, self.tau_rel())
            .map_err(|e| e.with_operator("dirichlet"))
    }

    /// Exterior-side gamma field `-(H_EE - λ)^{-1} H_EB` of a coupled model.
    pub fn exterior_gamma_at(&self, lambda: Complex64) -> Result<CMatrix> {
        let rhs = -self.exterior_boundary_block()?;
        numerics::solve(&self.exterior_block()?, lambda, &rhs, self.tau_rel())
            .map_err(|e| e.with_operator("exterior dirichlet"))
    }

    /// Holomorphic update `Γ(λ) = (I + (λ - λ0)(H_II - λ)^{-1}) Γ(λ0)`.
    pub fn gamma_update(&self, lambda: Complex64, anchor: Complex64, gamma_anchor: &CMatrix) -> Result<CMatrix> {
        if gamma_anchor.nrows() != self.n_interior() || gamma_anchor.ncols() != self.n_boundary() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "anchor gamma must be {}x{}, got {}x{}",
                    self.n_interior(),
                    self.n_boundary(),
                    gamma_anchor.nrows(),
                    gamma_anchor.ncols()
                ),
            });
        }
        if lambda == anchor {
            return Ok(gamma_anchor.clone());
        }
        let resolvent_term = numerics::solve(&self.interior_block(), lambda, gamma_anchor, self.tau_rel())
            .map_err(|e| e.with_operator("dirichlet"))?;
        Ok(gamma_anchor + resolvent_term * (lambda - anchor))
    }

    /// `Γ(λ̄)* (H_II - λ) f`, computed both as an adjoint-matrix product and
    /// as the negated conormal `-(H_BI f)` of the zero-boundary extension of
    /// `f`. The two routes must agree; their disagreement would mean the
    /// solver broke the adjoint relation.
    pub fn gamma_adjoint_flux(&self, lambda: Complex64, f: &CVector) -> Result<CVector> {
        if f.len() != self.n_interior() {
            return Err(Error::DimensionMismatch {
                context: format!("f must have {} interior entries, got {}", self.n_interior(), f.len()),
            });
        }
        let g = self.interior_block() * f - f * lambda;
        let adjoint_route = self.gamma_at(lambda.conj())?.adjoint() * g;
        let conormal_route = -(self.boundary_interior_block() * f);
        let residual = (&adjoint_route - &conormal_route).norm() / conormal_route.norm().max(1.0);
        if residual > FLUX_CONSISTENCY_TOL {
            return Err(Error::FluxMismatch { residual, tolerance: FLUX_CONSISTENCY_TOL });
        }
        Ok(adjoint_route)
    }
}

/// A gamma field anchored at a fixed resolvent point, for evaluation via the
/// holomorphic update formula.
#[derive(Debug, Clone)]
pub struct GammaField<'m> {
    model: &'m PartitionedHermitian,
    anchor: Complex64,
    anchor_matrix: CMatrix,
}

impl<'m> GammaField<'m> {
    pub fn new(model: &'m PartitionedHermitian, anchor: Complex64) -> Result<Self> {
        let anchor_matrix = model.gamma_at(anchor)?;
        Ok(Self { model, anchor, anchor_matrix })
    }

    pub fn anchor(&self) -> Complex64 {
        self.anchor
    }

    pub fn anchor_matrix(&self) -> &CMatrix {
        &self.anchor_matrix
    }

    pub fn at(&self, lambda: Complex64) -> Result<CMatrix> {
        self.model.gamma_update(lambda, self.anchor, &self.anchor_matrix)
    }
}

//! Coupling across an interface: the orthogonal sum of one-sided Dirichlet
//! operators against the transmission (whole-space) operator, the coupled
//! Q-function measuring the conormal-derivative jump, and the coupled Krein
//! and trace formulas.

use crate::error::{Error, Result};
use crate::krein::{q_invertible, schatten_norms_of, KreinReport, Site, TraceFormula, RANK_REL_CUTOFF};
use crate::model::PartitionedHermitian;
use crate::numerics::{self, cr, re_part, CMatrix, CVector, Complex64};
use crate::qfunction::BoundarySide;

fn vstack(top: &CMatrix, bottom: &CMatrix) -> CMatrix {
    debug_assert_eq!(top.ncols(), bottom.ncols());
    let mut out = CMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
    out.view_mut((top.nrows(), 0), (bottom.nrows(), bottom.ncols())).copy_from(bottom);
    out
}

fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// `A = diag(H_II, H_EE)`: the orthogonal sum of the two one-sided
/// Dirichlet operators, on interior ⊕ exterior.
pub fn orthogonal_sum_op(model: &PartitionedHermitian) -> Result<CMatrix> {
    Ok(block_diag(&model.interior_block(), &model.exterior_block()?))
}

/// The transmission operator obtained by eliminating the interface values
/// from `(Hu)|_B = 0`:
/// `Ã = diag(H_II, H_EE) - [H_IB; H_EB] H_BB^{-1} [H_BI, H_BE]`.
pub fn transmission_op(model: &PartitionedHermitian) -> Result<CMatrix> {
    let coupling = vstack(&model.interior_boundary_block(), &model.exterior_boundary_block()?);
    let solved = numerics::solve(&model.boundary_block(), cr(0.0), &coupling.adjoint(), model.tau_rel())
        .map_err(|e| match e {
            Error::NearSingularShift { min_sv, threshold, .. } => {
                Error::SingularBoundaryBlock { min_sv, threshold }
            }
            other => other,
        })?;
    let eliminated = orthogonal_sum_op(model)? - &coupling * solved;
    Ok(re_part(&eliminated))
}

/// The stacked two-sided Dirichlet solution map
/// `Γ(λ) = [-(H_II - λ)^{-1} H_IB; -(H_EE - λ)^{-1} H_EB]`.
pub fn coupled_gamma(model: &PartitionedHermitian, lambda: Complex64) -> Result<CMatrix> {
    Ok(vstack(&model.gamma_at(lambda)?, &model.exterior_gamma_at(lambda)?))
}

/// The coupled Q-function
/// `Q(λ) = -(H_BB - H_BI (H_II - λ)^{-1} H_IB - H_BE (H_EE - λ)^{-1} H_EB)`,
/// the negated sum of the conormal derivatives of the two one-sided
/// Dirichlet solutions with common interface value.
pub fn coupled_q(model: &PartitionedHermitian, lambda: Complex64) -> Result<CMatrix> {
    let gamma_in = model.gamma_at(lambda)?;
    let gamma_out = model.exterior_gamma_at(lambda)?;
    Ok(-(model.boundary_block()
        + model.boundary_interior_block() * gamma_in
        + model.boundary_exterior_block()? * gamma_out))
}

/// Residual of the defining identity with the stacked gamma field.
pub fn coupled_q_identity_residual(model: &PartitionedHermitian, lambda: Complex64, mu: Complex64) -> Result<f64> {
    let q_lambda = coupled_q(model, lambda)?;
    let q_mu = coupled_q(model, mu)?;
    let gamma_lambda = coupled_gamma(model, lambda)?;
    let gamma_mu = coupled_gamma(model, mu)?;
    let rhs = gamma_mu.adjoint() * gamma_lambda * (lambda - mu.conj());
    Ok((&q_lambda - q_mu.adjoint() - rhs).norm() / q_lambda.norm().max(1.0))
}

/// `(A - λ)^{-1} - (Ã - λ)^{-1}` on interior ⊕ exterior.
pub fn coupled_resolvent_difference(model: &PartitionedHermitian, lambda: Complex64) -> Result<CMatrix> {
    let interior_identity = CMatrix::identity(model.n_interior(), model.n_interior());
    let exterior_identity = CMatrix::identity(model.n_exterior(), model.n_exterior());
    let interior = numerics::solve(&model.interior_block(), lambda, &interior_identity, model.tau_rel())
        .map_err(|e| e.with_operator("interior dirichlet"))?;
    let exterior = numerics::solve(&model.exterior_block()?, lambda, &exterior_identity, model.tau_rel())
        .map_err(|e| e.with_operator("exterior dirichlet"))?;
    let sum_resolvent = block_diag(&interior, &exterior);
    let transmission = transmission_op(model)?;
    let whole = CMatrix::identity(transmission.nrows(), transmission.nrows());
    let transmission_resolvent = numerics::solve(&transmission, lambda, &whole, model.tau_rel())
        .map_err(|e| e.with_operator("transmission"))?;
    Ok(sum_resolvent - transmission_resolvent)
}

/// Relative residual of the coupled Krein formula
/// `(A - λ)^{-1} - (Ã - λ)^{-1} = Γ(λ) Q(λ)^{-1} Γ(λ̄)*`.
pub fn coupled_krein_residual(model: &PartitionedHermitian, lambda: Complex64) -> Result<f64> {
    let difference = coupled_resolvent_difference(model, lambda)?;
    coupled_krein_residual_against(model, lambda, &difference)
}

fn coupled_krein_residual_against(
    model: &PartitionedHermitian,
    lambda: Complex64,
    difference: &CMatrix,
) -> Result<f64> {
    let q = coupled_q(model, lambda)?;
    q_invertible(model, lambda, &q)?;
    let gamma = coupled_gamma(model, lambda)?;
    let gamma_bar = coupled_gamma(model, lambda.conj())?;
    let solved = numerics::solve(&q, cr(0.0), &gamma_bar.adjoint(), model.tau_rel())?;
    Ok((difference - gamma * solved).norm() / difference.norm().max(1.0))
}

/// Coupled trace formula `tr((A-λ)^{-1} - (Ã-λ)^{-1}) = tr(Q(λ)^{-1} dQ/dλ)`
/// with `dQ/dλ = Γ(λ̄)* Γ(λ)` for the stacked gamma field.
pub fn coupled_trace_formula(model: &PartitionedHermitian, lambda: Complex64) -> Result<TraceFormula> {
    let difference = coupled_resolvent_difference(model, lambda)?;
    coupled_trace_formula_against(model, lambda, &difference)
}

fn coupled_trace_formula_against(
    model: &PartitionedHermitian,
    lambda: Complex64,
    difference: &CMatrix,
) -> Result<TraceFormula> {
    let q = coupled_q(model, lambda)?;
    q_invertible(model, lambda, &q)?;
    let derivative = coupled_gamma(model, lambda.conj())?.adjoint() * coupled_gamma(model, lambda)?;
    let solved = numerics::solve(&q, cr(0.0), &derivative, model.tau_rel())?;
    let lhs = difference.trace();
    let rhs = solved.trace();
    let gap = (lhs - rhs).norm() / lhs.norm().max(1.0);
    Ok(TraceFormula { lhs, rhs, gap })
}

/// Full per-λ report for the coupled comparison.
pub fn coupled_schatten_report(
    model: &PartitionedHermitian,
    lambda: Complex64,
    p_list: &[f64],
) -> Result<KreinReport> {
    let difference = coupled_resolvent_difference(model, lambda)?;
    let krein_residual = coupled_krein_residual_against(model, lambda, &difference)?;
    let trace = coupled_trace_formula_against(model, lambda, &difference)?;
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
        site: Site::Coupled,
    })
}

/// Steklov-Poincaré additivity: relative gap between the coupled Q-function
/// and the sum of the two one-sided Q-functions built from the interface
/// diagonal split.
pub fn steklov_additivity_residual(model: &PartitionedHermitian, lambda: Complex64) -> Result<f64> {
    let q_in = model.q_at_side(lambda, BoundarySide::Inner)?;
    let q_out = model.q_at_side(lambda, BoundarySide::Outer)?;
    let q_coupled = coupled_q(model, lambda)?;
    Ok((q_in + q_out - &q_coupled).norm() / q_coupled.norm().max(1.0))
}

/// Flux-jump of a transmission resolvent: for `k = (Ã - λ)^{-1} h` and the
/// interface values reconstructed by elimination, the total conormal
/// `H_BI k_I + H_BB u_B + H_BE k_E` must vanish.
pub fn flux_jump_residual(model: &PartitionedHermitian, lambda: Complex64, rhs: &CVector) -> Result<f64> {
    let ni = model.n_interior();
    let ne = model.n_exterior();
    if rhs.len() != ni + ne {
        return Err(Error::DimensionMismatch {
            context: format!("rhs must live on interior ⊕ exterior ({} entries), got {}", ni + ne, rhs.len()),
        });
    }
    let transmission = transmission_op(model)?;
    let k = numerics::solve_vec(&transmission, lambda, rhs, model.tau_rel())
        .map_err(|e| e.with_operator("transmission"))?;
    let k_interior = CVector::from_fn(ni, |r, _| k[r]);
    let k_exterior = CVector::from_fn(ne, |r, _| k[ni + r]);
    let flux = model.boundary_interior_block() * k_interior + model.boundary_exterior_block()? * k_exterior;
    let interface_values = -numerics::solve_vec(&model.boundary_block(), cr(0.0), &flux, model.tau_rel())
        .map_err(|e| match e {
            Error::NearSingularShift { min_sv, threshold, .. } => {
                Error::SingularBoundaryBlock { min_sv, threshold }
            }
            other => other,
        })?;
    Ok((flux + model.boundary_block() * interface_values).norm())
}

/// Spectra of the orthogonal sum and of the transmission operator, for
/// interlacing inspection. Dirichlet bracketing orders the bottom of the
/// spectra: `min eig(A) >= min eig(Ã)`.
#[derive(Debug, Clone)]
pub struct InterlacingReport {
    pub orthogonal_sum_eigs: Vec<f64>,
    pub transmission_eigs: Vec<f64>,
}

pub fn interlacing_report(model: &PartitionedHermitian) -> Result<InterlacingReport> {
    let sum_op = orthogonal_sum_op(model)?;
    let transmission = transmission_op(model)?;
    Ok(InterlacingReport {
        orthogonal_sum_eigs: numerics::hermitian_eigenvalues(&sum_op)?,
        transmission_eigs: numerics::hermitian_eigenvalues(&transmission)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, CoefficientField, GridSpec, InnerBox};
    use crate::numerics::{c, im_part};
    use crate::presets;
    use crate::rng::SplitMix64;

    fn coupled_grid() -> PartitionedHermitian {
        let spec = GridSpec::coupled(12, 12, 1.0, InnerBox { i0: 4, j0: 4, i1: 7, j1: 7 }).unwrap();
        assemble(&spec, &CoefficientField::laplacian(12, 12)).unwrap()
    }

    #[test]
    fn path_orthogonal_sum() {
        let model = presets::path_three_coupled();
        let a = orthogonal_sum_op(&model).unwrap();
        assert_eq!(a[(0, 0)], cr(2.0));
        assert_eq!(a[(1, 1)], cr(2.0));
        assert_eq!(a[(0, 1)], cr(0.0));
    }

    #[test]
    fn sum_spectrum_is_union_of_one_sided_spectra() {
        let model = presets::random_coupled_model(17, 6, 3, 5);
        let mut expected = numerics::hermitian_eigenvalues(&model.interior_block()).unwrap();
        expected.extend(numerics::hermitian_eigenvalues(&model.exterior_block().unwrap()).unwrap());
        expected.sort_by(f64::total_cmp);
        let got = numerics::hermitian_eigenvalues(&orthogonal_sum_op(&model).unwrap()).unwrap();
        for (a, b) in expected.iter().zip(&got) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn path_transmission_op() {
        let model = presets::path_three_coupled();
        let t = transmission_op(&model).unwrap();
        assert!((t[(0, 0)] - cr(1.5)).norm() <= 1e-14);
        assert!((t[(0, 1)] - cr(-0.5)).norm() <= 1e-14);
        assert!((t[(1, 0)] - cr(-0.5)).norm() <= 1e-14);
        assert!((t[(1, 1)] - cr(1.5)).norm() <= 1e-14);
    }

    #[test]
    fn decoupled_transmission_equals_sum() {
        let model = presets::decoupled_coupled_model();
        let t = transmission_op(&model).unwrap();
        let a = orthogonal_sum_op(&model).unwrap();
        assert!((t - a).norm() <= 1e-14);
    }

    #[test]
    fn path_coupled_q_oracle() {
        let model = presets::path_three_coupled();
        let q = coupled_q(&model, cr(0.0)).unwrap();
        assert!((q[(0, 0)] - cr(-1.0)).norm() <= 1e-14);
    }

    #[test]
    fn steklov_additivity_path_and_grid() {
        let model = presets::path_three_coupled();
        assert!(steklov_additivity_residual(&model, cr(0.0)).unwrap() <= 1e-14);
        let grid = coupled_grid();
        for lambda in [c(0.0, 1.0), cr(-1.0), c(2.0, 1.0)] {
            let residual = steklov_additivity_residual(&grid, lambda).unwrap();
            assert!(residual <= 1e-12, "residual {residual} at {lambda}");
        }
    }

    #[test]
    fn coupled_q_positivity_at_i() {
        let grid = coupled_grid();
        let q = coupled_q(&grid, c(0.0, 1.0)).unwrap();
        let eigs = numerics::hermitian_eigenvalues(&im_part(&q)).unwrap();
        assert!(eigs[0] >= -1e-12, "min eig {}", eigs[0]);
    }

    #[test]
    fn coupled_q_identity_random() {
        let model = presets::random_coupled_model(23, 8, 3, 6);
        let residual = coupled_q_identity_residual(&model, c(0.4, 1.2), c(-0.7, 0.8)).unwrap();
        assert!(residual <= 1e-10, "residual {residual}");
    }

    #[test]
    fn path_coupled_krein_oracle() {
        let model = presets::path_three_coupled();
        let d = coupled_resolvent_difference(&model, cr(0.0)).unwrap();
        for r in 0..2 {
            for col in 0..2 {
                assert!((d[(r, col)] - cr(-0.25)).norm() <= 1e-14);
            }
        }
        assert!(coupled_krein_residual(&model, cr(0.0)).unwrap() <= 1e-14);
    }

    #[test]
    fn decoupled_difference_vanishes() {
        let model = presets::decoupled_coupled_model();
        let d = coupled_resolvent_difference(&model, c(0.0, 1.0)).unwrap();
        assert!(d.norm() <= 1e-14);
    }

    #[test]
    fn coupled_krein_on_grid() {
        let grid = coupled_grid();
        let residual = coupled_krein_residual(&grid, c(2.0, 1.0)).unwrap();
        assert!(residual <= 1e-10, "residual {residual}");
    }

    #[test]
    fn path_coupled_trace_oracle() {
        let model = presets::path_three_coupled();
        let t = coupled_trace_formula(&model, cr(0.0)).unwrap();
        assert!((t.lhs - cr(-0.5)).norm() <= 1e-14);
        assert!((t.rhs - cr(-0.5)).norm() <= 1e-14);
    }

    #[test]
    fn coupled_trace_on_grid_sweep() {
        let grid = coupled_grid();
        for k in 0..5 {
            let lambda = c(-1.0 + k as f64, 1.0 + 0.2 * k as f64);
            let t = coupled_trace_formula(&grid, lambda).unwrap();
            assert!(t.gap <= 1e-9, "gap {} at {lambda}", t.gap);
        }
    }

    #[test]
    fn flux_jump_random_rhs() {
        let grid = coupled_grid();
        let mut rng = SplitMix64::new(808);
        let n = grid.n_interior() + grid.n_exterior();
        let rhs = CVector::from_fn(n, |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let rhs = &rhs * cr(1.0 / rhs.norm());
        let residual = flux_jump_residual(&grid, c(0.0, 1.0), &rhs).unwrap();
        assert!(residual <= 1e-12, "residual {residual}");
    }

    #[test]
    fn interlacing_bottom_ordering() {
        let grid = coupled_grid();
        let report = interlacing_report(&grid).unwrap();
        assert_eq!(report.orthogonal_sum_eigs.len(), report.transmission_eigs.len());
        assert!(report.orthogonal_sum_eigs[0] >= report.transmission_eigs[0] - 1e-12);
    }

    #[test]
    fn coupled_report_site_field() {
        let model = presets::path_three_coupled();
        let report = coupled_schatten_report(&model, cr(0.0), &[1.0, 2.0]).unwrap();
        assert!(report.rank_within_boundary_bound());
        assert_eq!(report.to_json()["site"], "coupled");
    }

    #[test]
    fn requires_exterior_partition() {
        let model = presets::toy_two_node();
        assert!(matches!(orthogonal_sum_op(&model), Err(Error::NoExteriorPartition)));
    }
}

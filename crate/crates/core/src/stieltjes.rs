//! Discrete Stieltjes (integral) representation of the shifted Q-function,
//! the simplicity (controllability) rank, and the characterization report
//! built from both.
//!
//! With `H_II = Σ_j t_j P_j` the function `Q̃(λ) = Q(λ) - Re Q(λ0)` is a
//! matrix Nevanlinna function whose measure sits on the eigenvalues `t_j`
//! with weights `W_j = H_BI P_j H_IB`, and
//! `Q̃(λ) = α + Σ_j (1/(t_j - λ) - t_j/(1 + t_j²)) W_j`, `β = 0`.

use crate::error::{Error, Result};
use crate::model::PartitionedHermitian;
use crate::numerics::{self, im_part, re_part, CMatrix, Complex64};

/// Relative singular-value cutoff for the simplicity (controllability) rank.
pub const SIMPLICITY_RANK_CUTOFF: f64 = 1e-8;

/// Discrete Stieltjes data of `Q̃(λ) = Q(λ) - Re Q(λ0)`.
#[derive(Debug, Clone)]
pub struct StieltjesData {
    /// Pole locations: the eigenvalues of `H_II`, ascending.
    pub poles: Vec<f64>,
    /// PSD weight matrices, one per pole.
    pub weights: Vec<CMatrix>,
    pub alpha: CMatrix,
    /// Zero for these finite models.
    pub beta: CMatrix,
    /// The anchor λ0 the representation was built at.
    pub anchor: Complex64,
    /// `Re Q(λ0)`, the constant separating `Q` from `Q̃`.
    pub re_q_anchor: CMatrix,
}

impl StieltjesData {
    /// Evaluate `Q̃(λ) = α + λβ + Σ_j (1/(t_j - λ) - t_j/(1 + t_j²)) W_j`.
    pub fn reconstruct(&self, lambda: Complex64) -> CMatrix {
        let mut q = self.alpha.clone() + &self.beta * lambda;
        for (t, w) in self.poles.iter().zip(&self.weights) {
            let coefficient = (numerics::cr(*t) - lambda).inv() - numerics::cr(t / (1.0 + t * t));
            q += w * coefficient;
        }
        q
    }
}

impl PartitionedHermitian {
    /// Spectral data of the integral representation of `Q̃` anchored at a
    /// nonreal resolvent point.
    pub fn stieltjes(&self, anchor: Complex64) -> Result<StieltjesData> {
        if anchor.im == 0.0 {
            return Err(Error::InvalidInput(format!("stieltjes anchor must be nonreal, got {anchor}")));
        }
        let re_q_anchor = re_part(&self.q_at(anchor)?);
        let eig = numerics::heig(&self.interior_block())?;
        let nb = self.n_boundary();
        // Rows of U* H_IB give the weights W_j = H_BI P_j H_IB.
        let coupling = eig.eigenvectors.adjoint() * self.interior_boundary_block();
        let mut weights = Vec::with_capacity(eig.eigenvalues.len());
        let mut alpha = CMatrix::zeros(nb, nb);
        for (j, &t) in eig.eigenvalues.iter().enumerate() {
            let row = coupling.row(j);
            let w = row.adjoint() * row;
            let dist_sq = (numerics::cr(t) - anchor).norm_sqr();
            let alpha_coefficient = (anchor.re - t) / dist_sq + t / (1.0 + t * t);
            alpha += &w * numerics::cr(alpha_coefficient);
            weights.push(w);
        }
        Ok(StieltjesData {
            poles: eig.eigenvalues,
            weights,
            alpha,
            beta: CMatrix::zeros(nb, nb),
            anchor,
            re_q_anchor,
        })
    }

    /// Dimension of the block Krylov space of `(H_II, H_IB)`: the span of
    /// `H_IB, H_II H_IB, H_II² H_IB, …`. Equals the interior dimension
    /// exactly when the discrete minimal operator is simple.
    ///
    /// Blocks are normalized and orthogonalized incrementally, which keeps
    /// the span (and hence the rank) of the stacked Krylov matrix while
    /// avoiding overflow of high powers; directions below
    /// [`SIMPLICITY_RANK_CUTOFF`] are discarded.
    pub fn simplicity_rank(&self) -> usize {
        let h = self.interior_block();
        let ni = self.n_interior();
        let mut block = self.interior_boundary_block();
        let scale = numerics::operator_norm(&block);
        if scale == 0.0 {
            return 0;
        }
        block *= numerics::cr(1.0 / scale);

        let mut basis: Option<CMatrix> = None;
        let mut rank = 0usize;
        for _ in 0..ni {
            if let Some(q) = &basis {
                // Two projection passes for re-orthogonalization.
                block -= q * (q.adjoint() * &block);
                block -= q * (q.adjoint() * &block);
            }
            let svd = block.clone().svd(true, false);
            let u = svd.u.expect("svd with u requested");
            let mut fresh: Vec<usize> = Vec::new();
            for (k, &s) in svd.singular_values.iter().enumerate() {
                if s > SIMPLICITY_RANK_CUTOFF {
                    fresh.push(k);
                }
            }
            if fresh.is_empty() {
                break;
            }
            let new_dirs = CMatrix::from_fn(ni, fresh.len(), |r, c| u[(r, fresh[c])]);
            basis = Some(match basis {
                None => new_dirs.clone(),
                Some(q) => {
                    let mut grown = CMatrix::zeros(ni, q.ncols() + new_dirs.ncols());
                    grown.view_mut((0, 0), (ni, q.ncols())).copy_from(&q);
                    grown.view_mut((0, q.ncols()), (ni, new_dirs.ncols())).copy_from(&new_dirs);
                    grown
                }
            });
            rank += fresh.len();
            if rank >= ni {
                rank = ni;
                break;
            }
            block = &h * new_dirs;
            let scale = numerics::operator_norm(&block);
            if scale == 0.0 {
                break;
            }
            block *= numerics::cr(1.0 / scale);
        }
        rank
    }

    /// Characterization data: (α) the reconstruction residual of `Q̃`
    /// against `Q - Re Q(λ0)`, (β) injectivity of `Im Q̃(i)`, (γ) the
    /// η-asymptotics of `Q̃(iη)` (reported, not asserted), and the
    /// simplicity rank against the interior dimension.
    pub fn characterization_report(
        &self,
        anchor: Complex64,
        eta_list: &[f64],
        test_points: &[Complex64],
    ) -> Result<CharacterizationReport> {
        for &eta in eta_list {
            if !(eta > 0.0) {
                return Err(Error::InvalidInput(format!("eta values must be positive, got {eta}")));
            }
        }
        let data = self.stieltjes(anchor)?;
        let mut alpha_residuals = Vec::with_capacity(test_points.len());
        for &lambda in test_points {
            let reconstructed = data.reconstruct(lambda);
            let direct = self.q_at(lambda)? - &data.re_q_anchor;
            let residual = (direct - &reconstructed).norm() / reconstructed.norm().max(1.0);
            alpha_residuals.push((lambda, residual));
        }
        let beta_min_singular_value =
            numerics::min_singular_value(&im_part(&data.reconstruct(numerics::c(0.0, 1.0))));
        let mut eta_decay = Vec::with_capacity(eta_list.len());
        let mut eta_growth = Vec::with_capacity(eta_list.len());
        for &eta in eta_list {
            let q = data.reconstruct(numerics::c(0.0, eta));
            eta_decay.push((eta, numerics::operator_norm(&q) / eta));
            let im_eigs = numerics::hermitian_eigenvalues(&im_part(&q))?;
            eta_growth.push((eta, eta * im_eigs.first().copied().unwrap_or(0.0)));
        }
        Ok(CharacterizationReport {
            anchor,
            alpha_residuals,
            beta_min_singular_value,
            eta_decay,
            eta_growth,
            simplicity_rank: self.simplicity_rank(),
            interior_dim: self.n_interior(),
        })
    }
}

/// Output of [`PartitionedHermitian::characterization_report`].
#[derive(Debug, Clone)]
pub struct CharacterizationReport {
    pub anchor: Complex64,
    /// (λ, relative residual) of the (α) relation `Q(λ) - Re Q(λ0) = Q̃(λ)`.
    pub alpha_residuals: Vec<(Complex64, f64)>,
    /// Smallest singular value of `Im Q̃(i)`: the (β) injectivity check.
    pub beta_min_singular_value: f64,
    /// (η, ||Q̃(iη)||/η): the first (γ) sequence.
    pub eta_decay: Vec<(f64, f64)>,
    /// (η, η·min-eig(Im Q̃(iη))): the second (γ) sequence.
    pub eta_growth: Vec<(f64, f64)>,
    pub simplicity_rank: usize,
    pub interior_dim: usize,
}

impl CharacterizationReport {
    pub fn max_alpha_residual(&self) -> f64 {
        self.alpha_residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max)
    }
}

/// Fixed nonreal evaluation points used for reconstruction checks.
pub const DEFAULT_TEST_POINTS: [(f64, f64); 10] = [
    (0.0, 1.0),
    (1.0, 1.0),
    (-2.0, 0.5),
    (2.0, 1.0),
    (-1.0, 1.0),
    (0.5, 2.0),
    (-0.5, 1.5),
    (3.0, 0.25),
    (-2.0, -1.0),
    (1.0, -2.0),
];

pub fn default_test_points() -> Vec<Complex64> {
    DEFAULT_TEST_POINTS.iter().map(|&(re, im)| numerics::c(re, im)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, cr};
    use crate::presets;

    #[test]
    fn toy_single_pole() {
        let model = presets::toy_two_node();
        let data = model.stieltjes(c(0.0, 1.0)).unwrap();
        assert_eq!(data.poles.len(), 1);
        assert!((data.poles[0] - 2.0).abs() <= 1e-14);
        assert!((data.weights[0][(0, 0)] - cr(1.0)).norm() <= 1e-14);
        assert!(data.beta.norm() == 0.0);
        // Reconstruction is exact for the 1-pole model.
        for lambda in [c(0.0, 1.0), c(1.0, 1.0), c(-2.0, 0.5), cr(-1.0)] {
            let direct = model.q_at(lambda).unwrap() - &data.re_q_anchor;
            let rec = data.reconstruct(lambda);
            assert!((direct - rec).norm() <= 1e-14);
        }
    }

    #[test]
    fn zero_coupling_gives_zero_measure() {
        let model = presets::zero_coupling_model();
        let data = model.stieltjes(c(0.0, 1.0)).unwrap();
        assert!(data.weights.iter().all(|w| w.norm() == 0.0));
        assert_eq!(data.reconstruct(c(0.3, 0.9)).norm(), 0.0);
    }

    #[test]
    fn random_model_reconstruction() {
        let model = presets::random_model(606, 30, 6);
        let data = model.stieltjes(c(0.0, 2.0)).unwrap();
        for lambda in [c(0.0, 1.0), c(1.0, 1.0), c(-2.0, 0.5)] {
            let direct = model.q_at(lambda).unwrap() - &data.re_q_anchor;
            let rec = data.reconstruct(lambda);
            let residual = (direct - &rec).norm() / rec.norm().max(1.0);
            assert!(residual <= 1e-9, "residual {residual} at {lambda}");
        }
    }

    #[test]
    fn weights_are_psd() {
        let model = presets::random_model(11, 12, 4);
        let data = model.stieltjes(c(0.0, 1.5)).unwrap();
        for w in &data.weights {
            let eigs = numerics::hermitian_eigenvalues(w).unwrap();
            assert!(eigs[0] >= -1e-12);
        }
    }

    #[test]
    fn stieltjes_rejects_real_anchor() {
        let model = presets::toy_two_node();
        assert!(matches!(model.stieltjes(cr(0.5)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn simplicity_rank_toy_is_full() {
        assert_eq!(presets::toy_two_node().simplicity_rank(), 1);
    }

    #[test]
    fn simplicity_rank_detects_unreachable_block() {
        let model = presets::decoupled_interior_model();
        assert!(model.simplicity_rank() < model.n_interior());
    }

    #[test]
    fn simplicity_rank_zero_coupling() {
        assert_eq!(presets::zero_coupling_model().simplicity_rank(), 0);
    }

    #[test]
    fn simplicity_rank_random_full() {
        let model = presets::random_model(3, 15, 3);
        assert_eq!(model.simplicity_rank(), 15);
    }

    #[test]
    fn characterization_toy() {
        let model = presets::toy_two_node();
        let report = model
            .characterization_report(c(0.0, 1.0), &[1e2, 1e4, 1e6], &default_test_points())
            .unwrap();
        assert!(report.max_alpha_residual() <= 1e-12);
        assert!(report.beta_min_singular_value > 0.0);
        assert!(report.eta_decay[0].1 > report.eta_decay[1].1);
        assert!(report.eta_decay[1].1 > report.eta_decay[2].1);
        assert_eq!(report.simplicity_rank, 1);
        assert_eq!(report.interior_dim, 1);
    }

    #[test]
    fn characterization_flags_rank_deficient_coupling() {
        let model = presets::rank_deficient_boundary_model(50);
        let report = model
            .characterization_report(c(0.0, 1.5), &[1e2, 1e4], &default_test_points())
            .unwrap();
        assert!(report.beta_min_singular_value <= 1e-12);
    }

    #[test]
    fn characterization_full_rank_beta_positive() {
        let model = presets::random_model(92, 20, 4);
        let report = model
            .characterization_report(c(0.0, 1.0), &[1e2, 1e4], &default_test_points())
            .unwrap();
        assert!(report.beta_min_singular_value > 1e-12);
    }
}

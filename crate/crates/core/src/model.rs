//! Partitioned Hermitian models: the discrete stand-in for an elliptic
//! operator on a domain with interior, boundary (interface) and optional
//! exterior nodes.
//!
//! The Hilbert space of the model is spanned by the non-boundary nodes;
//! boundary values enter as auxiliary data. With `γ0 u = u|_B` and
//! `γ1 u = (Hu)|_B` the abstract Green identity holds exactly for any
//! Hermitian `H`, which is what makes every identity in this crate checkable
//! to solver precision.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{
    self, check_finite, hermitian_deviation, re_part, CMatrix, CVector, Complex64,
    DEFAULT_SINGULAR_REL_THRESHOLD, HERMITIAN_REL_TOL,
};

/// Index partition of the nodes into interior, boundary and (for coupled
/// models) exterior sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    size: usize,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    exterior: Option<Vec<usize>>,
}

impl Partition {
    pub fn new(size: usize, interior: Vec<usize>, boundary: Vec<usize>) -> Result<Self> {
        Self::build(size, interior, boundary, None)
    }

    pub fn with_exterior(
        size: usize,
        interior: Vec<usize>,
        boundary: Vec<usize>,
        exterior: Vec<usize>,
    ) -> Result<Self> {
        if exterior.is_empty() {
            return Err(Error::Partition("exterior index set must be nonempty when present".into()));
        }
        Self::build(size, interior, boundary, Some(exterior))
    }

    fn build(
        size: usize,
        interior: Vec<usize>,
        boundary: Vec<usize>,
        exterior: Option<Vec<usize>>,
    ) -> Result<Self> {
        if interior.is_empty() || boundary.is_empty() {
            return Err(Error::Partition("interior and boundary index sets must be nonempty".into()));
        }
        let mut seen = vec![false; size];
        let mut mark = |indices: &[usize]| -> Result<()> {
            for &ix in indices {
                if ix >= size {
                    return Err(Error::Partition(format!("index {ix} out of range for {size} nodes")));
                }
                if seen[ix] {
                    return Err(Error::Partition(format!("index {ix} appears in more than one set")));
                }
                seen[ix] = true;
            }
            Ok(())
        };
        mark(&interior)?;
        mark(&boundary)?;
        if let Some(ext) = &exterior {
            mark(ext)?;
        }
        if let Some(missing) = seen.iter().position(|covered| !covered) {
            return Err(Error::Partition(format!("index {missing} is not assigned to any set")));
        }
        Ok(Self { size, interior, boundary, exterior })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn exterior(&self) -> Option<&[usize]> {
        self.exterior.as_deref()
    }
}

/// A Hermitian matrix with an interior/boundary (or
/// interior/interface/exterior) partition: the discrete model every
/// operation in this crate works on.
#[derive(Debug, Clone)]
pub struct PartitionedHermitian {
    h: CMatrix,
    partition: Partition,
    boundary_split: Option<(CMatrix, CMatrix)>,
    tau_rel: f64,
}

impl PartitionedHermitian {
    pub fn new(h: CMatrix, partition: Partition) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() == 0 {
            return Err(Error::EmptyMatrix { rows: h.nrows(), cols: h.ncols() });
        }
        if h.nrows() != partition.size() {
            return Err(Error::DimensionMismatch {
                context: format!("matrix is {}x{} but partition covers {} nodes", h.nrows(), h.ncols(), partition.size()),
            });
        }
        check_finite(&h)?;
        let deviation = hermitian_deviation(&h);
        if deviation > HERMITIAN_REL_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        if let Some(exterior) = partition.exterior() {
            for &i in partition.interior() {
                for &e in exterior {
                    if h[(i, e)] != numerics::cr(0.0) || h[(e, i)] != numerics::cr(0.0) {
                        return Err(Error::Partition(format!(
                            "interior node {i} couples directly to exterior node {e}; the interface must separate the regions"
                        )));
                    }
                }
            }
        }
        Ok(Self { h, partition, boundary_split: None, tau_rel: DEFAULT_SINGULAR_REL_THRESHOLD })
    }

    /// Attach an interface split `H_BB = H_BB^in + H_BB^out`.
    pub fn with_boundary_split(mut self, bb_in: CMatrix, bb_out: CMatrix) -> Result<Self> {
        let nb = self.partition.boundary().len();
        for part in [&bb_in, &bb_out] {
            if part.nrows() != nb || part.ncols() != nb {
                return Err(Error::DimensionMismatch {
                    context: format!("boundary split parts must be {nb}x{nb}"),
                });
            }
            check_finite(part)?;
            let deviation = hermitian_deviation(part);
            if deviation > HERMITIAN_REL_TOL {
                return Err(Error::NotHermitian { deviation });
            }
        }
        let bb = self.boundary_block();
        let gap = (&bb_in + &bb_out - &bb).norm();
        if gap > HERMITIAN_REL_TOL * bb.norm().max(1.0) {
            return Err(Error::Partition(format!(
                "boundary split parts do not sum to H_BB (deviation {gap:.3e})"
            )));
        }
        self.boundary_split = Some((bb_in, bb_out));
        Ok(self)
    }

    /// Override the relative resolvent-set acceptance threshold.
    pub fn with_singular_threshold(mut self, tau_rel: f64) -> Self {
        self.tau_rel = tau_rel;
        self
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn tau_rel(&self) -> f64 {
        self.tau_rel
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_interior(&self) -> usize {
        self.partition.interior().len()
    }

    pub fn n_boundary(&self) -> usize {
        self.partition.boundary().len()
    }

    pub fn n_exterior(&self) -> usize {
        self.partition.exterior().map_or(0, <[usize]>::len)
    }

    pub fn block(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |r, c| self.h[(rows[r], cols[c])])
    }

    pub fn interior_block(&self) -> CMatrix {
        self.block(self.partition.interior(), self.partition.interior())
    }

    pub fn boundary_block(&self) -> CMatrix {
        self.block(self.partition.boundary(), self.partition.boundary())
    }

    pub fn interior_boundary_block(&self) -> CMatrix {
        self.block(self.partition.interior(), self.partition.boundary())
    }

    pub fn boundary_interior_block(&self) -> CMatrix {
        self.block(self.partition.boundary(), self.partition.interior())
    }

    pub fn exterior_block(&self) -> Result<CMatrix> {
        let ext = self.partition.exterior().ok_or(Error::NoExteriorPartition)?;
        Ok(self.block(ext, ext))
    }

    pub fn exterior_boundary_block(&self) -> Result<CMatrix> {
        let ext = self.partition.exterior().ok_or(Error::NoExteriorPartition)?;
        Ok(self.block(ext, self.partition.boundary()))
    }

    pub fn boundary_exterior_block(&self) -> Result<CMatrix> {
        let ext = self.partition.exterior().ok_or(Error::NoExteriorPartition)?;
        Ok(self.block(self.partition.boundary(), ext))
    }

    /// Interface split `(H_BB^in, H_BB^out)`.
    pub fn boundary_split(&self) -> Result<(&CMatrix, &CMatrix)> {
        self.boundary_split.as_ref().map(|(a, b)| (a, b)).ok_or(Error::NoBoundarySplit)
    }

    /// Gather the entries of a full-length vector at `indices`.
    pub fn gather(&self, u: &CVector, indices: &[usize]) -> CVector {
        CVector::from_fn(indices.len(), |k, _| u[indices[k]])
    }

    /// The Dirichlet realization: the interior-interior block.
    pub fn dirichlet_op(&self) -> CMatrix {
        self.interior_block()
    }

    /// The Neumann realization `H_II - H_IB H_BB^{-1} H_BI`, obtained by
    /// eliminating the boundary values from `(Hu)|_B = 0`.
    pub fn neumann_op(&self) -> Result<CMatrix> {
        let bb = self.boundary_block();
        let bi = self.boundary_interior_block();
        let x = numerics::solve(&bb, numerics::cr(0.0), &bi, self.tau_rel).map_err(|e| match e {
            Error::NearSingularShift { min_sv, threshold, .. } => {
                Error::SingularBoundaryBlock { min_sv, threshold }
            }
            other => other,
        })?;
        let schur = self.interior_block() - self.interior_boundary_block() * x;
        Ok(re_part(&schur))
    }

    /// Short content hash of the model (dimensions, partition, entries).
    pub fn hash_hex(&self) -> String {
        fn feed_indices(hasher: &mut Sha256, tag: u8, indices: &[usize]) {
            hasher.update([tag]);
            hasher.update((indices.len() as u64).to_le_bytes());
            for &ix in indices {
                hasher.update((ix as u64).to_le_bytes());
            }
        }
        fn feed_matrix(hasher: &mut Sha256, m: &CMatrix) {
            for row in 0..m.nrows() {
                for col in 0..m.ncols() {
                    let z: Complex64 = m[(row, col)];
                    hasher.update(z.re.to_bits().to_le_bytes());
                    hasher.update(z.im.to_bits().to_le_bytes());
                }
            }
        }
        let mut hasher = Sha256::new();
        hasher.update(b"dtn-krein-model-v1");
        hasher.update((self.n() as u64).to_le_bytes());
        feed_indices(&mut hasher, b'I', self.partition.interior());
        feed_indices(&mut hasher, b'B', self.partition.boundary());
        if let Some(ext) = self.partition.exterior() {
            feed_indices(&mut hasher, b'E', ext);
        }
        feed_matrix(&mut hasher, &self.h);
        if let Some((bb_in, bb_out)) = &self.boundary_split {
            hasher.update([b'S']);
            feed_matrix(&mut hasher, bb_in);
            feed_matrix(&mut hasher, bb_out);
        }
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::cr;
    use crate::presets;

    #[test]
    fn partition_rejects_overlap_and_gaps() {
        assert!(Partition::new(3, vec![0, 1], vec![1]).is_err());
        assert!(Partition::new(3, vec![0], vec![1]).is_err());
        assert!(Partition::new(3, vec![0, 3], vec![1]).is_err());
        assert!(Partition::new(3, vec![], vec![0, 1, 2]).is_err());
        assert!(Partition::new(3, vec![0, 2], vec![1]).is_ok());
    }

    #[test]
    fn model_rejects_non_hermitian() {
        let m = numerics::matrix_from_rows(2, 2, &[cr(1.0), cr(2.0), cr(3.0), cr(1.0)]).unwrap();
        let p = Partition::new(2, vec![0], vec![1]).unwrap();
        assert!(matches!(PartitionedHermitian::new(m, p), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn model_rejects_interior_exterior_coupling() {
        let m = numerics::matrix_from_rows(
            3,
            3,
            &[cr(2.0), cr(-1.0), cr(0.5), cr(-1.0), cr(2.0), cr(-1.0), cr(0.5), cr(-1.0), cr(2.0)],
        )
        .unwrap();
        let p = Partition::with_exterior(3, vec![0], vec![1], vec![2]).unwrap();
        assert!(matches!(PartitionedHermitian::new(m, p), Err(Error::Partition(_))));
    }

    #[test]
    fn toy_dirichlet_and_neumann_blocks() {
        let model = presets::toy_two_node();
        assert_eq!(model.dirichlet_op()[(0, 0)], cr(2.0));
        let neumann = model.neumann_op().unwrap();
        assert!((neumann[(0, 0)] - cr(1.0)).norm() <= 1e-14);
    }

    #[test]
    fn identity_model_dirichlet_is_identity() {
        let m = CMatrix::identity(4, 4);
        let p = Partition::new(4, vec![0, 2], vec![1, 3]).unwrap();
        let model = PartitionedHermitian::new(m, p).unwrap();
        assert_eq!(model.dirichlet_op(), CMatrix::identity(2, 2));
    }

    #[test]
    fn path_graph_blocks() {
        let model = presets::path_three_bounded();
        let d = model.dirichlet_op();
        assert_eq!(d[(0, 0)], cr(2.0));
        assert_eq!(d[(1, 1)], cr(2.0));
        assert_eq!(d[(0, 1)], cr(0.0));
        let n = model.neumann_op().unwrap();
        assert!((n[(0, 0)] - cr(1.5)).norm() <= 1e-14);
        assert!((n[(0, 1)] - cr(-0.5)).norm() <= 1e-14);
        assert!((n[(1, 0)] - cr(-0.5)).norm() <= 1e-14);
        assert!((n[(1, 1)] - cr(1.5)).norm() <= 1e-14);
    }

    #[test]
    fn decoupled_neumann_equals_dirichlet() {
        let model = presets::zero_coupling_model();
        let n = model.neumann_op().unwrap();
        assert!((n - model.dirichlet_op()).norm() <= 1e-14);
    }

    #[test]
    fn singular_boundary_block_is_reported() {
        let m = numerics::matrix_from_rows(2, 2, &[cr(2.0), cr(0.0), cr(0.0), cr(0.0)]).unwrap();
        let p = Partition::new(2, vec![0], vec![1]).unwrap();
        let model = PartitionedHermitian::new(m, p).unwrap();
        assert!(matches!(model.neumann_op(), Err(Error::SingularBoundaryBlock { .. })));
    }

    #[test]
    fn hash_distinguishes_models() {
        let a = presets::toy_two_node();
        let b = presets::path_three_bounded();
        assert_ne!(a.hash_hex(), b.hash_hex());
        assert_eq!(a.hash_hex(), presets::toy_two_node().hash_hex());
    }

    #[test]
    fn boundary_split_must_sum() {
        let model = presets::path_three_coupled();
        let (bb_in, bb_out) = model.boundary_split().unwrap();
        assert_eq!((bb_in + bb_out)[(0, 0)], cr(2.0));
        let bad = presets::path_three_coupled_unsplit().with_boundary_split(
            numerics::matrix_from_rows(1, 1, &[cr(1.0)]).unwrap(),
            numerics::matrix_from_rows(1, 1, &[cr(0.5)]).unwrap(),
        );
        assert!(bad.is_err());
    }
}

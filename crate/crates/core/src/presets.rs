//! Ready-made models: the hand-checkable toys and seeded random models used
//! by tests, property checks and the CLI.

use crate::model::{Partition, PartitionedHermitian};
use crate::numerics::{c, cr, matrix_from_rows, CMatrix};
use crate::rng::SplitMix64;

/// `H = [[2, -1], [-1, 1]]` with one interior and one boundary node. Every
/// quantity of interest is hand-computable: `Γ(0) = 1/2`, `Q(0) = -1/2`,
/// `dQ/dλ(0) = 1/4`, resolvent difference `-1/2`.
pub fn toy_two_node() -> PartitionedHermitian {
    let h = matrix_from_rows(2, 2, &[cr(2.0), cr(-1.0), cr(-1.0), cr(1.0)]).unwrap();
    let partition = Partition::new(2, vec![0], vec![1]).unwrap();
    PartitionedHermitian::new(h, partition).unwrap()
}

/// Diagonal `H = diag(2, 1)`: zero interior-boundary coupling, so the
/// Q-function is constant and resolvent differences vanish.
pub fn zero_coupling_model() -> PartitionedHermitian {
    let h = matrix_from_rows(2, 2, &[cr(2.0), cr(0.0), cr(0.0), cr(1.0)]).unwrap();
    let partition = Partition::new(2, vec![0], vec![1]).unwrap();
    PartitionedHermitian::new(h, partition).unwrap()
}

fn path_three_matrix() -> CMatrix {
    matrix_from_rows(
        3,
        3,
        &[cr(2.0), cr(-1.0), cr(0.0), cr(-1.0), cr(2.0), cr(-1.0), cr(0.0), cr(-1.0), cr(2.0)],
    )
    .unwrap()
}

/// Three-node path with the middle node as boundary and the outer nodes as
/// interior: the smallest bounded model with a 2-dimensional interior.
pub fn path_three_bounded() -> PartitionedHermitian {
    let partition = Partition::new(3, vec![0, 2], vec![1]).unwrap();
    PartitionedHermitian::new(path_three_matrix(), partition).unwrap()
}

/// Three-node path as a coupled model: node 0 interior, node 1 interface,
/// node 2 exterior, with the natural edge-ownership split `H_BB = 1 + 1`.
pub fn path_three_coupled() -> PartitionedHermitian {
    path_three_coupled_unsplit()
        .with_boundary_split(
            matrix_from_rows(1, 1, &[cr(1.0)]).unwrap(),
            matrix_from_rows(1, 1, &[cr(1.0)]).unwrap(),
        )
        .unwrap()
}

/// The coupled three-node path without its interface split attached.
pub fn path_three_coupled_unsplit() -> PartitionedHermitian {
    let partition = Partition::with_exterior(3, vec![0], vec![1], vec![2]).unwrap();
    PartitionedHermitian::new(path_three_matrix(), partition).unwrap()
}

/// Coupled model whose interface couples to neither side: transmission and
/// orthogonal-sum operators coincide.
pub fn decoupled_coupled_model() -> PartitionedHermitian {
    let h = matrix_from_rows(
        3,
        3,
        &[cr(2.0), cr(0.0), cr(0.0), cr(0.0), cr(3.0), cr(0.0), cr(0.0), cr(0.0), cr(2.5)],
    )
    .unwrap();
    let partition = Partition::with_exterior(3, vec![0], vec![1], vec![2]).unwrap();
    PartitionedHermitian::new(h, partition)
        .unwrap()
        .with_boundary_split(
            matrix_from_rows(1, 1, &[cr(1.5)]).unwrap(),
            matrix_from_rows(1, 1, &[cr(1.5)]).unwrap(),
        )
        .unwrap()
}

/// Bounded model with an interior block unreachable from the boundary: the
/// Krylov (simplicity) rank stays below the interior dimension.
pub fn decoupled_interior_model() -> PartitionedHermitian {
    let h = matrix_from_rows(
        3,
        3,
        &[cr(2.0), cr(0.0), cr(0.0), cr(0.0), cr(2.0), cr(-1.0), cr(0.0), cr(-1.0), cr(1.0)],
    )
    .unwrap();
    let partition = Partition::new(3, vec![0, 1], vec![2]).unwrap();
    PartitionedHermitian::new(h, partition).unwrap()
}

fn random_hermitian(rng: &mut SplitMix64, n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = cr(rng.next_gaussian());
        for j in i + 1..n {
            let z = c(rng.next_gaussian(), rng.next_gaussian()) * cr(0.5f64.sqrt());
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// Seeded random Hermitian model with `n_interior + n_boundary` nodes,
/// interior first.
pub fn random_model(seed: u64, n_interior: usize, n_boundary: usize) -> PartitionedHermitian {
    let mut rng = SplitMix64::derive(seed, 0x6d6f64656c);
    let n = n_interior + n_boundary;
    let h = random_hermitian(&mut rng, n);
    let partition =
        Partition::new(n, (0..n_interior).collect(), (n_interior..n).collect()).unwrap();
    PartitionedHermitian::new(h, partition).unwrap()
}

/// Seeded random coupled model (interior, interface, exterior), with
/// `H_IE = 0` and a random Hermitian interface split.
pub fn random_coupled_model(seed: u64, n_interior: usize, n_boundary: usize, n_exterior: usize) -> PartitionedHermitian {
    let mut rng = SplitMix64::derive(seed, 0x636f75706c6564);
    let n = n_interior + n_boundary + n_exterior;
    let mut h = random_hermitian(&mut rng, n);
    for i in 0..n_interior {
        for e in n_interior + n_boundary..n {
            h[(i, e)] = cr(0.0);
            h[(e, i)] = cr(0.0);
        }
    }
    let partition = Partition::with_exterior(
        n,
        (0..n_interior).collect(),
        (n_interior..n_interior + n_boundary).collect(),
        (n_interior + n_boundary..n).collect(),
    )
    .unwrap();
    let bb = CMatrix::from_fn(n_boundary, n_boundary, |r, c| h[(n_interior + r, n_interior + c)]);
    let bb_in = random_hermitian(&mut rng, n_boundary) * cr(0.5);
    let bb_out = &bb - &bb_in;
    PartitionedHermitian::new(h, partition).unwrap().with_boundary_split(bb_in, bb_out).unwrap()
}

/// Bounded model whose first two interior-boundary coupling columns are
/// identical, so `Im Q̃(λ)` is singular.
pub fn rank_deficient_boundary_model(seed: u64) -> PartitionedHermitian {
    let n_interior = 10;
    let n_boundary = 3;
    let mut rng = SplitMix64::derive(seed, 0x72616e6b);
    let n = n_interior + n_boundary;
    let mut h = random_hermitian(&mut rng, n);
    for i in 0..n_interior {
        let z = h[(i, n_interior)];
        h[(i, n_interior + 1)] = z;
        h[(n_interior + 1, i)] = z.conj();
    }
    let partition =
        Partition::new(n, (0..n_interior).collect(), (n_interior..n).collect()).unwrap();
    PartitionedHermitian::new(h, partition).unwrap()
}

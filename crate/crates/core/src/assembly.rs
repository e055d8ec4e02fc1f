//! Assembly of partitioned Hermitian models from a uniformly elliptic 2D
//! expression `-div(a grad u) + a0 u` on a uniform grid.
//!
//! Bilinear quadrilateral elements with per-cell coefficient samples; the
//! shape-function integrals are exact and the lumped mass is the uniform
//! `h²`, so the assembled matrix is real symmetric bit-for-bit and the
//! discrete Green identity holds to machine precision.

use std::io::Read;

use crate::error::{Error, Result};
use crate::model::{Partition, PartitionedHermitian};
use crate::numerics::{cr, CMatrix, CVector};

/// Node ring of the inner box of a coupled layout, by node coordinates of
/// the ring corners (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerBox {
    pub i0: usize,
    pub j0: usize,
    pub i1: usize,
    pub j1: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridLayout {
    /// Rectangle with the outermost node ring as boundary.
    Bounded,
    /// Interface ring of an inner box separates interior from a truncated
    /// exterior; the outermost node ring is eliminated as a
    /// homogeneous-Dirichlet truncation of the unbounded complement.
    Coupled { inner: InnerBox },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub layout: GridLayout,
}

impl GridSpec {
    pub fn bounded(nx: usize, ny: usize, h: f64) -> Result<Self> {
        let spec = Self { nx, ny, h, layout: GridLayout::Bounded };
        spec.validate()?;
        Ok(spec)
    }

    pub fn coupled(nx: usize, ny: usize, h: f64, inner: InnerBox) -> Result<Self> {
        let spec = Self { nx, ny, h, layout: GridLayout::Coupled { inner } };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::Layout(format!("grid must be at least 3x3 nodes, got {}x{}", self.nx, self.ny)));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Layout(format!("grid spacing must be positive, got {}", self.h)));
        }
        if let GridLayout::Coupled { inner } = &self.layout {
            let InnerBox { i0, j0, i1, j1 } = *inner;
            if i1 < i0 + 2 || j1 < j0 + 2 {
                return Err(Error::Layout("inner box must enclose at least one strict interior node".into()));
            }
            // The outermost ring is eliminated, and one ring of exterior
            // nodes must remain around the interface.
            if i0 < 2 || j0 < 2 || i1 + 2 >= self.nx || j1 + 2 >= self.ny {
                return Err(Error::Layout(
                    "inner box must leave at least one exterior node ring inside the truncation".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// Per-cell symmetric tensor samples `(a11, a12, a22)` and per-node
/// potential samples `a0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    nx: usize,
    ny: usize,
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
    a0: Vec<f64>,
}

impl CoefficientField {
    pub fn constant(nx: usize, ny: usize, a11: f64, a12: f64, a22: f64, a0: f64) -> Self {
        let cells = (nx - 1) * (ny - 1);
        Self {
            nx,
            ny,
            a11: vec![a11; cells],
            a12: vec![a12; cells],
            a22: vec![a22; cells],
            a0: vec![a0; nx * ny],
        }
    }

    pub fn laplacian(nx: usize, ny: usize) -> Self {
        Self::constant(nx, ny, 1.0, 0.0, 1.0, 0.0)
    }

    pub fn anisotropic(nx: usize, ny: usize) -> Self {
        Self::constant(nx, ny, 2.0, 0.5, 1.0, 0.0)
    }

    /// Sample closures on the physical grid: the tensor at cell midpoints,
    /// the potential at nodes.
    pub fn from_fns(
        nx: usize,
        ny: usize,
        h: f64,
        tensor: impl Fn(f64, f64) -> (f64, f64, f64),
        potential: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut field = Self::constant(nx, ny, 0.0, 0.0, 0.0, 0.0);
        for cj in 0..ny - 1 {
            for ci in 0..nx - 1 {
                let (a11, a12, a22) = tensor((ci as f64 + 0.5) * h, (cj as f64 + 0.5) * h);
                let cell = field.cell_index(ci, cj);
                field.a11[cell] = a11;
                field.a12[cell] = a12;
                field.a22[cell] = a22;
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                field.a0[j * nx + i] = potential(i as f64 * h, j as f64 * h);
            }
        }
        field
    }

    /// Affine preset in normalized coordinates over the grid rectangle.
    pub fn affine_preset(nx: usize, ny: usize, h: f64) -> Self {
        let lx = (nx - 1) as f64 * h;
        let ly = (ny - 1) as f64 * h;
        Self::from_fns(
            nx,
            ny,
            h,
            |x, y| {
                let (u, v) = (x / lx, y / ly);
                (1.0 + 0.5 * u, 0.125 * (u + v), 1.5 - 0.25 * v)
            },
            |x, _| 0.25 + 0.5 * (x / lx),
        )
    }

    /// Named presets: `laplacian`, `anisotropic`, `affine`.
    pub fn preset(name: &str, nx: usize, ny: usize, h: f64) -> Result<Self> {
        match name {
            "laplacian" => Ok(Self::laplacian(nx, ny)),
            "anisotropic" => Ok(Self::anisotropic(nx, ny)),
            "affine" => Ok(Self::affine_preset(nx, ny, h)),
            other => Err(Error::InvalidInput(format!("unknown coefficient preset '{other}'"))),
        }
    }

    /// Ingest a per-cell table with columns
    /// `cell_i, cell_j, a11, a12, a22, a0`. Every cell must appear exactly
    /// once; the per-cell `a0` is averaged over the cells adjacent to each
    /// node to produce the per-node potential.
    pub fn from_csv(nx: usize, ny: usize, reader: impl Read) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::CoefficientTable(format!("cannot read header: {e}")))?
            .clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| Error::CoefficientTable(format!("missing column '{name}'")))
        };
        let (ci_col, cj_col) = (col("cell_i")?, col("cell_j")?);
        let (a11_col, a12_col, a22_col, a0_col) = (col("a11")?, col("a12")?, col("a22")?, col("a0")?);

        let cells = (nx - 1) * (ny - 1);
        let mut field = Self::constant(nx, ny, 0.0, 0.0, 0.0, 0.0);
        let mut cell_a0 = vec![0.0f64; cells];
        let mut filled = vec![false; cells];
        for record in csv_reader.records() {
            let record = record.map_err(|e| Error::CoefficientTable(format!("bad row: {e}")))?;
            let parse = |idx: usize| -> Result<f64> {
                record
                    .get(idx)
                    .ok_or_else(|| Error::CoefficientTable("short row".into()))?
                    .parse::<f64>()
                    .map_err(|e| Error::CoefficientTable(format!("bad number: {e}")))
            };
            let ci = parse(ci_col)? as usize;
            let cj = parse(cj_col)? as usize;
            if ci >= nx - 1 || cj >= ny - 1 {
                return Err(Error::CoefficientTable(format!("cell ({ci}, {cj}) out of range for {nx}x{ny} nodes")));
            }
            let cell = cj * (nx - 1) + ci;
            if filled[cell] {
                return Err(Error::CoefficientTable(format!("cell ({ci}, {cj}) appears more than once")));
            }
            filled[cell] = true;
            field.a11[cell] = parse(a11_col)?;
            field.a12[cell] = parse(a12_col)?;
            field.a22[cell] = parse(a22_col)?;
            cell_a0[cell] = parse(a0_col)?;
        }
        if let Some(cell) = filled.iter().position(|f| !f) {
            let (ci, cj) = (cell % (nx - 1), cell / (nx - 1));
            return Err(Error::CoefficientTable(format!("cell ({ci}, {cj}) is missing")));
        }
        for j in 0..ny {
            for i in 0..nx {
                let mut sum = 0.0;
                let mut count = 0usize;
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    if i + di >= 1 && i + di <= nx - 1 && j + dj >= 1 && j + dj <= ny - 1 {
                        sum += cell_a0[(j + dj - 1) * (nx - 1) + (i + di - 1)];
                        count += 1;
                    }
                }
                field.a0[j * nx + i] = sum / count as f64;
            }
        }
        Ok(field)
    }

    fn cell_index(&self, ci: usize, cj: usize) -> usize {
        cj * (self.nx - 1) + ci
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn potential(&self) -> &[f64] {
        &self.a0
    }

    /// Uniform ellipticity constant: the minimum over cells of the smaller
    /// eigenvalue of the coefficient tensor. Errors when nonpositive.
    pub fn ellipticity_check(&self) -> Result<f64> {
        let mut constant = f64::INFINITY;
        for cj in 0..self.ny - 1 {
            for ci in 0..self.nx - 1 {
                let cell = self.cell_index(ci, cj);
                let (a11, a12, a22) = (self.a11[cell], self.a12[cell], self.a22[cell]);
                if !(a11.is_finite() && a12.is_finite() && a22.is_finite()) {
                    return Err(Error::NotElliptic { cell_i: ci, cell_j: cj, min_eig: f64::NAN });
                }
                let mean = 0.5 * (a11 + a22);
                let radius = (0.25 * (a11 - a22) * (a11 - a22) + a12 * a12).sqrt();
                let min_eig = mean - radius;
                if !(min_eig > 0.0) {
                    return Err(Error::NotElliptic { cell_i: ci, cell_j: cj, min_eig });
                }
                constant = constant.min(min_eig);
            }
        }
        Ok(constant)
    }
}

// Exact integrals of bilinear shape-function gradients over the unit cell,
// corner order (0,0), (1,0), (0,1), (1,1).
const KXX: [[f64; 4]; 4] = [
    [1.0 / 3.0, -1.0 / 3.0, 1.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 3.0, 1.0 / 3.0, -1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, -1.0 / 6.0, 1.0 / 3.0, -1.0 / 3.0],
    [-1.0 / 6.0, 1.0 / 6.0, -1.0 / 3.0, 1.0 / 3.0],
];
const KYY: [[f64; 4]; 4] = [
    [1.0 / 3.0, 1.0 / 6.0, -1.0 / 3.0, -1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 3.0, -1.0 / 6.0, -1.0 / 3.0],
    [-1.0 / 3.0, -1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0],
    [-1.0 / 6.0, -1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0],
];
const GRAD_X_MEAN: [f64; 4] = [-0.5, 0.5, -0.5, 0.5];
const GRAD_Y_MEAN: [f64; 4] = [-0.5, -0.5, 0.5, 0.5];

fn element_matrix(a11: f64, a12: f64, a22: f64) -> [[f64; 4]; 4] {
    let mut k = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let kxy = GRAD_X_MEAN[a] * GRAD_Y_MEAN[b] + GRAD_X_MEAN[b] * GRAD_Y_MEAN[a];
            k[a][b] = a11 * KXX[a][b] + a12 * kxy + a22 * KYY[a][b];
        }
    }
    k
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum NodeClass {
    Interior,
    Interface,
    Exterior,
    Eliminated,
}

fn classify(spec: &GridSpec, i: usize, j: usize) -> NodeClass {
    match &spec.layout {
        GridLayout::Bounded => {
            if i == 0 || j == 0 || i == spec.nx - 1 || j == spec.ny - 1 {
                NodeClass::Interface
            } else {
                NodeClass::Interior
            }
        }
        GridLayout::Coupled { inner } => {
            if i == 0 || j == 0 || i == spec.nx - 1 || j == spec.ny - 1 {
                return NodeClass::Eliminated;
            }
            let on_box = i >= inner.i0 && i <= inner.i1 && j >= inner.j0 && j <= inner.j1;
            if on_box {
                if i == inner.i0 || i == inner.i1 || j == inner.j0 || j == inner.j1 {
                    NodeClass::Interface
                } else {
                    NodeClass::Interior
                }
            } else {
                NodeClass::Exterior
            }
        }
    }
}

/// Assemble the partitioned Hermitian model of the elliptic expression on
/// the grid.
pub fn assemble(spec: &GridSpec, coeffs: &CoefficientField) -> Result<PartitionedHermitian> {
    spec.validate()?;
    if coeffs.dims() != (spec.nx, spec.ny) {
        return Err(Error::DimensionMismatch {
            context: format!(
                "coefficient field is sized for {:?} nodes, grid has {}x{}",
                coeffs.dims(),
                spec.nx,
                spec.ny
            ),
        });
    }
    coeffs.ellipticity_check()?;

    let n = spec.node_count();
    let inv_h2 = 1.0 / (spec.h * spec.h);
    let coupled = matches!(spec.layout, GridLayout::Coupled { .. });
    let classes: Vec<NodeClass> = (0..n)
        .map(|node| classify(spec, node % spec.nx, node / spec.nx))
        .collect();

    let mut stiffness = vec![0.0f64; n * n];
    // Interface-interface entries of a coupled layout accumulate into the
    // per-side parts; H_BB is later defined as their sum so that the split
    // invariant holds bit-for-bit.
    let mut ring_in = vec![0.0f64; n * n];
    let mut ring_out = vec![0.0f64; n * n];

    for cj in 0..spec.ny - 1 {
        for ci in 0..spec.nx - 1 {
            let cell = coeffs.cell_index(ci, cj);
            let k = element_matrix(coeffs.a11[cell], coeffs.a12[cell], coeffs.a22[cell]);
            let nodes = [
                spec.node_index(ci, cj),
                spec.node_index(ci + 1, cj),
                spec.node_index(ci, cj + 1),
                spec.node_index(ci + 1, cj + 1),
            ];
            let cell_inside = match &spec.layout {
                GridLayout::Coupled { inner } => {
                    ci >= inner.i0 && ci + 1 <= inner.i1 && cj >= inner.j0 && cj + 1 <= inner.j1
                }
                GridLayout::Bounded => false,
            };
            for a in 0..4 {
                for b in a..4 {
                    let (na, nb) = (nodes[a], nodes[b]);
                    let value = k[a][b] * inv_h2;
                    let both_on_ring = coupled
                        && classes[na] == NodeClass::Interface
                        && classes[nb] == NodeClass::Interface;
                    let target: &mut Vec<f64> = if both_on_ring {
                        if cell_inside {
                            &mut ring_in
                        } else {
                            &mut ring_out
                        }
                    } else {
                        &mut stiffness
                    };
                    target[na * n + nb] += value;
                    if na != nb {
                        target[nb * n + na] += value;
                    }
                }
            }
        }
    }
    for node in 0..n {
        if coupled && classes[node] == NodeClass::Interface {
            ring_in[node * n + node] += 0.5 * coeffs.a0[node];
            ring_out[node * n + node] += 0.5 * coeffs.a0[node];
        } else {
            stiffness[node * n + node] += coeffs.a0[node];
        }
    }
    if coupled {
        for node_a in 0..n {
            for node_b in 0..n {
                let at = node_a * n + node_b;
                if classes[node_a] == NodeClass::Interface && classes[node_b] == NodeClass::Interface {
                    stiffness[at] = ring_in[at] + ring_out[at];
                }
            }
        }
    }

    // Drop eliminated nodes and collect the partition in kept-index order.
    let kept: Vec<usize> = (0..n).filter(|&node| classes[node] != NodeClass::Eliminated).collect();
    let mut interior = Vec::new();
    let mut interface = Vec::new();
    let mut exterior = Vec::new();
    for (new_ix, &node) in kept.iter().enumerate() {
        match classes[node] {
            NodeClass::Interior => interior.push(new_ix),
            NodeClass::Interface => interface.push(new_ix),
            NodeClass::Exterior => exterior.push(new_ix),
            NodeClass::Eliminated => unreachable!(),
        }
    }

    let size = kept.len();
    let h_matrix = CMatrix::from_fn(size, size, |r, c| cr(stiffness[kept[r] * n + kept[c]]));
    let partition = if coupled {
        Partition::with_exterior(size, interior, interface.clone(), exterior)?
    } else {
        Partition::new(size, interior, interface.clone())?
    };
    let model = PartitionedHermitian::new(h_matrix, partition)?;
    if coupled {
        let ring_nodes: Vec<usize> = interface.iter().map(|&new_ix| kept[new_ix]).collect();
        let nb = ring_nodes.len();
        let bb_in = CMatrix::from_fn(nb, nb, |r, c| cr(ring_in[ring_nodes[r] * n + ring_nodes[c]]));
        let bb_out = CMatrix::from_fn(nb, nb, |r, c| cr(ring_out[ring_nodes[r] * n + ring_nodes[c]]));
        model.with_boundary_split(bb_in, bb_out)
    } else {
        Ok(model)
    }
}

/// Residual of the discrete Green identity
/// `<(Hu)_I, v_I> - <u_I, (Hv)_I> = <u_B, (Hv)_B> - <(Hu)_B, v_B>`,
/// normalized by `||u|| ||v|| ||H||`. Exact up to roundoff for Hermitian
/// models; for coupled models the non-interface nodes play the interior.
pub fn green_identity_residual(model: &PartitionedHermitian, u: &CVector, v: &CVector) -> f64 {
    let h = model.matrix();
    let hu = h * u;
    let hv = h * v;
    let boundary = model.partition().boundary();
    let mut is_boundary = vec![false; model.n()];
    for &b in boundary {
        is_boundary[b] = true;
    }
    let mut lhs = crate::numerics::c(0.0, 0.0);
    let mut rhs = crate::numerics::c(0.0, 0.0);
    for k in 0..model.n() {
        if is_boundary[k] {
            rhs += u[k] * hv[k].conj() - hu[k] * v[k].conj();
        } else {
            lhs += hu[k] * v[k].conj() - u[k] * hv[k].conj();
        }
    }
    let scale = u.norm() * v.norm() * h.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (lhs - rhs).norm() / scale
}

/// The discrete conormal derivative `γ1 u = (Hu)|_B`.
pub fn conormal_trace(model: &PartitionedHermitian, u: &CVector) -> CVector {
    let hu = model.matrix() * u;
    model.gather(&hu, model.partition().boundary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{self, c};
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;

    /// Independent element oracle: 2x2 Gauss quadrature on the unit cell,
    /// exact for products of bilinear gradients.
    fn element_oracle(a11: f64, a12: f64, a22: f64) -> [[f64; 4]; 4] {
        let shift = 0.5 / 3.0f64.sqrt();
        let points = [0.5 - shift, 0.5 + shift];
        let grad = |corner: usize, x: f64, y: f64| -> (f64, f64) {
            match corner {
                0 => (-(1.0 - y), -(1.0 - x)),
                1 => (1.0 - y, -x),
                2 => (-y, 1.0 - x),
                _ => (y, x),
            }
        };
        let mut k = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = 0.0;
                for &x in &points {
                    for &y in &points {
                        let (gax, gay) = grad(a, x, y);
                        let (gbx, gby) = grad(b, x, y);
                        acc += 0.25 * (a11 * gax * gbx + a12 * (gax * gby + gay * gbx) + a22 * gay * gby);
                    }
                }
                k[a][b] = acc;
            }
        }
        k
    }

    #[test]
    fn element_matches_quadrature_oracle() {
        for (a11, a12, a22) in [(1.0, 0.0, 1.0), (2.0, 0.5, 1.0), (1.3, 0.4, 0.9)] {
            let ours = element_matrix(a11, a12, a22);
            let oracle = element_oracle(a11, a12, a22);
            for a in 0..4 {
                for b in 0..4 {
                    assert_relative_eq!(ours[a][b], oracle[a][b], epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn laplacian_center_row_is_classic_stencil() {
        let spec = GridSpec::bounded(3, 3, 1.0).unwrap();
        let model = assemble(&spec, &CoefficientField::laplacian(3, 3)).unwrap();
        let h = model.matrix();
        let center = 4; // node (1,1)
        assert_relative_eq!(h[(center, center)].re, 8.0 / 3.0, epsilon = 1e-14);
        for neighbor in [0, 1, 2, 3, 5, 6, 7, 8] {
            assert_relative_eq!(h[(center, neighbor)].re, -1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn assembled_matrix_is_bitwise_symmetric() {
        let spec = GridSpec::bounded(6, 5, 0.25).unwrap();
        let model = assemble(&spec, &CoefficientField::affine_preset(6, 5, 0.25)).unwrap();
        let h = model.matrix();
        for r in 0..h.nrows() {
            for c in 0..h.ncols() {
                assert_eq!(h[(r, c)].re.to_bits(), h[(c, r)].re.to_bits());
                assert_eq!(h[(r, c)].im, 0.0);
            }
        }
    }

    #[test]
    fn constant_potential_shifts_diagonal() {
        let spec = GridSpec::bounded(5, 5, 1.0).unwrap();
        let base = assemble(&spec, &CoefficientField::constant(5, 5, 1.0, 0.2, 1.4, 0.0)).unwrap();
        let shifted = assemble(&spec, &CoefficientField::constant(5, 5, 1.0, 0.2, 1.4, 0.7)).unwrap();
        let rebuilt = base.matrix() + CMatrix::identity(25, 25) * cr(0.7);
        assert!((shifted.matrix() - rebuilt).norm() == 0.0);
    }

    #[test]
    fn potential_shift_moves_dirichlet_spectrum() {
        let spec = GridSpec::bounded(5, 4, 0.5).unwrap();
        let base = assemble(&spec, &CoefficientField::laplacian(5, 4)).unwrap();
        let shifted = assemble(&spec, &CoefficientField::constant(5, 4, 1.0, 0.0, 1.0, 0.3)).unwrap();
        let eig_base = numerics::hermitian_eigenvalues(&base.dirichlet_op()).unwrap();
        let eig_shifted = numerics::hermitian_eigenvalues(&shifted.dirichlet_op()).unwrap();
        for (a, b) in eig_base.iter().zip(&eig_shifted) {
            assert!((b - a - 0.3).abs() <= 1e-12);
        }
    }

    #[test]
    fn laplacian_dirichlet_spectrum_is_positive() {
        let spec = GridSpec::bounded(8, 8, 1.0 / 7.0).unwrap();
        let model = assemble(&spec, &CoefficientField::laplacian(8, 8)).unwrap();
        let eigs = numerics::hermitian_eigenvalues(&model.dirichlet_op()).unwrap();
        assert!(eigs[0] > 0.0);
    }

    #[test]
    fn ellipticity_constants() {
        assert_relative_eq!(CoefficientField::laplacian(4, 4).ellipticity_check().unwrap(), 1.0);
        // Oracle: eigenvalues of [[2, 0.5], [0.5, 1]] are (3 ± sqrt(2))/2.
        let expected = (3.0 - 2.0f64.sqrt()) / 2.0;
        assert_relative_eq!(
            CoefficientField::anisotropic(4, 4).ellipticity_check().unwrap(),
            expected,
            epsilon = 1e-14
        );
        let bad = CoefficientField::constant(4, 4, 1.0, 1.5, 1.0, 0.0);
        assert!(matches!(bad.ellipticity_check(), Err(Error::NotElliptic { .. })));
        assert!(CoefficientField::affine_preset(9, 9, 0.125).ellipticity_check().unwrap() > 0.0);
    }

    #[test]
    fn coupled_layout_structure() {
        let spec = GridSpec::coupled(9, 9, 1.0, InnerBox { i0: 3, j0: 3, i1: 5, j1: 5 }).unwrap();
        let model = assemble(&spec, &CoefficientField::laplacian(9, 9)).unwrap();
        // 9x9 minus the eliminated outer ring leaves 49 nodes.
        assert_eq!(model.n(), 49);
        assert_eq!(model.n_interior(), 1);
        assert_eq!(model.n_boundary(), 8);
        assert_eq!(model.n_exterior(), 40);
        // H_IE = 0 is validated structurally at construction; the split
        // parts must sum to H_BB bit-for-bit.
        let (bb_in, bb_out) = model.boundary_split().unwrap();
        let bb = model.boundary_block();
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!((bb_in[(r, c)] + bb_out[(r, c)]).re.to_bits(), bb[(r, c)].re.to_bits());
            }
        }
    }

    #[test]
    fn coupled_split_respects_cell_sides_with_potential() {
        let spec = GridSpec::coupled(9, 9, 0.5, InnerBox { i0: 3, j0: 3, i1: 5, j1: 5 }).unwrap();
        let coeffs = CoefficientField::constant(9, 9, 1.0, 0.1, 1.2, 0.6);
        let model = assemble(&spec, &coeffs).unwrap();
        let (bb_in, bb_out) = model.boundary_split().unwrap();
        let bb = model.boundary_block();
        assert!((bb_in + bb_out - bb).norm() == 0.0);
        assert!(bb_in.norm() > 0.0 && bb_out.norm() > 0.0);
    }

    #[test]
    fn layout_validation() {
        assert!(GridSpec::bounded(2, 5, 1.0).is_err());
        assert!(GridSpec::bounded(5, 5, 0.0).is_err());
        assert!(GridSpec::coupled(9, 9, 1.0, InnerBox { i0: 1, j0: 3, i1: 5, j1: 5 }).is_err());
        assert!(GridSpec::coupled(9, 9, 1.0, InnerBox { i0: 3, j0: 3, i1: 7, j1: 5 }).is_err());
        assert!(GridSpec::coupled(9, 9, 1.0, InnerBox { i0: 3, j0: 3, i1: 4, j1: 5 }).is_err());
    }

    #[test]
    fn green_identity_exactness() {
        let spec = GridSpec::bounded(5, 5, 1.0).unwrap();
        let model = assemble(&spec, &CoefficientField::anisotropic(5, 5)).unwrap();
        let mut rng = SplitMix64::new(300);
        let u = CVector::from_fn(model.n(), |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        let v = CVector::from_fn(model.n(), |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        assert!(green_identity_residual(&model, &u, &u) <= 1e-15);
        assert!(green_identity_residual(&model, &u, &v) <= 1e-14);

        // Supported on interior only / boundary only.
        let mut interior_only = CVector::zeros(model.n());
        for &i in model.partition().interior() {
            interior_only[i] = c(rng.next_gaussian(), rng.next_gaussian());
        }
        let mut boundary_only = CVector::zeros(model.n());
        for &b in model.partition().boundary() {
            boundary_only[b] = c(rng.next_gaussian(), rng.next_gaussian());
        }
        assert!(green_identity_residual(&model, &interior_only, &boundary_only) <= 1e-14);
    }

    #[test]
    fn conormal_trace_of_constant_vanishes() {
        let spec = GridSpec::bounded(6, 6, 1.0).unwrap();
        let model = assemble(&spec, &CoefficientField::laplacian(6, 6)).unwrap();
        let ones = CVector::from_element(model.n(), cr(1.0));
        let trace = conormal_trace(&model, &ones);
        assert!(trace.norm() <= 1e-13 * model.matrix().norm());
        let zero = CVector::zeros(model.n());
        assert_eq!(conormal_trace(&model, &zero).norm(), 0.0);
    }

    #[test]
    fn conormal_trace_of_dirichlet_solution_is_negated_q() {
        let spec = GridSpec::bounded(5, 5, 1.0).unwrap();
        let model = assemble(&spec, &CoefficientField::laplacian(5, 5)).unwrap();
        let lambda = c(0.0, 1.0);
        let gamma = model.gamma_at(lambda).unwrap();
        let q = model.q_at(lambda).unwrap();
        let mut rng = SplitMix64::new(12);
        let phi = CVector::from_fn(model.n_boundary(), |_, _| c(rng.next_gaussian(), rng.next_gaussian()));
        // Stack the solution: interior part Γ(λ)φ, boundary values φ.
        let mut u = CVector::zeros(model.n());
        let interior_part = &gamma * &phi;
        for (k, &i) in model.partition().interior().iter().enumerate() {
            u[i] = interior_part[k];
        }
        for (k, &b) in model.partition().boundary().iter().enumerate() {
            u[b] = phi[k];
        }
        // Boundary rows see H_BI Γ(λ)φ + H_BB φ = -Q(λ)φ.
        let trace = conormal_trace(&model, &u);
        let expected = -(&q * &phi);
        assert!((trace - expected).norm() <= 1e-10 * phi.norm().max(1.0));
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let nx = 4;
        let ny = 3;
        let mut table = String::from("cell_i,cell_j,a11,a12,a22,a0\n");
        for cj in 0..ny - 1 {
            for ci in 0..nx - 1 {
                table.push_str(&format!("{ci},{cj},2.0,0.5,1.0,0.3\n"));
            }
        }
        let field = CoefficientField::from_csv(nx, ny, table.as_bytes()).unwrap();
        assert_eq!(field, {
            let mut expected = CoefficientField::anisotropic(nx, ny);
            expected.a0 = vec![0.3; nx * ny];
            expected
        });

        let missing = "cell_i,cell_j,a11,a12,a22,a0\n0,0,1,0,1,0\n";
        assert!(matches!(
            CoefficientField::from_csv(nx, ny, missing.as_bytes()),
            Err(Error::CoefficientTable(_))
        ));
        let no_header = "cell_i,cell_j,a11,a12,a22\n";
        assert!(matches!(
            CoefficientField::from_csv(nx, ny, no_header.as_bytes()),
            Err(Error::CoefficientTable(_))
        ));
    }
}

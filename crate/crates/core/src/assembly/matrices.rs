//! Scalar finite-element matrices over all grid nodes and the trace-norm estimator.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Grid, ReferenceElement};
use crate::quadrature::tensor_unit_rule;
use crate::sparse::{CscMatrix, LuFactor};

/// Bilinear kernel in ∫ w(x) · kernel(φ_j, φ_k), j the trial node and k the test node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// Σₐ ∂ₐφ_j ∂ₐφ_k
    Diffusion,
    /// ∂ₐφ_j φ_k along a zero-based axis
    Advection(usize),
    /// φ_j φ_k
    Reaction,
}

/// Precomputed per-cell data shared by scalar and Clifford-valued assembly.
pub(crate) struct CellQuadrature {
    pub el: ReferenceElement,
    pub inv_h: Vec<f64>,
    pub vol: f64,
}

impl CellQuadrature {
    pub fn new(grid: &Grid) -> CellQuadrature {
        let n = grid.n();
        CellQuadrature {
            el: ReferenceElement::new(n),
            inv_h: (0..n).map(|a| 1.0 / grid.spacing(a)).collect(),
            vol: grid.cell_volume(),
        }
    }

    /// Kernel value for trial corner j and test corner k at quadrature point q.
    #[inline]
    pub fn kernel(&self, kernel: Kernel, q: usize, j: usize, k: usize) -> f64 {
        let el = &self.el;
        match kernel {
            Kernel::Diffusion => (0..self.inv_h.len())
                .map(|a| el.dphi[q][j][a] * el.dphi[q][k][a] * self.inv_h[a] * self.inv_h[a])
                .sum(),
            Kernel::Advection(a) => el.dphi[q][j][a] * self.inv_h[a] * el.phi[q][k],
            Kernel::Reaction => el.phi[q][j] * el.phi[q][k],
        }
    }
}

/// ∫ w · kernel(φ_j, φ_k) over the box, as a node × node matrix (row = test node).
pub fn scalar_matrix(
    grid: &Grid,
    kernel: Kernel,
    weight: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> CscMatrix {
    let cq = CellQuadrature::new(grid);
    let corners = 1usize << grid.n();
    let per_cell: Vec<Vec<(usize, usize, f64)>> = (0..grid.n_cells())
        .into_par_iter()
        .map(|cell| {
            let nodes = grid.cell_corner_nodes(cell);
            let origin = grid.cell_origin(cell);
            let mut local = vec![0.0; corners * corners];
            for q in 0..cq.el.len() {
                let x = grid.map_point(&origin, &cq.el.points[q]);
                let w = weight(&x) * cq.el.weights[q] * cq.vol;
                for k in 0..corners {
                    for j in 0..corners {
                        local[k * corners + j] += w * cq.kernel(kernel, q, j, k);
                    }
                }
            }
            let mut out = Vec::with_capacity(corners * corners);
            for k in 0..corners {
                for j in 0..corners {
                    out.push((nodes[k], nodes[j], local[k * corners + j]));
                }
            }
            out
        })
        .collect();
    let triplets: Vec<_> = per_cell.into_iter().flatten().collect();
    CscMatrix::from_triplets(grid.n_nodes(), grid.n_nodes(), &triplets)
}

pub fn mass_matrix(grid: &Grid) -> CscMatrix {
    scalar_matrix(grid, Kernel::Reaction, &|_| 1.0)
}

pub fn stiffness_matrix(grid: &Grid) -> CscMatrix {
    scalar_matrix(grid, Kernel::Diffusion, &|_| 1.0)
}

/// Boundary faces are numbered 2a (xₐ = loₐ) and 2a + 1 (xₐ = hiₐ).
pub fn face_of(axis: usize, upper: bool) -> usize {
    2 * axis + upper as usize
}

/// ∫_∂Ω b φ_j φ_k with b constant on each face; `None` means b ≡ 1.
pub fn boundary_mass_matrix(grid: &Grid, face_coeffs: Option<&[f64]>) -> Result<CscMatrix> {
    let n = grid.n();
    if let Some(c) = face_coeffs {
        if c.len() != 2 * n {
            return Err(Error::Mismatch(format!(
                "{} face coefficients for {} faces",
                c.len(),
                2 * n
            )));
        }
    }
    let face_rule = tensor_unit_rule(n - 1);
    let corners = 1usize << n;
    let mut triplets = Vec::new();
    for cell in 0..grid.n_cells() {
        let multi = grid.cell_multi(cell);
        let nodes = grid.cell_corner_nodes(cell);
        for a in 0..n {
            let sides = [
                (multi[a] == 0, false),
                (multi[a] + 1 == grid.res()[a], true),
            ];
            for (on_face, upper) in sides {
                if !on_face {
                    continue;
                }
                let coeff = face_coeffs.map_or(1.0, |c| c[face_of(a, upper)]);
                if coeff == 0.0 {
                    continue;
                }
                let area: f64 = (0..n)
                    .filter(|&b| b != a)
                    .map(|b| grid.spacing(b))
                    .product();
                let on: Vec<usize> = (0..corners)
                    .filter(|k| (k >> a & 1 == 1) == upper)
                    .collect();
                for (eta, w) in &face_rule {
                    let phi: Vec<f64> = on
                        .iter()
                        .map(|&k| {
                            (0..n)
                                .filter(|&b| b != a)
                                .zip(eta)
                                .map(|(b, &t)| if k >> b & 1 == 1 { t } else { 1.0 - t })
                                .product()
                        })
                        .collect();
                    for (ik, &k) in on.iter().enumerate() {
                        for (ij, &j) in on.iter().enumerate() {
                            triplets.push((
                                nodes[k],
                                nodes[j],
                                coeff * w * area * phi[ik] * phi[ij],
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(CscMatrix::from_triplets(
        grid.n_nodes(),
        grid.n_nodes(),
        &triplets,
    ))
}

pub const TRACE_MAX_ITERATIONS: usize = 10_000;
const TRACE_TOLERANCE: f64 = 1e-12;

/// Discrete norm of the Dirichlet trace H¹(Ω) → L²(∂Ω): √λ for the largest λ of
/// B v = λ (M + K) v, by power iteration from the constant vector. Since the
/// discrete space is a subspace of H¹ the result bounds the continuum norm from below.
pub fn estimate_trace_norm(grid: &Grid) -> Result<f64> {
    let boundary = boundary_mass_matrix(grid, None)?;
    let h1 = add(&mass_matrix(grid), &stiffness_matrix(grid));
    let lu = LuFactor::new(&h1)?;
    let mut v = vec![1.0; grid.n_nodes()];
    let mut last = f64::NAN;
    for _ in 0..TRACE_MAX_ITERATIONS {
        let bv = boundary.mul_vec(&v);
        let lambda = dot(&v, &bv) / h1.bilinear(&v, &v);
        if (lambda - last).abs() <= TRACE_TOLERANCE * lambda {
            return Ok(lambda.sqrt());
        }
        last = lambda;
        let w = lu.solve(&bv);
        let norm = dot(&w, &w).sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::NoConvergence {
        iterations: TRACE_MAX_ITERATIONS,
        last,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of two matrices of the same shape.
pub fn add(a: &CscMatrix, b: &CscMatrix) -> CscMatrix {
    let mut t = triplets(a);
    t.extend(triplets(b));
    CscMatrix::from_triplets(a.nrows(), a.ncols(), &t)
}

pub(crate) fn triplets(a: &CscMatrix) -> Vec<(usize, usize, f64)> {
    let dense_cols = a.ncols();
    let mut out = Vec::with_capacity(a.nnz());
    for c in 0..dense_cols {
        for (r, v) in a.column(c) {
            out.push((r, c, v));
        }
    }
    out
}

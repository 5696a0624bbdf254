//! Galerkin discretization of the forms q_s and q_s^R on multilinear elements.
//!
//! Unknowns are the 2ⁿ blade coefficients at every free node, numbered node-major.
//! Row (k, B) of the system is Sc q_s(F, φ_k e_B), so a Clifford constant a
//! acting on the left of F contributes its real representation L(a)[B, A].

mod discrete;
pub mod matrices;

pub use discrete::{apply_discrete_dirac, s_resolvent_apply, ResolventReport, Side};
pub use matrices::{
    boundary_mass_matrix, estimate_trace_norm, mass_matrix, scalar_matrix, stiffness_matrix, Kernel,
};

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{Blade, Multivector, Paravector};
use crate::error::{Error, Result};
use crate::fields::{BoxDomain, Geometry, Grid, GridFunction};
use crate::operators::constants;
use crate::regions::{evaluate, RegionKind, RegionParams, RegionVerdict, RobinCoeffMode, SPoint};
use crate::sparse::{CscMatrix, LuFactor};
use matrices::{dot, triplets, CellQuadrature};

/// Relative residual above which a solve is rejected.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Robin,
}

impl FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<BoundaryCondition> {
        match s {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "robin" => Ok(BoundaryCondition::Robin),
            _ => Err(Error::Config(format!("unknown boundary condition '{s}'"))),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Robin => "robin",
        })
    }
}

/// Robin coefficient b, constant on each face. Faces are numbered 2a (lower) and 2a + 1 (upper).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCoeff {
    Constant(f64),
    PerFace(Vec<f64>),
}

impl BoundaryCoeff {
    pub fn face_values(&self, n: usize) -> Result<Vec<f64>> {
        let v = match self {
            BoundaryCoeff::Constant(b) => vec![*b; 2 * n],
            BoundaryCoeff::PerFace(v) => v.clone(),
        };
        if v.len() != 2 * n || v.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need {} finite face coefficients",
                2 * n
            )));
        }
        Ok(v)
    }

    /// ‖b‖_∞
    pub fn sup_norm(&self) -> f64 {
        match self {
            BoundaryCoeff::Constant(b) => b.abs(),
            BoundaryCoeff::PerFace(v) => v.iter().fold(0.0, |m, b| m.max(b.abs())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSpec {
    pub geometry: Geometry,
    pub bc: BoundaryCondition,
    pub s: Paravector,
    pub b: Option<BoundaryCoeff>,
    /// ‖τ_D‖ used for the Robin constants in reports.
    pub trace_norm: Option<f64>,
    /// Poincaré constant; when set, hyperbolic Dirichlet reports use K_P.
    pub c_p: Option<f64>,
    pub robin_coeff_mode: RobinCoeffMode,
}

impl FormSpec {
    pub fn dirichlet(geometry: Geometry, s: Paravector) -> FormSpec {
        FormSpec {
            geometry,
            bc: BoundaryCondition::Dirichlet,
            s,
            b: None,
            trace_norm: None,
            c_p: None,
            robin_coeff_mode: RobinCoeffMode::default(),
        }
    }

    pub fn robin(geometry: Geometry, s: Paravector, b: BoundaryCoeff) -> FormSpec {
        FormSpec {
            bc: BoundaryCondition::Robin,
            b: Some(b),
            ..FormSpec::dirichlet(geometry, s)
        }
    }

    pub fn with_trace_norm(mut self, t: f64) -> FormSpec {
        self.trace_norm = Some(t);
        self
    }

    pub fn with_poincare(mut self, c_p: f64) -> FormSpec {
        self.c_p = Some(c_p);
        self
    }

    pub fn s_point(&self) -> SPoint {
        SPoint {
            s0: self.s.s0,
            s1: self.s.imag_sq().sqrt(),
        }
    }
}

/// One contribution ∫ w · kernel(φ_j, φ_k) · L(a).
struct Term {
    kernel: Kernel,
    weight: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    /// Row-major L(a); `None` for a = 1.
    rep: Option<Vec<f64>>,
}

impl Term {
    fn scalar(kernel: Kernel, weight: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Term {
        Term {
            kernel,
            weight: Box::new(weight),
            rep: None,
        }
    }

    fn clifford(
        kernel: Kernel,
        a: &Multivector,
        weight: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Term {
        let m = a.left_rep_matrix();
        let d = a.dim();
        let rep = (0..d * d).map(|k| m[(k / d, k % d)]).collect();
        Term {
            kernel,
            weight: Box::new(weight),
            rep: Some(rep),
        }
    }
}

fn hyperbolic_terms(s: &Paravector) -> Result<Vec<Term>> {
    let n = s.n();
    let (alpha, beta) = constants(n)?;
    let y = n - 1;
    let lead = &Multivector::generator(n, n) - &Multivector::scalar(n, 2.0 * s.s0);
    let mut terms = vec![
        Term::scalar(Kernel::Diffusion, move |x| x[y] * x[y]),
        Term::scalar(Kernel::Advection(y), move |x| 2.0 * (1.0 + alpha) * x[y]),
    ];
    for i in 0..n {
        let a = lead.mul(&Multivector::generator(n, i + 1))?;
        terms.push(Term::clifford(Kernel::Advection(i), &a, move |x| x[y]));
    }
    let zero_order = &lead.mul(&Multivector::generator(n, n))?.scale(-alpha)
        + &Multivector::scalar(n, s.modulus_sq() - beta);
    terms.push(Term::clifford(Kernel::Reaction, &zero_order, |_| 1.0));
    Ok(terms)
}

fn spherical_terms(s: &Paravector) -> Result<Vec<Term>> {
    let n = s.n();
    let nf = n as f64;
    let r2 = |x: &[f64]| 1.0 + x.iter().map(|v| v * v).sum::<f64>();
    let mut terms = vec![Term::scalar(Kernel::Diffusion, move |x| r2(x) * r2(x))];
    for i in 0..n {
        terms.push(Term::scalar(Kernel::Advection(i), move |x| {
            2.0 * (2.0 + nf) * r2(x) * x[i]
        }));
        for l in 0..n {
            let a = Multivector::generator(n, l + 1).mul(&Multivector::generator(n, i + 1))?;
            terms.push(Term::clifford(Kernel::Advection(i), &a, move |x| {
                2.0 * r2(x) * x[l]
            }));
        }
        let a = Multivector::generator(n, i + 1).scale(-2.0 * s.s0);
        terms.push(Term::clifford(Kernel::Advection(i), &a, r2));
    }
    for l in 0..n {
        let a = Multivector::generator(n, l + 1).scale(2.0 * s.s0 * nf);
        terms.push(Term::clifford(Kernel::Reaction, &a, move |x| x[l]));
    }
    let shift = s.modulus_sq() + nf * nf;
    terms.push(Term::scalar(Kernel::Reaction, move |_| shift));
    Ok(terms)
}

/// Full blade-expanded matrix over all nodes.
fn assemble_block(grid: &Grid, terms: &[Term]) -> CscMatrix {
    let d = 1usize << grid.n();
    let corners = 1usize << grid.n();
    let width = corners * d;
    let cq = CellQuadrature::new(grid);
    let per_cell: Vec<Vec<(usize, usize, f64)>> = (0..grid.n_cells())
        .into_par_iter()
        .map(|cell| {
            let nodes = grid.cell_corner_nodes(cell);
            let origin = grid.cell_origin(cell);
            let mut scalar = vec![vec![0.0; corners * corners]; terms.len()];
            for q in 0..cq.el.len() {
                let x = grid.map_point(&origin, &cq.el.points[q]);
                let wq = cq.el.weights[q] * cq.vol;
                for (t, term) in terms.iter().enumerate() {
                    let w = (term.weight)(&x) * wq;
                    if w == 0.0 {
                        continue;
                    }
                    for k in 0..corners {
                        for j in 0..corners {
                            scalar[t][k * corners + j] += w * cq.kernel(term.kernel, q, j, k);
                        }
                    }
                }
            }
            let mut local = vec![0.0; width * width];
            for (t, term) in terms.iter().enumerate() {
                for k in 0..corners {
                    for j in 0..corners {
                        let v = scalar[t][k * corners + j];
                        match &term.rep {
                            None => {
                                for b in 0..d {
                                    local[(k * d + b) * width + j * d + b] += v;
                                }
                            }
                            Some(rep) => {
                                for b in 0..d {
                                    for a in 0..d {
                                        local[(k * d + b) * width + j * d + a] +=
                                            v * rep[b * d + a];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(width * width);
            for k in 0..corners {
                for b in 0..d {
                    for j in 0..corners {
                        for a in 0..d {
                            let v = local[(k * d + b) * width + j * d + a];
                            if v != 0.0 {
                                out.push((nodes[k] * d + b, nodes[j] * d + a, v));
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    let t: Vec<_> = per_cell.into_iter().flatten().collect();
    let size = grid.n_nodes() * d;
    CscMatrix::from_triplets(size, size, &t)
}

/// Scalar node matrix expanded by the identity on blades.
fn expand_identity(m: &CscMatrix, d: usize) -> Vec<(usize, usize, f64)> {
    triplets(m)
        .into_iter()
        .flat_map(|(r, c, v)| (0..d).map(move |b| (r * d + b, c * d + b, v)))
        .collect()
}

#[derive(Debug)]
enum FactorFailure {
    Singular(f64),
    Other(String),
}

/// Assembled discrete form. Immutable; the factorization is computed on first solve and shared.
pub struct FormOperator {
    grid: Grid,
    spec: FormSpec,
    domain: BoxDomain,
    full: CscMatrix,
    system: CscMatrix,
    mass: CscMatrix,
    stiffness: CscMatrix,
    boundary_mass: CscMatrix,
    free_nodes: Vec<usize>,
    free_dofs: Vec<usize>,
    lu: OnceLock<std::result::Result<LuFactor, FactorFailure>>,
}

impl fmt::Debug for FormOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormOperator")
            .field("spec", &self.spec)
            .field("res", &self.grid.res())
            .field("unknowns", &self.free_dofs.len())
            .finish()
    }
}

pub fn assemble(grid: &Grid, spec: &FormSpec) -> Result<FormOperator> {
    let n = grid.n();
    if spec.s.n() != n {
        return Err(Error::Mismatch(format!(
            "s lives in R_{}, grid is {n}-dimensional",
            spec.s.n()
        )));
    }
    if spec.geometry == Geometry::Euclidean {
        return Err(Error::InvalidParams(
            "forms are defined for hyperbolic and spherical geometry".into(),
        ));
    }
    let domain = BoxDomain::new(
        grid.domain().lo().to_vec(),
        grid.domain().hi().to_vec(),
        spec.geometry,
    )?;
    let faces = match (spec.bc, &spec.b) {
        (BoundaryCondition::Robin, None) => {
            return Err(Error::InvalidParams(
                "robin forms need a boundary coefficient b".into(),
            ))
        }
        (BoundaryCondition::Robin, Some(b)) => Some(b.face_values(n)?),
        (BoundaryCondition::Dirichlet, _) => None,
    };
    let terms = match spec.geometry {
        Geometry::Hyperbolic => hyperbolic_terms(&spec.s)?,
        _ => spherical_terms(&spec.s)?,
    };
    let d = 1usize << n;
    let mut full = assemble_block(grid, &terms);
    let boundary_mass = boundary_mass_matrix(grid, None)?;
    if let Some(faces) = &faces {
        let weighted = boundary_mass_matrix(grid, Some(faces))?;
        let mut t = triplets(&full);
        t.extend(expand_identity(&weighted, d));
        full = CscMatrix::from_triplets(full.nrows(), full.ncols(), &t);
    }
    let free_nodes = match spec.bc {
        BoundaryCondition::Dirichlet => grid.interior_nodes(),
        BoundaryCondition::Robin => (0..grid.n_nodes()).collect(),
    };
    if free_nodes.is_empty() {
        return Err(Error::InvalidDomain("grid has no interior nodes".into()));
    }
    let free_dofs: Vec<usize> = free_nodes
        .iter()
        .flat_map(|&k| (0..d).map(move |b| k * d + b))
        .collect();
    let system = full.select(&free_dofs, &free_dofs);
    Ok(FormOperator {
        grid: grid.clone(),
        spec: spec.clone(),
        domain,
        full,
        system,
        mass: mass_matrix(grid),
        stiffness: stiffness_matrix(grid),
        boundary_mass,
        free_nodes,
        free_dofs,
        lu: OnceLock::new(),
    })
}

impl FormOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spec(&self) -> &FormSpec {
        &self.spec
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// System restricted to free unknowns.
    pub fn system(&self) -> &CscMatrix {
        &self.system
    }

    /// System over all nodes, without boundary elimination.
    pub fn full_system(&self) -> &CscMatrix {
        &self.full
    }

    /// Scalar mass matrix; the blade version is M ⊗ I.
    pub fn mass(&self) -> &CscMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CscMatrix {
        &self.stiffness
    }

    /// Unweighted boundary mass ∫_∂Ω φ_j φ_k.
    pub fn boundary_mass(&self) -> &CscMatrix {
        &self.boundary_mass
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    /// Global indices node·2ⁿ + blade of the unknowns, in system order.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn region_kind(&self) -> RegionKind {
        match (self.spec.geometry, self.spec.bc) {
            (Geometry::Hyperbolic, BoundaryCondition::Dirichlet) if self.spec.c_p.is_some() => {
                RegionKind::HyperbolicPoincare
            }
            (Geometry::Hyperbolic, BoundaryCondition::Dirichlet) => RegionKind::HyperbolicDirichlet,
            (Geometry::Hyperbolic, BoundaryCondition::Robin) => RegionKind::HyperbolicRobin,
            (_, BoundaryCondition::Dirichlet) => RegionKind::SphericalDirichlet,
            (_, BoundaryCondition::Robin) => RegionKind::SphericalRobin,
        }
    }

    /// Region parameters implied by the box and the form parameters: (m, M) from the domain, ‖b‖_∞, ‖τ‖, C_P.
    pub fn region_params(&self) -> RegionParams {
        let (m, big_m) = self.domain.extrema();
        RegionParams {
            n: self.grid.n(),
            m,
            big_m,
            b_norm: self.spec.b.as_ref().map_or(0.0, |b| b.sup_norm()),
            trace_norm: self.spec.trace_norm,
            c_p: self.spec.c_p,
            robin_coeff_mode: self.spec.robin_coeff_mode,
        }
    }

    pub fn verdict(&self) -> Result<RegionVerdict> {
        evaluate(
            self.region_kind(),
            &self.region_params(),
            self.spec.s_point(),
        )
    }

    pub fn factorization(&self) -> Result<&LuFactor> {
        let stored = self.lu.get_or_init(|| match LuFactor::new(&self.system) {
            Ok(lu) => Ok(lu),
            Err(Error::Singular { pivot_ratio }) => Err(FactorFailure::Singular(pivot_ratio)),
            Err(e) => Err(FactorFailure::Other(e.to_string())),
        });
        match stored {
            Ok(lu) => Ok(lu),
            Err(FactorFailure::Singular(r)) => Err(Error::Singular { pivot_ratio: *r }),
            Err(FactorFailure::Other(msg)) => Err(Error::InvalidParams(msg.clone())),
        }
    }

    fn restrict(&self, f: &GridFunction) -> Vec<f64> {
        self.free_dofs.iter().map(|&i| f.values()[i]).collect()
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::Mismatch(
                "grid function and operator live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// (M ⊗ I)·vec(f) restricted to the free unknowns, i.e. Sc⟨f, φ_k e_B⟩₂.
    pub fn load_vector(&self, f: &GridFunction) -> Result<Vec<f64>> {
        self.check(f)?;
        let d = f.blades();
        let mut full = vec![0.0; f.values().len()];
        for j in 0..self.grid.n_nodes() {
            let fj = f.node(j);
            for (k, m) in self.mass.column(j) {
                for b in 0..d {
                    full[k * d + b] += m * fj[b];
                }
            }
        }
        Ok(self.free_dofs.iter().map(|&i| full[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub s0: f64,
    pub s1: f64,
    pub norm_l2: f64,
    pub norm_d: f64,
    pub rhs_norm_l2: f64,
    /// K, K^R, K_P, H or H^R when s is admissible for the operator's region kind.
    pub constant: Option<f64>,
    /// ‖F‖₂·K/‖f‖₂ (Poincaré kind: ‖F‖₂·K_P/(C_P²‖f‖₂)).
    pub ratio_l2: Option<f64>,
    /// ‖F‖_D·K/‖f‖₂ (Poincaré kind: ‖F‖_D·K_P/(C_P‖f‖₂)).
    pub ratio_d: Option<f64>,
    pub residual: f64,
    pub pivot_min: f64,
    pub pivot_max: f64,
    pub region_kind: RegionKind,
    pub admissible: bool,
    pub unknowns: usize,
}

/// Solves q_s(F, G) = ⟨f, G⟩₂ for all discrete G by sparse LU, with up to three
/// steps of iterative refinement.
pub fn solve_weak(op: &FormOperator, f: &GridFunction) -> Result<(GridFunction, SolveReport)> {
    let rhs = op.load_vector(f)?;
    let lu = op.factorization()?;
    let rhs_norm = dot(&rhs, &rhs).sqrt();
    let mut x = lu.solve(&rhs);
    let residual_of = |x: &[f64]| -> (Vec<f64>, f64) {
        let ax = op.system.mul_vec(x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let norm = dot(&r, &r).sqrt();
        (
            r,
            if rhs_norm > 0.0 {
                norm / rhs_norm
            } else {
                norm
            },
        )
    };
    let (mut r, mut residual) = residual_of(&x);
    for _ in 0..3 {
        if residual <= 1e-14 {
            break;
        }
        let dx = lu.solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let (r2, res2) = residual_of(&candidate);
        if res2 >= residual {
            break;
        }
        x = candidate;
        r = r2;
        residual = res2;
    }
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::NoConvergence {
            iterations: 3,
            last: residual,
        });
    }
    let mut sol = GridFunction::zeros(&op.grid);
    for (&i, v) in op.free_dofs.iter().zip(&x) {
        sol.values_mut()[i] = *v;
    }
    let norm_l2 = sol.norm_l2();
    let norm_d = sol.seminorm_d();
    let rhs_norm_l2 = f.norm_l2();
    let verdict = op.verdict().ok();
    let admissible = verdict.as_ref().is_some_and(|v| v.admissible);
    let constant = verdict.filter(|v| v.admissible).map(|v| v.constant);
    let (ratio_l2, ratio_d) = match constant {
        Some(k) if rhs_norm_l2 > 0.0 => {
            if op.region_kind() == RegionKind::HyperbolicPoincare {
                let c_p = op.spec.c_p.unwrap_or(f64::NAN);
                (
                    Some(norm_l2 * k / (c_p * c_p * rhs_norm_l2)),
                    Some(norm_d * k / (c_p * rhs_norm_l2)),
                )
            } else {
                (
                    Some(norm_l2 * k / rhs_norm_l2),
                    Some(norm_d * k / rhs_norm_l2),
                )
            }
        }
        _ => (None, None),
    };
    let s = op.spec.s_point();
    let report = SolveReport {
        s0: s.s0,
        s1: s.s1,
        norm_l2,
        norm_d,
        rhs_norm_l2,
        constant,
        ratio_l2,
        ratio_d,
        residual,
        pivot_min: lu.pivot_min(),
        pivot_max: lu.pivot_max(),
        region_kind: op.region_kind(),
        admissible,
        unknowns: op.free_dofs.len(),
    };
    Ok((sol, report))
}

/// Sc q_s(F, G) = vec(G)ᵀ·A·vec(F) over the free unknowns. For Dirichlet forms
/// boundary values of F and G are ignored.
pub fn sc_form_value(op: &FormOperator, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    op.check(f)?;
    op.check(g)?;
    Ok(op.system.bilinear(&op.restrict(g), &op.restrict(f)))
}

/// q_s(F, G) ∈ ℝₙ, recovered blade by blade from q_s(F, G ē_C) = q_s(F, G) ē_C.
pub fn form_value(op: &FormOperator, f: &GridFunction, g: &GridFunction) -> Result<Multivector> {
    let n = op.grid.n();
    let mut coeffs = Vec::with_capacity(1 << n);
    for c in 0..1u32 << n {
        let e_c = Multivector::basis(n, Blade(c))?.conjugate();
        coeffs.push(sc_form_value(op, f, &g.right_mul_const(&e_c)?)?);
    }
    Multivector::from_coeffs(n, coeffs)
}

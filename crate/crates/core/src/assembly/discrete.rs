//! Nodal finite-difference Dirac operators and the discrete S-resolvents.

use serde::{Deserialize, Serialize};

use super::{solve_weak, BoundaryCondition, FormOperator, SolveReport};
use crate::clifford::Multivector;
use crate::error::{Error, Result};
use crate::fields::{Geometry, GridFunction};
use crate::operators::{constants, OperatorKind};
use crate::regions::{s_resolvent_bound_hyperbolic, RegionKind};

/// ∂ₐF at every node: centred differences inside, second-order one-sided at the ends.
fn nodal_derivative(f: &GridFunction, axis: usize) -> Vec<f64> {
    let grid = f.grid();
    let d = f.blades();
    let h = grid.spacing(axis);
    let stride = grid.node_stride(axis);
    let last = grid.res()[axis];
    let mut out = vec![0.0; f.values().len()];
    for k in 0..grid.n_nodes() {
        let i = grid.node_multi(k)[axis];
        let o = &mut out[k * d..(k + 1) * d];
        let (nodes, weights): ([usize; 3], [f64; 3]) = if i == 0 {
            ([k, k + stride, k + 2 * stride], [-3.0, 4.0, -1.0])
        } else if i == last {
            ([k, k - stride, k - 2 * stride], [3.0, -4.0, 1.0])
        } else {
            ([k + stride, k - stride, k], [1.0, -1.0, 0.0])
        };
        for (node, w) in nodes.iter().zip(weights) {
            if w != 0.0 {
                for (ob, v) in o.iter_mut().zip(f.node(*node)) {
                    *ob += w * v / (2.0 * h);
                }
            }
        }
    }
    out
}

/// Nodal application of 𝒟_e, 𝒟_H or 𝒟_S, second-order accurate in the spacing.
pub fn apply_discrete_dirac(kind: OperatorKind, f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid();
    let n = grid.n();
    let d = f.blades();
    let alpha = match kind {
        OperatorKind::DiracHyperbolic => constants(n)?.0,
        OperatorKind::DiracEuclidean | OperatorKind::DiracSpherical => 0.0,
        OperatorKind::Euler => {
            return Err(Error::InvalidParams(
                "discrete application needs a Dirac operator".into(),
            ))
        }
    };
    let derivs: Vec<Vec<f64>> = (0..n).map(|a| nodal_derivative(f, a)).collect();
    let gens: Vec<Multivector> = (1..=n).map(|i| Multivector::generator(n, i)).collect();
    let mut out = GridFunction::zeros(grid);
    for k in 0..grid.n_nodes() {
        let x = grid.node_coords(k);
        let coef = match kind {
            OperatorKind::DiracHyperbolic => x[n - 1],
            OperatorKind::DiracSpherical => 1.0 + x.iter().map(|v| v * v).sum::<f64>(),
            _ => 1.0,
        };
        let mut acc = Multivector::zero(n);
        for a in 0..n {
            let da = Multivector::from_coeffs(n, derivs[a][k * d..(k + 1) * d].to_vec())?;
            acc += &gens[a].mul(&da)?.scale(coef);
        }
        let fk = f.node_value(k);
        match kind {
            OperatorKind::DiracHyperbolic => acc += &gens[n - 1].mul(&fk)?.scale(-alpha),
            OperatorKind::DiracSpherical => {
                let xv = x
                    .iter()
                    .zip(&gens)
                    .fold(Multivector::zero(n), |m, (xi, e)| &m + &e.scale(*xi));
                acc += &xv.mul(&fk)?.scale(-(n as f64));
            }
            _ => {}
        }
        out.set_node_value(k, &acc);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Side> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Config(format!("unknown side '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventReport {
    pub side: Side,
    pub norm_l2: f64,
    pub rhs_norm_l2: f64,
    /// (|s| + αₙ + M√n)/K for the right resolvent of the hyperbolic Dirichlet problem.
    pub bound: Option<f64>,
    /// ‖result‖₂ / (bound·‖f‖₂)
    pub ratio: Option<f64>,
    pub solve: SolveReport,
}

/// S_R⁻¹(s, T) f = (s̄ − T)F or S_L⁻¹(s, T) f = F s̄ − T F with F = Q_s(T)⁻¹ f from the
/// Galerkin solve and T applied by finite differences.
pub fn s_resolvent_apply(
    side: Side,
    op: &FormOperator,
    f: &GridFunction,
) -> Result<(GridFunction, ResolventReport)> {
    let (sol, solve) = solve_weak(op, f)?;
    let spec = op.spec();
    let kind = match spec.geometry {
        Geometry::Hyperbolic => OperatorKind::DiracHyperbolic,
        _ => OperatorKind::DiracSpherical,
    };
    let s_bar = spec.s.conjugate().to_multivector();
    let ts = apply_discrete_dirac(kind, &sol)?;
    let first = match side {
        Side::Right => sol.left_mul_const(&s_bar)?,
        Side::Left => sol.right_mul_const(&s_bar)?,
    };
    let result = first.axpy(-1.0, &ts)?;
    let norm_l2 = result.norm_l2();
    let rhs_norm_l2 = f.norm_l2();
    let bound = if side == Side::Right
        && spec.geometry == Geometry::Hyperbolic
        && spec.bc == BoundaryCondition::Dirichlet
        && op.region_kind() == RegionKind::HyperbolicDirichlet
    {
        s_resolvent_bound_hyperbolic(&op.region_params(), spec.s_point()).ok()
    } else {
        None
    };
    let ratio = bound
        .filter(|_| rhs_norm_l2 > 0.0)
        .map(|b| norm_l2 / (b * rhs_norm_l2));
    Ok((
        result,
        ResolventReport {
            side,
            norm_l2,
            rhs_norm_l2,
            bound,
            ratio,
            solve,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::Paravector;
    use crate::fields::{BoxDomain, Grid, PolyField};
    use crate::operators;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hgrid(res: usize) -> Grid {
        Grid::uniform(
            BoxDomain::new(vec![0.0, 1.0], vec![1.0, 2.0], Geometry::Hyperbolic).unwrap(),
            res,
        )
        .unwrap()
    }

    #[test]
    fn constant_field_hyperbolic() {
        let g = hgrid(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = Multivector::random(2, &mut rng);
        let f = GridFunction::sample_poly(&PolyField::constant(c.clone()), &g).unwrap();
        let out = apply_discrete_dirac(OperatorKind::DiracHyperbolic, &f).unwrap();
        let expect = Multivector::generator(2, 2).mul(&c).unwrap().scale(-0.5);
        for k in 0..g.n_nodes() {
            assert!((&out.node_value(k) - &expect).max_abs() < 1e-13);
        }
    }

    #[test]
    fn quadratic_fields_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = PolyField::random(2, 2, &mut rng);
        for (kind, g) in [
            (OperatorKind::DiracHyperbolic, hgrid(5)),
            (OperatorKind::DiracEuclidean, hgrid(3)),
        ] {
            let f = GridFunction::sample_poly(&p, &g).unwrap();
            let out = apply_discrete_dirac(kind, &f).unwrap();
            let exact = operators::apply(kind, &p).unwrap();
            for k in 0..g.n_nodes() {
                let e = exact.eval(&g.node_coords(k));
                assert!((&out.node_value(k) - &e).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_order_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = PolyField::random(2, 4, &mut rng);
        let sq = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0], Geometry::Spherical).unwrap();
        let err = |res: usize| {
            let g = Grid::uniform(sq.clone(), res).unwrap();
            let f = GridFunction::sample_poly(&p, &g).unwrap();
            let out = apply_discrete_dirac(OperatorKind::DiracSpherical, &f).unwrap();
            let exact = operators::apply(OperatorKind::DiracSpherical, &p).unwrap();
            g.interior_nodes()
                .into_iter()
                .map(|k| (&out.node_value(k) - &exact.eval(&g.node_coords(k))).max_abs())
                .fold(0.0, f64::max)
        };
        let order = (err(32) / err(64)).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn real_s_zero_rhs() {
        let g = hgrid(4);
        let op = super::super::assemble(
            &g,
            &super::super::FormSpec::dirichlet(
                Geometry::Hyperbolic,
                Paravector::from_s0_s1(2, 10.0, 0.0),
            ),
        )
        .unwrap();
        let (r, _) = s_resolvent_apply(Side::Right, &op, &GridFunction::zeros(&g)).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }
}

use rand::Rng;

use super::{BoxDomain, PolyField};
use crate::clifford::{conj_sign, mul_into, Multivector};
use crate::error::{Error, Result};
use crate::quadrature::tensor_unit_rule;

/// Tensor-product grid over a box. Nodes and cells are numbered
/// lexicographically with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: BoxDomain,
    res: Vec<usize>,
    node_strides: Vec<usize>,
    cell_strides: Vec<usize>,
}

fn strides(extent: &[usize]) -> Vec<usize> {
    let n = extent.len();
    let mut s = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        s[k] = s[k + 1] * extent[k + 1];
    }
    s
}

impl Grid {
    pub fn new(domain: BoxDomain, res: Vec<usize>) -> Result<Grid> {
        let n = domain.n();
        if res.len() != n {
            return Err(Error::Mismatch(format!(
                "{} resolutions for a {n}-dimensional box",
                res.len()
            )));
        }
        if let Some(r) = res.iter().find(|&&r| r < 2) {
            return Err(Error::InvalidDomain(format!("resolution {r} < 2")));
        }
        let nodes_per_axis: Vec<usize> = res.iter().map(|r| r + 1).collect();
        let node_strides = strides(&nodes_per_axis);
        let cell_strides = strides(&res);
        Ok(Grid {
            domain,
            res,
            node_strides,
            cell_strides,
        })
    }

    /// Same resolution on every axis.
    pub fn uniform(domain: BoxDomain, res: usize) -> Result<Grid> {
        let n = domain.n();
        Grid::new(domain, vec![res; n])
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn n_nodes(&self) -> usize {
        self.res.iter().map(|r| r + 1).product()
    }

    pub fn n_cells(&self) -> usize {
        self.res.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.domain.hi()[axis] - self.domain.lo()[axis]) / self.res[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.n()).map(|a| self.spacing(a)).product()
    }

    pub fn node_stride(&self, axis: usize) -> usize {
        self.node_strides[axis]
    }

    pub fn node_multi(&self, node: usize) -> Vec<usize> {
        (0..self.n())
            .map(|a| node / self.node_strides[a] % (self.res[a] + 1))
            .collect()
    }

    pub fn node_flat(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.node_strides)
            .map(|(i, s)| i * s)
            .sum()
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        self.node_multi(node)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coord(a, i))
            .collect()
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        if i == self.res[axis] {
            self.domain.hi()[axis]
        } else {
            self.domain.lo()[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.node_multi(node)
            .iter()
            .zip(&self.res)
            .any(|(&i, &r)| i == 0 || i == r)
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes())
            .filter(|&k| !self.is_boundary(k))
            .collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes())
            .filter(|&k| self.is_boundary(k))
            .collect()
    }

    pub fn cell_multi(&self, cell: usize) -> Vec<usize> {
        (0..self.n())
            .map(|a| cell / self.cell_strides[a] % self.res[a])
            .collect()
    }

    /// Lower corner coordinates of a cell.
    pub fn cell_origin(&self, cell: usize) -> Vec<f64> {
        self.cell_multi(cell)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coord(a, i))
            .collect()
    }

    /// Corner node indices; corner `k` is offset by one along every axis `a` with bit a of k set.
    pub fn cell_corner_nodes(&self, cell: usize) -> Vec<usize> {
        let base = self.node_flat(&self.cell_multi(cell));
        (0..1usize << self.n())
            .map(|k| {
                base + (0..self.n())
                    .filter(|a| k >> a & 1 == 1)
                    .map(|a| self.node_strides[a])
                    .sum::<usize>()
            })
            .collect()
    }

    /// Physical point of a reference coordinate inside a cell.
    pub fn map_point(&self, origin: &[f64], xi: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|a| origin[a] + xi[a] * self.spacing(a))
            .collect()
    }
}

/// Multilinear element on [0,1]ⁿ with the 4-point Gauss rule per axis.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// φ_k at each point, `[q][corner]`.
    pub phi: Vec<Vec<f64>>,
    /// ∂φ_k/∂ξ_a at each point, `[q][corner][axis]`.
    pub dphi: Vec<Vec<Vec<f64>>>,
}

impl ReferenceElement {
    pub fn new(dim: usize) -> ReferenceElement {
        let rule = tensor_unit_rule(dim);
        let corners = 1usize << dim;
        let mut phi = Vec::with_capacity(rule.len());
        let mut dphi = Vec::with_capacity(rule.len());
        for (xi, _) in &rule {
            let f1 = |k: usize, a: usize| if k >> a & 1 == 1 { xi[a] } else { 1.0 - xi[a] };
            let df1 = |k: usize, a: usize| if k >> a & 1 == 1 { 1.0 } else { -1.0 };
            phi.push(
                (0..corners)
                    .map(|k| (0..dim).map(|a| f1(k, a)).product())
                    .collect(),
            );
            dphi.push(
                (0..corners)
                    .map(|k| {
                        (0..dim)
                            .map(|d| {
                                (0..dim)
                                    .map(|a| if a == d { df1(k, a) } else { f1(k, a) })
                                    .product()
                            })
                            .collect()
                    })
                    .collect(),
            );
        }
        let (points, weights) = rule.into_iter().unzip();
        ReferenceElement {
            points,
            weights,
            phi,
            dphi,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Nodal ℝₙ values on a grid, interpolated multilinearly between nodes.
/// Storage is node-major: the 2ⁿ coefficients of node k occupy `values[k·2ⁿ..(k+1)·2ⁿ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Grid) -> GridFunction {
        let len = grid.n_nodes() << grid.n();
        GridFunction {
            grid: grid.clone(),
            values: vec![0.0; len],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<GridFunction> {
        let len = grid.n_nodes() << grid.n();
        if values.len() != len {
            return Err(Error::Mismatch(format!(
                "{} values for {len} grid coefficients",
                values.len()
            )));
        }
        Ok(GridFunction {
            grid: grid.clone(),
            values,
        })
    }

    /// Nodal coefficients uniform in [−1, 1]; boundary nodes zeroed when `dirichlet`.
    pub fn random<R: Rng + ?Sized>(grid: &Grid, dirichlet: bool, rng: &mut R) -> GridFunction {
        let mut f = GridFunction::zeros(grid);
        for v in &mut f.values {
            *v = rng.random_range(-1.0..=1.0);
        }
        if dirichlet {
            f.constrain_dirichlet();
        }
        f
    }

    /// Pointwise evaluation of a polynomial field at the nodes.
    pub fn sample_poly(field: &PolyField, grid: &Grid) -> Result<GridFunction> {
        if field.n() != grid.n() {
            return Err(Error::Mismatch(format!(
                "field n = {} on a {}-dimensional grid",
                field.n(),
                grid.n()
            )));
        }
        let mut f = GridFunction::zeros(grid);
        for k in 0..grid.n_nodes() {
            let v = field.eval(&grid.node_coords(k));
            f.node_mut(k).copy_from_slice(v.coeffs());
        }
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn blades(&self) -> usize {
        1 << self.grid.n()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, k: usize) -> &[f64] {
        let d = self.blades();
        &self.values[k * d..(k + 1) * d]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        let d = self.blades();
        &mut self.values[k * d..(k + 1) * d]
    }

    pub fn node_value(&self, k: usize) -> Multivector {
        Multivector::from_coeffs(self.n(), self.node(k).to_vec()).unwrap()
    }

    pub fn set_node_value(&mut self, k: usize, v: &Multivector) {
        self.node_mut(k).copy_from_slice(v.coeffs());
    }

    pub fn constrain_dirichlet(&mut self) {
        for k in self.grid.boundary_nodes() {
            self.node_mut(k).fill(0.0);
        }
    }

    pub fn is_dirichlet_constrained(&self) -> bool {
        self.grid
            .boundary_nodes()
            .into_iter()
            .all(|k| self.node(k).iter().all(|&v| v == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, k: f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
        }
    }

    /// self + k·other
    pub fn axpy(&self, k: f64, other: &GridFunction) -> Result<GridFunction> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + k * b)
            .collect();
        Ok(GridFunction {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Node-wise c·F.
    pub fn left_mul_const(&self, c: &Multivector) -> Result<GridFunction> {
        self.map_nodes(|v, out| mul_into(c.coeffs(), v, out), c)
    }

    /// Node-wise F·c.
    pub fn right_mul_const(&self, c: &Multivector) -> Result<GridFunction> {
        self.map_nodes(|v, out| mul_into(v, c.coeffs(), out), c)
    }

    fn map_nodes(&self, f: impl Fn(&[f64], &mut [f64]), c: &Multivector) -> Result<GridFunction> {
        if c.n() != self.n() {
            return Err(Error::Mismatch(format!(
                "R_{} constant on an R_{} field",
                c.n(),
                self.n()
            )));
        }
        let mut out = GridFunction::zeros(&self.grid);
        let d = self.blades();
        for k in 0..self.grid.n_nodes() {
            let (src, dst) = (
                &self.values[k * d..(k + 1) * d],
                &mut out.values[k * d..(k + 1) * d],
            );
            f(src, dst);
        }
        Ok(out)
    }

    /// Multilinear interpolant at a point of the closed box.
    pub fn interpolate(&self, x: &[f64]) -> Multivector {
        let n = self.n();
        let mut multi = vec![0usize; n];
        let mut xi = vec![0.0; n];
        for a in 0..n {
            let mut t = (x[a] - self.grid.domain().lo()[a]) / self.grid.spacing(a);
            if (t - t.round()).abs() < 1e-12 {
                t = t.round();
            }
            let i = (t.floor().max(0.0) as usize).min(self.grid.res()[a] - 1);
            multi[a] = i;
            xi[a] = t - i as f64;
        }
        let base = self.grid.node_flat(&multi);
        let mut out = Multivector::zero(n);
        for k in 0..1usize << n {
            let mut w = 1.0;
            let mut node = base;
            for a in 0..n {
                if k >> a & 1 == 1 {
                    w *= xi[a];
                    node += self.grid.node_stride(a);
                } else {
                    w *= 1.0 - xi[a];
                }
            }
            for (o, v) in out.coeffs_mut().iter_mut().zip(self.node(node)) {
                *o += w * v;
            }
        }
        out
    }

    /// ⟨F, G⟩₂ = ∫ F̄ G, by exact Gauss quadrature of the interpolants.
    pub fn inner_product_l2(&self, g: &GridFunction) -> Result<Multivector> {
        self.check_grid(g)?;
        let el = ReferenceElement::new(self.n());
        let vol = self.grid.cell_volume();
        let d = self.blades();
        let mut acc = vec![0.0; d];
        let (mut fq, mut gq) = (vec![0.0; d], vec![0.0; d]);
        for cell in 0..self.grid.n_cells() {
            let corners = self.grid.cell_corner_nodes(cell);
            for q in 0..el.len() {
                self.eval_at(&corners, &el.phi[q], &mut fq);
                g.eval_at(&corners, &el.phi[q], &mut gq);
                let w = el.weights[q] * vol;
                for (b, v) in fq.iter_mut().enumerate() {
                    *v *= w * conj_sign(b as u32);
                }
                mul_into(&fq, &gq, &mut acc);
            }
        }
        Multivector::from_coeffs(self.n(), acc)
    }

    /// ‖F‖₂ = √Sc⟨F, F⟩₂.
    pub fn norm_l2(&self) -> f64 {
        let el = ReferenceElement::new(self.n());
        let vol = self.grid.cell_volume();
        let mut fq = vec![0.0; self.blades()];
        let mut total = 0.0;
        for cell in 0..self.grid.n_cells() {
            let corners = self.grid.cell_corner_nodes(cell);
            for q in 0..el.len() {
                self.eval_at(&corners, &el.phi[q], &mut fq);
                total += el.weights[q] * vol * fq.iter().map(|v| v * v).sum::<f64>();
            }
        }
        total.sqrt()
    }

    /// ‖F‖_D = (Σᵢ ‖∂ᵢF‖₂²)^{1/2} using exact gradients of the interpolant.
    pub fn seminorm_d(&self) -> f64 {
        let n = self.n();
        let el = ReferenceElement::new(n);
        let vol = self.grid.cell_volume();
        let inv_h: Vec<f64> = (0..n).map(|a| 1.0 / self.grid.spacing(a)).collect();
        let d = self.blades();
        let mut dq = vec![0.0; d];
        let mut total = 0.0;
        for cell in 0..self.grid.n_cells() {
            let corners = self.grid.cell_corner_nodes(cell);
            for q in 0..el.len() {
                for a in 0..n {
                    dq.fill(0.0);
                    for (k, &node) in corners.iter().enumerate() {
                        let w = el.dphi[q][k][a] * inv_h[a];
                        for (o, v) in dq.iter_mut().zip(self.node(node)) {
                            *o += w * v;
                        }
                    }
                    total += el.weights[q] * vol * dq.iter().map(|v| v * v).sum::<f64>();
                }
            }
        }
        total.sqrt()
    }

    fn eval_at(&self, corners: &[usize], phi: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (k, &node) in corners.iter().enumerate() {
            let w = phi[k];
            for (o, v) in out.iter_mut().zip(self.node(node)) {
                *o += w * v;
            }
        }
    }

    fn check_grid(&self, g: &GridFunction) -> Result<()> {
        if self.grid != g.grid {
            return Err(Error::Mismatch(
                "grid functions live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// Nodal CSV with header `i1,...,in,blade_mask,value`, one row per node and blade.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = (1..=n).map(|i| format!("i{i},")).collect::<String>();
        out.push_str("blade_mask,value\n");
        for k in 0..self.grid.n_nodes() {
            let idx: String = self
                .grid
                .node_multi(k)
                .iter()
                .map(|i| format!("{i},"))
                .collect();
            for (b, v) in self.node(k).iter().enumerate() {
                out.push_str(&format!("{idx}{b},{v}\n"));
            }
        }
        out
    }

    /// Reads the format written by [`GridFunction::to_csv`]; missing entries are zero.
    pub fn from_csv(grid: &Grid, text: &str) -> Result<GridFunction> {
        let n = grid.n();
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .collect();
        let mut expect: Vec<String> = (1..=n).map(|i| format!("i{i}")).collect();
        expect.push("blade_mask".into());
        expect.push("value".into());
        if header != expect {
            return Err(Error::Config(format!(
                "nodal CSV header should be {}",
                expect.join(",")
            )));
        }
        let mut f = GridFunction::zeros(grid);
        let d = f.blades();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Config(format!("nodal CSV line {}: '{line}'", lineno + 2));
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != n + 2 {
                return Err(bad());
            }
            let mut multi = Vec::with_capacity(n);
            for (a, c) in cells[..n].iter().enumerate() {
                let i: usize = c.parse().map_err(|_| bad())?;
                if i > grid.res()[a] {
                    return Err(bad());
                }
                multi.push(i);
            }
            let b: usize = cells[n].parse().map_err(|_| bad())?;
            let v: f64 = cells[n + 1].parse().map_err(|_| bad())?;
            if b >= d || !v.is_finite() {
                return Err(bad());
            }
            let k = grid.node_flat(&multi);
            f.values[k * d + b] = v;
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Geometry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_grid(n: usize, res: usize) -> Grid {
        Grid::uniform(BoxDomain::unit(n, Geometry::Euclidean).unwrap(), res).unwrap()
    }

    #[test]
    fn numbering() {
        let g = Grid::new(BoxDomain::unit(2, Geometry::Euclidean).unwrap(), vec![2, 3]).unwrap();
        assert_eq!(g.n_nodes(), 12);
        assert_eq!(g.node_multi(5), vec![1, 1]);
        assert_eq!(g.node_flat(&[2, 3]), 11);
        assert_eq!(g.cell_corner_nodes(0), vec![0, 4, 1, 5]);
        assert_eq!(g.interior_nodes(), vec![5, 6]);
        assert!(Grid::new(BoxDomain::unit(2, Geometry::Euclidean).unwrap(), vec![1, 3]).is_err());
    }

    #[test]
    fn constants_and_linears() {
        let g = unit_grid(2, 4);
        let one = GridFunction::sample_poly(&PolyField::real(2, 1.0), &g).unwrap();
        assert!((one.norm_l2() - 1.0).abs() < 1e-14);
        assert!(one.seminorm_d().abs() < 1e-14);
        let x1 = GridFunction::sample_poly(&PolyField::coordinate(2, 1), &g).unwrap();
        assert!((x1.seminorm_d() - 1.0).abs() < 1e-14);
        assert!((x1.norm_l2() - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constant_inner_product() {
        let g = unit_grid(2, 3);
        let f = GridFunction::sample_poly(&PolyField::constant(Multivector::generator(2, 1)), &g)
            .unwrap();
        let h = GridFunction::sample_poly(&PolyField::constant(Multivector::generator(2, 2)), &g)
            .unwrap();
        let ip = f.inner_product_l2(&h).unwrap();
        assert!((ip.coeffs()[3] + 1.0).abs() < 1e-14);
        assert!(ip.coeffs()[..3].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn sampling_x1() {
        let g = Grid::uniform(BoxDomain::unit(1, Geometry::Euclidean).unwrap(), 2).unwrap();
        let f = GridFunction::sample_poly(&PolyField::coordinate(1, 1), &g).unwrap();
        let scalars: Vec<f64> = (0..3).map(|k| f.node(k)[0]).collect();
        assert_eq!(scalars, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let g = unit_grid(2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = GridFunction::random(&g, false, &mut rng);
        for k in 0..g.n_nodes() {
            assert_eq!(f.interpolate(&g.node_coords(k)).coeffs(), f.node(k));
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = unit_grid(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = GridFunction::random(&g, false, &mut rng);
        let text = f.to_csv();
        assert!(text.starts_with("i1,i2,blade_mask,value\n"));
        assert_eq!(GridFunction::from_csv(&g, &text).unwrap(), f);
        assert!(GridFunction::from_csv(&g, "x,y\n").is_err());
        assert!(GridFunction::from_csv(&g, "i1,i2,blade_mask,value\n9,0,0,1\n").is_err());
    }
}

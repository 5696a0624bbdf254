use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use rand::Rng;

use crate::clifford::Multivector;
use crate::error::{Error, Result};

pub const DEFAULT_DEGREE_CAP: u32 = 8;

/// Polynomial in x₁..xₙ with ℝₙ coefficients, Σ c_α x^α.
///
/// Exact zeros are never stored. Products that would exceed the degree cap fail.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    n: usize,
    cap: u32,
    terms: BTreeMap<Vec<u32>, Multivector>,
}

impl PolyField {
    pub fn zero(n: usize) -> PolyField {
        PolyField {
            n,
            cap: DEFAULT_DEGREE_CAP,
            terms: BTreeMap::new(),
        }
    }

    pub fn with_cap(mut self, cap: u32) -> PolyField {
        self.cap = cap;
        self
    }

    pub fn constant(c: Multivector) -> PolyField {
        let n = c.n();
        PolyField::monomial(&vec![0; n], c).expect("constant term")
    }

    /// Real scalar constant.
    pub fn real(n: usize, v: f64) -> PolyField {
        PolyField::constant(Multivector::scalar(n, v))
    }

    pub fn monomial(exps: &[u32], c: Multivector) -> Result<PolyField> {
        let mut p = PolyField::zero(c.n());
        if exps.len() != p.n {
            return Err(Error::Mismatch(format!(
                "{} exponents for n = {}",
                exps.len(),
                p.n
            )));
        }
        p.check_degree(exps.iter().sum())?;
        p.accumulate(exps.to_vec(), &c);
        Ok(p)
    }

    /// The scalar coordinate xᵢ, 1-based.
    pub fn coordinate(n: usize, axis: usize) -> PolyField {
        assert!(axis >= 1 && axis <= n, "axis {axis} outside 1..={n}");
        let mut e = vec![0; n];
        e[axis - 1] = 1;
        PolyField::monomial(&e, Multivector::scalar(n, 1.0)).unwrap()
    }

    /// x = Σ xᵢeᵢ.
    pub fn position(n: usize) -> PolyField {
        let mut p = PolyField::zero(n);
        for i in 1..=n {
            let mut e = vec![0; n];
            e[i - 1] = 1;
            p.accumulate(e, &Multivector::generator(n, i));
        }
        p
    }

    /// |x|² = Σ xᵢ².
    pub fn radius_sq(n: usize) -> PolyField {
        let mut p = PolyField::zero(n);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.accumulate(e, &Multivector::scalar(n, 1.0));
        }
        p
    }

    /// Every monomial of total degree ≤ `degree` with coefficients uniform in [−1, 1].
    pub fn random<R: Rng + ?Sized>(n: usize, degree: u32, rng: &mut R) -> PolyField {
        let mut p = PolyField::zero(n);
        for e in exponents_up_to(n, degree) {
            p.accumulate(e, &Multivector::random(n, rng));
        }
        p
    }

    /// Homogeneous of exactly `degree`.
    pub fn random_homogeneous<R: Rng + ?Sized>(n: usize, degree: u32, rng: &mut R) -> PolyField {
        let mut p = PolyField::zero(n);
        for e in exponents_up_to(n, degree) {
            if e.iter().sum::<u32>() == degree {
                p.accumulate(e, &Multivector::random(n, rng));
            }
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Multivector)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, exps: &[u32]) -> Multivector {
        self.terms
            .get(exps)
            .cloned()
            .unwrap_or_else(|| Multivector::zero(self.n))
    }

    /// Largest absolute coefficient over all monomials and blades.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn scale(&self, k: f64) -> PolyField {
        let mut out = PolyField::zero(self.n).with_cap(self.cap);
        for (e, c) in &self.terms {
            out.accumulate(e.clone(), &c.scale(k));
        }
        out
    }

    /// ∂F/∂x_axis, 1-based.
    pub fn derive(&self, axis: usize) -> Result<PolyField> {
        if axis == 0 || axis > self.n {
            return Err(Error::InvalidDimension(format!(
                "axis {axis} outside 1..={}",
                self.n
            )));
        }
        let k = axis - 1;
        let mut out = PolyField::zero(self.n).with_cap(self.cap);
        for (e, c) in &self.terms {
            if e[k] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[k] -= 1;
            out.accumulate(d, &c.scale(e[k] as f64));
        }
        Ok(out)
    }

    /// x^exps · F.
    pub fn coord_mul(&self, exps: &[u32]) -> Result<PolyField> {
        if exps.len() != self.n {
            return Err(Error::Mismatch(format!(
                "{} exponents for n = {}",
                exps.len(),
                self.n
            )));
        }
        let mut out = PolyField::zero(self.n).with_cap(self.cap);
        for (e, c) in &self.terms {
            let sum: Vec<u32> = e.iter().zip(exps).map(|(a, b)| a + b).collect();
            out.check_degree(sum.iter().sum())?;
            out.accumulate(sum, c);
        }
        Ok(out)
    }

    /// c · F for a constant multivector c.
    pub fn left_mul(&self, c: &Multivector) -> Result<PolyField> {
        let mut out = PolyField::zero(self.n).with_cap(self.cap);
        for (e, v) in &self.terms {
            out.accumulate(e.clone(), &c.mul(v)?);
        }
        Ok(out)
    }

    /// F · c for a constant multivector c.
    pub fn right_mul(&self, c: &Multivector) -> Result<PolyField> {
        let mut out = PolyField::zero(self.n).with_cap(self.cap);
        for (e, v) in &self.terms {
            out.accumulate(e.clone(), &v.mul(c)?);
        }
        Ok(out)
    }

    /// Pointwise Clifford product self · G.
    pub fn mul(&self, g: &PolyField) -> Result<PolyField> {
        self.check_same(g)?;
        let mut out = PolyField::zero(self.n).with_cap(self.cap);
        for (ea, a) in &self.terms {
            for (eb, b) in &g.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.check_degree(e.iter().sum())?;
                out.accumulate(e, &a.mul(b)?);
            }
        }
        Ok(out)
    }

    pub fn eval(&self, x: &[f64]) -> Multivector {
        assert_eq!(x.len(), self.n, "point dimension");
        let mut out = Multivector::zero(self.n);
        for (e, c) in &self.terms {
            let w: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
            out += &c.scale(w);
        }
        out
    }

    pub fn try_add(&self, g: &PolyField) -> Result<PolyField> {
        self.check_same(g)?;
        let mut out = self.clone();
        for (e, c) in &g.terms {
            out.check_degree(e.iter().sum())?;
            out.accumulate(e.clone(), c);
        }
        Ok(out)
    }

    fn accumulate(&mut self, e: Vec<u32>, c: &Multivector) {
        if c.is_zero() {
            return;
        }
        let slot = self
            .terms
            .entry(e.clone())
            .or_insert_with(|| Multivector::zero(c.n()));
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    fn check_degree(&self, degree: u32) -> Result<()> {
        if degree > self.cap {
            Err(Error::DegreeCap {
                degree,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    fn check_same(&self, g: &PolyField) -> Result<()> {
        if self.n != g.n {
            return Err(Error::Mismatch(format!("n = {} vs n = {}", self.n, g.n)));
        }
        Ok(())
    }
}

/// All exponent vectors of length n with total degree ≤ d, in lexicographic order.
pub(crate) fn exponents_up_to(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[k] = v;
            rec(k + 1, left - v, cur, out);
        }
        cur[k] = 0;
    }
    rec(0, d, &mut cur, &mut out);
    out
}

/// Panics on dimension or degree-cap violations; see [`PolyField::try_add`].
impl Add for &PolyField {
    type Output = PolyField;
    fn add(self, g: &PolyField) -> PolyField {
        self.try_add(g).expect("polynomial addition")
    }
}

impl Sub for &PolyField {
    type Output = PolyField;
    fn sub(self, g: &PolyField) -> PolyField {
        self.try_add(&g.scale(-1.0))
            .expect("polynomial subtraction")
    }
}

impl Neg for &PolyField {
    type Output = PolyField;
    fn neg(self) -> PolyField {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, i: usize) -> Multivector {
        Multivector::generator(n, i)
    }

    #[test]
    fn derivative_of_square() {
        let f = PolyField::monomial(&[2, 0], e(2, 2)).unwrap();
        let expect = PolyField::monomial(&[1, 0], e(2, 2).scale(2.0)).unwrap();
        assert_eq!(f.derive(1).unwrap(), expect);
        assert!(PolyField::coordinate(2, 1).derive(2).unwrap().is_zero());
        assert!(f.derive(3).is_err());
    }

    #[test]
    fn mixed_partials_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = PolyField::random(3, 4, &mut rng);
        let a = f.derive(1).unwrap().derive(2).unwrap();
        let b = f.derive(2).unwrap().derive(1).unwrap();
        assert!((&a - &b).max_abs_coeff() < 1e-12);
    }

    #[test]
    fn ring_operations() {
        let f = PolyField::monomial(&[1, 0], e(2, 1)).unwrap();
        let g = f.coord_mul(&[1, 0]).unwrap();
        assert_eq!(g, PolyField::monomial(&[2, 0], e(2, 1)).unwrap());
        let h = PolyField::monomial(&[0, 1], e(2, 1))
            .unwrap()
            .left_mul(&e(2, 1))
            .unwrap();
        assert_eq!(
            h,
            PolyField::monomial(&[0, 1], Multivector::scalar(2, -1.0)).unwrap()
        );
    }

    #[test]
    fn left_mul_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = PolyField::random(3, 2, &mut rng);
        let c = Multivector::random(3, &mut rng);
        let d = Multivector::random(3, &mut rng);
        let lhs = f.left_mul(&d).unwrap().left_mul(&c).unwrap();
        let rhs = f.left_mul(&(&c * &d)).unwrap();
        assert!((&lhs - &rhs).max_abs_coeff() < 1e-12);
    }

    #[test]
    fn degree_cap_enforced() {
        let f = PolyField::monomial(&[8, 0], Multivector::scalar(2, 1.0)).unwrap();
        assert!(matches!(f.coord_mul(&[1, 0]), Err(Error::DegreeCap { .. })));
        assert!(PolyField::monomial(&[9, 0], Multivector::scalar(2, 1.0)).is_err());
    }

    #[test]
    fn cancellation_removes_terms() {
        let f = PolyField::coordinate(2, 1);
        assert!((&f - &f).is_empty());
    }

    #[test]
    fn evaluation() {
        let f = &PolyField::coordinate(2, 1).coord_mul(&[0, 1]).unwrap() + &PolyField::position(2);
        let v = f.eval(&[2.0, 3.0]);
        assert_eq!(v.coeffs(), &[6.0, 2.0, 3.0, 0.0]);
        assert_eq!(
            PolyField::radius_sq(2).eval(&[3.0, 4.0]).scalar_part(),
            25.0
        );
    }

    #[test]
    fn exponent_enumeration() {
        assert_eq!(exponents_up_to(2, 2).len(), 6);
        assert_eq!(exponents_up_to(3, 3).len(), 20);
    }
}

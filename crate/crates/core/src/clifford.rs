//! The Clifford algebra ℝₙ with generators e₁..eₙ, eᵢ² = −1 and eᵢeⱼ = −eⱼeᵢ.
//!
//! Elements are stored densely as 2ⁿ coefficients indexed by a blade bitmask:
//! generator `i` sits at bit `i − 1`, so mask `0b101` is e₁e₃.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use faer::Mat;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported algebra dimension.
pub const MAX_DIM: usize = 12;

/// Largest blade mask covered by the precomputed sign table (n ≤ 8).
const TABLE_DIM: usize = 8;

/// A basis blade e_{i₁}…e_{i_r} with i₁ < … < i_r, encoded as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Blade(pub u32);

impl Blade {
    pub const SCALAR: Blade = Blade(0);

    /// Blade from 1-based generator indices. Repeats are rejected.
    pub fn from_indices(indices: &[usize]) -> Result<Blade> {
        let mut bits = 0u32;
        for &i in indices {
            if i == 0 || i > MAX_DIM {
                return Err(Error::InvalidDimension(format!("generator index {i}")));
            }
            let bit = 1u32 << (i - 1);
            if bits & bit != 0 {
                return Err(Error::InvalidDimension(format!("repeated generator {i}")));
            }
            bits |= bit;
        }
        Ok(Blade(bits))
    }

    /// The single generator eᵢ (1-based).
    pub fn generator(i: usize) -> Blade {
        Blade(1 << (i - 1))
    }

    pub fn grade(self) -> u32 {
        self.0.count_ones()
    }

    /// Sorted 1-based generator indices.
    pub fn indices(self) -> Vec<usize> {
        (0..32)
            .filter(|k| self.0 >> k & 1 == 1)
            .map(|k| k + 1)
            .collect()
    }

    pub fn fits(self, n: usize) -> bool {
        n >= 32 || self.0 >> n == 0
    }
}

impl fmt::Display for Blade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "1");
        }
        write!(f, "e")?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

fn sign_by_counting(a: u32, b: u32) -> f64 {
    let mut swaps = (a & b).count_ones();
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn sign_table() -> &'static [i8] {
    static TABLE: OnceLock<Vec<i8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let dim = 1usize << TABLE_DIM;
        let mut t = vec![0i8; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                t[a * dim + b] = sign_by_counting(a as u32, b as u32) as i8;
            }
        }
        t
    })
}

/// Sign of e_a·e_b; the product blade is always `a ^ b`.
#[inline]
pub(crate) fn blade_sign(a: u32, b: u32) -> f64 {
    const DIM: u32 = 1 << TABLE_DIM;
    if a < DIM && b < DIM {
        sign_table()[(a * DIM + b) as usize] as f64
    } else {
        sign_by_counting(a, b)
    }
}

/// e_a·e_b = sign·e_c, checked against the algebra dimension.
pub fn blade_mul(a: Blade, b: Blade, n: usize) -> Result<(f64, Blade)> {
    check_dim(n)?;
    if !a.fits(n) || !b.fits(n) {
        return Err(Error::InvalidDimension(format!(
            "blade {a} or {b} outside R_{n}"
        )));
    }
    Ok((blade_sign(a.0, b.0), Blade(a.0 ^ b.0)))
}

/// Sign picked up by a grade-r blade under conjugation: (−1)^{r(r+1)/2}.
#[inline]
pub(crate) fn conj_sign(mask: u32) -> f64 {
    match mask.count_ones() % 4 {
        0 | 3 => 1.0,
        _ => -1.0,
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        Err(Error::InvalidDimension(format!(
            "n = {n} (supported 1..={MAX_DIM})"
        )))
    } else {
        Ok(())
    }
}

/// Element of ℝₙ.
#[derive(Debug, Clone, PartialEq)]
pub struct Multivector {
    n: usize,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(n: usize) -> Multivector {
        assert!((1..=MAX_DIM).contains(&n), "n = {n} out of range");
        Multivector {
            n,
            coeffs: vec![0.0; 1 << n],
        }
    }

    pub fn scalar(n: usize, value: f64) -> Multivector {
        let mut x = Multivector::zero(n);
        x.coeffs[0] = value;
        x
    }

    pub fn basis(n: usize, blade: Blade) -> Result<Multivector> {
        check_dim(n)?;
        if !blade.fits(n) {
            return Err(Error::InvalidDimension(format!(
                "blade {blade} outside R_{n}"
            )));
        }
        let mut x = Multivector::zero(n);
        x.coeffs[blade.0 as usize] = 1.0;
        Ok(x)
    }

    /// The generator eᵢ, 1-based.
    pub fn generator(n: usize, i: usize) -> Multivector {
        assert!(i >= 1 && i <= n, "generator e{i} outside R_{n}");
        let mut x = Multivector::zero(n);
        x.coeffs[1 << (i - 1)] = 1.0;
        x
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Multivector> {
        check_dim(n)?;
        if coeffs.len() != 1 << n {
            return Err(Error::Mismatch(format!(
                "{} coefficients for R_{n} (expected {})",
                coeffs.len(),
                1usize << n
            )));
        }
        Ok(Multivector { n, coeffs })
    }

    /// Coefficients drawn uniformly from [−1, 1].
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Multivector {
        let mut x = Multivector::zero(n);
        for c in &mut x.coeffs {
            *c = rng.random_range(-1.0..=1.0);
        }
        x
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coefficient(&self, blade: Blade) -> Result<f64> {
        if !blade.fits(self.n) {
            return Err(Error::InvalidDimension(format!(
                "blade {blade} outside R_{}",
                self.n
            )));
        }
        Ok(self.coeffs[blade.0 as usize])
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Geometric product `self · y`.
    pub fn mul(&self, y: &Multivector) -> Result<Multivector> {
        self.check_same(y)?;
        let mut out = Multivector::zero(self.n);
        mul_into(&self.coeffs, &y.coeffs, &mut out.coeffs);
        Ok(out)
    }

    /// Product with `c` acting from the right, `self · c`.
    pub fn right_mul(&self, c: &Multivector) -> Result<Multivector> {
        self.mul(c)
    }

    pub fn conjugate(&self) -> Multivector {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(a, &c)| conj_sign(a as u32) * c)
            .collect();
        Multivector { n: self.n, coeffs }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, k: f64) -> Multivector {
        Multivector {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Real matrix L with vec(self·x) = L·vec(x), rows and columns indexed by blade mask.
    pub fn left_rep_matrix(&self) -> Mat<f64> {
        let dim = self.dim();
        let mut l = Mat::<f64>::zeros(dim, dim);
        for (c, &v) in self.coeffs.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for a in 0..dim {
                let row = c ^ a;
                l[(row, a)] += v * blade_sign(c as u32, a as u32);
            }
        }
        l
    }

    fn check_same(&self, y: &Multivector) -> Result<()> {
        if self.n != y.n {
            return Err(Error::Mismatch(format!("R_{} vs R_{}", self.n, y.n)));
        }
        Ok(())
    }
}

/// Accumulates x·y into `out` for equally sized dense coefficient slices.
pub(crate) fn mul_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    for (a, &xa) in x.iter().enumerate() {
        if xa == 0.0 {
            continue;
        }
        for (b, &yb) in y.iter().enumerate() {
            if yb == 0.0 {
                continue;
            }
            out[a ^ b] += blade_sign(a as u32, b as u32) * xa * yb;
        }
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            if a != 0 {
                write!(f, "*{}", Blade(a as u32))?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, y: &Multivector) -> Multivector {
        assert_eq!(self.n, y.n, "dimension mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Multivector { n: self.n, coeffs }
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, y: &Multivector) -> Multivector {
        assert_eq!(self.n, y.n, "dimension mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Multivector { n: self.n, coeffs }
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, y: &Multivector) {
        assert_eq!(self.n, y.n, "dimension mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&y.coeffs) {
            *a += b;
        }
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

/// Panics on dimension mismatch; use [`Multivector::mul`] for a checked product.
impl Mul for &Multivector {
    type Output = Multivector;
    fn mul(self, y: &Multivector) -> Multivector {
        Multivector::mul(self, y).expect("dimension mismatch")
    }
}

impl Mul<f64> for &Multivector {
    type Output = Multivector;
    fn mul(self, k: f64) -> Multivector {
        self.scale(k)
    }
}

/// Paravector s₀ + s₁e₁ + … + sₙeₙ.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Paravector {
    pub s0: f64,
    pub vec: Vec<f64>,
}

impl Paravector {
    pub fn new(s0: f64, vec: Vec<f64>) -> Result<Paravector> {
        check_dim(vec.len())?;
        Ok(Paravector { s0, vec })
    }

    /// s₀ + s₁e₁ in ℝₙ; every quantity used downstream depends only on s₀ and |s̲|.
    pub fn from_s0_s1(n: usize, s0: f64, s1: f64) -> Paravector {
        let mut vec = vec![0.0; n];
        vec[0] = s1;
        Paravector { s0, vec }
    }

    pub fn n(&self) -> usize {
        self.vec.len()
    }

    pub fn modulus_sq(&self) -> f64 {
        self.s0 * self.s0 + self.imag_sq()
    }

    pub fn modulus(&self) -> f64 {
        self.modulus_sq().sqrt()
    }

    /// |s̲|².
    pub fn imag_sq(&self) -> f64 {
        self.vec.iter().map(|v| v * v).sum()
    }

    pub fn conjugate(&self) -> Paravector {
        Paravector {
            s0: self.s0,
            vec: self.vec.iter().map(|v| -v).collect(),
        }
    }

    pub fn to_multivector(&self) -> Multivector {
        let mut x = Multivector::scalar(self.n(), self.s0);
        for (i, &v) in self.vec.iter().enumerate() {
            x.coeffs[1 << i] = v;
        }
        x
    }

    /// s² − 2s₀s + |s|², identically zero in exact arithmetic.
    pub fn q_self(&self) -> Multivector {
        let s = self.to_multivector();
        let mut q = &s * &s;
        q += &s.scale(-2.0 * self.s0);
        q.coeffs[0] += self.modulus_sq();
        q
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Paravector {
        Paravector {
            s0: rng.random_range(-1.0..=1.0),
            vec: (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(ix: &[usize]) -> Blade {
        Blade::from_indices(ix).unwrap()
    }

    #[test]
    fn generator_squares_to_minus_one() {
        assert_eq!(
            blade_mul(b(&[1]), b(&[1]), 1).unwrap(),
            (-1.0, Blade::SCALAR)
        );
    }

    #[test]
    fn generators_anticommute() {
        assert_eq!(blade_mul(b(&[1]), b(&[2]), 2).unwrap(), (1.0, b(&[1, 2])));
        assert_eq!(blade_mul(b(&[2]), b(&[1]), 2).unwrap(), (-1.0, b(&[1, 2])));
        assert_eq!(
            blade_mul(Blade::SCALAR, b(&[1, 2]), 2).unwrap(),
            (1.0, b(&[1, 2]))
        );
    }

    #[test]
    fn blade_out_of_range() {
        assert!(blade_mul(b(&[3]), b(&[1]), 2).is_err());
        assert!(Blade::from_indices(&[0]).is_err());
    }

    /// Sign by literally sorting the concatenated index word with adjacent swaps.
    fn brute_sign(a: &[usize], b: &[usize]) -> (f64, Vec<usize>) {
        let mut word: Vec<usize> = a.iter().chain(b).copied().collect();
        let mut sign = 1.0;
        loop {
            let mut changed = false;
            let mut i = 0;
            while i + 1 < word.len() {
                if word[i] > word[i + 1] {
                    word.swap(i, i + 1);
                    sign = -sign;
                    changed = true;
                } else if word[i] == word[i + 1] {
                    word.drain(i..i + 2);
                    sign = -sign;
                    changed = true;
                    continue;
                }
                i += 1;
            }
            if !changed {
                return (sign, word);
            }
        }
    }

    #[test]
    fn table_matches_brute_force() {
        for a in 0u32..64 {
            for c in 0u32..64 {
                let (s, w) = brute_sign(&Blade(a).indices(), &Blade(c).indices());
                assert_eq!(blade_sign(a, c), s, "{a} {c}");
                assert_eq!(Blade::from_indices(&w).unwrap(), Blade(a ^ c));
            }
        }
        // above the table range the counting path must agree too
        let (s, _) = brute_sign(&[3, 9, 11], &[1, 9, 12]);
        assert_eq!(blade_sign(b(&[3, 9, 11]).0, b(&[1, 9, 12]).0), s);
    }

    #[test]
    fn products() {
        let e1 = Multivector::generator(1, 1);
        assert_eq!(&e1 * &e1, Multivector::scalar(1, -1.0));
        let one = Multivector::scalar(1, 1.0);
        assert_eq!(&(&one + &e1) * &(&one - &e1), Multivector::scalar(1, 2.0));
        let e12 = Multivector::basis(3, b(&[1, 2])).unwrap();
        let e23 = Multivector::basis(3, b(&[2, 3])).unwrap();
        let e13 = Multivector::basis(3, b(&[1, 3])).unwrap();
        assert_eq!(&e12 * &e23, -&e13);
        assert!(e12.mul(&Multivector::zero(2)).is_err());
    }

    #[test]
    fn conjugation() {
        let e1 = Multivector::generator(2, 1);
        assert_eq!(e1.conjugate(), -&e1);
        let e12 = Multivector::basis(2, b(&[1, 2])).unwrap();
        assert_eq!(e12.conjugate(), -&e12);
        let x = &Multivector::scalar(2, 3.0) + &e12.scale(2.0);
        assert_eq!(
            x.conjugate(),
            &Multivector::scalar(2, 3.0) - &e12.scale(2.0)
        );
        assert_eq!(x.scalar_part(), 3.0);
        assert_eq!(e12.scalar_part(), 0.0);
        assert_eq!(x.coefficient(b(&[1, 2])).unwrap(), 2.0);
        assert_eq!(x.coefficient(Blade::SCALAR).unwrap(), 3.0);
    }

    #[test]
    fn norms() {
        let x = &Multivector::scalar(1, 1.0) + &Multivector::generator(1, 1);
        assert!((x.norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((&x.conjugate() * &x).scalar_part(), 2.0);
    }

    #[test]
    fn left_rep() {
        let l = Multivector::generator(1, 1).left_rep_matrix();
        assert_eq!(
            (l[(0, 0)], l[(0, 1)], l[(1, 0)], l[(1, 1)]),
            (0.0, -1.0, 1.0, 0.0)
        );
        let id = Multivector::scalar(3, 1.0).left_rep_matrix();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(id[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn right_multiplication() {
        let e1 = Multivector::generator(2, 1);
        let e2 = Multivector::generator(2, 2);
        assert_eq!(
            e1.right_mul(&e2).unwrap(),
            Multivector::basis(2, b(&[1, 2])).unwrap()
        );
        let one = Multivector::scalar(2, 1.0);
        assert_eq!(e1.right_mul(&one).unwrap(), e1);
        let c = Multivector::scalar(2, 2.5);
        let x = &e1 + &Multivector::basis(2, b(&[1, 2])).unwrap();
        assert_eq!(x.right_mul(&c).unwrap(), &c * &x);
    }

    #[test]
    fn paravector_quadratic_vanishes() {
        let s = Paravector::new(0.3, vec![1.0, -2.0, 0.5]).unwrap();
        assert!(s.q_self().max_abs() < 1e-14);
        assert_eq!(s.modulus_sq(), 0.09 + 1.0 + 4.0 + 0.25);
    }
}

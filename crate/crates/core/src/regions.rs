//! Closed-form admissibility conditions and coercivity constants in the s-plane.
//!
//! Every formula depends on s only through s₀ and |s̲|, so points are [`SPoint`]s.
//! Each kind yields a list of margins (left minus right side of every inequality)
//! and the coercivity constant; a point is admissible when all margins are positive.
//!
//! Constants of the form ½(a + b) − ½√((a − b)² + c²) are evaluated as
//! (4ab − c²) / (2(a + b + √…)) whenever a + b > 0, which avoids cancellation and
//! makes the sign of the constant agree with the sign of 4ab − c² exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clifford::Paravector;
use crate::error::{Error, Result};
use crate::operators::constants;

/// Relative tolerance of the |s|² = βₙ exclusion.
pub const BETA_CIRCLE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SPoint {
    pub s0: f64,
    /// |s̲| ≥ 0
    pub s1: f64,
}

impl SPoint {
    pub fn new(s0: f64, s1: f64) -> Result<SPoint> {
        if !(s0.is_finite() && s1.is_finite() && s1 >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "s = ({s0}, {s1}) needs finite s0 and s1 >= 0"
            )));
        }
        Ok(SPoint { s0, s1 })
    }

    pub fn modulus_sq(&self) -> f64 {
        self.s0 * self.s0 + self.s1 * self.s1
    }

    pub fn modulus(&self) -> f64 {
        self.s0.hypot(self.s1)
    }

    /// s₀ + s₁e₁ in ℝₙ.
    pub fn to_paravector(&self, n: usize) -> Paravector {
        Paravector::from_s0_s1(n, self.s0, self.s1)
    }
}

/// Which boundary-term coefficient enters the hyperbolic Robin constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobinCoeffMode {
    /// −½·2^{n/2−1}‖b‖‖τ‖², the constant as stated.
    Statement,
    /// −2^{n/2}‖b‖‖τ‖², the coefficient produced by the coercivity argument.
    #[default]
    Proof,
}

impl FromStr for RobinCoeffMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<RobinCoeffMode> {
        match s {
            "statement" => Ok(RobinCoeffMode::Statement),
            "proof" => Ok(RobinCoeffMode::Proof),
            _ => Err(Error::Config(format!("unknown robin_coeff_mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub n: usize,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub b_norm: f64,
    pub trace_norm: Option<f64>,
    pub c_p: Option<f64>,
    pub robin_coeff_mode: RobinCoeffMode,
}

impl RegionParams {
    pub fn new(n: usize, m: f64, big_m: f64) -> RegionParams {
        RegionParams {
            n,
            m,
            big_m,
            b_norm: 0.0,
            trace_norm: None,
            c_p: None,
            robin_coeff_mode: RobinCoeffMode::default(),
        }
    }

    pub fn with_robin(mut self, b_norm: f64, trace_norm: f64) -> RegionParams {
        self.b_norm = b_norm;
        self.trace_norm = Some(trace_norm);
        self
    }

    pub fn with_poincare(mut self, c_p: f64) -> RegionParams {
        self.c_p = Some(c_p);
        self
    }

    pub fn with_mode(mut self, mode: RobinCoeffMode) -> RegionParams {
        self.robin_coeff_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "n = {} (need n >= 2)",
                self.n
            )));
        }
        if !(self.m.is_finite() && self.big_m.is_finite() && 0.0 <= self.m && self.m < self.big_m) {
            return Err(Error::InvalidParams(format!(
                "need 0 <= m < M, got m = {}, M = {}",
                self.m, self.big_m
            )));
        }
        if !(self.b_norm.is_finite() && self.b_norm >= 0.0) {
            return Err(Error::InvalidParams(format!("b_norm = {}", self.b_norm)));
        }
        if let Some(t) = self.trace_norm {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParams(format!("trace_norm = {t}")));
            }
        }
        if let Some(c) = self.c_p {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParams(format!("c_p = {c}")));
            }
        }
        Ok(())
    }

    fn hyperbolic(&self) -> Result<()> {
        self.validate()?;
        if self.m <= 0.0 {
            return Err(Error::InvalidParams("hyperbolic kinds need m > 0".into()));
        }
        Ok(())
    }

    /// ‖b‖‖τ_D‖², requiring τ whenever b ≠ 0.
    fn boundary_weight(&self) -> Result<f64> {
        match self.trace_norm {
            Some(t) => Ok(self.b_norm * t * t),
            None if self.b_norm == 0.0 => Ok(0.0),
            None => Err(Error::InvalidParams("Robin kinds need trace_norm".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    HyperbolicDirichlet,
    HyperbolicPoincare,
    HyperbolicRobin,
    SphericalDirichlet,
    SphericalRobin,
}

impl RegionKind {
    pub const ALL: [RegionKind; 5] = [
        RegionKind::HyperbolicDirichlet,
        RegionKind::HyperbolicPoincare,
        RegionKind::HyperbolicRobin,
        RegionKind::SphericalDirichlet,
        RegionKind::SphericalRobin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionKind::HyperbolicDirichlet => "hyperbolic_dirichlet",
            RegionKind::HyperbolicPoincare => "hyperbolic_poincare",
            RegionKind::HyperbolicRobin => "hyperbolic_robin",
            RegionKind::SphericalDirichlet => "spherical_dirichlet",
            RegionKind::SphericalRobin => "spherical_robin",
        }
    }

    pub fn n_conditions(self) -> usize {
        match self {
            RegionKind::HyperbolicPoincare => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<RegionKind> {
        RegionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown region kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub admissible: bool,
    pub constant: f64,
    pub conditions: Vec<Condition>,
    /// Set when s lies on the circle |s|² = βₙ that the plain hyperbolic Dirichlet kind excludes.
    pub excluded: bool,
}

impl RegionVerdict {
    fn from_margins(constant: f64, margins: &[(&str, f64)], excluded: bool) -> RegionVerdict {
        let conditions: Vec<Condition> = margins
            .iter()
            .map(|&(name, margin)| Condition {
                name: name.to_string(),
                margin,
            })
            .collect();
        let admissible = !excluded && conditions.iter().all(|c| c.margin > 0.0);
        RegionVerdict {
            admissible,
            constant,
            conditions,
            excluded,
        }
    }

    pub fn margins(&self) -> Vec<f64> {
        self.conditions.iter().map(|c| c.margin).collect()
    }
}

/// ½(a + b) − ½√((a − b)² + c²).
fn split_constant(a: f64, b: f64, c_sq: f64) -> f64 {
    let r = ((a - b) * (a - b) + c_sq).sqrt();
    let sum = a + b;
    if sum > 0.0 {
        (4.0 * a * b - c_sq) / (2.0 * (sum + r))
    } else {
        0.5 * (sum - r)
    }
}

/// Shared hyperbolic quantities: X = ||s|² − β| − α√(1+4s₀²) and B = M(2(1+α) + √n√(1+4s₀²)).
struct HyperbolicTerms {
    beta: f64,
    x: f64,
    b: f64,
}

fn hyperbolic_terms(p: &RegionParams, s: SPoint) -> Result<HyperbolicTerms> {
    let (alpha, beta) = constants(p.n)?;
    let root = (1.0 + 4.0 * s.s0 * s.s0).sqrt();
    let x = (s.modulus_sq() - beta).abs() - alpha * root;
    let b = p.big_m * (2.0 * (1.0 + alpha) + (p.n as f64).sqrt() * root);
    Ok(HyperbolicTerms { beta, x, b })
}

fn on_beta_circle(s: SPoint, beta: f64) -> bool {
    (s.modulus_sq() - beta).abs() <= BETA_CIRCLE_RTOL * beta
}

/// Dirichlet problem for 𝒟_H: the two inequalities and K_{n,m,M}(s).
pub fn hyperbolic_dirichlet(p: &RegionParams, s: SPoint) -> Result<RegionVerdict> {
    p.hyperbolic()?;
    let t = hyperbolic_terms(p, s)?;
    let m2 = p.m * p.m;
    let first = t.x + m2;
    let second = 4.0 * m2 * t.x - t.b * t.b;
    let k = split_constant(t.x, m2, t.b * t.b);
    Ok(RegionVerdict::from_margins(
        k,
        &[("condition_1", first), ("condition_2", second)],
        on_beta_circle(s, t.beta),
    ))
}

/// The Poincaré variant: K_P = m² − C_P·B − |X|·C_P², admissible iff K_P > 0.
pub fn hyperbolic_dirichlet_poincare(p: &RegionParams, s: SPoint) -> Result<RegionVerdict> {
    p.hyperbolic()?;
    let c_p = p
        .c_p
        .ok_or_else(|| Error::InvalidParams("the Poincaré kind needs c_p".into()))?;
    let t = hyperbolic_terms(p, s)?;
    let k = p.m * p.m - c_p * t.b - t.x.abs() * c_p * c_p;
    Ok(RegionVerdict::from_margins(k, &[("k_p", k)], false))
}

/// Λ_{n,m,b}(p) = p·m² − 2^{n/2−1}‖b‖‖τ_D‖².
pub fn lambda_nmb(params: &RegionParams, p: f64) -> Result<f64> {
    params.validate()?;
    Ok(p * params.m * params.m
        - 2f64.powf(params.n as f64 / 2.0 - 1.0) * params.boundary_weight()?)
}

/// Effective boundary shift c with K^R = ½(X + m² − c) − ½√((X − m²)² + B²).
fn hyperbolic_robin_shift(p: &RegionParams) -> Result<f64> {
    let w = p.boundary_weight()?;
    let n = p.n as f64;
    Ok(match p.robin_coeff_mode {
        RobinCoeffMode::Statement => 2f64.powf(n / 2.0 - 1.0) * w,
        RobinCoeffMode::Proof => 2f64.powf(n / 2.0 + 1.0) * w,
    })
}

/// Robin problem for 𝒟_H. Margins are positivity of X + m² − c and of
/// (2X − c)(2m² − c) − B², which in statement mode are the stated inequalities.
pub fn hyperbolic_robin(p: &RegionParams, s: SPoint) -> Result<RegionVerdict> {
    p.hyperbolic()?;
    let c = hyperbolic_robin_shift(p)?;
    let t = hyperbolic_terms(p, s)?;
    let m2 = p.m * p.m;
    let first = t.x + m2 - c;
    let second = (2.0 * t.x - c) * (2.0 * m2 - c) - t.b * t.b;
    let k = split_constant(t.x - 0.5 * c, m2 - 0.5 * c, t.b * t.b);
    Ok(RegionVerdict::from_margins(
        k,
        &[("condition_1", first), ("condition_2", second)],
        false,
    ))
}

/// P = |s|² + n² − 2|s₀|nM, a = (1+m²)², A = √n(1+M²)((3+n)M + |s₀|).
struct SphericalTerms {
    p: f64,
    a: f64,
    big_a: f64,
}

fn spherical_terms(p: &RegionParams, s: SPoint) -> SphericalTerms {
    let n = p.n as f64;
    let s0 = s.s0.abs();
    let big_m = p.big_m;
    SphericalTerms {
        p: s.modulus_sq() + n * n - 2.0 * s0 * n * big_m,
        a: (1.0 + p.m * p.m).powi(2),
        big_a: n.sqrt() * (1.0 + big_m * big_m) * ((3.0 + n) * big_m + s0),
    }
}

/// Dirichlet problem for 𝒟_S: margins P + a and P·a − A², constant H_{n,m,M}(s).
pub fn spherical_dirichlet(p: &RegionParams, s: SPoint) -> Result<RegionVerdict> {
    p.validate()?;
    let t = spherical_terms(p, s);
    let first = t.p + t.a;
    let second = t.p * t.a - t.big_a * t.big_a;
    let h = split_constant(t.p, t.a, 4.0 * t.big_a * t.big_a);
    Ok(RegionVerdict::from_margins(
        h,
        &[("condition_1", first), ("condition_2", second)],
        false,
    ))
}

/// Robin problem for 𝒟_S with c' = 2^{n/2}‖b‖‖τ‖²: margins P + a − 2c' and
/// (P − c')(a − c') − A², constant H^R = H − c'.
pub fn spherical_robin(p: &RegionParams, s: SPoint) -> Result<RegionVerdict> {
    p.validate()?;
    let c = 2f64.powf(p.n as f64 / 2.0) * p.boundary_weight()?;
    let t = spherical_terms(p, s);
    let first = t.p + t.a - 2.0 * c;
    let second = (t.p - c) * (t.a - c) - t.big_a * t.big_a;
    let h = split_constant(t.p - c, t.a - c, 4.0 * t.big_a * t.big_a);
    Ok(RegionVerdict::from_margins(
        h,
        &[("condition_1", first), ("condition_2", second)],
        false,
    ))
}

pub fn evaluate(kind: RegionKind, p: &RegionParams, s: SPoint) -> Result<RegionVerdict> {
    match kind {
        RegionKind::HyperbolicDirichlet => hyperbolic_dirichlet(p, s),
        RegionKind::HyperbolicPoincare => hyperbolic_dirichlet_poincare(p, s),
        RegionKind::HyperbolicRobin => hyperbolic_robin(p, s),
        RegionKind::SphericalDirichlet => spherical_dirichlet(p, s),
        RegionKind::SphericalRobin => spherical_robin(p, s),
    }
}

/// (|s| + αₙ + M√n)/K(s), the bound on the right S-resolvent of 𝒟_H.
pub fn s_resolvent_bound_hyperbolic(p: &RegionParams, s: SPoint) -> Result<f64> {
    let v = hyperbolic_dirichlet(p, s)?;
    if !v.admissible {
        return Err(Error::NotAdmissible { s0: s.s0, s1: s.s1 });
    }
    let (alpha, _) = constants(p.n)?;
    Ok((s.modulus() + alpha + p.big_m * (p.n as f64).sqrt()) / v.constant)
}

/// Dense evaluation of one kind over a rectangle of the (s₀, |s̲|) half-plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionMap {
    pub kind: RegionKind,
    pub params: RegionParams,
    pub s0_values: Vec<f64>,
    pub s1_values: Vec<f64>,
    /// Row-major with s₀ outer: entry `i * s1_values.len() + j`.
    pub verdicts: Vec<RegionVerdict>,
    /// Points within half a cell diagonal of |s|² = βₙ (hyperbolic Dirichlet only).
    pub near_excluded_circle: Vec<bool>,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

pub fn region_sample(
    kind: RegionKind,
    params: &RegionParams,
    s0_range: (f64, f64),
    s1_range: (f64, f64),
    res: (usize, usize),
) -> Result<RegionMap> {
    if res.0 < 2 || res.1 < 2 {
        return Err(Error::InvalidParams(format!(
            "sample resolution {res:?} (need >= 2 per axis)"
        )));
    }
    for (lo, hi) in [s0_range, s1_range] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParams(format!("empty range ({lo}, {hi})")));
        }
    }
    if s1_range.0 < 0.0 {
        return Err(Error::InvalidParams(
            "s1 is a modulus; the range must be nonnegative".into(),
        ));
    }
    let s0_values = linspace(s0_range.0, s0_range.1, res.0);
    let s1_values = linspace(s1_range.0, s1_range.1, res.1);
    let half_diag = 0.5 * (s0_values[1] - s0_values[0]).hypot(s1_values[1] - s1_values[0]);
    let beta = constants(params.n)?.1;
    let mut verdicts = Vec::with_capacity(res.0 * res.1);
    let mut near = Vec::with_capacity(res.0 * res.1);
    for &s0 in &s0_values {
        for &s1 in &s1_values {
            let s = SPoint { s0, s1 };
            verdicts.push(evaluate(kind, params, s)?);
            near.push(
                kind == RegionKind::HyperbolicDirichlet
                    && (s.modulus() - beta.sqrt()).abs() <= half_diag,
            );
        }
    }
    Ok(RegionMap {
        kind,
        params: params.clone(),
        s0_values,
        s1_values,
        verdicts,
        near_excluded_circle: near,
    })
}

impl RegionMap {
    pub fn point(&self, i: usize, j: usize) -> (SPoint, &RegionVerdict) {
        let s = SPoint {
            s0: self.s0_values[i],
            s1: self.s1_values[j],
        };
        (s, &self.verdicts[i * self.s1_values.len() + j])
    }

    pub fn admissible_fraction(&self) -> f64 {
        self.verdicts.iter().filter(|v| v.admissible).count() as f64 / self.verdicts.len() as f64
    }

    /// (min, max) of the constant over admissible points.
    pub fn admissible_constant_range(&self) -> Option<(f64, f64)> {
        self.verdicts
            .iter()
            .filter(|v| v.admissible)
            .map(|v| v.constant)
            .fold(None, |acc, k| match acc {
                None => Some((k, k)),
                Some((lo, hi)) => Some((lo.min(k), hi.max(k))),
            })
    }

    pub fn to_csv(&self) -> String {
        let width = self.kind.n_conditions();
        let mut out = String::from("s0,s1,admissible,constant");
        for k in 1..=width {
            out.push_str(&format!(",margin_{k}"));
        }
        out.push('\n');
        for i in 0..self.s0_values.len() {
            for j in 0..self.s1_values.len() {
                let (s, v) = self.point(i, j);
                out.push_str(&format!(
                    "{},{},{},{}",
                    s.s0, s.s1, v.admissible as u8, v.constant
                ));
                for c in &v.conditions {
                    out.push_str(&format!(",{}", c.margin));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Geometry of the spherical Dirichlet region in the (s₀, |s̲|) plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphericalGeometry {
    /// n²(M²−1) − (1+m²)², from completing the square in the first condition.
    pub radius_sq_derived: f64,
    /// n²(M²−1) + (1+m²)², the alternative value with the opposite sign.
    pub radius_sq_alternative: f64,
    /// True when the first condition excludes two discs centred at (±nM, 0).
    pub two_circle_case: bool,
    pub circle_center_abs_s0: f64,
    /// nM((3+n)(1+M²)² + (1+m²)²)/(n(1+M²)² − (1+m²)²); absent when the denominator vanishes.
    pub hyperbola_center: Option<f64>,
    pub check: ImplicationCheck,
}

/// Brute-force check that the second condition implies the first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImplicationCheck {
    pub s0_range: (f64, f64),
    pub s1_range: (f64, f64),
    pub res: usize,
    pub points_satisfying_second: usize,
    /// Points satisfying the second condition but violating the first.
    pub violations: usize,
}

pub fn classify_spherical_geometry(p: &RegionParams, res: usize) -> Result<SphericalGeometry> {
    p.validate()?;
    if res < 2 {
        return Err(Error::InvalidParams(format!("check resolution {res}")));
    }
    let n = p.n as f64;
    let big_m = p.big_m;
    let a = (1.0 + p.m * p.m).powi(2);
    let w = (1.0 + big_m * big_m).powi(2);
    let radius_sq = n * n * (big_m * big_m - 1.0) - a;
    let denom = n * w - a;
    let hyperbola_center = if denom.abs() > 1e-12 * (n * w + a) {
        Some(n * big_m * ((3.0 + n) * w + a) / denom)
    } else {
        None
    };
    let axis_threshold = ((n * (3.0 + n).powi(2) * big_m * big_m * w - n * n * a) / a)
        .max(0.0)
        .sqrt();
    let half_width = 2.0 * (n * big_m + radius_sq.max(0.0).sqrt()).max(axis_threshold);
    let s0_range = (-half_width, half_width);
    let s1_range = (0.0, half_width);
    let map = region_sample(
        RegionKind::SphericalDirichlet,
        p,
        s0_range,
        s1_range,
        (res, res),
    )?;
    let mut satisfying = 0;
    let mut violations = 0;
    for v in &map.verdicts {
        if v.conditions[1].margin > 0.0 {
            satisfying += 1;
            if v.conditions[0].margin <= 0.0 {
                violations += 1;
            }
        }
    }
    Ok(SphericalGeometry {
        radius_sq_derived: radius_sq,
        radius_sq_alternative: n * n * (big_m * big_m - 1.0) + a,
        two_circle_case: radius_sq > 0.0,
        circle_center_abs_s0: n * big_m,
        hyperbola_center,
        check: ImplicationCheck {
            s0_range,
            s1_range,
            res,
            points_satisfying_second: satisfying,
            violations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyp() -> RegionParams {
        RegionParams::new(2, 1.0, 2.0)
    }

    /// Second hyperbolic inequality exactly as printed, LHS − RHS.
    fn printed_second(p: &RegionParams, s: SPoint) -> f64 {
        let (alpha, beta) = constants(p.n).unwrap();
        let n = p.n as f64;
        let (m, big_m) = (p.m, p.big_m);
        let root = (1.0 + 4.0 * s.s0 * s.s0).sqrt();
        4.0 * m * m * (s.modulus_sq() - beta).abs()
            - 4.0 * n * big_m * big_m * s.s0 * s.s0
            - 4.0 * (m * m * alpha + big_m * big_m * (1.0 + alpha) * n.sqrt()) * root
            - big_m * big_m * (4.0 * (1.0 + alpha).powi(2) + n)
    }

    fn direct_k(p: &RegionParams, s: SPoint) -> f64 {
        let (alpha, beta) = constants(p.n).unwrap();
        let n = p.n as f64;
        let root = (1.0 + 4.0 * s.s0 * s.s0).sqrt();
        let x = (s.modulus_sq() - beta).abs() - alpha * root;
        let m2 = p.m * p.m;
        let b = p.big_m * (2.0 * (1.0 + alpha) + n.sqrt() * root);
        0.5 * (x + m2) - 0.5 * ((x - m2).powi(2) + b * b).sqrt()
    }

    #[test]
    fn hyperbolic_reference_point() {
        let s = SPoint::new(0.0, 10.0).unwrap();
        let v = hyperbolic_dirichlet(&hyp(), s).unwrap();
        assert!(v.admissible);
        assert!((v.conditions[0].margin - 99.75).abs() < 1e-12);
        assert!((v.conditions[1].margin - printed_second(&hyp(), s)).abs() < 1e-10);
        assert!(
            (v.conditions[1].margin - (395.0 - (2.0 * (3.0 + 2f64.sqrt())).powi(2))).abs() < 1e-9
        );
        assert!((v.constant - direct_k(&hyp(), s)).abs() < 1e-12);
        assert!((v.constant - 0.80).abs() < 0.01);
    }

    #[test]
    fn hyperbolic_origin_inadmissible() {
        let v = hyperbolic_dirichlet(&hyp(), SPoint::new(0.0, 0.0).unwrap()).unwrap();
        assert!((v.conditions[0].margin - 1.25).abs() < 1e-12);
        assert!(v.conditions[1].margin < 0.0);
        assert!(!v.admissible);
    }

    #[test]
    fn beta_circle_excluded() {
        let p = RegionParams::new(3, 5.0, 5.5);
        let s = SPoint::new(0.0, 2f64.sqrt()).unwrap();
        let v = hyperbolic_dirichlet(&p, s).unwrap();
        assert!(v.excluded && !v.admissible);
        assert!(hyperbolic_dirichlet(&RegionParams::new(2, 0.0, 1.0), s).is_err());
    }

    #[test]
    fn poincare_values() {
        let p = hyp().with_poincare(0.1);
        let s = SPoint::new(0.0, 10.0).unwrap();
        let v = hyperbolic_dirichlet_poincare(&p, s).unwrap();
        let root: f64 = 1.0;
        let x = (100.0f64 - 0.75).abs() - 0.5 * root;
        let expect = 1.0 - 0.1 * 2.0 * (3.0 + 2f64.sqrt() * root) - x.abs() * 0.01;
        assert!((v.constant - expect).abs() < 1e-12);
        assert!(!v.admissible);
        // on the excluded circle the Poincaré constant is still defined
        let on = SPoint::new(0.0, 0.75f64.sqrt()).unwrap();
        let v = hyperbolic_dirichlet_poincare(&hyp().with_poincare(1e-3), on).unwrap();
        let expect = 1.0 - 1e-3 * 2.0 * (3.0 + 2f64.sqrt()) - 0.5 * 1e-6;
        assert!((v.constant - expect).abs() < 1e-12 && v.admissible);
        assert!(hyperbolic_dirichlet_poincare(&hyp(), on).is_err());
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_nmb(&hyp(), 3.0).unwrap(), 3.0);
        let p = hyp().with_robin(1.0, 1.0);
        assert_eq!(lambda_nmb(&p, 2.0).unwrap(), 1.0);
        assert_eq!(
            lambda_nmb(&p, 2.0).unwrap() - lambda_nmb(&p, 1.0).unwrap(),
            1.0
        );
    }

    /// Robin inequalities exactly as printed, LHS − RHS.
    fn printed_robin(p: &RegionParams, s: SPoint) -> (f64, f64) {
        let (alpha, beta) = constants(p.n).unwrap();
        let n = p.n as f64;
        let (m, big_m) = (p.m, p.big_m);
        let tau = p.trace_norm.unwrap();
        let c = 2f64.powf(n / 2.0 - 1.0) * p.b_norm * tau * tau;
        let lam = |q: f64| q * m * m - c;
        let root = (1.0 + 4.0 * s.s0 * s.s0).sqrt();
        let ab = (s.modulus_sq() - beta).abs();
        let first = ab - alpha * root + m * m - c;
        let lhs = 2.0 * lam(2.0) * ab
            - 4.0 * n * big_m * big_m * s.s0 * s.s0
            - 2.0 * (alpha * lam(2.0) + 2.0 * big_m * big_m * (1.0 + alpha) * n.sqrt()) * root;
        let rhs = m.powi(4) + big_m * big_m * (n + 4.0 * (1.0 + alpha).powi(2)) - lam(1.0).powi(2);
        (first, lhs - rhs)
    }

    #[test]
    fn robin_statement_matches_printed() {
        let p = RegionParams::new(3, 1.5, 2.5)
            .with_robin(0.3, 1.2)
            .with_mode(RobinCoeffMode::Statement);
        for &(s0, s1) in &[(0.0, 10.0), (1.0, 20.0), (-3.0, 5.0), (0.2, 0.1)] {
            let s = SPoint::new(s0, s1).unwrap();
            let v = hyperbolic_robin(&p, s).unwrap();
            let (a, b) = printed_robin(&p, s);
            assert!((v.conditions[0].margin - a).abs() < 1e-9 * (1.0 + a.abs()));
            assert!((v.conditions[1].margin - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn robin_proof_mode_shift() {
        let p = hyp().with_robin(1.0, 1.0);
        let s = SPoint::new(0.0, 10.0).unwrap();
        let kr = hyperbolic_robin(&p, s).unwrap().constant;
        let k = hyperbolic_dirichlet(&hyp(), s).unwrap().constant;
        assert!((kr - (k - 2.0)).abs() < 1e-12);
        let zero = hyp().with_robin(0.0, 1.0);
        for mode in [RobinCoeffMode::Statement, RobinCoeffMode::Proof] {
            let v = hyperbolic_robin(&zero.clone().with_mode(mode), s).unwrap();
            assert_eq!(v.constant, k);
        }
        assert!(hyperbolic_robin(
            &RegionParams {
                b_norm: 1.0,
                ..hyp()
            },
            s
        )
        .is_err());
    }

    #[test]
    fn robin_monotone_in_b() {
        let s = SPoint::new(0.5, 12.0).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..10 {
            let p = hyp().with_robin(0.1 * k as f64, 1.0);
            let kr = hyperbolic_robin(&p, s).unwrap().constant;
            assert!(kr <= last);
            last = kr;
        }
    }

    fn sph() -> RegionParams {
        RegionParams::new(2, 0.0, 2f64.sqrt())
    }

    #[test]
    fn spherical_axis_threshold() {
        let v = spherical_dirichlet(&sph(), SPoint::new(0.0, 30.0).unwrap()).unwrap();
        assert!((v.conditions[1].margin - (900.0 - 896.0)).abs() < 1e-9);
        assert!(v.admissible && v.constant > 0.0);
        let v = spherical_dirichlet(&sph(), SPoint::new(0.0, 29.0).unwrap()).unwrap();
        assert!((v.conditions[1].margin - (841.0 - 896.0)).abs() < 1e-9);
        assert!(!v.admissible);
    }

    /// Second spherical inequality as printed, LHS − RHS.
    fn printed_spherical(p: &RegionParams, s: SPoint) -> f64 {
        let n = p.n as f64;
        let (m, big_m) = (p.m, p.big_m);
        let a = (1.0 + m * m).powi(2);
        let w = (1.0 + big_m * big_m).powi(2);
        s.s1 * s.s1 * a
            - s.s0 * s.s0 * (n * w - a)
            - 2.0 * n * big_m * ((3.0 + n) * w + a) * s.s0.abs()
            - (n * (3.0 + n).powi(2) * big_m * big_m * w - n * n * a)
    }

    #[test]
    fn spherical_matches_printed() {
        let p = RegionParams::new(3, 0.1, 2.0);
        for &(s0, s1) in &[(0.0, 120.0), (5.0, 200.0), (-40.0, 300.0), (1.0, 1.0)] {
            let s = SPoint::new(s0, s1).unwrap();
            let v = spherical_dirichlet(&p, s).unwrap();
            let expect = printed_spherical(&p, s);
            assert!((v.conditions[1].margin - expect).abs() < 1e-9 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn spherical_parity() {
        let p = RegionParams::new(2, 0.3, 1.7);
        for &(s0, s1) in &[(3.0, 40.0), (10.0, 70.0)] {
            let a = spherical_dirichlet(&p, SPoint::new(s0, s1).unwrap()).unwrap();
            let b = spherical_dirichlet(&p, SPoint::new(-s0, s1).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    /// Robin spherical inequalities as printed.
    fn printed_spherical_robin(p: &RegionParams, s: SPoint) -> (f64, f64, f64) {
        let n = p.n as f64;
        let (m, big_m) = (p.m, p.big_m);
        let tau = p.trace_norm.unwrap();
        let c = 2f64.powf(n / 2.0) * p.b_norm * tau * tau;
        let a = (1.0 + m * m).powi(2);
        let w = (1.0 + big_m * big_m).powi(2);
        let s0 = s.s0.abs();
        let pp = s.modulus_sq() + n * n - 2.0 * s0 * n * big_m;
        let first = pp + a - 2f64.powf(n / 2.0 + 1.0) * p.b_norm * tau * tau;
        let lhs = s.modulus_sq() * (a - c)
            - n * w * s0 * s0
            - 2.0 * s0 * n * big_m * (a + (3.0 + n) * w - c);
        let rhs = n * w * (3.0 + n).powi(2) * big_m * big_m + a * c - n * n * (a - c) - c * c;
        let big_a = n.sqrt() * (1.0 + big_m * big_m) * ((3.0 + n) * big_m + s0);
        let h = 0.5 * pp + 0.5 * a - c - 0.5 * ((pp - a).powi(2) + 4.0 * big_a * big_a).sqrt();
        (first, lhs - rhs, h)
    }

    #[test]
    fn spherical_robin_matches_printed() {
        let p = sph().with_robin(0.5, 1.0);
        let s = SPoint::new(0.0, 40.0).unwrap();
        let v = spherical_robin(&p, s).unwrap();
        let (a, b, h) = printed_spherical_robin(&p, s);
        assert!((v.conditions[0].margin - a).abs() < 1e-9 * (1.0 + a.abs()));
        assert!((v.conditions[1].margin - b).abs() < 1e-9 * (1.0 + b.abs()));
        assert!((v.constant - h).abs() < 1e-9);
        let hd = spherical_dirichlet(&sph(), s).unwrap().constant;
        assert!((v.constant - (hd - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn spherical_robin_large_boundary_weight() {
        // (1+m²)² − 2^{n/2}‖b‖‖τ‖² ≤ 0 leaves no admissible point far out
        let p = sph().with_robin(1.0, 1.0);
        for &(s0, s1) in &[(0.0, 1e3), (0.0, 1e5), (50.0, 1e4)] {
            assert!(
                !spherical_robin(&p, SPoint::new(s0, s1).unwrap())
                    .unwrap()
                    .admissible
            );
        }
    }

    #[test]
    fn resolvent_bound() {
        let s = SPoint::new(0.0, 10.0).unwrap();
        let k = hyperbolic_dirichlet(&hyp(), s).unwrap().constant;
        let b = s_resolvent_bound_hyperbolic(&hyp(), s).unwrap();
        assert!((b - (10.5 + 2.0 * 2f64.sqrt()) / k).abs() < 1e-12);
        assert!(s_resolvent_bound_hyperbolic(&hyp(), SPoint::new(0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn geometry_cases() {
        let g = classify_spherical_geometry(&RegionParams::new(3, 0.1, 2.0), 50).unwrap();
        assert!(g.two_circle_case);
        assert!((g.radius_sq_derived - (27.0 - 1.0201)).abs() < 1e-12);
        assert_eq!(g.circle_center_abs_s0, 6.0);
        assert_eq!(g.check.violations, 0);
        let g = classify_spherical_geometry(&RegionParams::new(2, 1.0, 1.01), 20).unwrap();
        assert!(!g.two_circle_case);
    }

    #[test]
    fn sampling_shape_and_csv() {
        let map = region_sample(
            RegionKind::HyperbolicDirichlet,
            &hyp(),
            (-5.0, 5.0),
            (0.0, 15.0),
            (3, 4),
        )
        .unwrap();
        assert_eq!(map.verdicts.len(), 12);
        let csv = map.to_csv();
        assert!(csv.starts_with("s0,s1,admissible,constant,margin_1,margin_2\n"));
        assert_eq!(csv.lines().count(), 13);
        assert!(region_sample(
            RegionKind::HyperbolicDirichlet,
            &hyp(),
            (1.0, 1.0),
            (0.0, 1.0),
            (3, 3)
        )
        .is_err());
        assert!(region_sample(
            RegionKind::HyperbolicDirichlet,
            &hyp(),
            (0.0, 1.0),
            (0.0, 1.0),
            (1, 3)
        )
        .is_err());
    }
}

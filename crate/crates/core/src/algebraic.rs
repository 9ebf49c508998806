//! Exact arithmetic over `Q` and real quadratic fields `Q[√d]`: heights,
//! splitting-rate bounds, exact product enumeration for random-walk entropy,
//! ping-pong certification and rational rotation angles.

use std::collections::HashMap;
use std::fmt;
use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::MeasureSpec;
use crate::sl2::{angle_diff, reduce_angle, GroupElement};

/// `a + b√d` with `d` square-free. Rationals are stored with `b = 0, d = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactScalar {
    pub a: BigRational,
    pub b: BigRational,
    pub d: u64,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Splits `n = s² · f` with `f` square-free and returns `(s, f)`.
fn square_free_part(mut n: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut f = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            f *= p;
        }
        p += 1;
    }
    (s, f * n)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut p = 3u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return false;
        }
        p += 2;
    }
    true
}

fn big_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

impl ExactScalar {
    pub fn rational(q: BigRational) -> Self {
        ExactScalar { a: q, b: BigRational::zero(), d: 1 }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::rational(rat(n, d))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    /// `a + b√d`, normalizing `d` to its square-free part.
    pub fn quadratic(a: BigRational, b: BigRational, d: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::DomainError("sqrt(0) is not a field generator".into()));
        }
        let (s, f) = square_free_part(d);
        let b = b * BigRational::from_integer(BigInt::from(s));
        Ok(Self::canonical(a, b, f))
    }

    fn canonical(a: BigRational, b: BigRational, d: u64) -> Self {
        if b.is_zero() || d == 1 {
            let a = if d == 1 { a + b } else { a };
            ExactScalar { a, b: BigRational::zero(), d: 1 }
        } else {
            ExactScalar { a, b, d }
        }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Field generator, `1` for rationals.
    pub fn field(&self) -> u64 {
        self.d
    }

    fn common_field(&self, o: &ExactScalar) -> Result<u64> {
        match (self.d, o.d) {
            (1, e) | (e, 1) => Ok(e),
            (x, y) if x == y => Ok(x),
            (x, y) => Err(Error::MixedFields(x, y)),
        }
    }

    pub fn try_add(&self, o: &ExactScalar) -> Result<Self> {
        let d = self.common_field(o)?;
        Ok(Self::canonical(&self.a + &o.a, &self.b + &o.b, d))
    }

    pub fn try_sub(&self, o: &ExactScalar) -> Result<Self> {
        self.try_add(&o.neg())
    }

    pub fn try_mul(&self, o: &ExactScalar) -> Result<Self> {
        let d = self.common_field(o)?;
        let dd = BigRational::from_integer(BigInt::from(d));
        let a = &self.a * &o.a + &self.b * &o.b * dd;
        let b = &self.a * &o.b + &self.b * &o.a;
        Ok(Self::canonical(a, b, d))
    }

    pub fn neg(&self) -> Self {
        ExactScalar { a: -self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    pub fn conj(&self) -> Self {
        ExactScalar { a: self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    /// Field norm `a² − d b²`.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DomainError("inverse of zero".into()));
        }
        let n = self.norm();
        Ok(Self::canonical(&self.a / &n, -&self.b / &n, self.d))
    }

    pub fn to_f64(&self) -> f64 {
        if self.b.is_zero() {
            return big_to_f64(&self.a);
        }
        let sd = (self.d as f64).sqrt();
        let a = big_to_f64(&self.a);
        let bs = big_to_f64(&self.b) * sd;
        if a * bs < 0.0 {
            // avoid cancellation: a + b√d = N / (a − b√d)
            big_to_f64(&self.norm()) / (a - bs)
        } else {
            a + bs
        }
    }

    /// Natural log of the height.
    pub fn log_height(&self) -> f64 {
        if self.b.is_zero() {
            let p = self.a.numer().abs();
            let q = self.a.denom().abs();
            return log_big(if p > q { &p } else { &q });
        }
        // minimal polynomial X² − 2a X + (a² − d b²), cleared to a primitive
        // integer polynomial c2 X² + c1 X + c0
        let two_a = &self.a * rat(2, 1);
        let c0 = self.norm();
        let l = two_a.denom().lcm(c0.denom());
        let lr = BigRational::from_integer(l.clone());
        let mut c2 = l;
        let mut c1 = (-two_a * &lr).to_integer();
        let mut c0 = (c0 * lr).to_integer();
        let g = c2.gcd(&c1).gcd(&c0);
        c2 /= &g;
        c1 /= &g;
        c0 /= &g;
        let _ = (&c1, &c0);
        let r1 = self.to_f64().abs();
        let r2 = self.conj().to_f64().abs();
        let mahler = log_big(&c2) + r1.ln().max(0.0) + r2.ln().max(0.0);
        0.5 * mahler
    }

    pub fn height(&self) -> f64 {
        if self.b.is_zero() {
            let p = self.a.numer().abs();
            let q = self.a.denom().abs();
            return if p > q { p } else { q }.to_f64().unwrap_or(f64::INFINITY);
        }
        self.log_height().exp()
    }
}

fn log_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap().abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

impl std::ops::Add for &ExactScalar {
    type Output = ExactScalar;
    /// # Panics
    /// If the operands live in different quadratic fields.
    fn add(self, o: &ExactScalar) -> ExactScalar {
        self.try_add(o).expect("mixed quadratic fields")
    }
}

impl std::ops::Sub for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, o: &ExactScalar) -> ExactScalar {
        self.try_sub(o).expect("mixed quadratic fields")
    }
}

impl std::ops::Mul for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, o: &ExactScalar) -> ExactScalar {
        self.try_mul(o).expect("mixed quadratic fields")
    }
}

fn fmt_rat(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", fmt_rat(&self.a));
        }
        let sign = if self.b.is_negative() { '-' } else { '+' };
        write!(f, "{}{}{}*sqrt({})", fmt_rat(&self.a), sign, fmt_rat(&self.b.abs()), self.d)
    }
}

fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    let bad = || format!("'{s}' is not an integer or INT/POSINT");
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let digits = |t: &str, signed: bool| {
        let t = if signed { t.strip_prefix('-').or_else(|| t.strip_prefix('+')).unwrap_or(t) } else { t };
        !t.is_empty() && t.bytes().all(|c| c.is_ascii_digit())
    };
    if !digits(num, true) {
        return Err(bad());
    }
    let n: BigInt = num.parse().map_err(|_| bad())?;
    match den {
        None => Ok(BigRational::from_integer(n)),
        Some(d) => {
            if !digits(d, false) {
                return Err(bad());
            }
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(format!("zero denominator in '{s}'"));
            }
            Ok(BigRational::new(n, d))
        }
    }
}

impl FromStr for ExactScalar {
    type Err = String;

    /// `INTEGER | INTEGER/POSINT | RAT+RAT*sqrt(POSINT) | RAT-RAT*sqrt(POSINT)`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let Some(idx) = s.find("*sqrt(") else {
            return parse_rational(s).map(ExactScalar::rational);
        };
        let tail = &s[idx + 6..];
        let d_str = tail.strip_suffix(')').ok_or_else(|| format!("unclosed sqrt in '{s}'"))?;
        if d_str.is_empty() || !d_str.bytes().all(|c| c.is_ascii_digit()) {
            return Err(format!("'{d_str}' is not a positive integer"));
        }
        let d: u64 = d_str.parse().map_err(|_| format!("radicand '{d_str}' too large"))?;
        if d == 0 {
            return Err("radicand must be positive".into());
        }
        let head = &s[..idx];
        // split at the last sign that is not leading
        let split = head
            .char_indices()
            .filter(|&(i, c)| i > 0 && (c == '+' || c == '-'))
            .map(|(i, _)| i)
            .next_back()
            .ok_or_else(|| format!("expected RAT±RAT*sqrt(d) in '{s}'"))?;
        let a = parse_rational(&head[..split])?;
        let b_str = &head[split + 1..];
        if b_str.starts_with('+') || b_str.starts_with('-') {
            return Err(format!("unexpected sign in '{s}'"));
        }
        let mut b = parse_rational(b_str)?;
        if &head[split..split + 1] == "-" {
            b = -b;
        }
        ExactScalar::quadratic(a, b, d).map_err(|e| e.to_string())
    }
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Row-major 2×2 matrix of exact scalars sharing one field.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExactMatrix {
    pub m: [ExactScalar; 4],
}

impl ExactMatrix {
    /// Checks a shared field and determinant exactly one.
    pub fn new(m: [ExactScalar; 4]) -> Result<Self> {
        let mat = ExactMatrix { m };
        mat.field()?;
        if mat.det()? != ExactScalar::one() {
            return Err(Error::DeterminantNotOne(mat.to_string()));
        }
        Ok(mat)
    }

    pub fn identity() -> Self {
        ExactMatrix { m: [ExactScalar::one(), ExactScalar::zero(), ExactScalar::zero(), ExactScalar::one()] }
    }

    /// Rotation with the given exact cosine and sine.
    pub fn rotation(cos: &ExactScalar, sin: &ExactScalar) -> Result<Self> {
        Self::new([cos.clone(), sin.neg(), sin.clone(), cos.clone()])
    }

    pub fn diag(l: &ExactScalar) -> Result<Self> {
        Self::new([l.clone(), ExactScalar::zero(), ExactScalar::zero(), l.inv()?])
    }

    /// Common field generator of the entries (`1` when all are rational).
    pub fn field(&self) -> Result<u64> {
        let mut d = 1;
        for x in &self.m {
            if x.d != 1 {
                if d != 1 && d != x.d {
                    return Err(Error::MixedFields(d, x.d));
                }
                d = x.d;
            }
        }
        Ok(d)
    }

    pub fn det(&self) -> Result<ExactScalar> {
        self.m[0].try_mul(&self.m[3])?.try_sub(&self.m[1].try_mul(&self.m[2])?)
    }

    pub fn try_mul(&self, o: &ExactMatrix) -> Result<Self> {
        let [a, b, c, d] = &self.m;
        let [e, f, g, h] = &o.m;
        Ok(ExactMatrix {
            m: [
                a.try_mul(e)?.try_add(&b.try_mul(g)?)?,
                a.try_mul(f)?.try_add(&b.try_mul(h)?)?,
                c.try_mul(e)?.try_add(&d.try_mul(g)?)?,
                c.try_mul(f)?.try_add(&d.try_mul(h)?)?,
            ],
        })
    }

    /// Inverse of a determinant-one matrix.
    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = &self.m;
        ExactMatrix { m: [d.clone(), b.neg(), c.neg(), a.clone()] }
    }

    pub fn transpose(&self) -> Self {
        let [a, b, c, d] = &self.m;
        ExactMatrix { m: [a.clone(), c.clone(), b.clone(), d.clone()] }
    }

    /// Representative of `±M` whose first nonzero entry among
    /// `(m11, m21, m12, m22)` is positive.
    pub fn canonical_sign(&self) -> Self {
        for i in [0, 2, 1, 3] {
            let x = &self.m[i];
            if !x.is_zero() {
                if x.to_f64() < 0.0 {
                    return ExactMatrix { m: self.m.clone().map(|e| e.neg()) };
                }
                return self.clone();
            }
        }
        self.clone()
    }

    pub fn to_group_element(&self) -> Result<GroupElement> {
        GroupElement::new(self.m[0].to_f64(), self.m[1].to_f64(), self.m[2].to_f64(), self.m[3].to_f64())
    }

    pub fn conjugate_by(&self, r: &ExactMatrix) -> Result<Self> {
        r.try_mul(self)?.try_mul(&r.inverse())
    }
}

impl fmt::Display for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.m[0], self.m[1], self.m[2], self.m[3])
    }
}

pub fn height(x: &ExactScalar) -> f64 {
    x.height()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightReport {
    pub entry_heights: Vec<f64>,
    pub max_height: f64,
    pub log_max_height: f64,
    pub field_degree: u32,
    pub field_generator: u64,
    /// `[K:Q]·(log 4 + 8 log C)`.
    pub log_m_mu_bound: f64,
}

/// Height-based upper bound on the splitting rate `M_μ`.
pub fn splitting_rate_bound(spec: &MeasureSpec) -> Result<HeightReport> {
    let mats = spec.exact_matrices()?;
    let mut d = 1u64;
    let mut heights = Vec::new();
    let mut log_c: f64 = 0.0;
    for m in &mats {
        let f = m.field()?;
        if f != 1 {
            if d != 1 && d != f {
                return Err(Error::MixedFields(d, f));
            }
            d = f;
        }
        for x in &m.m {
            let lh = x.log_height();
            log_c = log_c.max(lh);
            heights.push(lh.exp());
        }
    }
    let degree = if d == 1 { 1 } else { 2 };
    Ok(HeightReport {
        entry_heights: heights,
        max_height: log_c.exp(),
        log_max_height: log_c,
        field_degree: degree,
        field_generator: d,
        log_m_mu_bound: degree as f64 * (4f64.ln() + 8.0 * log_c),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyLevel {
    pub n: usize,
    pub support: usize,
    pub words: f64,
    /// `H(μ*ⁿ)/n` in nats.
    pub entropy_per_step: f64,
    /// No two distinct words of length `n` give the same element.
    pub all_distinct: bool,
}

pub const ENUMERATION_LIMIT: u64 = 10_000_000;

/// `H(μ*ⁿ)/n` for `n = 1..=n_max` by exact enumeration with PSL merging.
/// Each value is an upper bound for the random-walk entropy.
pub fn exact_product_entropy(spec: &MeasureSpec, n_max: usize) -> Result<Vec<EntropyLevel>> {
    if n_max == 0 {
        return Err(Error::DomainError("n_max must be at least 1".into()));
    }
    let gens = spec.exact_matrices()?;
    let weights: Vec<BigRational> = spec.atoms.iter().map(|a| a.weight.clone()).collect();
    // merge the atoms themselves first
    let mut level: Vec<(ExactMatrix, BigRational)> = merge(
        gens.iter().cloned().zip(weights.iter().cloned()).map(|(m, w)| (m.canonical_sign(), w)).collect(),
    );
    let k = gens.len() as f64;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            let next_size = level.len() as u64 * gens.len() as u64;
            if next_size > ENUMERATION_LIMIT {
                return Err(Error::ExplosionGuard { step: n, limit: ENUMERATION_LIMIT });
            }
            let products: Vec<Vec<(ExactMatrix, BigRational)>> = level
                .par_iter()
                .map(|(m, p)| {
                    gens.iter()
                        .zip(&weights)
                        .map(|(g, w)| {
                            let prod = m.try_mul(g).expect("generators share one field");
                            (prod.canonical_sign(), p * w)
                        })
                        .collect()
                })
                .collect();
            level = merge(products.into_iter().flatten().collect());
        }
        let h: f64 = level
            .iter()
            .map(|(_, p)| {
                let p = big_to_f64(p);
                if p > 0.0 {
                    -p * p.ln()
                } else {
                    0.0
                }
            })
            .sum();
        let words = k.powi(n as i32);
        out.push(EntropyLevel {
            n,
            support: level.len(),
            words,
            entropy_per_step: h / n as f64,
            all_distinct: level.len() as f64 == words,
        });
    }
    Ok(out)
}

fn merge(items: Vec<(ExactMatrix, BigRational)>) -> Vec<(ExactMatrix, BigRational)> {
    let mut map: HashMap<ExactMatrix, BigRational> = HashMap::with_capacity(items.len());
    for (m, p) in items {
        *map.entry(m).or_insert_with(BigRational::zero) += p;
    }
    let mut v: Vec<(ExactMatrix, BigRational)> = map.into_iter().collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PingPongArc {
    pub center: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PingPongCertificate {
    pub epsilon: f64,
    pub elements: Vec<(f64, f64)>,
    pub attracting: Vec<PingPongArc>,
    pub repelling: Vec<PingPongArc>,
    /// Smallest gap between two distinct arcs.
    pub min_gap: f64,
    /// Uniform measure on the elements has random-walk entropy `log n`.
    pub entropy_if_uniform: f64,
}

/// Certifies that `R_θ diag(λ, 1/λ) R_{−θ}` for the given `(θ, λ)` generate a
/// free semigroup via disjoint attracting and repelling arcs.
pub fn pingpong_certify(elements: &[(f64, f64)], epsilon: f64) -> Result<PingPongCertificate> {
    if !(epsilon > 0.0 && epsilon < PI / 8.0) {
        return Err(Error::DomainError(format!("epsilon {epsilon} outside (0, π/8)")));
    }
    if elements.is_empty() {
        return Err(Error::DomainError("no elements".into()));
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (i, &(theta, lambda)) in elements.iter().enumerate() {
        if !(lambda > 1.0) {
            return Err(Error::DomainError(format!("element {i}: λ = {lambda} is not above 1")));
        }
        let delta = ((0.5 * epsilon).tan().recip() / (lambda * lambda)).atan();
        if delta > 0.5 * epsilon {
            return Err(Error::ArcsOverlap(
                format!("A+[{i}] (radius {delta})"),
                format!("tolerance ε/2 = {}", 0.5 * epsilon),
            ));
        }
        plus.push(PingPongArc { center: reduce_angle(theta), radius: delta });
        minus.push(PingPongArc { center: reduce_angle(theta + FRAC_PI_2), radius: 0.5 * epsilon });
    }
    let labelled: Vec<(String, &PingPongArc)> = plus
        .iter()
        .enumerate()
        .map(|(i, a)| (format!("A+[{i}]"), a))
        .chain(minus.iter().enumerate().map(|(i, a)| (format!("A-[{i}]"), a)))
        .collect();
    let mut min_gap = f64::INFINITY;
    for i in 0..labelled.len() {
        for j in i + 1..labelled.len() {
            let (ni, a) = &labelled[i];
            let (nj, b) = &labelled[j];
            let gap = angle_diff(a.center, b.center).abs() - a.radius - b.radius;
            if gap <= 0.0 {
                return Err(Error::ArcsOverlap(ni.clone(), nj.clone()));
            }
            min_gap = min_gap.min(gap);
        }
    }
    Ok(PingPongCertificate {
        epsilon,
        elements: elements.to_vec(),
        attracting: plus,
        repelling: minus,
        min_gap,
        entropy_if_uniform: (elements.len() as f64).ln(),
    })
}

/// `sin θ_n = 4n/(4n²+1)`, `cos θ_n = (4n²−1)/(4n²+1)`.
pub fn theta_n(n: u64) -> (ExactScalar, ExactScalar) {
    let n = BigInt::from(n);
    let den = BigInt::from(4) * &n * &n + BigInt::one();
    let s = BigRational::new(BigInt::from(4) * &n, den.clone());
    let c = BigRational::new(&den - BigInt::from(2), den);
    (ExactScalar::rational(s), ExactScalar::rational(c))
}

/// Searches random words of length `1..=max_len` over `gens` for two distinct
/// words with equal products in PSL(2). Returns the first colliding pair.
pub fn word_collision_search(
    gens: &[ExactMatrix],
    max_len: usize,
    trials: usize,
    seed: u64,
) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashMap<ExactMatrix, Vec<usize>> = HashMap::new();
    for _ in 0..trials {
        let len = rng.random_range(1..=max_len);
        let word: Vec<usize> = (0..len).map(|_| rng.random_range(0..gens.len())).collect();
        let mut m = ExactMatrix::identity();
        for &i in &word {
            m = m.try_mul(&gens[i])?;
        }
        let key = m.canonical_sign();
        match seen.get(&key) {
            Some(w) if *w != word => return Ok(Some((w.clone(), word))),
            Some(_) => {}
            None => {
                seen.insert(key, word);
            }
        }
    }
    Ok(None)
}

/// Sign of a big integer as `-1, 0, 1`.
pub fn sign_of(x: &BigInt) -> i32 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s(x: &str) -> ExactScalar {
        x.parse().unwrap()
    }

    #[test]
    fn grammar() {
        assert_eq!(s("7"), ExactScalar::int(7));
        assert_eq!(s("-3/6"), ExactScalar::frac(-1, 2));
        assert_eq!(s("1+1*sqrt(5)").to_string(), "1+1*sqrt(5)");
        assert_eq!(s("1/2-3/4*sqrt(3)").to_string(), "1/2-3/4*sqrt(3)");
        assert_eq!(s("0+1*sqrt(8)").to_string(), "0+2*sqrt(2)");
        assert_eq!(s("2+3*sqrt(4)"), ExactScalar::int(8));
        assert_eq!(s("-1-1*sqrt(2)").to_string(), "-1-1*sqrt(2)");
        for bad in ["", "1/0", "1.5", "1+sqrt(2)", "1+2*sqrt(0)", "1+2*sqrt(-2)", "1/-2", "x", "1+-2*sqrt(3)"] {
            assert!(bad.parse::<ExactScalar>().is_err(), "{bad}");
        }
    }

    #[test]
    fn field_arithmetic() {
        let r2 = s("0+1*sqrt(2)");
        assert_eq!(&r2 * &r2, ExactScalar::int(2));
        let x = s("3+2*sqrt(2)");
        assert_eq!(&x * &x.inv().unwrap(), ExactScalar::one());
        assert!(s("1+1*sqrt(3)").try_add(&r2).is_err());
        assert_relative_eq!(s("1+1*sqrt(5)").to_f64(), 1.0 + 5f64.sqrt(), epsilon = 1e-15);
        // cancellation-free evaluation
        let tiny = s("1000001-1000*sqrt(1000001)");
        let direct = 1000001.0 - 1000.0 * 1000001f64.sqrt();
        assert_relative_eq!(tiny.to_f64(), direct, max_relative = 1e-6);
    }

    #[test]
    fn height_examples() {
        assert_eq!(s("3/2").height(), 3.0);
        assert_eq!(s("7").height(), 7.0);
        assert_relative_eq!(s("0+1*sqrt(2)").height(), 2f64.sqrt(), epsilon = 1e-14);
        assert_eq!(ExactScalar::zero().height(), 1.0);
        // golden ratio: X² − X − 1, Mahler measure φ
        let phi = s("1/2+1/2*sqrt(5)");
        assert_relative_eq!(phi.height(), ((1.0 + 5f64.sqrt()) / 2.0).sqrt(), epsilon = 1e-14);
        // (1+√5)/4 has minimal polynomial 4X² − 2X − 1
        let c = s("1/4+1/4*sqrt(5)");
        let r1 = (1.0 + 5f64.sqrt()) / 4.0;
        let r2 = ((1.0 - 5f64.sqrt()) / 4.0).abs();
        assert_relative_eq!(c.height(), (4.0 * r1.max(1.0) * r2.max(1.0)).sqrt(), epsilon = 1e-14);
        for x in ["5/3", "3+2*sqrt(2)", "1/2-7/3*sqrt(11)"] {
            let x = s(x);
            assert_relative_eq!(x.height(), x.inv().unwrap().height(), max_relative = 1e-12);
        }
    }

    #[test]
    fn theta_n_examples() {
        let (sn, cn) = theta_n(1);
        assert_eq!((sn.clone(), cn.clone()), (ExactScalar::frac(4, 5), ExactScalar::frac(3, 5)));
        assert_eq!((sn.height(), cn.height()), (5.0, 5.0));
        let (sn, cn) = theta_n(2);
        assert_eq!((sn, cn), (ExactScalar::frac(8, 17), ExactScalar::frac(15, 17)));
        for n in [1u64, 7, 1000, 999_999, 1_000_000] {
            let (sn, cn) = theta_n(n);
            assert_eq!(&(&sn * &sn) + &(&cn * &cn), ExactScalar::one());
            assert!(sn.height() <= (4 * n * n + 1) as f64 && cn.height() <= (4 * n * n + 1) as f64);
            let t = sn.to_f64().atan2(cn.to_f64());
            assert!(t > 0.5 / n as f64 && t < 2.0 / n as f64);
        }
    }

    #[test]
    fn pingpong_examples() {
        let c = pingpong_certify(&[(0.0, 10.0)], 0.2).unwrap();
        assert_relative_eq!(c.attracting[0].radius, (0.01 / 0.1f64.tan()).atan(), epsilon = 1e-15);
        assert!(c.attracting[0].radius < 0.1);
        assert!(pingpong_certify(&[(0.0, 100.0), (PI / 4.0, 100.0)], 0.3).is_ok());
        match pingpong_certify(&[(0.0, 1e6), (0.01, 1e6)], 0.1) {
            // the repelling arcs of width ε collide first
            Err(Error::ArcsOverlap(a, b)) => assert_eq!((a.as_str(), b.as_str()), ("A-[0]", "A-[1]")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exact_matrix_checks() {
        assert!(ExactMatrix::new([s("1"), s("1"), s("0"), s("2")]).is_err());
        let m = ExactMatrix::new([s("1+1*sqrt(2)"), s("0"), s("0"), s("-1+1*sqrt(2)")]).unwrap();
        assert_eq!(m.field().unwrap(), 2);
        let neg = ExactMatrix { m: m.m.clone().map(|e| e.neg()) };
        assert_eq!(neg.canonical_sign(), m.canonical_sign());
        assert_eq!(m.try_mul(&m.inverse()).unwrap(), ExactMatrix::identity());
    }
}

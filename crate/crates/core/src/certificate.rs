//! Example families and the report that assembles `χ`, the entropy envelope,
//! the splitting-rate bound and the non-degeneracy profile into the ratio
//! `(h/χ) / (C·max{1, log(log M / h)}²)`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebraic::{
    exact_product_entropy, is_prime, splitting_rate_bound, theta_n, EntropyLevel, ExactMatrix, ExactScalar,
    HeightReport, PingPongCertificate,
};
use crate::circle::{arc_mass_max, detail};
use crate::error::{Error, Result};
use crate::measure::{Atom, MeasureSpec};
use crate::sl2::GroupElement;
use crate::walk::{estimate_lyapunov, estimate_stationary, LyapunovEstimate, StationaryMethod};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Uniform on a rational rotation `A` and `diag((n³+1)/n³, n³/(n³+1))`.
    TwoGen { n: u64 },
    /// `(1/ab) ∑_{i<a} ∑_{j<b} δ_{R^i A_j R^{−i}}` with `R = R_{π/a}`.
    Rotational { a: u32, entries: Option<Vec<ExactMatrix>> },
    /// Conjugates of `diag(⌈r+√p⌉ − √p, ·)` by `R_{jπ/5 + α_i}`. Without
    /// `symmetrize` only the exact `j = 0` atoms are kept.
    LargeElement { r: f64, n_steps: u32, symmetrize: bool },
}

fn q(n: &BigInt, d: &BigInt) -> ExactScalar {
    ExactScalar::rational(BigRational::new(n.clone(), d.clone()))
}

/// `A` and `B` of the two-generator family.
pub fn two_gen_matrices(n: u64) -> Result<(ExactMatrix, ExactMatrix)> {
    if n < 2 {
        return Err(Error::ParameterOutOfScope(format!("two_gen needs n ≥ 2, got {n}")));
    }
    let n = BigInt::from(n);
    let den = &n * &n + 1;
    let c = q(&(&n * &n - 1), &den);
    let s = q(&(BigInt::from(2) * &n), &den);
    let a = ExactMatrix::rotation(&c, &s)?;
    let n3 = &n * &n * &n;
    let b = ExactMatrix::diag(&q(&(&n3 + 1), &n3))?;
    Ok((a, b))
}

/// Exact `(cos π/a, sin π/a)` when it lies in a quadratic field.
pub fn exact_rotation_pi_over(a: u32) -> Option<(ExactScalar, ExactScalar)> {
    let p = |s: &str| s.parse::<ExactScalar>().ok();
    match a {
        1 => Some((ExactScalar::int(-1), ExactScalar::zero())),
        2 => Some((ExactScalar::zero(), ExactScalar::one())),
        3 => Some((ExactScalar::frac(1, 2), p("0+1/2*sqrt(3)")?)),
        4 => Some((p("0+1/2*sqrt(2)")?, p("0+1/2*sqrt(2)")?)),
        6 => Some((p("0+1/2*sqrt(3)")?, ExactScalar::frac(1, 2))),
        _ => None,
    }
}

pub fn default_rotational_entries() -> Vec<ExactMatrix> {
    let d = ExactMatrix::diag(&ExactScalar::int(2)).expect("det one");
    let s = ExactMatrix::new([ExactScalar::int(2), ExactScalar::int(1), ExactScalar::int(1), ExactScalar::int(1)])
        .expect("det one");
    vec![d, s]
}

fn rotational(a: u32, entries: Vec<ExactMatrix>) -> Result<MeasureSpec> {
    if a == 0 || entries.is_empty() {
        return Err(Error::ParameterOutOfScope("rotational needs a ≥ 1 and at least one entry".into()));
    }
    let count = BigInt::from(a as u64 * entries.len() as u64);
    let w = BigRational::new(BigInt::one(), count);
    let mut atoms = Vec::new();
    match exact_rotation_pi_over(a) {
        Some((c, s)) => {
            let r = ExactMatrix::rotation(&c, &s)?;
            for e in &entries {
                let mut m = e.clone();
                for _ in 0..a {
                    atoms.push(Atom { element: m.to_group_element()?, exact: Some(m.clone()), weight: w.clone() });
                    m = m.conjugate_by(&r)?;
                }
            }
        }
        None => {
            let r = GroupElement::rotation(PI / a as f64);
            for e in &entries {
                let g = e.to_group_element()?;
                let mut ri = GroupElement::identity();
                for _ in 0..a {
                    atoms.push(Atom { element: ri * g * ri.inverse(), exact: None, weight: w.clone() });
                    ri = ri * r;
                }
            }
        }
    }
    MeasureSpec::new(Some(format!("rotational(a={a}, b={})", entries.len())), atoms)
}

/// Largest PSL distance from `R g R⁻¹` to the nearest atom, over atoms `g`.
pub fn rotation_invariance_defect(spec: &MeasureSpec, angle: f64) -> f64 {
    let r = GroupElement::rotation(angle);
    let els = spec.elements();
    els.iter()
        .map(|g| {
            let c = r * *g * r.inverse();
            els.iter().map(|h| c.max_entry_diff_psl(h)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Exact check that conjugation by `R_{π/a}` permutes the atoms.
pub fn exact_rotation_invariant(spec: &MeasureSpec, a: u32) -> Result<bool> {
    let (c, s) = exact_rotation_pi_over(a).ok_or_else(|| {
        Error::ParameterOutOfScope(format!("rotation by π/{a} is not exact in a quadratic field"))
    })?;
    let r = ExactMatrix::rotation(&c, &s)?;
    let mats = spec.exact_matrices()?;
    let mut orig: Vec<ExactMatrix> = mats.iter().map(|m| m.canonical_sign()).collect();
    let mut conj: Vec<ExactMatrix> =
        mats.iter().map(|m| m.conjugate_by(&r).map(|x| x.canonical_sign())).collect::<Result<_>>()?;
    orig.sort();
    conj.sort();
    Ok(orig == conj)
}

/// Parameters of the large-element construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeElementPlan {
    pub epsilon: f64,
    pub ping_pong_c: f64,
    pub p: u64,
    /// `⌈r + √p⌉`.
    pub m: u64,
    /// Angles `α_k` as exact `(sin, cos)`.
    pub alphas: Vec<(ExactScalar, ExactScalar)>,
}

pub fn large_element_plan(r: f64, n_steps: u32) -> Result<LargeElementPlan> {
    if !(r > 0.0) || n_steps == 0 || n_steps > 6 {
        return Err(Error::ParameterOutOfScope(format!(
            "large_element needs r > 0 and 1 ≤ n_steps ≤ 6, got r={r}, n_steps={n_steps}"
        )));
    }
    let n = n_steps as i32;
    let epsilon = 1.0 / (2.0 * 8f64.powi(n + 1));
    let c = (0.5 * epsilon).tan().recip();
    let mut p = (c * c).ceil() as u64;
    while !is_prime(p) || p == 5 {
        p += 1;
    }
    let m = (r + (p as f64).sqrt()).ceil() as u64;
    let betas: Vec<(ExactScalar, ExactScalar)> =
        (0..n_steps).map(|k| theta_n(8u64.pow(n_steps + 1 - k))).collect();
    let mut alphas = Vec::with_capacity(1 << n_steps);
    for k in 0..(1u32 << n_steps) {
        let (mut s, mut co) = (ExactScalar::zero(), ExactScalar::one());
        for (i, (sb, cb)) in betas.iter().enumerate() {
            if k >> i & 1 == 1 {
                let ns = &(&s * cb) + &(&co * sb);
                let nc = &(&co * cb) - &(&s * sb);
                s = ns;
                co = nc;
            }
        }
        alphas.push((s, co));
    }
    Ok(LargeElementPlan { epsilon, ping_pong_c: c, p, m, alphas })
}

fn large_element(r: f64, n_steps: u32, symmetrize: bool) -> Result<MeasureSpec> {
    let plan = large_element_plan(r, n_steps)?;
    let pb = BigRational::from_integer(BigInt::from(plan.m));
    let lam = ExactScalar::quadratic(pb, -BigRational::one(), plan.p)?;
    let d = ExactMatrix::diag(&lam)?;
    let copies = if symmetrize { 5 } else { 1 };
    let w = BigRational::new(BigInt::one(), BigInt::from(plan.alphas.len() * copies));
    let mut atoms = Vec::new();
    for j in 0..copies {
        let rj = GroupElement::rotation(j as f64 * PI / 5.0);
        for (s, c) in &plan.alphas {
            let ra = ExactMatrix::rotation(c, s)?;
            let g = d.conjugate_by(&ra)?;
            let atom = if j == 0 {
                Atom { element: g.to_group_element()?, exact: Some(g), weight: w.clone() }
            } else {
                Atom { element: rj * g.to_group_element()? * rj.inverse(), exact: None, weight: w.clone() }
            };
            atoms.push(atom);
        }
    }
    MeasureSpec::new(Some(format!("large_element(r={r}, n={n_steps}, p={})", plan.p)), atoms)
}

/// Ping-pong certificate for the Galois conjugates `⌈r+√p⌉ + √p` of the
/// large-element atoms, whose freeness transfers to the atoms themselves.
pub fn large_element_pingpong(r: f64, n_steps: u32, symmetrize: bool) -> Result<PingPongCertificate> {
    let plan = large_element_plan(r, n_steps)?;
    let lam = plan.m as f64 + (plan.p as f64).sqrt();
    let copies = if symmetrize { 5 } else { 1 };
    let mut els = Vec::new();
    for j in 0..copies {
        for (s, c) in &plan.alphas {
            els.push((j as f64 * PI / 5.0 + s.to_f64().atan2(c.to_f64()), lam));
        }
    }
    crate::algebraic::pingpong_certify(&els, plan.epsilon)
}

pub fn build_example(family: &Family) -> Result<MeasureSpec> {
    match family {
        Family::TwoGen { n } => {
            let (a, b) = two_gen_matrices(*n)?;
            MeasureSpec::uniform_exact(&format!("two_gen({n})"), vec![a, b])
        }
        Family::Rotational { a, entries } => {
            rotational(*a, entries.clone().unwrap_or_else(default_rotational_entries))
        }
        Family::LargeElement { r, n_steps, symmetrize } => large_element(*r, *n_steps, *symmetrize),
    }
}

/// `(h/χ) / (C·max{1, log(log M / h)}²)`, evaluated in logs.
pub fn evaluate_condition(h: f64, chi: f64, log_m: f64, c: f64) -> Result<f64> {
    if !(h > 0.0 && chi > 0.0 && c > 0.0) {
        return Err(Error::DomainError(format!("need h, χ, C > 0; got h={h}, χ={chi}, C={c}")));
    }
    if !(log_m >= h) {
        return Err(Error::DomainError(format!("log M = {log_m} below h = {h}; pad M first")));
    }
    let inner = (log_m.ln() - h.ln()).max(1.0);
    let log_ratio = h.ln() - chi.ln() - c.ln() - 2.0 * inner.ln();
    Ok(log_ratio.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub lyapunov_steps: usize,
    pub lyapunov_samples: usize,
    pub burn_in: usize,
    pub stationary_samples: usize,
    pub n_max: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            lyapunov_steps: 20_000,
            lyapunov_samples: 200,
            burn_in: 2000,
            stationary_samples: 100_000,
            n_max: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySource {
    /// `H(μ)`, valid when the support generates a free semigroup.
    Presumptive,
    /// Smallest `H(μ*ⁿ)/n` computed, an upper bound.
    EnvelopeMin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetailPoint {
    pub r: f64,
    pub detail: f64,
    /// `(log 1/r)^{−1}`.
    pub beta1: f64,
    /// `(log 1/r)^{−2}`.
    pub beta2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub name: Option<String>,
    pub chi: LyapunovEstimate,
    pub entropy_envelope: Vec<EntropyLevel>,
    pub h_rw_presumptive: Option<f64>,
    /// Every word up to this length gives a distinct element.
    pub distinct_to_depth: usize,
    pub freeness_flag: bool,
    pub h_used: Option<f64>,
    pub h_source: Option<EntropySource>,
    pub heights: Option<HeightReport>,
    pub log_m_bound: Option<f64>,
    /// `max(log M bound, h)`.
    pub log_m_used: Option<f64>,
    pub t: f64,
    pub alpha0_observed: f64,
    pub alpha0_std_error: f64,
    pub stationary_samples: usize,
    pub condition_ratio: Option<f64>,
    pub c_used: f64,
    pub verdict: String,
    pub detail_decay: Vec<DetailPoint>,
    /// Sub-steps that could not run, with their error codes.
    pub errors: Vec<String>,
}

/// Every verdict starts with this; the constant `C` is not known, so a
/// verdict is evidence about the hypothesis only.
pub const VERDICT_PREFIX: &str = "condition-level evidence:";

pub const DETAIL_RADII: [f64; 5] = [1e-1, 3.162_277_660_168_38e-2, 1e-2, 3.162_277_660_168_38e-3, 1e-3];

pub fn full_report(spec: &MeasureSpec, t: f64, c: f64, budgets: &Budgets, seed: u64) -> Result<CertificateReport> {
    if !(c > 0.0) {
        return Err(Error::DomainError(format!("C = {c} must be positive")));
    }
    let mut errors = Vec::new();
    let chi = estimate_lyapunov(spec, budgets.lyapunov_steps, budgets.lyapunov_samples, seed)?;
    let stationary =
        estimate_stationary(spec, budgets.burn_in, budgets.stationary_samples, seed, StationaryMethod::Forward)?;
    let nu = stationary.measure()?;
    let alpha0 = arc_mass_max(&nu, t)?.max_mass;
    let n_samp = stationary.points.len() as f64;
    let alpha0_std_error = (alpha0 * (1.0 - alpha0) / n_samp).sqrt();

    let heights = match splitting_rate_bound(spec) {
        Ok(h) => Some(h),
        Err(e) => {
            errors.push(format!("splitting_rate_bound: {}: {e}", e.code()));
            None
        }
    };
    let mut envelope = Vec::new();
    if spec.is_exact() {
        let mut n = budgets.n_max.max(1);
        loop {
            match exact_product_entropy(spec, n) {
                Ok(v) => {
                    envelope = v;
                    break;
                }
                Err(Error::ExplosionGuard { step, .. }) if step > 1 && step - 1 < n => {
                    errors.push(format!("exact_product_entropy: explosion_guard: truncated to n = {}", step - 1));
                    n = step - 1;
                }
                Err(e) => {
                    errors.push(format!("exact_product_entropy: {}: {e}", e.code()));
                    break;
                }
            }
        }
    } else {
        errors.push("exact_product_entropy: not_exact: spec has floating-point atoms".into());
    }
    let distinct_to_depth = envelope.iter().take_while(|l| l.all_distinct).count();
    let weights = spec.weights_f64();
    let h_mu: f64 = weights.iter().filter(|&&w| w > 0.0).map(|w| -w * w.ln()).sum();
    let freeness_flag = !envelope.is_empty() && distinct_to_depth == envelope.len() && distinct_to_depth >= 1;
    let h_rw_presumptive = if freeness_flag { Some(h_mu) } else { None };
    let (h_used, h_source) = if let Some(h) = h_rw_presumptive {
        (Some(h), Some(EntropySource::Presumptive))
    } else if let Some(m) = envelope.iter().map(|l| l.entropy_per_step).reduce(f64::min) {
        (Some(m), Some(EntropySource::EnvelopeMin))
    } else {
        (None, None)
    };
    let log_m_bound = heights.as_ref().map(|h| h.log_m_mu_bound);
    let log_m_used = match (log_m_bound, h_used) {
        (Some(l), Some(h)) => Some(l.max(h)),
        (l, _) => l,
    };

    let mut condition_ratio = None;
    let mut missing = Vec::new();
    if chi.compact || !(chi.chi_hat > 0.0) {
        missing.push(format!("zero Lyapunov exponent (chi_hat = {:.3e})", chi.chi_hat));
    }
    if matches!(h_used, Some(h) if !(h > 1e-12)) {
        missing.push("zero random walk entropy".to_string());
    }
    let body = match (h_used, log_m_used) {
        _ if !missing.is_empty() => format!("condition inapplicable: {}", missing.join(", ")),
        (Some(h), Some(lm)) => {
            let ratio = evaluate_condition(h, chi.chi_hat, lm, c)?;
            condition_ratio = Some(ratio);
            let label = match h_source {
                Some(EntropySource::Presumptive) => "h presumptive, conditional on freeness",
                _ => "h from the entropy envelope, an upper bound",
            };
            let status = if ratio > 1.0 { "satisfied" } else { "not satisfied" };
            format!("condition {status} at C = {c} (ratio {ratio:.4e}; {label})")
        }
        _ => "condition not evaluated: exact entropy or height data unavailable".to_string(),
    };
    let verdict = format!("{VERDICT_PREFIX} {body}");

    let mut detail_decay = Vec::new();
    for &r in &DETAIL_RADII {
        let s = detail(&nu, r)?;
        let l = (1.0 / r).ln();
        detail_decay.push(DetailPoint { r, detail: s, beta1: 1.0 / l, beta2: 1.0 / (l * l) });
    }

    Ok(CertificateReport {
        name: spec.name.clone(),
        chi,
        entropy_envelope: envelope,
        h_rw_presumptive,
        distinct_to_depth,
        freeness_flag,
        h_used,
        h_source,
        heights,
        log_m_bound,
        log_m_used,
        t,
        alpha0_observed: alpha0,
        alpha0_std_error,
        stationary_samples: stationary.points.len(),
        condition_ratio,
        c_used: c,
        verdict,
        detail_decay,
        errors,
    })
}

/// `log 4 + 8 log(n³ + 1)`, the splitting-rate bound of `two_gen(n)`.
pub fn two_gen_log_m(n: u64) -> f64 {
    let n3 = (n as f64).powi(3);
    4f64.ln() + 8.0 * (n3 + 1.0).ln()
}

/// Exact check `(n²−1)² + (2n)² = (n²+1)²`, the identity behind `det A = 1`.
pub fn two_gen_identity(n: u64) -> bool {
    let n = BigInt::from(n);
    let l = (&n * &n - 1u32).pow(2) + (BigInt::from(2) * &n).pow(2);
    let r = (&n * &n + 1u32).pow(2);
    l == r && !r.is_zero() && r.to_f64().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_gen_examples() {
        let (a, b) = two_gen_matrices(3).unwrap();
        assert_eq!(a.to_string(), "[[4/5,-3/5],[3/5,4/5]]");
        assert_eq!(b.to_string(), "[[28/27,0],[0,27/28]]");
        let (a, b) = two_gen_matrices(2).unwrap();
        assert_eq!(a.to_string(), "[[3/5,-4/5],[4/5,3/5]]");
        assert_eq!(b.to_string(), "[[9/8,0],[0,8/9]]");
        assert!(two_gen_matrices(1).is_err());
        assert!(two_gen_identity(1_000_000));
    }

    #[test]
    fn condition_examples() {
        let r = evaluate_condition(2f64.ln(), 1e-3, 1f64.exp(), 1.0).unwrap();
        assert!((r - 371.1).abs() < 0.1, "{r}");
        let r = evaluate_condition(1.0, 0.01, 2.0, 1.0).unwrap();
        assert_relative_eq!(r, 100.0, max_relative = 1e-12);
        let r2 = evaluate_condition(1.0, 0.01, 2.0, 2.0).unwrap();
        assert_relative_eq!(r2, 50.0, max_relative = 1e-12);
        assert!(evaluate_condition(1.0, 0.0, 2.0, 1.0).is_err());
        assert!(evaluate_condition(2.0, 0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn rotational_exact_and_float() {
        let s = build_example(&Family::Rotational { a: 4, entries: None }).unwrap();
        assert!(s.is_exact());
        assert_eq!(s.len(), 8);
        assert!(exact_rotation_invariant(&s, 4).unwrap());
        let s5 = build_example(&Family::Rotational { a: 5, entries: None }).unwrap();
        assert_eq!(s5.len(), 10);
        assert!(!s5.is_exact());
        assert!(rotation_invariance_defect(&s5, PI / 5.0) < 1e-12);
        assert!(rotation_invariance_defect(&s5, PI / 7.0) > 0.1);
    }

    #[test]
    fn identity_measure_is_inapplicable() {
        let spec = MeasureSpec::uniform_exact("identity", vec![ExactMatrix::identity()]).unwrap();
        let b = Budgets { lyapunov_steps: 1000, lyapunov_samples: 100, burn_in: 200, stationary_samples: 1000, n_max: 3 };
        let r = full_report(&spec, 0.5, 1.0, &b, 1).unwrap();
        assert!(r.verdict.starts_with(VERDICT_PREFIX));
        assert!(r.verdict.contains("zero Lyapunov exponent"), "{}", r.verdict);
        assert!(r.verdict.contains("zero random walk entropy"), "{}", r.verdict);
        assert!(r.condition_ratio.is_none());
    }

    #[test]
    fn large_element_small_case() {
        let plan = large_element_plan(2.0, 1).unwrap();
        assert_eq!(plan.p, 65537);
        assert!(plan.m as f64 >= 2.0 + (plan.p as f64).sqrt());
        let s = build_example(&Family::LargeElement { r: 2.0, n_steps: 1, symmetrize: false }).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.is_exact());
        // norm is ⌈r+√p⌉ − √p ≤ r + 1
        assert!(s.max_norm() <= 3.0);
        let h = splitting_rate_bound(&s).unwrap();
        assert_eq!((h.field_degree, h.field_generator), (2, 65537));
        let full = build_example(&Family::LargeElement { r: 2.0, n_steps: 1, symmetrize: true }).unwrap();
        assert_eq!(full.len(), 10);
        assert!(rotation_invariance_defect(&full, PI / 5.0) < 1e-9);
        let cert = large_element_pingpong(2.0, 1, true).unwrap();
        assert_relative_eq!(cert.entropy_if_uniform, 10f64.ln(), epsilon = 1e-12);
    }
}

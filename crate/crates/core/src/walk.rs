//! Seeded Monte-Carlo for random walks `γ1 γ2 …`: Lyapunov exponent,
//! empirical stationary measure, stopping times, renewal experiments and
//! regularity probes.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circle::{arc_mass_max, wasserstein1, CircleMeasure};
use crate::error::{Error, Result};
use crate::measure::MeasureSpec;
use crate::par::{self, batched, mean_se, per_item, tag};
use crate::sl2::{
    act, cartan_decompose, loglog_slope, mat_mul, reduce_angle, spectral_norm, GroupElement,
    ProjectivePoint,
};

pub const RENORMALIZE_EVERY: usize = 32;
pub const STOPPING_CAP: u64 = 10_000_000;
pub const DEFAULT_BURN_IN: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub chi_hat: f64,
    pub std_error: f64,
    pub steps_per_sample: usize,
    pub samples: usize,
    pub seed: u64,
    /// Support lies in a compact subgroup, so `χ = 0`.
    pub compact: bool,
}

/// `log‖g1 g2 … gn‖`, factoring out the running norm every 32 steps.
pub fn log_norm_of_product(gs: &[GroupElement]) -> f64 {
    let mut m = [1.0, 0.0, 0.0, 1.0];
    let mut acc = 0.0;
    for (i, g) in gs.iter().enumerate() {
        m = mat_mul(m, g.as_array());
        if (i + 1) % RENORMALIZE_EVERY == 0 {
            let n = spectral_norm(m);
            acc += n.ln();
            m = m.map(|x| x / n);
        }
    }
    acc + spectral_norm(m).ln()
}

fn walk_log_norm(spec: &MeasureSpec, steps: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut m = [1.0, 0.0, 0.0, 1.0];
    let mut acc = 0.0;
    for i in 0..steps {
        m = mat_mul(m, spec.sample(rng).as_array());
        if (i + 1) % RENORMALIZE_EVERY == 0 {
            let n = spectral_norm(m);
            acc += n.ln();
            m = m.map(|x| x / n);
        }
    }
    acc + spectral_norm(m).ln()
}

pub fn estimate_lyapunov(spec: &MeasureSpec, steps: usize, samples: usize, seed: u64) -> Result<LyapunovEstimate> {
    if steps < 1000 || samples < 100 {
        return Err(Error::ParameterOutOfScope(format!(
            "need steps ≥ 1000 and samples ≥ 100, got {steps} and {samples}"
        )));
    }
    let vals = batched(samples, seed, tag::LYAPUNOV, |rng, r| {
        r.map(|_| walk_log_norm(spec, steps, rng) / steps as f64).collect()
    });
    let (chi_hat, std_error) = mean_se(&vals);
    Ok(LyapunovEstimate {
        chi_hat,
        std_error,
        steps_per_sample: steps,
        samples,
        seed,
        compact: spec.is_compact(1e-12),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryMethod {
    /// `γ1 ⋯ γN · b` with `b` uniform.
    Forward,
    /// `b⁺(γ1 ⋯ γN)` from the Cartan decomposition.
    Attractor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryEstimate {
    pub points: Vec<f64>,
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
    pub method: StationaryMethod,
    /// Attractor samples dropped after ten near-rotation retries.
    pub aborted: usize,
}

impl StationaryEstimate {
    pub fn measure(&self) -> Result<CircleMeasure> {
        CircleMeasure::empirical(&self.points)
    }
}

fn forward_sample(spec: &MeasureSpec, burn_in: usize, rng: &mut ChaCha8Rng) -> f64 {
    let x0: f64 = rng.random_range(0.0..PI);
    let mut w = [x0.cos(), x0.sin()];
    for i in 0..burn_in {
        w = spec.sample(rng).apply(w);
        if i % 16 == 15 {
            let n = w[0].hypot(w[1]);
            w = [w[0] / n, w[1] / n];
        }
    }
    ProjectivePoint::from_vector(w).angle
}

fn attractor_sample(spec: &MeasureSpec, burn_in: usize, rng: &mut ChaCha8Rng) -> Option<f64> {
    let mut len = burn_in;
    for _ in 0..=10 {
        let mut m = [1.0, 0.0, 0.0, 1.0];
        for i in 0..len {
            m = mat_mul(m, spec.sample(rng).as_array());
            if (i + 1) % RENORMALIZE_EVERY == 0 {
                let n = spectral_norm(m);
                m = m.map(|x| x / n);
            }
        }
        let det = m[0] * m[3] - m[1] * m[2];
        if det > 0.0 {
            let s = det.sqrt();
            if let Ok(g) = GroupElement::from_array(m.map(|x| x / s)) {
                if let Ok(c) = cartan_decompose(&g) {
                    return Some(c.b_plus().angle);
                }
            }
        }
        len *= 2;
    }
    None
}

pub fn estimate_stationary(
    spec: &MeasureSpec,
    burn_in: usize,
    samples: usize,
    seed: u64,
    method: StationaryMethod,
) -> Result<StationaryEstimate> {
    if burn_in < 200 {
        return Err(Error::ParameterOutOfScope(format!("burn-in {burn_in} below 200")));
    }
    if samples == 0 {
        return Err(Error::ParameterOutOfScope("no samples requested".into()));
    }
    let raw: Vec<Option<f64>> = batched(samples, seed, tag::STATIONARY, |rng, r| {
        r.map(|_| match method {
            StationaryMethod::Forward => Some(forward_sample(spec, burn_in, rng)),
            StationaryMethod::Attractor => attractor_sample(spec, burn_in, rng),
        })
        .collect()
    });
    let aborted = raw.iter().filter(|x| x.is_none()).count();
    let points: Vec<f64> = raw.into_iter().flatten().collect();
    if points.is_empty() {
        return Err(Error::NearRotation { norm: 1.0 });
    }
    Ok(StationaryEstimate { samples: points.len(), points, burn_in, seed, method, aborted })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppedWalk {
    pub tau: u64,
    pub product: GroupElement,
    /// Direction of `(γ1 ⋯ γτ)ᵀ v̂`.
    pub direction: f64,
    /// `P` does not exceed the largest atom norm.
    pub flagged: bool,
}

/// First `n ≥ 1` with `‖(γ1 ⋯ γn)ᵀ v̂‖ ≥ P`.
pub fn stopping_time_walk_with(
    spec: &MeasureSpec,
    v: ProjectivePoint,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> Result<StoppedWalk> {
    let mut w = v.vector();
    let mut log_w = 0.0;
    let target = p.max(f64::MIN_POSITIVE).ln();
    let mut product = GroupElement::identity();
    for n in 1..=STOPPING_CAP {
        let g = spec.sample(rng);
        product = product * *g;
        w = g.transpose().apply(w);
        let nw = w[0].hypot(w[1]);
        log_w += nw.ln();
        w = [w[0] / nw, w[1] / nw];
        if log_w >= target {
            return Ok(StoppedWalk {
                tau: n,
                product,
                direction: ProjectivePoint::from_vector(w).angle,
                flagged: p <= spec.max_norm(),
            });
        }
    }
    Err(Error::StoppingTimeOverflow { cap: STOPPING_CAP })
}

pub fn stopping_time_walk(spec: &MeasureSpec, v: ProjectivePoint, p: f64, seed: u64) -> Result<StoppedWalk> {
    let mut rng = par::stream(seed, tag::STOPPING, 0);
    stopping_time_walk_with(spec, v, p, &mut rng)
}

/// Directions of `(γ1 ⋯ γτ)ᵀ v̂` over independent runs.
pub fn renewal_sample(spec: &MeasureSpec, v: ProjectivePoint, p: f64, runs: usize, seed: u64, stream_tag: u64) -> Result<Vec<f64>> {
    let out: Vec<Result<f64>> = batched(runs, seed, stream_tag, |rng, r| {
        r.map(|_| stopping_time_walk_with(spec, v, p, rng).map(|s| s.direction)).collect()
    });
    out.into_iter().collect()
}

/// `b⁻(a γ1 ⋯ γτ)^⊥` with `τ = inf{n : ‖a γ1 ⋯ γn‖ ≥ P‖a‖}`.
pub fn perp_renewal_sample(
    spec: &MeasureSpec,
    starts: &[GroupElement],
    p: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let out: Vec<Result<f64>> = batched(runs, seed, tag::RENEWAL ^ 0xff, |rng, r| {
        r.map(|i| {
            let a = starts[i % starts.len()];
            let target = p * a.norm();
            let mut m = a;
            for _ in 0..STOPPING_CAP {
                m = m * *spec.sample(rng);
                if m.norm() >= target {
                    return Ok(cartan_decompose(&m)?.b_minus().perp().angle);
                }
            }
            Err(Error::StoppingTimeOverflow { cap: STOPPING_CAP })
        })
        .collect()
    });
    out.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalCell {
    pub v: f64,
    pub p: f64,
    pub points: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalLevel {
    pub p: f64,
    /// Max pairwise W₁ between the empirical laws over the v-grid.
    pub statistic: f64,
    /// Bootstrap standard error of the statistic.
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalReport {
    pub cells: Vec<RenewalCell>,
    pub levels: Vec<RenewalLevel>,
    /// Last-level statistic below the first with 3-SE slack.
    pub decreased: bool,
    pub runs: usize,
    pub seed: u64,
}

fn max_pairwise_w1(laws: &[Vec<f64>]) -> Result<f64> {
    let ms: Vec<CircleMeasure> = laws.iter().map(|p| CircleMeasure::empirical(p)).collect::<Result<_>>()?;
    let mut best: f64 = 0.0;
    for i in 0..ms.len() {
        for j in i + 1..ms.len() {
            best = best.max(wasserstein1(&ms[i], &ms[j]));
        }
    }
    Ok(best)
}

const BOOTSTRAP: usize = 24;

pub fn renewal_experiment(
    spec: &MeasureSpec,
    v_grid: &[ProjectivePoint],
    p_levels: &[f64],
    runs: usize,
    seed: u64,
) -> Result<RenewalReport> {
    if v_grid.len() < 8 || p_levels.len() < 2 || runs < 1000 {
        return Err(Error::ParameterOutOfScope(
            "renewal needs ≥ 8 directions, ≥ 2 levels and ≥ 1000 runs".into(),
        ));
    }
    let mut cells = Vec::new();
    let mut levels = Vec::new();
    for (li, &p) in p_levels.iter().enumerate() {
        let mut laws = Vec::new();
        for (vi, v) in v_grid.iter().enumerate() {
            let t = tag::RENEWAL ^ (((li as u64) << 20) | ((vi as u64) << 8));
            let pts = renewal_sample(spec, *v, p, runs, seed, t)?;
            cells.push(RenewalCell { v: v.angle, p, points: pts.clone() });
            laws.push(pts);
        }
        let statistic = max_pairwise_w1(&laws)?;
        let boots: Vec<Result<f64>> = per_item(BOOTSTRAP, seed, tag::RENEWAL ^ (0xb00 + li as u64), |rng, _| {
            let resampled: Vec<Vec<f64>> = laws
                .iter()
                .map(|l| (0..l.len()).map(|_| l[rng.random_range(0..l.len())]).collect())
                .collect();
            max_pairwise_w1(&resampled)
        });
        let boots: Vec<f64> = boots.into_iter().collect::<Result<_>>()?;
        let (m, se) = mean_se(&boots);
        let sd = se * (boots.len() as f64).sqrt();
        let _ = m;
        levels.push(RenewalLevel { p, statistic, std_error: sd });
    }
    let first = &levels[0];
    let last = &levels[levels.len() - 1];
    let slack = 3.0 * first.std_error.hypot(last.std_error);
    Ok(RenewalReport { decreased: last.statistic < first.statistic + slack, cells, levels, runs, seed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    pub c_fit: f64,
    pub delta_fit: f64,
    pub degenerate: bool,
}

impl HolderFit {
    pub fn require_nondegenerate(self) -> Result<Self> {
        if self.degenerate {
            Err(Error::DegenerateFit(format!("mass profile is flat (slope {})", self.delta_fit)))
        } else {
            Ok(self)
        }
    }
}

/// Fits `max_x ν(B(x, r)) ≈ C r^δ` over the given radii.
pub fn holder_probe(measure: &CircleMeasure, radii: &[f64]) -> Result<HolderFit> {
    if radii.len() < 4 {
        return Err(Error::ParameterOutOfScope("need at least four radii".into()));
    }
    let (lo, hi) = radii.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if hi / lo < 100.0 - 1e-9 || hi >= 0.5 * PI || lo <= 0.0 {
        return Err(Error::ParameterOutOfScope("radii must span two decades inside (0, π/2)".into()));
    }
    let masses: Vec<f64> = radii
        .iter()
        .map(|&r| arc_mass_max(measure, 2.0 * r).map(|a| a.max_mass))
        .collect::<Result<_>>()?;
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let lm: Vec<f64> = masses.iter().map(|m| m.max(f64::MIN_POSITIVE).ln()).collect();
    let delta = loglog_slope(radii, &masses);
    let n = lr.len() as f64;
    let intercept = (lm.iter().sum::<f64>() - delta * lr.iter().sum::<f64>()) / n;
    let degenerate = !(delta > 0.02) || masses.iter().all(|&m| m >= 1.0 - 1e-12);
    Ok(HolderFit { radii: radii.to_vec(), masses, c_fit: intercept.exp(), delta_fit: delta, degenerate })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeDeviation {
    pub n: usize,
    pub eps: f64,
    pub rate: f64,
    pub std_error: f64,
    pub runs: usize,
    /// False when `χ̂ ≤ 0` (compact support): the tube is not meaningful.
    pub applicable: bool,
}

/// Fraction of runs with `|n χ̂ − log‖γ1 ⋯ γn‖| > εn`.
pub fn large_deviation_probe(
    spec: &MeasureSpec,
    n: usize,
    eps: f64,
    chi_hat: f64,
    runs: usize,
    seed: u64,
) -> Result<LargeDeviation> {
    if runs < 1000 {
        return Err(Error::ParameterOutOfScope(format!("runs {runs} below 1000")));
    }
    let applicable = chi_hat > 1e-12 && !spec.is_compact(1e-12);
    let hits = batched(runs, seed, tag::LARGE_DEVIATION ^ n as u64, |rng, r| {
        r.map(|_| {
            let l = walk_log_norm(spec, n, rng);
            if (n as f64 * chi_hat - l).abs() > eps * n as f64 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
    });
    let rate = hits.iter().sum::<f64>() / runs as f64;
    let std_error = (rate * (1.0 - rate) / runs as f64).sqrt();
    Ok(LargeDeviation { n, eps, rate, std_error, runs, applicable })
}

/// W₁ between two samples against a permutation null: the pooled sample is
/// split at random `replicates` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct W1Comparison {
    pub distance: f64,
    pub null_mean: f64,
    pub null_sd: f64,
}

impl W1Comparison {
    /// `distance ≤ null_mean + k·null_sd`.
    pub fn within(&self, k: f64) -> bool {
        self.distance <= self.null_mean + k * self.null_sd
    }
}

pub fn w1_compare(a: &[f64], b: &[f64], replicates: usize, seed: u64) -> Result<W1Comparison> {
    let distance = wasserstein1(&CircleMeasure::empirical(a)?, &CircleMeasure::empirical(b)?);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let nulls: Vec<Result<f64>> = per_item(replicates, seed, tag::CONSISTENCY, |rng, _| {
        let mut p = pooled.clone();
        // partial Fisher–Yates: the first |a| entries form a uniform subset
        for i in 0..a.len() {
            let j = rng.random_range(i..p.len());
            p.swap(i, j);
        }
        let (x, y) = p.split_at(a.len());
        Ok(wasserstein1(&CircleMeasure::empirical(x)?, &CircleMeasure::empirical(y)?))
    });
    let nulls: Vec<f64> = nulls.into_iter().collect::<Result<_>>()?;
    let (m, se) = mean_se(&nulls);
    Ok(W1Comparison { distance, null_mean: m, null_sd: se * (nulls.len() as f64).sqrt() })
}

/// One μ-step pushforward of half the sample against the other half.
pub fn stationarity_check(spec: &MeasureSpec, est: &StationaryEstimate, seed: u64) -> Result<W1Comparison> {
    let half = est.points.len() / 2;
    let (a, b) = est.points.split_at(half);
    let pushed: Vec<f64> = batched(b.len(), seed, tag::CONSISTENCY ^ 1, |rng, r| {
        r.map(|i| act(spec.sample(rng), ProjectivePoint::new(b[i])).angle).collect()
    });
    w1_compare(a, &pushed, 64, seed)
}

/// `γ1 ⋯ γτ · b` with `τ = τ_{P,v}` and `b` from half the sample, against
/// the other half.
pub fn stopped_walk_invariance_check(
    spec: &MeasureSpec,
    est: &StationaryEstimate,
    v: ProjectivePoint,
    p: f64,
    seed: u64,
) -> Result<W1Comparison> {
    let half = est.points.len() / 2;
    let (a, b) = est.points.split_at(half);
    let moved: Vec<Result<f64>> = batched(b.len(), seed, tag::CONSISTENCY ^ 2, |rng, r| {
        r.map(|i| {
            let s = stopping_time_walk_with(spec, v, p, rng)?;
            Ok(act(&s.product, ProjectivePoint::new(b[i])).angle)
        })
        .collect()
    });
    let moved: Vec<f64> = moved.into_iter().collect::<Result<_>>()?;
    w1_compare(a, &moved, 64, seed)
}

/// Half the sample against the other half rotated by `angle`.
pub fn rotation_invariance_check(est: &StationaryEstimate, angle: f64, seed: u64) -> Result<W1Comparison> {
    let half = est.points.len() / 2;
    let (a, b) = est.points.split_at(half);
    let rotated: Vec<f64> = b.iter().map(|x| reduce_angle(x + angle)).collect();
    w1_compare(a, &rotated, 64, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(g: GroupElement) -> MeasureSpec {
        MeasureSpec::uniform_float("single", vec![g]).unwrap()
    }

    #[test]
    fn lyapunov_deterministic_walks() {
        let e = estimate_lyapunov(&single(GroupElement::diag(2.0)), 1000, 100, 1).unwrap();
        assert_relative_eq!(e.chi_hat, 2f64.ln(), epsilon = 1e-12);
        assert!(e.std_error < 1e-12);
        let r = estimate_lyapunov(&single(GroupElement::rotation(0.7)), 1000, 100, 1).unwrap();
        assert!(r.chi_hat.abs() < 1e-12 && r.compact);
        assert!(estimate_lyapunov(&single(GroupElement::diag(2.0)), 10, 100, 1).is_err());
    }

    #[test]
    fn log_norm_bookkeeping() {
        let g = GroupElement::from_cartan(0.3, 2.0, 1.1);
        let h = GroupElement::from_cartan(1.2, 1.5, 0.2);
        let gs: Vec<GroupElement> = (0..1000).map(|i| if i % 3 == 0 { h } else { g }).collect();
        let direct = {
            let mut acc = 0.0;
            let mut m = [1.0, 0.0, 0.0, 1.0];
            for x in &gs {
                m = mat_mul(m, x.as_array());
                let n = spectral_norm(m);
                acc += n.ln();
                m = m.map(|y| y / n);
            }
            acc
        };
        assert_relative_eq!(log_norm_of_product(&gs), direct, max_relative = 1e-8);
    }

    #[test]
    fn stationary_diagonal_collapses() {
        for method in [StationaryMethod::Forward, StationaryMethod::Attractor] {
            let e = estimate_stationary(&single(GroupElement::diag(2.0)), 200, 50, 3, method).unwrap();
            assert!(e.points.iter().all(|&x| x.min(PI - x) < 1e-9), "{method:?}");
        }
    }

    #[test]
    fn stopping_time_diagonal() {
        let s = stopping_time_walk(&single(GroupElement::diag(4.0)), ProjectivePoint::new(0.0), 100.0, 0).unwrap();
        assert_eq!(s.tau, 4);
        assert!(!s.flagged);
        let s = stopping_time_walk(&single(GroupElement::diag(4.0)), ProjectivePoint::new(0.0), 1.0, 0).unwrap();
        assert_eq!(s.tau, 1);
        assert!(s.flagged);
        let rot = single(GroupElement::rotation(0.3));
        // a rotation never expands; the cap is hit
        assert!(matches!(
            stopping_time_walk(&rot, ProjectivePoint::new(0.0), 2.0, 0),
            Err(Error::StoppingTimeOverflow { .. })
        ));
    }

    #[test]
    fn holder_uniform_and_atom() {
        let radii = [0.001, 0.003, 0.01, 0.03, 0.1];
        let f = holder_probe(&CircleMeasure::uniform(1 << 14), &radii).unwrap();
        assert!((f.delta_fit - 1.0).abs() < 0.05 && !f.degenerate);
        let f = holder_probe(&CircleMeasure::point(0.4), &radii).unwrap();
        assert!(f.delta_fit.abs() < 1e-9 && f.degenerate);
        assert!(f.require_nondegenerate().is_err());
    }

    #[test]
    fn large_deviation_trivial_cases() {
        let d = single(GroupElement::diag(3.0));
        let ld = large_deviation_probe(&d, 100, 0.1, 3f64.ln(), 1000, 1).unwrap();
        assert_eq!(ld.rate, 0.0);
        let r = single(GroupElement::rotation(0.3));
        assert!(!large_deviation_probe(&r, 100, 0.1, 0.0, 1000, 1).unwrap().applicable);
    }
}

//! Floating-point geometry of PSL(2,R): composition, norms, Cartan
//! decomposition, the projective action on the circle chart, Lie-algebra
//! exponential and logarithm, and the metric proxy.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce an angle into `[0, π)`.
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Signed difference `a - b` reduced into `[-π/2, π/2)`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if d >= FRAC_PI_2 {
        d - PI
    } else {
        d
    }
}

/// Largest singular value of an arbitrary real 2×2 matrix.
pub fn spectral_norm(m: [f64; 4]) -> f64 {
    let f2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + m[3] * m[3];
    let det = (m[0] * m[3] - m[1] * m[2]).abs();
    let a = (f2 + 2.0 * det).max(0.0).sqrt();
    let b = (f2 - 2.0 * det).max(0.0).sqrt();
    0.5 * (a + b)
}

/// Row-major product of two raw 2×2 matrices.
#[inline]
pub fn mat_mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// A unit-determinant real 2×2 matrix, read projectively as an element of
/// PSL(2,R).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl GroupElement {
    /// Builds an element, dividing by `sqrt(det)` when the determinant drifts
    /// from one by more than rounding noise.
    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Result<Self> {
        let det = m11 * m22 - m12 * m21;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::DomainError(format!(
                "matrix determinant {det} is not positive"
            )));
        }
        Ok(GroupElement { m11, m12, m21, m22 }.renormalized())
    }

    pub fn from_array(m: [f64; 4]) -> Result<Self> {
        Self::new(m[0], m[1], m[2], m[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn identity() -> Self {
        GroupElement { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 }
    }

    /// Rotation `R_t`, acting on the chart by `x ↦ x + t`.
    pub fn rotation(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        GroupElement { m11: c, m12: -s, m21: s, m22: c }
    }

    pub fn diag(lambda: f64) -> Self {
        GroupElement { m11: lambda, m12: 0.0, m21: 0.0, m22: 1.0 / lambda }
    }

    /// `R_θ1 · diag(λ, 1/λ) · R_{-θ2}`.
    pub fn from_cartan(theta1: f64, lambda: f64, theta2: f64) -> Self {
        Self::rotation(theta1) * Self::diag(lambda) * Self::rotation(-theta2)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Divides by `sqrt(det)` when the determinant drift exceeds the rounding
    /// noise of `ad − bc`, which grows like `‖g‖² ε`.
    pub fn renormalized(self) -> Self {
        let det = self.det();
        let noise = 64.0 * f64::EPSILON * ((self.m11 * self.m22).abs() + (self.m12 * self.m21).abs());
        if (det - 1.0).abs() > noise.max(1e-13) {
            let s = det.sqrt();
            GroupElement {
                m11: self.m11 / s,
                m12: self.m12 / s,
                m21: self.m21 / s,
                m22: self.m22 / s,
            }
        } else {
            self
        }
    }

    /// Operator norm (largest singular value). Always at least one.
    pub fn norm(&self) -> f64 {
        spectral_norm(self.as_array()).max(1.0)
    }

    pub fn frobenius(&self) -> f64 {
        (self.m11 * self.m11 + self.m12 * self.m12 + self.m21 * self.m21 + self.m22 * self.m22)
            .sqrt()
    }

    pub fn inverse(&self) -> Self {
        GroupElement { m11: self.m22, m12: -self.m12, m21: -self.m21, m22: self.m11 }
    }

    pub fn transpose(&self) -> Self {
        GroupElement { m11: self.m11, m12: self.m21, m21: self.m12, m22: self.m22 }
    }

    pub fn neg(&self) -> Self {
        GroupElement { m11: -self.m11, m12: -self.m12, m21: -self.m21, m22: -self.m22 }
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }

    /// Largest absolute entry difference, modulo the global sign.
    pub fn max_entry_diff_psl(&self, other: &GroupElement) -> f64 {
        let a = self.as_array();
        let b = other.as_array();
        let plus = (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
        let minus = (0..4).map(|i| (a[i] + b[i]).abs()).fold(0.0, f64::max);
        plus.min(minus)
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        let m = mat_mul(self.as_array(), rhs.as_array());
        GroupElement { m11: m[0], m12: m[1], m21: m[2], m22: m[3] }.renormalized()
    }
}

/// A point of the projective line, stored as its chart angle in `[0, π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    pub angle: f64,
}

impl ProjectivePoint {
    pub fn new(angle: f64) -> Self {
        ProjectivePoint { angle: reduce_angle(angle) }
    }

    pub fn from_vector(v: [f64; 2]) -> Self {
        Self::new(v[1].atan2(v[0]))
    }

    pub fn vector(&self) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [c, s]
    }

    pub fn perp(&self) -> Self {
        Self::new(self.angle + FRAC_PI_2)
    }

    /// Chart distance on `R/πZ`.
    pub fn distance(&self, other: &ProjectivePoint) -> f64 {
        angle_diff(self.angle, other.angle).abs()
    }
}

/// Coefficients in the trace-zero basis
/// `E1 = [[1,0],[0,-1]]`, `E2 = [[0,1],[1,0]]`, `E3 = [[0,-1],[1,0]]`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct LieVector {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl LieVector {
    pub const E1: LieVector = LieVector { c1: 1.0, c2: 0.0, c3: 0.0 };
    pub const E2: LieVector = LieVector { c1: 0.0, c2: 1.0, c3: 0.0 };
    pub const E3: LieVector = LieVector { c1: 0.0, c2: 0.0, c3: 1.0 };

    pub fn new(c1: f64, c2: f64, c3: f64) -> Self {
        LieVector { c1, c2, c3 }
    }

    pub fn norm(&self) -> f64 {
        (self.c1 * self.c1 + self.c2 * self.c2 + self.c3 * self.c3).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        LieVector { c1: self.c1 * s, c2: self.c2 * s, c3: self.c3 * s }
    }

    pub fn add(&self, o: &LieVector) -> Self {
        LieVector { c1: self.c1 + o.c1, c2: self.c2 + o.c2, c3: self.c3 + o.c3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    /// The represented trace-zero matrix, row-major.
    pub fn matrix(&self) -> [f64; 4] {
        [self.c1, self.c2 - self.c3, self.c2 + self.c3, -self.c1]
    }

    /// Squared eigenvalue of the matrix: `X² = (c1² + c2² − c3²) I`.
    pub fn mu_squared(&self) -> f64 {
        self.c1 * self.c1 + self.c2 * self.c2 - self.c3 * self.c3
    }
}

/// `g = R_θ1 · diag(λ, 1/λ) · R_{-θ2}` with `λ > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanForm {
    pub theta1: f64,
    pub lambda: f64,
    pub theta2: f64,
}

impl CartanForm {
    /// Attracting direction `b⁺(g)`.
    pub fn b_plus(&self) -> ProjectivePoint {
        ProjectivePoint::new(self.theta1)
    }

    /// Repelling direction `b⁻(g)`.
    pub fn b_minus(&self) -> ProjectivePoint {
        ProjectivePoint::new(self.theta2 + FRAC_PI_2)
    }

    /// Rebuilds the element (up to the global sign).
    pub fn reconstruct(&self) -> GroupElement {
        GroupElement::from_cartan(self.theta1, self.lambda, self.theta2)
    }
}

/// Cartan decomposition via the closed-form 2×2 singular value decomposition.
pub fn cartan_decompose(g: &GroupElement) -> Result<CartanForm> {
    let [a, b, c, d] = g.as_array();
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let gg = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(gg);
    let lambda = q + r;
    if lambda <= 1.0 + 1e-9 {
        return Err(Error::NearRotation { norm: lambda });
    }
    let a1 = gg.atan2(f);
    let a2 = h.atan2(e);
    // g = R_{(a2+a1)/2} diag(λ, 1/λ) R_{(a2-a1)/2}
    Ok(CartanForm {
        theta1: reduce_angle(0.5 * (a2 + a1)),
        lambda,
        theta2: reduce_angle(-0.5 * (a2 - a1)),
    })
}

/// Projective action in the chart: `φ(g · φ⁻¹(x))`.
pub fn act(g: &GroupElement, b: ProjectivePoint) -> ProjectivePoint {
    ProjectivePoint::from_vector(g.apply(b.vector()))
}

/// Derivative of the chart action at `x`; equals `det g / |g v(x)|²`.
pub fn act_derivative(g: &GroupElement, x: f64) -> f64 {
    let w = g.apply([x.cos(), x.sin()]);
    g.det() / (w[0] * w[0] + w[1] * w[1])
}

pub fn exp_map(u: &LieVector) -> GroupElement {
    let m2 = u.mu_squared();
    let (c, s) = if m2.abs() < 1e-6 {
        // series in m2 to O(m2^4)
        let c = 1.0 + m2 / 2.0 + m2 * m2 / 24.0 + m2 * m2 * m2 / 720.0;
        let s = 1.0 + m2 / 6.0 + m2 * m2 / 120.0 + m2 * m2 * m2 / 5040.0;
        (c, s)
    } else if m2 > 0.0 {
        let mu = m2.sqrt();
        (mu.cosh(), mu.sinh() / mu)
    } else {
        let mu = (-m2).sqrt();
        (mu.cos(), mu.sin() / mu)
    };
    let x = u.matrix();
    GroupElement {
        m11: c + s * x[0],
        m12: s * x[1],
        m21: s * x[2],
        m22: c + s * x[3],
    }
    .renormalized()
}

/// Principal logarithm of the positive-trace representative of `±g`.
pub fn log_map(g: &GroupElement) -> Result<LieVector> {
    let g = if g.trace() < 0.0 { g.neg() } else { *g };
    let t = g.trace();
    if t <= 1e-12 {
        return Err(Error::OutsideLogDomain(format!(
            "trace {t} gives an ambiguous logarithm in PSL(2,R)"
        )));
    }
    let half = 0.5 * t;
    // X = (g - t/2 I) · f, where f = μ / sinh μ or μ / sin μ
    let f = if (half - 1.0).abs() < 1e-8 {
        let m2 = 2.0 * (half - 1.0);
        1.0 - m2 / 6.0 + 7.0 * m2 * m2 / 360.0
    } else if half > 1.0 {
        let mu = half.acosh();
        mu / mu.sinh()
    } else {
        let mu = half.acos();
        mu / mu.sin()
    };
    let x11 = (g.m11 - half) * f;
    let x12 = g.m12 * f;
    let x21 = g.m21 * f;
    Ok(LieVector { c1: x11, c2: 0.5 * (x12 + x21), c3: 0.5 * (x21 - x12) })
}

/// `min(‖I − a⁻¹b‖_F, ‖I + a⁻¹b‖_F)`.
pub fn group_distance(a: &GroupElement, b: &GroupElement) -> f64 {
    let m = a.inverse() * *b;
    let minus = ((1.0 - m.m11).powi(2) + m.m12.powi(2) + m.m21.powi(2) + (1.0 - m.m22).powi(2))
        .sqrt();
    let plus = ((1.0 + m.m11).powi(2) + m.m12.powi(2) + m.m21.powi(2) + (1.0 + m.m22).powi(2))
        .sqrt();
    minus.min(plus)
}

/// `ρ_b(v)`: derivative at `t = 0` of `t ↦ φ(exp(tv) b)`.
/// In coordinates, `c3 + c2 cos 2x − c1 sin 2x`.
pub fn rho_form(b: ProjectivePoint, v: &LieVector) -> f64 {
    let (s2, c2) = (2.0 * b.angle).sin_cos();
    v.c3 + v.c2 * c2 - v.c1 * s2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedArc {
    pub center: f64,
    pub start: f64,
    pub length: f64,
}

impl ExcludedArc {
    pub fn contains(&self, x: f64) -> bool {
        angle_diff(x, self.center).abs() < 0.5 * self.length
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroArcs {
    pub arcs: Vec<ExcludedArc>,
    /// Minimum of `|ρ_b(v)|` over points outside every arc (with `v` normalized).
    pub delta: f64,
}

/// Arcs of length `t` centred on the zeros of `b ↦ ρ_b(v)`, and the realized
/// lower bound of `|ρ_b(v)|` outside them.
pub fn rho_zero_arcs(v: &LieVector, t: f64) -> Result<ZeroArcs> {
    let n = v.norm();
    if !(n > 0.0) {
        return Err(Error::DomainError("zero Lie vector".into()));
    }
    if !(t > 0.0 && t < std::f64::consts::FRAC_PI_4) {
        return Err(Error::DomainError(format!("arc length {t} outside (0, π/4)")));
    }
    let v = v.scale(1.0 / n);
    let amp = v.c1.hypot(v.c2);
    // c2 cos 2x − c1 sin 2x = amp · cos(2x + ψ)
    let psi = v.c1.atan2(v.c2);
    let mut zeros = Vec::new();
    if amp > 0.0 && v.c3.abs() <= amp {
        let base = (-v.c3 / amp).clamp(-1.0, 1.0).acos();
        zeros.push(reduce_angle(0.5 * (base - psi)));
        let z2 = reduce_angle(0.5 * (-base - psi));
        if angle_diff(z2, zeros[0]).abs() > 1e-15 {
            zeros.push(z2);
        }
    }
    zeros.sort_by(|a, b| a.total_cmp(b));
    let arcs: Vec<ExcludedArc> = zeros
        .iter()
        .map(|&z| ExcludedArc { center: z, start: reduce_angle(z - 0.5 * t), length: t })
        .collect();
    let mut candidates: Vec<f64> = Vec::new();
    for a in &arcs {
        candidates.push(a.center - 0.5 * a.length);
        candidates.push(a.center + 0.5 * a.length);
    }
    candidates.push(reduce_angle(-0.5 * psi));
    candidates.push(reduce_angle(0.5 * (PI - psi)));
    let delta = candidates
        .into_iter()
        .filter(|&x| !arcs.iter().any(|a| a.contains(x) && angle_diff(x, a.center).abs() < 0.5 * a.length - 1e-15))
        .map(|x| rho_form(ProjectivePoint::new(x), &v).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(ZeroArcs { arcs, delta })
}

/// Outcome of the first-order Taylor comparison along a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorCheck {
    pub error: f64,
    pub bound_ratio: f64,
    /// Smallest `d(b⁺(g_i), b⁻(g_{i+1}))` along the chain.
    pub min_alignment: f64,
    pub alignment_violated: bool,
}

/// Compares `φ(g1 exp(u1) … gn exp(un) b)` with its first-order expansion
/// `φ(g1 … gn b) + Σ ζ_i(u_i)`.
///
/// `ζ_i(u) = D_u φ(g1 … g_i exp(u) g_{i+1} … gn b)` is evaluated by the chain
/// rule as `act_derivative(g1…g_i, x_i) · ρ_{b_i}(u)` with
/// `b_i = g_{i+1} … gn b`; `zeta_by_finite_difference` gives the same number
/// by central differences. Alignment is checked against `t`.
pub fn taylor_linearization_check(
    gs: &[GroupElement],
    us: &[LieVector],
    b: ProjectivePoint,
    r: f64,
    t: f64,
) -> Result<TaylorCheck> {
    if gs.len() != us.len() || gs.is_empty() {
        return Err(Error::DomainError("need equally many g_i and u_i (at least one)".into()));
    }
    let n = gs.len();
    let mut perturbed = GroupElement::identity();
    for (g, u) in gs.iter().zip(us) {
        perturbed = perturbed * *g * exp_map(u);
    }
    let x = act(&perturbed, b);

    // prefixes P_i = g1…g_i and suffix points b_i = g_{i+1}…gn b
    let mut prefixes = Vec::with_capacity(n);
    let mut acc = GroupElement::identity();
    for g in gs {
        acc = acc * *g;
        prefixes.push(acc);
    }
    let mut suffix_points = vec![b; n];
    let mut p = b;
    for i in (0..n).rev() {
        suffix_points[i] = p;
        p = act(&gs[i], p);
    }
    let base = act(&acc, b);
    let mut s = 0.0;
    for i in 0..n {
        s += act_derivative(&prefixes[i], suffix_points[i].angle) * rho_form(suffix_points[i], &us[i]);
    }
    let error = angle_diff(x.angle, base.angle + s).abs();
    let norm = acc.norm();
    let bound_ratio = error / (norm * norm * r * r);

    let mut min_alignment = f64::INFINITY;
    let mut violated = false;
    for i in 0..n.saturating_sub(1) {
        match (cartan_decompose(&gs[i]), cartan_decompose(&gs[i + 1])) {
            (Ok(c1), Ok(c2)) => {
                let d = c1.b_plus().distance(&c2.b_minus());
                min_alignment = min_alignment.min(d);
                if d <= t {
                    violated = true;
                }
            }
            _ => violated = true,
        }
    }
    Ok(TaylorCheck { error, bound_ratio, min_alignment, alignment_violated: violated })
}

/// Central-difference value of `ζ_i(u)` with step `h`.
pub fn zeta_by_finite_difference(
    gs: &[GroupElement],
    i: usize,
    u: &LieVector,
    b: ProjectivePoint,
    h: f64,
) -> f64 {
    let eval = |s: f64| {
        let mut m = GroupElement::identity();
        for (j, g) in gs.iter().enumerate() {
            m = m * *g;
            if j == i {
                m = m * exp_map(&u.scale(s));
            }
        }
        act(&m, b).angle
    };
    angle_diff(eval(h), eval(-h)) / (2.0 * h)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Runs the Taylor comparison for `u_i = r · dirs_i` over each `r` and returns
/// the log-log slope of the error against `r`.
pub fn taylor_slope(
    gs: &[GroupElement],
    dirs: &[LieVector],
    b: ProjectivePoint,
    rs: &[f64],
    t: f64,
) -> Result<(f64, Vec<TaylorCheck>)> {
    let mut checks = Vec::with_capacity(rs.len());
    for &r in rs {
        let us: Vec<LieVector> = dirs.iter().map(|d| d.scale(r)).collect();
        checks.push(taylor_linearization_check(gs, &us, b, r, t)?);
    }
    let errs: Vec<f64> = checks.iter().map(|c| c.error).collect();
    Ok((loglog_slope(rs, &errs), checks))
}

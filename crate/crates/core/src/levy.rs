//! Lévy triplets, their characteristic exponent ψ and the log-moment
//! generating function Ψ(ξ) = ψ(−iξ).
//!
//! Discrete measures are summed exactly. Density measures are integrated by
//! adaptive composite Gauss–Legendre on geometric panels
//! `[ρ, 10ρ, …, 1, 2, 4, …, R]`, extended past `R` by doubling panels until
//! the tail contribution is negligible. The region `(0, ρ)` is handled by a
//! Taylor expansion of the kernel against a local power-law fit of the
//! density, so the compensated integrand never suffers cancellation.
//!
//! Ψ is an extended-real function: outside its (declared or numerically
//! detected) domain it evaluates to `+∞` instead of failing.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, GaussLegendre};

/// A point mass of the Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub size: f64,
    pub mass: f64,
}

/// Quadrature settings for density measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Initial truncation radius; the tail beyond it is added panel by panel.
    pub radius: f64,
    /// Gauss–Legendre nodes per panel (one panel per decade below 1).
    pub nodes_per_decade: usize,
    /// Small-jump cutoff ρ below which the kernel is Taylor expanded.
    pub cutoff: f64,
    /// Absolute tolerance per panel.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { radius: 50.0, nodes_per_decade: 16, cutoff: 1e-10, tol: 1e-12 }
    }
}

/// Which half-lines carry the density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Positive,
    Negative,
    Both,
}

impl Support {
    fn sides(self) -> &'static [f64] {
        match self {
            Support::Positive => &[1.0],
            Support::Negative => &[-1.0],
            Support::Both => &[-1.0, 1.0],
        }
    }
}

/// Named density families with closed-form parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `½·α(α−1)/Γ(2−α) · e^{−m y} / y^{1+α}` on `y > 0`.
    TemperedStable { alpha: f64, m: f64 },
    /// `e^{−|z|^α}` on `z ≠ 0`.
    ExponentialTail { alpha: f64 },
    Custom,
}

type LogDensity = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An absolutely continuous Lévy measure given through its log-density.
#[derive(Clone)]
pub struct DensityMeasure {
    log_density: LogDensity,
    support: Support,
    /// Declared exponential tail rates `[negative side, positive side]`:
    /// `Some(r)` means `∫ e^{λ|y|} ν(dy)` over that side is finite for
    /// `λ < r` and infinite for `λ > r`. `None` leaves it to the quadrature.
    tail_rates: [Option<f64>; 2],
    quad: QuadratureSpec,
    family: Family,
}

impl fmt::Debug for DensityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMeasure")
            .field("support", &self.support)
            .field("tail_rates", &self.tail_rates)
            .field("quad", &self.quad)
            .field("family", &self.family)
            .finish()
    }
}

impl DensityMeasure {
    pub fn new(
        log_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: Support,
        tail_rates: [Option<f64>; 2],
        quad: QuadratureSpec,
    ) -> Result<Self> {
        let m = Self { log_density: Arc::new(log_density), support, tail_rates, quad, family: Family::Custom };
        m.validate()?;
        Ok(m)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.quad
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Result<Self> {
        self.quad = quad;
        self.validate()?;
        Ok(self)
    }

    /// Density value at `y` (zero off the support).
    pub fn density(&self, y: f64) -> f64 {
        if y == 0.0 || !self.on_support(y) {
            return 0.0;
        }
        (self.log_density)(y).exp()
    }

    pub(crate) fn log_density(&self, y: f64) -> f64 {
        if y == 0.0 || !self.on_support(y) {
            return f64::NEG_INFINITY;
        }
        (self.log_density)(y)
    }

    fn on_support(&self, y: f64) -> bool {
        match self.support {
            Support::Positive => y > 0.0,
            Support::Negative => y < 0.0,
            Support::Both => y != 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let q = &self.quad;
        if !(q.radius > 1.0 && q.radius.is_finite()) {
            return Err(Error::InvalidMeasure(format!("truncation radius must exceed 1, got {}", q.radius)));
        }
        if !(q.cutoff > 0.0 && q.cutoff < 1.0) {
            return Err(Error::InvalidMeasure(format!("quadrature cutoff must lie in (0, 1), got {}", q.cutoff)));
        }
        if q.nodes_per_decade < 2 {
            return Err(Error::InvalidMeasure("need at least 2 nodes per decade".into()));
        }
        if !(q.tol > 0.0) {
            return Err(Error::InvalidMeasure("quadrature tolerance must be positive".into()));
        }
        for &s in self.support.sides() {
            for k in 0..50 {
                let y = s * 10f64.powf(-10.0 + 0.3 * k as f64);
                let l = (self.log_density)(y);
                if l.is_nan() || l == f64::INFINITY {
                    return Err(Error::InvalidMeasure(format!("log-density is {l} at y = {y}")));
                }
            }
        }
        // ∫ (y² ∧ 1) ν(dy) < ∞
        let small = self.moment_between(|y| y * y, 0.0, 1.0)?;
        let large = self.moment_between(|_| 1.0, 1.0, f64::INFINITY)?;
        if !(small.is_finite() && large.is_finite()) {
            return Err(Error::InvalidMeasure("∫(y²∧1) ν(dy) is not finite".into()));
        }
        Ok(())
    }

    /// Local power law `f(y) ≈ f(ρ)(y/ρ)^{−β}` on one side, used below the cutoff.
    fn inner_fit(&self, side: f64) -> Result<(f64, f64)> {
        let rho = self.quad.cutoff;
        let l1 = self.log_density(side * rho);
        let l0 = self.log_density(side * rho / 10.0);
        if l1 == f64::NEG_INFINITY {
            return Ok((0.0, 0.0));
        }
        let beta = (l0 - l1) / std::f64::consts::LN_10;
        if !(beta < 3.0) {
            return Err(Error::InvalidMeasure(format!(
                "density grows like |y|^-{beta:.3} at 0; ∫ y² ν(dy) diverges"
            )));
        }
        Ok((l1.exp(), beta))
    }

    /// `∫_0^ρ |y|^k f` on one side under the power-law fit.
    fn inner_moment(&self, side: f64, k: i32) -> Result<f64> {
        let (f_rho, beta) = self.inner_fit(side)?;
        let rho = self.quad.cutoff;
        let p = k as f64 + 1.0 - beta;
        if f_rho == 0.0 {
            return Ok(0.0);
        }
        if p <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(f_rho * rho.powi(k + 1) / p)
    }

    fn panel_edges(&self) -> Vec<f64> {
        let q = &self.quad;
        let mut edges = vec![q.cutoff];
        let mut y = q.cutoff;
        while y * 10.0 < 1.0 {
            y *= 10.0;
            edges.push(y);
        }
        edges.push(1.0);
        let mut y = 1.0;
        while y * 2.0 < q.radius {
            y *= 2.0;
            edges.push(y);
        }
        edges.push(q.radius);
        edges
    }

    /// Integrates `kernel(y)` (which already includes the density) over one
    /// side from ρ to ∞. Components that fail to converge while growing are
    /// reported as divergent (`+∞` after sign handling by the caller).
    fn side_integral<const K: usize>(
        &self,
        rule: &GaussLegendre,
        kernel: &impl Fn(f64) -> [f64; K],
    ) -> SideIntegral<K> {
        let edges = self.panel_edges();
        let mut value = [0.0; K];
        let mut residual = 0.0;
        let mut converged = true;
        for w in edges.windows(2) {
            let r = adaptive(rule, w[0], w[1], self.quad.tol, kernel);
            for (v, x) in value.iter_mut().zip(r.value) {
                *v += x;
            }
            residual += r.error;
            converged &= r.converged;
        }
        let mut divergent = [false; K];
        let mut done = [false; K];
        for k in 0..K {
            if !value[k].is_finite() {
                divergent[k] = true;
                done[k] = true;
            }
        }
        let mut prev = [f64::INFINITY; K];
        let mut growing = [false; K];
        let mut lo = self.quad.radius;
        let mut last = [0.0_f64; K];
        for _ in 0..MAX_TAIL_DOUBLINGS {
            if done.iter().all(|d| *d) {
                break;
            }
            let hi = 2.0 * lo;
            let r = adaptive(rule, lo, hi, self.quad.tol, kernel);
            residual += if r.error.is_finite() { r.error } else { 0.0 };
            for k in 0..K {
                if done[k] {
                    continue;
                }
                let c = r.value[k];
                if !c.is_finite() {
                    divergent[k] = true;
                    done[k] = true;
                    continue;
                }
                value[k] += c;
                let mag = c.abs();
                growing[k] = mag > prev[k];
                if mag <= self.quad.tol.max(1e-15 * value[k].abs()) && mag <= prev[k] {
                    done[k] = true;
                }
                prev[k] = mag;
                last[k] = mag;
            }
            lo = hi;
        }
        for k in 0..K {
            if !done[k] {
                if growing[k] {
                    divergent[k] = true;
                } else {
                    converged = false;
                    residual += last[k];
                }
            }
        }
        SideIntegral { value, divergent, residual, converged }
    }

    /// `∫_{lo < |y| ≤ hi} g(y) ν(dy)`.
    pub(crate) fn moment_between(&self, g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
        let rule = GaussLegendre::new(self.quad.nodes_per_decade);
        let mut total = 0.0;
        for &s in self.support.sides() {
            let f = |u: f64| [g(s * u) * self.density(s * u)];
            let mut edges: Vec<f64> = Vec::new();
            let start = lo.max(0.0);
            if start < self.quad.cutoff {
                // below the cutoff: power-law fit of g·f ~ |y|^k f with k
                // estimated from g at the cutoff
                let rho = self.quad.cutoff;
                let g1 = g(s * rho);
                let g0 = g(s * rho / 10.0);
                if g1 != 0.0 {
                    let k = ((g1 / g0).abs().ln() / std::f64::consts::LN_10).round() as i32;
                    let inner = self.inner_moment(s, k)?;
                    let frac = if start > 0.0 { 1.0 - (start / rho).powf(k as f64 + 1.0 - self.inner_fit(s)?.1) } else { 1.0 };
                    total += g1.signum() * g1.abs() / rho.powi(k) * inner * frac;
                }
                edges.push(rho);
            } else {
                edges.push(start);
            }
            let mut y = edges[0];
            let upper = hi.min(self.quad.radius.max(1.0));
            while y * 10.0 < upper.min(1.0) {
                y *= 10.0;
                edges.push(y);
            }
            while y * 2.0 < upper {
                y *= 2.0;
                edges.push(y);
            }
            if upper > edges[edges.len() - 1] {
                edges.push(upper);
            }
            for w in edges.windows(2) {
                total += adaptive(&rule, w[0], w[1], self.quad.tol, &f).value[0];
            }
            if hi > upper {
                let mut lo_t = upper;
                for _ in 0..MAX_TAIL_DOUBLINGS {
                    let hi_t = (2.0 * lo_t).min(hi);
                    let c = adaptive(&rule, lo_t, hi_t, self.quad.tol, &f).value[0];
                    if !c.is_finite() {
                        return Ok(f64::INFINITY);
                    }
                    total += c;
                    if c.abs() <= self.quad.tol.max(1e-15 * total.abs()) || hi_t >= hi {
                        break;
                    }
                    lo_t = hi_t;
                }
            }
        }
        Ok(total)
    }
}

const MAX_TAIL_DOUBLINGS: usize = 64;

struct SideIntegral<const K: usize> {
    value: [f64; K],
    divergent: [bool; K],
    residual: f64,
    converged: bool,
}

/// Lévy measure ν on ℝ∖{0}.
#[derive(Debug, Clone)]
pub enum LevyMeasure {
    Atoms(Vec<Atom>),
    Density(DensityMeasure),
}

impl LevyMeasure {
    pub fn zero() -> Self {
        LevyMeasure::Atoms(Vec::new())
    }

    pub fn atoms(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom mass must be positive, got {}", a.mass)));
            }
            if a.size == 0.0 || !a.size.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom location must be finite and nonzero, got {}", a.size)));
            }
        }
        Ok(LevyMeasure::Atoms(atoms))
    }

    /// Tempered stable measure on the positive half-line.
    pub fn tempered_stable(alpha: f64, m: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidMeasure(format!("tempered stable alpha must lie in (1, 2), got {alpha}")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidMeasure(format!("tempered stable m must be positive, got {m}")));
        }
        let log_c = (0.5 * alpha * (alpha - 1.0) / gamma(2.0 - alpha)).ln();
        let quad = QuadratureSpec { radius: (50.0 / m).max(2.0), ..QuadratureSpec::default() };
        let d = DensityMeasure {
            log_density: Arc::new(move |y: f64| log_c - m * y - (1.0 + alpha) * y.ln()),
            support: Support::Positive,
            tail_rates: [Some(f64::INFINITY), Some(m)],
            quad,
            family: Family::TemperedStable { alpha, m },
        };
        d.validate()?;
        Ok(LevyMeasure::Density(d))
    }

    /// Symmetric measure with density `e^{−|z|^α}`.
    pub fn exponential_tail(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidMeasure(format!("exponential-tail alpha must be positive, got {alpha}")));
        }
        let rate = if alpha > 1.0 {
            f64::INFINITY
        } else if alpha == 1.0 {
            1.0
        } else {
            0.0
        };
        let quad = QuadratureSpec { radius: 50f64.powf(1.0 / alpha).max(2.0), ..QuadratureSpec::default() };
        let d = DensityMeasure {
            log_density: Arc::new(move |z: f64| -z.abs().powf(alpha)),
            support: Support::Both,
            tail_rates: [Some(rate), Some(rate)],
            quad,
            family: Family::ExponentialTail { alpha },
        };
        d.validate()?;
        Ok(LevyMeasure::Density(d))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, LevyMeasure::Atoms(a) if a.is_empty())
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            LevyMeasure::Atoms(atoms) => {
                let mut pos: Vec<(f64, f64)> = atoms.iter().filter(|a| a.size > 0.0).map(|a| (a.size, a.mass)).collect();
                let mut neg: Vec<(f64, f64)> = atoms.iter().filter(|a| a.size < 0.0).map(|a| (-a.size, a.mass)).collect();
                pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
                neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pos == neg
            }
            LevyMeasure::Density(d) => matches!(d.family, Family::ExponentialTail { .. }),
        }
    }

    /// Declared domain `[lo, hi]` of Ψ (endpoints may or may not be finite
    /// points of Ψ; outside, Ψ is `+∞`).
    pub fn mgf_domain(&self) -> (f64, f64) {
        match self {
            LevyMeasure::Atoms(_) => (f64::NEG_INFINITY, f64::INFINITY),
            LevyMeasure::Density(d) => {
                let neg = match d.support {
                    Support::Positive => f64::INFINITY,
                    _ => d.tail_rates[0].unwrap_or(f64::INFINITY),
                };
                let pos = match d.support {
                    Support::Negative => f64::INFINITY,
                    _ => d.tail_rates[1].unwrap_or(f64::INFINITY),
                };
                (-neg, pos)
            }
        }
    }
}

/// Ψ and (optionally) its first two derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfValue {
    pub xi: f64,
    /// `+∞` outside the domain.
    pub value: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    /// Estimated absolute quadrature error (0 for discrete measures).
    pub residual: f64,
}

impl MgfValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    /// Turns an infinite value into an [`Error::InfiniteMoment`].
    pub fn finite(self) -> Result<Self> {
        if self.value.is_finite() {
            Ok(self)
        } else {
            Err(Error::InfiniteMoment { xi: self.xi })
        }
    }
}

/// Lévy triplet `(a, σ², ν)`.
#[derive(Debug, Clone)]
pub struct LevyTriplet {
    pub a: f64,
    pub sigma2: f64,
    pub nu: LevyMeasure,
}

/// `e^u − 1 − u` without cancellation.
fn expm1_minus_u(u: f64) -> f64 {
    if u.abs() < 1e-2 {
        let u2 = u * u;
        u2 * (0.5 + u * (1.0 / 6.0 + u * (1.0 / 24.0 + u * (1.0 / 120.0 + u * (1.0 / 720.0 + u / 5040.0)))))
    } else {
        u.exp_m1() - u
    }
}

/// `cos u − 1` without cancellation.
fn cos_minus_one(u: f64) -> f64 {
    let h = (0.5 * u).sin();
    -2.0 * h * h
}

/// `sin u − u` without cancellation.
fn sin_minus_u(u: f64) -> f64 {
    if u.abs() < 1e-2 {
        let u2 = u * u;
        -u * u2 * (1.0 / 6.0 - u2 * (1.0 / 120.0 - u2 / 5040.0))
    } else {
        u.sin() - u
    }
}

impl LevyTriplet {
    pub fn new(a: f64, sigma2: f64, nu: LevyMeasure) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidInput(format!("drift a must be finite, got {a}")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma2 must be finite and >= 0, got {sigma2}")));
        }
        Ok(Self { a, sigma2, nu })
    }

    /// `(a, σ², 0)`.
    pub fn gaussian(a: f64, sigma2: f64) -> Result<Self> {
        Self::new(a, sigma2, LevyMeasure::zero())
    }

    /// Compensated Poisson process with unit jumps: Ψ(ξ) = e^ξ − 1 − ξ.
    pub fn compensated_poisson() -> Self {
        Self { a: 0.0, sigma2: 0.0, nu: LevyMeasure::Atoms(vec![Atom { size: 1.0, mass: 1.0 }]) }
    }

    /// Drift that fully compensates every jump, i.e. `a = −∫_{|y|>1} y ν(dy)`,
    /// so that Ψ(ξ) = ½σ²ξ² + ∫(e^{ξy} − 1 − ξy) ν(dy).
    pub fn compensating_drift(nu: &LevyMeasure) -> Result<f64> {
        match nu {
            LevyMeasure::Atoms(atoms) => Ok(-atoms.iter().filter(|a| a.size.abs() > 1.0).map(|a| a.size * a.mass).sum::<f64>()),
            LevyMeasure::Density(d) => Ok(-d.moment_between(|y| y, 1.0, f64::INFINITY)?),
        }
    }

    pub fn mgf_domain(&self) -> (f64, f64) {
        self.nu.mgf_domain()
    }

    /// Characteristic exponent ψ(ξ) with `E e^{iξL_t} = e^{tψ(ξ)}`.
    pub fn psi(&self, xi: f64) -> Result<Complex64> {
        let mut re = -0.5 * self.sigma2 * xi * xi;
        let mut im = self.a * xi;
        match &self.nu {
            LevyMeasure::Atoms(atoms) => {
                for at in atoms {
                    let u = xi * at.size;
                    re += at.mass * cos_minus_one(u);
                    im += at.mass * if at.size.abs() <= 1.0 { sin_minus_u(u) } else { u.sin() };
                }
            }
            LevyMeasure::Density(d) => {
                let rule = GaussLegendre::new(d.quad.nodes_per_decade);
                let mut residual = 0.0;
                for &s in d.support.sides() {
                    let kernel = |u: f64| {
                        let y = s * u;
                        let f = d.log_density(y).exp();
                        let v = xi * y;
                        let im = if u <= 1.0 { sin_minus_u(v) } else { v.sin() };
                        [f * cos_minus_one(v), f * im]
                    };
                    let r = d.side_integral(&rule, &kernel);
                    if !r.converged || r.divergent.iter().any(|x| *x) {
                        return Err(Error::QuadratureNonConvergence { residual: r.residual });
                    }
                    re += r.value[0];
                    im += r.value[1];
                    residual += r.residual;
                    let m2 = d.inner_moment(s, 2)?;
                    let m3 = d.inner_moment(s, 3)?;
                    re += -0.5 * xi * xi * m2;
                    im += -s * xi.powi(3) * m3 / 6.0;
                }
                let _ = residual;
            }
        }
        Ok(Complex64::new(re, im))
    }

    /// Ψ(ξ) with derivatives up to `order` (0, 1 or 2).
    pub fn log_mgf(&self, xi: f64, order: u8) -> Result<MgfValue> {
        if order > 2 {
            return Err(Error::InvalidInput(format!("log_mgf order must be 0, 1 or 2, got {order}")));
        }
        let want1 = order >= 1;
        let want2 = order >= 2;
        let mut v = [self.a * xi + 0.5 * self.sigma2 * xi * xi, self.a + self.sigma2 * xi, self.sigma2];
        let mut residual = 0.0;
        let (lo, hi) = self.mgf_domain();
        if xi < lo || xi > hi {
            return Ok(MgfValue { xi, value: f64::INFINITY, d1: want1.then_some(f64::INFINITY), d2: want2.then_some(f64::INFINITY), residual: 0.0 });
        }
        match &self.nu {
            LevyMeasure::Atoms(atoms) => {
                for at in atoms {
                    let (z, w) = (at.size, at.mass);
                    let u = xi * z;
                    if z.abs() <= 1.0 {
                        v[0] += w * expm1_minus_u(u);
                        v[1] += w * z * u.exp_m1();
                    } else {
                        v[0] += w * u.exp_m1();
                        v[1] += w * z * u.exp();
                    }
                    v[2] += w * z * z * u.exp();
                }
            }
            LevyMeasure::Density(d) => {
                let rule = GaussLegendre::new(d.quad.nodes_per_decade);
                let mut divergent = [false; 3];
                for &s in d.support.sides() {
                    let kernel = |u: f64| {
                        let y = s * u;
                        let lf = d.log_density(y);
                        if lf == f64::NEG_INFINITY {
                            return [0.0; 3];
                        }
                        let v = xi * y;
                        let tilted = (v + lf).exp();
                        let f = lf.exp();
                        let k0 = if u <= 1.0 { f * expm1_minus_u(v) } else { tilted - f };
                        let k1 = if !want1 {
                            0.0
                        } else if u <= 1.0 {
                            y * f * v.exp_m1()
                        } else {
                            y * tilted
                        };
                        let k2 = if want2 { y * y * tilted } else { 0.0 };
                        [k0, k1, k2]
                    };
                    let r = d.side_integral(&rule, &kernel);
                    if !r.converged {
                        return Err(Error::QuadratureNonConvergence { residual: r.residual });
                    }
                    for k in 0..3 {
                        v[k] += r.value[k];
                        divergent[k] |= r.divergent[k];
                    }
                    residual += r.residual;
                    let m2 = d.inner_moment(s, 2)?;
                    let m3 = d.inner_moment(s, 3)?;
                    let m4 = d.inner_moment(s, 4)?;
                    v[0] += 0.5 * xi * xi * m2 + s * xi.powi(3) * m3 / 6.0;
                    v[1] += xi * m2 + s * 0.5 * xi * xi * m3;
                    v[2] += m2 + s * xi * m3;
                    residual += xi.powi(4) * m4 / 24.0;
                }
                for k in 0..3 {
                    if divergent[k] {
                        v[k] = f64::INFINITY;
                    }
                }
            }
        }
        for x in v.iter_mut() {
            if x.is_nan() {
                *x = f64::INFINITY;
            }
        }
        if v[0] == f64::INFINITY {
            v[1] = f64::INFINITY;
            v[2] = f64::INFINITY;
        }
        Ok(MgfValue { xi, value: v[0], d1: want1.then_some(v[1]), d2: want2.then_some(v[2]), residual })
    }

    /// `E L₁ = Ψ′(0)`.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.log_mgf(0.0, 1)?.d1.unwrap_or(f64::NAN))
    }

    /// `Var L₁ = Ψ″(0)`.
    pub fn variance(&self) -> Result<f64> {
        Ok(self.log_mgf(0.0, 2)?.d2.unwrap_or(f64::NAN))
    }
}

/// Closed forms for the positive-half-line tempered stable measure.
pub mod tempered_stable {
    use super::*;

    fn tail_first_moment(alpha: f64, m: f64) -> f64 {
        // ∫_1^∞ y^{−α} e^{−m y} dy = m^{α−1} Γ(1−α, m), with
        // Γ(s, x) = (Γ(s+1, x) − x^s e^{−x}) / s for s = 1 − α < 0.
        let s = 1.0 - alpha;
        let upper = gamma(2.0 - alpha) * gamma_ur(2.0 - alpha, m);
        m.powf(alpha - 1.0) * (upper - m.powf(s) * (-m).exp()) / s
    }

    fn normaliser(alpha: f64) -> f64 {
        0.5 * alpha * (alpha - 1.0) / gamma(2.0 - alpha)
    }

    /// Ψ(ξ) for `ξ ≤ m`, `+∞` beyond.
    pub fn log_mgf(alpha: f64, m: f64, xi: f64) -> f64 {
        if xi > m {
            return f64::INFINITY;
        }
        let c = normaliser(alpha);
        0.5 * ((m - xi).powf(alpha) - m.powf(alpha) + alpha * xi * m.powf(alpha - 1.0)) + xi * c * tail_first_moment(alpha, m)
    }

    /// Ψ′(ξ) for `ξ ≤ m`.
    pub fn log_mgf_d1(alpha: f64, m: f64, xi: f64) -> f64 {
        if xi > m {
            return f64::INFINITY;
        }
        let c = normaliser(alpha);
        0.5 * alpha * (m.powf(alpha - 1.0) - (m - xi).powf(alpha - 1.0)) + c * tail_first_moment(alpha, m)
    }

    /// ψ(ξ) for the one-sided measure.
    pub fn symbol(alpha: f64, m: f64, xi: f64) -> Complex64 {
        let c = normaliser(alpha);
        let base = Complex64::new(m, -xi).powf(alpha);
        0.5 * (base - m.powf(alpha) + Complex64::new(0.0, alpha * xi * m.powf(alpha - 1.0)))
            + Complex64::new(0.0, xi * c * tail_first_moment(alpha, m))
    }

    /// Real symbol of the symmetrised measure `ν(dy) + ν(−dy)`:
    /// `(ξ² + m²)^{α/2} cos(α arctan(|ξ|/m)) − m^α`.
    pub fn symmetrised_symbol(alpha: f64, m: f64, xi: f64) -> f64 {
        (xi * xi + m * m).powf(0.5 * alpha) * (alpha * (xi.abs() / m).atan()).cos() - m.powf(alpha)
    }
}

/// Result of probing Ψ at `±λ` on a geometric grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentDiagnostic {
    pub lambda_max_tested: f64,
    pub finite: bool,
    pub first_failing_lambda: Option<f64>,
}

/// Probes `E e^{±λ L₁} = e^{Ψ(±λ)}` for `λ` on a geometric grid up to
/// `lambda_max` (ratio 1.005), then bisects the first failing interval.
pub fn check_exponential_moments(triplet: &LevyTriplet, lambda_max: f64) -> Result<MomentDiagnostic> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let finite_at = |lam: f64| -> Result<bool> {
        Ok(triplet.log_mgf(lam, 0)?.is_finite() && triplet.log_mgf(-lam, 0)?.is_finite())
    };
    const RATIO: f64 = 1.005;
    let mut grid = Vec::new();
    let mut lam = lambda_max;
    while lam > 1e-3 {
        grid.push(lam);
        lam /= RATIO;
    }
    grid.reverse();
    let mut last_ok = 0.0;
    for &lam in &grid {
        if !finite_at(lam)? {
            let (mut lo, mut hi) = (last_ok, lam);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if finite_at(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-9 * hi {
                    break;
                }
            }
            return Ok(MomentDiagnostic { lambda_max_tested: lambda_max, finite: false, first_failing_lambda: Some(hi) });
        }
        last_ok = lam;
    }
    Ok(MomentDiagnostic { lambda_max_tested: lambda_max, finite: true, first_failing_lambda: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn psi_and_log_mgf_vanish_at_zero() {
        let ts = LevyTriplet::new(0.3, 0.5, LevyMeasure::tempered_stable(1.5, 2.0).unwrap()).unwrap();
        let at = LevyTriplet::new(-1.0, 0.0, LevyMeasure::atoms(vec![Atom { size: 2.0, mass: 0.5 }, Atom { size: -0.3, mass: 1.5 }]).unwrap()).unwrap();
        let et = LevyTriplet::new(0.0, 0.0, LevyMeasure::exponential_tail(0.5).unwrap()).unwrap();
        for t in [&ts, &at, &et] {
            assert_eq!(t.psi(0.0).unwrap(), Complex64::new(0.0, 0.0));
            assert_eq!(t.log_mgf(0.0, 0).unwrap().value, 0.0);
        }
    }

    #[test]
    fn pure_drift_symbol() {
        let t = LevyTriplet::gaussian(1.0, 0.0).unwrap();
        let p = t.psi(2.0).unwrap();
        assert_eq!(p, Complex64::new(0.0, 2.0));
    }

    #[test]
    fn gaussian_log_mgf() {
        let t = LevyTriplet::gaussian(0.0, 1.0).unwrap();
        for xi in [-3.0, -0.5, 0.0, 1.0, 7.0] {
            let v = t.log_mgf(xi, 2).unwrap();
            assert!(close(v.value, 0.5 * xi * xi, 1e-15));
            assert!(close(v.d1.unwrap(), xi, 1e-15));
            assert!(close(v.d2.unwrap(), 1.0, 1e-15));
        }
    }

    #[test]
    fn unit_atom_log_mgf() {
        let t = LevyTriplet::compensated_poisson();
        for xi in [-2.0, -1e-4, 0.3, 1.0, 4.0] {
            let v = t.log_mgf(xi, 2).unwrap();
            assert!(close(v.value, xi.exp() - 1.0 - xi, 1e-14 * xi.exp().max(1.0)));
            assert!(close(v.d1.unwrap(), xi.exp() - 1.0, 1e-14 * xi.exp().max(1.0)));
            assert!(close(v.d2.unwrap(), xi.exp(), 1e-14 * xi.exp()));
        }
    }

    #[test]
    fn atom_at_unit_distance_is_compensated() {
        let t = LevyTriplet::new(0.0, 0.0, LevyMeasure::atoms(vec![Atom { size: -1.0, mass: 2.0 }]).unwrap()).unwrap();
        let xi: f64 = 0.7;
        let expect = 2.0 * ((-xi).exp() - 1.0 + xi);
        assert!(close(t.log_mgf(xi, 0).unwrap().value, expect, 1e-14));
    }

    #[test]
    fn atoms_match_closed_form_sum() {
        let atoms = vec![Atom { size: 0.4, mass: 1.3 }, Atom { size: -2.5, mass: 0.2 }, Atom { size: 1.0, mass: 0.7 }];
        let t = LevyTriplet::new(0.25, 0.8, LevyMeasure::atoms(atoms.clone()).unwrap()).unwrap();
        for xi in [-1.7, -0.2, 0.05, 0.9, 2.2] {
            let mut expect = 0.25 * xi + 0.4 * xi * xi;
            for a in &atoms {
                let ind = if a.size.abs() <= 1.0 { 1.0 } else { 0.0 };
                expect += a.mass * ((xi * a.size).exp() - 1.0 - xi * a.size * ind);
            }
            assert!(close(t.log_mgf(xi, 0).unwrap().value, expect, 1e-12));
        }
    }

    #[test]
    fn invalid_atoms_rejected() {
        assert!(LevyMeasure::atoms(vec![Atom { size: 1.0, mass: -1.0 }]).is_err());
        assert!(LevyMeasure::atoms(vec![Atom { size: 0.0, mass: 1.0 }]).is_err());
        assert!(LevyTriplet::gaussian(0.0, -1.0).is_err());
    }

    #[test]
    fn tempered_stable_parameter_ranges() {
        assert!(LevyMeasure::tempered_stable(0.9, 1.0).is_err());
        assert!(LevyMeasure::tempered_stable(2.0, 1.0).is_err());
        assert!(LevyMeasure::tempered_stable(1.5, 0.0).is_err());
        assert!(LevyMeasure::exponential_tail(0.0).is_err());
    }

    #[test]
    fn tempered_stable_quadrature_matches_closed_form() {
        let (alpha, m) = (1.5, 2.0);
        let t = LevyTriplet::new(0.0, 0.0, LevyMeasure::tempered_stable(alpha, m).unwrap()).unwrap();
        for xi in [-10.0, -3.0, -0.5, 0.4, 1.0, 1.9] {
            let v = t.log_mgf(xi, 1).unwrap();
            let cf = tempered_stable::log_mgf(alpha, m, xi);
            assert!(close(v.value, cf, 1e-8), "xi={xi}: {} vs {cf}", v.value);
            assert!(close(v.d1.unwrap(), tempered_stable::log_mgf_d1(alpha, m, xi), 1e-7));
        }
        for xi in [-10.0, -1.0, 0.5, 6.0, 10.0] {
            let p = t.psi(xi).unwrap();
            let cf = tempered_stable::symbol(alpha, m, xi);
            assert!((p - cf).norm() < 1e-8, "xi={xi}: {p} vs {cf}");
        }
    }

    #[test]
    fn tempered_stable_beyond_edge_is_infinite() {
        let t = LevyTriplet::new(0.0, 0.0, LevyMeasure::tempered_stable(1.5, 2.0).unwrap()).unwrap();
        assert_eq!(t.log_mgf(2.1, 0).unwrap().value, f64::INFINITY);
        assert!(t.log_mgf(2.1, 0).unwrap().finite().is_err());
        let at_edge = t.log_mgf(2.0, 2).unwrap();
        assert!(at_edge.value.is_finite());
        assert!(at_edge.d1.unwrap().is_finite());
        assert_eq!(at_edge.d2.unwrap(), f64::INFINITY);
    }

    #[test]
    fn exponential_tail_domain() {
        let t = LevyTriplet::new(0.0, 0.0, LevyMeasure::exponential_tail(2.0).unwrap()).unwrap();
        let v = t.log_mgf(3.0, 0).unwrap().value;
        // ∫(e^{3z} − 1 − 3z 1_{|z|≤1}) e^{−z²} dz; symmetric so the linear term cancels
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let expect = sqrt_pi * (2.25f64).exp() - sqrt_pi;
        assert!(close(v, expect, 1e-8), "{v} vs {expect}");
        let t1 = LevyTriplet::new(0.0, 0.0, LevyMeasure::exponential_tail(1.0).unwrap()).unwrap();
        assert!(t1.log_mgf(0.9, 0).unwrap().is_finite());
        assert!(!t1.log_mgf(1.1, 0).unwrap().is_finite());
    }

    #[test]
    fn moment_diagnostics() {
        let g = LevyTriplet::gaussian(0.0, 1.0).unwrap();
        assert!(check_exponential_moments(&g, 100.0).unwrap().finite);
        let ts = LevyTriplet::new(0.0, 0.0, LevyMeasure::tempered_stable(1.5, 2.0).unwrap()).unwrap();
        assert!(check_exponential_moments(&ts, 1.9).unwrap().finite);
        let d = check_exponential_moments(&ts, 3.0).unwrap();
        assert!(!d.finite);
        let edge = d.first_failing_lambda.unwrap();
        assert!((edge - 2.0).abs() < 0.02, "edge {edge}");
        assert!(check_exponential_moments(&ts, 0.0).is_err());
    }

    #[test]
    fn custom_density_detects_edge_numerically() {
        let (alpha, m) = (1.5, 2.0);
        let log_c = (0.5 * alpha * (alpha - 1.0) / gamma(2.0 - alpha)).ln();
        let d = DensityMeasure::new(
            move |y: f64| log_c - m * y - (1.0 + alpha) * y.ln(),
            Support::Positive,
            [None, None],
            QuadratureSpec { radius: 25.0, ..QuadratureSpec::default() },
        )
        .unwrap();
        let t = LevyTriplet::new(0.0, 0.0, LevyMeasure::Density(d)).unwrap();
        assert!(close(t.log_mgf(1.5, 0).unwrap().value, tempered_stable::log_mgf(alpha, m, 1.5), 1e-8));
        let diag = check_exponential_moments(&t, 3.0).unwrap();
        let edge = diag.first_failing_lambda.unwrap();
        assert!((edge - m).abs() / m < 0.01, "edge {edge}");
    }

    #[test]
    fn non_integrable_density_rejected() {
        let r = DensityMeasure::new(|y: f64| -3.5 * y.abs().ln() - y.abs(), Support::Both, [None, None], QuadratureSpec::default());
        assert!(r.is_err());
    }
}

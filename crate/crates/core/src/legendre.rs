//! Numerical Legendre transform `f*(p) = sup_ξ {ξp − f(ξ)}` of convex,
//! extended-real functions, and the Hamiltonian/Lagrangian pair of a model.

use crate::error::{Error, Result};
use crate::levy::LevyTriplet;
use crate::model::ModelSpec;

/// Default tolerance on the stationarity residual `|f′(ξ*) − p|`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// One evaluation of a convex function. `value` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub slope: Option<f64>,
    pub curvature: Option<f64>,
}

impl Sample {
    pub fn infinite() -> Self {
        Self { value: f64::INFINITY, slope: None, curvature: None }
    }
}

/// A convex function `ℝ → (−∞, +∞]`.
pub trait ConvexFn {
    fn sample(&self, xi: f64) -> Result<Sample>;

    /// Interval outside which the function is known to be `+∞`.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Convex function from closures.
pub struct ClosureFn<'a> {
    f: Box<dyn Fn(f64) -> f64 + 'a>,
    df: Option<Box<dyn Fn(f64) -> f64 + 'a>>,
    d2f: Option<Box<dyn Fn(f64) -> f64 + 'a>>,
    domain: (f64, f64),
}

impl<'a> ClosureFn<'a> {
    pub fn new(f: impl Fn(f64) -> f64 + 'a) -> Self {
        Self { f: Box::new(f), df: None, d2f: None, domain: (f64::NEG_INFINITY, f64::INFINITY) }
    }

    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + 'a) -> Self {
        self.df = Some(Box::new(df));
        self
    }

    pub fn with_second_derivative(mut self, d2f: impl Fn(f64) -> f64 + 'a) -> Self {
        self.d2f = Some(Box::new(d2f));
        self
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = (lo, hi);
        self
    }
}

impl ConvexFn for ClosureFn<'_> {
    fn sample(&self, xi: f64) -> Result<Sample> {
        if xi < self.domain.0 || xi > self.domain.1 {
            return Ok(Sample::infinite());
        }
        let value = (self.f)(xi);
        if !value.is_finite() {
            return Ok(Sample::infinite());
        }
        Ok(Sample { value, slope: self.df.as_ref().map(|d| d(xi)), curvature: self.d2f.as_ref().map(|d| d(xi)) })
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

impl ConvexFn for LevyTriplet {
    fn sample(&self, xi: f64) -> Result<Sample> {
        let v = self.log_mgf(xi, 2)?;
        if !v.value.is_finite() {
            return Ok(Sample::infinite());
        }
        Ok(Sample { value: v.value, slope: v.d1, curvature: v.d2 })
    }

    fn domain(&self) -> (f64, f64) {
        self.mgf_domain()
    }
}

/// Where the supremum was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum LegendreStatus {
    /// `f′(ξ*) = p` inside the domain.
    Interior,
    /// Attained at a finite edge of the domain, where `f′` has not reached `p`.
    Boundary,
    /// The objective keeps increasing towards `±∞`; `value` is its limit.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreResult {
    pub value: f64,
    pub argmax: f64,
    pub stationarity_residual: f64,
    /// `f″(ξ*)` when available.
    pub curvature: Option<f64>,
    pub status: LegendreStatus,
}

#[derive(Clone, Copy)]
struct Point {
    x: f64,
    s: Sample,
    h: f64,
}

/// `sup_ξ {ξp − f(ξ)}`.
///
/// With a derivative, brackets a root of `f′(ξ) − p` by geometric expansion
/// from the origin and solves it by safeguarded Newton (Illinois false
/// position when no curvature is supplied). Without one, golden-section
/// search on the bracketed concave objective.
pub fn legendre_transform(f: &dyn ConvexFn, p: f64, tol: f64) -> Result<LegendreResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if !p.is_finite() {
        return Err(Error::InvalidInput(format!("conjugate argument must be finite, got {p}")));
    }
    let (dlo, dhi) = f.domain();
    let x0 = if dlo <= 0.0 && 0.0 <= dhi {
        0.0
    } else if dlo.is_finite() && dhi.is_finite() {
        0.5 * (dlo + dhi)
    } else if dlo.is_finite() {
        dlo + 1.0
    } else {
        dhi - 1.0
    };
    let s0 = f.sample(x0)?;
    if !s0.value.is_finite() {
        return Err(Error::InvalidInput(format!("convex function is infinite at its start point {x0}")));
    }
    match s0.slope {
        Some(d) => with_slope(f, p, tol, Point { x: x0, s: s0, h: d - p }),
        None => golden(f, p, tol, x0, s0.value),
    }
}

fn result(p: f64, pt: Point, status: LegendreStatus) -> LegendreResult {
    LegendreResult {
        value: p * pt.x - pt.s.value,
        argmax: pt.x,
        stationarity_residual: if status == LegendreStatus::Interior { pt.h.abs() } else { 0.0 },
        curvature: pt.s.curvature,
        status,
    }
}

fn probe(f: &dyn ConvexFn, p: f64, x: f64) -> Result<Option<Point>> {
    let s = f.sample(x)?;
    if !s.value.is_finite() {
        return Ok(None);
    }
    let d = s.slope.unwrap_or(f64::NAN);
    Ok(Some(Point { x, s, h: d - p }))
}

const MAX_ABS_XI: f64 = 1e15;

fn with_slope(f: &dyn ConvexFn, p: f64, tol: f64, start: Point) -> Result<LegendreResult> {
    if start.h.abs() <= tol {
        return Ok(result(p, start, LegendreStatus::Interior));
    }
    let dir = if start.h < 0.0 { 1.0 } else { -1.0 };
    let (dlo, dhi) = f.domain();
    let edge = if dir > 0.0 { dhi } else { dlo };
    let mut step = match start.s.curvature {
        Some(c) if c > 0.0 && c.is_finite() => (start.h.abs() / c).clamp(1e-8, 1.0),
        _ => 1.0,
    };
    let mut a = start;
    loop {
        let mut xb = a.x + dir * step;
        let clamped = dir * (xb - edge) >= 0.0;
        if clamped {
            xb = edge;
        }
        let b = match probe(f, p, xb)? {
            Some(b) => b,
            None => {
                let e = find_edge(f, p, a, xb)?;
                if dir * e.h < 0.0 && e.h.is_finite() {
                    return Ok(result(p, e, LegendreStatus::Boundary));
                }
                return root(f, p, tol, a, e);
            }
        };
        if dir * (b.h - a.h) < -1e-9 * (1.0 + a.h.abs().max(b.h.abs())) {
            return Err(Error::NonConvex { xi: b.x });
        }
        if b.h.abs() <= tol {
            return Ok(result(p, b, LegendreStatus::Interior));
        }
        if dir * b.h > 0.0 {
            return root(f, p, tol, a, b);
        }
        if clamped {
            return Ok(result(p, b, LegendreStatus::Boundary));
        }
        if b.x.abs() > MAX_ABS_XI {
            let ga = p * a.x - a.s.value;
            let gb = p * b.x - b.s.value;
            let value = if (gb - ga).abs() <= 1e-12 * (1.0 + gb.abs()) { gb } else { f64::INFINITY };
            return Ok(LegendreResult {
                value,
                argmax: dir * f64::INFINITY,
                stationarity_residual: b.h.abs(),
                curvature: None,
                status: LegendreStatus::Unbounded,
            });
        }
        a = b;
        step *= 2.0;
    }
}

/// Largest finite point between `a` (finite) and `x_inf` (infinite).
fn find_edge(f: &dyn ConvexFn, p: f64, a: Point, x_inf: f64) -> Result<Point> {
    let mut good = a;
    let mut bad = x_inf;
    for _ in 0..200 {
        if (bad - good.x).abs() <= 4.0 * f64::EPSILON * good.x.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (good.x + bad);
        match probe(f, p, mid)? {
            Some(m) => good = m,
            None => bad = mid,
        }
    }
    Ok(good)
}

/// Solves `h = f′ − p = 0` on a bracket with a sign change.
fn root(f: &dyn ConvexFn, p: f64, tol: f64, a: Point, b: Point) -> Result<LegendreResult> {
    let (mut lo, mut hi) = if a.x < b.x { (a, b) } else { (b, a) };
    if lo.h > hi.h {
        return Err(Error::NonConvex { xi: lo.x });
    }
    let mut best = if lo.h.abs() < hi.h.abs() { lo } else { hi };
    let (mut lo_streak, mut hi_streak) = (0u32, 0u32);
    for _ in 0..300 {
        if best.h.abs() <= tol || hi.x - lo.x <= 4.0 * f64::EPSILON * best.x.abs().max(1.0) {
            break;
        }
        let newton = match best.s.curvature {
            Some(c) if c > 0.0 && c.is_finite() => Some(best.x - best.h / c),
            _ => None,
        };
        let x = match newton {
            Some(x) if x > lo.x && x < hi.x => x,
            _ if best.s.curvature.is_some() => 0.5 * (lo.x + hi.x),
            _ => {
                // Illinois false position
                let (mut hl, mut hh) = (lo.h, hi.h);
                if lo_streak >= 2 {
                    hh *= 0.5f64.powi(lo_streak as i32 - 1);
                }
                if hi_streak >= 2 {
                    hl *= 0.5f64.powi(hi_streak as i32 - 1);
                }
                let x = if hh.is_finite() && hl.is_finite() && hh != hl { lo.x - hl * (hi.x - lo.x) / (hh - hl) } else { f64::NAN };
                if x > lo.x && x < hi.x {
                    x
                } else {
                    0.5 * (lo.x + hi.x)
                }
            }
        };
        let m = match probe(f, p, x)? {
            Some(m) => m,
            None => return Err(Error::NonConvex { xi: x }),
        };
        let slack = 1e-9 * (1.0 + lo.h.abs().max(m.h.abs()));
        if m.h < lo.h - slack || (hi.h.is_finite() && m.h > hi.h + slack) {
            return Err(Error::NonConvex { xi: x });
        }
        if m.h < 0.0 {
            lo = m;
            lo_streak += 1;
            hi_streak = 0;
        } else {
            hi = m;
            hi_streak += 1;
            lo_streak = 0;
        }
        best = m;
    }
    Ok(result(p, best, LegendreStatus::Interior))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden(f: &dyn ConvexFn, p: f64, tol: f64, x0: f64, f0: f64) -> Result<LegendreResult> {
    let g = |x: f64| -> Result<f64> {
        let s = f.sample(x)?;
        Ok(if s.value.is_finite() { p * x - s.value } else { f64::NEG_INFINITY })
    };
    let g0 = p * x0 - f0;
    let (gp, gm) = (g(x0 + 1.0)?, g(x0 - 1.0)?);
    if gp > g0 && gm > g0 {
        return Err(Error::NonConvex { xi: x0 });
    }
    let dir = if gp > g0 { 1.0 } else if gm > g0 { -1.0 } else { 0.0 };
    // bracket (a, b, c) with g(b) ≥ g(a), g(c)
    let (mut a, mut b, mut c);
    if dir == 0.0 {
        a = x0 - 1.0;
        b = x0;
        c = x0 + 1.0;
    } else {
        let mut step = 1.0;
        a = x0;
        b = x0 + dir;
        let mut gb = if dir > 0.0 { gp } else { gm };
        loop {
            step *= 2.0;
            let x = b + dir * step;
            let gx = g(x)?;
            if gx < gb {
                c = x;
                break;
            }
            if b.abs() > MAX_ABS_XI {
                let value = if (gx - gb).abs() <= 1e-12 * (1.0 + gx.abs()) { gx } else { f64::INFINITY };
                return Ok(LegendreResult {
                    value,
                    argmax: dir * f64::INFINITY,
                    stationarity_residual: f64::NAN,
                    curvature: None,
                    status: LegendreStatus::Unbounded,
                });
            }
            a = b;
            b = x;
            gb = gx;
        }
        if a > c {
            std::mem::swap(&mut a, &mut c);
        }
    }
    let _ = b;
    let (mut lo, mut hi) = (a, c);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut g1, mut g2) = (g(x1)?, g(x2)?);
    while hi - lo > tol.max(4.0 * f64::EPSILON * x1.abs().max(1.0)) {
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(x1)?;
        }
    }
    let x = 0.5 * (lo + hi);
    let gx = g(x)?;
    let (dlo, dhi) = f.domain();
    let at_edge = (x - dlo).abs() <= tol || (dhi - x).abs() <= tol || !g(x + tol)?.is_finite() || !g(x - tol)?.is_finite();
    let h = 1e-6 * (1.0 + x.abs());
    let residual = if at_edge { 0.0 } else { ((g(x + h)? - g(x - h)?) / (2.0 * h)).abs() };
    let s = f.sample(x)?;
    Ok(LegendreResult {
        value: gx,
        argmax: x,
        stationarity_residual: residual,
        curvature: s.curvature,
        status: if at_edge { LegendreStatus::Boundary } else { LegendreStatus::Interior },
    })
}

/// `H(x, ξ)` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianValue {
    pub value: f64,
    pub d_xi: f64,
    pub d_xi2: f64,
    pub d_x: f64,
}

/// `ξ ↦ H(x, ξ) = b(x)ξ + ½σ(x)²ξ² + Ψ(η(x)ξ)` at a frozen state.
pub struct HamiltonianFn<'a> {
    model: &'a ModelSpec,
    x: f64,
    b: f64,
    sigma: f64,
    eta: f64,
}

impl<'a> HamiltonianFn<'a> {
    pub fn new(model: &'a ModelSpec, x: f64) -> Self {
        let c = &model.coeffs;
        Self { model, x, b: c.b.eval(x), sigma: c.sigma.eval(x), eta: c.eta.eval(x) }
    }

    /// Value and derivatives, `+∞` outside the domain of Ψ.
    pub fn evaluate(&self, xi: f64, with_dx: bool) -> Result<HamiltonianValue> {
        let (b, s, e) = (self.b, self.sigma, self.eta);
        let mut value = b * xi + 0.5 * s * s * xi * xi;
        let mut d_xi = b + s * s * xi;
        let mut d_xi2 = s * s;
        let mut psi1 = 0.0;
        if e != 0.0 {
            let m = self.model.triplet.log_mgf(e * xi, 2)?;
            if !m.value.is_finite() {
                return Ok(HamiltonianValue { value: f64::INFINITY, d_xi: f64::INFINITY, d_xi2: f64::INFINITY, d_x: f64::NAN });
            }
            psi1 = m.d1.unwrap_or(f64::NAN);
            value += m.value;
            d_xi += e * psi1;
            d_xi2 += e * e * m.d2.unwrap_or(f64::NAN);
        }
        let d_x = if with_dx {
            let c = &self.model.coeffs;
            let (db, ds) = (c.b.deriv(self.x), c.sigma.deriv(self.x));
            let de = if e != 0.0 || c.eta.constant().is_none() { c.eta.deriv(self.x) } else { 0.0 };
            let jump = if de == 0.0 {
                0.0
            } else if e != 0.0 {
                de * xi * psi1
            } else {
                de * xi * self.model.triplet.log_mgf(0.0, 1)?.d1.unwrap_or(f64::NAN)
            };
            db * xi + s * ds * xi * xi + jump
        } else {
            f64::NAN
        };
        Ok(HamiltonianValue { value, d_xi, d_xi2, d_x })
    }
}

impl ConvexFn for HamiltonianFn<'_> {
    fn sample(&self, xi: f64) -> Result<Sample> {
        let v = self.evaluate(xi, false)?;
        if !v.value.is_finite() {
            return Ok(Sample::infinite());
        }
        Ok(Sample { value: v.value, slope: Some(v.d_xi), curvature: Some(v.d_xi2) })
    }

    fn domain(&self) -> (f64, f64) {
        if self.eta == 0.0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let (lo, hi) = self.model.triplet.mgf_domain();
        if self.eta > 0.0 {
            (lo / self.eta, hi / self.eta)
        } else {
            (hi / self.eta, lo / self.eta)
        }
    }
}

/// `H(x, ξ)`; an infinite exponential moment is an error here.
pub fn hamiltonian(model: &ModelSpec, x: f64, xi: f64) -> Result<f64> {
    let v = HamiltonianFn::new(model, x).evaluate(xi, false)?;
    if !v.value.is_finite() {
        let eta = model.coeffs.eta.eval(x);
        return Err(Error::InfiniteMoment { xi: eta * xi });
    }
    Ok(v.value)
}

/// `L(x, ζ) = sup_ξ {ζξ − H(x, ξ)}`.
pub fn lagrangian(model: &ModelSpec, x: f64, zeta: f64, tol: f64) -> Result<LegendreResult> {
    legendre_transform(&HamiltonianFn::new(model, x), zeta, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{Atom, LevyMeasure};
    use crate::model::CoefficientSet;
    use proptest::prelude::*;

    fn quadratic() -> ClosureFn<'static> {
        ClosureFn::new(|x| 0.5 * x * x).with_derivative(|x| x).with_second_derivative(|_| 1.0)
    }

    fn poisson() -> ClosureFn<'static> {
        ClosureFn::new(|x: f64| x.exp() - 1.0 - x).with_derivative(|x: f64| x.exp() - 1.0)
    }

    #[test]
    fn gaussian_conjugate() {
        let r = legendre_transform(&quadratic(), 3.0, DEFAULT_TOL).unwrap();
        assert!((r.value - 4.5).abs() < 1e-12);
        assert!((r.argmax - 3.0).abs() < 1e-12);
        assert_eq!(r.status, LegendreStatus::Interior);
        let r0 = legendre_transform(&quadratic(), 0.0, DEFAULT_TOL).unwrap();
        assert_eq!((r0.value, r0.argmax), (0.0, 0.0));
    }

    #[test]
    fn poisson_conjugate_without_curvature() {
        let r = legendre_transform(&poisson(), 1.0, DEFAULT_TOL).unwrap();
        assert!((r.value - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12);
        assert!((r.argmax - 2f64.ln()).abs() < 1e-10);
        // dense grid oracle
        let grid = (0..200_001).map(|k| -5.0 + 1e-4 * k as f64).map(|x| x - (x.exp() - 1.0 - x)).fold(f64::NEG_INFINITY, f64::max);
        assert!((r.value - grid).abs() < 1e-8);
    }

    #[test]
    fn golden_section_without_derivative() {
        let f = ClosureFn::new(|x: f64| x.exp() - 1.0 - x);
        let r = legendre_transform(&f, 1.0, 1e-10).unwrap();
        assert!((r.value - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-10);
        assert!((r.argmax - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn unbounded_and_asymptotic() {
        let lin = ClosureFn::new(|x| 2.0 * x).with_derivative(|_| 2.0);
        let r = legendre_transform(&lin, 3.0, DEFAULT_TOL).unwrap();
        assert_eq!(r.status, LegendreStatus::Unbounded);
        assert_eq!(r.value, f64::INFINITY);
        let r = legendre_transform(&poisson(), -2.0, DEFAULT_TOL).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        // sup is the limit 1 as ξ → −∞, reached to within the slope tolerance
        let r = legendre_transform(&poisson(), -1.0, DEFAULT_TOL).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_supremum() {
        // f = ξ²/2 on [−1, 1]: slope 1 at the edge, so p = 3 gives 3 − 1/2
        let f = quadratic().with_domain(-1.0, 1.0);
        let r = legendre_transform(&f, 3.0, DEFAULT_TOL).unwrap();
        assert_eq!(r.status, LegendreStatus::Boundary);
        assert!((r.value - 2.5).abs() < 1e-12);
        // same with an undeclared edge found by bisection
        let g = ClosureFn::new(|x: f64| if x <= 1.0 { 0.5 * x * x } else { f64::INFINITY }).with_derivative(|x| x);
        let r = legendre_transform(&g, 3.0, DEFAULT_TOL).unwrap();
        assert_eq!(r.status, LegendreStatus::Boundary);
        assert!((r.value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn tempered_stable_conjugate_affine_tail() {
        let t = LevyTriplet::new(0.0, 0.0, LevyMeasure::tempered_stable(1.5, 2.0).unwrap()).unwrap();
        let edge = t.log_mgf(2.0, 1).unwrap();
        let p = edge.d1.unwrap() + 1.0;
        let r = legendre_transform(&t, p, DEFAULT_TOL).unwrap();
        assert_eq!(r.status, LegendreStatus::Boundary);
        assert!((r.argmax - 2.0).abs() < 1e-9);
        assert!((r.value - (2.0 * p - edge.value)).abs() < 1e-8);
        let inner = legendre_transform(&t, 0.3, DEFAULT_TOL).unwrap();
        assert_eq!(inner.status, LegendreStatus::Interior);
        assert!(inner.stationarity_residual <= DEFAULT_TOL);
    }

    #[test]
    fn non_convex_detected() {
        let f = ClosureFn::new(|x: f64| -x.cos()).with_derivative(|x: f64| x.sin());
        assert!(matches!(legendre_transform(&f, 2.0, DEFAULT_TOL), Err(Error::NonConvex { .. })));
    }

    fn ou() -> ModelSpec {
        ModelSpec::brownian("-x", "1", 0.1).unwrap()
    }

    #[test]
    fn hamiltonian_values() {
        let m = ModelSpec::brownian("0", "1", 0.1).unwrap();
        assert_eq!(hamiltonian(&m, 0.7, 2.0).unwrap(), 2.0);
        assert_eq!(hamiltonian(&ou(), 2.0, 1.0).unwrap(), -1.5);
        assert_eq!(hamiltonian(&ou(), 2.0, 0.0).unwrap(), 0.0);
        let ts = LevyTriplet::new(0.0, 0.0, LevyMeasure::tempered_stable(1.5, 2.0).unwrap()).unwrap();
        let jm = ModelSpec::new(CoefficientSet::parse("0", "0", "1").unwrap(), ts, 0.1).unwrap();
        assert!(matches!(hamiltonian(&jm, 0.0, 3.0), Err(Error::InfiniteMoment { .. })));
    }

    #[test]
    fn brownian_lagrangian_closed_form() {
        let m = ModelSpec::brownian("-x", "1 + 0.5*sin(x)", 0.1).unwrap();
        for x in [-1.5, 0.0, 0.4, 2.0] {
            for zeta in [-3.0, -0.2, 0.0, 1.0, 5.0] {
                let s = 1.0 + 0.5 * f64::sin(x);
                let expect = 0.5 * ((zeta + x) / s).powi(2);
                let r = lagrangian(&m, x, zeta, DEFAULT_TOL).unwrap();
                assert!((r.value - expect).abs() < 1e-9, "x={x} zeta={zeta}");
            }
        }
        assert!((lagrangian(&ou(), 1.0, 0.0, DEFAULT_TOL).unwrap().value - 0.5).abs() < 1e-12);
        assert_eq!(lagrangian(&ou(), 1.0, -1.0, DEFAULT_TOL).unwrap().value, 0.0);
    }

    #[test]
    fn pure_jump_lagrangian_vanishes_at_mean() {
        let t = LevyTriplet::new(1.0, 0.0, LevyMeasure::atoms(vec![Atom { size: 1.0, mass: 1.0 }]).unwrap()).unwrap();
        let m = ModelSpec::new(CoefficientSet::parse("0", "0", "1").unwrap(), t, 0.1).unwrap();
        let r = lagrangian(&m, 0.3, 1.0, DEFAULT_TOL).unwrap();
        assert!(r.value.abs() < 1e-14);
        assert!(r.argmax.abs() < 1e-12);
        let grid = (0..100_001).map(|k| -3.0 + 6e-5 * k as f64).map(|x| 1.0 * x - (x.exp() - 1.0)).fold(f64::NEG_INFINITY, f64::max);
        assert!((r.value - grid).abs() < 1e-8);
    }

    #[test]
    fn hamiltonian_state_derivative() {
        let t = LevyTriplet::compensated_poisson();
        let m = ModelSpec::new(CoefficientSet::parse("-x", "1 + 0.5*sin(x)", "0.5 + 0.2*cos(x)").unwrap(), t, 0.1).unwrap();
        for (x, xi) in [(0.3, 0.7), (-1.0, -0.4), (2.0, 1.1)] {
            let d = HamiltonianFn::new(&m, x).evaluate(xi, true).unwrap().d_x;
            let h = 1e-6;
            let fd = (hamiltonian(&m, x + h, xi).unwrap() - hamiltonian(&m, x - h, xi).unwrap()) / (2.0 * h);
            assert!((d - fd).abs() < 1e-7, "{d} vs {fd}");
        }
    }

    proptest! {
        #[test]
        fn fenchel_young(xi in -4.0f64..4.0, p in -0.9f64..20.0) {
            let t = LevyTriplet::compensated_poisson();
            let r = legendre_transform(&t, p, DEFAULT_TOL).unwrap();
            let f = t.log_mgf(xi, 0).unwrap().value;
            prop_assert!(xi * p <= f + r.value + 1e-8);
            let at = t.log_mgf(r.argmax, 0).unwrap().value;
            prop_assert!((r.argmax * p - at - r.value).abs() < 1e-12 * (1.0 + r.value.abs()));
        }

        #[test]
        fn conjugate_at_gradient(xi in -3.0f64..3.0) {
            let t = LevyTriplet::new(0.2, 0.5, LevyMeasure::atoms(vec![Atom { size: 1.5, mass: 0.7 }, Atom { size: -0.4, mass: 2.0 }]).unwrap()).unwrap();
            let v = t.log_mgf(xi, 1).unwrap();
            let r = legendre_transform(&t, v.d1.unwrap(), DEFAULT_TOL).unwrap();
            prop_assert!((r.value - (xi * v.d1.unwrap() - v.value)).abs() < 1e-8);
        }

        #[test]
        fn lagrangian_nonnegative_and_zero_on_drift(x in -2.0f64..2.0, zeta in -5.0f64..5.0) {
            let t = LevyTriplet::compensated_poisson();
            let m = ModelSpec::new(CoefficientSet::parse("-x", "1", "0.5").unwrap(), t, 0.1).unwrap();
            let r = lagrangian(&m, x, zeta, DEFAULT_TOL).unwrap();
            prop_assert!(r.value >= -1e-12);
            let drift = HamiltonianFn::new(&m, x).evaluate(0.0, false).unwrap().d_xi;
            prop_assert!(lagrangian(&m, x, drift, DEFAULT_TOL).unwrap().value.abs() < 1e-12);
        }
    }

    #[test]
    fn biconjugation_on_grid() {
        let t = LevyTriplet::compensated_poisson();
        // Ψ** recomputed from sampled Ψ* through a closure with derivative ξ*(p)
        let conj = ClosureFn::new(|p: f64| legendre_transform(&t, p, DEFAULT_TOL).unwrap().value)
            .with_derivative(|p: f64| legendre_transform(&t, p, DEFAULT_TOL).unwrap().argmax)
            .with_domain(-1.0, f64::INFINITY);
        for xi in [-1.5, -0.3, 0.0, 0.8, 2.0] {
            let back = legendre_transform(&conj, xi, DEFAULT_TOL).unwrap();
            let psi = t.log_mgf(xi, 0).unwrap().value;
            assert!((back.value - psi).abs() < 10.0 * 1e-8, "xi={xi}: {} vs {psi}", back.value);
        }
    }
}

//! Coefficient functions and the model `dX = b dt + √ε σ dB + η dL^ε`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::levy::LevyTriplet;

/// A real function of the state with a first derivative.
pub trait ScalarFn: Send + Sync + fmt::Debug {
    fn eval(&self, x: f64) -> f64;

    fn deriv(&self, x: f64) -> f64 {
        let h = 1e-6 * (1.0 + x.abs());
        (self.eval(x + h) - self.eval(x - h)) / (2.0 * h)
    }

    /// `Some(c)` when the function is known to be identically `c`.
    fn constant(&self) -> Option<f64> {
        None
    }
}

impl ScalarFn for Expr {
    fn eval(&self, x: f64) -> f64 {
        Expr::eval(self, x)
    }

    fn deriv(&self, x: f64) -> f64 {
        self.eval_dual(x).d
    }

    fn constant(&self) -> Option<f64> {
        self.constant_value()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarFn for Constant {
    fn eval(&self, _: f64) -> f64 {
        self.0
    }

    fn deriv(&self, _: f64) -> f64 {
        0.0
    }

    fn constant(&self) -> Option<f64> {
        Some(self.0)
    }
}

/// Wraps a closure; the derivative falls back to central differences.
pub struct FnScalar<F>(pub F);

impl<F> fmt::Debug for FnScalar<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnScalar(..)")
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> ScalarFn for FnScalar<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

pub type Coefficient = Arc<dyn ScalarFn>;

/// Drift `b`, diffusion `σ` and jump coefficient `η`.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub b: Coefficient,
    pub sigma: Coefficient,
    pub eta: Coefficient,
    /// Lower bound on `σ` required wherever the Brownian action divides by it.
    pub sigma_min: f64,
    /// Declared Lipschitz bound (informational, checked by the model parser).
    pub lipschitz: Option<f64>,
    /// Declared sup-norm bound.
    pub sup_bound: Option<f64>,
}

impl CoefficientSet {
    pub fn new(b: Coefficient, sigma: Coefficient, eta: Coefficient) -> Self {
        Self { b, sigma, eta, sigma_min: 1e-8, lipschitz: None, sup_bound: None }
    }

    /// Compiles three expression strings.
    pub fn parse(b: &str, sigma: &str, eta: &str) -> Result<Self> {
        Ok(Self::new(Arc::new(Expr::parse(b)?), Arc::new(Expr::parse(sigma)?), Arc::new(Expr::parse(eta)?)))
    }

    pub fn constant(b: f64, sigma: f64, eta: f64) -> Self {
        Self::new(Arc::new(Constant(b)), Arc::new(Constant(sigma)), Arc::new(Constant(eta)))
    }

    pub fn with_sigma_min(mut self, sigma_min: f64) -> Self {
        self.sigma_min = sigma_min;
        self
    }

    pub fn eta_is_zero(&self) -> bool {
        self.eta.constant() == Some(0.0)
    }

    pub fn sigma_is_zero(&self) -> bool {
        self.sigma.constant() == Some(0.0)
    }
}

/// Coefficients, driving Lévy triplet, noise scale and default grid size.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub coeffs: CoefficientSet,
    pub triplet: LevyTriplet,
    pub epsilon: f64,
    pub n: usize,
}

impl ModelSpec {
    pub fn new(coeffs: CoefficientSet, triplet: LevyTriplet, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { coeffs, triplet, epsilon, n: 100 })
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// `dX = b dt + √ε σ dB` with no jump part.
    pub fn brownian(b: &str, sigma: &str, epsilon: f64) -> Result<Self> {
        Self::new(CoefficientSet::parse(b, sigma, "0")?, LevyTriplet::gaussian(0.0, 0.0)?, epsilon)
    }

    /// True when the jump part contributes nothing (`η ≡ 0` or trivial triplet).
    pub fn is_diffusion_only(&self) -> bool {
        self.coeffs.eta_is_zero() || (self.triplet.nu.is_zero() && self.triplet.a == 0.0 && self.triplet.sigma2 == 0.0)
    }
}

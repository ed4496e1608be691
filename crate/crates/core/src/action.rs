//! Action functionals on piecewise-linear paths.
//!
//! Every functional integrates a cell cost `ℓ(x, ζ)` with `ζ` the cell slope
//! and `x` the cell midpoint (midpoint rule; exact when `ℓ` does not depend
//! on `x`). The functionals tied to a process started at the origin return
//! `+∞` for paths with a nonzero start; `action_general` accepts any start.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::legendre::{lagrangian, legendre_transform, DEFAULT_TOL};
use crate::levy::{Atom, LevyMeasure, LevyTriplet};
use crate::model::{CoefficientSet, ModelSpec, ScalarFn};
use crate::path::{Path, StepFunction};

/// `½∫|φ′|²`.
pub fn action_brownian(phi: &Path) -> f64 {
    if phi.start() != 0.0 {
        return f64::INFINITY;
    }
    let n = phi.n();
    (0..n).map(|k| phi.slope(k).powi(2)).sum::<f64>() * 0.5 / n as f64
}

fn check_sigma(coeffs: &CoefficientSet, x: f64) -> Result<f64> {
    let s = coeffs.sigma.eval(x);
    if !(s.abs() >= coeffs.sigma_min) {
        return Err(Error::DegenerateDiffusion { x, sigma: s, sigma_min: coeffs.sigma_min });
    }
    Ok(s)
}

/// `½∫|(φ′ − b(φ))/σ(φ)|²`.
pub fn action_sde_brownian(phi: &Path, coeffs: &CoefficientSet) -> Result<f64> {
    for &v in phi.values() {
        check_sigma(coeffs, v)?;
    }
    if phi.start() != 0.0 {
        return Ok(f64::INFINITY);
    }
    let n = phi.n();
    let mut total = 0.0;
    for k in 0..n {
        let x = phi.midpoint(k);
        let s = check_sigma(coeffs, x)?;
        let u = (phi.slope(k) - coeffs.b.eval(x)) / s;
        total += 0.5 * u * u;
    }
    Ok(total / n as f64)
}

/// Ψ* evaluated once per distinct slope.
#[derive(Debug, Default)]
pub struct ConjugateCache {
    map: HashMap<u64, f64>,
}

impl ConjugateCache {
    pub fn get(&mut self, triplet: &LevyTriplet, p: f64) -> Result<f64> {
        if let Some(v) = self.map.get(&p.to_bits()) {
            return Ok(*v);
        }
        let v = legendre_transform(triplet, p, DEFAULT_TOL)?.value;
        self.map.insert(p.to_bits(), v);
        Ok(v)
    }
}

/// `∫Ψ*(φ′)`.
pub fn action_levy(phi: &Path, triplet: &LevyTriplet) -> Result<f64> {
    if phi.start() != 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut cache = ConjugateCache::default();
    let n = phi.n();
    let mut total = 0.0;
    for k in 0..n {
        total += cache.get(triplet, phi.slope(k))?;
        if total == f64::INFINITY {
            return Ok(total);
        }
    }
    Ok(total / n as f64)
}

/// `∫L(φ, φ′)` with `L` the Legendre transform of the Hamiltonian.
pub fn action_general(phi: &Path, model: &ModelSpec) -> Result<f64> {
    let n = phi.n();
    let mut total = 0.0;
    for k in 0..n {
        total += lagrangian(model, phi.midpoint(k), phi.slope(k), DEFAULT_TOL)?.value;
        if total == f64::INFINITY {
            return Ok(total);
        }
    }
    Ok(total / n as f64)
}

/// Value of the joint-infimum functional and the cells where the
/// constraint `ζ = b + σu + ηv` has no solution.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    pub value: f64,
    pub infeasible_cells: Vec<usize>,
}

/// Inner infimum `min_v ½((ζ − b − ηv)/σ)² + Ψ*(v)` at state `x`;
/// `None` when `σ = η = 0` and `ζ ≠ b`.
pub fn joint_cell(model: &ModelSpec, x: f64, zeta: f64) -> Result<Option<f64>> {
    let c = &model.coeffs;
    let (b, s, e) = (c.b.eval(x), c.sigma.eval(x), c.eta.eval(x));
    let t = &model.triplet;
    if s == 0.0 {
        if e == 0.0 {
            return Ok(((zeta - b).abs() <= 1e-12 * (1.0 + b.abs())).then_some(0.0));
        }
        return Ok(Some(legendre_transform(t, (zeta - b) / e, DEFAULT_TOL)?.value));
    }
    let s2 = s * s;
    if e == 0.0 {
        return Ok(Some(0.5 * (zeta - b).powi(2) / s2));
    }
    // J′(v) = −η(ζ − b − ηv)/σ² + ξ*(v) changes sign between the mean slope
    // (where ξ* = 0) and (ζ − b)/η (where the quadratic term vanishes).
    let cost = |v: f64| -> Result<(f64, f64, f64)> {
        let r = legendre_transform(t, v, DEFAULT_TOL)?;
        let u = (zeta - b - e * v) / s;
        let j = 0.5 * u * u + r.value;
        let dj = -e * u / s + r.argmax;
        let d2 = e * e / s2 + r.curvature.filter(|c| *c > 0.0).map_or(0.0, |c| 1.0 / c);
        Ok((j, dj, d2))
    };
    let v_mean = t.mean()?;
    let v_free = (zeta - b) / e;
    let (mut lo, mut hi) = if v_mean <= v_free { (v_mean, v_free) } else { (v_free, v_mean) };
    if hi - lo <= 1e-15 * hi.abs().max(1.0) {
        return Ok(Some(cost(lo)?.0));
    }
    let mut v = lo;
    let mut best = cost(v)?;
    if best.1 > 0.0 {
        return Ok(Some(best.0));
    }
    let hi_val = cost(hi)?;
    if hi_val.1 <= 0.0 {
        return Ok(Some(hi_val.0));
    }
    for _ in 0..200 {
        let newton = if best.2 > 0.0 { v - best.1 / best.2 } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let r = cost(next)?;
        if r.1 < 0.0 {
            lo = next;
        } else {
            hi = next;
        }
        v = next;
        best = r;
        if r.1.abs() <= 1e-13 || hi - lo <= 4.0 * f64::EPSILON * v.abs().max(1.0) {
            break;
        }
    }
    Ok(Some(best.0))
}

/// `inf ∫ ½|g′|² + Ψ*(h′)` over `(g, h)` with `φ′ = b(φ) + σ(φ)g′ + η(φ)h′`,
/// solved cell by cell.
pub fn action_joint(phi: &Path, model: &ModelSpec) -> Result<JointAction> {
    let n = phi.n();
    let mut total = 0.0;
    let mut infeasible = Vec::new();
    for k in 0..n {
        match joint_cell(model, phi.midpoint(k), phi.slope(k))? {
            Some(v) => total += v,
            None => infeasible.push(k),
        }
    }
    let value = if !infeasible.is_empty() || phi.start() != 0.0 { f64::INFINITY } else { total / n as f64 };
    Ok(JointAction { value, infeasible_cells: infeasible })
}

/// Lower bound from a step-function test direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBound {
    pub value: f64,
    /// Ψ was infinite on some plateau, so the bound degenerated to `−∞`.
    pub infinite_penalty: bool,
}

/// `∫φ dα − ∫Ψ(α(1) − α(s)) ds` for a step function α.
///
/// With `α(1) = 0` and disjoint plateaus this is
/// `Σ c_j (φ(s_j) − φ(t_j)) − Σ (t_j − s_j) Ψ(−c_j)`.
pub fn dual_lower_bound(phi: &Path, triplet: &LevyTriplet, alpha: &StepFunction) -> Result<DualBound> {
    let mut pairing = 0.0;
    let mut penalty = 0.0;
    for p in alpha.pieces() {
        pairing += p.c * (phi.at(p.s) - phi.at(p.t));
        let psi = triplet.log_mgf(-p.c, 0)?.value;
        if !psi.is_finite() {
            return Ok(DualBound { value: f64::NEG_INFINITY, infinite_penalty: true });
        }
        penalty += (p.t - p.s) * psi;
    }
    Ok(DualBound { value: pairing - penalty, infinite_penalty: false })
}

fn discrete_atoms(nu: &LevyMeasure) -> Result<&[Atom]> {
    match nu {
        LevyMeasure::Atoms(a) if !a.is_empty() => Ok(a),
        LevyMeasure::Atoms(_) => Err(Error::InvalidMeasure("entropy form needs at least one atom".into())),
        LevyMeasure::Density(_) => Err(Error::InvalidMeasure("entropy form is implemented for discrete measures only".into())),
    }
}

/// Entropy of a tilt table and the per-cell residual of the controlled
/// equation `φ′ = −∇U(φ) + Σ z (g − 1) ν({z})`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub entropy: f64,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

fn entropy_density(g: f64) -> f64 {
    if g == 0.0 {
        1.0
    } else {
        g * g.ln() - g + 1.0
    }
}

/// `Σ_cells Σ_z (g ln g − g + 1) ν({z}) / n` for a tilt table `g[cell][atom]`.
pub fn action_entropy_form(phi: &Path, grad_u: &dyn ScalarFn, nu: &LevyMeasure, g: &[Vec<f64>]) -> Result<EntropyReport> {
    let atoms = discrete_atoms(nu)?;
    let n = phi.n();
    if g.len() != n {
        return Err(Error::GridMismatch(format!("tilt table has {} rows for {n} cells", g.len())));
    }
    let mut entropy = 0.0;
    let mut residuals = Vec::with_capacity(n);
    for (k, row) in g.iter().enumerate() {
        if row.len() != atoms.len() {
            return Err(Error::GridMismatch(format!("tilt row {k} has {} entries for {} atoms", row.len(), atoms.len())));
        }
        let mut jump = 0.0;
        for (gz, a) in row.iter().zip(atoms) {
            if !(*gz > 0.0 && gz.is_finite()) {
                return Err(Error::InvalidInput(format!("tilt must be positive, got {gz} on cell {k}")));
            }
            entropy += entropy_density(*gz) * a.mass;
            jump += a.size * (gz - 1.0) * a.mass;
        }
        let target = phi.slope(k) + grad_u.eval(phi.midpoint(k));
        residuals.push((target - jump).abs());
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(EntropyReport { entropy: entropy / n as f64, residuals, max_residual })
}

/// Cheapest exponential tilt `g(z) = e^{θz}` with `Σ z (g − 1) ν({z}) = target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tilt {
    pub theta: f64,
    pub cost: f64,
}

/// Solves for the tilt on one cell; `cell` is only used in the error.
pub fn solve_tilt(atoms: &[Atom], target: f64, cell: usize) -> Result<Tilt> {
    let drift = |th: f64| atoms.iter().map(|a| a.size * (th * a.size).exp_m1() * a.mass).sum::<f64>();
    let slope = |th: f64| atoms.iter().map(|a| a.size * a.size * (th * a.size).exp() * a.mass).sum::<f64>();
    let upper = if atoms.iter().any(|a| a.size > 0.0) { f64::INFINITY } else { atoms.iter().map(|a| -a.size * a.mass).sum() };
    let lower = if atoms.iter().any(|a| a.size < 0.0) { f64::NEG_INFINITY } else { -atoms.iter().map(|a| a.size * a.mass).sum::<f64>() };
    if !(target > lower && target < upper) {
        return Err(Error::UnsolvableTilt { cell, target });
    }
    let mut step = 1.0;
    let (mut lo, mut hi) = (0.0, 0.0);
    let d0 = drift(0.0) - target;
    if d0 < 0.0 {
        while drift(hi) - target < 0.0 {
            lo = hi;
            hi += step;
            step *= 2.0;
        }
    } else if d0 > 0.0 {
        while drift(lo) - target > 0.0 {
            hi = lo;
            lo -= step;
            step *= 2.0;
        }
    }
    let mut th = 0.5 * (lo + hi);
    if d0 == 0.0 {
        th = 0.0;
    } else {
        for _ in 0..300 {
            let r = drift(th) - target;
            if r.abs() <= 1e-14 * (1.0 + target.abs()) || hi - lo <= 4.0 * f64::EPSILON * th.abs().max(1.0) {
                break;
            }
            if r < 0.0 {
                lo = th;
            } else {
                hi = th;
            }
            let nt = th - r / slope(th);
            th = if nt > lo && nt < hi { nt } else { 0.5 * (lo + hi) };
        }
    }
    let cost = atoms
        .iter()
        .map(|a| {
            let u = th * a.size;
            (u * u.exp() - u.exp_m1()) * a.mass
        })
        .sum();
    Ok(Tilt { theta: th, cost })
}

/// Optimal tilt table for a path and its entropy cost.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalTilt {
    pub theta: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub cost: f64,
}

pub fn optimal_tilt(phi: &Path, grad_u: &dyn ScalarFn, nu: &LevyMeasure) -> Result<OptimalTilt> {
    let atoms = discrete_atoms(nu)?;
    let n = phi.n();
    let mut theta = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut cost = 0.0;
    for k in 0..n {
        let target = phi.slope(k) + grad_u.eval(phi.midpoint(k));
        let t = solve_tilt(atoms, target, k)?;
        theta.push(t.theta);
        g.push(atoms.iter().map(|a| (t.theta * a.size).exp()).collect());
        cost += t.cost;
    }
    Ok(OptimalTilt { theta, g, cost: cost / n as f64 })
}

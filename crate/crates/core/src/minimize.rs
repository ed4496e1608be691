//! Minimum-action paths between fixed endpoints.
//!
//! The discrete action `S(v) = Σ_k ℓ(x_k, ζ_k)/n` (midpoints `x_k`, slopes
//! `ζ_k`) is minimized over the interior node values by limited-memory BFGS
//! preconditioned with the tridiagonal Hessian of `Σ ½ℓ_ζζ·ζ²/n`. Cell
//! derivatives come from the envelope theorem (`ℓ_ζ = ξ*`,
//! `ℓ_x = −H_x(x, ξ*)`) or from closed forms; the joint functional falls back
//! to central differences.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::action::joint_cell;
use crate::error::{Error, Result};
use crate::legendre::{lagrangian, legendre_transform, HamiltonianFn, DEFAULT_TOL};
use crate::model::ModelSpec;
use crate::path::Path;

/// Which action functional to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// `½∫|φ′|²`.
    Brownian,
    /// `½∫|(φ′ − b)/σ|²`.
    SdeBrownian,
    /// `∫Ψ*(φ′)`.
    Levy,
    /// `∫L(φ, φ′)`.
    General,
    /// Joint infimum over Brownian and Lévy controls.
    Joint,
}

impl Functional {
    /// `SdeBrownian` when `η ≡ 0` and the path starts at the origin, else `General`.
    pub fn auto(model: &ModelSpec, x0: f64) -> Self {
        if model.coeffs.eta_is_zero() && x0 == 0.0 {
            Functional::SdeBrownian
        } else {
            Functional::General
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "brownian" => Functional::Brownian,
            "sde-brownian" | "sde_brownian" => Functional::SdeBrownian,
            "levy" => Functional::Levy,
            "general" => Functional::General,
            "joint" => Functional::Joint,
            _ => return Err(Error::InvalidInput(format!("unknown functional '{name}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Functional::Brownian => "brownian",
            Functional::SdeBrownian => "sde-brownian",
            Functional::Levy => "levy",
            Functional::General => "general",
            Functional::Joint => "joint",
        }
    }

    /// Functionals defined only for paths starting at 0.
    pub fn requires_origin(self) -> bool {
        self != Functional::General
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryProblem {
    pub functional: Functional,
    pub model: ModelSpec,
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Relative gradient tolerance: stop when `‖∇S‖₂ ≤ gtol·(1 + |S|)`.
    pub gtol: f64,
    /// Defaults to `10·n`.
    pub max_iter: Option<usize>,
    pub memory: usize,
    /// Starting path; the straight line (or a corrected drift path) otherwise.
    pub initial: Option<Path>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { gtol: 1e-8, max_iter: None, memory: 10, initial: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizationResult {
    pub path: Path,
    pub action: f64,
    pub grad_norm: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    l: f64,
    lz: f64,
    lx: f64,
    lzz: f64,
}

const INF_CELL: Cell = Cell { l: f64::INFINITY, lz: f64::NAN, lx: f64::NAN, lzz: f64::NAN };

struct Evaluator<'a> {
    functional: Functional,
    model: &'a ModelSpec,
    levy_cache: HashMap<u64, Cell>,
}

impl<'a> Evaluator<'a> {
    fn new(functional: Functional, model: &'a ModelSpec) -> Self {
        Self { functional, model, levy_cache: HashMap::new() }
    }

    fn cell(&mut self, x: f64, zeta: f64) -> Result<Cell> {
        let m = self.model;
        match self.functional {
            Functional::Brownian => Ok(Cell { l: 0.5 * zeta * zeta, lz: zeta, lx: 0.0, lzz: 1.0 }),
            Functional::SdeBrownian => {
                let c = &m.coeffs;
                let s = c.sigma.eval(x);
                if !(s.abs() >= c.sigma_min) {
                    return Err(Error::DegenerateDiffusion { x, sigma: s, sigma_min: c.sigma_min });
                }
                let u = (zeta - c.b.eval(x)) / s;
                let ux = -c.b.deriv(x) / s - u * c.sigma.deriv(x) / s;
                Ok(Cell { l: 0.5 * u * u, lz: u / s, lx: u * ux, lzz: 1.0 / (s * s) })
            }
            Functional::Levy => {
                if let Some(c) = self.levy_cache.get(&zeta.to_bits()) {
                    return Ok(*c);
                }
                let r = legendre_transform(&m.triplet, zeta, DEFAULT_TOL)?;
                let c = if r.value.is_finite() {
                    Cell { l: r.value, lz: r.argmax, lx: 0.0, lzz: r.curvature.map_or(0.0, |c| 1.0 / c) }
                } else {
                    INF_CELL
                };
                self.levy_cache.insert(zeta.to_bits(), c);
                Ok(c)
            }
            Functional::General => {
                let r = lagrangian(m, x, zeta, DEFAULT_TOL)?;
                if !r.value.is_finite() {
                    return Ok(INF_CELL);
                }
                let h = HamiltonianFn::new(m, x).evaluate(r.argmax, true)?;
                Ok(Cell { l: r.value, lz: r.argmax, lx: -h.d_x, lzz: 1.0 / h.d_xi2 })
            }
            Functional::Joint => {
                let j = |x: f64, z: f64| -> Result<f64> { Ok(joint_cell(m, x, z)?.unwrap_or(f64::INFINITY)) };
                let l = j(x, zeta)?;
                if !l.is_finite() {
                    return Ok(INF_CELL);
                }
                let hz = 1e-6 * (1.0 + zeta.abs());
                let hx = 1e-6 * (1.0 + x.abs());
                let (zp, zm) = (j(x, zeta + hz)?, j(x, zeta - hz)?);
                let lx = (j(x + hx, zeta)? - j(x - hx, zeta)?) / (2.0 * hx);
                let h2 = 1e-4 * (1.0 + zeta.abs());
                let lzz = (j(x, zeta + h2)? - 2.0 * l + j(x, zeta - h2)?) / (h2 * h2);
                Ok(Cell { l, lz: (zp - zm) / (2.0 * hz), lx, lzz })
            }
        }
    }

    /// Action, gradient over interior nodes, and preconditioner weights.
    fn evaluate(&mut self, path: &Path) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let n = path.n();
        let mut cells = Vec::with_capacity(n);
        let mut total = 0.0;
        for k in 0..n {
            let c = self.cell(path.midpoint(k), path.slope(k))?;
            total += c.l;
            if !c.l.is_finite() {
                return Ok((f64::INFINITY, Vec::new(), Vec::new()));
            }
            cells.push(c);
        }
        let nf = n as f64;
        let grad = (1..n).map(|j| (0.5 * cells[j - 1].lx + 0.5 * cells[j].lx) / nf + cells[j - 1].lz - cells[j].lz).collect();
        let w = cells.iter().map(|c| if c.lzz.is_finite() { c.lzz.clamp(1e-10, 1e10) } else { 1.0 }).collect();
        Ok((total / nf, grad, w))
    }
}

/// Action of `path` under `functional`; paper functionals need `path(0) = 0`.
pub fn evaluate_action(functional: Functional, path: &Path, model: &ModelSpec) -> Result<f64> {
    if functional.requires_origin() && path.start() != 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(Evaluator::new(functional, model).evaluate(path)?.0)
}

/// Gradient of the discrete action with respect to the interior nodes.
pub fn action_gradient(functional: Functional, path: &Path, model: &ModelSpec) -> Result<Vec<f64>> {
    Ok(Evaluator::new(functional, model).evaluate(path)?.1)
}

/// `max_j |n(ℓ_ζ(j) − ℓ_ζ(j−1)) − ½(ℓ_x(j−1) + ℓ_x(j))|` over interior nodes,
/// the discrete form of `d/dt ∂L/∂ζ − ∂L/∂x`.
pub fn euler_lagrange_residual(path: &Path, model: &ModelSpec) -> Result<f64> {
    residual_for(Functional::auto(model, path.start()), path, model)
}

pub fn residual_for(functional: Functional, path: &Path, model: &ModelSpec) -> Result<f64> {
    let (s, g, _) = Evaluator::new(functional, model).evaluate(path)?;
    if !s.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(path.n() as f64 * g.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Solves the tridiagonal system `M r = q` with `M_jj = n(w_{j−1} + w_j)`,
/// `M_{j,j+1} = −n w_j` (Thomas algorithm).
fn precondition(w: &[f64], q: &[f64]) -> Vec<f64> {
    let m = q.len();
    let nf = w.len() as f64;
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    for j in 0..m {
        let diag = nf * (w[j] + w[j + 1]);
        let lower = if j > 0 { -nf * w[j] } else { 0.0 };
        let upper = -nf * w[j + 1];
        let denom = diag - lower * if j > 0 { c[j - 1] } else { 0.0 };
        c[j] = upper / denom;
        d[j] = (q[j] - lower * if j > 0 { d[j - 1] } else { 0.0 }) / denom;
    }
    let mut r = vec![0.0; m];
    for j in (0..m).rev() {
        r[j] = d[j] - if j + 1 < m { c[j] * r[j + 1] } else { 0.0 };
    }
    r
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn with_interior(x0: f64, x1: f64, interior: &[f64]) -> Path {
    let mut v = Vec::with_capacity(interior.len() + 2);
    v.push(x0);
    v.extend_from_slice(interior);
    v.push(x1);
    Path::new(v).expect("interior values stay finite")
}

fn drift_path(problem: &BoundaryProblem) -> Result<Path> {
    let m = &problem.model;
    let mean = m.triplet.mean()?;
    let f = |x: f64| -> f64 {
        match problem.functional {
            Functional::Brownian => 0.0,
            Functional::Levy => mean,
            Functional::SdeBrownian => m.coeffs.b.eval(x),
            Functional::General | Functional::Joint => m.coeffs.b.eval(x) + m.coeffs.eta.eval(x) * mean,
        }
    };
    let n = problem.n;
    let h = 1.0 / n as f64;
    let mut v = vec![problem.x0];
    for _ in 0..n {
        let x = *v.last().unwrap();
        let k1 = f(x);
        let k2 = f(x + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h * k2);
        let k4 = f(x + h * k3);
        v.push(x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
    }
    let gap = problem.x1 - v[n];
    for (k, x) in v.iter_mut().enumerate() {
        *x += gap * k as f64 / n as f64;
    }
    Path::new(v)
}

/// Quasi-Newton minimization of the discrete action with fixed endpoints.
pub fn minimize_action(problem: &BoundaryProblem, opts: &MinimizeOptions) -> Result<MinimizationResult> {
    let n = problem.n;
    if n < 1 {
        return Err(Error::InvalidInput("grid needs n >= 1".into()));
    }
    if !(problem.x0.is_finite() && problem.x1.is_finite()) {
        return Err(Error::InvalidInput("endpoints must be finite".into()));
    }
    if problem.functional.requires_origin() && problem.x0 != 0.0 {
        return Err(Error::InvalidInput(format!(
            "the {} functional is defined for paths starting at 0, got x0 = {}",
            problem.functional.name(),
            problem.x0
        )));
    }
    let mut ev = Evaluator::new(problem.functional, &problem.model);
    let line = match &opts.initial {
        Some(p) => {
            if p.n() != n || p.start() != problem.x0 || p.end() != problem.x1 {
                return Err(Error::GridMismatch("initial path does not match the grid or endpoints".into()));
            }
            p.clone()
        }
        None => Path::linear(n, problem.x0, problem.x1)?,
    };
    let mut path = line;
    let (mut s, mut g, mut w) = ev.evaluate(&path)?;
    if !s.is_finite() {
        path = drift_path(problem)?;
        (s, g, w) = ev.evaluate(&path)?;
        if !s.is_finite() {
            return Err(Error::InfiniteInitialAction);
        }
    }
    let finish = |path: Path, s: f64, g: &[f64], iterations: usize, converged: bool| {
        let grad_norm = dot(g, g).sqrt();
        let el = n as f64 * g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        MinimizationResult { path, action: s, grad_norm, el_residual: el, iterations, converged }
    };
    if n == 1 {
        return Ok(finish(path, s, &g, 0, true));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n);
    let mut x: Vec<f64> = path.values()[1..n].to_vec();
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    for iter in 0..max_iter {
        let gn = dot(&g, &g).sqrt();
        if gn <= opts.gtol * (1.0 + s.abs()) {
            return Ok(finish(path, s, &g, iter, true));
        }
        let direction = |pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>| {
            let mut q = g.clone();
            let mut alphas = Vec::with_capacity(pairs.len());
            for (sv, yv, rho) in pairs.iter().rev() {
                let a = rho * dot(sv, &q);
                for (qi, yi) in q.iter_mut().zip(yv) {
                    *qi -= a * yi;
                }
                alphas.push(a);
            }
            let mut r = precondition(&w, &q);
            for ((sv, yv, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(yv, &r);
                for (ri, si) in r.iter_mut().zip(sv) {
                    *ri += si * (a - b);
                }
            }
            r.iter().map(|v| -v).collect::<Vec<f64>>()
        };
        let mut d = direction(&pairs);
        let mut gd = dot(&g, &d);
        if !(gd < 0.0) {
            pairs.clear();
            d = direction(&pairs);
            gd = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            if trial.iter().all(|v| v.is_finite()) {
                let tp = with_interior(problem.x0, problem.x1, &trial);
                if let Ok((st, gt, wt)) = ev.evaluate(&tp) {
                    if st.is_finite() && st <= s + 1e-4 * step * gd + 4.0 * f64::EPSILON * s.abs() {
                        accepted = Some((trial, tp, st, gt, wt));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((xn, pn, sn, gnew, wn)) = accepted else {
            if pairs.is_empty() {
                let converged = gn <= opts.gtol * (1.0 + s.abs());
                return Ok(finish(path, s, &g, iter, converged));
            }
            pairs.clear();
            continue;
        };
        let sv: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        if sy > 1e-16 * dot(&sv, &sv).sqrt() * dot(&yv, &yv).sqrt() && sy > 0.0 {
            pairs.push_back((sv, yv, 1.0 / sy));
            if pairs.len() > opts.memory {
                pairs.pop_front();
            }
        }
        x = xn;
        path = pn;
        s = sn;
        g = gnew;
        w = wn;
    }
    let converged = dot(&g, &g).sqrt() <= opts.gtol * (1.0 + s.abs());
    Ok(finish(path, s, &g, max_iter, converged))
}

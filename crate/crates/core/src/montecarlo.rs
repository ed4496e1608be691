//! Crude Monte Carlo for rare events, the `ε log P` rate table and the
//! exponential-equivalence diagnostics.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::LevyTriplet;
use crate::minimize::{minimize_action, BoundaryProblem, Functional, MinimizeOptions};
use crate::model::ModelSpec;
use crate::path::Path;
use crate::simulate::{driving_noise, euler_maruyama, euler_maruyama_driven, fm_scheme, sample_levy, LevySampler, RngStream, SamplePath, SchemeOptions};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Environment variable capping the number of sampling workers.
pub const THREADS_ENV: &str = "LEVY_ACTION_THREADS";

/// A measurable predicate on grid paths.
#[derive(Debug, Clone, PartialEq)]
pub enum EventSpec {
    Always,
    /// `φ(1) ≥ c`.
    TerminalAtLeast(f64),
    /// `φ(1) ≤ c`.
    TerminalAtMost(f64),
    /// `sup_t |φ(t)| ≥ c`.
    SupAtLeast(f64),
    /// `‖φ − ψ‖∞ ≤ δ`, with `ψ` interpolated linearly at the sample nodes.
    Tube { reference: Path, delta: f64 },
    Union(Vec<EventSpec>),
}

impl EventSpec {
    pub fn contains(&self, p: &SamplePath) -> bool {
        match self {
            EventSpec::Always => true,
            EventSpec::TerminalAtLeast(c) => p.terminal() >= *c,
            EventSpec::TerminalAtMost(c) => p.terminal() <= *c,
            EventSpec::SupAtLeast(c) => p.sup_abs() >= *c,
            EventSpec::Tube { reference, delta } => {
                let n = p.path.n() as f64;
                p.path.values().iter().enumerate().all(|(k, v)| (v - reference.at(k as f64 / n)).abs() <= *delta)
            }
            EventSpec::Union(parts) => parts.iter().any(|e| e.contains(p)),
        }
    }

    /// Parses `always`, `terminal>=c`, `terminal<=c`, `sup>=c`, joined by `|`.
    /// Tubes need a reference path and are built directly.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split('|').map(str::trim).collect();
        if parts.len() > 1 {
            return Ok(EventSpec::Union(parts.into_iter().map(Self::parse).collect::<Result<_>>()?));
        }
        let t = parts[0].replace(' ', "");
        if t == "always" {
            return Ok(EventSpec::Always);
        }
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("bad threshold '{s}' in event '{text}'")))
        };
        if let Some(c) = t.strip_prefix("terminal>=") {
            Ok(EventSpec::TerminalAtLeast(number(c)?))
        } else if let Some(c) = t.strip_prefix("terminal<=") {
            Ok(EventSpec::TerminalAtMost(number(c)?))
        } else if let Some(c) = t.strip_prefix("sup>=") {
            Ok(EventSpec::SupAtLeast(number(c)?))
        } else {
            Err(Error::InvalidInput(format!("unknown event '{text}'")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpEstimate {
    pub epsilon: f64,
    pub p_hat: f64,
    pub ci95: (f64, f64),
    /// `ε ln p̂`, or the upper bound `ε ln(3/N)` when no sample hit.
    pub rate_value: f64,
    pub n_samples: u64,
    pub hits: u64,
    pub no_hits: bool,
}

/// Wilson score interval at level `z`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

impl LdpEstimate {
    pub fn from_counts(epsilon: f64, hits: u64, n_samples: u64) -> Self {
        let p_hat = hits as f64 / n_samples as f64;
        let no_hits = hits == 0;
        let rate_value = if no_hits { epsilon * (3.0 / n_samples as f64).ln() } else { epsilon * p_hat.ln() };
        Self { epsilon, p_hat, ci95: wilson_interval(hits, n_samples, Z95), rate_value, n_samples, hits, no_hits }
    }

    /// `ε ln` of the interval ends.
    pub fn rate_band(&self) -> (f64, f64) {
        (self.epsilon * self.ci95.0.ln(), self.epsilon * self.ci95.1.ln())
    }
}

/// Worker count: explicit value, else `LEVY_ACTION_THREADS`, else all cores.
pub fn worker_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

/// Maps `f` over stream ids `0..n` on `threads` workers; results come back
/// in id order so any fold over them is worker-count independent.
fn parallel_map<T: Send>(threads: Option<usize>, n: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(threads))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub seed: u64,
    pub threads: Option<usize>,
    pub scheme: SchemeOptions,
}

impl McOptions {
    pub fn seeded(seed: u64) -> Self {
        Self { seed, threads: None, scheme: SchemeOptions::default() }
    }
}

/// Frequency of `event` over `n_samples` Euler–Maruyama paths on grid `n`;
/// sample `i` uses stream `(seed, i)`.
pub fn estimate_event(model: &ModelSpec, event: &EventSpec, n_samples: u64, n: usize, opts: &McOptions) -> Result<LdpEstimate> {
    estimate_on_streams(model, event, n_samples, n, opts, 0)
}

fn estimate_on_streams(model: &ModelSpec, event: &EventSpec, n_samples: u64, n: usize, opts: &McOptions, offset: u64) -> Result<LdpEstimate> {
    if n_samples < 100 {
        return Err(Error::InvalidInput(format!("need at least 100 samples, got {n_samples}")));
    }
    let hits = parallel_map(opts.threads, n_samples, |i| {
        let p = euler_maruyama(model, n, RngStream::new(opts.seed, offset + i), &opts.scheme)?;
        Ok(event.contains(&p) as u64)
    })?
    .into_iter()
    .sum();
    Ok(LdpEstimate::from_counts(model.epsilon, hits, n_samples))
}

/// `P(Z ≥ x)` for a standard normal `Z`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `P(√ε·B(1) ≥ c)`.
pub fn brownian_terminal_tail(epsilon: f64, c: f64) -> f64 {
    gaussian_tail(c / epsilon.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub estimate: LdpEstimate,
    pub neg_inf_s: f64,
}

/// `rate ≈ c0 + c1·ε ln(1/ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub c0: f64,
    pub c1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Least-squares fit over rows with hits; `None` with fewer than two.
    pub fit: Option<RateFit>,
}

/// The correction term `ε ln(1/ε)`.
pub fn correction(epsilon: f64) -> f64 {
    epsilon * (1.0 / epsilon).ln()
}

/// Least-squares fit of `c0 + c1·ε ln(1/ε)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Option<RateFit> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(e, _)| correction(*e)).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let c1 = sxy / sxx;
    Some(RateFit { c0: my - c1 * mx, c1 })
}

/// Rates for a decreasing list of ε. Row `r` draws from streams
/// `(seed, r·2⁴⁰ + i)`. The `−inf S` column is computed once.
pub fn rate_table(model: &ModelSpec, event: &EventSpec, epsilons: &[f64], n_samples: u64, n: usize, opts: &McOptions) -> Result<RateTable> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("epsilons must be non-empty and strictly decreasing".into()));
    }
    let s = neg_inf_action(model, event)?;
    let mut rows = Vec::with_capacity(epsilons.len());
    for (r, &eps) in epsilons.iter().enumerate() {
        let mut m = model.clone();
        m.epsilon = eps;
        let estimate = estimate_on_streams(&m, event, n_samples, n, opts, (r as u64) << 40)?;
        rows.push(RateRow { estimate, neg_inf_s: s });
    }
    let points: Vec<(f64, f64)> = rows.iter().filter(|r| !r.estimate.no_hits).map(|r| (r.estimate.epsilon, r.estimate.rate_value)).collect();
    Ok(RateTable { fit: fit_rate(&points), rows })
}

/// The zero-cost path started at 0: `φ′ = b(φ) + η(φ)·E L(1)`, by RK4.
pub fn drift_path(model: &ModelSpec, n: usize) -> Result<Path> {
    let mean = if model.coeffs.eta_is_zero() { 0.0 } else { model.triplet.mean()? };
    let c = &model.coeffs;
    let v = |x: f64| c.b.eval(x) + c.eta.eval(x) * mean;
    let h = 1.0 / n as f64;
    let mut xs = vec![0.0];
    let mut x = 0.0;
    for _ in 0..n {
        let k1 = v(x);
        let k2 = v(x + 0.5 * h * k1);
        let k3 = v(x + 0.5 * h * k2);
        let k4 = v(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        xs.push(x);
    }
    Path::new(xs)
}

/// `−inf_{φ ∈ event} S(φ)` over paths from 0. Endpoint events minimize to
/// the threshold at `t = 1`; `sup ≥ c` takes the cheaper of `±c` at `t = 1`.
/// Tubes yield NaN.
pub fn neg_inf_action(model: &ModelSpec, event: &EventSpec) -> Result<f64> {
    let n = model.n.max(1);
    let drift = drift_path(model, n)?;
    let drift_sample = SamplePath { path: drift, step: false, horizon: 1.0, jumps: None };
    if event.contains(&drift_sample) {
        return Ok(0.0);
    }
    let frozen = model.coeffs.sigma_is_zero() && (model.coeffs.eta_is_zero() || model.triplet.nu.is_zero() && model.triplet.sigma2 == 0.0);
    let to = |x1: f64| -> Result<f64> {
        if frozen {
            return Ok(f64::INFINITY);
        }
        let problem = BoundaryProblem { functional: Functional::auto(model, 0.0), model: model.clone(), x0: 0.0, x1, n };
        Ok(minimize_action(&problem, &MinimizeOptions::default())?.action)
    };
    Ok(match event {
        EventSpec::Always => 0.0,
        EventSpec::TerminalAtLeast(c) | EventSpec::TerminalAtMost(c) => -to(*c)?,
        EventSpec::SupAtLeast(c) => -to(*c)?.min(to(-*c)?),
        EventSpec::Tube { .. } => f64::NAN,
        EventSpec::Union(parts) => parts.iter().map(|e| neg_inf_action(model, e)).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEstimate {
    /// Empirical `P(sup-distance > δ)`.
    pub frequency: f64,
    pub hits: u64,
    pub n_samples: u64,
    pub mean_distance: f64,
}

fn gap_from(distances: Vec<f64>, delta: f64) -> GapEstimate {
    let n = distances.len() as u64;
    let hits = distances.iter().filter(|d| **d > delta).count() as u64;
    let mean_distance = distances.iter().sum::<f64>() / n as f64;
    GapEstimate { frequency: hits as f64 / n as f64, hits, n_samples: n, mean_distance }
}

fn check_gap_args(n_samples: u64, delta: f64) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be positive, got {delta}")));
    }
    Ok(())
}

/// `‖X^{ε,m} − X^ε‖∞` on grid `n` with both schemes driven by the same noise.
pub fn equivalence_gap_sde(model: &ModelSpec, n: usize, m: usize, n_samples: u64, delta: f64, opts: &McOptions) -> Result<GapEstimate> {
    check_gap_args(n_samples, delta)?;
    let d = parallel_map(opts.threads, n_samples, |i| {
        let drv = driving_noise(model, n, RngStream::new(opts.seed, i), opts.scheme.cutoff)?;
        let x = euler_maruyama_driven(model, &drv, &opts.scheme)?;
        let xm = fm_scheme(model, m, &drv, &opts.scheme)?;
        x.path.sup_distance(&xm.path)
    })?;
    Ok(gap_from(d, delta))
}

/// `‖L(⌊k·ε·s⌋)/k − εL(s)‖∞` over `s ∈ [0, 1/ε]` with `k = ⌊1/ε⌋`, on a grid of
/// `per_unit` cells per unit time.
pub fn equivalence_gap_levy(triplet: &LevyTriplet, epsilon: f64, per_unit: usize, n_samples: u64, delta: f64, opts: &McOptions) -> Result<GapEstimate> {
    check_gap_args(n_samples, delta)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) || per_unit == 0 {
        return Err(Error::InvalidInput("need 0 < epsilon <= 1 and per_unit >= 1".into()));
    }
    let sampler = LevySampler::new(triplet, opts.scheme.cutoff)?;
    let horizon = (1.0 / epsilon).ceil();
    let k = (1.0 / epsilon).floor() as usize;
    let last = ((1.0 / epsilon) * per_unit as f64).floor() as usize;
    let cells = horizon as usize * per_unit;
    let d = parallel_map(opts.threads, n_samples, |i| {
        let l = sample_levy(&sampler, horizon, cells, RngStream::new(opts.seed, i))?;
        let v = l.path.values();
        Ok((0..=last.min(cells))
            .map(|j| {
                let s = j as f64 / per_unit as f64;
                let int_time = ((k as f64 * epsilon * s).floor() as usize).min(k);
                let z = if int_time == 0 { 0.0 } else { v[int_time * per_unit] / k as f64 };
                (z - epsilon * v[j]).abs()
            })
            .fold(0.0, f64::max))
    })?;
    Ok(gap_from(d, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoefficientSet;

    fn bm(eps: f64) -> ModelSpec {
        ModelSpec::brownian("0", "1", eps).unwrap()
    }

    #[test]
    fn wilson_contains_estimate() {
        for (h, n) in [(0, 100), (1, 100), (50, 100), (100, 100), (7, 1_000_000)] {
            let (lo, hi) = wilson_interval(h, n, Z95);
            let p = h as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.4038315).abs() < 1e-6 && (hi - 0.5961685).abs() < 1e-6);
    }

    #[test]
    fn sure_event() {
        let e = estimate_event(&bm(0.1), &EventSpec::Always, 200, 4, &McOptions::seeded(1)).unwrap();
        assert_eq!(e.p_hat, 1.0);
        assert_eq!(e.rate_value, 0.0);
    }

    #[test]
    fn zero_hits_use_rule_of_three() {
        let e = estimate_event(&bm(0.01), &EventSpec::TerminalAtLeast(5.0), 1000, 1, &McOptions::seeded(1)).unwrap();
        assert!(e.no_hits);
        assert!((e.rate_value - 0.01 * (0.003f64).ln()).abs() < 1e-15);
        assert!(estimate_event(&bm(0.1), &EventSpec::Always, 99, 1, &McOptions::seeded(1)).is_err());
    }

    #[test]
    fn union_of_disjoint_events_adds() {
        let m = bm(0.5);
        let o = McOptions::seeded(9);
        let a = estimate_event(&m, &EventSpec::TerminalAtLeast(0.5), 5000, 8, &o).unwrap();
        let b = estimate_event(&m, &EventSpec::TerminalAtMost(-0.5), 5000, 8, &o).unwrap();
        let u = estimate_event(&m, &EventSpec::parse("terminal>=0.5 | terminal<=-0.5").unwrap(), 5000, 8, &o).unwrap();
        assert_eq!(u.hits, a.hits + b.hits);
        let sup = estimate_event(&m, &EventSpec::SupAtLeast(0.5), 5000, 8, &o).unwrap();
        assert!(sup.hits >= u.hits);
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let m = bm(0.25);
        let e = EventSpec::TerminalAtLeast(1.0);
        let one = estimate_event(&m, &e, 3000, 4, &McOptions { threads: Some(1), ..McOptions::seeded(5) }).unwrap();
        let four = estimate_event(&m, &e, 3000, 4, &McOptions { threads: Some(4), ..McOptions::seeded(5) }).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn event_parsing() {
        assert_eq!(EventSpec::parse("terminal >= 1").unwrap(), EventSpec::TerminalAtLeast(1.0));
        assert_eq!(EventSpec::parse("sup>=2.5").unwrap(), EventSpec::SupAtLeast(2.5));
        assert!(EventSpec::parse("terminal>1").is_err());
        assert!(EventSpec::parse("sup>=nan").is_err());
    }

    #[test]
    fn tube_event() {
        let r = Path::linear(4, 0.0, 1.0).unwrap();
        let tube = EventSpec::Tube { reference: r, delta: 0.1 };
        let near = SamplePath { path: Path::from_fn(8, |t| t + 0.05).unwrap(), step: false, horizon: 1.0, jumps: None };
        let far = SamplePath { path: Path::from_fn(8, |t| t * t).unwrap(), step: false, horizon: 1.0, jumps: None };
        assert!(tube.contains(&near));
        assert!(!tube.contains(&far));
    }

    #[test]
    fn gaussian_tail_values() {
        assert!((gaussian_tail(0.0) - 0.5).abs() < 1e-16);
        assert!((gaussian_tail(2.0) / 0.02275013194817922 - 1.0).abs() < 1e-13);
        assert!((brownian_terminal_tail(0.25, 1.0) - gaussian_tail(2.0)).abs() < 1e-16);
    }

    #[test]
    fn fit_recovers_linear_model() {
        let pts: Vec<(f64, f64)> = [0.5, 0.25, 0.1].iter().map(|&e| (e, -0.5 + 0.3 * correction(e))).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.c0 + 0.5).abs() < 1e-12 && (f.c1 - 0.3).abs() < 1e-12);
        assert!(fit_rate(&pts[..1]).is_none());
    }

    #[test]
    fn neg_inf_action_brownian_and_drift() {
        assert!((neg_inf_action(&bm(0.1), &EventSpec::TerminalAtLeast(1.0)).unwrap() + 0.5).abs() < 1e-9);
        assert_eq!(neg_inf_action(&bm(0.1), &EventSpec::TerminalAtMost(0.0)).unwrap(), 0.0);
        let drift = ModelSpec::new(CoefficientSet::parse("1", "0", "0").unwrap(), LevyTriplet::gaussian(0.0, 1.0).unwrap(), 0.1).unwrap();
        assert_eq!(neg_inf_action(&drift, &EventSpec::TerminalAtLeast(0.5)).unwrap(), 0.0);
        assert_eq!(neg_inf_action(&drift, &EventSpec::TerminalAtLeast(2.0)).unwrap(), f64::NEG_INFINITY);
        let e = estimate_event(&drift, &EventSpec::TerminalAtLeast(0.5), 100, 10, &McOptions::seeded(0)).unwrap();
        assert_eq!(e.rate_value, 0.0);
    }

    #[test]
    fn rate_table_shape() {
        let t = rate_table(&bm(1.0), &EventSpec::TerminalAtLeast(1.0), &[0.5, 0.25, 0.2], 2000, 1, &McOptions::seeded(3)).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().all(|r| (r.neg_inf_s + 0.5).abs() < 1e-9));
        assert!(t.fit.is_some());
        assert!(rate_table(&bm(1.0), &EventSpec::Always, &[0.1, 0.5], 200, 1, &McOptions::seeded(3)).is_err());
    }

    #[test]
    fn sde_gap_vanishes_on_full_grid() {
        let m = ModelSpec::brownian("-x", "1 + 0.5*sin(x)", 0.1).unwrap();
        let g = equivalence_gap_sde(&m, 16, 16, 50, 1e-12, &McOptions::seeded(2)).unwrap();
        assert_eq!(g.hits, 0);
        assert_eq!(g.mean_distance, 0.0);
    }

    #[test]
    fn levy_gap_shrinks_with_epsilon() {
        let t = LevyTriplet::compensated_poisson();
        let o = McOptions::seeded(4);
        let coarse = equivalence_gap_levy(&t, 0.5, 8, 400, 0.5, &o).unwrap();
        let fine = equivalence_gap_levy(&t, 0.02, 8, 400, 0.5, &o).unwrap();
        assert!(fine.mean_distance < coarse.mean_distance);
        assert!(fine.frequency <= coarse.frequency);
    }
}

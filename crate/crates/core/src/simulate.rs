//! Samplers for scaled Brownian motion, scaled Lévy processes and the SDE
//! `dX = b(X₋)dt + √ε σ(X₋)dB + η(X₋)dL^ε`, plus the coarse schemes `F^m`
//! and the integer-time discretisation `Z_n`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{DensityMeasure, LevyMeasure, LevyTriplet};
use crate::model::ModelSpec;
use crate::path::Path;

/// A reproducible random stream: the ChaCha8 keystream for `seed`,
/// positioned on stream `stream_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r
    }
}

/// A sampled path. With `step` set the path is càdlàg and constant on each
/// cell; otherwise it is read as piecewise linear.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePath {
    pub path: Path,
    pub step: bool,
    /// Length of the physical time interval the grid covers.
    pub horizon: f64,
    /// Number of compound-Poisson jumps drawn, when applicable.
    pub jumps: Option<u64>,
}

impl SamplePath {
    pub fn terminal(&self) -> f64 {
        self.path.end()
    }

    pub fn sup_abs(&self) -> f64 {
        self.path.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// `√ε·B` on `[0, 1]` using `εB(t/ε) =ᵈ √ε B(t)`.
pub fn sample_scaled_brownian(epsilon: f64, n: usize, stream: RngStream) -> Result<SamplePath> {
    check_grid(epsilon, n)?;
    let mut rng = stream.rng();
    let mut v = Vec::with_capacity(n + 1);
    v.push(0.0);
    let sd = (epsilon / n as f64).sqrt();
    let mut x = 0.0;
    for _ in 0..n {
        x += sd * normal(&mut rng);
        v.push(x);
    }
    Ok(SamplePath { path: Path::new(v)?, step: false, horizon: 1.0, jumps: None })
}

fn check_grid(epsilon: f64, n: usize) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("grid needs n >= 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Panel {
    lo: f64,
    hi: f64,
    bound: f64,
}

#[derive(Debug, Clone)]
enum JumpLaw {
    None,
    Atoms { sizes: Vec<f64>, index: WeightedIndex<f64> },
    Density { measure: DensityMeasure, panels: Vec<Panel>, index: WeightedIndex<f64> },
}

/// Largest jump rate the default cutoff allows, per unit time.
pub const MAX_DEFAULT_JUMP_RATE: f64 = 1e4;
/// Share of the total variance the default cutoff may replace by a Gaussian.
pub const SMALL_JUMP_VARIANCE_SHARE: f64 = 1e-4;

/// Increments of a Lévy process: drift, Gaussian part (including the
/// small-jump substitute below the cutoff ρ) and compound Poisson jumps
/// with `|y| > ρ`.
#[derive(Debug, Clone)]
pub struct LevySampler {
    drift: f64,
    variance: f64,
    rate: f64,
    cutoff: f64,
    law: JumpLaw,
}

impl LevySampler {
    /// `cutoff = None` picks ρ automatically: 0 for discrete measures; for
    /// densities the largest ρ whose substituted variance is at most
    /// `1e-4` of the total, raised until the jump rate is at most `1e4`.
    pub fn new(triplet: &LevyTriplet, cutoff: Option<f64>) -> Result<Self> {
        if let Some(r) = cutoff {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidInput(format!("small-jump cutoff must lie in [0, 1], got {r}")));
            }
        }
        match &triplet.nu {
            LevyMeasure::Atoms(atoms) => {
                let rho = cutoff.unwrap_or(0.0);
                let mut drift = triplet.a;
                let mut variance = triplet.sigma2;
                let (mut sizes, mut masses) = (Vec::new(), Vec::new());
                for a in atoms {
                    if a.size.abs() <= rho {
                        variance += a.size * a.size * a.mass;
                    } else {
                        if a.size.abs() <= 1.0 {
                            drift -= a.size * a.mass;
                        }
                        sizes.push(a.size);
                        masses.push(a.mass);
                    }
                }
                let rate: f64 = masses.iter().sum();
                let law = if sizes.is_empty() {
                    JumpLaw::None
                } else {
                    JumpLaw::Atoms { sizes, index: WeightedIndex::new(&masses).map_err(|e| Error::InvalidMeasure(e.to_string()))? }
                };
                Ok(Self { drift, variance, rate, cutoff: rho, law })
            }
            LevyMeasure::Density(d) => Self::for_density(triplet, d, cutoff),
        }
    }

    fn for_density(triplet: &LevyTriplet, d: &DensityMeasure, cutoff: Option<f64>) -> Result<Self> {
        let small_var = |rho: f64| d.moment_between(|y| y * y, 0.0, rho);
        let mass = |rho: f64| d.moment_between(|_| 1.0, rho, f64::INFINITY);
        let rho = match cutoff {
            Some(r) if r > 0.0 => r,
            Some(_) => {
                if !d.moment_between(|_| 1.0, 0.0, 1.0)?.is_finite() {
                    return Err(Error::CutoffRequired);
                }
                d.quadrature().cutoff
            }
            None => {
                let total = triplet.sigma2 + small_var(1.0)? + d.moment_between(|y| y * y, 1.0, f64::INFINITY)?;
                let budget = SMALL_JUMP_VARIANCE_SHARE * total;
                // small_var is increasing in ρ: bisect in log ρ
                let (mut lo, mut hi) = (-30.0_f64, 0.0_f64);
                if small_var(1.0)? <= budget {
                    lo = 0.0;
                } else {
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if small_var(mid.exp())? <= budget {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                }
                let mut r = lo.exp();
                if mass(r)? > MAX_DEFAULT_JUMP_RATE {
                    let (mut a, mut b) = (r.ln(), 0.0_f64);
                    for _ in 0..80 {
                        let mid = 0.5 * (a + b);
                        if mass(mid.exp())? > MAX_DEFAULT_JUMP_RATE {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    r = b.exp();
                }
                r
            }
        };
        let variance = triplet.sigma2 + small_var(rho)?;
        let drift = triplet.a - d.moment_between(|y| y, rho, 1.0)?;
        // panels of doubling width on each side, cut where the remaining mass is negligible
        let total_mass = mass(rho)?;
        let mut panels = Vec::new();
        let mut weights = Vec::new();
        for s in [-1.0, 1.0] {
            let mut lo = rho;
            loop {
                let hi = lo * 2.0;
                let w = d.moment_between(|y| if y * s > 0.0 { 1.0 } else { 0.0 }, lo, hi)?;
                let beyond = d.moment_between(|y| if y * s > 0.0 { 1.0 } else { 0.0 }, hi, f64::INFINITY)?;
                if w > 0.0 {
                    let bound = (0..=64)
                        .map(|k| d.density(s * (lo + (hi - lo) * k as f64 / 64.0)))
                        .fold(0.0, f64::max)
                        * 1.25;
                    let (a, b) = if s > 0.0 { (lo, hi) } else { (-hi, -lo) };
                    panels.push(Panel { lo: a, hi: b, bound });
                    weights.push(w);
                }
                if beyond <= 1e-15 * total_mass.max(1e-300) || hi > 1e12 {
                    break;
                }
                lo = hi;
            }
        }
        let law = if panels.is_empty() {
            JumpLaw::None
        } else {
            JumpLaw::Density { measure: d.clone(), panels, index: WeightedIndex::new(&weights).map_err(|e| Error::InvalidMeasure(e.to_string()))? }
        };
        Ok(Self { drift, variance, rate: total_mass, cutoff: rho, law })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Jump rate `ν(|y| > ρ)`.
    pub fn jump_rate(&self) -> f64 {
        self.rate
    }

    /// Gaussian variance per unit time, including the small-jump substitute.
    pub fn gaussian_variance(&self) -> f64 {
        self.variance
    }

    fn jump(&self, rng: &mut impl Rng) -> f64 {
        match &self.law {
            JumpLaw::None => 0.0,
            JumpLaw::Atoms { sizes, index } => sizes[index.sample(rng)],
            JumpLaw::Density { measure, panels, index } => {
                let p = &panels[index.sample(rng)];
                loop {
                    let y = p.lo + (p.hi - p.lo) * rng.random::<f64>();
                    if rng.random::<f64>() * p.bound <= measure.density(y) {
                        return y;
                    }
                }
            }
        }
    }

    /// Increment over a time step `dt` and the number of jumps in it.
    pub fn increment(&self, dt: f64, rng: &mut impl Rng) -> (f64, u64) {
        let mut x = self.drift * dt;
        if self.variance > 0.0 {
            x += (self.variance * dt).sqrt() * normal(rng);
        }
        let mut count = 0;
        let lambda = self.rate * dt;
        if lambda > 0.0 {
            count = Poisson::new(lambda).map(|p| p.sample(rng) as u64).unwrap_or(0);
            for _ in 0..count {
                x += self.jump(rng);
            }
        }
        (x, count)
    }
}

/// `L^ε(t) = εL(t/ε)` on the `[0, 1]` grid, simulated on `[0, 1/ε]` with
/// `n·⌈1/ε⌉` cells and compressed.
pub fn sample_scaled_levy(triplet: &LevyTriplet, epsilon: f64, n: usize, stream: RngStream, cutoff: Option<f64>) -> Result<SamplePath> {
    check_grid(epsilon, n)?;
    let sampler = LevySampler::new(triplet, cutoff)?;
    let mut rng = stream.rng();
    Ok(scaled_levy_with(&sampler, epsilon, n, &mut rng))
}

fn scaled_levy_with(sampler: &LevySampler, epsilon: f64, n: usize, rng: &mut impl Rng) -> SamplePath {
    let horizon = 1.0 / epsilon;
    let per_cell = horizon.ceil().max(1.0) as usize;
    let dt = horizon / (n * per_cell) as f64;
    let mut v = Vec::with_capacity(n + 1);
    v.push(0.0);
    let mut l = 0.0;
    let mut jumps = 0;
    for _ in 0..n {
        for _ in 0..per_cell {
            let (dx, c) = sampler.increment(dt, rng);
            l += dx;
            jumps += c;
        }
        v.push(epsilon * l);
    }
    let path = Path::new(v).unwrap_or_else(|_| Path::new(vec![0.0, f64::MAX]).unwrap());
    SamplePath { path, step: true, horizon: 1.0, jumps: Some(jumps) }
}

/// Brownian and Lévy driving paths of the SDE on the `[0, 1]` grid:
/// `g = √ε·B` and `h = L^ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Driving {
    pub g: SamplePath,
    pub h: SamplePath,
}

/// Draws the Brownian increments first, then the Lévy path, from one stream.
pub fn driving_noise(model: &ModelSpec, n: usize, stream: RngStream, cutoff: Option<f64>) -> Result<Driving> {
    check_grid(model.epsilon, n)?;
    let mut rng = stream.rng();
    let sd = (model.epsilon / n as f64).sqrt();
    let mut g = Vec::with_capacity(n + 1);
    g.push(0.0);
    let mut x = 0.0;
    for _ in 0..n {
        x += sd * normal(&mut rng);
        g.push(x);
    }
    let g = SamplePath { path: Path::new(g)?, step: false, horizon: 1.0, jumps: None };
    let t = &model.triplet;
    let trivial = model.coeffs.eta_is_zero() || (t.nu.is_zero() && t.a == 0.0 && t.sigma2 == 0.0);
    let h = if trivial {
        SamplePath { path: Path::new(vec![0.0; n + 1])?, step: true, horizon: 1.0, jumps: Some(0) }
    } else {
        let sampler = LevySampler::new(t, cutoff)?;
        scaled_levy_with(&sampler, model.epsilon, n, &mut rng)
    };
    if !h.path.values().iter().all(|v| v.abs() < f64::MAX) {
        return Err(Error::Overflow { step: 0, bound: f64::MAX });
    }
    Ok(Driving { g, h })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    pub start: f64,
    /// Trajectories leaving `[−bound, bound]` abort with [`Error::Overflow`].
    pub bound: f64,
    /// Small-jump cutoff for the Lévy driver.
    pub cutoff: Option<f64>,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self { start: 0.0, bound: 1e8, cutoff: None }
    }
}

#[inline]
fn advance(x: f64, b: f64, s: f64, e: f64, dt: f64, dg: f64, dh: f64) -> f64 {
    x + b * dt + s * dg + e * dh
}

/// Explicit left-point scheme
/// `X_{k+1} = X_k + b(X_k)/n + σ(X_k)Δg_k + η(X_k)Δh_k`.
pub fn euler_maruyama(model: &ModelSpec, n: usize, stream: RngStream, opts: &SchemeOptions) -> Result<SamplePath> {
    let drv = driving_noise(model, n, stream, opts.cutoff)?;
    euler_maruyama_driven(model, &drv, opts)
}

/// Euler–Maruyama on given driving paths.
pub fn euler_maruyama_driven(model: &ModelSpec, drv: &Driving, opts: &SchemeOptions) -> Result<SamplePath> {
    let (g, h) = (drv.g.path.values(), drv.h.path.values());
    let n = drv.g.path.n();
    if drv.h.path.n() != n {
        return Err(Error::GridMismatch(format!("driving paths have {} and {} cells", n, drv.h.path.n())));
    }
    let c = &model.coeffs;
    let dt = 1.0 / n as f64;
    let mut v = Vec::with_capacity(n + 1);
    let mut x = opts.start;
    v.push(x);
    for k in 0..n {
        x = advance(x, c.b.eval(x), c.sigma.eval(x), c.eta.eval(x), dt, g[k + 1] - g[k], h[k + 1] - h[k]);
        if !(x.abs() <= opts.bound) {
            return Err(Error::Overflow { step: k + 1, bound: opts.bound });
        }
        v.push(x);
    }
    Ok(SamplePath { path: Path::new(v)?, step: drv.h.jumps.unwrap_or(0) > 0, horizon: 1.0, jumps: drv.h.jumps })
}

/// The map `F^m`: on each coarse cell `(t_k, t_{k+1}]` of width `1/m` the
/// coefficients are frozen at `φ(t_k)` and the driving paths enter through
/// their increments since `t_k`. Output lives on the driving grid.
pub fn fm_scheme(model: &ModelSpec, m: usize, drv: &Driving, opts: &SchemeOptions) -> Result<SamplePath> {
    let n = drv.g.path.n();
    if drv.h.path.n() != n {
        return Err(Error::GridMismatch(format!("driving paths have {} and {} cells", n, drv.h.path.n())));
    }
    if m == 0 || !n.is_multiple_of(m) {
        return Err(Error::GridMismatch(format!("coarse grid m = {m} does not divide the driving grid n = {n}")));
    }
    let (g, h) = (drv.g.path.values(), drv.h.path.values());
    let c = &model.coeffs;
    let r = n / m;
    let mut v = Vec::with_capacity(n + 1);
    v.push(opts.start);
    for k in 0..m {
        let j0 = k * r;
        let x0 = v[j0];
        let (b, s, e) = (c.b.eval(x0), c.sigma.eval(x0), c.eta.eval(x0));
        for j in j0 + 1..=j0 + r {
            let x = advance(x0, b, s, e, (j - j0) as f64 / n as f64, g[j] - g[j0], h[j] - h[j0]);
            if !(x.abs() <= opts.bound) {
                return Err(Error::Overflow { step: j, bound: opts.bound });
            }
            v.push(x);
        }
    }
    Ok(SamplePath { path: Path::new(v)?, step: drv.h.jumps.unwrap_or(0) > 0, horizon: 1.0, jumps: drv.h.jumps })
}

/// `Z_n^L/n`: for a path of `L` on `[0, n]`, the step path
/// `t ↦ L(⌊nt⌋)/n` on the same grid rescaled to `[0, 1]` (value 0 on the
/// first unit cell).
pub fn discretize_zn(levy: &SamplePath, n: usize) -> Result<SamplePath> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    if (levy.horizon - n as f64).abs() > 1e-12 * n as f64 {
        return Err(Error::GridMismatch(format!("path covers [0, {}] but n = {n}", levy.horizon)));
    }
    let cells = levy.path.n();
    if !cells.is_multiple_of(n) {
        return Err(Error::GridMismatch(format!("{cells} cells do not align with integer times up to {n}")));
    }
    let per_unit = cells / n;
    let vals = levy.path.values();
    let out = (0..=cells)
        .map(|j| {
            let k = j / per_unit;
            if k == 0 {
                0.0
            } else {
                vals[k * per_unit] / n as f64
            }
        })
        .collect();
    Ok(SamplePath { path: Path::new(out)?, step: true, horizon: 1.0, jumps: levy.jumps })
}

/// Unscaled `L` on `[0, horizon]` with `cells` equal cells.
pub fn sample_levy(sampler: &LevySampler, horizon: f64, cells: usize, stream: RngStream) -> Result<SamplePath> {
    if !(horizon > 0.0) || cells == 0 {
        return Err(Error::InvalidInput("horizon and cell count must be positive".into()));
    }
    let mut rng = stream.rng();
    let dt = horizon / cells as f64;
    let mut v = Vec::with_capacity(cells + 1);
    v.push(0.0);
    let mut l = 0.0;
    let mut jumps = 0;
    for _ in 0..cells {
        let (dx, c) = sampler.increment(dt, &mut rng);
        l += dx;
        jumps += c;
        v.push(l);
    }
    Ok(SamplePath { path: Path::new(v)?, step: true, horizon, jumps: Some(jumps) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Atom;
    use crate::model::CoefficientSet;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = sample_scaled_brownian(0.3, 16, RngStream::new(7, 1)).unwrap();
        let b = sample_scaled_brownian(0.3, 16, RngStream::new(7, 1)).unwrap();
        let c = sample_scaled_brownian(0.3, 16, RngStream::new(7, 2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn poisson_jump_counts() {
        let t = LevyTriplet::compensated_poisson();
        let s = LevySampler::new(&t, None).unwrap();
        assert_eq!(s.jump_rate(), 1.0);
        let n = 20_000;
        let total: u64 = (0..n).map(|i| sample_levy(&s, 1.0, 1, RngStream::new(3, i)).unwrap().jumps.unwrap()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt(), "{mean}");
        // L = N_t − t
        let p = sample_levy(&s, 1.0, 1, RngStream::new(3, 0)).unwrap();
        assert_eq!(p.terminal(), p.jumps.unwrap() as f64 - 1.0);
    }

    #[test]
    fn atoms_below_cutoff_become_gaussian() {
        let t = LevyTriplet::new(0.0, 0.5, LevyMeasure::atoms(vec![Atom { size: 0.01, mass: 100.0 }, Atom { size: 2.0, mass: 0.5 }]).unwrap()).unwrap();
        let s = LevySampler::new(&t, Some(0.05)).unwrap();
        assert!((s.gaussian_variance() - (0.5 + 0.01)).abs() < 1e-15);
        assert_eq!(s.jump_rate(), 0.5);
        assert!(LevySampler::new(&t, Some(2.0)).is_err());
    }

    #[test]
    fn tempered_stable_default_cutoff() {
        let t = LevyTriplet::new(0.0, 0.0, LevyMeasure::tempered_stable(1.5, 2.0).unwrap()).unwrap();
        let s = LevySampler::new(&t, None).unwrap();
        assert!(s.jump_rate() <= MAX_DEFAULT_JUMP_RATE * 1.0001);
        assert!(s.cutoff() > 0.0 && s.cutoff() < 1e-2);
        assert!(matches!(LevySampler::new(&t, Some(0.0)), Err(Error::CutoffRequired)));
        let e = LevyTriplet::new(0.0, 0.0, LevyMeasure::exponential_tail(2.0).unwrap()).unwrap();
        let s = LevySampler::new(&e, None).unwrap();
        assert!((s.jump_rate() - std::f64::consts::PI.sqrt()).abs() <= 2.0 * s.cutoff() + 1e-6);
        assert!(LevySampler::new(&e, Some(0.0)).is_ok());
    }

    #[test]
    fn em_and_fm_coincide_when_m_equals_n() {
        let m = ModelSpec::new(CoefficientSet::parse("-x", "1 + 0.5*sin(x)", "0.7").unwrap(), LevyTriplet::compensated_poisson(), 0.2).unwrap();
        let drv = driving_noise(&m, 64, RngStream::new(11, 5), None).unwrap();
        let em = euler_maruyama_driven(&m, &drv, &SchemeOptions::default()).unwrap();
        let fm = fm_scheme(&m, 64, &drv, &SchemeOptions::default()).unwrap();
        assert_eq!(em.path.values(), fm.path.values());
        let direct = euler_maruyama(&m, 64, RngStream::new(11, 5), &SchemeOptions::default()).unwrap();
        assert_eq!(direct, em);
        assert!(fm_scheme(&m, 5, &drv, &SchemeOptions::default()).is_err());
    }

    #[test]
    fn fm_identity_map() {
        let m = ModelSpec::new(CoefficientSet::parse("0", "0", "1").unwrap(), LevyTriplet::compensated_poisson(), 0.5).unwrap();
        let drv = driving_noise(&m, 32, RngStream::new(1, 1), None).unwrap();
        let out = fm_scheme(&m, 4, &drv, &SchemeOptions::default()).unwrap();
        for (a, b) in out.path.values().iter().zip(drv.h.path.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_euler() {
        let m = ModelSpec::brownian("-x", "0", 0.1).unwrap();
        let opts = SchemeOptions { start: 1.0, ..SchemeOptions::default() };
        let p = euler_maruyama(&m, 1000, RngStream::new(0, 0), &opts).unwrap();
        assert!((p.terminal() - (-1f64).exp()).abs() < 1e-3);
        let z = euler_maruyama(&m, 10, RngStream::new(0, 0), &SchemeOptions::default()).unwrap();
        assert_eq!(z.terminal(), 0.0);
    }

    #[test]
    fn overflow_guard() {
        let m = ModelSpec::brownian("x^3 + 1", "0", 0.1).unwrap();
        let opts = SchemeOptions { start: 10.0, ..SchemeOptions::default() };
        assert!(matches!(euler_maruyama(&m, 10, RngStream::new(0, 0), &opts), Err(Error::Overflow { .. })));
    }

    #[test]
    fn zn_examples() {
        let constant = SamplePath { path: Path::new(vec![3.0; 9]).unwrap(), step: true, horizon: 4.0, jumps: None };
        let z = discretize_zn(&constant, 4).unwrap();
        assert_eq!(&z.path.values()[..2], &[0.0, 0.0]);
        assert!(z.path.values()[2..].iter().all(|v| *v == 0.75));
        let one = SamplePath { path: Path::new(vec![0.0, 0.4, 1.7]).unwrap(), step: true, horizon: 1.0, jumps: None };
        let z = discretize_zn(&one, 1).unwrap();
        assert_eq!(z.path.values(), &[0.0, 0.0, 1.7]);
        assert!(discretize_zn(&one, 2).is_err());
    }
}

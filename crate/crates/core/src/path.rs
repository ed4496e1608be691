//! Piecewise-linear paths on the uniform grid `t_k = k/n` and step functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A path on `[0, 1]` sampled at `t_k = k/n`, linear between nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathDoc", into = "PathDoc")]
pub struct Path {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PathDoc {
    n: usize,
    values: Vec<f64>,
    start: f64,
}

impl TryFrom<PathDoc> for Path {
    type Error = Error;

    fn try_from(d: PathDoc) -> Result<Self> {
        if d.values.len() != d.n + 1 {
            return Err(Error::GridMismatch(format!("n = {} but {} values given", d.n, d.values.len())));
        }
        if d.values.first() != Some(&d.start) {
            return Err(Error::InvalidInput(format!("start {} differs from values[0]", d.start)));
        }
        Path::new(d.values)
    }
}

impl From<Path> for PathDoc {
    fn from(p: Path) -> Self {
        PathDoc { n: p.n(), start: p.start(), values: p.values }
    }
}

impl Path {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput("a path needs n >= 1 cells".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("path value {k} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..=n).map(|k| f(k as f64 / n as f64)).collect())
    }

    /// Straight line from `x0` to `x1`.
    pub fn linear(n: usize, x0: f64, x1: f64) -> Result<Self> {
        Self::from_fn(n, |t| x0 + (x1 - x0) * t)
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn end(&self) -> f64 {
        self.values[self.n()]
    }

    /// Slope on cell `k`, `n·(v_{k+1} − v_k)`.
    pub fn slope(&self, k: usize) -> f64 {
        self.n() as f64 * (self.values[k + 1] - self.values[k])
    }

    /// Value at the midpoint of cell `k`.
    pub fn midpoint(&self, k: usize) -> f64 {
        0.5 * (self.values[k] + self.values[k + 1])
    }

    /// Linear interpolation at `t ∈ [0, 1]`.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.n();
        let s = (t.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let w = s - k as f64;
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// Sup-norm distance to another path on the same grid.
    pub fn sup_distance(&self, other: &Path) -> Result<f64> {
        if self.n() != other.n() {
            return Err(Error::GridMismatch(format!("grids of {} and {} cells", self.n(), other.n())));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// One plateau `c·1_{[s, t)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPiece {
    pub c: f64,
    pub s: f64,
    pub t: f64,
}

/// `α(t) = Σ c_j 1_{[s_j, t_j)}(t)` with disjoint ordered plateaus in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepFunction {
    pieces: Vec<StepPiece>,
}

impl StepFunction {
    pub fn new(pieces: Vec<StepPiece>) -> Result<Self> {
        let mut prev_t = 0.0;
        for (j, p) in pieces.iter().enumerate() {
            if !(p.c.is_finite() && p.s >= prev_t && p.s < p.t && p.t <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "step piece {j} must satisfy previous t <= s < t <= 1 with finite height, got {p:?}"
                )));
            }
            prev_t = p.t;
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[StepPiece] {
        &self.pieces
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.pieces.iter().filter(|p| p.s <= t && t < p.t).map(|p| p.c).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_and_midpoints() {
        let p = Path::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert_eq!(p.n(), 2);
        assert_eq!(p.slope(0), 1.0);
        assert_eq!(p.slope(1), 0.0);
        assert_eq!(p.midpoint(0), 0.25);
        assert_eq!(p.at(0.25), 0.25);
        assert_eq!(p.at(1.0), 0.5);
    }

    #[test]
    fn json_round_trip() {
        let p = Path::linear(4, 0.0, 2.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"n\":4"));
        let q: Path = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<Path>(r#"{"n":2,"values":[0,1],"start":0}"#).is_err());
        assert!(serde_json::from_str::<Path>(r#"{"n":1,"values":[0,1],"start":1}"#).is_err());
    }

    #[test]
    fn step_function_ordering() {
        let a = StepFunction::new(vec![StepPiece { c: 1.0, s: 0.1, t: 0.3 }, StepPiece { c: -2.0, s: 0.3, t: 1.0 }]).unwrap();
        assert_eq!(a.eval(0.2), 1.0);
        assert_eq!(a.eval(0.3), -2.0);
        assert_eq!(a.eval(1.0), 0.0);
        assert!(StepFunction::new(vec![StepPiece { c: 1.0, s: 0.5, t: 0.4 }]).is_err());
        assert!(StepFunction::new(vec![StepPiece { c: 1.0, s: 0.1, t: 0.5 }, StepPiece { c: 1.0, s: 0.4, t: 0.6 }]).is_err());
    }
}

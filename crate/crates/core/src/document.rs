//! Model documents: JSON in, validated [`ModelSpec`] out.
//!
//! ```json
//! {
//!   "triplet": {"a": 0, "sigma2": 1, "nu": {"kind": "tempered_stable", "params": {"alpha": 1.5, "m": 2}}},
//!   "coefficients": {"b": "-x", "sigma": "1", "eta": "0"},
//!   "epsilon": 0.1,
//!   "n": 100,
//!   "state_interval": [-10, 10]
//! }
//! ```
//!
//! `nu.kind` is one of `none`, `atoms` (`params.atoms = [{size, mass}]`),
//! `tempered_stable` (`alpha`, `m`) or `exponential_tail` (`alpha`).
//! Optional `sigma_min` overrides the diffusion floor.

use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::levy::{Atom, LevyMeasure, LevyTriplet};
use crate::model::{CoefficientSet, ModelSpec};

/// Number of sample points in the Lipschitz check.
const LIPSCHITZ_SAMPLES: usize = 2001;
const DEFAULT_INTERVAL: [f64; 2] = [-10.0, 10.0];

fn schema(pointer: &str, message: impl Into<String>) -> Error {
    Error::Schema { pointer: pointer.to_string(), message: message.into() }
}

fn object<'a>(v: &'a Value, pointer: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| schema(pointer, "expected an object"))
}

fn only_keys(m: &Map<String, Value>, pointer: &str, allowed: &[&str]) -> Result<()> {
    match m.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(&format!("{pointer}/{k}"), format!("unknown key; expected one of {allowed:?}"))),
        None => Ok(()),
    }
}

fn number(m: &Map<String, Value>, pointer: &str, key: &str) -> Result<f64> {
    let p = format!("{pointer}/{key}");
    let v = m.get(key).ok_or_else(|| schema(&p, "missing required number"))?;
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| schema(&p, "expected a finite number"))
}

fn opt_number(m: &Map<String, Value>, pointer: &str, key: &str) -> Result<Option<f64>> {
    if m.contains_key(key) {
        number(m, pointer, key).map(Some)
    } else {
        Ok(None)
    }
}

fn expression(m: &Map<String, Value>, pointer: &str, key: &str) -> Result<Expr> {
    let p = format!("{pointer}/{key}");
    let src = match m.get(key) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(x)) => x.to_string(),
        Some(_) => return Err(schema(&p, "expected an expression string")),
        None => return Err(schema(&p, "missing required expression")),
    };
    Expr::parse(&src).map_err(|e| match e {
        Error::Parse { offset, message } => Error::Parse { offset, message: format!("{p}: {message}") },
        other => other,
    })
}

fn measure(v: &Value, pointer: &str) -> Result<LevyMeasure> {
    let m = object(v, pointer)?;
    only_keys(m, pointer, &["kind", "params"])?;
    let kind = m.get("kind").and_then(Value::as_str).ok_or_else(|| schema(&format!("{pointer}/kind"), "expected a string"))?;
    let pp = format!("{pointer}/params");
    let empty = Map::new();
    let params = match m.get("params") {
        Some(p) => object(p, &pp)?,
        None => &empty,
    };
    let wrap = |e: Error| match e {
        Error::InvalidMeasure(msg) | Error::InvalidInput(msg) => schema(&pp, msg),
        other => other,
    };
    match kind {
        "none" => {
            only_keys(params, &pp, &[])?;
            Ok(LevyMeasure::zero())
        }
        "atoms" => {
            only_keys(params, &pp, &["atoms"])?;
            let ap = format!("{pp}/atoms");
            let list = params.get("atoms").and_then(Value::as_array).ok_or_else(|| schema(&ap, "expected an array"))?;
            let atoms = list
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let p = format!("{ap}/{i}");
                    let o = object(a, &p)?;
                    only_keys(o, &p, &["size", "mass"])?;
                    Ok(Atom { size: number(o, &p, "size")?, mass: number(o, &p, "mass")? })
                })
                .collect::<Result<Vec<_>>>()?;
            LevyMeasure::atoms(atoms).map_err(wrap)
        }
        "tempered_stable" => {
            only_keys(params, &pp, &["alpha", "m"])?;
            LevyMeasure::tempered_stable(number(params, &pp, "alpha")?, number(params, &pp, "m")?).map_err(wrap)
        }
        "exponential_tail" => {
            only_keys(params, &pp, &["alpha"])?;
            LevyMeasure::exponential_tail(number(params, &pp, "alpha")?).map_err(wrap)
        }
        other => Err(schema(&format!("{pointer}/kind"), format!("unknown measure kind '{other}'"))),
    }
}

/// Samples `f` on the interval; returns the largest difference quotient and
/// the sup of `|f|`, or the first non-finite sample.
fn sample_bounds(f: &Expr, lo: f64, hi: f64) -> std::result::Result<(f64, f64), f64> {
    let h = (hi - lo) / (LIPSCHITZ_SAMPLES - 1) as f64;
    let mut prev: Option<f64> = None;
    let (mut lip, mut sup) = (0.0_f64, 0.0_f64);
    for i in 0..LIPSCHITZ_SAMPLES {
        let x = lo + h * i as f64;
        let y = f.eval(x);
        if !y.is_finite() {
            return Err(x);
        }
        if let Some(p) = prev {
            lip = lip.max((y - p).abs() / h);
        }
        sup = sup.max(y.abs());
        prev = Some(y);
    }
    Ok((lip, sup))
}

/// Validates a model document held in memory.
pub fn parse_model_value(doc: &Value) -> Result<ModelSpec> {
    let root = object(doc, "")?;
    only_keys(root, "", &["triplet", "coefficients", "epsilon", "n", "state_interval", "sigma_min"])?;

    let tv = root.get("triplet").ok_or_else(|| schema("/triplet", "missing required object"))?;
    let t = object(tv, "/triplet")?;
    only_keys(t, "/triplet", &["a", "sigma2", "nu"])?;
    let a = opt_number(t, "/triplet", "a")?.unwrap_or(0.0);
    let sigma2 = opt_number(t, "/triplet", "sigma2")?.unwrap_or(0.0);
    let nu = match t.get("nu") {
        Some(v) => measure(v, "/triplet/nu")?,
        None => LevyMeasure::zero(),
    };
    let triplet = LevyTriplet::new(a, sigma2, nu).map_err(|e| match e {
        Error::InvalidMeasure(m) | Error::InvalidInput(m) => schema("/triplet", m),
        other => other,
    })?;

    let cv = root.get("coefficients").ok_or_else(|| schema("/coefficients", "missing required object"))?;
    let c = object(cv, "/coefficients")?;
    only_keys(c, "/coefficients", &["b", "sigma", "eta"])?;
    let exprs = [expression(c, "/coefficients", "b")?, expression(c, "/coefficients", "sigma")?, expression(c, "/coefficients", "eta")?];

    let epsilon = number(root, "", "epsilon")?;
    if !(epsilon > 0.0) {
        return Err(schema("/epsilon", "must be positive"));
    }
    let n = match root.get("n") {
        None => 100,
        Some(v) => v.as_u64().filter(|n| *n >= 1).ok_or_else(|| schema("/n", "expected a positive integer"))? as usize,
    };
    let [lo, hi] = match root.get("state_interval") {
        None => DEFAULT_INTERVAL,
        Some(v) => {
            let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| schema("/state_interval", "expected [lo, hi]"))?;
            let lo = arr[0].as_f64().ok_or_else(|| schema("/state_interval/0", "expected a number"))?;
            let hi = arr[1].as_f64().ok_or_else(|| schema("/state_interval/1", "expected a number"))?;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(schema("/state_interval", "need finite lo < hi"));
            }
            [lo, hi]
        }
    };

    let (mut lip, mut sup) = (0.0_f64, 0.0_f64);
    for (name, e) in ["b", "sigma", "eta"].iter().zip(&exprs) {
        match sample_bounds(e, lo, hi) {
            Ok((l, s)) => {
                lip = lip.max(l);
                sup = sup.max(s);
            }
            Err(x) => {
                return Err(Error::InvalidInput(format!("coefficient {name} = '{}' is not finite at x = {x}", e.source())));
            }
        }
    }

    let [b, s, e] = exprs;
    let mut coeffs = CoefficientSet::new(Arc::new(b), Arc::new(s), Arc::new(e));
    if let Some(m) = opt_number(root, "", "sigma_min")? {
        if !(m > 0.0) {
            return Err(schema("/sigma_min", "must be positive"));
        }
        coeffs = coeffs.with_sigma_min(m);
    }
    coeffs.lipschitz = Some(lip);
    coeffs.sup_bound = Some(sup);
    Ok(ModelSpec::new(coeffs, triplet, epsilon)?.with_grid(n))
}

pub fn parse_model_str(text: &str) -> Result<ModelSpec> {
    let v: Value = serde_json::from_str(text)?;
    parse_model_value(&v)
}

pub fn parse_model(path: &std::path::Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_model_str(&text)
}

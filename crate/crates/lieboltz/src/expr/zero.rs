//! Identity-zero testing: symbolic normalization first, then seeded numeric
//! sampling on a guarded domain.

use super::eval::{eval_with, splitmix64, unit_f64, HashOracle};
use super::{Expr, Node};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Relation attached to a guard constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    NonZero,
    EqZero,
    EqOne,
}

/// Per-symbol sampling intervals plus constraint predicates. Every free
/// symbol of an expression under test must carry an interval.
#[derive(Debug, Clone, Default)]
pub struct DomainGuard {
    pub intervals: BTreeMap<String, (f64, f64)>,
    pub constraints: Vec<(Expr, Relation)>,
}

#[derive(Debug, Clone, Error)]
pub enum GuardError {
    #[error("no sampling interval for symbol `{0}`")]
    MissingInterval(String),
    #[error("guard too tight: {0}")]
    TooTight(String),
    #[error("unsatisfiable constraint: {0}")]
    Unsatisfiable(String),
}

const ANGLE_SYMBOLS: [&str; 4] = ["theta", "phi", "epsilon", "theta1"];

impl DomainGuard {
    pub fn new() -> DomainGuard {
        DomainGuard::default()
    }

    /// Default guard: angles in (0.1, pi-0.1), everything else in
    /// [0.5, 2.5] (positive, away from zero denominators and log branch
    /// points).
    pub fn standard(symbols: impl IntoIterator<Item = String>) -> DomainGuard {
        let mut g = DomainGuard::new();
        for s in symbols {
            g.insert_default(&s);
        }
        g
    }

    pub fn insert_default(&mut self, symbol: &str) {
        let range = if ANGLE_SYMBOLS.contains(&symbol) {
            (0.1, std::f64::consts::PI - 0.1)
        } else {
            (0.5, 2.5)
        };
        self.intervals.entry(symbol.to_string()).or_insert(range);
    }

    pub fn with_interval(mut self, symbol: &str, lo: f64, hi: f64) -> DomainGuard {
        assert!(lo < hi, "empty interval for {symbol}");
        self.intervals.insert(symbol.to_string(), (lo, hi));
        self
    }

    pub fn with_constraint(mut self, expr: Expr, rel: Relation) -> DomainGuard {
        self.constraints.push((expr, rel));
        self
    }

    /// Draws one assignment satisfying the constraints.
    pub fn sample(&self, seed: u64) -> Result<BTreeMap<String, f64>, GuardError> {
        let mut state = seed ^ 0xd1b5_4a32_d192_ed03;
        'attempt: for _ in 0..60 {
            let mut env = BTreeMap::new();
            let mut fixed_zero: Vec<&Expr> = Vec::new();
            for (expr, rel) in &self.constraints {
                if *rel == Relation::EqZero {
                    fixed_zero.push(expr);
                }
            }
            for (sym, (lo, hi)) in &self.intervals {
                env.insert(sym.clone(), lo + (hi - lo) * unit_f64(&mut state));
            }
            for expr in fixed_zero {
                let Some(sym) = expr.as_symbol() else {
                    return Err(GuardError::Unsatisfiable(format!(
                        "only plain parameters can be pinned to zero, got `{expr}`"
                    )));
                };
                env.insert(sym.to_string(), 0.0);
            }
            for (expr, rel) in &self.constraints {
                match rel {
                    Relation::EqZero => {}
                    Relation::NonZero => {
                        let v = eval_plain(expr, &env)?;
                        if v.abs() < 0.1 {
                            continue 'attempt;
                        }
                    }
                    Relation::EqOne => {
                        let v = eval_plain(expr, &env)?;
                        if v <= 1e-6 {
                            continue 'attempt;
                        }
                        let scale = 1.0 / v.sqrt();
                        for sym in expr.symbols() {
                            if let Some(slot) = env.get_mut(&sym) {
                                *slot *= scale;
                            }
                        }
                        let check = eval_plain(expr, &env)?;
                        if (check - 1.0).abs() > 1e-9 {
                            return Err(GuardError::Unsatisfiable(format!(
                                "constraint `{expr} = 1` is not homogeneous of degree 2"
                            )));
                        }
                    }
                }
            }
            return Ok(env);
        }
        Err(GuardError::TooTight(
            "could not satisfy guard constraints in 60 attempts".to_string(),
        ))
    }
}

fn eval_plain(expr: &Expr, env: &BTreeMap<String, f64>) -> Result<f64, GuardError> {
    eval_with(expr, env, &HashOracle { seed: 0 })
        .map_err(|e| GuardError::Unsatisfiable(format!("constraint evaluation failed: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroStatus {
    SymbolicZero,
    NumericZero,
    Nonzero,
}

/// Numeric witness for a nonzero verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub assignment: BTreeMap<String, f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroVerdict {
    pub status: ZeroStatus,
    pub witness: Option<Witness>,
    pub samples_used: u32,
}

impl ZeroVerdict {
    pub fn passed(&self) -> bool {
        self.status != ZeroStatus::Nonzero
    }

    fn symbolic() -> ZeroVerdict {
        ZeroVerdict {
            status: ZeroStatus::SymbolicZero,
            witness: None,
            samples_used: 0,
        }
    }
}

const SAMPLE_POINTS: u32 = 32;
const RETRIES_PER_POINT: u32 = 25;
const REL_TOL: f64 = 1e-8;

impl Expr {
    /// Two-stage zero test. Symbolic: the rational-function normal form is
    /// literally zero. Numeric: at 32 seeded guarded points, with independent
    /// random abstract-atom values per point, every residual stays below
    /// `1e-8 * (1 + scale)` where scale is the largest top-level summand.
    pub fn is_identically_zero(
        &self,
        guard: &DomainGuard,
        seed: u64,
    ) -> Result<ZeroVerdict, GuardError> {
        let target = match self.try_simplify() {
            Ok(s) => {
                if s.is_zero() {
                    return Ok(ZeroVerdict::symbolic());
                }
                s
            }
            Err(_) => self.clone(),
        };
        for sym in target.symbols() {
            if !guard.intervals.contains_key(&sym) {
                return Err(GuardError::MissingInterval(sym));
            }
        }
        let mut successes = 0u32;
        for point in 0..SAMPLE_POINTS {
            let mut sampled = None;
            for attempt in 0..RETRIES_PER_POINT {
                let mut h = seed;
                h = h
                    .wrapping_mul(0x9e3779b97f4a7c15)
                    .wrapping_add((point as u64) << 32 | attempt as u64);
                let point_seed = splitmix64(&mut h);
                let env = guard.sample(point_seed)?;
                let oracle = HashOracle { seed: point_seed };
                match eval_summands(&target, &env, &oracle) {
                    Ok((residual, scale)) => {
                        sampled = Some((env, residual, scale));
                        break;
                    }
                    Err(_) => continue,
                }
            }
            let Some((env, residual, scale)) = sampled else {
                continue;
            };
            successes += 1;
            let tol = REL_TOL * (1.0 + scale);
            if !(residual.abs() <= tol) {
                return Ok(ZeroVerdict {
                    status: ZeroStatus::Nonzero,
                    witness: Some(Witness {
                        assignment: env,
                        residual,
                    }),
                    samples_used: successes,
                });
            }
        }
        if successes == 0 {
            return Err(GuardError::TooTight(
                "all sample points hit domain errors".to_string(),
            ));
        }
        Ok(ZeroVerdict {
            status: ZeroStatus::NumericZero,
            witness: None,
            samples_used: successes,
        })
    }
}

/// Evaluates term by term when the root is a sum, returning
/// (residual, max |summand|).
fn eval_summands(
    e: &Expr,
    env: &BTreeMap<String, f64>,
    oracle: &HashOracle,
) -> Result<(f64, f64), super::EvalError> {
    match e.node() {
        Node::Sum(terms) => {
            let mut total = 0.0;
            let mut scale: f64 = 0.0;
            for t in terms {
                let v = eval_with(t, env, oracle)?;
                if !v.is_finite() {
                    return Err(super::EvalError {
                        message: "non-finite summand".to_string(),
                        at: t.clone(),
                    });
                }
                total += v;
                scale = scale.max(v.abs());
            }
            Ok((total, scale))
        }
        _ => {
            let v = eval_with(e, env, oracle)?;
            if !v.is_finite() {
                return Err(super::EvalError {
                    message: "non-finite value".to_string(),
                    at: e.clone(),
                });
            }
            Ok((v, v.abs()))
        }
    }
}

//! IEEE double evaluation with domain-error reporting.

use super::{Builtin, Expr, Node};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
#[error("{message} in `{at}`")]
pub struct EvalError {
    pub message: String,
    pub at: Expr,
}

fn err(message: impl Into<String>, at: &Expr) -> EvalError {
    EvalError {
        message: message.into(),
        at: at.clone(),
    }
}

pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform f64 in [0, 1) from a splitmix stream.
pub(crate) fn unit_f64(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

fn hash_str(state: &mut u64, s: &str) {
    for b in s.as_bytes() {
        *state = state.wrapping_mul(0x100000001b3) ^ (*b as u64);
    }
}

/// Supplies values for abstract-function atoms during numeric evaluation.
pub trait AbstractOracle: Sync {
    fn value(&self, name: &str, arity: u32, slots: &[u32], args: &[f64]) -> f64;
}

/// Deterministic pseudo-random value per distinct atom identity
/// (name, slots, evaluated arguments). Suited to zero testing: a residual
/// that vanishes for arbitrary atom values vanishes for these.
pub struct HashOracle {
    pub seed: u64,
}

impl AbstractOracle for HashOracle {
    fn value(&self, name: &str, arity: u32, slots: &[u32], args: &[f64]) -> f64 {
        let mut h = self.seed ^ 0x51c3_8a1d_77f2_6b09;
        hash_str(&mut h, name);
        h ^= (arity as u64).wrapping_mul(0x9e37_79b9);
        for s in slots {
            h = h.wrapping_mul(0x100000001b3) ^ (*s as u64 + 17);
        }
        for a in args {
            h = h.wrapping_mul(0x100000001b3) ^ a.to_bits();
        }
        let mut state = h;
        let u = unit_f64(&mut state);
        let sign = if splitmix64(&mut state) & 1 == 0 { 1.0 } else { -1.0 };
        sign * (0.5 + 1.5 * u)
    }
}

/// A concrete smooth realization of each abstract function, with partials
/// that are the true derivatives. Each `Psi(x1..xk)` is modelled as
/// `a * prod_s (8/5 + sin(b_s x_s + c_s))`, whose mixed partials have closed
/// form. Finite-difference checks work across abstract atoms under this
/// oracle.
pub struct SmoothOracle {
    pub seed: u64,
}

impl SmoothOracle {
    fn coeffs(&self, name: &str, arity: u32, slot: u32) -> (f64, f64) {
        let mut h = self.seed ^ 0x7b6c_e591_03ad_42d7;
        hash_str(&mut h, name);
        h ^= (arity as u64) << 32 | slot as u64;
        let mut state = h;
        let b = 0.6 + 0.8 * unit_f64(&mut state);
        let c = std::f64::consts::TAU * unit_f64(&mut state);
        (b, c)
    }

    fn amplitude(&self, name: &str, arity: u32) -> f64 {
        let mut h = self.seed ^ 0x2f4a_91bb_6d03_58ce;
        hash_str(&mut h, name);
        h ^= arity as u64;
        let mut state = h;
        0.5 + 1.5 * unit_f64(&mut state)
    }
}

impl AbstractOracle for SmoothOracle {
    fn value(&self, name: &str, arity: u32, slots: &[u32], args: &[f64]) -> f64 {
        let mut mult = vec![0u32; args.len()];
        for s in slots {
            mult[(*s - 1) as usize] += 1;
        }
        let mut out = self.amplitude(name, arity);
        for (i, x) in args.iter().enumerate() {
            let (b, c) = self.coeffs(name, arity, i as u32 + 1);
            let phase = b * x + c;
            let m = mult[i];
            let factor = if m == 0 {
                1.6 + phase.sin()
            } else {
                let deriv = match (m - 1) % 4 {
                    0 => phase.cos(),
                    1 => -phase.sin(),
                    2 => -phase.cos(),
                    _ => phase.sin(),
                };
                b.powi(m as i32) * deriv
            };
            out *= factor;
        }
        out
    }
}

const DIV_EPS: f64 = 1e-12;

pub(crate) fn eval_with(
    e: &Expr,
    env: &BTreeMap<String, f64>,
    oracle: &dyn AbstractOracle,
) -> Result<f64, EvalError> {
    match e.node() {
        Node::Rational(r) => {
            let n: f64 = num_traits::ToPrimitive::to_f64(r.numer()).unwrap_or(f64::NAN);
            let d: f64 = num_traits::ToPrimitive::to_f64(r.denom()).unwrap_or(f64::NAN);
            Ok(n / d)
        }
        Node::Symbol(s) => env
            .get(s)
            .copied()
            .ok_or_else(|| err(format!("unbound symbol `{s}`"), e)),
        Node::Sum(terms) => {
            let mut acc = 0.0;
            for t in terms {
                acc += eval_with(t, env, oracle)?;
            }
            Ok(acc)
        }
        Node::Product(factors) => {
            let mut acc = 1.0;
            for f in factors {
                acc *= eval_with(f, env, oracle)?;
            }
            Ok(acc)
        }
        Node::Power(base, exponent) => {
            let b = eval_with(base, env, oracle)?;
            let k = exponent
                .as_integer()
                .ok_or_else(|| err("non-integer exponent", e))?;
            if k < 0 && b.abs() < DIV_EPS {
                return Err(err("division by zero", e));
            }
            Ok(b.powi(k as i32))
        }
        Node::Call(builtin, args) => {
            let x = eval_with(&args[0], env, oracle)?;
            match builtin {
                Builtin::Sin => Ok(x.sin()),
                Builtin::Cos => Ok(x.cos()),
                Builtin::Tan => Ok(x.tan()),
                Builtin::Cot => Ok(x.cos() / x.sin()),
                Builtin::Arctan => Ok(x.atan()),
                Builtin::Exp => Ok(x.exp()),
                Builtin::Ln => {
                    if x <= 0.0 {
                        Err(err(format!("ln of non-positive value {x}"), e))
                    } else {
                        Ok(x.ln())
                    }
                }
                Builtin::Sqrt => {
                    if x < 0.0 {
                        Err(err(format!("sqrt of negative value {x}"), e))
                    } else {
                        Ok(x.sqrt())
                    }
                }
                Builtin::Abs => Ok(x.abs()),
            }
        }
        Node::Abstract { name, arity, args } => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_with(a, env, oracle)?);
            }
            Ok(oracle.value(name, *arity, &[], &vals))
        }
        Node::Partial {
            name,
            arity,
            slots,
            args,
        } => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_with(a, env, oracle)?);
            }
            Ok(oracle.value(name, *arity, slots, &vals))
        }
    }
}

impl Expr {
    /// Evaluates with every free symbol bound by `env`; abstract atoms are
    /// supplied by the oracle.
    pub fn eval_numeric(
        &self,
        env: &BTreeMap<String, f64>,
        oracle: &dyn AbstractOracle,
    ) -> Result<f64, EvalError> {
        eval_with(self, env, oracle)
    }

    /// Convenience wrapper with the default seeded hash oracle.
    pub fn eval_seeded(
        &self,
        env: &BTreeMap<String, f64>,
        seed: u64,
    ) -> Result<f64, EvalError> {
        eval_with(self, env, &HashOracle { seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn quotient_eval() {
        let e = Expr::div(Expr::symbol("x"), Expr::symbol("t"));
        let v = e.eval_seeded(&env(&[("x", 2.0), ("t", 4.0)]), 0).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn pythagoras_eval() {
        let th = Expr::symbol("theta");
        let e = Expr::add(vec![
            Expr::pow(Expr::call(Builtin::Sin, vec![th.clone()]), Expr::int(2)),
            Expr::pow(Expr::call(Builtin::Cos, vec![th]), Expr::int(2)),
        ]);
        let v = e.eval_seeded(&env(&[("theta", 0.37)]), 0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ln_domain_error_points_at_subexpression() {
        let e = Expr::call(Builtin::Ln, vec![Expr::symbol("t")]);
        let res = e.eval_seeded(&env(&[("t", -1.0)]), 0);
        let msg = res.unwrap_err().to_string();
        assert!(msg.contains("ln"));
    }

    #[test]
    fn oracle_deterministic_per_identity() {
        let oracle = HashOracle { seed: 42 };
        let a = oracle.value("Psi", 3, &[], &[1.0, 2.0, 3.0]);
        let b = oracle.value("Psi", 3, &[], &[1.0, 2.0, 3.0]);
        assert_eq!(a, b);
        let c = oracle.value("Psi", 3, &[1], &[1.0, 2.0, 3.0]);
        assert_ne!(a, c);
    }

    #[test]
    fn smooth_oracle_matches_finite_differences() {
        let oracle = SmoothOracle { seed: 7 };
        let x = [0.4, 1.3];
        let h = 1e-6;
        let f = |a: f64| oracle.value("Omega", 2, &[], &[a, x[1]]);
        let fd = (f(x[0] + h) - f(x[0] - h)) / (2.0 * h);
        let an = oracle.value("Omega", 2, &[1], &x);
        assert!((fd - an).abs() < 1e-8 * (1.0 + an.abs()));
    }
}

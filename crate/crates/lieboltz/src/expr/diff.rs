//! Exact partial differentiation.

use super::poly::{poly_to_expr, to_frac};
use super::{Builtin, Expr, Node};

/// Derivative of arctan(u): writes `u = P/Q` and returns
/// `(Q dP - P dQ)/(P^2 + Q^2)`, which keeps the denominator in the reduced
/// form `P^2 + Q^2` instead of the nested `(1 + u^2)` fraction whose common
/// factors resist cancellation.
fn arctan_derivative(u: &Expr, var: &str) -> Expr {
    if let Ok(fr) = to_frac(u) {
        let p = poly_to_expr(&fr.num);
        let q = poly_to_expr(&fr.den);
        let dp = p.differentiate(var);
        let dq = q.differentiate(var);
        let num = Expr::sub(
            Expr::mul(vec![q.clone(), dp]),
            Expr::mul(vec![p.clone(), dq]),
        );
        let den = Expr::add(vec![
            Expr::pow(p, Expr::int(2)),
            Expr::pow(q, Expr::int(2)),
        ]);
        return Expr::div(num, den);
    }
    let du = u.differentiate(var);
    let denom = Expr::add(vec![Expr::one(), Expr::pow(u.clone(), Expr::int(2))]);
    Expr::div(du, denom)
}

impl Expr {
    /// Exact partial derivative with respect to the named symbol.
    ///
    /// Abstract functions follow the chain rule: `Psi(a1..ak)` differentiates
    /// to the sum of slot partials times the argument derivatives, and slot
    /// partials accumulate further slots for higher-order derivatives.
    pub fn differentiate(&self, var: &str) -> Expr {
        match self.node() {
            Node::Rational(_) => Expr::zero(),
            Node::Symbol(s) => {
                if s == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(terms) => Expr::add(terms.iter().map(|t| t.differentiate(var)).collect()),
            Node::Product(factors) => {
                let mut pieces = Vec::with_capacity(factors.len());
                for (i, fi) in factors.iter().enumerate() {
                    let d = fi.differentiate(var);
                    if d.is_zero() {
                        continue;
                    }
                    let mut rest: Vec<Expr> = Vec::with_capacity(factors.len());
                    rest.push(d);
                    for (j, fj) in factors.iter().enumerate() {
                        if j != i {
                            rest.push(fj.clone());
                        }
                    }
                    pieces.push(Expr::mul(rest));
                }
                Expr::add(pieces)
            }
            Node::Power(base, exponent) => {
                // Construction guarantees integer exponents here.
                let k = exponent
                    .as_integer()
                    .expect("non-integer exponent survived construction");
                let db = base.differentiate(var);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::mul(vec![
                    Expr::int(k),
                    Expr::pow(base.clone(), Expr::int(k - 1)),
                    db,
                ])
            }
            Node::Call(builtin, args) => {
                let u = &args[0];
                let du = u.differentiate(var);
                if du.is_zero() {
                    return Expr::zero();
                }
                let outer = match builtin {
                    Builtin::Sin => Expr::call(Builtin::Cos, vec![u.clone()]),
                    Builtin::Cos => Expr::neg(Expr::call(Builtin::Sin, vec![u.clone()])),
                    Builtin::Tan | Builtin::Cot => {
                        unreachable!("tan/cot are rewritten on construction")
                    }
                    Builtin::Arctan => return arctan_derivative(u, var),
                    Builtin::Exp => self.clone(),
                    Builtin::Ln => Expr::pow(u.clone(), Expr::int(-1)),
                    Builtin::Sqrt => Expr::div(
                        Expr::ratio(1, 2),
                        Expr::call(Builtin::Sqrt, vec![u.clone()]),
                    ),
                    Builtin::Abs => Expr::div(self.clone(), u.clone()),
                };
                Expr::mul(vec![outer, du])
            }
            Node::Abstract { name, arity, args } => {
                let mut pieces = Vec::new();
                for (i, a) in args.iter().enumerate() {
                    let da = a.differentiate(var);
                    if da.is_zero() {
                        continue;
                    }
                    let part = Expr::partial(name, *arity, vec![i as u32 + 1], args.clone());
                    pieces.push(Expr::mul(vec![part, da]));
                }
                Expr::add(pieces)
            }
            Node::Partial {
                name,
                arity,
                slots,
                args,
            } => {
                let mut pieces = Vec::new();
                for (i, a) in args.iter().enumerate() {
                    let da = a.differentiate(var);
                    if da.is_zero() {
                        continue;
                    }
                    let mut next = slots.clone();
                    next.push(i as u32 + 1);
                    let part = Expr::partial(name, *arity, next, args.clone());
                    pieces.push(Expr::mul(vec![part, da]));
                }
                Expr::add(pieces)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_quotient() {
        // d/dt (x/t) = -x/t^2
        let x = Expr::symbol("x");
        let t = Expr::symbol("t");
        let e = Expr::div(x.clone(), t.clone());
        let d = e.differentiate("t");
        let expected = Expr::neg(Expr::div(x, Expr::pow(t, Expr::int(2))));
        assert_eq!(d.simplify(), expected.simplify());
    }

    #[test]
    fn derivative_of_sqrt_drops_free_vars() {
        // d/du sqrt(v^2 + w^2) = 0
        let v = Expr::symbol("v");
        let w = Expr::symbol("w");
        let e = Expr::sqrt(Expr::add(vec![
            Expr::pow(v, Expr::int(2)),
            Expr::pow(w, Expr::int(2)),
        ]));
        assert!(e.differentiate("u").is_zero());
    }

    #[test]
    fn abstract_chain_rule() {
        // d/dt Psi2(x/t, f*t) = Psi2_1 * (-x/t^2) + Psi2_2 * f
        let x = Expr::symbol("x");
        let t = Expr::symbol("t");
        let f = Expr::symbol("f");
        let args = vec![Expr::div(x.clone(), t.clone()), Expr::mul(vec![f.clone(), t.clone()])];
        let psi = Expr::abstract_fn("Psi", 2, args.clone());
        let d = psi.differentiate("t");
        let expected = Expr::add(vec![
            Expr::mul(vec![
                Expr::partial("Psi", 2, vec![1], args.clone()),
                Expr::neg(Expr::div(x, Expr::pow(t, Expr::int(2)))),
            ]),
            Expr::mul(vec![Expr::partial("Psi", 2, vec![2], args), f]),
        ]);
        assert_eq!(Expr::sub(d, expected).simplify(), Expr::zero());
    }

    #[test]
    fn mixed_partials_share_a_normal_form() {
        let x = Expr::symbol("x");
        let y = Expr::symbol("y");
        let psi = Expr::abstract_fn("Psi", 2, vec![x.clone(), Expr::mul(vec![x, y])]);
        let dxy = psi.differentiate("x").differentiate("y");
        let dyx = psi.differentiate("y").differentiate("x");
        assert_eq!(Expr::sub(dxy, dyx).simplify(), Expr::zero());
    }
}

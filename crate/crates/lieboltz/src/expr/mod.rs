//! Symbolic expression core.
//!
//! Expressions are immutable, hash-consed trees over exact rationals, named
//! symbols, elementary functions, and abstract functions `PsiK`/`OmegaK` of a
//! fixed arity. Construction goes through smart constructors that keep a light
//! canonical form (flattened sums/products, merged rational coefficients,
//! angle-sum expansion of `sin`/`cos`, collapsed `exp` products). The heavy
//! rational-function normal form lives in [`poly`] and is reached through
//! [`simplify`].
//!
//! [`simplify`]: Expr::simplify

mod diff;
mod eval;
mod parse;
mod poly;
mod zero;

pub use eval::{AbstractOracle, EvalError, HashOracle, SmoothOracle};
pub use parse::ParseError;
pub use poly::SimplifyError;
pub(crate) use eval::{splitmix64, unit_f64};
pub(crate) use poly::affine_coefficients;
pub use poly::{mul_counters, profile_counters};
pub use zero::{DomainGuard, GuardError, Relation, Witness, ZeroStatus, ZeroVerdict};

/// Uniform draw in [0, 1) from a splitmix stream; exposed for in-crate
/// sampling helpers and tests.
pub(crate) fn unit_sample(state: &mut u64) -> f64 {
    unit_f64(state)
}

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

/// Elementary function heads understood by the engine.
///
/// `tan` and `cot` are accepted by the parser but rewritten to `sin`/`cos`
/// ratios on construction, so they never appear in canonical trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    Sin,
    Cos,
    Tan,
    Cot,
    Arctan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Tan => "tan",
            Builtin::Cot => "cot",
            Builtin::Arctan => "arctan",
            Builtin::Exp => "exp",
            Builtin::Ln => "ln",
            Builtin::Sqrt => "sqrt",
            Builtin::Abs => "abs",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        Some(match s {
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "tan" => Builtin::Tan,
            "cot" => Builtin::Cot,
            "arctan" => Builtin::Arctan,
            "exp" => Builtin::Exp,
            "ln" => Builtin::Ln,
            "sqrt" => Builtin::Sqrt,
            "abs" => Builtin::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    Rational(BigRational),
    Symbol(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, Expr),
    Call(Builtin, Vec<Expr>),
    Abstract {
        name: String,
        arity: u32,
        args: Vec<Expr>,
    },
    /// Partial derivative of an abstract function w.r.t. the listed slots
    /// (1-based, sorted, repeats allowed for higher order).
    Partial {
        name: String,
        arity: u32,
        slots: Vec<u32>,
        args: Vec<Expr>,
    },
}

/// A hash-consed immutable expression.
///
/// Equality and hashing are by identity, which coincides with structural
/// equality because every node is interned.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}
impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (Arc::as_ptr(&self.0) as usize).hash(state);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn interner() -> &'static Mutex<HashMap<Node, Expr>> {
    static INTERN: OnceLock<Mutex<HashMap<Node, Expr>>> = OnceLock::new();
    INTERN.get_or_init(|| Mutex::new(HashMap::new()))
}

fn intern(node: Node) -> Expr {
    let mut table = interner().lock().unwrap();
    if let Some(e) = table.get(&node) {
        return e.clone();
    }
    let e = Expr(Arc::new(node.clone()));
    table.insert(node, e.clone());
    e
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn rat_pow(base: &BigRational, exp: i64) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = if exp < 0 {
        BigRational::one() / base.clone()
    } else {
        base.clone()
    };
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    acc
}

impl Expr {
    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        intern(Node::Rational(big(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        assert!(den != 0, "zero denominator");
        intern(Node::Rational(BigRational::new(
            BigInt::from(num),
            BigInt::from(den),
        )))
    }

    pub fn rational(r: BigRational) -> Expr {
        intern(Node::Rational(r))
    }

    pub fn symbol(name: &str) -> Expr {
        intern(Node::Symbol(name.to_string()))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Rational(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Rational(r) if r.is_one())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_rational()
            .filter(|r| r.is_integer())
            .and_then(|r| r.numer().to_i64())
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self.node() {
            Node::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// Sum of terms in light canonical form.
    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut constant = BigRational::zero();
        // core product (coefficient stripped) -> coefficient
        let mut buckets: BTreeMap<Vec<Expr>, BigRational> = BTreeMap::new();
        let mut stack = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.node() {
                Node::Sum(children) => stack.extend(children.iter().rev().cloned()),
                Node::Rational(r) => constant += r,
                _ => {
                    let (coeff, core) = split_coefficient(&t);
                    *buckets.entry(core).or_insert_with(BigRational::zero) += coeff;
                }
            }
        }
        let mut out: Vec<Expr> = Vec::new();
        for (core, coeff) in buckets {
            if coeff.is_zero() {
                continue;
            }
            out.push(assemble_term(coeff, core));
        }
        if !constant.is_zero() {
            out.push(Expr::rational(constant));
        }
        out.sort_by(Expr::cmp_structural);
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => intern(Node::Sum(out)),
        }
    }

    /// Product of factors in light canonical form.
    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut coeff = BigRational::one();
        // base -> accumulated exponent terms
        let mut powers: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
        let mut exp_args: Vec<Expr> = Vec::new();
        let mut stack = factors;
        stack.reverse();
        while let Some(fct) = stack.pop() {
            match fct.node() {
                Node::Product(children) => stack.extend(children.iter().rev().cloned()),
                Node::Rational(r) => {
                    if r.is_zero() {
                        return Expr::zero();
                    }
                    coeff *= r;
                }
                Node::Call(Builtin::Exp, args) => exp_args.push(args[0].clone()),
                Node::Power(base, exponent) => powers
                    .entry(base.clone())
                    .or_default()
                    .push(exponent.clone()),
                _ => powers.entry(fct.clone()).or_default().push(Expr::one()),
            }
        }
        let mut rebuilt: Vec<Expr> = Vec::new();
        // True when a merge step produced a factor that can interact further
        // (a product from a sqrt collapse, a second exp, a plain rational).
        let mut rerun = false;
        let mut exp_count = 0usize;
        if !exp_args.is_empty() {
            let merged = Expr::call(Builtin::Exp, vec![Expr::add(exp_args)]);
            if !merged.is_one() {
                match merged.node() {
                    Node::Call(Builtin::Exp, _) => exp_count += 1,
                    _ => rerun = true,
                }
                rebuilt.push(merged);
            }
        }
        for (base, exps) in powers {
            let p = Expr::pow(base, Expr::add(exps));
            if p.is_one() {
                continue;
            }
            if p.is_zero() {
                return Expr::zero();
            }
            match p.node() {
                Node::Rational(r) => coeff *= r,
                Node::Product(_) => {
                    rerun = true;
                    rebuilt.push(p);
                }
                Node::Call(Builtin::Exp, _) => {
                    exp_count += 1;
                    rebuilt.push(p);
                }
                _ => rebuilt.push(p),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if rerun || exp_count > 1 {
            rebuilt.push(Expr::rational(coeff));
            return Expr::mul(rebuilt);
        }
        rebuilt.sort_by(Expr::cmp_structural);
        if rebuilt.is_empty() {
            return Expr::rational(coeff);
        }
        if !coeff.is_one() {
            rebuilt.insert(0, Expr::rational(coeff));
        }
        match rebuilt.len() {
            1 => rebuilt.pop().unwrap(),
            _ => intern(Node::Product(rebuilt)),
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent.is_one() {
            return base;
        }
        if base.is_one() {
            return Expr::one();
        }
        if let Some(k) = exponent.as_integer() {
            if base.is_zero() {
                if k > 0 {
                    return Expr::zero();
                }
                // Literal division by zero: keep the node, simplify reports it.
                return intern(Node::Power(base, exponent));
            }
            if let Some(r) = base.as_rational() {
                if k.unsigned_abs() <= 256 {
                    return Expr::rational(rat_pow(r, k));
                }
            }
            match base.node() {
                Node::Product(children) => {
                    let parts = children
                        .iter()
                        .map(|c| Expr::pow(c.clone(), Expr::int(k)))
                        .collect();
                    return Expr::mul(parts);
                }
                Node::Power(inner, inner_exp) => {
                    if inner_exp.as_integer().is_some() {
                        let combined = Expr::mul(vec![inner_exp.clone(), Expr::int(k)]);
                        return Expr::pow(inner.clone(), combined);
                    }
                }
                Node::Call(Builtin::Exp, args) => {
                    return Expr::call(
                        Builtin::Exp,
                        vec![Expr::mul(vec![Expr::int(k), args[0].clone()])],
                    );
                }
                Node::Call(Builtin::Sqrt, args) => {
                    let radicand = args[0].clone();
                    let half = k.div_euclid(2);
                    let rem = k.rem_euclid(2);
                    let mut parts = vec![Expr::pow(radicand.clone(), Expr::int(half))];
                    if rem == 1 {
                        parts.push(Expr::call(Builtin::Sqrt, vec![radicand]));
                    }
                    return Expr::mul(parts);
                }
                _ => {}
            }
            return intern(Node::Power(base, exponent));
        }
        // Non-integer rational exponent p/2 routes through sqrt.
        if let Some(r) = exponent.as_rational() {
            if *r.denom() == BigInt::from(2) {
                let p = r.numer().to_i64().expect("huge exponent");
                let root = Expr::call(Builtin::Sqrt, vec![base]);
                return Expr::pow(root, Expr::int(p));
            }
        }
        // Symbolic exponent: canonicalize as exp(e*ln b).
        if let Node::Call(Builtin::Exp, args) = base.node() {
            return Expr::call(Builtin::Exp, vec![Expr::mul(vec![exponent, args[0].clone()])]);
        }
        let ln = Expr::call(Builtin::Ln, vec![base]);
        Expr::call(Builtin::Exp, vec![Expr::mul(vec![exponent, ln])])
    }

    pub fn call(builtin: Builtin, args: Vec<Expr>) -> Expr {
        assert_eq!(args.len(), 1, "builtin {} takes one argument", builtin.name());
        let arg = args.into_iter().next().unwrap();
        match builtin {
            Builtin::Tan => {
                let s = Expr::call(Builtin::Sin, vec![arg.clone()]);
                let c = Expr::call(Builtin::Cos, vec![arg]);
                return Expr::div(s, c);
            }
            Builtin::Cot => {
                let s = Expr::call(Builtin::Sin, vec![arg.clone()]);
                let c = Expr::call(Builtin::Cos, vec![arg]);
                return Expr::div(c, s);
            }
            Builtin::Sin | Builtin::Cos => return trig_construct(builtin, arg),
            Builtin::Arctan => {
                if arg.is_zero() {
                    return Expr::zero();
                }
                let (neg, inner) = strip_sign(&arg);
                if neg {
                    return Expr::neg(intern(Node::Call(Builtin::Arctan, vec![inner])));
                }
            }
            Builtin::Exp => {
                if arg.is_zero() {
                    return Expr::one();
                }
                if let Node::Call(Builtin::Ln, inner) = arg.node() {
                    return inner[0].clone();
                }
            }
            Builtin::Ln => {
                if arg.is_one() {
                    return Expr::zero();
                }
                if let Node::Call(Builtin::Exp, inner) = arg.node() {
                    return inner[0].clone();
                }
            }
            Builtin::Sqrt => {
                if arg.is_zero() || arg.is_one() {
                    return arg;
                }
                // Perfect squares collapse; sound because the numeric guard
                // keeps every non-angle symbol positive.
                if let Some(root) = perfect_square_root(&arg) {
                    return root;
                }
            }
            Builtin::Abs => {
                if let Some(r) = arg.as_rational() {
                    return Expr::rational(r.abs());
                }
            }
        }
        intern(Node::Call(builtin, vec![arg]))
    }

    pub fn abstract_fn(name: &str, arity: u32, args: Vec<Expr>) -> Expr {
        assert_eq!(args.len() as u32, arity, "arity mismatch for {name}");
        intern(Node::Abstract {
            name: name.to_string(),
            arity,
            args,
        })
    }

    pub fn partial(name: &str, arity: u32, mut slots: Vec<u32>, args: Vec<Expr>) -> Expr {
        assert_eq!(args.len() as u32, arity, "arity mismatch for {name}");
        assert!(
            slots.iter().all(|s| *s >= 1 && *s <= arity),
            "slot out of range for {name}"
        );
        slots.sort_unstable();
        intern(Node::Partial {
            name: name.to_string(),
            arity,
            slots,
            args,
        })
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::mul(vec![Expr::int(-1), e])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(vec![a, Expr::neg(b)])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::mul(vec![a, Expr::pow(b, Expr::int(-1))])
    }

    pub fn sqrt(e: Expr) -> Expr {
        Expr::call(Builtin::Sqrt, vec![e])
    }

    /// Free symbols of the expression, including those inside abstract
    /// function arguments.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Rational(_) => {}
            Node::Symbol(s) => {
                out.insert(s.clone());
            }
            Node::Sum(children) | Node::Product(children) | Node::Call(_, children) => {
                for c in children {
                    c.collect_symbols(out);
                }
            }
            Node::Power(b, e) => {
                b.collect_symbols(out);
                e.collect_symbols(out);
            }
            Node::Abstract { args, .. } | Node::Partial { args, .. } => {
                for a in args {
                    a.collect_symbols(out);
                }
            }
        }
    }

    /// Simultaneous substitution of symbols, followed by light
    /// canonicalization through the constructors.
    pub fn substitute(&self, bindings: &BTreeMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Rational(_) => self.clone(),
            Node::Symbol(s) => bindings.get(s).cloned().unwrap_or_else(|| self.clone()),
            Node::Sum(children) => {
                Expr::add(children.iter().map(|c| c.substitute(bindings)).collect())
            }
            Node::Product(children) => {
                Expr::mul(children.iter().map(|c| c.substitute(bindings)).collect())
            }
            Node::Power(b, e) => Expr::pow(b.substitute(bindings), e.substitute(bindings)),
            Node::Call(builtin, args) => Expr::call(
                *builtin,
                args.iter().map(|a| a.substitute(bindings)).collect(),
            ),
            Node::Abstract { name, arity, args } => Expr::abstract_fn(
                name,
                *arity,
                args.iter().map(|a| a.substitute(bindings)).collect(),
            ),
            Node::Partial {
                name,
                arity,
                slots,
                args,
            } => Expr::partial(
                name,
                *arity,
                slots.clone(),
                args.iter().map(|a| a.substitute(bindings)).collect(),
            ),
        }
    }

    /// Structural total order, stable across runs.
    pub fn cmp_structural(&self, other: &Expr) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        fn rank(n: &Node) -> u8 {
            match n {
                Node::Rational(_) => 0,
                Node::Symbol(_) => 1,
                Node::Power(..) => 2,
                Node::Call(..) => 3,
                Node::Abstract { .. } => 4,
                Node::Partial { .. } => 5,
                Node::Product(_) => 6,
                Node::Sum(_) => 7,
            }
        }
        let (a, b) = (self.node(), other.node());
        rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
            (Node::Rational(x), Node::Rational(y)) => x.cmp(y),
            (Node::Symbol(x), Node::Symbol(y)) => x.cmp(y),
            (Node::Power(bx, ex), Node::Power(by, ey)) => bx
                .cmp_structural(by)
                .then_with(|| ex.cmp_structural(ey)),
            (Node::Call(fx, ax), Node::Call(fy, ay)) => {
                fx.cmp(fy).then_with(|| cmp_lists(ax, ay))
            }
            (
                Node::Abstract {
                    name: nx,
                    arity: rx,
                    args: ax,
                },
                Node::Abstract {
                    name: ny,
                    arity: ry,
                    args: ay,
                },
            ) => nx.cmp(ny).then(rx.cmp(ry)).then_with(|| cmp_lists(ax, ay)),
            (
                Node::Partial {
                    name: nx,
                    arity: rx,
                    slots: sx,
                    args: ax,
                },
                Node::Partial {
                    name: ny,
                    arity: ry,
                    slots: sy,
                    args: ay,
                },
            ) => nx
                .cmp(ny)
                .then(rx.cmp(ry))
                .then_with(|| sx.cmp(sy))
                .then_with(|| cmp_lists(ax, ay)),
            (Node::Product(x), Node::Product(y)) | (Node::Sum(x), Node::Sum(y)) => {
                cmp_lists(x, y)
            }
            _ => unreachable!("rank already discriminated"),
        })
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_structural(other)
    }
}

fn cmp_lists(a: &[Expr], b: &[Expr]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let c = x.cmp_structural(y);
        if c != Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

/// Splits a term into (rational coefficient, remaining sorted factors).
fn split_coefficient(t: &Expr) -> (BigRational, Vec<Expr>) {
    match t.node() {
        Node::Rational(r) => (r.clone(), Vec::new()),
        Node::Product(children) => {
            let mut coeff = BigRational::one();
            let mut rest = Vec::new();
            for c in children {
                match c.node() {
                    Node::Rational(r) => coeff *= r,
                    _ => rest.push(c.clone()),
                }
            }
            (coeff, rest)
        }
        _ => (BigRational::one(), vec![t.clone()]),
    }
}

fn assemble_term(coeff: BigRational, core: Vec<Expr>) -> Expr {
    let mut parts = core;
    if !coeff.is_one() {
        parts.insert(0, Expr::rational(coeff));
    }
    match parts.len() {
        0 => Expr::one(),
        1 => parts.pop().unwrap(),
        _ => intern(Node::Product(parts)),
    }
}

/// Detects a term of the form (negative rational) * rest and returns
/// (true, |term|) when so.
fn strip_sign(e: &Expr) -> (bool, Expr) {
    let (coeff, core) = split_coefficient(e);
    if coeff.is_negative() {
        (true, assemble_term(-coeff, core))
    } else {
        (false, e.clone())
    }
}

/// Square root of a perfect-square monomial term, e.g. `4*r^2*t^4 -> 2*r*t^2`.
/// None when the expression is not structurally a perfect square.
fn perfect_square_root(e: &Expr) -> Option<Expr> {
    fn rational_root(r: &BigRational) -> Option<Expr> {
        if r.is_negative() {
            return None;
        }
        let n = r.numer().sqrt();
        let d = r.denom().sqrt();
        if (&n * &n, &d * &d) == (r.numer().clone(), r.denom().clone()) {
            Some(Expr::rational(BigRational::new(n, d)))
        } else {
            None
        }
    }
    match e.node() {
        Node::Rational(r) => rational_root(r),
        Node::Power(base, exponent) => {
            let k = exponent.as_integer()?;
            if k >= 2 && k % 2 == 0 {
                Some(Expr::pow(base.clone(), Expr::int(k / 2)))
            } else {
                None
            }
        }
        Node::Product(factors) => {
            let mut roots = Vec::with_capacity(factors.len());
            for fct in factors {
                roots.push(perfect_square_root(fct)?);
            }
            Some(Expr::mul(roots))
        }
        _ => None,
    }
}

/// sin/cos constructor with angle-sum expansion and parity normalization.
fn trig_construct(builtin: Builtin, arg: Expr) -> Expr {
    if arg.is_zero() {
        return match builtin {
            Builtin::Sin => Expr::zero(),
            Builtin::Cos => Expr::one(),
            _ => unreachable!(),
        };
    }
    if let Node::Sum(terms) = arg.node() {
        let first = terms[0].clone();
        let rest = Expr::add(terms[1..].to_vec());
        let (sa, ca) = (
            trig_construct(Builtin::Sin, first.clone()),
            trig_construct(Builtin::Cos, first),
        );
        let (sb, cb) = (
            trig_construct(Builtin::Sin, rest.clone()),
            trig_construct(Builtin::Cos, rest),
        );
        return match builtin {
            Builtin::Sin => Expr::add(vec![
                Expr::mul(vec![sa, cb.clone()]),
                Expr::mul(vec![ca, sb.clone()]),
            ]),
            Builtin::Cos => Expr::sub(Expr::mul(vec![ca, cb]), Expr::mul(vec![sa, sb])),
            _ => unreachable!(),
        };
    }
    let (neg, inner) = strip_sign(&arg);
    if neg {
        return match builtin {
            Builtin::Sin => Expr::neg(intern(Node::Call(Builtin::Sin, vec![inner]))),
            Builtin::Cos => intern(Node::Call(Builtin::Cos, vec![inner])),
            _ => unreachable!(),
        };
    }
    intern(Node::Call(builtin, vec![arg]))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_expr(self))
    }
}

fn needs_parens_in_product(e: &Expr) -> bool {
    matches!(e.node(), Node::Sum(_)) || matches!(e.node(), Node::Rational(r) if r.is_negative())
}

fn print_expr(e: &Expr) -> String {
    match e.node() {
        Node::Rational(r) => {
            if r.is_integer() {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        }
        Node::Symbol(s) => s.clone(),
        Node::Sum(terms) => {
            let mut out = String::new();
            for (i, t) in terms.iter().enumerate() {
                let (neg, mag) = strip_sign(t);
                if i == 0 {
                    if neg {
                        out.push('-');
                    }
                } else if neg {
                    out.push_str(" - ");
                } else {
                    out.push_str(" + ");
                }
                out.push_str(&print_expr(&mag));
            }
            out
        }
        Node::Product(factors) => {
            let mut pieces = Vec::new();
            for fct in factors {
                let s = print_expr(fct);
                if needs_parens_in_product(fct) {
                    pieces.push(format!("({s})"));
                } else {
                    pieces.push(s);
                }
            }
            pieces.join("*")
        }
        Node::Power(base, exponent) => {
            let bs = print_expr(base);
            let base_str = match base.node() {
                Node::Symbol(_) | Node::Call(..) | Node::Abstract { .. } | Node::Partial { .. } => {
                    bs
                }
                Node::Rational(r) if !r.is_negative() && r.is_integer() => bs,
                _ => format!("({bs})"),
            };
            match exponent.as_integer() {
                Some(k) => format!("{base_str}^{k}"),
                None => format!("{base_str}^({})", print_expr(exponent)),
            }
        }
        Node::Call(builtin, args) => format!("{}({})", builtin.name(), print_expr(&args[0])),
        Node::Abstract { name, arity, args } => {
            let inner: Vec<String> = args.iter().map(print_expr).collect();
            format!("{name}{arity}({})", inner.join(", "))
        }
        Node::Partial {
            name,
            arity,
            slots,
            args,
        } => {
            let inner: Vec<String> = args.iter().map(print_expr).collect();
            let tags: Vec<String> = slots.iter().map(|s| s.to_string()).collect();
            format!("{name}{arity}_{}({})", tags.join("_"), inner.join(", "))
        }
    }
}

//! Rational-function normal form over transcendental atoms.
//!
//! Every expression is flattened into a fraction of multivariate polynomials
//! whose variables ("atoms") are symbols, elementary-function calls with
//! canonical arguments, and abstract-function applications. Three relation
//! families are rewritten into normal form:
//!
//! * `cos(u)^2 -> 1 - sin(u)^2` (cosine degree <= 1 per monomial),
//! * `sqrt(A)^2 -> A` and `abs(A)^2 -> A^2`,
//! * `exp(a)*exp(b) -> exp(a+b)` (at most one exp atom per monomial).
//!
//! An expression is identically zero as a polynomial identity in these atoms
//! exactly when its normalized numerator is the zero polynomial.

use super::{Builtin, Expr, Node};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SimplifyError {
    #[error("division by zero while normalizing {0}")]
    DivisionByZero(String),
}

pub type Monomial = BTreeMap<Expr, u32>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(r: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !r.is_zero() {
            p.terms.insert(Monomial::new(), r);
        }
        p
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn atom(e: Expr) -> Poly {
        let mut m = Monomial::new();
        m.insert(e, 1);
        let mut p = Poly::zero();
        p.terms.insert(m, BigRational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.len() == 1 && self.terms.keys().next().unwrap().is_empty()
            || self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_empty() {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let t0 = std::time::Instant::now();
        let out = self.mul_inner(other);
        MUL_NANOS.fetch_add(t0.elapsed().as_nanos() as u64, std::sync::atomic::Ordering::Relaxed);
        MUL_CALLS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        MUL_TERMS.fetch_add((self.terms.len() * other.terms.len()) as u64, std::sync::atomic::Ordering::Relaxed);
        out
    }

    fn mul_inner(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (atom, k) in mb {
                    *m.entry(atom.clone()).or_insert(0) += k;
                }
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, r: &BigRational) -> Poly {
        if r.is_zero() {
            return Poly::zero();
        }
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c * r);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn atoms(&self) -> Vec<Expr> {
        let mut set = std::collections::BTreeSet::new();
        for m in self.terms.keys() {
            for a in m.keys() {
                set.insert(a.clone());
            }
        }
        set.into_iter().collect()
    }

    fn degree_in(&self, atom: &Expr) -> u32 {
        self.terms
            .keys()
            .map(|m| m.get(atom).copied().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Leading coefficient under the monomial order.
    fn leading_coeff(&self) -> Option<BigRational> {
        self.terms.iter().next_back().map(|(_, c)| c.clone())
    }
}

#[derive(Debug, Clone)]
pub struct Frac {
    pub num: Poly,
    pub den: Poly,
}

impl Frac {
    pub fn zero() -> Frac {
        Frac {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn constant(r: BigRational) -> Frac {
        Frac {
            num: Poly::constant(r),
            den: Poly::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

/// Rewrites `cos^2 -> 1 - sin^2` until every monomial has cosine degree
/// <= 1. Single pass, local to each term.
fn trig_reduce(p: &Poly) -> Poly {
    // fast path: nothing to do
    let needs = p.terms.keys().any(|m| {
        m.iter().any(|(atom, k)| {
            *k >= 2 && matches!(atom.node(), Node::Call(Builtin::Cos, _))
        })
    });
    if !needs {
        return p.clone();
    }
    let mut out = Poly::zero();
    for (mono, coeff) in &p.terms {
        let mut kept = Monomial::new();
        let mut expansion = Poly::one();
        for (atom, k) in mono {
            match atom.node() {
                Node::Call(Builtin::Cos, args) if *k >= 2 => {
                    let sin_atom = Expr::call(Builtin::Sin, vec![args[0].clone()]);
                    let one_minus = Poly::one().sub(&Poly::atom(sin_atom).pow(2));
                    expansion = expansion.mul(&one_minus.pow(*k / 2));
                    if *k % 2 == 1 {
                        kept.insert(atom.clone(), 1);
                    }
                }
                _ => {
                    kept.insert(atom.clone(), *k);
                }
            }
        }
        let mut base = Poly::zero();
        base.terms.insert(kept, coeff.clone());
        out = out.add(&base.mul(&expansion));
    }
    out
}

/// Fixes reducible atom powers inside monomials. Returns the equivalent
/// fraction and whether anything changed. Terms that need no fraction
/// arithmetic (the overwhelming majority) accumulate into a common
/// numerator directly.
fn mono_fix_once(p: &Poly) -> Result<(Frac, bool), SimplifyError> {
    // fast path: scan for any reducible atom power
    let needs = p.terms.keys().any(|m| {
        let mut exp_seen = 0u32;
        m.iter().any(|(atom, k)| match atom.node() {
            Node::Call(Builtin::Sqrt, _) | Node::Call(Builtin::Abs, _) => *k >= 2,
            Node::Call(Builtin::Exp, _) => {
                exp_seen += 1;
                *k >= 2 || exp_seen >= 2
            }
            _ => false,
        })
    });
    if !needs {
        return Ok((
            Frac {
                num: p.clone(),
                den: Poly::one(),
            },
            false,
        ));
    }
    let mut changed = false;
    let mut clean = Poly::zero();
    let mut fractional: Vec<(Poly, Poly)> = Vec::new();
    for (mono, coeff) in &p.terms {
        let mut kept = Monomial::new();
        let mut extra_num = Poly::one();
        let mut extra_den = Poly::one();
        let mut exp_pieces: Vec<Expr> = Vec::new();
        for (atom, k) in mono {
            match atom.node() {
                Node::Call(Builtin::Sqrt, args) if *k >= 2 => {
                    changed = true;
                    let inner = to_frac(&args[0])?;
                    let half = (*k / 2) as i64;
                    let powed = frac_pow(&inner, half)?;
                    extra_num = extra_num.mul(&powed.num);
                    extra_den = extra_den.mul(&powed.den);
                    if *k % 2 == 1 {
                        kept.insert(atom.clone(), 1);
                    }
                }
                Node::Call(Builtin::Abs, args) if *k >= 2 => {
                    changed = true;
                    let inner = to_frac(&args[0])?;
                    let even = (*k - *k % 2) as i64;
                    let powed = frac_pow(&inner, even)?;
                    extra_num = extra_num.mul(&powed.num);
                    extra_den = extra_den.mul(&powed.den);
                    if *k % 2 == 1 {
                        kept.insert(atom.clone(), 1);
                    }
                }
                Node::Call(Builtin::Exp, args) => {
                    exp_pieces.push(if *k == 1 {
                        args[0].clone()
                    } else {
                        Expr::mul(vec![Expr::int(*k as i64), args[0].clone()])
                    });
                    if *k > 1 {
                        changed = true;
                    }
                }
                _ => {
                    kept.insert(atom.clone(), *k);
                }
            }
        }
        match exp_pieces.len() {
            0 => {}
            1 => {
                let rebuilt = Expr::call(Builtin::Exp, vec![exp_pieces.pop().unwrap()]);
                match rebuilt.node() {
                    Node::Call(Builtin::Exp, _) => {
                        *kept.entry(rebuilt).or_insert(0) += 1;
                    }
                    _ => {
                        changed = true;
                        let fr = to_frac(&rebuilt)?;
                        extra_num = extra_num.mul(&fr.num);
                        extra_den = extra_den.mul(&fr.den);
                    }
                }
            }
            _ => {
                changed = true;
                let merged = Expr::call(Builtin::Exp, vec![Expr::add(exp_pieces)]);
                match merged.node() {
                    Node::Call(Builtin::Exp, _) => {
                        *kept.entry(merged).or_insert(0) += 1;
                    }
                    _ => {
                        let fr = to_frac(&merged)?;
                        extra_num = extra_num.mul(&fr.num);
                        extra_den = extra_den.mul(&fr.den);
                    }
                }
            }
        }
        let mut term = Poly::zero();
        term.add_term(kept, coeff.clone());
        let piece = term.mul(&extra_num);
        if extra_den.as_constant().map(|c| c.is_one()) == Some(true) {
            clean = clean.add(&piece);
        } else {
            fractional.push((piece, extra_den));
        }
    }
    // group fractional pieces by common denominator, then fold
    let mut acc = Frac {
        num: clean,
        den: Poly::one(),
    };
    let mut grouped: BTreeMap<Vec<(Monomial, BigRational)>, Poly> = BTreeMap::new();
    for (num, den) in fractional {
        let key: Vec<(Monomial, BigRational)> =
            den.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        grouped
            .entry(key)
            .and_modify(|acc_num| *acc_num = acc_num.add(&num))
            .or_insert(num);
    }
    for (den_key, num) in grouped {
        let mut den = Poly::zero();
        for (m, c) in den_key {
            den.terms.insert(m, c);
        }
        let merged_num = acc.num.mul(&den).add(&num.mul(&acc.den));
        let merged_den = acc.den.mul(&den);
        acc = Frac {
            num: merged_num,
            den: merged_den,
        };
    }
    Ok((acc, changed))
}

fn fix_frac(mut fr: Frac) -> Result<Frac, SimplifyError> {
    for _ in 0..64 {
        let (nf, nc) = mono_fix_once(&fr.num)?;
        let (df, dc) = mono_fix_once(&fr.den)?;
        fr = Frac {
            num: nf.num.mul(&df.den),
            den: nf.den.mul(&df.num),
        };
        if !nc && !dc {
            fr.num = trig_reduce(&fr.num);
            fr.den = trig_reduce(&fr.den);
            return Ok(fr);
        }
    }
    panic!("atom normalization did not converge");
}

/// Divides out common per-atom monomial content of num and den.
fn cancel_monomial_content(num: &mut Poly, den: &mut Poly) {
    if num.is_zero() || den.is_zero() {
        return;
    }
    let mut common: Option<Monomial> = None;
    for m in num.terms.keys().chain(den.terms.keys()) {
        common = Some(match common {
            None => m.clone(),
            Some(prev) => {
                let mut g = Monomial::new();
                for (atom, k) in &prev {
                    if let Some(k2) = m.get(atom) {
                        g.insert(atom.clone(), (*k).min(*k2));
                    }
                }
                g
            }
        });
        if common.as_ref().map(|g| g.is_empty()).unwrap_or(false) {
            return;
        }
    }
    let Some(g) = common else { return };
    if g.is_empty() {
        return;
    }
    let strip = |p: &Poly| {
        let mut out = Poly::zero();
        for (m, c) in &p.terms {
            let mut m2 = m.clone();
            for (atom, k) in &g {
                let cur = m2.get(atom).copied().unwrap_or(0);
                if cur == *k {
                    m2.remove(atom);
                } else {
                    m2.insert(atom.clone(), cur - k);
                }
            }
            out.terms.insert(m2, c.clone());
        }
        out
    };
    *num = strip(num);
    *den = strip(den);
}

const GCD_NUM_TERMS: usize = 64;
const GCD_DEN_TERMS: usize = 20;
const GCD_ATOM_BUDGET: usize = 7;

/// Common monomial divisor (per-atom minimum exponent) of two polynomials.
fn common_monomial(a: &Poly, b: &Poly) -> Poly {
    let mut common: Option<Monomial> = None;
    for m in a.terms.keys().chain(b.terms.keys()) {
        common = Some(match common {
            None => m.clone(),
            Some(prev) => {
                let mut g = Monomial::new();
                for (atom, k) in &prev {
                    if let Some(k2) = m.get(atom) {
                        g.insert(atom.clone(), (*k).min(*k2));
                    }
                }
                g
            }
        });
        if common.as_ref().map(|g| g.is_empty()).unwrap_or(false) {
            break;
        }
    }
    let mut p = Poly::zero();
    p.terms
        .insert(common.unwrap_or_default(), BigRational::one());
    p
}

/// Multivariate polynomial gcd: primitive PRS for small inputs, falling back
/// to the common-monomial divisor when the inputs exceed the budget. Only
/// used to cancel fractions, so an undersized result is harmless.
fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    // single-term inputs need no recursion
    if a.terms.len() == 1 || b.terms.len() == 1 {
        return common_monomial(a, b);
    }
    let atoms = a.atoms();
    let shared: Vec<Expr> = atoms
        .into_iter()
        .filter(|at| b.degree_in(at) > 0 && a.degree_in(at) > 0)
        .collect();
    if shared.is_empty() {
        return Poly::one();
    }
    let (small, large) = if a.terms.len() <= b.terms.len() {
        (a, b)
    } else {
        (b, a)
    };
    if small.terms.len() > GCD_DEN_TERMS
        || large.terms.len() > GCD_NUM_TERMS
        || shared.len() > GCD_ATOM_BUDGET
    {
        return common_monomial(a, b);
    }
    let main = shared.last().cloned().unwrap();
    let ua = to_univariate(a, &main);
    let ub = to_univariate(b, &main);
    let (ca, pa) = primitive_parts(&ua);
    let (cb, pb) = primitive_parts(&ub);
    let cont_gcd = poly_gcd(&ca, &cb);
    let pp_gcd = univariate_gcd(pa, pb, &main);
    cont_gcd.mul(&pp_gcd)
}

fn to_univariate(p: &Poly, main: &Expr) -> Vec<Poly> {
    let deg = p.degree_in(main) as usize;
    let mut out = vec![Poly::zero(); deg + 1];
    for (m, c) in &p.terms {
        let k = m.get(main).copied().unwrap_or(0) as usize;
        let mut rest = m.clone();
        rest.remove(main);
        out[k].add_term(rest, c.clone());
    }
    out
}

fn from_univariate(coeffs: &[Poly], main: &Expr) -> Poly {
    let mut out = Poly::zero();
    for (k, c) in coeffs.iter().enumerate() {
        let mut power = Poly::one();
        if k > 0 {
            let mut m = Monomial::new();
            m.insert(main.clone(), k as u32);
            let mut p = Poly::zero();
            p.terms.insert(m, BigRational::one());
            power = p;
        }
        out = out.add(&c.mul(&power));
    }
    out
}

fn content(coeffs: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in coeffs {
        if !c.is_zero() {
            g = poly_gcd(&g, c);
        }
        if g.is_constant() && !g.is_zero() {
            return Poly::one();
        }
    }
    if g.is_zero() {
        Poly::one()
    } else {
        g
    }
}

fn primitive_parts(coeffs: &[Poly]) -> (Poly, Vec<Poly>) {
    let cont = content(coeffs);
    if cont.is_constant() {
        return (Poly::one(), coeffs.to_vec());
    }
    let mut pp = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        match poly_div_exact(c, &cont) {
            Some(q) => pp.push(q),
            None => return (Poly::one(), coeffs.to_vec()),
        }
    }
    (cont, pp)
}

fn uni_deg(c: &[Poly]) -> Option<usize> {
    c.iter().rposition(|p| !p.is_zero())
}

fn uni_trim(mut c: Vec<Poly>) -> Vec<Poly> {
    while c.len() > 1 && c.last().map(|p| p.is_zero()).unwrap_or(false) {
        c.pop();
    }
    c
}

/// Pseudo-remainder of a by b (b nonzero, deg a >= deg b).
fn pseudo_rem(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let db = uni_deg(b).unwrap();
    let lc_b = b[db].clone();
    let mut r: Vec<Poly> = a.to_vec();
    while let Some(d) = uni_deg(&r) {
        if d < db {
            break;
        }
        let dr = d;
        let lead = r[dr].clone();
        // r = lc_b * r - lead * x^(dr-db) * b
        for p in r.iter_mut() {
            *p = p.mul(&lc_b);
        }
        for (i, bp) in b.iter().enumerate() {
            let idx = dr - db + i;
            r[idx] = r[idx].sub(&lead.mul(bp));
        }
        r = uni_trim(r);
        if r.iter().all(|p| p.is_zero()) {
            break;
        }
        if r.iter().map(|p| p.terms.len()).sum::<usize>() > 4 * GCD_NUM_TERMS {
            // Give up: caller treats a failed PRS as gcd 1.
            return vec![Poly::one()];
        }
    }
    r
}

fn univariate_gcd(a: Vec<Poly>, b: Vec<Poly>, main: &Expr) -> Poly {
    let (mut x, mut y) = if uni_deg(&a) >= uni_deg(&b) {
        (a, b)
    } else {
        (b, a)
    };
    loop {
        let Some(dy) = uni_deg(&y) else {
            // y == 0
            let (_, pp) = primitive_parts(&x);
            return from_univariate(&pp, main);
        };
        if dy == 0 {
            return Poly::one();
        }
        let r = pseudo_rem(&x, &y);
        let r = uni_trim(r);
        let r_zero = r.iter().all(|p| p.is_zero());
        x = y;
        y = if r_zero {
            vec![Poly::zero()]
        } else {
            let (_, pp) = primitive_parts(&r);
            pp
        };
    }
}

/// Exact multivariate division; None when not divisible.
fn poly_div_exact(a: &Poly, b: &Poly) -> Option<Poly> {
    if a.is_zero() {
        return Some(Poly::zero());
    }
    if let Some(c) = b.as_constant() {
        if c.is_zero() {
            return None;
        }
        return Some(a.scale(&(BigRational::one() / c)));
    }
    let mut rem = a.clone();
    let mut quot = Poly::zero();
    let (lead_m, lead_c) = b.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone()))?;
    let mut steps = 0;
    while !rem.is_zero() {
        steps += 1;
        if steps > 10_000 {
            return None;
        }
        let (rm, rc) = rem.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone()))?;
        // divide leading terms
        let mut qm = Monomial::new();
        for (atom, k) in &rm {
            let kb = lead_m.get(atom).copied().unwrap_or(0);
            if *k < kb {
                return None;
            }
            if *k > kb {
                qm.insert(atom.clone(), k - kb);
            }
        }
        for (atom, kb) in &lead_m {
            if rm.get(atom).copied().unwrap_or(0) < *kb {
                return None;
            }
        }
        let qc = rc / &lead_c;
        let mut qterm = Poly::zero();
        qterm.terms.insert(qm, qc);
        quot = quot.add(&qterm);
        rem = rem.sub(&qterm.mul(b));
    }
    Some(quot)
}

static GCD_NANOS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
static FIX_NANOS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
static DIV_NANOS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

pub fn profile_counters() -> (u64, u64, u64) {
    (
        GCD_NANOS.load(std::sync::atomic::Ordering::Relaxed),
        FIX_NANOS.load(std::sync::atomic::Ordering::Relaxed),
        DIV_NANOS.load(std::sync::atomic::Ordering::Relaxed),
    )
}

pub fn mul_counters() -> (u64, u64, u64) {
    (
        MUL_NANOS.load(std::sync::atomic::Ordering::Relaxed),
        MUL_CALLS.load(std::sync::atomic::Ordering::Relaxed),
        MUL_TERMS.load(std::sync::atomic::Ordering::Relaxed),
    )
}

static MUL_NANOS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
static MUL_CALLS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
static MUL_TERMS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

fn normalize(num: Poly, den: Poly, origin: &Expr) -> Result<Frac, SimplifyError> {
    let t_fix = std::time::Instant::now();
    let fr = fix_frac(Frac { num, den })?;
    FIX_NANOS.fetch_add(t_fix.elapsed().as_nanos() as u64, std::sync::atomic::Ordering::Relaxed);
    let mut num = fr.num;
    let mut den = fr.den;
    if den.is_zero() {
        return Err(SimplifyError::DivisionByZero(origin.to_string()));
    }
    if num.is_zero() {
        return Ok(Frac::zero());
    }
    cancel_monomial_content(&mut num, &mut den);
    if !den.is_constant() && !num.is_constant() {
        let t_gcd = std::time::Instant::now();
        let g = poly_gcd(&num, &den);
        GCD_NANOS.fetch_add(t_gcd.elapsed().as_nanos() as u64, std::sync::atomic::Ordering::Relaxed);
        if !g.is_constant() {
            let t_div = std::time::Instant::now();
            if let (Some(n2), Some(d2)) = (poly_div_exact(&num, &g), poly_div_exact(&den, &g)) {
                num = n2;
                den = d2;
            }
            DIV_NANOS.fetch_add(t_div.elapsed().as_nanos() as u64, std::sync::atomic::Ordering::Relaxed);
        }
    }
    // scale so the denominator's leading coefficient is 1
    if let Some(lc) = den.leading_coeff() {
        let inv = BigRational::one() / lc;
        num = num.scale(&inv);
        den = den.scale(&inv);
    }
    Ok(Frac { num, den })
}

fn frac_add(a: &Frac, b: &Frac, origin: &Expr) -> Result<Frac, SimplifyError> {
    normalize(
        a.num.mul(&b.den).add(&b.num.mul(&a.den)),
        a.den.mul(&b.den),
        origin,
    )
}

fn frac_mul(a: &Frac, b: &Frac, origin: &Expr) -> Result<Frac, SimplifyError> {
    normalize(a.num.mul(&b.num), a.den.mul(&b.den), origin)
}

fn frac_inv(a: &Frac, origin: &Expr) -> Result<Frac, SimplifyError> {
    if a.num.is_zero() {
        return Err(SimplifyError::DivisionByZero(origin.to_string()));
    }
    normalize(a.den.clone(), a.num.clone(), origin)
}

fn frac_pow(a: &Frac, k: i64) -> Result<Frac, SimplifyError> {
    let origin = Expr::zero();
    if k == 0 {
        return Ok(Frac::constant(BigRational::one()));
    }
    let base = if k < 0 { frac_inv(a, &origin)? } else { a.clone() };
    let mut acc = Frac::constant(BigRational::one());
    for _ in 0..k.unsigned_abs() {
        acc = frac_mul(&acc, &base, &origin)?;
    }
    Ok(acc)
}

fn frac_cache() -> &'static Mutex<HashMap<Expr, Result<Frac, SimplifyError>>> {
    static CACHE: OnceLock<Mutex<HashMap<Expr, Result<Frac, SimplifyError>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Canonicalizes the arguments of an atom-like node and re-runs the
/// constructor; the result may no longer be an atom.
fn rebuild_atom(e: &Expr) -> Result<Expr, SimplifyError> {
    Ok(match e.node() {
        Node::Call(builtin, args) => {
            Expr::call(*builtin, vec![args[0].try_simplify()?])
        }
        Node::Abstract { name, arity, args } => {
            let simplified: Result<Vec<Expr>, SimplifyError> =
                args.iter().map(|a| a.try_simplify()).collect();
            Expr::abstract_fn(name, *arity, simplified?)
        }
        Node::Partial {
            name,
            arity,
            slots,
            args,
        } => {
            let simplified: Result<Vec<Expr>, SimplifyError> =
                args.iter().map(|a| a.try_simplify()).collect();
            Expr::partial(name, *arity, slots.clone(), simplified?)
        }
        _ => unreachable!("not an atom node"),
    })
}

pub fn to_frac(e: &Expr) -> Result<Frac, SimplifyError> {
    if let Some(hit) = frac_cache().lock().unwrap().get(e) {
        return hit.clone();
    }
    let computed = compute_frac(e);
    frac_cache()
        .lock()
        .unwrap()
        .insert(e.clone(), computed.clone());
    computed
}

fn compute_frac(e: &Expr) -> Result<Frac, SimplifyError> {
    match e.node() {
        Node::Rational(r) => Ok(Frac::constant(r.clone())),
        Node::Symbol(_) => Ok(Frac {
            num: Poly::atom(e.clone()),
            den: Poly::one(),
        }),
        Node::Sum(terms) => {
            // group summands by denominator, then accumulate over a common
            // denominator with divisibility-aware merging; a single
            // normalization finishes the job. This keeps the largely
            // cancelling residual sums from swelling quadratically.
            let mut groups: BTreeMap<Vec<(Monomial, BigRational)>, Poly> = BTreeMap::new();
            for t in terms {
                let ft = to_frac(t)?;
                let key: Vec<(Monomial, BigRational)> = ft
                    .den
                    .terms
                    .iter()
                    .map(|(m, c)| (m.clone(), c.clone()))
                    .collect();
                groups
                    .entry(key)
                    .and_modify(|num| *num = num.add(&ft.num))
                    .or_insert(ft.num);
            }
            let mut pieces: Vec<Frac> = groups
                .into_iter()
                .map(|(den_key, num)| {
                    let mut den = Poly::zero();
                    for (m, c) in den_key {
                        den.terms.insert(m, c);
                    }
                    Frac { num, den }
                })
                .collect();
            // biggest denominator first so smaller ones divide into it
            pieces.sort_by(|a, b| {
                b.den
                    .terms
                    .len()
                    .cmp(&a.den.terms.len())
                    .then_with(|| {
                        let ka: Vec<_> = a.den.terms.keys().cloned().collect();
                        let kb: Vec<_> = b.den.terms.keys().cloned().collect();
                        ka.cmp(&kb)
                    })
            });
            let mut iter = pieces.into_iter();
            let Some(first) = iter.next() else {
                return Ok(Frac::zero());
            };
            let mut acc_num = first.num;
            let mut acc_den = first.den;
            for piece in iter {
                if let Some(q) = poly_div_exact(&acc_den, &piece.den) {
                    acc_num = acc_num.add(&piece.num.mul(&q));
                } else if let Some(q) = poly_div_exact(&piece.den, &acc_den) {
                    acc_num = acc_num.mul(&q).add(&piece.num);
                    acc_den = piece.den;
                } else {
                    acc_num = acc_num
                        .mul(&piece.den)
                        .add(&piece.num.mul(&acc_den));
                    acc_den = acc_den.mul(&piece.den);
                }
            }
            normalize(acc_num, acc_den, e)
        }
        Node::Product(factors) => {
            let mut acc = Frac::constant(BigRational::one());
            for f in factors {
                let ff = to_frac(f)?;
                acc = frac_mul(&acc, &ff, e)?;
            }
            Ok(acc)
        }
        Node::Power(base, exponent) => {
            let k = exponent
                .as_integer()
                .expect("non-integer exponent survived construction");
            let fb = to_frac(base)?;
            if k < 0 && fb.is_zero() {
                return Err(SimplifyError::DivisionByZero(e.to_string()));
            }
            frac_pow(&fb, k)
        }
        Node::Call(..) | Node::Abstract { .. } | Node::Partial { .. } => {
            let rebuilt = rebuild_atom(e)?;
            if rebuilt == *e {
                normalize(Poly::atom(rebuilt), Poly::one(), e)
            } else {
                to_frac(&rebuilt)
            }
        }
    }
}

fn monomial_to_expr(m: &Monomial) -> Vec<Expr> {
    m.iter()
        .map(|(atom, k)| {
            if *k == 1 {
                atom.clone()
            } else {
                Expr::pow(atom.clone(), Expr::int(*k as i64))
            }
        })
        .collect()
}

pub fn poly_to_expr(p: &Poly) -> Expr {
    let mut terms = Vec::with_capacity(p.terms.len());
    for (m, c) in &p.terms {
        let mut factors = monomial_to_expr(m);
        if !c.is_one() || factors.is_empty() {
            factors.insert(0, Expr::rational(c.clone()));
        }
        terms.push(Expr::mul(factors));
    }
    Expr::add(terms)
}

pub fn frac_to_expr(fr: &Frac) -> Expr {
    let num = poly_to_expr(&fr.num);
    if fr.den.is_constant() {
        let c = fr.den.as_constant().unwrap();
        if c.is_one() {
            return num;
        }
        return Expr::mul(vec![
            Expr::rational(BigRational::one() / c),
            num,
        ]);
    }
    let den = poly_to_expr(&fr.den);
    Expr::mul(vec![num, Expr::pow(den, Expr::int(-1))])
}

/// Writes `e` as `constant + sum_i coeff_i * symbols[i]` with exact rational
/// coefficients. None when `e` is not affine in exactly these symbols.
pub(crate) fn affine_coefficients(
    e: &Expr,
    symbols: &[&str],
) -> Option<(BigRational, Vec<BigRational>)> {
    let fr = to_frac(e).ok()?;
    if fr.den.as_constant().map(|c| c.is_one()) != Some(true) {
        return None;
    }
    let mut constant = BigRational::zero();
    let mut coeffs = vec![BigRational::zero(); symbols.len()];
    for (m, c) in &fr.num.terms {
        if m.is_empty() {
            constant = c.clone();
            continue;
        }
        if m.len() != 1 {
            return None;
        }
        let (atom, k) = m.iter().next().unwrap();
        if *k != 1 {
            return None;
        }
        let name = atom.as_symbol()?;
        let idx = symbols.iter().position(|s| *s == name)?;
        coeffs[idx] = c.clone();
    }
    Some((constant, coeffs))
}

impl Expr {
    /// Full canonical simplification: rational-function normal form over the
    /// transcendental atoms, with `sin^2+cos^2 -> 1`, sqrt-square and
    /// exp-product rewriting.
    pub fn try_simplify(&self) -> Result<Expr, SimplifyError> {
        Ok(frac_to_expr(&to_frac(self)?))
    }

    /// Panicking variant of [`Expr::try_simplify`]; use on expressions known
    /// to be free of literal division by zero.
    pub fn simplify(&self) -> Expr {
        self.try_simplify()
            .unwrap_or_else(|e| panic!("simplification failed: {e}"))
    }

    /// Symbolic equality after canonicalization.
    pub fn equivalent(&self, other: &Expr) -> bool {
        match Expr::sub(self.clone(), other.clone()).try_simplify() {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(name: &str) -> Expr {
        Expr::symbol(name)
    }

    #[test]
    fn cancels_product_with_quotient() {
        // t * (x/t) -> x
        let e = Expr::mul(vec![s("t"), Expr::div(s("x"), s("t"))]);
        assert_eq!(e.simplify(), s("x"));
    }

    #[test]
    fn pythagoras() {
        let th = s("theta");
        let e = Expr::add(vec![
            Expr::pow(Expr::call(Builtin::Sin, vec![th.clone()]), Expr::int(2)),
            Expr::pow(Expr::call(Builtin::Cos, vec![th]), Expr::int(2)),
        ]);
        assert!(e.simplify().is_one());
    }

    #[test]
    fn rotation_preserves_norm() {
        // (V cos - W sin)^2 + (V sin + W cos)^2 = V^2 + W^2
        let (v, w, th) = (s("V"), s("W"), s("theta"));
        let c = Expr::call(Builtin::Cos, vec![th.clone()]);
        let si = Expr::call(Builtin::Sin, vec![th]);
        let a = Expr::sub(Expr::mul(vec![v.clone(), c.clone()]), Expr::mul(vec![w.clone(), si.clone()]));
        let b = Expr::add(vec![Expr::mul(vec![v.clone(), si]), Expr::mul(vec![w.clone(), c])]);
        let lhs = Expr::add(vec![
            Expr::pow(a, Expr::int(2)),
            Expr::pow(b, Expr::int(2)),
        ]);
        let rhs = Expr::add(vec![
            Expr::pow(v, Expr::int(2)),
            Expr::pow(w, Expr::int(2)),
        ]);
        assert!(lhs.equivalent(&rhs));
    }

    #[test]
    fn abstract_atoms_cancel() {
        let psi = Expr::abstract_fn("Psi", 1, vec![Expr::div(s("x"), s("t"))]);
        let psi2 = Expr::abstract_fn(
            "Psi",
            1,
            vec![Expr::mul(vec![s("x"), Expr::pow(s("t"), Expr::int(-1))])],
        );
        assert_eq!(Expr::sub(psi, psi2).simplify(), Expr::zero());
    }

    #[test]
    fn sqrt_square_collapses_in_fraction() {
        let g = Expr::sqrt(Expr::add(vec![
            Expr::pow(s("v"), Expr::int(2)),
            Expr::pow(s("w"), Expr::int(2)),
        ]));
        let e = Expr::sub(
            Expr::pow(g.clone(), Expr::int(2)),
            Expr::add(vec![
                Expr::pow(s("v"), Expr::int(2)),
                Expr::pow(s("w"), Expr::int(2)),
            ]),
        );
        assert!(e.simplify().is_zero());
    }

    #[test]
    fn gcd_cancellation() {
        // (x^2 - 1)/(x - 1) -> x + 1
        let x = s("x");
        let num = Expr::sub(Expr::pow(x.clone(), Expr::int(2)), Expr::one());
        let den = Expr::sub(x.clone(), Expr::one());
        let e = Expr::div(num, den);
        assert_eq!(e.simplify(), Expr::add(vec![x, Expr::one()]));
    }

    #[test]
    fn division_by_symbolic_zero_reports() {
        // 1/(sin^2 + cos^2 - 1): the constructor cannot see this is zero,
        // normalization must.
        let th = s("theta");
        let zero = Expr::sub(
            Expr::add(vec![
                Expr::pow(Expr::call(Builtin::Sin, vec![th.clone()]), Expr::int(2)),
                Expr::pow(Expr::call(Builtin::Cos, vec![th]), Expr::int(2)),
            ]),
            Expr::one(),
        );
        let e = Expr::div(Expr::one(), zero);
        assert!(e.try_simplify().is_err());
    }
}

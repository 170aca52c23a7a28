//! Determining equations, source-function verification, invariant-solution
//! verification, and reduction to invariant variables.
//!
//! For a subalgebra with generators `Y_i = c_i^j X_j` the admitted-source
//! condition is one linear first-order PDE per generator,
//!
//! ```text
//! 2 c_i^11 q + sum_j c_i^j X_j(q) = 0,
//! ```
//!
//! the scaling generator contributing the constant multiplier -2 and all
//! others 0. A catalog row passes when every residual is identically zero
//! under the row's parameter constraints.

use crate::catalog::{Catalog, CatalogRow};
use crate::expr::{DomainGuard, Expr, GuardError, HashOracle, ZeroVerdict};
use crate::geometry::{Chart, ChartName};
use crate::liealg::{l11_basis, BasisCombo, VectorField};
use crate::report::{CheckReport, CheckStatus, RowVerdict};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ClassifyError {
    #[error("{0}")]
    Catalog(#[from] crate::catalog::CatalogError),
    #[error("{0}")]
    Guard(#[from] GuardError),
    #[error("row {id}: {message}")]
    Row { id: String, message: String },
}

fn row_err(id: &str, message: impl Into<String>) -> ClassifyError {
    ClassifyError::Row {
        id: id.to_string(),
        message: message.into(),
    }
}

/// Per-row deterministic seed, independent of verification order.
fn row_seed(seed: u64, id: &str, salt: u64) -> u64 {
    let mut h = seed ^ 0x9e3779b97f4a7c15;
    for b in id.as_bytes() {
        h = h.wrapping_mul(0x100000001b3) ^ (*b as u64);
    }
    h ^ salt.wrapping_mul(0xff51afd7ed558ccd)
}

/// The determining residual `2 c^11 q + sum_j c^j X_j(q)` for one generator
/// of a subalgebra, built on the subalgebra's chart.
pub fn determining_residual(chart: ChartName, combo: &BasisCombo, q: &Expr) -> Expr {
    let basis = l11_basis(chart);
    let mut terms = Vec::with_capacity(12);
    let c11 = &combo.coeffs[10];
    if !c11.is_zero() {
        terms.push(Expr::mul(vec![Expr::int(2), c11.clone(), q.clone()]));
    }
    for (j, c) in combo.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let applied = basis[j].apply(q);
        if applied.is_zero() {
            continue;
        }
        terms.push(Expr::mul(vec![c.clone(), applied]));
    }
    let raw = Expr::add(terms);
    raw.try_simplify().unwrap_or(raw)
}

/// Standard guard for a row: positive intervals for every symbol in sight
/// plus the row's parameter constraints.
pub fn row_guard(row: &CatalogRow, extra: impl IntoIterator<Item = String>) -> DomainGuard {
    let mut symbols: BTreeSet<String> = extra.into_iter().collect();
    symbols.extend(Chart::get(row.chart).coords.iter().map(|s| s.to_string()));
    symbols.extend(row.params.iter().cloned());
    symbols.insert("C".to_string());
    let mut guard = DomainGuard::standard(symbols);
    for (expr, rel) in &row.constraints {
        guard = guard.with_constraint(expr.clone(), *rel);
    }
    guard
}

/// Verifies the row's source function against all of its determining
/// equations.
pub fn verify_source(
    catalog: &Catalog,
    row: &CatalogRow,
    seed: u64,
) -> Result<RowVerdict, ClassifyError> {
    let mut q = catalog.resolve_source(row)?;
    let pins = eqzero_pins(&row.constraints);
    if !pins.is_empty() {
        q = q.substitute(&pins);
    }
    let guard = row_guard(row, q.symbols());
    let mut checks = Vec::with_capacity(row.combos.len());
    for (i, combo) in row.combos.iter().enumerate() {
        let combo = substitute_pinned(combo, &row.constraints);
        let residual = determining_residual(row.chart, &combo, &q);
        let verdict = residual.is_identically_zero(&guard, row_seed(seed, &row.id, i as u64))?;
        checks.push(CheckReport::from_zero_verdict(
            format!("determining[{}]", row.generator_texts[i]),
            &verdict,
        ));
    }
    Ok(RowVerdict::aggregate(
        &row.id,
        &row.chart.to_string(),
        checks,
        false,
    ))
}

/// Exact bindings for `param = 0` constraints of case-split rows.
fn eqzero_pins(constraints: &[(Expr, crate::expr::Relation)]) -> BTreeMap<String, Expr> {
    let mut bindings = BTreeMap::new();
    for (expr, rel) in constraints {
        if *rel == crate::expr::Relation::EqZero {
            if let Some(sym) = expr.as_symbol() {
                bindings.insert(sym.to_string(), Expr::zero());
            }
        }
    }
    bindings
}

/// Applies exact `param = 0` pins to a combination so that case-split rows
/// verify the generator the case actually has.
fn substitute_pinned(combo: &BasisCombo, constraints: &[(Expr, crate::expr::Relation)]) -> BasisCombo {
    let bindings = eqzero_pins(constraints);
    if bindings.is_empty() {
        combo.clone()
    } else {
        combo.substitute(&bindings)
    }
}

/// Generic numerical ranks of the subalgebra's coefficient matrix:
/// `r_full` over all eight columns, `r_xi` with the `f` column removed.
/// Sampled at eight seeded guarded points, the maximum rank wins.
pub fn orbit_ranks(row: &CatalogRow, seed: u64) -> Result<(usize, usize), ClassifyError> {
    let fields: Vec<VectorField> = row
        .combos
        .iter()
        .map(|c| substitute_pinned(c, &row.constraints).realize(row.chart))
        .collect();
    let guard = row_guard(row, std::iter::empty());
    let oracle = HashOracle { seed };
    let mut r_full = 0;
    let mut r_xi = 0;
    for point in 0..8u64 {
        let env = guard.sample(row_seed(seed, &row.id, 0x51c3 ^ point))?;
        let mut matrix = Vec::with_capacity(fields.len());
        for vf in &fields {
            let mut mrow = Vec::with_capacity(8);
            for coeff in vf.coefficients() {
                let v = coeff
                    .eval_numeric(&env, &oracle)
                    .map_err(|e| row_err(&row.id, format!("rank evaluation: {e}")))?;
                mrow.push(v);
            }
            matrix.push(mrow);
        }
        r_full = r_full.max(numeric_rank(matrix.clone(), 8));
        r_xi = r_xi.max(numeric_rank(matrix, 7));
    }
    Ok((r_full, r_xi))
}

/// Rank by pivoted elimination with a relative pivot threshold.
fn numeric_rank(mut m: Vec<Vec<f64>>, cols: usize) -> usize {
    let scale = m
        .iter()
        .flat_map(|r| r[..cols].iter())
        .fold(0.0f64, |a, b| a.max(b.abs()))
        .max(1.0);
    let threshold = 1e-8 * scale;
    let rows = m.len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows)
            .filter(|r| m[*r][col].abs() > threshold)
            .max_by(|a, b| m[*a][col].abs().total_cmp(&m[*b][col].abs()))
        else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col];
        for r in (rank + 1)..rows {
            let factor = m[r][col] / p;
            for c in col..cols {
                let delta = factor * m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// A representation `f = W * Omega(a_1..a_m)`, with `Omega0` rendered as the
/// constant symbol `C`.
#[derive(Debug, Clone)]
pub struct InvariantRep {
    pub weight: Expr,
    pub arity: u32,
    pub args: Vec<Expr>,
}

/// Splits a representation expression into weight and abstract part.
pub fn parse_invariant_rep(id: &str, e: &Expr) -> Result<InvariantRep, ClassifyError> {
    let mut weight_factors = Vec::new();
    let mut abstract_part: Option<(u32, Vec<Expr>)> = None;
    let factors: Vec<Expr> = match e.node() {
        crate::expr::Node::Product(children) => children.clone(),
        _ => vec![e.clone()],
    };
    for f in factors {
        match f.node() {
            crate::expr::Node::Abstract { name, arity, args } if name == "Omega" => {
                if abstract_part.is_some() {
                    return Err(row_err(id, "representation has two Omega factors"));
                }
                abstract_part = Some((*arity, args.clone()));
            }
            crate::expr::Node::Symbol(s) if s == "C" => {
                if abstract_part.is_some() {
                    return Err(row_err(id, "representation mixes C and Omega"));
                }
                abstract_part = Some((0, Vec::new()));
            }
            _ => weight_factors.push(f.clone()),
        }
    }
    let Some((arity, args)) = abstract_part else {
        return Err(row_err(id, "representation lacks an Omega factor or C"));
    };
    let weight = Expr::mul(weight_factors);
    if weight.symbols().contains("f") {
        return Err(row_err(id, "weight depends on f"));
    }
    for a in &args {
        if a.symbols().contains("f") {
            return Err(row_err(id, "invariant argument depends on f"));
        }
    }
    Ok(InvariantRep {
        weight,
        arity,
        args,
    })
}

/// Verifies an invariant-solution representation: invariance of every
/// argument and of `f/W` under every generator, the count identity
/// `m + 1 = 8 - r_full`, and numerical functional independence. `None`
/// rows are certified by the rank criterion `r_xi = r_full - 1` and
/// reported as SKIP.
pub fn verify_invariant_rep(
    catalog: &Catalog,
    row: &CatalogRow,
    seed: u64,
) -> Result<RowVerdict, ClassifyError> {
    let chart = Chart::get(row.chart);
    let (r_full, r_xi) = orbit_ranks(row, seed)?;
    let rep_expr = catalog.resolve_invariant(row)?.map(|e| {
        let pins = eqzero_pins(&row.constraints);
        if pins.is_empty() {
            e
        } else {
            e.substitute(&pins)
        }
    });
    let Some(rep_expr) = rep_expr else {
        // "None": no f-dependent invariant exists
        let ok = r_xi == r_full - 1;
        let check = CheckReport {
            name: "no-invariant-certificate[r_xi = r_full - 1]".to_string(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            witness: Some(serde_json::json!({"r_full": r_full, "r_xi": r_xi})),
        };
        return Ok(RowVerdict::aggregate(
            &row.id,
            &row.chart.to_string(),
            vec![check],
            true,
        ));
    };
    let rep = parse_invariant_rep(&row.id, &rep_expr)?;
    let mut checks = Vec::new();
    let guard = row_guard(row, rep_expr.symbols());
    // (a) invariance argument by argument, then of f/W
    let f_over_w = Expr::div(Expr::symbol("f"), rep.weight.clone());
    let mut targets: Vec<(String, Expr)> = rep
        .args
        .iter()
        .enumerate()
        .map(|(s, a)| (format!("arg{}", s + 1), a.clone()))
        .collect();
    targets.push(("f/W".to_string(), f_over_w.clone()));
    for (i, combo) in row.combos.iter().enumerate() {
        let combo = substitute_pinned(combo, &row.constraints);
        let field = combo.realize(row.chart);
        for (what, target) in &targets {
            let applied = field.apply(target);
            let verdict =
                applied.is_identically_zero(&guard, row_seed(seed, &row.id, (i * 31) as u64))?;
            checks.push(CheckReport::from_zero_verdict(
                format!("invariance[{}]({what})", row.generator_texts[i]),
                &verdict,
            ));
        }
    }
    // (b) count: m + 1 = 8 - r_full
    let count_ok = rep.arity as usize + 1 == 8 - r_full;
    checks.push(CheckReport {
        name: "count[m+1 = 8-r_full]".to_string(),
        status: if count_ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        witness: Some(serde_json::json!({"m": rep.arity, "r_full": r_full})),
    });
    // (c) independence: Jacobian of (a_1..a_m, f/W) has rank m+1
    let mut functions = rep.args.clone();
    functions.push(f_over_w);
    let oracle = HashOracle { seed };
    let mut best_rank = 0;
    for point in 0..8u64 {
        let env = guard.sample(row_seed(seed, &row.id, 0xa11ce ^ point))?;
        let mut jac = Vec::with_capacity(functions.len());
        let mut ok = true;
        for func in &functions {
            let mut jrow = Vec::with_capacity(8);
            for coord in chart.coords {
                let d = func.differentiate(coord);
                match d.eval_numeric(&env, &oracle) {
                    Ok(v) => jrow.push(v),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            jac.push(jrow);
        }
        if ok {
            best_rank = best_rank.max(numeric_rank(jac, 8));
        }
    }
    let indep_ok = best_rank == rep.arity as usize + 1;
    checks.push(CheckReport {
        name: "independence[jacobian rank m+1]".to_string(),
        status: if indep_ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        witness: Some(serde_json::json!({"rank": best_rank, "m": rep.arity})),
    });
    Ok(RowVerdict::aggregate(
        &row.id,
        &row.chart.to_string(),
        checks,
        false,
    ))
}

/// Transport operator of the kinetic equation on a chart, as a vector field.
pub fn transport_operator(chart: ChartName) -> VectorField {
    let p = |s: &str| Expr::parse(s).unwrap();
    match chart {
        ChartName::Cartesian => VectorField::from_pairs(
            chart,
            &[("t", p("1")), ("x", p("u")), ("y", p("v")), ("z", p("w"))],
        ),
        ChartName::Cylindrical => VectorField::from_pairs(
            chart,
            &[
                ("t", p("1")),
                ("x", p("u")),
                ("r", p("V")),
                ("theta", p("W/r")),
                ("V", p("W^2/r")),
                ("W", p("-W*V/r")),
            ],
        ),
        ChartName::Spherical => VectorField::from_pairs(
            chart,
            &[
                ("t", p("1")),
                ("r", p("U")),
                ("phi", p("W/(r*sin(theta))")),
                ("theta", p("V/r")),
                ("U", p("(V^2 + W^2)/r")),
                ("V", p("(W^2*cos(theta)/sin(theta) - U*V)/r")),
                ("W", p("-W*(U + V*cos(theta)/sin(theta))/r")),
            ],
        ),
    }
}

/// Prefactor and abstract factor of a source expression
/// (`t^-2 * Psi7(...)` splits into `t^-2` and the Psi atom; `C*f^2` has no
/// abstract factor).
pub fn source_parts(id: &str, q: &Expr) -> Result<(Expr, Option<(u32, Vec<Expr>)>), ClassifyError> {
    let factors: Vec<Expr> = match q.node() {
        crate::expr::Node::Product(children) => children.clone(),
        _ => vec![q.clone()],
    };
    let mut prefactor = Vec::new();
    let mut psi = None;
    for f in factors {
        match f.node() {
            crate::expr::Node::Abstract { name, arity, args } if name == "Psi" => {
                if psi.is_some() {
                    return Err(row_err(id, "source has two Psi factors"));
                }
                psi = Some((*arity, args.clone()));
            }
            _ => prefactor.push(f.clone()),
        }
    }
    Ok((Expr::mul(prefactor), psi))
}

/// The reduced differential part: the transport operator applied to
/// `f = W * Omega(a_1..a_m)`, divided by the row's source prefactor and
/// rewritten purely in invariant variables.
#[derive(Debug, Clone)]
pub struct ReducedForm {
    /// The factored-out prefactor (the source prefactor of the row).
    pub prefactor: Expr,
    /// The reduced expression in `Omega`, its slot partials, and invariant
    /// symbols.
    pub reduced: Expr,
    /// Fresh invariant symbols introduced for compound arguments.
    pub invariants: Vec<(String, Expr)>,
}

pub fn reduced_differential_part(
    catalog: &Catalog,
    row: &CatalogRow,
) -> Result<ReducedForm, ClassifyError> {
    let Some(rep_expr) = catalog.resolve_invariant(row)? else {
        return Err(row_err(&row.id, "row has no invariant representation"));
    };
    let rep = parse_invariant_rep(&row.id, &rep_expr)?;
    let q = catalog.resolve_source(row)?;
    let (prefactor, _) = source_parts(&row.id, &q)?;
    let omega = if rep.arity == 0 {
        Expr::symbol("C")
    } else {
        Expr::abstract_fn("Omega", rep.arity, rep.args.clone())
    };
    let f_expr = Expr::mul(vec![rep.weight.clone(), omega]);
    let transported = transport_operator(row.chart).apply(&f_expr);
    let scaled = Expr::div(transported, prefactor.clone());
    let (reduced, invariants) = rewrite_in_invariants(row, &rep, &scaled)?;
    Ok(ReducedForm {
        prefactor,
        reduced,
        invariants,
    })
}

/// Substitutes the source `q` on the solution manifold `f = W*Omega(args)`
/// and rewrites it in invariant variables; verifies the consistency claim
/// that the reduced source is expressible through the Psi atom alone.
pub fn reduced_source(catalog: &Catalog, row: &CatalogRow) -> Result<ReducedForm, ClassifyError> {
    let Some(rep_expr) = catalog.resolve_invariant(row)? else {
        return Err(row_err(&row.id, "row has no invariant representation"));
    };
    let rep = parse_invariant_rep(&row.id, &rep_expr)?;
    let q = catalog.resolve_source(row)?;
    let (prefactor, _) = source_parts(&row.id, &q)?;
    let omega = if rep.arity == 0 {
        Expr::symbol("C")
    } else {
        Expr::abstract_fn("Omega", rep.arity, rep.args.clone())
    };
    let f_expr = Expr::mul(vec![rep.weight.clone(), omega]);
    let mut bindings = BTreeMap::new();
    bindings.insert("f".to_string(), f_expr);
    let on_manifold = Expr::div(q.substitute(&bindings), prefactor.clone());
    let (reduced, invariants) = rewrite_in_invariants(row, &rep, &on_manifold)?;
    Ok(ReducedForm {
        prefactor,
        reduced,
        invariants,
    })
}

/// Rewrites an expression in the invariant variables of a representation:
/// each compound argument gets a fresh symbol `p_k`, the defining relations
/// are solved for coordinates (depth-first over linear solvable choices),
/// and the substituted expression must lose all non-invariant coordinates.
fn rewrite_in_invariants(
    row: &CatalogRow,
    rep: &InvariantRep,
    expr: &Expr,
) -> Result<(Expr, Vec<(String, Expr)>), ClassifyError> {
    let chart = Chart::get(row.chart);
    let coords: BTreeSet<String> = chart.coords.iter().map(|s| s.to_string()).collect();
    // name invariants: plain coordinate args keep their name; compound args
    // get p1, p2, ...
    let mut fresh = Vec::new();
    let mut kept: BTreeSet<String> = BTreeSet::new();
    let mut counter = 0;
    for a in &rep.args {
        if let Some(sym) = a.as_symbol() {
            kept.insert(sym.to_string());
        } else {
            counter += 1;
            fresh.push((format!("p{counter}"), a.clone()));
        }
    }
    // allowed symbols in the final answer
    let mut allowed: BTreeSet<String> = kept.clone();
    allowed.extend(fresh.iter().map(|(n, _)| n.clone()));
    allowed.extend(row.params.iter().cloned());
    allowed.insert("C".to_string());

    // depth-first over the coordinate solved from each compound relation
    fn solve_candidates(arg: &Expr, coords: &BTreeSet<String>) -> Vec<String> {
        let mut out = Vec::new();
        for sym in arg.symbols() {
            if !coords.contains(&sym) {
                continue;
            }
            let d = arg.differentiate(&sym);
            if d.is_zero() {
                continue;
            }
            // linear occurrence with coefficient free of the coordinate
            if d.differentiate(&sym).simplify().is_zero()
                && !d.symbols().contains(&sym)
            {
                out.push(sym);
            }
        }
        out
    }

    fn dfs(
        relations: &[(String, Expr)],
        idx: usize,
        acc: &Expr,
        coords: &BTreeSet<String>,
        allowed: &BTreeSet<String>,
    ) -> Option<Expr> {
        if idx == relations.len() {
            let simplified = acc.try_simplify().ok()?;
            let bad: Vec<String> = simplified
                .symbols()
                .into_iter()
                .filter(|s| !allowed.contains(s))
                .collect();
            if bad.is_empty() {
                return Some(simplified);
            }
            return None;
        }
        let (name, arg) = &relations[idx];
        let p = Expr::symbol(name);
        let mut candidates = solve_candidates(arg, coords);
        // prefer coordinates that later relations do not need
        candidates.sort_by_key(|sym| {
            relations[idx + 1..]
                .iter()
                .filter(|(_, rest)| rest.symbols().contains(sym))
                .count()
        });
        for sym in candidates {
            let coeff = arg.differentiate(&sym);
            // arg = coeff*sym + rest  =>  sym = (p - rest)/coeff
            let rest = Expr::sub(
                arg.clone(),
                Expr::mul(vec![coeff.clone(), Expr::symbol(&sym)]),
            );
            let solved = Expr::div(Expr::sub(p.clone(), rest), coeff);
            let mut bindings = BTreeMap::new();
            bindings.insert(sym.clone(), solved);
            let next_acc = acc.substitute(&bindings);
            let next_relations: Vec<(String, Expr)> = relations
                .iter()
                .enumerate()
                .map(|(k, (n, a))| {
                    if k > idx {
                        (n.clone(), a.substitute(&bindings))
                    } else {
                        (n.clone(), a.clone())
                    }
                })
                .collect();
            if let Some(found) = dfs(&next_relations, idx + 1, &next_acc, coords, allowed) {
                return Some(found);
            }
        }
        None
    }

    let result = dfs(&fresh, 0, expr, &coords, &allowed);
    match result {
        Some(e) => Ok((e, fresh)),
        None => {
            let leftover: Vec<String> = expr
                .symbols()
                .into_iter()
                .filter(|s| coords.contains(s) && !allowed.contains(s))
                .collect();
            Err(row_err(
                &row.id,
                format!(
                    "not expressible in invariants; residual coordinates {:?}",
                    leftover
                ),
            ))
        }
    }
}

/// Builds the determining residual through the Cartesian chart: the source
/// is pushed through the inverse chart map and checked against the same
/// combination realized on Cartesian generators. Used as a chart-independence
/// cross-check on cylindrical and spherical rows.
pub fn determining_residual_via_cartesian(
    row: &CatalogRow,
    combo: &BasisCombo,
    q: &Expr,
) -> Expr {
    let chart = Chart::get(row.chart);
    let bindings: BTreeMap<String, Expr> = chart
        .coords
        .iter()
        .zip(&chart.from_cartesian)
        .map(|(name, e)| (name.to_string(), e.clone()))
        .collect();
    let q_cart = q.substitute(&bindings);
    determining_residual(ChartName::Cartesian, combo, &q_cart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ZeroStatus;

    fn catalog() -> &'static Catalog {
        Catalog::builtin()
    }

    #[test]
    fn determining_equation_row_1_8_matches_worked_example() {
        // 2q - f q_f + t q_t + x q_x + y q_y + z q_z
        let q = Expr::abstract_fn(
            "q",
            8,
            ["x", "y", "z", "u", "v", "w", "t", "f"]
                .iter()
                .map(|s| Expr::symbol(s))
                .collect(),
        );
        let row = catalog().get("1.8").unwrap();
        let residual = determining_residual(row.chart, &row.combos[0], &q);
        let part = |slot: u32| {
            Expr::partial(
                "q",
                8,
                vec![slot],
                ["x", "y", "z", "u", "v", "w", "t", "f"]
                    .iter()
                    .map(|s| Expr::symbol(s))
                    .collect(),
            )
        };
        let expected = Expr::parse("2*qq + t*qt + x*qx + y*qy + z*qz - f*qf")
            .unwrap()
            .substitute(&BTreeMap::from([
                ("qq".to_string(), q.clone()),
                ("qt".to_string(), part(7)),
                ("qx".to_string(), part(1)),
                ("qy".to_string(), part(2)),
                ("qz".to_string(), part(3)),
                ("qf".to_string(), part(8)),
            ]));
        assert!(Expr::sub(residual, expected).simplify().is_zero());
    }

    #[test]
    fn row_1_8_source_passes() {
        let row = catalog().get("1.8").unwrap();
        let verdict = verify_source(catalog(), row, 42).unwrap();
        assert!(matches!(
            verdict.overall,
            crate::report::Overall::Pass | crate::report::Overall::PassNumeric
        ));
    }

    #[test]
    fn corrupted_row_1_8_fails_with_witness() {
        // t^-3 prefactor instead of t^-2
        let row = catalog().get("1.8").unwrap();
        let bad = Expr::parse("t^-3*Psi7(x/t, y/t, z/t, u, v, w, f*t)").unwrap();
        let residual = determining_residual(row.chart, &row.combos[0], &bad);
        let guard = row_guard(row, bad.symbols());
        let verdict = residual.is_identically_zero(&guard, 7).unwrap();
        assert_eq!(verdict.status, ZeroStatus::Nonzero);
        assert!(verdict.witness.is_some());
    }

    #[test]
    fn row_8_5_universal_source_passes_all_generators() {
        let row = catalog().get("8.5").unwrap();
        let verdict = verify_source(catalog(), row, 42).unwrap();
        assert_eq!(verdict.checks.len(), 8);
        assert!(verdict.checks.iter().all(|c| c.status.passed()));
    }

    #[test]
    fn orbit_ranks_match_expectations() {
        // single scaling field
        let row = catalog().get("1.8").unwrap();
        assert_eq!(orbit_ranks(row, 1).unwrap(), (1, 1));
        // rotations acting jointly on position and velocity: a generic point
        // has trivial stabilizer, so the orbit dimension is 3 (consistent
        // with the five invariants t, r, U, V^2+W^2, f of the table)
        let row = catalog().get("3.8").unwrap();
        let (r_full, _) = orbit_ranks(row, 1).unwrap();
        assert_eq!(r_full, 3);
        // 5.23: last generator reduces to -f d_f modulo the others
        let row = catalog().get("5.23").unwrap();
        assert_eq!(orbit_ranks(row, 1).unwrap(), (5, 4));
    }

    #[test]
    fn row_1_8_invariant_rep_passes() {
        let row = catalog().get("1.8").unwrap();
        let verdict = verify_invariant_rep(catalog(), row, 42).unwrap();
        assert!(matches!(
            verdict.overall,
            crate::report::Overall::Pass | crate::report::Overall::PassNumeric
        ));
    }

    #[test]
    fn row_5_23_none_certified_by_ranks() {
        let row = catalog().get("5.23").unwrap();
        let verdict = verify_invariant_rep(catalog(), row, 42).unwrap();
        assert_eq!(verdict.overall, crate::report::Overall::Skip);
    }

    #[test]
    fn reduce_row_1_8_matches_worked_example() {
        let row = catalog().get("1.8").unwrap();
        let form = reduced_differential_part(catalog(), row).unwrap();
        assert!(Expr::sub(form.prefactor.clone(), Expr::parse("t^-2").unwrap())
            .simplify()
            .is_zero());
        let args: Vec<Expr> = ["p1", "p2", "p3", "u", "v", "w"]
            .iter()
            .map(|s| Expr::symbol(s))
            .collect();
        let omega = Expr::abstract_fn("Omega", 6, args.clone());
        let partial = |s: u32| Expr::partial("Omega", 6, vec![s], args.clone());
        let expected = Expr::parse(
            "0 - OM + (u - p1)*O1 + (v - p2)*O2 + (w - p3)*O3",
        )
        .unwrap()
        .substitute(&BTreeMap::from([
            ("OM".to_string(), omega),
            ("O1".to_string(), partial(1)),
            ("O2".to_string(), partial(2)),
            ("O3".to_string(), partial(3)),
        ]));
        assert!(
            Expr::sub(form.reduced.clone(), expected).simplify().is_zero(),
            "got {}",
            form.reduced
        );
    }

    #[test]
    fn reduce_row_1_13_drops_x_derivative() {
        let row = catalog().get("1.13").unwrap();
        let form = reduced_differential_part(catalog(), row).unwrap();
        let args: Vec<Expr> = ["t", "y", "z", "u", "v", "w"]
            .iter()
            .map(|s| Expr::symbol(s))
            .collect();
        let partial = |s: u32| Expr::partial("Omega", 6, vec![s], args.clone());
        let expected = Expr::add(vec![
            partial(1),
            Expr::mul(vec![Expr::symbol("v"), partial(2)]),
            Expr::mul(vec![Expr::symbol("w"), partial(3)]),
        ]);
        assert!(Expr::sub(form.reduced.clone(), expected).simplify().is_zero());
    }
}

#[cfg(test)]
mod errata_tests {
    use super::*;
    use crate::catalog::{known_errata, Catalog};
    use crate::expr::ZeroStatus;
    use crate::report::Overall;

    #[test]
    fn printed_row_3_38_invariant_fails_but_corrected_passes() {
        let catalog = Catalog::builtin();
        let row = catalog.get("3.38").unwrap();
        // as printed: the second argument is not annihilated by the third
        // generator
        let printed = verify_invariant_rep(catalog, row, 42).unwrap();
        assert_eq!(printed.overall, Overall::Fail);
        let failing: Vec<&str> = printed
            .checks
            .iter()
            .filter(|c| !c.status.passed())
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(failing, ["invariance[sigma1+tau2+6](arg2)"]);
        // corrected form from the errata table passes every check
        let erratum = known_errata()
            .iter()
            .find(|e| e.subject == "3.38")
            .unwrap();
        let corrected = Expr::parse(erratum.corrected).unwrap();
        let rep = parse_invariant_rep(&row.id, &corrected).unwrap();
        let guard = row_guard(row, corrected.symbols());
        for combo in &row.combos {
            let field = combo.realize(row.chart);
            for arg in &rep.args {
                let v = field
                    .apply(arg)
                    .is_identically_zero(&guard, 11)
                    .unwrap();
                assert_ne!(v.status, ZeroStatus::Nonzero);
            }
            let f_over_w = Expr::div(Expr::symbol("f"), rep.weight.clone());
            let v = field
                .apply(&f_over_w)
                .is_identically_zero(&guard, 11)
                .unwrap();
            assert_ne!(v.status, ZeroStatus::Nonzero);
        }
        // count and independence still hold for the corrected arguments
        let (r_full, _) = orbit_ranks(row, 42).unwrap();
        assert_eq!(rep.arity as usize + 1, 8 - r_full);
    }
}

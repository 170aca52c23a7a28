//! Machine-readable classification catalog: parser, reference resolution,
//! and schema validation.
//!
//! The file format is line oriented: `[row "m.n"]` section headers followed
//! by `key = value` pairs, `#` comments. See `catalog/classification.cat`
//! for the shipped transcription of the classification tables.

use crate::expr::{Expr, Relation};
use crate::geometry::{Chart, ChartName};
use crate::liealg::BasisCombo;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

pub const BUILTIN_CATALOG: &str = include_str!("../catalog/classification.cat");

#[derive(Debug, Clone, Error)]
pub enum CatalogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("row {id}: {message}")]
    Row { id: String, message: String },
    #[error("duplicate row id {0}")]
    DuplicateId(String),
    #[error("row {from}: dangling reference to {to}")]
    DanglingRef { from: String, to: String },
    #[error("row {from}: reference cycle through {to}")]
    RefCycle { from: String, to: String },
    #[error("io: {0}")]
    Io(String),
    #[error("catalog shape: {0}")]
    Shape(String),
}

fn row_err(id: &str, message: impl Into<String>) -> CatalogError {
    CatalogError::Row {
        id: id.to_string(),
        message: message.into(),
    }
}

/// Reference to another row, optionally renaming the target's parameters
/// (`ref:6.20{alpha=beta}` reads 6.20's formulas with its `alpha` replaced
/// by this row's `beta`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowRef {
    pub target: String,
    pub rename: Vec<(String, String)>,
}

impl fmt::Display for RowRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ref:{}", self.target)?;
        if !self.rename.is_empty() {
            let pairs: Vec<String> = self
                .rename
                .iter()
                .map(|(a, b)| format!("{a}={b}"))
                .collect();
            write!(f, "{{{}}}", pairs.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceEntry {
    Direct(Expr),
    Ref(RowRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantEntry {
    Direct(Expr),
    None,
    Ref(RowRef),
}

/// One catalog row: a subalgebra of the optimal system together with its
/// admitted source function and invariant-solution representation.
#[derive(Debug, Clone)]
pub struct CatalogRow {
    /// Full id including a case suffix, e.g. "6.8a".
    pub id: String,
    /// Table id without the case suffix, e.g. "6.8".
    pub base_id: String,
    pub dimension: u32,
    pub chart: ChartName,
    pub combos: Vec<BasisCombo>,
    pub generator_texts: Vec<String>,
    pub constraints: Vec<(Expr, Relation)>,
    pub source: SourceEntry,
    pub invariant: InvariantEntry,
    /// Parameter symbols appearing in combos, constraints, or formulas.
    pub params: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    pub rows: Vec<CatalogRow>,
    index: HashMap<String, usize>,
}

/// Parses one generator combination in table syntax, e.g. `beta4+7+alpha11`
/// or `-delta2+beta3+4`.
pub fn combo_parse(text: &str) -> Result<BasisCombo, String> {
    let bytes = text.trim().as_bytes();
    if bytes.is_empty() {
        return Err("empty combination".to_string());
    }
    let mut combo = BasisCombo::zero();
    let mut i = 0;
    let mut any = false;
    loop {
        let mut sign = 1i64;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            if bytes[i] == b'-' {
                sign = -1;
            }
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
            i += 1;
        }
        let param = &text[start..i];
        let dig_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if dig_start == i {
            return Err(format!("expected basis index at offset {i} in `{text}`"));
        }
        let index: usize = text[dig_start..i]
            .parse()
            .map_err(|_| format!("bad index in `{text}`"))?;
        if !(1..=11).contains(&index) {
            return Err(format!("basis index {index} outside 1..11 in `{text}`"));
        }
        let mut coeff = if param.is_empty() {
            Expr::int(sign)
        } else {
            Expr::mul(vec![Expr::int(sign), Expr::symbol(param)])
        };
        if !combo.coeffs[index - 1].is_zero() {
            coeff = Expr::add(vec![combo.coeffs[index - 1].clone(), coeff]);
        }
        combo.coeffs[index - 1] = coeff;
        any = true;
        if i == bytes.len() {
            break;
        }
        if bytes[i] != b'+' && bytes[i] != b'-' {
            return Err(format!("unexpected character at offset {i} in `{text}`"));
        }
    }
    if !any || combo.is_zero() {
        return Err(format!("zero combination `{text}`"));
    }
    Ok(combo)
}

fn parse_constraint(text: &str) -> Result<(Expr, Relation), String> {
    let (lhs, rel) = if let Some(pos) = text.find("!=") {
        (&text[..pos], Relation::NonZero)
    } else if let Some(pos) = text.find('=') {
        let rhs = text[pos + 1..].trim();
        let relation = match rhs {
            "0" => Relation::EqZero,
            "1" => Relation::EqOne,
            other => return Err(format!("unsupported constraint rhs `{other}`")),
        };
        (&text[..pos], relation)
    } else {
        return Err(format!("constraint `{text}` has no relation"));
    };
    if rel == Relation::NonZero {
        let rhs = text[text.find("!=").unwrap() + 2..].trim();
        if rhs != "0" {
            return Err(format!("unsupported constraint rhs `{rhs}`"));
        }
    }
    let expr = Expr::parse(lhs.trim()).map_err(|e| e.to_string())?;
    Ok((expr, rel))
}

fn parse_ref(text: &str) -> Result<RowRef, String> {
    let rest = text.strip_prefix("ref:").ok_or("expected ref:")?;
    let (target, rename) = match rest.find('{') {
        None => (rest.trim().to_string(), Vec::new()),
        Some(pos) => {
            let target = rest[..pos].trim().to_string();
            let inner = rest[pos..]
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or("malformed rename block")?;
            let mut rename = Vec::new();
            for pair in inner.split(',') {
                let (a, b) = pair
                    .split_once('=')
                    .ok_or("rename pair must be from=to")?;
                rename.push((a.trim().to_string(), b.trim().to_string()));
            }
            (target, rename)
        }
    };
    Ok(RowRef { target, rename })
}

/// Splits a quoted comma-separated list: `"a", "b"` -> [a, b].
fn quoted_list(value: &str) -> Option<Vec<String>> {
    let mut out = Vec::new();
    let mut rest = value.trim();
    loop {
        rest = rest.strip_prefix('"')?;
        let end = rest.find('"')?;
        out.push(rest[..end].to_string());
        rest = rest[end + 1..].trim();
        if rest.is_empty() {
            return Some(out);
        }
        rest = rest.strip_prefix(',')?.trim_start();
    }
}

const COORDINATE_SYMBOLS: [&str; 14] = [
    "x", "y", "z", "u", "v", "w", "t", "f", "r", "theta", "phi", "U", "V", "W",
];

impl Catalog {
    pub fn parse(text: &str) -> Result<Catalog, CatalogError> {
        struct Pending {
            id: String,
            line: usize,
            fields: BTreeMap<String, (String, usize)>,
        }
        let mut pending: Vec<Pending> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = strip_comment(raw).trim().to_string();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix("[row") {
                let id = header
                    .trim()
                    .strip_suffix(']')
                    .map(str::trim)
                    .and_then(|s| s.strip_prefix('"'))
                    .and_then(|s| s.strip_suffix('"'))
                    .ok_or(CatalogError::Parse {
                        line,
                        message: "malformed section header".to_string(),
                    })?;
                pending.push(Pending {
                    id: id.to_string(),
                    line,
                    fields: BTreeMap::new(),
                });
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(CatalogError::Parse {
                    line,
                    message: format!("expected key = value, got `{trimmed}`"),
                });
            };
            let Some(current) = pending.last_mut() else {
                return Err(CatalogError::Parse {
                    line,
                    message: "key outside of a [row] section".to_string(),
                });
            };
            let key = key.trim().to_string();
            if current.fields.contains_key(&key) {
                return Err(CatalogError::Parse {
                    line,
                    message: format!("duplicate key `{key}` in row {}", current.id),
                });
            }
            current
                .fields
                .insert(key, (value.trim().to_string(), line));
        }

        let mut rows = Vec::with_capacity(pending.len());
        let mut index = HashMap::new();
        for p in pending {
            let row = build_row(&p.id, p.line, &p.fields)?;
            if index.insert(row.id.clone(), rows.len()).is_some() {
                return Err(CatalogError::DuplicateId(row.id));
            }
            rows.push(row);
        }
        let catalog = Catalog { rows, index };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn load(path: &std::path::Path) -> Result<Catalog, CatalogError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CatalogError::Io(format!("{}: {e}", path.display())))?;
        Catalog::parse(&text)
    }

    /// The transcription shipped with the crate.
    pub fn builtin() -> &'static Catalog {
        static CACHE: OnceLock<Catalog> = OnceLock::new();
        CACHE.get_or_init(|| Catalog::parse(BUILTIN_CATALOG).expect("builtin catalog parses"))
    }

    pub fn get(&self, id: &str) -> Option<&CatalogRow> {
        self.index.get(id).map(|i| &self.rows[*i])
    }

    /// Rows matching an id filter: exact full id, or a base id covering all
    /// its case sub-rows.
    pub fn matching(&self, id: &str) -> Vec<&CatalogRow> {
        self.rows
            .iter()
            .filter(|r| r.id == id || r.base_id == id)
            .collect()
    }

    fn resolve<'a>(
        &'a self,
        from: &str,
        reference: &RowRef,
        depth: usize,
        pick: impl Fn(&'a CatalogRow) -> Result<ResolveStep<'a>, CatalogError> + Copy,
    ) -> Result<Option<Expr>, CatalogError> {
        if depth > 16 {
            return Err(CatalogError::RefCycle {
                from: from.to_string(),
                to: reference.target.clone(),
            });
        }
        let Some(target) = self.get(&reference.target) else {
            return Err(CatalogError::DanglingRef {
                from: from.to_string(),
                to: reference.target.clone(),
            });
        };
        let resolved = match pick(target)? {
            ResolveStep::Done(e) => Some(e),
            ResolveStep::None => None,
            ResolveStep::Follow(next) => self.resolve(from, next, depth + 1, pick)?,
        };
        Ok(resolved.map(|e| apply_rename(&e, &reference.rename)))
    }

    /// The row's source expression with references resolved and reference
    /// parameter renames applied.
    pub fn resolve_source(&self, row: &CatalogRow) -> Result<Expr, CatalogError> {
        match &row.source {
            SourceEntry::Direct(e) => Ok(e.clone()),
            SourceEntry::Ref(r) => self
                .resolve(&row.id, r, 0, |target| {
                    Ok(match &target.source {
                        SourceEntry::Direct(e) => ResolveStep::Done(e.clone()),
                        SourceEntry::Ref(next) => ResolveStep::Follow(next),
                    })
                })?
                .ok_or_else(|| row_err(&row.id, "source reference resolved to nothing")),
        }
    }

    /// The row's invariant representation, `Ok(None)` for a "none" entry.
    pub fn resolve_invariant(&self, row: &CatalogRow) -> Result<Option<Expr>, CatalogError> {
        match &row.invariant {
            InvariantEntry::Direct(e) => Ok(Some(e.clone())),
            InvariantEntry::None => Ok(None),
            InvariantEntry::Ref(r) => self.resolve(&row.id, r, 0, |target| {
                Ok(match &target.invariant {
                    InvariantEntry::Direct(e) => ResolveStep::Done(e.clone()),
                    InvariantEntry::None => ResolveStep::None,
                    InvariantEntry::Ref(next) => ResolveStep::Follow(next),
                })
            }),
        }
    }

    fn validate(&self) -> Result<(), CatalogError> {
        // row counts per dimension must match the published tables
        const EXPECTED: [(u32, usize); 11] = [
            (1, 13),
            (2, 27),
            (3, 47),
            (4, 50),
            (5, 37),
            (6, 25),
            (7, 14),
            (8, 5),
            (9, 2),
            (10, 2),
            (11, 1),
        ];
        for (dim, expected) in EXPECTED {
            let got: BTreeSet<&str> = self
                .rows
                .iter()
                .filter(|r| r.dimension == dim)
                .map(|r| r.base_id.as_str())
                .collect();
            if got.len() != expected {
                return Err(CatalogError::Shape(format!(
                    "dimension {dim} has {} rows, expected {expected}",
                    got.len()
                )));
            }
        }
        for row in &self.rows {
            if row.combos.len() as u32 != row.dimension {
                return Err(row_err(
                    &row.id,
                    format!(
                        "dimension {} but {} generators",
                        row.dimension,
                        row.combos.len()
                    ),
                ));
            }
            // every reference must resolve (also catches cycles)
            self.resolve_source(row)?;
            self.resolve_invariant(row)?;
            // chart tag consistency: expressions use only the chart's
            // symbols plus parameters
            let coords: BTreeSet<String> = Chart::get(row.chart)
                .coords
                .iter()
                .map(|s| s.to_string())
                .collect();
            for (what, expr) in [
                ("source", self.resolve_source(row).ok()),
                ("invariant", self.resolve_invariant(row).ok().flatten()),
            ] {
                let Some(expr) = expr else { continue };
                for sym in expr.symbols() {
                    let is_coord = coords.contains(&sym);
                    let is_param = row.params.contains(&sym) || sym == "C";
                    let foreign = COORDINATE_SYMBOLS.contains(&sym.as_str()) && !is_coord;
                    if foreign {
                        return Err(row_err(
                            &row.id,
                            format!("{what} uses symbol `{sym}` outside chart {}", row.chart),
                        ));
                    }
                    if !is_coord && !is_param {
                        return Err(row_err(
                            &row.id,
                            format!("{what} uses undeclared parameter `{sym}`"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

enum ResolveStep<'a> {
    Done(Expr),
    None,
    Follow(&'a RowRef),
}

fn apply_rename(e: &Expr, rename: &[(String, String)]) -> Expr {
    if rename.is_empty() {
        return e.clone();
    }
    let bindings: BTreeMap<String, Expr> = rename
        .iter()
        .map(|(from, to)| (from.clone(), Expr::symbol(to)))
        .collect();
    e.substitute(&bindings)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, b) in line.bytes().enumerate() {
        match b {
            b'"' => in_quotes = !in_quotes,
            b'#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn build_row(
    id: &str,
    line: usize,
    fields: &BTreeMap<String, (String, usize)>,
) -> Result<CatalogRow, CatalogError> {
    let base_id: String = id
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    let dimension: u32 = base_id
        .split('.')
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or(CatalogError::Parse {
            line,
            message: format!("row id `{id}` is not of the form m.n"),
        })?;
    let field = |key: &str| -> Result<&(String, usize), CatalogError> {
        fields
            .get(key)
            .ok_or_else(|| row_err(id, format!("missing key `{key}`")))
    };
    for key in fields.keys() {
        if !["chart", "generators", "constraints", "source", "invariant"].contains(&key.as_str()) {
            return Err(row_err(id, format!("unknown key `{key}`")));
        }
    }
    let chart: ChartName = field("chart")?
        .0
        .parse()
        .map_err(|e: String| row_err(id, e))?;
    let generators_raw = &field("generators")?.0;
    let generator_list = quoted_list(generators_raw)
        .ok_or_else(|| row_err(id, "generators must be a quoted list"))?;
    let generator_texts: Vec<String> = generator_list
        .iter()
        .flat_map(|chunk| chunk.split(','))
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let mut combos = Vec::with_capacity(generator_texts.len());
    for text in &generator_texts {
        combos.push(combo_parse(text).map_err(|e| row_err(id, e))?);
    }
    let mut constraints = Vec::new();
    if let Some((value, _)) = fields.get("constraints") {
        let list = quoted_list(value)
            .ok_or_else(|| row_err(id, "constraints must be quoted strings"))?;
        for c in list {
            constraints.push(parse_constraint(&c).map_err(|e| row_err(id, e))?);
        }
    }
    let source_raw = &field("source")?.0;
    let source = if source_raw.starts_with("ref:") {
        SourceEntry::Ref(parse_ref(source_raw).map_err(|e| row_err(id, e))?)
    } else {
        let text = source_raw
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .ok_or_else(|| row_err(id, "source must be quoted or ref:m.n"))?;
        SourceEntry::Direct(Expr::parse(text).map_err(|e| row_err(id, e.to_string()))?)
    };
    let invariant_raw = &field("invariant")?.0;
    let invariant = if invariant_raw == "none" {
        InvariantEntry::None
    } else if invariant_raw.starts_with("ref:") {
        InvariantEntry::Ref(parse_ref(invariant_raw).map_err(|e| row_err(id, e))?)
    } else {
        let text = invariant_raw
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .ok_or_else(|| row_err(id, "invariant must be quoted, none, or ref:m.n"))?;
        InvariantEntry::Direct(Expr::parse(text).map_err(|e| row_err(id, e.to_string()))?)
    };
    let mut params = BTreeSet::new();
    for combo in &combos {
        for c in &combo.coeffs {
            params.extend(c.symbols());
        }
    }
    for (c, _) in &constraints {
        params.extend(c.symbols());
    }
    // formula symbols that are not chart coordinates are parameters too
    let coords: BTreeSet<String> = Chart::get(chart)
        .coords
        .iter()
        .map(|s| s.to_string())
        .collect();
    for entry in [
        match &source {
            SourceEntry::Direct(e) => Some(e.clone()),
            _ => None,
        },
        match &invariant {
            InvariantEntry::Direct(e) => Some(e.clone()),
            _ => None,
        },
    ]
    .into_iter()
    .flatten()
    {
        for sym in entry.symbols() {
            if !coords.contains(&sym) && !COORDINATE_SYMBOLS.contains(&sym.as_str()) {
                params.insert(sym);
            }
        }
    }
    Ok(CatalogRow {
        id: id.to_string(),
        base_id,
        dimension,
        chart,
        combos,
        generator_texts,
        constraints,
        source,
        invariant,
        params,
    })
}

/// A documented discrepancy between the published tables and what the
/// machinery derives. The catalog stores the published form; the verifier
/// reports these rows as errata, and the corrected form is itself verified.
#[derive(Debug, Clone)]
pub struct Erratum {
    /// Row (or printed generator) the erratum belongs to.
    pub subject: &'static str,
    /// Which published field disagrees.
    pub field: &'static str,
    /// Replacement that the engine verifies instead.
    pub corrected: &'static str,
    pub note: &'static str,
}

/// Certified transcription-level errata in the published tables.
pub fn known_errata() -> &'static [Erratum] {
    &[
        Erratum {
            subject: "X9c",
            field: "generator (cylindrical list)",
            corrected: "-r*cos(theta) dx + x*cos(theta) dr - x*sin(theta)/r dtheta \
                        + (-V*cos(theta) + W*sin(theta)) du + (u*cos(theta) - x*W*sin(theta)/r) dV \
                        + (x*V*sin(theta)/r - u*sin(theta)) dW",
            note: "the printed W coefficient omits the x*V*sin(theta)/r term \
                   (compare the symmetric x*V*cos(theta)/r term of X8c); the \
                   pushforward residual equals exactly the missing term",
        },
        Erratum {
            subject: "3.38",
            field: "invariant representation, second argument",
            corrected: "Omega4(u, v - y/t - tau*(x - alpha*z - beta*y/t)/(alpha*t^2 - sigma*t + tau*beta), w + t*(x - alpha*z - beta*y/t)/(alpha*t^2 - sigma*t + tau*beta), t)",
            note: "the printed second argument has the tau term with the wrong \
                   sign: applying sigma1+tau2+6 to the printed form leaves \
                   2*tau*(sigma - alpha*t - tau*beta/t)/(alpha*t^2 - sigma*t + tau*beta), \
                   while the sign-flipped form is annihilated by all three generators",
        },
    ]
}

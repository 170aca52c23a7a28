//! Vector fields, the eleven-dimensional symmetry algebra of the source-free
//! kinetic equation, Lie brackets, basis decomposition, and the constant
//! multipliers entering the determining equations.
//!
//! The Cartesian basis is
//!
//! ```text
//! X1 = dx           X4 = t dx + du    X7 = y dz - z dy + v dw - w dv
//! X2 = dy           X5 = t dy + dv    X8 = z dx - x dz + w du - u dw
//! X3 = dz           X6 = t dz + dw    X9 = x dy - y dx + u dv - v du
//! X10 = dt          X11 = t dt + x dx + y dy + z dz - f df
//! ```
//!
//! with the same fields expressed in cylindrical and spherical coordinates by
//! pushforward.

use crate::expr::{affine_coefficients, Expr};
use crate::geometry::{self, Chart, ChartName};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::sync::OnceLock;
use thiserror::Error;

/// First-order differential operator `xi^k d_k + eta d_f` on one chart.
///
/// `xi` is aligned with the chart's seven non-`f` coordinates; `eta` is the
/// coefficient of `d_f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    pub chart: ChartName,
    pub xi: Vec<Expr>,
    pub eta: Expr,
}

#[derive(Debug, Clone, Error)]
pub enum LieAlgError {
    #[error("vector fields live on different charts: {0} vs {1}")]
    ChartMismatch(ChartName, ChartName),
    #[error("not in the span of the basis: residual {residual} in the {slot} coefficient")]
    NotInSpan { slot: String, residual: Expr },
    #[error("decomposition requires affine coefficients, found {0}")]
    NotAffine(Expr),
}

impl VectorField {
    pub fn zero(chart: ChartName) -> VectorField {
        VectorField {
            chart,
            xi: vec![Expr::zero(); 7],
            eta: Expr::zero(),
        }
    }

    pub fn new(chart: ChartName, xi: Vec<Expr>, eta: Expr) -> VectorField {
        assert_eq!(xi.len(), 7);
        VectorField { chart, xi, eta }
    }

    /// Builds a field on `chart` from (coordinate name, coefficient) pairs;
    /// missing coordinates get zero.
    pub fn from_pairs(chart: ChartName, pairs: &[(&str, Expr)]) -> VectorField {
        let coords = Chart::get(chart).coords;
        let mut xi = vec![Expr::zero(); 7];
        let mut eta = Expr::zero();
        for (name, coeff) in pairs {
            if *name == "f" {
                eta = coeff.clone();
                continue;
            }
            let idx = coords[..7]
                .iter()
                .position(|c| c == name)
                .unwrap_or_else(|| panic!("coordinate {name} not on chart {chart}"));
            xi[idx] = coeff.clone();
        }
        VectorField { chart, xi, eta }
    }

    /// All eight coefficients in chart order, `eta` last.
    pub fn coefficients(&self) -> Vec<Expr> {
        let mut out = self.xi.clone();
        out.push(self.eta.clone());
        out
    }

    /// Applies the field as a derivation: `sum xi^k de/d coord_k + eta de/df`.
    pub fn apply(&self, e: &Expr) -> Expr {
        let coords = Chart::get(self.chart).coords;
        let mut parts = Vec::with_capacity(8);
        for (k, coeff) in self.xi.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let d = e.differentiate(coords[k]);
            if d.is_zero() {
                continue;
            }
            parts.push(Expr::mul(vec![coeff.clone(), d]));
        }
        if !self.eta.is_zero() {
            let d = e.differentiate("f");
            if !d.is_zero() {
                parts.push(Expr::mul(vec![self.eta.clone(), d]));
            }
        }
        Expr::add(parts)
    }

    pub fn scale(&self, factor: &Expr) -> VectorField {
        VectorField {
            chart: self.chart,
            xi: self
                .xi
                .iter()
                .map(|c| Expr::mul(vec![factor.clone(), c.clone()]))
                .collect(),
            eta: Expr::mul(vec![factor.clone(), self.eta.clone()]),
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, LieAlgError> {
        if self.chart != other.chart {
            return Err(LieAlgError::ChartMismatch(self.chart, other.chart));
        }
        Ok(VectorField {
            chart: self.chart,
            xi: self
                .xi
                .iter()
                .zip(&other.xi)
                .map(|(a, b)| Expr::add(vec![a.clone(), b.clone()]))
                .collect(),
            eta: Expr::add(vec![self.eta.clone(), other.eta.clone()]),
        })
    }

    pub fn simplified(&self) -> VectorField {
        VectorField {
            chart: self.chart,
            xi: self.xi.iter().map(|c| c.simplify()).collect(),
            eta: self.eta.simplify(),
        }
    }

    pub fn is_zero_symbolic(&self) -> bool {
        self.coefficients().iter().all(|c| c.simplify().is_zero())
    }
}

/// Lie bracket `[a, b]`, coefficients `a(b^k) - b(a^k)` per coordinate.
pub fn lie_bracket(a: &VectorField, b: &VectorField) -> Result<VectorField, LieAlgError> {
    if a.chart != b.chart {
        return Err(LieAlgError::ChartMismatch(a.chart, b.chart));
    }
    let xi = a
        .xi
        .iter()
        .zip(&b.xi)
        .map(|(ak, bk)| Expr::sub(a.apply(bk), b.apply(ak)).simplify())
        .collect();
    let eta = Expr::sub(a.apply(&b.eta), b.apply(&a.eta)).simplify();
    Ok(VectorField {
        chart: a.chart,
        xi,
        eta,
    })
}

fn cartesian_basis() -> Vec<VectorField> {
    let c = ChartName::Cartesian;
    let e = Expr::symbol;
    let one = Expr::one();
    let t = e("t");
    vec![
        VectorField::from_pairs(c, &[("x", one.clone())]),
        VectorField::from_pairs(c, &[("y", one.clone())]),
        VectorField::from_pairs(c, &[("z", one.clone())]),
        VectorField::from_pairs(c, &[("x", t.clone()), ("u", one.clone())]),
        VectorField::from_pairs(c, &[("y", t.clone()), ("v", one.clone())]),
        VectorField::from_pairs(c, &[("z", t.clone()), ("w", one.clone())]),
        VectorField::from_pairs(
            c,
            &[
                ("z", e("y")),
                ("y", Expr::neg(e("z"))),
                ("w", e("v")),
                ("v", Expr::neg(e("w"))),
            ],
        ),
        VectorField::from_pairs(
            c,
            &[
                ("x", e("z")),
                ("z", Expr::neg(e("x"))),
                ("u", e("w")),
                ("w", Expr::neg(e("u"))),
            ],
        ),
        VectorField::from_pairs(
            c,
            &[
                ("y", e("x")),
                ("x", Expr::neg(e("y"))),
                ("v", e("u")),
                ("u", Expr::neg(e("v"))),
            ],
        ),
        VectorField::from_pairs(c, &[("t", one)]),
        VectorField::from_pairs(
            c,
            &[
                ("t", t),
                ("x", e("x")),
                ("y", e("y")),
                ("z", e("z")),
                ("f", Expr::neg(e("f"))),
            ],
        ),
    ]
}

/// The eleven basis generators on the requested chart. Cartesian is the
/// defining presentation; other charts are computed once by pushforward and
/// cached.
pub fn l11_basis(chart: ChartName) -> &'static [VectorField] {
    static CART: OnceLock<Vec<VectorField>> = OnceLock::new();
    static CYL: OnceLock<Vec<VectorField>> = OnceLock::new();
    static SPH: OnceLock<Vec<VectorField>> = OnceLock::new();
    match chart {
        ChartName::Cartesian => CART.get_or_init(cartesian_basis),
        ChartName::Cylindrical => CYL.get_or_init(|| {
            cartesian_basis()
                .iter()
                .map(|vf| {
                    geometry::pushforward(vf, ChartName::Cylindrical)
                        .expect("basis pushforward to cylindrical")
                })
                .collect()
        }),
        ChartName::Spherical => SPH.get_or_init(|| {
            cartesian_basis()
                .iter()
                .map(|vf| {
                    geometry::pushforward(vf, ChartName::Spherical)
                        .expect("basis pushforward to spherical")
                })
                .collect()
        }),
    }
}

/// Combination `sum_j c^j X_j` of the eleven basis generators. Coefficients
/// are rationals or parameter symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisCombo {
    pub coeffs: Vec<Expr>,
}

impl BasisCombo {
    pub fn zero() -> BasisCombo {
        BasisCombo {
            coeffs: vec![Expr::zero(); 11],
        }
    }

    pub fn single(index: usize) -> BasisCombo {
        let mut c = BasisCombo::zero();
        c.coeffs[index] = Expr::one();
        c
    }

    pub fn from_rationals(values: &[BigRational]) -> BasisCombo {
        assert_eq!(values.len(), 11);
        BasisCombo {
            coeffs: values.iter().map(|v| Expr::rational(v.clone())).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Materializes the combination on a chart.
    pub fn realize(&self, chart: ChartName) -> VectorField {
        let basis = l11_basis(chart);
        let mut acc = VectorField::zero(chart);
        for (c, x) in self.coeffs.iter().zip(basis) {
            if c.is_zero() {
                continue;
            }
            acc = acc.add(&x.scale(c)).expect("same chart");
        }
        acc
    }

    /// Substitutes parameter values into the coefficients.
    pub fn substitute(&self, bindings: &BTreeMap<String, Expr>) -> BasisCombo {
        BasisCombo {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.substitute(bindings))
                .collect(),
        }
    }
}

const CART_SYMBOLS: [&str; 8] = ["x", "y", "z", "u", "v", "w", "t", "f"];

/// Exact decomposition of a Cartesian field in the basis. Works because all
/// basis coefficients are affine in the coordinates, so matching the finite
/// monomial set {1, x, y, z, u, v, w, t, f} slot by slot is a linear system
/// over the rationals.
pub fn decompose_in_basis(vf: &VectorField) -> Result<BasisCombo, LieAlgError> {
    assert_eq!(
        vf.chart,
        ChartName::Cartesian,
        "decomposition is defined against the Cartesian basis"
    );
    let basis = l11_basis(ChartName::Cartesian);
    // rows: (slot, monomial) equations; columns: 11 unknowns + rhs
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let vf_coeffs = vf.coefficients();
    let basis_coeffs: Vec<Vec<Expr>> = basis.iter().map(|b| b.coefficients()).collect();
    for slot in 0..8 {
        let target = vf_coeffs[slot].simplify();
        let Some((t_const, t_lin)) = affine_coefficients(&target, &CART_SYMBOLS) else {
            return Err(LieAlgError::NotAffine(target));
        };
        for mono in 0..=CART_SYMBOLS.len() {
            let mut row = Vec::with_capacity(12);
            for bc in &basis_coeffs {
                let (b_const, b_lin) =
                    affine_coefficients(&bc[slot], &CART_SYMBOLS).expect("basis is affine");
                row.push(if mono == 0 {
                    b_const
                } else {
                    b_lin[mono - 1].clone()
                });
            }
            row.push(if mono == 0 {
                t_const.clone()
            } else {
                t_lin[mono - 1].clone()
            });
            if row.iter().any(|v| !v.is_zero()) {
                rows.push(row);
            }
        }
    }
    let solution = solve_rational(&mut rows, 11).map_err(|(slot, residual)| {
        LieAlgError::NotInSpan {
            slot: format!("equation {slot}"),
            residual: Expr::rational(residual),
        }
    })?;
    let combo = BasisCombo::from_rationals(&solution);
    // Confirm coefficient-wise.
    let rebuilt = combo.realize(ChartName::Cartesian);
    for (slot, (a, b)) in rebuilt
        .coefficients()
        .iter()
        .zip(vf.coefficients())
        .enumerate()
    {
        let residual = Expr::sub(a.clone(), b.clone()).simplify();
        if !residual.is_zero() {
            return Err(LieAlgError::NotInSpan {
                slot: CART_SYMBOLS[slot].to_string(),
                residual,
            });
        }
    }
    Ok(combo)
}

/// Gaussian elimination over the rationals; returns the unique solution of
/// an overdetermined consistent system, or the index and residual of an
/// inconsistent row.
fn solve_rational(
    rows: &mut Vec<Vec<BigRational>>,
    unknowns: usize,
) -> Result<Vec<BigRational>, (usize, BigRational)> {
    let mut pivot_row = 0;
    let mut pivots: Vec<Option<usize>> = vec![None; unknowns];
    for col in 0..unknowns {
        let Some(found) = (pivot_row..rows.len()).find(|r| !rows[*r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, found);
        let inv = BigRational::one() / rows[pivot_row][col].clone();
        for v in rows[pivot_row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..rows.len() {
            if r != pivot_row && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                let pivot = rows[pivot_row].clone();
                for (v, p) in rows[r].iter_mut().zip(pivot.iter()) {
                    *v -= &factor * p;
                }
            }
        }
        pivots[col] = Some(pivot_row);
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    for (idx, row) in rows.iter().enumerate() {
        let all_zero = row[..unknowns].iter().all(|v| v.is_zero());
        if all_zero && !row[unknowns].is_zero() {
            return Err((idx, row[unknowns].clone()));
        }
    }
    let mut solution = vec![BigRational::zero(); unknowns];
    for (col, pivot) in pivots.iter().enumerate() {
        if let Some(r) = pivot {
            solution[col] = rows[*r][unknowns].clone();
        }
    }
    Ok(solution)
}

/// Complete 11x11 bracket table decomposed in the basis.
pub fn commutator_table() -> Result<Vec<Vec<BasisCombo>>, LieAlgError> {
    let basis = l11_basis(ChartName::Cartesian);
    let mut table = vec![vec![BasisCombo::zero(); 11]; 11];
    for i in 0..11 {
        for j in (i + 1)..11 {
            let bracket = lie_bracket(&basis[i], &basis[j])?;
            let combo = decompose_in_basis(&bracket)?;
            let mut negated = combo.clone();
            negated.coeffs = negated.coeffs.iter().map(|c| Expr::neg(c.clone())).collect();
            table[i][j] = combo;
            table[j][i] = negated;
        }
    }
    Ok(table)
}

/// The multiplier h in the determining relation: the scaling generator
/// contributes -2, all others 0, so a combination contributes -2 c^11.
pub fn h_multiplier(combo: &BasisCombo) -> Expr {
    Expr::mul(vec![Expr::int(-2), combo.coeffs[10].clone()]).simplify()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> &'static [VectorField] {
        l11_basis(ChartName::Cartesian)
    }

    #[test]
    fn apply_scaling_to_ft_vanishes() {
        let x11 = &basis()[10];
        let ft = Expr::mul(vec![Expr::symbol("f"), Expr::symbol("t")]);
        assert!(x11.apply(&ft).simplify().is_zero());
    }

    #[test]
    fn apply_galilean_to_its_invariant() {
        // X4 (u - x/t) = 1 - 1 = 0
        let x4 = &basis()[3];
        let inv = Expr::sub(
            Expr::symbol("u"),
            Expr::div(Expr::symbol("x"), Expr::symbol("t")),
        );
        assert!(x4.apply(&inv).simplify().is_zero());
    }

    #[test]
    fn bracket_translations_commute() {
        let b = basis();
        assert!(lie_bracket(&b[0], &b[1]).unwrap().is_zero_symbolic());
    }

    #[test]
    fn bracket_time_with_galilean() {
        // [X10, X4] = X1
        let b = basis();
        let br = lie_bracket(&b[9], &b[3]).unwrap();
        let combo = decompose_in_basis(&br).unwrap();
        assert!(combo.coeffs[0].is_one());
        for (i, c) in combo.coeffs.iter().enumerate() {
            if i != 0 {
                assert!(c.is_zero());
            }
        }
    }

    #[test]
    fn bracket_x1_x9_is_x2() {
        let b = basis();
        let br = lie_bracket(&b[0], &b[8]).unwrap();
        let combo = decompose_in_basis(&br).unwrap();
        assert!(combo.coeffs[1].is_one());
    }

    #[test]
    fn x_df_not_in_span() {
        let vf = VectorField::from_pairs(ChartName::Cartesian, &[("f", Expr::symbol("x"))]);
        assert!(matches!(
            decompose_in_basis(&vf),
            Err(LieAlgError::NotInSpan { .. })
        ));
    }

    #[test]
    fn h_multiplier_values() {
        assert_eq!(h_multiplier(&BasisCombo::single(10)), Expr::int(-2));
        assert!(h_multiplier(&BasisCombo::single(3)).is_zero());
        // beta X4 + X7 + alpha X11 -> -2 alpha
        let mut combo = BasisCombo::zero();
        combo.coeffs[3] = Expr::symbol("beta");
        combo.coeffs[6] = Expr::one();
        combo.coeffs[10] = Expr::symbol("alpha");
        let expected = Expr::mul(vec![Expr::int(-2), Expr::symbol("alpha")]);
        assert_eq!(h_multiplier(&combo), expected.simplify());
    }

    #[test]
    fn apply_is_a_derivation() {
        let b = basis();
        let e1 = Expr::parse("x*u + t^2").unwrap();
        let e2 = Expr::parse("f*y - w").unwrap();
        for vf in [&b[3], &b[6], &b[10]] {
            let lhs = vf.apply(&Expr::mul(vec![e1.clone(), e2.clone()]));
            let rhs = Expr::add(vec![
                Expr::mul(vec![vf.apply(&e1), e2.clone()]),
                Expr::mul(vec![e1.clone(), vf.apply(&e2)]),
            ]);
            assert!(Expr::sub(lhs, rhs).simplify().is_zero());
        }
    }
}

/// Certifies the dilation multiplier -2: under the one-parameter group of
/// the scaling generator the transformed distribution is
/// `fbar(xbar, v, tbar) = e^-a f0(xbar e^-a, v, tbar e^-a)`, and both the
/// transport part (exactly, by the chain rule) and the collision part
/// (statistically, by bilinearity with unscaled velocities) pick up the
/// factor `e^-2a`.
pub struct ScalingCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub fn verify_x11_scaling(
    f0: &Expr,
    a: f64,
    cfg: &crate::collision::McConfig,
) -> Result<Vec<ScalingCheck>, crate::collision::CollisionError> {
    use crate::classify::transport_operator;
    let mut out = Vec::new();

    // 1. chain rule, symbolically, for an arbitrary smooth profile:
    //    T(s F(sx, sy, sz, u, v, w, st)) = s^2 (T F)(sx, sy, sz, u, v, w, st)
    let args: Vec<Expr> = ["x", "y", "z", "u", "v", "w", "t"]
        .iter()
        .map(|s| Expr::symbol(s))
        .collect();
    let generic = Expr::abstract_fn("F", 7, args);
    let s = Expr::symbol("s");
    let scale: std::collections::BTreeMap<String, Expr> = ["x", "y", "z", "t"]
        .iter()
        .map(|c| {
            (
                c.to_string(),
                Expr::mul(vec![s.clone(), Expr::symbol(c)]),
            )
        })
        .collect();
    let transport = transport_operator(ChartName::Cartesian);
    let fbar = Expr::mul(vec![s.clone(), generic.substitute(&scale)]);
    let lhs = transport.apply(&fbar);
    let rhs = Expr::mul(vec![
        Expr::pow(s.clone(), Expr::int(2)),
        transport.apply(&generic).substitute(&scale),
    ]);
    let symbolic_ok = Expr::sub(lhs, rhs).simplify().is_zero();
    out.push(ScalingCheck {
        name: "transport-chain-rule-symbolic".to_string(),
        passed: symbolic_ok,
        detail: "T(fbar) = s^2 (T f0) o scale for abstract f0".to_string(),
    });

    // 2. transport ratio at a sample point for the concrete profile
    let point: std::collections::BTreeMap<String, f64> = [
        ("x", 0.7),
        ("y", -0.4),
        ("z", 0.9),
        ("u", 0.3),
        ("v", -0.2),
        ("w", 0.5),
        ("t", 1.3),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), *v))
    .collect();
    let es = (-a).exp();
    let mut scaled_point = point.clone();
    for c in ["x", "y", "z", "t"] {
        scaled_point.insert(c.to_string(), point[c] / es);
    }
    let transported = transport.apply(f0);
    let oracle = crate::expr::HashOracle { seed: 0 };
    let base = transported
        .eval_numeric(&point, &oracle)
        .expect("profile evaluates");
    let concrete_scale: std::collections::BTreeMap<String, Expr> = ["x", "y", "z", "t"]
        .iter()
        .map(|c| {
            (
                c.to_string(),
                Expr::mul(vec![
                    Expr::symbol(c),
                    Expr::symbol("sfac"),
                ]),
            )
        })
        .collect();
    let mut fbar_env = scaled_point.clone();
    fbar_env.insert("sfac".to_string(), es);
    let fbar_concrete = Expr::mul(vec![
        Expr::symbol("sfac"),
        f0.substitute(&concrete_scale),
    ]);
    let transported_bar = transport.apply(&fbar_concrete);
    let bar = transported_bar
        .eval_numeric(&fbar_env, &oracle)
        .expect("scaled profile evaluates");
    let ratio = bar / base;
    let expected = (-2.0 * a).exp();
    let diff_ok = (ratio - expected).abs() <= 1e-10 * (1.0 + expected);
    out.push(ScalingCheck {
        name: "transport-ratio-numeric".to_string(),
        passed: diff_ok,
        detail: format!("ratio {ratio} vs e^(-2a) = {expected}"),
    });

    // 3. collision part: J(fbar,fbar)(xbar, v, tbar) = e^-2a J(f0,f0)(x, v, t)
    let f0_closure = {
        let f0 = f0.clone();
        move |x: &crate::collision::Vec3, v: &crate::collision::Vec3, t: f64| -> f64 {
            let env: std::collections::BTreeMap<String, f64> = [
                ("x", x[0]),
                ("y", x[1]),
                ("z", x[2]),
                ("u", v[0]),
                ("v", v[1]),
                ("w", v[2]),
                ("t", t),
            ]
            .iter()
            .map(|(k, val)| (k.to_string(), *val))
            .collect();
            f0.eval_numeric(&env, &crate::expr::HashOracle { seed: 0 })
                .unwrap_or(f64::NAN)
        }
    };
    let x0 = [0.7, -0.4, 0.9];
    let t0 = 1.3;
    let v0 = [0.3, -0.2, 0.5];
    let xbar = [x0[0] / es, x0[1] / es, x0[2] / es];
    let tbar = t0 / es;
    let fbar_closure = {
        let f0 = f0_closure.clone();
        move |x: &crate::collision::Vec3, v: &crate::collision::Vec3, t: f64| -> f64 {
            es * f0(&[x[0] * es, x[1] * es, x[2] * es], v, t * es)
        }
    };
    let kernel = crate::collision::CollisionKernel::pseudo_maxwell();
    let base_est =
        crate::collision::collision_integral_mc(&f0_closure, &x0, &v0, t0, &kernel, cfg)?;
    let bar_est =
        crate::collision::collision_integral_mc(&fbar_closure, &xbar, &v0, tbar, &kernel, cfg)?;
    let target = expected * base_est.value.value;
    let tol = 3.0
        * (bar_est.value.stderr.powi(2) + (expected * base_est.value.stderr).powi(2)).sqrt()
        + 1e-12 * target.abs();
    let coll_ok = (bar_est.value.value - target).abs() <= tol;
    out.push(ScalingCheck {
        name: "collision-ratio-3sigma".to_string(),
        passed: coll_ok,
        detail: format!(
            "J(fbar) = {} vs e^(-2a) J(f0) = {} (tol {tol})",
            bar_est.value.value, target
        ),
    });
    Ok(out)
}

//! Coordinate charts, point and vector-field transformations, and the
//! transcribed appendix formulas they are checked against.
//!
//! Three charts share the time and distribution coordinates `t`, `f`:
//!
//! * cartesian `x y z u v w t f`
//! * cylindrical `x r theta u V W t f` with `y = r cos(theta)`,
//!   `z = r sin(theta)`, `v = V cos - W sin`, `w = V sin + W cos`
//! * spherical `r theta phi U V W t f` with the polar angle measured from
//!   the `z` axis
//!
//! A vector field is pushed to another chart by solving `J b = a o F` where
//! `F` is the forward map of the target chart and `J` its Jacobian; no
//! inverse map enters, so the computation stays polynomial in `sin`/`cos`
//! atoms and lands in symbolic normal form.

use crate::expr::{DomainGuard, Expr, ZeroVerdict};
use crate::liealg::VectorField;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ChartName {
    Cartesian,
    Cylindrical,
    Spherical,
}

impl fmt::Display for ChartName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChartName::Cartesian => "cartesian",
            ChartName::Cylindrical => "cylindrical",
            ChartName::Spherical => "spherical",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for ChartName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cartesian" => Ok(ChartName::Cartesian),
            "cylindrical" => Ok(ChartName::Cylindrical),
            "spherical" => Ok(ChartName::Spherical),
            other => Err(format!("unknown chart `{other}`")),
        }
    }
}

pub const CART_COORDS: [&str; 8] = ["x", "y", "z", "u", "v", "w", "t", "f"];

#[derive(Debug, Clone)]
pub struct Chart {
    pub name: ChartName,
    pub coords: [&'static str; 8],
    /// Cartesian coordinates as expressions in this chart's symbols,
    /// aligned with [`CART_COORDS`].
    pub to_cartesian: Vec<Expr>,
    /// This chart's coordinates as expressions in Cartesian symbols.
    /// Valid on the all-positive quadrant (angles in (0, pi/2)); numeric
    /// transforms use atan2 instead and cover the full guard region.
    pub from_cartesian: Vec<Expr>,
}

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("pushforward only starts from the cartesian chart, got {0}")]
    UnsupportedSource(ChartName),
    #[error("jacobian is symbolically singular at column {0}")]
    Singular(usize),
    #[error("pushforward verification failed on {coord}: residual {residual}")]
    Residual { coord: String, residual: Expr },
    #[error("guard violation: {0}")]
    GuardViolation(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

fn p(text: &str) -> Expr {
    Expr::parse(text).expect("chart table expression")
}

fn cartesian_chart() -> Chart {
    let ids: Vec<Expr> = CART_COORDS.iter().map(|c| Expr::symbol(c)).collect();
    Chart {
        name: ChartName::Cartesian,
        coords: CART_COORDS,
        to_cartesian: ids.clone(),
        from_cartesian: ids,
    }
}

fn cylindrical_chart() -> Chart {
    Chart {
        name: ChartName::Cylindrical,
        coords: ["x", "r", "theta", "u", "V", "W", "t", "f"],
        to_cartesian: vec![
            p("x"),
            p("r*cos(theta)"),
            p("r*sin(theta)"),
            p("u"),
            p("V*cos(theta) - W*sin(theta)"),
            p("V*sin(theta) + W*cos(theta)"),
            p("t"),
            p("f"),
        ],
        from_cartesian: vec![
            p("x"),
            p("sqrt(y^2 + z^2)"),
            p("arctan(z/y)"),
            p("u"),
            p("(v*y + w*z)/sqrt(y^2 + z^2)"),
            p("(w*y - v*z)/sqrt(y^2 + z^2)"),
            p("t"),
            p("f"),
        ],
    }
}

fn spherical_chart() -> Chart {
    Chart {
        name: ChartName::Spherical,
        coords: ["r", "theta", "phi", "U", "V", "W", "t", "f"],
        to_cartesian: vec![
            p("r*sin(theta)*cos(phi)"),
            p("r*sin(theta)*sin(phi)"),
            p("r*cos(theta)"),
            p("U*sin(theta)*cos(phi) + V*cos(theta)*cos(phi) - W*sin(phi)"),
            p("U*sin(theta)*sin(phi) + V*cos(theta)*sin(phi) + W*cos(phi)"),
            p("U*cos(theta) - V*sin(theta)"),
            p("t"),
            p("f"),
        ],
        from_cartesian: vec![
            p("sqrt(x^2 + y^2 + z^2)"),
            p("arctan(sqrt(x^2 + y^2)/z)"),
            p("arctan(y/x)"),
            p("(x*u + y*v + z*w)/sqrt(x^2 + y^2 + z^2)"),
            p("(z*(x*u + y*v) - w*(x^2 + y^2))/(sqrt(x^2 + y^2)*sqrt(x^2 + y^2 + z^2))"),
            p("(v*x - u*y)/sqrt(x^2 + y^2)"),
            p("t"),
            p("f"),
        ],
    }
}

impl Chart {
    pub fn get(name: ChartName) -> &'static Chart {
        static CARTESIAN: OnceLock<Chart> = OnceLock::new();
        static CYLINDRICAL: OnceLock<Chart> = OnceLock::new();
        static SPHERICAL: OnceLock<Chart> = OnceLock::new();
        match name {
            ChartName::Cartesian => CARTESIAN.get_or_init(cartesian_chart),
            ChartName::Cylindrical => CYLINDRICAL.get_or_init(cylindrical_chart),
            ChartName::Spherical => SPHERICAL.get_or_init(spherical_chart),
        }
    }

    /// Bindings mapping Cartesian symbols to this chart's forward map.
    pub fn cartesian_bindings(&self) -> BTreeMap<String, Expr> {
        CART_COORDS
            .iter()
            .zip(&self.to_cartesian)
            .map(|(name, e)| (name.to_string(), e.clone()))
            .collect()
    }

    /// Numeric chart -> cartesian transform.
    pub fn point_to_cartesian(
        &self,
        point: &BTreeMap<String, f64>,
    ) -> Result<BTreeMap<String, f64>, GeometryError> {
        let mut out = BTreeMap::new();
        for (name, expr) in CART_COORDS.iter().zip(&self.to_cartesian) {
            let v = expr
                .eval_seeded(point, 0)
                .map_err(|e| GeometryError::Eval(e.to_string()))?;
            out.insert(name.to_string(), v);
        }
        Ok(out)
    }

    /// Numeric cartesian -> chart transform via atan2, valid on the whole
    /// guard region (r > 0, sin(theta) != 0 for spherical).
    pub fn point_from_cartesian(
        &self,
        cart: &BTreeMap<String, f64>,
    ) -> Result<BTreeMap<String, f64>, GeometryError> {
        let get = |name: &str| cart.get(name).copied().unwrap_or(0.0);
        let (x, y, z) = (get("x"), get("y"), get("z"));
        let (u, v, w) = (get("u"), get("v"), get("w"));
        let (t, f) = (
            cart.get("t").copied().unwrap_or(1.0),
            cart.get("f").copied().unwrap_or(1.0),
        );
        let mut out = BTreeMap::new();
        match self.name {
            ChartName::Cartesian => {
                return Ok(cart.clone());
            }
            ChartName::Cylindrical => {
                let r = y.hypot(z);
                if r < 1e-12 {
                    return Err(GeometryError::GuardViolation(
                        "cylindrical axis r = 0".to_string(),
                    ));
                }
                let mut theta = z.atan2(y);
                if theta < 0.0 {
                    theta += std::f64::consts::TAU;
                }
                let (st, ct) = theta.sin_cos();
                out.insert("x".to_string(), x);
                out.insert("r".to_string(), r);
                out.insert("theta".to_string(), theta);
                out.insert("u".to_string(), u);
                out.insert("V".to_string(), v * ct + w * st);
                out.insert("W".to_string(), -v * st + w * ct);
            }
            ChartName::Spherical => {
                let rho = x.hypot(y);
                let r = rho.hypot(z);
                if r < 1e-12 || rho < 1e-12 {
                    return Err(GeometryError::GuardViolation(
                        "spherical chart singular at rho = 0 or r = 0".to_string(),
                    ));
                }
                let theta = rho.atan2(z);
                let mut phi = y.atan2(x);
                if phi < 0.0 {
                    phi += std::f64::consts::TAU;
                }
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = phi.sin_cos();
                out.insert("r".to_string(), r);
                out.insert("theta".to_string(), theta);
                out.insert("phi".to_string(), phi);
                out.insert("U".to_string(), u * st * cp + v * st * sp + w * ct);
                out.insert("V".to_string(), u * ct * cp + v * ct * sp - w * st);
                out.insert("W".to_string(), -u * sp + v * cp);
            }
        }
        out.insert("t".to_string(), t);
        out.insert("f".to_string(), f);
        Ok(out)
    }
}

/// Numeric point transformation between charts, through the Cartesian hub.
pub fn to_chart(
    point: &BTreeMap<String, f64>,
    source: ChartName,
    target: ChartName,
) -> Result<BTreeMap<String, f64>, GeometryError> {
    let mut complete = point.clone();
    for coord in Chart::get(source).coords {
        complete
            .entry(coord.to_string())
            .or_insert(if coord == "t" || coord == "f" { 1.0 } else { 0.0 });
    }
    let cart = Chart::get(source).point_to_cartesian(&complete)?;
    Chart::get(target).point_from_cartesian(&cart)
}

/// Inverse Jacobian of the chart: `K[k][i] = (d chart_k / d cart_i) o F`,
/// computed by differentiating the inverse map and composing with the
/// forward map. The arctan/sqrt atoms of the inverse map disappear under
/// differentiation (their derivatives are algebraic), so the composed
/// entries normalize to rational trigonometric expressions valid on the
/// whole guard region. Cached per chart.
fn inverse_jacobian(chart: &Chart) -> &'static Vec<Vec<Expr>> {
    static CACHE: OnceLock<std::sync::Mutex<BTreeMap<ChartName, &'static Vec<Vec<Expr>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(k) = guard.get(&chart.name) {
        return k;
    }
    let bindings = chart.cartesian_bindings();
    let mut rows = Vec::with_capacity(8);
    for inv_k in &chart.from_cartesian {
        let mut row = Vec::with_capacity(8);
        for cart_i in CART_COORDS {
            let d = inv_k.differentiate(cart_i);
            row.push(d.substitute(&bindings).simplify());
        }
        rows.push(row);
    }
    let leaked: &'static Vec<Vec<Expr>> = Box::leak(Box::new(rows));
    guard.insert(chart.name, leaked);
    leaked
}

/// Pushes a Cartesian vector field to the target chart: the coefficient of
/// the k-th target coordinate is `sum_i K[k][i] (a_i o F)` with `K` the
/// inverse Jacobian. The result is verified against the forward Jacobian
/// before being returned.
pub fn pushforward(vf: &VectorField, target: ChartName) -> Result<VectorField, GeometryError> {
    if vf.chart == target {
        return Ok(vf.clone());
    }
    if vf.chart != ChartName::Cartesian {
        return Err(GeometryError::UnsupportedSource(vf.chart));
    }
    let chart = Chart::get(target);
    let bindings = chart.cartesian_bindings();
    let rhs: Vec<Expr> = vf
        .coefficients()
        .iter()
        .map(|c| c.substitute(&bindings).simplify())
        .collect();
    let kmat = inverse_jacobian(chart);
    let mut sol = Vec::with_capacity(8);
    for row in kmat {
        let terms: Vec<Expr> = row
            .iter()
            .zip(&rhs)
            .filter(|(k_ki, a_i)| !k_ki.is_zero() && !a_i.is_zero())
            .map(|(k_ki, a_i)| Expr::mul(vec![k_ki.clone(), a_i.clone()]))
            .collect();
        sol.push(Expr::add(terms).simplify());
    }
    // verify J b = rhs coefficient-wise
    for (i, fi) in chart.to_cartesian.iter().enumerate() {
        let mut acc = Vec::with_capacity(9);
        for (k, ck) in chart.coords.iter().enumerate() {
            let j_ik = fi.differentiate(ck);
            if j_ik.is_zero() || sol[k].is_zero() {
                continue;
            }
            acc.push(Expr::mul(vec![j_ik, sol[k].clone()]));
        }
        acc.push(Expr::neg(rhs[i].clone()));
        let residual = Expr::add(acc).simplify();
        if !residual.is_zero() {
            return Err(GeometryError::Residual {
                coord: CART_COORDS[i].to_string(),
                residual,
            });
        }
    }
    Ok(VectorField::new(
        target,
        sol[..7].to_vec(),
        sol[7].clone(),
    ))
}

/// The appendix list of basis generators in cylindrical coordinates,
/// transcribed as printed.
pub fn printed_cylindrical_generators() -> Vec<(String, VectorField)> {
    let c = ChartName::Cylindrical;
    let vf = |pairs: &[(&str, &str)]| {
        let pairs: Vec<(&str, Expr)> = pairs.iter().map(|(k, v)| (*k, p(v))).collect();
        VectorField::from_pairs(c, &pairs)
    };
    vec![
        ("X1c".to_string(), vf(&[("x", "1")])),
        (
            "X2c".to_string(),
            vf(&[
                ("r", "cos(theta)"),
                ("theta", "-sin(theta)/r"),
                ("V", "-W*sin(theta)/r"),
                ("W", "V*sin(theta)/r"),
            ]),
        ),
        (
            "X3c".to_string(),
            vf(&[
                ("r", "sin(theta)"),
                ("theta", "cos(theta)/r"),
                ("V", "W*cos(theta)/r"),
                ("W", "-V*cos(theta)/r"),
            ]),
        ),
        ("X4c".to_string(), vf(&[("x", "t"), ("u", "1")])),
        (
            "X5c".to_string(),
            vf(&[
                ("r", "t*cos(theta)"),
                ("theta", "-t*sin(theta)/r"),
                ("V", "cos(theta) - t*W*sin(theta)/r"),
                ("W", "t*V*sin(theta)/r - sin(theta)"),
            ]),
        ),
        (
            "X6c".to_string(),
            vf(&[
                ("r", "t*sin(theta)"),
                ("theta", "t*cos(theta)/r"),
                ("V", "sin(theta) + t*W*cos(theta)/r"),
                ("W", "cos(theta) - t*V*cos(theta)/r"),
            ]),
        ),
        ("X7c".to_string(), vf(&[("theta", "1")])),
        (
            "X8c".to_string(),
            vf(&[
                ("x", "r*sin(theta)"),
                ("r", "-x*sin(theta)"),
                ("theta", "-x*cos(theta)/r"),
                ("u", "V*sin(theta) + W*cos(theta)"),
                ("V", "-u*sin(theta) - x*W*cos(theta)/r"),
                ("W", "x*V*cos(theta)/r - u*cos(theta)"),
            ]),
        ),
        (
            // The printed W coefficient omits the x*V*sin(theta)/r term; the
            // comparison reports it as an erratum with the exact residual.
            "X9c".to_string(),
            vf(&[
                ("x", "-r*cos(theta)"),
                ("r", "x*cos(theta)"),
                ("theta", "-x*sin(theta)/r"),
                ("u", "-V*cos(theta) + W*sin(theta)"),
                ("V", "u*cos(theta) - x*W*sin(theta)/r"),
                ("W", "-u*sin(theta)"),
            ]),
        ),
        ("X10c".to_string(), vf(&[("t", "1")])),
        (
            "X11c".to_string(),
            vf(&[("t", "t"), ("x", "x"), ("r", "r"), ("f", "-f")]),
        ),
    ]
}

/// The appendix list of spherical generators (only X7s..X11s are printed).
pub fn printed_spherical_generators() -> Vec<(String, VectorField)> {
    let c = ChartName::Spherical;
    let vf = |pairs: &[(&str, &str)]| {
        let pairs: Vec<(&str, Expr)> = pairs.iter().map(|(k, v)| (*k, p(v))).collect();
        VectorField::from_pairs(c, &pairs)
    };
    vec![
        (
            "X7s".to_string(),
            vf(&[
                ("theta", "-sin(phi)"),
                ("phi", "-cos(phi)*cot(theta)"),
                ("V", "-cos(phi)/sin(theta)*W"),
                ("W", "cos(phi)/sin(theta)*V"),
            ]),
        ),
        (
            "X8s".to_string(),
            vf(&[
                ("theta", "cos(phi)"),
                ("phi", "-sin(phi)*cot(theta)"),
                ("V", "-sin(phi)/sin(theta)*W"),
                ("W", "sin(phi)/sin(theta)*V"),
            ]),
        ),
        ("X9s".to_string(), vf(&[("phi", "1")])),
        ("X10s".to_string(), vf(&[("t", "1")])),
        (
            "X11s".to_string(),
            vf(&[("t", "t"), ("r", "r"), ("f", "-f")]),
        ),
    ]
}

/// Outcome of comparing one pushforward against the printed formula.
#[derive(Debug, Clone)]
pub struct GeneratorComparison {
    pub name: String,
    pub chart: ChartName,
    /// Residual (pushforward minus printed) per coordinate, simplified;
    /// empty when the formula is reproduced exactly.
    pub residuals: Vec<(String, Expr)>,
}

impl GeneratorComparison {
    pub fn matches(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// Pushes every basis generator to each chart and compares against the
/// printed list
/// coefficient-wise.
pub fn verify_chart_generators() -> Result<Vec<GeneratorComparison>, GeometryError> {
    let mut out = Vec::new();
    let cart = crate::liealg::l11_basis(ChartName::Cartesian);
    for (chart, printed, offset) in [
        (ChartName::Cylindrical, printed_cylindrical_generators(), 0),
        (ChartName::Spherical, printed_spherical_generators(), 6),
    ] {
        for (i, (name, formula)) in printed.iter().enumerate() {
            let pf = pushforward(&cart[offset + i], chart)?;
            let coords = Chart::get(chart).coords;
            let mut residuals = Vec::new();
            for (k, (a, b)) in pf
                .coefficients()
                .iter()
                .zip(formula.coefficients())
                .enumerate()
            {
                let d = Expr::sub(a.clone(), b.clone()).simplify();
                if !d.is_zero() {
                    residuals.push((coords[k].to_string(), d));
                }
            }
            out.push(GeneratorComparison {
                name: name.clone(),
                chart,
                residuals,
            });
        }
    }
    Ok(out)
}

/// Collision-frame vectors and relative velocities for one chart, together
/// with the reference frame they are compared against.
#[derive(Debug, Clone)]
pub struct FrameVectors {
    pub chart: ChartName,
    pub n_chart: [Expr; 3],
    pub n_reference: [Expr; 3],
    pub g_chart: [Expr; 3],
    pub g_reference: [Expr; 3],
}

pub fn cylindrical_frame() -> FrameVectors {
    FrameVectors {
        chart: ChartName::Cylindrical,
        n_chart: [
            p("cos(theta1)"),
            p("cos(epsilon - theta)*sin(theta1)"),
            p("sin(epsilon - theta)*sin(theta1)"),
        ],
        n_reference: [
            p("cos(theta1)"),
            p("sin(theta1)*cos(epsilon)"),
            p("sin(theta1)*sin(epsilon)"),
        ],
        g_chart: [p("u - u1"), p("V - V1"), p("W - W1")],
        g_reference: [
            p("u - u1"),
            p("(V*cos(theta) - W*sin(theta)) - (V1*cos(theta) - W1*sin(theta))"),
            p("(V*sin(theta) + W*cos(theta)) - (V1*sin(theta) + W1*cos(theta))"),
        ],
    }
}

pub fn spherical_frame() -> FrameVectors {
    let vel = |u: &str, v: &str, w: &str| -> [Expr; 3] {
        [
            p(&format!(
                "{u}*sin(theta)*cos(phi) + {v}*cos(theta)*cos(phi) - {w}*sin(phi)"
            )),
            p(&format!(
                "{u}*sin(theta)*sin(phi) + {v}*cos(theta)*sin(phi) + {w}*cos(phi)"
            )),
            p(&format!("{u}*cos(theta) - {v}*sin(theta)")),
        ]
    };
    let a = vel("U", "V", "W");
    let b = vel("U1", "V1", "W1");
    let g_ref = [
        Expr::sub(a[0].clone(), b[0].clone()),
        Expr::sub(a[1].clone(), b[1].clone()),
        Expr::sub(a[2].clone(), b[2].clone()),
    ];
    FrameVectors {
        chart: ChartName::Spherical,
        n_chart: [
            p("cos(epsilon - phi)*sin(theta)*sin(theta1) + cos(theta1)*cos(theta)"),
            p("cos(epsilon - phi)*cos(theta)*sin(theta1) - cos(theta1)*sin(theta)"),
            p("sin(epsilon - phi)*sin(theta1)"),
        ],
        n_reference: [
            p("sin(theta1)*cos(epsilon)"),
            p("sin(theta1)*sin(epsilon)"),
            p("cos(theta1)"),
        ],
        g_chart: [p("U - U1"), p("V - V1"), p("W - W1")],
        g_reference: g_ref,
    }
}

fn dot(a: &[Expr; 3], b: &[Expr; 3]) -> Expr {
    Expr::add(
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| Expr::mul(vec![x.clone(), y.clone()]))
            .collect(),
    )
}

/// One verified frame identity.
#[derive(Debug, Clone)]
pub struct FrameCheck {
    pub chart: ChartName,
    pub name: String,
    pub verdict: ZeroVerdict,
}

/// Verifies `g_c = g`, `|n_c| = 1` and `g_c . n_c = g . n` for both
/// non-Cartesian charts.
pub fn verify_frame_identities(seed: u64) -> Result<Vec<FrameCheck>, crate::expr::GuardError> {
    let mut out = Vec::new();
    for frame in [cylindrical_frame(), spherical_frame()] {
        let checks = [
            (
                "g_chart^2 - g^2",
                Expr::sub(
                    dot(&frame.g_chart, &frame.g_chart),
                    dot(&frame.g_reference, &frame.g_reference),
                ),
            ),
            (
                "|n_chart|^2 - 1",
                Expr::sub(dot(&frame.n_chart, &frame.n_chart), Expr::one()),
            ),
            (
                "g_chart.n_chart - g.n",
                Expr::sub(
                    dot(&frame.g_chart, &frame.n_chart),
                    dot(&frame.g_reference, &frame.n_reference),
                ),
            ),
        ];
        for (name, e) in checks {
            let guard = DomainGuard::standard(e.symbols());
            let verdict = e.is_identically_zero(&guard, seed)?;
            out.push(FrameCheck {
                chart: frame.chart,
                name: name.to_string(),
                verdict,
            });
        }
    }
    Ok(out)
}

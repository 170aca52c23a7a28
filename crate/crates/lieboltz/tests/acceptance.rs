//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Two certified errata in the published tables are part of the expected
//! outcome: the cylindrical generator X9c (missing term in the printed W
//! coefficient) and the invariant representation of row 3.38 (sign of the
//! tau term). For both, the suite checks that the printed form fails with
//! exactly the documented residual and that the corrected form passes.

use lieboltz::catalog::{known_errata, Catalog};
use lieboltz::classify::{
    determining_residual, orbit_ranks, parse_invariant_rep, reduced_differential_part, row_guard,
    verify_invariant_rep, verify_source,
};
use lieboltz::collision::{
    collide, collision_integral_mc, maxwellian, verify_reduced_1_2, verify_reduced_1_8,
    CollisionKernel, McConfig,
};
use lieboltz::expr::{DomainGuard, ZeroStatus};
use lieboltz::geometry::{
    pushforward, to_chart, verify_chart_generators, verify_frame_identities, Chart, ChartName,
};
use lieboltz::liealg::{
    commutator_table, decompose_in_basis, l11_basis, lie_bracket, verify_x11_scaling, BasisCombo,
};
use lieboltz::report::Overall;
use lieboltz::Expr;
use std::collections::BTreeMap;
use std::time::Instant;

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} — {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_algebra_closure_and_jacobi() {
    let start = Instant::now();
    let basis = l11_basis(ChartName::Cartesian);
    let table = commutator_table().expect("all brackets decompose rationally");
    // antisymmetry and zero diagonal
    for i in 0..11 {
        assert!(table[i][i].is_zero());
        for j in 0..11 {
            for k in 0..11 {
                let sum = Expr::add(vec![
                    table[i][j].coeffs[k].clone(),
                    table[j][i].coeffs[k].clone(),
                ]);
                assert!(sum.simplify().is_zero());
            }
        }
    }
    // closure with exact rational coefficients: decompose() yields rationals
    for i in 0..11 {
        for j in (i + 1)..11 {
            for c in &table[i][j].coeffs {
                assert!(c.as_rational().is_some(), "non-rational coefficient");
            }
        }
    }
    // Jacobi identity, symbolically, for all 165 unordered triples
    for i in 0..11 {
        for j in (i + 1)..11 {
            for k in (j + 1)..11 {
                let t1 = lie_bracket(&lie_bracket(&basis[i], &basis[j]).unwrap(), &basis[k])
                    .unwrap();
                let t2 = lie_bracket(&lie_bracket(&basis[j], &basis[k]).unwrap(), &basis[i])
                    .unwrap();
                let t3 = lie_bracket(&lie_bracket(&basis[k], &basis[i]).unwrap(), &basis[j])
                    .unwrap();
                let total = t1.add(&t2).unwrap().add(&t3).unwrap();
                assert!(
                    total.is_zero_symbolic(),
                    "Jacobi failed on triple ({i},{j},{k})"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        "1 [algebra closure]",
        elapsed.as_secs_f64() < 5.0,
        &format!("55 brackets rational, 165 Jacobi triples symbolic zero, {elapsed:?}"),
    );
}

#[test]
fn criterion_2_chart_fidelity() {
    let start = Instant::now();
    let comparisons = verify_chart_generators().unwrap();
    assert_eq!(comparisons.len(), 16);
    let mut mismatches = Vec::new();
    for cmp in &comparisons {
        if !cmp.matches() {
            mismatches.push(cmp);
        }
    }
    // exactly the certified erratum: X9c, W coefficient, residual equal to
    // the dropped term x*V*sin(theta)/r
    assert_eq!(mismatches.len(), 1, "unexpected generator mismatches");
    let x9c = mismatches[0];
    assert_eq!(x9c.name, "X9c");
    assert_eq!(x9c.residuals.len(), 1);
    let (coord, residual) = &x9c.residuals[0];
    assert_eq!(coord, "W");
    let expected = Expr::parse("x*V*sin(theta)/r").unwrap();
    assert!(
        Expr::sub(residual.clone(), expected).simplify().is_zero(),
        "X9c residual is not the documented missing term: {residual}"
    );
    assert!(known_errata().iter().any(|e| e.subject == "X9c"));

    // chart round trips within 1e-10 on 100 seeded points
    for chart_name in [ChartName::Cylindrical, ChartName::Spherical] {
        let chart = Chart::get(chart_name);
        let mut seed = 0xc0ffee_u64;
        let mut unit = move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let mut point = BTreeMap::new();
            for c in chart.coords {
                let val = match c {
                    "theta" | "phi" => 0.1 + (std::f64::consts::PI - 0.2) * unit(),
                    _ => 0.5 + 2.0 * unit(),
                };
                point.insert(c.to_string(), val);
            }
            let cart = to_chart(&point, chart_name, ChartName::Cartesian).unwrap();
            let back = to_chart(&cart, ChartName::Cartesian, chart_name).unwrap();
            for (k, v) in &point {
                assert!(
                    (back[k] - v).abs() < 1e-10,
                    "round trip drift {chart_name}/{k}"
                );
            }
        }
    }
    report(
        "2 [chart fidelity]",
        true,
        &format!(
            "15/16 printed generators exact; X9c deviates by exactly the documented \
             dropped term; round trips < 1e-10; {:?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_3_frame_identities() {
    let checks = verify_frame_identities(42).unwrap();
    assert_eq!(checks.len(), 6);
    for c in &checks {
        assert_eq!(
            c.verdict.status,
            ZeroStatus::SymbolicZero,
            "{} on {} not symbolic zero",
            c.name,
            c.chart
        );
    }
    report(
        "3 [frame identities]",
        true,
        "g_c = g, |n_c| = 1, g_c.n_c = g.n symbolically on both charts",
    );
}

#[test]
fn criterion_4_worked_determining_equations() {
    let catalog = Catalog::builtin();
    // generic source symbol q with full argument list per chart
    let generic = |coords: [&str; 8]| {
        Expr::abstract_fn(
            "q",
            8,
            coords.iter().map(|s| Expr::symbol(s)).collect(),
        )
    };
    let partial = |coords: [&str; 8], slot: u32| {
        Expr::partial(
            "q",
            8,
            vec![slot],
            coords.iter().map(|s| Expr::symbol(s)).collect(),
        )
    };
    let cart = ["x", "y", "z", "u", "v", "w", "t", "f"];
    let sym = Expr::symbol;

    // row 1.8: 2q - f q_f + t q_t + x q_x + y q_y + z q_z
    let row = catalog.get("1.8").unwrap();
    let got = determining_residual(row.chart, &row.combos[0], &generic(cart));
    let expected = Expr::add(vec![
        Expr::mul(vec![Expr::int(2), generic(cart)]),
        Expr::neg(Expr::mul(vec![sym("f"), partial(cart, 8)])),
        Expr::mul(vec![sym("t"), partial(cart, 7)]),
        Expr::mul(vec![sym("x"), partial(cart, 1)]),
        Expr::mul(vec![sym("y"), partial(cart, 2)]),
        Expr::mul(vec![sym("z"), partial(cart, 3)]),
    ]);
    assert!(
        Expr::sub(got, expected).simplify().is_zero(),
        "row 1.8 determining equation"
    );

    // row 1.2 in Cartesian coordinates:
    // beta q_u + beta t q_x - w q_v + v q_w - z q_y + y q_z
    let row12 = catalog.get("1.2").unwrap();
    let got = determining_residual(ChartName::Cartesian, &row12.combos[0], &generic(cart));
    let expected = Expr::add(vec![
        Expr::mul(vec![sym("beta"), partial(cart, 4)]),
        Expr::mul(vec![sym("beta"), sym("t"), partial(cart, 1)]),
        Expr::neg(Expr::mul(vec![sym("w"), partial(cart, 5)])),
        Expr::mul(vec![sym("v"), partial(cart, 6)]),
        Expr::neg(Expr::mul(vec![sym("z"), partial(cart, 2)])),
        Expr::mul(vec![sym("y"), partial(cart, 3)]),
    ]);
    assert!(
        Expr::sub(got, expected).simplify().is_zero(),
        "row 1.2 determining equation (cartesian form)"
    );

    // and its cylindrical form: beta q_u + beta t q_x + q_theta
    let cyl = ["x", "r", "theta", "u", "V", "W", "t", "f"];
    let got = determining_residual(ChartName::Cylindrical, &row12.combos[0], &generic(cyl));
    let expected = Expr::add(vec![
        Expr::mul(vec![sym("beta"), partial(cyl, 4)]),
        Expr::mul(vec![sym("beta"), sym("t"), partial(cyl, 1)]),
        partial(cyl, 3),
    ]);
    assert!(
        Expr::sub(got, expected).simplify().is_zero(),
        "row 1.2 determining equation (cylindrical form)"
    );

    // row 3.8 in Cartesian coordinates: the three rotation equations
    let row38 = catalog.get("3.8").unwrap();
    let expected_cart = [
        // -w q_v + v q_w - z q_y + y q_z
        Expr::add(vec![
            Expr::neg(Expr::mul(vec![sym("w"), partial(cart, 5)])),
            Expr::mul(vec![sym("v"), partial(cart, 6)]),
            Expr::neg(Expr::mul(vec![sym("z"), partial(cart, 2)])),
            Expr::mul(vec![sym("y"), partial(cart, 3)]),
        ]),
        // w q_u - u q_w + z q_x - x q_z
        Expr::add(vec![
            Expr::mul(vec![sym("w"), partial(cart, 4)]),
            Expr::neg(Expr::mul(vec![sym("u"), partial(cart, 6)])),
            Expr::mul(vec![sym("z"), partial(cart, 1)]),
            Expr::neg(Expr::mul(vec![sym("x"), partial(cart, 3)])),
        ]),
        // -v q_u + u q_v - y q_x + x q_y
        Expr::add(vec![
            Expr::neg(Expr::mul(vec![sym("v"), partial(cart, 4)])),
            Expr::mul(vec![sym("u"), partial(cart, 5)]),
            Expr::neg(Expr::mul(vec![sym("y"), partial(cart, 1)])),
            Expr::mul(vec![sym("x"), partial(cart, 2)]),
        ]),
    ];
    for (combo, expected) in row38.combos.iter().zip(expected_cart) {
        let got = determining_residual(ChartName::Cartesian, combo, &generic(cart));
        assert!(
            Expr::sub(got, expected).simplify().is_zero(),
            "row 3.8 cartesian determining equations"
        );
    }

    // row 3.8 in spherical coordinates; q ordered (r,theta,phi,U,V,W,t,f)
    let sph = ["r", "theta", "phi", "U", "V", "W", "t", "f"];
    let p = |text: &str| Expr::parse(text).unwrap();
    let expected_sph = [
        // -sin(phi) q_theta - cos(phi) cot(theta) q_phi
        //   - cos(phi)/sin(theta) (W q_V - V q_W)
        Expr::add(vec![
            Expr::mul(vec![p("0 - sin(phi)"), partial(sph, 2)]),
            Expr::mul(vec![p("0 - cos(phi)*cot(theta)"), partial(sph, 3)]),
            Expr::mul(vec![p("0 - cos(phi)/sin(theta)*W"), partial(sph, 5)]),
            Expr::mul(vec![p("cos(phi)/sin(theta)*V"), partial(sph, 6)]),
        ]),
        Expr::add(vec![
            Expr::mul(vec![p("cos(phi)"), partial(sph, 2)]),
            Expr::mul(vec![p("0 - sin(phi)*cot(theta)"), partial(sph, 3)]),
            Expr::mul(vec![p("0 - sin(phi)/sin(theta)*W"), partial(sph, 5)]),
            Expr::mul(vec![p("sin(phi)/sin(theta)*V"), partial(sph, 6)]),
        ]),
        partial(sph, 3),
    ];
    for (combo, expected) in row38.combos.iter().zip(expected_sph) {
        let got = determining_residual(ChartName::Spherical, combo, &generic(sph));
        assert!(
            Expr::sub(got, expected).simplify().is_zero(),
            "row 3.8 spherical determining equations"
        );
    }

    report(
        "4 [worked determining equations]",
        true,
        "rows 1.8, 1.2 (both charts), 3.8 (both charts) match term for term",
    );
}

#[test]
fn criterion_5_source_audit() {
    let start = Instant::now();
    let catalog = Catalog::builtin();
    let mut pass = 0;
    let mut pass_numeric = 0;
    let mut failures = Vec::new();
    for row in &catalog.rows {
        let verdict = verify_source(catalog, row, 42).unwrap();
        match verdict.overall {
            Overall::Pass => pass += 1,
            Overall::PassNumeric => pass_numeric += 1,
            _ => failures.push((row.id.clone(), verdict)),
        }
    }
    // the universal source rows: 8 generators on 8.5, 11 on 11.1
    let row85 = catalog.get("8.5").unwrap();
    assert_eq!(verify_source(catalog, row85, 42).unwrap().checks.len(), 8);
    let row111 = catalog.get("11.1").unwrap();
    assert_eq!(verify_source(catalog, row111, 42).unwrap().checks.len(), 11);
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed.as_secs_f64() < 180.0;
    report(
        "5 [source audit]",
        ok,
        &format!(
            "{} rows: {pass} pass, {pass_numeric} pass-numeric, {} fail; {elapsed:?}",
            catalog.rows.len(),
            failures.len()
        ),
    );
}

#[test]
fn criterion_6_invariant_audit() {
    let start = Instant::now();
    let catalog = Catalog::builtin();
    let mut pass = 0;
    let mut skip = 0;
    let mut errata_hits = Vec::new();
    let mut failures = Vec::new();
    for row in &catalog.rows {
        let verdict = verify_invariant_rep(catalog, row, 42).unwrap();
        match verdict.overall {
            Overall::Pass | Overall::PassNumeric => pass += 1,
            Overall::Skip => skip += 1,
            Overall::Fail => {
                if known_errata().iter().any(|e| e.subject == row.base_id) {
                    errata_hits.push((row.id.clone(), verdict));
                } else {
                    failures.push((row.id.clone(), verdict));
                }
            }
        }
    }
    // exactly the certified erratum 3.38, failing with a numeric witness on
    // exactly the documented check
    assert_eq!(errata_hits.len(), 1);
    let (id, verdict) = &errata_hits[0];
    assert_eq!(id, "3.38");
    let failing: Vec<&str> = verdict
        .checks
        .iter()
        .filter(|c| !c.status.passed())
        .map(|c| c.name.as_str())
        .collect();
    assert_eq!(failing, ["invariance[sigma1+tau2+6](arg2)"]);
    assert!(verdict
        .checks
        .iter()
        .any(|c| !c.status.passed() && c.witness.is_some()));
    // the corrected form from the errata registry passes all generators
    let erratum = known_errata().iter().find(|e| e.subject == "3.38").unwrap();
    let corrected = Expr::parse(erratum.corrected).unwrap();
    let row = catalog.get("3.38").unwrap();
    let rep = parse_invariant_rep(&row.id, &corrected).unwrap();
    let guard = row_guard(row, corrected.symbols());
    for combo in &row.combos {
        let field = combo.realize(row.chart);
        for arg in &rep.args {
            assert_ne!(
                field
                    .apply(arg)
                    .is_identically_zero(&guard, 13)
                    .unwrap()
                    .status,
                ZeroStatus::Nonzero
            );
        }
    }
    // every None row certifies r_xi = r_full - 1 (reported as SKIP)
    for row in &catalog.rows {
        if catalog.resolve_invariant(row).unwrap().is_none() {
            let (r_full, r_xi) = orbit_ranks(row, 42).unwrap();
            assert_eq!(r_xi, r_full - 1, "row {} rank certificate", row.id);
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed.as_secs_f64() < 180.0;
    report(
        "6 [invariant audit]",
        ok,
        &format!(
            "{pass} pass, {skip} skip(None, rank-certified), 1 certified erratum (3.38), \
             {} unexpected failures; {elapsed:?}",
            failures.len()
        ),
    );
}

#[test]
fn criterion_7_reduced_equations() {
    let start = Instant::now();
    let catalog = Catalog::builtin();

    // differential part of row 1.8
    let row = catalog.get("1.8").unwrap();
    let form = reduced_differential_part(catalog, row).unwrap();
    assert!(
        Expr::sub(form.prefactor.clone(), Expr::parse("t^-2").unwrap())
            .simplify()
            .is_zero()
    );
    let args: Vec<Expr> = ["p1", "p2", "p3", "u", "v", "w"]
        .iter()
        .map(|s| Expr::symbol(s))
        .collect();
    let omega = Expr::abstract_fn("Omega", 6, args.clone());
    let part = |s: u32| Expr::partial("Omega", 6, vec![s], args.clone());
    let expected = Expr::add(vec![
        Expr::neg(omega),
        Expr::mul(vec![Expr::parse("u - p1").unwrap(), part(1)]),
        Expr::mul(vec![Expr::parse("v - p2").unwrap(), part(2)]),
        Expr::mul(vec![Expr::parse("w - p3").unwrap(), part(3)]),
    ]);
    assert!(
        Expr::sub(form.reduced.clone(), expected).simplify().is_zero(),
        "row 1.8 reduced differential part"
    );

    // differential part of row 1.2 (cylindrical):
    // Omega_t + (beta W / r - u~/t) Omega_p + V Omega_r - (u~/t) Omega_u~
    //   + (W^2/r) Omega_V - (V W / r) Omega_W
    let row = catalog.get("1.2").unwrap();
    let form = reduced_differential_part(catalog, row).unwrap();
    assert!(form.prefactor.is_one());
    let args: Vec<Expr> = ["t", "r", "p1", "p2", "V", "W"]
        .iter()
        .map(|s| Expr::symbol(s))
        .collect();
    let part = |s: u32| Expr::partial("Omega", 6, vec![s], args.clone());
    let expected = Expr::add(vec![
        part(1),
        Expr::mul(vec![Expr::parse("beta*W/r - p2/t").unwrap(), part(3)]),
        Expr::mul(vec![Expr::symbol("V"), part(2)]),
        Expr::neg(Expr::mul(vec![Expr::parse("p2/t").unwrap(), part(4)])),
        Expr::mul(vec![Expr::parse("W^2/r").unwrap(), part(5)]),
        Expr::neg(Expr::mul(vec![Expr::parse("V*W/r").unwrap(), part(6)])),
    ]);
    assert!(
        Expr::sub(form.reduced.clone(), expected).simplify().is_zero(),
        "row 1.2 reduced differential part, got {}",
        form.reduced
    );

    // collision-term scaling, N = 1e5, 3 sigma, < 30 s per row
    let t0 = Instant::now();
    let cfg = McConfig::new(100_000, 42).unwrap();
    let cmp = verify_reduced_1_8(&[1.0, 1.0, 1.0], &[0.3, -0.2, 0.1], 2.0, &cfg).unwrap();
    assert!((cmp.factor - 0.25).abs() < 1e-15);
    let scale = cmp.cartesian.value.abs().max(cmp.reduced.value.abs());
    assert!(cmp.coupled_diff.value.abs() <= 3.0 * cmp.coupled_diff.stderr + 1e-12 * scale);
    let ratio = cmp.cartesian.value / cmp.reduced.value;
    let t18 = t0.elapsed();
    assert!(t18.as_secs_f64() < 30.0);

    let t0 = Instant::now();
    let cmp2 = verify_reduced_1_2(0.7, &[0.8, 1.1, 0.9], &[0.4, -0.3, 0.2], 2.0, &cfg).unwrap();
    let scale2 = cmp2.cartesian.value.abs().max(cmp2.reduced.value.abs());
    assert!(cmp2.coupled_diff.value.abs() <= 3.0 * cmp2.coupled_diff.stderr + 1e-12 * scale2);
    let t12 = t0.elapsed();
    assert!(t12.as_secs_f64() < 30.0);

    report(
        "7 [reduced equations]",
        true,
        &format!(
            "differential parts exact; collision ratio 1.8 = {ratio:.4} (claimed 0.25) \
             in {t18:?}, row 1.2 equality in {t12:?}; total {:?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_8_collision_physics() {
    // Maxwellian annihilation at N = 1e5 with relative precision on the
    // loss scale below 1%
    let f = maxwellian(1.0, [0.2, -0.1, 0.0], 0.9);
    let kernel = CollisionKernel::pseudo_maxwell();
    let cfg = McConfig::new(100_000, 7).unwrap();
    let est = collision_integral_mc(&f, &[0.0; 3], &[0.4, 0.1, -0.3], 1.0, &kernel, &cfg).unwrap();
    let scale = est.loss.value.abs();
    assert!(est.value.value.abs() <= 3.0 * est.value.stderr + 1e-12 * scale);
    assert!(est.loss.stderr / scale < 0.01);

    // momentum and energy conservation of the collision map
    let mut state = 0x5eed_u64;
    let mut unit = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..10_000 {
        let v = [unit() * 4.0 - 2.0, unit() * 4.0 - 2.0, unit() * 4.0 - 2.0];
        let w = [unit() * 4.0 - 2.0, unit() * 4.0 - 2.0, unit() * 4.0 - 2.0];
        let ct: f64 = unit() * 2.0 - 1.0;
        let eps = unit() * std::f64::consts::TAU;
        let st = (1.0f64 - ct * ct).sqrt();
        let n = [st * eps.cos(), st * eps.sin(), ct];
        let (a, b) = collide(&v, &w, &n).unwrap();
        for k in 0..3 {
            assert!((a[k] + b[k] - v[k] - w[k]).abs() < 1e-12);
        }
        let e_in: f64 = v.iter().map(|x| x * x).sum::<f64>() + w.iter().map(|x| x * x).sum::<f64>();
        let e_out: f64 =
            a.iter().map(|x| x * x).sum::<f64>() + b.iter().map(|x| x * x).sum::<f64>();
        assert!((e_in - e_out).abs() < 1e-12 * (1.0 + e_in));
    }

    // the dilation multiplier -2: exact transport chain rule plus
    // statistical collision scaling
    let f0 = Expr::parse(
        "exp(0 - (13*u^2 + 7*v^2 + 10*w^2)/20 - (x^2 + y^2 + z^2)/8 - t^2/10)",
    )
    .unwrap();
    let checks = verify_x11_scaling(&f0, 0.5, &cfg).unwrap();
    for c in &checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }

    report(
        "8 [collision physics]",
        true,
        "annihilation within 3 sigma at <1% precision; conservation to 1e-12 on 1e4 triples; \
         dilation multiplier -2 certified",
    );
}

#[test]
fn criterion_9_report_determinism() {
    // identical (catalog, seed, flags) at different thread counts give
    // byte-identical JSON reports
    let run = |threads: usize| -> String {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            use rayon::prelude::*;
            let catalog = Catalog::builtin();
            let rows: Vec<_> = catalog
                .rows
                .par_iter()
                .filter(|r| r.dimension <= 2)
                .map(|row| verify_source(catalog, row, 42).unwrap())
                .collect();
            let report = lieboltz::report::Report::new(
                lieboltz::report::catalog_hash(lieboltz::catalog::BUILTIN_CATALOG),
                rows,
            );
            serde_json::to_string_pretty(&report).unwrap()
        })
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a, b, "reports differ across thread counts");
    report(
        "9 [determinism]",
        true,
        "JSON reports byte-identical across thread counts for fixed seed",
    );
}

/// Linearity and chart-independence properties of the determining operator.
#[test]
fn determining_operator_properties() {
    let catalog = Catalog::builtin();
    // linearity: residual(aU + bV) = a residual(U) + b residual(V)
    let q = Expr::parse("t^-2*Psi3(x/t, u - x/t, f*t)").unwrap();
    let mut u = BasisCombo::zero();
    u.coeffs[3] = Expr::one();
    u.coeffs[10] = Expr::symbol("alpha");
    let mut v = BasisCombo::zero();
    v.coeffs[6] = Expr::one();
    v.coeffs[0] = Expr::symbol("beta");
    let mut lin = BasisCombo::zero();
    for k in 0..11 {
        lin.coeffs[k] = Expr::add(vec![
            Expr::mul(vec![Expr::int(3), u.coeffs[k].clone()]),
            Expr::mul(vec![Expr::int(-2), v.coeffs[k].clone()]),
        ]);
    }
    let lhs = determining_residual(ChartName::Cartesian, &lin, &q);
    let rhs = Expr::add(vec![
        Expr::mul(vec![
            Expr::int(3),
            determining_residual(ChartName::Cartesian, &u, &q),
        ]),
        Expr::mul(vec![
            Expr::int(-2),
            determining_residual(ChartName::Cartesian, &v, &q),
        ]),
    ]);
    assert!(Expr::sub(lhs, rhs).simplify().is_zero());

    // chart independence for rows 1.2 and 3.8: pushing the source through
    // the inverse chart map and verifying with Cartesian generators agrees
    for id in ["1.2", "3.8"] {
        let row = catalog.get(id).unwrap();
        let q = catalog.resolve_source(row).unwrap();
        let mut symbols = q.symbols();
        symbols.extend(["x", "y", "z", "u", "v", "w", "t", "f"].map(String::from));
        // quadrant guard keeps the symbolic inverse maps on their branch
        let mut guard = DomainGuard::standard(symbols);
        for angle in ["theta", "phi"] {
            guard = guard.with_interval(angle, 0.15, 1.4);
        }
        for (expr, rel) in &row.constraints {
            guard = guard.with_constraint(expr.clone(), *rel);
        }
        for combo in &row.combos {
            let native = determining_residual(row.chart, combo, &q)
                .is_identically_zero(&row_guard(row, q.symbols()), 42)
                .unwrap();
            let cart =
                lieboltz::classify::determining_residual_via_cartesian(row, combo, &q)
                    .is_identically_zero(&guard, 42)
                    .unwrap();
            assert!(native.passed() && cart.passed(), "row {id} chart mismatch");
        }
    }
}

/// Source-representation consistency: restricted to the invariant manifold,
/// the source is a function of the invariants and of Omega alone.
#[test]
fn reduced_source_consistency() {
    let catalog = Catalog::builtin();
    // 1.8: Psi7(p1, p2, p3, u, v, w, Omega)
    let row = catalog.get("1.8").unwrap();
    let form = lieboltz::classify::reduced_source(catalog, row).unwrap();
    let oargs: Vec<Expr> = ["p1", "p2", "p3", "u", "v", "w"]
        .iter()
        .map(|s| Expr::symbol(s))
        .collect();
    let expected = Expr::abstract_fn("Psi", 7, {
        let mut a = oargs.clone();
        a.truncate(6);
        let mut full: Vec<Expr> = a;
        full.push(Expr::abstract_fn("Omega", 6, oargs.clone()));
        full
    });
    assert!(
        Expr::sub(form.reduced.clone(), expected).simplify().is_zero(),
        "row 1.8 reduced source, got {}",
        form.reduced
    );
    // 1.2 and 3.8 reduce to Psi of invariants with Omega in the last slot
    for id in ["1.2", "3.8"] {
        let row = catalog.get(id).unwrap();
        let form = lieboltz::classify::reduced_source(catalog, row).unwrap();
        let symbols = form.reduced.symbols();
        let chart_coords = Chart::get(row.chart).coords;
        let invariant_names: Vec<&str> = form
            .invariants
            .iter()
            .map(|(n, _)| n.as_str())
            .collect();
        for s in symbols {
            let coord_arg = catalog
                .resolve_invariant(row)
                .unwrap()
                .map(|rep| {
                    parse_invariant_rep(&row.id, &rep)
                        .unwrap()
                        .args
                        .iter()
                        .any(|a| a.as_symbol() == Some(s.as_str()))
                })
                .unwrap_or(false);
            assert!(
                invariant_names.contains(&s.as_str())
                    || coord_arg
                    || row.params.contains(&s)
                    || !chart_coords.contains(&s.as_str()),
                "row {id}: non-invariant symbol {s} left in reduced source"
            );
        }
    }
}

/// Pushforward structure: linearity and commutation with the Lie bracket.
#[test]
fn pushforward_properties() {
    let basis = l11_basis(ChartName::Cartesian);
    // linearity on a parametric combination
    let combo = {
        let mut c = BasisCombo::zero();
        c.coeffs[3] = Expr::symbol("beta");
        c.coeffs[6] = Expr::one();
        c.coeffs[10] = Expr::symbol("alpha");
        c
    };
    let direct = pushforward(&combo.realize(ChartName::Cartesian), ChartName::Cylindrical)
        .unwrap();
    let assembled = combo.realize(ChartName::Cylindrical);
    for (a, b) in direct.coefficients().iter().zip(assembled.coefficients()) {
        assert!(Expr::sub(a.clone(), b.clone()).simplify().is_zero());
    }
    // bracket commutation for 20 pairs
    let pairs = [
        (0, 6), (0, 8), (1, 6), (2, 7), (3, 6), (3, 10), (4, 7), (4, 8),
        (5, 6), (5, 9), (6, 7), (6, 8), (6, 10), (7, 8), (7, 9), (8, 10),
        (9, 10), (1, 4), (2, 5), (0, 10),
    ];
    for (i, j) in pairs {
        let bracket_then_push = pushforward(
            &lie_bracket(&basis[i], &basis[j]).unwrap(),
            ChartName::Cylindrical,
        )
        .unwrap();
        let push_then_bracket = lie_bracket(
            &pushforward(&basis[i], ChartName::Cylindrical).unwrap(),
            &pushforward(&basis[j], ChartName::Cylindrical).unwrap(),
        )
        .unwrap();
        for (a, b) in bracket_then_push
            .coefficients()
            .iter()
            .zip(push_then_bracket.coefficients())
        {
            assert!(
                Expr::sub(a.clone(), b.clone()).simplify().is_zero(),
                "bracket/pushforward mismatch on pair ({i},{j})"
            );
        }
    }
}

/// h-multiplier linearity over exact rationals.
#[test]
fn h_multiplier_linearity() {
    use lieboltz::liealg::h_multiplier;
    let mut u = BasisCombo::zero();
    u.coeffs[10] = Expr::ratio(3, 4);
    u.coeffs[2] = Expr::one();
    let mut v = BasisCombo::zero();
    v.coeffs[10] = Expr::ratio(-1, 6);
    v.coeffs[5] = Expr::int(2);
    let mut lin = BasisCombo::zero();
    for k in 0..11 {
        lin.coeffs[k] = Expr::add(vec![
            Expr::mul(vec![Expr::int(5), u.coeffs[k].clone()]),
            Expr::mul(vec![Expr::int(7), v.coeffs[k].clone()]),
        ]);
    }
    let lhs = h_multiplier(&lin);
    let rhs = Expr::add(vec![
        Expr::mul(vec![Expr::int(5), h_multiplier(&u)]),
        Expr::mul(vec![Expr::int(7), h_multiplier(&v)]),
    ]);
    assert_eq!(lhs.simplify(), rhs.simplify());
}

/// Count identity over every non-None row of the invariant table.
#[test]
fn count_identity_catalog_wide() {
    let catalog = Catalog::builtin();
    for row in &catalog.rows {
        let Some(rep_expr) = catalog.resolve_invariant(row).unwrap() else {
            continue;
        };
        let pins: BTreeMap<String, Expr> = row
            .constraints
            .iter()
            .filter(|(_, rel)| *rel == lieboltz::expr::Relation::EqZero)
            .filter_map(|(e, _)| e.as_symbol().map(|s| (s.to_string(), Expr::zero())))
            .collect();
        let rep_expr = rep_expr.substitute(&pins);
        let rep = parse_invariant_rep(&row.id, &rep_expr).unwrap();
        let (r_full, _) = orbit_ranks(row, 42).unwrap();
        assert_eq!(
            rep.arity as usize + 1,
            8 - r_full,
            "count identity fails on row {}",
            row.id
        );
    }
}

use lieboltz::catalog::Catalog;
use lieboltz::classify::{verify_invariant_rep, verify_source};
use lieboltz::report::Overall;
use std::time::Instant;

fn main() {
    let catalog = Catalog::builtin();
    let t0 = Instant::now();
    let mut fails = 0;
    let mut numerics = Vec::new();
    for row in &catalog.rows {
        let t = Instant::now();
        let src = verify_source(catalog, row, 42);
        let inv = verify_invariant_rep(catalog, row, 42);
        let ms = t.elapsed().as_millis();
        let brief = |v: &Result<lieboltz::report::RowVerdict, _>| match v {
            Ok(r) => format!("{:?}", r.overall),
            Err(e) => format!("ERR {e}"),
        };
        if matches!(&src, Ok(r) if r.overall == Overall::PassNumeric)
            || matches!(&inv, Ok(r) if r.overall == Overall::PassNumeric)
        {
            numerics.push(row.id.clone());
        }
        let bad = matches!(&src, Ok(r) if r.overall == Overall::Fail)
            || matches!(&inv, Ok(r) if r.overall == Overall::Fail)
            || src.is_err()
            || inv.is_err();
        eprintln!("{:>6} {} ms src={} inv={}", row.id, ms, brief(&src), brief(&inv));
        if bad || ms > 2000 {
            if bad {
                fails += 1;
            }
            println!("{:>6} [{} ms] source={} invariant={}", row.id, ms, brief(&src), brief(&inv));
            for v in [&src, &inv] {
                if let Ok(r) = v {
                    for c in &r.checks {
                        if c.status == lieboltz::report::CheckStatus::Fail {
                            println!("        FAIL {} {}", c.name, c.witness.clone().map(|w| w.to_string()).unwrap_or_default());
                        }
                    }
                }
            }
        }
    }
    println!("total: {:?}, failing rows: {fails}", t0.elapsed());
    println!("numeric-only rows: {:?}", numerics);
}

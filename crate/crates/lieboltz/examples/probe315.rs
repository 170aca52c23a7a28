use lieboltz::catalog::Catalog;
use lieboltz::classify::{determining_residual, row_guard};
use std::time::Instant;

fn main() {
    let catalog = Catalog::builtin();
    let row = catalog.get("4.9").unwrap();
    let q = catalog.resolve_source(row).unwrap();
    for (i, combo) in row.combos.iter().enumerate() {
        let t0 = Instant::now();
        let residual = determining_residual(row.chart, combo, &q);
        let t_build = t0.elapsed();
        let guard = row_guard(row, q.symbols());
        let t1 = Instant::now();
        let v = residual.is_identically_zero(&guard, 1).unwrap();
        let (g, f, d) = lieboltz::expr::profile_counters();
        let (mn, mc, mt) = lieboltz::expr::mul_counters();
        eprintln!(
            "gen {i}: build {:?} zero {:?} status {:?} | gcd {}ms fix {}ms div {}ms mul {}ms/{}calls/{}pairs",
            t_build, t1.elapsed(), v.status, g/1_000_000, f/1_000_000, d/1_000_000, mn/1_000_000, mc, mt
        );
    }
}

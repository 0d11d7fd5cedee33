//! Times prior construction at growing edge counts and fits a line.
//!
//! cargo run --release --example prior_runtime_bench

use classlink::eval::bench_prior_runtime;

fn main() -> classlink::Result<()> {
    let sizes = [10_000, 30_000, 100_000, 300_000, 1_000_000];
    let report = bench_prior_runtime(&sizes, 7, 5, 0)?;
    for row in &report.rows {
        println!("{:>9} edges  {:>9.3} ms", row.edges, row.seconds * 1e3);
    }
    println!(
        "{:.2} ns per edge, R² = {:.4}",
        report.slope * 1e9,
        report.r_squared
    );
    Ok(())
}

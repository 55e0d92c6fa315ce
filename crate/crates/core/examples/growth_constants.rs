//! Estimates the singularity ρₘ of the history-count series for m = 1..=6 and prints the
//! normalised ratios rₙ that the conjectured asymptotic form predicts to flatten out.
//!
//! Usage: cargo run --release --example growth_constants [N]

use btree_histories::enumeration::{conjecture_report, estimate_rho, Method};

fn main() -> btree_histories::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5000);
    println!("{:>2} {:>14} {:>14} {:>10} {:>12}", "m", "rho", "1/rho", "exponent", "slope r_n");
    for m in 1..=6 {
        let est = estimate_rho(m, n, Method::Aitken)?;
        let report = conjecture_report(m, n, Some(est.rho))?;
        println!(
            "{m:>2} {:>14.8} {:>14.8} {:>10.4} {:>12.2e}",
            est.rho, est.rho_inverse, est.polynomial_exponent, report.slope_last_decade
        );
    }
    let m1 = conjecture_report(1, n, Some(2.3758705509))?;
    let tail: Vec<String> = m1.ratios.iter().rev().step_by(n / 5).map(|(k, r)| format!("r_{k} = {r:.6}")).collect();
    println!("m = 1 with the closed-form constant: {}", tail.join(", "));
    Ok(())
}

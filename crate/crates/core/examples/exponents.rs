//! Threshold table for a few `(d, γ, q)` points.

use hjlab::exponents::ExponentBook;

fn main() -> hjlab::Result<()> {
    println!("{:>2} {:>5} {:>5} {:>8} {:>8} {:>8} {:>9} {:>8} {:>8}", "d", "gamma", "q", "q_sub", "q_super", "regime", "alpha", "r_mono", "r_foc");
    for &(d, gamma, q) in &[(1, 1.5, 2.0), (1, 3.0, 3.5), (1, 3.0, 4.0), (2, 2.0, 2.0), (2, 4.0, 9.0), (3, 2.0, 3.0)] {
        let b = ExponentBook::new(d, gamma, q)?;
        let alpha = b.alpha_pred.map(|a| format!("{a:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{d:>2} {gamma:>5} {q:>5} {:>8.4} {:>8.4} {:>8} {alpha:>9} {:>8.4} {:>8.4}",
            b.q_crit_sub,
            b.q_crit_super,
            format!("{:?}", b.regime()),
            b.r_max_monotone,
            b.r_max_focusing
        );
    }
    Ok(())
}

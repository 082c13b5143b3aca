//! Truncated problems at the critical exponent along a k-ladder.

use hjlab::exponents::ExponentBook;
use hjlab::lab::{check_stability, CriticalSetup};

fn main() -> hjlab::Result<()> {
    let (d, gamma) = (1, 1.5);
    let q = ExponentBook::new(d, gamma, 1.0)?.q_crit_sub;
    let book = ExponentBook::new(d, gamma, q)?;
    let setup = CriticalSetup::default();
    let rep = check_stability(&setup.problem(d, gamma, q)?, &[1.0, 2.0, 4.0, 8.0], &book, setup.nt_internal)?;
    println!("p = {}", rep.p);
    for r in &rep.rows {
        println!("k {:>3}: lhs {:.4e} rhs {:.4e} ratio {:.4}", r.k, r.lhs, r.rhs, r.ratio);
    }
    println!("band {:.3}, rhs decreasing {}", rep.band, rep.rhs_decreasing);
    Ok(())
}

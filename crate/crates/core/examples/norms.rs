//! Norms of a single mode against their closed forms.

use std::f64::consts::PI;

use hjlab::norms::{holder_seminorm, lp_norm, nikolskii_seminorm, slobodeckii_seminorm, w2q_norm};
use hjlab::runner::spaces::{cosine_lp, mode_increment_sup};
use hjlab::{Field, TorusGrid};

fn main() -> hjlab::Result<()> {
    let g = TorusGrid::new(1, 256, 1.0, 1)?;
    let k = 2.0;
    let u = Field::from_fn(g, |x| (2.0 * PI * k * x[0]).cos());
    let w = 2.0 * PI * k;
    for p in [1.0, 2.0, 3.0, 7.5] {
        println!("L^{p:<4} {:.8}  closed form {:.8}", lp_norm(&u, p)?, cosine_lp(p));
    }
    println!("W^2,2  {:.6}  closed form {:.6}", w2q_norm(&u, 2.0)?, cosine_lp(2.0) * (1.0 + w * w + w.powi(4)).sqrt());
    for a in [0.25, 0.5, 0.9] {
        println!("[u]_C^{a:<4} {:.6}  scan {:.6}", holder_seminorm(&u, a)?, mode_increment_sup(k, a));
    }
    println!("[u]_N^(0.5,2) {:.6}", nikolskii_seminorm(&u, 0.5, 2.0)?);
    println!("[u]_W^(0.5,2) {:.6}", slobodeckii_seminorm(&u, 0.5, 2.0)?);
    Ok(())
}

//! Backward density with the control drift and the duality identity, plus
//! the shifted inequality.

use hjlab::lab::{check_duality_identity, ManufacturedCase};
use hjlab::runner::execute::gaussian_density;

fn main() -> hjlab::Result<()> {
    for (n, nt) in [(64, 4096), (128, 16384)] {
        let mut case = ManufacturedCase::new(1, 2.0, n, nt, 0.5);
        case.stored = nt;
        let (problem, sol, _) = case.solve()?;
        let rho = gaussian_density(problem.grid, 0.3, 0.1);
        let r = check_duality_identity(&sol.u, &problem.f, &problem.spec, &rho, Some(&[n as i64 / 8]))?;
        println!(
            "n {n:>3}: u(T)rho {:+.6e}  u0 {:+.6e}  f {:+.6e}  L {:+.6e}  defect {:.3e}",
            r.u_tau, r.u0_term, r.f_term, r.lagrangian_term, r.defect
        );
        if let Some(s) = r.shifted {
            println!("        shifted: lhs {:+.6e} rhs {:+.6e} slack {:+.3e}", s.lhs, s.rhs, s.slack);
        }
    }
    Ok(())
}

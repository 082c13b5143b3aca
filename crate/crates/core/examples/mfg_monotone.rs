//! Monotone coupled system: fixed-point history and the a priori monitors.

use hjlab::mfg::{
    check_m_integrability, monitor_first_order, monitor_second_order, solve_mfg, spectral_tail_slope, Coupling,
    CouplingKind, MfgOptions, MfgSetup,
};

fn main() -> hjlab::Result<()> {
    let setup = MfgSetup::default();
    let problem = setup.problem(Coupling::new(CouplingKind::Monotone, 1.0, 1.0)?)?;
    let sol = solve_mfg(&problem, &MfgOptions::default())?;
    println!("status {:?} after {} iterations", sol.status, sol.iterations());
    for (i, r) in sol.residuals.iter().enumerate().step_by(4) {
        println!("  {i:>3}: {r:.3e}");
    }
    let fo = monitor_first_order(&sol, &problem)?;
    println!("gradient energy {:.6e}, density energy {:.6e}, identity defect {:.3e}", fo.gradient_energy, fo.density_energy, fo.identity_defect);
    let so = monitor_second_order(&sol, &problem)?;
    println!("hessian energy {:.6e}, density gradient energy {:.6e}", so.hessian_energy, so.density_gradient_energy);
    let ir = check_m_integrability(&sol, &problem, 2.0, 4.0)?;
    println!("sup ||m||_{} = {:.6}, initial {:.6}", ir.p, ir.sup_norm, ir.initial_norm);
    println!("tail slopes: u {:?}, m {:?}", spectral_tail_slope(sol.u.last()), spectral_tail_slope(sol.m.last()));
    Ok(())
}

//! Focusing coupling across an r-grid straddling `γ′/d`.

use hjlab::mfg::{sweep_thresholds, CouplingKind, MfgOptions, MfgSetup};

fn main() -> hjlab::Result<()> {
    let setup = MfgSetup { d: 2, n: 32, t_final: 0.25, nt: 32, ..MfgSetup::default() };
    let opts = MfgOptions { nt_internal: 128, ..MfgOptions::default() };
    let rec = sweep_thresholds(&setup, CouplingKind::Focusing, 1.0, &[0.5, 1.0, 1.5], &opts)?;
    for row in &rec.rows {
        println!("r {:.2} (threshold {}): {:?} {:?}", row.params["r"], row.params["threshold"], row.status, row.values);
    }
    for n in &rec.notes {
        println!("note: {n}");
    }
    Ok(())
}

//! Configuration, validation, orchestration and persistence.
//!
//! `run` validates first; nothing is solved for a config that fails
//! validation. Blow-ups inside an experiment are recorded as data.

pub mod config;
pub mod execute;
pub mod persist;
pub mod spaces;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exponents::{ExponentBook, HolderBranch, Regime};
use crate::grid::TorusGrid;
use crate::lab::{ExperimentRecord, Verdict};
use crate::mfg::CouplingKind;

pub use config::{ExperimentKind, RunConfig};
use persist::{slab_bytes, slab_header, write_artifact, Artifact};

/// Environment variable naming the directory that receives run outputs.
pub const OUTPUT_ROOT_ENV: &str = "HJLAB_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "hjlab-output";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Exit code for an error: bad input is 1, anything else 2.
pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::InvalidParameter { .. } | LabError::Config(_) => EXIT_INVALID,
        _ => EXIT_INTERNAL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub book: ExponentBook,
    pub classification: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

fn field(name: &str, ok: bool, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(LabError::param(name, reason()))
    }
}

fn prefixed(section: &str, e: LabError) -> LabError {
    match e {
        LabError::InvalidParameter { name, reason } => LabError::InvalidParameter { name: format!("{section}.{name}"), reason },
        other => other,
    }
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Below => "below",
        Regime::At => "at",
        Regime::Above => "above",
    }
}

/// Resolves `q`: fixed at the critical value for `critical` and `stability`,
/// required for the ladder kinds, otherwise `1`.
fn resolve_q(cfg: &RunConfig) -> Result<f64> {
    let e = &cfg.exponents;
    match cfg.kind {
        ExperimentKind::Critical | ExperimentKind::Stability => {
            let crit = ExponentBook::new(e.d, e.gamma, 1.0).map_err(|x| prefixed("exponents", x))?.q_crit_sub;
            if let Some(q) = e.q {
                field("exponents.q", (q - crit).abs() <= 1e-12, || {
                    format!("{q} must equal the critical exponent (d+2)(gamma-1)/gamma = {crit}")
                })?;
            }
            Ok(crit)
        }
        k if k.needs_q() => e.q.ok_or_else(|| LabError::param("exponents.q", format!("required for kind {}", k.name()))),
        _ => Ok(e.q.unwrap_or(1.0)),
    }
}

/// Checks every field the chosen kind reads and classifies the parameter point.
pub fn validate(cfg: &RunConfig) -> Result<ValidationReport> {
    let e = &cfg.exponents;
    let q = resolve_q(cfg)?;
    let book = ExponentBook::new(e.d, e.gamma, q).map_err(|x| prefixed("exponents", x))?;
    let kind = cfg.kind;
    let mut warnings = Vec::new();

    match kind {
        ExperimentKind::Hj | ExperimentKind::Fp | ExperimentKind::Duality => {
            let g = &cfg.grid;
            let stored = g.stored.unwrap_or(if kind == ExperimentKind::Hj { 16.min(g.nt) } else { g.nt });
            field("grid.nt", g.nt > 0, || "must be positive".into())?;
            field("grid.stored", stored > 0 && g.nt % stored == 0, || format!("{stored} must divide nt = {}", g.nt))?;
            TorusGrid::new(e.d, g.n, g.t_final, stored).map_err(|x| prefixed("grid", x))?;
            if kind == ExperimentKind::Duality {
                field("grid.stored", g.stored.is_none_or(|s| s == g.nt), || "duality stores every step".into())?;
            }
        }
        ExperimentKind::Maxreg | ExperimentKind::Holder | ExperimentKind::Lp => {
            let l = &cfg.ladder;
            field("ladder.sigmas", !l.sigmas.is_empty(), || "empty ladder".into())?;
            field("ladder.sigmas", l.sigmas.iter().all(|&s| s > 0.0 && s <= 0.5), || "entries must lie in (0, 0.5]".into())?;
            field("ladder.replicas", l.replicas >= 1, || "must be at least 1".into())?;
            field("ladder.max_slices", l.max_slices >= 1, || "must be at least 1".into())?;
            let s = &cfg.setup;
            field("setup.t_final", s.t_final > 0.0, || "must be positive".into())?;
            field("setup.n_min", s.n_min >= 4 && s.n_min <= s.n_max, || "need 4 <= n_min <= n_max".into())?;
            field("setup.band", s.band > 1.0, || "must exceed 1".into())?;
            if kind == ExperimentKind::Holder {
                field("exponents.q", book.alpha_pred.is_some(), || {
                    format!("q = {q} gives no Hoelder exponent; need q > (d+2)/gamma' = {}", (e.d as f64 + 2.0) / book.gamma_conj)
                })?;
            }
        }
        ExperimentKind::Critical | ExperimentKind::Stability => {
            let l = &cfg.ladder;
            field("ladder.ks", !l.ks.is_empty() && l.ks.iter().all(|&k| k > 0.0), || "need positive entries".into())?;
            let c = &cfg.critical;
            field("critical.nt_internal", c.nt > 0 && c.nt_internal % c.nt == 0, || {
                format!("{} must be a multiple of nt = {}", c.nt_internal, c.nt)
            })?;
            TorusGrid::new(e.d, c.n, c.t_final, c.nt).map_err(|x| prefixed("critical", x))?;
            if kind == ExperimentKind::Stability {
                field("exponents.gamma", e.gamma < 2.0, || "stability needs gamma < 2".into())?;
            }
            if book.q_crit_sub < 1.0 {
                field("exponents.gamma", kind != ExperimentKind::Stability, || {
                    format!("critical exponent {} is below 1", book.q_crit_sub)
                })?;
                warnings.push(format!("critical exponent {} is below 1; the ladder runs at q = 1", book.q_crit_sub));
            }
        }
        ExperimentKind::Mfg | ExperimentKind::Sweep => {
            let m = &cfg.mfg;
            TorusGrid::new(e.d, m.n, m.t_final, m.nt).map_err(|x| prefixed("mfg", x))?;
            field("mfg.terminal_amplitudes", !m.terminal_amplitudes.is_empty(), || "empty list".into())?;
            field("mfg.strength", m.strength >= 0.0 && m.strength.is_finite(), || "must be nonnegative".into())?;
            field("mfg.bump_width", m.bump_width > 0.0, || "must be positive".into())?;
            field("mfg.bump_amplitude", m.bump_amplitude > -1.0, || "must exceed -1 so m0 stays positive".into())?;
            field("mfg.p", m.p >= 1.0, || "must be >= 1".into())?;
            if let Some(mu) = m.mu {
                field("mfg.mu", mu > 1.0, || "must exceed 1".into())?;
            }
            if kind == ExperimentKind::Mfg {
                field("mfg.r", m.r > 0.0 && m.r.is_finite(), || "must be positive".into())?;
            } else {
                field("mfg.r_grid", !m.r_grid.is_empty() && m.r_grid.iter().all(|&r| r > 0.0), || {
                    "need positive entries".into()
                })?;
            }
            let s = &cfg.solver;
            field("solver.damping", s.damping > 0.0 && s.damping <= 1.0, || "must lie in (0, 1]".into())?;
            field("solver.tol", s.tol > 0.0, || "must be positive".into())?;
            field("solver.max_iters", s.max_iters > 0, || "must be positive".into())?;
            field("solver.nt_internal", s.nt_internal % m.nt == 0 && s.nt_internal > 0, || {
                format!("{} must be a multiple of mfg.nt = {}", s.nt_internal, m.nt)
            })?;
        }
        ExperimentKind::VerifySpaces => {
            field("tolerances.ensemble_members", cfg.tolerances.ensemble_members > 0, || "must be positive".into())?;
        }
    }
    let t = &cfg.tolerances;
    for (name, v) in [
        ("tolerances.accuracy", t.accuracy),
        ("tolerances.refinement_ratio", t.refinement_ratio),
        ("tolerances.duality", t.duality),
        ("tolerances.duality_gain", t.duality_gain),
        ("tolerances.positivity", t.positivity),
        ("tolerances.zero_drift", t.zero_drift),
        ("tolerances.identity_defect", t.identity_defect),
    ] {
        field(name, v > 0.0 && v.is_finite(), || "must be positive".into())?;
    }

    let mut c = BTreeMap::new();
    let gamma = e.gamma;
    let branch = if gamma < 2.0 {
        "subquadratic"
    } else if gamma > 2.0 {
        "superquadratic"
    } else {
        "quadratic"
    };
    c.insert("gamma_branch".into(), branch.into());
    c.insert("q_threshold".into(), persist::fmt_f64(book.q_threshold()));
    c.insert("q_regime".into(), regime_name(book.regime()).into());
    if gamma == 2.0 {
        let agree = (book.q_crit_sub - book.q_crit_super).abs() <= 1e-12;
        c.insert("branches_agree".into(), agree.to_string());
    }
    c.insert(
        "holder_branch".into(),
        match book.holder_branch {
            HolderBranch::Formula => "formula",
            HolderBranch::Free => "free",
            HolderBranch::None => "none",
        }
        .into(),
    );

    if gamma < 2.0 && gamma <= book.gamma_lower_maxreg() {
        warnings.push(format!(
            "gamma = {gamma} is outside the maximal-regularity hypothesis 1 + 2/(d+2) < gamma (1 + 2/(d+2) = {})",
            book.gamma_lower_maxreg()
        ));
    }
    if kind == ExperimentKind::Maxreg && book.regime() != Regime::Above {
        warnings.push(format!(
            "q = {q} is not above the critical exponent {}: verdicts are documented, not asserted (exploratory run)",
            book.q_threshold()
        ));
    }
    if matches!(kind, ExperimentKind::Mfg | ExperimentKind::Sweep) {
        let m = &cfg.mfg;
        if gamma <= book.gamma_lower_mfg() {
            warnings.push(format!(
                "gamma = {gamma} is outside the coupled existence range 1 + 1/(d+1) < gamma (= {})",
                book.gamma_lower_mfg()
            ));
        }
        let rs: Vec<f64> = if kind == ExperimentKind::Mfg { vec![m.r] } else { m.r_grid.clone() };
        let rmax = match m.coupling {
            CouplingKind::Monotone => book.r_max_monotone,
            CouplingKind::Focusing => book.r_max_focusing,
        };
        c.insert("r_threshold".into(), persist::fmt_f64(rmax));
        c.insert("monotone_admissible".into(), rs.iter().all(|&r| r < book.r_max_monotone).to_string());
        c.insert("focusing_admissible".into(), rs.iter().all(|&r| r < book.r_max_focusing).to_string());
        if let Some(r) = rs.iter().find(|&&r| r >= rmax) {
            warnings.push(format!(
                "r = {r} is not below the {:?} threshold {rmax}: convergence is recorded without verdict",
                m.coupling
            ));
        }
        if m.coupling == CouplingKind::Focusing && gamma > 2.0 {
            warnings.push("super-quadratic focusing runs tend to blow up before the threshold is informative".into());
        }
    }
    Ok(ValidationReport { book, classification: c, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub csv_schema_version: u32,
    pub tool_version: String,
    pub kind: ExperimentKind,
    pub run_name: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub validation: ValidationReport,
    pub row_columns: Vec<String>,
    #[serde(with = "crate::serde_f64::map")]
    pub ratios: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    /// Every asserted verdict passed.
    pub passed: bool,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub record: ExperimentRecord,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

/// Validates, executes and writes `rows.csv`, `verdicts.csv`, `record.json`,
/// optional slabs and `manifest.json` under `root/<output dir>`.
pub fn run(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let validation = validate(cfg)?;
    let hash = cfg.hash();
    let name = cfg.run_name();
    let dir = root.join(cfg.output.dir.clone().unwrap_or_else(|| name.clone()));
    fs::create_dir_all(&dir)?;

    let exec = execute::execute(cfg, &validation.book)?;
    let rec = exec.record;
    let mut artifacts = Vec::new();
    artifacts.push(write_artifact(&dir, "rows.csv", &persist::rows_csv(&rec, &hash, &name, Some(&validation.book))?)?);
    artifacts.push(write_artifact(&dir, "verdicts.csv", &persist::verdicts_csv(&rec, &hash, &name)?)?);
    artifacts.push(write_artifact(&dir, "record.json", rec.to_json().as_bytes())?);
    for (slab, field) in &exec.slabs {
        artifacts.push(write_artifact(&dir, &format!("{slab}.f64"), &slab_bytes(field))?);
        let header = serde_json::to_string_pretty(&slab_header(slab, field, &hash)).expect("header serializes");
        artifacts.push(write_artifact(&dir, &format!("{slab}.json"), header.as_bytes())?);
    }
    let manifest = Manifest {
        schema_version: persist::MANIFEST_SCHEMA_VERSION,
        csv_schema_version: persist::CSV_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind,
        run_name: name,
        seed: cfg.seed,
        config_hash: hash,
        config: cfg.clone(),
        validation,
        row_columns: persist::row_columns(&rec).0,
        ratios: rec.ratios.clone(),
        verdicts: rec.verdicts.clone(),
        notes: rec.notes.clone(),
        passed: rec.passed(),
        artifacts,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join("manifest.json"), text)?;
    Ok(RunOutcome { dir, manifest, record: rec })
}

/// `(name, summary)` for every experiment kind.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    ExperimentKind::ALL.iter().map(|k| (k.name(), k.summary())).collect()
}

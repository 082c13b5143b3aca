//! TOML run configuration. One file describes one experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::lab::{CriticalSetup, LadderSetup};
use crate::mfg::{CouplingKind, MfgOptions};
use crate::stepper::Integrator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Manufactured smooth solution with one refinement step.
    Hj,
    /// Density transport: mass, positivity and the zero-drift reduction.
    Fp,
    /// Adjoint duality identity and its shifted inequality.
    Duality,
    /// Maximal-regularity σ-ladder.
    Maxreg,
    /// Critical-exponent k-ladder against the truncated problem.
    Critical,
    /// Hölder seminorm ladder and fitted exponent.
    Holder,
    /// `L^p` bound ladder.
    Lp,
    /// Stability of the truncated problem at the critical exponent.
    Stability,
    /// One coupled solve per terminal amplitude, with monitors.
    Mfg,
    /// Coupled solves across an `r`-grid.
    Sweep,
    /// Function-space property suite.
    VerifySpaces,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::Hj,
        ExperimentKind::Fp,
        ExperimentKind::Duality,
        ExperimentKind::Maxreg,
        ExperimentKind::Critical,
        ExperimentKind::Holder,
        ExperimentKind::Lp,
        ExperimentKind::Stability,
        ExperimentKind::Mfg,
        ExperimentKind::Sweep,
        ExperimentKind::VerifySpaces,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Hj => "hj",
            ExperimentKind::Fp => "fp",
            ExperimentKind::Duality => "duality",
            ExperimentKind::Maxreg => "maxreg",
            ExperimentKind::Critical => "critical",
            ExperimentKind::Holder => "holder",
            ExperimentKind::Lp => "lp",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Mfg => "mfg",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::VerifySpaces => "verify-spaces",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::Hj => "manufactured smooth solution, error and refinement ratio",
            ExperimentKind::Fp => "density transport: mass, positivity, zero-drift heat reduction",
            ExperimentKind::Duality => "adjoint duality identity and shifted inequality",
            ExperimentKind::Maxreg => "maximal-regularity functional across a sigma-ladder",
            ExperimentKind::Critical => "critical exponent: truncated problems along a k-ladder",
            ExperimentKind::Holder => "Hoelder seminorm ladder and fitted exponent",
            ExperimentKind::Lp => "L^p bound of the positive part across a sigma-ladder",
            ExperimentKind::Stability => "stability of truncated problems at the critical exponent",
            ExperimentKind::Mfg => "coupled value/density solve with a priori monitors",
            ExperimentKind::Sweep => "coupled solves across an r-grid straddling the threshold",
            ExperimentKind::VerifySpaces => "norm anchors and interpolation ensembles",
        }
    }

    /// Kinds that take `q` from the config rather than fixing it.
    pub fn needs_q(self) -> bool {
        matches!(self, ExperimentKind::Maxreg | ExperimentKind::Holder | ExperimentKind::Lp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exponents {
    pub d: usize,
    pub gamma: f64,
    /// Forcing integrability; fixed to the critical value for `critical` and `stability`.
    pub q: Option<f64>,
}

impl Default for Exponents {
    fn default() -> Self {
        Exponents { d: 1, gamma: 2.0, q: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    /// Internal time steps.
    pub nt: usize,
    /// Stored slices; must divide `nt`. Defaults depend on the kind.
    pub stored: Option<usize>,
    pub t_final: f64,
    pub integrator: Integrator,
    /// Repeat at `(2n, 4nt)` and report the error ratio.
    pub refine: bool,
    /// Lattice shift for the shifted duality inequality, in cells along `x₁`.
    pub shift: Option<i64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n: 64,
            nt: 4096,
            stored: None,
            t_final: 0.5,
            integrator: Integrator::Etd2,
            refine: true,
            shift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSection {
    pub sigmas: Vec<f64>,
    /// Independent bump placements, seeded from the run seed.
    pub replicas: usize,
    pub ks: Vec<f64>,
    /// Slices per rung that get the full Hölder seminorm.
    pub max_slices: usize,
}

impl Default for LadderSection {
    fn default() -> Self {
        LadderSection {
            sigmas: vec![0.2, 0.141, 0.1, 0.0707],
            replicas: 1,
            ks: vec![1.0, 2.0, 4.0, 8.0],
            max_slices: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfgSection {
    pub n: usize,
    pub t_final: f64,
    pub nt: usize,
    pub bump_amplitude: f64,
    pub bump_width: f64,
    /// One solve per amplitude; two or more enable the exponent fit.
    pub terminal_amplitudes: Vec<f64>,
    pub coupling: CouplingKind,
    pub r: f64,
    pub strength: f64,
    pub r_grid: Vec<f64>,
    /// Drift integrability parameter; defaults to 2 for `γ ≤ 2`.
    pub mu: Option<f64>,
    /// Density exponent used when `d ≤ 2`.
    pub p: f64,
    /// Repeat from a second initial guess and compare.
    pub uniqueness: bool,
}

impl Default for MfgSection {
    fn default() -> Self {
        MfgSection {
            n: 64,
            t_final: 0.5,
            nt: 256,
            bump_amplitude: 2.0,
            bump_width: 0.1,
            terminal_amplitudes: vec![0.5],
            coupling: CouplingKind::Monotone,
            r: 1.0,
            strength: 1.0,
            r_grid: vec![0.5, 1.0, 2.0, 3.0],
            mu: None,
            p: 4.0,
            uniqueness: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub accuracy: f64,
    pub refinement_ratio: f64,
    pub duality: f64,
    pub duality_gain: f64,
    pub positivity: f64,
    pub zero_drift: f64,
    pub identity_defect: f64,
    pub ensemble_members: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            accuracy: 1e-5,
            refinement_ratio: 3.0,
            duality: 1e-3,
            duality_gain: 2.0,
            positivity: 1e-8,
            zero_drift: 1e-8,
            identity_defect: 1e-3,
            ensemble_members: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Directory under the output root; defaults to the run name.
    pub dir: Option<String>,
    /// Write solution fields as raw little-endian `f64` with a JSON sidecar.
    pub slabs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exponents: Exponents,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub ladder: LadderSection,
    #[serde(default)]
    pub setup: LadderSetup,
    #[serde(default)]
    pub critical: CriticalSetup,
    #[serde(default)]
    pub mfg: MfgSection,
    #[serde(default)]
    pub solver: MfgOptions,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    /// Defaults for `kind`.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        RunConfig {
            kind,
            name: None,
            seed: 0,
            exponents: Exponents::default(),
            grid: GridSection::default(),
            ladder: LadderSection::default(),
            setup: LadderSetup::default(),
            critical: CriticalSetup::default(),
            mfg: MfgSection::default(),
            solver: MfgOptions::default(),
            tolerances: Tolerances::default(),
            output: OutputSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn run_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    /// Normalized TOML with every default filled in.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the normalized config, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

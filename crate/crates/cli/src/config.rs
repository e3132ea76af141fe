use std::fs;
use std::path::{Path, PathBuf};

use cygshell::gapwidth::{GapKind, GapSpec, SlowKind};
use cygshell::stats::{seed_phase, SampleGrid, DEFAULT_Q};
use cygshell::{GapWidth, SampleMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MIN_X: f64 = 10.0;
pub const MIN_SAMPLES: usize = 10;
pub const MAX_J: u32 = 8;

/// One reproducible sampling experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub omega: GapSpec,
    #[serde(rename = "X")]
    pub big_x: f64,
    pub samples: usize,
    #[serde(rename = "Q", default = "default_q")]
    pub q: u64,
    #[serde(default)]
    pub mode: SampleMode,
    #[serde(default = "default_j_max")]
    pub j_max: u32,
    /// Selects the grid offset `seed_phase(seed)`.
    #[serde(default)]
    pub seed: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_q() -> u64 {
    DEFAULT_Q
}

fn default_j_max() -> u32 {
    4
}

impl ExperimentConfig {
    pub fn new(omega: GapSpec, big_x: f64, samples: usize) -> Self {
        Self {
            omega,
            big_x,
            samples,
            q: DEFAULT_Q,
            mode: SampleMode::default(),
            j_max: default_j_max(),
            seed: 0,
            out: None,
            threads: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if !(self.big_x.is_finite() && self.big_x >= MIN_X) {
            return bad(format!("X = {} must be finite and ≥ {MIN_X}", self.big_x));
        }
        if self.samples < MIN_SAMPLES {
            return bad(format!("samples = {} must be ≥ {MIN_SAMPLES}", self.samples));
        }
        if self.q == 0 {
            return bad("Q must be ≥ 1".into());
        }
        if self.j_max % 2 == 1 || self.j_max > MAX_J {
            return bad(format!("j_max = {} must be even and ≤ {MAX_J}", self.j_max));
        }
        if self.threads == Some(0) {
            return bad("threads must be ≥ 1".into());
        }
        Ok(())
    }

    pub fn gap_width(&self) -> Result<GapWidth, CliError> {
        Ok(GapWidth::from_spec(&self.omega)?)
    }

    pub fn grid(&self) -> Result<SampleGrid, CliError> {
        Ok(SampleGrid::with_phase(self.big_x, self.samples, self.q, seed_phase(self.seed))?)
    }
}

/// A slowly varying kind name, or a path to a JSON gap-width spec.
pub fn omega_from_arg(arg: &str) -> Result<GapSpec, CliError> {
    let slow = match GapKind::parse(arg) {
        Some(GapKind::InvLog) => Some(SlowKind::InvLog),
        Some(GapKind::InvLoglog) => Some(SlowKind::InvLoglog),
        Some(GapKind::ExpNegSqrtLog) => Some(SlowKind::ExpNegSqrtLog),
        Some(GapKind::Product | GapKind::Sum) => {
            return Err(CliError::Usage(format!("`{arg}` needs polynomials; pass a JSON spec file instead")))
        }
        None => None,
    };
    match slow {
        Some(kind) => Ok(GapSpec::slowly_varying(kind)),
        None => read_gap_spec(Path::new(arg)),
    }
}

pub fn read_gap_spec(path: &Path) -> Result<GapSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("`{}` is neither a gap-width kind nor a readable file: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed gap-width spec {}: {e}", path.display())))
}

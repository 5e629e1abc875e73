use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{HERM_TOL, PSD_TOL, SUPPORT_CUTOFF};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub psd_tol: f64,
    pub support_cutoff: f64,
    pub herm_tol: f64,
    /// Allowed violation for inequalities between optimized quantities.
    pub ineq_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd_tol: PSD_TOL,
            support_cutoff: SUPPORT_CUTOFF,
            herm_tol: HERM_TOL,
            ineq_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOpts {
    pub restarts: usize,
    pub max_evals: usize,
    pub seed: u64,
    pub rank_cutoff: f64,
    /// Also scan a dense grid of inputs (qubit inputs only) and report its maximum.
    pub grid_check: bool,
    pub step_init: f64,
    /// Use exact formulas for covariant pairs and replacer channels when available.
    pub closed_form: bool,
    /// Nudge witnesses toward full-rank marginals.
    pub require_full_rank: bool,
}

impl Default for OptimizerOpts {
    fn default() -> Self {
        OptimizerOpts {
            restarts: 32,
            max_evals: 2000,
            seed: 0,
            rank_cutoff: 1e-6,
            grid_check: false,
            step_init: 0.1,
            closed_form: true,
            require_full_rank: false,
        }
    }
}

impl OptimizerOpts {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn optimized_only(mut self) -> Self {
        self.closed_form = false;
        self
    }

    pub fn full_rank(mut self) -> Self {
        self.require_full_rank = true;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Quadrature {
    pub half_width: f64,
    pub nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { half_width: 20.0, nodes: 801 }
    }
}

impl Quadrature {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::InvalidArgument("quadrature half width must be positive".into()));
        }
        if self.nodes < 3 || self.nodes % 2 == 0 {
            return Err(Error::InvalidArgument("quadrature needs an odd node count >= 3".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub optimizer: OptimizerOpts,
    pub quadrature: Quadrature,
    pub seed: u64,
    pub output_path: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tolerances: Tolerances::default(),
            optimizer: OptimizerOpts::default(),
            quadrature: Quadrature::default(),
            seed: 0,
            output_path: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [
            ("psd_tol", t.psd_tol),
            ("support_cutoff", t.support_cutoff),
            ("herm_tol", t.herm_tol),
            ("ineq_tol", t.ineq_tol),
            ("rank_cutoff", self.optimizer.rank_cutoff),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.optimizer.restarts == 0 || self.optimizer.max_evals == 0 {
            return Err(Error::InvalidArgument("optimizer needs restarts and evals".into()));
        }
        self.quadrature.validate()
    }

    /// Hex SHA-256 of the canonical JSON encoding, output path excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_path = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

//! Controller variants and how to run one on an instance.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use deepc_core::variants::{self, ControlSolution, ControlSpec};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    GroundTruth,
    Basic,
    Hybrid,
    Svd,
    DdSpc,
    #[serde(rename = "spc")]
    ClassicalSpc,
    SvdIter,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::GroundTruth,
        Variant::Basic,
        Variant::Hybrid,
        Variant::Svd,
        Variant::DdSpc,
        Variant::ClassicalSpc,
        Variant::SvdIter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::GroundTruth => "ground-truth",
            Variant::Basic => "basic",
            Variant::Hybrid => "hybrid",
            Variant::Svd => "svd",
            Variant::DdSpc => "dd-spc",
            Variant::ClassicalSpc => "spc",
            Variant::SvdIter => "svd-iter",
        }
    }

    /// Whether the formulation carries the l1 and ridge weights.
    pub fn uses_lambda1(self) -> bool {
        matches!(self, Variant::Hybrid | Variant::Svd | Variant::DdSpc)
    }

    pub fn uses_lambda2(self) -> bool {
        matches!(self, Variant::Hybrid | Variant::Svd | Variant::SvdIter)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                BenchError::Config(format!("unknown variant `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// Library preprocessing shared by every solve of one variant on one instance.
pub enum Prepared {
    Model,
    Raw,
    Library(variants::PreprocessedLibrary),
}

pub fn prepare(variant: Variant, inst: &Instance, cfg: &ExperimentConfig) -> deepc_core::Result<Prepared> {
    Ok(match variant {
        Variant::GroundTruth => Prepared::Model,
        Variant::Basic | Variant::Hybrid | Variant::ClassicalSpc => Prepared::Raw,
        Variant::Svd => Prepared::Library(variants::preprocess_svd(&inst.lib)?),
        Variant::DdSpc => Prepared::Library(variants::build_spc_library(&inst.lib)?),
        Variant::SvdIter => Prepared::Library(variants::preprocess_svd_iter(
            &inst.lib,
            cfg.n_order,
            cfg.slra_eps,
            cfg.slra_max_iter,
        )?),
    })
}

pub fn solve_prepared(
    variant: Variant,
    prepared: &Prepared,
    inst: &Instance,
    spec: &ControlSpec,
) -> deepc_core::Result<ControlSolution> {
    match (variant, prepared) {
        (Variant::GroundTruth, _) => variants::solve_ground_truth(&inst.model, &inst.state, spec),
        (Variant::Basic, _) => variants::solve_basic_deepc(&inst.lib, &inst.online, spec),
        (Variant::Hybrid, _) => variants::solve_hybrid(&inst.lib, &inst.online, spec),
        (Variant::ClassicalSpc, _) => variants::solve_classical_spc(&inst.lib, &inst.online, spec),
        (Variant::Svd, Prepared::Library(p)) => variants::solve_svd(p, &inst.online, spec),
        (Variant::DdSpc, Prepared::Library(p)) => variants::solve_dd_spc(p, &inst.online, spec),
        (Variant::SvdIter, Prepared::Library(p)) => variants::solve_svd_iter(p, &inst.online, spec),
        (v, _) => Err(deepc_core::Error::InvalidArgument(format!("{v} needs its preprocessed library"))),
    }
}

/// Result of one variant on one instance.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub variant: Variant,
    /// Realized cost on the true plant; `None` on failure.
    pub cost: Option<f64>,
    /// Preprocessing plus solve, wall clock.
    pub seconds: f64,
    pub status: String,
    pub solution: Option<ControlSolution>,
}

impl Outcome {
    pub fn failed(&self) -> bool {
        self.cost.is_none()
    }
}

pub fn run(variant: Variant, inst: &Instance, spec: &ControlSpec, cfg: &ExperimentConfig) -> Outcome {
    let start = Instant::now();
    let solved = prepare(variant, inst, cfg).and_then(|p| solve_prepared(variant, &p, inst, spec));
    let seconds = start.elapsed().as_secs_f64();
    finish(variant, solved, inst, spec, seconds)
}

pub(crate) fn finish(
    variant: Variant,
    solved: deepc_core::Result<ControlSolution>,
    inst: &Instance,
    spec: &ControlSpec,
    seconds: f64,
) -> Outcome {
    let (cost, status, solution) = match solved {
        Ok(sol) if sol.is_optimal() => match inst.realized_cost(&sol.u, spec) {
            Ok(c) => (Some(c), "optimal".to_string(), Some(sol)),
            Err(e) => (None, format!("evaluation failed: {e}"), Some(sol)),
        },
        Ok(sol) => (None, format!("{:?}", sol.solver.status).to_lowercase(), Some(sol)),
        Err(e) => (None, format!("error: {e}"), None),
    };
    Outcome {
        variant,
        cost,
        seconds,
        status,
        solution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
        assert!("lasso".parse::<Variant>().is_err());
    }
}

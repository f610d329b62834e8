//! Experiment configuration: a flat JSON schema with two presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};
use crate::variant::Variant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlantChoice {
    TripleMassSpring,
    /// `eps` interpolates between the linearized (1) and nonlinear (0) dynamics.
    LotkaVolterra { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantChoice,
    /// Length of each pre-collected trajectory.
    pub t_data: usize,
    pub t_ini: usize,
    pub horizon: usize,
    /// Output measurement noise variance, both offline and online.
    pub noise_var: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_y: f64,
    /// `Q = q_scale·I`, `R = r_scale·I`.
    pub q_scale: f64,
    pub r_scale: f64,
    /// Input constraint `[lo, hi]` on every channel.
    pub u_box: [f64; 2],
    /// Uniform excitation range for data collection and the online window.
    pub excitation: [f64; 2],
    /// Half-width of the uniform initial-state distribution.
    pub x0_scale: f64,
    pub trials: usize,
    pub seed: u64,
    pub variants: Vec<Variant>,
    pub out: PathBuf,
    /// Model order handed to the SLRA preprocessing.
    pub n_order: usize,
    pub slra_eps: f64,
    pub slra_max_iter: usize,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    /// Multiplier of the Hessian scale used as "large" λ2 in the equivalence check.
    pub large_lambda2_factor: f64,
    pub lambda1_grid: Vec<f64>,
    pub lambda2_grid: Vec<f64>,
    pub eps_list: Vec<f64>,
}

impl ExperimentConfig {
    /// Triple-mass-spring benchmark settings.
    pub fn triple_mass() -> Self {
        Self {
            plant: PlantChoice::TripleMassSpring,
            t_data: 200,
            t_ini: 4,
            horizon: 40,
            noise_var: 0.01,
            lambda1: 30.0,
            lambda2: 30.0,
            lambda_y: 100.0,
            q_scale: 1.0,
            r_scale: 0.1,
            u_box: [-0.7, 0.7],
            excitation: [-0.7, 0.7],
            x0_scale: 1.0,
            trials: 100,
            seed: 1,
            variants: vec![Variant::Hybrid, Variant::Svd, Variant::DdSpc, Variant::SvdIter],
            out: PathBuf::from("results"),
            n_order: 8,
            slra_eps: deepc_core::slra::DEFAULT_EPS,
            slra_max_iter: deepc_core::slra::DEFAULT_MAX_ITER,
            qp_tol: deepc_core::qp::DEFAULT_TOL,
            qp_max_iter: deepc_core::qp::DEFAULT_MAX_ITER,
            large_lambda2_factor: 1e4,
            lambda1_grid: log_grid(-5.0, 4.0, 10),
            lambda2_grid: log_grid(-5.0, 4.0, 10),
            eps_list: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
        }
    }

    /// Lotka-Volterra settings for the nonlinearity sweep.
    pub fn lotka_volterra() -> Self {
        Self {
            plant: PlantChoice::LotkaVolterra { eps: 0.0 },
            t_data: 300,
            t_ini: 4,
            horizon: 60,
            noise_var: 0.0,
            lambda1: 300.0,
            lambda2: 100.0,
            lambda_y: 1e4,
            q_scale: 1.0,
            r_scale: 0.5,
            u_box: [-20.0, 20.0],
            excitation: [-5.0, 5.0],
            x0_scale: 5.0,
            n_order: 2,
            ..Self::triple_mass()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if let PlantChoice::LotkaVolterra { eps } = self.plant {
            if !(0.0..=1.0).contains(&eps) {
                return bad(format!("plant eps must lie in [0, 1], got {eps}"));
            }
        }
        if self.t_ini == 0 || self.horizon == 0 {
            return bad("t_ini and horizon must be positive".into());
        }
        if self.t_data < 2 * (self.t_ini + self.horizon) {
            return bad(format!("t_data = {} is too short for depth {}", self.t_data, self.t_ini + self.horizon));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return bad(format!("noise_var must be finite and ≥ 0, got {}", self.noise_var));
        }
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and ≥ 0, got {v}"));
            }
        }
        if !(self.lambda_y > 0.0 && self.lambda_y.is_finite()) {
            return bad(format!("lambda_y must be finite and > 0, got {}", self.lambda_y));
        }
        if !(self.q_scale > 0.0 && self.r_scale > 0.0 && self.q_scale.is_finite() && self.r_scale.is_finite()) {
            return bad("q_scale and r_scale must be positive".into());
        }
        for (name, [lo, hi]) in [("u_box", self.u_box), ("excitation", self.excitation)] {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return bad(format!("{name} must be a finite interval, got [{lo}, {hi}]"));
            }
        }
        if !(self.x0_scale >= 0.0 && self.x0_scale.is_finite()) {
            return bad(format!("x0_scale must be finite and ≥ 0, got {}", self.x0_scale));
        }
        if self.trials == 0 {
            return bad("trials must be ≥ 1".into());
        }
        if self.variants.is_empty() {
            return bad("variant list is empty".into());
        }
        if self.n_order == 0 {
            return bad("n_order must be ≥ 1".into());
        }
        if !(self.slra_eps > 0.0) || self.slra_max_iter == 0 {
            return bad("slra_eps must be > 0 and slra_max_iter ≥ 1".into());
        }
        if !(self.qp_tol > 0.0) || self.qp_max_iter == 0 {
            return bad("qp_tol must be > 0 and qp_max_iter ≥ 1".into());
        }
        if !(self.large_lambda2_factor > 0.0 && self.large_lambda2_factor.is_finite()) {
            return bad("large_lambda2_factor must be positive".into());
        }
        for (name, grid) in [("lambda1_grid", &self.lambda1_grid), ("lambda2_grid", &self.lambda2_grid)] {
            if grid.is_empty() || grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return bad(format!("{name} must be nonempty with finite nonnegative entries"));
            }
        }
        if self.eps_list.is_empty() || self.eps_list.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return bad("eps_list must be nonempty with entries in [0, 1]".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(compact.as_bytes())[..8])
    }

    pub fn with_plant_eps(&self, eps: f64) -> Self {
        Self {
            plant: PlantChoice::LotkaVolterra { eps },
            ..self.clone()
        }
    }
}

/// `count` points evenly spaced in log10 between `10^lo` and `10^hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        ExperimentConfig::triple_mass().validate().unwrap();
        ExperimentConfig::lotka_volterra().validate().unwrap();
    }

    #[test]
    fn json_roundtrip_keeps_hash() {
        let cfg = ExperimentConfig::lotka_volterra();
        let back: ExperimentConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(cfg.hash(), ExperimentConfig::triple_mass().hash());
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::triple_mass().to_json()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());

        let mut cfg = ExperimentConfig::triple_mass();
        cfg.u_box = [1.0, -1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::triple_mass();
        cfg.lambda_y = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::lotka_volterra().with_plant_eps(1.5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(-5.0, 4.0, 10);
        assert_eq!(g.len(), 10);
        assert!((g[0] - 1e-5).abs() < 1e-18 && (g[9] - 1e4).abs() < 1e-9);
        assert!((g[1] / g[0] - 10.0).abs() < 1e-9);
    }
}

//! Seeded trial instances: offline library, online window and true state.

use deepc_core::hankel::{partition, HankelPartition};
use deepc_core::matlib::{Mat, Vector};
use deepc_core::plants::{self, ChannelBox, LinearPlant, LotkaVolterra, NoiseSpec, Plant};
use deepc_core::rng::SeededRng;
use deepc_core::variants::{self, ControlSpec, OnlineData};

use crate::config::{ExperimentConfig, PlantChoice};
use crate::error::Result;

/// Offset of the online-window noise stream from the library stream.
const WINDOW_SEED_OFFSET: u64 = 7919;
/// Mask mixed into the trial seed for the initial state.
const STATE_SEED_MASK: u64 = 0x5eed;

#[derive(Debug, Clone)]
pub enum TruePlant {
    Linear(LinearPlant),
    LotkaVolterra(LotkaVolterra),
}

impl TruePlant {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match cfg.plant {
            PlantChoice::TripleMassSpring => TruePlant::Linear(plants::triple_mass_spring()),
            PlantChoice::LotkaVolterra { eps } => TruePlant::LotkaVolterra(LotkaVolterra::new(eps)?),
        })
    }

    pub fn as_plant(&self) -> &dyn Plant {
        match self {
            TruePlant::Linear(p) => p,
            TruePlant::LotkaVolterra(p) => p,
        }
    }

    /// Model used by the ground-truth controller: the plant itself, or the
    /// linearization about the equilibrium for Lotka-Volterra.
    pub fn model(&self) -> LinearPlant {
        match self {
            TruePlant::Linear(p) => p.clone(),
            TruePlant::LotkaVolterra(p) => p.linearization(),
        }
    }

    /// Initial state drawn for a trial: displaced disc angles at rest, or a
    /// uniform offset from the Lotka-Volterra equilibrium.
    fn initial_state(&self, rng: &mut SeededRng, scale: f64) -> Vector {
        match self {
            TruePlant::Linear(p) => Vector::from_fn(p.n_states(), |i, _| if i < 3 { rng.uniform_in(-scale, scale) } else { 0.0 }),
            TruePlant::LotkaVolterra(_) => Vector::from_fn(2, |_, _| rng.uniform_in(-scale, scale)),
        }
    }
}

pub struct Instance {
    pub index: usize,
    pub seed: u64,
    pub plant: TruePlant,
    pub model: LinearPlant,
    pub lib: HankelPartition,
    pub online: OnlineData,
    /// True plant state at decision time.
    pub state: Vector,
}

impl Instance {
    pub fn generate(cfg: &ExperimentConfig, index: usize) -> Result<Self> {
        Self::generate_with_noise(cfg, index, cfg.noise_var)
    }

    pub fn generate_with_noise(cfg: &ExperimentConfig, index: usize, noise_var: f64) -> Result<Self> {
        let plant = TruePlant::from_config(cfg)?;
        let seed = SeededRng::trial_seed(cfg.seed, index as u64);
        let m = plant.as_plant().n_inputs();
        let excitation = ChannelBox::uniform(m, cfg.excitation[0], cfg.excitation[1])?;
        let x_data = Vector::zeros(plant.as_plant().n_states());
        let rec = plants::record(plant.as_plant(), &x_data, cfg.t_data, &excitation, &NoiseSpec::new(noise_var, seed)?)?;
        let lib = partition(&rec.measured, cfg.t_ini, cfg.horizon)?;

        let mut rng = SeededRng::new(seed ^ STATE_SEED_MASK);
        let x0 = plant.initial_state(&mut rng, cfg.x0_scale);
        let window_noise = NoiseSpec::new(noise_var, seed.wrapping_add(WINDOW_SEED_OFFSET))?;
        let window = plants::record(plant.as_plant(), &x0, cfg.t_ini, &excitation, &window_noise)?;
        let online = OnlineData::from_window(window.measured.inputs(), window.measured.outputs())?;
        Ok(Self {
            index,
            seed,
            model: plant.model(),
            plant,
            lib,
            online,
            state: window.final_state,
        })
    }

    pub fn realized_cost(&self, u: &Vector, spec: &ControlSpec) -> deepc_core::Result<f64> {
        variants::realized_cost(self.plant.as_plant(), &self.state, u, spec)
    }

    /// True outputs under `u` applied open loop, one row per step.
    pub fn realized_outputs(&self, u: &Vector, n_inputs: usize) -> deepc_core::Result<Mat> {
        let steps = u.len() / n_inputs;
        let u_seq = Mat::from_row_slice(steps, n_inputs, u.as_slice());
        plants::simulate(self.plant.as_plant(), &self.state, &u_seq)
    }
}

/// Controller settings for `cfg` with explicit regularization weights.
pub fn control_spec(cfg: &ExperimentConfig, lambda1: f64, lambda2: f64, lambda_y: f64) -> Result<ControlSpec> {
    let plant = TruePlant::from_config(cfg)?;
    let (m, p) = (plant.as_plant().n_inputs(), plant.as_plant().n_outputs());
    let spec = ControlSpec::new(
        cfg.t_ini,
        cfg.horizon,
        Mat::identity(p, p) * cfg.q_scale,
        Mat::identity(m, m) * cfg.r_scale,
        ChannelBox::uniform(m, cfg.u_box[0], cfg.u_box[1])?,
    )?
    .with_lambdas(lambda1, lambda2, lambda_y)?
    .with_solver(cfg.qp_tol, cfg.qp_max_iter);
    Ok(spec)
}

pub fn default_spec(cfg: &ExperimentConfig) -> Result<ControlSpec> {
    control_spec(cfg, cfg.lambda1, cfg.lambda2, cfg.lambda_y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_reproducible_and_distinct() {
        let mut cfg = ExperimentConfig::triple_mass();
        cfg.t_data = 120;
        let a = Instance::generate(&cfg, 3).unwrap();
        let b = Instance::generate(&cfg, 3).unwrap();
        let c = Instance::generate(&cfg, 4).unwrap();
        assert_eq!(a.lib, b.lib);
        assert_eq!(a.state, b.state);
        assert_ne!(a.lib, c.lib);
        assert_eq!(a.seed, cfg.seed + 3);
    }

    #[test]
    fn lotka_volterra_instance_shapes() {
        let cfg = ExperimentConfig::lotka_volterra();
        let inst = Instance::generate(&cfg, 0).unwrap();
        assert_eq!(inst.lib.n_inputs(), 1);
        assert_eq!(inst.lib.n_outputs(), 2);
        assert_eq!(inst.lib.n_cols(), 300 - 64 + 1);
        assert_eq!(inst.model.a.nrows(), 2);
    }
}

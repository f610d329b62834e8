#![allow(dead_code)]

use deepc_core::hankel::{partition, HankelPartition};
use deepc_core::matlib::{Mat, Vector};
use deepc_core::plants::{self, ChannelBox, LinearPlant, NoiseSpec};
use deepc_core::rng::SeededRng;
use deepc_core::variants::{ControlSpec, OnlineData};

pub const T_DATA: usize = 200;
pub const T_INI: usize = 4;
pub const HORIZON: usize = 40;

pub struct Instance {
    pub plant: LinearPlant,
    pub lib: HankelPartition,
    pub clean_lib: HankelPartition,
    pub online: OnlineData,
    /// True plant state at decision time.
    pub state: Vector,
}

pub fn u_box() -> ChannelBox {
    ChannelBox::uniform(2, -0.7, 0.7).unwrap()
}

pub fn base_spec() -> ControlSpec {
    ControlSpec::new(T_INI, HORIZON, Mat::identity(3, 3), Mat::identity(2, 2) * 0.1, u_box()).unwrap()
}

/// Triple-mass-spring library and online window with output noise `variance`.
pub fn tms_instance(seed: u64, variance: f64) -> Instance {
    tms_instance_sized(seed, variance, T_DATA, T_INI, HORIZON)
}

pub fn tms_instance_sized(seed: u64, variance: f64, t_data: usize, t_ini: usize, horizon: usize) -> Instance {
    let plant = plants::triple_mass_spring();
    let rec = plants::record(&plant, &Vector::zeros(8), t_data, &u_box(), &NoiseSpec::new(variance, seed).unwrap()).unwrap();
    let lib = partition(&rec.measured, t_ini, horizon).unwrap();
    let clean = deepc_core::Trajectory::new(rec.measured.inputs().clone(), rec.clean_outputs.clone()).unwrap();
    let clean_lib = partition(&clean, t_ini, horizon).unwrap();
    let mut rng = SeededRng::new(seed ^ 0x5eed);
    let x0 = Vector::from_fn(8, |i, _| if i < 3 { rng.uniform_in(-1.0, 1.0) } else { 0.0 });
    let window = plants::record(&plant, &x0, t_ini, &u_box(), &NoiseSpec::new(variance, seed.wrapping_add(7919)).unwrap()).unwrap();
    let online = OnlineData::from_window(window.measured.inputs(), window.measured.outputs()).unwrap();
    Instance {
        plant,
        lib,
        clean_lib,
        online,
        state: window.final_state,
    }
}

pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.standard_normal())
}

/// Largest entrywise deviation over `(u, y, σy)`; `g` is never compared.
pub fn trajectory_gap(a: &deepc_core::variants::ControlSolution, b: &deepc_core::variants::ControlSolution) -> f64 {
    use deepc_core::matlib::max_abs_diff_vec;
    max_abs_diff_vec(&a.u, &b.u)
        .max(max_abs_diff_vec(&a.y_pred, &b.y_pred))
        .max(max_abs_diff_vec(&a.sigma_y, &b.sigma_y))
}

/// Orthogonal projector onto the column space of `a`.
pub fn column_projector(a: &Mat) -> Mat {
    deepc_core::matlib::rowspace_projector(&a.transpose(), deepc_core::matlib::DEFAULT_RANK_TOL).unwrap()
}

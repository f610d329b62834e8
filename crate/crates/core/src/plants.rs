//! Ground-truth simulators and seeded data collection.

use std::path::Path;

use crate::error::{Error, Result};
use crate::hankel::Trajectory;
use crate::io;
use crate::matlib::{self, Mat, Vector};
use crate::rng::SeededRng;

/// A discrete-time plant `x⁺ = f(x, u)`, `y = h(x, u)`.
pub trait Plant {
    fn n_states(&self) -> usize;
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;

    /// Returns `(x_next, y)` where `y` is the output at the current time.
    fn step(&self, x: &Vector, u: &Vector) -> Result<(Vector, Vector)>;
}

/// Iterates `step` from `x0`; row `k` of the result is the output at time `k`.
pub fn simulate(plant: &dyn Plant, x0: &Vector, u_seq: &Mat) -> Result<Mat> {
    Ok(rollout(plant, x0, u_seq)?.0)
}

/// Like [`simulate`] but also returns the state after the last input.
pub fn rollout(plant: &dyn Plant, x0: &Vector, u_seq: &Mat) -> Result<(Mat, Vector)> {
    if x0.len() != plant.n_states() {
        return Err(Error::dims("initial state", plant.n_states(), x0.len()));
    }
    if u_seq.ncols() != plant.n_inputs() {
        return Err(Error::dims("input sequence columns", plant.n_inputs(), u_seq.ncols()));
    }
    let mut ys = Mat::zeros(u_seq.nrows(), plant.n_outputs());
    let mut x = x0.clone();
    for k in 0..u_seq.nrows() {
        let u = u_seq.row(k).transpose();
        let (next, y) = plant.step(&x, &u)?;
        ys.set_row(k, &y.transpose());
        x = next;
    }
    Ok((ys, x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl LinearPlant {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims("A", format!("{n}×{n}"), format!("{:?}", a.shape())));
        }
        let m = b.ncols();
        let p = c.nrows();
        if b.nrows() != n {
            return Err(Error::dims("B rows", n, b.nrows()));
        }
        if c.ncols() != n {
            return Err(Error::dims("C columns", n, c.ncols()));
        }
        if d.shape() != (p, m) {
            return Err(Error::dims("D", format!("{p}×{m}"), format!("{:?}", d.shape())));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            matlib::ensure_finite(m, name)?;
        }
        Ok(Self { a, b, c, d })
    }

    /// One step of `x⁺ = Ax + Bu`, `y = Cx + Du`.
    pub fn step_linear(&self, x: &Vector, u: &Vector) -> Result<(Vector, Vector)> {
        if x.len() != self.a.nrows() {
            return Err(Error::dims("state", self.a.nrows(), x.len()));
        }
        if u.len() != self.b.ncols() {
            return Err(Error::dims("input", self.b.ncols(), u.len()));
        }
        Ok((&self.a * x + &self.b * u, &self.c * x + &self.d * u))
    }

    pub fn simulate_linear(&self, x0: &Vector, u_seq: &Mat) -> Result<Mat> {
        simulate(self, x0, u_seq)
    }

    /// `[B, AB, …, Aⁿ⁻¹B]`.
    pub fn controllability_matrix(&self) -> Mat {
        let n = self.a.nrows();
        let m = self.b.ncols();
        let mut out = Mat::zeros(n, n * m);
        let mut block = self.b.clone();
        for k in 0..n {
            out.view_mut((0, k * m), (n, m)).copy_from(&block);
            block = &self.a * block;
        }
        out
    }

    /// `col(C, CA, …, CAⁿ⁻¹)`.
    pub fn observability_matrix(&self) -> Mat {
        let n = self.a.nrows();
        let p = self.c.nrows();
        let mut out = Mat::zeros(n * p, n);
        let mut block = self.c.clone();
        for k in 0..n {
            out.view_mut((k * p, 0), (p, n)).copy_from(&block);
            block = block * &self.a;
        }
        out
    }

    pub fn spectral_radius(&self) -> f64 {
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Condensed prediction over `horizon` steps: `y = O·x₀ + Γ·u` with
    /// `y = col(y(0), …, y(N−1))` and `u = col(u(0), …, u(N−1))`.
    pub fn prediction_matrices(&self, horizon: usize) -> (Mat, Mat) {
        let (n, m, p) = (self.a.nrows(), self.b.ncols(), self.c.nrows());
        let mut obs = Mat::zeros(p * horizon, n);
        let mut gamma = Mat::zeros(p * horizon, m * horizon);
        // markov[k] = C A^(k-1) B for k ≥ 1, markov[0] = D
        let mut markov = Vec::with_capacity(horizon);
        markov.push(self.d.clone());
        let mut ca = self.c.clone();
        for k in 0..horizon {
            obs.view_mut((k * p, 0), (p, n)).copy_from(&ca);
            if k + 1 < horizon {
                markov.push(&ca * &self.b);
            }
            ca = ca * &self.a;
        }
        for i in 0..horizon {
            for j in 0..=i {
                gamma
                    .view_mut((i * p, j * m), (p, m))
                    .copy_from(&markov[i - j]);
            }
        }
        (obs, gamma)
    }

    /// Writes `A.csv`, `B.csv`, `C.csv` and `D.csv` into `dir`.
    pub fn export_csv(&self, dir: &Path) -> Result<()> {
        for (name, m) in [("A", &self.a), ("B", &self.b), ("C", &self.c), ("D", &self.d)] {
            io::write_text(&dir.join(format!("{name}.csv")), &io::matrix_to_csv(m))?;
        }
        Ok(())
    }
}

impl Plant for LinearPlant {
    fn n_states(&self) -> usize {
        self.a.nrows()
    }

    fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    fn step(&self, x: &Vector, u: &Vector) -> Result<(Vector, Vector)> {
        self.step_linear(x, u)
    }
}

/// Sample time of the triple-mass-spring benchmark [s].
pub const TRIPLE_MASS_SAMPLE_TIME: f64 = 0.1;

/// Triple-mass-spring benchmark with 8 states, 2 inputs and 3 outputs.
///
/// Three unit inertias on a shaft joined by unit torsional springs, with a
/// uniform viscous damping of 0.01 on every disc. Two motors, modelled as
/// first-order lags with unit time constant, apply torque to discs 1 and 3.
/// State order: three disc angles, three disc rates, two motor torques.
/// The outputs are the disc angles. Discretized by zero-order hold.
pub fn triple_mass_spring() -> LinearPlant {
    const INERTIA: f64 = 1.0;
    const STIFFNESS: f64 = 1.0;
    const DAMPING: f64 = 0.01;
    const MOTOR_TAU: f64 = 1.0;

    let mut ac = Mat::zeros(8, 8);
    for i in 0..3 {
        ac[(i, 3 + i)] = 1.0;
        ac[(3 + i, 3 + i)] = -DAMPING / INERTIA;
    }
    let k = STIFFNESS / INERTIA;
    // spring couplings 1–2 and 2–3
    let springs = [(0usize, 1usize), (1, 2)];
    for &(i, j) in &springs {
        ac[(3 + i, i)] -= k;
        ac[(3 + i, j)] += k;
        ac[(3 + j, j)] -= k;
        ac[(3 + j, i)] += k;
    }
    // motor torques drive discs 1 and 3
    ac[(3, 6)] = 1.0 / INERTIA;
    ac[(5, 7)] = 1.0 / INERTIA;
    ac[(6, 6)] = -1.0 / MOTOR_TAU;
    ac[(7, 7)] = -1.0 / MOTOR_TAU;

    let mut bc = Mat::zeros(8, 2);
    bc[(6, 0)] = 1.0 / MOTOR_TAU;
    bc[(7, 1)] = 1.0 / MOTOR_TAU;

    let mut c = Mat::zeros(3, 8);
    for i in 0..3 {
        c[(i, i)] = 1.0;
    }
    let (a, b) = zero_order_hold(&ac, &bc, TRIPLE_MASS_SAMPLE_TIME);
    LinearPlant::new(a, b, c, Mat::zeros(3, 2)).expect("triple-mass-spring dimensions are consistent")
}

/// Exact discretization via the exponential of `[[A, B], [0, 0]]·dt`.
pub fn zero_order_hold(ac: &Mat, bc: &Mat, dt: f64) -> (Mat, Mat) {
    let n = ac.nrows();
    let m = bc.ncols();
    let mut aug = Mat::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(ac * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(bc * dt));
    let e = aug.exp();
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    )
}

/// Interpolated Lotka–Volterra error dynamics, forward-Euler discretized.
///
/// `x̂⁺ = eps·f_lin(x̂, û) + (1 − eps)·f_nl(x̂, û)` in coordinates relative to
/// the equilibrium `x̄ = (c/d, a/b)`. The measured output is the full error
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct LotkaVolterra {
    pub eps: f64,
    pub dt: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl LotkaVolterra {
    pub fn new(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidArgument(format!(
                "interpolation weight must lie in [0, 1], got {eps}"
            )));
        }
        Ok(Self {
            eps,
            dt: 0.1,
            a: 0.5,
            b: 0.025,
            c: 0.5,
            d: 0.005,
        })
    }

    /// `(c/d, a/b)`: prey and predator populations at rest.
    pub fn equilibrium(&self) -> [f64; 2] {
        [self.c / self.d, self.a / self.b]
    }

    pub fn f_linear(&self, x: &[f64; 2], u: f64) -> [f64; 2] {
        let [xb1, xb2] = self.equilibrium();
        [
            x[0] + self.dt * (-self.b * xb1 * x[1]),
            x[1] + self.dt * (self.d * xb2 * x[0] + u),
        ]
    }

    pub fn f_nonlinear(&self, x: &[f64; 2], u: f64) -> [f64; 2] {
        let [xb1, xb2] = self.equilibrium();
        let (p1, p2) = (x[0] + xb1, x[1] + xb2);
        [
            x[0] + self.dt * (self.a * p1 - self.b * p1 * p2),
            x[1] + self.dt * (self.d * p1 * p2 - self.c * p2 + u),
        ]
    }

    pub fn lv_step(&self, x: &[f64; 2], u: f64) -> Result<[f64; 2]> {
        let lin = self.f_linear(x, u);
        let nl = self.f_nonlinear(x, u);
        let next = [
            self.eps * lin[0] + (1.0 - self.eps) * nl[0],
            self.eps * lin[1] + (1.0 - self.eps) * nl[1],
        ];
        if let Some(row) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "Lotka-Volterra state",
                row,
                col: 0,
            });
        }
        Ok(next)
    }

    /// The `eps = 1` dynamics as a state-space model with `y = x̂`.
    pub fn linearization(&self) -> LinearPlant {
        let [xb1, xb2] = self.equilibrium();
        let a = Mat::from_row_slice(
            2,
            2,
            &[1.0, -self.dt * self.b * xb1, self.dt * self.d * xb2, 1.0],
        );
        let b = Mat::from_column_slice(2, 1, &[0.0, self.dt]);
        LinearPlant::new(a, b, Mat::identity(2, 2), Mat::zeros(2, 1))
            .expect("linearization dimensions are consistent")
    }
}

impl Plant for LotkaVolterra {
    fn n_states(&self) -> usize {
        2
    }

    fn n_inputs(&self) -> usize {
        1
    }

    fn n_outputs(&self) -> usize {
        2
    }

    fn step(&self, x: &Vector, u: &Vector) -> Result<(Vector, Vector)> {
        if x.len() != 2 {
            return Err(Error::dims("Lotka-Volterra state", 2, x.len()));
        }
        if u.len() != 1 {
            return Err(Error::dims("Lotka-Volterra input", 1, u.len()));
        }
        let next = self.lv_step(&[x[0], x[1]], u[0])?;
        Ok((Vector::from_row_slice(&next), x.clone()))
    }
}

/// Per-channel interval set; infinite endpoints mean "unbounded".
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChannelBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dims("channel box", lower.len(), upper.len()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(Error::InvalidArgument(format!(
                "channel box needs lower ≤ upper, got {lower:?} / {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lo, hi]` on every channel.
    pub fn uniform(channels: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; channels], vec![hi; channels])
    }

    pub fn unbounded(channels: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; channels],
            upper: vec![f64::INFINITY; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.lower.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower
            .iter()
            .chain(&self.upper)
            .any(|v| v.is_finite())
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// Bounds for a stacked `col(v(0), …, v(N−1))`.
    pub fn repeated(&self, horizon: usize) -> (Vector, Vector) {
        let q = self.channels();
        (
            Vector::from_fn(q * horizon, |i, _| self.lower[i % q]),
            Vector::from_fn(q * horizon, |i, _| self.upper[i % q]),
        )
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vector {
        Vector::from_fn(self.channels(), |i, _| {
            rng.uniform_in(self.lower[i], self.upper[i])
        })
    }
}

/// Additive i.i.d. Gaussian measurement noise on every output sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(variance: f64, seed: u64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be finite and nonnegative, got {variance}"
            )));
        }
        Ok(Self { variance, seed })
    }

    pub fn noiseless(seed: u64) -> Self {
        Self { variance: 0.0, seed }
    }
}

/// A data-collection run with the measured data and the ground truth behind it.
#[derive(Debug, Clone)]
pub struct Recording {
    /// Noise-free inputs and noisy outputs.
    pub measured: Trajectory,
    /// Outputs before noise was added.
    pub clean_outputs: Mat,
    /// Plant state after the last sample.
    pub final_state: Vector,
}

/// Drives `plant` from `x0` for `length` steps with inputs drawn i.i.d.
/// uniformly from `excitation`, adding Gaussian noise to the outputs.
///
/// All inputs are drawn from the seeded stream before any noise sample, so
/// recordings with equal seeds share their inputs regardless of variance.
pub fn record(
    plant: &dyn Plant,
    x0: &Vector,
    length: usize,
    excitation: &ChannelBox,
    noise: &NoiseSpec,
) -> Result<Recording> {
    if excitation.channels() != plant.n_inputs() {
        return Err(Error::dims("excitation box", plant.n_inputs(), excitation.channels()));
    }
    if !excitation.is_finite() {
        return Err(Error::InvalidArgument("excitation box must be finite".into()));
    }
    if length == 0 {
        return Err(Error::InvalidArgument("trajectory length must be positive".into()));
    }
    let mut rng = SeededRng::new(noise.seed);
    let mut u = Mat::zeros(length, plant.n_inputs());
    for k in 0..length {
        u.set_row(k, &excitation.sample(&mut rng).transpose());
    }
    let (clean, final_state) = rollout(plant, x0, &u)?;
    let mut y = clean.clone();
    if noise.variance > 0.0 {
        let sd = noise.variance.sqrt();
        for k in 0..length {
            for j in 0..y.ncols() {
                y[(k, j)] += rng.normal(0.0, sd);
            }
        }
    }
    Ok(Recording {
        measured: Trajectory::new(u, y)?,
        clean_outputs: clean,
        final_state,
    })
}

/// Offline data collection from the zero initial state.
pub fn collect_trajectory(
    plant: &dyn Plant,
    length: usize,
    excitation: &ChannelBox,
    noise: &NoiseSpec,
) -> Result<Trajectory> {
    let x0 = Vector::zeros(plant.n_states());
    Ok(record(plant, &x0, length, excitation, noise)?.measured)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_plant() -> LinearPlant {
        LinearPlant::new(
            Mat::identity(2, 2),
            Mat::identity(2, 2),
            Mat::identity(2, 2),
            Mat::zeros(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn step_examples() {
        let p = identity_plant();
        let (x, y) = p
            .step_linear(&Vector::zeros(2), &Vector::from_vec(vec![1.0, 0.0]))
            .unwrap();
        assert_eq!(x, Vector::from_vec(vec![1.0, 0.0]));
        assert_eq!(y, Vector::zeros(2));
        let (x, y) = p.step_linear(&Vector::zeros(2), &Vector::zeros(2)).unwrap();
        assert_eq!((x, y), (Vector::zeros(2), Vector::zeros(2)));
        assert!(p.step_linear(&Vector::zeros(3), &Vector::zeros(2)).is_err());
    }

    #[test]
    fn simulate_one_step_matches_step() {
        let p = triple_mass_spring();
        let x0 = Vector::from_fn(8, |i, _| i as f64 * 0.1 - 0.3);
        let u = Mat::from_row_slice(1, 2, &[0.2, -0.4]);
        let ys = p.simulate_linear(&x0, &u).unwrap();
        let (_, y) = p.step_linear(&x0, &u.row(0).transpose()).unwrap();
        assert_eq!(ys.row(0).transpose(), y);
        let zero = p.simulate_linear(&Vector::zeros(8), &Mat::zeros(5, 2)).unwrap();
        assert_eq!(zero, Mat::zeros(5, 3));
    }

    #[test]
    fn plant_rejects_bad_dimensions() {
        assert!(LinearPlant::new(Mat::zeros(2, 2), Mat::zeros(3, 1), Mat::zeros(1, 2), Mat::zeros(1, 1)).is_err());
        assert!(LinearPlant::new(Mat::zeros(2, 2), Mat::zeros(2, 1), Mat::zeros(1, 2), Mat::zeros(2, 1)).is_err());
    }

    #[test]
    fn triple_mass_spring_shape_and_stability() {
        let p = triple_mass_spring();
        assert_eq!((p.n_states(), p.n_inputs(), p.n_outputs()), (8, 2, 3));
        assert!(p.spectral_radius() <= 1.0 + 1e-9, "rho = {}", p.spectral_radius());
        assert_eq!(matlib::numeric_rank(&p.controllability_matrix(), 1e-12).unwrap(), 8);
        assert_eq!(matlib::numeric_rank(&p.observability_matrix(), 1e-12).unwrap(), 8);
    }

    #[test]
    fn zoh_of_integrator() {
        let (a, b) = zero_order_hold(
            &Mat::from_row_slice(1, 1, &[0.0]),
            &Mat::from_row_slice(1, 1, &[2.0]),
            0.5,
        );
        assert_abs_diff_eq!(a[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b[(0, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn prediction_matrices_match_rollout() {
        let p = triple_mass_spring();
        let n = 6;
        let (obs, gamma) = p.prediction_matrices(n);
        let x0 = Vector::from_fn(8, |i, _| (i as f64).cos());
        let u = Mat::from_fn(n, 2, |k, j| (k as f64 * 0.7 + j as f64).sin());
        let ys = p.simulate_linear(&x0, &u).unwrap();
        let u_stacked = Vector::from_iterator(2 * n, u.transpose().iter().cloned());
        let pred = obs * &x0 + gamma * u_stacked;
        for k in 0..n {
            for j in 0..3 {
                assert_abs_diff_eq!(pred[3 * k + j], ys[(k, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lotka_volterra_examples() {
        for eps in [0.0, 0.3, 1.0] {
            let lv = LotkaVolterra::new(eps).unwrap();
            assert_eq!(lv.lv_step(&[0.0, 0.0], 0.0).unwrap(), [0.0, 0.0]);
        }
        let lv = LotkaVolterra::new(1.0).unwrap();
        let next = lv.lv_step(&[1.0, 0.0], 0.0).unwrap();
        assert_abs_diff_eq!(next[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(next[1], 0.01, epsilon = 1e-15);
        assert!(LotkaVolterra::new(1.5).is_err());
    }

    #[test]
    fn lotka_volterra_nonlinear_equilibrium() {
        let lv = LotkaVolterra::new(0.0).unwrap();
        let [b1, b2] = lv.equilibrium();
        assert_eq!((b1, b2), (100.0, 20.0));
        let f = lv.f_nonlinear(&[0.0, 0.0], 0.0);
        assert!(f[0].abs() < 1e-13 && f[1].abs() < 1e-13);
    }

    #[test]
    fn lotka_volterra_linear_limit_matches_linearization() {
        let lv = LotkaVolterra::new(1.0).unwrap();
        let lin = lv.linearization();
        let x = Vector::from_vec(vec![3.0, -2.0]);
        let u = Vector::from_vec(vec![1.5]);
        let (a, ya) = lv.step(&x, &u).unwrap();
        let (b, yb) = lin.step(&x, &u).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        assert_eq!(ya, yb);
    }

    #[test]
    fn channel_box_validation() {
        assert!(ChannelBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(ChannelBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        let b = ChannelBox::uniform(2, -0.7, 0.7).unwrap();
        assert!(b.is_finite() && b.is_bounded());
        assert!(!ChannelBox::unbounded(2).is_bounded());
        let (lo, hi) = b.repeated(3);
        assert_eq!(lo.len(), 6);
        assert!(lo.iter().all(|&v| v == -0.7) && hi.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn noiseless_recording_matches_rollout() {
        let p = triple_mass_spring();
        let exc = ChannelBox::uniform(2, -1.0, 1.0).unwrap();
        let rec = record(&p, &Vector::zeros(8), 50, &exc, &NoiseSpec::noiseless(3)).unwrap();
        let ys = p.simulate_linear(&Vector::zeros(8), rec.measured.inputs()).unwrap();
        assert_eq!(rec.measured.outputs(), &ys);
        assert_eq!(rec.clean_outputs, ys);
        assert!(rec.measured.inputs().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn recording_is_deterministic_and_shares_inputs() {
        let p = triple_mass_spring();
        let exc = ChannelBox::uniform(2, -1.0, 1.0).unwrap();
        let a = collect_trajectory(&p, 40, &exc, &NoiseSpec::new(0.01, 9).unwrap()).unwrap();
        let b = collect_trajectory(&p, 40, &exc, &NoiseSpec::new(0.01, 9).unwrap()).unwrap();
        let c = collect_trajectory(&p, 40, &exc, &NoiseSpec::noiseless(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.inputs(), c.inputs());
        assert_ne!(a.outputs(), c.outputs());
        assert!(NoiseSpec::new(-1.0, 0).is_err());
    }
}

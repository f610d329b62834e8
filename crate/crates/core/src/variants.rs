//! Predictive controllers: model-based ground truth and the data-driven
//! formulations built on a Hankel library.
//!
//! Every data-driven variant is posed over library coefficients `g` with
//! `u = U_F g`, `y = Y_F g` and `σy = Y_P g − y_ini` eliminated, then handed
//! to the interior-point solver in [`crate::qp`]. Stacked vectors interleave
//! channels per time step, matching the Hankel row layout.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hankel::HankelPartition;
use crate::io::fmt_f64;
use crate::matlib::{self, Mat, Vector};
use crate::plants::{self, ChannelBox, LinearPlant, Plant};
use crate::qp::{self, QpSolution, QuadProgram, ReducedTerms};
use crate::slra;

#[derive(Debug, Clone)]
pub struct ControlSpec {
    pub t_ini: usize,
    pub n_horizon: usize,
    /// p×p output weight.
    pub q_weight: Mat,
    /// m×m input weight.
    pub r_weight: Mat,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `f64::INFINITY` enforces `σy = 0` as a hard constraint.
    pub lambda_y: f64,
    pub u_box: ChannelBox,
    pub y_box: Option<ChannelBox>,
    /// Stacked reference of length p·N.
    pub y_ref: Vector,
    pub tol: f64,
    pub max_iter: usize,
}

impl ControlSpec {
    /// Regulation problem (`y_ref = 0`, no output box, `λ1 = λ2 = 0`, `λy = 1`).
    pub fn new(t_ini: usize, n_horizon: usize, q_weight: Mat, r_weight: Mat, u_box: ChannelBox) -> Result<Self> {
        if t_ini == 0 || n_horizon == 0 {
            return Err(Error::InvalidArgument("t_ini and the horizon must be positive".into()));
        }
        let p = q_weight.nrows();
        let spec = Self {
            t_ini,
            n_horizon,
            y_ref: Vector::zeros(p * n_horizon),
            q_weight,
            r_weight,
            lambda1: 0.0,
            lambda2: 0.0,
            lambda_y: 1.0,
            u_box,
            y_box: None,
            tol: qp::DEFAULT_TOL,
            max_iter: qp::DEFAULT_MAX_ITER,
        };
        spec.check_weights()?;
        Ok(spec)
    }

    pub fn with_lambdas(mut self, lambda1: f64, lambda2: f64, lambda_y: f64) -> Result<Self> {
        for (v, name) in [(lambda1, "lambda1"), (lambda2, "lambda2")] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and ≥ 0, got {v}")));
            }
        }
        if !(lambda_y >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda_y must be ≥ 0, got {lambda_y}")));
        }
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        self.lambda_y = lambda_y;
        Ok(self)
    }

    pub fn with_y_box(mut self, y_box: ChannelBox) -> Result<Self> {
        if y_box.channels() != self.n_outputs() {
            return Err(Error::dims("output box", self.n_outputs(), y_box.channels()));
        }
        self.y_box = Some(y_box);
        Ok(self)
    }

    pub fn with_y_ref(mut self, y_ref: Vector) -> Result<Self> {
        if y_ref.len() != self.n_outputs() * self.n_horizon {
            return Err(Error::dims("reference", self.n_outputs() * self.n_horizon, y_ref.len()));
        }
        matlib::ensure_finite_vec(&y_ref, "reference")?;
        self.y_ref = y_ref;
        Ok(self)
    }

    pub fn with_solver(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    pub fn n_inputs(&self) -> usize {
        self.r_weight.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.q_weight.nrows()
    }

    /// `I_N ⊗ R`.
    pub fn r_stack(&self) -> Mat {
        matlib::kron_identity(self.n_horizon, &self.r_weight)
    }

    /// `I_N ⊗ Q`.
    pub fn q_stack(&self) -> Mat {
        matlib::kron_identity(self.n_horizon, &self.q_weight)
    }

    fn check_weights(&self) -> Result<()> {
        let (p, m) = (self.q_weight.nrows(), self.r_weight.nrows());
        if self.q_weight.shape() != (p, p) || self.r_weight.shape() != (m, m) {
            return Err(Error::InvalidArgument("stage weights must be square".into()));
        }
        matlib::ensure_finite(&self.q_weight, "output weight")?;
        matlib::ensure_finite(&self.r_weight, "input weight")?;
        if matlib::max_abs_diff(&self.q_weight, &self.q_weight.transpose()) > 1e-12
            || matlib::max_abs_diff(&self.r_weight, &self.r_weight.transpose()) > 1e-12
        {
            return Err(Error::InvalidArgument("stage weights must be symmetric".into()));
        }
        if self.r_weight.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument("input weight must be positive definite".into()));
        }
        let q_min = self.q_weight.clone().symmetric_eigenvalues().min();
        if q_min < -1e-12 * (1.0 + matlib::max_abs(&self.q_weight)) {
            return Err(Error::InvalidArgument("output weight must be positive semidefinite".into()));
        }
        if self.u_box.channels() != m {
            return Err(Error::dims("input box", m, self.u_box.channels()));
        }
        Ok(())
    }

    fn check_library(&self, lib: &HankelPartition) -> Result<()> {
        if lib.n_inputs() != self.n_inputs() || lib.n_outputs() != self.n_outputs() {
            return Err(Error::dims(
                "library channels",
                format!("m = {}, p = {}", self.n_inputs(), self.n_outputs()),
                format!("m = {}, p = {}", lib.n_inputs(), lib.n_outputs()),
            ));
        }
        if lib.t_ini != self.t_ini || lib.horizon != self.n_horizon {
            return Err(Error::dims(
                "library windows",
                format!("T_ini = {}, N = {}", self.t_ini, self.n_horizon),
                format!("T_ini = {}, N = {}", lib.t_ini, lib.horizon),
            ));
        }
        Ok(())
    }

    fn check_online(&self, online: &OnlineData) -> Result<()> {
        if online.u_ini.len() != self.n_inputs() * self.t_ini || online.y_ini.len() != self.n_outputs() * self.t_ini {
            return Err(Error::dims(
                "online data",
                format!("u_ini {}, y_ini {}", self.n_inputs() * self.t_ini, self.n_outputs() * self.t_ini),
                format!("{}, {}", online.u_ini.len(), online.y_ini.len()),
            ));
        }
        Ok(())
    }

    fn u_bounds(&self) -> (Vector, Vector) {
        self.u_box.repeated(self.n_horizon)
    }

    fn y_bounds(&self) -> Option<(Vector, Vector)> {
        self.y_box.as_ref().filter(|b| b.is_bounded()).map(|b| b.repeated(self.n_horizon))
    }
}

/// The most recent `T_ini` samples preceding the decision time.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineData {
    pub u_ini: Vector,
    pub y_ini: Vector,
}

impl OnlineData {
    pub fn new(u_ini: Vector, y_ini: Vector) -> Result<Self> {
        matlib::ensure_finite_vec(&u_ini, "u_ini")?;
        matlib::ensure_finite_vec(&y_ini, "y_ini")?;
        Ok(Self { u_ini, y_ini })
    }

    /// Stacks the rows of a `T_ini × m` input and `T_ini × p` output window.
    pub fn from_window(u: &Mat, y: &Mat) -> Result<Self> {
        Self::new(stack_rows(u), stack_rows(y))
    }
}

pub(crate) fn stack_rows(m: &Mat) -> Vector {
    Vector::from_iterator(m.len(), m.transpose().iter().cloned())
}

#[derive(Debug, Clone)]
pub struct ControlSolution {
    pub u: Vector,
    pub y_pred: Vector,
    pub sigma_y: Vector,
    pub g: Vector,
    pub objective: f64,
    pub solver: QpSolution,
}

impl ControlSolution {
    pub fn is_optimal(&self) -> bool {
        self.solver.is_optimal()
    }

    /// `k,u1..um,y1..yp` with one row per predicted step.
    pub fn to_csv(&self, n_inputs: usize, n_outputs: usize) -> Result<String> {
        if n_inputs == 0 || n_outputs == 0 || self.u.len() % n_inputs != 0 {
            return Err(Error::InvalidArgument("channel counts do not divide the solution".into()));
        }
        let steps = self.u.len() / n_inputs;
        if self.y_pred.len() != steps * n_outputs {
            return Err(Error::dims("predicted outputs", steps * n_outputs, self.y_pred.len()));
        }
        let mut out = String::from("k");
        for j in 1..=n_inputs {
            let _ = write!(out, ",u{j}");
        }
        for j in 1..=n_outputs {
            let _ = write!(out, ",y{j}");
        }
        out.push('\n');
        for k in 0..steps {
            let _ = write!(out, "{k}");
            for j in 0..n_inputs {
                let _ = write!(out, ",{}", fmt_f64(self.u[k * n_inputs + j]));
            }
            for j in 0..n_outputs {
                let _ = write!(out, ",{}", fmt_f64(self.y_pred[k * n_outputs + j]));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Raw,
    Svd,
    SpcProjected,
    SlraSvd,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Raw => "raw",
            Provenance::Svd => "svd",
            Provenance::SpcProjected => "spc-projected",
            Provenance::SlraSvd => "slra-svd",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlraSummary {
    pub iterations: usize,
    pub final_rel_change: f64,
    pub converged: bool,
}

/// A library after variant-specific preprocessing.
#[derive(Debug, Clone)]
pub struct PreprocessedLibrary {
    pub blocks: HankelPartition,
    pub provenance: Provenance,
    /// Present for SLRA-refined libraries; `converged == false` is a warning.
    pub slra: Option<SlraSummary>,
}

impl PreprocessedLibrary {
    pub fn raw(lib: HankelPartition) -> Self {
        Self {
            blocks: lib,
            provenance: Provenance::Raw,
            slra: None,
        }
    }

    fn expect(&self, provenance: Provenance) -> Result<()> {
        if self.provenance != provenance {
            return Err(Error::InvalidArgument(format!(
                "expected a {} library, got {}",
                provenance.as_str(),
                self.provenance.as_str()
            )));
        }
        Ok(())
    }
}

/// Model-based MPC on the true linear model (inputs as decision variables,
/// outputs condensed through `y = O x_ini + Γ u`).
pub fn solve_ground_truth(plant: &LinearPlant, x_ini: &Vector, spec: &ControlSpec) -> Result<ControlSolution> {
    let (m, p) = (spec.n_inputs(), spec.n_outputs());
    if plant.b.ncols() != m || plant.c.nrows() != p {
        return Err(Error::dims(
            "plant channels",
            format!("m = {m}, p = {p}"),
            format!("m = {}, p = {}", plant.b.ncols(), plant.c.nrows()),
        ));
    }
    if x_ini.len() != plant.a.nrows() {
        return Err(Error::dims("initial state", plant.a.nrows(), x_ini.len()));
    }
    matlib::ensure_finite_vec(x_ini, "initial state")?;
    let n = spec.n_horizon;
    let (obs, gamma) = plant.prediction_matrices(n);
    let free = &obs * x_ini - &spec.y_ref;
    let q_stack = spec.q_stack();
    let gt_q = gamma.transpose() * &q_stack;
    let hess = (spec.r_stack() + &gt_q * &gamma) * 2.0;
    let lin = (&gt_q * &free) * 2.0;
    let constant = free.dot(&(&q_stack * &free));

    let nu = m * n;
    let y_bounds = spec.y_bounds();
    let ny = if y_bounds.is_some() { p * n } else { 0 };
    let mut p_mat = Mat::zeros(nu + ny, nu + ny);
    p_mat.view_mut((0, 0), (nu, nu)).copy_from(&hess);
    let mut q_vec = Vector::zeros(nu + ny);
    q_vec.rows_mut(0, nu).copy_from(&lin);
    let (ulo, uhi) = spec.u_bounds();
    let mut lower = Vector::from_element(nu + ny, f64::NEG_INFINITY);
    let mut upper = Vector::from_element(nu + ny, f64::INFINITY);
    lower.rows_mut(0, nu).copy_from(&ulo);
    upper.rows_mut(0, nu).copy_from(&uhi);
    let mut prob = QuadProgram::new(p_mat, q_vec)?.with_constant(constant);
    if let Some((ylo, yhi)) = y_bounds {
        // s = Γu + O x_ini carries the output box
        let mut a = Mat::zeros(ny, nu + ny);
        a.view_mut((0, 0), (ny, nu)).copy_from(&gamma);
        a.view_mut((0, nu), (ny, ny)).copy_from(&(-Mat::identity(ny, ny)));
        lower.rows_mut(nu, ny).copy_from(&ylo);
        upper.rows_mut(nu, ny).copy_from(&yhi);
        prob = prob.with_equalities(a, -(&obs * x_ini))?;
    }
    let prob = prob.with_bounds(lower, upper)?;
    let sol = qp::solve(&prob, spec.tol, spec.max_iter)?;
    let u = sol.z.rows(0, nu).into_owned();
    let y_pred = &obs * x_ini + &gamma * &u;
    Ok(ControlSolution {
        u,
        y_pred,
        sigma_y: Vector::zeros(p * spec.t_ini),
        g: Vector::zeros(0),
        objective: sol.objective,
        solver: sol,
    })
}

struct Regularization<'a> {
    lambda1: f64,
    lambda2: f64,
    lambda_y: f64,
    null_projector: Option<&'a Mat>,
}

fn solve_over_g(
    blocks: &HankelPartition,
    yf: &Mat,
    online: &OnlineData,
    spec: &ControlSpec,
    reg: Regularization,
) -> Result<ControlSolution> {
    spec.check_library(blocks)?;
    spec.check_online(online)?;
    let r_stack = spec.r_stack();
    let q_stack = spec.q_stack();
    let (ulo, uhi) = spec.u_bounds();
    let y_bounds = spec.y_bounds();
    let terms = ReducedTerms {
        up: &blocks.up,
        yp: &blocks.yp,
        uf: &blocks.uf,
        yf,
        r_stack: &r_stack,
        q_stack: &q_stack,
        u_ini: &online.u_ini,
        y_ini: &online.y_ini,
        y_ref: &spec.y_ref,
        lambda1: reg.lambda1,
        lambda2: reg.lambda2,
        lambda_y: reg.lambda_y,
        null_projector: reg.null_projector,
        u_bounds: spec.u_box.is_bounded().then_some((&ulo, &uhi)),
        y_bounds: y_bounds.as_ref().map(|(lo, hi)| (lo, hi)),
    };
    let (prob, layout) = qp::assemble_reduced(&terms)?;
    let sol = qp::solve(&prob, spec.tol, spec.max_iter)?;
    let g = sol.z.rows(layout.g.start, layout.g.len()).into_owned();
    Ok(ControlSolution {
        u: &blocks.uf * &g,
        y_pred: yf * &g,
        sigma_y: &blocks.yp * &g - &online.y_ini,
        objective: sol.objective,
        g,
        solver: sol,
    })
}

/// Plain DeePC: hard `H g = col(u_ini, y_ini, u, y)`, no slack, no regularizer.
pub fn solve_basic_deepc(lib: &HankelPartition, online: &OnlineData, spec: &ControlSpec) -> Result<ControlSolution> {
    solve_over_g(
        lib,
        &lib.yf,
        online,
        spec,
        Regularization {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda_y: f64::INFINITY,
            null_projector: None,
        },
    )
}

/// `I − H₁†H₁` for `H₁ = col(U_P, Y_P, U_F)`.
pub fn h1_null_projector(lib: &HankelPartition) -> Result<Mat> {
    let pi1 = matlib::rowspace_projector(&lib.h1(), matlib::DEFAULT_RANK_TOL)?;
    Ok(Mat::identity(lib.n_cols(), lib.n_cols()) - pi1)
}

fn solve_regularized(blocks: &HankelPartition, online: &OnlineData, spec: &ControlSpec, lambda1: f64) -> Result<ControlSolution> {
    check_slack_weight(spec)?;
    let null = if spec.lambda2 > 0.0 { Some(h1_null_projector(blocks)?) } else { None };
    solve_over_g(
        blocks,
        &blocks.yf,
        online,
        spec,
        Regularization {
            lambda1,
            lambda2: spec.lambda2,
            lambda_y: spec.lambda_y,
            null_projector: null.as_ref(),
        },
    )
}

fn check_slack_weight(spec: &ControlSpec) -> Result<()> {
    if spec.lambda_y > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("this formulation needs lambda_y > 0".into()))
    }
}

/// `λ1‖g‖₁ + λ2‖(I − Π₁)g‖² + λy‖σy‖²` on the raw library.
pub fn solve_hybrid(lib: &HankelPartition, online: &OnlineData, spec: &ControlSpec) -> Result<ControlSolution> {
    solve_regularized(lib, online, spec, spec.lambda1)
}

/// `factor` times the largest eigenvalue of the quadratic form in `g` that
/// the regularized formulations build before the `λ2` term is added; a
/// scale-aware choice of a "large" `λ2`.
pub fn scaled_lambda2(lib: &HankelPartition, spec: &ControlSpec, factor: f64) -> Result<f64> {
    spec.check_library(lib)?;
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale factor must be positive, got {factor}")));
    }
    let mut hess = lib.uf.transpose() * spec.r_stack() * &lib.uf + lib.yf.transpose() * spec.q_stack() * &lib.yf;
    if spec.lambda_y.is_finite() {
        hess += spec.lambda_y * (lib.yp.transpose() * &lib.yp);
    }
    hess *= 2.0;
    Ok(factor * hess.symmetric_eigenvalues().max())
}

/// Replaces `H` by `W Σ` from its compact SVD.
pub fn preprocess_svd(lib: &HankelPartition) -> Result<PreprocessedLibrary> {
    let svd = matlib::compact_svd(&lib.stacked(), matlib::DEFAULT_RANK_TOL)?;
    Ok(PreprocessedLibrary {
        blocks: repartition(&svd.scaled_left(), lib)?,
        provenance: Provenance::Svd,
        slra: None,
    })
}

fn repartition(stacked: &Mat, like: &HankelPartition) -> Result<HankelPartition> {
    let (m, p) = (like.n_inputs(), like.n_outputs());
    let (t, n) = (like.t_ini, like.horizon);
    let mut row = 0;
    let mut take = |rows: usize| {
        let blk = stacked.rows(row, rows).into_owned();
        row += rows;
        blk
    };
    let up = take(m * t);
    let yp = take(p * t);
    let uf = take(m * n);
    let yf = take(p * n);
    HankelPartition::from_blocks(up, yp, uf, yf, t, n)
}

/// Hybrid formulation on an SVD-reduced library.
pub fn solve_svd(prelib: &PreprocessedLibrary, online: &OnlineData, spec: &ControlSpec) -> Result<ControlSolution> {
    prelib.expect(Provenance::Svd)?;
    solve_regularized(&prelib.blocks, online, spec, spec.lambda1)
}

/// Replaces `Y_F` by `M = Y_F Π₁`.
pub fn build_spc_library(lib: &HankelPartition) -> Result<PreprocessedLibrary> {
    let pi1 = matlib::rowspace_projector(&lib.h1(), matlib::DEFAULT_RANK_TOL)?;
    let mut blocks = lib.clone();
    blocks.yf = &lib.yf * pi1;
    Ok(PreprocessedLibrary {
        blocks,
        provenance: Provenance::SpcProjected,
        slra: None,
    })
}

/// `λ1‖g‖₁ + λy‖σy‖²` with the projected predictor `y = M g`.
pub fn solve_dd_spc(prelib: &PreprocessedLibrary, online: &OnlineData, spec: &ControlSpec) -> Result<ControlSolution> {
    prelib.expect(Provenance::SpcProjected)?;
    check_slack_weight(spec)?;
    solve_over_g(
        &prelib.blocks,
        &prelib.blocks.yf,
        online,
        spec,
        Regularization {
            lambda1: spec.lambda1,
            lambda2: 0.0,
            lambda_y: spec.lambda_y,
            null_projector: None,
        },
    )
}

/// The least-squares predictor `Y_F H₁†`, split column-wise into its
/// `(u_ini, y_ini, u)` parts.
pub fn spc_predictor(lib: &HankelPartition) -> Result<(Mat, Mat, Mat)> {
    let k = &lib.yf * matlib::pinv(&lib.h1(), matlib::DEFAULT_RANK_TOL)?;
    let (a, b) = (lib.up.nrows(), lib.yp.nrows());
    let c = lib.uf.nrows();
    Ok((
        k.columns(0, a).into_owned(),
        k.columns(a, b).into_owned(),
        k.columns(a + b, c).into_owned(),
    ))
}

/// Classical SPC over `(u, σy)` with `y = Y_F H₁† col(u_ini, y_ini + σy, u)`.
pub fn solve_classical_spc(lib: &HankelPartition, online: &OnlineData, spec: &ControlSpec) -> Result<ControlSolution> {
    spec.check_library(lib)?;
    spec.check_online(online)?;
    check_slack_weight(spec)?;
    let hard_slack = spec.lambda_y.is_infinite();
    let (k_up, k_yp, k_uf) = spc_predictor(lib)?;
    let nu = k_uf.ncols();
    let ns = if hard_slack { 0 } else { k_yp.ncols() };
    let py = k_uf.nrows();
    let base = &k_up * &online.u_ini + &k_yp * &online.y_ini - &spec.y_ref;

    // y − y_ref = base + S z, z = (u, σy)
    let mut s = Mat::zeros(py, nu + ns);
    s.view_mut((0, 0), (py, nu)).copy_from(&k_uf);
    if ns > 0 {
        s.view_mut((0, nu), (py, ns)).copy_from(&k_yp);
    }
    let q_stack = spec.q_stack();
    let st_q = s.transpose() * &q_stack;
    let mut hess = &st_q * &s;
    {
        let mut uu = hess.view_mut((0, 0), (nu, nu));
        uu += spec.r_stack();
    }
    if ns > 0 {
        for i in nu..nu + ns {
            hess[(i, i)] += spec.lambda_y;
        }
    }
    let lin = (&st_q * &base) * 2.0;
    let constant = base.dot(&(&q_stack * &base));

    let y_bounds = spec.y_bounds();
    let ny = if y_bounds.is_some() { py } else { 0 };
    let nz = nu + ns + ny;
    let mut p_mat = Mat::zeros(nz, nz);
    p_mat.view_mut((0, 0), (nu + ns, nu + ns)).copy_from(&(hess * 2.0));
    let mut q_vec = Vector::zeros(nz);
    q_vec.rows_mut(0, nu + ns).copy_from(&lin);
    let (ulo, uhi) = spec.u_bounds();
    let mut lower = Vector::from_element(nz, f64::NEG_INFINITY);
    let mut upper = Vector::from_element(nz, f64::INFINITY);
    lower.rows_mut(0, nu).copy_from(&ulo);
    upper.rows_mut(0, nu).copy_from(&uhi);
    let mut prob = QuadProgram::new(p_mat, q_vec)?.with_constant(constant);
    if let Some((ylo, yhi)) = y_bounds {
        let mut a = Mat::zeros(ny, nz);
        a.view_mut((0, 0), (py, nu + ns)).copy_from(&s);
        a.view_mut((0, nu + ns), (ny, ny)).copy_from(&(-Mat::identity(ny, ny)));
        lower.rows_mut(nu + ns, ny).copy_from(&ylo);
        upper.rows_mut(nu + ns, ny).copy_from(&yhi);
        prob = prob.with_equalities(a, -(&base + &spec.y_ref))?;
    }
    let prob = prob.with_bounds(lower, upper)?;
    let sol = qp::solve(&prob, spec.tol, spec.max_iter)?;
    let u = sol.z.rows(0, nu).into_owned();
    let sigma_y = if ns > 0 {
        sol.z.rows(nu, ns).into_owned()
    } else {
        Vector::zeros(k_yp.ncols())
    };
    let y_pred = &k_up * &online.u_ini + &k_yp * (&online.y_ini + &sigma_y) + &k_uf * &u;
    Ok(ControlSolution {
        u,
        y_pred,
        sigma_y,
        g: Vector::zeros(0),
        objective: sol.objective,
        solver: sol,
    })
}

/// SLRA-denoised output Hankel, then the leading `m·L + n_order` SVD
/// triplets of `col(U_P, Y_P*, U_F, Y_F*)` as `W̃Σ̃`.
pub fn preprocess_svd_iter(
    lib: &HankelPartition,
    n_order: usize,
    eps: f64,
    max_iter: usize,
) -> Result<PreprocessedLibrary> {
    if n_order == 0 {
        return Err(Error::InvalidArgument("model order must be positive".into()));
    }
    let p = lib.n_outputs();
    let report = slra::iterative_slra(&lib.output_hankel(), &lib.input_hankel(), p, n_order, eps, max_iter)?;
    let (yp, yf) = HankelPartition::split_rows(&report.h_y_star, p * lib.t_ini);
    let refined = HankelPartition::from_blocks(lib.up.clone(), yp, lib.uf.clone(), yf, lib.t_ini, lib.horizon)?;
    let keep = lib.n_inputs() * lib.depth() + n_order;
    let svd = matlib::compact_svd(&refined.stacked(), matlib::DEFAULT_RANK_TOL)?;
    if svd.rank() < keep {
        return Err(Error::InvalidArgument(format!(
            "refined library has rank {} < m·L + n = {keep}; the data is not exciting enough",
            svd.rank()
        )));
    }
    Ok(PreprocessedLibrary {
        blocks: repartition(&svd.truncated(keep).scaled_left(), lib)?,
        provenance: Provenance::SlraSvd,
        slra: Some(SlraSummary {
            iterations: report.iterations,
            final_rel_change: report.final_rel_change,
            converged: report.converged,
        }),
    })
}

/// `λ2‖(I − Π̂₁)ĝ‖² + λy‖σy‖²` on the SLRA-refined library (no l1 term).
pub fn solve_svd_iter(prelib: &PreprocessedLibrary, online: &OnlineData, spec: &ControlSpec) -> Result<ControlSolution> {
    prelib.expect(Provenance::SlraSvd)?;
    solve_regularized(&prelib.blocks, online, spec, 0.0)
}

/// Cost of applying `u` open loop to the true plant from `true_state`:
/// `Σ ‖u(k)‖²_R + ‖y(k) − y_ref(k)‖²_Q`.
pub fn realized_cost(plant: &dyn Plant, true_state: &Vector, u_applied: &Vector, spec: &ControlSpec) -> Result<f64> {
    let (m, p) = (spec.n_inputs(), spec.n_outputs());
    let n = spec.n_horizon;
    if u_applied.len() != m * n {
        return Err(Error::dims("applied inputs", m * n, u_applied.len()));
    }
    if plant.n_inputs() != m || plant.n_outputs() != p {
        return Err(Error::dims("plant channels", format!("m = {m}, p = {p}"), format!("m = {}, p = {}", plant.n_inputs(), plant.n_outputs())));
    }
    let u_seq = Mat::from_row_slice(n, m, u_applied.as_slice());
    let y = plants::simulate(plant, true_state, &u_seq)?;
    let mut cost = 0.0;
    for k in 0..n {
        let uk = u_seq.row(k).transpose();
        let ek = y.row(k).transpose() - spec.y_ref.rows(k * p, p);
        cost += uk.dot(&(&spec.r_weight * &uk)) + ek.dot(&(&spec.q_weight * &ek));
    }
    Ok(cost)
}

/// Residuals of the two conditions under which the SVD reduction preserves
/// the regularized problem, with `G = I − Π₁` and `Ḡ = I − Π̄₁`:
/// the row-space containment of `H GᵀG` and `‖VᵀGᵀGV − ḠᵀḠ‖`.
pub fn svd_reduction_conditions(lib: &HankelPartition) -> Result<(f64, f64)> {
    let h = lib.stacked();
    let svd = matlib::compact_svd(&h, matlib::DEFAULT_RANK_TOL)?;
    let reduced = repartition(&svd.scaled_left(), lib)?;
    let g = h1_null_projector(lib)?;
    let g_bar = h1_null_projector(&reduced)?;
    let gtg = g.transpose() * &g;
    let hg = &h * &gtg;
    let pi_h = &svd.v * svd.v.transpose();
    let containment = matlib::max_abs(&(&hg - &hg * pi_h));
    let reduced_gram = svd.v.transpose() * &gtg * &svd.v;
    let exchange = matlib::max_abs_diff(&reduced_gram, &(g_bar.transpose() * &g_bar));
    Ok((containment, exchange))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_plant() -> LinearPlant {
        LinearPlant::new(
            Mat::from_element(1, 1, 0.9),
            Mat::from_element(1, 1, 0.5),
            Mat::from_element(1, 1, 2.0),
            Mat::zeros(1, 1),
        )
        .unwrap()
    }

    fn scalar_spec(horizon: usize, q: f64, r: f64) -> ControlSpec {
        ControlSpec::new(
            1,
            horizon,
            Mat::from_element(1, 1, q),
            Mat::from_element(1, 1, r),
            ChannelBox::unbounded(1),
        )
        .unwrap()
    }

    #[test]
    fn regulation_at_rest_is_free() {
        let spec = ControlSpec::new(1, 5, Mat::identity(1, 1), Mat::identity(1, 1), ChannelBox::uniform(1, -1.0, 1.0).unwrap()).unwrap();
        let sol = solve_ground_truth(&scalar_plant(), &Vector::zeros(1), &spec).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.u.amax() < 1e-8);
        assert!(sol.objective.abs() < 1e-8);
    }

    #[test]
    fn scalar_two_step_closed_form() {
        // y(t) = C x_ini does not depend on u, so the first input acts through y(t+1)
        let plant = scalar_plant();
        let (a, b, c) = (0.9, 0.5, 2.0);
        let (q, r) = (3.0, 0.7);
        let x = 1.3;
        let spec = scalar_spec(2, q, r);
        let sol = solve_ground_truth(&plant, &Vector::from_element(1, x), &spec).unwrap();
        let expected = -(b * c * q * c * a * x) / (b * c * q * c * b + r);
        assert_abs_diff_eq!(sol.u[0], expected, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.u[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn ground_truth_objective_is_realized_cost() {
        let plant = plants::triple_mass_spring();
        let spec = ControlSpec::new(
            4,
            10,
            Mat::identity(3, 3),
            Mat::identity(2, 2) * 0.1,
            ChannelBox::uniform(2, -0.7, 0.7).unwrap(),
        )
        .unwrap();
        let x = Vector::from_fn(8, |i, _| ((i + 1) as f64).sin());
        let sol = solve_ground_truth(&plant, &x, &spec).unwrap();
        assert!(sol.is_optimal());
        let cost = realized_cost(&plant, &x, &sol.u, &spec).unwrap();
        assert_abs_diff_eq!(cost, sol.objective, epsilon = 1e-8 * (1.0 + cost));
        assert!(sol.u.iter().all(|v| v.abs() <= 0.7 + 1e-9));
    }

    #[test]
    fn zero_input_from_rest_costs_nothing() {
        let spec = scalar_spec(4, 1.0, 1.0);
        let c = realized_cost(&scalar_plant(), &Vector::zeros(1), &Vector::zeros(4), &spec).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn output_box_is_respected() {
        let plant = scalar_plant();
        let spec = scalar_spec(3, 1.0, 0.01)
            .with_y_box(ChannelBox::new(vec![0.5], vec![10.0]).unwrap())
            .unwrap();
        let sol = solve_ground_truth(&plant, &Vector::from_element(1, 1.0), &spec).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.y_pred.iter().all(|v| *v >= 0.5 - 1e-8));
    }

    #[test]
    fn csv_layout() {
        let sol = ControlSolution {
            u: Vector::from_vec(vec![1.0, 2.0]),
            y_pred: Vector::from_vec(vec![0.5, 0.25]),
            sigma_y: Vector::zeros(0),
            g: Vector::zeros(0),
            objective: 0.0,
            solver: qp::solve(&QuadProgram::new(Mat::identity(1, 1), Vector::zeros(1)).unwrap(), 1e-9, 10).unwrap(),
        };
        let csv = sol.to_csv(1, 1).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,u1,y1");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,2.0000000000000000e0,"));
    }

    #[test]
    fn rejects_bad_weights() {
        let u_box = ChannelBox::unbounded(1);
        assert!(ControlSpec::new(1, 2, Mat::identity(1, 1), Mat::zeros(1, 1), u_box.clone()).is_err());
        assert!(ControlSpec::new(1, 2, -Mat::identity(1, 1), Mat::identity(1, 1), u_box.clone()).is_err());
        assert!(ControlSpec::new(0, 2, Mat::identity(1, 1), Mat::identity(1, 1), u_box).is_err());
    }
}

//! Dense convex QP solver.
//!
//! Solves
//!
//! ```text
//! minimize    ½ zᵀ P z + qᵀ z + Σ wᵢ |zᵢ| + c
//! subject to  A z = b,   l ≤ z ≤ u
//! ```
//!
//! with a Mehrotra predictor–corrector primal–dual interior-point method on
//! the full KKT system. Variables carrying an l1 weight are split as
//! `z = z⁺ − z⁻` with `z± ≥ 0`, which turns the problem into a smooth QP.
//! Each Newton system is Ruiz-equilibrated, lightly regularized, LU-factored
//! and polished by iterative refinement against the unregularized matrix, so
//! singular `P` and redundant equality rows are handled without special cases.

use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io;
use crate::matlib::{self, Mat, Vector};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Relative least-squares residual of `A z = b` above which the equality
/// system is declared inconsistent.
pub const INCONSISTENCY_TOL: f64 = 1e-6;

const STEP_FRACTION: f64 = 0.995;
const POLISH_RETRIES: usize = 6;
const KKT_REGULARIZATION: f64 = 1e-11;
const REFINEMENT_STEPS: usize = 4;
const RUIZ_PASSES: usize = 8;

#[derive(Debug, Clone)]
pub struct QuadProgram {
    pub p_mat: Mat,
    pub q_vec: Vector,
    pub l1_weights: Vector,
    pub a_eq: Mat,
    pub b_eq: Vector,
    pub lower: Vector,
    pub upper: Vector,
    /// Constant added to the reported objective.
    pub constant: f64,
}

impl QuadProgram {
    /// Unconstrained `½ zᵀPz + qᵀz`; `P` is symmetrized.
    pub fn new(p_mat: Mat, q_vec: Vector) -> Result<Self> {
        let n = q_vec.len();
        if p_mat.shape() != (n, n) {
            return Err(Error::dims("QP Hessian", format!("{n}×{n}"), format!("{:?}", p_mat.shape())));
        }
        matlib::ensure_finite(&p_mat, "QP Hessian")?;
        matlib::ensure_finite_vec(&q_vec, "QP linear term")?;
        let p_mat = (&p_mat + p_mat.transpose()) * 0.5;
        Ok(Self {
            p_mat,
            q_vec,
            l1_weights: Vector::zeros(n),
            a_eq: Mat::zeros(0, n),
            b_eq: Vector::zeros(0),
            lower: Vector::from_element(n, f64::NEG_INFINITY),
            upper: Vector::from_element(n, f64::INFINITY),
            constant: 0.0,
        })
    }

    pub fn with_equalities(mut self, a_eq: Mat, b_eq: Vector) -> Result<Self> {
        if a_eq.ncols() != self.n_vars() || a_eq.nrows() != b_eq.len() {
            return Err(Error::dims(
                "QP equalities",
                format!("k×{} with k = len(b)", self.n_vars()),
                format!("{:?} and {}", a_eq.shape(), b_eq.len()),
            ));
        }
        matlib::ensure_finite(&a_eq, "QP equality matrix")?;
        matlib::ensure_finite_vec(&b_eq, "QP equality right-hand side")?;
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        Ok(self)
    }

    pub fn with_bounds(mut self, lower: Vector, upper: Vector) -> Result<Self> {
        let n = self.n_vars();
        if lower.len() != n || upper.len() != n {
            return Err(Error::dims("QP bounds", n, format!("{}/{}", lower.len(), upper.len())));
        }
        for i in 0..n {
            let (l, u) = (lower[i], upper[i]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!(
                    "QP bounds on variable {i} are inconsistent: [{l}, {u}]"
                )));
            }
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn with_l1(mut self, weights: Vector) -> Result<Self> {
        if weights.len() != self.n_vars() {
            return Err(Error::dims("QP l1 weights", self.n_vars(), weights.len()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("l1 weights must be finite and nonnegative".into()));
        }
        self.l1_weights = weights;
        Ok(self)
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn n_vars(&self) -> usize {
        self.q_vec.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b_eq.len()
    }

    /// `½ zᵀPz + qᵀz + Σ wᵢ|zᵢ| + c`.
    pub fn objective(&self, z: &Vector) -> f64 {
        0.5 * z.dot(&(&self.p_mat * z))
            + self.q_vec.dot(z)
            + self.l1_weights.iter().zip(z.iter()).map(|(w, v)| w * v.abs()).sum::<f64>()
            + self.constant
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n_vars() {
            if self.l1_weights[i] > 0.0 && (self.lower[i].is_finite() || self.upper[i].is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "variable {i} carries both an l1 weight and a finite bound; \
                     bound an auxiliary copy instead"
                )));
            }
        }
        Ok(())
    }

    /// Writes the problem data as a bundle of CSV files into `dir`.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        let as_col = |v: &Vector| Mat::from_column_slice(v.len(), 1, v.as_slice());
        let files = [
            ("P.csv", self.p_mat.clone()),
            ("q.csv", as_col(&self.q_vec)),
            ("l1.csv", as_col(&self.l1_weights)),
            ("A_eq.csv", self.a_eq.clone()),
            ("b_eq.csv", as_col(&self.b_eq)),
            ("lower.csv", as_col(&self.lower)),
            ("upper.csv", as_col(&self.upper)),
            ("constant.csv", Mat::from_element(1, 1, self.constant)),
        ];
        for (name, m) in files {
            io::write_text(&dir.join(name), &io::matrix_to_csv(&m))?;
        }
        Ok(())
    }

    pub fn load_csv(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<Mat> {
            let path = dir.join(name);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            io::matrix_from_csv(&text)
        };
        let col = |m: Mat| Vector::from_column_slice(m.as_slice());
        let p = read("P.csv")?;
        let n = p.nrows();
        let a = read("A_eq.csv")?;
        let a = if a.nrows() == 0 { Mat::zeros(0, n) } else { a };
        Ok(QuadProgram::new(p, col(read("q.csv")?))?
            .with_equalities(a, col(read("b_eq.csv")?))?
            .with_bounds(col(read("lower.csv")?), col(read("upper.csv")?))?
            .with_l1(col(read("l1.csv")?))?
            .with_constant(read("constant.csv")?[(0, 0)]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

/// Scaled KKT residuals of a candidate primal–dual point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub z: Vector,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub status: QpStatus,
    /// Multipliers of `A z = b` (stationarity uses `−Aᵀy`).
    pub eq_dual: Vector,
    pub lower_dual: Vector,
    pub upper_dual: Vector,
    /// `(z⁺, z⁻)` of the l1-split variables, in index order.
    pub l1_split: Vec<(f64, f64)>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

/// Recomputes the scaled KKT residuals of `(z, y, z_l, z_u)` for `prob`.
///
/// Stationarity is `Pz + q + w∘s − Aᵀy − z_l + z_u = 0` with `s ∈ ∂|z|`; for
/// l1 variables near zero the best subgradient in `[−1, 1]` is used.
pub fn kkt_residuals(
    prob: &QuadProgram,
    z: &Vector,
    eq_dual: &Vector,
    lower_dual: &Vector,
    upper_dual: &Vector,
) -> KktResiduals {
    let n = prob.n_vars();
    let pz = &prob.p_mat * z;
    let aty = prob.a_eq.transpose() * eq_dual;

    let r_eq = &prob.a_eq * z - &prob.b_eq;
    let mut primal = inf_norm(&r_eq) / (1.0 + inf_norm(&prob.b_eq));
    for i in 0..n {
        let scale = 1.0 + z[i].abs();
        primal = primal
            .max((prob.lower[i] - z[i]).max(0.0) / scale)
            .max((z[i] - prob.upper[i]).max(0.0) / scale);
    }

    let zero_tol = 1e-6 * (1.0 + inf_norm(z));
    let mut dual_abs = 0.0_f64;
    let mut comp = 0.0_f64;
    for i in 0..n {
        let rho = pz[i] + prob.q_vec[i] - aty[i] - lower_dual[i] + upper_dual[i];
        let w = prob.l1_weights[i];
        let r = if w > 0.0 {
            let signed = (rho + w * z[i].signum()).abs();
            comp += (w * z[i].abs() + rho * z[i]).abs();
            if z[i].abs() <= zero_tol {
                signed.min((rho.abs() - w).max(0.0))
            } else {
                signed
            }
        } else {
            rho.abs()
        };
        dual_abs = dual_abs.max(r).max((-lower_dual[i]).max(0.0)).max((-upper_dual[i]).max(0.0));
        if prob.lower[i].is_finite() {
            comp += ((z[i] - prob.lower[i]) * lower_dual[i]).abs();
        }
        if prob.upper[i].is_finite() {
            comp += ((prob.upper[i] - z[i]) * upper_dual[i]).abs();
        }
    }
    let dual_scale = 1.0 + inf_norm(&pz).max(inf_norm(&prob.q_vec)).max(inf_norm(&aty));
    let smooth = prob.objective(z) - prob.constant;
    KktResiduals {
        primal,
        dual: dual_abs / dual_scale,
        gap: comp / (1.0 + smooth.abs()),
    }
}

fn inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn solve(prob: &QuadProgram, tol: f64, max_iter: usize) -> Result<QpSolution> {
    solve_impl(prob, tol, max_iter, None)
}

/// Like [`solve`], starting the primal iterate from `start` (pushed inside the bounds).
pub fn solve_from(prob: &QuadProgram, tol: f64, max_iter: usize, start: &Vector) -> Result<QpSolution> {
    if start.len() != prob.n_vars() {
        return Err(Error::dims("QP starting point", prob.n_vars(), start.len()));
    }
    solve_impl(prob, tol, max_iter, Some(start))
}

/// The smooth problem obtained by splitting every l1 variable.
struct SplitProblem {
    p: Mat,
    q: Vector,
    a: Mat,
    b: Vector,
    lower: Vector,
    upper: Vector,
    n_orig: usize,
    /// Original indices of the split variables; the negative part of the k-th
    /// one lives at `n_orig + k`.
    split: Vec<usize>,
}

impl SplitProblem {
    fn new(prob: &QuadProgram) -> Self {
        let n = prob.n_vars();
        let split: Vec<usize> = (0..n).filter(|&i| prob.l1_weights[i] > 0.0).collect();
        let nx = n + split.len();
        let origin: Vec<(usize, f64)> = (0..n)
            .map(|i| (i, 1.0))
            .chain(split.iter().map(|&i| (i, -1.0)))
            .collect();

        let p = Mat::from_fn(nx, nx, |r, c| {
            let (i, si) = origin[r];
            let (j, sj) = origin[c];
            si * sj * prob.p_mat[(i, j)]
        });
        let q = Vector::from_fn(nx, |r, _| {
            let (i, s) = origin[r];
            s * prob.q_vec[i] + prob.l1_weights[i]
        });
        let a = Mat::from_fn(prob.n_eq(), nx, |r, c| {
            let (j, s) = origin[c];
            s * prob.a_eq[(r, j)]
        });
        let mut lower = Vector::zeros(nx);
        let mut upper = Vector::from_element(nx, f64::INFINITY);
        for i in 0..n {
            if prob.l1_weights[i] == 0.0 {
                lower[i] = prob.lower[i];
                upper[i] = prob.upper[i];
            }
        }
        Self {
            p,
            q,
            a,
            b: prob.b_eq.clone(),
            lower,
            upper,
            n_orig: n,
            split,
        }
    }

    fn n(&self) -> usize {
        self.q.len()
    }

    fn to_original(&self, x: &Vector) -> Vector {
        let mut z = x.rows(0, self.n_orig).into_owned();
        for (k, &i) in self.split.iter().enumerate() {
            z[i] -= x[self.n_orig + k];
        }
        z
    }

    fn from_original(&self, z: &Vector) -> Vector {
        let mut x = Vector::zeros(self.n());
        x.rows_mut(0, self.n_orig).copy_from(z);
        for (k, &i) in self.split.iter().enumerate() {
            x[i] = z[i].max(0.0);
            x[self.n_orig + k] = (-z[i]).max(0.0);
        }
        x
    }
}

#[derive(Clone)]
struct Iterate {
    x: Vector,
    y: Vector,
    zl: Vector,
    zu: Vector,
}

fn solve_impl(prob: &QuadProgram, tol: f64, max_iter: usize, start: Option<&Vector>) -> Result<QpSolution> {
    if !(tol > 0.0 && tol.is_finite()) || max_iter == 0 {
        return Err(Error::InvalidArgument(format!(
            "solver needs tol > 0 and max_iter ≥ 1 (tol = {tol}, max_iter = {max_iter})"
        )));
    }
    prob.validate()?;
    let n = prob.n_vars();

    if prob.n_eq() > 0 {
        if let Some(sol) = inconsistent_equalities(prob)? {
            return Ok(sol);
        }
    }

    let sp = SplitProblem::new(prob);
    let nx = sp.n();
    let ne = sp.b.len();
    let has_lower: Vec<bool> = sp.lower.iter().map(|v| v.is_finite()).collect();
    let has_upper: Vec<bool> = sp.upper.iter().map(|v| v.is_finite()).collect();
    let n_bounds = has_lower.iter().chain(&has_upper).filter(|&&b| b).count();

    let mut it = Iterate {
        x: initial_point(&sp, start.map(|s| sp.from_original(s))),
        y: Vector::zeros(ne),
        zl: Vector::from_fn(nx, |i, _| if has_lower[i] { 1.0 } else { 0.0 }),
        zu: Vector::from_fn(nx, |i, _| if has_upper[i] { 1.0 } else { 0.0 }),
    };

    let mut status = QpStatus::MaxIterations;
    let mut iterations = 0;
    let mut report = None;
    let mut converged_at: Option<usize> = None;
    let mut kept = it.clone();
    for iter in 0..=max_iter {
        let (sl, su) = slacks(&sp, &it.x, &has_lower, &has_upper);
        let r_d = &sp.p * &it.x + &sp.q - sp.a.transpose() * &it.y - &it.zl + &it.zu;
        let r_p = &sp.a * &it.x - &sp.b;
        let comp: f64 = (0..nx)
            .map(|i| sl[i] * it.zl[i] + su[i] * it.zu[i])
            .sum();

        let sol = map_back(prob, &sp, &it);
        let res = kkt_residuals(prob, &sol.0, &sol.1, &sol.2, &sol.3);
        let smooth = (prob.objective(&sol.0) - prob.constant).abs();
        let split_gap = comp / (1.0 + smooth);
        let converged = res.max() <= tol && split_gap <= tol;
        if converged || converged_at.is_none() {
            iterations = iter;
            report = Some((sol, res));
            kept = it.clone();
        }
        if converged {
            status = QpStatus::Optimal;
            let first = *converged_at.get_or_insert(iter);
            // a clean active set usually appears within a few extra iterations
            if polish_accepts(prob, &sp, &it, &has_lower, &has_upper, &res) || iter - first >= POLISH_RETRIES {
                break;
            }
        } else if converged_at.is_some() {
            break;
        }
        if iter == max_iter {
            break;
        }

        let mu = if n_bounds > 0 { comp / n_bounds as f64 } else { 0.0 };
        let mut h = sp.p.clone();
        for i in 0..nx {
            h[(i, i)] += it.zl[i] / sl[i] + it.zu[i] / su[i];
        }
        let kkt = KktSystem::new(&h, &sp.a);

        // predictor
        let r_cl = Vector::from_fn(nx, |i, _| -sl[i] * it.zl[i]);
        let r_cu = Vector::from_fn(nx, |i, _| -su[i] * it.zu[i]);
        let aff = newton_direction(&kkt, &it, &sl, &su, &r_d, &r_p, &r_cl, &r_cu);
        let (dx_a, _, dzl_a, dzu_a) = &aff;
        let alpha_aff = max_step(&it, &sl, &su, &aff, &has_lower, &has_upper);
        let sigma = if n_bounds > 0 && mu > 0.0 {
            let mu_aff: f64 = (0..nx)
                .map(|i| {
                    (sl[i] + alpha_aff * dx_a[i]) * (it.zl[i] + alpha_aff * dzl_a[i])
                        + (su[i] - alpha_aff * dx_a[i]) * (it.zu[i] + alpha_aff * dzu_a[i])
                })
                .sum::<f64>()
                / n_bounds as f64;
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // corrector
        let r_cl = Vector::from_fn(nx, |i, _| {
            if has_lower[i] {
                sigma * mu - sl[i] * it.zl[i] - dx_a[i] * dzl_a[i]
            } else {
                0.0
            }
        });
        let r_cu = Vector::from_fn(nx, |i, _| {
            if has_upper[i] {
                sigma * mu - su[i] * it.zu[i] + dx_a[i] * dzu_a[i]
            } else {
                0.0
            }
        });
        let dir = newton_direction(&kkt, &it, &sl, &su, &r_d, &r_p, &r_cl, &r_cu);
        let alpha = (STEP_FRACTION * max_step(&it, &sl, &su, &dir, &has_lower, &has_upper)).min(1.0);
        let (dx, dy, dzl, dzu) = dir;
        let next = Iterate {
            x: &it.x + alpha * dx,
            y: &it.y + alpha * dy,
            zl: &it.zl + alpha * dzl,
            zu: &it.zu + alpha * dzu,
        };
        let finite = [&next.x, &next.y, &next.zl, &next.zu]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()));
        if !finite || alpha <= 0.0 {
            // the iterates diverged; keep the last finite point
            break;
        }
        it = next;
    }

    let (mut sol, mut res) = report.expect("at least one iteration runs");
    let mut it = kept;
    if let Some(polished) = polish(&sp, &it, &has_lower, &has_upper) {
        let cand = map_back(prob, &sp, &polished);
        let cand_res = kkt_residuals(prob, &cand.0, &cand.1, &cand.2, &cand.3);
        if cand_res.max() <= res.max() {
            sol = cand;
            res = cand_res;
            it = polished;
            if res.max() <= tol {
                status = QpStatus::Optimal;
            }
        }
    }
    let (z, eq_dual, lower_dual, upper_dual) = sol;
    if status != QpStatus::Optimal && res.primal > INCONSISTENCY_TOL {
        status = QpStatus::Infeasible;
    }
    let l1_split = sp
        .split
        .iter()
        .enumerate()
        .map(|(k, &i)| (it.x[i], it.x[n + k]))
        .collect();
    Ok(QpSolution {
        objective: prob.objective(&z),
        z,
        primal_residual: res.primal,
        dual_residual: res.dual,
        gap: res.gap,
        iterations,
        status,
        eq_dual,
        lower_dual,
        upper_dual,
        l1_split,
    })
}

/// Least-squares consistency check of `A z = b`, ignoring bounds.
fn inconsistent_equalities(prob: &QuadProgram) -> Result<Option<QpSolution>> {
    let pinv = matlib::pinv(&prob.a_eq, matlib::DEFAULT_RANK_TOL)?;
    let z = &pinv * &prob.b_eq;
    let resid = inf_norm(&(&prob.a_eq * &z - &prob.b_eq)) / (1.0 + inf_norm(&prob.b_eq));
    if resid <= INCONSISTENCY_TOL {
        return Ok(None);
    }
    let n = prob.n_vars();
    Ok(Some(QpSolution {
        objective: prob.objective(&z),
        z,
        primal_residual: resid,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: 0,
        status: QpStatus::Infeasible,
        eq_dual: Vector::zeros(prob.n_eq()),
        lower_dual: Vector::zeros(n),
        upper_dual: Vector::zeros(n),
        l1_split: Vec::new(),
    }))
}

/// Active-set refinement of an interior iterate: bounds whose slack is
/// smaller than their multiplier are fixed and the remaining equality-
/// constrained KKT system is solved directly. Returns `None` when the guessed
/// active set is primal or dual infeasible.
fn polish(sp: &SplitProblem, it: &Iterate, has_lower: &[bool], has_upper: &[bool]) -> Option<Iterate> {
    let nx = sp.n();
    let ne = sp.b.len();
    let (sl, su) = slacks(sp, &it.x, has_lower, has_upper);
    #[derive(Clone, Copy, PartialEq)]
    enum Role {
        Free,
        AtLower,
        AtUpper,
    }
    let roles: Vec<Role> = (0..nx)
        .map(|i| {
            let lo = has_lower[i] && sl[i] < it.zl[i];
            let hi = has_upper[i] && su[i] < it.zu[i];
            match (lo, hi) {
                (true, true) if sl[i] <= su[i] => Role::AtLower,
                (true, true) => Role::AtUpper,
                (true, false) => Role::AtLower,
                (false, true) => Role::AtUpper,
                _ => Role::Free,
            }
        })
        .collect();
    let free: Vec<usize> = (0..nx).filter(|&i| roles[i] == Role::Free).collect();
    let mut x = Vector::zeros(nx);
    for i in 0..nx {
        x[i] = match roles[i] {
            Role::AtLower => sp.lower[i],
            Role::AtUpper => sp.upper[i],
            Role::Free => 0.0,
        };
    }
    let nf = free.len();
    let fixed_grad = &sp.p * &x + &sp.q;
    let fixed_eq = &sp.b - &sp.a * &x;
    let h = Mat::from_fn(nf, nf, |r, c| sp.p[(free[r], free[c])]);
    let a = Mat::from_fn(ne, nf, |r, c| sp.a[(r, free[c])]);
    let mut rhs = Vector::zeros(nf + ne);
    for (r, &i) in free.iter().enumerate() {
        rhs[r] = -fixed_grad[i];
    }
    for r in 0..ne {
        rhs[nf + r] = fixed_eq[r];
    }
    let sol = if nf + ne == 0 { Vector::zeros(0) } else { KktSystem::new(&h, &a).solve(&rhs) };
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    for (r, &i) in free.iter().enumerate() {
        x[i] = sol[r];
    }
    let y = -Vector::from_fn(ne, |r, _| sol[nf + r]);
    let grad = &sp.p * &x + &sp.q - sp.a.transpose() * &y;
    let mut zl = Vector::zeros(nx);
    let mut zu = Vector::zeros(nx);
    let scale = 1.0 + inf_norm(&x);
    for i in 0..nx {
        match roles[i] {
            Role::AtLower => zl[i] = grad[i],
            Role::AtUpper => zu[i] = -grad[i],
            Role::Free => {
                let slack = 1e-12 * scale;
                if (has_lower[i] && x[i] < sp.lower[i] - slack) || (has_upper[i] && x[i] > sp.upper[i] + slack) {
                    return None;
                }
            }
        }
    }
    Some(Iterate { x, y, zl, zu })
}

fn polish_accepts(prob: &QuadProgram, sp: &SplitProblem, it: &Iterate, has_lower: &[bool], has_upper: &[bool], res: &KktResiduals) -> bool {
    polish(sp, it, has_lower, has_upper).is_some_and(|p| {
        let cand = map_back(prob, sp, &p);
        kkt_residuals(prob, &cand.0, &cand.1, &cand.2, &cand.3).max() <= res.max()
    })
}

fn initial_point(sp: &SplitProblem, start: Option<Vector>) -> Vector {
    let mut x = start.unwrap_or_else(|| Vector::zeros(sp.n()));
    for i in 0..sp.n() {
        let (l, u) = (sp.lower[i], sp.upper[i]);
        x[i] = match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                let margin = 0.1 * (u - l);
                if margin == 0.0 {
                    l
                } else {
                    x[i].clamp(l + margin, u - margin)
                }
            }
            (true, false) => x[i].max(l + 1.0),
            (false, true) => x[i].min(u - 1.0),
            (false, false) => x[i],
        };
    }
    x
}

fn slacks(sp: &SplitProblem, x: &Vector, has_lower: &[bool], has_upper: &[bool]) -> (Vector, Vector) {
    let n = sp.n();
    (
        Vector::from_fn(n, |i, _| if has_lower[i] { x[i] - sp.lower[i] } else { 1.0 }),
        Vector::from_fn(n, |i, _| if has_upper[i] { sp.upper[i] - x[i] } else { 1.0 }),
    )
}

fn map_back(prob: &QuadProgram, sp: &SplitProblem, it: &Iterate) -> (Vector, Vector, Vector, Vector) {
    let n = prob.n_vars();
    let z = sp.to_original(&it.x);
    let mut zl = Vector::zeros(n);
    let mut zu = Vector::zeros(n);
    for i in 0..n {
        if prob.l1_weights[i] == 0.0 {
            zl[i] = it.zl[i];
            zu[i] = it.zu[i];
        }
    }
    (z, it.y.clone(), zl, zu)
}

type Direction = (Vector, Vector, Vector, Vector);

#[allow(clippy::too_many_arguments)]
fn newton_direction(
    kkt: &KktSystem,
    it: &Iterate,
    sl: &Vector,
    su: &Vector,
    r_d: &Vector,
    r_p: &Vector,
    r_cl: &Vector,
    r_cu: &Vector,
) -> Direction {
    let nx = it.x.len();
    let ne = it.y.len();
    let mut rhs = Vector::zeros(nx + ne);
    for i in 0..nx {
        rhs[i] = -r_d[i] + r_cl[i] / sl[i] - r_cu[i] / su[i];
    }
    for i in 0..ne {
        rhs[nx + i] = -r_p[i];
    }
    let sol = kkt.solve(&rhs);
    let dx = sol.rows(0, nx).into_owned();
    let dy = -Vector::from_fn(ne, |r, _| sol[nx + r]);
    let dzl = Vector::from_fn(nx, |i, _| (r_cl[i] - it.zl[i] * dx[i]) / sl[i]);
    let dzu = Vector::from_fn(nx, |i, _| (r_cu[i] + it.zu[i] * dx[i]) / su[i]);
    (dx, dy, dzl, dzu)
}

fn max_step(it: &Iterate, sl: &Vector, su: &Vector, dir: &Direction, has_lower: &[bool], has_upper: &[bool]) -> f64 {
    let (dx, _, dzl, dzu) = dir;
    let mut alpha = 1.0_f64 / STEP_FRACTION;
    for i in 0..dx.len() {
        if has_lower[i] {
            if dx[i] < 0.0 {
                alpha = alpha.min(-sl[i] / dx[i]);
            }
            if dzl[i] < 0.0 {
                alpha = alpha.min(-it.zl[i] / dzl[i]);
            }
        }
        if has_upper[i] {
            if dx[i] > 0.0 {
                alpha = alpha.min(su[i] / dx[i]);
            }
            if dzu[i] < 0.0 {
                alpha = alpha.min(-it.zu[i] / dzu[i]);
            }
        }
    }
    alpha
}

/// Symmetric quasi-definite Newton system `[[H, Aᵀ], [A, 0]]`.
struct KktSystem {
    matrix: Mat,
    scale: Vector,
    factor: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl KktSystem {
    fn new(h: &Mat, a: &Mat) -> Self {
        let nx = h.nrows();
        let ne = a.nrows();
        let dim = nx + ne;
        let mut k = Mat::zeros(dim, dim);
        for i in 0..nx {
            for j in 0..nx {
                k[(i, j)] = h[(i, j)];
            }
        }
        for r in 0..ne {
            for j in 0..nx {
                k[(nx + r, j)] = a[(r, j)];
                k[(j, nx + r)] = a[(r, j)];
            }
        }

        let scale = ruiz_scaling(&k);
        let mut scaled = Mat::from_fn(dim, dim, |i, j| scale[i] * k[(i, j)] * scale[j]);
        for i in 0..nx {
            scaled[(i, i)] += KKT_REGULARIZATION;
        }
        for i in nx..dim {
            scaled[(i, i)] -= KKT_REGULARIZATION;
        }
        Self {
            matrix: k,
            scale,
            factor: scaled.lu(),
        }
    }

    fn solve_scaled(&self, rhs: &Vector) -> Vector {
        let b = rhs.component_mul(&self.scale);
        let w = self
            .factor
            .solve(&b)
            .unwrap_or_else(|| Vector::zeros(rhs.len()));
        w.component_mul(&self.scale)
    }

    fn solve(&self, rhs: &Vector) -> Vector {
        let mut x = self.solve_scaled(rhs);
        let rhs_norm = inf_norm(rhs).max(f64::MIN_POSITIVE);
        for _ in 0..REFINEMENT_STEPS {
            let r = rhs - &self.matrix * &x;
            if inf_norm(&r) <= 1e-15 * rhs_norm {
                break;
            }
            x += self.solve_scaled(&r);
        }
        x
    }
}

/// Symmetric Ruiz equilibration: `D K D` has rows and columns of unit max-norm.
fn ruiz_scaling(k: &Mat) -> Vector {
    let dim = k.nrows();
    let mut d = Vector::from_element(dim, 1.0);
    for _ in 0..RUIZ_PASSES {
        let mut col_max = vec![0.0_f64; dim];
        for j in 0..dim {
            for i in 0..dim {
                let v = (d[i] * k[(i, j)] * d[j]).abs();
                if v > col_max[j] {
                    col_max[j] = v;
                }
            }
        }
        let mut done = true;
        for j in 0..dim {
            if col_max[j] > 0.0 {
                if (col_max[j] - 1.0).abs() > 1e-2 {
                    done = false;
                }
                d[j] /= col_max[j].sqrt();
            }
        }
        if done {
            break;
        }
    }
    d
}

/// Index ranges of the variables in a QP assembled by [`assemble_reduced`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLayout {
    pub g: Range<usize>,
    pub u_aux: Option<Range<usize>>,
    pub y_aux: Option<Range<usize>>,
}

/// Predictor blocks and cost terms of a DeePC-type problem in which `u`, `y`
/// and `σy` are eliminated in favour of the library coefficients `g`:
/// `u = U_F g`, `y = Y_F g`, `σy = Y_P g − y_ini`.
#[derive(Debug, Clone, Copy)]
pub struct ReducedTerms<'a> {
    pub up: &'a Mat,
    pub yp: &'a Mat,
    pub uf: &'a Mat,
    pub yf: &'a Mat,
    /// Stacked input weight `I_N ⊗ R`.
    pub r_stack: &'a Mat,
    /// Stacked output weight `I_N ⊗ Q`.
    pub q_stack: &'a Mat,
    pub u_ini: &'a Vector,
    pub y_ini: &'a Vector,
    pub y_ref: &'a Vector,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Slack weight; `f64::INFINITY` imposes `Y_P g = y_ini` exactly.
    pub lambda_y: f64,
    /// `I − Π` for the `λ2‖(I − Π)g‖²` term; ignored when `lambda2 == 0`.
    pub null_projector: Option<&'a Mat>,
    pub u_bounds: Option<(&'a Vector, &'a Vector)>,
    pub y_bounds: Option<(&'a Vector, &'a Vector)>,
}

/// Builds the QP over `z = (g, s_u, s_y)` where the auxiliary copies
/// `s_u = U_F g` and `s_y = Y_F g` carry the input and output boxes.
pub fn assemble_reduced(t: &ReducedTerms) -> Result<(QuadProgram, ReducedLayout)> {
    let ng = t.up.ncols();
    for (blk, name) in [(t.yp, "Y_P"), (t.uf, "U_F"), (t.yf, "Y_F")] {
        if blk.ncols() != ng {
            return Err(Error::dims(name, format!("{ng} columns"), blk.ncols()));
        }
    }
    let (mu, my, mf, pf) = (t.up.nrows(), t.yp.nrows(), t.uf.nrows(), t.yf.nrows());
    if t.u_ini.len() != mu || t.y_ini.len() != my || t.y_ref.len() != pf {
        return Err(Error::dims(
            "online data",
            format!("u_ini {mu}, y_ini {my}, y_ref {pf}"),
            format!("{}, {}, {}", t.u_ini.len(), t.y_ini.len(), t.y_ref.len()),
        ));
    }
    if t.r_stack.shape() != (mf, mf) || t.q_stack.shape() != (pf, pf) {
        return Err(Error::dims(
            "stage weights",
            format!("{mf}×{mf} and {pf}×{pf}"),
            format!("{:?} and {:?}", t.r_stack.shape(), t.q_stack.shape()),
        ));
    }
    for (v, name) in [(t.lambda1, "lambda1"), (t.lambda2, "lambda2")] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} must be finite and ≥ 0, got {v}")));
        }
    }
    if !(t.lambda_y > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda_y must be > 0, got {}", t.lambda_y)));
    }
    let hard_slack = t.lambda_y.is_infinite();

    let ut_r = t.uf.transpose() * t.r_stack;
    let yt_q = t.yf.transpose() * t.q_stack;
    let mut p_gg = &ut_r * t.uf + &yt_q * t.yf;
    let mut q_g = -(&yt_q * t.y_ref);
    let mut constant = t.y_ref.dot(&(t.q_stack * t.y_ref));
    if !hard_slack {
        p_gg += t.lambda_y * (t.yp.transpose() * t.yp);
        q_g -= t.lambda_y * (t.yp.transpose() * t.y_ini);
        constant += t.lambda_y * t.y_ini.norm_squared();
    }
    if t.lambda2 > 0.0 {
        let g_proj = t.null_projector.ok_or_else(|| {
            Error::InvalidArgument("lambda2 > 0 needs the null-space projector".into())
        })?;
        if g_proj.shape() != (ng, ng) {
            return Err(Error::dims("null-space projector", format!("{ng}×{ng}"), format!("{:?}", g_proj.shape())));
        }
        // (I − Π)ᵀ(I − Π) for a possibly inexact projector
        p_gg += t.lambda2 * (g_proj.transpose() * g_proj);
    }
    p_gg *= 2.0;
    q_g *= 2.0;

    let nu = if t.u_bounds.is_some() { mf } else { 0 };
    let ny = if t.y_bounds.is_some() { pf } else { 0 };
    let nz = ng + nu + ny;
    let layout = ReducedLayout {
        g: 0..ng,
        u_aux: (nu > 0).then(|| ng..ng + nu),
        y_aux: (ny > 0).then(|| ng + nu..nz),
    };

    let mut p = Mat::zeros(nz, nz);
    p.view_mut((0, 0), (ng, ng)).copy_from(&p_gg);
    let mut q = Vector::zeros(nz);
    q.rows_mut(0, ng).copy_from(&q_g);

    let n_eq = mu + if hard_slack { my } else { 0 } + nu + ny;
    let mut a = Mat::zeros(n_eq, nz);
    let mut b = Vector::zeros(n_eq);
    let mut row = 0;
    a.view_mut((row, 0), (mu, ng)).copy_from(t.up);
    b.rows_mut(row, mu).copy_from(t.u_ini);
    row += mu;
    if hard_slack {
        a.view_mut((row, 0), (my, ng)).copy_from(t.yp);
        b.rows_mut(row, my).copy_from(t.y_ini);
        row += my;
    }
    let mut lower = Vector::from_element(nz, f64::NEG_INFINITY);
    let mut upper = Vector::from_element(nz, f64::INFINITY);
    if let (Some(range), Some((lo, hi))) = (&layout.u_aux, t.u_bounds) {
        a.view_mut((row, 0), (mf, ng)).copy_from(t.uf);
        for k in 0..mf {
            a[(row + k, range.start + k)] = -1.0;
        }
        row += mf;
        lower.rows_mut(range.start, mf).copy_from(lo);
        upper.rows_mut(range.start, mf).copy_from(hi);
    }
    if let (Some(range), Some((lo, hi))) = (&layout.y_aux, t.y_bounds) {
        a.view_mut((row, 0), (pf, ng)).copy_from(t.yf);
        for k in 0..pf {
            a[(row + k, range.start + k)] = -1.0;
        }
        lower.rows_mut(range.start, pf).copy_from(lo);
        upper.rows_mut(range.start, pf).copy_from(hi);
    }
    let mut l1 = Vector::zeros(nz);
    if t.lambda1 > 0.0 {
        l1.rows_mut(0, ng).fill(t.lambda1);
    }

    let qp = QuadProgram::new(p, q)?
        .with_equalities(a, b)?
        .with_bounds(lower, upper)?
        .with_l1(l1)?
        .with_constant(constant);
    Ok((qp, layout))
}

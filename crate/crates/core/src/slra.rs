//! Structured low-rank approximation of an output Hankel matrix.
//!
//! The input Hankel `H_u` is trusted (noise-free); only the component of
//! `H_y` outside its row space is truncated to the model order, after which
//! the iterate is projected back onto block-Hankel matrices.

use crate::error::{Error, Result};
use crate::hankel;
use crate::matlib::{self, Mat};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200;

const PROJECTOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SlraReport {
    /// Denoised output Hankel; exactly block-Hankel.
    pub h_y_star: Mat,
    pub iterations: usize,
    pub final_rel_change: f64,
    pub converged: bool,
    /// Relative change recorded after every pass.
    pub rel_changes: Vec<f64>,
}

/// `H_y Π + (rank-n truncation of H_y (I − Π))`.
pub fn range_truncate(h_y: &Mat, pi2: &Mat, n_order: usize) -> Result<Mat> {
    let nc = h_y.ncols();
    if pi2.shape() != (nc, nc) {
        return Err(Error::dims("projector", format!("{nc}×{nc}"), format!("{:?}", pi2.shape())));
    }
    if n_order == 0 || n_order > h_y.nrows() {
        return Err(Error::InvalidArgument(format!(
            "model order must lie in 1..={}, got {n_order}",
            h_y.nrows()
        )));
    }
    matlib::ensure_finite(h_y, "output Hankel")?;
    matlib::ensure_finite(pi2, "projector")?;
    let idem = matlib::max_abs_diff(&(pi2 * pi2), pi2);
    let asym = matlib::max_abs_diff(pi2, &pi2.transpose());
    if idem > PROJECTOR_TOL || asym > PROJECTOR_TOL {
        return Err(Error::InvalidArgument(format!(
            "not an orthogonal projector (‖Π² − Π‖ = {idem:.3e}, ‖Π − Πᵀ‖ = {asym:.3e})"
        )));
    }
    let in_range = h_y * pi2;
    let null_part = h_y - &in_range;
    let svd = matlib::compact_svd(&null_part, matlib::DEFAULT_RANK_TOL)?;
    Ok(in_range + svd.truncated(n_order).reconstruct())
}

/// Alternates [`range_truncate`] and the block-Hankel projection until
/// `‖H₁ − H₂‖_F ≤ eps ‖H₁‖_F`, where `H₂` is the truncated iterate and `H₁`
/// its Hankel projection. Returns the last Hankel-projected iterate.
pub fn iterative_slra(
    h_y: &Mat,
    h_u: &Mat,
    n_outputs: usize,
    n_order: usize,
    eps: f64,
    max_iter: usize,
) -> Result<SlraReport> {
    if h_u.ncols() != h_y.ncols() {
        return Err(Error::dims("H_u", format!("{} columns", h_y.ncols()), h_u.ncols()));
    }
    if !(eps > 0.0 && eps.is_finite()) || max_iter == 0 {
        return Err(Error::InvalidArgument(format!(
            "need eps > 0 and max_iter ≥ 1 (eps = {eps}, max_iter = {max_iter})"
        )));
    }
    if n_outputs == 0 || h_y.nrows() % n_outputs != 0 {
        return Err(Error::dims("output Hankel rows", format!("a multiple of {n_outputs}"), h_y.nrows()));
    }
    let pi2 = matlib::rowspace_projector(h_u, matlib::DEFAULT_RANK_TOL)?;

    let mut h1 = h_y.clone();
    let mut rel_changes = Vec::new();
    let mut converged = false;
    while rel_changes.len() < max_iter {
        let h2 = range_truncate(&h1, &pi2, n_order)?;
        h1 = hankel::hankel_project(&h2, n_outputs)?;
        let scale = h1.norm();
        let rel = if scale > 0.0 { (&h1 - &h2).norm() / scale } else { 0.0 };
        rel_changes.push(rel);
        if rel <= eps {
            converged = true;
            break;
        }
    }
    Ok(SlraReport {
        h_y_star: h1,
        iterations: rel_changes.len(),
        final_rel_change: *rel_changes.last().expect("at least one pass"),
        converged,
        rel_changes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel::build_block_hankel;
    use crate::plants::{self, ChannelBox, NoiseSpec};
    use crate::rng::SeededRng;

    fn random(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = SeededRng::new(seed);
        Mat::from_fn(rows, cols, |_, _| rng.standard_normal())
    }

    #[test]
    fn identity_projector_keeps_matrix() {
        let h = random(6, 9, 1);
        let out = range_truncate(&h, &Mat::identity(9, 9), 1).unwrap();
        assert!(matlib::max_abs_diff(&out, &h) < 1e-12);
    }

    #[test]
    fn low_rank_null_part_is_untouched() {
        let a = random(6, 3, 2);
        let pi = matlib::rowspace_projector(&a.transpose(), 1e-10).unwrap();
        let comp = Mat::identity(6, 6) - &pi;
        // rank-1 null component plus an arbitrary range component
        let h = random(4, 1, 3) * random(1, 6, 4) * &comp + random(4, 6, 5) * &pi;
        let out = range_truncate(&h, &pi, 2).unwrap();
        assert!(matlib::max_abs_diff(&out, &h) < 1e-12);
    }

    #[test]
    fn truncation_caps_null_rank() {
        let a = random(10, 4, 6);
        let pi = matlib::rowspace_projector(&a.transpose(), 1e-10).unwrap();
        let h = random(5, 10, 7);
        let out = range_truncate(&h, &pi, 2).unwrap();
        let null_part = &out * (Mat::identity(10, 10) - &pi);
        assert!(matlib::numeric_rank(&null_part, 1e-9).unwrap() <= 2);
    }

    #[test]
    fn rejects_non_projector() {
        let h = random(3, 4, 8);
        let not_pi = Mat::identity(4, 4) * 0.5;
        assert!(range_truncate(&h, &not_pi, 1).is_err());
    }

    #[test]
    fn loose_eps_stops_after_one_pass() {
        let hu = build_block_hankel(&random(30, 1, 9), 5).unwrap();
        let hy = build_block_hankel(&random(30, 1, 10), 5).unwrap();
        let rep = iterative_slra(&hy, &hu, 1, 1, 1.0, 50).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert!(hankel::hankel_defect(&rep.h_y_star, 1).unwrap() < 1e-14);
    }

    #[test]
    fn noise_free_data_is_a_fixed_point() {
        let plant = plants::triple_mass_spring();
        let exc = ChannelBox::uniform(2, -1.0, 1.0).unwrap();
        let traj = plants::collect_trajectory(&plant, 120, &exc, &NoiseSpec::noiseless(3)).unwrap();
        let depth = 20;
        let hu = build_block_hankel(traj.inputs(), depth).unwrap();
        let hy = build_block_hankel(traj.outputs(), depth).unwrap();
        let rep = iterative_slra(&hy, &hu, 3, 8, DEFAULT_EPS, DEFAULT_MAX_ITER).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 2);
        assert!(matlib::max_abs_diff(&rep.h_y_star, &hy) < 1e-10);
    }
}

//! Dense real-matrix kernel: compact SVD, Moore–Penrose pseudoinverse,
//! numerical rank and row-space projections.
//!
//! Every routine validates that its input is finite and is a pure function of
//! its arguments. Singular values are kept when they exceed `rank_tol * σ₁`,
//! so `rank_tol` is always relative to the largest singular value.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff used when a caller does not supply one.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Entries of a right singular vector below this magnitude are skipped when
/// fixing its sign.
const SIGN_PIVOT_EPS: f64 = 1e-12;

/// Compact SVD `A = W · diag(σ) · Vᵀ` holding only the retained triplets.
#[derive(Debug, Clone)]
pub struct CompactSvd {
    /// rows × r, orthonormal columns.
    pub w: Mat,
    /// r strictly positive values, non-increasing.
    pub sigma: Vector,
    /// cols × r, orthonormal columns.
    pub v: Mat,
}

impl CompactSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `W · diag(σ)`, the column-reduced library used by the SVD-based predictors.
    pub fn scaled_left(&self) -> Mat {
        let mut ws = self.w.clone();
        for (mut col, s) in ws.column_iter_mut().zip(self.sigma.iter()) {
            col *= *s;
        }
        ws
    }

    pub fn reconstruct(&self) -> Mat {
        self.scaled_left() * self.v.transpose()
    }

    /// Keeps only the leading `k` triplets (no-op when `k >= rank`).
    pub fn truncated(&self, k: usize) -> CompactSvd {
        let k = k.min(self.rank());
        CompactSvd {
            w: self.w.columns(0, k).into_owned(),
            sigma: self.sigma.rows(0, k).into_owned(),
            v: self.v.columns(0, k).into_owned(),
        }
    }
}

pub fn ensure_finite(a: &Mat, what: &'static str) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    what,
                    row: i,
                    col: j,
                });
            }
        }
    }
    Ok(())
}

pub fn ensure_finite_vec(v: &Vector, what: &'static str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(row) => Err(Error::NonFinite { what, row, col: 0 }),
        None => Ok(()),
    }
}

fn check_tol(rank_tol: f64) -> Result<()> {
    if rank_tol.is_finite() && rank_tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "rank tolerance must be a positive finite number, got {rank_tol}"
        )))
    }
}

/// Thin SVD `A = U diag(s) Vᵀ` computed by faer; returns `(U, V, s)`.
fn thin_svd(a: &Mat) -> (Mat, Mat, Vector) {
    let (rows, cols) = a.shape();
    let fa = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let svd = fa.thin_svd().expect("SVD of a finite matrix converges");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    let k = s.nrows();
    (
        Mat::from_fn(rows, k, |i, j| u[(i, j)]),
        Mat::from_fn(cols, k, |i, j| v[(i, j)]),
        Vector::from_fn(k, |i, _| s[i]),
    )
}

/// Full thin SVD with singular values sorted in non-increasing order and the
/// sign convention applied. No triplets are dropped.
fn sorted_svd(a: &Mat) -> (Mat, Vector, Mat) {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (Mat::zeros(rows, 0), Vector::zeros(0), Mat::zeros(cols, 0));
    }
    let (u, right, s) = thin_svd(a);
    let mut order: Vec<usize> = (0..k).collect();
    // Stable sort keeps the decomposition deterministic when values tie.
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));

    let mut w = Mat::zeros(rows, k);
    let mut v = Mat::zeros(cols, k);
    let mut sigma = Vector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = s[src];
        let mut vcol = right.column(src).into_owned();
        let mut wcol = u.column(src).into_owned();
        if let Some(pivot) = vcol.iter().find(|x| x.abs() > SIGN_PIVOT_EPS) {
            if *pivot < 0.0 {
                vcol.neg_mut();
                wcol.neg_mut();
            }
        }
        v.set_column(dst, &vcol);
        w.set_column(dst, &wcol);
    }
    (w, sigma, v)
}

pub fn compact_svd(a: &Mat, rank_tol: f64) -> Result<CompactSvd> {
    ensure_finite(a, "svd input")?;
    check_tol(rank_tol)?;
    let (w, sigma, v) = sorted_svd(a);
    let r = retained(&sigma, rank_tol);
    Ok(CompactSvd {
        w: w.columns(0, r).into_owned(),
        sigma: sigma.rows(0, r).into_owned(),
        v: v.columns(0, r).into_owned(),
    })
}

fn retained(sigma: &Vector, rank_tol: f64) -> usize {
    match sigma.iter().next() {
        Some(&s1) if s1 > 0.0 => sigma.iter().take_while(|&&s| s > rank_tol * s1).count(),
        _ => 0,
    }
}

pub fn numeric_rank(a: &Mat, rank_tol: f64) -> Result<usize> {
    ensure_finite(a, "rank input")?;
    check_tol(rank_tol)?;
    if a.is_empty() {
        return Ok(0);
    }
    let (_, _, s) = thin_svd(a);
    let s1 = s.iter().cloned().fold(0.0_f64, f64::max);
    if s1 == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > rank_tol * s1).count())
}

/// Moore–Penrose pseudoinverse `V Σ⁻¹ Wᵀ`.
pub fn pinv(a: &Mat, rank_tol: f64) -> Result<Mat> {
    let svd = compact_svd(a, rank_tol)?;
    Ok(pinv_from_svd(&svd))
}

pub fn pinv_from_svd(svd: &CompactSvd) -> Mat {
    let mut vs = svd.v.clone();
    for (mut col, s) in vs.column_iter_mut().zip(svd.sigma.iter()) {
        col /= *s;
    }
    vs * svd.w.transpose()
}

/// Orthogonal projector `A†A` onto the row space of `a` (cols × cols).
///
/// Formed as `V Vᵀ` from the compact SVD, which equals `A†A` and is exactly
/// symmetric in floating point.
pub fn rowspace_projector(a: &Mat, rank_tol: f64) -> Result<Mat> {
    let svd = compact_svd(a, rank_tol)?;
    Ok(&svd.v * svd.v.transpose())
}

/// Row-space orthogonal projection `B/A = B (A†A)`.
pub fn project_rows(b: &Mat, a: &Mat) -> Result<Mat> {
    if b.ncols() != a.ncols() {
        return Err(Error::dims(
            "project_rows",
            format!("{} columns", a.ncols()),
            format!("{} columns", b.ncols()),
        ));
    }
    ensure_finite(b, "projected matrix")?;
    let pi = rowspace_projector(a, DEFAULT_RANK_TOL)?;
    Ok(b * pi)
}

/// Stacks blocks with equal column counts on top of each other.
pub fn vstack(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack: column counts differ");
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

/// Block-diagonal `I_n ⊗ w`.
pub fn kron_identity(n: usize, w: &Mat) -> Mat {
    let (r, c) = w.shape();
    let mut out = Mat::zeros(n * r, n * c);
    for k in 0..n {
        out.view_mut((k * r, k * c), (r, c)).copy_from(w);
    }
    out
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs_diff_vec(a: &Vector, b: &Vector) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn svd_of_identity() {
        let svd = compact_svd(&Mat::identity(2, 2), 1e-12).unwrap();
        assert_eq!(svd.rank(), 2);
        assert_abs_diff_eq!(svd.sigma, Vector::from_vec(vec![1.0, 1.0]), epsilon = 1e-14);
        assert_abs_diff_eq!(svd.w.abs(), Mat::identity(2, 2), epsilon = 1e-14);
        assert_abs_diff_eq!(&svd.w * svd.v.transpose(), Mat::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn svd_drops_zero_singular_value() {
        let a = Mat::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0]);
        let svd = compact_svd(&a, 1e-12).unwrap();
        assert_eq!(svd.rank(), 1);
        assert_abs_diff_eq!(svd.sigma[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(svd.v, Mat::from_column_slice(2, 1, &[1.0, 0.0]), epsilon = 1e-14);
        assert_abs_diff_eq!(svd.w, Mat::from_column_slice(2, 1, &[1.0, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn svd_reconstructs_small_matrix() {
        let a = Mat::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let svd = compact_svd(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(svd.rank(), 2);
        // direct product, entry by entry
        for i in 0..3 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    acc += svd.w[(i, k)] * svd.sigma[k] * svd.v[(j, k)];
                }
                assert!((acc - a[(i, j)]).abs() <= 1e-10 * a[(i, j)].abs().max(1.0));
            }
        }
        assert!(svd.sigma[0] >= svd.sigma[1]);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut a = Mat::zeros(2, 2);
        a[(1, 0)] = f64::NAN;
        assert!(matches!(
            compact_svd(&a, 1e-10),
            Err(Error::NonFinite { row: 1, col: 0, .. })
        ));
        assert!(compact_svd(&Mat::zeros(2, 2), 0.0).is_err());
    }

    #[test]
    fn svd_of_zero_matrix_is_empty() {
        let svd = compact_svd(&Mat::zeros(3, 2), 1e-10).unwrap();
        assert_eq!(svd.rank(), 0);
        assert_eq!(svd.w.shape(), (3, 0));
        assert_eq!(svd.v.shape(), (2, 0));
    }

    #[test]
    fn sign_convention_makes_first_entry_nonnegative() {
        let a = Mat::from_row_slice(2, 3, &[-1.0, 2.0, 0.5, 0.3, -4.0, 1.0]);
        let svd = compact_svd(&a, 1e-12).unwrap();
        for col in svd.v.column_iter() {
            let first = col.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first >= 0.0);
        }
        let again = compact_svd(&a, 1e-12).unwrap();
        assert_eq!(svd.v, again.v);
        assert_eq!(svd.w, again.w);
    }

    #[test]
    fn pinv_of_diagonal() {
        let a = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pinv(&a, DEFAULT_RANK_TOL).unwrap();
        assert_abs_diff_eq!(p, Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn pinv_of_column_vector() {
        let a = Mat::from_column_slice(2, 1, &[1.0, 1.0]);
        let p = pinv(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(p.shape(), (1, 2));
        assert_abs_diff_eq!(p, Mat::from_row_slice(1, 2, &[0.5, 0.5]), epsilon = 1e-15);
    }

    #[test]
    fn pinv_of_zero_is_zero_transpose_shape() {
        let p = pinv(&Mat::zeros(2, 3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(p, Mat::zeros(3, 2));
    }

    #[test]
    fn projector_examples() {
        let a = Mat::from_row_slice(1, 2, &[1.0, 1.0]);
        let pi = rowspace_projector(&a, DEFAULT_RANK_TOL).unwrap();
        assert_abs_diff_eq!(pi, Mat::from_element(2, 2, 0.5), epsilon = 1e-15);

        let pi = rowspace_projector(&Mat::identity(3, 3), DEFAULT_RANK_TOL).unwrap();
        assert_abs_diff_eq!(pi, Mat::identity(3, 3), epsilon = 1e-15);

        let pi = rowspace_projector(&Mat::zeros(2, 3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(pi, Mat::zeros(3, 3));
    }

    #[test]
    fn rank_examples() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert_eq!(numeric_rank(&a, 1e-8).unwrap(), 1);
        assert_eq!(numeric_rank(&Mat::zeros(3, 3), 1e-8).unwrap(), 0);
        assert_eq!(numeric_rank(&Mat::identity(4, 5), 1e-8).unwrap(), 4);
    }

    #[test]
    fn project_rows_examples() {
        let b = Mat::from_row_slice(2, 3, &[1.0, -2.0, 3.0, 0.5, 0.0, 7.0]);
        let out = project_rows(&b, &Mat::identity(3, 3)).unwrap();
        assert_abs_diff_eq!(out, b, epsilon = 1e-14);

        let out = project_rows(
            &Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            &Mat::from_row_slice(1, 2, &[1.0, 1.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(out, Mat::from_row_slice(1, 2, &[0.5, 0.5]), epsilon = 1e-15);

        assert!(matches!(
            project_rows(&Mat::zeros(1, 2), &Mat::zeros(1, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stacking_helpers() {
        let a = Mat::from_row_slice(1, 2, &[1.0, 2.0]);
        let b = Mat::from_row_slice(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let s = vstack(&[&a, &b]);
        assert_eq!(s, Mat::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let k = kron_identity(2, &Mat::from_element(1, 1, 3.0));
        assert_eq!(k, Mat::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 3.0]));
    }
}

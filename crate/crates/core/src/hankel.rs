//! Recorded trajectories, block-Hankel libraries and the Hankel-structure
//! projection.
//!
//! Signals are stored time-major: a `T × q` matrix whose row `k` is the
//! vector sample at time `k`. A depth-`L` block-Hankel matrix interleaves the
//! `q` channels of one time step in each block-row, so block `(i, j)` is the
//! sample at time `i + j`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::matlib::{self, Mat, DEFAULT_RANK_TOL};

/// A recorded input/output sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    u: Mat,
    y: Mat,
}

impl Trajectory {
    /// `u` is `T × m`, `y` is `T × p`.
    pub fn new(u: Mat, y: Mat) -> Result<Self> {
        if u.nrows() != y.nrows() {
            return Err(Error::dims(
                "trajectory",
                format!("{} output samples", u.nrows()),
                y.nrows(),
            ));
        }
        if u.nrows() == 0 || u.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "trajectory needs at least one sample, input and output".into(),
            ));
        }
        matlib::ensure_finite(&u, "trajectory inputs")?;
        matlib::ensure_finite(&y, "trajectory outputs")?;
        Ok(Self { u, y })
    }

    pub fn inputs(&self) -> &Mat {
        &self.u
    }

    pub fn outputs(&self) -> &Mat {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.u.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_inputs(&self) -> usize {
        self.u.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.y.ncols()
    }

    /// CSV text with header `t,u1..um,y1..yp`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n_inputs() {
            let _ = write!(out, ",u{i}");
        }
        for i in 1..=self.n_outputs() {
            let _ = write!(out, ",y{i}");
        }
        out.push('\n');
        for k in 0..self.len() {
            let _ = write!(out, "{k}");
            for v in self.u.row(k).iter().chain(self.y.row(k).iter()) {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse {
            path: "trajectory csv".into(),
            reason,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| parse_err("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(parse_err(format!("first column must be `t`, got {header:?}")));
        }
        let m = cols.iter().filter(|c| c.starts_with('u')).count();
        let p = cols.iter().filter(|c| c.starts_with('y')).count();
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=m).map(|i| format!("u{i}")))
            .chain((1..=p).map(|i| format!("y{i}")))
            .collect();
        if cols != expected {
            return Err(parse_err(format!("unexpected header {header:?}")));
        }

        let mut u_rows = Vec::new();
        let mut y_rows = Vec::new();
        for (ln, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 1 + m + p {
                return Err(parse_err(format!(
                    "row {ln}: expected {} fields, got {}",
                    1 + m + p,
                    fields.len()
                )));
            }
            let t: usize = fields[0]
                .parse()
                .map_err(|e| parse_err(format!("row {ln}: bad time index: {e}")))?;
            if t != ln {
                return Err(parse_err(format!("row {ln}: time index {t} out of order")));
            }
            for (i, f) in fields[1..].iter().enumerate() {
                let v: f64 = f
                    .parse()
                    .map_err(|e| parse_err(format!("row {ln}: bad value {f:?}: {e}")))?;
                if i < m {
                    u_rows.push(v);
                } else {
                    y_rows.push(v);
                }
            }
        }
        let t = u_rows.len() / m.max(1);
        Self::new(
            Mat::from_row_slice(t, m, &u_rows),
            Mat::from_row_slice(t, p, &y_rows),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| match e {
            Error::Parse { reason, .. } => Error::Parse {
                path: path.display().to_string(),
                reason,
            },
            other => other,
        })
    }
}

/// Depth-`depth` block-Hankel matrix of a `T × q` signal: `(q·L) × (T − L + 1)`.
pub fn build_block_hankel(signal: &Mat, depth: usize) -> Result<Mat> {
    let (t, q) = signal.shape();
    if depth == 0 || depth >= t {
        return Err(Error::InvalidArgument(format!(
            "Hankel depth must satisfy 0 < L < T (L = {depth}, T = {t})"
        )));
    }
    matlib::ensure_finite(signal, "hankel signal")?;
    let cols = t - depth + 1;
    Ok(Mat::from_fn(q * depth, cols, |r, j| {
        signal[(r / q + j, r % q)]
    }))
}

pub fn is_persistently_exciting(signal: &Mat, order: usize) -> Result<bool> {
    let h = build_block_hankel(signal, order)?;
    Ok(matlib::numeric_rank(&h, DEFAULT_RANK_TOL)? == h.nrows())
}

/// The four row blocks of the stacked depth-`(t_ini + N)` Hankel library.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPartition {
    pub up: Mat,
    pub yp: Mat,
    pub uf: Mat,
    pub yf: Mat,
    pub t_ini: usize,
    pub horizon: usize,
}

impl HankelPartition {
    /// Assembles a library from explicit blocks (used for preprocessed libraries).
    pub fn from_blocks(
        up: Mat,
        yp: Mat,
        uf: Mat,
        yf: Mat,
        t_ini: usize,
        horizon: usize,
    ) -> Result<Self> {
        let nc = up.ncols();
        if [yp.ncols(), uf.ncols(), yf.ncols()].iter().any(|&c| c != nc) {
            return Err(Error::dims(
                "hankel partition",
                format!("{nc} columns in every block"),
                format!("{}/{}/{}", yp.ncols(), uf.ncols(), yf.ncols()),
            ));
        }
        if t_ini == 0 || horizon == 0 {
            return Err(Error::InvalidArgument("t_ini and horizon must be positive".into()));
        }
        let m = up.nrows() / t_ini;
        let p = yp.nrows() / t_ini;
        if m == 0
            || p == 0
            || up.nrows() != m * t_ini
            || yp.nrows() != p * t_ini
            || uf.nrows() != m * horizon
            || yf.nrows() != p * horizon
        {
            return Err(Error::dims(
                "hankel partition",
                "rows (m·T_ini, p·T_ini, m·N, p·N)",
                format!("({}, {}, {}, {})", up.nrows(), yp.nrows(), uf.nrows(), yf.nrows()),
            ));
        }
        Ok(Self {
            up,
            yp,
            uf,
            yf,
            t_ini,
            horizon,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.up.ncols()
    }

    pub fn n_inputs(&self) -> usize {
        self.up.nrows() / self.t_ini
    }

    pub fn n_outputs(&self) -> usize {
        self.yp.nrows() / self.t_ini
    }

    pub fn depth(&self) -> usize {
        self.t_ini + self.horizon
    }

    /// `H = col(U_P, Y_P, U_F, Y_F)`.
    pub fn stacked(&self) -> Mat {
        matlib::vstack(&[&self.up, &self.yp, &self.uf, &self.yf])
    }

    /// `H₁ = col(U_P, Y_P, U_F)`.
    pub fn h1(&self) -> Mat {
        matlib::vstack(&[&self.up, &self.yp, &self.uf])
    }

    /// Input Hankel `col(U_P, U_F)`.
    pub fn input_hankel(&self) -> Mat {
        matlib::vstack(&[&self.up, &self.uf])
    }

    /// Output Hankel `col(Y_P, Y_F)`.
    pub fn output_hankel(&self) -> Mat {
        matlib::vstack(&[&self.yp, &self.yf])
    }

    /// Splits `(rows·L) × n_c` matrices back into past and future blocks.
    pub fn split_rows(mat: &Mat, past_rows: usize) -> (Mat, Mat) {
        let future_rows = mat.nrows() - past_rows;
        (
            mat.rows(0, past_rows).into_owned(),
            mat.rows(past_rows, future_rows).into_owned(),
        )
    }
}

pub fn partition(traj: &Trajectory, t_ini: usize, horizon: usize) -> Result<HankelPartition> {
    if t_ini == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("t_ini and horizon must be positive".into()));
    }
    let depth = t_ini + horizon;
    if depth >= traj.len() {
        return Err(Error::InvalidArgument(format!(
            "T_ini + N = {depth} must be shorter than the trajectory (T = {})",
            traj.len()
        )));
    }
    let hu = build_block_hankel(traj.inputs(), depth)?;
    let hy = build_block_hankel(traj.outputs(), depth)?;
    let (m, p) = (traj.n_inputs(), traj.n_outputs());
    let (up, uf) = HankelPartition::split_rows(&hu, m * t_ini);
    let (yp, yf) = HankelPartition::split_rows(&hy, p * t_ini);
    HankelPartition::from_blocks(up, yp, uf, yf, t_ini, horizon)
}

/// Frobenius-nearest block-Hankel matrix: every block on a block
/// anti-diagonal is replaced by the mean of the blocks on that anti-diagonal.
pub fn hankel_project(mat: &Mat, block_size: usize) -> Result<Mat> {
    let (rows, cols) = mat.shape();
    if block_size == 0 || rows % block_size != 0 {
        return Err(Error::InvalidArgument(format!(
            "row count {rows} is not divisible by block size {block_size}"
        )));
    }
    let depth = rows / block_size;
    let n_diag = depth + cols - 1;
    let mut sums = Mat::zeros(block_size, n_diag);
    let mut counts = vec![0usize; n_diag];
    for j in 0..cols {
        for i in 0..depth {
            counts[i + j] += 1;
            for c in 0..block_size {
                sums[(c, i + j)] += mat[(i * block_size + c, j)];
            }
        }
    }
    for (s, n) in counts.iter().enumerate() {
        let inv = 1.0 / *n as f64;
        sums.column_mut(s).scale_mut(inv);
    }
    Ok(Mat::from_fn(rows, cols, |r, j| {
        sums[(r % block_size, r / block_size + j)]
    }))
}

/// Largest deviation of any block from its anti-diagonal mean (0 for exact Hankel).
pub fn hankel_defect(mat: &Mat, block_size: usize) -> Result<f64> {
    let proj = hankel_project(mat, block_size)?;
    Ok(matlib::max_abs_diff(mat, &proj))
}

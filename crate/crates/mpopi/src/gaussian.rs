//! Joint Gaussian over the whole control sequence.
//!
//! The control inputs of all horizon steps are treated as one random vector
//! of length `m * T` with mean `U` and covariance `S` (block-diagonal when
//! constructed from per-step covariances, dense after moment-matching
//! updates). The Cholesky factor is cached because sampling, log densities,
//! and the quadratic cost term all reuse it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::StepStream;

/// Absolute tolerance for the symmetry check on covariance inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Relative regularization floor: `delta = REG_FLOOR_REL * trace / dim`.
pub const REG_FLOOR_REL: f64 = 1e-8;

/// Absolute fallback when the trace itself is zero (fully collapsed batch).
pub const REG_FLOOR_ABS: f64 = 1e-10;

/// Mean and covariance of the joint control-sequence distribution, with the
/// lower-triangular Cholesky factor of the covariance cached.
#[derive(Debug, Clone)]
pub struct JointProposal {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl JointProposal {
    /// Build a proposal, validating symmetry and positive definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                what: "covariance",
                expected: dim,
                got: cov.nrows(),
            });
        }
        check_symmetric(&cov)?;
        let chol = cholesky(&cov).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { mean, cov, chol })
    }

    /// Build a proposal from a possibly rank-deficient covariance estimate,
    /// adding a diagonal floor until the factorization succeeds.
    ///
    /// The floor starts at `REG_FLOOR_REL * trace / dim` (or `REG_FLOOR_ABS`
    /// for a zero-trace matrix) and doubles up to three times before giving
    /// up. Sample-moment updates with few samples routinely need this.
    pub fn regularized(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                what: "covariance",
                expected: dim,
                got: cov.nrows(),
            });
        }
        let sym = symmetrize(&cov);
        if let Some(chol) = cholesky(&sym) {
            return Ok(Self {
                mean,
                cov: sym,
                chol,
            });
        }
        let trace: f64 = sym.diagonal().sum();
        let mut delta = REG_FLOOR_REL * trace / dim as f64;
        if !delta.is_finite() || delta <= 0.0 {
            delta = REG_FLOOR_ABS;
        }
        for _ in 0..4 {
            let mut fixed = sym.clone();
            for i in 0..dim {
                fixed[(i, i)] += delta;
            }
            if let Some(chol) = cholesky(&fixed) {
                return Ok(Self {
                    mean,
                    cov: fixed,
                    chol,
                });
            }
            delta *= 2.0;
        }
        Err(Error::NotPositiveDefinite)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower-triangular factor `L` with `L * L^T = cov`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Replace the mean, keeping the covariance and its factor.
    pub fn with_mean(&self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "proposal mean",
                expected: self.dim(),
                got: mean.len(),
            });
        }
        Ok(Self {
            mean,
            cov: self.cov.clone(),
            chol: self.chol.clone(),
        })
    }

    /// Solve `cov * x = b` through the cached factor.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        chol_solve_in_place(&self.chol, &mut x);
        x
    }

    /// `log q(v | mean, cov)` of the joint Gaussian density.
    pub fn log_density(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "density argument",
                expected: self.dim(),
                got: v.len(),
            });
        }
        let dim = self.dim() as f64;
        let log_det: f64 = self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let diff = v - &self.mean;
        let quad = diff.dot(&self.solve(&diff));
        Ok(-0.5 * (dim * (2.0 * std::f64::consts::PI).ln() + log_det + quad))
    }
}

/// Assemble the combined covariance from per-step covariances: a
/// block-diagonal matrix with `per_step[t]` as the t-th diagonal block.
///
/// Only per-step input noise is represented here, mirroring the classic
/// per-timestep formulation; dense cross-step covariances are accepted
/// everywhere else and arise from proposal updates.
pub fn assemble_block_covariance(per_step: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let t_len = per_step.len();
    if t_len == 0 {
        return Err(Error::DimensionMismatch {
            what: "per-step covariance list",
            expected: 1,
            got: 0,
        });
    }
    let m = per_step[0].nrows();
    for block in per_step {
        if block.nrows() != m || block.ncols() != m {
            return Err(Error::DimensionMismatch {
                what: "per-step covariance block",
                expected: m,
                got: block.nrows(),
            });
        }
        check_symmetric(block)?;
        if cholesky(block).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
    }
    let n = m * t_len;
    let mut out = DMatrix::zeros(n, n);
    for (t, block) in per_step.iter().enumerate() {
        out.view_mut((t * m, t * m), (m, m)).copy_from(block);
    }
    Ok(out)
}

/// Cholesky of a block-diagonal assembly without factoring the full matrix.
/// Falls back on the dense path when blocks differ in size or the matrix is
/// not block-structured; callers with a dense covariance use
/// [`JointProposal::new`] directly.
pub fn block_cholesky(per_step: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let t_len = per_step.len();
    if t_len == 0 {
        return Err(Error::DimensionMismatch {
            what: "per-step covariance list",
            expected: 1,
            got: 0,
        });
    }
    let m = per_step[0].nrows();
    let n = m * t_len;
    let mut out = DMatrix::zeros(n, n);
    for (t, block) in per_step.iter().enumerate() {
        let factor = cholesky(block).ok_or(Error::NotPositiveDefinite)?;
        out.view_mut((t * m, t * m), (m, m)).copy_from(&factor);
    }
    Ok(out)
}

/// Draw `k_count` noise vectors `eps_k = chol * z_k` with `z_k` i.i.d.
/// standard normal, each from its own per-sample substream of `stream` at
/// refinement iteration `iter`.
pub fn sample_noise(
    chol: &DMatrix<f64>,
    k_count: usize,
    stream: &StepStream,
    iter: u64,
) -> Vec<DVector<f64>> {
    let dim = chol.nrows();
    (0..k_count)
        .map(|k| {
            let mut rng = stream.noise_rng(iter, k as u64);
            let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            chol * z
        })
        .collect()
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL {
        Err(Error::NotSymmetric {
            max_asymmetry: worst,
        })
    } else {
        Ok(())
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

fn cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::linalg::Cholesky::new(m.clone()).map(|c| c.unpack())
}

/// Lower-triangular factor of a positive *semi*definite matrix. Strictly PD
/// inputs take the fast path; exactly-degenerate directions (e.g. a zero
/// covariance used to disable exploration) get zero pivots instead of an
/// error. Genuinely indefinite matrices still fail.
pub fn factor_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    if let Some(chol) = cholesky(m) {
        return Ok(chol);
    }
    let n = m.nrows();
    let scale = m.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let tol = 1e-12 * scale;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d > tol {
            let p = d.sqrt();
            l[(j, j)] = p;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / p;
            }
        } else if d > -tol {
            // Degenerate direction: the rest of the column must vanish too.
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > tol {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        } else {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(l)
}

/// Forward/backward substitution with a lower-triangular factor:
/// solves `(L L^T) x = b` in place.
pub(crate) fn chol_solve_in_place(chol: &DMatrix<f64>, x: &mut DVector<f64>) {
    let n = chol.nrows();
    for i in 0..n {
        let mut s = x[i];
        for j in 0..i {
            s -= chol[(i, j)] * x[j];
        }
        x[i] = s / chol[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= chol[(j, i)] * x[j];
        }
        x[i] = s / chol[(i, i)];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn block_covariance_single_identity() {
        let out = assemble_block_covariance(&[DMatrix::identity(2, 2)]).unwrap();
        assert_eq!(out, DMatrix::identity(2, 2));
    }

    #[test]
    fn block_covariance_repeated_diag() {
        let step = dmatrix![2.0, 0.0; 0.0, 3.0];
        let out = assemble_block_covariance(&[step.clone(), step]).unwrap();
        let expected = DMatrix::from_diagonal(&dvector![2.0, 3.0, 2.0, 3.0]);
        assert_eq!(out, expected);
    }

    #[test]
    fn block_covariance_hand_cholesky() {
        // T=2, m=1, blocks [4] and [9]: covariance diag(4, 9), factor diag(2, 3).
        let out = assemble_block_covariance(&[dmatrix![4.0], dmatrix![9.0]]).unwrap();
        assert_eq!(out, DMatrix::from_diagonal(&dvector![4.0, 9.0]));
        let p = JointProposal::new(dvector![0.0, 0.0], out).unwrap();
        assert!((p.chol()[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((p.chol()[(1, 1)] - 3.0).abs() < 1e-12);
        assert_eq!(p.chol()[(0, 1)], 0.0);
    }

    #[test]
    fn block_covariance_rejects_bad_input() {
        let err = assemble_block_covariance(&[dmatrix![4.0], dmatrix![1.0, 0.0; 0.0, 1.0]]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = assemble_block_covariance(&[dmatrix![-1.0]]);
        assert!(matches!(err, Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn block_cholesky_matches_dense() {
        let a = dmatrix![2.0, 0.3; 0.3, 1.0];
        let b = dmatrix![1.5, -0.2; -0.2, 0.8];
        let cov = assemble_block_covariance(&[a.clone(), b.clone()]).unwrap();
        let dense = JointProposal::new(DVector::zeros(4), cov).unwrap();
        let fast = block_cholesky(&[a, b]).unwrap();
        let diff = (dense.chol() - &fast).abs().max();
        assert!(diff < 1e-12, "factor mismatch {diff}");
    }

    #[test]
    fn chol_reconstructs_cov() {
        let cov = dmatrix![4.0, 1.0, 0.5; 1.0, 3.0, 0.2; 0.5, 0.2, 2.0];
        let p = JointProposal::new(DVector::zeros(3), cov.clone()).unwrap();
        let rebuilt = p.chol() * p.chol().transpose();
        let rel = (&rebuilt - &cov).abs().max() / cov.abs().max();
        assert!(rel < 1e-8, "reconstruction error {rel}");
    }

    #[test]
    fn rejects_asymmetric_cov() {
        let cov = dmatrix![1.0, 0.5; 0.0, 1.0];
        assert!(matches!(
            JointProposal::new(DVector::zeros(2), cov),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn zero_chol_gives_zero_noise() {
        let chol = DMatrix::zeros(3, 3);
        let stream = StepStream::new(9, 0);
        for eps in sample_noise(&chol, 4, &stream, 1) {
            assert_eq!(eps, DVector::zeros(3));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = JointProposal::new(dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let stream = StepStream::new(123, 5);
        let a = sample_noise(p.chol(), 3, &stream, 2);
        let b = sample_noise(p.chol(), 3, &stream, 2);
        assert_eq!(a, b);
    }

    #[test]
    fn identity_cov_moments() {
        // Law-of-large-numbers check: per-coordinate mean within 4/sqrt(K),
        // variance within 5% of 1 at K = 1e5.
        let k = 100_000usize;
        let p = JointProposal::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let stream = StepStream::new(77, 0);
        let noise = sample_noise(p.chol(), k, &stream, 1);
        for coord in 0..2 {
            let mean: f64 = noise.iter().map(|e| e[coord]).sum::<f64>() / k as f64;
            let var: f64 =
                noise.iter().map(|e| (e[coord] - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            assert!(mean.abs() < 4.0 / (k as f64).sqrt(), "mean {mean}");
            assert!((var - 1.0).abs() < 0.05, "var {var}");
        }
    }

    #[test]
    fn log_density_standard_normal_mode() {
        let p = JointProposal::new(dvector![0.0], dmatrix![1.0]).unwrap();
        let expect = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((p.log_density(&dvector![0.0]).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn log_density_hand_evaluated() {
        // N(0, 4) at v = 2: -0.5 log(2*pi*4) - 0.5.
        let p = JointProposal::new(dvector![0.0], dmatrix![4.0]).unwrap();
        let expect = -0.5 * (2.0 * std::f64::consts::PI * 4.0).ln() - 0.5;
        assert!((p.log_density(&dvector![2.0]).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn log_density_symmetric_about_mean() {
        let cov = dmatrix![2.0, 0.4; 0.4, 1.0];
        let mean = dvector![1.0, -2.0];
        let p = JointProposal::new(mean.clone(), cov).unwrap();
        let v = dvector![0.3, 0.9];
        let mirrored = 2.0 * &mean - &v;
        let a = p.log_density(&v).unwrap();
        let b = p.log_density(&mirrored).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn log_density_dimension_check() {
        let p = JointProposal::new(dvector![0.0], dmatrix![1.0]).unwrap();
        assert!(p.log_density(&dvector![0.0, 1.0]).is_err());
    }

    #[test]
    fn regularized_floors_zero_covariance() {
        let p = JointProposal::regularized(dvector![1.0, 2.0], DMatrix::zeros(2, 2)).unwrap();
        assert!((p.cov()[(0, 0)] - REG_FLOOR_ABS).abs() < 1e-24);
        assert!((p.cov()[(1, 1)] - REG_FLOOR_ABS).abs() < 1e-24);
    }

    #[test]
    fn regularized_leaves_pd_matrix_alone() {
        let cov = dmatrix![2.0, 0.1; 0.1, 1.0];
        let p = JointProposal::regularized(dvector![0.0, 0.0], cov.clone()).unwrap();
        assert_eq!(p.cov(), &cov);
    }

    #[test]
    fn psd_factor_handles_zero_and_mixed() {
        let zero = DMatrix::zeros(3, 3);
        assert_eq!(factor_psd(&zero).unwrap(), zero);
        // Mixed: PD block plus an exactly-zero direction.
        let m = DMatrix::from_diagonal(&dvector![4.0, 0.0, 1.0]);
        let l = factor_psd(&m).unwrap();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(1, 1)], 0.0);
        assert_eq!(l[(2, 2)], 1.0);
        // Indefinite still fails.
        assert!(factor_psd(&DMatrix::from_diagonal(&dvector![1.0, -1.0])).is_err());
        // PD dense input matches the strict factor.
        let cov = dmatrix![4.0, 1.0; 1.0, 3.0];
        let strict = JointProposal::new(DVector::zeros(2), cov.clone()).unwrap();
        let psd = factor_psd(&cov).unwrap();
        assert!((strict.chol() - &psd).abs().max() < 1e-12);
    }

    #[test]
    fn solve_matches_inverse() {
        let cov = dmatrix![4.0, 1.0; 1.0, 3.0];
        let p = JointProposal::new(DVector::zeros(2), cov.clone()).unwrap();
        let b = dvector![1.0, 2.0];
        let x = p.solve(&b);
        let back = cov * x;
        assert!((back - b).abs().max() < 1e-12);
    }
}

//! Gaussian linear-algebra primitives.
//!
//! Covariances are carried as [`SpdMatrix`], which caches its lower Cholesky
//! factor at construction so every downstream quadratic form, whitening and
//! sampling step reuses the same factor. Randomness flows through
//! [`SeededRng`], a ChaCha stream whose children are derived from the root
//! seed and a key, never from the parent's stream position.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::error::{CredError, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative asymmetry above which a matrix is rejected outright rather than
/// symmetrized.
const ASYMMETRY_REJECT: f64 = 1e-6;

/// Lower Cholesky factor `L` with `L Lᵀ = m`.
///
/// Fails with [`CredError::NotPositiveDefinite`] on the first pivot that is
/// not strictly positive.
pub fn cholesky_lower(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(CredError::NotSquare { rows: n, cols: m.ncols() });
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(CredError::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solve `L y = b` for lower-triangular `L`.
fn forward_substitute(l: &Matrix, b: &Vector) -> Vector {
    let n = l.nrows();
    let mut y = Vector::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Symmetric positive-definite matrix with its cached lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: Matrix,
    lower: Matrix,
}

impl SpdMatrix {
    /// Validate and store `m`. The matrix is symmetrized as `(m + mᵀ)/2`;
    /// gross asymmetry is an error and a failed factorization is never
    /// regularized.
    pub fn new(m: Matrix) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols || rows == 0 {
            return Err(CredError::NotSquare { rows, cols });
        }
        let scale = m.norm().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).norm() / scale;
        if !(asym <= ASYMMETRY_REJECT) {
            return Err(CredError::NotSymmetric(asym));
        }
        let m = (&m + m.transpose()) * 0.5;
        let lower = cholesky_lower(&m)?;
        Ok(Self { m, lower })
    }

    pub fn identity(dim: usize) -> Self {
        let m = Matrix::identity(dim, dim);
        Self { lower: m.clone(), m }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    /// Row-major construction.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(CredError::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        Self::new(Matrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// `c · self`; the factor scales by `√c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(CredError::InvalidRange(format!("covariance scale must be positive, got {c}")));
        }
        Ok(Self { m: &self.m * c, lower: &self.lower * c.sqrt() })
    }

    /// `ln |self|` from the Cholesky diagonal.
    pub fn ln_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// `vᵀ self⁻¹ v`.
    pub fn quad_form_inv(&self, v: &Vector) -> Result<f64> {
        Ok(self.whiten(v)?.norm_squared())
    }

    /// `L⁻¹ v` for the cached lower factor.
    pub fn whiten(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.dim() {
            return Err(CredError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(forward_substitute(&self.lower, v))
    }

    /// Dense inverse via the Cholesky factor.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv_l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            inv_l.set_column(j, &forward_substitute(&self.lower, &e));
        }
        inv_l.transpose() * inv_l
    }
}

/// Whitened error `s = L⁻¹ e` with `L = cholesky_lower(cov)`, so that
/// `sᵀs = eᵀ cov⁻¹ e`. The vector itself depends on the choice of factor;
/// its norm does not.
pub fn whiten(e: &Vector, cov: &SpdMatrix) -> Result<Vector> {
    cov.whiten(e)
}

/// Multivariate normal `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnDistribution {
    mean: Vector,
    cov: SpdMatrix,
}

impl MvnDistribution {
    pub fn new(mean: Vector, cov: SpdMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(CredError::DimensionMismatch { expected: cov.dim(), got: mean.len() });
        }
        Ok(Self { mean, cov })
    }

    pub fn standard(dim: usize) -> Self {
        Self { mean: Vector::zeros(dim), cov: SpdMatrix::identity(dim) }
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Same mean, covariance multiplied by `c`.
    pub fn with_scaled_cov(&self, c: f64) -> Result<Self> {
        Ok(Self { mean: self.mean.clone(), cov: self.cov.scaled(c)? })
    }

    /// One draw of `L z` with `z` standard normal (zero mean).
    pub fn draw_centered(&self, rng: &mut SeededRng) -> Vector {
        let z = standard_normal_vector(self.dim(), rng);
        self.cov.lower() * z
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vector {
        self.draw_centered(rng) + &self.mean
    }
}

/// `n` independent draws from `d`.
pub fn sample_mvn(d: &MvnDistribution, n: usize, rng: &mut SeededRng) -> Vec<Vector> {
    (0..n).map(|_| d.sample(rng)).collect()
}

pub fn standard_normal_vector(dim: usize, rng: &mut SeededRng) -> Vector {
    Vector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Random covariance `Q Λ Qᵀ`: `Q` from the QR factorization of a Gaussian
/// matrix, `Λ` diagonal with entries drawn uniformly from `[eig_lo, eig_hi]`.
pub fn random_spd(d: usize, eig_lo: f64, eig_hi: f64, rng: &mut SeededRng) -> Result<SpdMatrix> {
    if !(eig_lo > 0.0) || !(eig_lo <= eig_hi) || !eig_hi.is_finite() {
        return Err(CredError::InvalidRange(format!(
            "eigenvalue range [{eig_lo}, {eig_hi}] must satisfy 0 < lo <= hi"
        )));
    }
    if d == 0 {
        return Err(CredError::InvalidRange("dimension must be positive".into()));
    }
    let g = Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    // Fix column signs so Q is Haar distributed.
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let eigs: Vec<f64> = if eig_lo == eig_hi {
        vec![eig_lo; d]
    } else {
        let u = Uniform::new_inclusive(eig_lo, eig_hi).expect("validated range");
        (0..d).map(|_| rng.sample(u)).collect()
    };
    let lambda = Matrix::from_diagonal(&Vector::from_vec(eigs));
    SpdMatrix::new(&q * lambda * q.transpose())
}

/// SplitMix64 finalizer, used to derive child seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random stream keyed by a 64-bit seed.
///
/// Not `Sync`-shared: each concurrent task takes its own [`SeededRng::child`].
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream derived from this stream's seed and `key`.
    /// Does not depend on (or advance) the current stream position.
    pub fn child(&self, key: u64) -> Self {
        Self::new(mix64(self.seed ^ mix64(key)))
    }

    /// Child keyed by a path of keys, e.g. `(scenario, trial)`.
    pub fn child_path(&self, keys: &[u64]) -> Self {
        keys.iter().fold(self.clone(), |rng, &k| rng.child(k))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn whitened_norm_is_mahalanobis(seed in any::<u64>(), d in 1usize..6, scale in 0.01f64..100.0) {
            let mut rng = SeededRng::new(seed);
            let cov = random_spd(d, 0.05, 20.0, &mut rng).unwrap();
            let e = standard_normal_vector(d, &mut rng) * scale;
            let s = whiten(&e, &cov).unwrap();
            let inv = cov.matrix().clone().try_inverse().unwrap();
            let q = (e.transpose() * inv * &e)[(0, 0)];
            prop_assert!((s.norm_squared() - q).abs() <= 1e-9 * q.max(1e-300));
        }

        #[test]
        fn random_spd_spectrum_inside_interval(seed in any::<u64>(), d in 1usize..6, lo in 0.01f64..5.0, width in 0.0f64..10.0) {
            let mut rng = SeededRng::new(seed);
            let hi = lo + width;
            let m = random_spd(d, lo, hi, &mut rng).unwrap();
            let eig = m.matrix().clone().symmetric_eigen().eigenvalues;
            for v in eig.iter() {
                prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
        }
    }
}

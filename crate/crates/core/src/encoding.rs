//! Input constraints and state-preparation vectors.
//!
//! Raw data is mapped linearly onto non-negative unit-sum arrays; the affine
//! parameters are kept so correlations can be mapped back to raw units.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{ensure_power_of_two, Error, Result};

/// Tolerance on `Σ x = 1` for probability arrays.
pub const SUM_TOL: f64 = 1e-12;

/// Pre-normalization data: a power-of-two length vector, optionally square 2D.
#[derive(Clone, Debug, PartialEq)]
pub struct RawArray {
    values: Vec<f64>,
    side: Option<usize>,
}

impl RawArray {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_len("array length", values.len())?;
        check_finite(&values)?;
        Ok(Self { values, side: None })
    }

    /// Square `side × side` array in row-major order.
    pub fn new_2d(side: usize, values: Vec<f64>) -> Result<Self> {
        check_len("image side", side)?;
        if values.len() != side * side {
            return Err(Error::LengthMismatch {
                what: "2D array element count",
                expected: side * side,
                actual: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self {
            values,
            side: Some(side),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn side(&self) -> Option<usize> {
        self.side
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_len(what: &'static str, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("{what} must be at least 2, got {n}")));
    }
    ensure_power_of_two(what, n)
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidArgument(format!(
            "non-finite value {} at position {i}",
            values[i]
        ))),
        None => Ok(()),
    }
}

fn check_distribution(values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "probability entry {i} is {} (must be finite and ≥ 0)",
            values[i]
        )));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Non-negative, unit-sum 1D array.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbArray(Vec<f64>);

impl ProbArray {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_len("array length", values.len())?;
        check_distribution(&values)?;
        Ok(Self(values))
    }

    /// Random array with i.i.d. uniform entries, normalized to unit sum.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_len("array length", n)?;
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        Self::new(raw.into_iter().map(|v| v / total).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        amplitudes_from(&self.0)
    }
}

/// Non-negative, unit-sum `N × N` array stored row-major; element `(j, k)` is
/// row `j`, column `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbArray2D {
    side: usize,
    values: Vec<f64>,
}

impl ProbArray2D {
    pub fn new(side: usize, values: Vec<f64>) -> Result<Self> {
        check_len("image side", side)?;
        if values.len() != side * side {
            return Err(Error::LengthMismatch {
                what: "2D array element count",
                expected: side * side,
                actual: values.len(),
            });
        }
        check_distribution(&values)?;
        Ok(Self { side, values })
    }

    pub fn uniform(side: usize) -> Result<Self> {
        let n2 = side * side;
        Self::new(side, vec![1.0 / n2 as f64; n2])
    }

    /// Rescales non-negative values to unit sum. Returns the array and the
    /// sum before rescaling.
    pub fn renormalized(side: usize, values: Vec<f64>) -> Result<(Self, f64)> {
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "negative or NaN entry at position {i}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidArgument(
                "cannot renormalize an all-zero array".into(),
            ));
        }
        let arr = Self::new(side, values.into_iter().map(|v| v / sum).collect())?;
        Ok((arr, sum))
    }

    pub fn random<R: Rng + ?Sized>(side: usize, rng: &mut R) -> Result<Self> {
        check_len("image side", side)?;
        let raw: Vec<f64> = (0..side * side).map(|_| rng.gen::<f64>()).collect();
        Ok(Self::renormalized(side, raw)?.0)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.side + k]
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        amplitudes_from(&self.values)
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Normalization map `x = a·(x′ + b)`.
///
/// As a plain linear map `x = α·x′ + β` this has `α = a` and `β = a·b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffineParams {
    pub a: f64,
    pub b: f64,
    /// Set when the raw input was constant; such params are not invertible
    /// in any meaningful sense and [`denormalize_correlation`] refuses them.
    pub degenerate: bool,
}

impl AffineParams {
    pub const IDENTITY: AffineParams = AffineParams {
        a: 1.0,
        b: 0.0,
        degenerate: false,
    };

    pub fn scale(&self) -> f64 {
        self.a
    }

    pub fn offset(&self) -> f64 {
        self.a * self.b
    }

    pub fn apply(&self, raw: f64) -> f64 {
        self.a * (raw + self.b)
    }
}

/// Maps raw values onto `(raw − min) / Σ(raw − min)`.
///
/// Constant inputs carry no correlation structure; they map to the uniform
/// array and the returned params are flagged degenerate.
pub fn normalize(raw: &RawArray) -> (ProbArray, AffineParams) {
    let (values, params) = normalize_values(raw.values());
    (ProbArray(values), params)
}

/// 2D counterpart of [`normalize`]. Fails if `raw` is not square.
pub fn normalize_2d(raw: &RawArray) -> Result<(ProbArray2D, AffineParams)> {
    let side = raw.side().ok_or_else(|| {
        Error::InvalidArgument("expected a square 2D array, got 1D data".into())
    })?;
    let (values, params) = normalize_values(raw.values());
    Ok((ProbArray2D { side, values }, params))
}

fn normalize_values(raw: &[f64]) -> (Vec<f64>, AffineParams) {
    let n = raw.len() as f64;
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let spread: f64 = raw.iter().map(|v| v - min).sum();
    if spread <= 0.0 {
        let c = raw[0];
        let params = AffineParams {
            a: 1.0,
            b: 1.0 / n - c,
            degenerate: true,
        };
        return (vec![1.0 / n; raw.len()], params);
    }
    let a = 1.0 / spread;
    let values = raw.iter().map(|v| (v - min) * a).collect();
    (
        values,
        AffineParams {
            a,
            b: -min,
            degenerate: false,
        },
    )
}

/// Maps a correlation of normalized arrays back to raw units.
///
/// With `x = α·x′ + β` for each array and normalized sums `S = 1`,
/// `C_norm = α_A·α_B·C_raw + β_A·S_B + β_B·S_A − N·β_A·β_B`.
pub fn denormalize_correlation(
    c_norm: &[f64],
    params_a: &AffineParams,
    params_b: &AffineParams,
    n: usize,
) -> Result<Vec<f64>> {
    if params_a.degenerate || params_b.degenerate {
        return Err(Error::Degenerate);
    }
    let (alpha_a, beta_a) = (params_a.scale(), params_a.offset());
    let (alpha_b, beta_b) = (params_b.scale(), params_b.offset());
    let denom = alpha_a * alpha_b;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::InvalidArgument("zero normalization scale".into()));
    }
    let (sum_a, sum_b) = (1.0, 1.0);
    let shift = beta_a * sum_b + beta_b * sum_a - n as f64 * beta_a * beta_b;
    Ok(c_norm.iter().map(|c| (c - shift) / denom).collect())
}

/// State-preparation amplitudes `√x_j`.
pub fn amplitudes_from(prob: &[f64]) -> Vec<Complex64> {
    prob.iter()
        .map(|&p| Complex64::new(p.max(0.0).sqrt(), 0.0))
        .collect()
}

/// Cyclic 2D shift: `out[(j̄, k̄)] = in[((j + j̄) mod N, (k + k̄) mod N)]`.
pub fn cyclic_shift_2d(prob: &ProbArray2D, j: usize, k: usize) -> Result<ProbArray2D> {
    let n = prob.side;
    if j >= n || k >= n {
        return Err(Error::InvalidArgument(format!(
            "shift ({j}, {k}) out of range for side {n}"
        )));
    }
    let mut values = Vec::with_capacity(n * n);
    for jb in 0..n {
        for kb in 0..n {
            values.push(prob.get((j + jb) % n, (k + kb) % n));
        }
    }
    Ok(ProbArray2D { side: n, values })
}

/// Four real correlation tasks whose results recombine into a complex
/// cross-correlation `C_j̄ = Σ_j conj(A_{j̄⊕j}) B_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexDecomposition {
    pub re_re: (RawArray, RawArray),
    pub re_im: (RawArray, RawArray),
    pub im_re: (RawArray, RawArray),
    pub im_im: (RawArray, RawArray),
}

impl ComplexDecomposition {
    /// `C = (C_ReRe + C_ImIm) + i·(C_ReIm − C_ImRe)`, from the real
    /// correlations of the four task pairs in field order.
    pub fn recombine(
        re_re: &[f64],
        re_im: &[f64],
        im_re: &[f64],
        im_im: &[f64],
    ) -> Result<Vec<Complex64>> {
        let n = re_re.len();
        for part in [re_im, im_re, im_im] {
            if part.len() != n {
                return Err(Error::LengthMismatch {
                    what: "recombined correlation parts",
                    expected: n,
                    actual: part.len(),
                });
            }
        }
        Ok((0..n)
            .map(|j| Complex64::new(re_re[j] + im_im[j], re_im[j] - im_re[j]))
            .collect())
    }
}

pub fn complex_decompose(a: &[Complex64], b: &[Complex64]) -> Result<ComplexDecomposition> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "complex arrays",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let re = |v: &[Complex64]| RawArray::new(v.iter().map(|z| z.re).collect());
    let im = |v: &[Complex64]| RawArray::new(v.iter().map(|z| z.im).collect());
    Ok(ComplexDecomposition {
        re_re: (re(a)?, re(b)?),
        re_im: (re(a)?, im(b)?),
        im_re: (im(a)?, re(b)?),
        im_im: (im(a)?, im(b)?),
    })
}

//! Classical cyclic correlation, convolution and the exact translation-model
//! EMML update. These are the ground truth for every simulated result.

use num_complex::Complex64;
use serde::Serialize;

use crate::encoding::ProbArray2D;
use crate::error::{ensure_power_of_two, Error, Result};
use crate::fft::{fft_in_place, Direction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Fft,
}

/// Which argument carries the lag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Lag {
    /// `C_j̄ = Σ_j A_{j̄⊕j} B_j`; the quantity the cross-correlation circuit estimates.
    #[default]
    OnFirst,
    /// `C_j = Σ_i A_i B_{j⊕i}`; the textbook form with the second array shifted.
    OnSecond,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationResult {
    /// Row-major values; `rows == 1` for 1D results.
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub method: Method,
}

impl CorrelationResult {
    fn linear(values: Vec<f64>, method: Method) -> Self {
        let cols = values.len();
        Self {
            values,
            rows: 1,
            cols,
            method,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            what: "correlation inputs",
            expected: a,
            actual: b,
        });
    }
    if a == 0 {
        return Err(Error::InvalidArgument("empty correlation input".into()));
    }
    Ok(())
}

/// O(N²) cyclic cross-correlation with the lag on `a`.
pub fn crosscorr_brute(a: &[f64], b: &[f64]) -> Result<CorrelationResult> {
    crosscorr_brute_with(a, b, Lag::OnFirst)
}

pub fn crosscorr_brute_with(a: &[f64], b: &[f64], lag: Lag) -> Result<CorrelationResult> {
    check_pair(a.len(), b.len())?;
    let n = a.len();
    let values = (0..n)
        .map(|s| {
            (0..n)
                .map(|j| match lag {
                    Lag::OnFirst => a[(s + j) % n] * b[j],
                    Lag::OnSecond => a[j] * b[(s + j) % n],
                })
                .sum()
        })
        .collect();
    Ok(CorrelationResult::linear(values, Method::Brute))
}

/// Cyclic cross-correlation through the convolution theorem, O(N log N).
pub fn crosscorr_fft(a: &[f64], b: &[f64]) -> Result<CorrelationResult> {
    crosscorr_fft_with(a, b, Lag::OnFirst)
}

pub fn crosscorr_fft_with(a: &[f64], b: &[f64], lag: Lag) -> Result<CorrelationResult> {
    check_pair(a.len(), b.len())?;
    ensure_power_of_two("FFT length", a.len())?;
    let n = a.len();
    let mut fa = to_complex(a);
    let mut fb = to_complex(b);
    fft_in_place(&mut fa, Direction::Forward);
    fft_in_place(&mut fb, Direction::Forward);
    let mut prod: Vec<Complex64> = fa
        .iter()
        .zip(&fb)
        .map(|(x, y)| match lag {
            Lag::OnFirst => x * y.conj(),
            Lag::OnSecond => x.conj() * y,
        })
        .collect();
    fft_in_place(&mut prod, Direction::Backward);
    let scale = 1.0 / n as f64;
    Ok(CorrelationResult::linear(
        prod.iter().map(|z| z.re * scale).collect(),
        Method::Fft,
    ))
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Cyclic convolution `conv_j = Σ_i A_i B_{(j−i) mod N}`.
///
/// Equivalently `conv_j = corr_{(−j) mod N}` for the [`Lag::OnFirst`]
/// correlation of `A` with the index-reversed `B` (`B′_i = B_{(−i) mod N}`).
pub fn convolution(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_pair(a.len(), b.len())?;
    ensure_power_of_two("convolution length", a.len())?;
    let n = a.len();
    Ok((0..n)
        .map(|j| (0..n).map(|i| a[i] * b[(j + n - i) % n]).sum())
        .collect())
}

/// Complex cyclic cross-correlation `C_j̄ = Σ_j conj(A_{j̄⊕j}) B_j` (lag on
/// `a`), or `Σ_i conj(A_i) B_{j⊕i}` with [`Lag::OnSecond`].
pub fn crosscorr_complex_brute(a: &[Complex64], b: &[Complex64], lag: Lag) -> Result<Vec<Complex64>> {
    check_pair(a.len(), b.len())?;
    let n = a.len();
    Ok((0..n)
        .map(|s| {
            (0..n)
                .map(|j| match lag {
                    Lag::OnFirst => a[(s + j) % n].conj() * b[j],
                    Lag::OnSecond => a[j].conj() * b[(s + j) % n],
                })
                .sum()
        })
        .collect())
}

/// 2D cyclic cross-correlation
/// `C[j̄, k̄] = Σ_{j′,k′} X[j′, k′] · x[j′ ⊕ j̄, k′ ⊕ k̄]`, O(N⁴).
pub fn crosscorr2d_brute(template: &ProbArray2D, data: &ProbArray2D) -> Result<CorrelationResult> {
    crosscorr2d_values(template.side(), template.values(), data.side(), data.values())
}

/// [`crosscorr2d_brute`] on unconstrained row-major square arrays.
pub fn crosscorr2d_values(
    side_x: usize,
    x: &[f64],
    side_y: usize,
    y: &[f64],
) -> Result<CorrelationResult> {
    check_pair(side_x, side_y)?;
    let n = side_x;
    if x.len() != n * n || y.len() != n * n {
        return Err(Error::LengthMismatch {
            what: "2D array element count",
            expected: n * n,
            actual: x.len().max(y.len()),
        });
    }
    let mut values = vec![0.0; n * n];
    for jb in 0..n {
        for kb in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += x[j * n + k] * y[((j + jb) % n) * n + (k + kb) % n];
                }
            }
            values[jb * n + kb] = acc;
        }
    }
    Ok(CorrelationResult {
        values,
        rows: n,
        cols: n,
        method: Method::Brute,
    })
}

/// Exact EMML translation-model update
/// `x⁺[j, k] = Σ_{j̄,k̄} C[j̄, k̄] · x[j ⊕ j̄, k ⊕ k̄]`, with `C` the 2D correlation
/// of template and data. Returns the raw update (it already sums to 1 when both
/// inputs do; no renormalization is applied).
pub fn emml_step(template: &ProbArray2D, data: &ProbArray2D) -> Result<ProbArray2D> {
    let values = emml_step_values(template, data)?;
    ProbArray2D::new(data.side(), values)
}

/// [`emml_step`] without re-validating the output.
pub fn emml_step_values(template: &ProbArray2D, data: &ProbArray2D) -> Result<Vec<f64>> {
    let corr = crosscorr2d_brute(template, data)?;
    let n = data.side();
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            let mut acc = 0.0;
            for jb in 0..n {
                for kb in 0..n {
                    acc += corr.get(jb, kb) * data.get((j + jb) % n, (k + kb) % n);
                }
            }
            out[j * n + k] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn brute_examples() {
        let c = crosscorr_brute(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.values, vec![0.0, 0.0, 0.0, 1.0]);
        let c = crosscorr_brute(&[0.25; 4], &[0.25; 4]).unwrap();
        assert!(close(&c.values, &[0.25; 4], 1e-15));
        let c = crosscorr_brute(&[0.5, 0.5, 0.0, 0.0], &[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(close(&c.values, &[0.5, 0.25, 0.0, 0.25], 1e-15));
        assert!(crosscorr_brute(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn lag_conventions_are_index_reflections() {
        let a = [0.1, 0.4, 0.2, 0.3];
        let b = [0.3, 0.3, 0.1, 0.3];
        let first = crosscorr_brute_with(&a, &b, Lag::OnFirst).unwrap().values;
        let second = crosscorr_brute_with(&a, &b, Lag::OnSecond).unwrap().values;
        for s in 0..4 {
            assert!((first[s] - second[(4 - s) % 4]).abs() < 1e-15);
        }
    }

    #[test]
    fn fft_examples() {
        for (a, b) in [
            (vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]),
            (vec![0.25; 4], vec![0.25; 4]),
            (vec![0.5, 0.5, 0.0, 0.0], vec![0.5, 0.5, 0.0, 0.0]),
        ] {
            for lag in [Lag::OnFirst, Lag::OnSecond] {
                let f = crosscorr_fft_with(&a, &b, lag).unwrap();
                let g = crosscorr_brute_with(&a, &b, lag).unwrap();
                assert!(close(&f.values, &g.values, 1e-15));
                assert_eq!(f.method, Method::Fft);
            }
        }
        assert!(matches!(
            crosscorr_fft(&[1.0; 6], &[1.0; 6]),
            Err(Error::NotPowerOfTwo { .. })
        ));
    }

    #[test]
    fn fft_large_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..1024).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..1024).map(|_| rng.gen()).collect();
        let f = crosscorr_fft(&a, &b).unwrap();
        let g = crosscorr_brute(&a, &b).unwrap();
        assert!(close(&f.values, &g.values, 1e-10));
    }

    #[test]
    fn convolution_examples() {
        let a = [0.1, 0.2, 0.3, 0.4];
        assert!(close(&convolution(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap(), &a, 0.0));
        assert!(close(
            &convolution(&a, &[0.0, 1.0, 0.0, 0.0]).unwrap(),
            &[0.4, 0.1, 0.2, 0.3],
            0.0
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = (0..8).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.gen()).collect();
        let mut want = vec![0.0; 8];
        for i in 0..8 {
            for m in 0..8 {
                want[(i + m) % 8] += a[i] * b[m];
            }
        }
        let got = convolution(&a, &b).unwrap();
        assert!(close(&got, &want, 1e-14));

        // conv_j = corr_{−j} of index-reversed B against A.
        let rev: Vec<f64> = (0..8).map(|i| b[(8 - i) % 8]).collect();
        let corr = crosscorr_brute(&rev, &a).unwrap().values;
        for j in 0..8 {
            assert!((got[j] - corr[(8 - j) % 8]).abs() < 1e-14);
        }
    }

    #[test]
    fn crosscorr2d_examples() {
        let u = ProbArray2D::uniform(4).unwrap();
        let c = crosscorr2d_brute(&u, &u).unwrap();
        assert!(close(&c.values, &[1.0 / 16.0; 16], 1e-15));

        let mut d = vec![0.0; 16];
        d[0] = 1.0;
        let delta = ProbArray2D::new(4, d.clone()).unwrap();
        let c = crosscorr2d_brute(&delta, &delta).unwrap();
        assert_eq!(c.values, d);
    }

    #[test]
    fn crosscorr2d_matches_flattened_index_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = ProbArray2D::random(4, &mut rng).unwrap();
        let y = ProbArray2D::random(4, &mut rng).unwrap();
        let c = crosscorr2d_brute(&x, &y).unwrap();
        // Independent loop over flat indices with explicit 2D wrap-around.
        let n = 4;
        for s in 0..n * n {
            let (jb, kb) = (s / n, s % n);
            let mut acc = 0.0;
            for p in 0..n * n {
                let (j, k) = (p / n, p % n);
                let q = ((j + jb) % n) * n + (k + kb) % n;
                acc += x.values()[p] * y.values()[q];
            }
            assert!((c.values[s] - acc).abs() < 1e-15);
        }
    }

    #[test]
    fn emml_step_examples() {
        let u = ProbArray2D::uniform(4).unwrap();
        let out = emml_step(&u, &u).unwrap();
        assert!(out.max_abs_diff(&u) < 1e-15);

        let mut d = vec![0.0; 4];
        d[0] = 1.0;
        let delta = ProbArray2D::new(2, d).unwrap();
        assert_eq!(emml_step(&delta, &delta).unwrap(), delta);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = ProbArray2D::random(4, &mut rng).unwrap();
        let x = ProbArray2D::random(4, &mut rng).unwrap();
        let out = emml_step_values(&t, &x).unwrap();
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn completeness(a in prop::collection::vec(-5.0f64..5.0, 16), b in prop::collection::vec(-5.0f64..5.0, 16)) {
            let c = crosscorr_brute(&a, &b).unwrap();
            let total: f64 = c.values.iter().sum();
            let want = a.iter().sum::<f64>() * b.iter().sum::<f64>();
            prop_assert!((total - want).abs() < 1e-12 * (1.0 + want.abs()) * 16.0);
        }

        #[test]
        fn shift_covariance(a in prop::collection::vec(0.0f64..1.0, 8), b in prop::collection::vec(0.0f64..1.0, 8), shift in 0usize..8) {
            // Delaying B by `shift` (B′_j = B_{j−shift}) moves every correlation peak back by `shift`.
            let shifted: Vec<f64> = (0..8).map(|j| b[(j + 8 - shift) % 8]).collect();
            let c = crosscorr_brute(&a, &b).unwrap().values;
            let cs = crosscorr_brute(&a, &shifted).unwrap().values;
            for s in 0..8 {
                prop_assert!((cs[s] - c[(s + shift) % 8]).abs() < 1e-14);
            }
        }
    }
}

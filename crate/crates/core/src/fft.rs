//! Iterative in-place radix-2 FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Transform direction. `Forward` uses the kernel `e^{-2πi nk/N}`, `Backward`
/// uses `e^{+2πi nk/N}`. Neither direction applies a normalization factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Unnormalized DFT of `buf` in place. Length must be a power of two.
pub fn fft_in_place(buf: &mut [Complex64], direction: Direction) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n <= 1 {
        return;
    }
    bit_reverse_permute(buf);

    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Backward => 1.0,
    };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        // Twiddles computed directly rather than by repeated multiplication so
        // rounding error does not grow with the stage length.
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, step * k as f64))
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let even = buf[start + k];
                let odd = buf[start + k + half] * twiddles[k];
                buf[start + k] = even + odd;
                buf[start + k + half] = even - odd;
            }
        }
        len <<= 1;
    }
}

fn bit_reverse_permute(buf: &mut [Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(input: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|k| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, x)| {
                        x * Complex64::from_polar(1.0, sign * 2.0 * PI * (j * k) as f64 / n as f64)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1usize, 2, 4, 8, 32] {
            let input: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
                .collect();
            for (dir, sign) in [(Direction::Forward, -1.0), (Direction::Backward, 1.0)] {
                let mut buf = input.clone();
                fft_in_place(&mut buf, dir);
                let want = naive_dft(&input, sign);
                for (a, b) in buf.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-12, "n={n} {a} vs {b}");
                }
            }
        }
    }
}

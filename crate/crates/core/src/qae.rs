//! Readout arithmetic shared by the amplitude-estimation circuits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_power_of_two, Error, Result};

/// Default `α` in `M = α·scale` when the readout dimension is not given.
pub const DEFAULT_ALPHA: f64 = 16.0;

/// Sampling mode flags outcome bins with fewer samples than this.
pub const MIN_BIN_SAMPLES: usize = 30;

/// How the readout register is turned into an outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ReadoutMode {
    /// Argmax of the exact Born distribution.
    Exact,
    /// Mode of `shots` simulated measurements.
    Sampling { shots: usize },
}

impl ReadoutMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            ReadoutMode::Sampling { shots: 0 } => {
                Err(Error::InvalidArgument("sampling mode needs shots ≥ 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Smallest power of two `≥ α·scale`, and at least 4.
pub fn readout_dim(alpha: f64, scale: f64) -> Result<usize> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    let target = (alpha * scale).ceil().max(4.0);
    if target > (1u64 << 40) as f64 {
        return Err(Error::InvalidArgument(format!(
            "readout dimension α·scale = {target} is unreasonably large"
        )));
    }
    Ok((target as usize).next_power_of_two())
}

pub(crate) fn check_readout_dim(m: usize) -> Result<()> {
    ensure_power_of_two("readout dimension M", m)?;
    if m < 4 {
        return Err(Error::InvalidArgument(format!(
            "readout dimension M must be at least 4, got {m}"
        )));
    }
    Ok(())
}

/// `sin²(π·m/M)`.
pub fn estimate_from_m(m: usize, readout: usize) -> Result<f64> {
    if m >= readout {
        return Err(Error::InvalidArgument(format!(
            "outcome {m} out of range for readout dimension {readout}"
        )));
    }
    Ok((PI * m as f64 / readout as f64).sin().powi(2))
}

/// Angle in `[0, π/2]` represented by outcome `m` (folding `m ↔ M − m`).
pub fn theta_from_m(m: usize, readout: usize) -> f64 {
    let folded = m.min(readout - m);
    PI * folded as f64 / readout as f64
}

/// Outcome positions `(Mθ/π, M(1 − θ/π))` of the two readout peaks for
/// `θ = arcsin √c`.
pub fn theoretical_peak(c: f64, readout: usize) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidArgument(format!(
            "amplitude {c} outside [0, 1]"
        )));
    }
    let theta = c.sqrt().asin();
    let m = readout as f64;
    Ok((m * theta / PI, m * (1.0 - theta / PI)))
}

/// Amplitude-estimation accuracy bound `2π√(c(1−c))/M + π²/M²`.
pub fn error_bound(c: f64, readout: usize) -> f64 {
    let m = readout as f64;
    let c = c.clamp(0.0, 1.0);
    2.0 * PI * (c * (1.0 - c)).sqrt() / m + PI * PI / (m * m)
}

/// Index of the largest count; ties resolve to the smallest index.
pub(crate) fn mode_of(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Mixes several integers into one RNG seed (splitmix64 finalizer chain).
pub(crate) fn derive_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_examples() {
        assert_eq!(estimate_from_m(0, 16).unwrap(), 0.0);
        assert!((estimate_from_m(8, 16).unwrap() - 1.0).abs() < 1e-15);
        assert!((estimate_from_m(4, 16).unwrap() - 0.5).abs() < 1e-15);
        assert!(estimate_from_m(16, 16).is_err());
        for m in 0..32 {
            let a = estimate_from_m(m, 32).unwrap();
            let b = estimate_from_m((32 - m) % 32, 32).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn peak_examples() {
        let (p, q) = theoretical_peak(1.0, 16).unwrap();
        assert!((p - 8.0).abs() < 1e-12 && (q - 8.0).abs() < 1e-12);
        let (p, q) = theoretical_peak(0.0, 16).unwrap();
        assert_eq!((p, q), (0.0, 16.0));
        let (p, q) = theoretical_peak(0.25, 12).unwrap();
        assert!((p - 2.0).abs() < 1e-12 && (q - 10.0).abs() < 1e-12);
        assert!(theoretical_peak(1.5, 16).is_err());
    }

    #[test]
    fn readout_dim_rounds_up() {
        assert_eq!(readout_dim(16.0, 2.0).unwrap(), 32);
        assert_eq!(readout_dim(16.0, 4.0f64.sqrt()).unwrap(), 32);
        assert_eq!(readout_dim(16.0, 8.0f64.sqrt()).unwrap(), 64);
        assert_eq!(readout_dim(0.1, 1.0).unwrap(), 4);
        assert!(readout_dim(0.0, 1.0).is_err());
        assert!(check_readout_dim(12).is_err());
        assert!(check_readout_dim(2).is_err());
    }

    #[test]
    fn bound_term_halves_per_fourfold_m_within_factor_two() {
        for c in [0.1, 0.3, 0.5] {
            let b1 = error_bound(c, 16);
            let b2 = error_bound(c, 64);
            let ratio = b1 / b2;
            assert!(ratio > 2.0 && ratio < 8.0, "ratio {ratio}");
        }
    }

    #[test]
    fn seeds_differ_per_part() {
        assert_ne!(derive_seed(&[1, 0, 0]), derive_seed(&[0, 1, 0]));
        assert_eq!(derive_seed(&[5, 6]), derive_seed(&[5, 6]));
    }
}

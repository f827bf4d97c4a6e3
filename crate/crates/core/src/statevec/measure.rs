//! Born-rule readout: exact conditional distributions and seeded sampling.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::layout::Register;
use super::StateVector;
use crate::error::{Error, Result};

/// Distribution of one register conditioned on fixed values of others.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalDistribution {
    pub given: Vec<(String, usize)>,
    pub target: String,
    /// `p(m | given)`; all zeros when the conditioning event has no weight.
    pub probabilities: Vec<f64>,
    /// Probability of the conditioning event.
    pub total_weight: f64,
}

impl ConditionalDistribution {
    /// True when the conditioning event has zero probability.
    pub fn is_empty(&self) -> bool {
        self.total_weight <= 0.0
    }

    /// Most probable outcome; ties resolve to the smallest value.
    pub fn argmax(&self) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let mut best = 0;
        for (m, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = m;
            }
        }
        Some(best)
    }
}

impl StateVector {
    /// Exact `p(target | given)` summed over every unlisted register.
    pub fn conditional_distribution(
        &self,
        target: &str,
        given: &[(&str, usize)],
    ) -> Result<ConditionalDistribution> {
        let layout = self.layout();
        let tgt = layout.register(target)?;
        let mut cond_mask = 0usize;
        let mut cond_value = 0usize;
        for (name, value) in given {
            let reg = layout.register(name)?;
            if reg.name() == tgt.name() || reg.mask() & cond_mask != 0 {
                return Err(Error::RegisterOverlap(reg.name().to_string()));
            }
            if *value >= reg.dim() {
                return Err(Error::InvalidArgument(format!(
                    "conditioning value {value} out of range for register `{name}`"
                )));
            }
            cond_mask |= reg.mask();
            cond_value |= reg.offset(*value);
        }
        let mut probabilities = vec![0.0; tgt.dim()];
        for (i, a) in self.amplitudes().iter().enumerate() {
            if i & cond_mask == cond_value {
                probabilities[tgt.digit(i)] += a.norm_sqr();
            }
        }
        let total_weight: f64 = probabilities.iter().sum();
        if total_weight > 0.0 {
            probabilities.iter_mut().for_each(|p| *p /= total_weight);
        }
        Ok(ConditionalDistribution {
            given: given.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
            target: target.to_string(),
            probabilities,
            total_weight: total_weight.min(1.0),
        })
    }

    /// Joint Born distribution of `registers`, indexed mixed-radix in list order.
    pub fn marginal(&self, registers: &[&str]) -> Result<Vec<f64>> {
        let regs = self.layout().resolve(registers)?;
        let size: usize = regs.iter().map(|r| r.dim()).product();
        let mut out = vec![0.0; size];
        for (i, a) in self.amplitudes().iter().enumerate() {
            out[joint_digit(&regs, i)] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Draws `shots` i.i.d. joint outcomes of `registers`; each outcome lists
    /// the register values in the order given. Deterministic in `seed`.
    pub fn sample_measurement(
        &self,
        registers: &[&str],
        seed: u64,
        shots: usize,
    ) -> Result<Vec<Vec<usize>>> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        let regs = self.layout().resolve(registers)?;
        let weights = self.marginal(registers)?;
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::Precondition(format!("cannot sample from state: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..shots)
            .map(|_| split_joint(&regs, dist.sample(&mut rng)))
            .collect())
    }
}

fn joint_digit(regs: &[&Register], index: usize) -> usize {
    regs.iter().fold(0, |acc, r| acc * r.dim() + r.digit(index))
}

fn split_joint(regs: &[&Register], mut joint: usize) -> Vec<usize> {
    let mut out = vec![0; regs.len()];
    for (slot, r) in out.iter_mut().zip(regs).rev() {
        *slot = joint % r.dim();
        joint /= r.dim();
    }
    out
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::statevec::RegisterLayout;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn product_state_conditional_equals_marginal() {
        let l = RegisterLayout::new([("a", 1), ("b", 2)]).unwrap();
        let mut s = StateVector::new(l).unwrap();
        s.inject_amplitudes("a", &[c(0.6), c(0.8)]).unwrap();
        s.inject_amplitudes("b", &[c(0.5), c(0.5), c(0.5), c(0.5)])
            .unwrap();
        let marg = s.marginal(&["b"]).unwrap();
        for a in 0..2 {
            let d = s.conditional_distribution("b", &[("a", a)]).unwrap();
            for (p, q) in d.probabilities.iter().zip(&marg) {
                assert!((p - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bell_state_conditional() {
        let l = RegisterLayout::new([("first", 1), ("second", 1)]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(l, vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        let d = s.conditional_distribution("second", &[("first", 1)]).unwrap();
        assert!((d.probabilities[0]).abs() < 1e-15);
        assert!((d.probabilities[1] - 1.0).abs() < 1e-15);
        assert!((d.total_weight - 0.5).abs() < 1e-15);
        assert_eq!(d.argmax(), Some(1));
    }

    #[test]
    fn zero_weight_condition_is_flagged() {
        let l = RegisterLayout::new([("a", 1), ("b", 1)]).unwrap();
        let s = StateVector::new(l).unwrap();
        let d = s.conditional_distribution("b", &[("a", 1)]).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.total_weight, 0.0);
        assert_eq!(d.argmax(), None);
        assert!(s.conditional_distribution("a", &[("a", 0)]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_born_distributed() {
        let l = RegisterLayout::new([("q", 1)]).unwrap();
        let det = StateVector::new(l.clone()).unwrap();
        let shots = det.sample_measurement(&["q"], 3, 50).unwrap();
        assert!(shots.iter().all(|s| s == &vec![0]));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(l, vec![c(h), c(h)]).unwrap();
        let n = 100_000;
        let a = s.sample_measurement(&["q"], 42, n).unwrap();
        let b = s.sample_measurement(&["q"], 42, n).unwrap();
        assert_eq!(a, b);
        let ones = a.iter().filter(|v| v[0] == 1).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 * 0.5).abs() < 5.0 * sigma);
        assert!(s.sample_measurement(&["q"], 0, 0).is_err());
    }

    #[test]
    fn joint_sampling_orders_registers_as_listed() {
        let l = RegisterLayout::new([("x", 1), ("y", 2)]).unwrap();
        let idx = l.compose(&[("x", 1), ("y", 2)]).unwrap();
        let mut amps = vec![c(0.0); 8];
        amps[idx] = c(1.0);
        let s = StateVector::from_amplitudes(l, amps).unwrap();
        let out = s.sample_measurement(&["y", "x"], 0, 3).unwrap();
        assert!(out.iter().all(|o| o == &vec![2, 1]));
    }
}

//! Parallel estimation of every cyclic cross-correlation value with one
//! amplitude-estimation circuit.
//!
//! Registers, most significant first: `var` (log N qubits) holds the lag `j̄` in
//! uniform superposition, `A` and `B` hold the two arrays as `Σ √x_j |j⟩`, and
//! `cor` (log M qubits) is the phase-estimation readout. The Grover operator
//! marks `A ⊖ B = var (mod N)`, so for each lag the marked weight is
//! `C_j̄ = Σ_j A_{j̄⊕j} B_j` and the readout conditioned on `var = j̄` peaks at
//! `M·arcsin(√C_j̄)/π`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::encoding::ProbArray;
use crate::error::{ensure_power_of_two, Error, Result};
use crate::qae::{
    self, check_readout_dim, error_bound, estimate_from_m, mode_of, theta_from_m, ReadoutMode,
    DEFAULT_ALPHA, MIN_BIN_SAMPLES,
};
use crate::statevec::{
    marked_offsets, tensor_product, ConditionalDistribution, Control, ControlledOp, Register,
    RegisterLayout, ReflectionSign, StateVector, DEFAULT_MAX_QUBITS,
};

pub const VAR: &str = "var";
pub const REG_A: &str = "A";
pub const REG_B: &str = "B";
pub const COR: &str = "cor";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCorrConfig {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub mode: ReadoutMode,
    pub seed: u64,
    pub max_qubits: usize,
}

impl CrossCorrConfig {
    /// Defaults: `α = 16`, `M` the smallest power of two `≥ α√N`, exact mode.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_alpha(n, DEFAULT_ALPHA)
    }

    pub fn with_alpha(n: usize, alpha: f64) -> Result<Self> {
        let m = qae::readout_dim(alpha, (n as f64).sqrt())?;
        Ok(Self {
            n,
            m,
            alpha,
            mode: ReadoutMode::Exact,
            seed: 0,
            max_qubits: DEFAULT_MAX_QUBITS,
        })
    }

    /// Explicit readout dimension.
    pub fn with_readout(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            alpha: m as f64 / (n as f64).sqrt(),
            mode: ReadoutMode::Exact,
            seed: 0,
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }

    pub fn mode(mut self, mode: ReadoutMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_qubits(mut self, cap: usize) -> Self {
        self.max_qubits = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_power_of_two("array length N", self.n)?;
        if self.n < 2 {
            return Err(Error::InvalidArgument("N must be at least 2".into()));
        }
        check_readout_dim(self.m)?;
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument("alpha must be > 0".into()));
        }
        self.mode.validate()
    }
}

/// Readout for one lag `j̄`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QaeOutcome {
    pub j_bar: usize,
    /// `cor` distribution given `var = j̄`; empirical in sampling mode.
    pub distribution: ConditionalDistribution,
    pub m_hat: usize,
    /// `sin²(π·m_hat/M)`.
    pub estimate: f64,
    pub theta_hat: f64,
    pub error_bound: f64,
    /// Grover applications of the whole run (shared by every lag).
    pub oracle_calls: u64,
    /// Number of samples that landed on this lag (sampling mode only).
    pub samples: Option<usize>,
    /// Sampling mode: fewer than the minimum number of samples for this lag.
    pub low_coverage: bool,
}

/// Register layout `var, A, B, cor` with `3·log₂N + log₂M` qubits.
pub fn build_layout(n: usize, m: usize) -> Result<RegisterLayout> {
    ensure_power_of_two("array length N", n)?;
    ensure_power_of_two("readout dimension M", m)?;
    if n < 2 || m < 2 {
        return Err(Error::InvalidArgument(
            "N and M must each be at least 2".into(),
        ));
    }
    let ln = n.trailing_zeros() as usize;
    let lm = m.trailing_zeros() as usize;
    RegisterLayout::new([(VAR, ln), (REG_A, ln), (REG_B, ln), (COR, lm)])
}

/// `(1/√N) Σ_j̄ |j̄⟩ ⊗ Σ_{j,j′} √(A_j B_j′) |j, j′⟩ ⊗ (1/√M) Σ_m |m⟩`.
pub fn initialize(a: &ProbArray, b: &ProbArray, layout: &RegisterLayout) -> Result<StateVector> {
    initialize_capped(a, b, layout, DEFAULT_MAX_QUBITS)
}

fn initialize_capped(
    a: &ProbArray,
    b: &ProbArray,
    layout: &RegisterLayout,
    max_qubits: usize,
) -> Result<StateVector> {
    let n = layout.register(VAR)?.dim();
    for (what, arr) in [("array A vs layout", a), ("array B vs layout", b)] {
        if arr.len() != n {
            return Err(Error::LengthMismatch {
                what,
                expected: n,
                actual: arr.len(),
            });
        }
    }
    let mut state = StateVector::with_cap(layout.clone(), max_qubits)?;
    state.inject_amplitudes(REG_A, &a.amplitudes())?;
    state.inject_amplitudes(REG_B, &b.amplitudes())?;
    state.apply_hadamard_all(VAR)?;
    state.apply_qft(COR, false)?;
    Ok(state)
}

/// Grover operator of the cross-correlation circuit, precomputed for a fixed
/// pair of arrays.
///
/// One application flips the sign of the marked states `A ⊖ B = var`, then
/// reflects the `A, B` registers toward `√A ⊗ √B` (`2|ψ⟩⟨ψ| − I`). The overall
/// sign puts the eigenphases at `±2θ` with `sin²θ` the marked weight.
pub struct CrossCorrGrover {
    layout: RegisterLayout,
    oracle_regs: Vec<Register>,
    marked: Vec<usize>,
    diffusion_regs: Vec<Register>,
    diffusion_offsets: Vec<usize>,
    psi: Vec<Complex64>,
}

impl CrossCorrGrover {
    pub fn new(a: &ProbArray, b: &ProbArray, layout: &RegisterLayout) -> Result<Self> {
        let n = layout.register(VAR)?.dim();
        if a.len() != n || b.len() != n {
            return Err(Error::LengthMismatch {
                what: "arrays vs layout",
                expected: n,
                actual: a.len().max(b.len()),
            });
        }
        let oracle_regs: Vec<Register> = layout
            .resolve(&[VAR, REG_A, REG_B])?
            .into_iter()
            .cloned()
            .collect();
        let marked = marked_offsets(&oracle_regs.iter().collect::<Vec<_>>(), |d| {
            (d[1] + n - d[2]) % n == d[0]
        });
        let diffusion_regs: Vec<Register> = layout
            .resolve(&[REG_A, REG_B])?
            .into_iter()
            .cloned()
            .collect();
        let diffusion_offsets = crate::statevec::joint_offsets_owned(&diffusion_regs);
        let psi = tensor_product([a.amplitudes().as_slice(), b.amplitudes().as_slice()]);
        Ok(Self {
            layout: layout.clone(),
            oracle_regs,
            marked,
            diffusion_regs,
            diffusion_offsets,
            psi,
        })
    }
}

impl ControlledOp for CrossCorrGrover {
    fn registers(&self) -> Vec<String> {
        vec![VAR.into(), REG_A.into(), REG_B.into()]
    }

    fn apply(&self, state: &mut StateVector, control: Control) -> Result<()> {
        if state.layout() != &self.layout {
            return Err(Error::Precondition(
                "state layout differs from the Grover operator's layout".into(),
            ));
        }
        let oracle: Vec<&Register> = self.oracle_regs.iter().collect();
        state.flip_offsets(&oracle, &self.marked, control);
        let diffusion: Vec<&Register> = self.diffusion_regs.iter().collect();
        state.reflect_about(
            &diffusion,
            &self.diffusion_offsets,
            &self.psi,
            ReflectionSign::Toward,
            control,
        );
        Ok(())
    }
}

/// One unconditional application of the Grover operator.
pub fn grover_q(state: &mut StateVector, a: &ProbArray, b: &ProbArray) -> Result<()> {
    let op = CrossCorrGrover::new(a, b, &state.layout().clone())?;
    op.apply(state, Control::ALWAYS)
}

/// Runs the full circuit and reads out one estimate per lag.
pub fn run_crosscorr(a: &ProbArray, b: &ProbArray, config: &CrossCorrConfig) -> Result<Vec<QaeOutcome>> {
    config.validate()?;
    if a.len() != config.n || b.len() != config.n {
        return Err(Error::LengthMismatch {
            what: "array length vs configured N",
            expected: config.n,
            actual: if a.len() != config.n { a.len() } else { b.len() },
        });
    }
    let layout = build_layout(config.n, config.m)?;
    let mut state = initialize_capped(a, b, &layout, config.max_qubits)?;
    let op = CrossCorrGrover::new(a, b, &layout)?;
    let calls = state.controlled_power(&op, COR)?;
    state.apply_qft(COR, true)?;
    read_out(&state, config, calls)
}

fn read_out(state: &StateVector, config: &CrossCorrConfig, calls: u64) -> Result<Vec<QaeOutcome>> {
    let m = config.m;
    match config.mode {
        ReadoutMode::Exact => (0..config.n)
            .map(|j_bar| {
                let distribution = state.conditional_distribution(COR, &[(VAR, j_bar)])?;
                let m_hat = distribution.argmax().unwrap_or(0);
                Ok(outcome(j_bar, distribution, m_hat, m, calls, None))
            })
            .collect(),
        ReadoutMode::Sampling { shots } => {
            let draws = state.sample_measurement(&[VAR, COR], config.seed, shots)?;
            let mut counts = vec![vec![0usize; m]; config.n];
            for d in &draws {
                counts[d[0]][d[1]] += 1;
            }
            Ok(counts
                .into_iter()
                .enumerate()
                .map(|(j_bar, bins)| {
                    let total: usize = bins.iter().sum();
                    let probabilities = if total == 0 {
                        vec![0.0; m]
                    } else {
                        bins.iter().map(|&c| c as f64 / total as f64).collect()
                    };
                    let distribution = ConditionalDistribution {
                        given: vec![(VAR.to_string(), j_bar)],
                        target: COR.to_string(),
                        probabilities,
                        total_weight: total as f64 / shots as f64,
                    };
                    outcome(j_bar, distribution, mode_of(&bins), m, calls, Some(total))
                })
                .collect())
        }
    }
}

fn outcome(
    j_bar: usize,
    distribution: ConditionalDistribution,
    m_hat: usize,
    m: usize,
    calls: u64,
    samples: Option<usize>,
) -> QaeOutcome {
    let estimate = estimate_from_m(m_hat, m).expect("argmax is within the readout range");
    QaeOutcome {
        j_bar,
        distribution,
        m_hat,
        estimate,
        theta_hat: theta_from_m(m_hat, m),
        error_bound: error_bound(estimate, m),
        oracle_calls: calls,
        low_coverage: samples.is_some_and(|s| s < MIN_BIN_SAMPLES),
        samples,
    }
}

/// Random pair of length-`n` probability arrays from a seed.
pub fn random_pair(n: usize, seed: u64) -> Result<(ProbArray, ProbArray)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((ProbArray::random(n, &mut rng)?, ProbArray::random(n, &mut rng)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::crosscorr_brute;

    fn delta(n: usize, at: usize) -> ProbArray {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        ProbArray::new(v).unwrap()
    }

    #[test]
    fn layout_sizes() {
        assert_eq!(build_layout(4, 16).unwrap().total_qubits(), 10);
        assert_eq!(build_layout(16, 64).unwrap().total_qubits(), 18);
        assert!(matches!(build_layout(6, 16), Err(Error::NotPowerOfTwo { .. })));
    }

    #[test]
    fn initialize_uniform_and_delta() {
        let u = ProbArray::new(vec![0.5, 0.5]).unwrap();
        let layout = build_layout(2, 4).unwrap();
        let s = initialize(&u, &u, &layout).unwrap();
        let want = 1.0 / 32f64.sqrt();
        assert!(s.amplitudes().iter().all(|a| (a.re - want).abs() < 1e-15 && a.im.abs() < 1e-15));

        let layout = build_layout(4, 4).unwrap();
        let a = delta(4, 0);
        let (_, b) = random_pair(4, 1).unwrap();
        let s = initialize(&a, &b, &layout).unwrap();
        let reg_a = layout.register(REG_A).unwrap();
        for (i, amp) in s.amplitudes().iter().enumerate() {
            if reg_a.digit(i) != 0 {
                assert_eq!(amp.norm(), 0.0);
            }
        }
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert!(initialize(&delta(2, 0), &b, &layout).is_err());
    }

    #[test]
    fn grover_preserves_norm() {
        let (a, b) = random_pair(4, 9).unwrap();
        let layout = build_layout(4, 4).unwrap();
        let mut s = initialize(&a, &b, &layout).unwrap();
        for _ in 0..5 {
            grover_q(&mut s, &a, &b).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_at_origin_peaks_exactly() {
        let a = delta(4, 0);
        let cfg = CrossCorrConfig::with_readout(4, 16);
        let out = run_crosscorr(&a, &a, &cfg).unwrap();
        assert_eq!(out[0].m_hat, 8);
        assert!((out[0].distribution.probabilities[8] - 1.0).abs() < 1e-10);
        assert!((out[0].estimate - 1.0).abs() < 1e-15);
        for o in &out[1..] {
            assert_eq!(o.m_hat, 0);
            assert!((o.distribution.probabilities[0] - 1.0).abs() < 1e-10);
            assert_eq!(o.oracle_calls, 15);
        }
    }

    #[test]
    fn shifted_delta_estimates() {
        let cfg = CrossCorrConfig::with_readout(4, 16);
        let out = run_crosscorr(&delta(4, 0), &delta(4, 1), &cfg).unwrap();
        let est: Vec<f64> = out.iter().map(|o| o.estimate).collect();
        let want = [0.0, 0.0, 0.0, 1.0];
        for (e, w) in est.iter().zip(want) {
            assert!((e - w).abs() < 1e-12);
        }
    }

    #[test]
    fn random_pair_within_bound() {
        let (a, b) = random_pair(8, 2024).unwrap();
        let cfg = CrossCorrConfig::with_readout(8, 256);
        let out = run_crosscorr(&a, &b, &cfg).unwrap();
        let brute = crosscorr_brute(a.values(), b.values()).unwrap().values;
        for (o, c) in out.iter().zip(&brute) {
            assert!((o.estimate - c).abs() <= error_bound(*c, 256), "{o:?} vs {c}");
            // ± eigenphase symmetry of the readout
            for m in 0..256 {
                let p = o.distribution.probabilities[m];
                let q = o.distribution.probabilities[(256 - m) % 256];
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sampling_mode_groups_by_lag() {
        let cfg = CrossCorrConfig::with_readout(4, 16)
            .mode(ReadoutMode::Sampling { shots: 4000 })
            .seed(5);
        let out = run_crosscorr(&delta(4, 0), &delta(4, 1), &cfg).unwrap();
        let total: usize = out.iter().map(|o| o.samples.unwrap()).sum();
        assert_eq!(total, 4000);
        assert_eq!(out[3].m_hat, 8);
        assert!(out.iter().all(|o| !o.low_coverage));
        let again = run_crosscorr(&delta(4, 0), &delta(4, 1), &cfg).unwrap();
        assert_eq!(out, again);

        let sparse = cfg.clone().mode(ReadoutMode::Sampling { shots: 10 });
        let out = run_crosscorr(&delta(4, 0), &delta(4, 1), &sparse).unwrap();
        assert!(out.iter().all(|o| o.low_coverage));
    }

    #[test]
    fn config_validation() {
        let (a, b) = random_pair(4, 0).unwrap();
        assert!(run_crosscorr(&a, &b, &CrossCorrConfig::with_readout(4, 12)).is_err());
        assert!(run_crosscorr(&a, &b, &CrossCorrConfig::with_readout(8, 16)).is_err());
        let cfg = CrossCorrConfig::with_readout(4, 16).mode(ReadoutMode::Sampling { shots: 0 });
        assert!(run_crosscorr(&a, &b, &cfg).is_err());
        assert_eq!(CrossCorrConfig::new(16).unwrap().m, 64);
        let capped = CrossCorrConfig::with_readout(4, 16).max_qubits(8);
        assert!(matches!(run_crosscorr(&a, &b, &capped), Err(Error::QubitCap { .. })));
    }
}

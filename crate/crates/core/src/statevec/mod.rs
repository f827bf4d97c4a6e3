//! Register-structured statevector engine.
//!
//! All operations act matrix-free on the amplitude array. Every register-local
//! primitive has a `*_ctrl` variant that restricts its action to basis states
//! selected by a [`Control`]; [`StateVector::controlled_power`] builds the
//! phase-estimation cascade out of those.

mod layout;
mod measure;

pub use layout::{Register, RegisterLayout};
pub use measure::ConditionalDistribution;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft_in_place, Direction};
use layout::{advance, joint_offsets, submasks};

/// Default upper bound on the number of simulated qubits.
pub const DEFAULT_MAX_QUBITS: usize = 26;

/// Tolerance on the unit norm of caller-supplied amplitude vectors.
pub const INPUT_NORM_TOL: f64 = 1e-10;

/// Amplitudes below this magnitude count as zero when checking that a
/// register is still in `|0⟩`.
const ZERO_AMP_TOL: f64 = 1e-12;

/// Selects the basis states an operation acts on: those whose global index
/// satisfies `index & mask == value`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Control {
    mask: usize,
    value: usize,
}

impl Control {
    /// Unconditional action.
    pub const ALWAYS: Control = Control { mask: 0, value: 0 };

    /// Condition on one qubit of `register` (bit 0 is the least significant
    /// qubit of the register) being `set`.
    pub fn qubit(layout: &RegisterLayout, register: &str, bit: usize, set: bool) -> Result<Self> {
        let reg = layout.register(register)?;
        if bit >= reg.qubits() {
            return Err(Error::InvalidArgument(format!(
                "bit {bit} out of range for register `{register}` of {} qubits",
                reg.qubits()
            )));
        }
        let mask = 1 << (reg.shift() + bit);
        Ok(Self {
            mask,
            value: if set { mask } else { 0 },
        })
    }

    /// Condition on a register holding a specific value.
    pub fn register_value(layout: &RegisterLayout, register: &str, value: usize) -> Result<Self> {
        let reg = layout.register(register)?;
        if value >= reg.dim() {
            return Err(Error::InvalidArgument(format!(
                "value {value} out of range for register `{register}`"
            )));
        }
        Ok(Self {
            mask: reg.mask(),
            value: reg.offset(value),
        })
    }

    pub fn mask(&self) -> usize {
        self.mask
    }

    #[inline]
    pub fn admits(&self, index: usize) -> bool {
        index & self.mask == self.value
    }

    fn check_disjoint(&self, regs: &[&Register]) -> Result<()> {
        for r in regs {
            if r.mask() & self.mask != 0 {
                return Err(Error::RegisterOverlap(r.name().to_string()));
            }
        }
        Ok(())
    }
}

/// Sign convention of a reflection about a state `|ψ⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReflectionSign {
    /// `I − 2|ψ⟩⟨ψ|`
    Away,
    /// `2|ψ⟩⟨ψ| − I`
    Toward,
}

/// A unitary that can be applied conditionally, for use inside
/// [`StateVector::controlled_power`].
pub trait ControlledOp {
    /// Registers the operation acts on. Must be disjoint from the control register.
    fn registers(&self) -> Vec<String>;

    /// Applies the operation to the basis states admitted by `control`.
    fn apply(&self, state: &mut StateVector, control: Control) -> Result<()>;
}

/// Iteration plan for register-local kernels: the listed registers form the
/// inner "slice" index; every other index bit is split into `high` (above the
/// lowest listed bit) and `low` (below it) so the innermost loop runs over
/// contiguous memory.
struct Slicing {
    high: Vec<usize>,
    /// Admitted low indices as contiguous `(start, len)` runs.
    runs: Vec<(usize, usize)>,
    low_len: usize,
}

impl Slicing {
    fn new(layout: &RegisterLayout, listed: &[&Register], control: Control) -> Self {
        let full = layout.dim() - 1;
        let listed_mask: usize = listed.iter().map(|r| r.mask()).fold(0, |a, m| a | m);
        let lowest = listed.iter().map(|r| r.shift()).min().unwrap_or(0);
        let low_mask = (1usize << lowest) - 1;
        let high_mask = full & !listed_mask & !low_mask;
        let high = submasks(high_mask)
            .filter(|&h| h & control.mask & high_mask == control.value & high_mask)
            .collect();
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for l in (0..=low_mask).filter(|&l| l & control.mask & low_mask == control.value & low_mask) {
            match runs.last_mut() {
                Some((start, len)) if *start + *len == l => *len += 1,
                _ => runs.push((l, 1)),
            }
        }
        let low_len = runs.iter().map(|r| r.1).sum();
        Self { high, runs, low_len }
    }
}

#[derive(Clone, Debug)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Allocates `|0…0⟩` under the default qubit cap.
    pub fn new(layout: RegisterLayout) -> Result<Self> {
        Self::with_cap(layout, DEFAULT_MAX_QUBITS)
    }

    /// Allocates `|0…0⟩`, failing if the layout needs more than `max_qubits`.
    pub fn with_cap(layout: RegisterLayout, max_qubits: usize) -> Result<Self> {
        let requested = layout.total_qubits();
        if requested > max_qubits || requested >= usize::BITS as usize - 1 {
            return Err(Error::QubitCap {
                requested,
                cap: max_qubits,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    /// Wraps an explicit amplitude vector, which must be unit-norm.
    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::LengthMismatch {
                what: "amplitude vector vs layout dimension",
                expected: layout.dim(),
                actual: amps.len(),
            });
        }
        let norm = l2_norm(&amps);
        if (norm - 1.0).abs() > INPUT_NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amps)
    }

    fn debug_check_norm(&self) {
        debug_assert!(
            (self.norm() - 1.0).abs() < 1e-9,
            "norm drifted to {}",
            self.norm()
        );
    }

    /// Loads `amps` into `register`, which must currently be in `|0⟩`.
    pub fn inject_amplitudes(&mut self, register: &str, amps: &[Complex64]) -> Result<()> {
        let reg = self.layout.register(register)?.clone();
        if amps.len() != reg.dim() {
            return Err(Error::LengthMismatch {
                what: "amplitudes vs register dimension",
                expected: reg.dim(),
                actual: amps.len(),
            });
        }
        let norm = l2_norm(amps);
        if (norm - 1.0).abs() > INPUT_NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        let reg_mask = reg.mask();
        if let Some(idx) = self
            .amps
            .iter()
            .enumerate()
            .find(|(i, a)| i & reg_mask != 0 && a.norm() > ZERO_AMP_TOL)
            .map(|(i, _)| i)
        {
            return Err(Error::Precondition(format!(
                "register `{register}` is not in |0⟩ (basis index {idx} has weight)"
            )));
        }
        let rest = (self.layout.dim() - 1) & !reg_mask;
        for base in submasks(rest) {
            let v = self.amps[base];
            for (j, a) in amps.iter().enumerate() {
                self.amps[base | reg.offset(j)] = v * a;
            }
        }
        self.debug_check_norm();
        Ok(())
    }

    /// Applies a Hadamard gate to every qubit of `register`.
    pub fn apply_hadamard_all(&mut self, register: &str) -> Result<()> {
        let reg = self.layout.register(register)?.clone();
        let s = FRAC_1_SQRT_2;
        for q in 0..reg.qubits() {
            let bit = 1usize << (reg.shift() + q);
            for i in 0..self.amps.len() {
                if i & bit == 0 {
                    let a = self.amps[i];
                    let b = self.amps[i | bit];
                    self.amps[i] = (a + b) * s;
                    self.amps[i | bit] = (a - b) * s;
                }
            }
        }
        self.debug_check_norm();
        Ok(())
    }

    /// Register-local quantum Fourier transform with kernel
    /// `e^{+2πi·jk/D}/√D` (forward) or its conjugate (`inverse`).
    pub fn apply_qft(&mut self, register: &str, inverse: bool) -> Result<()> {
        let reg = self.layout.register(register)?.clone();
        let dim = reg.dim();
        let scale = 1.0 / (dim as f64).sqrt();
        let direction = if inverse {
            Direction::Forward
        } else {
            Direction::Backward
        };
        let rest = (self.layout.dim() - 1) & !reg.mask();
        let mut buf = vec![Complex64::new(0.0, 0.0); dim];
        for base in submasks(rest) {
            for (j, slot) in buf.iter_mut().enumerate() {
                *slot = self.amps[base | reg.offset(j)];
            }
            fft_in_place(&mut buf, direction);
            for (j, v) in buf.iter().enumerate() {
                self.amps[base | reg.offset(j)] = v * scale;
            }
        }
        self.debug_check_norm();
        Ok(())
    }

    /// Flips the sign of every basis state whose listed registers are all zero.
    pub fn reflect_zero(&mut self, registers: &[&str]) -> Result<()> {
        self.reflect_zero_ctrl(registers, Control::ALWAYS)?;
        self.debug_check_norm();
        Ok(())
    }

    pub fn reflect_zero_ctrl(&mut self, registers: &[&str], control: Control) -> Result<()> {
        let layout = self.layout.clone();
        let regs = layout.resolve(registers)?;
        control.check_disjoint(&regs)?;
        self.flip_offsets(&regs, &[0], control);
        Ok(())
    }

    /// Flips the sign of every basis state on which `predicate` holds. The
    /// predicate sees the values of `registers`, in the order given.
    pub fn reflect_predicate<F>(&mut self, registers: &[&str], predicate: F) -> Result<()>
    where
        F: Fn(&[usize]) -> bool,
    {
        self.reflect_predicate_ctrl(registers, predicate, Control::ALWAYS)?;
        self.debug_check_norm();
        Ok(())
    }

    pub fn reflect_predicate_ctrl<F>(
        &mut self,
        registers: &[&str],
        predicate: F,
        control: Control,
    ) -> Result<()>
    where
        F: Fn(&[usize]) -> bool,
    {
        let layout = self.layout.clone();
        let regs = layout.resolve(registers)?;
        control.check_disjoint(&regs)?;
        let marked = marked_offsets(&regs, predicate);
        self.flip_offsets(&regs, &marked, control);
        Ok(())
    }

    /// Sign flip on precomputed slice offsets of `regs` (see [`marked_offsets`]).
    pub(crate) fn flip_offsets(&mut self, regs: &[&Register], offsets: &[usize], control: Control) {
        let plan = Slicing::new(&self.layout, regs, control);
        for &h in &plan.high {
            for &off in offsets {
                let base = h | off;
                for &(start, len) in &plan.runs {
                    for a in &mut self.amps[base + start..base + start + len] {
                        *a = -*a;
                    }
                }
            }
        }
    }

    /// Applies `I − 2|ψ⟩⟨ψ|` on the listed registers, where `ψ` is the tensor
    /// product of the factor vectors (first factor most significant), and the
    /// identity on every other register.
    pub fn reflect_about_product_state(&mut self, factors: &[(&str, &[Complex64])]) -> Result<()> {
        self.reflect_about_product_state_ctrl(factors, ReflectionSign::Away, Control::ALWAYS)?;
        self.debug_check_norm();
        Ok(())
    }

    pub fn reflect_about_product_state_ctrl(
        &mut self,
        factors: &[(&str, &[Complex64])],
        sign: ReflectionSign,
        control: Control,
    ) -> Result<()> {
        let layout = self.layout.clone();
        let names: Vec<&str> = factors.iter().map(|(n, _)| *n).collect();
        let regs = layout.resolve(&names)?;
        control.check_disjoint(&regs)?;
        for ((_, v), r) in factors.iter().zip(&regs) {
            if v.len() != r.dim() {
                return Err(Error::LengthMismatch {
                    what: "factor vs register dimension",
                    expected: r.dim(),
                    actual: v.len(),
                });
            }
            let norm = l2_norm(v);
            if (norm - 1.0).abs() > INPUT_NORM_TOL {
                return Err(Error::NotNormalized { norm });
            }
        }
        let psi = tensor_product(factors.iter().map(|(_, v)| *v));
        let offsets = joint_offsets(&regs);
        self.reflect_about(&regs, &offsets, &psi, sign, control);
        Ok(())
    }

    /// Reflection kernel on precomputed slice offsets and a flattened `ψ`.
    pub(crate) fn reflect_about(
        &mut self,
        regs: &[&Register],
        offsets: &[usize],
        psi: &[Complex64],
        sign: ReflectionSign,
        control: Control,
    ) {
        let plan = Slicing::new(&self.layout, regs, control);
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = vec![zero; plan.low_len];
        let real = psi.iter().all(|p| p.im == 0.0);
        for &h in &plan.high {
            acc.iter_mut().for_each(|a| *a = zero);
            for (&off, p) in offsets.iter().zip(psi) {
                if p.re == 0.0 && p.im == 0.0 {
                    continue;
                }
                let w = p.conj();
                let base = h | off;
                let mut pos = 0;
                for &(start, len) in &plan.runs {
                    let src = &self.amps[base + start..base + start + len];
                    let slots = &mut acc[pos..pos + len];
                    if real {
                        for (slot, a) in slots.iter_mut().zip(src) {
                            *slot += a * w.re;
                        }
                    } else {
                        for (slot, a) in slots.iter_mut().zip(src) {
                            *slot += w * a;
                        }
                    }
                    pos += len;
                }
            }
            for (&off, &p) in offsets.iter().zip(psi) {
                let skip = p.re == 0.0 && p.im == 0.0;
                if skip && sign == ReflectionSign::Away {
                    continue;
                }
                let base = h | off;
                let p2 = p * 2.0;
                let mut pos = 0;
                for &(start, len) in &plan.runs {
                    let dst = &mut self.amps[base + start..base + start + len];
                    let slots = &acc[pos..pos + len];
                    match (sign, real) {
                        (ReflectionSign::Away, true) => {
                            for (a, slot) in dst.iter_mut().zip(slots) {
                                *a -= slot * p2.re;
                            }
                        }
                        (ReflectionSign::Away, false) => {
                            for (a, slot) in dst.iter_mut().zip(slots) {
                                *a -= slot * p2;
                            }
                        }
                        (ReflectionSign::Toward, true) => {
                            for (a, slot) in dst.iter_mut().zip(slots) {
                                *a = slot * p2.re - *a;
                            }
                        }
                        (ReflectionSign::Toward, false) => {
                            for (a, slot) in dst.iter_mut().zip(slots) {
                                *a = slot * p2 - *a;
                            }
                        }
                    }
                    pos += len;
                }
            }
        }
    }

    /// Applies `op^m` to the slice where `control` holds value `m`.
    ///
    /// Realized as the binary cascade: for control qubit `k`, `op` is applied
    /// `2^k` times conditioned on that qubit. Returns the number of single `op`
    /// invocations, which is `2^qubits − 1`.
    pub fn controlled_power(&mut self, op: &dyn ControlledOp, control: &str) -> Result<u64> {
        let ctrl = self.layout.register(control)?.clone();
        for name in op.registers() {
            let reg = self.layout.register(&name)?;
            if reg.name() == ctrl.name() {
                return Err(Error::RegisterOverlap(name));
            }
        }
        let mut calls = 0u64;
        for k in 0..ctrl.qubits() {
            let cond = Control::qubit(&self.layout, control, k, true)?;
            for _ in 0..(1u64 << k) {
                op.apply(self, cond)?;
                calls += 1;
            }
        }
        self.debug_check_norm();
        Ok(calls)
    }

    /// Multiplies the admitted amplitudes by `phase`.
    pub fn apply_phase_ctrl(&mut self, phase: Complex64, control: Control) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if control.admits(i) {
                *a *= phase;
            }
        }
    }
}

/// Slice offsets of the joint assignments of `regs` on which `predicate` holds.
pub(crate) fn marked_offsets<F>(regs: &[&Register], predicate: F) -> Vec<usize>
where
    F: Fn(&[usize]) -> bool,
{
    let total: usize = regs.iter().map(|r| r.dim()).product();
    let mut digits = vec![0usize; regs.len()];
    let mut out = Vec::new();
    for _ in 0..total {
        if predicate(&digits) {
            out.push(regs.iter().zip(&digits).map(|(r, &d)| r.offset(d)).sum());
        }
        advance(&mut digits, regs);
    }
    out
}

pub(crate) fn joint_offsets_owned(regs: &[Register]) -> Vec<usize> {
    joint_offsets(&regs.iter().collect::<Vec<_>>())
}

/// Kronecker product of vectors, first factor most significant.
pub fn tensor_product<'a, I>(factors: I) -> Vec<Complex64>
where
    I: IntoIterator<Item = &'a [Complex64]>,
{
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for f in factors {
        out = out
            .iter()
            .flat_map(|a| f.iter().map(move |b| a * b))
            .collect();
    }
    out
}

pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn layout(regs: &[(&str, usize)]) -> RegisterLayout {
        RegisterLayout::new(regs.iter().copied()).unwrap()
    }

    #[test]
    fn alloc_is_all_zero_state() {
        let s = StateVector::new(layout(&[("q", 1)])).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0)]);

        let s = StateVector::new(layout(&[("var", 2), ("A", 2), ("B", 2), ("cor", 3)])).unwrap();
        assert_eq!(s.amplitudes().len(), 512);
        assert_eq!(s.amplitudes()[0], c(1.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn alloc_over_cap_names_qubit_count() {
        let err = StateVector::new(layout(&[("big", 40)])).unwrap_err();
        match err {
            Error::QubitCap { requested, cap } => {
                assert_eq!(requested, 40);
                assert_eq!(cap, DEFAULT_MAX_QUBITS);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(err_text(StateVector::with_cap(layout(&[("q", 5)]), 4)).contains("5 qubits"));
    }

    fn err_text<T: std::fmt::Debug>(r: Result<T>) -> String {
        r.unwrap_err().to_string()
    }

    #[test]
    fn inject_examples() {
        let mut s = StateVector::new(layout(&[("q", 1)])).unwrap();
        s.inject_amplitudes("q", &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)])
            .unwrap();
        assert!(close(s.amplitudes(), &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)], 1e-15));

        let mut s = StateVector::new(layout(&[("r", 2)])).unwrap();
        let x = [0.5f64, 0.0, 0.25, 0.25];
        let amps: Vec<Complex64> = x.iter().map(|v| c(v.sqrt())).collect();
        s.inject_amplitudes("r", &amps).unwrap();
        assert!(close(
            s.amplitudes(),
            &[c(0.5f64.sqrt()), c(0.0), c(0.5), c(0.5)],
            1e-15
        ));

        let mut s = StateVector::new(layout(&[("q", 1)])).unwrap();
        assert!(matches!(
            s.inject_amplitudes("q", &[c(0.9), c(0.1)]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn inject_requires_register_in_zero() {
        let mut s = StateVector::new(layout(&[("a", 1), ("b", 1)])).unwrap();
        s.apply_hadamard_all("b").unwrap();
        // b is no longer |0⟩, a still is.
        assert!(matches!(
            s.inject_amplitudes("b", &[c(1.0), c(0.0)]),
            Err(Error::Precondition(_))
        ));
        s.inject_amplitudes("a", &[c(0.6), c(0.8)]).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!(close(
            s.amplitudes(),
            &[c(0.6 * h), c(0.6 * h), c(0.8 * h), c(0.8 * h)],
            1e-15
        ));
    }

    #[test]
    fn hadamard_examples() {
        let mut s = StateVector::new(layout(&[("q", 1)])).unwrap();
        s.apply_hadamard_all("q").unwrap();
        assert!(close(s.amplitudes(), &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)], 1e-15));

        let mut s = StateVector::new(layout(&[("q", 2)])).unwrap();
        s.apply_hadamard_all("q").unwrap();
        assert!(close(s.amplitudes(), &[c(0.5); 4], 1e-15));
        s.apply_hadamard_all("q").unwrap();
        assert!(close(s.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)], 1e-15));

        assert!(matches!(
            s.apply_hadamard_all("nope"),
            Err(Error::UnknownRegister(_))
        ));
    }

    #[test]
    fn qft_examples() {
        let mut s = StateVector::new(layout(&[("r", 3)])).unwrap();
        s.apply_qft("r", false).unwrap();
        let u = c(1.0 / 8f64.sqrt());
        assert!(close(s.amplitudes(), &[u; 8], 1e-15));

        // inverse QFT of the Fourier state of k returns |k⟩.
        let d = 8usize;
        for k in 0..d {
            let amps: Vec<Complex64> = (0..d)
                .map(|m| {
                    Complex64::from_polar(
                        1.0 / (d as f64).sqrt(),
                        2.0 * std::f64::consts::PI * (m * k) as f64 / d as f64,
                    )
                })
                .collect();
            let mut s = StateVector::from_amplitudes(layout(&[("r", 3)]), amps).unwrap();
            s.apply_qft("r", true).unwrap();
            for (i, a) in s.amplitudes().iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((a - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reflect_zero_examples() {
        let h = FRAC_1_SQRT_2;
        let mut s = StateVector::from_amplitudes(layout(&[("q", 1)]), vec![c(h), c(h)]).unwrap();
        s.reflect_zero(&["q"]).unwrap();
        assert!(close(s.amplitudes(), &[c(-h), c(h)], 1e-15));
        s.reflect_zero(&["q"]).unwrap();
        assert!(close(s.amplitudes(), &[c(h), c(h)], 1e-15));

        let l = layout(&[("A", 2), ("B", 2)]);
        let idx = l.compose(&[("A", 0), ("B", 3)]).unwrap();
        let mut amps = vec![c(0.0); 16];
        amps[idx] = c(1.0);
        let mut s = StateVector::from_amplitudes(l, amps.clone()).unwrap();
        s.reflect_zero(&["A", "B"]).unwrap();
        assert_eq!(s.amplitudes(), amps.as_slice());
    }

    #[test]
    fn reflect_predicate_examples() {
        let l = layout(&[("var", 2), ("A", 2), ("B", 2)]);
        let mut s = StateVector::new(l.clone()).unwrap();
        s.apply_hadamard_all("A").unwrap();
        let before = s.amplitudes().to_vec();
        s.reflect_predicate(&["var"], |_| false).unwrap();
        assert_eq!(s.amplitudes(), before.as_slice());
        s.reflect_predicate(&["var", "A", "B"], |_| true).unwrap();
        assert!(close(
            s.amplitudes(),
            &before.iter().map(|a| -a).collect::<Vec<_>>(),
            0.0
        ));

        let idx = l.compose(&[("var", 1), ("A", 3), ("B", 2)]).unwrap();
        let mut amps = vec![c(0.0); 64];
        amps[idx] = c(1.0);
        let mut s = StateVector::from_amplitudes(l, amps).unwrap();
        s.reflect_predicate(&["var", "A", "B"], |d| (d[1] + 4 - d[2]) % 4 == d[0])
            .unwrap();
        assert_eq!(s.amplitudes()[idx], c(-1.0));
    }

    #[test]
    fn reflect_about_product_state_examples() {
        let h = FRAC_1_SQRT_2;
        let plus = [c(h), c(h)];
        // ψ itself → −ψ
        let mut s = StateVector::from_amplitudes(layout(&[("q", 1)]), plus.to_vec()).unwrap();
        s.reflect_about_product_state(&[("q", &plus)]).unwrap();
        assert!(close(s.amplitudes(), &[c(-h), c(-h)], 1e-15));
        // orthogonal slice unchanged
        let minus = vec![c(h), c(-h)];
        let mut s = StateVector::from_amplitudes(layout(&[("q", 1)]), minus.clone()).unwrap();
        s.reflect_about_product_state(&[("q", &plus)]).unwrap();
        assert!(close(s.amplitudes(), &minus, 1e-15));
        // [1,0] → (I − 2|+⟩⟨+|)[1,0] = [0,−1]
        let mut s = StateVector::new(layout(&[("q", 1)])).unwrap();
        s.reflect_about_product_state(&[("q", &plus)]).unwrap();
        assert!(close(s.amplitudes(), &[c(0.0), c(-1.0)], 1e-15));

        assert!(matches!(
            s.reflect_about_product_state(&[("q", &[c(1.0), c(1.0)])]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn reflect_toward_is_negated_away() {
        let l = layout(&[("x", 1), ("a", 2), ("y", 1)]);
        let amps: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let n = l2_norm(&amps);
        let amps: Vec<Complex64> = amps.iter().map(|a| a / n).collect();
        let f = [c(0.6), c(0.0), c(0.0), c(0.8)];
        let mut s1 = StateVector::from_amplitudes(l.clone(), amps.clone()).unwrap();
        let mut s2 = StateVector::from_amplitudes(l, amps).unwrap();
        s1.reflect_about_product_state_ctrl(&[("a", &f)], ReflectionSign::Away, Control::ALWAYS)
            .unwrap();
        s2.reflect_about_product_state_ctrl(&[("a", &f)], ReflectionSign::Toward, Control::ALWAYS)
            .unwrap();
        for (a, b) in s1.amplitudes().iter().zip(s2.amplitudes()) {
            assert!((a + b).norm() < 1e-15);
        }
    }

    struct PhaseFlip;

    impl ControlledOp for PhaseFlip {
        fn registers(&self) -> Vec<String> {
            vec!["t".into()]
        }

        fn apply(&self, state: &mut StateVector, control: Control) -> Result<()> {
            state.reflect_predicate_ctrl(&["t"], |d| d[0] == 1, control)
        }
    }

    #[test]
    fn controlled_power_basics() {
        let l = layout(&[("t", 1), ("c", 2)]);
        let mut s = StateVector::new(l.clone()).unwrap();
        s.apply_hadamard_all("t").unwrap();
        let before = s.amplitudes().to_vec();
        let calls = s.controlled_power(&PhaseFlip, "c").unwrap();
        assert_eq!(calls, 3);
        // control in |0⟩: identity
        assert_eq!(s.amplitudes(), before.as_slice());

        // control in |1⟩: exactly one flip
        let mut amps = vec![c(0.0); 8];
        amps[l.compose(&[("t", 1), ("c", 1)]).unwrap()] = c(1.0);
        let mut s = StateVector::from_amplitudes(l.clone(), amps).unwrap();
        s.controlled_power(&PhaseFlip, "c").unwrap();
        assert_eq!(s.amplitudes()[l.compose(&[("t", 1), ("c", 1)]).unwrap()], c(-1.0));

        // overlapping registers rejected
        assert!(matches!(
            s.controlled_power(&PhaseFlip, "t"),
            Err(Error::RegisterOverlap(_))
        ));
    }

    #[test]
    fn control_excludes_listed_registers() {
        let l = layout(&[("a", 1), ("b", 1)]);
        let mut s = StateVector::new(l.clone()).unwrap();
        let ctrl = Control::qubit(&l, "a", 0, true).unwrap();
        assert!(matches!(
            s.reflect_zero_ctrl(&["a"], ctrl),
            Err(Error::RegisterOverlap(_))
        ));
    }
}

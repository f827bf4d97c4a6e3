//! Named qubit sub-registers and the global basis-index convention.
//!
//! The global basis index is a mixed-radix number whose digits are the
//! register values in declaration order, with the first-declared register as
//! the most significant digit block. Because every register dimension is a
//! power of two this is the same as packing register `r` into a contiguous bit
//! field; the last-declared register occupies the lowest bits.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// One named register inside a [`RegisterLayout`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    name: String,
    qubits: usize,
    shift: usize,
}

impl Register {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// Number of basis values, `2^qubits`.
    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Bit position of the register's least significant qubit in the global index.
    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Global-index bit mask covering this register.
    pub fn mask(&self) -> usize {
        (self.dim() - 1) << self.shift
    }

    /// Extracts this register's value from a global basis index.
    #[inline]
    pub fn digit(&self, index: usize) -> usize {
        (index >> self.shift) & (self.dim() - 1)
    }

    /// Global-index offset contributed by `value` in this register.
    #[inline]
    pub fn offset(&self, value: usize) -> usize {
        value << self.shift
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total_qubits: usize,
}

impl RegisterLayout {
    /// Builds a layout from `(name, qubit_count)` pairs in significance order.
    pub fn new<S, I>(registers: I) -> Result<Self>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, usize)>,
    {
        let specs: Vec<(String, usize)> = registers
            .into_iter()
            .map(|(name, qubits)| (name.into(), qubits))
            .collect();
        if specs.is_empty() {
            return Err(Error::InvalidArgument(
                "layout needs at least one register".into(),
            ));
        }
        let mut seen = HashSet::new();
        for (name, qubits) in &specs {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateRegister(name.clone()));
            }
            if *qubits == 0 {
                return Err(Error::InvalidArgument(format!(
                    "register `{name}` has zero qubits"
                )));
            }
        }
        let total_qubits = specs.iter().map(|(_, q)| q).sum();
        let mut shift = total_qubits;
        let registers = specs
            .into_iter()
            .map(|(name, qubits)| {
                shift -= qubits;
                Register {
                    name,
                    qubits,
                    shift,
                }
            })
            .collect();
        Ok(Self {
            registers,
            total_qubits,
        })
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    /// Dimension of the full Hilbert space, `2^total_qubits`.
    pub fn dim(&self) -> usize {
        1 << self.total_qubits
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    /// Resolves a list of register names, rejecting unknown names and repeats.
    pub fn resolve(&self, names: &[&str]) -> Result<Vec<&Register>> {
        let mut out: Vec<&Register> = Vec::with_capacity(names.len());
        for name in names {
            let reg = self.register(name)?;
            if out.iter().any(|r| r.name == reg.name) {
                return Err(Error::RegisterOverlap(reg.name.clone()));
            }
            out.push(reg);
        }
        Ok(out)
    }

    /// Global index of the basis state with the given register values; registers
    /// not mentioned are zero.
    pub fn compose(&self, values: &[(&str, usize)]) -> Result<usize> {
        let mut index = 0;
        for (name, value) in values {
            let reg = self.register(name)?;
            if *value >= reg.dim() {
                return Err(Error::InvalidArgument(format!(
                    "value {value} out of range for register `{name}` of dimension {}",
                    reg.dim()
                )));
            }
            index |= reg.offset(*value);
        }
        Ok(index)
    }

    /// Per-register values of a global index, in declaration order.
    pub fn decompose(&self, index: usize) -> Vec<usize> {
        self.registers.iter().map(|r| r.digit(index)).collect()
    }
}

/// Enumerates every value of the sub-index formed by the bits of `mask`, in
/// increasing order.
pub(crate) fn submasks(mask: usize) -> impl Iterator<Item = usize> {
    let mut next = Some(0usize);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some(cur.wrapping_sub(mask) & mask)
        };
        Some(cur)
    })
}

/// Offsets of every joint assignment of `regs`, mixed-radix in list order
/// (first register most significant), together with the assignment digits.
pub(crate) fn joint_offsets(regs: &[&Register]) -> Vec<usize> {
    let total: usize = regs.iter().map(|r| r.dim()).product();
    let mut offsets = Vec::with_capacity(total);
    let mut digits = vec![0usize; regs.len()];
    for _ in 0..total {
        offsets.push(
            regs.iter()
                .zip(&digits)
                .map(|(r, &d)| r.offset(d))
                .sum(),
        );
        advance(&mut digits, regs);
    }
    offsets
}

/// Mixed-radix increment of `digits` (last register fastest).
pub(crate) fn advance(digits: &mut [usize], regs: &[&Register]) {
    for pos in (0..digits.len()).rev() {
        digits[pos] += 1;
        if digits[pos] < regs[pos].dim() {
            return;
        }
        digits[pos] = 0;
    }
}

//! Dense-matrix cross-check of the matrix-free engine.
//!
//! Every primitive is rebuilt here as an explicit unitary from its element
//! formula (Kronecker products, projectors, DFT kernels) and compared with
//! the statevector kernels on random states over small layouts.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::crosscorr::{self, CrossCorrGrover};
use crate::emml::{self, EmmlGrover};
use crate::encoding::{cyclic_shift_2d, ProbArray, ProbArray2D};
use crate::error::Result;
use crate::statevec::{Control, ControlledOp, RegisterLayout, StateVector};

/// Agreement tolerance between dense and matrix-free results.
pub const DENSE_TOL: f64 = 1e-10;

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0.into() } else { 0.0.into() })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.data[i * self.dim + j] * v[j]).sum())
            .collect()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        Self::from_fn(n * m, |i, j| self.get(i / m, j / m) * other.get(i % m, j % m))
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: Complex64 = (0..n).map(|k| self.get(k, i).conj() * self.get(k, j)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        worst
    }
}

/// Joint value of `names` in `index`, mixed-radix in list order.
fn joint_value(layout: &RegisterLayout, names: &[&str], index: usize) -> usize {
    names.iter().fold(0, |acc, n| {
        let r = layout.register(n).expect("known register");
        acc * r.dim() + r.digit(index)
    })
}

fn others_equal(layout: &RegisterLayout, names: &[&str], i: usize, j: usize) -> bool {
    let mask: usize = names
        .iter()
        .map(|n| layout.register(n).expect("known register").mask())
        .fold(0, |a, m| a | m);
    i & !mask == j & !mask
}

/// Embeds `u` (acting on the joint space of `names`) into the full space.
pub fn embed(layout: &RegisterLayout, names: &[&str], u: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(layout.dim(), |i, j| {
        if others_equal(layout, names, i, j) {
            u.get(joint_value(layout, names, i), joint_value(layout, names, j))
        } else {
            0.0.into()
        }
    })
}

pub fn diagonal(dim: usize, f: impl Fn(usize) -> Complex64) -> DenseMatrix {
    DenseMatrix::from_fn(dim, |i, j| if i == j { f(i) } else { 0.0.into() })
}

pub fn hadamard_matrix(qubits: usize) -> DenseMatrix {
    let h = FRAC_1_SQRT_2;
    let h1 = DenseMatrix::from_fn(2, |i, j| if i == 1 && j == 1 { (-h).into() } else { h.into() });
    (1..qubits).fold(h1.clone(), |acc, _| acc.kron(&h1))
}

pub fn qft_matrix(dim: usize, inverse: bool) -> DenseMatrix {
    let sign = if inverse { -1.0 } else { 1.0 };
    let s = 1.0 / (dim as f64).sqrt();
    DenseMatrix::from_fn(dim, |j, k| {
        Complex64::from_polar(s, sign * 2.0 * PI * ((j * k) % dim) as f64 / dim as f64)
    })
}

/// `I − 2|ψ⟩⟨ψ|`.
pub fn reflection_matrix(psi: &[Complex64]) -> DenseMatrix {
    DenseMatrix::from_fn(psi.len(), |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - psi[i] * psi[j].conj() * 2.0
    })
}

/// `Σ_m P_m U^m` for `U` acting trivially on `control`.
pub fn controlled_power_matrix(layout: &RegisterLayout, control: &str, u: &DenseMatrix) -> DenseMatrix {
    let ctrl = layout.register(control).expect("known register");
    let mut out = DenseMatrix::zeros(layout.dim());
    let mut power = DenseMatrix::identity(layout.dim());
    for m in 0..ctrl.dim() {
        let proj = diagonal(layout.dim(), |i| {
            if ctrl.digit(i) == m { 1.0.into() } else { 0.0.into() }
        });
        let term = proj.mul(&power);
        for (o, t) in out.data.iter_mut().zip(&term.data) {
            *o += t;
        }
        power = u.mul(&power);
    }
    out
}

fn kron_vec(factors: &[&[Complex64]]) -> Vec<Complex64> {
    factors.iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, f| {
        acc.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect()
    })
}

pub fn random_unit_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Random layout of 2–3 registers with at most `max_qubits` qubits in total.
pub fn random_layout<R: Rng>(rng: &mut R, max_qubits: usize) -> RegisterLayout {
    let count = rng.gen_range(2..=3usize);
    let mut remaining = max_qubits;
    let mut regs = Vec::new();
    for i in 0..count {
        let left = count - i - 1;
        let hi = (remaining - left).clamp(1, 3);
        let q = rng.gen_range(1..=hi);
        remaining -= q;
        regs.push((["r0", "r1", "r2"][i], q));
    }
    RegisterLayout::new(regs).expect("valid random layout")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestCase {
    pub name: String,
    pub max_deviation: f64,
    pub passed: bool,
}

fn case(name: &str, deviation: f64) -> SelftestCase {
    SelftestCase {
        name: name.to_string(),
        max_deviation: deviation,
        passed: deviation <= DENSE_TOL,
    }
}

struct ProductReflection {
    registers: Vec<String>,
    factors: Vec<Vec<Complex64>>,
}

impl ControlledOp for ProductReflection {
    fn registers(&self) -> Vec<String> {
        self.registers.clone()
    }

    fn apply(&self, state: &mut StateVector, control: Control) -> Result<()> {
        let f: Vec<(&str, &[Complex64])> = self
            .registers
            .iter()
            .map(String::as_str)
            .zip(self.factors.iter().map(Vec::as_slice))
            .collect();
        state.reflect_about_product_state_ctrl(&f, crate::statevec::ReflectionSign::Away, control)
    }
}

/// Runs every dense comparison `trials` times on random layouts of at most
/// six qubits. Returns the worst deviation per operation.
pub fn run_selftest(seed: u64, trials: usize) -> Result<Vec<SelftestCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = [
        "inject_amplitudes",
        "apply_hadamard_all",
        "apply_qft",
        "apply_qft_inverse",
        "reflect_zero",
        "reflect_predicate",
        "reflect_about_product_state",
        "controlled_power",
    ];
    let mut worst = vec![0.0f64; names.len()];
    for _ in 0..trials {
        let layout = random_layout(&mut rng, 6);
        let regs: Vec<String> = layout.registers().iter().map(|r| r.name().to_string()).collect();
        let dim = layout.dim();
        let v = random_unit_vector(dim, &mut rng);
        let state = StateVector::from_amplitudes(layout.clone(), v.clone())?;
        let target = regs[rng.gen_range(0..regs.len())].clone();
        let t_dim = layout.register(&target)?.dim();

        // inject: product of per-register vectors, with `target` starting in |0⟩.
        let factors: Vec<Vec<Complex64>> = layout
            .registers()
            .iter()
            .map(|r| random_unit_vector(r.dim(), &mut rng))
            .collect();
        let mut start: Vec<Vec<Complex64>> = factors.clone();
        let t_pos = regs.iter().position(|r| *r == target).unwrap();
        start[t_pos] = (0..t_dim).map(|i| if i == 0 { 1.0.into() } else { 0.0.into() }).collect();
        let start_refs: Vec<&[Complex64]> = start.iter().map(Vec::as_slice).collect();
        let mut s = StateVector::from_amplitudes(layout.clone(), kron_vec(&start_refs))?;
        s.inject_amplitudes(&target, &factors[t_pos])?;
        let want_refs: Vec<&[Complex64]> = factors.iter().map(Vec::as_slice).collect();
        worst[0] = worst[0].max(max_dev(s.amplitudes(), &kron_vec(&want_refs)));

        // Hadamard
        let h = embed(&layout, &[&target], &hadamard_matrix(layout.register(&target)?.qubits()));
        let mut s = state.clone();
        s.apply_hadamard_all(&target)?;
        worst[1] = worst[1].max(max_dev(s.amplitudes(), &h.apply(&v)));

        // QFT both directions
        for (slot, inverse) in [(2usize, false), (3, true)] {
            let f = embed(&layout, &[&target], &qft_matrix(t_dim, inverse));
            let mut s = state.clone();
            s.apply_qft(&target, inverse)?;
            worst[slot] = worst[slot].max(max_dev(s.amplitudes(), &f.apply(&v)));
        }

        // reflect_zero on a random non-empty subset of registers
        let subset: Vec<&str> = {
            let mut pick: Vec<&str> = regs.iter().map(String::as_str).filter(|_| rng.gen_bool(0.5)).collect();
            if pick.is_empty() {
                pick.push(&target);
            }
            pick
        };
        let z = diagonal(dim, |i| {
            if joint_value(&layout, &subset, i) == 0 { (-1.0).into() } else { 1.0.into() }
        });
        let mut s = state.clone();
        s.reflect_zero(&subset)?;
        worst[4] = worst[4].max(max_dev(s.amplitudes(), &z.apply(&v)));

        // reflect_predicate with a random truth table over the subset
        let table_len: usize = subset.iter().map(|n| layout.register(n).unwrap().dim()).product();
        let table: Vec<bool> = (0..table_len).map(|_| rng.gen_bool(0.4)).collect();
        let dims: Vec<usize> = subset.iter().map(|n| layout.register(n).unwrap().dim()).collect();
        let p = diagonal(dim, |i| {
            if table[joint_value(&layout, &subset, i)] { (-1.0).into() } else { 1.0.into() }
        });
        let mut s = state.clone();
        s.reflect_predicate(&subset, |d| {
            let idx = d.iter().zip(&dims).fold(0, |acc, (v, n)| acc * n + v);
            table[idx]
        })?;
        worst[5] = worst[5].max(max_dev(s.amplitudes(), &p.apply(&v)));

        // reflect_about_product_state on the subset
        let sub_factors: Vec<Vec<Complex64>> = subset
            .iter()
            .map(|n| random_unit_vector(layout.register(n).unwrap().dim(), &mut rng))
            .collect();
        let refs: Vec<&[Complex64]> = sub_factors.iter().map(Vec::as_slice).collect();
        let r = embed(&layout, &subset, &reflection_matrix(&kron_vec(&refs)));
        let args: Vec<(&str, &[Complex64])> = subset.iter().copied().zip(refs.iter().copied()).collect();
        let mut s = state.clone();
        s.reflect_about_product_state(&args)?;
        worst[6] = worst[6].max(max_dev(s.amplitudes(), &r.apply(&v)));

        // controlled_power: reflection on every register except the control
        let control = regs.last().unwrap().clone();
        let op_regs: Vec<&str> = regs[..regs.len() - 1].iter().map(String::as_str).collect();
        let op_factors: Vec<Vec<Complex64>> = op_regs
            .iter()
            .map(|n| random_unit_vector(layout.register(n).unwrap().dim(), &mut rng))
            .collect();
        let op_refs: Vec<&[Complex64]> = op_factors.iter().map(Vec::as_slice).collect();
        let u = embed(&layout, &op_regs, &reflection_matrix(&kron_vec(&op_refs)));
        let cp = controlled_power_matrix(&layout, &control, &u);
        let op = ProductReflection {
            registers: op_regs.iter().map(|s| s.to_string()).collect(),
            factors: op_factors.clone(),
        };
        let mut s = state.clone();
        s.controlled_power(&op, &control)?;
        worst[7] = worst[7].max(max_dev(s.amplitudes(), &cp.apply(&v)));
    }
    let mut cases: Vec<SelftestCase> = names.iter().zip(&worst).map(|(n, w)| case(n, *w)).collect();
    cases.push(case("grover_q", grover_q_deviation(&mut rng)?));
    cases.push(case("grover_g", grover_g_deviation(&mut rng)?));
    Ok(cases)
}

/// Dense Grover operator of the cross-correlation circuit on the layout
/// `var, A, B, cor` for `N = 2`: `−(I − 2|ψ⟩⟨ψ|)_{AB} · S_marked`.
fn grover_q_deviation(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = 2;
    let a = ProbArray::random(n, rng)?;
    let b = ProbArray::random(n, rng)?;
    let layout = crosscorr::build_layout(n, 4)?;
    let psi = kron_vec(&[&a.amplitudes(), &b.amplitudes()]);
    let refl = embed(&layout, &[crosscorr::REG_A, crosscorr::REG_B], &reflection_matrix(&psi));
    let oracle = diagonal(layout.dim(), |i| {
        let d = layout.decompose(i);
        if (d[1] + n - d[2]) % n == d[0] { (-1.0).into() } else { 1.0.into() }
    });
    let q = refl.mul(&oracle);
    let v = random_unit_vector(layout.dim(), rng);
    let mut s = StateVector::from_amplitudes(layout.clone(), v.clone())?;
    CrossCorrGrover::new(&a, &b, &layout)?.apply(&mut s, Control::ALWAYS)?;
    let want: Vec<Complex64> = q.apply(&v).into_iter().map(|z| -z).collect();
    Ok(max_dev(s.amplitudes(), &want))
}

/// Dense pixel Grover operator for `N = 2` on `templ, C1, C2, new` (8 qubits).
fn grover_g_deviation(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = 2;
    let t = ProbArray2D::random(n, rng)?;
    let x = ProbArray2D::random(n, rng)?;
    let (j, k) = (1, 0);
    let layout = emml::build_layout_2d(n, 4)?;
    let shifted = cyclic_shift_2d(&x, j, k)?;
    let psi = kron_vec(&[&t.amplitudes(), &x.amplitudes(), &shifted.amplitudes()]);
    let refl = embed(
        &layout,
        &[emml::TEMPL, emml::COPY1, emml::COPY2],
        &reflection_matrix(&psi),
    );
    let oracle = diagonal(layout.dim(), |i| {
        let d = layout.decompose(i);
        let row_ok = (d[1] / n + n - d[0] / n) % n == d[2] / n;
        let col_ok = (d[1] % n + n - d[0] % n) % n == d[2] % n;
        if row_ok && col_ok { (-1.0).into() } else { 1.0.into() }
    });
    let g = refl.mul(&oracle);
    let v = random_unit_vector(layout.dim(), rng);
    let mut s = StateVector::from_amplitudes(layout.clone(), v.clone())?;
    EmmlGrover::new(&t, &x, j, k, &layout)?.apply(&mut s, Control::ALWAYS)?;
    let want: Vec<Complex64> = g.apply(&v).into_iter().map(|z| -z).collect();
    Ok(max_dev(s.amplitudes(), &want))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_matrices_are_unitary() {
        assert!(hadamard_matrix(3).unitarity_defect() < 1e-14);
        assert!(qft_matrix(8, false).unitarity_defect() < 1e-14);
        let psi = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        assert!(reflection_matrix(&psi).unitarity_defect() < 1e-14);
        let f = qft_matrix(8, false).mul(&qft_matrix(8, true));
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((f.get(i, j) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn small_selftest_passes() {
        let cases = run_selftest(1, 5).unwrap();
        for c in &cases {
            assert!(c.passed, "{c:?}");
        }
    }
}

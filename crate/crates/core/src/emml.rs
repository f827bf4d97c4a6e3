//! EMML translation-model update, one amplitude-estimation circuit per pixel.
//!
//! Registers, most significant first: `templ`, `C1`, `C2` (each `2·log N`
//! qubits, 2D index packed as `row·N + col`) and `new` (log M qubits). `templ`
//! holds `√X`, `C1` holds `√x`, and `C2` holds `√x` cyclically shifted by the
//! target pixel `(j, k)`. The Grover operator marks `C1 ⊖ templ = C2` in both
//! coordinates, so the marked weight is
//! `Σ_{j̄,k̄} C[j̄,k̄]·x[j⊕j̄, k⊕k̄] = x⁺[j, k]`.

use num_complex::Complex64;
use serde::Serialize;

use crate::classical;
use crate::encoding::{cyclic_shift_2d, ProbArray2D};
use crate::error::{ensure_power_of_two, Error, Result};
use crate::qae::{
    self, check_readout_dim, derive_seed, error_bound, estimate_from_m, mode_of, ReadoutMode,
    DEFAULT_ALPHA,
};
use crate::statevec::{
    joint_offsets_owned, marked_offsets, tensor_product, Control, ControlledOp, Register,
    RegisterLayout, ReflectionSign, StateVector, DEFAULT_MAX_QUBITS,
};

pub const TEMPL: &str = "templ";
pub const COPY1: &str = "C1";
pub const COPY2: &str = "C2";
pub const NEW: &str = "new";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmmlConfig {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub mode: ReadoutMode,
    pub seed: u64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub max_qubits: usize,
}

impl EmmlConfig {
    /// Defaults: `α = 16`, `M` the smallest power of two `≥ α·N`, exact mode,
    /// 10 iterations, tolerance `1e-6`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_alpha(n, DEFAULT_ALPHA)
    }

    pub fn with_alpha(n: usize, alpha: f64) -> Result<Self> {
        Ok(Self {
            n,
            m: qae::readout_dim(alpha, n as f64)?,
            alpha,
            mode: ReadoutMode::Exact,
            seed: 0,
            max_iterations: 10,
            convergence_tol: 1e-6,
            max_qubits: DEFAULT_MAX_QUBITS,
        })
    }

    pub fn with_readout(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            alpha: m as f64 / n as f64,
            mode: ReadoutMode::Exact,
            seed: 0,
            max_iterations: 10,
            convergence_tol: 1e-6,
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_power_of_two("image side N", self.n)?;
        if self.n < 2 {
            return Err(Error::InvalidArgument("image side must be at least 2".into()));
        }
        check_readout_dim(self.m)?;
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be ≥ 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidArgument("convergence_tol must be > 0".into()));
        }
        self.mode.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmmlState {
    pub template: ProbArray2D,
    pub data: Vec<ProbArray2D>,
    pub t: usize,
}

impl EmmlState {
    /// Starts from the inputs with the template set to their mean.
    pub fn from_data(data: Vec<ProbArray2D>) -> Result<Self> {
        let template = mean_template(&data)?;
        Ok(Self {
            template,
            data,
            t: 0,
        })
    }

    fn check(&self) -> Result<()> {
        let n = self.template.side();
        if self.data.is_empty() {
            return Err(Error::InvalidArgument("no data arrays".into()));
        }
        for d in &self.data {
            if d.side() != n {
                return Err(Error::LengthMismatch {
                    what: "data array side vs template side",
                    expected: n,
                    actual: d.side(),
                });
            }
        }
        Ok(())
    }
}

fn mean_template(data: &[ProbArray2D]) -> Result<ProbArray2D> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one data array is required".into()))?;
    let n = first.side();
    let mut acc = vec![0.0; n * n];
    for d in data {
        if d.side() != n {
            return Err(Error::LengthMismatch {
                what: "data array side",
                expected: n,
                actual: d.side(),
            });
        }
        for (a, v) in acc.iter_mut().zip(d.values()) {
            *a += v;
        }
    }
    let count = data.len() as f64;
    let mean = acc.into_iter().map(|v| v / count).collect();
    Ok(ProbArray2D::renormalized(n, mean)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PixelEstimate {
    pub j: usize,
    pub k: usize,
    /// Readout outcome Θ (argmax or sampled mode).
    pub theta_index: usize,
    /// `sin²(πΘ/M)`.
    pub value: f64,
    pub error_bound: f64,
    pub oracle_calls: u64,
}

/// Layout `templ, C1, C2, new` with `6·log₂N + log₂M` qubits.
pub fn build_layout_2d(n: usize, m: usize) -> Result<RegisterLayout> {
    ensure_power_of_two("image side N", n)?;
    ensure_power_of_two("readout dimension M", m)?;
    if n < 2 || m < 2 {
        return Err(Error::InvalidArgument(
            "N and M must each be at least 2".into(),
        ));
    }
    let q = 2 * n.trailing_zeros() as usize;
    let lm = m.trailing_zeros() as usize;
    RegisterLayout::new([(TEMPL, q), (COPY1, q), (COPY2, q), (NEW, lm)])
}

fn check_inputs(
    template: &ProbArray2D,
    data: &ProbArray2D,
    j: usize,
    k: usize,
    layout: &RegisterLayout,
) -> Result<usize> {
    let dim = layout.register(TEMPL)?.dim();
    let n = template.side();
    if n * n != dim || data.side() != n {
        return Err(Error::LengthMismatch {
            what: "image size vs layout",
            expected: dim,
            actual: data.side() * data.side(),
        });
    }
    if j >= n || k >= n {
        return Err(Error::InvalidArgument(format!(
            "pixel ({j}, {k}) out of range for side {n}"
        )));
    }
    Ok(n)
}

/// `√X ⊗ √x ⊗ √shift(x; j, k) ⊗ |0⟩_new`.
pub fn initialize_emml(
    template: &ProbArray2D,
    data: &ProbArray2D,
    j: usize,
    k: usize,
    layout: &RegisterLayout,
) -> Result<StateVector> {
    initialize_capped(template, data, j, k, layout, DEFAULT_MAX_QUBITS)
}

fn initialize_capped(
    template: &ProbArray2D,
    data: &ProbArray2D,
    j: usize,
    k: usize,
    layout: &RegisterLayout,
    max_qubits: usize,
) -> Result<StateVector> {
    check_inputs(template, data, j, k, layout)?;
    let mut state = StateVector::with_cap(layout.clone(), max_qubits)?;
    state.inject_amplitudes(TEMPL, &template.amplitudes())?;
    state.inject_amplitudes(COPY1, &data.amplitudes())?;
    state.inject_amplitudes(COPY2, &cyclic_shift_2d(data, j, k)?.amplitudes())?;
    Ok(state)
}

/// Grover operator for one pixel: sign flip on `C1 ⊖ templ = C2` (row and
/// column, mod N), then reflection toward the prepared product state.
pub struct EmmlGrover {
    layout: RegisterLayout,
    regs: Vec<Register>,
    marked: Vec<usize>,
    offsets: Vec<usize>,
    psi: Vec<Complex64>,
}

impl EmmlGrover {
    pub fn new(
        template: &ProbArray2D,
        data: &ProbArray2D,
        j: usize,
        k: usize,
        layout: &RegisterLayout,
    ) -> Result<Self> {
        let n = check_inputs(template, data, j, k, layout)?;
        let regs: Vec<Register> = layout
            .resolve(&[TEMPL, COPY1, COPY2])?
            .into_iter()
            .cloned()
            .collect();
        let marked = marked_offsets(&regs.iter().collect::<Vec<_>>(), |d| {
            let (tr, tc) = (d[0] / n, d[0] % n);
            let (ar, ac) = (d[1] / n, d[1] % n);
            let (br, bc) = (d[2] / n, d[2] % n);
            (ar + n - tr) % n == br && (ac + n - tc) % n == bc
        });
        let offsets = joint_offsets_owned(&regs);
        let shifted = cyclic_shift_2d(data, j, k)?;
        let psi = tensor_product([
            template.amplitudes().as_slice(),
            data.amplitudes().as_slice(),
            shifted.amplitudes().as_slice(),
        ]);
        Ok(Self {
            layout: layout.clone(),
            regs,
            marked,
            offsets,
            psi,
        })
    }
}

impl ControlledOp for EmmlGrover {
    fn registers(&self) -> Vec<String> {
        vec![TEMPL.into(), COPY1.into(), COPY2.into()]
    }

    fn apply(&self, state: &mut StateVector, control: Control) -> Result<()> {
        if state.layout() != &self.layout {
            return Err(Error::Precondition(
                "state layout differs from the Grover operator's layout".into(),
            ));
        }
        let regs: Vec<&Register> = self.regs.iter().collect();
        state.flip_offsets(&regs, &self.marked, control);
        state.reflect_about(&regs, &self.offsets, &self.psi, ReflectionSign::Toward, control);
        Ok(())
    }
}

/// One unconditional application of the pixel Grover operator.
pub fn grover_g(
    state: &mut StateVector,
    template: &ProbArray2D,
    data: &ProbArray2D,
    j: usize,
    k: usize,
) -> Result<()> {
    let op = EmmlGrover::new(template, data, j, k, &state.layout().clone())?;
    op.apply(state, Control::ALWAYS)
}

/// Runs the pixel circuit and returns the estimate of `x⁺[j, k]`.
pub fn estimate_pixel(
    template: &ProbArray2D,
    data: &ProbArray2D,
    j: usize,
    k: usize,
    config: &EmmlConfig,
) -> Result<PixelEstimate> {
    config.validate()?;
    if template.side() != config.n {
        return Err(Error::LengthMismatch {
            what: "image side vs configured N",
            expected: config.n,
            actual: template.side(),
        });
    }
    let layout = build_layout_2d(config.n, config.m)?;
    let mut state = initialize_capped(template, data, j, k, &layout, config.max_qubits)?;
    state.apply_qft(NEW, false)?;
    let op = EmmlGrover::new(template, data, j, k, &layout)?;
    let calls = state.controlled_power(&op, NEW)?;
    state.apply_qft(NEW, true)?;

    let theta_index = match config.mode {
        ReadoutMode::Exact => state
            .conditional_distribution(NEW, &[])?
            .argmax()
            .unwrap_or(0),
        ReadoutMode::Sampling { shots } => {
            let draws = state.sample_measurement(&[NEW], config.seed, shots)?;
            let mut counts = vec![0usize; config.m];
            for d in draws {
                counts[d[0]] += 1;
            }
            mode_of(&counts)
        }
    };
    let value = estimate_from_m(theta_index, config.m)?;
    Ok(PixelEstimate {
        j,
        k,
        theta_index,
        value,
        error_bound: error_bound(value, config.m),
        oracle_calls: calls,
    })
}

/// Per-array convergence record of one iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Iteration index of the produced arrays (`t + 1`).
    pub t: usize,
    pub array_id: usize,
    /// `max |x⁺ − x|` after renormalization.
    pub l_inf_change: f64,
    /// Sum of the raw pixel estimates before renormalization.
    pub sum_before_renorm: f64,
    pub oracle_calls: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationOutcome {
    /// State the iteration started from.
    pub input: EmmlState,
    pub next: EmmlState,
    /// `pixels[array][j·N + k]`.
    pub pixels: Vec<Vec<PixelEstimate>>,
    pub rows: Vec<ConvergenceRow>,
}

impl IterationOutcome {
    pub fn max_change(&self) -> f64 {
        self.rows.iter().map(|r| r.l_inf_change).fold(0.0, f64::max)
    }

    pub fn oracle_calls(&self) -> u64 {
        self.rows.iter().map(|r| r.oracle_calls).sum()
    }
}

/// Estimates every pixel of every data array, renormalizes each new array,
/// and recomputes the template as their mean.
pub fn emml_iteration(state: &EmmlState, config: &EmmlConfig) -> Result<IterationOutcome> {
    config.validate()?;
    state.check()?;
    let n = config.n;
    let mut next_data = Vec::with_capacity(state.data.len());
    let mut pixels = Vec::with_capacity(state.data.len());
    let mut rows = Vec::with_capacity(state.data.len());
    for (array_id, data) in state.data.iter().enumerate() {
        let mut estimates = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let pixel_cfg = EmmlConfig {
                    seed: derive_seed(&[config.seed, state.t as u64, array_id as u64, j as u64, k as u64]),
                    ..config.clone()
                };
                estimates.push(estimate_pixel(&state.template, data, j, k, &pixel_cfg)?);
            }
        }
        let raw: Vec<f64> = estimates.iter().map(|e| e.value).collect();
        let (new_arr, sum_before_renorm) = ProbArray2D::renormalized(n, raw)?;
        rows.push(ConvergenceRow {
            t: state.t + 1,
            array_id,
            l_inf_change: new_arr.max_abs_diff(data),
            sum_before_renorm,
            oracle_calls: estimates.iter().map(|e| e.oracle_calls).sum(),
        });
        next_data.push(new_arr);
        pixels.push(estimates);
    }
    let next = EmmlState {
        template: mean_template(&next_data)?,
        data: next_data,
        t: state.t + 1,
    };
    Ok(IterationOutcome {
        input: state.clone(),
        next,
        pixels,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmmlRun {
    pub final_state: EmmlState,
    pub iterations: Vec<IterationOutcome>,
    pub converged: bool,
}

impl EmmlRun {
    pub fn report(&self) -> Vec<ConvergenceRow> {
        self.iterations.iter().flat_map(|it| it.rows.iter().cloned()).collect()
    }

    pub fn total_oracle_calls(&self) -> u64 {
        self.iterations.iter().map(|it| it.oracle_calls()).sum()
    }
}

/// Iterates from `template⁰ = mean(inputs)` until the largest per-pixel change
/// drops below the tolerance or `max_iterations` is reached.
pub fn run_emml(initial: Vec<ProbArray2D>, config: &EmmlConfig) -> Result<EmmlRun> {
    config.validate()?;
    let mut state = EmmlState::from_data(initial)?;
    state.check()?;
    let mut iterations = Vec::new();
    let mut converged = false;
    while iterations.len() < config.max_iterations {
        let it = emml_iteration(&state, config)?;
        state = it.next.clone();
        let change = it.max_change();
        iterations.push(it);
        if change < config.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(EmmlRun {
        final_state: state,
        iterations,
        converged,
    })
}

/// Exact classical iteration with the same renormalization and template rule
/// as [`emml_iteration`].
pub fn classical_iteration(state: &EmmlState) -> Result<EmmlState> {
    state.check()?;
    let n = state.template.side();
    let data = state
        .data
        .iter()
        .map(|d| {
            let raw = classical::emml_step_values(&state.template, d)?;
            Ok(ProbArray2D::renormalized(n, raw)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmmlState {
        template: mean_template(&data)?,
        data,
        t: state.t + 1,
    })
}

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcorr::classical::{crosscorr_brute, emml_step_values};
use qcorr::crosscorr::{random_pair, run_crosscorr, CrossCorrConfig};
use qcorr::emml::{emml_iteration, run_emml, EmmlConfig, EmmlState};
use qcorr::encoding::{denormalize_correlation, normalize, normalize_2d, ProbArray2D};
use qcorr::io::{load_raw_1d, load_raw_2d};
use qcorr::qae::{error_bound, readout_dim, theoretical_peak, ReadoutMode};
use qcorr::selftest::run_selftest;
use qcorr::statevec::DEFAULT_MAX_QUBITS;

use crate::report::{
    self, EmmlReport, Format, IterationReport, Metadata, Row, RunReport, Summary, SweepMetadata,
    SweepReport, SweepRow,
};
use crate::{Algorithm, CrosscorrArgs, EmmlArgs, Mode, Output, Readout, SelftestArgs, SweepArgs};

const MAX_QUBITS_ENV: &str = "QCORR_MAX_QUBITS";

fn max_qubits() -> Result<usize> {
    match std::env::var(MAX_QUBITS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{MAX_QUBITS_ENV}={v:?} is not a qubit count")),
        Err(_) => Ok(DEFAULT_MAX_QUBITS),
    }
}

fn readout_mode(r: &Readout) -> ReadoutMode {
    match r.mode {
        Mode::Exact => ReadoutMode::Exact,
        Mode::Sampling => ReadoutMode::Sampling { shots: r.shots },
    }
}

fn mode_name(mode: ReadoutMode) -> (String, Option<usize>) {
    match mode {
        ReadoutMode::Exact => ("exact".into(), None),
        ReadoutMode::Sampling { shots } => ("sampling".into(), Some(shots)),
    }
}

fn unix_now(out: &Output) -> Option<u64> {
    out.timing
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

fn elapsed_ms(out: &Output, start: Instant) -> Option<u64> {
    out.timing.then(|| start.elapsed().as_millis() as u64)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn check_n(expected: Option<usize>, actual: usize, what: &str) -> Result<()> {
    match expected {
        Some(n) if n != actual => bail!("--n {n} does not match {what} {actual}"),
        _ => Ok(()),
    }
}

fn row(
    index: usize,
    estimate: f64,
    classical: f64,
    m: usize,
    m_hat: usize,
    oracle_calls: u64,
) -> Result<Row> {
    let abs_error = (estimate - classical).abs();
    let bound_hat = error_bound(estimate, m);
    let bound_true = error_bound(classical, m);
    let (lo, hi) = theoretical_peak(classical.clamp(0.0, 1.0), m)?;
    Ok(Row {
        iteration: None,
        array_id: None,
        index,
        pixel: None,
        quantum_estimate: estimate,
        classical_value: classical,
        abs_error,
        error_bound: bound_hat,
        error_bound_classical: bound_true,
        within_bound: abs_error <= bound_hat.max(bound_true),
        m_hat,
        oracle_calls,
        peak_theory: [lo, hi],
        raw_quantum_estimate: None,
        raw_classical_value: None,
        samples: None,
        low_coverage: None,
    })
}

pub fn crosscorr(args: &CrosscorrArgs) -> Result<bool> {
    let start = Instant::now();
    let cap = max_qubits()?;
    let raw_a = load_raw_1d(&args.a)?;
    let raw_b = load_raw_1d(&args.b)?;
    if raw_a.len() != raw_b.len() {
        bail!(
            "{} has {} values but {} has {}; both arrays must have the same length",
            args.a.display(),
            raw_a.len(),
            args.b.display(),
            raw_b.len()
        );
    }
    let n = raw_a.len();
    check_n(args.readout.n, n, "the input length")?;
    let (pa, qa) = normalize(&raw_a);
    let (pb, qb) = normalize(&raw_b);

    let mut config = match args.readout.m {
        Some(m) => CrossCorrConfig::with_readout(n, m),
        None => CrossCorrConfig::with_alpha(n, args.readout.alpha)?,
    }
    .mode(readout_mode(&args.readout))
    .seed(args.readout.seed)
    .max_qubits(cap);
    if args.readout.m.is_none() {
        config.alpha = args.readout.alpha;
    }
    config.validate()?;

    let outcomes = run_crosscorr(&pa, &pb, &config)?;
    let classical = crosscorr_brute(pa.values(), pb.values())?.values;
    let estimates: Vec<f64> = outcomes.iter().map(|o| o.estimate).collect();
    let raw = if qa.degenerate || qb.degenerate {
        None
    } else {
        Some((
            denormalize_correlation(&estimates, &qa, &qb, n)?,
            denormalize_correlation(&classical, &qa, &qb, n)?,
        ))
    };
    let mut rows = Vec::with_capacity(n);
    for o in &outcomes {
        let mut r = row(o.j_bar, o.estimate, classical[o.j_bar], config.m, o.m_hat, o.oracle_calls)?;
        if let Some((re, rc)) = &raw {
            r.raw_quantum_estimate = Some(re[o.j_bar]);
            r.raw_classical_value = Some(rc[o.j_bar]);
        }
        r.samples = o.samples;
        r.low_coverage = o.samples.map(|_| o.low_coverage);
        rows.push(r);
    }
    let total_calls = outcomes.first().map(|o| o.oracle_calls).unwrap_or(0);
    let mut summary = Summary::of(&rows, total_calls);
    summary.wall_time_ms = elapsed_ms(&args.output, start);
    let (mode, shots) = mode_name(config.mode);
    let degenerate_inputs = [(&args.a, qa.degenerate), (&args.b, qb.degenerate)]
        .into_iter()
        .filter(|(_, d)| *d)
        .map(|(p, _)| display(p))
        .collect();
    let report = RunReport {
        metadata: Metadata {
            algorithm: "crosscorr".into(),
            n,
            m: config.m,
            alpha: config.alpha,
            mode,
            shots,
            seed: config.seed,
            max_qubits: cap,
            inputs: vec![display(&args.a), display(&args.b)],
            degenerate_inputs,
            max_iterations: None,
            tol: None,
            timestamp: unix_now(&args.output),
        },
        rows,
        summary,
    };
    let bytes = match args.output.format {
        Format::Json => report::json(&report)?,
        Format::Csv => report::rows_csv(&report.rows)?,
    };
    report::emit(&bytes, args.output.out.as_deref())?;
    eprintln!(
        "crosscorr N={n} M={}: {} lags, max |error| {:.3e}, {:.0}% within bound, {} oracle calls",
        config.m,
        report.summary.rows,
        report.summary.max_abs_error,
        100.0 * report.summary.fraction_within_bound,
        report.summary.total_oracle_calls
    );
    Ok(report.summary.all_within())
}

fn array_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("csv" | "json")) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("{} contains no .csv or .json arrays", dir.display());
    }
    Ok(files)
}

pub fn emml(args: &EmmlArgs) -> Result<bool> {
    let start = Instant::now();
    let cap = max_qubits()?;
    let files = array_files(&args.input)?;
    let mut arrays = Vec::with_capacity(files.len());
    let mut degenerate_inputs = Vec::new();
    for f in &files {
        let (p, params) = normalize_2d(&load_raw_2d(f)?)?;
        if let Some(first) = arrays.first().map(|a: &ProbArray2D| a.side()) {
            if p.side() != first {
                bail!(
                    "{} is {}x{} but {} is {first}x{first}; all arrays must share one shape",
                    f.display(),
                    p.side(),
                    p.side(),
                    files[0].display()
                );
            }
        }
        if params.degenerate {
            degenerate_inputs.push(display(f));
        }
        arrays.push(p);
    }
    let n = arrays[0].side();
    check_n(args.readout.n, n, "the array side")?;
    let mut config = match args.readout.m {
        Some(m) => EmmlConfig::with_readout(n, m),
        None => EmmlConfig::with_alpha(n, args.readout.alpha)?,
    };
    if args.readout.m.is_none() {
        config.alpha = args.readout.alpha;
    }
    config.mode = readout_mode(&args.readout);
    config.seed = args.readout.seed;
    config.max_iterations = args.iterations;
    config.convergence_tol = args.tol;
    config.max_qubits = cap;
    config.validate()?;

    let run = run_emml(arrays, &config)?;
    let mut iterations = Vec::with_capacity(run.iterations.len());
    let mut all_rows = Vec::new();
    for it in &run.iterations {
        let mut rows = Vec::new();
        for (array_id, pixels) in it.pixels.iter().enumerate() {
            let classical = emml_step_values(&it.input.template, &it.input.data[array_id])?;
            for p in pixels {
                let index = p.j * n + p.k;
                let mut r = row(index, p.value, classical[index], config.m, p.theta_index, p.oracle_calls)?;
                r.iteration = Some(it.next.t);
                r.array_id = Some(array_id);
                r.pixel = Some([p.j, p.k]);
                rows.push(r);
            }
        }
        let summary = Summary::of(&rows, it.oracle_calls());
        all_rows.extend(rows.iter().cloned());
        iterations.push(IterationReport {
            t: it.next.t,
            rows,
            convergence: it.rows.clone(),
            summary,
        });
    }
    let mut summary = Summary::of(&all_rows, run.total_oracle_calls());
    summary.wall_time_ms = elapsed_ms(&args.output, start);
    let (mode, shots) = mode_name(config.mode);
    let report = EmmlReport {
        metadata: Metadata {
            algorithm: "emml".into(),
            n,
            m: config.m,
            alpha: config.alpha,
            mode,
            shots,
            seed: config.seed,
            max_qubits: cap,
            inputs: files.iter().map(|f| display(f)).collect(),
            degenerate_inputs,
            max_iterations: Some(config.max_iterations),
            tol: Some(config.convergence_tol),
            timestamp: unix_now(&args.output),
        },
        iterations,
        converged: run.converged,
        final_arrays: run.final_state.data.iter().map(|a| a.values().to_vec()).collect(),
        summary,
    };
    let bytes = match args.output.format {
        Format::Json => report::json(&report)?,
        Format::Csv => report::rows_csv(&all_rows)?,
    };
    report::emit(&bytes, args.output.out.as_deref())?;
    let last_change = run.iterations.last().map(|it| it.max_change()).unwrap_or(0.0);
    eprintln!(
        "emml N={n} M={}: {} iteration(s), converged={}, last max change {:.3e}, {:.0}% of pixels within bound, {} oracle calls",
        config.m,
        run.iterations.len(),
        run.converged,
        last_change,
        100.0 * report.summary.fraction_within_bound,
        report.summary.total_oracle_calls
    );
    Ok(report.summary.all_within())
}

struct Point {
    n: usize,
    m: usize,
    alpha: f64,
}

fn sweep_points(args: &SweepArgs) -> Result<Vec<Point>> {
    if args.n_list.is_empty() {
        bail!("--n-list must not be empty");
    }
    let scale = |n: usize| match args.algorithm {
        Algorithm::Crosscorr => (n as f64).sqrt(),
        Algorithm::Emml => n as f64,
    };
    let mut points = Vec::new();
    for &n in &args.n_list {
        match (&args.m_list, &args.alpha_list) {
            (Some(ms), _) => {
                if ms.is_empty() {
                    bail!("--m-list must not be empty");
                }
                for &m in ms {
                    points.push(Point { n, m, alpha: m as f64 / scale(n) });
                }
            }
            (None, Some(alphas)) => {
                if alphas.is_empty() {
                    bail!("--alpha-list must not be empty");
                }
                for &alpha in alphas {
                    points.push(Point { n, m: readout_dim(alpha, scale(n))?, alpha });
                }
            }
            (None, None) => bail!("one of --m-list or --alpha-list is required"),
        }
    }
    Ok(points)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

pub fn sweep(args: &SweepArgs) -> Result<bool> {
    let start = Instant::now();
    let cap = max_qubits()?;
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let points = sweep_points(args)?;
    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        let mut errors = Vec::new();
        let mut instance_max = Vec::new();
        let mut within = 0usize;
        let mut max_bound: f64 = 0.0;
        let mut calls_per_run = 0;
        let mut total_calls = 0;
        for i in 0..args.seeds {
            let seed = args.seed.wrapping_add(i);
            let pairs: Vec<(f64, f64)> = match args.algorithm {
                Algorithm::Crosscorr => {
                    let mut cfg = CrossCorrConfig::with_readout(p.n, p.m).seed(seed).max_qubits(cap);
                    cfg.alpha = p.alpha;
                    cfg.validate()?;
                    let (a, b) = random_pair(p.n, seed)?;
                    let truth = crosscorr_brute(a.values(), b.values())?.values;
                    let out = run_crosscorr(&a, &b, &cfg)?;
                    calls_per_run = out[0].oracle_calls;
                    total_calls += calls_per_run;
                    out.iter().map(|o| (o.estimate, truth[o.j_bar])).collect()
                }
                Algorithm::Emml => {
                    let mut cfg = EmmlConfig::with_readout(p.n, p.m);
                    cfg.alpha = p.alpha;
                    cfg.seed = seed;
                    cfg.max_qubits = cap;
                    cfg.validate()?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let template = ProbArray2D::random(p.n, &mut rng)?;
                    let data = ProbArray2D::random(p.n, &mut rng)?;
                    let truth = emml_step_values(&template, &data)?;
                    let state = EmmlState {
                        template,
                        data: vec![data],
                        t: 0,
                    };
                    let it = emml_iteration(&state, &cfg)?;
                    calls_per_run = it.pixels[0][0].oracle_calls;
                    total_calls += it.oracle_calls();
                    it.pixels[0]
                        .iter()
                        .map(|px| (px.value, truth[px.j * p.n + px.k]))
                        .collect()
                }
            };
            let mut worst: f64 = 0.0;
            for (est, c) in pairs {
                let err = (est - c).abs();
                let bound = error_bound(c, p.m);
                max_bound = max_bound.max(bound);
                if err <= bound.max(error_bound(est, p.m)) {
                    within += 1;
                }
                worst = worst.max(err);
                errors.push(err);
            }
            instance_max.push(worst);
        }
        let count = errors.len();
        let log_n = (p.n as f64).log2();
        rows.push(SweepRow {
            algorithm: match args.algorithm {
                Algorithm::Crosscorr => "crosscorr".into(),
                Algorithm::Emml => "emml".into(),
            },
            n: p.n,
            m: p.m,
            alpha: p.alpha,
            instances: args.seeds as usize,
            max_abs_error: errors.iter().copied().fold(0.0, f64::max),
            mean_abs_error: errors.iter().sum::<f64>() / count as f64,
            median_max_abs_error: median(instance_max),
            max_error_bound: max_bound,
            fraction_within_bound: within as f64 / count as f64,
            oracle_calls_per_run: calls_per_run,
            total_oracle_calls: total_calls,
            classical_cost: match args.algorithm {
                Algorithm::Crosscorr => p.n as f64 * log_n,
                Algorithm::Emml => (p.n * p.n) as f64 * log_n,
            },
        });
    }
    let report = SweepReport {
        metadata: SweepMetadata {
            algorithm: rows[0].algorithm.clone(),
            n_list: args.n_list.clone(),
            m_list: args.m_list.clone(),
            alpha_list: args.alpha_list.clone(),
            seeds: args.seeds,
            seed: args.seed,
            mode: "exact".into(),
            max_qubits: cap,
            timestamp: unix_now(&args.output),
        },
        rows,
        wall_time_ms: elapsed_ms(&args.output, start),
    };
    let bytes = match args.output.format {
        Format::Json => report::json(&report)?,
        Format::Csv => report::sweep_csv(&report.rows)?,
    };
    report::emit(&bytes, args.output.out.as_deref())?;
    for r in &report.rows {
        eprintln!(
            "sweep {} N={} M={}: max |error| {:.3e}, {} calls per run vs classical {:.0}",
            r.algorithm, r.n, r.m, r.max_abs_error, r.oracle_calls_per_run, r.classical_cost
        );
    }
    Ok(true)
}

pub fn selftest(args: &SelftestArgs) -> Result<bool> {
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let cases = run_selftest(args.seed, args.trials)?;
    let bytes = match args.output.format {
        Format::Json => report::json(&cases)?,
        Format::Csv => {
            let mut out = String::from("name,max_deviation,passed\n");
            for c in &cases {
                out.push_str(&format!("{},{},{}\n", c.name, report::num(c.max_deviation), c.passed));
            }
            out.into_bytes()
        }
    };
    report::emit(&bytes, args.output.out.as_deref())?;
    let failed = cases.iter().filter(|c| !c.passed).count();
    eprintln!(
        "selftest: {}/{} operations match their dense matrices within {:e}",
        cases.len() - failed,
        cases.len(),
        qcorr::selftest::DENSE_TOL
    );
    Ok(failed == 0)
}

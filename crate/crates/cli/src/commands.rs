use std::fmt::Write as _;
use std::path::Path;

use bottlab::approx::{loring_lipschitz_constant, nearest_commuting, obstruction_lower_bound, NearestOptions};
use bottlab::asymptotics::{
    format_significant, records_to_csv, step1_check, step2_check, step3_check, step4_report, sweep as run_sweep, trace_check,
    Calibration, SweepRecord, CALIBRATION_N,
};
use bottlab::matrix::{random_unitary, UnitaryMatrix};
use bottlab::model::voiculescu_pair;
use bottlab::pairing::{bott_loop, pairing_index, pairing_index_with_gap, winding_number, LoopSpec, LoopUnitary, ProjectionMatrix};
use bottlab::scalar::circle_point;
use bottlab::symbols::{default_triple, validate_triple, SymbolTriple};
use bottlab::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{EXIT_CHECK, EXIT_DATA, EXIT_GAP, EXIT_SYMBOLS, EXIT_USAGE};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn num(x: f64) -> String {
    format_significant(x, 12)
}

fn header(out: &mut String, command: &str, seed: u64) {
    let _ = writeln!(out, "# bottlab {command} seed={seed}");
}

/// Exit code for a library error outside of input parsing.
fn classify(e: &Error) -> u8 {
    match e {
        Error::GapClosed { .. } => EXIT_GAP,
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_CHECK,
    }
}

fn lib_failure(e: Error) -> Failure {
    let code = classify(&e);
    let advice = if code == EXIT_GAP { "; try a larger t or N" } else { "" };
    Failure::new(code, format!("{e}{advice}"))
}

pub fn verify_symbols(seed: u64, grid: usize, fconst: Option<f64>) -> Result<(), Failure> {
    let mut triple = default_triple::<f64>();
    if let Some(c) = fconst {
        triple = triple.with_f(move |_| c);
    }
    let report = validate_triple(&triple, grid).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let mut out = String::new();
    header(&mut out, "verify-symbols", seed);
    let _ = writeln!(out, "triple: {}", triple.name());
    let _ = writeln!(out, "grid: {}", report.grid_size);
    let _ = writeln!(out, "tolerance: {}", num(report.tolerance));
    let _ = writeln!(out, "f^2+g^2+h^2-f: {}", num(report.identity_violation));
    let _ = writeln!(out, "g*h: {}", num(report.product_violation));
    let _ = writeln!(out, "f(1)-1, g(1), h(1): {}", num(report.anchor_violation));
    let _ = writeln!(out, "range outside [0,1]: {}", num(report.range_violation));
    let _ = writeln!(
        out,
        "lipschitz f g h: {} {} {}",
        num(triple.lipschitz_f),
        num(triple.lipschitz_g),
        num(triple.lipschitz_h)
    );
    let _ = writeln!(out, "result: {}", if report.passed { "PASS" } else { "FAIL" });
    print!("{out}");
    if report.passed {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_SYMBOLS,
            format!("symbol identities violated by {:e}", report.max_violation()),
        ))
    }
}

/// Per-row and cross-row checks. Rows below the calibration size only get
/// the exact identities and the pointwise projection-distance inequality.
fn sweep_failures(rows: &[SweepRecord<f64>], triple: &SymbolTriple<f64>) -> (Vec<String>, Vec<String>) {
    let cal = Calibration::RAISED_COSINE;
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    for r in rows {
        if !trace_check(r) {
            failures.push(format!("N={}: |tr e - N| = {:e}", r.n, (r.tr_e - r.n as f64).abs()));
        }
        if !step3_check(r) {
            failures.push(format!("N={}: trace identity, |tr e^2 - N| = {:e}", r.n, (r.tr_e2 - r.n as f64).abs()));
        }
        if r.is_flagged() {
            warnings.push(format!("N={}: spectral gap at 1/2 not certified; index undefined", r.n));
            continue;
        }
        if r.norm_chi_minus_e > 2.0 * r.norm_e2_minus_e + 1e-10 {
            failures.push(format!("N={}: projection distance, ||chi(e)-e|| > 2||e^2-e||", r.n));
        }
        if r.n < CALIBRATION_N {
            continue;
        }
        if !step1_check(r, &cal) {
            failures.push(format!("N={}: projection distance, N||chi(e)-e|| = {} exceeds {}", r.n, r.n as f64 * r.norm_chi_minus_e, cal.c_cap));
        }
        if !step2_check(r, &cal) {
            failures.push(format!("N={}: cubic trace rate, deviation {} exceeds {}", r.n, r.step2_deviation(), 2.0 * cal.d / r.n as f64));
        }
        if r.index != Some(1) {
            failures.push(format!("N={}: index {:?}, expected 1", r.n, r.index));
        }
    }
    let tail: Vec<SweepRecord<f64>> = rows
        .iter()
        .filter(|r| !r.is_flagged() && r.n >= CALIBRATION_N)
        .copied()
        .collect();
    if tail.len() >= 2 {
        let s4 = step4_report(&tail, triple);
        if !s4.passed {
            failures.push(format!(
                "cubic trace limit: monotone={} |tr e^3-(N-1/2)|={} at N={}, riemann sum {}",
                s4.monotone, s4.final_deviation, s4.final_n, s4.riemann_sum
            ));
        }
    } else {
        warnings.push("cubic trace limit skipped: fewer than two certified rows with N >= 8".into());
    }
    (warnings, failures)
}

pub fn sweep(seed: u64, n_list: &[usize], json: bool, output: Option<&Path>) -> Result<(), Failure> {
    if n_list.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "--n-list is empty"));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n < 2) {
        return Err(Failure::new(EXIT_USAGE, format!("every N must be at least 2, got {n}")));
    }
    let triple = default_triple::<f64>();
    let rows = run_sweep(n_list, &triple).map_err(lib_failure)?;
    let body = if json {
        let mut s = serde_json::to_string_pretty(&rows).map_err(|e| Failure::new(EXIT_CHECK, e.to_string()))?;
        s.push('\n');
        s
    } else {
        records_to_csv(&rows).map_err(lib_failure)?
    };
    eprintln!("# bottlab sweep seed={seed} triple={}", triple.name());
    match output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    let (warnings, failures) = sweep_failures(&rows, &triple);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    for f in &failures {
        eprintln!("check failed: {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CHECK, format!("{} sweep check(s) failed", failures.len())))
    }
}

pub fn pairing(seed: u64, loop_file: &Path, t: f64, gap_min: f64) -> Result<(), Failure> {
    let text = std::fs::read_to_string(loop_file)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", loop_file.display())))?;
    let spec: LoopSpec =
        serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_USAGE, format!("malformed loop JSON: {e}")))?;
    let v = LoopUnitary::<f64>::from_spec(&spec).map_err(|e| {
        let code = match e {
            Error::InvalidArgument(_) | Error::Dimension { .. } | Error::InvalidMatrix(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure::new(code, format!("invalid loop: {e}"))
    })?;
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Failure::new(EXIT_USAGE, format!("--t must be a finite number >= 1, got {t}")));
    }
    let triple = default_triple::<f64>();
    let r = pairing_index_with_gap(&v, t, &triple, gap_min).map_err(lib_failure)?;
    // the index is only meaningful once it has settled in t
    let doubled = pairing_index_with_gap(&v, 2.0 * t, &triple, gap_min).map_err(lib_failure)?;
    let samples = 64 * (v.degree() as usize + 1);
    let winding = winding_number(&v, samples).map_err(|e| Failure::new(EXIT_DATA, e.to_string()))?;
    let mut out = String::new();
    header(&mut out, "pairing", seed);
    let _ = writeln!(out, "loop: k={} degree={}", v.k(), v.degree());
    let _ = writeln!(out, "t: {t}");
    let _ = writeln!(out, "window: {}", r.window);
    let _ = writeln!(out, "stability window: {}", r.stability_window);
    let _ = writeln!(out, "locality: {}", r.locality);
    let _ = writeln!(out, "index: {}", r.result.index);
    let _ = writeln!(out, "gap: {}", num(r.result.gap));
    let _ = writeln!(out, "defect: {}", num(r.result.defect));
    let _ = writeln!(out, "raw_trace: {}", num(r.result.raw_trace));
    let _ = writeln!(out, "index at 2t: {}", doubled.result.index);
    let _ = writeln!(out, "winding: {winding}");
    print!("{out}");
    if doubled.result.index != r.result.index {
        return Err(Failure::new(
            EXIT_CHECK,
            format!(
                "index {} at t = {t} differs from {} at t = {}; raise t",
                r.result.index,
                doubled.result.index,
                2.0 * t
            ),
        ));
    }
    Ok(())
}

pub fn roundtrip(seed: u64, k: usize, ranks: &[usize], t: f64, count: usize) -> Result<(), Failure> {
    if k == 0 || count == 0 {
        return Err(Failure::new(EXIT_USAGE, "--k and --count must be positive"));
    }
    if let Some(&r) = ranks.iter().find(|&&r| r > k) {
        return Err(Failure::new(EXIT_USAGE, format!("rank {r} exceeds --k {k}")));
    }
    let triple = default_triple::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    header(&mut out, "roundtrip", seed);
    let _ = writeln!(out, "k={k} t={t}");
    let mut failed = 0usize;
    for &rank in ranks {
        for sample in 0..count {
            let p = ProjectionMatrix::<f64>::random(k, rank, &mut rng).map_err(lib_failure)?;
            let r = pairing_index(&bott_loop(&p), t, &triple).map_err(lib_failure)?;
            let ok = r.result.index == p.rank();
            failed += usize::from(!ok);
            let _ = writeln!(
                out,
                "rank={rank} sample={sample} index={} gap={} {}",
                r.result.index,
                num(r.result.gap),
                if ok { "ok" } else { "MISMATCH" }
            );
        }
    }
    let _ = writeln!(out, "result: {}", if failed == 0 { "PASS" } else { "FAIL" });
    print!("{out}");
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CHECK, format!("{failed} roundtrip check(s) failed")))
    }
}

fn commuting_pair(n: usize, seed: u64) -> (UnitaryMatrix<f64>, UnitaryMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_unitary::<f64, _>(n, &mut rng);
    let mut phases = || -> UnitaryMatrix<f64> {
        let p: Vec<_> = (0..n).map(|_| circle_point(rng.random::<f64>())).collect();
        UnitaryMatrix::from_phases(&p).expect("unit phases")
    };
    let (a, b) = (phases(), phases());
    let u = UnitaryMatrix::new(w.conjugate(a.matrix()).expect("same size")).expect("conjugate of a unitary");
    let v = UnitaryMatrix::new(w.conjugate(b.matrix()).expect("same size")).expect("conjugate of a unitary");
    (u, v)
}

pub fn nearest(seed: u64, n: usize, restarts: usize, max_iters: usize, commuting_test: bool) -> Result<(), Failure> {
    if n < 2 || restarts == 0 || max_iters == 0 {
        return Err(Failure::new(EXIT_USAGE, "--n must be at least 2; --restarts and --max-iters positive"));
    }
    let (label, u, v) = if commuting_test {
        let (u, v) = commuting_pair(n, seed);
        ("random commuting", u, v)
    } else {
        let (u, v) = voiculescu_pair::<f64>(n).map_err(lib_failure)?;
        ("voiculescu", u, v)
    };
    let triple = SymbolTriple::<f64>::smoothstep();
    let opts = NearestOptions {
        max_iters,
        restarts,
        seed,
    };
    let near = nearest_commuting(&u, &v, &opts).map_err(lib_failure)?;
    let mut out = String::new();
    header(&mut out, "nearest", seed);
    let _ = writeln!(out, "pair: {label} n={n}");
    let _ = writeln!(out, "triple: {}", triple.name());
    let epsilon = match obstruction_lower_bound(&u, &v, &triple) {
        Ok(b) => {
            let _ = writeln!(out, "index: {}", b.index);
            let _ = writeln!(out, "gap: {}", num(b.gap_used));
            let _ = writeln!(out, "lip_const: {}", num(b.lip_const));
            b.epsilon_lower
        }
        Err(Error::GapClosed { gap, .. }) => {
            let lip = loring_lipschitz_constant(&triple).map_err(lib_failure)?;
            let _ = writeln!(out, "index: undefined (gap {} not certified)", num(gap));
            let _ = writeln!(out, "lip_const: {}", num(lip));
            0.0
        }
        Err(e) => return Err(lib_failure(e)),
    };
    let ok = near.distance >= epsilon;
    let _ = writeln!(out, "epsilon_lower: {}", num(epsilon));
    let _ = writeln!(out, "heuristic_distance: {}", num(near.distance));
    let _ = writeln!(out, "approximant_commutator: {}", num(near.pair.commutator_norm().map_err(lib_failure)?));
    let _ = writeln!(out, "converged: {}", near.converged);
    let _ = writeln!(out, "best_restart: {}", near.restart);
    let _ = writeln!(out, "result: {}", if ok { "PASS" } else { "FAIL" });
    print!("{out}");
    if ok {
        Ok(())
    } else {
        Err(Failure::new(EXIT_CHECK, "heuristic distance below the certified lower bound"))
    }
}

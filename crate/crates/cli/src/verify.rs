//! Verification suites: each runs the module-level identities for one
//! theme (twist exactness, the vanishing lemma, the orthogonality
//! proposition, the symplectic form, the mapping class action, free
//! mode) and emits a RunReport plus a CSV of estimates.
//!
//! Every reported number is a deterministic function of the config and
//! seed; timing is the only field that varies between runs.

use crate::config::{ExperimentConfig, Resolved};
use crate::run::{self, RunError};
use crate::stats;
use charvar::cohomology::{
    coboundary_space, cocycle_space, cup_symplectic, relator_derivative_error, symplectic_matrix,
    CohomError,
};
use charvar::observables::{
    inner_product, mc_mean, normalized_trace, trace_function, trace_values, twist_averaged_mean,
    variance, Estimate, Estimator, LoopTuple, ObsError,
};
use charvar::rep::{mcg_act, twist, RepError, SampleBatch};
use charvar::unitary::{su_basis, unit_root};
use charvar::words::{pair_character, CenterCharacter, Letter, Presentation, Word, WordError};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite `{0}` (expected twist|lemma|orthogonality|symplectic|mcg|free)")]
    UnknownSuite(String),
    #[error("suite `{suite}` needs a {needs} presentation")]
    WrongPresentation { suite: &'static str, needs: &'static str },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Observable(#[from] ObsError),
    #[error(transparent)]
    Cohomology(#[from] CohomError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Twist,
    Lemma,
    Orthogonality,
    Symplectic,
    Mcg,
    Free,
}

impl Suite {
    pub fn parse(text: &str) -> Result<Suite, VerifyError> {
        Ok(match text {
            "twist" => Suite::Twist,
            "lemma" => Suite::Lemma,
            "orthogonality" => Suite::Orthogonality,
            "symplectic" => Suite::Symplectic,
            "mcg" => Suite::Mcg,
            "free" => Suite::Free,
            other => return Err(VerifyError::UnknownSuite(other.into())),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Twist => "twist",
            Suite::Lemma => "lemma",
            Suite::Orthogonality => "orthogonality",
            Suite::Symplectic => "symplectic",
            Suite::Mcg => "mcg",
            Suite::Free => "free",
        }
    }

    pub fn all() -> [Suite; 6] {
        [
            Suite::Twist,
            Suite::Lemma,
            Suite::Orthogonality,
            Suite::Symplectic,
            Suite::Mcg,
            Suite::Free,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Flag,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Flag => "flag",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtMost,
    AtLeast,
}

/// One verification check: pass/fail against a pinned threshold, or an
/// advisory flag.
#[derive(Clone, Debug, Serialize)]
pub struct TestRecord {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub threshold: f64,
    pub direction: Direction,
}

fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> TestRecord {
    TestRecord {
        name: name.into(),
        status: if measured <= threshold {
            Status::Pass
        } else {
            Status::Fail
        },
        measured,
        threshold,
        direction: Direction::AtMost,
    }
}

fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> TestRecord {
    TestRecord {
        name: name.into(),
        status: if measured >= threshold {
            Status::Pass
        } else {
            Status::Fail
        },
        measured,
        threshold,
        direction: Direction::AtLeast,
    }
}

fn flag_if_above(name: impl Into<String>, measured: f64, threshold: f64) -> TestRecord {
    TestRecord {
        name: name.into(),
        status: if measured <= threshold {
            Status::Pass
        } else {
            Status::Flag
        },
        measured,
        threshold,
        direction: Direction::AtMost,
    }
}

/// One row of the estimates CSV.
#[derive(Clone, Debug)]
pub struct EstimateRow {
    pub test: String,
    pub observable: String,
    pub estimator: &'static str,
    pub value: Complex64,
    pub std_error: f64,
    pub count: usize,
    pub threshold: f64,
    pub status: Status,
}

impl EstimateRow {
    fn new(
        test: impl Into<String>,
        observable: impl Into<String>,
        estimator: &'static str,
        est: &Estimate,
        threshold: f64,
        status: Status,
    ) -> Self {
        EstimateRow {
            test: test.into(),
            observable: observable.into(),
            estimator,
            value: est.value,
            std_error: est.std_error,
            count: est.count,
            threshold,
            status,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: u32,
    pub suite: String,
    pub config: ExperimentConfig,
    pub acceptance_rate: f64,
    pub tests: Vec<TestRecord>,
    pub timing_secs: f64,
}

pub struct VerifyOutcome {
    pub report: RunReport,
    pub rows: Vec<EstimateRow>,
    pub report_path: PathBuf,
    pub csv_path: PathBuf,
    pub failed: bool,
}

/// 17 significant digits, bit-exact and diffable.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_estimates_csv(
    path: &PathBuf,
    suite: Suite,
    rows: &[EstimateRow],
) -> Result<(), VerifyError> {
    let mut out = String::new();
    out.push_str("suite,test,observable,estimator,re,im,std_error,count,threshold,status\n");
    for row in rows {
        writeln!(
            out,
            "{},{},\"{}\",{},{},{},{},{},{},{}",
            suite.as_str(),
            row.test,
            row.observable,
            row.estimator,
            fmt_f64(row.value.re),
            fmt_f64(row.value.im),
            fmt_f64(row.std_error),
            row.count,
            fmt_f64(row.threshold),
            row.status.as_str()
        )
        .expect("write to string");
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_estimates_json(path: &PathBuf, rows: &[EstimateRow]) -> Result<(), VerifyError> {
    let records: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            serde_json::json!({
                "observable": row.observable,
                "value": [row.value.re, row.value.im],
                "std_error": row.std_error,
                "count": row.count,
                "estimator": row.estimator,
            })
        })
        .collect();
    std::fs::write(path, serde_json::to_string_pretty(&records)?)?;
    Ok(())
}

/// Sigma distance `|value| / std_error`, with the convention that an
/// exactly-zero estimate with zero spread sits at distance zero.
fn sigma_distance(est: &Estimate) -> f64 {
    if est.std_error == 0.0 {
        if est.value.norm() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        est.value.norm() / est.std_error
    }
}

fn generator_loops(
    presentation: &Presentation,
    n: u32,
) -> Result<Vec<(String, LoopTuple)>, ObsError> {
    (0..presentation.generator_count())
        .map(|j| {
            let name = presentation.generator_name(j);
            LoopTuple::single(Word::generator(j), presentation, n).map(|t| (name, t))
        })
        .collect()
}

/// Deterministic random loop tuples (1-2 loops, total length <= 12) from
/// the auxiliary stream; optionally constrained to nonzero total class.
fn random_tuples(
    resolved: &Resolved,
    count: usize,
    require_nonzero_class: bool,
) -> Result<Vec<(String, LoopTuple)>, ObsError> {
    let cfg = &resolved.config;
    let p = &cfg.presentation;
    let k = p.generator_count();
    let mut rng = run::stream_rng(cfg.seed, 0);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 1000 {
        attempts += 1;
        let pieces = if rng.gen_bool(0.5) { 1 } else { 2 };
        let total_len = rng.gen_range(2..=12usize);
        let mut loops = Vec::new();
        let mut remaining = total_len;
        for piece in 0..pieces {
            let len = if piece + 1 == pieces {
                remaining
            } else {
                rng.gen_range(1..remaining.max(2))
            };
            remaining = remaining.saturating_sub(len);
            let word = Word::from_letters(
                (0..len).map(|_| Letter::new(rng.gen_range(0..k), rng.gen_bool(0.5))),
            );
            if !word.is_identity() {
                loops.push(word);
            }
        }
        if loops.is_empty() {
            continue;
        }
        let tuple = LoopTuple::new(loops, p, cfg.n as u32)?;
        if require_nonzero_class && tuple.class().is_zero() {
            continue;
        }
        out.push((format!("rand-{}", out.len() + 1), tuple));
    }
    Ok(out)
}

fn all_characters(resolved: &Resolved) -> Vec<CenterCharacter> {
    let k = resolved.config.presentation.generator_count();
    CenterCharacter::enumerate(k, resolved.config.n as u32)
}

// ---------------------------------------------------------------------
// twist suite
// ---------------------------------------------------------------------

fn suite_twist(
    resolved: &Resolved,
    batch: &SampleBatch,
) -> Result<(Vec<TestRecord>, Vec<EstimateRow>), VerifyError> {
    let tol = resolved.config.tolerances;
    let p = &resolved.config.presentation;
    let n = resolved.config.n as u32;
    let chars = all_characters(resolved);
    let mut tests = Vec::new();
    let mut rows = Vec::new();

    // Defect preservation, exact by the center-exponent bookkeeping.
    if p.is_surface() {
        let used = batch.samples.len().min(1000);
        let mut worst: f64 = 0.0;
        for rho in &batch.samples[..used] {
            let defect = rho.relator_defect()?;
            for u in &chars {
                let twisted = twist(rho, u)?;
                worst = worst.max((twisted.relator_defect()? - defect).abs());
            }
        }
        tests.push(at_most("twist-defect-preservation", worst, tol.twist_defect));
    }

    // Additivity of the action, entrywise.
    {
        let used = batch.samples.len().min(20);
        let mut worst: f64 = 0.0;
        let pair_cap = 200usize;
        let mut pairs = 0usize;
        'outer: for u in &chars {
            for v in &chars {
                if pairs >= pair_cap {
                    break 'outer;
                }
                pairs += 1;
                let sum = u.add(v)?;
                for rho in &batch.samples[..used] {
                    let lhs = twist(&twist(rho, u)?, v)?;
                    let rhs = twist(rho, &sum)?;
                    for j in 0..rho.generator_count() {
                        let diff = (lhs.matrix(j) - rhs.matrix(j)).norm();
                        worst = worst.max(diff);
                    }
                }
            }
        }
        tests.push(at_most("twist-additivity", worst, tol.twist_additivity));
    }

    // Transformation law of trace functions.
    {
        let mut loops = generator_loops(p, n)?;
        loops.extend(resolved.loops.clone());
        loops.extend(random_tuples(resolved, 10, false)?);
        let used = batch.samples.len().min(500);
        let mut worst: f64 = 0.0;
        for (_, gamma) in &loops {
            for u in &chars {
                let phase = unit_root(n, pair_character(u, gamma.class())?);
                for rho in &batch.samples[..used] {
                    let twisted = twist(rho, u)?;
                    let lhs = trace_function(&twisted, gamma);
                    let rhs = phase * trace_function(rho, gamma);
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        tests.push(at_most(
            "twist-transformation-law",
            worst,
            tol.transformation_law,
        ));

        // Twist-averaged means vanish exactly on nonzero classes.
        let mut worst_ta: f64 = 0.0;
        for (name, gamma) in &loops {
            if gamma.class().is_zero() {
                continue;
            }
            let est = twist_averaged_mean(batch, gamma)?;
            worst_ta = worst_ta.max(est.value.norm());
            rows.push(EstimateRow::new(
                "twist-averaged-mean",
                format!("{name}: {}", gamma.canonical_string(p)),
                Estimator::TwistAveraged.as_str(),
                &est,
                tol.twist_average,
                if est.value.norm() <= tol.twist_average {
                    Status::Pass
                } else {
                    Status::Fail
                },
            ));
        }
        tests.push(at_most("twist-averaged-exactness", worst_ta, tol.twist_average));
    }

    Ok((tests, rows))
}

// ---------------------------------------------------------------------
// lemma suite
// ---------------------------------------------------------------------

fn lemma_loops(resolved: &Resolved) -> Result<Vec<(String, LoopTuple)>, VerifyError> {
    let p = &resolved.config.presentation;
    let n = resolved.config.n as u32;
    let mut loops = generator_loops(p, n)?;
    for (name, tuple) in &resolved.loops {
        if !tuple.class().is_zero() {
            loops.push((name.clone(), tuple.clone()));
        }
    }
    loops.extend(random_tuples(resolved, 10, true)?);
    Ok(loops)
}

fn suite_lemma(
    resolved: &Resolved,
    batch: &SampleBatch,
) -> Result<(Vec<TestRecord>, Vec<EstimateRow>), VerifyError> {
    let tol = resolved.config.tolerances;
    let p = &resolved.config.presentation;
    let mut tests = Vec::new();
    let mut rows = Vec::new();
    let loops = lemma_loops(resolved)?;

    for (name, gamma) in &loops {
        let est = mc_mean(batch, gamma)?;
        let distance = sigma_distance(&est);
        let ok = distance <= tol.sigma_gate;
        rows.push(EstimateRow::new(
            format!("lemma-mean-{name}"),
            gamma.canonical_string(p),
            Estimator::Plain.as_str(),
            &est,
            tol.sigma_gate,
            if ok { Status::Pass } else { Status::Fail },
        ));
        tests.push(at_most(format!("lemma-mean-{name}"), distance, tol.sigma_gate));

        let ta = twist_averaged_mean(batch, gamma)?;
        rows.push(EstimateRow::new(
            format!("lemma-exact-{name}"),
            gamma.canonical_string(p),
            Estimator::TwistAveraged.as_str(),
            &ta,
            tol.twist_average,
            if ta.value.norm() <= tol.twist_average {
                Status::Pass
            } else {
                Status::Fail
            },
        ));
        tests.push(at_most(
            format!("lemma-exact-{name}"),
            ta.value.norm(),
            tol.twist_average,
        ));
    }

    // Histogram material for the plot stage: per-sample values of the
    // first generator trace.
    if let Some((name, gamma)) = loops.first() {
        let values = trace_values(batch, gamma)?;
        let mut text = String::from("index,re,im\n");
        for (i, v) in values.iter().enumerate() {
            writeln!(text, "{i},{},{}", fmt_f64(v.re), fmt_f64(v.im)).expect("write");
        }
        std::fs::create_dir_all(&resolved.config.output)?;
        std::fs::write(
            resolved.config.output.join(format!("values-{name}.csv")),
            text,
        )?;
    }

    // Epsilon sweep: smaller batches at adversarial tolerances; the
    // exact identities must hold at every epsilon.
    if !resolved.config.epsilon_sweep.is_empty() && p.is_surface() {
        let sweep_samples = resolved.config.samples.min(300).max(1);
        let mut worst_exact: f64 = 0.0;
        let mut sweep_csv = String::from("epsilon,observable,re,im,std_error,count\n");
        for (i, &eps) in resolved.config.epsilon_sweep.iter().enumerate() {
            let stream_base = run::STREAM_FRESH_BASE + ((i as u64 + 1) << 20);
            let sweep_batch = run::sample_batch(
                resolved,
                resolved.config.seed,
                sweep_samples,
                stream_base,
                Some(eps),
            )?;
            for (name, gamma) in &loops {
                let est = mc_mean(&sweep_batch, gamma)?;
                writeln!(
                    sweep_csv,
                    "{},\"{}\",{},{},{},{}",
                    fmt_f64(eps),
                    gamma.canonical_string(p),
                    fmt_f64(est.value.re),
                    fmt_f64(est.value.im),
                    fmt_f64(est.std_error),
                    est.count
                )
                .expect("write");
                rows.push(EstimateRow::new(
                    format!("lemma-sweep-{name}"),
                    format!("{} @ eps={eps}", gamma.canonical_string(p)),
                    Estimator::Plain.as_str(),
                    &est,
                    tol.sigma_gate,
                    if sigma_distance(&est) <= tol.sigma_gate {
                        Status::Pass
                    } else {
                        Status::Fail
                    },
                ));
                let ta = twist_averaged_mean(&sweep_batch, gamma)?;
                worst_exact = worst_exact.max(ta.value.norm());
            }
        }
        std::fs::create_dir_all(&resolved.config.output)?;
        std::fs::write(resolved.config.output.join("sweep-lemma.csv"), sweep_csv)?;
        tests.push(at_most("lemma-exact-sweep", worst_exact, tol.twist_average));
    }

    Ok((tests, rows))
}

// ---------------------------------------------------------------------
// orthogonality suite (the reducibility proposition)
// ---------------------------------------------------------------------

fn proposition_tuples(
    presentation: &Presentation,
    n: u32,
) -> Result<Vec<(String, LoopTuple)>, ObsError> {
    let mut out = Vec::new();
    match presentation {
        Presentation::Surface { .. } => {
            let a1 = Word::generator(0);
            let b1 = Word::generator(1);
            out.push((
                "commutator".to_string(),
                LoopTuple::single(a1.commutator(&b1), presentation, n)?,
            ));
            out.push((
                format!("a1-x{n}"),
                LoopTuple::new(vec![a1; n as usize], presentation, n)?,
            ));
        }
        Presentation::Free { .. } => {
            let x1 = Word::generator(0);
            out.push((
                format!("x1-x{n}"),
                LoopTuple::new(vec![x1; n as usize], presentation, n)?,
            ));
        }
    }
    Ok(out)
}

fn suite_orthogonality(
    resolved: &Resolved,
    batch: &SampleBatch,
) -> Result<(Vec<TestRecord>, Vec<EstimateRow>), VerifyError> {
    let tol = resolved.config.tolerances;
    let p = &resolved.config.presentation;
    let n = resolved.config.n as u32;
    let mut tests = Vec::new();
    let mut rows = Vec::new();

    let gammas = proposition_tuples(p, n)?;
    let alphas: Vec<(String, Word)> = (0..p.generator_count())
        .map(|j| (p.generator_name(j), Word::generator(j)))
        .collect();

    for (gname, gamma) in &gammas {
        // The trace really is a nonconstant function: positive variance.
        let var = variance(batch, gamma)?;
        rows.push(EstimateRow::new(
            format!("variance-{gname}"),
            gamma.canonical_string(p),
            Estimator::Plain.as_str(),
            &var,
            tol.sigma_gate,
            if sigma_distance(&var) >= tol.sigma_gate {
                Status::Pass
            } else {
                Status::Fail
            },
        ));
        tests.push(at_least(
            format!("variance-{gname}"),
            sigma_distance(&var),
            tol.sigma_gate,
        ));

        // Twist-averaged <t_hat_gamma, t_alpha> vanishes exactly.
        let mut worst: f64 = 0.0;
        for (aname, alpha) in &alphas {
            let est = inner_product(batch, gamma, alpha, true, Estimator::TwistAveraged)?;
            worst = worst.max(est.value.norm());
            rows.push(EstimateRow::new(
                format!("orthogonal-{gname}-{aname}"),
                format!("<t^_{{{gname}}}, t_{aname}>"),
                Estimator::TwistAveraged.as_str(),
                &est,
                tol.inner_product_exact,
                if est.value.norm() <= tol.inner_product_exact {
                    Status::Pass
                } else {
                    Status::Fail
                },
            ));
        }
        tests.push(at_most(
            format!("orthogonality-{gname}"),
            worst,
            tol.inner_product_exact,
        ));

        // Centering: <t_hat_gamma, 1> = 0.
        let hat = normalized_trace(batch, gamma)?;
        let centered: Vec<Complex64> = batch.samples.iter().map(|r| hat.eval(r)).collect();
        let centered_mean = Estimate::from_values(&centered)?;
        tests.push(at_most(
            format!("centered-{gname}"),
            centered_mean.value.norm() * resolved.config.n as f64,
            tol.centering * resolved.config.n as f64,
        ));
    }

    // The comparison vectors t_alpha have positive norm.
    for (aname, alpha) in &alphas {
        let tuple = LoopTuple::single(alpha.clone(), p, n)?;
        let est = inner_product(batch, &tuple, alpha, false, Estimator::Plain)?;
        rows.push(EstimateRow::new(
            format!("norm-{aname}"),
            format!("<t_{aname}, t_{aname}>"),
            Estimator::Plain.as_str(),
            &est,
            tol.sigma_gate,
            if sigma_distance(&est) >= tol.sigma_gate {
                Status::Pass
            } else {
                Status::Fail
            },
        ));
        tests.push(at_least(
            format!("norm-{aname}"),
            sigma_distance(&est),
            tol.sigma_gate,
        ));
    }

    Ok((tests, rows))
}

// ---------------------------------------------------------------------
// symplectic suite
// ---------------------------------------------------------------------

fn expected_dims(presentation: &Presentation, n: usize) -> (usize, usize, usize) {
    let d = n * n - 1;
    match presentation {
        Presentation::Surface { genus } => ((2 * genus - 1) * d, d, (2 * genus - 2) * d),
        Presentation::Free { rank } => (rank * d, d, rank.saturating_sub(1) * d),
    }
}

fn suite_symplectic(
    resolved: &Resolved,
) -> Result<(Vec<TestRecord>, Vec<EstimateRow>, f64), VerifyError> {
    let cfg = &resolved.config;
    let tol = cfg.tolerances;
    if !cfg.presentation.is_surface() {
        return Err(VerifyError::WrongPresentation {
            suite: "symplectic",
            needs: "surface",
        });
    }
    let count = cfg.samples.min(100).max(1);
    let polish_run = run::sample_polished(resolved, count, tol.polish_defect)?;
    let acceptance = polish_run.points.len() as f64 / polish_run.proposals as f64;
    let (ez, eb, eh) = expected_dims(&cfg.presentation, cfg.n);

    let mut dim_mismatches = 0usize;
    let mut reducible = 0usize;
    let mut worst_skew: f64 = 0.0;
    let mut worst_coboundary: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    let mut worst_movement: f64 = 0.0;
    let mut spectrum_csv = String::from("index,min_sv,max_sv,skew_residual\n");
    let mut dim_records = String::new();
    let genus = match cfg.presentation {
        Presentation::Surface { genus } => genus,
        Presentation::Free { .. } => unreachable!("checked above"),
    };

    for (idx, point) in polish_run.points.iter().enumerate() {
        let rho = &point.polished.representation;
        let z = cocycle_space(rho)?;
        let b = coboundary_space(rho)?;
        let sm = match symplectic_matrix(rho) {
            Ok(sm) => sm,
            Err(CohomError::ReducibleBasePoint { .. }) => {
                reducible += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let h = &sm.basis;
        if (z.len(), b.len(), h.len()) != (ez, eb, eh) {
            dim_mismatches += 1;
        }
        worst_skew = worst_skew.max(sm.skew_residual());
        let (min_sv, max_sv) = sm.singular_value_range();
        if max_sv > 0.0 {
            min_ratio = min_ratio.min(min_sv / max_sv);
        }
        for db in &b {
            for c in h {
                worst_coboundary = worst_coboundary.max(cup_symplectic(rho, db, c)?.abs());
            }
        }
        if point.initial_defect > 0.0 {
            worst_movement = worst_movement.max(point.polished.movement / point.initial_defect);
        }
        writeln!(
            spectrum_csv,
            "{idx},{},{},{}",
            fmt_f64(min_sv),
            fmt_f64(max_sv),
            fmt_f64(sm.skew_residual())
        )
        .expect("write");
        let record = serde_json::json!({
            "genus": genus,
            "n": cfg.n,
            "dims": {"z1": z.len(), "b1": b.len(), "h1": h.len()},
            "skew_residual": sm.skew_residual(),
            "min_sv": min_sv,
            "max_sv": max_sv,
        });
        writeln!(dim_records, "{record}").expect("write");
    }

    // Finite-difference consistency of the traversal derivative on the
    // first points: error(1e-3)/error(1e-4) should sit near 100.
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max: f64 = 0.0;
    let basis = su_basis(cfg.n);
    for point in polish_run.points.iter().take(2) {
        let rho = &point.polished.representation;
        for slot in 0..cfg.presentation.generator_count().min(4) {
            let direction = &basis[slot % basis.len()];
            let coarse = relator_derivative_error(rho, slot, direction, 1e-3)?;
            let fine = relator_derivative_error(rho, slot, direction, 1e-4)?;
            if fine > 0.0 {
                let ratio = coarse / fine;
                ratio_min = ratio_min.min(ratio);
                ratio_max = ratio_max.max(ratio);
            }
        }
    }

    std::fs::create_dir_all(&cfg.output)?;
    std::fs::write(cfg.output.join("svspectrum.csv"), spectrum_csv)?;
    std::fs::write(cfg.output.join("cohomology.jsonl"), dim_records)?;

    let tests = vec![
        at_most("cohomology-dim-mismatches", dim_mismatches as f64, 0.0),
        at_most("reducible-points", reducible as f64, 0.0),
        at_most("polish-failures", polish_run.failures as f64, 0.0),
        at_most("skew-residual", worst_skew, tol.skew_residual),
        at_most("coboundary-pairing", worst_coboundary, tol.coboundary_residual),
        at_least("sv-ratio", min_ratio, tol.sv_ratio),
        at_least("fd-ratio-low", ratio_min, tol.fd_ratio_low),
        at_most("fd-ratio-high", ratio_max, tol.fd_ratio_high),
        flag_if_above("polish-movement", worst_movement, tol.polish_movement),
    ];

    let rows = vec![
        EstimateRow::new(
            "cohomology-dims",
            format!("(z1, b1, h1) over {} points", polish_run.points.len()),
            "plain",
            &Estimate {
                value: Complex64::new(ez as f64, 0.0),
                std_error: 0.0,
                count: polish_run.points.len(),
            },
            0.0,
            if dim_mismatches == 0 {
                Status::Pass
            } else {
                Status::Fail
            },
        ),
        EstimateRow::new(
            "sv-ratio-min",
            "min sv / max sv of the H1 pairing",
            "plain",
            &Estimate {
                value: Complex64::new(min_ratio, 0.0),
                std_error: 0.0,
                count: polish_run.points.len(),
            },
            tol.sv_ratio,
            if min_ratio >= tol.sv_ratio {
                Status::Pass
            } else {
                Status::Fail
            },
        ),
    ];

    Ok((tests, rows, acceptance))
}

// ---------------------------------------------------------------------
// mcg suite
// ---------------------------------------------------------------------

fn suite_mcg(
    resolved: &Resolved,
    batch: &SampleBatch,
) -> Result<(Vec<TestRecord>, Vec<EstimateRow>), VerifyError> {
    let tol = resolved.config.tolerances;
    let p = &resolved.config.presentation;
    let n = resolved.config.n as u32;
    let mut tests = Vec::new();
    let mut rows = Vec::new();

    // Every shipped automorphism verifies against the presentation.
    let unverified = resolved
        .automorphisms
        .iter()
        .filter(|phi| !charvar::words::verify_automorphism(phi, p).all_ok())
        .count();
    tests.push(at_most("automorphisms-verified", unverified as f64, 0.0));

    // Defect preservation.
    if p.is_surface() {
        let used = batch.samples.len().min(1000);
        let mut worst: f64 = 0.0;
        for rho in &batch.samples[..used] {
            let defect = rho.relator_defect()?;
            for phi in &resolved.automorphisms {
                let acted = mcg_act(rho, phi)?;
                worst = worst.max((acted.relator_defect()? - defect).abs());
            }
        }
        tests.push(at_most("mcg-defect-preservation", worst, tol.mcg_defect));
    }

    // Functoriality: t_gamma(rho . phi) = t_{phi^-1 gamma}(rho).
    {
        let mut loops = generator_loops(p, n)?;
        loops.extend(resolved.loops.clone());
        loops.extend(random_tuples(resolved, 10, false)?);
        let used = batch.samples.len().min(200);
        let mut worst: f64 = 0.0;
        for phi in &resolved.automorphisms {
            let moved: Vec<LoopTuple> = loops
                .iter()
                .map(|(_, gamma)| {
                    LoopTuple::new(
                        gamma.loops().iter().map(|w| phi.apply_inverse(w)).collect(),
                        p,
                        n,
                    )
                })
                .collect::<Result<_, _>>()?;
            for rho in &batch.samples[..used] {
                let acted = mcg_act(rho, phi)?;
                for ((_, gamma), pulled) in loops.iter().zip(&moved) {
                    let lhs = trace_function(&acted, gamma);
                    let rhs = trace_function(rho, pulled);
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        tests.push(at_most("mcg-functoriality", worst, tol.mcg_functorial));
    }

    // Equivariance of inner products: estimates on the batch and on its
    // image under each generator agree within combined standard errors.
    {
        let gamma = LoopTuple::single(Word::generator(0), p, n)?;
        let alpha = Word::generator(0);
        let base = inner_product(batch, &gamma, &alpha, false, Estimator::Plain)?;
        let mut worst: f64 = 0.0;
        for phi in &resolved.automorphisms {
            let acted: Vec<charvar::rep::Representation> = batch
                .samples
                .iter()
                .map(|rho| mcg_act(rho, phi))
                .collect::<Result<_, _>>()?;
            let acted_batch = SampleBatch {
                samples: acted,
                ..batch.clone()
            };
            let moved = inner_product(&acted_batch, &gamma, &alpha, false, Estimator::Plain)?;
            let combined = base.std_error.hypot(moved.std_error);
            let distance = if combined == 0.0 {
                0.0
            } else {
                (moved.value - base.value).norm() / combined
            };
            worst = worst.max(distance);
            rows.push(EstimateRow::new(
                format!("mcg-equivariance-{}", phi.label()),
                format!("<t_{0}, t_{0}> after {1}", p.generator_name(0), phi.label()),
                Estimator::Plain.as_str(),
                &moved,
                tol.sigma_gate,
                if distance <= tol.sigma_gate {
                    Status::Pass
                } else {
                    Status::Fail
                },
            ));
        }
        tests.push(at_most("mcg-inner-equivariance", worst, tol.sigma_gate));
    }

    // Distributional invariance: Re t_{gen 1} on an acted batch against a
    // fresh batch, two-sample Kolmogorov-Smirnov below the critical
    // value.
    {
        let fresh = run::sample_batch(
            resolved,
            resolved.config.seed,
            batch.samples.len(),
            run::STREAM_FRESH_BASE,
            batch.epsilon,
        )?;
        let first = LoopTuple::single(Word::generator(0), p, n)?;
        let fresh_values: Vec<f64> = trace_values(&fresh, &first)?
            .iter()
            .map(|v| v.re)
            .collect();
        let critical = stats::ks_critical(tol.ks_alpha, batch.samples.len(), fresh.samples.len());
        let mut worst: f64 = 0.0;
        for phi in &resolved.automorphisms {
            let acted_values: Vec<f64> = batch
                .samples
                .iter()
                .map(|rho| {
                    let acted = mcg_act(rho, phi)?;
                    Ok::<f64, VerifyError>(trace_function(&acted, &first).re)
                })
                .collect::<Result<_, _>>()?;
            let d = stats::ks_statistic(&acted_values, &fresh_values);
            worst = worst.max(d);
            rows.push(EstimateRow::new(
                format!("ks-{}", phi.label()),
                format!("Re t_{} under {}", p.generator_name(0), phi.label()),
                "plain",
                &Estimate {
                    value: Complex64::new(d, 0.0),
                    std_error: 0.0,
                    count: batch.samples.len(),
                },
                critical,
                if d < critical { Status::Pass } else { Status::Fail },
            ));
        }
        tests.push(at_most("mcg-ks-invariance", worst, critical));
    }

    Ok((tests, rows))
}

// ---------------------------------------------------------------------
// free suite
// ---------------------------------------------------------------------

fn suite_free(
    resolved: &Resolved,
    batch: &SampleBatch,
) -> Result<(Vec<TestRecord>, Vec<EstimateRow>), VerifyError> {
    let tol = resolved.config.tolerances;
    let p = &resolved.config.presentation;
    let n = resolved.config.n as u32;
    if p.is_surface() {
        return Err(VerifyError::WrongPresentation {
            suite: "free",
            needs: "free",
        });
    }
    let mut tests = Vec::new();
    let mut rows = Vec::new();

    // Haar means of generator traces vanish.
    for j in 0..p.generator_count() {
        let name = p.generator_name(j);
        let tuple = LoopTuple::single(Word::generator(j), p, n)?;
        let est = mc_mean(batch, &tuple)?;
        let distance = sigma_distance(&est);
        rows.push(EstimateRow::new(
            format!("free-mean-{name}"),
            name.clone(),
            Estimator::Plain.as_str(),
            &est,
            tol.sigma_gate,
            if distance <= tol.sigma_gate {
                Status::Pass
            } else {
                Status::Fail
            },
        ));
        tests.push(at_most(format!("free-mean-{name}"), distance, tol.sigma_gate));
    }

    // Independence: <t_{x1}, t_{x2}> is zero within noise.
    {
        let x1 = LoopTuple::single(Word::generator(0), p, n)?;
        let x2 = Word::generator(1);
        let est = inner_product(batch, &x1, &x2, false, Estimator::Plain)?;
        let distance = sigma_distance(&est);
        rows.push(EstimateRow::new(
            "free-cross-inner",
            "<t_x1, t_x2>",
            Estimator::Plain.as_str(),
            &est,
            tol.sigma_gate,
            if distance <= tol.sigma_gate {
                Status::Pass
            } else {
                Status::Fail
            },
        ));
        tests.push(at_most("free-cross-inner", distance, tol.sigma_gate));
    }

    // Proposition witness in free mode.
    let gammas = proposition_tuples(p, n)?;
    for (gname, gamma) in &gammas {
        let var = variance(batch, gamma)?;
        tests.push(at_least(
            format!("free-variance-{gname}"),
            sigma_distance(&var),
            tol.sigma_gate,
        ));
        let mut worst: f64 = 0.0;
        for j in 0..p.generator_count() {
            let alpha = Word::generator(j);
            let est = inner_product(batch, gamma, &alpha, true, Estimator::TwistAveraged)?;
            worst = worst.max(est.value.norm());
            rows.push(EstimateRow::new(
                format!("free-orthogonal-{gname}-{}", p.generator_name(j)),
                format!("<t^_{{{gname}}}, t_{}>", p.generator_name(j)),
                Estimator::TwistAveraged.as_str(),
                &est,
                tol.inner_product_exact,
                if est.value.norm() <= tol.inner_product_exact {
                    Status::Pass
                } else {
                    Status::Fail
                },
            ));
        }
        tests.push(at_most(
            format!("free-orthogonality-{gname}"),
            worst,
            tol.inner_product_exact,
        ));
    }
    for j in 0..p.generator_count() {
        let name = p.generator_name(j);
        let alpha = Word::generator(j);
        let tuple = LoopTuple::single(alpha.clone(), p, n)?;
        let est = inner_product(batch, &tuple, &alpha, false, Estimator::Plain)?;
        tests.push(at_least(
            format!("free-norm-{name}"),
            sigma_distance(&est),
            tol.sigma_gate,
        ));
    }

    // Exact center-twist identities hold verbatim in free mode.
    {
        let chars = all_characters(resolved);
        let mut loops = generator_loops(p, n)?;
        loops.extend(random_tuples(resolved, 10, false)?);
        let used = batch.samples.len().min(300);
        let mut worst: f64 = 0.0;
        let mut worst_ta: f64 = 0.0;
        for (_, gamma) in &loops {
            for u in &chars {
                let phase = unit_root(n, pair_character(u, gamma.class())?);
                for rho in &batch.samples[..used] {
                    let twisted = twist(rho, u)?;
                    let lhs = trace_function(&twisted, gamma);
                    let rhs = phase * trace_function(rho, gamma);
                    worst = worst.max((lhs - rhs).norm());
                }
            }
            if !gamma.class().is_zero() {
                worst_ta = worst_ta.max(twist_averaged_mean(batch, gamma)?.value.norm());
            }
        }
        tests.push(at_most(
            "free-transformation-law",
            worst,
            tol.transformation_law,
        ));
        tests.push(at_most("free-twist-averaged", worst_ta, tol.twist_average));
    }

    // Nielsen moves act functorially.
    {
        let loops = generator_loops(p, n)?;
        let used = batch.samples.len().min(200);
        let mut worst: f64 = 0.0;
        for phi in &resolved.automorphisms {
            for rho in &batch.samples[..used] {
                let acted = mcg_act(rho, phi)?;
                for (_, gamma) in &loops {
                    let pulled = LoopTuple::new(
                        gamma.loops().iter().map(|w| phi.apply_inverse(w)).collect(),
                        p,
                        n,
                    )?;
                    let lhs = trace_function(&acted, gamma);
                    let rhs = trace_function(rho, &pulled);
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        tests.push(at_most("free-nielsen-functoriality", worst, tol.mcg_functorial));
    }

    Ok((tests, rows))
}

// ---------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------

pub fn run_verify(resolved: &Resolved, suite: Suite) -> Result<VerifyOutcome, VerifyError> {
    let start = std::time::Instant::now();
    let cfg = &resolved.config;
    let (tests, rows, acceptance_rate) = match suite {
        Suite::Symplectic => {
            let (tests, rows, acceptance) = suite_symplectic(resolved)?;
            (tests, rows, acceptance)
        }
        _ => {
            let batch = run::load_or_sample(resolved)?;
            let acceptance = batch.acceptance_rate();
            let (tests, rows) = match suite {
                Suite::Twist => suite_twist(resolved, &batch)?,
                Suite::Lemma => suite_lemma(resolved, &batch)?,
                Suite::Orthogonality => suite_orthogonality(resolved, &batch)?,
                Suite::Mcg => suite_mcg(resolved, &batch)?,
                Suite::Free => suite_free(resolved, &batch)?,
                Suite::Symplectic => unreachable!(),
            };
            (tests, rows, acceptance)
        }
    };

    let failed = tests.iter().any(|t| t.status == Status::Fail);
    let report = RunReport {
        version: 1,
        suite: suite.as_str().to_string(),
        config: cfg.clone(),
        acceptance_rate,
        tests,
        timing_secs: start.elapsed().as_secs_f64(),
    };

    std::fs::create_dir_all(&cfg.output)?;
    let report_path = cfg.output.join(format!("report-{}.json", suite.as_str()));
    let csv_path = cfg.output.join(format!("estimates-{}.csv", suite.as_str()));
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    write_estimates_csv(&csv_path, suite, &rows)?;
    write_estimates_json(
        &cfg.output.join(format!("estimates-{}.json", suite.as_str())),
        &rows,
    )?;

    Ok(VerifyOutcome {
        report,
        rows,
        report_path,
        csv_path,
        failed,
    })
}

//! Deterministic parallel sampling.
//!
//! One ChaCha stream per logical sample slot: slot `k` draws from stream
//! `k + STREAM_SAMPLE_BASE` of the master seed, so the realized batch is
//! a function of `(seed, samples)` alone, independent of thread count
//! and scheduling.

use crate::config::Resolved;
use charvar::rep::{polish, sample_free, sample_representation, Polished, RepError, SampleBatch};
use charvar::words::Presentation;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::BufWriter;
use std::path::PathBuf;
use thiserror::Error;

/// Stream 0 is reserved for auxiliary draws (random words and the like);
/// sample slots start here.
pub const STREAM_SAMPLE_BASE: u64 = 1;

/// Disjoint stream region for the polished-point pipeline.
pub const STREAM_POLISH_BASE: u64 = 1 << 32;

/// Disjoint stream region for independently sampled comparison batches.
pub const STREAM_FRESH_BASE: u64 = 1 << 33;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("sampling produced no polished points")]
    NoPolishedPoints,
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn thread_pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Draws `samples` accepted points with per-slot streams. The result is
/// identical for any thread count.
pub fn sample_batch(
    resolved: &Resolved,
    seed: u64,
    samples: usize,
    stream_base: u64,
    epsilon_override: Option<f64>,
) -> Result<SampleBatch, RunError> {
    let cfg = &resolved.config;
    let presentation = cfg.presentation.clone();
    let epsilon = epsilon_override.or(cfg.epsilon);
    let pool = thread_pool(cfg.threads);
    let draws: Result<Vec<_>, RepError> = pool.install(|| {
        (0..samples)
            .into_par_iter()
            .map(|slot| {
                let mut rng = stream_rng(seed, stream_base + slot as u64);
                match &presentation {
                    Presentation::Surface { .. } => {
                        let draw = sample_representation(
                            &presentation,
                            cfg.n,
                            epsilon.expect("validated"),
                            &mut rng,
                            cfg.proposal_cap,
                        )?;
                        Ok((draw.representation, draw.defect, draw.proposals))
                    }
                    Presentation::Free { .. } => {
                        let rep = sample_free(&presentation, cfg.n, &mut rng)?;
                        Ok((rep, 0.0, 1))
                    }
                }
            })
            .collect()
    });
    let draws = draws?;
    let mut samples_out = Vec::with_capacity(draws.len());
    let mut defects = Vec::with_capacity(draws.len());
    let mut proposals = 0u64;
    for (rep, defect, tried) in draws {
        samples_out.push(rep);
        defects.push(defect);
        proposals += tried;
    }
    Ok(SampleBatch {
        presentation: cfg.presentation.clone(),
        n: cfg.n,
        epsilon: if cfg.presentation.is_surface() {
            epsilon
        } else {
            None
        },
        seed,
        proposals,
        samples: samples_out,
        defects,
    })
}

/// Samples the configured batch and writes it as JSON lines under the
/// output directory. Returns the batch and its path.
pub fn run_sample(resolved: &Resolved) -> Result<(SampleBatch, PathBuf), RunError> {
    let cfg = &resolved.config;
    let batch = sample_batch(resolved, cfg.seed, cfg.samples, STREAM_SAMPLE_BASE, None)?;
    std::fs::create_dir_all(&cfg.output)?;
    let path = resolved.batch_path();
    let file = std::fs::File::create(&path)?;
    batch.write_jsonl(BufWriter::new(file))?;
    Ok((batch, path))
}

/// Loads the configured batch if the file exists, otherwise samples and
/// writes it.
pub fn load_or_sample(resolved: &Resolved) -> Result<SampleBatch, RunError> {
    let path = resolved.batch_path();
    if path.exists() {
        let file = std::fs::File::open(&path)?;
        let batch = SampleBatch::read_jsonl(std::io::BufReader::new(file))?;
        return Ok(batch);
    }
    Ok(run_sample(resolved)?.0)
}

/// Evaluates trace observables over freshly drawn free-mode samples
/// without materializing a batch: slot `k` draws from stream
/// `k + stream_base`. Returns one value series per observable, in slot
/// order, so large-N estimates stay cheap in memory.
pub fn stream_free_values(
    resolved: &Resolved,
    count: usize,
    stream_base: u64,
    observables: &[charvar::observables::LoopTuple],
) -> Result<Vec<Vec<num_complex::Complex64>>, RunError> {
    let cfg = &resolved.config;
    let presentation = cfg.presentation.clone();
    let pool = thread_pool(cfg.threads);
    let per_slot: Result<Vec<Vec<num_complex::Complex64>>, RepError> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|slot| {
                let mut rng = stream_rng(cfg.seed, stream_base + slot as u64);
                let rep = sample_free(&presentation, cfg.n, &mut rng)?;
                Ok(observables
                    .iter()
                    .map(|gamma| charvar::observables::trace_function(&rep, gamma))
                    .collect())
            })
            .collect()
    });
    let per_slot = per_slot?;
    let mut series = vec![Vec::with_capacity(count); observables.len()];
    for row in per_slot {
        for (k, v) in row.into_iter().enumerate() {
            series[k].push(v);
        }
    }
    Ok(series)
}

/// A polished point together with its provenance for the movement flag.
pub struct PolishedPoint {
    pub polished: Polished,
    pub initial_defect: f64,
}

/// Samples `count` points below the polish admission defect and polishes
/// each onto the relator level set; failures are dropped and counted.
/// Uses its own stream region, so it never collides with batch slots.
pub fn sample_polished(
    resolved: &Resolved,
    count: usize,
    target_defect: f64,
) -> Result<PolishRun, RunError> {
    let cfg = &resolved.config;
    let presentation = cfg.presentation.clone();
    // Polish admits defects up to 0.5; cap the sampling tolerance there.
    let epsilon = cfg.epsilon.map(|e| e.min(0.5)).expect("surface config");
    let pool = thread_pool(cfg.threads);
    let results: Result<Vec<_>, RepError> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|slot| {
                let mut rng = stream_rng(cfg.seed, STREAM_POLISH_BASE + slot as u64);
                let draw = sample_representation(
                    &presentation,
                    cfg.n,
                    epsilon,
                    &mut rng,
                    cfg.proposal_cap,
                )?;
                Ok((draw.representation, draw.defect, draw.proposals))
            })
            .collect()
    });
    let mut points = Vec::new();
    let mut failures = 0usize;
    let mut proposals = 0u64;
    for (rep, defect, tried) in results? {
        proposals += tried;
        match polish(&rep, target_defect, 100) {
            Ok(polished) => points.push(PolishedPoint {
                polished,
                initial_defect: defect,
            }),
            Err(_) => failures += 1,
        }
    }
    if points.is_empty() {
        return Err(RunError::NoPolishedPoints);
    }
    Ok(PolishRun {
        points,
        failures,
        proposals,
    })
}

/// Outcome of the polished-point pipeline.
pub struct PolishRun {
    pub points: Vec<PolishedPoint>,
    pub failures: usize,
    pub proposals: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn resolved(threads: usize) -> Resolved {
        let cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({
            "presentation": {"kind": "surface", "genus": 2},
            "n": 2,
            "epsilon": 0.4,
            "samples": 24,
            "seed": 99,
            "threads": threads
        }))
        .unwrap();
        cfg.resolve().unwrap()
    }

    #[test]
    fn batches_are_thread_count_invariant() {
        let one = sample_batch(&resolved(1), 99, 24, STREAM_SAMPLE_BASE, None).unwrap();
        let many = sample_batch(&resolved(4), 99, 24, STREAM_SAMPLE_BASE, None).unwrap();
        assert_eq!(one.samples, many.samples);
        assert_eq!(one.defects, many.defects);
        assert_eq!(one.proposals, many.proposals);
    }

    #[test]
    fn free_batches_accept_everything() {
        let cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({
            "presentation": {"kind": "free", "rank": 2},
            "n": 2,
            "samples": 50,
            "seed": 5
        }))
        .unwrap();
        let resolved = cfg.resolve().unwrap();
        let batch = sample_batch(&resolved, 5, 50, STREAM_SAMPLE_BASE, None).unwrap();
        assert_eq!(batch.proposals, 50);
        assert_eq!(batch.acceptance_rate(), 1.0);
    }

    #[test]
    fn polished_pipeline_reaches_target() {
        let run = sample_polished(&resolved(0), 5, 1e-12).unwrap();
        assert_eq!(run.failures, 0);
        assert!(run.proposals >= 5);
        for p in &run.points {
            let defect = p.polished.representation.relator_defect().unwrap();
            assert!(defect <= 1e-12);
        }
    }
}

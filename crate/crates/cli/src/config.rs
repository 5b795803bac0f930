//! Experiment configuration: one JSON document drives sampling,
//! verification, and plotting. Overridable from the command line.

use charvar::observables::LoopTuple;
use charvar::words::{
    mcg_generators, nielsen_generators, verify_automorphism, Automorphism, Presentation, Word,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Word(#[from] charvar::words::WordError),
    #[error(transparent)]
    Observable(#[from] charvar::observables::ObsError),
}

fn default_proposal_cap() -> u64 {
    500_000_000
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Thresholds used by the verification suites. Every value can be
/// overridden from the config file; the defaults are the shipped
/// contract.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Twist must preserve the relator defect to this bound (it is
    /// bit-exact by construction).
    pub twist_defect: f64,
    /// Entrywise bound for additivity of the twist action.
    pub twist_additivity: f64,
    /// Transformation law of traces under twisting.
    pub transformation_law: f64,
    /// Twist-averaged means of nonzero-class tuples.
    pub twist_average: f64,
    /// Defect preservation under mapping class generators.
    pub mcg_defect: f64,
    /// Trace functoriality under mapping class generators.
    pub mcg_functorial: f64,
    /// Twist-averaged inner products forced to vanish by homology.
    pub inner_product_exact: f64,
    /// Batch mean of a normalized trace.
    pub centering: f64,
    /// Detection level in standard errors for Monte Carlo tests.
    pub sigma_gate: f64,
    /// Skew residual of the symplectic pairing matrix.
    pub skew_residual: f64,
    /// Scaled pairing of coboundaries against cocycles.
    pub coboundary_residual: f64,
    /// Smallest-to-largest singular value ratio of the pairing matrix.
    pub sv_ratio: f64,
    /// Target relator defect after polishing.
    pub polish_defect: f64,
    /// Flag (not fail) when polish moves the handle pair by more than
    /// this multiple of the initial defect.
    pub polish_movement: f64,
    /// Significance level of the two-sample Kolmogorov-Smirnov test.
    pub ks_alpha: f64,
    /// Accepted band for the finite-difference error ratio between step
    /// sizes 1e-3 and 1e-4 (quadratic decay sits near 100).
    pub fd_ratio_low: f64,
    pub fd_ratio_high: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            twist_defect: 1e-15,
            twist_additivity: 0.0,
            transformation_law: 1e-12,
            twist_average: 1e-15,
            mcg_defect: 1e-14,
            mcg_functorial: 1e-12,
            inner_product_exact: 1e-14,
            centering: 1e-12,
            sigma_gate: 4.0,
            skew_residual: 1e-10,
            coboundary_residual: 1e-8,
            sv_ratio: 1e-6,
            polish_defect: 1e-12,
            polish_movement: 10.0,
            ks_alpha: 0.01,
            fd_ratio_low: 30.0,
            fd_ratio_high: 300.0,
        }
    }
}

/// Automorphisms referenced by config: either the label of a shipped
/// generator (or `"all"`), or an explicit pair of substitution maps.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutomorphismSpec {
    Named(String),
    Custom {
        label: String,
        images: BTreeMap<String, String>,
        inverse_images: BTreeMap<String, String>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub presentation: Presentation,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Target number of accepted samples.
    pub samples: usize,
    #[serde(default = "default_proposal_cap")]
    pub proposal_cap: u64,
    pub seed: u64,
    /// Worker threads; 0 means one per core. Results never depend on it.
    #[serde(default)]
    pub threads: usize,
    /// Named loop tuples: each entry is a list of word strings.
    #[serde(default)]
    pub loops: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub automorphisms: Vec<AutomorphismSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Extra epsilons for the lemma suite's sweep (estimates and exact
    /// checks repeated on a small batch per value).
    #[serde(default)]
    pub epsilon_sweep: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Validates the document and resolves loops and automorphisms into
    /// their parsed forms.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        if self.samples == 0 {
            return Err(ConfigError::Invalid("samples must be >= 1".into()));
        }
        if self.n < 2 {
            return Err(ConfigError::Invalid(format!(
                "n must be >= 2 (got {})",
                self.n
            )));
        }
        if self.presentation.is_surface() {
            match self.epsilon {
                Some(e) if e > 0.0 => {}
                _ => {
                    return Err(ConfigError::Invalid(
                        "surface sampling requires epsilon > 0".into(),
                    ))
                }
            }
        }
        let mut loops = Vec::new();
        for (name, texts) in &self.loops {
            let words: Vec<Word> = texts
                .iter()
                .map(|t| self.presentation.parse_word(t))
                .collect::<Result<_, _>>()?;
            loops.push((
                name.clone(),
                LoopTuple::new(words, &self.presentation, self.n as u32)?,
            ));
        }
        let automorphisms = self.resolve_automorphisms()?;
        for phi in &automorphisms {
            let report = verify_automorphism(phi, &self.presentation);
            if !report.all_ok() {
                return Err(ConfigError::Invalid(format!(
                    "automorphism `{}` fails verification (relator ok: {}, invertible ok: {})",
                    phi.label(),
                    report.relator_ok,
                    report.invertible_ok
                )));
            }
        }
        Ok(Resolved {
            config: self.clone(),
            loops,
            automorphisms,
        })
    }

    fn shipped_automorphisms(&self) -> Result<Vec<Automorphism>, ConfigError> {
        Ok(match self.presentation {
            Presentation::Surface { genus } => mcg_generators(genus)?,
            Presentation::Free { rank } => nielsen_generators(rank)?,
        })
    }

    fn resolve_automorphisms(&self) -> Result<Vec<Automorphism>, ConfigError> {
        let shipped = self.shipped_automorphisms()?;
        if self.automorphisms.is_empty() {
            return Ok(shipped);
        }
        let mut out = Vec::new();
        for spec in &self.automorphisms {
            match spec {
                AutomorphismSpec::Named(name) if name == "all" => {
                    out.extend(shipped.iter().cloned());
                }
                AutomorphismSpec::Named(name) => {
                    let found = shipped.iter().find(|phi| phi.label() == name).cloned();
                    out.push(found.ok_or_else(|| {
                        ConfigError::Invalid(format!("unknown automorphism `{name}`"))
                    })?);
                }
                AutomorphismSpec::Custom {
                    label,
                    images,
                    inverse_images,
                } => {
                    let fwd = self.parse_image_map(images)?;
                    let bwd = self.parse_image_map(inverse_images)?;
                    out.push(Automorphism::new(label.clone(), fwd, bwd)?);
                }
            }
        }
        Ok(out)
    }

    fn parse_image_map(
        &self,
        map: &BTreeMap<String, String>,
    ) -> Result<Vec<Word>, ConfigError> {
        let k = self.presentation.generator_count();
        let mut images: Vec<Option<Word>> = vec![None; k];
        for (key, text) in map {
            let key_word = self.presentation.parse_word(key)?;
            let letter = match key_word.letters() {
                [l] if !l.inverse => *l,
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "image map key `{key}` is not a generator"
                    )))
                }
            };
            images[letter.index] = Some(self.presentation.parse_word(text)?);
        }
        Ok(images
            .into_iter()
            .enumerate()
            .map(|(j, w)| w.unwrap_or_else(|| Word::generator(j)))
            .collect())
    }
}

/// A validated configuration with parsed loops and automorphisms.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub loops: Vec<(String, LoopTuple)>,
    pub automorphisms: Vec<Automorphism>,
}

impl Resolved {
    pub fn presentation(&self) -> &Presentation {
        &self.config.presentation
    }

    pub fn batch_path(&self) -> PathBuf {
        self.config.output.join("batch.jsonl")
    }
}

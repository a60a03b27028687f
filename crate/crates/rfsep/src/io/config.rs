//! TOML experiment configuration: what to mix, how to sweep, and
//! optionally how to train. Unknown keys are rejected so typos fail
//! loudly instead of being silently ignored.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::SweepConfig;
use crate::io::frame_file::read_frames;
use crate::mixture::{derive_seed, split_dataset, InterferenceFrame, InterferenceSource, SoiKind, Split};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub window_len: usize,
    #[serde(default = "default_soi")]
    pub soi: SoiKind,
    pub interference: InterferenceSpec,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub train: Option<TrainSection>,
}

fn default_soi() -> SoiKind {
    SoiKind::Qpsk
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterferenceSpec {
    Gaussian,
    Framed {
        frame_len: usize,
    },
    Emi {
        burst_len: usize,
        duty_cycle: f64,
    },
    Dataset {
        /// Frame file path, resolved against the data directory when
        /// relative.
        path: String,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
        #[serde(default = "default_split")]
        split: SplitSpec,
    },
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_split() -> SplitSpec {
    SplitSpec::Test
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    Train,
    Test,
}

impl From<SplitSpec> for Split {
    fn from(s: SplitSpec) -> Split {
        match s {
            SplitSpec::Train => Split::Train,
            SplitSpec::Test => Split::Test,
        }
    }
}

impl InterferenceSpec {
    /// Instantiate the source; dataset frames are loaded from disk and
    /// partitioned deterministically in the experiment seed.
    pub fn build(&self, data_dir: &Path, seed: u64) -> Result<InterferenceSource> {
        match self {
            InterferenceSpec::Gaussian => Ok(InterferenceSource::Gaussian),
            InterferenceSpec::Framed { frame_len } => Ok(InterferenceSource::Framed {
                frame_len: *frame_len,
            }),
            InterferenceSpec::Emi {
                burst_len,
                duty_cycle,
            } => Ok(InterferenceSource::Emi {
                burst_len: *burst_len,
                duty_cycle: *duty_cycle,
            }),
            InterferenceSpec::Dataset {
                path,
                train_fraction,
                split,
            } => {
                let full = if Path::new(path).is_absolute() {
                    Path::new(path).to_path_buf()
                } else {
                    data_dir.join(path)
                };
                let name = full
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".into());
                let frames = read_frames(&full)?
                    .into_iter()
                    .enumerate()
                    .map(|(i, samples)| InterferenceFrame {
                        samples,
                        source_name: name.clone(),
                        frame_index: i,
                    })
                    .collect();
                let dataset = split_dataset(frames, *train_fraction, derive_seed(seed, 0x5111))?;
                Ok(InterferenceSource::Dataset {
                    dataset: std::sync::Arc::new(dataset),
                    split: (*split).into(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_grid")]
    pub sinr_grid_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_grid() -> Vec<f64> {
    (0..11).map(|i| -30.0 + 3.0 * i as f64).collect()
}

fn default_trials() -> usize {
    4
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            sinr_grid_db: default_grid(),
            trials: default_trials(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    Unet,
    Wavenet,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModelScale {
    /// Small models that train in minutes on a CPU.
    Toy,
    /// Full-size models matching the benchmark architectures.
    Benchmark,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub arch: ArchKind,
    /// Mixture SINR the model is trained at.
    pub sinr_db: f64,
    #[serde(default = "default_scale")]
    pub scale: ModelScale,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_steps")]
    pub max_steps: usize,
    #[serde(default = "default_val_every")]
    pub val_every: usize,
    #[serde(default = "default_val_examples")]
    pub val_examples: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
}

fn default_scale() -> ModelScale {
    ModelScale::Toy
}
fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    4
}
fn default_steps() -> usize {
    500
}
fn default_val_every() -> usize {
    50
}
fn default_val_examples() -> usize {
    8
}
fn default_patience() -> usize {
    5
}

impl TrainSection {
    pub fn to_train_config(&self) -> crate::nn::train::TrainConfig {
        crate::nn::train::TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_steps: self.max_steps,
            val_every: self.val_every,
            val_examples: self.val_examples,
            patience: self.patience,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_sweep_config(&self) -> SweepConfig {
        SweepConfig {
            sinr_grid_db: self.sweep.sinr_grid_db.clone(),
            trials: self.sweep.trials,
            window_len: self.window_len,
            soi_kind: self.soi,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
window_len = 2048

[interference]
kind = "gaussian"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.soi, SoiKind::Qpsk);
        assert_eq!(cfg.sweep.sinr_grid_db.len(), 11);
        assert_eq!(cfg.sweep.sinr_grid_db[0], -30.0);
        assert_eq!(cfg.sweep.trials, 4);
        assert!(cfg.train.is_none());
        let sweep = cfg.to_sweep_config();
        assert_eq!(sweep.window_len, 2048);
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
seed = 9
window_len = 4096
soi = "ofdm_qpsk"

[interference]
kind = "framed"
frame_len = 256

[sweep]
sinr_grid_db = [-12.0, -6.0, 0.0]
trials = 2

[train]
arch = "wavenet"
sinr_db = -10.0
learning_rate = 0.002
"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.soi, SoiKind::OfdmQpsk);
        let train = cfg.train.as_ref().unwrap();
        assert_eq!(train.arch, ArchKind::Wavenet);
        assert_eq!(train.scale, ModelScale::Toy);
        assert_eq!(train.batch_size, 4);
        let rendered = toml::to_string(&cfg).unwrap();
        let again = ExperimentConfig::parse(&rendered).unwrap();
        assert_eq!(again.sweep.sinr_grid_db, cfg.sweep.sinr_grid_db);
        assert_eq!(again.train.as_ref().unwrap().learning_rate, 0.002);
    }

    #[test]
    fn unknown_field_names_the_culprit() {
        let text = format!("bogus_knob = 3\n{MINIMAL}");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("bogus_knob"), "{err}");
    }

    #[test]
    fn load_reports_path_on_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "window_len = \"not a number\"").unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err().to_string();
        assert!(err.contains("exp.toml"), "{err}");
    }

    #[test]
    fn gaussian_source_builds() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        let src = cfg
            .interference
            .build(Path::new("/nonexistent"), cfg.seed)
            .unwrap();
        assert_eq!(src.label(), "gaussian");
    }

    #[test]
    fn dataset_source_round_trips_through_frame_file() {
        use crate::io::frame_file::write_frames;
        use crate::signal::{gen_complex_gaussian, seeded_rng};
        let dir = tempfile::tempdir().unwrap();
        let mut rng = seeded_rng(3);
        let frames: Vec<_> = (0..6).map(|_| gen_complex_gaussian(128, &mut rng)).collect();
        write_frames(&dir.path().join("bursts.rfch"), &frames).unwrap();
        let cfg = ExperimentConfig::parse(
            r#"
window_len = 64

[interference]
kind = "dataset"
path = "bursts.rfch"
train_fraction = 0.5
split = "train"
"#,
        )
        .unwrap();
        let src = cfg.interference.build(dir.path(), cfg.seed).unwrap();
        assert_eq!(src.label(), "bursts");
        let window = src.draw(64, 5).unwrap();
        assert_eq!(window.len(), 64);
        // Missing file surfaces an io error with the path.
        let err = cfg
            .interference
            .build(Path::new("/nonexistent"), 0)
            .unwrap_err()
            .to_string();
        assert!(err.contains("bursts.rfch"), "{err}");
    }
}

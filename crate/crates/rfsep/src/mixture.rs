//! Interference management and mixture synthesis.
//!
//! Mixtures follow the benchmark protocol: draw an interference window,
//! scale it by `1/kappa` for the target SINR (`kappa^2 = 10^(SINR/10)`),
//! rotate it by a random global phase and add it to the signal of interest.
//! Recorded interference is ingested elsewhere; two synthetic stand-ins
//! (a repeated pseudo-random frame and bursty chirps) keep the whole
//! pipeline self-contained.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ofdm::{modulate_ofdm, OfdmConfig};
use crate::qpsk::{modulate_qpsk_frame, QpskConfig};
use crate::signal::{gen_bits, gen_complex_gaussian, seeded_rng, BitStream, ComplexSignal};

/// Mix independent sub-streams out of one interface-level seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer over the combined word.
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One ingested interference recording.
#[derive(Debug, Clone)]
pub struct InterferenceFrame {
    pub samples: ComplexSignal,
    pub source_name: String,
    pub frame_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// A set of interference frames with a deterministic train/test partition.
#[derive(Debug, Clone)]
pub struct InterferenceDataset {
    pub frames: Vec<InterferenceFrame>,
    pub split: HashMap<usize, Split>,
}

impl InterferenceDataset {
    pub fn frames_in(&self, which: Split) -> Vec<&InterferenceFrame> {
        self.frames
            .iter()
            .filter(|f| self.split.get(&f.frame_index) == Some(&which))
            .collect()
    }
}

/// Partition frames into train/test, deterministically in `seed`.
pub fn split_dataset(
    frames: Vec<InterferenceFrame>,
    train_fraction: f64,
    seed: u64,
) -> Result<InterferenceDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(
            "train fraction must be in (0, 1)".into(),
        ));
    }
    if frames.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 frames to split".into(),
        ));
    }
    let n = frames.len();
    let train_count = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = frames.iter().map(|f| f.frame_index).collect();
    let mut rng = seeded_rng(seed);
    // Fisher-Yates
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut split = HashMap::new();
    for (pos, idx) in order.into_iter().enumerate() {
        split.insert(idx, if pos < train_count { Split::Train } else { Split::Test });
    }
    Ok(InterferenceDataset { frames, split })
}

/// Contiguous random window of `n` samples from a frame.
pub fn extract_window(frame: &InterferenceFrame, n: usize, seed: u64) -> Result<ComplexSignal> {
    let len = frame.samples.len();
    if len < n {
        return Err(Error::FrameTooShort {
            frame_len: len,
            window_len: n,
        });
    }
    let mut rng = seeded_rng(seed);
    let offset = rng.gen_range(0..=len - n);
    Ok(ComplexSignal::new(
        frame.samples.samples[offset..offset + n].to_vec(),
    ))
}

/// Shift a signal so its power-weighted spectral centroid lands on zero.
/// Returns the recentered signal and the applied normalized frequency
/// shift (cycles per sample).
pub fn frequency_recenter(signal: &ComplexSignal) -> Result<(ComplexSignal, f64)> {
    if signal.is_empty() {
        return Err(Error::NoSpectralContent);
    }
    let n = signal.len();
    let mut spectrum = signal.samples.clone();
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spectrum);
    let mut total = 0.0;
    let mut weighted = 0.0;
    for (k, z) in spectrum.iter().enumerate() {
        let p = z.norm_sqr();
        let mut f = k as f64 / n as f64;
        if f >= 0.5 {
            f -= 1.0;
        }
        total += p;
        weighted += p * f;
    }
    if total <= 0.0 {
        return Err(Error::NoSpectralContent);
    }
    // Quantize to the DFT grid: an integer-bin shift permutes the
    // spectrum without leakage, so re-applying the estimator is stable.
    let shift = (weighted / total * n as f64).round() / n as f64;
    let recentered = ComplexSignal::new(
        signal
            .samples
            .iter()
            .enumerate()
            .map(|(i, z)| z * Complex64::from_polar(1.0, -2.0 * PI * shift * i as f64))
            .collect(),
    );
    Ok((recentered, shift))
}

/// Which signal-of-interest family a mixture carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoiKind {
    Qpsk,
    OfdmQpsk,
}

impl SoiKind {
    pub fn label(&self) -> &'static str {
        match self {
            SoiKind::Qpsk => "qpsk",
            SoiKind::OfdmQpsk => "ofdm_qpsk",
        }
    }
}

/// Everything needed to re-derive one mixture example.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureRecipe {
    pub sinr_db: f64,
    pub window_len: usize,
    pub soi_kind: SoiKind,
    pub interference_source: String,
    pub seed: u64,
}

/// One (mixture, components, ground truth) tuple.
#[derive(Debug, Clone)]
pub struct MixtureExample {
    pub mixture: ComplexSignal,
    pub soi: ComplexSignal,
    pub interference: ComplexSignal,
    pub bits: BitStream,
    pub recipe: MixtureRecipe,
}

/// Scale and phase-rotate raw interference to hit the target SINR, then
/// add it to the signal of interest. `b_raw` is assumed unit power; the
/// phase is drawn once per example.
pub fn make_mixture(
    soi: &ComplexSignal,
    bits: &BitStream,
    b_raw: &ComplexSignal,
    recipe: &MixtureRecipe,
) -> Result<MixtureExample> {
    if soi.len() != b_raw.len() {
        return Err(Error::LengthMismatch {
            left: soi.len(),
            right: b_raw.len(),
        });
    }
    let kappa = 10f64.powf(recipe.sinr_db / 20.0);
    let mut rng = seeded_rng(derive_seed(recipe.seed, 0xB0));
    let theta = rng.gen_range(0.0..2.0 * PI);
    let factor = Complex64::from_polar(1.0 / kappa, theta);
    let mut interference = b_raw.clone();
    interference.scale(factor);
    let mixture = soi.add(&interference)?;
    Ok(MixtureExample {
        mixture,
        soi: soi.clone(),
        interference,
        bits: bits.clone(),
        recipe: recipe.clone(),
    }
    .validate()?)
}

impl MixtureExample {
    fn validate(self) -> Result<Self> {
        self.mixture.assert_finite()?;
        Ok(self)
    }

    /// Recompute the achieved SINR from the stored components.
    pub fn empirical_sinr_db(&self) -> f64 {
        10.0 * (self.soi.power() / self.interference.power()).log10()
    }
}

/// A fixed pseudo-random frame repeated to length, circularly shifted and
/// phase-rotated. Structured (periodic), hence learnable.
pub fn synth_interference_framed(frame_len: usize, total_len: usize, seed: u64) -> Result<ComplexSignal> {
    if frame_len == 0 || frame_len > total_len {
        return Err(Error::InvalidParameter(
            "frame length must be in 1..=total length".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let frame = gen_complex_gaussian(frame_len, &mut rng);
    let shift = rng.gen_range(0..total_len);
    let theta = rng.gen_range(0.0..2.0 * PI);
    let rot = Complex64::from_polar(1.0, theta);
    let mut out = Vec::with_capacity(total_len);
    for i in 0..total_len {
        out.push(frame.samples[((i + shift) % total_len) % frame_len] * rot);
    }
    let mut sig = ComplexSignal::new(out);
    sig.normalize_power()?;
    Ok(sig)
}

/// Bursty chirps at the given duty cycle, silent elsewhere, unit total
/// power.
pub fn synth_interference_emi(
    burst_len: usize,
    duty_cycle: f64,
    total_len: usize,
    seed: u64,
) -> Result<ComplexSignal> {
    if !(duty_cycle > 0.0 && duty_cycle <= 1.0) {
        return Err(Error::InvalidParameter("duty cycle must be in (0, 1]".into()));
    }
    if burst_len == 0 || total_len == 0 {
        return Err(Error::InvalidParameter("burst and total length must be positive".into()));
    }
    let period = ((burst_len as f64 / duty_cycle).round() as usize).max(burst_len);
    let mut rng = seeded_rng(seed);
    let start_offset = rng.gen_range(0..period);
    let mut out = vec![Complex64::new(0.0, 0.0); total_len];
    let mut burst_start = 0i64 - start_offset as i64;
    while burst_start < total_len as i64 {
        // Random chirp per burst: phase, center frequency, sweep rate.
        let phi0 = rng.gen_range(0.0..2.0 * PI);
        let f0 = rng.gen_range(-0.25..0.25);
        let sweep = rng.gen_range(-0.5..0.5) / burst_len as f64;
        for t in 0..burst_len {
            let n = burst_start + t as i64;
            if n >= 0 && (n as usize) < total_len {
                let tt = t as f64;
                let phase = phi0 + 2.0 * PI * (f0 * tt + 0.5 * sweep * tt * tt);
                out[n as usize] = Complex64::from_polar(1.0, phase);
            }
        }
        burst_start += period as i64;
    }
    let mut sig = ComplexSignal::new(out);
    sig.normalize_power()?;
    Ok(sig)
}

/// Where raw interference windows come from during synthesis and sweeps.
#[derive(Debug, Clone)]
pub enum InterferenceSource {
    /// White complex Gaussian, normalized to unit window power.
    Gaussian,
    /// Repeated pseudo-random frame, fresh frame per example.
    Framed { frame_len: usize },
    /// Bursty chirps.
    Emi { burst_len: usize, duty_cycle: f64 },
    /// Windows drawn from ingested recordings.
    Dataset { dataset: std::sync::Arc<InterferenceDataset>, split: Split },
}

impl InterferenceSource {
    pub fn label(&self) -> String {
        match self {
            InterferenceSource::Gaussian => "gaussian".into(),
            InterferenceSource::Framed { frame_len } => format!("framed{frame_len}"),
            InterferenceSource::Emi { .. } => "emi".into(),
            InterferenceSource::Dataset { dataset, .. } => dataset
                .frames
                .first()
                .map(|f| f.source_name.clone())
                .unwrap_or_else(|| "dataset".into()),
        }
    }

    /// Draw one unit-power interference window of length `n`.
    pub fn draw(&self, n: usize, seed: u64) -> Result<ComplexSignal> {
        match self {
            InterferenceSource::Gaussian => {
                let mut rng = seeded_rng(seed);
                let mut sig = gen_complex_gaussian(n, &mut rng);
                sig.normalize_power()?;
                Ok(sig)
            }
            InterferenceSource::Framed { frame_len } => {
                synth_interference_framed(*frame_len, n, seed)
            }
            InterferenceSource::Emi {
                burst_len,
                duty_cycle,
            } => synth_interference_emi(*burst_len, *duty_cycle, n, seed),
            InterferenceSource::Dataset { dataset, split } => {
                let frames = dataset.frames_in(*split);
                if frames.is_empty() {
                    return Err(Error::InvalidParameter(
                        "interference dataset split is empty".into(),
                    ));
                }
                let mut rng = seeded_rng(derive_seed(seed, 0xF1));
                let frame = frames[rng.gen_range(0..frames.len())];
                let mut window = extract_window(frame, n, derive_seed(seed, 0xF2))?;
                window.normalize_power()?;
                Ok(window)
            }
        }
    }
}

/// Synthesize a complete example from a recipe: generate the SOI, draw an
/// interference window, mix at the target SINR. Fully determined by the
/// recipe seed.
pub fn synthesize_example(
    recipe: &MixtureRecipe,
    source: &InterferenceSource,
) -> Result<MixtureExample> {
    let bits_seed = derive_seed(recipe.seed, 0x51);
    let interference_seed = derive_seed(recipe.seed, 0x52);
    let (soi, bits) = match recipe.soi_kind {
        SoiKind::Qpsk => {
            let cfg = QpskConfig::with_frame_len(recipe.window_len);
            let bits = gen_bits(cfg.bit_capacity(), bits_seed);
            (modulate_qpsk_frame(&bits, &cfg)?, bits)
        }
        SoiKind::OfdmQpsk => {
            let cfg = OfdmConfig::with_frame_len(recipe.window_len)?;
            let bits = gen_bits(cfg.bit_capacity(), bits_seed);
            let (sig, _) = modulate_ofdm(&bits, &cfg)?;
            (sig, bits)
        }
    };
    let b_raw = source.draw(recipe.window_len, interference_seed)?;
    make_mixture(&soi, &bits, &b_raw, recipe)
}

/// Random circular time shift and phase rotation of the interference;
/// the SOI and its bits are untouched.
pub fn augment(example: &MixtureExample, seed: u64) -> MixtureExample {
    let n = example.interference.len();
    let mut rng = seeded_rng(seed);
    let tau = rng.gen_range(0..n.max(1));
    let theta = rng.gen_range(0.0..2.0 * PI);
    let rot = Complex64::from_polar(1.0, theta);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        b.push(example.interference.samples[(i + tau) % n] * rot);
    }
    let interference = ComplexSignal::new(b);
    let mixture = example
        .soi
        .add(&interference)
        .expect("lengths equal by construction");
    MixtureExample {
        mixture,
        soi: example.soi.clone(),
        interference,
        bits: example.bits.clone(),
        recipe: example.recipe.clone(),
    }
}

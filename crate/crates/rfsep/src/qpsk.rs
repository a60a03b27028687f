//! Single-carrier QPSK generation and demodulation.
//!
//! A frame is built by Gray-mapping bit pairs onto the QPSK constellation
//! and linearly modulating them with a root-raised cosine pulse at `F`
//! samples per symbol, first symbol centered at offset `tau0`. Demodulation
//! runs the matched filter `g*[-n]`, samples at the symbol centers and
//! hard-decides per quadrant.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::signal::{BitStream, ComplexSignal};

/// Real-valued, even-symmetric, unit-energy pulse shaping filter.
#[derive(Debug, Clone)]
pub struct PulseShape {
    /// `span + 1` taps, symmetric about the center tap.
    pub taps: Vec<f64>,
    /// Samples per symbol the pulse was designed for.
    pub oversampling: usize,
    /// Roll-off factor in (0, 1].
    pub rolloff: f64,
    /// Two-sided extent in samples; tap k corresponds to offset k - span/2.
    pub span: usize,
}

impl PulseShape {
    pub fn center(&self) -> usize {
        self.span / 2
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// A single unit tap; modulation with it at F=1 is the identity map.
    pub fn unit_impulse() -> Self {
        Self {
            taps: vec![1.0],
            oversampling: 1,
            rolloff: 1.0,
            span: 0,
        }
    }
}

/// Closed-form root-raised cosine pulse sampled at integer offsets
/// `-span/2 ..= span/2`, with the removable singularities at `t = 0` and
/// `t = ±F/(4β)` filled by their analytic limits, then normalized to unit
/// energy.
pub fn rrc_pulse(oversampling: usize, rolloff: f64, span: usize) -> Result<PulseShape> {
    if oversampling < 1 {
        return Err(Error::InvalidParameter("oversampling must be >= 1".into()));
    }
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rolloff must be in (0, 1], got {rolloff}"
        )));
    }
    if span % 2 != 0 || span < 2 * oversampling {
        return Err(Error::InvalidParameter(format!(
            "span must be even and >= 2F, got {span}"
        )));
    }
    let f = oversampling as f64;
    let b = rolloff;
    let half = (span / 2) as i64;
    let mut taps = Vec::with_capacity(span + 1);
    for n in -half..=half {
        // t in symbol units.
        let t = n as f64 / f;
        let v = if n == 0 {
            1.0 - b + 4.0 * b / PI
        } else if (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-12 {
            (b / 2f64.sqrt())
                * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin()
                    + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
        } else {
            ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
                / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
        };
        taps.push(v / f.sqrt());
    }
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let norm = energy.sqrt();
    for t in &mut taps {
        *t /= norm;
    }
    Ok(PulseShape {
        taps,
        oversampling,
        rolloff,
        span,
    })
}

/// Parameters of one single-carrier QPSK frame.
#[derive(Debug, Clone)]
pub struct QpskConfig {
    /// Symbol interval in samples.
    pub oversampling: usize,
    /// Offset of the first symbol center, in `0..oversampling`.
    pub first_offset: usize,
    pub pulse: PulseShape,
    /// Frame length in samples.
    pub frame_len: usize,
}

impl QpskConfig {
    pub fn new(
        oversampling: usize,
        first_offset: usize,
        pulse: PulseShape,
        frame_len: usize,
    ) -> Result<Self> {
        if oversampling < 1 {
            return Err(Error::InvalidParameter("oversampling must be >= 1".into()));
        }
        if first_offset >= oversampling {
            return Err(Error::InvalidParameter(format!(
                "first symbol offset {first_offset} must be < oversampling {oversampling}"
            )));
        }
        if frame_len < oversampling {
            return Err(Error::InvalidParameter(
                "frame length must cover at least one symbol".into(),
            ));
        }
        Ok(Self {
            oversampling,
            first_offset,
            pulse,
            frame_len,
        })
    }

    /// Benchmark configuration: F=16, tau0=8, RRC beta=0.5 spanning 128
    /// samples, 40 960-sample frames.
    pub fn benchmark() -> Self {
        Self::with_frame_len(40_960)
    }

    /// Benchmark pulse and timing at an arbitrary frame length.
    pub fn with_frame_len(frame_len: usize) -> Self {
        Self::new(16, 8, rrc_pulse(16, 0.5, 128).unwrap(), frame_len).unwrap()
    }

    /// Number of symbols whose centers fall inside the frame.
    pub fn symbol_capacity(&self) -> usize {
        (self.frame_len - self.first_offset + self.oversampling - 1) / self.oversampling
    }

    /// Bits carried by a full frame (2 per QPSK symbol).
    pub fn bit_capacity(&self) -> usize {
        2 * self.symbol_capacity()
    }
}

/// A sequence of constellation points.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    pub symbols: Vec<Complex64>,
}

const QPSK_POINTS: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2), // 00
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2), // 01
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2), // 11
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2), // 10
];

/// Gray-map bit pairs onto unit-modulus QPSK points:
/// 00 -> (+1+j)/sqrt(2), 01 -> (-1+j)/sqrt(2),
/// 11 -> (-1-j)/sqrt(2), 10 -> (+1-j)/sqrt(2).
pub fn map_bits_qpsk(bits: &BitStream) -> Result<SymbolSequence> {
    if bits.len() % 2 != 0 {
        return Err(Error::OddBitCount);
    }
    let symbols = bits
        .bits
        .chunks_exact(2)
        .map(|pair| gray_pair_to_symbol(pair[0], pair[1]))
        .collect();
    Ok(SymbolSequence { symbols })
}

pub fn gray_pair_to_symbol(b0: u8, b1: u8) -> Complex64 {
    // Gray index order around the circle: 00, 01, 11, 10.
    let idx = match (b0, b1) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 1) => 2,
        _ => 3,
    };
    QPSK_POINTS[idx]
}

/// Quadrant decision followed by the inverse Gray map.
pub fn symbol_to_gray_pair(z: Complex64) -> (u8, u8) {
    match (z.re >= 0.0, z.im >= 0.0) {
        (true, true) => (0, 0),
        (false, true) => (0, 1),
        (false, false) => (1, 1),
        (true, false) => (1, 0),
    }
}

/// Linear modulation of a symbol sequence: the pulse is placed at
/// `n = l*F + tau0` for symbol `l` and truncated at the frame edges. The
/// output carries a `sqrt(F)` gain so a unit-energy pulse with unit-modulus
/// symbols yields a unit-power frame.
pub fn modulate_qpsk(symbols: &SymbolSequence, cfg: &QpskConfig) -> Result<ComplexSignal> {
    if symbols.symbols.is_empty() {
        return Err(Error::InvalidParameter("empty symbol sequence".into()));
    }
    if symbols.symbols.len() > cfg.symbol_capacity() {
        return Err(Error::InvalidParameter(format!(
            "{} symbols exceed frame capacity {}",
            symbols.symbols.len(),
            cfg.symbol_capacity()
        )));
    }
    let n_out = cfg.frame_len;
    let center = cfg.pulse.center() as i64;
    let gain = (cfg.oversampling as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); n_out];
    for (l, &a) in symbols.symbols.iter().enumerate() {
        let peak = (l * cfg.oversampling + cfg.first_offset) as i64;
        for (k, &g) in cfg.pulse.taps.iter().enumerate() {
            let n = peak + k as i64 - center;
            if n >= 0 && (n as usize) < n_out {
                out[n as usize] += a * (gain * g);
            }
        }
    }
    Ok(ComplexSignal::new(out))
}

/// Full single-carrier frame from bits at the given config.
pub fn modulate_qpsk_frame(bits: &BitStream, cfg: &QpskConfig) -> Result<ComplexSignal> {
    let expected = cfg.bit_capacity();
    if bits.len() != expected {
        return Err(Error::BitCountMismatch {
            expected,
            got: bits.len(),
        });
    }
    modulate_qpsk(&map_bits_qpsk(bits)?, cfg)
}

/// Matched-filter statistics at the symbol centers: correlate the received
/// frame with the (real, symmetric) pulse and read out `n = l*F + tau0`.
pub fn matched_filter_symbols(signal: &ComplexSignal, cfg: &QpskConfig) -> Result<SymbolSequence> {
    if signal.len() < cfg.frame_len {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            need: cfg.frame_len,
        });
    }
    let center = cfg.pulse.center() as i64;
    let n_sig = signal.len() as i64;
    let count = cfg.symbol_capacity();
    let mut symbols = Vec::with_capacity(count);
    for l in 0..count {
        let peak = (l * cfg.oversampling + cfg.first_offset) as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &g) in cfg.pulse.taps.iter().enumerate() {
            let n = peak + k as i64 - center;
            if n >= 0 && n < n_sig {
                acc += signal.samples[n as usize] * g;
            }
        }
        symbols.push(acc);
    }
    Ok(SymbolSequence { symbols })
}

/// Matched filter, optimal-point sampling, hard quadrant decisions,
/// inverse Gray map.
pub fn demod_qpsk(signal: &ComplexSignal, cfg: &QpskConfig) -> Result<BitStream> {
    let stats = matched_filter_symbols(signal, cfg)?;
    let mut bits = Vec::with_capacity(2 * stats.symbols.len());
    for z in stats.symbols {
        let (b0, b1) = symbol_to_gray_pair(z);
        bits.push(b0);
        bits.push(b1);
    }
    Ok(BitStream { bits })
}

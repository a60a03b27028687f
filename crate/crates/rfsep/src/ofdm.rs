//! OFDM-QPSK generation and demodulation.
//!
//! Each OFDM symbol is the inverse DFT of a QPSK symbol grid over `K`
//! subcarriers, prefixed by its last `Tcp` samples. Inactive subcarriers
//! carry the zero symbol. The receiver drops the prefix, applies a K-point
//! DFT and hard-decides the active bins.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::qpsk::{gray_pair_to_symbol, symbol_to_gray_pair, SymbolSequence};
use crate::signal::{BitStream, ComplexSignal};

#[derive(Debug, Clone)]
pub struct OfdmConfig {
    /// FFT size (total subcarriers).
    pub fft_size: usize,
    /// Cyclic-prefix length in samples.
    pub cp_len: usize,
    /// Sorted indices of active subcarriers, subset of `0..fft_size`.
    pub active: Vec<usize>,
    /// Number of OFDM symbols per frame.
    pub num_symbols: usize,
}

impl OfdmConfig {
    pub fn new(fft_size: usize, cp_len: usize, active: Vec<usize>, num_symbols: usize) -> Result<Self> {
        if active.is_empty() || active.len() > fft_size {
            return Err(Error::InvalidParameter(
                "active subcarrier set must be non-empty and within the FFT size".into(),
            ));
        }
        if active.iter().any(|&k| k >= fft_size) {
            return Err(Error::InvalidParameter(
                "active subcarrier index out of range".into(),
            ));
        }
        if active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "active subcarrier indices must be strictly increasing".into(),
            ));
        }
        if cp_len >= fft_size {
            return Err(Error::InvalidParameter(
                "cyclic prefix must be shorter than the FFT size".into(),
            ));
        }
        if num_symbols == 0 {
            return Err(Error::InvalidParameter("need at least one OFDM symbol".into()));
        }
        Ok(Self {
            fft_size,
            cp_len,
            active,
            num_symbols,
        })
    }

    /// Benchmark configuration: K=64, Tcp=16, 56 active subcarriers
    /// (DC and the 7 band-edge bins around K/2 are nulled), sized to a
    /// 40 960-sample frame (512 OFDM symbols).
    pub fn benchmark() -> Self {
        Self::with_frame_len(40_960).unwrap()
    }

    /// Benchmark subcarrier plan at an arbitrary frame length, which must
    /// divide evenly into (K + Tcp)-sample symbols.
    pub fn with_frame_len(frame_len: usize) -> Result<Self> {
        let k = 64;
        let cp = 16;
        if frame_len % (k + cp) != 0 {
            return Err(Error::InvalidParameter(format!(
                "frame length {frame_len} is not a multiple of {}",
                k + cp
            )));
        }
        let inactive = [0usize, 29, 30, 31, 32, 33, 34, 35];
        let active = (0..k).filter(|i| !inactive.contains(i)).collect();
        Self::new(k, cp, active, frame_len / (k + cp))
    }

    /// Frame length in samples.
    pub fn frame_len(&self) -> usize {
        self.num_symbols * (self.fft_size + self.cp_len)
    }

    /// Bits carried by a full frame (2 per active subcarrier per symbol).
    pub fn bit_capacity(&self) -> usize {
        2 * self.active.len() * self.num_symbols
    }
}

/// Modulate a bit stream into an OFDM-QPSK frame. Returns the time-domain
/// frame and the transmitted symbol grid (row-major: symbol p, then bin k;
/// inactive bins hold the zero symbol).
pub fn modulate_ofdm(bits: &BitStream, cfg: &OfdmConfig) -> Result<(ComplexSignal, SymbolSequence)> {
    let expected = cfg.bit_capacity();
    if bits.len() != expected {
        return Err(Error::BitCountMismatch {
            expected,
            got: bits.len(),
        });
    }
    let k = cfg.fft_size;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(k);
    // Amplitude scale so a frame of unit-modulus symbols has unit power.
    let scale = 1.0 / (cfg.active.len() as f64).sqrt();
    let mut grid = Vec::with_capacity(cfg.num_symbols * k);
    let mut out = Vec::with_capacity(cfg.frame_len());
    let mut bit_iter = bits.bits.chunks_exact(2);
    for _p in 0..cfg.num_symbols {
        let mut bins = vec![Complex64::new(0.0, 0.0); k];
        for &ki in &cfg.active {
            let pair = bit_iter.next().expect("bit capacity checked above");
            bins[ki] = gray_pair_to_symbol(pair[0], pair[1]);
        }
        grid.extend_from_slice(&bins);
        ifft.process(&mut bins);
        for b in &mut bins {
            *b *= scale;
        }
        // Cyclic prefix: the last Tcp samples lead the body.
        out.extend_from_slice(&bins[k - cfg.cp_len..]);
        out.extend_from_slice(&bins);
    }
    Ok((ComplexSignal::new(out), SymbolSequence { symbols: grid }))
}

/// Demodulate an OFDM-QPSK frame: per symbol, drop the cyclic prefix,
/// apply the K-point DFT and hard-decide the active bins.
pub fn demod_ofdm(signal: &ComplexSignal, cfg: &OfdmConfig) -> Result<BitStream> {
    let expected = cfg.frame_len();
    if signal.len() != expected {
        return Err(Error::LengthMismatch {
            left: signal.len(),
            right: expected,
        });
    }
    let k = cfg.fft_size;
    let sym_len = k + cfg.cp_len;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(k);
    let mut bits = Vec::with_capacity(cfg.bit_capacity());
    for p in 0..cfg.num_symbols {
        let body = &signal.samples[p * sym_len + cfg.cp_len..(p + 1) * sym_len];
        let mut bins = body.to_vec();
        fft.process(&mut bins);
        for &ki in &cfg.active {
            let (b0, b1) = symbol_to_gray_pair(bins[ki]);
            bits.push(b0);
            bits.push(b1);
        }
    }
    Ok(BitStream { bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::gen_bits;

    #[test]
    fn four_point_idft_by_hand() {
        // K=4, Tcp=1, P=1, all subcarriers active carrying +1 (bit pairs
        // 00 give (1+j)/sqrt(2); use a grid of a fixed symbol instead by
        // checking against a direct 4-point inverse DFT oracle).
        let cfg = OfdmConfig::new(4, 1, vec![0, 1, 2, 3], 1).unwrap();
        let bits = gen_bits(cfg.bit_capacity(), 9);
        let (sig, grid) = modulate_ofdm(&bits, &cfg).unwrap();
        let scale = 0.5; // 1/sqrt(4)
        for n in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                let phase = 2.0 * std::f64::consts::PI * (k * n) as f64 / 4.0;
                acc += grid.symbols[k] * Complex64::from_polar(1.0, phase);
            }
            acc *= scale;
            assert!((sig.samples[1 + n] - acc).norm() < 1e-12, "body sample {n}");
        }
        // All-equal symbols concentrate at n=0: force that case too.
        let bits = BitStream::new(vec![0; 8]).unwrap();
        let (sig, _) = modulate_ofdm(&bits, &cfg).unwrap();
        let a = Complex64::new(1.0, 1.0) / 2f64.sqrt();
        assert!((sig.samples[1] - a * 4.0 * scale).norm() < 1e-12);
        for n in 2..4 {
            assert!(sig.samples[n].norm() < 1e-12);
        }
        // Prefix equals the last body sample.
        assert!((sig.samples[0] - sig.samples[4]).norm() < 1e-15);
    }

    #[test]
    fn cyclic_prefix_equals_tail() {
        let cfg = OfdmConfig::with_frame_len(8 * 80).unwrap();
        let bits = gen_bits(cfg.bit_capacity(), 2);
        let (sig, _) = modulate_ofdm(&bits, &cfg).unwrap();
        let sym_len = cfg.fft_size + cfg.cp_len;
        for p in 0..cfg.num_symbols {
            for t in 0..cfg.cp_len {
                let cp = sig.samples[p * sym_len + t];
                let tail = sig.samples[p * sym_len + t + cfg.fft_size];
                assert!((cp - tail).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn benchmark_dimensions() {
        let cfg = OfdmConfig::benchmark();
        assert_eq!(cfg.fft_size, 64);
        assert_eq!(cfg.cp_len, 16);
        assert_eq!(cfg.active.len(), 56);
        assert_eq!(cfg.num_symbols, 512);
        assert_eq!(cfg.frame_len(), 40_960);
        assert_eq!(cfg.bit_capacity(), 57_344);
    }

    #[test]
    fn unit_power_convention() {
        let cfg = OfdmConfig::benchmark();
        let bits = gen_bits(cfg.bit_capacity(), 4);
        let (sig, _) = modulate_ofdm(&bits, &cfg).unwrap();
        let p = sig.power();
        assert!((0.98..=1.02).contains(&p), "frame power = {p}");
    }

    #[test]
    fn round_trip_no_noise() {
        let cfg = OfdmConfig::with_frame_len(16 * 80).unwrap();
        let bits = gen_bits(cfg.bit_capacity(), 5);
        let (sig, _) = modulate_ofdm(&bits, &cfg).unwrap();
        assert_eq!(demod_ofdm(&sig, &cfg).unwrap(), bits);
    }

    #[test]
    fn corrupted_cp_is_ignored() {
        let cfg = OfdmConfig::with_frame_len(16 * 80).unwrap();
        let bits = gen_bits(cfg.bit_capacity(), 6);
        let (mut sig, _) = modulate_ofdm(&bits, &cfg).unwrap();
        let sym_len = cfg.fft_size + cfg.cp_len;
        for p in 0..cfg.num_symbols {
            for t in 0..cfg.cp_len {
                sig.samples[p * sym_len + t] = Complex64::new(1e6, -1e6);
            }
        }
        assert_eq!(demod_ofdm(&sig, &cfg).unwrap(), bits);
    }

    #[test]
    fn bit_count_mismatch_names_expected() {
        let cfg = OfdmConfig::with_frame_len(80).unwrap();
        let err = modulate_ofdm(&gen_bits(3, 0), &cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("112"), "error should name expected count: {msg}");
    }

    #[test]
    fn length_mismatch_rejected() {
        let cfg = OfdmConfig::with_frame_len(80).unwrap();
        assert!(demod_ofdm(&ComplexSignal::zeros(81), &cfg).is_err());
    }
}

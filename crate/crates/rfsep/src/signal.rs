//! Core value types shared by every module: complex baseband signals and
//! bit streams, plus the seeded bit generator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A finite sequence of complex baseband samples.
///
/// Signals of interest follow a unit average power convention; interference
/// is scaled relative to that when mixtures are built.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Self { samples }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Empirical average power, `mean |x[n]|^2`.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Scale every sample in place.
    pub fn scale(&mut self, factor: Complex64) {
        for z in &mut self.samples {
            *z *= factor;
        }
    }

    /// Rescale to exactly unit average power.
    pub fn normalize_power(&mut self) -> Result<()> {
        let p = self.power();
        if p <= 0.0 {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero-power signal".into(),
            ));
        }
        let g = Complex64::new(1.0 / p.sqrt(), 0.0);
        self.scale(g);
        Ok(())
    }

    pub fn assert_finite(&self) -> Result<()> {
        for (n, z) in self.samples.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite(format!("sample {n}")));
            }
        }
        Ok(())
    }

    /// Elementwise sum; lengths must match.
    pub fn add(&self, other: &ComplexSignal) -> Result<ComplexSignal> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(ComplexSignal::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    /// Elementwise difference; lengths must match.
    pub fn sub(&self, other: &ComplexSignal) -> Result<ComplexSignal> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(ComplexSignal::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }
}

/// An ordered sequence of bits, the ground truth for BER accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    pub bits: Vec<u8>,
}

impl BitStream {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// The PRNG family used everywhere a seed appears in an interface.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draw `count` fair-coin bits, deterministically in `seed`.
pub fn gen_bits(count: usize, seed: u64) -> BitStream {
    let mut rng = seeded_rng(seed);
    let bits = (0..count).map(|_| rng.gen_range(0u8..2)).collect();
    BitStream { bits }
}

/// Complex standard Gaussian samples (unit variance per complex sample).
pub fn gen_complex_gaussian(count: usize, rng: &mut impl Rng) -> ComplexSignal {
    use rand::distributions::Distribution;
    let normal = rand::distributions::Uniform::new(0.0f64, 1.0);
    // Box-Muller, per complex sample: radius^2 ~ Exp(1), phase uniform.
    let samples = (0..count)
        .map(|_| {
            let u: f64 = loop {
                let v = normal.sample(rng);
                if v > 0.0 {
                    break v;
                }
            };
            let r = (-u.ln()).sqrt();
            let phi = 2.0 * std::f64::consts::PI * normal.sample(rng);
            Complex64::from_polar(r, phi)
        })
        .collect();
    ComplexSignal::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_bits_empty() {
        assert!(gen_bits(0, 7).is_empty());
    }

    #[test]
    fn gen_bits_deterministic() {
        assert_eq!(gen_bits(8, 42), gen_bits(8, 42));
        assert_ne!(gen_bits(64, 1), gen_bits(64, 2));
    }

    #[test]
    fn gen_bits_fair() {
        // Binomial tail: for 10^6 fair bits, mean is within 0.001 of 0.5
        // except with probability ~2*Phi(-2) << 1%.
        let bits = gen_bits(1_000_000, 1);
        let mean = bits.bits.iter().map(|&b| b as f64).sum::<f64>() / bits.len() as f64;
        assert!((0.499..=0.501).contains(&mean), "mean = {mean}");
    }

    #[test]
    fn gaussian_unit_variance() {
        let mut rng = seeded_rng(5);
        let x = gen_complex_gaussian(200_000, &mut rng);
        assert!((x.power() - 1.0).abs() < 0.02, "power = {}", x.power());
    }

    #[test]
    fn power_and_normalize() {
        let mut s = ComplexSignal::new(vec![Complex64::new(2.0, 0.0); 16]);
        assert_eq!(s.power(), 4.0);
        s.normalize_power().unwrap();
        assert!((s.power() - 1.0).abs() < 1e-12);
        let mut z = ComplexSignal::zeros(4);
        assert!(z.normalize_power().is_err());
    }

    #[test]
    fn bitstream_rejects_non_bits() {
        assert!(BitStream::new(vec![0, 1, 2]).is_err());
    }
}

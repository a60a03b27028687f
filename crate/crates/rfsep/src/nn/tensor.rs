//! Dense real tensors in channels-by-length layout, the currency of the
//! neural separators. Complex baseband signals map to two channels
//! (real, imaginary).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::ComplexSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub len: usize,
    /// Row-major: `data[c * len + n]`.
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(channels: usize, len: usize) -> Self {
        Self {
            channels,
            len,
            data: vec![0.0; channels * len],
        }
    }

    pub fn from_data(channels: usize, len: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * len {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {channels}x{len}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            len,
            data,
        })
    }

    #[inline]
    pub fn at(&self, c: usize, n: usize) -> f64 {
        self.data[c * self.len + n]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, n: usize) -> &mut f64 {
        &mut self.data[c * self.len + n]
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.channels == other.channels && self.len == other.len
    }

    pub fn count(&self) -> usize {
        self.data.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Real/imaginary parts as two channels.
pub fn signal_to_tensor(signal: &ComplexSignal) -> Tensor {
    let n = signal.len();
    let mut data = Vec::with_capacity(2 * n);
    data.extend(signal.samples.iter().map(|z| z.re));
    data.extend(signal.samples.iter().map(|z| z.im));
    Tensor {
        channels: 2,
        len: n,
        data,
    }
}

pub fn tensor_to_signal(t: &Tensor) -> Result<ComplexSignal> {
    if t.channels != 2 {
        return Err(Error::ShapeMismatch(format!(
            "expected 2 channels, got {}",
            t.channels
        )));
    }
    let samples = (0..t.len)
        .map(|n| Complex64::new(t.at(0, n), t.at(1, n)))
        .collect();
    Ok(ComplexSignal::new(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_round_trip() {
        let s = ComplexSignal::new(vec![
            Complex64::new(1.0, -2.0),
            Complex64::new(0.5, 3.0),
        ]);
        let t = signal_to_tensor(&s);
        assert_eq!(t.channels, 2);
        assert_eq!(t.row(0), &[1.0, 0.5]);
        assert_eq!(t.row(1), &[-2.0, 3.0]);
        assert_eq!(tensor_to_signal(&t).unwrap(), s);
    }

    #[test]
    fn shape_validation() {
        assert!(Tensor::from_data(2, 3, vec![0.0; 5]).is_err());
        assert!(tensor_to_signal(&Tensor::zeros(3, 4)).is_err());
    }
}

//! 1-D convolution with dilation, stride and three padding modes, plus
//! its exact backward pass. This is the workhorse layer of both
//! separator architectures.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero padding, output length preserved (stride 1) or `ceil(len/stride)`.
    Same,
    /// Zero padding on the left only; every tap looks backward in time.
    Causal,
    /// No padding; output shrinks by the receptive field.
    Valid,
}

/// Static description of one convolution layer. Weights live in a
/// parameter store as `[out_channels][in_channels][kernel]` and the bias
/// as `[out_channels]`.
#[derive(Debug, Clone, Copy)]
pub struct Conv1dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub stride: usize,
    pub padding: Padding,
}

impl Conv1dSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            dilation: 1,
            stride: 1,
            padding: Padding::Same,
        }
    }

    pub fn dilated(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn strided(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn padded(mut self, padding: Padding) -> Self {
        self.padding = padding;
        self
    }

    /// Input span that can influence one output sample.
    pub fn receptive_field(&self) -> usize {
        (self.kernel - 1) * self.dilation + 1
    }

    pub fn weight_count(&self) -> usize {
        self.in_channels * self.out_channels * self.kernel
    }

    /// Leftward reach of tap 0 relative to the output position.
    fn left_pad(&self) -> usize {
        match self.padding {
            Padding::Same => (self.kernel - 1) * self.dilation / 2,
            Padding::Causal => (self.kernel - 1) * self.dilation,
            Padding::Valid => 0,
        }
    }

    pub fn out_len(&self, in_len: usize) -> Result<usize> {
        let rf = self.receptive_field();
        match self.padding {
            Padding::Same | Padding::Causal => Ok(in_len.div_ceil(self.stride)),
            Padding::Valid => {
                if in_len < rf {
                    Err(Error::ShapeMismatch(format!(
                        "input length {in_len} shorter than receptive field {rf}"
                    )))
                } else {
                    Ok((in_len - rf) / self.stride + 1)
                }
            }
        }
    }

    fn check(&self, x: &Tensor, weight: &[f64], bias: &[f64]) -> Result<()> {
        if self.kernel == 0 || self.dilation == 0 || self.stride == 0 {
            return Err(Error::InvalidParameter(
                "kernel, dilation and stride must be positive".into(),
            ));
        }
        if x.channels != self.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "input has {} channels, spec expects {}",
                x.channels, self.in_channels
            )));
        }
        if weight.len() != self.weight_count() {
            return Err(Error::ShapeMismatch(format!(
                "weight has {} values, spec expects {}",
                weight.len(),
                self.weight_count()
            )));
        }
        if bias.len() != self.out_channels {
            return Err(Error::ShapeMismatch(format!(
                "bias has {} values, spec expects {}",
                bias.len(),
                self.out_channels
            )));
        }
        Ok(())
    }
}

/// `y[co, n] = b[co] + sum_ci sum_k w[co, ci, k] * x[ci, n*stride + k*d - left]`
/// with zeros outside the input.
pub fn conv1d_forward(x: &Tensor, spec: &Conv1dSpec, weight: &[f64], bias: &[f64]) -> Result<Tensor> {
    spec.check(x, weight, bias)?;
    let out_len = spec.out_len(x.len)?;
    let left = spec.left_pad() as i64;
    let mut y = Tensor::zeros(spec.out_channels, out_len);
    let in_len = x.len as i64;
    for co in 0..spec.out_channels {
        let y_row = &mut y.data[co * out_len..(co + 1) * out_len];
        y_row.fill(bias[co]);
        for ci in 0..spec.in_channels {
            let x_row = x.row(ci);
            for k in 0..spec.kernel {
                let w = weight[(co * spec.in_channels + ci) * spec.kernel + k];
                if w == 0.0 {
                    continue;
                }
                let offset = k as i64 * spec.dilation as i64 - left;
                for (n, y_val) in y_row.iter_mut().enumerate() {
                    let pos = n as i64 * spec.stride as i64 + offset;
                    if pos >= 0 && pos < in_len {
                        *y_val += w * x_row[pos as usize];
                    }
                }
            }
        }
    }
    Ok(y)
}

/// Exact gradients of the forward contract with respect to the input,
/// the weights and the bias.
pub fn conv1d_backward(
    grad_out: &Tensor,
    x: &Tensor,
    spec: &Conv1dSpec,
    weight: &[f64],
) -> Result<(Tensor, Vec<f64>, Vec<f64>)> {
    let out_len = spec.out_len(x.len)?;
    if grad_out.channels != spec.out_channels || grad_out.len != out_len {
        return Err(Error::ShapeMismatch(format!(
            "grad_out {}x{}, expected {}x{}",
            grad_out.channels, grad_out.len, spec.out_channels, out_len
        )));
    }
    if weight.len() != spec.weight_count() {
        return Err(Error::ShapeMismatch("weight size".into()));
    }
    let left = spec.left_pad() as i64;
    let in_len = x.len as i64;
    let mut grad_x = Tensor::zeros(x.channels, x.len);
    let mut grad_w = vec![0.0; spec.weight_count()];
    let mut grad_b = vec![0.0; spec.out_channels];
    for co in 0..spec.out_channels {
        let go_row = grad_out.row(co);
        grad_b[co] += go_row.iter().sum::<f64>();
        for ci in 0..spec.in_channels {
            let x_row = x.row(ci);
            let gx_row = &mut grad_x.data[ci * x.len..(ci + 1) * x.len];
            for k in 0..spec.kernel {
                let w_idx = (co * spec.in_channels + ci) * spec.kernel + k;
                let w = weight[w_idx];
                let offset = k as i64 * spec.dilation as i64 - left;
                let mut gw = 0.0;
                for (n, &go) in go_row.iter().enumerate() {
                    let pos = n as i64 * spec.stride as i64 + offset;
                    if pos >= 0 && pos < in_len {
                        gw += go * x_row[pos as usize];
                        gx_row[pos as usize] += go * w;
                    }
                }
                grad_w[w_idx] += gw;
            }
        }
    }
    Ok((grad_x, grad_w, grad_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rand_tensor(channels: usize, len: usize, rng: &mut impl Rng) -> Tensor {
        Tensor {
            channels,
            len,
            data: (0..channels * len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn pointwise_identity() {
        let spec = Conv1dSpec::new(1, 1, 1);
        let mut rng = crate::signal::seeded_rng(1);
        let x = rand_tensor(1, 16, &mut rng);
        let y = conv1d_forward(&x, &spec, &[1.0], &[0.0]).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn receptive_field_probe() {
        // Kernel 3, dilation 2: receptive field 5. With valid padding,
        // output n sees input n..n+4; perturbations at distance <= 2 from
        // the center tap move the output, distance 3 does not.
        let spec = Conv1dSpec::new(1, 1, 3).dilated(2).padded(Padding::Valid);
        assert_eq!(spec.receptive_field(), 5);
        let mut rng = crate::signal::seeded_rng(2);
        let x = rand_tensor(1, 32, &mut rng);
        let w = [0.3, -0.7, 0.2];
        let y0 = conv1d_forward(&x, &spec, &w, &[0.1]).unwrap();
        let probe = 10usize; // output index; center of its field is input 12
        let center = probe + 2;
        for delta in -3i64..=3 {
            let mut xp = x.clone();
            xp.data[(center as i64 + delta) as usize] += 1.0;
            let y1 = conv1d_forward(&xp, &spec, &w, &[0.1]).unwrap();
            let moved = (y1.data[probe] - y0.data[probe]).abs() > 1e-12;
            let inside = delta.abs() <= 2 && delta.rem_euclid(2) == 0;
            assert_eq!(moved, inside, "delta {delta}");
        }
        // Footprint width: exactly (kernel-1)*dilation + 1 input samples
        // influence one output.
        let mut touched = 0;
        for i in 0..x.len {
            let mut xp = x.clone();
            xp.data[i] += 1.0;
            let y1 = conv1d_forward(&xp, &spec, &w, &[0.1]).unwrap();
            if (y1.data[probe] - y0.data[probe]).abs() > 1e-12 {
                touched += 1;
            }
        }
        assert_eq!(touched, 3); // 3 taps; span 5 with gaps
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let mut rng = crate::signal::seeded_rng(3);
        for &(padding, stride, dilation) in &[
            (Padding::Same, 1, 1),
            (Padding::Same, 2, 3),
            (Padding::Causal, 1, 4),
            (Padding::Valid, 1, 2),
            (Padding::Valid, 2, 1),
        ] {
            let spec = Conv1dSpec {
                in_channels: 3,
                out_channels: 2,
                kernel: 3,
                dilation,
                stride,
                padding,
            };
            let x = rand_tensor(3, 21, &mut rng);
            let w: Vec<f64> = (0..spec.weight_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = conv1d_forward(&x, &spec, &w, &b).unwrap();
            // Direct summation oracle.
            let left = match padding {
                Padding::Same => (spec.kernel - 1) * dilation / 2,
                Padding::Causal => (spec.kernel - 1) * dilation,
                Padding::Valid => 0,
            } as i64;
            for co in 0..2 {
                for n in 0..y.len {
                    let mut acc = b[co];
                    for ci in 0..3 {
                        for k in 0..3 {
                            let pos = n as i64 * stride as i64 + k as i64 * dilation as i64 - left;
                            if pos >= 0 && (pos as usize) < x.len {
                                acc += w[(co * 3 + ci) * 3 + k] * x.at(ci, pos as usize);
                            }
                        }
                    }
                    assert!((y.at(co, n) - acc).abs() < 1e-12);
                }
            }
        }
    }

    /// Central finite differences of a scalar functional of the conv
    /// output, compared against the analytic backward pass.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = crate::signal::seeded_rng(4);
        for &(padding, stride, dilation) in &[
            (Padding::Same, 1, 2),
            (Padding::Causal, 1, 1),
            (Padding::Valid, 2, 2),
        ] {
            let spec = Conv1dSpec {
                in_channels: 2,
                out_channels: 2,
                kernel: 3,
                dilation,
                stride,
                padding,
            };
            let x = rand_tensor(2, 17, &mut rng);
            let w: Vec<f64> = (0..spec.weight_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let out_len = spec.out_len(x.len).unwrap();
            // Random linear functional phi = <c, y> makes scalar probes.
            let c: Vec<f64> = (0..2 * out_len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let phi = |xv: &Tensor, wv: &[f64], bv: &[f64]| -> f64 {
                let y = conv1d_forward(xv, &spec, wv, bv).unwrap();
                y.data.iter().zip(&c).map(|(a, b)| a * b).sum()
            };
            let grad_out = Tensor::from_data(2, out_len, c.clone()).unwrap();
            let (gx, gw, gb) = conv1d_backward(&grad_out, &x, &spec, &w).unwrap();
            let eps = 1e-6;
            let check = |analytic: f64, plus: f64, minus: f64, what: &str| {
                let numeric = (plus - minus) / (2.0 * eps);
                let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(
                    (analytic - numeric).abs() / denom <= 1e-4,
                    "{what}: {analytic} vs {numeric}"
                );
            };
            for i in 0..x.data.len() {
                let mut xp = x.clone();
                xp.data[i] += eps;
                let mut xm = x.clone();
                xm.data[i] -= eps;
                check(gx.data[i], phi(&xp, &w, &b), phi(&xm, &w, &b), "grad_x");
            }
            for i in 0..w.len() {
                let mut wp = w.clone();
                wp[i] += eps;
                let mut wm = w.clone();
                wm[i] -= eps;
                check(gw[i], phi(&x, &wp, &b), phi(&x, &wm, &b), "grad_w");
            }
            for i in 0..b.len() {
                let mut bp = b.clone();
                bp[i] += eps;
                let mut bm = b.clone();
                bm[i] -= eps;
                check(gb[i], phi(&x, &w, &bp), phi(&x, &w, &bm), "grad_b");
            }
        }
    }

    #[test]
    fn backward_trivial_identities() {
        let spec = Conv1dSpec::new(2, 3, 3);
        let mut rng = crate::signal::seeded_rng(5);
        let x = rand_tensor(2, 9, &mut rng);
        let w: Vec<f64> = (0..spec.weight_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Zero upstream gradient zeroes everything.
        let zero = Tensor::zeros(3, 9);
        let (gx, gw, gb) = conv1d_backward(&zero, &x, &spec, &w).unwrap();
        assert!(gx.data.iter().all(|&v| v == 0.0));
        assert!(gw.iter().all(|&v| v == 0.0));
        assert!(gb.iter().all(|&v| v == 0.0));
        // Bias gradient is the per-channel sum of the upstream gradient.
        let go = rand_tensor(3, 9, &mut rng);
        let (_, _, gb) = conv1d_backward(&go, &x, &spec, &w).unwrap();
        for co in 0..3 {
            let expected: f64 = go.row(co).iter().sum();
            assert!((gb[co] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors_name_dims() {
        let spec = Conv1dSpec::new(2, 1, 3);
        let x = Tensor::zeros(3, 8);
        let err = conv1d_forward(&x, &spec, &[0.0; 6], &[0.0]).unwrap_err();
        assert!(err.to_string().contains("3"));
        assert!(err.to_string().contains("2"));
    }
}

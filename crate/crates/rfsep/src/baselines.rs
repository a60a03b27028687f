//! Traditional separators: matched-filter passthrough and block LMMSE
//! built from second-order statistics, `s_hat = C_ss (C_ss + C_bb)^-1 y`
//! applied to consecutive blocks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qpsk::QpskConfig;
use crate::signal::ComplexSignal;

/// Common interface every separation method implements.
pub trait Separator {
    fn label(&self) -> String;
    /// Map a mixture to an estimate of the signal of interest.
    fn separate(&self, mixture: &ComplexSignal) -> Result<ComplexSignal>;
}

/// Second-order statistics of SOI and interference over a fixed block.
#[derive(Debug, Clone)]
pub struct BlockCovariance {
    pub block_len: usize,
    pub c_ss: DMatrix<Complex64>,
    pub c_bb: DMatrix<Complex64>,
    /// Number of blocks that went into the estimate (0 for analytic).
    pub sample_count: usize,
}

fn hermitian_symmetrize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
}

impl BlockCovariance {
    pub fn new(c_ss: DMatrix<Complex64>, c_bb: DMatrix<Complex64>, sample_count: usize) -> Result<Self> {
        if !c_ss.is_square() || !c_bb.is_square() || c_ss.nrows() != c_bb.nrows() {
            return Err(Error::ShapeMismatch(
                "covariance matrices must be square with equal dimensions".into(),
            ));
        }
        Ok(Self {
            block_len: c_ss.nrows(),
            c_ss,
            c_bb,
            sample_count,
        })
    }

    /// Max deviation from Hermitian symmetry, for validation.
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in [&self.c_ss, &self.c_bb] {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                }
            }
        }
        worst
    }
}

/// Sample covariance over all non-overlapping blocks of the given length,
/// separately for the SOI and the interference, Hermitian-symmetrized.
pub fn estimate_block_covariance(
    examples: &[(ComplexSignal, ComplexSignal)],
    block_len: usize,
) -> Result<BlockCovariance> {
    if examples.is_empty() {
        return Err(Error::InvalidParameter("no examples".into()));
    }
    if block_len == 0 {
        return Err(Error::InvalidParameter("block length must be positive".into()));
    }
    for (s, b) in examples {
        if s.len() < block_len || b.len() < block_len {
            return Err(Error::SignalTooShort {
                len: s.len().min(b.len()),
                need: block_len,
            });
        }
    }
    let mut c_ss = DMatrix::<Complex64>::zeros(block_len, block_len);
    let mut c_bb = DMatrix::<Complex64>::zeros(block_len, block_len);
    let mut count = 0usize;
    for (s, b) in examples {
        let blocks = s.len().min(b.len()) / block_len;
        for blk in 0..blocks {
            let off = blk * block_len;
            for i in 0..block_len {
                let si = s.samples[off + i];
                let bi = b.samples[off + i];
                for j in 0..block_len {
                    c_ss[(i, j)] += si * s.samples[off + j].conj();
                    c_bb[(i, j)] += bi * b.samples[off + j].conj();
                }
            }
            count += 1;
        }
    }
    let scale = Complex64::new(1.0 / count as f64, 0.0);
    c_ss *= scale;
    c_bb *= scale;
    hermitian_symmetrize(&mut c_ss);
    hermitian_symmetrize(&mut c_bb);
    BlockCovariance::new(c_ss, c_bb, count)
}

/// Exact second-order model of the single-carrier SOI over one interior
/// (steady-state) block: `C[m, n] = F * sum_l g[m - lF - tau0] g[n - lF - tau0]`
/// with i.i.d. unit-variance symbols. The factor `F` carries the
/// unit-power modulation gain.
pub fn soi_covariance_analytic(cfg: &QpskConfig, block_len: usize) -> DMatrix<Complex64> {
    let f = cfg.oversampling as i64;
    let tau0 = cfg.first_offset as i64;
    let center = cfg.pulse.center() as i64;
    let taps = &cfg.pulse.taps;
    let g = |n: i64| -> f64 {
        let k = n + center;
        if k >= 0 && (k as usize) < taps.len() {
            taps[k as usize]
        } else {
            0.0
        }
    };
    let half = center;
    let l_min = (-tau0 - half).div_euclid(f) - 1;
    let l_max = (block_len as i64 - 1 - tau0 + half).div_euclid(f) + 1;
    let gain = cfg.oversampling as f64;
    let mut c = DMatrix::<Complex64>::zeros(block_len, block_len);
    for m in 0..block_len {
        for n in m..block_len {
            let mut acc = 0.0;
            for l in l_min..=l_max {
                acc += g(m as i64 - l * f - tau0) * g(n as i64 - l * f - tau0);
            }
            let v = Complex64::new(gain * acc, 0.0);
            c[(m, n)] = v;
            c[(n, m)] = v;
        }
    }
    c
}

/// Stationary covariance of an interference frame repeated with period
/// `frame_len` and unit power: `C[m, n] = 1{m = n (mod frame_len)}`.
pub fn framed_covariance_analytic(frame_len: usize, block_len: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(block_len, block_len, |m, n| {
        if (m as i64 - n as i64).rem_euclid(frame_len as i64) == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Block LMMSE separator with a precomputed gain matrix.
#[derive(Debug, Clone)]
pub struct LmmseSeparator {
    pub cov: BlockCovariance,
    pub weight: DMatrix<Complex64>,
    pub eps_reg: f64,
}

fn lmmse_weight(
    c_ss: &DMatrix<Complex64>,
    c_bb: &DMatrix<Complex64>,
    eps_reg: f64,
) -> Result<DMatrix<Complex64>> {
    let n = c_ss.nrows();
    let mut a = c_ss + c_bb;
    for i in 0..n {
        a[(i, i)] += Complex64::new(eps_reg, 0.0);
    }
    let inv = a.lu().try_inverse().ok_or(Error::SingularCovariance)?;
    let w = c_ss * inv;
    if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularCovariance);
    }
    Ok(w)
}

impl LmmseSeparator {
    /// Default regularization: `1e-8 * trace(C_ss + C_bb) / block_len`.
    pub fn default_eps(cov: &BlockCovariance) -> f64 {
        let trace: f64 = (0..cov.block_len)
            .map(|i| cov.c_ss[(i, i)].re + cov.c_bb[(i, i)].re)
            .sum();
        1e-8 * trace / cov.block_len as f64
    }

    pub fn new(cov: BlockCovariance) -> Result<Self> {
        let eps = Self::default_eps(&cov);
        Self::with_regularization(cov, eps)
    }

    pub fn with_regularization(cov: BlockCovariance, eps_reg: f64) -> Result<Self> {
        let weight = lmmse_weight(&cov.c_ss, &cov.c_bb, eps_reg)?;
        Ok(Self {
            cov,
            weight,
            eps_reg,
        })
    }

    pub fn block_len(&self) -> usize {
        self.cov.block_len
    }

    /// Closed-form per-sample MSE on Gaussian data with these statistics:
    /// `trace(C_ss - C_ss (C_ss + C_bb)^-1 C_ss) / block_len`.
    pub fn trace_mse(&self) -> f64 {
        let resid = &self.cov.c_ss - &self.weight * &self.cov.c_ss;
        (0..self.block_len()).map(|i| resid[(i, i)].re).sum::<f64>() / self.block_len() as f64
    }
}

impl Separator for LmmseSeparator {
    fn label(&self) -> String {
        "lmmse".into()
    }

    fn separate(&self, mixture: &ComplexSignal) -> Result<ComplexSignal> {
        let b = self.block_len();
        let n = mixture.len();
        let mut out = Vec::with_capacity(n);
        let full_blocks = n / b;
        for blk in 0..full_blocks {
            let y = DVector::from_column_slice(&mixture.samples[blk * b..(blk + 1) * b]);
            let s_hat = &self.weight * y;
            out.extend(s_hat.iter().copied());
        }
        let rem = n % b;
        if rem > 0 {
            // Final partial block: rebuild the gain at the residual length
            // from the leading principal submatrices.
            let c_ss = self.cov.c_ss.view((0, 0), (rem, rem)).into_owned();
            let c_bb = self.cov.c_bb.view((0, 0), (rem, rem)).into_owned();
            let w = lmmse_weight(&c_ss, &c_bb, self.eps_reg)?;
            let y = DVector::from_column_slice(&mixture.samples[full_blocks * b..]);
            let s_hat = w * y;
            out.extend(s_hat.iter().copied());
        }
        Ok(ComplexSignal::new(out))
    }
}

/// No mitigation: the mixture passes straight to the demodulator (the
/// matched filter itself lives in the QPSK demod chain). Exists so every
/// separation method shares one interface.
#[derive(Debug, Clone, Default)]
pub struct MfPassthrough;

impl Separator for MfPassthrough {
    fn label(&self) -> String {
        "mf".into()
    }

    fn separate(&self, mixture: &ComplexSignal) -> Result<ComplexSignal> {
        Ok(mixture.clone())
    }
}

/// Lower-triangular Cholesky factor of a Hermitian PSD matrix, with a
/// small diagonal jitter retry for rank-deficient inputs.
pub fn cholesky_factor(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if let Some(chol) = nalgebra::Cholesky::new(m.clone()) {
        return Ok(chol.l());
    }
    let trace: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
    let jitter = 1e-10 * trace.max(1.0) / m.nrows() as f64;
    let mut jittered = m.clone();
    for i in 0..m.nrows() {
        jittered[(i, i)] += Complex64::new(jitter, 0.0);
    }
    nalgebra::Cholesky::new(jittered)
        .map(|c| c.l())
        .ok_or(Error::NotPositiveSemidefinite)
}

/// Draw a zero-mean complex Gaussian vector with covariance `L L^H`.
pub fn sample_gaussian_vector(l: &DMatrix<Complex64>, rng: &mut impl Rng) -> DVector<Complex64> {
    let n = l.nrows();
    let w = crate::signal::gen_complex_gaussian(n, rng);
    l * DVector::from_vec(w.samples)
}

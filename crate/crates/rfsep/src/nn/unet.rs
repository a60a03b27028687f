//! Encoder-decoder (UNet-style) separator operating on two-channel
//! baseband tensors. A wide first convolution captures pulse-shape
//! context; each encoder level halves the time axis and doubles the
//! channel count, and decoder levels mirror that with skip connections.

use crate::error::{Error, Result};
use crate::nn::conv::Conv1dSpec;
use crate::nn::graph::{Graph, NodeId, ParamId, ParamSet};
use crate::nn::model::Model;
use crate::signal::seeded_rng;

#[derive(Debug, Clone, Copy)]
pub struct UNetConfig {
    /// Number of pooling stages; input length must divide 2^depth.
    pub depth: usize,
    /// Channel count after the first convolution; doubles per level.
    pub base_channels: usize,
    /// Kernel of the input convolution.
    pub first_kernel: usize,
    /// Kernel of all interior convolutions.
    pub inner_kernel: usize,
}

impl UNetConfig {
    /// Full-size configuration used for the benchmark runs.
    pub fn benchmark() -> Self {
        Self {
            depth: 4,
            base_channels: 16,
            first_kernel: 101,
            inner_kernel: 3,
        }
    }

    /// Small configuration that trains in minutes on a CPU.
    pub fn toy() -> Self {
        Self {
            depth: 3,
            base_channels: 8,
            first_kernel: 65,
            inner_kernel: 3,
        }
    }

    fn channels(&self, level: usize) -> usize {
        self.base_channels << level
    }
}

type ConvLayer = (ParamId, ParamId, Conv1dSpec);

#[derive(Debug, Clone)]
pub struct UNet {
    pub config: UNetConfig,
    pub params: ParamSet,
    first: ConvLayer,
    enc: Vec<ConvLayer>,
    dec_up: Vec<ConvLayer>,
    dec_merge: Vec<ConvLayer>,
    head: ConvLayer,
}

impl UNet {
    pub fn new(config: UNetConfig, seed: u64) -> Result<Self> {
        if config.depth == 0 || config.base_channels == 0 {
            return Err(Error::InvalidParameter(
                "unet needs depth >= 1 and base_channels >= 1".into(),
            ));
        }
        if config.first_kernel % 2 == 0 || config.inner_kernel % 2 == 0 {
            return Err(Error::InvalidParameter(
                "unet kernels must be odd to keep lengths aligned".into(),
            ));
        }
        let mut params = ParamSet::default();
        let mut rng = seeded_rng(seed);

        let first_spec = Conv1dSpec::new(2, config.channels(0), config.first_kernel);
        let first = params.add_conv("first", &first_spec, &mut rng);

        let mut enc = Vec::new();
        for i in 0..config.depth {
            let spec = Conv1dSpec::new(config.channels(i), config.channels(i + 1), config.inner_kernel);
            let (w, b) = params.add_conv(&format!("enc{i}"), &spec, &mut rng);
            enc.push((w, b, spec));
        }

        let mut dec_up = Vec::new();
        let mut dec_merge = Vec::new();
        for i in (1..=config.depth).rev() {
            let up_spec = Conv1dSpec::new(config.channels(i), config.channels(i - 1), config.inner_kernel);
            let (w, b) = params.add_conv(&format!("up{i}"), &up_spec, &mut rng);
            dec_up.push((w, b, up_spec));
            let merge_spec = Conv1dSpec::new(
                2 * config.channels(i - 1),
                config.channels(i - 1),
                config.inner_kernel,
            );
            let (w, b) = params.add_conv(&format!("merge{i}"), &merge_spec, &mut rng);
            dec_merge.push((w, b, merge_spec));
        }

        let head_spec = Conv1dSpec::new(config.channels(0), 2, 1);
        let head = params.add_conv("head", &head_spec, &mut rng);

        Ok(Self {
            config,
            params,
            first: (first.0, first.1, first_spec),
            enc,
            dec_up,
            dec_merge,
            head: (head.0, head.1, head_spec),
        })
    }

    /// Kernel length of the input convolution, as configured.
    pub fn first_kernel(&self) -> usize {
        self.first.2.kernel
    }
}

impl Model for UNet {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn build(&self, graph: &mut Graph<'_>, x: NodeId) -> Result<NodeId> {
        let len = graph.value(x).len;
        let divisor = 1usize << self.config.depth;
        if len % divisor != 0 {
            return Err(Error::ShapeMismatch(format!(
                "unet input length {len} must be divisible by {divisor}"
            )));
        }
        let (fw, fb, fspec) = self.first;
        let c = graph.conv1d(x, fw, fb, fspec)?;
        let mut cur = graph.relu(c);

        let mut skips = Vec::with_capacity(self.config.depth);
        for &(w, b, spec) in &self.enc {
            skips.push(cur);
            let pooled = graph.avg_pool2(cur)?;
            let c = graph.conv1d(pooled, w, b, spec)?;
            cur = graph.relu(c);
        }

        for (stage, (&(uw, ub, uspec), &(mw, mb, mspec))) in
            self.dec_up.iter().zip(&self.dec_merge).enumerate()
        {
            let up = graph.upsample2(cur);
            let c = graph.conv1d(up, uw, ub, uspec)?;
            let c = graph.relu(c);
            let skip = skips[self.config.depth - 1 - stage];
            let cat = graph.concat(c, skip)?;
            let m = graph.conv1d(cat, mw, mb, mspec)?;
            cur = graph.relu(m);
        }

        let (hw, hb, hspec) = self.head;
        graph.conv1d(cur, hw, hb, hspec)
    }
}

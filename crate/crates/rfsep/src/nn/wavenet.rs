//! Dilated causal convolutional separator with gated residual blocks and
//! skip connections. Dilations follow a repeating power-of-two cycle,
//! so block `i` uses dilation `2^(i mod cycle)`.

use crate::error::{Error, Result};
use crate::nn::conv::{Conv1dSpec, Padding};
use crate::nn::graph::{Graph, NodeId, ParamId, ParamSet};
use crate::nn::model::Model;
use crate::signal::seeded_rng;

#[derive(Debug, Clone, Copy)]
pub struct WaveNetConfig {
    /// Number of gated residual blocks.
    pub blocks: usize,
    /// Dilation cycle length; block `i` gets dilation `2^(i mod cycle)`.
    pub dilation_cycle: usize,
    /// Hidden channel width.
    pub channels: usize,
    /// Kernel of the dilated convolutions.
    pub kernel: usize,
}

impl WaveNetConfig {
    /// Full-size configuration used for the benchmark runs.
    pub fn benchmark() -> Self {
        Self {
            blocks: 30,
            dilation_cycle: 10,
            channels: 128,
            kernel: 3,
        }
    }

    /// Small configuration that trains in minutes on a CPU.
    pub fn toy() -> Self {
        Self {
            blocks: 10,
            dilation_cycle: 10,
            channels: 32,
            kernel: 3,
        }
    }

    pub fn dilation(&self, block: usize) -> usize {
        1 << (block % self.dilation_cycle)
    }

    /// Samples of input history a single output sample can depend on.
    pub fn receptive_field(&self) -> usize {
        1 + (self.kernel - 1) * (0..self.blocks).map(|i| self.dilation(i)).sum::<usize>()
    }
}

type ConvLayer = (ParamId, ParamId, Conv1dSpec);

#[derive(Debug, Clone)]
struct ResidualBlock {
    filter: ConvLayer,
    gate: ConvLayer,
    residual: ConvLayer,
    skip: ConvLayer,
}

#[derive(Debug, Clone)]
pub struct WaveNet {
    pub config: WaveNetConfig,
    pub params: ParamSet,
    input: ConvLayer,
    blocks: Vec<ResidualBlock>,
    head_mix: ConvLayer,
    head_out: ConvLayer,
}

impl WaveNet {
    pub fn new(config: WaveNetConfig, seed: u64) -> Result<Self> {
        if config.blocks == 0 || config.channels == 0 || config.dilation_cycle == 0 {
            return Err(Error::InvalidParameter(
                "wavenet needs blocks, channels and dilation_cycle >= 1".into(),
            ));
        }
        if config.kernel < 2 {
            return Err(Error::InvalidParameter(
                "wavenet kernel must be >= 2 to see past samples".into(),
            ));
        }
        let mut params = ParamSet::default();
        let mut rng = seeded_rng(seed);
        let c = config.channels;

        let input_spec = Conv1dSpec::new(2, c, 1);
        let input = params.add_conv("input", &input_spec, &mut rng);

        let mut blocks = Vec::with_capacity(config.blocks);
        for i in 0..config.blocks {
            let dilated = Conv1dSpec::new(c, c, config.kernel)
                .dilated(config.dilation(i))
                .padded(Padding::Causal);
            let pointwise = Conv1dSpec::new(c, c, 1);
            let filter = params.add_conv(&format!("block{i}.filter"), &dilated, &mut rng);
            let gate = params.add_conv(&format!("block{i}.gate"), &dilated, &mut rng);
            let residual = params.add_conv(&format!("block{i}.residual"), &pointwise, &mut rng);
            let skip = params.add_conv(&format!("block{i}.skip"), &pointwise, &mut rng);
            blocks.push(ResidualBlock {
                filter: (filter.0, filter.1, dilated),
                gate: (gate.0, gate.1, dilated),
                residual: (residual.0, residual.1, pointwise),
                skip: (skip.0, skip.1, pointwise),
            });
        }

        let mix_spec = Conv1dSpec::new(c, c, 1);
        let head_mix = params.add_conv("head.mix", &mix_spec, &mut rng);
        let out_spec = Conv1dSpec::new(c, 2, 1);
        let head_out = params.add_conv("head.out", &out_spec, &mut rng);

        Ok(Self {
            config,
            params,
            input: (input.0, input.1, input_spec),
            blocks,
            head_mix: (head_mix.0, head_mix.1, mix_spec),
            head_out: (head_out.0, head_out.1, out_spec),
        })
    }
}

impl Model for WaveNet {
    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn build(&self, graph: &mut Graph<'_>, x: NodeId) -> Result<NodeId> {
        let (iw, ib, ispec) = self.input;
        let mut cur = graph.conv1d(x, iw, ib, ispec)?;

        let mut skip_sum: Option<NodeId> = None;
        for block in &self.blocks {
            let (fw, fb, fspec) = block.filter;
            let (gw, gb, gspec) = block.gate;
            let f = graph.conv1d(cur, fw, fb, fspec)?;
            let g = graph.conv1d(cur, gw, gb, gspec)?;
            let gated = graph.gated_unit(f, g)?;
            let (rw, rb, rspec) = block.residual;
            let res = graph.conv1d(gated, rw, rb, rspec)?;
            cur = graph.add(cur, res)?;
            let (sw, sb, sspec) = block.skip;
            let skip = graph.conv1d(gated, sw, sb, sspec)?;
            skip_sum = Some(match skip_sum {
                Some(acc) => graph.add(acc, skip)?,
                None => skip,
            });
        }

        let skip = skip_sum.expect("at least one block");
        let h = graph.relu(skip);
        let (mw, mb, mspec) = self.head_mix;
        let h = graph.conv1d(h, mw, mb, mspec)?;
        let h = graph.relu(h);
        let (ow, ob, ospec) = self.head_out;
        graph.conv1d(h, ow, ob, ospec)
    }
}

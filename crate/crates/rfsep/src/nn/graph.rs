//! Parameter storage and a small tape-based reverse-mode autodiff engine.
//!
//! A `Graph` records the ops of one forward pass eagerly; `backward`
//! replays the tape in reverse and accumulates parameter gradients into a
//! `GradStore`. The op set is exactly what the two separator
//! architectures need.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::conv::{conv1d_backward, conv1d_forward, Conv1dSpec};
use crate::nn::tensor::Tensor;
use crate::signal::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub usize);

/// One named parameter tensor (flat storage, shape kept for containers).
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// All learnable parameters of one model.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    pub params: Vec<Param>,
}

impl ParamSet {
    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> ParamId {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.params.push(Param {
            name: name.into(),
            shape,
            data,
        });
        ParamId(self.params.len() - 1)
    }

    /// Fan-in-scaled uniform init for a conv weight, zero bias.
    pub fn add_conv(
        &mut self,
        name: &str,
        spec: &Conv1dSpec,
        rng: &mut impl Rng,
    ) -> (ParamId, ParamId) {
        let bound = (1.0 / (spec.in_channels * spec.kernel) as f64).sqrt();
        let w: Vec<f64> = (0..spec.weight_count())
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        let weight = self.add(
            format!("{name}.weight"),
            vec![spec.out_channels, spec.in_channels, spec.kernel],
            w,
        );
        let bias = self.add(
            format!("{name}.bias"),
            vec![spec.out_channels],
            vec![0.0; spec.out_channels],
        );
        (weight, bias)
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].data
    }

    pub fn value_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn rng_for(seed: u64) -> impl Rng {
        seeded_rng(seed)
    }
}

/// Gradient buffers shape-matched to a `ParamSet`.
#[derive(Debug, Clone)]
pub struct GradStore {
    pub grads: Vec<Vec<f64>>,
}

impl GradStore {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self {
            grads: params.params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
        }
    }

    pub fn reset(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }

    pub fn accumulate(&mut self, other: &GradStore) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.grads {
            for v in g {
                *v *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Conv1d {
        x: NodeId,
        weight: ParamId,
        bias: ParamId,
        spec: Conv1dSpec,
    },
    Relu(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Mul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// Average pooling by 2 along time.
    AvgPool2(NodeId),
    /// Nearest-neighbor upsampling by 2 along time.
    Upsample2(NodeId),
    /// Channel concatenation.
    Concat(NodeId, NodeId),
}

struct Node {
    op: Op,
    value: Tensor,
}

/// One recorded forward pass.
pub struct Graph<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn input(&mut self, x: Tensor) -> NodeId {
        self.push(Op::Input, x)
    }

    pub fn conv1d(&mut self, x: NodeId, weight: ParamId, bias: ParamId, spec: Conv1dSpec) -> Result<NodeId> {
        let y = conv1d_forward(
            self.value(x),
            &spec,
            self.params.get(weight),
            self.params.get(bias),
        )?;
        Ok(self.push(
            Op::Conv1d {
                x,
                weight,
                bias,
                spec,
            },
            y,
        ))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let y = Tensor {
            channels: v.channels,
            len: v.len,
            data: v.data.iter().map(|&a| a.max(0.0)).collect(),
        };
        self.push(Op::Relu(x), y)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let y = Tensor {
            channels: v.channels,
            len: v.len,
            data: v.data.iter().map(|&a| a.tanh()).collect(),
        };
        self.push(Op::Tanh(x), y)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let y = Tensor {
            channels: v.channels,
            len: v.len,
            data: v.data.iter().map(|&a| 1.0 / (1.0 + (-a).exp())).collect(),
        };
        self.push(Op::Sigmoid(x), y)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if !va.same_shape(vb) {
            return Err(Error::ShapeMismatch(format!(
                "mul {}x{} vs {}x{}",
                va.channels, va.len, vb.channels, vb.len
            )));
        }
        let y = Tensor {
            channels: va.channels,
            len: va.len,
            data: va.data.iter().zip(&vb.data).map(|(x, w)| x * w).collect(),
        };
        Ok(self.push(Op::Mul(a, b), y))
    }

    /// Gated activation unit: `tanh(x_f) * sigmoid(x_g)`.
    pub fn gated_unit(&mut self, x_f: NodeId, x_g: NodeId) -> Result<NodeId> {
        if !self.value(x_f).same_shape(self.value(x_g)) {
            return Err(Error::ShapeMismatch("gated unit inputs".into()));
        }
        let t = self.tanh(x_f);
        let s = self.sigmoid(x_g);
        self.mul(t, s)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if !va.same_shape(vb) {
            return Err(Error::ShapeMismatch(format!(
                "add {}x{} vs {}x{}",
                va.channels, va.len, vb.channels, vb.len
            )));
        }
        let y = Tensor {
            channels: va.channels,
            len: va.len,
            data: va.data.iter().zip(&vb.data).map(|(x, w)| x + w).collect(),
        };
        Ok(self.push(Op::Add(a, b), y))
    }

    pub fn avg_pool2(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x);
        if v.len % 2 != 0 {
            return Err(Error::ShapeMismatch(format!(
                "avg_pool2 needs even length, got {}",
                v.len
            )));
        }
        let half = v.len / 2;
        let mut y = Tensor::zeros(v.channels, half);
        for c in 0..v.channels {
            let row = v.row(c);
            for n in 0..half {
                *y.at_mut(c, n) = 0.5 * (row[2 * n] + row[2 * n + 1]);
            }
        }
        Ok(self.push(Op::AvgPool2(x), y))
    }

    pub fn upsample2(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let mut y = Tensor::zeros(v.channels, v.len * 2);
        for c in 0..v.channels {
            let row = v.row(c);
            for n in 0..v.len {
                *y.at_mut(c, 2 * n) = row[n];
                *y.at_mut(c, 2 * n + 1) = row[n];
            }
        }
        self.push(Op::Upsample2(x), y)
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.len != vb.len {
            return Err(Error::ShapeMismatch(format!(
                "concat lengths {} vs {}",
                va.len, vb.len
            )));
        }
        let mut data = Vec::with_capacity((va.channels + vb.channels) * va.len);
        data.extend_from_slice(&va.data);
        data.extend_from_slice(&vb.data);
        let y = Tensor {
            channels: va.channels + vb.channels,
            len: va.len,
            data,
        };
        Ok(self.push(Op::Concat(a, b), y))
    }

    /// Reverse pass from `out` seeded with `grad_out`; parameter
    /// gradients are accumulated into `grads`, and the gradient with
    /// respect to the first input node is returned.
    pub fn backward(&self, out: NodeId, grad_out: Tensor, grads: &mut GradStore) -> Result<Tensor> {
        if !self.value(out).same_shape(&grad_out) {
            return Err(Error::ShapeMismatch("backward seed shape".into()));
        }
        let mut node_grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        node_grads[out.0] = Some(grad_out);
        let mut input_grad: Option<Tensor> = None;

        let accumulate = |slot: &mut Option<Tensor>, add: Tensor| {
            match slot {
                Some(t) => {
                    for (a, b) in t.data.iter_mut().zip(&add.data) {
                        *a += b;
                    }
                }
                None => *slot = Some(add),
            }
        };

        for idx in (0..self.nodes.len()).rev() {
            let Some(g) = node_grads[idx].take() else {
                continue;
            };
            match &self.nodes[idx].op {
                Op::Input => {
                    accumulate(&mut input_grad, g);
                }
                Op::Conv1d {
                    x,
                    weight,
                    bias,
                    spec,
                } => {
                    let (gx, gw, gb) =
                        conv1d_backward(&g, self.value(*x), spec, self.params.get(*weight))?;
                    for (a, b) in grads.grads[weight.0].iter_mut().zip(&gw) {
                        *a += b;
                    }
                    for (a, b) in grads.grads[bias.0].iter_mut().zip(&gb) {
                        *a += b;
                    }
                    accumulate(&mut node_grads[x.0], gx);
                }
                Op::Relu(x) => {
                    let v = self.value(*x);
                    let gx = Tensor {
                        channels: v.channels,
                        len: v.len,
                        data: v
                            .data
                            .iter()
                            .zip(&g.data)
                            .map(|(&a, &gg)| if a > 0.0 { gg } else { 0.0 })
                            .collect(),
                    };
                    accumulate(&mut node_grads[x.0], gx);
                }
                Op::Tanh(x) => {
                    let y = &self.nodes[idx].value;
                    let gx = Tensor {
                        channels: y.channels,
                        len: y.len,
                        data: y
                            .data
                            .iter()
                            .zip(&g.data)
                            .map(|(&t, &gg)| gg * (1.0 - t * t))
                            .collect(),
                    };
                    accumulate(&mut node_grads[x.0], gx);
                }
                Op::Sigmoid(x) => {
                    let y = &self.nodes[idx].value;
                    let gx = Tensor {
                        channels: y.channels,
                        len: y.len,
                        data: y
                            .data
                            .iter()
                            .zip(&g.data)
                            .map(|(&s, &gg)| gg * s * (1.0 - s))
                            .collect(),
                    };
                    accumulate(&mut node_grads[x.0], gx);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let ga = Tensor {
                        channels: va.channels,
                        len: va.len,
                        data: vb.data.iter().zip(&g.data).map(|(&w, &gg)| gg * w).collect(),
                    };
                    let gb = Tensor {
                        channels: vb.channels,
                        len: vb.len,
                        data: va.data.iter().zip(&g.data).map(|(&w, &gg)| gg * w).collect(),
                    };
                    accumulate(&mut node_grads[a.0], ga);
                    accumulate(&mut node_grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut node_grads[a.0], g.clone());
                    accumulate(&mut node_grads[b.0], g);
                }
                Op::AvgPool2(x) => {
                    let v = self.value(*x);
                    let mut gx = Tensor::zeros(v.channels, v.len);
                    for c in 0..v.channels {
                        for n in 0..g.len {
                            let gg = 0.5 * g.at(c, n);
                            *gx.at_mut(c, 2 * n) += gg;
                            *gx.at_mut(c, 2 * n + 1) += gg;
                        }
                    }
                    accumulate(&mut node_grads[x.0], gx);
                }
                Op::Upsample2(x) => {
                    let v = self.value(*x);
                    let mut gx = Tensor::zeros(v.channels, v.len);
                    for c in 0..v.channels {
                        for n in 0..v.len {
                            *gx.at_mut(c, n) = g.at(c, 2 * n) + g.at(c, 2 * n + 1);
                        }
                    }
                    accumulate(&mut node_grads[x.0], gx);
                }
                Op::Concat(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let split = va.channels * va.len;
                    let ga = Tensor {
                        channels: va.channels,
                        len: va.len,
                        data: g.data[..split].to_vec(),
                    };
                    let gb = Tensor {
                        channels: vb.channels,
                        len: vb.len,
                        data: g.data[split..].to_vec(),
                    };
                    accumulate(&mut node_grads[a.0], ga);
                    accumulate(&mut node_grads[b.0], gb);
                }
            }
        }
        input_grad.ok_or_else(|| Error::ShapeMismatch("graph has no input node".into()))
    }
}

/// Mean squared error over all entries and its gradient with respect to
/// the estimate.
pub fn mse_loss(estimate: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if !estimate.same_shape(target) {
        return Err(Error::ShapeMismatch(format!(
            "mse {}x{} vs {}x{}",
            estimate.channels, estimate.len, target.channels, target.len
        )));
    }
    let count = estimate.count() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(estimate.channels, estimate.len);
    for i in 0..estimate.data.len() {
        let e = estimate.data[i] - target.data[i];
        loss += e * e;
        grad.data[i] = 2.0 * e / count;
    }
    Ok((loss / count, grad))
}

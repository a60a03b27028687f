//! Common interface for trainable separator networks.

use crate::error::Result;
use crate::nn::graph::{mse_loss, Graph, GradStore, NodeId, ParamSet};
use crate::nn::tensor::Tensor;

/// A network is its parameters plus a recipe for wiring one forward pass.
pub trait Model {
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;
    /// Append the architecture to `graph` starting from input node `x`.
    fn build(&self, graph: &mut Graph<'_>, x: NodeId) -> Result<NodeId>;
}

pub fn forward(model: &dyn Model, x: &Tensor) -> Result<Tensor> {
    let mut graph = Graph::new(model.params());
    let xin = graph.input(x.clone());
    let out = model.build(&mut graph, xin)?;
    Ok(graph.value(out).clone())
}

/// Mean-squared-error loss of one example and the parameter gradients.
pub fn loss_and_grads(model: &dyn Model, x: &Tensor, target: &Tensor) -> Result<(f64, GradStore)> {
    let mut graph = Graph::new(model.params());
    let xin = graph.input(x.clone());
    let out = model.build(&mut graph, xin)?;
    let (loss, grad) = mse_loss(graph.value(out), target)?;
    let mut grads = GradStore::zeros_like(model.params());
    graph.backward(out, grad, &mut grads)?;
    Ok((loss, grads))
}

//! Gated relational models and their training.

mod gated;
mod pooling;
mod structure;
mod tensor;
mod train;

pub use gated::{FactorModel, Forward, MappingActivations};
pub use pooling::SquarePoolingModel;
pub use structure::{CoreKind, CoreStructure, FactorGroup, ProductTriple};
pub use tensor::{compose_tensor, DenseTensor, MAX_DENSE_ENTRIES};
pub use train::{evaluate_loss, train, train_with_observer, EpochStats, Noise, TrainConfig, TrainOutcome};

use crate::math::Matrix;
use crate::Result;

/// A model trained by reconstructing clean targets from (possibly noisy)
/// image pairs.
pub trait Autoencoder: Clone {
    /// Mean reconstruction error over the minibatch.
    fn loss(&self, x: &Matrix, y: &Matrix, x_clean: &Matrix, y_clean: &Matrix) -> Result<f64>;

    /// Loss and its exact gradient, returned as a model of identical shape.
    fn loss_and_grad(
        &self,
        x: &Matrix,
        y: &Matrix,
        x_clean: &Matrix,
        y_clean: &Matrix,
    ) -> Result<(f64, Self)>;

    /// Mapping-unit activations, one row per pair.
    fn encode(&self, x: &Matrix, y: &Matrix) -> Result<Matrix>;

    /// Parameter tensors in a fixed order.
    fn tensors(&self) -> Vec<(&'static str, &[f64])>;

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])>;

    fn sgd_step(&mut self, grad: &Self, learning_rate: f64) {
        for ((_, p), (_, g)) in self.tensors_mut().into_iter().zip(grad.tensors()) {
            for (pv, gv) in p.iter_mut().zip(g) {
                *pv -= learning_rate * gv;
            }
        }
    }
}

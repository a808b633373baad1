//! Dense linear algebra, the MLP regressor, exact gradients and Adam.

mod adam;
pub mod checkpoint;
mod matrix;
mod mlp;
mod train;

pub use adam::{adam_step, AdamState, TrainConfig};
pub use matrix::{dot, Matrix};
pub use mlp::{
    backward, init_model, input_gradient, mse_loss, predict_rows, Activation, Architecture,
    DenseLayer, DropoutPlacement, GradientBundle, LayerGrad, MlpModel, Mode, Trace,
};
pub use train::{train, Trainer};

//! Dense autoencoder trained from scratch: PReLU hidden layers, linear
//! output, exact backpropagation of the mean squared error, and Adam.

mod adam;
mod network;
mod train;

pub use adam::{AdamState, BETA1, BETA2, EPSILON};
pub use network::{
    build_network, mse_loss, DenseLayer, FreezeGroup, Gradients, LayerGradient, Network,
    INITIAL_PRELU_SLOPE, ROW_CHUNK,
};
pub use train::{fit_autoencoder, fit_autoencoder_with, FitOptions};

//! Two-layer GCN and GraphSAGE models with manual backpropagation.

pub mod io;
pub mod layers;
pub mod loss;
pub mod model;
pub mod params;
pub mod probe;

pub use io::{read_params, write_params};
pub use layers::{gcn_layer_forward, sage_layer_forward, Activation, SageBlock};
pub use loss::{reconstruction_loss, softmax_cross_entropy};
pub use model::{
    predict_full, train_encoder, train_node_classifier, train_node_classifier_on,
    train_unsupervised_embeddings, EpochRecord, ModelConfig, TrainedClassifier, TrainedEncoder,
};
pub use params::{adam_step, AdamConfig, Arch, ModelParams, Tensor2D};
pub use probe::oversmoothing_probe;

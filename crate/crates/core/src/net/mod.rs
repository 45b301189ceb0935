//! Learning stack: tokenizer encoders, two-stream transformer with topology
//! attention, masked point-reconstruction loss, training and fine-tuning.

pub mod checkpoint;
pub mod config;
pub mod finetune;
pub mod gradcheck;
pub mod model;
pub mod params;
pub mod tape;
pub mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint};
pub use config::{AttentionMode, ModelConfig, Streams};
pub use finetune::{accuracy, attach_head, finetune_head, predict, FinetuneOptions, FinetuneResult, Labels, Strategy, Task};
pub use gradcheck::{gradcheck, GradcheckReport};
pub use model::{forward, grad, grad_scaled, loss_from_predictions, pretrain_loss, Graph, LossParts, Prediction, Stream};
pub use params::{init_params, Params};
pub use tape::{Tape, Tensor, Var};
pub use train::{cosine_lr, dataset_loss, trace_csv, train, AdamW, LossRecord, Sample, TrainOptions, TrainResult};

//! From-scratch MLP with exact input jets and parameter gradients.

mod checkpoint;
pub mod hexfloat;
mod jet;
mod mlp;

pub use checkpoint::{from_json, load_checkpoint, save_checkpoint, to_json, Meta};
pub use jet::{Jet2, JetShape};
pub use mlp::{init_params, loss_gradient, JetLoss, MlpParams, ParamGrad, PointLoss};

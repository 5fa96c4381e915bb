//! Architecture zoo: every network family used in the guidance experiments,
//! built declaratively from a [`NetworkSpec`].
//!
//! Each built [`NetworkState`] carries an ordered `tap_list` naming the
//! activations worth comparing across networks. [`NetworkState::forward_with_taps`]
//! returns the logits together with an [`ActivationRecord`] whose entries
//! match that list one to one, which is the contract the representational
//! similarity losses build on. Image families tap every block's post-norm
//! pre-activation output plus the head logits; sequence families tap each
//! stacked layer's full hidden sequence so all their taps share one
//! (b,T,width) shape.
//!
//! Building is deterministic: one spec and one rng state give bit-identical
//! parameters, and tap names and order depend on the spec alone.

mod batch;
mod build;
mod error;
mod families;
mod spec;
mod state;

pub use batch::{Batch, BatchInput};
pub use build::build_network;
pub use error::{Result, ZooError};
pub use spec::{Activation, Family, NetworkSpec};
pub use state::{ActivationRecord, Mode, NetworkState};

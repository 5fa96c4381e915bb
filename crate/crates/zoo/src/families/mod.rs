pub(crate) mod cnn;
pub(crate) mod common;
pub(crate) mod fcn;
pub(crate) mod rnn;
pub(crate) mod transformer;
pub(crate) mod vit;

//! Victim models: the wire-protocol adapter, the retrieval surrogate and the
//! trainable toy model used for masked training.

pub mod adapter;
mod mask;
mod surrogate;
mod toy;

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

pub use adapter::{serve, Adapter, AdapterConfig, Transport};
pub use mask::{choose_masked, mask_identifiers};
pub use surrogate::SurrogateModel;
pub use toy::{
    toy_generate, toy_loss, train_toy, EpochLoss, MaskedTrainConfig, ToyModel, OOV_COMMENT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("request {id} timed out")]
    Timeout { id: u64 },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("{0}")]
    Invalid(String),
}

/// Black-box access to a code comment generator.
pub trait CommentModel: Send + Sync {
    fn generate(&self, code: &str) -> Result<String, ModelError>;
}

impl<M: CommentModel + ?Sized> CommentModel for &M {
    fn generate(&self, code: &str) -> Result<String, ModelError> {
        (**self).generate(code)
    }
}

impl<M: CommentModel + ?Sized> CommentModel for Box<M> {
    fn generate(&self, code: &str) -> Result<String, ModelError> {
        (**self).generate(code)
    }
}

/// Stub that answers with the first three whitespace-separated words of the code.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoModel;

impl CommentModel for EchoModel {
    fn generate(&self, code: &str) -> Result<String, ModelError> {
        Ok(code
            .split_whitespace()
            .take(3)
            .collect::<Vec<_>>()
            .join(" "))
    }
}

/// Counts calls to the wrapped model.
pub struct Counting<M> {
    inner: M,
    calls: AtomicU64,
}

impl<M: CommentModel> Counting<M> {
    pub fn new(inner: M) -> Self {
        Counting {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<M: CommentModel> CommentModel for Counting<M> {
    fn generate(&self, code: &str) -> Result<String, ModelError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.generate(code)
    }
}

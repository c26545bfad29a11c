#![no_std]
extern crate alloc;

pub mod error;
pub mod linalg;
pub mod tensor;
pub mod channel;
pub mod fd_relay;
pub mod had_relay;
pub mod link;
pub mod terminal;
pub mod trial;
pub mod waterfill;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, C64};
pub use tensor::ComplexTensor3;

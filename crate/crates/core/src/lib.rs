//! Phase-sensitive amplification in a double-Λ atomic medium, from the
//! atomic response through simulated pulsed homodyne traces to quantum state
//! tomography of the output light.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atomic;
pub mod config;
pub mod error;
pub mod extract;
pub mod io;
pub mod phase;
pub mod pipeline;
pub mod synth;
pub mod tomography;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/atomic.md")]
    mod atomic {}
    #[doc = include_str!("../../../book/src/homodyne.md")]
    mod homodyne {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/tomography.md")]
    mod tomography {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}

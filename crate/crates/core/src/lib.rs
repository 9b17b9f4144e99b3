pub mod bench;
pub mod components;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod invariants;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod random;

pub use error::{Error, ErrorClass, Result};

// The book's Rust listings run as doc-tests of this crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/components.md")]
    mod components {}
    #[doc = include_str!("../../../book/src/local-invariants.md")]
    mod local_invariants {}
    #[doc = include_str!("../../../book/src/eigenpairs.md")]
    mod eigenpairs {}
    #[doc = include_str!("../../../book/src/spectral-triangles.md")]
    mod spectral_triangles {}
    #[doc = include_str!("../../../book/src/latent-positions.md")]
    mod latent_positions {}
    #[doc = include_str!("../../../book/src/chaining.md")]
    mod chaining {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
}

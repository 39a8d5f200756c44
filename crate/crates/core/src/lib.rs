pub mod curvature;
pub mod error;
pub mod example;
pub mod finite_diff;
pub mod germ;
pub mod invariants;
pub mod jets;
pub mod minkowski;
pub mod pencil;
pub mod sampling;
pub mod testing;

pub use error::{Error, Result};
pub use germ::{AmbientFrame, Germ};
pub use jets::{Jet4, Scalar};
pub use minkowski::NormModel;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/jets.md")]
    mod jets {}
    #[doc = include_str!("../../../book/src/norms.md")]
    mod norms {}
    #[doc = include_str!("../../../book/src/germs.md")]
    mod germs {}
    #[doc = include_str!("../../../book/src/curvature.md")]
    mod curvature {}
    #[doc = include_str!("../../../book/src/invariants.md")]
    mod invariants {}
    #[doc = include_str!("../../../book/src/pencils.md")]
    mod pencils {}
    #[doc = include_str!("../../../book/src/example.md")]
    mod example {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

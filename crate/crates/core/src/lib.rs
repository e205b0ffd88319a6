//! Deficiency spaces, deficiency indices and self-adjoint extensions of
//! symmetric operators given as finite matrix models, together with the
//! fiberwise construction that identifies the deficiency spaces of
//! `H_A ⊗ I + I ⊗ H_B` with `N±(H_A) ⊗ H_B` when `H_B` is self-adjoint.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: frames, orthogonal complements, principal angles and the
//!   κ-regularised Gram–Schmidt recursion.
//! * [`operator`]: operator models, deficiency spaces, regularity and the
//!   Cayley transform, plus the interval presets.
//! * [`extension`]: von Neumann's parametrisation of self-adjoint
//!   extensions and their verification.
//! * [`frames`]: the z-dependent bases of `R(A + z)` and of its complement,
//!   and the unitaries that carry each complement to a fixed reference.
//! * [`bipartite`]: the block operator over a finite weighted measure space
//!   and its deficiency spaces computed directly and fiber by fiber.
//!
//! ```
//! use deficiency::linalg::Tolerances;
//! use deficiency::operator::{deficiency_indices, momentum_interval, validate_symmetric};
//!
//! let tol = Tolerances::default();
//! let p = momentum_interval(64).unwrap();
//! validate_symmetric(&p, &tol).unwrap();
//! assert_eq!(deficiency_indices(&p, &tol).unwrap(), (1, 1));
//! ```

pub mod bipartite;
pub mod error;
pub mod extension;
pub mod frames;
pub mod io;
pub mod linalg;
pub mod operator;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, Frame, Tolerances, C64};
pub use operator::{OperatorModel, Sign};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/operator-models.md")]
    struct OperatorModels;
    #[doc = include_str!("../../../book/src/extensions.md")]
    struct Extensions;
    #[doc = include_str!("../../../book/src/frames.md")]
    struct Frames;
    #[doc = include_str!("../../../book/src/bipartite.md")]
    struct Bipartite;
    #[doc = include_str!("../../../book/src/tolerances.md")]
    struct Tolerances;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}

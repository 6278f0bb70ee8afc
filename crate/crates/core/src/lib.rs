//! Physical-layer network coding over Gaussian-integer lattices.
//!
//! The crate is layered bottom-up:
//!
//! * [`gint`]: the Euclidean domain ℤ[i].
//! * [`snf`]: Smith normal form of Gaussian-integer matrices.
//! * [`ffield`]: the finite fields ℤ[i]/(π).
//! * [`lattice`]: complex lattices, partitions Λ/Λ′ and their labelings.
//! * [`sigcode`]: convolutional signal codes with Tomlinson–Harashima
//!   precoding and a stack decoder.
//! * [`cfwd`]: compute-and-forward rates, coefficient selection and relay
//!   decoding.
//! * [`channel`]: seeded randomness and the Gaussian multiple-access channel.
//! * [`netsim`]: the two-transmitter, two-relay throughput experiment.

mod error;

pub mod cfwd;
pub mod channel;
pub mod ffield;
pub mod gint;
pub mod lattice;
pub mod netsim;
pub mod sigcode;
pub mod snf;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gaussian-integers.md")]
    mod gaussian_integers {}
    #[doc = include_str!("../../../book/src/smith-normal-form.md")]
    mod smith_normal_form {}
    #[doc = include_str!("../../../book/src/finite-fields.md")]
    mod finite_fields {}
    #[doc = include_str!("../../../book/src/lattice-partitions.md")]
    mod lattice_partitions {}
    #[doc = include_str!("../../../book/src/signal-codes.md")]
    mod signal_codes {}
    #[doc = include_str!("../../../book/src/compute-and-forward.md")]
    mod compute_and_forward {}
    #[doc = include_str!("../../../book/src/relay-simulation.md")]
    mod relay_simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

//! Directed polymers on the complete graph with `N` sites, viewed as products of
//! i.i.d. positive random matrices.
//!
//! Every partition function is carried in the log domain. The crate is laid out
//! bottom-up:
//!
//! - [`logspace`], [`env`], [`partition`]: log-domain kernels, disorder
//!   environments, the basic recursion and the path-enumeration oracle.
//! - [`stable`]: the one-sided α-stable law (sampler, distribution function),
//!   the index-1 stable law and its Lévy exponent.
//! - [`projective`]: the projective metric, contraction coefficients and
//!   certified limit directions.
//! - [`lyapunov`]: free energy, fluctuations and large-`N` asymptotics.
//! - [`polymer`]: finite and infinite-volume polymer path measures.
//! - [`front`]: front profiles, extremes and perturbed environments.
//! - [`stats`]: goodness-of-fit tools shared by the experiments.

pub mod env;
pub mod error;
pub mod front;
pub mod logspace;
pub mod lyapunov;
pub mod partition;
pub mod polymer;
pub mod projective;
pub mod quad;
pub mod rng;
pub mod stable;
pub mod stats;

pub use env::{EnvSpec, EnvironmentMatrix};
pub use error::{Error, Result};
pub use logspace::LogValue;
pub use partition::{PartitionVector, SimplexPoint};
pub use rng::{derive_substream, Substreams};

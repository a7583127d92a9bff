//! Sparse neural networks on fixed bipartite graph topologies.
//!
//! The connection graph between consecutive layers is chosen *before*
//! training from one of six random or structured bipartite constructions
//! (or left fully connected), and only the weights of existing edges are
//! ever stored or updated. The crate provides:
//!
//! * [`topology`] — the bipartite adjacency constructions,
//! * [`linalg`] — dense and CSR kernels backing the masked layers,
//! * [`spectral`] — graph Laplacian eigenvalues and connectivity metrics,
//! * [`network`] — masked multilayer perceptrons with minibatch SGD and
//!   Nesterov momentum,
//! * [`dataset`] — IDX (MNIST) ingestion and seeded synthetic data,
//! * [`experiment`] — the sweep/report harness behind the `sparsenet` CLI.
//!
//! All randomness flows through ChaCha8 (`rand_chacha`) seeded with 64-bit
//! seeds, so every topology, initialization and training run is exactly
//! reproducible from its configuration.
//!
//! ```
//! use sparsenet::spectral;
//! use sparsenet::topology::{self, ConstructionKind, ConstructionSpec};
//!
//! // every input neuron keeps 4 of 16 possible connections
//! let spec = ConstructionSpec::new(ConstructionKind::FibonacciRotating, 4);
//! let topo = topology::build(spec, 32, 16).unwrap();
//! assert_eq!(topo.density(), 0.25);
//!
//! let report = spectral::analyze(&topo).unwrap();
//! assert!(report.algebraic_connectivity_standard > 0.0);
//! assert_eq!(report.component_count, 1);
//! ```

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod network;
pub mod seed;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};

//! Cheeger partitions and p-Laplacian spectra on weighted graphs with
//! Dirichlet boundary weights.
//!
//! The domain model is a finite graph whose vertices carry volumes and
//! boundary couplings; `per(S)/vol(S)` plays the role of the perimeter-to-area
//! ratio of a subset of an open domain. On top of it the library provides:
//!
//! * exact single-set Cheeger solvers (enumeration and Dinkelbach/min-cut),
//! * first p-Laplacian eigenvalues for `p` in `(1, 4]` by inverse power
//!   iteration, with Euler-Lagrange residuals and Cheeger-type lower bounds,
//! * N-chamber partition objectives weighted by a component-wise function
//!   `phi` (q-norms, weighted sums, max), solved exhaustively on small
//!   domains and by 1-adjustment / spectral-support alternation at scale,
//! * experiment drivers sweeping `p` and `q` with CSV output plus certificate
//!   re-verification of solver reports.

pub mod cheeger;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod graph;
pub mod instances;
pub mod io;
pub mod labeling;
pub mod partition;
pub mod phi;

pub use error::{Error, Result};

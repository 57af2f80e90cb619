//! Direction-of-arrival estimation for uniform linear arrays with the
//! propagator family: the classical propagator `Q` and its variants `Q1`,
//! `Q2`, and the extended propagators `Psi_ni` built from an `n`-fold block
//! partition of the covariance matrix. MUSIC and ESPRIT are included as
//! baselines, together with a seeded Monte Carlo harness.
//!
//! ```
//! use propdoa::prelude::*;
//!
//! let array = ArrayConfig::half_wavelength(18)?;
//! let a = channel_matrix(&array, &[10.0, 21.0, 45.0])?;
//! let cov = theoretical_covariance(&a, &[1.0; 3], 0.0)?;
//!
//! let scheme = make_partition(18, 3, 4)?;
//! let psi41 = extended_propagator(&cov, &scheme, 1, &KStrategy::cyclic())?;
//! let spectrum = spectrum_from_operator(&psi41, &array, &GridSpec::default())?;
//! let doa = find_peaks(&spectrum, 3)?;
//! assert_eq!(doa.angles_deg(), &[10.0, 21.0, 45.0]);
//! # Ok::<(), propdoa::Error>(())
//! ```

pub mod array_model;
pub mod cli;
pub mod covariance;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod method;
pub mod propagators;
pub mod synthesis;

pub use error::{Error, Result};

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::array_model::{
        channel_matrix, exchange_matrix, steering_vector, ArrayConfig, SteeringMatrix,
    };
    pub use crate::covariance::{
        covariance_block, make_partition, sample_covariance, selection_matrix,
        theoretical_covariance, CovarianceEstimate, PartitionScheme,
    };
    pub use crate::estimators::{
        eigen_subspaces, esprit, find_peaks, music_spectrum, spectrum_from_operator,
        AngularSpectrum, DoaEstimate, GridSpec,
    };
    pub use crate::experiments::{
        averaged_spectrum, rmse, rmse_vs_snr, spectrum_correlation, ExperimentPlan,
    };
    pub use crate::linalg::{CMatrix, C64};
    pub use crate::method::MethodId;
    pub use crate::propagators::{
        assembled_psi, enumerate_operators, extended_propagator, propagator_q1, propagator_q2,
        pseudo_inverse, standard_propagator, transfer_operator, KStrategy, PropagatorOperator,
    };
    pub use crate::synthesis::{simulate_snapshots, Scenario, SnapshotBlock};
    pub use crate::Error;
}

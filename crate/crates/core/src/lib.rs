//! Exact thermodynamics of the one-dimensional modified q-state Potts chain.
//!
//! Bonds between equal neighbouring spins carry `cos(pi) = -1`, unequal ones
//! `+1`; both the coupling `J` and the field `h` multiply that bond term. The
//! `q x q` transfer matrix has a two-valued spectrum, which gives closed forms
//! for the free energy, entropy, magnetization, susceptibility and heat
//! capacity. The [`oracle`] module provides independent brute-force routes and
//! [`thermo::fd_verify`] checks every derivative numerically.

pub mod cli;
mod error;
pub mod model;
pub mod oracle;
pub mod sweep;
pub mod table_io;
pub mod thermo;
pub mod transfer;

pub use error::{Error, Result};
pub use model::{
    bond_weight, config_energy, kronecker_interaction, ModelParams, Spin, SpinConfig, ThermoState,
};
pub use oracle::{
    enumerate_partition, finite_n_free_energy, oracle_report, trace_power_partition, OracleReport,
    Route,
};
pub use sweep::{
    find_peak, q_ordering_check, refine_peak, sweep_1d, sweep_2d, Axis, GridSpec, Observable,
    SweepTable,
};
pub use thermo::{
    asymptotic_entropy_limit, entropy, fd_verify, free_energy, heat_capacity, magnetization,
    magnetization_zero_point, susceptibility, FdReport, Limit, StableCore, ThermoPoint,
};
pub use transfer::{
    build_matrix, closed_form_spectrum, iterate_partial_partition, numeric_dominant_eigenvalue,
    partition_function, EigenSpectrum, PartialPartitionVector, Scaling, TransferMatrix,
};

pub mod bessel;
pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod functionals;
pub mod ground_state;
pub mod ode;
pub mod quadrature;
pub mod spectral_core;

//! Covariance-constrained parametrization of stable linear stochastic systems.
//!
//! Every Hurwitz matrix `A` of `dx = A x dt + dw` (noise covariance `Σ_w`)
//! factors uniquely as `A = (−½Σ_w + S)Σ⁻¹`, where `Σ` is the stationary
//! covariance and `S` is skew-symmetric. The modules below implement the
//! map in both directions and measure how the size of `S` shapes the
//! spectrum ([`spectrum`]), the transient growth ([`excitability`]) and the
//! spectral density ([`frequency`]) of the system, together with simulation
//! ([`simulate`]) and ensemble ([`ensembles`]) tooling.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod ensembles;
pub mod error;
pub mod excitability;
pub mod frequency;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod simulate;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{
    forward_param, inverse_param, solve_lyapunov, sym_inv_sqrt, AlphaFamily, Parametrization,
    ScaledSkewFamily, SystemModel, Tolerances,
};
pub use scalar::Real;

pub type Matrix64 = linalg::Mat<f64>;
pub type SystemModel64 = SystemModel<f64>;
pub type Parametrization64 = Parametrization<f64>;
pub type AlphaFamily64 = AlphaFamily<f64>;
pub type ScaledSkewFamily64 = ScaledSkewFamily<f64>;
pub type EigenLocus64 = spectrum::EigenLocus<f64>;
pub type AsymptoticReport64 = spectrum::AsymptoticReport<f64>;
pub type AbscissaSweep64 = excitability::AbscissaSweep<f64>;
pub type SpectrumTable64 = frequency::SpectrumTable<f64>;
pub type EmpiricalStats64 = simulate::EmpiricalStats<f64>;
pub type EnsembleSpec64 = ensembles::EnsembleSpec<f64>;

pub type Matrix32 = linalg::Mat<f32>;
pub type SystemModel32 = SystemModel<f32>;
pub type Parametrization32 = Parametrization<f32>;
pub type AlphaFamily32 = AlphaFamily<f32>;

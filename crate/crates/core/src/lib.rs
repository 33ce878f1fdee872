//! Hard-sphere configurations with attractive Riesz interactions: discrete
//! and continuum energies, the bridge between them, and minimizers.

pub mod bridge;
pub mod cellint;
pub mod continuum_energy;
pub mod discrete_energy;
pub mod domain;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod neighbors;
pub mod optimizer;
pub mod packing;
pub mod quadrature;
pub mod reference;
pub mod summation;

pub use domain::{Ball, AxisBox, CellIndex, Configuration, DensityField, Dim, Params, PixelSet, Point, Region, ScaledEmpiricalMeasure};
pub use error::{Error, Result};

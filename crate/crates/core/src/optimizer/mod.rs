//! Constrained minimization: Metropolis annealing over hard-sphere
//! configurations, projected gradient descent over density fields, and the
//! shape diagnostics used to compare their outputs with balls.

mod anneal;
mod descent;
mod shape;

pub use anneal::{anneal_discrete, AnnealInit, AnnealResult, AnnealSchedule, AnnealTraceRow, Objective};
pub use descent::{minimize_density, DensityProblem, DensityResult, DescentOptions, DescentTraceRow, KktReport, kkt_report};
pub use shape::{shape_diagnostics, shape_of_configuration, shape_of_density, ShapeDiagnostics, Subject};

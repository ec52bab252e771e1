//! Bin allocation and periodic collection routing for garbage accumulation
//! points (GAPs).

pub mod bb;
pub mod benders;
pub mod check;
pub mod error;
pub mod fixed;
pub mod generate;
pub mod instance;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod preproc;
pub mod report;

pub use error::{Error, Result};
pub use fixed::Fixed;
pub use instance::Instance;
pub use report::{MethodSpec, SolveOptions, SolveReport, SolveStatus};

/// Solves `inst` with the configured method.
pub fn solve(inst: &Instance, spec: MethodSpec, opts: &SolveOptions) -> Result<SolveReport> {
    match spec.method {
        report::Method::Mip => model::solve_full(inst, spec.vis, opts),
        report::Method::Benders => benders::ubbc_solve(inst, spec, opts),
    }
}

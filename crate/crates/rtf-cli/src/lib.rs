//! Command-line front end for random tessellation forests: prior drawing,
//! the rotated-cube benchmark, fit/predict plumbing, and the experiment
//! harness. Exposed as a library so integration tests and fuzz targets can
//! drive the same code paths as the binary.

pub mod args;
pub mod config;
pub mod report;
pub mod runner;
pub mod svg;

use rtf_core::error::Error;

/// Process exit code for an error: 1 usage, 3 numerical, 2 anything else
/// (data, I/O, model).
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => 1,
        Error::RejectionCapExceeded(_) => 3,
        _ => 2,
    }
}

pub fn dispatch(cli: &args::Cli) -> rtf_core::error::Result<()> {
    match &cli.command {
        args::Command::Draw(a) => runner::run_draw(a),
        args::Command::Cube(a) => runner::run_cube(a),
        args::Command::Fit(a) => runner::run_fit(a),
        args::Command::Predict(a) => runner::run_predict(a),
        args::Command::Experiment(a) => runner::run_experiment(a),
    }
}

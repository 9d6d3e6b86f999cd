//! Command-line companion to `symparam-core`: configuration documents,
//! checkpoint persistence, plain-text report formats and the conditioning
//! probe. The binary in `main.rs` is a thin shell over these modules.

pub mod checkpoint;
pub mod config;
pub mod io;
pub mod probe;

/// Process exit code for an error: 2 usage, 3 data/format, 4 numerical.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if let Some(e) = err.downcast_ref::<symparam_core::Error>() {
        return match e {
            symparam_core::Error::Usage(_) | symparam_core::Error::Domain(_) => 2,
            symparam_core::Error::ShapeMismatch(_) => 3,
            symparam_core::Error::Numerical(_) => 4,
        };
    }
    // IO failures, TOML/JSON parse errors and everything else file-shaped
    3
}

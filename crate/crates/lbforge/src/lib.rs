//! File formats, scenario handling and the command implementations behind
//! the `lbforge` binary.

pub mod bundle;
pub mod commands;
pub mod formats;
pub mod scenario;
pub mod trace;
pub mod victims;

//! Scripted, headless runs: load a world and an input script, step at a fixed
//! dt, apply rewiring directives, and record a line-delimited JSON trace.

mod directive;
mod run;
mod session;

pub use directive::{apply_directive, Directive, DirectiveAction};
pub use run::{
    cmd_run, load_script_file, load_world_file, parse_world_file, render_trace, run_trace,
    validate_world_file, write_atomic, HarnessError, RunConfig, RunOutcome, TraceHeader,
    DEFAULT_DT,
};
pub use session::{PickRecord, Session, SessionError, TraceRecord, TIME_SLACK};

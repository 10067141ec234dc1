//! The dataflow graph and its execution environment.
//!
//! A [`Dataflow`] holds [`FilterNode`]s connected output port to input port.
//! Each [`step`](Dataflow::step) injects device samples and pending scene
//! notifications, then runs every enabled node once in topological order:
//! collect its input buffers, process them, and send the emitted samples to the
//! listeners of each output port. Scene writes made while processing are only
//! applied after the last node has run, so every read inside a step sees the
//! scene as it was when the step began.

mod behavior;
mod graph;
mod model;

pub use behavior::{Behavior, Inputs, ProcessContext, Role, StepSink};
pub use graph::{Dataflow, Edge, FilterNode, InputPort, OutputPort, PortSpec};
pub use model::{
    AppliedWrite, Emission, ExecutionModel, Injection, SinglePropagation, StepReport,
};

pub use crate::scene::{DeferredWrite, Flag, Mutation};

use serde::Serialize;
use thiserror::Error;

use crate::sample::{Params, PortKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("node `{0}` is already registered")]
    DuplicateId(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no {dir} port `{port}`")]
    UnknownPort {
        node: String,
        port: String,
        dir: &'static str,
    },
    #[error("cannot connect {src_kind} port `{src}` to {dst_kind} port `{dst}`")]
    TypeMismatch {
        src: String,
        src_kind: PortKind,
        dst: String,
        dst_kind: PortKind,
    },
    #[error("connecting `{src}` -> `{dst}` would create a cycle")]
    CycleCreated { src: String, dst: String },
    #[error("dataflow contains a cycle through {0:?}")]
    CycleDetected(Vec<String>),
    #[error("node `{node}` ({behavior}) does not support {verb:?}")]
    UnsupportedVerb {
        node: String,
        behavior: String,
        verb: Verb,
    },
    #[error("node `{node}` ({behavior}) has no parameter `{key}`")]
    UnknownParam {
        node: String,
        behavior: String,
        key: String,
    },
    #[error("invalid value for `{key}` on `{node}`: {reason}")]
    InvalidParam {
        node: String,
        key: String,
        reason: String,
    },
    #[error("`{0}` is not a virtual input device")]
    UnknownDevice(String),
    #[error("node `{0}` must not have input ports")]
    DeviceHasInputs(String),
    #[error("dt must be positive, got {0}")]
    InvalidDt(f64),
    #[error("duplicate port `{port}` on node `{node}`")]
    DuplicatePort { node: String, port: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("node `{0}` has no Pick output port")]
    NoPickPort(String),
    #[error("composite exports unknown internal port `{node}.{port}`")]
    UnknownInternalPort { node: String, port: String },
    #[error("composite's internal dataflow contains a cycle through {0:?}")]
    InternalCycle(Vec<String>),
    #[error("start position ({x}, {z}) is not on any path")]
    InvalidStartPose { x: f64, z: f64 },
}

/// Verbs a control message can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Enable,
    Disable,
    SetMode,
    SetParam,
}

/// A message from one filter (or the harness) that changes another filter's behavior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlMessage {
    pub target: String,
    pub verb: Verb,
    pub payload: Params,
}

impl ControlMessage {
    pub fn enable(target: &str) -> Self {
        ControlMessage {
            target: target.to_owned(),
            verb: Verb::Enable,
            payload: Params::new(),
        }
    }

    pub fn disable(target: &str) -> Self {
        ControlMessage {
            target: target.to_owned(),
            verb: Verb::Disable,
            payload: Params::new(),
        }
    }

    pub fn set_param(target: &str, payload: Params) -> Self {
        ControlMessage {
            target: target.to_owned(),
            verb: Verb::SetParam,
            payload,
        }
    }

    pub fn set_mode(target: &str, mode: &str) -> Self {
        ControlMessage {
            target: target.to_owned(),
            verb: Verb::SetMode,
            payload: Params::new().with("mode", mode),
        }
    }
}

/// Result of applying a control message: the values it replaced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ack {
    pub prior: Params,
}

#[cfg(test)]
mod tests;

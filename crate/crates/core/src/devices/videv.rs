//! Virtual input devices: source filters fed by injected device samples.

use crate::flow::{Behavior, FlowError, Inputs, ProcessContext, Role};
use crate::impl_any;
use crate::sample::{PortKind, Sample};

/// Forwards every injected sample of one kind to a single output port.
#[derive(Debug, Clone)]
pub struct PassDevice {
    type_name: String,
    kind: PortKind,
    oport: String,
}

impl PassDevice {
    pub fn new(type_name: &str, kind: PortKind, oport: &str) -> Self {
        PassDevice {
            type_name: type_name.to_owned(),
            kind,
            oport: oport.to_owned(),
        }
    }
}

impl Behavior for PassDevice {
    fn type_name(&self) -> &str {
        &self.type_name
    }

    fn role(&self) -> Role {
        Role::Device
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        for s in inputs.device().iter().filter(|s| s.kind() == self.kind) {
            cx.emit(&self.oport, s.clone());
        }
        Ok(())
    }

    impl_any!();
}

/// Desktop window input: mouse position on `mouse`, and each declared key on
/// an output port named after it.
#[derive(Debug, Clone)]
pub struct XInput {
    keys: Vec<String>,
}

impl XInput {
    pub fn new(keys: Vec<String>) -> Self {
        XInput { keys }
    }
}

impl Behavior for XInput {
    fn type_name(&self) -> &str {
        "XInput"
    }

    fn role(&self) -> Role {
        Role::Device
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        for s in inputs.device() {
            match s {
                Sample::Locator(_) => cx.emit("mouse", s.clone()),
                Sample::Button { id, .. } if self.keys.contains(id) => cx.emit(id, s.clone()),
                _ => {}
            }
        }
        Ok(())
    }

    impl_any!();
}

use crate::flow::{Ack, Behavior, FlowError, Inputs, ProcessContext, Verb};
use crate::impl_any;
use crate::sample::{ParamValue, Params, Pose, Sample};

use super::apply_params;

/// How locator samples move the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveMode {
    /// The target's transform becomes the locator.
    Absolute,
    /// The target moves by the change between consecutive locators.
    Offset,
}

impl MoveMode {
    pub fn parse(s: &str) -> Option<MoveMode> {
        match s.to_ascii_lowercase().as_str() {
            "absolute" => Some(MoveMode::Absolute),
            "offset" => Some(MoveMode::Offset),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveMode::Absolute => "absolute",
            MoveMode::Offset => "offset",
        }
    }
}

/// Moves an object according to a locator stream.
///
/// The target comes from the `obj` port (a Pick) or a fixed `object`
/// parameter. In offset mode the first locator only sets the reference; the
/// reference is dropped whenever the node is disabled so re-enabling never jumps.
#[derive(Debug, Clone)]
pub struct MoveByLocator {
    type_name: &'static str,
    pos_port: &'static str,
    mode: MoveMode,
    target: Option<String>,
    reference: Option<Pose>,
}

impl MoveByLocator {
    pub fn new(mode: MoveMode, target: Option<String>) -> Self {
        MoveByLocator {
            type_name: "MoveByLocator",
            pos_port: "pos",
            mode,
            target,
            reference: None,
        }
    }

    /// Absolute mover bound to the viewpoint, reading port `iportLocator`.
    pub fn viewpoint() -> Self {
        MoveByLocator {
            type_name: "Location2Viewpoint",
            pos_port: "iportLocator",
            mode: MoveMode::Absolute,
            target: Some(crate::scene::VIEWPOINT.to_owned()),
            reference: None,
        }
    }

    pub fn mode(&self) -> MoveMode {
        self.mode
    }

    pub fn target(&self) -> Option<&str> {
        self.target.as_deref()
    }
}

impl Behavior for MoveByLocator {
    fn type_name(&self) -> &str {
        self.type_name
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        if let Some(pick) = inputs.last("obj").and_then(Sample::as_pick) {
            self.target = pick.map(str::to_owned);
        }
        let Some(pos) = inputs.last(self.pos_port).and_then(Sample::as_locator).copied() else {
            return Ok(());
        };
        let Some(target) = self.target.clone() else {
            // keep tracking so a later target starts from a fresh delta
            if self.mode == MoveMode::Offset {
                self.reference = Some(pos);
            }
            return Ok(());
        };
        match self.mode {
            MoveMode::Absolute => cx.set_transform(&target, pos),
            MoveMode::Offset => {
                let Some(reference) = self.reference.replace(pos) else {
                    return Ok(());
                };
                // unknown objects are skipped
                let Some(current) = cx.scene().transform(&target) else {
                    return Ok(());
                };
                let delta_rot = pos.orientation * reference.orientation.inverse();
                let next = Pose::new(
                    current.position + (pos.position - reference.position),
                    delta_rot * current.orientation,
                );
                cx.set_transform(&target, next);
            }
        }
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        let name = self.type_name;
        let verb_for_params = if verb == Verb::SetMode { Verb::SetParam } else { verb };
        apply_params(node, name, verb_for_params, payload, |key, value| match key {
            "mode" => {
                let m = MoveMode::parse(&value.as_text())
                    .ok_or_else(|| format!("unknown mode `{}`", value.as_text()))?;
                let old = std::mem::replace(&mut self.mode, m);
                self.reference = None;
                Ok(Some(ParamValue::from(old.name())))
            }
            "object" if verb == Verb::SetParam => {
                let old = self.target.replace(value.as_text());
                self.reference = None;
                Ok(Some(ParamValue::from(old.unwrap_or_default())))
            }
            _ => Ok(None),
        })
    }

    fn on_enabled(&mut self, _on: bool) {
        self.reference = None;
    }

    impl_any!();
}

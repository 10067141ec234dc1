use crate::flow::{
    Ack, Behavior, ControlMessage, Dataflow, FlowError, Inputs, ProcessContext, Verb,
};
use crate::impl_any;
use crate::sample::{ParamValue, Params, PortKind, Sample};

use super::{apply_params, presses};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovePhase {
    Selecting,
    Moving,
}

/// Switches between selecting (the selection IT runs) and moving (the mover
/// runs) on grab and release presses.
///
/// The enable state of both targets is re-sent on the first process, after
/// re-enabling and after the selection IT is swapped.
#[derive(Debug, Clone)]
pub struct MoveControl {
    phase: MovePhase,
    current_pick: Option<String>,
    selection_it: String,
    mover: String,
    sync_pending: bool,
}

impl MoveControl {
    pub fn new(selection_it: &str, mover: &str) -> Self {
        MoveControl {
            phase: MovePhase::Selecting,
            current_pick: None,
            selection_it: selection_it.to_owned(),
            mover: mover.to_owned(),
            sync_pending: true,
        }
    }

    pub fn phase(&self) -> MovePhase {
        self.phase
    }

    pub fn current_pick(&self) -> Option<&str> {
        self.current_pick.as_deref()
    }

    pub fn selection_it(&self) -> &str {
        &self.selection_it
    }

    pub fn mover(&self) -> &str {
        &self.mover
    }

    fn sync(&self, cx: &mut ProcessContext<'_>) {
        let moving = self.phase == MovePhase::Moving;
        let toggle = |target: &str, on: bool| {
            if on {
                ControlMessage::enable(target)
            } else {
                ControlMessage::disable(target)
            }
        };
        cx.send(toggle(&self.selection_it, !moving));
        cx.send(toggle(&self.mover, moving));
    }
}

impl Behavior for MoveControl {
    fn type_name(&self) -> &str {
        "MoveControl"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        if self.sync_pending {
            self.sync_pending = false;
            self.sync(cx);
        }
        if self.phase == MovePhase::Selecting {
            if let Some(pick) = inputs.last("selected").and_then(Sample::as_pick) {
                self.current_pick = pick.map(str::to_owned);
            }
        }
        if presses(inputs.get("grab")) > 0 && self.phase == MovePhase::Selecting {
            if let Some(pick) = self.current_pick.clone() {
                self.phase = MovePhase::Moving;
                self.sync(cx);
                cx.emit("obj", Sample::Pick(Some(pick)));
            }
        }
        if presses(inputs.get("release")) > 0 && self.phase == MovePhase::Moving {
            self.phase = MovePhase::Selecting;
            self.sync(cx);
        }
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        apply_params(node, "MoveControl", verb, payload, |key, value| {
            let slot = match key {
                "selection_it" | "selectionIT" => &mut self.selection_it,
                "mover" => &mut self.mover,
                _ => return Ok(None),
            };
            let old = std::mem::replace(slot, value.as_text());
            self.sync_pending = true;
            Ok(Some(ParamValue::from(old)))
        })
    }

    fn on_enabled(&mut self, on: bool) {
        if on {
            self.sync_pending = true;
        }
    }

    impl_any!();
}

/// Points the move control `mc` at a new selection IT, returning the old one.
pub fn set_selection_it(flow: &mut Dataflow, mc: &str, it: &str) -> Result<String, FlowError> {
    let node = flow
        .node(it)
        .ok_or_else(|| FlowError::UnknownNode(it.to_owned()))?;
    if !node.oports().iter().any(|p| p.kind == PortKind::Pick) {
        return Err(FlowError::NoPickPort(it.to_owned()));
    }
    let control = flow
        .behavior_mut::<MoveControl>(mc)
        .ok_or_else(|| FlowError::UnknownNode(mc.to_owned()))?;
    let prior = std::mem::replace(&mut control.selection_it, it.to_owned());
    control.sync_pending = true;
    Ok(prior)
}

/// Checks that the enable state of the selection IT and the mover matches the
/// phase of the move control `id`.
pub fn check_move_control(flow: &Dataflow, id: &str) -> Result<(), String> {
    let mc = flow
        .behavior::<MoveControl>(id)
        .ok_or_else(|| format!("`{id}` is not a MoveControl"))?;
    let it_on = flow.is_enabled(&mc.selection_it);
    let mover_on = flow.is_enabled(&mc.mover);
    let moving = mc.phase == MovePhase::Moving;
    if moving && mc.current_pick.is_none() {
        return Err("moving without a pick".into());
    }
    if it_on != Some(!moving) || mover_on != Some(moving) {
        return Err(format!(
            "phase {:?} with {} enabled={:?}, {} enabled={:?}",
            mc.phase, mc.selection_it, it_on, mc.mover, mover_on
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::MoveByLocator;
    use crate::filters::MoveMode;
    use crate::flow::{FilterNode, PortSpec, Role};
    use crate::scene::SceneState;

    /// Emits a fixed pick each step on `pick`.
    struct FixedPick(Option<String>);

    impl Behavior for FixedPick {
        fn type_name(&self) -> &str {
            "FixedPick"
        }
        fn role(&self) -> Role {
            Role::Selector
        }
        fn process(&mut self, _: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
            cx.emit("pick", Sample::Pick(self.0.clone()));
            Ok(())
        }
        impl_any!();
    }

    fn world(pick: Option<&str>) -> Dataflow {
        let mut f = Dataflow::new();
        f.register_node(
            FilterNode::new(
                "it",
                vec![],
                vec![PortSpec::new("pick", PortKind::Pick)],
                Box::new(FixedPick(pick.map(str::to_owned))),
            )
            .unwrap(),
        )
        .unwrap();
        f.register_node(
            FilterNode::new(
                "mc",
                vec![
                    PortSpec::new("grab", PortKind::Button),
                    PortSpec::new("release", PortKind::Button),
                    PortSpec::new("selected", PortKind::Pick),
                ],
                vec![PortSpec::new("obj", PortKind::Pick)],
                Box::new(MoveControl::new("it", "mover")),
            )
            .unwrap(),
        )
        .unwrap();
        f.register_node(
            FilterNode::new(
                "mover",
                vec![PortSpec::new("obj", PortKind::Pick), PortSpec::new("pos", PortKind::Locator)],
                vec![],
                Box::new(MoveByLocator::new(MoveMode::Absolute, None)),
            )
            .unwrap(),
        )
        .unwrap();
        f.connect("it", "pick", "mc", "selected").unwrap();
        f.connect("mc", "obj", "mover", "obj").unwrap();
        f
    }

    fn press(f: &mut Dataflow, port: &str) {
        f.deliver("mc", port, Sample::button(port, true)).unwrap();
    }

    fn step(f: &mut Dataflow) {
        f.step(&[], 0.1, &mut SceneState::new()).unwrap();
        check_move_control(f, "mc").unwrap();
    }

    #[test]
    fn grab_without_pick_stays_selecting() {
        let mut f = world(None);
        step(&mut f);
        press(&mut f, "grab");
        step(&mut f);
        assert_eq!(f.behavior::<MoveControl>("mc").unwrap().phase(), MovePhase::Selecting);
    }

    #[test]
    fn grab_and_release_cycle() {
        let mut f = world(Some("A"));
        step(&mut f);
        press(&mut f, "grab");
        step(&mut f);
        assert_eq!(f.behavior::<MoveControl>("mc").unwrap().phase(), MovePhase::Moving);
        assert_eq!(f.behavior::<MoveByLocator>("mover").unwrap().target(), Some("A"));
        assert_eq!(f.is_enabled("it"), Some(false));
        press(&mut f, "release");
        step(&mut f);
        assert_eq!(f.behavior::<MoveControl>("mc").unwrap().phase(), MovePhase::Selecting);
        assert_eq!(f.is_enabled("mover"), Some(false));
    }

    #[test]
    fn release_while_selecting_is_noop() {
        let mut f = world(Some("A"));
        step(&mut f);
        press(&mut f, "release");
        step(&mut f);
        assert_eq!(f.behavior::<MoveControl>("mc").unwrap().phase(), MovePhase::Selecting);
    }

    #[test]
    fn swap_checks_target() {
        let mut f = world(Some("A"));
        assert_eq!(set_selection_it(&mut f, "mc", "it").unwrap(), "it");
        assert_eq!(set_selection_it(&mut f, "mc", "it").unwrap(), "it");
        assert_eq!(
            set_selection_it(&mut f, "mc", "mover"),
            Err(FlowError::NoPickPort("mover".into()))
        );
        assert_eq!(
            set_selection_it(&mut f, "mc", "nope"),
            Err(FlowError::UnknownNode("nope".into()))
        );
    }

    #[test]
    fn disabled_control_never_moves() {
        let mut f = world(Some("A"));
        step(&mut f);
        f.set_enabled("mc", false).unwrap();
        for _ in 0..5 {
            press(&mut f, "grab");
            f.step(&[], 0.1, &mut SceneState::new()).unwrap();
        }
        assert_eq!(f.behavior::<MoveControl>("mc").unwrap().phase(), MovePhase::Selecting);
    }
}

use proptest::prelude::*;

use super::*;
use crate::devices::{DeviceSample, PassDevice};
use crate::filters::{
    builtin_node, ChangeObject, GoGoControl, GoGoFilter, GoGoParams, MoveByLocator, MoveMode,
    Select1ByTouching,
};
use crate::impl_any;
use crate::sample::{PortKind, Pose, Sample, Vec3};
use crate::scene::{SceneObject, SceneState};

/// Records every sample it sees and forwards valuators on `out`.
#[derive(Default)]
struct Probe {
    seen: Vec<Sample>,
    runs: usize,
}

impl Behavior for Probe {
    fn type_name(&self) -> &str {
        "Probe"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        self.runs += 1;
        for (_, samples) in inputs.ports() {
            self.seen.extend(samples.iter().cloned());
        }
        if let Some(v) = inputs.last("in").and_then(Sample::as_valuator) {
            cx.emit("out", Sample::Valuator(v));
        }
        Ok(())
    }

    impl_any!();
}

fn probe(id: &str) -> FilterNode {
    FilterNode::new(
        id,
        vec![PortSpec::new("in", PortKind::Valuator)],
        vec![PortSpec::new("out", PortKind::Valuator)],
        Box::new(Probe::default()),
    )
    .unwrap()
}

fn chain(ids: &[&str]) -> Dataflow {
    let mut f = Dataflow::new();
    for id in ids {
        f.register_node(probe(id)).unwrap();
    }
    f
}

fn tracker(id: &str) -> FilterNode {
    FilterNode::new(
        id,
        vec![],
        vec![PortSpec::new("locator", PortKind::Locator)],
        Box::new(PassDevice::new("MRLocator", PortKind::Locator, "locator")),
    )
    .unwrap()
}

#[test]
fn register_and_duplicate() {
    let mut f = Dataflow::new();
    f.register_node(probe("gogo")).unwrap();
    assert_eq!(f.len(), 1);
    assert_eq!(
        f.register_node(probe("gogo")),
        Err(FlowError::DuplicateId("gogo".into()))
    );
}

#[test]
fn register_gogo_nodes() {
    let p = GoGoParams::default();
    let abs = |t: &str| MoveByLocator::new(MoveMode::Absolute, Some(t.into()));
    let nodes = vec![
        builtin_node("moveHand", Box::new(abs("hand"))).unwrap(),
        builtin_node("moveCube", Box::new(abs("cube"))).unwrap(),
        builtin_node("gogoFilter", Box::new(GoGoFilter::new(p))).unwrap(),
        builtin_node("gogoControl", Box::new(GoGoControl::new(p, "cube", "moveCube"))).unwrap(),
        builtin_node("select", Box::new(Select1ByTouching::new("hand", None))).unwrap(),
        builtin_node("changeObj", Box::new(ChangeObject::default())).unwrap(),
        tracker("handTracker"),
    ];
    let mut f = Dataflow::new();
    for n in nodes {
        f.register_node(n).unwrap();
    }
    assert_eq!(f.len(), 7);
    assert!(f.edges().is_empty());
}

#[test]
fn device_with_inputs_rejected() {
    let node = FilterNode::new(
        "bad",
        vec![PortSpec::new("in", PortKind::Locator)],
        vec![],
        Box::new(PassDevice::new("MRLocator", PortKind::Locator, "locator")),
    )
    .unwrap();
    assert_eq!(
        Dataflow::new().register_node(node),
        Err(FlowError::DeviceHasInputs("bad".into()))
    );
}

#[test]
fn connect_checks_kinds_ports_and_cycles() {
    let mut f = Dataflow::new();
    f.register_node(tracker("headTracker")).unwrap();
    f.register_node(builtin_node("moveViewpoint", Box::new(MoveByLocator::viewpoint())).unwrap())
        .unwrap();
    f.register_node(probe("p")).unwrap();
    f.register_node(probe("q")).unwrap();
    let e = f
        .connect("headTracker", "locator", "moveViewpoint", "iportLocator")
        .unwrap();
    assert_eq!(e.dst, "moveViewpoint");
    assert!(!f.order_is_fresh());

    assert!(matches!(
        f.connect("headTracker", "locator", "p", "in"),
        Err(FlowError::TypeMismatch { .. })
    ));
    assert!(matches!(
        f.connect("p", "nope", "q", "in"),
        Err(FlowError::UnknownPort { dir: "output", .. })
    ));
    f.connect("p", "out", "q", "in").unwrap();
    assert_eq!(
        f.connect("q", "out", "p", "in"),
        Err(FlowError::CycleCreated {
            src: "q".into(),
            dst: "p".into()
        })
    );
    assert!(matches!(f.connect("p", "out", "p", "in"), Err(FlowError::CycleCreated { .. })));
    assert_eq!(f.edges().len(), 2);
}

#[test]
fn disconnect_counts_and_cleans_listeners() {
    let mut f = chain(&["a", "n", "b", "c", "lone"]);
    f.connect("a", "out", "n", "in").unwrap();
    f.connect("n", "out", "b", "in").unwrap();
    f.connect("n", "out", "c", "in").unwrap();
    f.connect("a", "out", "b", "in").unwrap();
    assert_eq!(f.disconnect_node("lone").unwrap(), 0);
    assert_eq!(f.disconnect_node("n").unwrap(), 3);
    assert_eq!(f.edges().len(), 1);
    for node in f.nodes() {
        for p in node.oports() {
            assert!(p.listeners.iter().all(|(d, _)| d != "n"));
        }
    }
    assert!(f.node("n").unwrap().oport("out").unwrap().listeners.is_empty());
    assert_eq!(f.disconnect_node("zz"), Err(FlowError::UnknownNode("zz".into())));
}

#[test]
fn set_enabled_returns_prior() {
    let mut f = chain(&["a"]);
    assert_eq!(f.set_enabled("a", false), Ok(true));
    assert_eq!(f.set_enabled("a", false), Ok(false));
    assert_eq!(f.is_enabled("a"), Some(false));
    assert!(f.set_enabled("b", true).is_err());
}

#[test]
fn topo_chain_and_tie_break() {
    let mut f = chain(&["c", "b", "a"]);
    f.connect("a", "out", "b", "in").unwrap();
    f.connect("b", "out", "c", "in").unwrap();
    assert_eq!(f.topo_order().unwrap(), ["a", "b", "c"]);

    let mut f = chain(&["a", "b", "c"]);
    f.connect("a", "out", "c", "in").unwrap();
    f.connect("a", "out", "b", "in").unwrap();
    assert_eq!(f.topo_order().unwrap(), ["a", "b", "c"]);
}

#[test]
fn empty_step() {
    let mut f = Dataflow::new();
    let r = f.step(&[], 0.1, &mut SceneState::new()).unwrap();
    assert_eq!((r.deliveries, r.writes_applied, r.quit), (0, 0, false));
    assert_eq!(
        f.step(&[], 0.0, &mut SceneState::new()),
        Err(FlowError::InvalidDt(0.0))
    );
}

#[test]
fn samples_propagate_in_one_step_and_fan_out_in_connection_order() {
    let mut f = chain(&["src", "x", "y"]);
    f.connect("src", "out", "y", "in").unwrap();
    f.connect("src", "out", "x", "in").unwrap();
    f.deliver("src", "in", Sample::Valuator(2.0)).unwrap();
    let r = f.step(&[], 0.1, &mut SceneState::new()).unwrap();
    let order: Vec<_> = r.emissions.iter().map(|e| e.node.as_str()).collect();
    assert_eq!(order, ["src", "x", "y"]);
    assert_eq!(r.deliveries, 2);
    let listeners = &f.node("src").unwrap().oport("out").unwrap().listeners;
    assert_eq!(listeners[0].0, "y");
}

/// Reads the transform of `box` each step.
#[derive(Default)]
struct Reader {
    observed: Vec<f64>,
}

impl Behavior for Reader {
    fn type_name(&self) -> &str {
        "Reader"
    }

    fn process(&mut self, _: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        self.observed
            .push(cx.scene().transform("box").unwrap().position.x);
        Ok(())
    }

    impl_any!();
}

#[test]
fn reads_see_pre_step_scene() {
    let mut f = Dataflow::new();
    f.register_node(tracker("t")).unwrap();
    f.register_node(
        builtin_node("mover", Box::new(MoveByLocator::new(MoveMode::Absolute, Some("box".into()))))
            .unwrap(),
    )
    .unwrap();
    f.register_node(FilterNode::new("reader", vec![], vec![], Box::new(Reader::default())).unwrap())
        .unwrap();
    f.connect("t", "locator", "mover", "pos").unwrap();
    let mut scene = SceneState::new();
    scene
        .insert(SceneObject::new("box", Pose::IDENTITY, Vec3::repeat(0.5)))
        .unwrap();
    for k in 1..=10 {
        let batch = [DeviceSample {
            device: "t".into(),
            timestamp: k as f64,
            sample: Sample::Locator(Pose::at(k as f64, 0.0, 0.0)),
        }];
        let r = f.step(&batch, 0.1, &mut scene).unwrap();
        assert_eq!(r.writes_applied, 1);
        assert_eq!(scene.transform("box").unwrap().position.x, k as f64);
    }
    let seen = &f.behavior::<Reader>("reader").unwrap().observed;
    assert_eq!(*seen, (0..10).map(f64::from).collect::<Vec<_>>());
}

#[test]
fn disabled_node_drains_buffers() {
    let mut f = chain(&["a"]);
    f.set_enabled("a", false).unwrap();
    f.deliver("a", "in", Sample::Valuator(1.0)).unwrap();
    f.step(&[], 0.1, &mut SceneState::new()).unwrap();
    f.set_enabled("a", true).unwrap();
    f.step(&[], 0.1, &mut SceneState::new()).unwrap();
    let p = f.behavior::<Probe>("a").unwrap();
    assert!(p.seen.is_empty());
    assert_eq!(p.runs, 1);
}

/// Disables `victim` whenever it runs.
struct Disabler;

impl Behavior for Disabler {
    fn type_name(&self) -> &str {
        "Disabler"
    }

    fn process(&mut self, _: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        cx.send(ControlMessage::disable("victim"));
        Ok(())
    }

    impl_any!();
}

#[test]
fn control_takes_effect_within_the_step() {
    let mut f = Dataflow::new();
    f.register_node(FilterNode::new("d", vec![], vec![], Box::new(Disabler)).unwrap())
        .unwrap();
    f.register_node(probe("victim")).unwrap();
    f.step(&[], 0.1, &mut SceneState::new()).unwrap();
    assert_eq!(f.behavior::<Probe>("victim").unwrap().runs, 0);
}

#[test]
fn unknown_control_target_fails_step() {
    let mut f = Dataflow::new();
    f.register_node(FilterNode::new("d", vec![], vec![], Box::new(Disabler)).unwrap())
        .unwrap();
    assert_eq!(
        f.step(&[], 0.1, &mut SceneState::new()),
        Err(FlowError::UnknownNode("victim".into()))
    );
}

#[test]
fn unsupported_verb() {
    let mut f = chain(&["a"]);
    assert!(matches!(
        f.send_control(&ControlMessage::set_mode("a", "x")),
        Err(FlowError::UnsupportedVerb { .. })
    ));
}

#[test]
fn scene_notifications_arrive_next_step() {
    let mut f = Dataflow::new();
    f.register_node(
        builtin_node("mover", Box::new(MoveByLocator::new(MoveMode::Absolute, Some("box".into()))))
            .unwrap(),
    )
    .unwrap();
    f.register_node(
        FilterNode::new(
            "watch",
            vec![PortSpec::new("loc", PortKind::Locator)],
            vec![],
            Box::new(Probe::default()),
        )
        .unwrap(),
    )
    .unwrap();
    let mut scene = SceneState::new();
    scene
        .insert(SceneObject::new("box", Pose::IDENTITY, Vec3::repeat(0.5)))
        .unwrap();
    scene.add_listener(&f, "box", "watch", "loc").unwrap();
    f.deliver("mover", "pos", Sample::Locator(Pose::at(3.0, 0.0, 0.0)))
        .unwrap();
    f.step(&[], 0.1, &mut scene).unwrap();
    assert!(f.behavior::<Probe>("watch").unwrap().seen.is_empty());
    f.step(&[], 0.1, &mut scene).unwrap();
    assert_eq!(
        f.behavior::<Probe>("watch").unwrap().seen,
        [Sample::Locator(Pose::at(3.0, 0.0, 0.0))]
    );
    // unchanged object: no further notification
    f.step(&[], 0.1, &mut scene).unwrap();
    assert_eq!(f.behavior::<Probe>("watch").unwrap().seen.len(), 1);
}

proptest! {
    #[test]
    fn topo_order_respects_every_edge(n in 2usize..10, pairs in prop::collection::vec((0usize..10, 0usize..10), 0..40)) {
        let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let mut f = chain(&refs);
        for (a, b) in pairs {
            let (a, b) = (a % n, b % n);
            // cycles are rejected, anything else must be accepted
            match f.connect(&ids[a], "out", &ids[b], "in") {
                Ok(_) | Err(FlowError::CycleCreated { .. }) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
        let order = f.topo_order().unwrap();
        let pos = |id: &str| order.iter().position(|o| o == id).unwrap();
        for e in f.edges() {
            prop_assert!(pos(&e.src) < pos(&e.dst));
        }
    }

    #[test]
    fn disconnect_is_complete(pairs in prop::collection::vec((0usize..6, 0usize..6), 0..20), victim in 0usize..6) {
        let ids: Vec<String> = (0..6).map(|i| format!("n{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let mut f = chain(&refs);
        for (a, b) in pairs {
            let _ = f.connect(&ids[a], "out", &ids[b], "in");
        }
        let v = &ids[victim];
        let touching = f.edges().iter().filter(|e| &e.src == v || &e.dst == v).count();
        prop_assert_eq!(f.disconnect_node(v).unwrap(), touching);
        prop_assert!(f.edges().iter().all(|e| &e.src != v && &e.dst != v));
        for node in f.nodes() {
            for p in node.oports() {
                prop_assert!(p.listeners.iter().all(|(d, _)| d != v));
            }
        }
    }
}

//! Interaction techniques: filters that own a wired sub-dataflow and expose a
//! subset of its ports.

use crate::flow::{
    Ack, Behavior, ControlMessage, Dataflow, FilterNode, FlowError, Inputs, PortSpec,
    ProcessContext, Role, Verb,
};
use crate::impl_any;
use crate::sample::{Params, PortKind};

use super::{
    builtin_node, ChangeObject, GoGoControl, GoGoFilter, GoGoParams, MoveByLocator, MoveMode,
    Select1ByPointing, Select1ByTouching,
};

/// Which internal ports a composite exposes, and under what names.
#[derive(Debug, Clone, Default)]
pub struct Exports {
    inputs: Vec<(String, Vec<(String, String)>)>,
    outputs: Vec<(String, String, String)>,
}

impl Exports {
    pub fn new() -> Self {
        Exports::default()
    }

    /// External input `name` fans out to every listed internal `(node, iport)`.
    pub fn input(mut self, name: &str, targets: &[(&str, &str)]) -> Self {
        let targets = targets
            .iter()
            .map(|&(n, p)| (n.to_owned(), p.to_owned()))
            .collect();
        self.inputs.push((name.to_owned(), targets));
        self
    }

    /// External output `name` re-emits internal `node.oport`.
    pub fn output(mut self, name: &str, node: &str, oport: &str) -> Self {
        self.outputs
            .push((name.to_owned(), node.to_owned(), oport.to_owned()));
        self
    }
}

pub struct CompositeIt {
    type_name: String,
    inner: Dataflow,
    inputs: Vec<(String, Vec<(String, String)>)>,
    outputs: Vec<(String, String, String)>,
    role: Role,
}

impl CompositeIt {
    pub fn inner(&self) -> &Dataflow {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut Dataflow {
        &mut self.inner
    }

    fn set_one(&mut self, node: &str, verb: Verb, key: &str, payload: Params) -> Result<Ack, FlowError> {
        let msg = |target: &str| ControlMessage {
            target: target.to_owned(),
            verb,
            payload: payload.clone(),
        };
        if let Some((inner, _)) = key.split_once('.') {
            return self.inner.send_control(&msg(inner));
        }
        let ids: Vec<String> = self.inner.nodes().map(|n| n.id.clone()).collect();
        for id in ids {
            match self.inner.send_control(&msg(&id)) {
                Err(FlowError::UnsupportedVerb { .. }) | Err(FlowError::UnknownParam { .. }) => continue,
                other => return other,
            }
        }
        Err(FlowError::UnknownParam {
            node: node.to_owned(),
            behavior: self.type_name.clone(),
            key: key.to_owned(),
        })
    }
}

impl Behavior for CompositeIt {
    fn type_name(&self) -> &str {
        &self.type_name
    }

    fn role(&self) -> Role {
        self.role
    }

    fn collect(&mut self, inputs: &mut Inputs) {
        for (name, targets) in &self.inputs {
            for sample in inputs.get(name) {
                for (node, port) in targets {
                    // ports and kinds were checked when the composite was built
                    let _ = self.inner.deliver(node, port, sample.clone());
                }
            }
        }
    }

    fn process(&mut self, _inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let scene = cx.scene();
        let (dt, step) = (cx.dt(), cx.step_index());
        let (emissions, _) = self.inner.propagate(scene, cx.sink(), dt, step, true)?;
        for e in emissions {
            for (name, node, port) in &self.outputs {
                if e.node == *node && e.oport == *port {
                    cx.emit(name, e.sample.clone());
                }
            }
        }
        let sink = cx.sink();
        let escalated = std::mem::take(&mut sink.escalated);
        sink.controls.extend(escalated);
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        match verb {
            Verb::SetParam => {
                let mut prior = Params::new();
                for (key, value) in payload.iter() {
                    let local = key.split_once('.').map_or(key, |(_, k)| k);
                    let ack = self.set_one(node, verb, key, Params::new().with(local, value.clone()))?;
                    if let Some(old) = ack.prior.get(local) {
                        prior.insert(key, old.clone());
                    }
                }
                Ok(Ack { prior })
            }
            Verb::SetMode => self.set_one(node, verb, "mode", payload.clone()),
            _ => Err(FlowError::UnsupportedVerb {
                node: node.to_owned(),
                behavior: self.type_name.clone(),
                verb,
            }),
        }
    }

    fn on_enabled(&mut self, on: bool) {
        let ids: Vec<String> = self.inner.nodes().map(|n| n.id.clone()).collect();
        for id in ids {
            if let Some(n) = self.inner.node_mut(&id) {
                n.behavior_mut().on_enabled(on);
            }
        }
    }

    impl_any!();
}

/// Wraps `inner` as a single node. A composite exporting a Pick output is a
/// selector.
pub fn make_composite(
    id: &str,
    type_name: &str,
    inner: Dataflow,
    exports: Exports,
) -> Result<FilterNode, FlowError> {
    if let Err(e) = inner.topo_order() {
        return Err(match e {
            FlowError::CycleDetected(nodes) => FlowError::InternalCycle(nodes),
            other => other,
        });
    }
    let unknown = |node: &str, port: &str| FlowError::UnknownInternalPort {
        node: node.to_owned(),
        port: port.to_owned(),
    };
    let mut iports = Vec::new();
    for (name, targets) in &exports.inputs {
        let mut kind: Option<PortKind> = None;
        for (node, port) in targets {
            let k = inner
                .node(node)
                .and_then(|n| n.iport(port))
                .ok_or_else(|| unknown(node, port))?
                .kind;
            match kind {
                Some(prev) if prev != k => {
                    return Err(FlowError::TypeMismatch {
                        src: format!("{id}.{name}"),
                        src_kind: prev,
                        dst: format!("{node}.{port}"),
                        dst_kind: k,
                    })
                }
                _ => kind = Some(k),
            }
        }
        let kind = kind.ok_or_else(|| unknown(name, "(no targets)"))?;
        iports.push(PortSpec::new(name, kind));
    }
    let mut oports = Vec::new();
    for (name, node, port) in &exports.outputs {
        let k = inner
            .node(node)
            .and_then(|n| n.oport(port))
            .ok_or_else(|| unknown(node, port))?
            .kind;
        oports.push(PortSpec::new(name, k));
    }
    let role = if oports.iter().any(|p| p.kind == PortKind::Pick) {
        Role::Selector
    } else {
        Role::Filter
    };
    let behavior = CompositeIt {
        type_name: type_name.to_owned(),
        inner,
        inputs: exports.inputs,
        outputs: exports.outputs,
        role,
    };
    FilterNode::new(id, iports, oports, Box::new(behavior))
}

#[derive(Debug, Clone)]
pub struct GoGoItConfig {
    pub params: GoGoParams,
    /// Object showing the virtual hand.
    pub hand: String,
    /// Object showing the real hand while the arm is extended.
    pub cube: String,
    pub candidates: Option<Vec<String>>,
}

/// The internal wiring of the Go-Go technique.
pub fn gogo_dataflow(cfg: &GoGoItConfig) -> Result<Dataflow, FlowError> {
    let mut f = Dataflow::new();
    let abs = |target: &str| MoveByLocator::new(MoveMode::Absolute, Some(target.to_owned()));
    f.register_node(builtin_node("moveHand", Box::new(abs(&cfg.hand)))?)?;
    f.register_node(builtin_node("moveCube", Box::new(abs(&cfg.cube)))?)?;
    f.register_node(builtin_node("gogoFilter", Box::new(GoGoFilter::new(cfg.params)))?)?;
    f.register_node(builtin_node(
        "gogoControl",
        Box::new(GoGoControl::new(cfg.params, &cfg.cube, "moveCube")),
    )?)?;
    f.register_node(builtin_node(
        "select",
        Box::new(Select1ByTouching::new(&cfg.hand, cfg.candidates.clone())),
    )?)?;
    f.register_node(builtin_node("changeObj", Box::new(ChangeObject::default()))?)?;
    f.connect("gogoFilter", "locator", "moveHand", "pos")?;
    f.connect("gogoFilter", "locator", "gogoControl", "virtual")?;
    f.connect("gogoFilter", "locator", "select", "pos")?;
    f.connect("select", "pick", "changeObj", "obj")?;
    Ok(f)
}

/// Go-Go as one node: `handIport`, `headIport` in; `gogoPosOPort`,
/// `pickOPort` out.
pub fn gogo_it(id: &str, cfg: &GoGoItConfig) -> Result<FilterNode, FlowError> {
    let exports = Exports::new()
        .input(
            "handIport",
            &[("gogoFilter", "hand"), ("gogoControl", "real"), ("moveCube", "pos")],
        )
        .input("headIport", &[("gogoFilter", "head")])
        .output("gogoPosOPort", "gogoFilter", "locator")
        .output("pickOPort", "select", "pick");
    make_composite(id, "GoGoIT", gogo_dataflow(cfg)?, exports)
}

#[derive(Debug, Clone)]
pub struct RayCastConfig {
    /// Object showing the hand.
    pub hand: String,
    /// Object showing the selection ray.
    pub ray: String,
    pub candidates: Option<Vec<String>>,
}

/// Ray-casting selection as one node: `handIport` in, `pickOPort` out.
pub fn raycast_it(id: &str, cfg: &RayCastConfig) -> Result<FilterNode, FlowError> {
    let mut f = Dataflow::new();
    let abs = |target: &str| MoveByLocator::new(MoveMode::Absolute, Some(target.to_owned()));
    f.register_node(builtin_node("moveHand", Box::new(abs(&cfg.hand)))?)?;
    f.register_node(builtin_node("moveRay", Box::new(abs(&cfg.ray)))?)?;
    f.register_node(builtin_node(
        "pointer",
        Box::new(Select1ByPointing::new(cfg.candidates.clone())),
    )?)?;
    f.register_node(builtin_node("changeObj", Box::new(ChangeObject::default()))?)?;
    f.connect("pointer", "pick", "changeObj", "obj")?;
    let exports = Exports::new()
        .input(
            "handIport",
            &[("moveHand", "pos"), ("moveRay", "pos"), ("pointer", "pos")],
        )
        .output("pickOPort", "pointer", "pick");
    make_composite(id, "RayCastIT", f, exports)
}

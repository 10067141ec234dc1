use std::collections::{BTreeSet, VecDeque};

use indexmap::IndexMap;

use super::behavior::{Behavior, Inputs, ProcessContext, Role, StepSink};
use super::model::Emission;
use super::{Ack, ControlMessage, FlowError, Verb};
use crate::sample::{Params, PortKind, Sample};
use crate::scene::SceneState;

/// Declared name and kind of a port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortSpec {
    pub name: String,
    pub kind: PortKind,
}

impl PortSpec {
    pub fn new(name: &str, kind: PortKind) -> Self {
        PortSpec {
            name: name.to_owned(),
            kind,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InputPort {
    pub name: String,
    pub kind: PortKind,
    pub(crate) buffer: Vec<Sample>,
}

impl InputPort {
    pub fn buffered(&self) -> &[Sample] {
        &self.buffer
    }
}

#[derive(Debug, Clone)]
pub struct OutputPort {
    pub name: String,
    pub kind: PortKind,
    /// `(node, iport)` in connection order.
    pub listeners: Vec<(String, String)>,
}

pub struct FilterNode {
    pub id: String,
    pub enabled: bool,
    iports: Vec<InputPort>,
    oports: Vec<OutputPort>,
    inbox: Vec<Sample>,
    behavior: Box<dyn Behavior>,
}

impl std::fmt::Debug for FilterNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FilterNode")
            .field("id", &self.id)
            .field("type", &self.behavior.type_name())
            .field("enabled", &self.enabled)
            .field("iports", &self.iports)
            .field("oports", &self.oports)
            .finish()
    }
}

impl FilterNode {
    pub fn new(
        id: &str,
        iports: Vec<PortSpec>,
        oports: Vec<PortSpec>,
        behavior: Box<dyn Behavior>,
    ) -> Result<Self, FlowError> {
        let mut seen = BTreeSet::new();
        for p in iports.iter().chain(&oports) {
            if !seen.insert(p.name.clone()) {
                return Err(FlowError::DuplicatePort {
                    node: id.to_owned(),
                    port: p.name.clone(),
                });
            }
        }
        Ok(FilterNode {
            id: id.to_owned(),
            enabled: true,
            iports: iports
                .into_iter()
                .map(|p| InputPort {
                    name: p.name,
                    kind: p.kind,
                    buffer: Vec::new(),
                })
                .collect(),
            oports: oports
                .into_iter()
                .map(|p| OutputPort {
                    name: p.name,
                    kind: p.kind,
                    listeners: Vec::new(),
                })
                .collect(),
            inbox: Vec::new(),
            behavior,
        })
    }

    pub fn type_name(&self) -> &str {
        self.behavior.type_name()
    }

    pub fn role(&self) -> Role {
        self.behavior.role()
    }

    pub fn iport(&self, name: &str) -> Option<&InputPort> {
        self.iports.iter().find(|p| p.name == name)
    }

    pub fn oport(&self, name: &str) -> Option<&OutputPort> {
        self.oports.iter().find(|p| p.name == name)
    }

    pub fn iports(&self) -> &[InputPort] {
        &self.iports
    }

    pub fn oports(&self) -> &[OutputPort] {
        &self.oports
    }

    pub fn behavior(&self) -> &dyn Behavior {
        self.behavior.as_ref()
    }

    pub fn behavior_mut(&mut self) -> &mut dyn Behavior {
        self.behavior.as_mut()
    }

    /// Collect phase: moves buffered samples out of the ports. Buffers are
    /// always emptied, even when the node is disabled.
    fn take_inputs(&mut self) -> Inputs {
        Inputs {
            ports: self
                .iports
                .iter_mut()
                .map(|p| (p.name.clone(), std::mem::take(&mut p.buffer)))
                .collect(),
            device: std::mem::take(&mut self.inbox),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub src: String,
    pub oport: String,
    pub dst: String,
    pub iport: String,
}

/// Nodes, edges and the cached execution order.
#[derive(Default)]
pub struct Dataflow {
    nodes: IndexMap<String, FilterNode>,
    edges: Vec<Edge>,
    order: Option<Vec<usize>>,
    pub(crate) steps_run: u64,
}

impl std::fmt::Debug for Dataflow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dataflow")
            .field("nodes", &self.nodes.keys().collect::<Vec<_>>())
            .field("edges", &self.edges)
            .finish()
    }
}

impl Dataflow {
    pub fn new() -> Self {
        Dataflow::default()
    }

    pub fn register_node(&mut self, node: FilterNode) -> Result<String, FlowError> {
        if self.nodes.contains_key(&node.id) {
            return Err(FlowError::DuplicateId(node.id));
        }
        if node.role() == Role::Device && !node.iports.is_empty() {
            return Err(FlowError::DeviceHasInputs(node.id));
        }
        let id = node.id.clone();
        self.nodes.insert(id.clone(), node);
        self.order = None;
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&FilterNode> {
        self.nodes.get(id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut FilterNode> {
        self.nodes.get_mut(id)
    }

    /// Nodes in registration order.
    pub fn nodes(&self) -> impl Iterator<Item = &FilterNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Downcasts a node's behavior.
    pub fn behavior<T: Behavior>(&self, id: &str) -> Option<&T> {
        self.nodes.get(id)?.behavior.as_any().downcast_ref()
    }

    pub fn behavior_mut<T: Behavior>(&mut self, id: &str) -> Option<&mut T> {
        self.nodes.get_mut(id)?.behavior.as_any_mut().downcast_mut()
    }

    pub fn is_enabled(&self, id: &str) -> Option<bool> {
        self.nodes.get(id).map(|n| n.enabled)
    }

    pub fn steps_run(&self) -> u64 {
        self.steps_run
    }

    pub fn connect(
        &mut self,
        src: &str,
        oport: &str,
        dst: &str,
        iport: &str,
    ) -> Result<Edge, FlowError> {
        let src_kind = self
            .nodes
            .get(src)
            .ok_or_else(|| FlowError::UnknownNode(src.to_owned()))?
            .oport(oport)
            .ok_or_else(|| FlowError::UnknownPort {
                node: src.to_owned(),
                port: oport.to_owned(),
                dir: "output",
            })?
            .kind;
        let dst_kind = self
            .nodes
            .get(dst)
            .ok_or_else(|| FlowError::UnknownNode(dst.to_owned()))?
            .iport(iport)
            .ok_or_else(|| FlowError::UnknownPort {
                node: dst.to_owned(),
                port: iport.to_owned(),
                dir: "input",
            })?
            .kind;
        if src_kind != dst_kind {
            return Err(FlowError::TypeMismatch {
                src: format!("{src}.{oport}"),
                src_kind,
                dst: format!("{dst}.{iport}"),
                dst_kind,
            });
        }
        if src == dst || self.reaches(dst, src) {
            return Err(FlowError::CycleCreated {
                src: src.to_owned(),
                dst: dst.to_owned(),
            });
        }
        let edge = Edge {
            src: src.to_owned(),
            oport: oport.to_owned(),
            dst: dst.to_owned(),
            iport: iport.to_owned(),
        };
        self.edges.push(edge.clone());
        let port = self
            .nodes
            .get_mut(src)
            .and_then(|n| n.oports.iter_mut().find(|p| p.name == oport))
            .expect("checked above");
        port.listeners.push((dst.to_owned(), iport.to_owned()));
        self.order = None;
        Ok(edge)
    }

    fn reaches(&self, from: &str, to: &str) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            if n == to {
                return true;
            }
            if !seen.insert(n) {
                continue;
            }
            queue.extend(self.edges.iter().filter(|e| e.src == n).map(|e| e.dst.as_str()));
        }
        false
    }

    /// Removes every edge into or out of `node`. The node stays registered.
    pub fn disconnect_node(&mut self, node: &str) -> Result<usize, FlowError> {
        if !self.nodes.contains_key(node) {
            return Err(FlowError::UnknownNode(node.to_owned()));
        }
        let before = self.edges.len();
        self.edges.retain(|e| e.src != node && e.dst != node);
        let removed = before - self.edges.len();
        for n in self.nodes.values_mut() {
            let own = n.id == node;
            for p in &mut n.oports {
                if own {
                    p.listeners.clear();
                } else {
                    p.listeners.retain(|(d, _)| d != node);
                }
            }
        }
        self.order = None;
        Ok(removed)
    }

    /// Sets the enabled flag, returning the previous one.
    pub fn set_enabled(&mut self, node: &str, on: bool) -> Result<bool, FlowError> {
        let n = self
            .nodes
            .get_mut(node)
            .ok_or_else(|| FlowError::UnknownNode(node.to_owned()))?;
        let prior = std::mem::replace(&mut n.enabled, on);
        if prior != on {
            n.behavior.on_enabled(on);
        }
        Ok(prior)
    }

    pub fn send_control(&mut self, msg: &ControlMessage) -> Result<Ack, FlowError> {
        match msg.verb {
            Verb::Enable | Verb::Disable => {
                let prior = self.set_enabled(&msg.target, msg.verb == Verb::Enable)?;
                Ok(Ack {
                    prior: Params::new().with("enabled", prior),
                })
            }
            Verb::SetMode | Verb::SetParam => self
                .nodes
                .get_mut(&msg.target)
                .ok_or_else(|| FlowError::UnknownNode(msg.target.clone()))?
                .behavior
                .control(&msg.target, msg.verb, &msg.payload),
        }
    }

    /// Execution order: every edge points forward; among ready nodes the
    /// earliest registered goes first.
    pub fn topo_order(&self) -> Result<Vec<String>, FlowError> {
        Ok(self
            .compute_order()?
            .into_iter()
            .map(|i| self.nodes.get_index(i).expect("index").0.clone())
            .collect())
    }

    fn compute_order(&self) -> Result<Vec<usize>, FlowError> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            let s = self.nodes.get_index_of(&e.src).expect("edge endpoint");
            let d = self.nodes.get_index_of(&e.dst).expect("edge endpoint");
            succ[s].push(d);
            indegree[d] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            out.push(i);
            for &d in &succ[i] {
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    ready.insert(d);
                }
            }
        }
        if out.len() != n {
            let stuck = (0..n)
                .filter(|i| indegree[*i] > 0)
                .map(|i| self.nodes.get_index(i).expect("index").0.clone())
                .collect();
            return Err(FlowError::CycleDetected(stuck));
        }
        Ok(out)
    }

    /// Whether the cached order is current.
    pub fn order_is_fresh(&self) -> bool {
        self.order.is_some()
    }

    fn ensure_order(&mut self) -> Result<Vec<usize>, FlowError> {
        if let Some(o) = &self.order {
            return Ok(o.clone());
        }
        let o = self.compute_order()?;
        self.order = Some(o.clone());
        Ok(o)
    }

    /// Buffers a sample on an input port, checking its kind.
    pub fn deliver(&mut self, node: &str, iport: &str, sample: Sample) -> Result<(), FlowError> {
        let port = self
            .nodes
            .get_mut(node)
            .ok_or_else(|| FlowError::UnknownNode(node.to_owned()))?
            .iports
            .iter_mut()
            .find(|p| p.name == iport)
            .ok_or_else(|| FlowError::UnknownPort {
                node: node.to_owned(),
                port: iport.to_owned(),
                dir: "input",
            })?;
        if port.kind != sample.kind() {
            return Err(FlowError::TypeMismatch {
                src: "delivery".into(),
                src_kind: sample.kind(),
                dst: format!("{node}.{iport}"),
                dst_kind: port.kind,
            });
        }
        port.buffer.push(sample);
        Ok(())
    }

    /// Hands a device sample to a virtual input device.
    pub fn inject(&mut self, device: &str, sample: Sample) -> Result<(), FlowError> {
        match self.nodes.get_mut(device) {
            Some(n) if n.role() == Role::Device => {
                n.inbox.push(sample);
                Ok(())
            }
            _ => Err(FlowError::UnknownDevice(device.to_owned())),
        }
    }

    /// Runs every node once: collect, process, send. Returns emissions in
    /// execution order and the number of port deliveries made.
    ///
    /// When `nested` is set, control messages whose target is not in this graph
    /// are left in the sink for the enclosing graph instead of failing.
    pub fn propagate(
        &mut self,
        scene: &SceneState,
        sink: &mut StepSink,
        dt: f64,
        step: u64,
        nested: bool,
    ) -> Result<(Vec<Emission>, usize), FlowError> {
        let order = self.ensure_order()?;
        let mut emissions = Vec::new();
        let mut deliveries = 0;
        for idx in order {
            let (_, node) = self.nodes.get_index_mut(idx).expect("index");
            let mut inputs = node.take_inputs();
            if !node.enabled {
                continue;
            }
            node.behavior.collect(&mut inputs);
            let id = node.id.clone();
            let mut cx = ProcessContext::new(&id, scene, dt, step, sink);
            node.behavior.process(&inputs, &mut cx)?;
            let out = cx.into_emissions();

            let mut routed = Vec::with_capacity(out.len());
            for (oport, sample) in out {
                let port = node.oports.iter().find(|p| p.name == oport).ok_or_else(|| {
                    FlowError::UnknownPort {
                        node: id.clone(),
                        port: oport.clone(),
                        dir: "output",
                    }
                })?;
                if port.kind != sample.kind() {
                    return Err(FlowError::TypeMismatch {
                        src: format!("{id}.{oport}"),
                        src_kind: sample.kind(),
                        dst: format!("{id}.{oport}"),
                        dst_kind: port.kind,
                    });
                }
                routed.push((oport, sample, port.listeners.clone()));
            }

            // send
            for (oport, sample, listeners) in routed {
                for (dst, iport) in &listeners {
                    self.deliver(dst, iport, sample.clone())?;
                    deliveries += 1;
                }
                emissions.push(Emission {
                    node: id.clone(),
                    oport,
                    sample,
                });
            }

            for msg in std::mem::take(&mut sink.controls) {
                if self.nodes.contains_key(&msg.target) {
                    self.send_control(&msg)?;
                } else if nested {
                    sink.escalated.push(msg);
                } else {
                    return Err(FlowError::UnknownNode(msg.target));
                }
            }
        }
        Ok((emissions, deliveries))
    }
}

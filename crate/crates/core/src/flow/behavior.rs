use std::any::Any;

use crate::flow::{Ack, ControlMessage, DeferredWrite, FlowError, Mutation, Verb};
use crate::sample::{Params, Sample};
use crate::scene::{Flag, SceneState, Transform};

/// How a node participates in the graph beyond plain filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Filter,
    /// Virtual input device: receives injected device samples, has no input ports.
    Device,
    /// Produces selections; its Pick emissions are reported as picks.
    Selector,
}

/// A filter implementation. One instance is owned by each node.
pub trait Behavior: Any + Send {
    fn type_name(&self) -> &str;

    fn role(&self) -> Role {
        Role::Filter
    }

    /// Collect phase. The default keeps everything; filters may discard
    /// redundant samples here.
    fn collect(&mut self, _inputs: &mut Inputs) {}

    /// Process phase. Emissions, scene writes, control messages and the quit
    /// signal go through `cx`; the scene is read-only here.
    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError>;

    /// Handles SetMode/SetParam. Enable/Disable are handled by the graph.
    fn control(&mut self, node: &str, verb: Verb, _payload: &Params) -> Result<Ack, FlowError> {
        Err(FlowError::UnsupportedVerb {
            node: node.to_owned(),
            behavior: self.type_name().to_owned(),
            verb,
        })
    }

    /// Called when the node's enabled flag flips.
    fn on_enabled(&mut self, _on: bool) {}

    fn as_any(&self) -> &dyn Any;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}

/// Samples collected by a node for one step.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub(crate) ports: Vec<(String, Vec<Sample>)>,
    pub(crate) device: Vec<Sample>,
}

impl Inputs {
    pub fn new() -> Self {
        Inputs::default()
    }

    /// Test and composite helper: append a sample to a named port.
    pub fn push(&mut self, port: &str, sample: Sample) {
        match self.ports.iter_mut().find(|(n, _)| n == port) {
            Some((_, v)) => v.push(sample),
            None => self.ports.push((port.to_owned(), vec![sample])),
        }
    }

    pub fn push_device(&mut self, sample: Sample) {
        self.device.push(sample);
    }

    /// All samples received on `port` this step, in arrival order.
    pub fn get(&self, port: &str) -> &[Sample] {
        self.ports
            .iter()
            .find(|(n, _)| n == port)
            .map_or(&[], |(_, v)| v.as_slice())
    }

    pub fn get_mut(&mut self, port: &str) -> Option<&mut Vec<Sample>> {
        self.ports.iter_mut().find(|(n, _)| n == port).map(|(_, v)| v)
    }

    pub fn last(&self, port: &str) -> Option<&Sample> {
        self.get(port).last()
    }

    pub fn ports(&self) -> impl Iterator<Item = (&str, &[Sample])> {
        self.ports.iter().map(|(n, v)| (n.as_str(), v.as_slice()))
    }

    /// Device samples injected this step (virtual input devices only).
    pub fn device(&self) -> &[Sample] {
        &self.device
    }

    pub fn is_empty(&self) -> bool {
        self.device.is_empty() && self.ports.iter().all(|(_, v)| v.is_empty())
    }
}

/// Step-wide accumulator shared by every node, including nodes nested in composites.
#[derive(Debug, Default)]
pub struct StepSink {
    pub(crate) writes: Vec<DeferredWrite>,
    next_sequence: u64,
    pub(crate) controls: Vec<ControlMessage>,
    pub(crate) escalated: Vec<ControlMessage>,
    pub(crate) quit: bool,
}

impl StepSink {
    pub fn new() -> Self {
        StepSink::default()
    }

    pub fn writes(&self) -> &[DeferredWrite] {
        &self.writes
    }

    pub fn quit_requested(&self) -> bool {
        self.quit
    }

    fn push_write(&mut self, origin: &str, object: &str, mutation: Mutation) {
        self.writes.push(DeferredWrite {
            object: object.to_owned(),
            mutation,
            origin: origin.to_owned(),
            sequence: self.next_sequence,
        });
        self.next_sequence += 1;
    }
}

/// What a filter sees while processing.
pub struct ProcessContext<'a> {
    node: &'a str,
    scene: &'a SceneState,
    dt: f64,
    step: u64,
    pub(crate) out: Vec<(String, Sample)>,
    sink: &'a mut StepSink,
}

impl<'a> ProcessContext<'a> {
    pub fn new(
        node: &'a str,
        scene: &'a SceneState,
        dt: f64,
        step: u64,
        sink: &'a mut StepSink,
    ) -> Self {
        ProcessContext {
            node,
            scene,
            dt,
            step,
            out: Vec::new(),
            sink,
        }
    }

    pub fn node(&self) -> &str {
        self.node
    }

    /// Scene as of the end of the previous step.
    pub fn scene(&self) -> &'a SceneState {
        self.scene
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn emit(&mut self, oport: &str, sample: Sample) {
        self.out.push((oport.to_owned(), sample));
    }

    pub fn emitted(&self) -> &[(String, Sample)] {
        &self.out
    }

    pub fn set_transform(&mut self, object: &str, transform: Transform) {
        self.sink
            .push_write(self.node, object, Mutation::SetTransform { transform });
    }

    pub fn set_flag(&mut self, object: &str, flag: Flag, value: bool) {
        self.sink
            .push_write(self.node, object, Mutation::SetFlag { flag, value });
    }

    /// Queues a control message; it is applied as soon as this node's process
    /// phase returns.
    pub fn send(&mut self, msg: ControlMessage) {
        self.sink.controls.push(msg);
    }

    pub fn quit(&mut self) {
        self.sink.quit = true;
    }

    pub(crate) fn sink(&mut self) -> &mut StepSink {
        self.sink
    }

    pub fn into_emissions(self) -> Vec<(String, Sample)> {
        self.out
    }
}

/// Implements the `as_any` plumbing for a behavior type.
#[macro_export]
macro_rules! impl_any {
    () => {
        fn as_any(&self) -> &dyn ::std::any::Any {
            self
        }
        fn as_any_mut(&mut self) -> &mut dyn ::std::any::Any {
            self
        }
    };
}

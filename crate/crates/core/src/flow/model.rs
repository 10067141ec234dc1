use serde::Serialize;

use super::behavior::StepSink;
use super::graph::Dataflow;
use super::{DeferredWrite, FlowError};
use crate::devices::DeviceSample;
use crate::sample::Sample;
use crate::scene::SceneState;

/// A sample sent from an output port during a step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Emission {
    pub node: String,
    pub oport: String,
    pub sample: Sample,
}

/// A device sample handed to a virtual input device.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Injection {
    pub device: String,
    pub t: f64,
    pub sample: Sample,
}

/// A deferred write after the end-of-step flush.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppliedWrite {
    #[serde(flatten)]
    pub write: DeferredWrite,
    pub changed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub time: f64,
    /// Samples buffered on input ports or device inboxes this step.
    pub deliveries: usize,
    pub writes_applied: usize,
    /// Writes naming an object that does not exist.
    pub writes_skipped: usize,
    pub quit: bool,
    pub emissions: Vec<Emission>,
    pub writes: Vec<AppliedWrite>,
}

/// Decides how one step of the dataflow is executed.
pub trait ExecutionModel {
    fn step(
        &mut self,
        flow: &mut Dataflow,
        batch: &[DeviceSample],
        dt: f64,
        scene: &mut SceneState,
    ) -> Result<StepReport, FlowError>;
}

/// Each step fully propagates its input through the graph before anything
/// else is considered; scene writes are flushed at the end of the step and
/// the resulting change notifications arrive at the start of the next one.
#[derive(Debug, Clone, Copy, Default)]
pub struct SinglePropagation;

impl ExecutionModel for SinglePropagation {
    fn step(
        &mut self,
        flow: &mut Dataflow,
        batch: &[DeviceSample],
        dt: f64,
        scene: &mut SceneState,
    ) -> Result<StepReport, FlowError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FlowError::InvalidDt(dt));
        }
        let index = flow.steps_run;
        let mut deliveries = 0;

        // previous step's scene changes
        for (node, port, sample) in scene.take_notifications() {
            flow.deliver(&node, &port, sample)?;
            deliveries += 1;
        }
        for s in batch {
            flow.inject(&s.device, s.sample.clone())?;
            deliveries += 1;
        }

        let mut sink = StepSink::new();
        let (emissions, routed) = flow.propagate(scene, &mut sink, dt, index, false)?;
        deliveries += routed;

        let mut pending = std::mem::take(&mut sink.writes);
        pending.sort_by_key(|w| w.sequence);
        let mut writes = Vec::with_capacity(pending.len());
        let mut skipped = 0;
        for w in pending {
            match scene.apply_mutation(&w) {
                Ok(changed) => writes.push(AppliedWrite { write: w, changed }),
                Err(_) => skipped += 1,
            }
        }

        flow.steps_run += 1;
        Ok(StepReport {
            step: index,
            time: index as f64 * dt,
            deliveries,
            writes_applied: writes.len(),
            writes_skipped: skipped,
            quit: sink.quit,
            emissions,
            writes,
        })
    }
}

impl Dataflow {
    /// One step under [`SinglePropagation`].
    pub fn step(
        &mut self,
        batch: &[DeviceSample],
        dt: f64,
        scene: &mut SceneState,
    ) -> Result<StepReport, FlowError> {
        SinglePropagation.step(self, batch, dt, scene)
    }
}

use serde::Serialize;

use super::directive::{apply_directive, Directive};
use crate::devices::{DeviceQueue, DeviceSample, Script};
use crate::dsl::{World, WorldSpec};
use crate::flow::{AppliedWrite, Emission, FlowError, Role};
use crate::sample::{Pose, Sample};

/// Samples and directives stamped up to this far past a step's time are due
/// at that step, so `k * dt` rounding never delays an event by a step.
pub const TIME_SLACK: f64 = 1e-9;

/// A selection reported by a selector node during a step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PickRecord {
    pub node: String,
    pub target: Option<String>,
}

/// Everything observable about one executed step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: u64,
    pub t: f64,
    pub directives: Vec<Directive>,
    pub injected: Vec<DeviceSample>,
    pub emissions: Vec<Emission>,
    pub writes: Vec<AppliedWrite>,
    pub picks: Vec<PickRecord>,
    pub viewpoint: Pose,
    pub quit: bool,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("script device `{0}` is not a <videv> of the world")]
    UnknownDevice(String),
    #[error("directive `{action}` at t={t} failed: {reason}")]
    UnresolvedDirective {
        t: f64,
        action: &'static str,
        reason: String,
    },
    #[error("step {step}: {source}")]
    Step { step: u64, source: FlowError },
    #[error("dt must be positive and finite, got {0}")]
    InvalidDt(f64),
}

/// A world being driven by a script, one fixed-length step at a time.
pub struct Session {
    pub world: World,
    pub spec: WorldSpec,
    queue: DeviceQueue,
    events: Vec<(f64, DeviceSample)>,
    next_event: usize,
    directives: Vec<Directive>,
    next_directive: usize,
    dt: f64,
    step: u64,
    quit: bool,
}

impl Session {
    pub fn new(spec: WorldSpec, world: World, script: Script, dt: f64) -> Result<Self, SessionError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SessionError::InvalidDt(dt));
        }
        let queue = DeviceQueue::new();
        for (id, mode) in &world.devices {
            queue.register(id, *mode);
        }
        let mut events = Vec::new();
        for d in &script.devices {
            if queue.mode(&d.id).is_none() {
                return Err(SessionError::UnknownDevice(d.id.clone()));
            }
            for (t, sample) in &d.events {
                events.push((
                    *t,
                    DeviceSample {
                        device: d.id.clone(),
                        timestamp: *t,
                        sample: sample.clone(),
                    },
                ));
            }
        }
        // merged in time order; the sort is stable so per-device order holds
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Session {
            world,
            spec,
            queue,
            events,
            next_event: 0,
            directives: script.directives,
            next_directive: 0,
            dt,
            step: 0,
            quit: false,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_run(&self) -> u64 {
        self.step
    }

    pub fn quit_requested(&self) -> bool {
        self.quit
    }

    /// The queue the script feeds. Other producers may push into it too.
    pub fn queue(&self) -> &DeviceQueue {
        &self.queue
    }

    /// Runs step `k`: due script samples are queued and drained, due
    /// directives applied, then the dataflow stepped.
    pub fn step(&mut self) -> Result<TraceRecord, SessionError> {
        let k = self.step;
        let t = k as f64 * self.dt;
        let due = t + TIME_SLACK;
        while let Some((at, s)) = self.events.get(self.next_event) {
            if *at > due {
                break;
            }
            // a rejected (late) sample is simply dropped
            let _ = self.queue.push_sample(s.clone());
            self.next_event += 1;
        }
        let injected = self.queue.drain_for_step(due);
        let mut applied = Vec::new();
        while let Some(d) = self.directives.get(self.next_directive) {
            if d.t > due {
                break;
            }
            apply_directive(&d.action, &mut self.world, &self.spec).map_err(|reason| {
                SessionError::UnresolvedDirective {
                    t: d.t,
                    action: d.action.name(),
                    reason,
                }
            })?;
            applied.push(d.clone());
            self.next_directive += 1;
        }
        let report = self
            .world
            .flow
            .step(&injected, self.dt, &mut self.world.scene)
            .map_err(|source| SessionError::Step { step: k, source })?;
        let picks = report
            .emissions
            .iter()
            .filter(|e| {
                self.world
                    .flow
                    .node(&e.node)
                    .is_some_and(|n| n.role() == Role::Selector)
            })
            .filter_map(|e| match &e.sample {
                Sample::Pick(target) => Some(PickRecord {
                    node: e.node.clone(),
                    target: target.clone(),
                }),
                _ => None,
            })
            .collect();
        self.step += 1;
        self.quit = report.quit;
        Ok(TraceRecord {
            step: k,
            t,
            directives: applied,
            injected,
            emissions: report.emissions,
            writes: report.writes,
            picks,
            viewpoint: self.world.scene.viewpoint(),
            quit: report.quit,
        })
    }

    /// Runs up to `steps` steps, stopping after a step that requested quit.
    pub fn run(&mut self, steps: u64) -> Result<Vec<TraceRecord>, SessionError> {
        let mut out = Vec::new();
        while self.step < steps && !self.quit {
            out.push(self.step()?);
        }
        Ok(out)
    }

    /// Like [`run`](Session::run), calling `each` after every step.
    pub fn run_with(
        &mut self,
        steps: u64,
        mut each: impl FnMut(&Session, &TraceRecord) -> Result<(), String>,
    ) -> Result<Vec<TraceRecord>, String> {
        let mut out = Vec::new();
        while self.step < steps && !self.quit {
            let r = self.step().map_err(|e| e.to_string())?;
            each(self, &r)?;
            out.push(r);
        }
        Ok(out)
    }
}

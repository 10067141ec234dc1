use std::collections::VecDeque;
use std::sync::Mutex;

use indexmap::IndexMap;
use serde::Serialize;

use super::{DeviceError, DeviceSample};

/// How a device's pending samples are buffered between drains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueMode {
    /// Every sample is kept, in arrival order.
    QueueAll,
    /// Only the most recent sample is kept.
    KeepLast,
}

impl QueueMode {
    pub fn parse(s: &str) -> Option<QueueMode> {
        match s {
            "queue" | "queueAll" | "queue_all" => Some(QueueMode::QueueAll),
            "keepLast" | "keep_last" | "last" => Some(QueueMode::KeepLast),
            _ => None,
        }
    }
}

#[derive(Debug)]
struct Buffer {
    mode: QueueMode,
    last_timestamp: f64,
    pending: VecDeque<(u64, DeviceSample)>,
}

#[derive(Debug, Default)]
struct State {
    devices: IndexMap<String, Buffer>,
    arrivals: u64,
    drained_upto: f64,
}

/// Hand-off between the context reading devices and the context stepping the
/// dataflow. `push_sample` and `drain_for_step` may run on different threads.
#[derive(Debug)]
pub struct DeviceQueue {
    state: Mutex<State>,
}

impl Default for DeviceQueue {
    fn default() -> Self {
        DeviceQueue {
            state: Mutex::new(State {
                drained_upto: f64::NEG_INFINITY,
                ..State::default()
            }),
        }
    }
}

impl DeviceQueue {
    pub fn new() -> Self {
        DeviceQueue::default()
    }

    pub fn register(&self, device: &str, mode: QueueMode) {
        let mut st = self.state.lock().expect("device queue poisoned");
        st.devices.insert(
            device.to_owned(),
            Buffer {
                mode,
                last_timestamp: f64::NEG_INFINITY,
                pending: VecDeque::new(),
            },
        );
    }

    pub fn mode(&self, device: &str) -> Option<QueueMode> {
        let st = self.state.lock().expect("device queue poisoned");
        st.devices.get(device).map(|b| b.mode)
    }

    /// Queues a sample. Returns `false` (and drops the sample) when its
    /// timestamp is earlier than the device's previous one.
    pub fn push_sample(&self, s: DeviceSample) -> Result<bool, DeviceError> {
        let mut st = self.state.lock().expect("device queue poisoned");
        let arrival = st.arrivals;
        let buf = st
            .devices
            .get_mut(&s.device)
            .ok_or_else(|| DeviceError::UnknownDevice(s.device.clone()))?;
        if !(s.timestamp >= buf.last_timestamp) {
            return Ok(false);
        }
        buf.last_timestamp = s.timestamp;
        if buf.mode == QueueMode::KeepLast {
            buf.pending.clear();
        }
        buf.pending.push_back((arrival, s));
        st.arrivals += 1;
        Ok(true)
    }

    /// Removes and returns every sample stamped at or before `upto`, ordered by
    /// timestamp, then device id, then arrival.
    pub fn drain_for_step(&self, upto: f64) -> Vec<DeviceSample> {
        let mut st = self.state.lock().expect("device queue poisoned");
        let upto = upto.max(st.drained_upto);
        st.drained_upto = upto;
        let mut out: Vec<(u64, DeviceSample)> = Vec::new();
        for buf in st.devices.values_mut() {
            while buf.pending.front().is_some_and(|(_, s)| s.timestamp <= upto) {
                out.push(buf.pending.pop_front().expect("front"));
            }
        }
        out.sort_by(|(ia, a), (ib, b)| {
            a.timestamp
                .total_cmp(&b.timestamp)
                .then_with(|| a.device.cmp(&b.device))
                .then_with(|| ia.cmp(ib))
        });
        out.into_iter().map(|(_, s)| s).collect()
    }

    /// Samples currently held for a device.
    pub fn pending(&self, device: &str) -> usize {
        let st = self.state.lock().expect("device queue poisoned");
        st.devices.get(device).map_or(0, |b| b.pending.len())
    }
}

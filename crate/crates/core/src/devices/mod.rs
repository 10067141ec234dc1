//! Virtual input devices, the ingestion queue between the device-reading
//! context and the stepping context, scripted replay, and device adapters.

mod adapter;
mod queue;
mod script;
mod videv;

pub use adapter::{
    buttons_to_locator, pad_index, ButtonsToLocator, PadRates, PadState, DEFAULT_ANGULAR_RATE,
    DEFAULT_LINEAR_RATE, PAD_BUTTONS,
};
pub use queue::{DeviceQueue, QueueMode};
pub use script::{load_script, Script, ScriptError, ScriptedDevice};
pub use videv::{PassDevice, XInput};

use serde::Serialize;
use thiserror::Error;

use crate::sample::Sample;

/// One sample read from a device.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceSample {
    pub device: String,
    #[serde(rename = "t")]
    pub timestamp: f64,
    pub sample: Sample,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
}

//! Replacing a 6DOF tracker with twelve buttons, two per degree of freedom.

use crate::flow::{Ack, Behavior, FlowError, Inputs, ProcessContext, Role, Verb};
use crate::impl_any;
use crate::sample::{Params, Pose, Quat, Sample, Vec3};

/// Button ids in pad order: translation pairs then rotation pairs, `+` before `-`.
pub const PAD_BUTTONS: [&str; 12] = [
    "+x", "-x", "+y", "-y", "+z", "-z", "+rx", "-rx", "+ry", "-ry", "+rz", "-rz",
];

pub const DEFAULT_LINEAR_RATE: f64 = 0.5;
pub const DEFAULT_ANGULAR_RATE: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PadRates {
    /// Meters per second.
    pub linear: f64,
    /// Degrees per second.
    pub angular: f64,
}

impl Default for PadRates {
    fn default() -> Self {
        PadRates {
            linear: DEFAULT_LINEAR_RATE,
            angular: DEFAULT_ANGULAR_RATE,
        }
    }
}

/// Held state of the twelve buttons, indexed like [`PAD_BUTTONS`].
pub type PadState = [bool; 12];

pub fn pad_index(id: &str) -> Option<usize> {
    PAD_BUTTONS.iter().position(|b| *b == id)
}

/// Integrates one step of held buttons into a new locator. Returns `None`
/// when nothing is held. Opposite buttons cancel. Rotations are applied about
/// the world X, then Y, then Z axis.
pub fn buttons_to_locator(state: &PadState, prev: &Pose, dt: f64, rates: PadRates) -> Option<Pose> {
    if !state.iter().any(|b| *b) {
        return None;
    }
    let axis_sign = |pair: usize| -> f64 {
        let plus = state[2 * pair] as i32;
        let minus = state[2 * pair + 1] as i32;
        (plus - minus) as f64
    };
    let mut position = prev.position;
    for axis in 0..3 {
        let s = axis_sign(axis);
        if s != 0.0 {
            position[axis] += s * rates.linear * dt;
        }
    }
    let mut orientation = prev.orientation;
    let axes = [Vec3::x_axis(), Vec3::y_axis(), Vec3::z_axis()];
    for (i, axis) in axes.iter().enumerate() {
        let s = axis_sign(3 + i);
        if s != 0.0 {
            let angle = (s * rates.angular * dt).to_radians();
            orientation = Quat::from_axis_angle(axis, angle) * orientation;
        }
    }
    Some(Pose::new(position, orientation))
}

/// Virtual input device that turns twelve button streams into a Locator.
#[derive(Debug, Clone)]
pub struct ButtonsToLocator {
    held: PadState,
    pose: Pose,
    rates: PadRates,
}

impl ButtonsToLocator {
    pub fn new(start: Pose, rates: PadRates) -> Self {
        ButtonsToLocator {
            held: [false; 12],
            pose: start,
            rates,
        }
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }
}

impl Behavior for ButtonsToLocator {
    fn type_name(&self) -> &str {
        "Buttons2Locator"
    }

    fn role(&self) -> Role {
        Role::Device
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        for s in inputs.device() {
            if let Some((id, pressed)) = s.as_button() {
                if let Some(i) = pad_index(id) {
                    self.held[i] = pressed;
                }
            }
        }
        if let Some(p) = buttons_to_locator(&self.held, &self.pose, cx.dt(), self.rates) {
            self.pose = p;
            cx.emit("locator", Sample::Locator(p));
        }
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        if verb != Verb::SetParam {
            return Err(FlowError::UnsupportedVerb {
                node: node.into(),
                behavior: self.type_name().into(),
                verb,
            });
        }
        let mut prior = Params::new();
        for (key, value) in payload.iter() {
            let slot = match key {
                "lin" => &mut self.rates.linear,
                "ang" => &mut self.rates.angular,
                _ => {
                    return Err(FlowError::UnknownParam {
                        node: node.into(),
                        behavior: "Buttons2Locator".into(),
                        key: key.into(),
                    })
                }
            };
            let v = value.as_f64().ok_or_else(|| FlowError::InvalidParam {
                node: node.into(),
                key: key.into(),
                reason: "expected a number".into(),
            })?;
            prior.insert(key, *slot);
            *slot = v;
        }
        Ok(Ack { prior })
    }

    impl_any!();
}

//! Go-Go arm extension.
//!
//! The hand's distance from the head, `r`, maps to a virtual distance that is
//! the identity inside radius `D` and grows quadratically beyond it:
//!
//! ```text
//! f(r) = r                  r <  D
//! f(r) = r + k (r - D)^2    r >= D
//! ```
//!
//! The virtual hand lies on the head-to-hand ray at distance `f(r)`.

use crate::flow::{Ack, Behavior, ControlMessage, Flag, FlowError, Inputs, ProcessContext, Verb};
use crate::impl_any;
use crate::sample::{ParamValue, Params, Pose, Sample};

use super::{apply_params, number};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoGoParams {
    /// Radius of the identity region, meters.
    pub d: f64,
    /// Quadratic gain, 1/m.
    pub k: f64,
    /// Real/virtual divergence above which the real-hand cube is shown, meters.
    pub epsilon: f64,
}

impl Default for GoGoParams {
    fn default() -> Self {
        GoGoParams {
            d: 0.5,
            k: 1.0 / 6.0,
            epsilon: 1e-6,
        }
    }
}

impl GoGoParams {
    pub fn new(d: f64, k: f64, epsilon: f64) -> Result<Self, String> {
        let p = GoGoParams { d, k, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.d > 0.0) {
            return Err(format!("D must be positive, got {}", self.d));
        }
        if !(self.k >= 0.0) {
            return Err(format!("k must be non-negative, got {}", self.k));
        }
        if !(self.epsilon > 0.0) {
            return Err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn from_params(p: &Params) -> Result<Self, String> {
        let def = GoGoParams::default();
        GoGoParams::new(p.f64_or("D", def.d)?, p.f64_or("k", def.k)?, p.f64_or("epsilon", def.epsilon)?)
    }

    /// Sets one of `D`, `k`, `epsilon`, returning the previous value.
    pub(crate) fn set(&mut self, key: &str, value: &ParamValue) -> Result<Option<ParamValue>, String> {
        let mut next = *self;
        let slot = match key {
            "D" => &mut next.d,
            "k" => &mut next.k,
            "epsilon" => &mut next.epsilon,
            _ => return Ok(None),
        };
        let old = *slot;
        *slot = number(value)?;
        next.validate()?;
        *self = next;
        Ok(Some(ParamValue::Number(old)))
    }
}

/// Virtual distance for a real head-to-hand distance `r`.
pub fn gogo_radius(r: f64, p: &GoGoParams) -> f64 {
    if r < p.d {
        r
    } else {
        let over = r - p.d;
        r + p.k * over * over
    }
}

/// Maps the real hand to the virtual hand. Inside the identity region, and when
/// the hand coincides with the head, the hand is returned unchanged.
pub fn gogo_map(head: &Pose, hand: &Pose, p: &GoGoParams) -> Pose {
    let offset = hand.position - head.position;
    let r_real = offset.norm();
    if r_real == 0.0 || r_real < p.d {
        return *hand;
    }
    let r_virtual = gogo_radius(r_real, p);
    Pose::new(head.position + offset * (r_virtual / r_real), hand.orientation)
}

/// Whether the virtual hand has moved away from the real one.
pub fn gogo_control(real: &Pose, virtual_hand: &Pose, p: &GoGoParams) -> bool {
    (virtual_hand.position - real.position).norm() > p.epsilon
}

/// Head + hand in, virtual hand out on `locator`.
#[derive(Debug, Clone)]
pub struct GoGoFilter {
    params: GoGoParams,
    head: Option<Pose>,
    hand: Option<Pose>,
}

impl GoGoFilter {
    pub fn new(params: GoGoParams) -> Self {
        GoGoFilter {
            params,
            head: None,
            hand: None,
        }
    }

    pub fn params(&self) -> GoGoParams {
        self.params
    }
}

impl Behavior for GoGoFilter {
    fn type_name(&self) -> &str {
        "GoGoFilter"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let head = inputs.last("head").and_then(Sample::as_locator);
        let hand = inputs.last("hand").and_then(Sample::as_locator);
        if head.is_none() && hand.is_none() {
            return Ok(());
        }
        if let Some(h) = head {
            self.head = Some(*h);
        }
        if let Some(h) = hand {
            self.hand = Some(*h);
        }
        if let (Some(head), Some(hand)) = (self.head, self.hand) {
            cx.emit("locator", Sample::Locator(gogo_map(&head, &hand, &self.params)));
        }
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        let params = &mut self.params;
        apply_params(node, "GoGoFilter", verb, payload, |k, v| params.set(k, v))
    }

    impl_any!();
}

/// Shows the real-hand cube and enables its mover while the virtual hand is
/// extended; hides and disables otherwise. Acts only on transitions.
#[derive(Debug, Clone)]
pub struct GoGoControl {
    params: GoGoParams,
    cube: String,
    mover: String,
    real: Option<Pose>,
    virtual_hand: Option<Pose>,
    diverged: Option<bool>,
}

impl GoGoControl {
    pub fn new(params: GoGoParams, cube: &str, mover: &str) -> Self {
        GoGoControl {
            params,
            cube: cube.to_owned(),
            mover: mover.to_owned(),
            real: None,
            virtual_hand: None,
            diverged: None,
        }
    }

    pub fn diverged(&self) -> Option<bool> {
        self.diverged
    }
}

impl Behavior for GoGoControl {
    fn type_name(&self) -> &str {
        "GoGoControl"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let real = inputs.last("real").and_then(Sample::as_locator);
        let virt = inputs.last("virtual").and_then(Sample::as_locator);
        if real.is_none() && virt.is_none() {
            return Ok(());
        }
        if let Some(r) = real {
            self.real = Some(*r);
        }
        if let Some(v) = virt {
            self.virtual_hand = Some(*v);
        }
        let (Some(real), Some(virt)) = (self.real, self.virtual_hand) else {
            return Ok(());
        };
        let now = gogo_control(&real, &virt, &self.params);
        if self.diverged != Some(now) {
            self.diverged = Some(now);
            cx.set_flag(&self.cube, Flag::Visible, now);
            cx.send(if now {
                ControlMessage::enable(&self.mover)
            } else {
                ControlMessage::disable(&self.mover)
            });
        }
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        let params = &mut self.params;
        apply_params(node, "GoGoControl", verb, payload, |k, v| params.set(k, v))
    }

    impl_any!();
}

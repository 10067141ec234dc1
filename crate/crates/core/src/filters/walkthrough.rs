//! Filters of the desktop campus walkthrough: mouse-steered motion constrained
//! to a set of paths, vertical motion, and a quit key.

use nalgebra::{Unit, UnitQuaternion};

use crate::flow::{Ack, Behavior, FlowError, Inputs, ProcessContext, Verb};
use crate::impl_any;
use crate::sample::{ParamValue, Params, Pose, Sample, Vec3};

use super::{apply_params, number, presses};

/// Step length: the last `dt` sample received, else the step's own dt.
fn step_dt(inputs: &Inputs, cx: &ProcessContext<'_>) -> f64 {
    inputs
        .last("dt")
        .and_then(Sample::as_valuator)
        .unwrap_or(cx.dt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorcycleParams {
    /// Window size in pixels.
    pub width: f64,
    pub height: f64,
    /// Degrees per second at the window's left/right edge.
    pub max_yaw_rate: f64,
    /// Meters per second at the window's top/bottom edge.
    pub max_speed: f64,
}

impl Default for MotorcycleParams {
    fn default() -> Self {
        MotorcycleParams {
            width: 640.0,
            height: 480.0,
            max_yaw_rate: 60.0,
            max_speed: 5.0,
        }
    }
}

impl MotorcycleParams {
    pub fn from_params(p: &Params) -> Result<Self, String> {
        let d = MotorcycleParams::default();
        let out = MotorcycleParams {
            width: p.f64_or("width", d.width)?,
            height: p.f64_or("height", d.height)?,
            max_yaw_rate: p.f64_or("max_yaw_rate", d.max_yaw_rate)?,
            max_speed: p.f64_or("max_speed", d.max_speed)?,
        };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err("window dimensions must be positive".into());
        }
        if !(self.max_yaw_rate.is_finite() && self.max_speed.is_finite()) {
            return Err("rates must be finite".into());
        }
        Ok(())
    }
}

/// One engaged step: returns the new position and yaw (radians about +Y).
/// `mouse` is in window pixels with y growing downward.
pub fn motorcycle_step(
    position: Vec3,
    yaw: f64,
    mouse: (f64, f64),
    p: &MotorcycleParams,
    dt: f64,
) -> (Vec3, f64) {
    let u = (2.0 * mouse.0 / p.width - 1.0).clamp(-1.0, 1.0);
    let v = (2.0 * mouse.1 / p.height - 1.0).clamp(-1.0, 1.0);
    let yaw = yaw - u * p.max_yaw_rate.to_radians() * dt;
    let speed = -v * p.max_speed;
    let forward = Vec3::new(-yaw.sin(), 0.0, -yaw.cos());
    (position + forward * (speed * dt), yaw)
}

fn yaw_of(pose: &Pose) -> f64 {
    let f = pose.forward();
    (-f.x).atan2(-f.z)
}

fn yaw_rotation(yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Unit::new_unchecked(Vec3::y()), yaw)
}

/// Mouse-steered ground motion. Start/stop buttons engage and release; while
/// engaged a candidate pose is emitted every step. The pose is re-read from
/// the viewpoint through `current`.
#[derive(Debug, Clone)]
pub struct Motorcycle {
    params: MotorcycleParams,
    engaged: bool,
    mouse: Option<(f64, f64)>,
    pose: Option<(Vec3, f64)>,
}

impl Motorcycle {
    pub fn new(params: MotorcycleParams) -> Self {
        Motorcycle {
            params,
            engaged: false,
            mouse: None,
            pose: None,
        }
    }

    pub fn engaged(&self) -> bool {
        self.engaged
    }
}

impl Behavior for Motorcycle {
    fn type_name(&self) -> &str {
        "Motorcycle"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        if let Some(m) = inputs.last("mouse").and_then(Sample::as_locator) {
            self.mouse = Some((m.position.x, m.position.y));
        }
        if let Some(c) = inputs.last("current").and_then(Sample::as_locator) {
            let yaw = self.pose.map_or_else(|| yaw_of(c), |(_, y)| y);
            self.pose = Some((c.position, yaw));
        }
        if presses(inputs.get("start")) > 0 {
            self.engaged = true;
        }
        if presses(inputs.get("stop")) > 0 {
            self.engaged = false;
        }
        if !self.engaged {
            return Ok(());
        }
        let (position, yaw) = self.pose.unwrap_or_else(|| {
            let vp = cx.scene().viewpoint();
            (vp.position, yaw_of(&vp))
        });
        let center = (self.params.width / 2.0, self.params.height / 2.0);
        let dt = step_dt(inputs, cx);
        let (position, yaw) = motorcycle_step(position, yaw, self.mouse.unwrap_or(center), &self.params, dt);
        self.pose = Some((position, yaw));
        cx.emit("locator", Sample::Locator(Pose::new(position, yaw_rotation(yaw))));
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        apply_params(node, "Motorcycle", verb, payload, |key, value| {
            let mut next = self.params;
            let slot = match key {
                "width" => &mut next.width,
                "height" => &mut next.height,
                "max_yaw_rate" => &mut next.max_yaw_rate,
                "max_speed" => &mut next.max_speed,
                _ => return Ok(None),
            };
            let old = std::mem::replace(slot, number(value)?);
            next.validate()?;
            self.params = next;
            Ok(Some(ParamValue::Number(old)))
        })
    }

    impl_any!();
}

/// A polyline on the ground plane (y ignored) with a corridor half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub vertices: Vec<Vec3>,
    pub half_width: f64,
}

impl Path {
    pub fn new(vertices: Vec<Vec3>, half_width: f64) -> Result<Self, String> {
        if vertices.len() < 2 {
            return Err(format!("a path needs at least 2 vertices, got {}", vertices.len()));
        }
        if !(half_width > 0.0) {
            return Err(format!("half-width must be positive, got {half_width}"));
        }
        Ok(Path { vertices, half_width })
    }

    /// Ground-plane distance from `p` to the nearest segment.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| segment_distance_xz(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.distance(p) <= self.half_width
    }
}

fn segment_distance_xz(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let (px, pz) = (p.x - a.x, p.z - a.z);
    let (dx, dz) = (b.x - a.x, b.z - a.z);
    let len2 = dx * dx + dz * dz;
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((px * dx + pz * dz) / len2).clamp(0.0, 1.0)
    };
    (px - t * dx).hypot(pz - t * dz)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Self {
        PathSet { paths }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.paths.iter().any(|path| path.contains(p))
    }
}

/// Passes candidate poses that lie on a path; otherwise re-emits the last valid
/// position with the candidate's orientation.
#[derive(Debug, Clone)]
pub struct InsidePath {
    paths: PathSet,
    last_valid: Vec3,
}

impl InsidePath {
    pub fn new(paths: PathSet, start: &Pose) -> Result<Self, FlowError> {
        if !paths.contains(&start.position) {
            return Err(FlowError::InvalidStartPose {
                x: start.position.x,
                z: start.position.z,
            });
        }
        Ok(InsidePath {
            paths,
            last_valid: start.position,
        })
    }

    pub fn paths(&self) -> &PathSet {
        &self.paths
    }
}

impl Behavior for InsidePath {
    fn type_name(&self) -> &str {
        "InsidePath"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let Some(c) = inputs.last("candidate").and_then(Sample::as_locator) else {
            return Ok(());
        };
        if self.paths.contains(&c.position) {
            self.last_valid = c.position;
        }
        cx.emit("locator", Sample::Locator(Pose::new(self.last_valid, c.orientation)));
        Ok(())
    }

    impl_any!();
}

/// Integrates held up/down buttons into a height.
#[derive(Debug, Clone)]
pub struct MoveUpDn {
    speed: f64,
    y: f64,
    up: bool,
    down: bool,
}

impl MoveUpDn {
    pub fn new(y: f64, speed: f64) -> Self {
        MoveUpDn {
            speed,
            y,
            up: false,
            down: false,
        }
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

fn held(samples: &[Sample], state: &mut bool) {
    if let Some((_, pressed)) = samples.iter().rev().find_map(Sample::as_button) {
        *state = pressed;
    }
}

impl Behavior for MoveUpDn {
    fn type_name(&self) -> &str {
        "MoveUpDn"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        held(inputs.get("up"), &mut self.up);
        held(inputs.get("down"), &mut self.down);
        let dir = f64::from(u8::from(self.up)) - f64::from(u8::from(self.down));
        if dir == 0.0 {
            return Ok(());
        }
        self.y += dir * self.speed * step_dt(inputs, cx);
        cx.emit("y", Sample::Valuator(self.y));
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        apply_params(node, "MoveUpDn", verb, payload, |key, value| match key {
            "speed" => Ok(Some(ParamValue::Number(std::mem::replace(
                &mut self.speed,
                number(value)?,
            )))),
            _ => Ok(None),
        })
    }

    impl_any!();
}

/// Ground xz and orientation from `ground`, height from `y`.
#[derive(Debug, Clone, Default)]
pub struct CombineXZY {
    ground: Option<Pose>,
    y: Option<f64>,
}

impl Behavior for CombineXZY {
    fn type_name(&self) -> &str {
        "CombineXZY"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let ground = inputs.last("ground").and_then(Sample::as_locator);
        let y = inputs.last("y").and_then(Sample::as_valuator);
        if ground.is_none() && y.is_none() {
            return Ok(());
        }
        if let Some(g) = ground {
            self.ground = Some(*g);
        }
        if y.is_some() {
            self.y = y;
        }
        let Some(g) = self.ground else {
            return Ok(());
        };
        let pos = Vec3::new(g.position.x, self.y.unwrap_or(g.position.y), g.position.z);
        cx.emit("locator", Sample::Locator(Pose::new(pos, g.orientation)));
        Ok(())
    }

    impl_any!();
}

/// Ends the run when its button is pressed.
#[derive(Debug, Clone, Default)]
pub struct QuitByButton;

impl Behavior for QuitByButton {
    fn type_name(&self) -> &str {
        "QuitByButton"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        if presses(inputs.get("button")) > 0 {
            cx.quit();
        }
        Ok(())
    }

    impl_any!();
}

/// Emits the step length once per step.
#[derive(Debug, Clone, Default)]
pub struct Timer;

impl Behavior for Timer {
    fn type_name(&self) -> &str {
        "Timer"
    }

    fn process(&mut self, _inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let dt = cx.dt();
        cx.emit("dt", Sample::Valuator(dt));
        Ok(())
    }

    impl_any!();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::StepSink;
    use crate::scene::SceneState;

    fn run(b: &mut dyn Behavior, inputs: &Inputs, dt: f64) -> (Vec<(String, Sample)>, bool) {
        let scene = SceneState::new();
        let mut sink = StepSink::new();
        let mut cx = ProcessContext::new("n", &scene, dt, 0, &mut sink);
        b.process(inputs, &mut cx).unwrap();
        let out = cx.into_emissions();
        (out, sink.quit_requested())
    }

    fn locator(out: &[(String, Sample)]) -> Pose {
        *out.last().unwrap().1.as_locator().unwrap()
    }

    #[test]
    fn dead_center_does_not_move() {
        let p = MotorcycleParams::default();
        let (pos, yaw) = motorcycle_step(Vec3::zeros(), 0.3, (320.0, 240.0), &p, 0.1);
        assert_eq!(pos, Vec3::zeros());
        assert_eq!(yaw, 0.3);
    }

    #[test]
    fn full_throttle_ten_steps() {
        let mut m = Motorcycle::new(MotorcycleParams::default());
        let mut i = Inputs::new();
        i.push("start", Sample::button("start", true));
        i.push("mouse", Sample::Locator(Pose::at(320.0, 0.0, 0.0)));
        let mut last = Pose::IDENTITY;
        for k in 0..10 {
            let inputs = if k == 0 { i.clone() } else { Inputs::new() };
            last = locator(&run(&mut m, &inputs, 0.1).0);
        }
        assert!((last.position.z + 5.0).abs() <= 1e-9);
        assert!(last.position.x.abs() <= 1e-12);
    }

    #[test]
    fn disengaged_is_silent() {
        let mut m = Motorcycle::new(MotorcycleParams::default());
        let mut i = Inputs::new();
        i.push("mouse", Sample::Locator(Pose::at(0.0, 0.0, 0.0)));
        assert!(run(&mut m, &i, 0.1).0.is_empty());
    }

    #[test]
    fn steering_left_turns_left() {
        let p = MotorcycleParams::default();
        let (pos, yaw) = motorcycle_step(Vec3::zeros(), 0.0, (0.0, 0.0), &p, 1.0);
        assert!((yaw - 60f64.to_radians()).abs() <= 1e-12);
        // heading rotated toward -x
        assert!(pos.x < 0.0 && pos.z < 0.0);
        assert!((pos.norm() - 5.0).abs() <= 1e-12);
    }

    fn corridor() -> PathSet {
        PathSet::new(vec![Path::new(vec![Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0)], 1.0).unwrap()])
    }

    fn candidate(x: f64, z: f64) -> Inputs {
        let mut i = Inputs::new();
        i.push("candidate", Sample::Locator(Pose::at(x, 7.0, z)));
        i
    }

    #[test]
    fn inside_path_cases() {
        let mut ip = InsidePath::new(corridor(), &Pose::at(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(locator(&run(&mut ip, &candidate(5.0, 0.0), 0.1).0).position.x, 5.0);
        // exactly on the closed boundary
        assert_eq!(locator(&run(&mut ip, &candidate(6.0, 1.0), 0.1).0).position.z, 1.0);
        // two half-widths out: last valid re-emitted
        let out = locator(&run(&mut ip, &candidate(6.0, 2.0), 0.1).0);
        assert_eq!(out.position, Vec3::new(6.0, 7.0, 1.0));
        // beyond the end cap: distance to endpoint
        let out = locator(&run(&mut ip, &candidate(10.5, 0.5), 0.1).0);
        assert_eq!(out.position.x, 10.5);
        let out = locator(&run(&mut ip, &candidate(11.0, 0.5), 0.1).0);
        assert_eq!(out.position.x, 10.5);
    }

    #[test]
    fn segment_distance_oracle() {
        let a = Vec3::zeros();
        let b = Vec3::new(10.0, 0.0, 0.0);
        assert_eq!(segment_distance_xz(&Vec3::new(5.0, 3.0, 2.0), &a, &b), 2.0);
        assert_eq!(segment_distance_xz(&Vec3::new(13.0, 0.0, 4.0), &a, &b), 5.0);
        assert_eq!(segment_distance_xz(&Vec3::new(-3.0, 0.0, 4.0), &a, &b), 5.0);
    }

    #[test]
    fn start_off_path_rejected() {
        assert!(matches!(
            InsidePath::new(corridor(), &Pose::at(0.0, 0.0, 5.0)),
            Err(FlowError::InvalidStartPose { .. })
        ));
        assert!(Path::new(vec![Vec3::zeros()], 1.0).is_err());
        assert!(Path::new(vec![Vec3::zeros(), Vec3::x()], 0.0).is_err());
    }

    #[test]
    fn up_held_two_seconds() {
        let mut m = MoveUpDn::new(0.0, 1.0);
        let dt = 1.0 / 60.0;
        let mut press = Inputs::new();
        press.push("up", Sample::button("up", true));
        run(&mut m, &press, dt);
        for _ in 1..120 {
            run(&mut m, &Inputs::new(), dt);
        }
        assert!((m.y() - 2.0).abs() <= 1e-9);
        let mut release = Inputs::new();
        release.push("up", Sample::button("up", false));
        assert!(run(&mut m, &release, dt).0.is_empty());
    }

    #[test]
    fn up_and_down_cancel() {
        let mut m = MoveUpDn::new(0.0, 1.0);
        let mut i = Inputs::new();
        i.push("up", Sample::button("up", true));
        i.push("down", Sample::button("down", true));
        assert!(run(&mut m, &i, 0.1).0.is_empty());
        assert!(run(&mut m, &Inputs::new(), 0.1).0.is_empty());
    }

    #[test]
    fn combine_uses_latest_of_each() {
        let mut c = CombineXZY::default();
        let mut i = Inputs::new();
        i.push("ground", Sample::Locator(Pose::at(1.0, 0.0, 2.0)));
        i.push("y", Sample::Valuator(3.0));
        assert_eq!(locator(&run(&mut c, &i, 0.1).0).position, Vec3::new(1.0, 3.0, 2.0));
        let mut i = Inputs::new();
        i.push("y", Sample::Valuator(4.0));
        assert_eq!(locator(&run(&mut c, &i, 0.1).0).position, Vec3::new(1.0, 4.0, 2.0));
        assert!(run(&mut c, &Inputs::new(), 0.1).0.is_empty());
    }

    #[test]
    fn quit_on_press_only() {
        let mut q = QuitByButton;
        let mut i = Inputs::new();
        i.push("button", Sample::button("q", false));
        assert!(!run(&mut q, &i, 0.1).1);
        i.push("button", Sample::button("q", true));
        assert!(run(&mut q, &i, 0.1).1);
    }

    #[test]
    fn timer_sums_to_elapsed() {
        let mut t = Timer;
        let dt = 1.0 / 60.0;
        let mut total = 0.0;
        for _ in 0..60 {
            let out = run(&mut t, &Inputs::new(), dt).0;
            assert_eq!(out.len(), 1);
            total += out[0].1.as_valuator().unwrap();
        }
        assert!((total - 1.0).abs() <= 1e-9);
        assert!((dt - 0.016_667).abs() <= 1e-6);
    }
}

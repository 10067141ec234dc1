//! Headless scene: boxes with transforms and flags, a viewpoint, frustum and
//! geometric queries, and change listeners that feed the dataflow.
//!
//! Objects are oriented boxes. Every query goes through the box's world-space
//! axis-aligned bound, which is conservative for rotated boxes.
//!
//! The viewpoint is addressable as the pseudo-object [`VIEWPOINT`], so filters
//! move it with the same deferred writes they use for objects.

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;
use thiserror::Error;

use crate::flow::Dataflow;
use crate::sample::{PortKind, Pose, Sample, Vec3};

/// Object id under which the viewpoint is addressed.
pub const VIEWPOINT: &str = "viewpoint";

/// Ray hits closer than this are considered tied and resolved by object id.
pub const RAY_TIE_EPSILON: f64 = 1e-12;

pub type Transform = Pose;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("object `{0}` already exists")]
    DuplicateObject(String),
    #[error("object `{0}` has a negative half-extent")]
    InvalidExtents(String),
    #[error("invalid frustum: {0}")]
    InvalidFrustum(String),
    #[error("unknown listener destination `{node}.{port}`")]
    UnknownPort { node: String, port: String },
    #[error("listener port `{node}.{port}` is {found}, transform changes need Locator")]
    TypeMismatch {
        node: String,
        port: String,
        found: PortKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Visible,
    BboxVisible,
    Selectable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    SetTransform {
        #[serde(flatten)]
        transform: Transform,
    },
    SetFlag { flag: Flag, value: bool },
}

/// A scene mutation produced during a step and applied when the step ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeferredWrite {
    pub object: String,
    #[serde(flatten)]
    pub mutation: Mutation,
    pub origin: String,
    pub sequence: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub transform: Transform,
    pub half_extents: Vec3,
    pub visible: bool,
    pub bbox_visible: bool,
    pub selectable: bool,
}

impl SceneObject {
    pub fn new(id: impl Into<String>, transform: Transform, half_extents: Vec3) -> Self {
        SceneObject {
            id: id.into(),
            transform,
            half_extents,
            visible: true,
            bbox_visible: false,
            selectable: true,
        }
    }

    pub fn flag(&self, flag: Flag) -> bool {
        match flag {
            Flag::Visible => self.visible,
            Flag::BboxVisible => self.bbox_visible,
            Flag::Selectable => self.selectable,
        }
    }

    fn flag_mut(&mut self, flag: Flag) -> &mut bool {
        match flag {
            Flag::Visible => &mut self.visible,
            Flag::BboxVisible => &mut self.bbox_visible,
            Flag::Selectable => &mut self.selectable,
        }
    }

    pub fn world_aabb(&self) -> WorldAabb {
        world_aabb(&self.transform, &self.half_extents)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldAabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl WorldAabb {
    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn half_extents(&self) -> Vec3 {
        (self.max - self.min) * 0.5
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }
}

/// Axis-aligned bound of an oriented box: per world axis, the sum of
/// `|R e_i| * h_i` over the box's local axes.
pub fn world_aabb(transform: &Transform, half_extents: &Vec3) -> WorldAabb {
    let r = transform.orientation.to_rotation_matrix();
    let m = r.matrix();
    let mut ext = Vec3::zeros();
    for row in 0..3 {
        ext[row] = (0..3).map(|col| m[(row, col)].abs() * half_extents[col]).sum();
    }
    WorldAabb {
        min: transform.position - ext,
        max: transform.position + ext,
    }
}

/// Closed-interval overlap on all three axes; touching faces overlap.
pub fn overlap(a: &WorldAabb, b: &WorldAabb) -> bool {
    (0..3).all(|i| a.min[i] <= b.max[i] && b.min[i] <= a.max[i])
}

/// Slab-method entry parameter of a ray against a box. Rays starting inside
/// hit at `t = 0`.
pub fn ray_aabb(origin: &Vec3, dir: &Vec3, bounds: &WorldAabb) -> Option<f64> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for i in 0..3 {
        if dir[i] == 0.0 {
            if origin[i] < bounds.min[i] || origin[i] > bounds.max[i] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[i];
        let t0 = (bounds.min[i] - origin[i]) * inv;
        let t1 = (bounds.max[i] - origin[i]) * inv;
        let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        t_enter = t_enter.max(near);
        t_exit = t_exit.min(far);
    }
    let t = t_enter.max(0.0);
    (t <= t_exit).then_some(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frustum {
    /// Vertical field of view in degrees.
    pub fov: f64,
    pub aspect: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for Frustum {
    fn default() -> Self {
        Frustum {
            fov: 60.0,
            aspect: 4.0 / 3.0,
            near: 0.1,
            far: 1000.0,
        }
    }
}

impl Frustum {
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(SceneError::InvalidFrustum(format!(
                "need 0 < near < far, got near={} far={}",
                self.near, self.far
            )));
        }
        if !(self.fov > 0.0 && self.fov < 180.0) || !(self.aspect > 0.0) {
            return Err(SceneError::InvalidFrustum(format!(
                "fov {} / aspect {} out of range",
                self.fov, self.aspect
            )));
        }
        Ok(())
    }

    /// Inward-facing planes `(n, d)` with `n·p + d >= 0` inside, in world space
    /// for a camera at `eye` looking along its forward axis.
    pub fn planes(&self, eye: &Pose) -> [(Vec3, f64); 6] {
        let tan_v = (self.fov.to_radians() * 0.5).tan();
        let tan_h = tan_v * self.aspect;
        let local = [
            (Vec3::new(0.0, 0.0, -1.0), -self.near),
            (Vec3::new(0.0, 0.0, 1.0), self.far),
            (Vec3::new(1.0, 0.0, -tan_h), 0.0),
            (Vec3::new(-1.0, 0.0, -tan_h), 0.0),
            (Vec3::new(0.0, 1.0, -tan_v), 0.0),
            (Vec3::new(0.0, -1.0, -tan_v), 0.0),
        ];
        local.map(|(n, d)| {
            let len = n.norm();
            let n_local = n / len;
            let d_local = d / len;
            let n_world = eye.orientation * n_local;
            (n_world, d_local - n_world.dot(&eye.position))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListenerTarget {
    pub node: String,
    pub port: String,
}

/// Objects, viewpoint, frustum and listener registrations.
#[derive(Debug, Clone, Default)]
pub struct SceneState {
    objects: IndexMap<String, SceneObject>,
    viewpoint: Pose,
    frustum: Frustum,
    listeners: IndexMap<String, Vec<ListenerTarget>>,
    dirty: IndexSet<String>,
}

impl SceneState {
    pub fn new() -> Self {
        SceneState::default()
    }

    pub fn insert(&mut self, object: SceneObject) -> Result<(), SceneError> {
        if object.id == VIEWPOINT || self.objects.contains_key(&object.id) {
            return Err(SceneError::DuplicateObject(object.id));
        }
        if object.half_extents.iter().any(|h| !(*h >= 0.0)) {
            return Err(SceneError::InvalidExtents(object.id));
        }
        self.objects.insert(object.id.clone(), object);
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.get(id)
    }

    /// Objects in insertion order.
    pub fn objects(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects.values()
    }

    pub fn contains(&self, id: &str) -> bool {
        id == VIEWPOINT || self.objects.contains_key(id)
    }

    pub fn transform(&self, id: &str) -> Option<Transform> {
        if id == VIEWPOINT {
            Some(self.viewpoint)
        } else {
            self.objects.get(id).map(|o| o.transform)
        }
    }

    pub fn viewpoint(&self) -> Pose {
        self.viewpoint
    }

    /// Sets the viewpoint immediately. Filters go through deferred writes instead.
    pub fn set_viewpoint(&mut self, t: Transform) -> Transform {
        std::mem::replace(&mut self.viewpoint, t)
    }

    pub fn frustum(&self) -> Frustum {
        self.frustum
    }

    pub fn set_frustum(&mut self, f: Frustum) -> Result<(), SceneError> {
        f.validate()?;
        self.frustum = f;
        Ok(())
    }

    /// Visible, selectable objects in insertion order.
    pub fn selectable_ids(&self) -> Vec<String> {
        self.objects
            .values()
            .filter(|o| o.visible && o.selectable)
            .map(|o| o.id.clone())
            .collect()
    }

    /// Applies one write. Returns whether anything changed; only changes mark
    /// the object for listener notification at the start of the next step.
    pub fn apply_mutation(&mut self, write: &DeferredWrite) -> Result<bool, SceneError> {
        let changed = match &write.mutation {
            Mutation::SetTransform { transform } => {
                let slot = if write.object == VIEWPOINT {
                    &mut self.viewpoint
                } else {
                    &mut self
                        .objects
                        .get_mut(&write.object)
                        .ok_or_else(|| SceneError::UnknownObject(write.object.clone()))?
                        .transform
                };
                let changed = slot != transform;
                *slot = *transform;
                changed
            }
            Mutation::SetFlag { flag, value } => {
                let obj = self
                    .objects
                    .get_mut(&write.object)
                    .ok_or_else(|| SceneError::UnknownObject(write.object.clone()))?;
                let slot = obj.flag_mut(*flag);
                let changed = *slot != *value;
                *slot = *value;
                changed
            }
        };
        if changed && self.listeners.contains_key(&write.object) {
            self.dirty.insert(write.object.clone());
        }
        Ok(changed)
    }

    /// Registers `dest.iport` to receive the object's locator whenever it changes.
    pub fn add_listener(
        &mut self,
        flow: &Dataflow,
        object: &str,
        dest: &str,
        iport: &str,
    ) -> Result<usize, SceneError> {
        if !self.contains(object) {
            return Err(SceneError::UnknownObject(object.to_owned()));
        }
        let kind = flow
            .node(dest)
            .and_then(|n| n.iport(iport))
            .map(|p| p.kind)
            .ok_or_else(|| SceneError::UnknownPort {
                node: dest.to_owned(),
                port: iport.to_owned(),
            })?;
        if kind != PortKind::Locator {
            return Err(SceneError::TypeMismatch {
                node: dest.to_owned(),
                port: iport.to_owned(),
                found: kind,
            });
        }
        let list = self.listeners.entry(object.to_owned()).or_default();
        list.push(ListenerTarget {
            node: dest.to_owned(),
            port: iport.to_owned(),
        });
        Ok(list.len() - 1)
    }

    pub fn listeners(&self, object: &str) -> &[ListenerTarget] {
        self.listeners.get(object).map_or(&[], Vec::as_slice)
    }

    /// Drops every registration that targets `node`; returns how many were removed.
    pub fn remove_listeners_for(&mut self, node: &str) -> usize {
        let mut removed = 0;
        for list in self.listeners.values_mut() {
            let before = list.len();
            list.retain(|l| l.node != node);
            removed += before - list.len();
        }
        removed
    }

    /// Pending change notifications as `(node, iport, sample)`, in the order the
    /// objects first changed and then listener registration order. Clears the queue.
    pub fn take_notifications(&mut self) -> Vec<(String, String, Sample)> {
        let dirty = std::mem::take(&mut self.dirty);
        let mut out = Vec::new();
        for id in dirty {
            let Some(t) = self.transform(&id) else { continue };
            for l in self.listeners(&id) {
                out.push((l.node.clone(), l.port.clone(), Sample::Locator(t)));
            }
        }
        out
    }

    pub fn has_pending_notifications(&self) -> bool {
        !self.dirty.is_empty()
    }

    /// Nearest candidate hit by the ray; ties within [`RAY_TIE_EPSILON`] go to the
    /// lexicographically smallest id. Unknown candidate ids are ignored.
    pub fn ray_nearest<S: AsRef<str>>(
        &self,
        origin: &Vec3,
        dir: &Vec3,
        candidates: &[S],
    ) -> Option<(String, f64)> {
        let mut best: Option<(&str, f64)> = None;
        for id in candidates {
            let Some(obj) = self.objects.get(id.as_ref()) else { continue };
            let Some(t) = ray_aabb(origin, dir, &obj.world_aabb()) else { continue };
            best = match best {
                None => Some((&obj.id, t)),
                Some((bid, bt)) => {
                    if (t - bt).abs() <= RAY_TIE_EPSILON {
                        Some(if obj.id.as_str() < bid { (&obj.id, t) } else { (bid, bt) })
                    } else if t < bt {
                        Some((&obj.id, t))
                    } else {
                        Some((bid, bt))
                    }
                }
            };
        }
        best.map(|(id, t)| (id.to_owned(), t))
    }

    /// Visible objects whose bound is not fully outside any frustum plane.
    pub fn frustum_objects(&self) -> Vec<String> {
        let planes = self.frustum.planes(&self.viewpoint);
        self.objects
            .values()
            .filter(|o| o.visible)
            .filter(|o| {
                let b = o.world_aabb();
                let c = b.center();
                let e = b.half_extents();
                planes.iter().all(|(n, d)| {
                    let r = n.x.abs() * e.x + n.y.abs() * e.y + n.z.abs() * e.z;
                    n.dot(&c) + d + r >= 0.0
                })
            })
            .map(|o| o.id.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Quat;
    use std::f64::consts::FRAC_PI_2;

    fn unit_box(id: &str, x: f64, y: f64, z: f64) -> SceneObject {
        SceneObject::new(id, Pose::at(x, y, z), Vec3::new(1.0, 1.0, 1.0))
    }

    fn write(object: &str, mutation: Mutation, sequence: u64) -> DeferredWrite {
        DeferredWrite {
            object: object.into(),
            mutation,
            origin: "test".into(),
            sequence,
        }
    }

    #[test]
    fn aabb_identity_and_translation() {
        let b = world_aabb(&Pose::IDENTITY, &Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(b.min, Vec3::new(-1.0, -1.0, -1.0));
        assert_eq!(b.max, Vec3::new(1.0, 1.0, 1.0));
        let b = world_aabb(&Pose::at(5.0, 0.0, 0.0), &Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(b.min, Vec3::new(4.0, -1.0, -1.0));
    }

    #[test]
    fn aabb_yaw_swaps_extents_like_rotated_corners() {
        let t = Pose::new(Vec3::zeros(), Quat::from_axis_angle(&Vec3::y_axis(), FRAC_PI_2));
        let h = Vec3::new(2.0, 1.0, 1.0);
        // oracle: rotate all 8 corners and take min/max
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    let c = t.orientation * Vec3::new(sx * h.x, sy * h.y, sz * h.z);
                    lo = lo.inf(&c);
                    hi = hi.sup(&c);
                }
            }
        }
        let b = world_aabb(&t, &h);
        assert!((b.min - lo).norm() < 1e-12 && (b.max - hi).norm() < 1e-12);
        assert!((b.min - Vec3::new(-1.0, -1.0, -2.0)).norm() < 1e-12);
        assert!((b.max - Vec3::new(1.0, 1.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn overlap_cases() {
        let a = world_aabb(&Pose::IDENTITY, &Vec3::new(1.0, 1.0, 1.0));
        assert!(overlap(&a, &a));
        let far = world_aabb(&Pose::at(3.0, 0.0, 0.0), &Vec3::new(1.0, 1.0, 1.0));
        assert!(!overlap(&a, &far));
        let touching = world_aabb(&Pose::at(2.0, 0.0, 0.0), &Vec3::new(1.0, 1.0, 1.0));
        assert!(overlap(&a, &touching));
    }

    #[test]
    fn ray_hits_unit_cube_at_four() {
        let mut s = SceneState::new();
        s.insert(SceneObject::new("cube", Pose::IDENTITY, Vec3::new(0.5, 0.5, 0.5)))
            .unwrap();
        s.insert(unit_box("big", 0.0, 0.0, -20.0)).unwrap();
        let hit = s.ray_nearest(&Vec3::new(0.0, 0.0, 5.0), &Vec3::new(0.0, 0.0, -1.0), &["cube"]);
        assert_eq!(hit, Some(("cube".into(), 4.5)));
        let mut s = SceneState::new();
        s.insert(unit_box("cube", 0.0, 0.0, 0.0)).unwrap();
        let hit = s.ray_nearest(&Vec3::new(0.0, 0.0, 5.0), &Vec3::new(0.0, 0.0, -1.0), &["cube"]);
        assert_eq!(hit, Some(("cube".into(), 4.0)));
        let miss = s.ray_nearest(&Vec3::new(0.0, 0.0, 5.0), &Vec3::new(0.0, 0.0, 1.0), &["cube"]);
        assert_eq!(miss, None);
    }

    #[test]
    fn ray_picks_nearer_box_and_breaks_ties_by_id() {
        let mut s = SceneState::new();
        s.insert(unit_box("far", 0.0, 0.0, -4.0)).unwrap();
        s.insert(unit_box("near", 0.0, 0.0, 1.0)).unwrap();
        let o = Vec3::new(0.0, 0.0, 5.0);
        let d = Vec3::new(0.0, 0.0, -1.0);
        assert_eq!(s.ray_nearest(&o, &d, &["far", "near"]), Some(("near".into(), 3.0)));
        let mut s = SceneState::new();
        s.insert(unit_box("b", 0.0, 0.0, 0.0)).unwrap();
        s.insert(unit_box("a", 0.5, 0.0, 0.0)).unwrap();
        assert_eq!(s.ray_nearest(&o, &d, &["b", "a"]).unwrap().0, "a");
    }

    #[test]
    fn ray_starting_inside_hits_at_zero() {
        let mut s = SceneState::new();
        s.insert(unit_box("c", 0.0, 0.0, 0.0)).unwrap();
        let hit = s.ray_nearest(&Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0), &["c"]);
        assert_eq!(hit, Some(("c".into(), 0.0)));
    }

    #[test]
    fn identical_transform_is_not_a_change() {
        let mut s = SceneState::new();
        s.insert(unit_box("c", 1.0, 0.0, 0.0)).unwrap();
        let w = write(
            "c",
            Mutation::SetTransform {
                transform: Pose::at(1.0, 0.0, 0.0),
            },
            0,
        );
        assert!(!s.apply_mutation(&w).unwrap());
        let w = write(
            "c",
            Mutation::SetFlag {
                flag: Flag::BboxVisible,
                value: true,
            },
            1,
        );
        assert!(s.apply_mutation(&w).unwrap());
        assert!(s.object("c").unwrap().bbox_visible);
    }

    #[test]
    fn later_sequence_wins() {
        let a = Pose::at(1.0, 0.0, 0.0);
        let b = Pose::at(2.0, 0.0, 0.0);
        for (first, second) in [(a, b), (b, a)] {
            let mut s = SceneState::new();
            s.insert(unit_box("c", 0.0, 0.0, 0.0)).unwrap();
            let mut writes = vec![
                write("c", Mutation::SetTransform { transform: second }, 1),
                write("c", Mutation::SetTransform { transform: first }, 0),
            ];
            writes.sort_by_key(|w| w.sequence);
            for w in &writes {
                s.apply_mutation(w).unwrap();
            }
            assert_eq!(s.transform("c"), Some(second));
        }
    }

    #[test]
    fn unknown_object_write_fails() {
        let mut s = SceneState::new();
        let w = write(
            "ghost",
            Mutation::SetFlag {
                flag: Flag::Visible,
                value: false,
            },
            0,
        );
        assert_eq!(s.apply_mutation(&w), Err(SceneError::UnknownObject("ghost".into())));
    }

    #[test]
    fn viewpoint_is_a_pseudo_object() {
        let mut s = SceneState::new();
        let w = write(
            VIEWPOINT,
            Mutation::SetTransform {
                transform: Pose::at(0.0, 1.7, 0.0),
            },
            0,
        );
        assert!(s.apply_mutation(&w).unwrap());
        assert_eq!(s.viewpoint(), Pose::at(0.0, 1.7, 0.0));
    }

    #[test]
    fn frustum_basic_membership() {
        let mut s = SceneState::new();
        s.insert(SceneObject::new("ahead", Pose::at(0.0, 0.0, -1.0), Vec3::repeat(0.05)))
            .unwrap();
        s.insert(SceneObject::new("behind", Pose::at(0.0, 0.0, 2.0), Vec3::repeat(0.05)))
            .unwrap();
        s.insert(SceneObject::new("straddle", Pose::at(0.0, 0.0, -0.1), Vec3::repeat(0.05)))
            .unwrap();
        let mut hidden = SceneObject::new("hidden", Pose::at(0.0, 0.0, -3.0), Vec3::repeat(0.05));
        hidden.visible = false;
        s.insert(hidden).unwrap();
        assert_eq!(s.frustum_objects(), vec!["ahead".to_string(), "straddle".to_string()]);
    }

    #[test]
    fn frustum_follows_viewpoint_orientation() {
        let mut s = SceneState::new();
        s.insert(SceneObject::new("east", Pose::at(5.0, 0.0, 0.0), Vec3::repeat(0.1)))
            .unwrap();
        assert!(s.frustum_objects().is_empty());
        // yaw -90 deg turns forward (0,0,-1) into +x
        s.set_viewpoint(Pose::new(
            Vec3::zeros(),
            Quat::from_axis_angle(&Vec3::y_axis(), -FRAC_PI_2),
        ));
        assert_eq!(s.frustum_objects(), vec!["east".to_string()]);
    }

    #[test]
    fn bad_frustum_rejected() {
        let mut s = SceneState::new();
        let f = Frustum {
            near: 2.0,
            far: 1.0,
            ..Frustum::default()
        };
        assert!(s.set_frustum(f).is_err());
    }
}

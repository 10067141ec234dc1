//! Values that flow between ports.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

pub type Vec3 = Vector3<f64>;
pub type Quat = UnitQuaternion<f64>;

/// Orientation norms further than this from 1 are rejected rather than renormalized.
pub const NORMALIZE_TOLERANCE: f64 = 1e-6;

/// A position plus orientation. Used both as the Locator payload and as an
/// object transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vector3::new(0.0, 0.0, 0.0),
        orientation: UnitQuaternion::new_unchecked(Quaternion::new(1.0, 0.0, 0.0, 0.0)),
    };

    pub fn new(position: Vec3, orientation: Quat) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Pose::new(Vec3::new(x, y, z), Quat::identity())
    }

    /// Pointing direction: the orientation applied to the canonical forward axis (0,0,-1).
    pub fn forward(&self) -> Vec3 {
        self.orientation * Vec3::new(0.0, 0.0, -1.0)
    }

    pub fn position_array(&self) -> [f64; 3] {
        [self.position.x, self.position.y, self.position.z]
    }

    /// Orientation as `[w, x, y, z]`.
    pub fn orientation_array(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Pose", 2)?;
        st.serialize_field("pos", &self.position_array())?;
        st.serialize_field("orient", &self.orientation_array())?;
        st.end()
    }
}

/// Builds a unit quaternion from `[w, x, y, z]`, renormalizing when the norm is
/// within [`NORMALIZE_TOLERANCE`] of one.
pub fn quat_from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Quat, String> {
    let q = Quaternion::new(w, x, y, z);
    let n = q.norm();
    if !n.is_finite() || (n - 1.0).abs() > NORMALIZE_TOLERANCE {
        return Err(format!("quaternion ({w} {x} {y} {z}) is not unit length (norm {n})"));
    }
    Ok(UnitQuaternion::from_quaternion(q))
}

/// The four kinds of port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PortKind {
    Locator,
    Valuator,
    Button,
    Pick,
}

impl PortKind {
    pub const ALL: [PortKind; 4] = [
        PortKind::Locator,
        PortKind::Valuator,
        PortKind::Button,
        PortKind::Pick,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PortKind::Locator => "Locator",
            PortKind::Valuator => "Valuator",
            PortKind::Button => "Button",
            PortKind::Pick => "Pick",
        }
    }

    /// Case-insensitive lookup by kind name.
    pub fn parse(s: &str) -> Option<PortKind> {
        PortKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for PortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Locator(Pose),
    Valuator(f64),
    Button { id: String, pressed: bool },
    Pick(Option<String>),
}

impl Sample {
    pub fn kind(&self) -> PortKind {
        match self {
            Sample::Locator(_) => PortKind::Locator,
            Sample::Valuator(_) => PortKind::Valuator,
            Sample::Button { .. } => PortKind::Button,
            Sample::Pick(_) => PortKind::Pick,
        }
    }

    pub fn button(id: impl Into<String>, pressed: bool) -> Sample {
        Sample::Button {
            id: id.into(),
            pressed,
        }
    }

    pub fn pick(target: Option<&str>) -> Sample {
        Sample::Pick(target.map(str::to_owned))
    }

    pub fn as_locator(&self) -> Option<&Pose> {
        match self {
            Sample::Locator(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_valuator(&self) -> Option<f64> {
        match self {
            Sample::Valuator(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_button(&self) -> Option<(&str, bool)> {
        match self {
            Sample::Button { id, pressed } => Some((id, *pressed)),
            _ => None,
        }
    }

    pub fn as_pick(&self) -> Option<Option<&str>> {
        match self {
            Sample::Pick(t) => Some(t.as_deref()),
            _ => None,
        }
    }
}

impl Serialize for Sample {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        match self {
            Sample::Locator(p) => {
                m.serialize_entry("kind", "locator")?;
                m.serialize_entry("pos", &p.position_array())?;
                m.serialize_entry("orient", &p.orientation_array())?;
            }
            Sample::Valuator(v) => {
                m.serialize_entry("kind", "valuator")?;
                m.serialize_entry("value", v)?;
            }
            Sample::Button { id, pressed } => {
                m.serialize_entry("kind", "button")?;
                m.serialize_entry("id", id)?;
                m.serialize_entry("pressed", pressed)?;
            }
            Sample::Pick(target) => {
                m.serialize_entry("kind", "pick")?;
                m.serialize_entry("target", target)?;
            }
        }
        m.end()
    }
}

/// A parameter value, either parsed from a world file attribute or sent in a
/// control message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Bool(bool),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Number(n) => Some(*n),
            ParamValue::Text(t) => t.trim().parse().ok(),
            ParamValue::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ParamValue::Bool(b) => Some(*b),
            ParamValue::Text(t) => match t.trim() {
                "true" => Some(true),
                "false" => Some(false),
                _ => None,
            },
            ParamValue::Number(_) => None,
        }
    }

    pub fn as_text(&self) -> String {
        match self {
            ParamValue::Number(n) => n.to_string(),
            ParamValue::Bool(b) => b.to_string(),
            ParamValue::Text(t) => t.clone(),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Number(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_owned())
    }
}

impl From<String> for ParamValue {
    fn from(v: String) -> Self {
        ParamValue::Text(v)
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

/// Ordered key/value parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub BTreeMap<String, ParamValue>);

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<ParamValue>) -> Self {
        self.0.insert(key.to_owned(), value.into());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Into<ParamValue>) -> Option<ParamValue> {
        self.0.insert(key.to_owned(), value.into())
    }

    pub fn get(&self, key: &str) -> Option<&ParamValue> {
        self.0.get(key)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn text(&self, key: &str) -> Option<String> {
        self.get(key).map(ParamValue::as_text)
    }

    /// Numeric parameter with a default; a present but non-numeric value is an error.
    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, String> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("parameter `{key}` expects a number, got `{}`", v.as_text())),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, String> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| format!("parameter `{key}` expects true/false, got `{}`", v.as_text())),
        }
    }

    /// Whitespace-separated list.
    pub fn list(&self, key: &str) -> Option<Vec<String>> {
        self.text(key)
            .map(|t| t.split_whitespace().map(str::to_owned).collect())
    }

    pub fn vec3(&self, key: &str) -> Result<Option<Vec3>, String> {
        match self.text(key) {
            None => Ok(None),
            Some(t) => parse_vec3(&t).map(Some),
        }
    }
}

/// Parses `"x y z"`.
pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v = parse_floats(s)?;
    match v.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(format!("expected 3 numbers, got `{s}`")),
    }
}

/// Parses `"w x y z"`.
pub fn parse_quat(s: &str) -> Result<Quat, String> {
    let v = parse_floats(s)?;
    match v.as_slice() {
        [w, x, y, z] => quat_from_wxyz(*w, *x, *y, *z),
        _ => Err(format!("expected 4 numbers, got `{s}`")),
    }
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{t}` is not a decimal number"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_json_shapes() {
        let s = serde_json::to_string(&Sample::Locator(Pose::at(1.0, 2.0, 3.0))).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"locator","pos":[1.0,2.0,3.0],"orient":[1.0,0.0,0.0,0.0]}"#
        );
        let s = serde_json::to_string(&Sample::pick(None)).unwrap();
        assert_eq!(s, r#"{"kind":"pick","target":null}"#);
    }

    #[test]
    fn non_unit_quaternion_rejected() {
        assert!(quat_from_wxyz(2.0, 0.0, 0.0, 0.0).is_err());
        let q = quat_from_wxyz(0.6, 0.0, 0.800_000_000_1, 0.0).unwrap();
        assert!((q.quaternion().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kind_lookup_is_case_insensitive() {
        assert_eq!(PortKind::parse("locator"), Some(PortKind::Locator));
        assert_eq!(PortKind::parse("OPort"), None);
    }

    #[test]
    fn vectors_parse() {
        assert_eq!(parse_vec3("1 2.5 -3").unwrap(), Vec3::new(1.0, 2.5, -3.0));
        assert!(parse_vec3("1,2,3").is_err());
        assert!(parse_vec3("1 2").is_err());
    }
}

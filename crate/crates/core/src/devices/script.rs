//! Line-delimited JSON input scripts: device samples and rewiring directives.

use indexmap::IndexMap;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::harness::Directive;
use crate::sample::{quat_from_wxyz, Pose, Quat, Sample, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: timestamp for `{device}` goes backwards")]
    UnsortedTimestamps { line: usize, device: String },
    #[error("line {line}: unknown sample kind `{kind}`")]
    UnknownSampleKind { line: usize, kind: String },
}

/// Replays a fixed list of timestamped samples for one device.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedDevice {
    pub id: String,
    pub events: Vec<(f64, Sample)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Script {
    pub devices: Vec<ScriptedDevice>,
    pub directives: Vec<Directive>,
}

impl Script {
    pub fn device(&self, id: &str) -> Option<&ScriptedDevice> {
        self.devices.iter().find(|d| d.id == id)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> ScriptError {
    ScriptError::Parse {
        line,
        message: message.into(),
    }
}

fn number(obj: &Map<String, Value>, key: &str, line: usize) -> Result<f64, ScriptError> {
    obj.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| parse_err(line, format!("missing or non-numeric `{key}`")))
}

fn numbers<const N: usize>(
    obj: &Map<String, Value>,
    key: &str,
    line: usize,
) -> Result<Option<[f64; N]>, ScriptError> {
    let Some(v) = obj.get(key) else { return Ok(None) };
    let arr = v
        .as_array()
        .filter(|a| a.len() == N)
        .ok_or_else(|| parse_err(line, format!("`{key}` must be an array of {N} numbers")))?;
    let mut out = [0.0; N];
    for (slot, x) in out.iter_mut().zip(arr) {
        *slot = x
            .as_f64()
            .ok_or_else(|| parse_err(line, format!("`{key}` must be an array of {N} numbers")))?;
    }
    Ok(Some(out))
}

fn parse_sample(obj: &Map<String, Value>, device: &str, line: usize) -> Result<Sample, ScriptError> {
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| parse_err(line, "missing `kind`"))?;
    match kind {
        "locator" => {
            let p = numbers::<3>(obj, "pos", line)?
                .ok_or_else(|| parse_err(line, "locator needs `pos`"))?;
            let orientation = match numbers::<4>(obj, "orient", line)? {
                Some([w, x, y, z]) => quat_from_wxyz(w, x, y, z).map_err(|e| parse_err(line, e))?,
                None => Quat::identity(),
            };
            Ok(Sample::Locator(Pose::new(Vec3::new(p[0], p[1], p[2]), orientation)))
        }
        "valuator" => Ok(Sample::Valuator(number(obj, "value", line)?)),
        "button" => {
            let pressed = obj
                .get("pressed")
                .and_then(Value::as_bool)
                .ok_or_else(|| parse_err(line, "button needs boolean `pressed`"))?;
            let id = match obj.get("id") {
                None => device.to_owned(),
                Some(v) => v
                    .as_str()
                    .ok_or_else(|| parse_err(line, "`id` must be a string"))?
                    .to_owned(),
            };
            Ok(Sample::Button { id, pressed })
        }
        "pick" => match obj.get("target") {
            None | Some(Value::Null) => Ok(Sample::Pick(None)),
            Some(Value::String(s)) => Ok(Sample::Pick(Some(s.clone()))),
            Some(_) => Err(parse_err(line, "`target` must be a string or null")),
        },
        other => Err(ScriptError::UnknownSampleKind {
            line,
            kind: other.to_owned(),
        }),
    }
}

/// Parses a script. Blank lines are skipped. Device events and directives must
/// each be in non-decreasing time order.
pub fn load_script(text: &str) -> Result<Script, ScriptError> {
    let mut devices: IndexMap<String, ScriptedDevice> = IndexMap::new();
    let mut directives: Vec<Directive> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(raw).map_err(|e| parse_err(line, e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| parse_err(line, "each line must be a JSON object"))?;
        let t = number(obj, "t", line)?;
        if !t.is_finite() || t < 0.0 {
            return Err(parse_err(line, "`t` must be a finite, non-negative number"));
        }
        if obj.contains_key("directive") {
            let d: Directive =
                serde_json::from_value(value.clone()).map_err(|e| parse_err(line, e.to_string()))?;
            if directives.last().is_some_and(|prev| prev.t > d.t) {
                return Err(ScriptError::UnsortedTimestamps {
                    line,
                    device: "directive".into(),
                });
            }
            directives.push(d);
            continue;
        }
        let device = obj
            .get("device")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err(line, "missing `device` or `directive`"))?;
        let sample = parse_sample(obj, device, line)?;
        let entry = devices
            .entry(device.to_owned())
            .or_insert_with(|| ScriptedDevice {
                id: device.to_owned(),
                events: Vec::new(),
            });
        if entry.events.last().is_some_and(|(prev, _)| *prev > t) {
            return Err(ScriptError::UnsortedTimestamps {
                line,
                device: device.to_owned(),
            });
        }
        entry.events.push((t, sample));
    }
    Ok(Script {
        devices: devices.into_values().collect(),
        directives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::DirectiveAction;
    use crate::sample::PortKind;

    #[test]
    fn empty_document() {
        assert_eq!(load_script("").unwrap(), Script::default());
        assert_eq!(load_script("\n  \n").unwrap(), Script::default());
    }

    #[test]
    fn three_locator_events() {
        let text = r#"{"t":0,"device":"handTracker","kind":"locator","pos":[0,0,0]}
{"t":0.1,"device":"handTracker","kind":"locator","pos":[0,0,1],"orient":[1,0,0,0]}
{"t":0.2,"device":"handTracker","kind":"locator","pos":[0,0,2]}"#;
        let s = load_script(text).unwrap();
        assert_eq!(s.devices.len(), 1);
        assert_eq!(s.devices[0].events[0].1.kind(), PortKind::Locator);
        assert_eq!(s.devices[0].events.len(), 3);
        assert!(s.directives.is_empty());
    }

    #[test]
    fn swap_directive_extracted() {
        let text = r#"{"t":0.2,"device":"buttonGrab","kind":"button","pressed":true}
{"t":1.0,"directive":"setSelectionIT","target":"moveControl","it":"raycast"}"#;
        let s = load_script(text).unwrap();
        assert_eq!(s.directives.len(), 1);
        assert_eq!(
            s.directives[0].action,
            DirectiveAction::SetSelectionIt {
                target: "moveControl".into(),
                it: "raycast".into()
            }
        );
        assert_eq!(s.devices[0].events[0].1, Sample::button("buttonGrab", true));
    }

    #[test]
    fn errors_carry_lines() {
        let text = "{\"t\":1,\"device\":\"d\",\"kind\":\"valuator\",\"value\":1}\n{\"t\":0.5,\"device\":\"d\",\"kind\":\"valuator\",\"value\":2}";
        assert_eq!(
            load_script(text),
            Err(ScriptError::UnsortedTimestamps {
                line: 2,
                device: "d".into()
            })
        );
        assert!(matches!(
            load_script("{\"t\":0,\"device\":\"d\",\"kind\":\"joystick\"}"),
            Err(ScriptError::UnknownSampleKind { line: 1, .. })
        ));
        assert!(matches!(load_script("\nnot json"), Err(ScriptError::Parse { line: 2, .. })));
        assert!(matches!(
            load_script("{\"t\":0,\"device\":\"d\",\"kind\":\"locator\",\"pos\":[0,0,0],\"orient\":[2,0,0,0]}"),
            Err(ScriptError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn one_device_may_mix_kinds() {
        let text = "{\"t\":0,\"device\":\"x\",\"kind\":\"locator\",\"pos\":[320,240,0]}\n{\"t\":1,\"device\":\"x\",\"kind\":\"button\",\"id\":\"start\",\"pressed\":true}";
        let s = load_script(text).unwrap();
        assert_eq!(s.devices.len(), 1);
        assert_eq!(s.devices[0].events[1].1, Sample::button("start", true));
    }
}

use crate::flow::{Ack, Behavior, Flag, FlowError, Inputs, ProcessContext, Role, Verb};
use crate::impl_any;
use crate::sample::{ParamValue, Params, Sample};
use crate::scene::{overlap, SceneState};

use super::apply_params;

fn split_list(value: &ParamValue) -> Vec<String> {
    value.as_text().split_whitespace().map(str::to_owned).collect()
}

/// Picks the nearest object hit by the ray along the locator's forward axis.
/// Emits only when the pick changes.
#[derive(Debug, Clone, Default)]
pub struct Select1ByPointing {
    candidates: Option<Vec<String>>,
    last: Option<Option<String>>,
}

impl Select1ByPointing {
    /// `None` selects among all selectable objects.
    pub fn new(candidates: Option<Vec<String>>) -> Self {
        Select1ByPointing {
            candidates,
            last: None,
        }
    }

    pub fn current(&self) -> Option<&str> {
        self.last.as_ref().and_then(|p| p.as_deref())
    }
}

/// Records `pick` and reports whether it differs from the last emitted one.
/// Before the first emission the previous pick counts as none.
fn changed(last: &mut Option<Option<String>>, pick: Option<String>) -> bool {
    if last.clone().flatten() == pick {
        return false;
    }
    *last = Some(pick);
    true
}

impl Behavior for Select1ByPointing {
    fn type_name(&self) -> &str {
        "Select1ByPointing"
    }

    fn role(&self) -> Role {
        Role::Selector
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let Some(pos) = inputs.last("pos").and_then(Sample::as_locator) else {
            return Ok(());
        };
        let scene = cx.scene();
        let hit = match &self.candidates {
            Some(c) => scene.ray_nearest(&pos.position, &pos.forward(), c),
            None => scene.ray_nearest(&pos.position, &pos.forward(), &scene.selectable_ids()),
        };
        let pick = hit.map(|(id, _)| id);
        if changed(&mut self.last, pick.clone()) {
            cx.emit("pick", Sample::Pick(pick));
        }
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        apply_params(node, "Select1ByPointing", verb, payload, |key, value| match key {
            "candidates" => {
                let old = self.candidates.replace(split_list(value));
                Ok(Some(ParamValue::from(old.unwrap_or_default().join(" "))))
            }
            _ => Ok(None),
        })
    }

    impl_any!();
}

/// The candidate overlapping `hand` whose center is nearest the hand's center.
/// Ties go to the smallest id.
pub fn select_by_touching<S: AsRef<str>>(
    scene: &SceneState,
    hand: &str,
    candidates: &[S],
) -> Result<Option<String>, FlowError> {
    let hand_obj = scene
        .object(hand)
        .ok_or_else(|| FlowError::UnknownObject(hand.to_owned()))?;
    let hb = hand_obj.world_aabb();
    let hc = hb.center();
    let mut best: Option<(&str, f64)> = None;
    for id in candidates {
        let id = id.as_ref();
        if id == hand {
            continue;
        }
        let Some(obj) = scene.object(id) else { continue };
        let b = obj.world_aabb();
        if !overlap(&hb, &b) {
            continue;
        }
        let d = (b.center() - hc).norm();
        best = match best {
            Some((bid, bd)) if bd < d || bd == d && bid < id => Some((bid, bd)),
            _ => Some((&obj.id, d)),
        };
    }
    Ok(best.map(|(id, _)| id.to_owned()))
}

/// Picks the object colliding with the hand representation. The `pos` port is
/// part of the interface but collision uses the hand object's transform.
#[derive(Debug, Clone)]
pub struct Select1ByTouching {
    hand: String,
    candidates: Option<Vec<String>>,
    last: Option<Option<String>>,
}

impl Select1ByTouching {
    pub fn new(hand: &str, candidates: Option<Vec<String>>) -> Self {
        Select1ByTouching {
            hand: hand.to_owned(),
            candidates,
            last: None,
        }
    }

    pub fn current(&self) -> Option<&str> {
        self.last.as_ref().and_then(|p| p.as_deref())
    }
}

impl Behavior for Select1ByTouching {
    fn type_name(&self) -> &str {
        "Select1ByTouching"
    }

    fn role(&self) -> Role {
        Role::Selector
    }

    fn process(&mut self, _inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let scene = cx.scene();
        let pick = match &self.candidates {
            Some(c) => select_by_touching(scene, &self.hand, c)?,
            None => select_by_touching(scene, &self.hand, &scene.selectable_ids())?,
        };
        if changed(&mut self.last, pick.clone()) {
            cx.emit("pick", Sample::Pick(pick));
        }
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        apply_params(node, "Select1ByTouching", verb, payload, |key, value| match key {
            "hand" => Ok(Some(ParamValue::from(std::mem::replace(
                &mut self.hand,
                value.as_text(),
            )))),
            "candidates" => {
                let old = self.candidates.replace(split_list(value));
                Ok(Some(ParamValue::from(old.unwrap_or_default().join(" "))))
            }
            _ => Ok(None),
        })
    }

    impl_any!();
}

/// Highlights the picked object by turning one of its flags on, and turns it
/// off again on the previous pick.
#[derive(Debug, Clone)]
pub struct ChangeObject {
    flag: Flag,
    last: Option<String>,
}

impl ChangeObject {
    pub fn new(flag: Flag) -> Self {
        ChangeObject { flag, last: None }
    }

    pub fn flag(&self) -> Flag {
        self.flag
    }
}

impl Default for ChangeObject {
    fn default() -> Self {
        ChangeObject::new(Flag::BboxVisible)
    }
}

pub(crate) fn parse_flag(s: &str) -> Option<Flag> {
    match s {
        "bbox" | "bbox_visible" | "bboxVisible" => Some(Flag::BboxVisible),
        "visible" => Some(Flag::Visible),
        "selectable" => Some(Flag::Selectable),
        _ => None,
    }
}

impl Behavior for ChangeObject {
    fn type_name(&self) -> &str {
        "ChangeObject"
    }

    fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), FlowError> {
        let Some(pick) = inputs.last("obj").and_then(Sample::as_pick) else {
            return Ok(());
        };
        let pick = pick.map(str::to_owned);
        if pick == self.last {
            return Ok(());
        }
        if let Some(prev) = self.last.take() {
            if cx.scene().contains(&prev) {
                cx.set_flag(&prev, self.flag, false);
            }
        }
        if let Some(next) = &pick {
            if cx.scene().contains(next) {
                cx.set_flag(next, self.flag, true);
            }
        }
        self.last = pick;
        Ok(())
    }

    fn control(&mut self, node: &str, verb: Verb, payload: &Params) -> Result<Ack, FlowError> {
        apply_params(node, "ChangeObject", verb, payload, |key, value| match key {
            "flag" => {
                let f = parse_flag(&value.as_text())
                    .ok_or_else(|| format!("unknown flag `{}`", value.as_text()))?;
                let old = std::mem::replace(&mut self.flag, f);
                Ok(Some(ParamValue::from(flag_name(old))))
            }
            _ => Ok(None),
        })
    }

    impl_any!();
}

pub(crate) fn flag_name(f: Flag) -> &'static str {
    match f {
        Flag::Visible => "visible",
        Flag::BboxVisible => "bbox",
        Flag::Selectable => "selectable",
    }
}

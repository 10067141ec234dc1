//! The interaction technique library: concrete filters and composite
//! techniques built from them.

mod composite;
mod control;
mod gogo;
mod motion;
mod select;
mod walkthrough;

pub use composite::{
    gogo_dataflow, gogo_it, make_composite, raycast_it, CompositeIt, Exports, GoGoItConfig,
    RayCastConfig,
};
pub use control::{check_move_control, set_selection_it, MoveControl, MovePhase};
pub use gogo::{gogo_control, gogo_map, gogo_radius, GoGoControl, GoGoFilter, GoGoParams};
pub use motion::{MoveByLocator, MoveMode};
pub use select::{select_by_touching, ChangeObject, Select1ByPointing, Select1ByTouching};
pub(crate) use select::parse_flag;
pub use walkthrough::{
    motorcycle_step, CombineXZY, InsidePath, Motorcycle, MotorcycleParams, MoveUpDn, Path, PathSet,
    QuitByButton, Timer,
};

use crate::flow::{Ack, Behavior, FilterNode, FlowError, PortSpec, Verb};
use crate::sample::{ParamValue, Params, PortKind};

/// Input and output ports of a built-in filter type.
pub fn builtin_ports(type_name: &str) -> Option<(Vec<PortSpec>, Vec<PortSpec>)> {
    use PortKind::{Button as B, Locator as L, Pick as P, Valuator as V};
    let (ins, outs): (&[(&str, PortKind)], &[(&str, PortKind)]) = match type_name {
        "GoGoFilter" => (&[("head", L), ("hand", L)], &[("locator", L)]),
        "GoGoControl" => (&[("real", L), ("virtual", L)], &[]),
        "MoveByLocator" => (&[("obj", P), ("pos", L)], &[]),
        "Location2Viewpoint" => (&[("iportLocator", L)], &[]),
        "Select1ByPointing" | "Select1ByTouching" => (&[("pos", L)], &[("pick", P)]),
        "ChangeObject" => (&[("obj", P)], &[]),
        "MoveControl" => (&[("grab", B), ("release", B), ("selected", P)], &[("obj", P)]),
        "Motorcycle" => (
            &[("mouse", L), ("start", B), ("stop", B), ("dt", V), ("current", L)],
            &[("locator", L)],
        ),
        "InsidePath" => (&[("candidate", L)], &[("locator", L)]),
        "MoveUpDn" => (&[("up", B), ("down", B), ("dt", V)], &[("y", V)]),
        "CombineXZY" => (&[("ground", L), ("y", V)], &[("locator", L)]),
        "QuitByButton" => (&[("button", B)], &[]),
        "Timer" => (&[], &[("dt", V)]),
        _ => return None,
    };
    let specs = |ports: &[(&str, PortKind)]| ports.iter().map(|&(n, k)| PortSpec::new(n, k)).collect();
    Some((specs(ins), specs(outs)))
}

/// A node for a built-in filter behavior, with its standard ports.
pub fn builtin_node(id: &str, behavior: Box<dyn Behavior>) -> Result<FilterNode, FlowError> {
    let (ins, outs) = builtin_ports(behavior.type_name())
        .ok_or_else(|| FlowError::UnknownNode(behavior.type_name().to_owned()))?;
    FilterNode::new(id, ins, outs, behavior)
}

/// Applies a SetParam payload key by key through `set`, which returns the
/// replaced value or `None` for keys the behavior does not have.
pub(crate) fn apply_params(
    node: &str,
    behavior: &str,
    verb: Verb,
    payload: &Params,
    mut set: impl FnMut(&str, &ParamValue) -> Result<Option<ParamValue>, String>,
) -> Result<Ack, FlowError> {
    if verb != Verb::SetParam {
        return Err(FlowError::UnsupportedVerb {
            node: node.into(),
            behavior: behavior.into(),
            verb,
        });
    }
    let mut prior = Params::new();
    for (key, value) in payload.iter() {
        match set(key, value) {
            Ok(Some(old)) => {
                prior.insert(key, old);
            }
            Ok(None) => {
                return Err(FlowError::UnknownParam {
                    node: node.into(),
                    behavior: behavior.into(),
                    key: key.into(),
                })
            }
            Err(reason) => {
                return Err(FlowError::InvalidParam {
                    node: node.into(),
                    key: key.into(),
                    reason,
                })
            }
        }
    }
    Ok(Ack { prior })
}

pub(crate) fn number(value: &ParamValue) -> Result<f64, String> {
    value
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("expected a number, got `{}`", value.as_text()))
}

/// Count of button presses (not releases) in a sample list.
pub(crate) fn presses(samples: &[crate::sample::Sample]) -> usize {
    samples
        .iter()
        .filter(|s| s.as_button().is_some_and(|(_, p)| p))
        .count()
}

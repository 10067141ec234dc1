use serde::{Deserialize, Serialize};

use crate::dsl::{World, WorldSpec};
use crate::filters::set_selection_it;
use crate::flow::{ControlMessage, FlowError, Verb};
use crate::sample::Params;

/// A rewiring action scheduled at a script time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Directive {
    pub t: f64,
    #[serde(flatten)]
    pub action: DirectiveAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "directive")]
pub enum DirectiveAction {
    #[serde(rename = "disable")]
    Disable { target: String },
    #[serde(rename = "enable")]
    Enable { target: String },
    #[serde(rename = "disconnectNode")]
    DisconnectNode { target: String },
    /// Each edge is `[src, oport, dst, iport]`; a source that names a scene
    /// object registers a scene listener instead of a graph edge.
    #[serde(rename = "connect")]
    Connect { edges: Vec<[String; 4]> },
    #[serde(rename = "setSelectionIT")]
    SetSelectionIt { target: String, it: String },
    #[serde(rename = "setParam")]
    SetParam { target: String, params: Params },
}

impl DirectiveAction {
    pub fn name(&self) -> &'static str {
        match self {
            DirectiveAction::Disable { .. } => "disable",
            DirectiveAction::Enable { .. } => "enable",
            DirectiveAction::DisconnectNode { .. } => "disconnectNode",
            DirectiveAction::Connect { .. } => "connect",
            DirectiveAction::SetSelectionIt { .. } => "setSelectionIT",
            DirectiveAction::SetParam { .. } => "setParam",
        }
    }
}

/// Carries out one directive against a loaded world. `spec` supplies class
/// declarations, whose read-only props refuse SetParam.
pub fn apply_directive(
    action: &DirectiveAction,
    world: &mut World,
    spec: &WorldSpec,
) -> Result<(), String> {
    let flow = &mut world.flow;
    let text = |e: FlowError| e.to_string();
    match action {
        DirectiveAction::Disable { target } => flow.set_enabled(target, false).map(drop).map_err(text),
        DirectiveAction::Enable { target } => flow.set_enabled(target, true).map(drop).map_err(text),
        DirectiveAction::DisconnectNode { target } => {
            flow.disconnect_node(target).map_err(text)?;
            world.scene.remove_listeners_for(target);
            Ok(())
        }
        DirectiveAction::Connect { edges } => {
            for [src, oport, dst, iport] in edges {
                if flow.node(src).is_none() && world.scene.contains(src) {
                    world
                        .scene
                        .add_listener(flow, src, dst, iport)
                        .map_err(|e| e.to_string())?;
                } else {
                    flow.connect(src, oport, dst, iport).map_err(text)?;
                }
            }
            Ok(())
        }
        DirectiveAction::SetSelectionIt { target, it } => {
            set_selection_it(flow, target, it).map(drop).map_err(text)
        }
        DirectiveAction::SetParam { target, params } => {
            let ty = flow
                .node(target)
                .map(|n| n.type_name().to_owned())
                .ok_or_else(|| format!("unknown node `{target}`"))?;
            let decl = spec.instance(target).map_or(ty, |i| i.ty.clone());
            if let Some(class) = spec.class(&decl) {
                for (key, _) in params.iter() {
                    if class.props.iter().any(|p| p.name == key && !p.access.writable()) {
                        return Err(format!("property `{key}` of `{decl}` is read-only"));
                    }
                }
            }
            flow.send_control(&ControlMessage {
                target: target.clone(),
                verb: Verb::SetParam,
                payload: params.clone(),
            })
            .map(drop)
            .map_err(text)
        }
    }
}

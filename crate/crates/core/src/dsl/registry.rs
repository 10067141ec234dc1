use std::collections::BTreeMap;
use std::fmt;

use crate::devices::{ButtonsToLocator, PadRates, PassDevice, QueueMode, XInput};
use crate::filters::{
    builtin_node, builtin_ports, gogo_it, parse_flag, raycast_it, ChangeObject, CombineXZY,
    GoGoControl, GoGoFilter, GoGoItConfig, GoGoParams, InsidePath, Motorcycle, MotorcycleParams,
    MoveByLocator, MoveControl, MoveMode, MoveUpDn, PathSet, QuitByButton, RayCastConfig,
    Select1ByPointing, Select1ByTouching, Timer,
};
use crate::flow::{FilterNode, PortSpec, Role};
use crate::sample::{parse_quat, parse_vec3, ParamValue, Params, PortKind, Pose};
use crate::scene::SceneState;

/// What a parameter value must look like.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Number,
    Bool,
    Text,
    Choice(&'static [&'static str]),
    Vec3,
    Quat,
    /// Name of a scene object (or `viewpoint`).
    Object,
    /// Whitespace-separated object names.
    ObjectList,
    /// Name of another non-object instance.
    Node,
    TextList,
}

impl ParamType {
    /// Checks the shape of a value; references are resolved by the validator.
    pub fn check(self, value: &ParamValue) -> Result<(), String> {
        let text = value.as_text();
        match self {
            ParamType::Number => value
                .as_f64()
                .filter(|v| v.is_finite())
                .map(|_| ())
                .ok_or_else(|| format!("expected a number, got `{text}`")),
            ParamType::Bool => value
                .as_bool()
                .map(|_| ())
                .ok_or_else(|| format!("expected true or false, got `{text}`")),
            ParamType::Choice(options) => {
                if options.contains(&text.as_str()) {
                    Ok(())
                } else {
                    Err(format!("expected one of {}, got `{text}`", options.join(", ")))
                }
            }
            ParamType::Vec3 => parse_vec3(&text).map(|_| ()),
            ParamType::Quat => parse_quat(&text).map(|_| ()),
            ParamType::Object | ParamType::Node => {
                if text.split_whitespace().count() == 1 {
                    Ok(())
                } else {
                    Err(format!("expected a single name, got `{text}`"))
                }
            }
            ParamType::Text | ParamType::ObjectList | ParamType::TextList => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub ty: ParamType,
    pub required: bool,
}

impl ParamSpec {
    pub fn optional(name: &str, ty: ParamType) -> Self {
        ParamSpec {
            name: name.to_owned(),
            ty,
            required: false,
        }
    }

    pub fn required(name: &str, ty: ParamType) -> Self {
        ParamSpec {
            required: true,
            ..ParamSpec::optional(name, ty)
        }
    }
}

/// The surface of a registered type: ports, accepted params, and how its
/// nodes take part in the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub iports: Vec<PortSpec>,
    pub oports: Vec<PortSpec>,
    pub params: Vec<ParamSpec>,
    pub role: Role,
    /// Default buffering for device types.
    pub queue_mode: Option<QueueMode>,
}

impl Signature {
    pub fn filter(iports: Vec<PortSpec>, oports: Vec<PortSpec>) -> Self {
        Signature {
            iports,
            oports,
            params: Vec::new(),
            role: Role::Filter,
            queue_mode: None,
        }
    }

    pub fn device(oports: Vec<PortSpec>, mode: QueueMode) -> Self {
        Signature {
            role: Role::Device,
            queue_mode: Some(mode),
            ..Signature::filter(Vec::new(), oports)
        }
    }

    pub fn with_params(mut self, params: Vec<ParamSpec>) -> Self {
        self.params = params;
        self
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn iport(&self, name: &str) -> Option<&PortSpec> {
        self.iports.iter().find(|p| p.name == name)
    }

    pub fn oport(&self, name: &str) -> Option<&PortSpec> {
        self.oports.iter().find(|p| p.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// What a factory sees when building one instance.
pub struct BuildContext<'a> {
    pub name: &'a str,
    pub params: &'a Params,
    /// The scene after all objects and the viewpoint are in place.
    pub scene: &'a SceneState,
    pub paths: &'a PathSet,
}

pub trait FilterFactory: Send + Sync {
    fn signature(&self, params: &Params) -> Signature;

    /// Builds a node named `cx.name`. Errors are reported against the instance.
    fn build(&self, cx: &BuildContext<'_>) -> Result<FilterNode, String>;
}

/// A factory with a fixed signature and a build closure.
pub struct FnFactory<F> {
    signature: Signature,
    build: F,
}

impl<F> FnFactory<F>
where
    F: Fn(&BuildContext<'_>) -> Result<FilterNode, String> + Send + Sync,
{
    pub fn new(signature: Signature, build: F) -> Self {
        FnFactory { signature, build }
    }
}

impl<F> FilterFactory for FnFactory<F>
where
    F: Fn(&BuildContext<'_>) -> Result<FilterNode, String> + Send + Sync,
{
    fn signature(&self, _params: &Params) -> Signature {
        self.signature.clone()
    }

    fn build(&self, cx: &BuildContext<'_>) -> Result<FilterNode, String> {
        (self.build)(cx)
    }
}

/// Type name to factory. Object types are fixed: `Cube`, `Box`, `Viewpoint`.
pub struct FactoryRegistry {
    factories: BTreeMap<String, Box<dyn FilterFactory>>,
}

impl fmt::Debug for FactoryRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.factories.keys()).finish()
    }
}

pub const OBJECT_TYPES: [&str; 3] = ["Cube", "Box", "Viewpoint"];

const BUILTINS: &[&str] = &[
    "GoGoFilter",
    "GoGoControl",
    "MoveByLocator",
    "Location2Viewpoint",
    "Select1ByPointing",
    "Select1ByTouching",
    "ChangeObject",
    "MoveControl",
    "Motorcycle",
    "InsidePath",
    "MoveUpDn",
    "CombineXZY",
    "QuitByButton",
    "QuitByNavigate",
    "Timer",
    "GoGoIT",
    "RayCastIT",
    "MRLocator",
    "MRButton",
    "MRValuator",
    "XInput",
    "Buttons2Locator",
];

impl Default for FactoryRegistry {
    fn default() -> Self {
        FactoryRegistry::with_builtins()
    }
}

impl FactoryRegistry {
    pub fn empty() -> Self {
        FactoryRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = FactoryRegistry::empty();
        for name in BUILTINS {
            r.register_factory(name, Box::new(Builtin(name)));
        }
        r
    }

    /// Registers `factory` under `type_name`, returning the one it replaces.
    pub fn register_factory(
        &mut self,
        type_name: &str,
        factory: Box<dyn FilterFactory>,
    ) -> Option<Box<dyn FilterFactory>> {
        self.factories.insert(type_name.to_owned(), factory)
    }

    pub fn get(&self, type_name: &str) -> Option<&dyn FilterFactory> {
        self.factories.get(type_name).map(|f| f.as_ref())
    }

    pub fn contains(&self, type_name: &str) -> bool {
        self.factories.contains_key(type_name)
    }

    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn is_object_type(&self, type_name: &str) -> bool {
        OBJECT_TYPES.contains(&type_name)
    }
}

struct Builtin(&'static str);

const GOGO_PARAMS: [&str; 3] = ["D", "k", "epsilon"];

fn gogo_param_specs() -> Vec<ParamSpec> {
    GOGO_PARAMS
        .iter()
        .map(|n| ParamSpec::optional(n, ParamType::Number))
        .collect()
}

fn objects(p: &Params, key: &str) -> Option<Vec<String>> {
    p.list(key)
}

fn required_text(p: &Params, key: &str) -> Result<String, String> {
    p.text(key)
        .ok_or_else(|| format!("missing required parameter `{key}`"))
}

fn ports(list: &[(&str, PortKind)]) -> Vec<PortSpec> {
    list.iter().map(|&(n, k)| PortSpec::new(n, k)).collect()
}

impl FilterFactory for Builtin {
    fn signature(&self, params: &Params) -> Signature {
        use ParamType::*;
        use PortKind::{Button as B, Locator as L, Pick as P, Valuator as V};
        let plain = |name: &str| {
            let (i, o) = builtin_ports(name).expect("built-in ports");
            Signature::filter(i, o)
        };
        let opt = ParamSpec::optional;
        let req = ParamSpec::required;
        match self.0 {
            "GoGoFilter" => plain("GoGoFilter").with_params(gogo_param_specs()),
            "GoGoControl" => plain("GoGoControl").with_params(
                [req("cube", Object), req("mover", Node)]
                    .into_iter()
                    .chain(gogo_param_specs())
                    .collect(),
            ),
            "MoveByLocator" => plain("MoveByLocator").with_params(vec![
                opt("mode", Choice(&["absolute", "offset"])),
                opt("object", Object),
            ]),
            "Select1ByPointing" => plain("Select1ByPointing")
                .with_role(Role::Selector)
                .with_params(vec![opt("candidates", ObjectList)]),
            "Select1ByTouching" => plain("Select1ByTouching")
                .with_role(Role::Selector)
                .with_params(vec![req("hand", Object), opt("candidates", ObjectList)]),
            "ChangeObject" => plain("ChangeObject").with_params(vec![opt(
                "flag",
                Choice(&["bbox", "bbox_visible", "bboxVisible", "visible", "selectable"]),
            )]),
            "MoveControl" => plain("MoveControl")
                .with_params(vec![req("selection_it", Node), req("mover", Node)]),
            "Motorcycle" => plain("Motorcycle").with_params(
                ["width", "height", "max_yaw_rate", "max_speed"]
                    .iter()
                    .map(|n| opt(n, Number))
                    .collect(),
            ),
            "MoveUpDn" => {
                plain("MoveUpDn").with_params(vec![opt("speed", Number), opt("y", Number)])
            }
            "QuitByNavigate" => plain("QuitByButton"),
            "GoGoIT" => Signature::filter(
                ports(&[("handIport", L), ("headIport", L)]),
                ports(&[("gogoPosOPort", L), ("pickOPort", P)]),
            )
            .with_role(Role::Selector)
            .with_params(
                [req("hand", Object), req("cube", Object), opt("candidates", ObjectList)]
                    .into_iter()
                    .chain(gogo_param_specs())
                    .collect(),
            ),
            "RayCastIT" => Signature::filter(ports(&[("handIport", L)]), ports(&[("pickOPort", P)]))
                .with_role(Role::Selector)
                .with_params(vec![
                    req("hand", Object),
                    req("ray", Object),
                    opt("candidates", ObjectList),
                ]),
            "MRLocator" => Signature::device(ports(&[("locator", L)]), QueueMode::KeepLast),
            "MRButton" => Signature::device(ports(&[("button", B)]), QueueMode::QueueAll),
            "MRValuator" => Signature::device(ports(&[("value", V)]), QueueMode::KeepLast),
            "XInput" => {
                let mut out = vec![PortSpec::new("mouse", L)];
                for k in params.list("keys").unwrap_or_default() {
                    if k != "mouse" && !out.iter().any(|p| p.name == k) {
                        out.push(PortSpec::new(&k, B));
                    }
                }
                Signature::device(out, QueueMode::QueueAll).with_params(vec![opt("keys", TextList)])
            }
            "Buttons2Locator" => Signature::device(ports(&[("locator", L)]), QueueMode::QueueAll)
                .with_params(vec![
                    opt("lin", Number),
                    opt("ang", Number),
                    opt("pos", Vec3),
                    opt("orient", Quat),
                ]),
            other => plain(other),
        }
    }

    fn build(&self, cx: &BuildContext<'_>) -> Result<FilterNode, String> {
        let p = cx.params;
        let node = |b: Box<dyn crate::flow::Behavior>| builtin_node(cx.name, b);
        let gogo = || GoGoParams::from_params(p);
        let out = match self.0 {
            "GoGoFilter" => node(Box::new(GoGoFilter::new(gogo()?))),
            "GoGoControl" => node(Box::new(GoGoControl::new(
                gogo()?,
                &required_text(p, "cube")?,
                &required_text(p, "mover")?,
            ))),
            "MoveByLocator" => {
                let mode = match p.text("mode") {
                    None => MoveMode::Absolute,
                    Some(m) => MoveMode::parse(&m).ok_or_else(|| format!("unknown mode `{m}`"))?,
                };
                node(Box::new(MoveByLocator::new(mode, p.text("object"))))
            }
            "Location2Viewpoint" => node(Box::new(MoveByLocator::viewpoint())),
            "Select1ByPointing" => node(Box::new(Select1ByPointing::new(objects(p, "candidates")))),
            "Select1ByTouching" => node(Box::new(Select1ByTouching::new(
                &required_text(p, "hand")?,
                objects(p, "candidates"),
            ))),
            "ChangeObject" => {
                let mut c = ChangeObject::default();
                if let Some(f) = p.text("flag") {
                    c = ChangeObject::new(parse_flag(&f).ok_or_else(|| format!("unknown flag `{f}`"))?);
                }
                node(Box::new(c))
            }
            "MoveControl" => node(Box::new(MoveControl::new(
                &required_text(p, "selection_it")?,
                &required_text(p, "mover")?,
            ))),
            "Motorcycle" => node(Box::new(Motorcycle::new(MotorcycleParams::from_params(p)?))),
            "InsidePath" => node(Box::new(
                InsidePath::new(cx.paths.clone(), &cx.scene.viewpoint()).map_err(|e| e.to_string())?,
            )),
            "MoveUpDn" => node(Box::new(MoveUpDn::new(
                p.f64_or("y", cx.scene.viewpoint().position.y)?,
                p.f64_or("speed", 1.0)?,
            ))),
            "CombineXZY" => node(Box::<CombineXZY>::default()),
            "QuitByButton" | "QuitByNavigate" => node(Box::new(QuitByButton)),
            "Timer" => node(Box::new(Timer)),
            "GoGoIT" => gogo_it(
                cx.name,
                &GoGoItConfig {
                    params: gogo()?,
                    hand: required_text(p, "hand")?,
                    cube: required_text(p, "cube")?,
                    candidates: objects(p, "candidates"),
                },
            ),
            "RayCastIT" => raycast_it(
                cx.name,
                &RayCastConfig {
                    hand: required_text(p, "hand")?,
                    ray: required_text(p, "ray")?,
                    candidates: objects(p, "candidates"),
                },
            ),
            "MRLocator" | "MRButton" | "MRValuator" => {
                let sig = self.signature(p);
                let port = &sig.oports[0];
                FilterNode::new(
                    cx.name,
                    Vec::new(),
                    sig.oports.clone(),
                    Box::new(PassDevice::new(self.0, port.kind, &port.name)),
                )
            }
            "XInput" => FilterNode::new(
                cx.name,
                Vec::new(),
                self.signature(p).oports,
                Box::new(XInput::new(p.list("keys").unwrap_or_default())),
            ),
            "Buttons2Locator" => {
                let d = PadRates::default();
                let rates = PadRates {
                    linear: p.f64_or("lin", d.linear)?,
                    angular: p.f64_or("ang", d.angular)?,
                };
                let position = p.vec3("pos")?.unwrap_or_default();
                let orientation = match p.text("orient") {
                    Some(q) => parse_quat(&q)?,
                    None => Pose::IDENTITY.orientation,
                };
                FilterNode::new(
                    cx.name,
                    Vec::new(),
                    self.signature(p).oports,
                    Box::new(ButtonsToLocator::new(Pose::new(position, orientation), rates)),
                )
            }
            other => return Err(format!("no built-in behavior for `{other}`")),
        };
        out.map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_registered() {
        let r = FactoryRegistry::with_builtins();
        for name in BUILTINS {
            assert!(r.contains(name), "{name}");
        }
        assert!(r.contains("GoGoFilter"));
        assert!(!r.contains("SnapToGrid"));
    }

    #[test]
    fn builtin_nodes_match_their_signatures() {
        let r = FactoryRegistry::with_builtins();
        let mut scene = SceneState::new();
        for id in ["hand", "cube", "ray"] {
            scene
                .insert(crate::scene::SceneObject::new(id, Pose::IDENTITY, crate::sample::Vec3::repeat(0.5)))
                .unwrap();
        }
        let paths = PathSet::new(vec![crate::filters::Path::new(
            vec![crate::sample::Vec3::new(-1.0, 0.0, 0.0), crate::sample::Vec3::new(1.0, 0.0, 0.0)],
            1.0,
        )
        .unwrap()]);
        let params = Params::new()
            .with("cube", "cube")
            .with("mover", "m")
            .with("hand", "hand")
            .with("ray", "ray")
            .with("selection_it", "it")
            .with("keys", "a b");
        for name in BUILTINS {
            let f = r.get(name).unwrap();
            let sig = f.signature(&params);
            let node = f
                .build(&BuildContext {
                    name: "n",
                    params: &params,
                    scene: &scene,
                    paths: &paths,
                })
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            let ins: Vec<_> = node.iports().iter().map(|p| (p.name.clone(), p.kind)).collect();
            let outs: Vec<_> = node.oports().iter().map(|p| (p.name.clone(), p.kind)).collect();
            let sig_ins: Vec<_> = sig.iports.iter().map(|p| (p.name.clone(), p.kind)).collect();
            let sig_outs: Vec<_> = sig.oports.iter().map(|p| (p.name.clone(), p.kind)).collect();
            assert_eq!(ins, sig_ins, "{name}");
            assert_eq!(outs, sig_outs, "{name}");
            assert_eq!(node.role(), sig.role, "{name}");
        }
    }

    #[test]
    fn register_returns_displaced_factory() {
        let mut r = FactoryRegistry::with_builtins();
        let sig = Signature::filter(Vec::new(), Vec::new());
        let fresh = r.register_factory(
            "Timer",
            Box::new(FnFactory::new(sig.clone(), |cx| {
                builtin_node(cx.name, Box::new(Timer)).map_err(|e| e.to_string())
            })),
        );
        assert!(fresh.is_some());
        assert!(r
            .register_factory("Nothing", Box::new(FnFactory::new(sig, |_| Err("no".into()))))
            .is_none());
    }

    #[test]
    fn param_shapes() {
        assert!(ParamType::Number.check(&ParamValue::Number(1.0)).is_ok());
        assert!(ParamType::Number.check(&ParamValue::Text("x".into())).is_err());
        assert!(ParamType::Choice(&["a", "b"]).check(&ParamValue::Text("c".into())).is_err());
        assert!(ParamType::Vec3.check(&ParamValue::Text("1 2 3".into())).is_ok());
        assert!(ParamType::Quat.check(&ParamValue::Text("2 0 0 0".into())).is_err());
        assert!(ParamType::Object.check(&ParamValue::Text("a b".into())).is_err());
    }
}

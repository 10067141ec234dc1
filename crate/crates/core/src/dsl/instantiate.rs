use thiserror::Error;

use super::ast::*;
use super::registry::{BuildContext, FactoryRegistry};
use super::validate::{validate, Diagnostic};
use crate::devices::QueueMode;
use crate::filters::{Path, PathSet};
use crate::flow::{Dataflow, FlowError};
use crate::sample::{parse_floats, parse_vec3, quat_from_wxyz, Pose, Quat, Vec3};
use crate::scene::{Frustum, SceneError, SceneObject, SceneState, VIEWPOINT};

/// Half-extent of `Cube` and `Box` objects without `halfextents`.
pub const DEFAULT_HALF_EXTENT: f64 = 0.5;

#[derive(Debug, Error)]
pub enum InstantiateError {
    #[error("world has {} problem(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),
    #[error("cannot build `{name}`: {message}")]
    FactoryFailure { name: String, message: String },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// A loaded world ready to step.
#[derive(Debug)]
pub struct World {
    pub flow: Dataflow,
    pub scene: SceneState,
    /// Device nodes with their buffering, in declaration order.
    pub devices: Vec<(String, QueueMode)>,
    pub paths: PathSet,
}

fn pose_of(inst: &InstanceDecl) -> Result<Pose, String> {
    let position = match inst.attr("pos") {
        Some(p) => parse_vec3(p)?,
        None => Vec3::zeros(),
    };
    let orientation = match inst.attr("orient") {
        Some(o) => {
            let v = parse_floats(o)?;
            quat_from_wxyz(v[0], v[1], v[2], v[3])?
        }
        None => Quat::identity(),
    };
    Ok(Pose::new(position, orientation))
}

fn build_scene(spec: &WorldSpec) -> Result<(SceneState, PathSet), InstantiateError> {
    let mut scene = SceneState::new();
    for inst in spec.instances.iter().filter(|i| i.kind == InstanceKind::Object) {
        let bad = |message: String| InstantiateError::FactoryFailure {
            name: inst.name.clone(),
            message,
        };
        let pose = pose_of(inst).map_err(bad)?;
        if inst.name == VIEWPOINT {
            scene.set_viewpoint(pose);
            continue;
        }
        let half = match inst.attr("halfextents") {
            Some(h) => parse_vec3(h).map_err(bad)?,
            None => Vec3::repeat(DEFAULT_HALF_EXTENT),
        };
        let mut obj = SceneObject::new(&inst.name, pose, half);
        obj.visible = inst.attr("visible") != Some("false");
        obj.selectable = inst.attr("selectable") != Some("false");
        scene.insert(obj)?;
    }
    if let Some(v) = &spec.viewpoint {
        let [w, x, y, z] = v.orient;
        let q = quat_from_wxyz(w, x, y, z).map_err(|message| InstantiateError::FactoryFailure {
            name: VIEWPOINT.into(),
            message,
        })?;
        scene.set_viewpoint(Pose::new(Vec3::from(v.pos), q));
    }
    if let Some(f) = &spec.frustum {
        scene.set_frustum(Frustum {
            fov: f.fov,
            aspect: f.aspect,
            near: f.near,
            far: f.far,
        })?;
    }
    let mut paths = Vec::new();
    for p in &spec.paths {
        let verts = p.vertices.iter().map(|v| Vec3::from(*v)).collect();
        paths.push(Path::new(verts, p.half_width).map_err(|message| InstantiateError::FactoryFailure {
            name: format!("path at line {}", p.loc.line),
            message,
        })?);
    }
    Ok((scene, PathSet::new(paths)))
}

/// Validates `spec` and builds its scene and dataflow. Nodes are registered
/// and rels connected in declaration order; a rel from an object becomes a
/// scene listener on that object's transform.
pub fn instantiate(spec: &WorldSpec, reg: &FactoryRegistry) -> Result<World, InstantiateError> {
    let diags = validate(spec, reg);
    if !diags.is_empty() {
        return Err(InstantiateError::Invalid(diags));
    }
    let (mut scene, paths) = build_scene(spec)?;
    let mut flow = Dataflow::new();
    let mut devices = Vec::new();
    for inst in spec.instances.iter().filter(|i| i.kind != InstanceKind::Object) {
        let failure = |message: String| InstantiateError::FactoryFailure {
            name: inst.name.clone(),
            message,
        };
        let factory = reg
            .get(&inst.ty)
            .ok_or_else(|| failure(format!("no factory registered for type `{}`", inst.ty)))?;
        let params = inst.param_values();
        let node = factory
            .build(&BuildContext {
                name: &inst.name,
                params: &params,
                scene: &scene,
                paths: &paths,
            })
            .map_err(failure)?;
        if inst.kind == InstanceKind::VIDev {
            let default = factory.signature(&params).queue_mode.unwrap_or(QueueMode::KeepLast);
            let mode = inst.attr("mode").and_then(QueueMode::parse).unwrap_or(default);
            devices.push((inst.name.clone(), mode));
        }
        flow.register_node(node)?;
    }
    for r in &spec.rels {
        let from_object = spec
            .instance(&r.origin)
            .is_some_and(|i| i.kind == InstanceKind::Object);
        if from_object {
            scene.add_listener(&flow, &r.origin, &r.dest, &r.dstport)?;
        } else {
            flow.connect(&r.origin, &r.srcport, &r.dest, &r.dstport)?;
        }
    }
    Ok(World {
        flow,
        scene,
        devices,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::DeviceSample;
    use crate::dsl::parse;
    use crate::dsl::registry::{FnFactory, Signature};
    use crate::flow::{Behavior, Inputs, PortSpec, ProcessContext};
    use crate::impl_any;
    use crate::sample::{PortKind, Sample};

    const CUBE_WORLD: &str = r#"<world>
  <object name="cube" type="Cube"/>
  <object name="viewpoint" type="Viewpoint"/>
  <videv name="headTracker" type="MRLocator"/>
  <it name="quit" type="QuitByNavigate"/>
  <it name="moveViewpoint" type="Location2Viewpoint"/>
  <dataflowRel origin="headTracker" srcport="locator" dest="moveViewpoint" dstport="iportLocator"/>
</world>"#;

    fn load(text: &str) -> World {
        instantiate(&parse(text).unwrap(), &FactoryRegistry::with_builtins()).unwrap()
    }

    #[test]
    fn tracker_moves_the_viewpoint() {
        let mut w = load(CUBE_WORLD);
        assert_eq!(w.devices, vec![("headTracker".to_owned(), QueueMode::KeepLast)]);
        assert_eq!(w.scene.object("cube").unwrap().half_extents, Vec3::repeat(0.5));
        let batch = [DeviceSample {
            device: "headTracker".into(),
            timestamp: 0.0,
            sample: Sample::Locator(Pose::at(0.0, 1.7, 3.0)),
        }];
        w.flow.step(&batch, 0.1, &mut w.scene).unwrap();
        assert_eq!(w.scene.viewpoint().position, Vec3::new(0.0, 1.7, 3.0));
    }

    #[test]
    fn objects_only() {
        let w = load("<world><object name='a' type='Box' pos='1 2 3' halfextents='1 1 1'/><object name='b' type='Cube' visible='false'/></world>");
        assert_eq!(w.flow.nodes().count(), 0);
        assert_eq!(w.scene.transform("a").unwrap().position, Vec3::new(1.0, 2.0, 3.0));
        assert!(!w.scene.object("b").unwrap().visible);
    }

    #[test]
    fn invalid_world_is_refused() {
        let spec = parse("<world><it name='a' type='Nope'/></world>").unwrap();
        assert!(matches!(
            instantiate(&spec, &FactoryRegistry::with_builtins()),
            Err(InstantiateError::Invalid(d)) if d.len() == 1
        ));
    }

    #[test]
    fn class_without_factory_fails_at_build() {
        let spec = parse("<world><class name='Snap' inherits='Filter'/><filter name='s' type='Snap'/></world>").unwrap();
        match instantiate(&spec, &FactoryRegistry::with_builtins()) {
            Err(InstantiateError::FactoryFailure { name, .. }) => assert_eq!(name, "s"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_param_value_names_the_instance() {
        let spec = parse("<world><it name='g' type='GoGoFilter'><param name='k' value='-1'/></it></world>").unwrap();
        match instantiate(&spec, &FactoryRegistry::with_builtins()) {
            Err(InstantiateError::FactoryFailure { name, .. }) => assert_eq!(name, "g"),
            other => panic!("{other:?}"),
        }
    }

    #[derive(Debug)]
    struct SnapToGrid(f64);

    impl Behavior for SnapToGrid {
        fn type_name(&self) -> &str {
            "SnapToGrid"
        }

        fn process(&mut self, inputs: &Inputs, cx: &mut ProcessContext<'_>) -> Result<(), crate::flow::FlowError> {
            if let Some(p) = inputs.last("in").and_then(Sample::as_locator) {
                let mut q = *p;
                q.position = q.position.map(|c| (c / self.0).round() * self.0);
                cx.emit("out", Sample::Locator(q));
            }
            Ok(())
        }

        impl_any!();
    }

    #[test]
    fn custom_factory_is_instantiated() {
        let mut reg = FactoryRegistry::with_builtins();
        let sig = Signature::filter(
            vec![PortSpec::new("in", PortKind::Locator)],
            vec![PortSpec::new("out", PortKind::Locator)],
        )
        .with_params(vec![crate::dsl::ParamSpec::optional("step", crate::dsl::ParamType::Number)]);
        let ports = (sig.iports.clone(), sig.oports.clone());
        reg.register_factory(
            "SnapToGrid",
            Box::new(FnFactory::new(sig, move |cx| {
                let step = cx.params.f64_or("step", 1.0)?;
                crate::flow::FilterNode::new(cx.name, ports.0.clone(), ports.1.clone(), Box::new(SnapToGrid(step)))
                    .map_err(|e| e.to_string())
            })),
        );
        let spec = parse(
            r#"<world>
<videv name="t" type="MRLocator"/>
<filter name="snap" type="SnapToGrid"><param name="step" value="0.5"/></filter>
<it name="mv" type="Location2Viewpoint"/>
<dataflowRel origin="t" srcport="locator" dest="snap" dstport="in"/>
<dataflowRel origin="snap" srcport="out" dest="mv" dstport="iportLocator"/>
</world>"#,
        )
        .unwrap();
        let mut w = instantiate(&spec, &reg).unwrap();
        let batch = [DeviceSample {
            device: "t".into(),
            timestamp: 0.0,
            sample: Sample::Locator(Pose::at(0.3, 1.2, -0.8)),
        }];
        w.flow.step(&batch, 0.1, &mut w.scene).unwrap();
        assert_eq!(w.scene.viewpoint().position, Vec3::new(0.5, 1.0, -1.0));
    }

    #[test]
    fn declaration_order_fixes_topo_order() {
        let text = r#"<world>
<videv name="t" type="MRLocator"/>
<it name="b" type="Location2Viewpoint"/>
<it name="a" type="Location2Viewpoint"/>
<dataflowRel origin="t" srcport="locator" dest="b" dstport="iportLocator"/>
<dataflowRel origin="t" srcport="locator" dest="a" dstport="iportLocator"/>
</world>"#;
        let one = load(text);
        let two = load(text);
        assert_eq!(one.flow.topo_order().unwrap(), vec!["t", "b", "a"]);
        assert_eq!(one.flow.topo_order().unwrap(), two.flow.topo_order().unwrap());
        assert_eq!(one.flow.edges(), two.flow.edges());
    }
}

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::registry::{FactoryRegistry, ParamType, Signature};
use crate::filters::Path;
use crate::flow::{PortSpec, Role};
use crate::sample::{parse_floats, quat_from_wxyz, PortKind, Vec3};
use crate::scene::{Frustum, VIEWPOINT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    UnresolvedName,
    UnknownType,
    UnknownPort,
    TypeMismatch,
    InheritanceCycle,
    DeviceHasInputs,
    UnknownParam,
    MissingParam,
    ReadOnlyParam,
    Cycle,
    InvalidValue,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub loc: Loc,
    pub message: String,
    /// Closest declared name, for unresolved names.
    pub suggestion: Option<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.loc, self.kind, self.message)?;
        if let Some(s) = &self.suggestion {
            write!(f, " (did you mean `{s}`?)")?;
        }
        Ok(())
    }
}

/// Implicit roots of the class hierarchy.
pub const BASE_CLASSES: [&str; 4] = ["Filter", "IT", "VIDev", "Object"];

/// The closest candidate within edit distance 2, earliest on ties.
pub fn did_you_mean<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<String> {
    let mut best: Option<(usize, &str)> = None;
    for c in candidates {
        let d = strsim::levenshtein(name, c);
        if d == 0 || d > 2 || d >= name.chars().count() {
            continue;
        }
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, c));
        }
    }
    best.map(|(_, c)| c.to_owned())
}

struct Surface {
    iports: Vec<PortSpec>,
    oports: Vec<PortSpec>,
}

impl Surface {
    fn find(ports: &[PortSpec], name: &str) -> Option<PortKind> {
        ports.iter().find(|p| p.name == name).map(|p| p.kind)
    }
}

struct Checker<'a> {
    spec: &'a WorldSpec,
    reg: &'a FactoryRegistry,
    out: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, kind: DiagnosticKind, loc: Loc, message: String) {
        self.out.push(Diagnostic {
            kind,
            loc,
            message,
            suggestion: None,
        });
    }

    fn unresolved(&mut self, loc: Loc, what: &str, name: &str, candidates: Vec<&str>) {
        self.out.push(Diagnostic {
            kind: DiagnosticKind::UnresolvedName,
            loc,
            message: format!("unknown {what} `{name}`"),
            suggestion: did_you_mean(name, candidates),
        });
    }

    fn object_names(&self) -> Vec<&'a str> {
        self.spec
            .instances
            .iter()
            .filter(|i| i.kind == InstanceKind::Object)
            .map(|i| i.name.as_str())
            .collect()
    }

    /// Own and inherited ports of a declared class, nearest declaration first.
    fn class_ports(&self, name: &str) -> (Vec<PortSpec>, Vec<PortSpec>) {
        let mut ins: Vec<PortSpec> = Vec::new();
        let mut outs: Vec<PortSpec> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cur = self.spec.class(name);
        while let Some(c) = cur {
            if !seen.insert(c.name.as_str()) {
                break;
            }
            for p in &c.iports {
                if !ins.iter().any(|q| q.name == p.name) {
                    ins.push(PortSpec::new(&p.name, p.kind));
                }
            }
            for p in &c.oports {
                if !outs.iter().any(|q| q.name == p.name) {
                    outs.push(PortSpec::new(&p.name, p.kind));
                }
            }
            cur = c.inherits.as_deref().and_then(|n| self.spec.class(n));
        }
        (ins, outs)
    }

    fn classes(&mut self) {
        let spec = self.spec;
        let known: Vec<&str> = spec
            .classes
            .iter()
            .map(|c| c.name.as_str())
            .chain(BASE_CLASSES)
            .chain(self.reg.type_names())
            .collect();
        let mut in_reported_cycle = BTreeSet::new();
        for c in &spec.classes {
            let Some(parent) = c.inherits.as_deref() else {
                continue;
            };
            if !known.contains(&parent) {
                self.unresolved(c.loc, "base class", parent, known.clone());
                continue;
            }
            // walk up; a return to `c` is a cycle
            let mut chain = vec![c.name.as_str()];
            let mut cur = spec.class(parent);
            while let Some(p) = cur {
                if p.name == c.name {
                    if chain.iter().all(|n| !in_reported_cycle.contains(n)) {
                        in_reported_cycle.extend(chain.iter().copied());
                        self.push(
                            DiagnosticKind::InheritanceCycle,
                            c.loc,
                            format!("class inheritance cycle: {} -> {}", chain.join(" -> "), c.name),
                        );
                    }
                    break;
                }
                if chain.contains(&p.name.as_str()) {
                    break;
                }
                chain.push(&p.name);
                cur = p.inherits.as_deref().and_then(|n| spec.class(n));
            }
        }
        // a class naming a registered type must describe its real surface
        for c in &spec.classes {
            let Some(f) = self.reg.get(&c.name) else {
                continue;
            };
            let sig = f.signature(&Default::default());
            for (decls, actual, dir) in [(&c.iports, &sig.iports, "input"), (&c.oports, &sig.oports, "output")] {
                for p in decls {
                    match Surface::find(actual, &p.name) {
                        None => self.push(
                            DiagnosticKind::UnknownPort,
                            p.loc,
                            format!("`{}` has no {dir} port `{}`", c.name, p.name),
                        ),
                        Some(k) if k != p.kind => self.push(
                            DiagnosticKind::TypeMismatch,
                            p.loc,
                            format!("port `{}.{}` is {k}, declared {}", c.name, p.name, p.kind),
                        ),
                        _ => {}
                    }
                }
            }
        }
    }

    fn object(&mut self, inst: &InstanceDecl) {
        if !self.reg.is_object_type(&inst.ty) {
            let msg = format!("`{}` is not an object type", inst.ty);
            let sugg = did_you_mean(&inst.ty, super::registry::OBJECT_TYPES);
            self.out.push(Diagnostic {
                kind: DiagnosticKind::UnknownType,
                loc: inst.loc,
                message: msg,
                suggestion: sugg,
            });
            return;
        }
        if inst.ty == "Viewpoint" && inst.name != VIEWPOINT {
            self.push(
                DiagnosticKind::InvalidValue,
                inst.loc,
                format!("the Viewpoint object must be named `{VIEWPOINT}`, not `{}`", inst.name),
            );
        }
        if let Some(o) = inst.attr("orient") {
            if let Err(e) = parse_floats(o).and_then(|v| quat_from_wxyz(v[0], v[1], v[2], v[3])) {
                self.push(DiagnosticKind::InvalidValue, inst.loc, format!("orient: {e}"));
            }
        }
        if let Some(h) = inst.attr("halfextents") {
            if parse_floats(h).is_ok_and(|v| v.iter().any(|x| *x < 0.0)) {
                self.push(
                    DiagnosticKind::InvalidValue,
                    inst.loc,
                    format!("halfextents of `{}` must not be negative", inst.name),
                );
            }
        }
    }

    fn node_surface(&mut self, inst: &InstanceDecl) -> Option<Surface> {
        let params = inst.param_values();
        let sig: Signature = if let Some(f) = self.reg.get(&inst.ty) {
            f.signature(&params)
        } else if self.spec.class(&inst.ty).is_some() {
            let (i, o) = self.class_ports(&inst.ty);
            let mut s = Signature::filter(i, o);
            if inst.kind == InstanceKind::VIDev {
                s.role = Role::Device;
            }
            s
        } else {
            let what = if self.reg.is_object_type(&inst.ty) {
                format!("object type `{}` cannot be used as <{}>", inst.ty, inst.kind.element())
            } else {
                format!("unknown type `{}`", inst.ty)
            };
            let names: Vec<&str> = self
                .reg
                .type_names()
                .chain(self.spec.classes.iter().map(|c| c.name.as_str()))
                .collect();
            self.out.push(Diagnostic {
                kind: DiagnosticKind::UnknownType,
                loc: inst.loc,
                message: what,
                suggestion: did_you_mean(&inst.ty, names),
            });
            return None;
        };
        let is_videv = inst.kind == InstanceKind::VIDev;
        if is_videv && !sig.iports.is_empty() {
            self.push(
                DiagnosticKind::DeviceHasInputs,
                inst.loc,
                format!("device `{}` has input ports, but {} has {}", inst.name, inst.ty, sig.iports.len()),
            );
        } else if is_videv && sig.role != Role::Device {
            self.push(
                DiagnosticKind::UnknownType,
                inst.loc,
                format!("`{}` is not a device type", inst.ty),
            );
        } else if !is_videv && sig.role == Role::Device {
            self.push(
                DiagnosticKind::UnknownType,
                inst.loc,
                format!("device type `{}` must be declared with <videv>", inst.ty),
            );
        }
        self.params(inst, &sig);
        Some(Surface {
            iports: sig.iports,
            oports: sig.oports,
        })
    }

    fn params(&mut self, inst: &InstanceDecl, sig: &Signature) {
        let class = self.spec.class(&inst.ty);
        let from_factory = self.reg.contains(&inst.ty);
        for p in &inst.params {
            if let Some(prop) = class.and_then(|c| c.props.iter().find(|q| q.name == p.name)) {
                if !prop.access.writable() {
                    self.push(
                        DiagnosticKind::ReadOnlyParam,
                        p.loc,
                        format!("property `{}` of `{}` is read-only", p.name, inst.ty),
                    );
                    continue;
                }
                if !from_factory {
                    continue;
                }
            }
            let Some(spec) = sig.param(&p.name) else {
                let names: Vec<&str> = sig.params.iter().map(|s| s.name.as_str()).collect();
                self.out.push(Diagnostic {
                    kind: DiagnosticKind::UnknownParam,
                    loc: p.loc,
                    message: format!("`{}` has no parameter `{}`", inst.ty, p.name),
                    suggestion: did_you_mean(&p.name, names),
                });
                continue;
            };
            let value = param_value(&p.value);
            if let Err(e) = spec.ty.check(&value) {
                self.push(DiagnosticKind::InvalidValue, p.loc, format!("parameter `{}`: {e}", p.name));
                continue;
            }
            let objects = self.object_names();
            match spec.ty {
                ParamType::Object | ParamType::ObjectList => {
                    for name in p.value.split_whitespace() {
                        if name != VIEWPOINT && !objects.contains(&name) {
                            self.unresolved(p.loc, "object", name, objects.clone());
                        }
                    }
                }
                ParamType::Node => {
                    let nodes: Vec<&str> = self
                        .spec
                        .instances
                        .iter()
                        .filter(|i| i.kind != InstanceKind::Object)
                        .map(|i| i.name.as_str())
                        .collect();
                    let name = p.value.trim();
                    if !nodes.contains(&name) {
                        self.unresolved(p.loc, "node", name, nodes);
                    }
                }
                _ => {}
            }
        }
        for spec in sig.params.iter().filter(|s| s.required) {
            if !inst.params.iter().any(|p| p.name == spec.name) {
                self.push(
                    DiagnosticKind::MissingParam,
                    inst.loc,
                    format!("`{}` ({}) requires parameter `{}`", inst.name, inst.ty, spec.name),
                );
            }
        }
    }

    fn rels(&mut self, surfaces: &BTreeMap<&'a str, Option<Surface>>) {
        let names: Vec<&str> = self.spec.instances.iter().map(|i| i.name.as_str()).collect();
        let mut edges: Vec<(&str, &str)> = Vec::new();
        for r in &self.spec.rels {
            let mut ok = true;
            for end in [&r.origin, &r.dest] {
                if !surfaces.contains_key(end.as_str()) {
                    self.unresolved(r.loc, "instance", end, names.clone());
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            let (Some(src), Some(dst)) = (&surfaces[r.origin.as_str()], &surfaces[r.dest.as_str()]) else {
                continue;
            };
            let sk = Surface::find(&src.oports, &r.srcport);
            let dk = Surface::find(&dst.iports, &r.dstport);
            for (found, node, port, ports, dir) in [
                (sk, &r.origin, &r.srcport, &src.oports, "output"),
                (dk, &r.dest, &r.dstport, &dst.iports, "input"),
            ] {
                if found.is_none() {
                    self.out.push(Diagnostic {
                        kind: DiagnosticKind::UnknownPort,
                        loc: r.loc,
                        message: format!("`{node}` has no {dir} port `{port}`"),
                        suggestion: did_you_mean(port, ports.iter().map(|p| p.name.as_str())),
                    });
                }
            }
            let (Some(sk), Some(dk)) = (sk, dk) else {
                continue;
            };
            if sk != dk {
                self.push(
                    DiagnosticKind::TypeMismatch,
                    r.loc,
                    format!(
                        "cannot connect {sk} port `{}.{}` to {dk} port `{}.{}`",
                        r.origin, r.srcport, r.dest, r.dstport
                    ),
                );
                continue;
            }
            let from_object = self
                .spec
                .instance(&r.origin)
                .is_some_and(|i| i.kind == InstanceKind::Object);
            if from_object {
                continue;
            }
            if r.origin == r.dest || reaches(&edges, &r.dest, &r.origin) {
                self.push(
                    DiagnosticKind::Cycle,
                    r.loc,
                    format!("`{}` -> `{}` closes a cycle", r.origin, r.dest),
                );
                continue;
            }
            edges.push((r.origin.as_str(), r.dest.as_str()));
        }
    }

    fn scene(&mut self) {
        if let Some(f) = &self.spec.frustum {
            let fr = Frustum {
                fov: f.fov,
                aspect: f.aspect,
                near: f.near,
                far: f.far,
            };
            if let Err(e) = fr.validate() {
                self.push(DiagnosticKind::InvalidValue, f.loc, e.to_string());
            }
        }
        if let Some(v) = &self.spec.viewpoint {
            let [w, x, y, z] = v.orient;
            if let Err(e) = quat_from_wxyz(w, x, y, z) {
                self.push(DiagnosticKind::InvalidValue, v.loc, format!("orient: {e}"));
            }
        }
        for p in &self.spec.paths {
            let verts = p.vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect();
            if let Err(e) = Path::new(verts, p.half_width) {
                self.push(DiagnosticKind::InvalidValue, p.loc, e);
            }
        }
    }
}

fn reaches(edges: &[(&str, &str)], from: &str, to: &str) -> bool {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            return true;
        }
        if seen.insert(n) {
            queue.extend(edges.iter().filter(|e| e.0 == n).map(|e| e.1));
        }
    }
    false
}

/// All problems in a parsed world, in declaration order. Empty means
/// instantiation will not fail on names, ports or port kinds.
pub fn validate(spec: &WorldSpec, reg: &FactoryRegistry) -> Vec<Diagnostic> {
    let mut c = Checker {
        spec,
        reg,
        out: Vec::new(),
    };
    c.classes();
    let mut surfaces: BTreeMap<&str, Option<Surface>> = BTreeMap::new();
    for inst in &spec.instances {
        let s = if inst.kind == InstanceKind::Object {
            c.object(inst);
            Some(Surface {
                iports: Vec::new(),
                oports: vec![PortSpec::new("locator", PortKind::Locator)],
            })
        } else {
            c.node_surface(inst)
        };
        surfaces.insert(inst.name.as_str(), s);
    }
    c.rels(&surfaces);
    c.scene();
    c.out
}

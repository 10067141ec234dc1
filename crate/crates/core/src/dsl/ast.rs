use serde::Serialize;

use crate::sample::{ParamValue, Params, PortKind};

/// 1-based position of an element in the source text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Loc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Access {
    #[serde(rename = "r")]
    Read,
    #[serde(rename = "w")]
    Write,
    #[serde(rename = "rw")]
    ReadWrite,
}

impl Access {
    pub fn parse(s: &str) -> Option<Access> {
        match s {
            "r" => Some(Access::Read),
            "w" => Some(Access::Write),
            "rw" => Some(Access::ReadWrite),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Access::Read => "r",
            Access::Write => "w",
            Access::ReadWrite => "rw",
        }
    }

    pub fn writable(self) -> bool {
        self != Access::Read
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropDecl {
    pub name: String,
    pub ty: String,
    pub access: Access,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortDecl {
    pub name: String,
    /// The declared port class, e.g. `OPort`.
    pub ty: Option<String>,
    pub kind: PortKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDecl {
    pub name: String,
    pub inherits: Option<String>,
    pub props: Vec<PropDecl>,
    pub iports: Vec<PortDecl>,
    pub oports: Vec<PortDecl>,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Object,
    VIDev,
    IT,
    Filter,
}

impl InstanceKind {
    pub fn element(self) -> &'static str {
        match self {
            InstanceKind::Object => "object",
            InstanceKind::VIDev => "videv",
            InstanceKind::IT => "it",
            InstanceKind::Filter => "filter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamDecl {
    pub name: String,
    pub value: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceDecl {
    pub kind: InstanceKind,
    pub name: String,
    pub ty: String,
    /// Element attributes other than `name` and `type`, in source order.
    pub attrs: Vec<(String, String)>,
    pub params: Vec<ParamDecl>,
    pub loc: Loc,
}

impl InstanceDecl {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    /// Nested params as typed values: numbers, `true`/`false`, else text.
    pub fn param_values(&self) -> Params {
        let mut p = Params::new();
        for d in &self.params {
            p.insert(&d.name, param_value(&d.value));
        }
        p
    }
}

pub fn param_value(raw: &str) -> ParamValue {
    let t = raw.trim();
    if let Ok(v) = t.parse::<f64>() {
        if v.is_finite() {
            return ParamValue::Number(v);
        }
    }
    match t {
        "true" => ParamValue::Bool(true),
        "false" => ParamValue::Bool(false),
        _ => ParamValue::Text(raw.to_owned()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataflowRel {
    pub origin: String,
    pub srcport: String,
    pub dest: String,
    pub dstport: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViewpointDecl {
    pub pos: [f64; 3],
    /// `w x y z`, as written.
    pub orient: [f64; 4],
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrustumDecl {
    pub fov: f64,
    pub aspect: f64,
    pub near: f64,
    pub far: f64,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathDecl {
    pub half_width: f64,
    pub vertices: Vec<[f64; 3]>,
    pub loc: Loc,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WorldSpec {
    pub classes: Vec<ClassDecl>,
    pub instances: Vec<InstanceDecl>,
    pub rels: Vec<DataflowRel>,
    pub viewpoint: Option<ViewpointDecl>,
    pub frustum: Option<FrustumDecl>,
    pub paths: Vec<PathDecl>,
}

impl WorldSpec {
    pub fn instance(&self, name: &str) -> Option<&InstanceDecl> {
        self.instances.iter().find(|i| i.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn count(&self, kind: InstanceKind) -> usize {
        self.instances.iter().filter(|i| i.kind == kind).count()
    }

    /// The same spec with every location zeroed, for comparing specs parsed
    /// from differently formatted text.
    pub fn without_locations(&self) -> WorldSpec {
        let mut w = self.clone();
        let z = Loc::default();
        for c in &mut w.classes {
            c.loc = z;
            c.props.iter_mut().for_each(|p| p.loc = z);
            c.iports.iter_mut().for_each(|p| p.loc = z);
            c.oports.iter_mut().for_each(|p| p.loc = z);
        }
        for i in &mut w.instances {
            i.loc = z;
            i.params.iter_mut().for_each(|p| p.loc = z);
        }
        w.rels.iter_mut().for_each(|r| r.loc = z);
        if let Some(v) = &mut w.viewpoint {
            v.loc = z;
        }
        if let Some(f) = &mut w.frustum {
            f.loc = z;
        }
        w.paths.iter_mut().for_each(|p| p.loc = z);
        w
    }
}

use std::collections::HashMap;

use roxmltree::{Document, Node};
use thiserror::Error;

use super::ast::*;
use crate::devices::QueueMode;
use crate::sample::{parse_floats, PortKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed XML: {message}")]
    XmlSyntax { line: u32, message: String },
    #[error("line {line}: unknown element <{name}> in <{parent}>")]
    UnknownElement {
        line: u32,
        name: String,
        parent: String,
    },
    #[error("line {line}: unknown attribute `{name}` on <{element}>")]
    UnknownAttribute {
        line: u32,
        element: String,
        name: String,
    },
    #[error("line {line}: <{element}> requires attribute `{name}`")]
    MissingAttribute {
        line: u32,
        element: String,
        name: String,
    },
    #[error("line {line}: `{name}` is already declared on line {first}")]
    DuplicateName { line: u32, name: String, first: u32 },
    #[error("line {line}: bad value for `{attribute}` on <{element}>: {message}")]
    InvalidValue {
        line: u32,
        element: String,
        attribute: String,
        message: String,
    },
    #[error("line {line}: unexpected text in <{element}>")]
    UnexpectedText { line: u32, element: String },
}

impl ParseError {
    pub fn line(&self) -> u32 {
        match self {
            ParseError::XmlSyntax { line, .. }
            | ParseError::UnknownElement { line, .. }
            | ParseError::UnknownAttribute { line, .. }
            | ParseError::MissingAttribute { line, .. }
            | ParseError::DuplicateName { line, .. }
            | ParseError::InvalidValue { line, .. }
            | ParseError::UnexpectedText { line, .. } => *line,
        }
    }
}

struct Parser<'a, 'input> {
    doc: &'a Document<'input>,
}

impl<'a, 'input> Parser<'a, 'input> {
    fn loc(&self, node: Node) -> Loc {
        let p = self.doc.text_pos_at(node.range().start);
        Loc {
            line: p.row,
            col: p.col,
        }
    }

    fn line(&self, node: Node) -> u32 {
        self.loc(node).line
    }

    fn check_attrs(&self, node: Node, allowed: &[&str]) -> Result<(), ParseError> {
        for a in node.attributes() {
            if a.namespace().is_some() || !allowed.contains(&a.name()) {
                return Err(ParseError::UnknownAttribute {
                    line: self.line(node),
                    element: node.tag_name().name().to_owned(),
                    name: a.name().to_owned(),
                });
            }
        }
        Ok(())
    }

    fn required(&self, node: Node<'a, 'input>, name: &str) -> Result<&'a str, ParseError> {
        node.attribute(name).ok_or_else(|| ParseError::MissingAttribute {
            line: self.line(node),
            element: node.tag_name().name().to_owned(),
            name: name.to_owned(),
        })
    }

    fn invalid(&self, node: Node, attribute: &str, message: impl Into<String>) -> ParseError {
        ParseError::InvalidValue {
            line: self.line(node),
            element: node.tag_name().name().to_owned(),
            attribute: attribute.to_owned(),
            message: message.into(),
        }
    }

    fn number(&self, node: Node, name: &str) -> Result<f64, ParseError> {
        let raw = self.required(node, name)?;
        match parse_floats(raw).as_deref() {
            Ok([v]) => Ok(*v),
            Ok(_) => Err(self.invalid(node, name, "expected one number")),
            Err(e) => Err(self.invalid(node, name, e.clone())),
        }
    }

    fn floats<const N: usize>(&self, node: Node, name: &str, raw: &str) -> Result<[f64; N], ParseError> {
        let v = parse_floats(raw).map_err(|e| self.invalid(node, name, e))?;
        v.try_into()
            .map_err(|v: Vec<f64>| self.invalid(node, name, format!("expected {N} numbers, got {}", v.len())))
    }

    /// Element children; rejects non-blank text.
    fn children(&self, node: Node<'a, 'input>) -> Result<Vec<Node<'a, 'input>>, ParseError> {
        let mut out = Vec::new();
        for c in node.children() {
            if c.is_element() {
                if c.tag_name().namespace().is_some() {
                    return Err(self.unknown(c, node));
                }
                out.push(c);
            } else if c.is_text() && !c.text().unwrap_or("").trim().is_empty() {
                return Err(ParseError::UnexpectedText {
                    line: self.line(c),
                    element: node.tag_name().name().to_owned(),
                });
            }
        }
        Ok(out)
    }

    fn unknown(&self, node: Node, parent: Node) -> ParseError {
        ParseError::UnknownElement {
            line: self.line(node),
            name: node.tag_name().name().to_owned(),
            parent: parent.tag_name().name().to_owned(),
        }
    }

    fn no_children(&self, node: Node<'a, 'input>) -> Result<(), ParseError> {
        match self.children(node)?.first() {
            Some(c) => Err(self.unknown(*c, node)),
            None => Ok(()),
        }
    }

    fn world(&self, root: Node<'a, 'input>) -> Result<WorldSpec, ParseError> {
        if root.tag_name().name() != "world" || root.tag_name().namespace().is_some() {
            return Err(ParseError::UnknownElement {
                line: self.line(root),
                name: root.tag_name().name().to_owned(),
                parent: "document".into(),
            });
        }
        self.check_attrs(root, &[])?;
        let mut w = WorldSpec::default();
        let mut names: HashMap<String, u32> = HashMap::new();
        let claim = |names: &mut HashMap<String, u32>, name: &str, line: u32| {
            if let Some(first) = names.get(name) {
                return Err(ParseError::DuplicateName {
                    line,
                    name: name.to_owned(),
                    first: *first,
                });
            }
            names.insert(name.to_owned(), line);
            Ok(())
        };
        let mut class_names: HashMap<String, u32> = HashMap::new();
        for c in self.children(root)? {
            let line = self.line(c);
            match c.tag_name().name() {
                "class" => {
                    let decl = self.class(c)?;
                    claim(&mut class_names, &decl.name, line)?;
                    w.classes.push(decl);
                }
                "object" | "videv" | "it" | "filter" => {
                    let decl = self.instance(c)?;
                    claim(&mut names, &decl.name, line)?;
                    w.instances.push(decl);
                }
                "dataflowRel" => w.rels.push(self.rel(c)?),
                "viewpoint" => {
                    claim(&mut names, "<viewpoint>", line)?;
                    w.viewpoint = Some(self.viewpoint(c)?);
                }
                "frustum" => {
                    claim(&mut names, "<frustum>", line)?;
                    w.frustum = Some(self.frustum(c)?);
                }
                "path" => w.paths.push(self.path(c)?),
                _ => return Err(self.unknown(c, root)),
            }
        }
        Ok(w)
    }

    fn class(&self, node: Node<'a, 'input>) -> Result<ClassDecl, ParseError> {
        self.check_attrs(node, &["name", "inherits"])?;
        let mut decl = ClassDecl {
            name: self.required(node, "name")?.to_owned(),
            inherits: node.attribute("inherits").map(str::to_owned),
            props: Vec::new(),
            iports: Vec::new(),
            oports: Vec::new(),
            loc: self.loc(node),
        };
        let mut members: HashMap<String, u32> = HashMap::new();
        for c in self.children(node)? {
            let line = self.line(c);
            let name = match c.tag_name().name() {
                "prop" => {
                    self.check_attrs(c, &["name", "type", "access"])?;
                    self.no_children(c)?;
                    let access = match c.attribute("access") {
                        None => Access::ReadWrite,
                        Some(a) => Access::parse(a)
                            .ok_or_else(|| self.invalid(c, "access", format!("`{a}` is not r, w or rw")))?,
                    };
                    let p = PropDecl {
                        name: self.required(c, "name")?.to_owned(),
                        ty: self.required(c, "type")?.to_owned(),
                        access,
                        loc: self.loc(c),
                    };
                    let n = p.name.clone();
                    decl.props.push(p);
                    n
                }
                tag @ ("iport" | "oport") => {
                    let p = self.port(c)?;
                    let n = p.name.clone();
                    if tag == "iport" {
                        decl.iports.push(p);
                    } else {
                        decl.oports.push(p);
                    }
                    n
                }
                _ => return Err(self.unknown(c, node)),
            };
            if let Some(first) = members.insert(name.clone(), line) {
                return Err(ParseError::DuplicateName { line, name, first });
            }
        }
        Ok(decl)
    }

    fn port(&self, node: Node<'a, 'input>) -> Result<PortDecl, ParseError> {
        self.check_attrs(node, &["name", "type", "kind"])?;
        self.no_children(node)?;
        let name = self.required(node, "name")?.to_owned();
        let kind = match node.attribute("kind") {
            Some(k) => PortKind::parse(k)
                .ok_or_else(|| self.invalid(node, "kind", format!("unknown port kind `{k}`")))?,
            None => PortKind::parse(&name).ok_or_else(|| {
                self.invalid(node, "kind", format!("cannot infer the kind of port `{name}`; add kind=\"...\""))
            })?,
        };
        Ok(PortDecl {
            name,
            ty: node.attribute("type").map(str::to_owned),
            kind,
            loc: self.loc(node),
        })
    }

    fn instance(&self, node: Node<'a, 'input>) -> Result<InstanceDecl, ParseError> {
        let (kind, extra): (_, &[&str]) = match node.tag_name().name() {
            "object" => (
                InstanceKind::Object,
                &["pos", "halfextents", "orient", "visible", "selectable"],
            ),
            "videv" => (InstanceKind::VIDev, &["mode"]),
            "it" => (InstanceKind::IT, &[]),
            _ => (InstanceKind::Filter, &[]),
        };
        let mut allowed = vec!["name", "type"];
        allowed.extend_from_slice(extra);
        self.check_attrs(node, &allowed)?;
        let mut attrs = Vec::new();
        for a in node.attributes() {
            let (k, v) = (a.name(), a.value());
            match k {
                "name" | "type" => continue,
                "pos" | "halfextents" => {
                    self.floats::<3>(node, k, v)?;
                }
                "orient" => {
                    self.floats::<4>(node, k, v)?;
                }
                "visible" | "selectable" => {
                    if !matches!(v, "true" | "false") {
                        return Err(self.invalid(node, k, "expected true or false"));
                    }
                }
                "mode" => {
                    QueueMode::parse(v)
                        .ok_or_else(|| self.invalid(node, k, format!("unknown queue mode `{v}`")))?;
                }
                _ => unreachable!("checked above"),
            }
            attrs.push((k.to_owned(), v.to_owned()));
        }
        let mut params = Vec::new();
        let mut seen: HashMap<String, u32> = HashMap::new();
        for c in self.children(node)? {
            if c.tag_name().name() != "param" || kind == InstanceKind::Object {
                return Err(self.unknown(c, node));
            }
            self.check_attrs(c, &["name", "value"])?;
            self.no_children(c)?;
            let p = ParamDecl {
                name: self.required(c, "name")?.to_owned(),
                value: self.required(c, "value")?.to_owned(),
                loc: self.loc(c),
            };
            let line = p.loc.line;
            if let Some(first) = seen.insert(p.name.clone(), line) {
                return Err(ParseError::DuplicateName {
                    line,
                    name: p.name,
                    first,
                });
            }
            params.push(p);
        }
        Ok(InstanceDecl {
            kind,
            name: self.required(node, "name")?.to_owned(),
            ty: self.required(node, "type")?.to_owned(),
            attrs,
            params,
            loc: self.loc(node),
        })
    }

    fn rel(&self, node: Node<'a, 'input>) -> Result<DataflowRel, ParseError> {
        self.check_attrs(node, &["origin", "srcport", "dest", "dstport"])?;
        self.no_children(node)?;
        Ok(DataflowRel {
            origin: self.required(node, "origin")?.to_owned(),
            srcport: self.required(node, "srcport")?.to_owned(),
            dest: self.required(node, "dest")?.to_owned(),
            dstport: self.required(node, "dstport")?.to_owned(),
            loc: self.loc(node),
        })
    }

    fn viewpoint(&self, node: Node<'a, 'input>) -> Result<ViewpointDecl, ParseError> {
        self.check_attrs(node, &["pos", "orient"])?;
        self.no_children(node)?;
        let pos = match node.attribute("pos") {
            Some(raw) => self.floats::<3>(node, "pos", raw)?,
            None => [0.0; 3],
        };
        let orient = match node.attribute("orient") {
            Some(raw) => self.floats::<4>(node, "orient", raw)?,
            None => [1.0, 0.0, 0.0, 0.0],
        };
        Ok(ViewpointDecl {
            pos,
            orient,
            loc: self.loc(node),
        })
    }

    fn frustum(&self, node: Node<'a, 'input>) -> Result<FrustumDecl, ParseError> {
        self.check_attrs(node, &["fov", "aspect", "near", "far"])?;
        self.no_children(node)?;
        Ok(FrustumDecl {
            fov: self.number(node, "fov")?,
            aspect: self.number(node, "aspect")?,
            near: self.number(node, "near")?,
            far: self.number(node, "far")?,
            loc: self.loc(node),
        })
    }

    fn path(&self, node: Node<'a, 'input>) -> Result<PathDecl, ParseError> {
        self.check_attrs(node, &["halfwidth"])?;
        let half_width = self.number(node, "halfwidth")?;
        let mut vertices = Vec::new();
        for c in self.children(node)? {
            if c.tag_name().name() != "v" {
                return Err(self.unknown(c, node));
            }
            self.check_attrs(c, &["x", "y", "z"])?;
            self.no_children(c)?;
            let y = match c.attribute("y") {
                Some(_) => self.number(c, "y")?,
                None => 0.0,
            };
            vertices.push([self.number(c, "x")?, y, self.number(c, "z")?]);
        }
        Ok(PathDecl {
            half_width,
            vertices,
            loc: self.loc(node),
        })
    }
}

/// Parses a world description. Strict: unknown elements and attributes are errors.
pub fn parse(text: &str) -> Result<WorldSpec, ParseError> {
    let doc = Document::parse(text).map_err(|e| ParseError::XmlSyntax {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    Parser { doc: &doc }.world(doc.root_element())
}

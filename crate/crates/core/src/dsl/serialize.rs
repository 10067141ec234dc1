use std::fmt::Write;

use super::ast::*;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

fn nums(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Writes a spec back as a world document that parses to the same spec.
pub fn to_xml(spec: &WorldSpec) -> String {
    let mut s = String::from("<world>\n");
    for c in &spec.classes {
        let _ = write!(s, "  <class name=\"{}\"", esc(&c.name));
        if let Some(i) = &c.inherits {
            let _ = write!(s, " inherits=\"{}\"", esc(i));
        }
        s.push_str(">\n");
        for p in &c.props {
            let _ = writeln!(
                s,
                "    <prop name=\"{}\" type=\"{}\" access=\"{}\"/>",
                esc(&p.name),
                esc(&p.ty),
                p.access.as_str()
            );
        }
        for (tag, ports) in [("iport", &c.iports), ("oport", &c.oports)] {
            for p in ports {
                let _ = write!(s, "    <{tag} name=\"{}\"", esc(&p.name));
                if let Some(t) = &p.ty {
                    let _ = write!(s, " type=\"{}\"", esc(t));
                }
                let _ = writeln!(s, " kind=\"{}\"/>", p.kind.name());
            }
        }
        s.push_str("  </class>\n");
    }
    for i in &spec.instances {
        let _ = write!(s, "  <{} name=\"{}\" type=\"{}\"", i.kind.element(), esc(&i.name), esc(&i.ty));
        for (k, v) in &i.attrs {
            let _ = write!(s, " {k}=\"{}\"", esc(v));
        }
        if i.params.is_empty() {
            s.push_str("/>\n");
            continue;
        }
        s.push_str(">\n");
        for p in &i.params {
            let _ = writeln!(s, "    <param name=\"{}\" value=\"{}\"/>", esc(&p.name), esc(&p.value));
        }
        let _ = writeln!(s, "  </{}>", i.kind.element());
    }
    for r in &spec.rels {
        let _ = writeln!(
            s,
            "  <dataflowRel origin=\"{}\" srcport=\"{}\" dest=\"{}\" dstport=\"{}\"/>",
            esc(&r.origin),
            esc(&r.srcport),
            esc(&r.dest),
            esc(&r.dstport)
        );
    }
    if let Some(v) = &spec.viewpoint {
        let _ = writeln!(s, "  <viewpoint pos=\"{}\" orient=\"{}\"/>", nums(&v.pos), nums(&v.orient));
    }
    if let Some(f) = &spec.frustum {
        let _ = writeln!(
            s,
            "  <frustum fov=\"{}\" aspect=\"{}\" near=\"{}\" far=\"{}\"/>",
            f.fov, f.aspect, f.near, f.far
        );
    }
    for p in &spec.paths {
        let _ = writeln!(s, "  <path halfwidth=\"{}\">", p.half_width);
        for v in &p.vertices {
            let _ = writeln!(s, "    <v x=\"{}\" y=\"{}\" z=\"{}\"/>", v[0], v[1], v[2]);
        }
        s.push_str("  </path>\n");
    }
    s.push_str("</world>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::sample::PortKind;
    use proptest::prelude::*;

    fn name() -> impl Strategy<Value = String> {
        "[a-zA-Z_][a-zA-Z0-9_]{0,8}"
    }

    fn text() -> impl Strategy<Value = String> {
        "[ -~]{0,12}"
    }

    fn num() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6..1e6f64, Just(0.0), Just(1e-7), Just(-2.5e12)]
    }

    fn kind() -> impl Strategy<Value = PortKind> {
        prop_oneof![
            Just(PortKind::Locator),
            Just(PortKind::Valuator),
            Just(PortKind::Button),
            Just(PortKind::Pick)
        ]
    }

    fn class() -> impl Strategy<Value = ClassDecl> {
        (
            name(),
            proptest::option::of(name()),
            proptest::collection::btree_map(name(), (0..5usize, text(), kind(), proptest::option::of(text())), 0..5),
        )
            .prop_map(|(n, inherits, members)| {
                let mut c = ClassDecl {
                    name: n,
                    inherits,
                    props: vec![],
                    iports: vec![],
                    oports: vec![],
                    loc: Loc::default(),
                };
                for (m, (slot, ty, kind, pty)) in members {
                    let loc = Loc::default();
                    match slot {
                        0..=2 => c.props.push(PropDecl {
                            name: m,
                            ty,
                            access: [Access::Read, Access::Write, Access::ReadWrite][slot],
                            loc,
                        }),
                        3 => c.iports.push(PortDecl { name: m, ty: pty, kind, loc }),
                        _ => c.oports.push(PortDecl { name: m, ty: pty, kind, loc }),
                    }
                }
                c
            })
    }

    fn instance(n: String) -> impl Strategy<Value = InstanceDecl> {
        (
            0..4usize,
            name(),
            proptest::collection::btree_map(name(), text(), 0..3),
            proptest::option::of((num(), num(), num())),
            proptest::option::of(any::<bool>()),
        )
            .prop_map(move |(k, ty, params, pos, vis)| {
                let kind = [InstanceKind::Object, InstanceKind::VIDev, InstanceKind::IT, InstanceKind::Filter][k];
                let mut attrs = vec![];
                let mut ps = vec![];
                if kind == InstanceKind::Object {
                    if let Some((x, y, z)) = pos {
                        attrs.push(("pos".to_owned(), format!("{x} {y} {z}")));
                    }
                    if let Some(v) = vis {
                        attrs.push(("visible".to_owned(), v.to_string()));
                    }
                } else {
                    if vis == Some(true) && kind == InstanceKind::VIDev {
                        attrs.push(("mode".to_owned(), "keepLast".to_owned()));
                    }
                    ps = params
                        .into_iter()
                        .map(|(name, value)| ParamDecl {
                            name,
                            value,
                            loc: Loc::default(),
                        })
                        .collect();
                }
                InstanceDecl {
                    kind,
                    name: n.clone(),
                    ty,
                    attrs,
                    params: ps,
                    loc: Loc::default(),
                }
            })
    }

    fn world() -> impl Strategy<Value = WorldSpec> {
        let classes = proptest::collection::btree_map(name(), class(), 0..3)
            .prop_map(|m| m.into_iter().map(|(n, mut c)| {
                c.name = n;
                c
            }).collect::<Vec<_>>());
        let instances = proptest::collection::btree_set(name(), 0..5).prop_flat_map(|names| {
            names.into_iter().map(instance).collect::<Vec<_>>()
        });
        let rels = proptest::collection::vec((name(), name(), name(), name()), 0..4).prop_map(|v| {
            v.into_iter()
                .map(|(origin, srcport, dest, dstport)| DataflowRel {
                    origin,
                    srcport,
                    dest,
                    dstport,
                    loc: Loc::default(),
                })
                .collect::<Vec<_>>()
        });
        let viewpoint = proptest::option::of((num(), num(), num())).prop_map(|o| {
            o.map(|(x, y, z)| ViewpointDecl {
                pos: [x, y, z],
                orient: [1.0, 0.0, 0.0, 0.0],
                loc: Loc::default(),
            })
        });
        let frustum = proptest::option::of((num(), num(), num(), num())).prop_map(|o| {
            o.map(|(fov, aspect, near, far)| FrustumDecl {
                fov,
                aspect,
                near,
                far,
                loc: Loc::default(),
            })
        });
        let paths = proptest::collection::vec((num(), proptest::collection::vec((num(), num(), num()), 0..4)), 0..3)
            .prop_map(|v| {
                v.into_iter()
                    .map(|(hw, vs)| PathDecl {
                        half_width: hw,
                        vertices: vs.into_iter().map(|(x, y, z)| [x, y, z]).collect(),
                        loc: Loc::default(),
                    })
                    .collect::<Vec<_>>()
            });
        (classes, instances, rels, viewpoint, frustum, paths).prop_map(
            |(classes, instances, rels, viewpoint, frustum, paths)| WorldSpec {
                classes,
                instances,
                rels,
                viewpoint,
                frustum,
                paths,
            },
        )
    }

    proptest! {
        #[test]
        fn parse_serialize_parse_is_stable(w in world()) {
            let xml = to_xml(&w);
            let once = parse(&xml).map_err(|e| TestCaseError::fail(format!("{e}\n{xml}")))?;
            prop_assert_eq!(&once.without_locations(), &w);
            let twice = parse(&to_xml(&once)).unwrap();
            prop_assert_eq!(twice, once);
        }
    }

    #[test]
    fn escapes_markup_in_values() {
        let mut w = WorldSpec::default();
        w.instances.push(InstanceDecl {
            kind: InstanceKind::IT,
            name: "a".into(),
            ty: "T".into(),
            attrs: vec![],
            params: vec![ParamDecl {
                name: "p".into(),
                value: "<&\"'>".into(),
                loc: Loc::default(),
            }],
            loc: Loc::default(),
        });
        assert_eq!(parse(&to_xml(&w)).unwrap().without_locations(), w);
    }
}

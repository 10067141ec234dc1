//! The XML world language: parsing, validation against the factory registry,
//! and instantiation into a scene plus dataflow.
//!
//! A world file has a `<world>` root holding class interface declarations,
//! instances (`<object>`, `<videv>`, `<it>`, `<filter>`), `<dataflowRel>`
//! connections and optional `<viewpoint>`, `<frustum>` and `<path>` elements.
//! See the guide for the full schema.

mod ast;
mod instantiate;
mod parse;
mod registry;
mod serialize;
mod validate;

pub use ast::*;
pub use instantiate::{instantiate, InstantiateError, World, DEFAULT_HALF_EXTENT};
pub use parse::{parse, ParseError};
pub use registry::{
    BuildContext, FactoryRegistry, FilterFactory, FnFactory, ParamSpec, ParamType, Signature,
    OBJECT_TYPES,
};
pub use serialize::to_xml;
pub use validate::{did_you_mean, validate, Diagnostic, DiagnosticKind, BASE_CLASSES};

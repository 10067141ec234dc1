//! A pipes-and-filters runtime for 3D interaction techniques.
//!
//! Devices feed typed samples into a [`flow::Dataflow`] of filters; filters
//! read and write a headless [`scene::SceneState`]; worlds are described in XML
//! ([`dsl`]) and replayed deterministically from scripts ([`harness`]).

pub mod devices;
pub mod dsl;
pub mod filters;
pub mod flow;
pub mod harness;
pub mod sample;
pub mod scene;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dataflow.md")]
mod book_dataflow {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/devices.md")]
mod book_devices {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scene.md")]
mod book_scene {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/techniques.md")]
mod book_techniques {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/world-files.md")]
mod book_world_files {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/custom-filters.md")]
mod book_custom_filters {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}

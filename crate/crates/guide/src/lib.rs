//! The book chapters, compiled as doctests so their snippets keep working.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/splines.md")]
pub mod splines {}
#[doc = include_str!("../../../book/src/fields.md")]
pub mod fields {}
#[doc = include_str!("../../../book/src/time_stepping.md")]
pub mod time_stepping {}
#[doc = include_str!("../../../book/src/monopole.md")]
pub mod monopole {}
#[doc = include_str!("../../../book/src/axial.md")]
pub mod axial {}
#[doc = include_str!("../../../book/src/cartesian.md")]
pub mod cartesian {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

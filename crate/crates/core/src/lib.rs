//! Core of the hybrid block/text editor for MiniPencil, a small
//! indentation-sensitive turtle language.
//!
//! Text is the single source of truth. Parsing it yields a [`lang::Program`],
//! the [`adapter`] projects that tree into a Droplet-style
//! [`blocks::BlockDocument`], and [`editor::Session`] keeps both views in
//! sync as palette blocks are dropped or text is edited. The [`interp`]
//! module runs programs, [`assess`] grades submissions against a corpus and
//! [`batch`] applies these checks across many programs at once.

pub mod adapter;
pub mod assess;
pub mod batch;
pub mod blocks;
pub mod editor;
pub mod gen;
pub mod interp;
pub mod lang;

pub use lang::{parse, print, Diagnostic, Program};

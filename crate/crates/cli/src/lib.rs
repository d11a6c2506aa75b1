//! Pieces of the `kaw` command line that are worth testing on their own.

pub mod render;

pub use render::render_svg;

//! Exact semantics, relational proofs and distinguishing games for a small
//! probabilistic language with labeled lazy sampling.
//!
//! Source files are read by [`frontend::parse`]. [`interp`] runs programs to
//! rational distributions, [`relational`] and [`lazy`] check proof scripts,
//! and [`game`] computes optimal distinguishing advantages.

pub mod dist;
pub mod interp;
pub mod lang;
pub mod lazy;
pub mod relational;
pub mod game;
pub mod frontend;

// Book chapters, compiled so their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/language.md")]
    mod language {}
    #[doc = include_str!("../../../book/src/relational.md")]
    mod relational {}
    #[doc = include_str!("../../../book/src/lazy.md")]
    mod lazy {}
    #[doc = include_str!("../../../book/src/games.md")]
    mod games {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

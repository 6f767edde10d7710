//! Social perception and human-aware navigation engine.
//!
//! The crate is organised along the pipeline a reception robot runs every
//! tick: features are associated into persons ([`association`]), voices are
//! localised ([`audio`]), people are tracked on the ground plane
//! ([`tracker`]) and grouped into conversations ([`groups`]); the
//! interaction [`supervisor`] decides what to do and [`nav`] plans how to
//! move. [`sim`] closes the loop in a deterministic simulator.

pub mod association;
pub mod audio;
pub mod geometry;
pub mod groups;
pub mod nav;
pub mod scene;
pub mod sim;
pub mod supervisor;
pub mod tracker;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod ch01 {}
    #[doc = include_str!("../../../book/src/association.md")]
    mod ch02 {}
    #[doc = include_str!("../../../book/src/audio.md")]
    mod ch03 {}
    #[doc = include_str!("../../../book/src/groups.md")]
    mod ch04 {}
    #[doc = include_str!("../../../book/src/navigation.md")]
    mod ch05 {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod ch06 {}
    #[doc = include_str!("../../../book/src/playground.md")]
    mod ch07 {}
}

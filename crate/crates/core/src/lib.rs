//! Order-k Voronoi, Delaunay, Brillouin and Iglesias tilings of planar point
//! sets, with exact predicates and angle statistics.
//!
//! The pipeline is: generate a [`pointsets::WindowedSet`], enumerate its
//! circle events with [`events::enumerate_events`], then derive angle tables
//! ([`angles`]), explicit tilings ([`tilings`]) or empirical distributions
//! ([`distributions`]).

pub mod exactgeom;
pub mod pointsets;
pub mod events;
pub mod angles;
pub mod tilings;
pub mod distributions;
pub mod counterexample;

mod kernel;

pub use exactgeom::{ExactCircle, ExactPoint, GeomError, Side};
pub use events::{CircleEvent, EventSet, EventsError};
pub use pointsets::{PointSetError, Rect, WindowedSet};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/events.md")]
    mod events {}
    #[doc = include_str!("../../../book/src/angles.md")]
    mod angles {}
    #[doc = include_str!("../../../book/src/tilings.md")]
    mod tilings {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/counterexample.md")]
    mod counterexample {}
}

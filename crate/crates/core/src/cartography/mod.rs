//! Cartographic maps with vertical cuts, decorated semi-toric polygons with
//! their group actions, and Duistermaat–Heckman functions.

mod dh;
mod map;
mod polygon;

pub use dh::{duistermaat_heckman, duistermaat_heckman_seeded, DhFunction, McBin};
pub use map::{cartographic_map, cartographic_map_in, j_range, CartographicMap, CutSpec, MapColumn};
pub use polygon::{
    best_rational, canonical_vertices, check_polygon, epsilon_action, extract_polygon, polygon_corners,
    snap,
    v_action, DecoratedPolygon, MarkedJson, MarkedPoint, PolygonJson, PolygonReport,
    RationalPoint, VElement,
};
pub(crate) use map::Levels;

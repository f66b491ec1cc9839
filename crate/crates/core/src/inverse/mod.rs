//! Classical data recovered from joint spectra: convex hulls and their
//! Hausdorff convergence, lattice monodromy, focus-focus detection and
//! volume invariants.

mod containment;
mod hull;
mod image;
mod lattice;
mod report;

pub use containment::{containment, Containment};
pub use hull::{convex_hull, hausdorff_distance, orient, ConvexHull2D};
pub use image::{classical_image, ClassicalImage};
pub use lattice::{
    detect_focus_focus, lattice_cell, quantum_monodromy, quantum_monodromy_with, volume_invariant,
    FocusDetection, LatticeCell, TransportOptions, VolumeEstimate,
};
pub use report::{convergence_test, invert, model_spectrum, InverseReport};

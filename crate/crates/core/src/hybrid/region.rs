//! Planar region geometry for 2D domain predicates.
//!
//! Regions decide membership with closed/open boundary semantics chosen so
//! that a region and its complement partition the plane exactly: primitive
//! regions are closed, complements are open. Scenes exploit this to give
//! every boundary point exactly one owning mode.

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// A subset of the plane built from closed primitives and set operations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `n . p + b >= 0` (closed side of a line).
    HalfPlane { normal: [f64; 2], offset: f64 },
    /// `|p - c| <= r`.
    Disc { center: [f64; 2], radius: f64 },
    /// Axis-aligned `[min, max]` box, closed.
    Rect { min: [f64; 2], max: [f64; 2] },
    Union { parts: Vec<Region> },
    Intersection { parts: Vec<Region> },
    /// Strict complement: contains p iff the inner region does not.
    Complement { of: Box<Region> },
}

impl Region {
    pub fn contains<T: Real>(&self, p: [T; 2]) -> bool {
        match self {
            Region::HalfPlane { normal, offset } => {
                let s = T::of(normal[0]) * p[0] + T::of(normal[1]) * p[1] + T::of(*offset);
                s >= T::zero()
            }
            Region::Disc { center, radius } => {
                let dx = p[0] - T::of(center[0]);
                let dy = p[1] - T::of(center[1]);
                dx * dx + dy * dy <= T::of(radius * radius)
            }
            Region::Rect { min, max } => {
                p[0] >= T::of(min[0])
                    && p[0] <= T::of(max[0])
                    && p[1] >= T::of(min[1])
                    && p[1] <= T::of(max[1])
            }
            Region::Union { parts } => parts.iter().any(|r| r.contains(p)),
            Region::Intersection { parts } => parts.iter().all(|r| r.contains(p)),
            Region::Complement { of } => !of.contains(p),
        }
    }

    pub fn complement(self) -> Region {
        Region::Complement { of: Box::new(self) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_points_have_exactly_one_owner() {
        let water = Region::HalfPlane {
            normal: [1.0, 0.0],
            offset: -2.0,
        };
        let land = water.clone().complement();
        // on the shoreline x = 2 the closed half-plane wins
        assert!(water.contains([2.0, 5.0]));
        assert!(!land.contains([2.0, 5.0]));
        assert!(land.contains([1.999_999, 5.0]));
        assert!(!water.contains([1.999_999, 5.0]));
    }

    #[test]
    fn disc_union_covers_both_islands() {
        let islands = Region::Union {
            parts: vec![
                Region::Disc {
                    center: [0.0, 0.0],
                    radius: 1.0,
                },
                Region::Disc {
                    center: [5.0, 0.0],
                    radius: 2.0,
                },
            ],
        };
        assert!(islands.contains([0.5, 0.5]));
        assert!(islands.contains([6.5, 0.0]));
        assert!(!islands.contains([2.5, 0.0]));
    }
}

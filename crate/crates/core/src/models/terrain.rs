//! Analytic terrain for flying-driving scenarios.
//!
//! Terrain is a set of flat rectangular drivable patches at constant
//! heights. Everything between and around patches is undrivable (cliff
//! walls, gaps). Height queries are defined everywhere: inside a patch
//! they return the patch height, elsewhere the tallest patch height, so
//! that conservative "stay above terrain" clearance predicates never
//! carve tunnels through walls.

use serde::{Deserialize, Serialize};

use crate::hybrid::region::Region;
use crate::real::Real;

/// One flat drivable rectangle at constant height.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Patch {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub height: f64,
}

impl Patch {
    pub fn contains<T: Real>(&self, x: T, y: T) -> bool {
        x >= T::of(self.min[0])
            && x <= T::of(self.max[0])
            && y >= T::of(self.min[1])
            && y <= T::of(self.max[1])
    }

    /// Rectangle shrunk by `margin` on every side, as `[min, max]` pairs
    /// per axis. Used to keep guard charts away from patch edges.
    pub fn shrunk(&self, margin: f64) -> [[f64; 2]; 2] {
        [
            [self.min[0] + margin, self.max[0] - margin],
            [self.min[1] + margin, self.max[1] - margin],
        ]
    }
}

/// Piecewise-flat terrain: drivable patches over an undrivable world.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Terrain {
    pub patches: Vec<Patch>,
    /// World extent in `x` and `y`; patches must lie inside.
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Flight ceiling above the tallest patch.
    pub headroom: f64,
}

impl Terrain {
    /// Drivable iff inside some patch (patches are closed, so a robot may
    /// stand exactly on a cliff edge).
    pub fn drivable<T: Real>(&self, x: T, y: T) -> bool {
        self.patches.iter().any(|p| p.contains(x, y))
    }

    /// Terrain height. Inside a patch this is the patch height (the
    /// tallest one when closed patch edges touch); elsewhere the tallest
    /// patch height, which makes undrivable ground act as a wall.
    pub fn height<T: Real>(&self, x: T, y: T) -> T {
        let mut covering: Option<f64> = None;
        for p in &self.patches {
            if p.contains(x, y) {
                covering = Some(covering.map_or(p.height, |h: f64| h.max(p.height)));
            }
        }
        T::of(covering.unwrap_or_else(|| self.max_height()))
    }

    pub fn max_height(&self) -> f64 {
        self.patches
            .iter()
            .map(|p| p.height)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Flight ceiling: tallest patch plus headroom.
    pub fn z_max(&self) -> f64 {
        self.max_height() + self.headroom
    }

    /// The drivable region as planar geometry (union of closed patch
    /// rectangles), for use as a ground-mode domain predicate.
    pub fn drivable_region(&self) -> Region {
        Region::Union {
            parts: self
                .patches
                .iter()
                .map(|p| Region::Rect {
                    min: p.min,
                    max: p.max,
                })
                .collect(),
        }
    }
}

/// One flat drivable plane at height zero.
pub fn flat(x_range: [f64; 2], y_range: [f64; 2]) -> Terrain {
    Terrain {
        patches: vec![Patch {
            min: [x_range[0], y_range[0]],
            max: [x_range[1], y_range[1]],
            height: 0.0,
        }],
        x_range,
        y_range,
        headroom: 2.0,
    }
}

/// Geometry knobs for the two-platform chasm terrain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChasmSpec {
    /// Gap between the facing platform edges.
    pub separation: f64,
    /// Platform length along `x`.
    pub platform_length: f64,
    /// Half-width of the world in `y`.
    pub half_width: f64,
    /// Platform height above the chasm floor.
    pub depth: f64,
    /// Undrivable strip at the base of each cliff wall; the chasm floor
    /// is inset by this much from the walls.
    pub wall_margin: f64,
}

impl Default for ChasmSpec {
    fn default() -> Self {
        ChasmSpec {
            separation: 6.0,
            platform_length: 3.0,
            half_width: 1.0,
            depth: 1.0,
            wall_margin: 0.15,
        }
    }
}

/// Two raised platforms separated by a flat-bottom chasm. The platform
/// tops and the chasm floor are drivable; the vertical walls at `x =
/// +-separation/2` and a `wall_margin` strip at their base are not, so
/// ground travel cannot cross between levels.
pub fn chasm(spec: &ChasmSpec) -> Terrain {
    let d = spec.separation / 2.0;
    let w = spec.half_width;
    assert!(spec.separation > 2.0 * spec.wall_margin, "chasm too narrow");
    assert!(spec.platform_length > 0.0 && w > 0.0 && spec.depth > 0.0);
    Terrain {
        patches: vec![
            Patch {
                min: [-d - spec.platform_length, -w],
                max: [-d, w],
                height: spec.depth,
            },
            Patch {
                min: [-d + spec.wall_margin, -w],
                max: [d - spec.wall_margin, w],
                height: 0.0,
            },
            Patch {
                min: [d, -w],
                max: [d + spec.platform_length, w],
                height: spec.depth,
            },
        ],
        x_range: [-d - spec.platform_length, d + spec.platform_length],
        y_range: [-w, w],
        headroom: 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_terrain_is_drivable_everywhere_at_height_zero() {
        let t = flat([-2.0, 2.0], [-1.0, 1.0]);
        assert!(t.drivable(0.0, 0.0));
        assert!(t.drivable(-2.0, 1.0));
        assert!(!t.drivable(2.1, 0.0));
        assert_eq!(t.height(0.3, -0.4), 0.0);
        assert_eq!(t.z_max(), 2.0);
    }

    #[test]
    fn chasm_has_three_drivable_levels_and_undrivable_wall_strips() {
        let spec = ChasmSpec::default(); // separation 6, walls at x = +-3
        let t = chasm(&spec);
        assert_eq!(t.patches.len(), 3);

        // platform tops and floor are drivable, including the cliff edge
        assert!(t.drivable(-4.0, 0.0));
        assert!(t.drivable(-3.0, 0.5));
        assert!(t.drivable(0.0, 0.0));
        assert!(t.drivable(4.0, -0.5));

        // the strip at the base of each wall is not
        assert!(!t.drivable(-2.95, 0.0));
        assert!(!t.drivable(2.9, 0.0));
        // outside the world is not
        assert!(!t.drivable(0.0, 1.5));

        assert_eq!(t.height(-4.0, 0.0), 1.0);
        assert_eq!(t.height(0.0, 0.0), 0.0);
        // undrivable wall strip reports the tallest height (a wall)
        assert_eq!(t.height(-2.95, 0.0), 1.0);
        assert_eq!(t.z_max(), 3.0);
    }

    #[test]
    fn height_is_constant_across_each_patch() {
        let t = chasm(&ChasmSpec::default());
        for p in &t.patches {
            let [xr, yr] = p.shrunk(1e-9);
            for i in 0..5 {
                for j in 0..5 {
                    let x = xr[0] + (xr[1] - xr[0]) * i as f64 / 4.0;
                    let y = yr[0] + (yr[1] - yr[0]) * j as f64 / 4.0;
                    assert_eq!(t.height(x, y), p.height);
                }
            }
        }
    }

    #[test]
    fn drivable_region_matches_the_predicate() {
        let t = chasm(&ChasmSpec::default());
        let r = t.drivable_region();
        for &(x, y) in &[
            (-4.0, 0.0),
            (-3.0, 0.0),
            (-2.95, 0.0),
            (0.0, 0.9),
            (3.2, -0.3),
            (7.0, 0.0),
        ] {
            assert_eq!(r.contains([x, y]), t.drivable(x, y), "at ({x}, {y})");
        }
    }
}

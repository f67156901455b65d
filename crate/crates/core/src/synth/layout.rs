//! Map-frame road layouts. All coordinates sit on a 0.5 m lattice so the
//! raster rendering at 0.1 m/px has no partial pixels.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect {
            min: [x0, y0],
            max: [x1, y1],
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }

    fn contains_strict(&self, x: f64, y: f64) -> bool {
        x > self.min[0] && x < self.max[0] && y > self.min[1] && y < self.max[1]
    }

    pub fn corners(&self) -> Vec<[f64; 2]> {
        vec![
            [self.min[0], self.min[1]],
            [self.max[0], self.min[1]],
            [self.max[0], self.max[1]],
            [self.min[0], self.max[1]],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrivableShape {
    Rect(Rect),
    /// Outer square minus the open inner square.
    Annulus { outer: Rect, inner: Rect },
}

impl DrivableShape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            DrivableShape::Rect(r) => r.contains(x, y),
            DrivableShape::Annulus { outer, inner } => outer.contains(x, y) && !inner.contains_strict(x, y),
        }
    }
}

/// Straight road segment used for ego placement and centerline painting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lane {
    pub rect: Rect,
    pub along_x: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrivableLayout {
    Cross,
    Ring,
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapLayout {
    pub bounds: Rect,
    pub drivable: Vec<DrivableShape>,
    pub crossings: Vec<Rect>,
    pub sidewalks: Vec<Rect>,
    pub lanes: Vec<Lane>,
}

pub const MAP_HALF_SIZE: f64 = 150.0;

impl MapLayout {
    pub fn build(kind: DrivableLayout) -> Self {
        let bounds = Rect::new(-MAP_HALF_SIZE, -MAP_HALF_SIZE, MAP_HALF_SIZE, MAP_HALF_SIZE);
        let mut m = MapLayout {
            bounds,
            drivable: Vec::new(),
            crossings: Vec::new(),
            sidewalks: Vec::new(),
            lanes: Vec::new(),
        };
        match kind {
            DrivableLayout::Cross => {
                m.straight_road(0.0, 6.0, 140.0, true);
                m.straight_road(0.0, 6.0, 140.0, false);
                m.crossings_around(0.0, 0.0, 6.0);
            }
            DrivableLayout::Grid => {
                for c in [-100.0, 0.0, 100.0] {
                    m.straight_road(c, 5.0, 140.0, true);
                    m.straight_road(c, 5.0, 140.0, false);
                }
                for x in [-100.0, 0.0, 100.0] {
                    for y in [-100.0, 0.0, 100.0] {
                        m.crossings_around(x, y, 5.0);
                    }
                }
            }
            DrivableLayout::Ring => {
                let (o, i) = (120.0, 108.0);
                m.drivable.push(DrivableShape::Annulus {
                    outer: Rect::new(-o, -o, o, o),
                    inner: Rect::new(-i, -i, i, i),
                });
                m.lanes.extend([
                    Lane { rect: Rect::new(-o, -o, o, -i), along_x: true },
                    Lane { rect: Rect::new(-o, i, o, o), along_x: true },
                    Lane { rect: Rect::new(-o, -o, -i, o), along_x: false },
                    Lane { rect: Rect::new(i, -o, o, o), along_x: false },
                ]);
                m.sidewalks.push(Rect::new(-o - 3.0, -o - 3.0, o + 3.0, o + 3.0));
                m.crossings.extend([
                    Rect::new(-1.5, -o, 1.5, -i),
                    Rect::new(-1.5, i, 1.5, o),
                    Rect::new(-o, -1.5, -i, 1.5),
                    Rect::new(i, -1.5, o, 1.5),
                ]);
            }
        }
        m
    }

    fn straight_road(&mut self, offset: f64, half_width: f64, half_len: f64, along_x: bool) {
        let (rect, walk) = if along_x {
            (
                Rect::new(-half_len, offset - half_width, half_len, offset + half_width),
                Rect::new(-half_len, offset - half_width - 3.0, half_len, offset + half_width + 3.0),
            )
        } else {
            (
                Rect::new(offset - half_width, -half_len, offset + half_width, half_len),
                Rect::new(offset - half_width - 3.0, -half_len, offset + half_width + 3.0, half_len),
            )
        };
        self.drivable.push(DrivableShape::Rect(rect));
        self.sidewalks.push(walk);
        self.lanes.push(Lane { rect, along_x });
    }

    fn crossings_around(&mut self, x: f64, y: f64, hw: f64) {
        self.crossings.extend([
            Rect::new(x + hw, y - hw, x + hw + 3.0, y + hw),
            Rect::new(x - hw - 3.0, y - hw, x - hw, y + hw),
            Rect::new(x - hw, y + hw, x + hw, y + hw + 3.0),
            Rect::new(x - hw, y - hw - 3.0, x + hw, y - hw),
        ]);
    }

    pub fn is_drivable(&self, x: f64, y: f64) -> bool {
        self.drivable.iter().any(|s| s.contains(x, y)) || self.crossings.iter().any(|r| r.contains(x, y))
    }

    /// Centerline strips: 0.2 m wide along each lane, stopping 2 m short
    /// of the lane ends.
    pub fn centerlines(&self) -> Vec<Rect> {
        self.lanes
            .iter()
            .map(|l| {
                let r = l.rect;
                if l.along_x {
                    let cy = 0.5 * (r.min[1] + r.max[1]);
                    Rect::new(r.min[0] + 2.0, cy - 0.1, r.max[0] - 2.0, cy + 0.1)
                } else {
                    let cx = 0.5 * (r.min[0] + r.max[0]);
                    Rect::new(cx - 0.1, r.min[1] + 2.0, cx + 0.1, r.max[1] - 2.0)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_inside_bounds() {
        for kind in [DrivableLayout::Cross, DrivableLayout::Ring, DrivableLayout::Grid] {
            let m = MapLayout::build(kind);
            assert!(!m.lanes.is_empty());
            for l in &m.lanes {
                for [x, y] in l.rect.corners() {
                    assert!(m.bounds.contains(x, y));
                    assert!(m.is_drivable(x, y));
                }
            }
        }
    }

    #[test]
    fn ring_has_hole() {
        let m = MapLayout::build(DrivableLayout::Ring);
        assert!(m.is_drivable(0.0, -115.0));
        assert!(!m.is_drivable(50.0, 50.0));
        assert!(m.is_drivable(108.0, 50.0));
    }
}

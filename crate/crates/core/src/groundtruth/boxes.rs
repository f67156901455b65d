use crate::annotation::{BoxAnnotation, ObjectClass, SemanticClass};
use crate::grid::{GridSpec, SemanticGrid};

/// Whether ground point `(x, y)` lies in the box's footprint (boundary
/// inclusive).
pub fn footprint_contains(b: &BoxAnnotation, x: f64, y: f64) -> bool {
    let c = b.center();
    let (s, co) = b.yaw().sin_cos();
    let (dx, dy) = (x - c[0], y - c[1]);
    let along = dx * co + dy * s;
    let across = -dx * s + dy * co;
    along.abs() <= 0.5 * b.length() && across.abs() <= 0.5 * b.width()
}

/// Marks every cell whose center falls inside the footprint of a box of
/// `class`. Visibility is not considered.
pub fn rasterize_boxes(boxes: &[BoxAnnotation], class: ObjectClass, spec: &GridSpec) -> SemanticGrid {
    let mut grid = SemanticGrid::zeros(*spec, vec![SemanticClass::from(class)]).expect("single class");
    let side = spec.cells_per_side();
    let plane = grid.plane_mut(0);
    for b in boxes.iter().filter(|b| b.class() == class) {
        let corners = b.footprint();
        let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for [x, y] in corners {
            xlo = xlo.min(x);
            xhi = xhi.max(x);
            ylo = ylo.min(y);
            yhi = yhi.max(y);
        }
        let (Some((r0, r1)), Some((c0, c1))) = (spec.rows_covering(xlo, xhi), spec.cols_covering(ylo, yhi)) else {
            continue;
        };
        for r in r0..=r1 {
            for c in c0..=c1 {
                let [x, y] = spec.cell_center(r, c);
                if footprint_contains(b, x, y) {
                    plane[r * side + c] = 1.0;
                }
            }
        }
    }
    grid
}

//! Level-set extraction on rectangular grids by marching squares.
//!
//! Fields are row-major (`values[iy * nx + ix]`); `None` marks a flagged
//! node and every cell touching one is skipped. Crossings are placed by
//! linear interpolation along cell edges; saddle cells are resolved by the
//! average of the four corners. Output coordinates are fractional node
//! indices (x, y), mapped to axis values by the caller.

use std::collections::HashMap;

pub type Point = (f64, f64);
pub type Polyline = Vec<Point>;

/// An edge with the field values at its two ends.
type Side = (Edge, f64, f64);

/// A cell edge, identified by its lower-left node and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// From (ix, iy) to (ix + 1, iy).
    Horizontal(usize, usize),
    /// From (ix, iy) to (ix, iy + 1).
    Vertical(usize, usize),
}

pub fn extract_contour(values: &[Option<f64>], nx: usize, ny: usize, level: f64) -> Vec<Polyline> {
    assert_eq!(values.len(), nx * ny, "field does not match grid dimensions");
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let at = |ix: usize, iy: usize| values[iy * nx + ix];
    let mut crossings: HashMap<Edge, Point> = HashMap::new();
    let mut segments: Vec<(Edge, Edge)> = Vec::new();

    let mut crossing = |edge: Edge, a: f64, b: f64| -> Edge {
        crossings.entry(edge).or_insert_with(|| {
            let t = (level - a) / (b - a);
            match edge {
                Edge::Horizontal(ix, iy) => (ix as f64 + t, iy as f64),
                Edge::Vertical(ix, iy) => (ix as f64, iy as f64 + t),
            }
        });
        edge
    };

    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let (Some(v00), Some(v10), Some(v11), Some(v01)) =
                (at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1))
            else {
                continue;
            };
            // corners counter-clockwise from (ix, iy); bit set when above the level
            let above = [v00 >= level, v10 >= level, v11 >= level, v01 >= level];
            let case = above.iter().enumerate().fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
            if case == 0 || case == 15 {
                continue;
            }
            let bottom = (Edge::Horizontal(ix, iy), v00, v10);
            let right = (Edge::Vertical(ix + 1, iy), v10, v11);
            let top = (Edge::Horizontal(ix, iy + 1), v01, v11);
            let left = (Edge::Vertical(ix, iy), v00, v01);
            let pairs: Vec<(Side, Side)> = match case {
                1 | 14 => vec![(left, bottom)],
                2 | 13 => vec![(bottom, right)],
                3 | 12 => vec![(left, right)],
                4 | 11 => vec![(right, top)],
                6 | 9 => vec![(bottom, top)],
                7 | 8 => vec![(left, top)],
                5 | 10 => {
                    let centre_above = (v00 + v10 + v11 + v01) / 4.0 >= level;
                    // case 5: (ix, iy) and (ix+1, iy+1) above
                    if (case == 5) == centre_above {
                        vec![(left, top), (bottom, right)]
                    } else {
                        vec![(left, bottom), (right, top)]
                    }
                }
                _ => unreachable!(),
            };
            for ((ea, a1, a2), (eb, b1, b2)) in pairs {
                let p = crossing(ea, a1, a2);
                let q = crossing(eb, b1, b2);
                segments.push((p, q));
            }
        }
    }
    join(segments, &crossings)
}

fn join(segments: Vec<(Edge, Edge)>, crossings: &HashMap<Edge, Point>) -> Vec<Polyline> {
    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(k);
        by_edge.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    let next = |edge: Edge, used: &[bool]| -> Option<usize> {
        by_edge.get(&edge)?.iter().copied().find(|&k| !used[k])
    };
    let other = |k: usize, edge: Edge| if segments[k].0 == edge { segments[k].1 } else { segments[k].0 };

    // open chains start at an edge used only once; closed loops afterwards
    let mut order: Vec<usize> = (0..segments.len())
        .filter(|&k| {
            let (a, b) = segments[k];
            by_edge[&a].len() == 1 || by_edge[&b].len() == 1
        })
        .collect();
    order.extend(0..segments.len());

    for start in order {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let (head, mut tail) = if by_edge[&b].len() == 1 && by_edge[&a].len() != 1 { (b, a) } else { (a, b) };
        let mut chain = vec![head, tail];
        while let Some(k) = next(tail, &used) {
            used[k] = true;
            tail = other(k, tail);
            chain.push(tail);
        }
        lines.push(chain.iter().map(|e| crossings[e]).collect());
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Vec<Option<f64>> {
        (0..ny).flat_map(|iy| (0..nx).map(move |ix| (ix, iy))).map(|(ix, iy)| Some(f(ix as f64, iy as f64))).collect()
    }

    #[test]
    fn constant_field_has_no_contour() {
        assert!(extract_contour(&field(5, 4, |_, _| 1.0), 5, 4, 0.5).is_empty());
        assert!(extract_contour(&field(5, 4, |_, _| 1.0), 5, 4, 2.0).is_empty());
    }

    #[test]
    fn vertical_line() {
        let lines = extract_contour(&field(6, 5, |x, _| x), 6, 5, 2.3);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 5);
        for (x, _) in &lines[0] {
            assert!((x - 2.3).abs() < 1e-12);
        }
    }

    #[test]
    fn oblique_ramp() {
        let (nx, ny) = (20, 15);
        let lines = extract_contour(&field(nx, ny, |x, y| 0.3 * x + 0.7 * y), nx, ny, 4.1);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].len() > 5);
        for (x, y) in &lines[0] {
            assert!((0.3 * x + 0.7 * y - 4.1).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_loop() {
        let lines = extract_contour(&field(11, 11, |x, y| (x - 5.0).powi(2) + (y - 5.0).powi(2)), 11, 11, 9.0);
        assert_eq!(lines.len(), 1);
        let l = &lines[0];
        assert_eq!(l.first(), l.last());
    }

    #[test]
    fn flagged_cells_are_skipped() {
        let mut f = field(6, 5, |x, _| x);
        for iy in 0..5 {
            f[iy * 6 + 2] = None;
        }
        // the level sits in the flagged column's cells
        assert!(extract_contour(&f, 6, 5, 2.3).is_empty());
        let mut f = field(6, 5, |x, _| x);
        f[2 * 6 + 2] = None;
        let lines = extract_contour(&f, 6, 5, 2.3);
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn saddle_follows_centre() {
        // corners 1, 0, 1, 0 with mean 0.5 ≥ 0.4: the high corners connect
        let f = vec![Some(1.0), Some(0.0), Some(0.0), Some(1.0)];
        let lines = extract_contour(&f, 2, 2, 0.4);
        let mut segs: Vec<Vec<Point>> = lines
            .into_iter()
            .map(|mut l| {
                l.sort_by(|a, b| a.partial_cmp(b).unwrap());
                l
            })
            .collect();
        segs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let close = |p: Point, q: Point| (p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12;
        assert!(close(segs[0][0], (0.0, 0.6)) && close(segs[0][1], (0.4, 1.0)));
        assert!(close(segs[1][0], (0.6, 0.0)) && close(segs[1][1], (1.0, 0.4)));
    }
}

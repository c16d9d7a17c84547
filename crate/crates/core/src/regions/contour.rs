use serde::{Deserialize, Serialize};

/// Straight piece of a level curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: (f64, f64),
    pub end: (f64, f64),
}

/// Level-`level` curve of a raster by marching squares.
///
/// `values` is row-major with `ys` outer (`values[iy * xs.len() + ix]`).
/// Crossing points are linearly interpolated along cell edges; saddle cells
/// are resolved by the cell-centre average.
pub fn marching_squares(values: &[f64], xs: &[f64], ys: &[f64], level: f64) -> Vec<Segment> {
    let (nx, ny) = (xs.len(), ys.len());
    assert_eq!(values.len(), nx * ny, "raster size mismatch");
    let v = |ix: usize, iy: usize| values[iy * nx + ix] - level;
    let mut out = Vec::new();
    if nx < 2 || ny < 2 {
        return out;
    }
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            // Corners counter-clockwise from bottom-left.
            let c = [
                (xs[ix], ys[iy], v(ix, iy)),
                (xs[ix + 1], ys[iy], v(ix + 1, iy)),
                (xs[ix + 1], ys[iy + 1], v(ix + 1, iy + 1)),
                (xs[ix], ys[iy + 1], v(ix, iy + 1)),
            ];
            let inside: Vec<bool> = c.iter().map(|p| p.2 >= 0.0).collect();
            let edge_point = |e: usize| {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                let t = if a.2 == b.2 { 0.5 } else { a.2 / (a.2 - b.2) };
                (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
            };
            // Edges whose endpoints straddle the level, in order.
            let crossed: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            match crossed.len() {
                2 => out.push(Segment {
                    start: edge_point(crossed[0]),
                    end: edge_point(crossed[1]),
                }),
                4 => {
                    let centre = c.iter().map(|p| p.2).sum::<f64>() / 4.0;
                    // Pair edges around corners that are isolated from the
                    // centre's side.
                    let pairs = if (centre >= 0.0) == inside[0] { [(0, 1), (2, 3)] } else { [(3, 0), (1, 2)] };
                    for (a, b) in pairs {
                        out.push(Segment {
                            start: edge_point(a),
                            end: edge_point(b),
                        });
                    }
                }
                _ => {}
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_contour_lies_on_circle() {
        let xs: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let vals: Vec<f64> = xs
            .iter()
            .flat_map(|&y| xs.iter().map(move |&x| 1.0 - x * x - y * y))
            .collect();
        let segs = marching_squares(&vals, &xs, &xs, 0.0);
        assert!(segs.len() > 40);
        for s in &segs {
            for p in [s.start, s.end] {
                let r = (p.0 * p.0 + p.1 * p.1).sqrt();
                assert!((r - 1.0).abs() < 0.02, "r = {r}");
            }
        }
    }

    #[test]
    fn flat_raster_has_no_contour() {
        let xs = [0.0, 1.0, 2.0];
        assert!(marching_squares(&[1.0; 9], &xs, &xs, 0.0).is_empty());
    }
}

//! Bundled specifications: geofence monitors parameterised by the number of
//! polygon faces, and small listings exercising individual passes.

use std::f64::consts::TAU;
use std::fmt::Write as _;

/// Rotation of the first vertex, keeping every face non-vertical.
const ROTATION: f64 = 0.1;
const MARGIN: f64 = 0.01;
/// Half-width of the axis-aligned box used as a cheap inner approximation.
pub const INNER_BOX: f64 = 0.4;

pub const GPS: &str = include_str!("../specs/gps.strm");
pub const PTR_LEFT: &str = include_str!("../specs/ptr_left.strm");
pub const PTR_RIGHT: &str = include_str!("../specs/ptr_right.strm");
pub const FR_LEFT: &str = include_str!("../specs/fr_left.strm");
pub const FR_RIGHT: &str = include_str!("../specs/fr_right.strm");
pub const GEOFENCE_2D: &str = include_str!("../specs/geofence_2d.strm");
pub const GEOFENCE_3D: &str = include_str!("../specs/geofence_3d.strm");
pub const GEOFENCE_UNDER: &str = include_str!("../specs/geofence_under.strm");

/// Every bundled specification by file stem.
pub const BUNDLED: [(&str, &str); 8] = [
    ("gps", GPS),
    ("ptr_left", PTR_LEFT),
    ("ptr_right", PTR_RIGHT),
    ("fr_left", FR_LEFT),
    ("fr_right", FR_RIGHT),
    ("geofence_2d", GEOFENCE_2D),
    ("geofence_3d", GEOFENCE_3D),
    ("geofence_under", GEOFENCE_UNDER),
];

/// Faces of the bundled geofence variants.
pub const BUNDLED_FACES: usize = 5;

fn vertices(faces: usize) -> Vec<(f64, f64)> {
    assert!(faces >= 3, "a polygon needs at least three faces");
    (0..faces)
        .map(|k| {
            let theta = ROTATION + TAU * k as f64 / faces as f64;
            (theta.cos(), theta.sin())
        })
        .collect()
}

/// Gradient and intercept of the line through vertices `i` and `i + 1`.
fn face(vertices: &[(f64, f64)], i: usize) -> (f64, f64) {
    let (x0, y0) = vertices[i];
    let (x1, y1) = vertices[(i + 1) % vertices.len()];
    assert!((x1 - x0).abs() > 1e-9, "vertical face");
    let slope = (y1 - y0) / (x1 - x0);
    (slope, y0 - slope * x0)
}

/// Sign making the origin's side of face `i` positive.
fn orientation(vertices: &[(f64, f64)], i: usize) -> f64 {
    let (_, intercept) = face(vertices, i);
    if -intercept > 0.0 { 1.0 } else { -1.0 }
}

fn constants(out: &mut String, faces: usize) {
    let vertices = vertices(faces);
    writeln!(out, "output margin @{{lon}} := {MARGIN:?}").unwrap();
    for (i, (x, y)) in vertices.iter().enumerate() {
        writeln!(out, "output vx_{i} @{{lon}} := {x:?}").unwrap();
        writeln!(out, "output vy_{i} @{{lon}} := {y:?}").unwrap();
    }
    for i in 0..faces {
        writeln!(out, "output o_{i} @{{lon}} := {:?}", orientation(&vertices, i)).unwrap();
    }
    out.push('\n');
    for i in 0..faces {
        let j = (i + 1) % faces;
        writeln!(out, "output m_{i} := (vy_{j} - vy_{i}) / (vx_{j} - vx_{i})").unwrap();
        writeln!(out, "output b_{i} := vy_{i} - m_{i} * vx_{i}").unwrap();
    }
    out.push('\n');
}

fn side(i: usize, lon: &str, lat: &str) -> String {
    format!("o_{i} * ({lat} - (m_{i} * {lon} + b_{i})) > margin")
}

fn conjunction(prefix: &str, faces: usize) -> String {
    (0..faces).map(|i| format!("{prefix}_{i}")).collect::<Vec<_>>().join(" && ")
}

fn trajectory(out: &mut String, faces: usize) {
    out.push_str("output pred_lon := lon + (lon - lon.offset(by: -1).defaults(to: 0.0))\n");
    out.push_str("output pred_lat := lat + (lat - lat.offset(by: -1).defaults(to: 0.0))\n");
    for i in 0..faces {
        writeln!(out, "output cur_{i} := {}", side(i, "lon", "lat")).unwrap();
        writeln!(out, "output next_{i} := {}", side(i, "pred_lon", "pred_lat")).unwrap();
    }
    writeln!(out, "output inside := {}", conjunction("cur", faces)).unwrap();
    writeln!(out, "output inside_next := {}", conjunction("next", faces)).unwrap();
}

/// Two-dimensional geofence with one constant gradient and intercept stream
/// per face and a one-step trajectory prediction.
pub fn geofence_2d(faces: usize) -> String {
    let mut out = format!("# Geofence over a regular polygon with {faces} faces.\ninput lon, lat: Float64\n\n");
    constants(&mut out, faces);
    trajectory(&mut out, faces);
    out.push('\n');
    out.push_str("trigger !inside \"outside geofence\"\n");
    out.push_str("trigger inside && !inside_next \"about to leave geofence\"\n");
    out
}

/// The 2D geofence plus an altitude band checked together with the position.
pub fn geofence_3d(faces: usize) -> String {
    let mut out =
        format!("# Geofence over a regular polygon with {faces} faces and an altitude band.\ninput lon, lat, alt: Float64\n\n");
    constants(&mut out, faces);
    trajectory(&mut out, faces);
    out.push_str("output alt_ok := alt > -0.8 && alt < 0.8\n\n");
    out.push_str("trigger !(inside && alt_ok) \"outside geofence\"\n");
    out.push_str("trigger inside && !inside_next && alt_ok \"about to leave geofence\"\n");
    out
}

/// Condition of the inner box, inlined into the trigger.
pub fn inner_box_condition() -> String {
    let w = INNER_BOX;
    format!("lon > -{w:?} && lon < {w:?} && lat > -{w:?} && lat < {w:?}")
}

/// Geofence where a cheap inner box short-cuts the precise per-face checks.
pub fn geofence_under(faces: usize) -> String {
    let mut out = format!(
        "# Geofence over a regular polygon with {faces} faces, under-approximated by a box.\ninput lon, lat: Float64\n\n"
    );
    constants(&mut out, faces);
    for i in 0..faces {
        writeln!(out, "output side_{i} := {}", side(i, "lon", "lat")).unwrap();
    }
    out.push('\n');
    writeln!(
        out,
        "trigger if {} then false else !({}) \"outside geofence\"",
        inner_box_condition(),
        conjunction("side", faces)
    )
    .unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::infer_types;
    use crate::parser::parse_spec;

    #[test]
    fn bundled_files_match_generators() {
        assert_eq!(GEOFENCE_2D, geofence_2d(BUNDLED_FACES));
        assert_eq!(GEOFENCE_3D, geofence_3d(BUNDLED_FACES));
        assert_eq!(GEOFENCE_UNDER, geofence_under(BUNDLED_FACES));
    }

    #[test]
    fn bundled_specs_type_check() {
        for (name, src) in BUNDLED {
            let spec = parse_spec(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            infer_types(&spec).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        for faces in 3..12 {
            for src in [geofence_2d(faces), geofence_3d(faces), geofence_under(faces)] {
                infer_types(&parse_spec(&src).unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn origin_is_inside_every_face() {
        for faces in 3..12 {
            let vertices = vertices(faces);
            let polygon: Vec<_> = (0..faces)
                .map(|i| {
                    let (m, b) = face(&vertices, i);
                    (m, b, orientation(&vertices, i))
                })
                .collect();
            for &(_, b, o) in &polygon {
                assert!(o * (0.0 - b) > MARGIN);
            }
            for (i, &(m, b, _)) in polygon.iter().enumerate() {
                for (x, y) in [vertices[i], vertices[(i + 1) % faces]] {
                    assert!((y - (m * x + b)).abs() < 1e-9);
                }
            }
            // The inner box corners are inside.
            for (x, y) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let (x, y) = (x * INNER_BOX, y * INNER_BOX);
                if faces >= 5 {
                    assert!(polygon.iter().all(|&(m, b, o)| o * (y - (m * x + b)) > MARGIN));
                }
            }
        }
    }
}

//! Generates a geofence specification from a polygon.
//!
//! Geometry runs in a local plane. [`Projection::Equirectangular`] maps
//! `(lat, lon)` degrees to metres east and north of the vertex centroid;
//! [`Projection::Planar`] uses `x = lon`, `y = lat` unchanged, which is
//! convenient for unit-scale tests. Velocities are in plane units per second.
//!
//! Per edge the specification computes the clamped nearest point, the
//! distance to it, the closing speed towards it and the resulting time to
//! breach, a crossing-parity ray test and an orientation-based intersection
//! test between the last and the current position.

use std::fmt::Write as _;

/// Time to breach reported when no edge is being approached, in seconds.
pub const NO_BREACH: f64 = 1.0e9;

/// Mean earth radius in metres.
pub const EARTH_RADIUS: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolygonError {
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} is not finite")]
    NonFinite(usize),
    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// A simple polygon, closed implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct GeofencePolygon {
    vertices: Vec<GeoPoint>,
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_meet(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let within = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
        r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
    };
    let (d1, d2, d3, d4) = (orient(c, d, a), orient(c, d, b), orient(a, b, c), orient(a, b, d));
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return true;
    }
    (d1 == 0.0 && within(c, d, a)) || (d2 == 0.0 && within(c, d, b)) || (d3 == 0.0 && within(a, b, c)) || (d4 == 0.0 && within(a, b, d))
}

impl GeofencePolygon {
    pub fn new(vertices: Vec<GeoPoint>) -> Result<GeofencePolygon, PolygonError> {
        let n = vertices.len();
        if n < 3 {
            return Err(PolygonError::TooFewVertices(n));
        }
        if let Some(i) = vertices.iter().position(|v| !v.lat.is_finite() || !v.lon.is_finite()) {
            return Err(PolygonError::NonFinite(i));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(PolygonError::DuplicateVertex(i, (i + 1) % n));
            }
        }
        let p = |i: usize| (vertices[i % n].lon, vertices[i % n].lat);
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // adjacent edges share one vertex; only a fold back onto each other is a defect
                    let (a, b, c) = if j == i + 1 { (p(i), p(i + 1), p(j + 1)) } else { (p(j), p(0), p(1)) };
                    let folded = orient(a, b, c) == 0.0 && (c.0 - b.0) * (a.0 - b.0) + (c.1 - b.1) * (a.1 - b.1) > 0.0;
                    if folded {
                        return Err(PolygonError::SelfIntersecting(i, j));
                    }
                } else if segments_meet(p(i), p(i + 1), p(j), p(j + 1)) {
                    return Err(PolygonError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(GeofencePolygon { vertices })
    }

    /// One `lat, lon` pair per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<GeofencePolygon, PolygonError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut vertices = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| PolygonError::Syntax { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            let syntax = |message: String| PolygonError::Syntax { line, message };
            if row.len() != 2 {
                return Err(syntax(format!("expected `lat, lon`, found {} values", row.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| syntax(format!("`{s}` is not a number")));
            vertices.push(GeoPoint { lat: num(&row[0])?, lon: num(&row[1])? });
        }
        GeofencePolygon::new(vertices)
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    /// The mean of the vertices.
    pub fn centroid(&self) -> GeoPoint {
        let n = self.vertices.len() as f64;
        GeoPoint {
            lat: self.vertices.iter().map(|v| v.lat).sum::<f64>() / n,
            lon: self.vertices.iter().map(|v| v.lon).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Planar,
    Equirectangular,
}

/// The affine map `x = (lon - origin.lon) * scale_x`, `y = (lat - origin.lat) * scale_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub origin: GeoPoint,
    pub scale_x: f64,
    pub scale_y: f64,
}

impl PlaneFrame {
    pub fn new(projection: Projection, polygon: &GeofencePolygon) -> PlaneFrame {
        match projection {
            Projection::Planar => PlaneFrame { origin: GeoPoint { lat: 0.0, lon: 0.0 }, scale_x: 1.0, scale_y: 1.0 },
            Projection::Equirectangular => {
                let origin = polygon.centroid();
                let per_degree = EARTH_RADIUS * std::f64::consts::PI / 180.0;
                PlaneFrame { origin, scale_x: per_degree * origin.lat.to_radians().cos(), scale_y: per_degree }
            }
        }
    }

    pub fn project(&self, p: GeoPoint) -> (f64, f64) {
        ((p.lon - self.origin.lon) * self.scale_x, (p.lat - self.origin.lat) * self.scale_y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeofenceOptions {
    pub lat: String,
    pub lon: String,
    /// Velocity towards plane `+x` (east), held between updates.
    pub vel_x: String,
    /// Velocity towards plane `+y` (north), held between updates.
    pub vel_y: String,
    pub projection: Projection,
    /// Seconds; a predicted breach closer than this fires a trigger.
    pub horizon: f64,
    /// Samples the position periodically instead of on every position event.
    pub sample_rate_hz: Option<u32>,
}

impl Default for GeofenceOptions {
    fn default() -> Self {
        GeofenceOptions {
            lat: "lat".into(),
            lon: "lon".into(),
            vel_x: "vel_east".into(),
            vel_y: "vel_north".into(),
            projection: Projection::Equirectangular,
            horizon: 10.0,
            sample_rate_hz: None,
        }
    }
}

fn lit(v: f64) -> String {
    let s = format!("{v:?}");
    if v < 0.0 {
        format!("({s})")
    } else {
        s
    }
}

fn join(n: usize, sep: &str, f: impl Fn(usize) -> String) -> String {
    (0..n).map(f).collect::<Vec<_>>().join(sep)
}

/// Emits the specification text. The result always passes analysis.
pub fn generate_geofence_spec(polygon: &GeofencePolygon, options: &GeofenceOptions) -> String {
    let frame = PlaneFrame::new(options.projection, polygon);
    let pts: Vec<(f64, f64)> = polygon.vertices().iter().map(|&v| frame.project(v)).collect();
    let n = pts.len();
    let GeofenceOptions { lat, lon, vel_x, vel_y, .. } = options;
    let mut s = String::new();
    let _ = writeln!(s, "// Geofence with {n} edges, generated from a polygon definition.");
    match options.projection {
        Projection::Planar => s.push_str("// Plane coordinates: x = lon, y = lat.\n"),
        Projection::Equirectangular => {
            s.push_str("// Plane coordinates: metres east and north of the vertex centroid, equirectangular.\n")
        }
    }
    s.push('\n');
    let _ = writeln!(s, "constant ORIGIN_LAT: Float64 := {:?}", frame.origin.lat);
    let _ = writeln!(s, "constant ORIGIN_LON: Float64 := {:?}", frame.origin.lon);
    let _ = writeln!(s, "constant SCALE_X: Float64 := {:?}", frame.scale_x);
    let _ = writeln!(s, "constant SCALE_Y: Float64 := {:?}", frame.scale_y);
    let _ = writeln!(s, "// prediction horizon in seconds");
    let _ = writeln!(s, "constant HORIZON: Float64 := {:?}", options.horizon);
    let _ = writeln!(s, "// time to breach when no edge is approached");
    let _ = writeln!(s, "constant NO_BREACH: Float64 := {NO_BREACH:?}");
    for (i, &(x, y)) in pts.iter().enumerate() {
        let j = (i + 1) % n;
        let (dx, dy) = (pts[j].0 - x, pts[j].1 - y);
        let _ = writeln!(s, "constant V{i}_X: Float64 := {x:?}");
        let _ = writeln!(s, "constant V{i}_Y: Float64 := {y:?}");
        let _ = writeln!(s, "constant E{i}_DX: Float64 := {dx:?}");
        let _ = writeln!(s, "constant E{i}_DY: Float64 := {dy:?}");
        let _ = writeln!(s, "constant E{i}_LEN2: Float64 := {:?}", dx * dx + dy * dy);
    }
    s.push('\n');
    let _ = writeln!(s, "input {lat}: Float64, {lon}: Float64");
    let _ = writeln!(s, "input {vel_x}: Float64, {vel_y}: Float64");
    s.push('\n');
    match options.sample_rate_hz {
        None => {
            let _ = writeln!(s, "output x := ({lon} - ORIGIN_LON) * SCALE_X");
            let _ = writeln!(s, "output y := ({lat} - ORIGIN_LAT) * SCALE_Y");
        }
        Some(hz) => {
            let _ = writeln!(s, "output x @{hz}Hz := ({lon}.hold(or: ORIGIN_LON) - ORIGIN_LON) * SCALE_X");
            let _ = writeln!(s, "output y @{hz}Hz := ({lat}.hold(or: ORIGIN_LAT) - ORIGIN_LAT) * SCALE_Y");
        }
    }
    s.push_str("// the previous sample; the first segment degenerates to a point\n");
    s.push_str("output px := x.offset(by: -1, or: x)\n");
    s.push_str("output py := y.offset(by: -1, or: y)\n");
    for i in 0..n {
        let j = (i + 1) % n;
        let _ = writeln!(s, "\n// edge {i}: V{i} -> V{j}");
        let _ = writeln!(
            s,
            "output e{i}_t := max(0.0, min(1.0, ((x - V{i}_X) * E{i}_DX + (y - V{i}_Y) * E{i}_DY) / E{i}_LEN2))"
        );
        let _ = writeln!(s, "output e{i}_qx := V{i}_X + e{i}_t * E{i}_DX");
        let _ = writeln!(s, "output e{i}_qy := V{i}_Y + e{i}_t * E{i}_DY");
        let _ = writeln!(s, "output e{i}_dist := sqrt((x - e{i}_qx) * (x - e{i}_qx) + (y - e{i}_qy) * (y - e{i}_qy))");
        let _ = writeln!(
            s,
            "output e{i}_closing := if e{i}_dist > 0.0 then ({vel_x}.hold(or: 0.0) * (e{i}_qx - x) + {vel_y}.hold(or: 0.0) * (e{i}_qy - y)) / e{i}_dist else 0.0"
        );
        let _ = writeln!(s, "output e{i}_ttb := if e{i}_closing > 0.0 then e{i}_dist / e{i}_closing else NO_BREACH");
        if pts[j].1 == pts[i].1 {
            // a horizontal edge never straddles the ray
            let _ = writeln!(s, "output e{i}_ray := (V{i}_Y > y) != (V{j}_Y > y)");
        } else {
            let _ = writeln!(
                s,
                "output e{i}_ray := (V{i}_Y > y) != (V{j}_Y > y) and x < V{i}_X + (y - V{i}_Y) * {}",
                lit(pts[j].0 - pts[i].0) + " / " + &lit(pts[j].1 - pts[i].1)
            );
        }
        let _ = writeln!(s, "output e{i}_o1 := E{i}_DX * (py - V{i}_Y) - E{i}_DY * (px - V{i}_X)");
        let _ = writeln!(s, "output e{i}_o2 := E{i}_DX * (y - V{i}_Y) - E{i}_DY * (x - V{i}_X)");
        let _ = writeln!(s, "output e{i}_o3 := (x - px) * (V{i}_Y - py) - (y - py) * (V{i}_X - px)");
        let _ = writeln!(s, "output e{i}_o4 := (x - px) * (V{j}_Y - py) - (y - py) * (V{j}_X - px)");
        let _ = writeln!(
            s,
            "output e{i}_hit := e{i}_o1 * e{i}_o2 <= 0.0 and e{i}_o3 * e{i}_o4 <= 0.0 \
             and min(px, x) <= max(V{i}_X, V{j}_X) and min(V{i}_X, V{j}_X) <= max(px, x) \
             and min(py, y) <= max(V{i}_Y, V{j}_Y) and min(V{i}_Y, V{j}_Y) <= max(py, y)"
        );
    }
    s.push('\n');
    let parity = (1..n).fold("e0_ray".to_string(), |acc, i| format!("({acc} != e{i}_ray)"));
    let _ = writeln!(s, "output inside := {parity}");
    let _ = writeln!(s, "output min_dist := min({})", join(n, ", ", |i| format!("e{i}_dist")));
    let _ = writeln!(s, "output time_to_breach := if inside then min({}) else 0.0", join(n, ", ", |i| format!("e{i}_ttb")));
    let _ = writeln!(s, "output crossed := {}", join(n, " or ", |i| format!("e{i}_hit")));
    s.push('\n');
    s.push_str("trigger crossed \"geofence boundary crossed\"\n");
    s.push_str("trigger inside and time_to_breach < HORIZON \"geofence breach predicted within the horizon\"\n");
    s
}

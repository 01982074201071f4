//! Spherical-earth geometry on EPSG:4326 coordinates.
//!
//! Point-to-point distances are great-circle distances on a sphere of radius
//! [`EARTH_RADIUS_M`]. Anything involving a line segment (distance to a
//! segment interior, clipping against a disc) is computed in a local
//! equirectangular projection centred on the query point. Segments are kept
//! short at ingestion (see [`MAX_SEGMENT_M`]) so the projection error stays
//! well under half a percent for the radii features are evaluated at.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// IUGG mean earth radius.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Arc length of one degree of a great circle.
pub const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * PI / 180.0;

/// Meters per degree used to size search boxes. Slightly under the true arc
/// length of a degree, so boxes come out a hair larger than needed.
pub const BOX_METERS_PER_DEGREE: f64 = 111_194.93;

/// Longest polyline segment kept after ingestion.
pub const MAX_SEGMENT_M: f64 = 50_000.0;

/// Lower clamp on cos(lat) when widening a box in longitude.
pub const MIN_COS_LAT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("coordinate is not finite (lon {lon}, lat {lat})")]
    NonFinite { lon: f64, lat: f64 },
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("polyline needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polyline repeats vertex {0} consecutively")]
    DuplicateVertex(usize),
}

/// A WGS84 longitude/latitude pair in degrees.
///
/// Longitude +180 is stored as -180 so that every meridian has one spelling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    lon: f64,
    lat: f64,
}

impl Coordinate {
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeoError> {
        if !lon.is_finite() || !lat.is_finite() {
            return Err(GeoError::NonFinite { lon, lat });
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeOutOfRange(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::LongitudeOutOfRange(lon));
        }
        let lon = if lon == 180.0 { -180.0 } else { lon };
        // fold -0.0 so equal coordinates compare and print identically
        Ok(Self { lon: lon + 0.0, lat: lat + 0.0 })
    }

    /// Builds a coordinate from any finite longitude by wrapping it into
    /// [-180, 180).
    pub fn wrapping(lon: f64, lat: f64) -> Result<Self, GeoError> {
        if !lon.is_finite() {
            return Err(GeoError::NonFinite { lon, lat });
        }
        Self::new(wrap_lon(lon), lat)
    }

    #[inline]
    pub fn lon(&self) -> f64 {
        self.lon
    }

    #[inline]
    pub fn lat(&self) -> f64 {
        self.lat
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lon, self.lat)
    }
}

/// Wraps a longitude difference (or a longitude) into [-180, 180).
#[inline]
pub fn wrap_lon(delta: f64) -> f64 {
    (delta + 180.0).rem_euclid(360.0) - 180.0
}

/// Axis-aligned lon/lat box. Never wraps across the antimeridian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BoundingBox {
    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Self {
        debug_assert!(min_lon <= max_lon && min_lat <= max_lat);
        Self { min_lon, min_lat, max_lon, max_lat }
    }

    pub fn of_point(c: Coordinate) -> Self {
        Self::new(c.lon, c.lat, c.lon, c.lat)
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
            && self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
    }

    pub fn contains(&self, c: Coordinate) -> bool {
        (self.min_lon..=self.max_lon).contains(&c.lon) && (self.min_lat..=self.max_lat).contains(&c.lat)
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min_lon: self.min_lon.min(other.min_lon),
            min_lat: self.min_lat.min(other.min_lat),
            max_lon: self.max_lon.max(other.max_lon),
            max_lat: self.max_lat.max(other.max_lat),
        }
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.min_lon + self.max_lon) * 0.5, (self.min_lat + self.max_lat) * 0.5)
    }

    /// A great-circle distance that no point of the box (and no point whose
    /// projected distance is measured from `p`) can beat.
    pub fn lower_bound_m(&self, p: Coordinate) -> f64 {
        let dlat = if p.lat < self.min_lat {
            self.min_lat - p.lat
        } else if p.lat > self.max_lat {
            p.lat - self.max_lat
        } else {
            0.0
        };
        let dlon = if (self.min_lon..=self.max_lon).contains(&p.lon) {
            0.0
        } else {
            wrap_lon(self.min_lon - p.lon).abs().min(wrap_lon(self.max_lon - p.lon).abs())
        };
        let lat_bound = dlat.to_radians() * EARTH_RADIUS_M;
        // distance to the nearest bounding meridian's great circle
        let lon_bound = if dlon > 0.0 {
            let s = p.lat.to_radians().cos() * dlon.min(90.0).to_radians().sin();
            s.clamp(0.0, 1.0).asin() * EARTH_RADIUS_M
        } else {
            0.0
        };
        lat_bound.max(lon_bound) * (1.0 - 1e-9)
    }
}

/// An open path of at least two vertices with no consecutive repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Coordinate>,
}

impl Polyline {
    pub fn new(vertices: Vec<Coordinate>) -> Result<Self, GeoError> {
        if vertices.len() < 2 {
            return Err(GeoError::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(GeoError::DuplicateVertex(i + 1));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Coordinate] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Coordinate, Coordinate)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Box covering the line. A line with a segment crossing the antimeridian
    /// gets the full longitude range.
    pub fn bbox(&self) -> BoundingBox {
        let mut bbox = BoundingBox::of_point(self.vertices[0]);
        let mut wraps = false;
        for (a, b) in self.segments() {
            bbox = bbox.union(&BoundingBox::of_point(b));
            wraps |= (b.lon - a.lon).abs() > 180.0;
        }
        if wraps {
            bbox.min_lon = -180.0;
            bbox.max_lon = 180.0;
        }
        bbox
    }

    /// Great-circle length of the whole line.
    pub fn length_m(&self) -> f64 {
        self.segments().map(|(a, b)| haversine_m(a, b)).sum()
    }

    /// Splits every segment longer than `max_m` into equal pieces by linear
    /// interpolation in lon/lat.
    pub fn split_long_segments(&self, max_m: f64) -> Polyline {
        let mut out = vec![self.vertices[0]];
        for (a, b) in self.segments() {
            let len = haversine_m(a, b);
            if len <= max_m {
                out.push(b);
                continue;
            }
            let dlon = wrap_lon(b.lon - a.lon);
            let dlat = b.lat - a.lat;
            let mut pieces = (len / max_m).ceil() as usize;
            loop {
                let pts: Vec<Coordinate> = (1..pieces)
                    .map(|i| {
                        let t = i as f64 / pieces as f64;
                        Coordinate::wrapping(a.lon + dlon * t, a.lat + dlat * t)
                            .expect("interpolated vertex stays in range")
                    })
                    .chain(std::iter::once(b))
                    .collect();
                let mut prev = a;
                let fits = pts.iter().all(|&q| {
                    let ok = haversine_m(prev, q) <= max_m;
                    prev = q;
                    ok
                });
                if fits {
                    out.extend(pts);
                    break;
                }
                pieces += 1;
            }
        }
        Polyline { vertices: out }
    }
}

/// Great-circle distance in meters.
pub fn haversine_m(a: Coordinate, b: Coordinate) -> f64 {
    // abs() on the deltas makes the result bitwise symmetric
    let dphi = (b.lat - a.lat).abs().to_radians();
    let mut dlam = (b.lon - a.lon).abs();
    if dlam > 180.0 {
        dlam = 360.0 - dlam;
    }
    let dlam = dlam.to_radians();
    let s_phi = (dphi * 0.5).sin();
    let s_lam = (dlam * 0.5).sin();
    let h = s_phi * s_phi + a.lat.to_radians().cos() * b.lat.to_radians().cos() * s_lam * s_lam;
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Equirectangular projection centred on a coordinate, in meters.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    origin: Coordinate,
    kx: f64,
}

impl LocalFrame {
    pub fn new(origin: Coordinate) -> Self {
        Self { origin, kx: origin.lat.to_radians().cos() * METERS_PER_DEGREE }
    }

    pub fn project(&self, c: Coordinate) -> (f64, f64) {
        (wrap_lon(c.lon - self.origin.lon) * self.kx, (c.lat - self.origin.lat) * METERS_PER_DEGREE)
    }

    /// Projects a segment so that its far end is reached from its near end
    /// by the short way around, even across the antimeridian.
    pub fn project_segment(&self, a: Coordinate, b: Coordinate) -> ((f64, f64), (f64, f64)) {
        let pa = self.project(a);
        let pb = (pa.0 + wrap_lon(b.lon - a.lon) * self.kx, (b.lat - self.origin.lat) * METERS_PER_DEGREE);
        (pa, pb)
    }

    /// Planar distance from the origin to `c`.
    pub fn distance_m(&self, c: Coordinate) -> f64 {
        let (x, y) = self.project(c);
        x.hypot(y)
    }
}

/// Distance from `p` to segment `ab`.
///
/// Endpoints are measured by great circle; the perpendicular foot, when it
/// falls strictly inside the segment, is measured in the projection centred
/// at `p`. The result is the smaller of the candidates, which keeps it
/// bounded by the endpoint distances.
pub fn point_segment_distance_m(p: Coordinate, a: Coordinate, b: Coordinate) -> f64 {
    let endpoint = haversine_m(p, a).min(haversine_m(p, b));
    if a == b {
        return endpoint;
    }
    let frame = LocalFrame::new(p);
    let ((ax, ay), (bx, by)) = frame.project_segment(a, b);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return endpoint;
    }
    let t = -(ax * dx + ay * dy) / len2;
    if t > 0.0 && t < 1.0 {
        endpoint.min((ax + t * dx).hypot(ay + t * dy))
    } else {
        endpoint
    }
}

pub fn point_polyline_distance_m(p: Coordinate, line: &Polyline) -> f64 {
    line.segments().map(|(a, b)| point_segment_distance_m(p, a, b)).fold(f64::INFINITY, f64::min)
}

/// Length of the parts of `line` inside the disc of radius `r` around
/// `center`, measured in the projection centred there.
pub fn clipped_length_in_radius_m(line: &Polyline, center: Coordinate, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let frame = LocalFrame::new(center);
    let r2 = r * r;
    let mut total = 0.0;
    for (a, b) in line.segments() {
        let ((ax, ay), (bx, by)) = frame.project_segment(a, b);
        let (dx, dy) = (bx - ax, by - ay);
        let qa = dx * dx + dy * dy;
        if qa == 0.0 {
            continue;
        }
        // |A + tD|^2 = r^2
        let qb = 2.0 * (ax * dx + ay * dy);
        let qc = ax * ax + ay * ay - r2;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
        let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
        if t1 > t0 {
            total += (t1 - t0) * qa.sqrt();
        }
    }
    total
}

/// Boxes jointly covering every point within great-circle distance `r` of
/// `center`, and every point within projected distance `r` in the frame
/// centred there. Split in two when the span crosses the antimeridian.
pub fn expand_bbox(center: Coordinate, r: f64) -> Vec<BoundingBox> {
    let dlat = r / BOX_METERS_PER_DEGREE;
    let min_lat = (center.lat - dlat).max(-90.0);
    let max_lat = (center.lat + dlat).min(90.0);
    let full = |min_lat, max_lat| vec![BoundingBox::new(-180.0, min_lat, 180.0, max_lat)];
    if center.lat + dlat >= 90.0 || center.lat - dlat <= -90.0 {
        // the disc reaches a pole
        return full(min_lat, max_lat);
    }
    let cos_lat = center.lat.to_radians().cos();
    let ratio = dlat.to_radians().sin() / cos_lat;
    if ratio.is_nan() || ratio >= 1.0 {
        return full(min_lat, max_lat);
    }
    let dlon = (dlat / cos_lat.max(MIN_COS_LAT)).max(dlat / cos_lat).max(ratio.asin().to_degrees());
    if dlon >= 180.0 {
        return full(min_lat, max_lat);
    }
    let (lo, hi) = (center.lon - dlon, center.lon + dlon);
    if lo < -180.0 {
        vec![BoundingBox::new(lo + 360.0, min_lat, 180.0, max_lat), BoundingBox::new(-180.0, min_lat, hi, max_lat)]
    } else if hi > 180.0 {
        vec![BoundingBox::new(lo, min_lat, 180.0, max_lat), BoundingBox::new(-180.0, min_lat, hi - 360.0, max_lat)]
    } else {
        vec![BoundingBox::new(lo, min_lat, hi, max_lat)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(lon: f64, lat: f64) -> Coordinate {
        Coordinate::new(lon, lat).unwrap()
    }

    #[test]
    fn coordinate_validation() {
        assert!(matches!(Coordinate::new(0.0, 91.0), Err(GeoError::LatitudeOutOfRange(_))));
        assert!(matches!(Coordinate::new(-180.5, 0.0), Err(GeoError::LongitudeOutOfRange(_))));
        assert!(matches!(Coordinate::new(f64::NAN, 0.0), Err(GeoError::NonFinite { .. })));
        assert!(matches!(Coordinate::new(0.0, f64::INFINITY), Err(GeoError::NonFinite { .. })));
        assert_eq!(c(180.0, 5.0).lon(), -180.0);
        assert_eq!(c(-180.0, 5.0).lon(), -180.0);
        assert_eq!(Coordinate::wrapping(190.0, 0.0).unwrap().lon(), -170.0);
    }

    #[test]
    fn haversine_identity_and_degree() {
        assert_eq!(haversine_m(c(0.0, 0.0), c(0.0, 0.0)), 0.0);
        // R * pi / 180
        let degree = 6_371_008.8 * std::f64::consts::PI / 180.0;
        // independent evaluation of 2R asin(sin(0.5 deg)) in double precision
        assert!((haversine_m(c(0.0, 0.0), c(0.0, 1.0)) - 111_195.08).abs() < 0.01);
        assert!((haversine_m(c(0.0, 0.0), c(1.0, 0.0)) - 111_195.08).abs() < 0.01);
        assert!((haversine_m(c(0.0, 0.0), c(0.0, 1.0)) - degree).abs() < 1e-6);
    }

    #[test]
    fn haversine_across_antimeridian() {
        let d = haversine_m(c(179.5, 0.0), c(-179.5, 0.0));
        assert!((d - METERS_PER_DEGREE).abs() < 1e-6);
    }

    #[test]
    fn segment_endpoint_and_perpendicular() {
        let p = c(0.0, 0.0);
        assert_eq!(point_segment_distance_m(p, p, c(1.0, 1.0)), 0.0);
        let d = point_segment_distance_m(p, c(-1.0, 1.0), c(1.0, 1.0));
        assert!((d - 111_194.93).abs() / 111_194.93 < 0.005);
        let a = c(2.0, 1.0);
        let d = point_segment_distance_m(p, a, c(3.0, 1.0));
        assert!((d - haversine_m(p, a)).abs() / haversine_m(p, a) < 0.005);
    }

    #[test]
    fn degenerate_segment_is_point_distance() {
        let p = c(10.0, 20.0);
        let a = c(10.3, 20.4);
        assert_eq!(point_segment_distance_m(p, a, a), haversine_m(p, a));
    }

    #[test]
    fn segment_across_antimeridian_stays_short() {
        // p sits on the far side of the globe; the segment must not wrap
        // through it in projection
        let d = point_segment_distance_m(c(0.0, 0.0), c(179.0, 0.0), c(-179.0, 0.0));
        assert!(d > 170.0 * METERS_PER_DEGREE);
        let d = point_segment_distance_m(c(-180.0, 0.5), c(179.0, 0.0), c(-179.0, 0.0));
        assert!((d - 0.5 * METERS_PER_DEGREE).abs() < 1.0);
    }

    #[test]
    fn polyline_distance_is_min_over_segments() {
        let line = Polyline::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)]).unwrap();
        let p = c(1.2, 0.5);
        let brute = [(c(0.0, 0.0), c(1.0, 0.0)), (c(1.0, 0.0), c(1.0, 1.0))]
            .iter()
            .map(|&(a, b)| point_segment_distance_m(p, a, b))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(point_polyline_distance_m(p, &line), brute);
        assert_eq!(point_polyline_distance_m(c(1.0, 0.0), &line), 0.0);
        let two = Polyline::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(point_polyline_distance_m(p, &two), point_segment_distance_m(p, c(0.0, 0.0), c(1.0, 0.0)));
    }

    #[test]
    fn polyline_validation() {
        assert_eq!(Polyline::new(vec![c(0.0, 0.0)]), Err(GeoError::TooFewVertices(1)));
        assert_eq!(Polyline::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]), Err(GeoError::DuplicateVertex(2)));
    }

    #[test]
    fn clipped_length_cases() {
        let line = Polyline::new(vec![c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(clipped_length_in_radius_m(&line, c(0.0, 0.0), 0.0), 0.0);
        let chord = clipped_length_in_radius_m(&line, c(0.0, 0.0), 1000.0);
        assert!((chord - 2000.0).abs() < 1.0, "{chord}");

        let small = Polyline::new(vec![c(0.0, 0.0), c(0.001, 0.0), c(0.001, 0.001)]).unwrap();
        let full: f64 = small.length_m();
        let inside = clipped_length_in_radius_m(&small, c(0.0005, 0.0005), 5000.0);
        assert!((inside - full).abs() / full < 0.005);

        let far = Polyline::new(vec![c(5.0, 5.0), c(5.1, 5.0)]).unwrap();
        assert_eq!(clipped_length_in_radius_m(&far, c(0.0, 0.0), 1000.0), 0.0);
    }

    #[test]
    fn expand_bbox_cases() {
        let boxes = expand_bbox(c(3.0, 4.0), 0.0);
        assert_eq!(boxes, vec![BoundingBox::new(3.0, 4.0, 3.0, 4.0)]);

        let boxes = expand_bbox(c(0.0, 0.0), 111_194.93);
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        for (got, want) in [(b.min_lon, -1.0), (b.max_lon, 1.0), (b.min_lat, -1.0), (b.max_lat, 1.0)] {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }

        let boxes = expand_bbox(c(179.9, 0.0), 50_000.0);
        assert_eq!(boxes.len(), 2);
        assert_eq!(boxes[0].max_lon, 180.0);
        assert_eq!(boxes[1].min_lon, -180.0);

        let boxes = expand_bbox(c(0.0, 89.9), 50_000.0);
        assert_eq!(boxes, vec![BoundingBox::new(-180.0, 89.9 - 50_000.0 / BOX_METERS_PER_DEGREE, 180.0, 90.0)]);
    }

    #[test]
    fn split_long_segments_bounds_pieces() {
        let line = Polyline::new(vec![c(0.0, 0.0), c(3.0, 0.0), c(3.0, 0.1)]).unwrap();
        let split = line.split_long_segments(MAX_SEGMENT_M);
        assert!(split.segments().all(|(a, b)| haversine_m(a, b) <= MAX_SEGMENT_M));
        assert_eq!(split.vertices().first(), line.vertices().first());
        assert_eq!(split.vertices().last(), line.vertices().last());
        assert!((split.length_m() - line.length_m()).abs() < 1e-3);

        let wrap = Polyline::new(vec![c(179.0, 0.0), c(-179.0, 0.0)]).unwrap();
        let split = wrap.split_long_segments(MAX_SEGMENT_M);
        assert!(split.segments().all(|(a, b)| haversine_m(a, b) <= MAX_SEGMENT_M));
        assert!(split.vertices().iter().all(|v| v.lon().abs() >= 179.0 || v.lon() == -180.0));
    }

    #[test]
    fn wrapping_polyline_bbox_spans_all_longitudes() {
        let wrap = Polyline::new(vec![c(179.5, 0.0), c(-179.5, 1.0)]).unwrap();
        let b = wrap.bbox();
        assert_eq!((b.min_lon, b.max_lon), (-180.0, 180.0));
        assert_eq!((b.min_lat, b.max_lat), (0.0, 1.0));
    }

    #[test]
    fn lower_bound_never_exceeds_distance() {
        let b = BoundingBox::new(10.0, 10.0, 11.0, 11.0);
        for &(lon, lat) in &[(0.0, 0.0), (10.5, 20.0), (-170.0, 10.5), (12.0, 60.0), (10.5, 10.5)] {
            let p = c(lon, lat);
            let corners = [c(10.0, 10.0), c(11.0, 11.0), c(10.0, 11.0), c(11.0, 10.0), c(10.5, 10.0)];
            let min = corners.iter().map(|&q| haversine_m(p, q)).fold(f64::INFINITY, f64::min);
            assert!(b.lower_bound_m(p) <= min, "{p}");
        }
        assert_eq!(b.lower_bound_m(c(10.5, 10.5)), 0.0);
    }
}

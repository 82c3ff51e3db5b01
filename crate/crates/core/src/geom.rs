//! Polygonal planar domains with holes: membership queries, boundary
//! distances, the boundary-aware effective distance, and segment clipping.
//!
//! A [`Domain`] is one outer loop minus zero or more hole loops. Curved
//! regions (discs, annuli) are represented by regular N-gons; distances to
//! such a boundary carry an O(1/N^2) discretization error.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A point of the plane. Coordinates must be finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite(), "non-finite coordinate");
        Point2 { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        // Plain sqrt: coordinates are O(domain diameter), so the hypot
        // overflow guards would only cost time here.
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    fn sub(self, other: Point2) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// Closed straight segment with distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    a: Point2,
    b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if a == b {
            return Err(Error::ZeroLengthSegment(a.x, a.y));
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> Point2 {
        self.a
    }

    pub fn b(&self) -> Point2 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    /// Point at parameter `t` in `[0, 1]`.
    pub fn at(&self, t: f64) -> Point2 {
        Point2::new(
            self.a.x + (self.b.x - self.a.x) * t,
            self.a.y + (self.b.y - self.a.y) * t,
        )
    }
}

/// Distance from `p` to the closed segment `[a, b]`, together with the
/// parameter of the closest point.
fn point_segment_dist(p: Point2, a: Point2, b: Point2) -> (f64, f64) {
    let ab = b.sub(a);
    let len_sq = dot(ab, ab);
    if len_sq == 0.0 {
        return (p.dist(a), 0.0);
    }
    let t = (dot(p.sub(a), ab) / len_sq).clamp(0.0, 1.0);
    let proj = Point2::new(a.x + ab.0 * t, a.y + ab.1 * t);
    (p.dist(proj), t)
}

/// Simple closed polygonal loop.
///
/// Construction rejects loops with fewer than three vertices, repeated
/// consecutive vertices, and self-intersections. Orientation is preserved as
/// given; [`Domain`] normalizes outer loops counterclockwise and holes
/// clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        for p in &vertices {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidPolygon("non-finite vertex".into()));
            }
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidPolygon(format!(
                    "repeated consecutive vertex at index {i}"
                )));
            }
        }
        let poly = Polygon { vertices };
        if poly.signed_area().abs() < f64::MIN_POSITIVE {
            return Err(Error::InvalidPolygon("degenerate (zero area) loop".into()));
        }
        if poly.self_intersects() {
            return Err(Error::InvalidPolygon("self-intersecting loop".into()));
        }
        Ok(poly)
    }

    /// Regular n-gon inscribed in the circle of radius `r` around `center`,
    /// counterclockwise, first vertex at angle 0.
    pub fn regular_ngon(center: Point2, r: f64, n: usize) -> Result<Self> {
        if n < 3 || r <= 0.0 {
            return Err(Error::InvalidPolygon(format!(
                "regular_ngon needs n >= 3 and r > 0 (n = {n}, r = {r})"
            )));
        }
        let verts = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::new(center.x + r * th.cos(), center.y + r * th.sin())
            })
            .collect();
        Polygon::new(verts)
    }

    /// Axis-aligned rectangle, counterclockwise.
    pub fn rectangle(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        Polygon::new(vec![
            Point2::new(xmin, ymin),
            Point2::new(xmax, ymin),
            Point2::new(xmax, ymax),
            Point2::new(xmin, ymax),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn num_edges(&self) -> usize {
        self.vertices.len()
    }

    /// Shoelace area; positive for counterclockwise loops.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            acc += p.x * q.y - q.x * p.y;
        }
        0.5 * acc
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    pub fn reversed(&self) -> Polygon {
        let mut v = self.vertices.clone();
        v.reverse();
        Polygon { vertices: v }
    }

    /// Even-odd crossing test. Points on the boundary are not reliably
    /// classified; callers resolve those with a distance tolerance first.
    pub fn contains_point(&self, p: Point2) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if ((vi.y > p.y) != (vj.y > p.y))
                && p.x < (vj.x - vi.x) * (p.y - vi.y) / (vj.y - vi.y) + vi.x
            {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    fn bbox(&self) -> BBox {
        let mut b = BBox {
            xmin: f64::INFINITY,
            xmax: f64::NEG_INFINITY,
            ymin: f64::INFINITY,
            ymax: f64::NEG_INFINITY,
        };
        for p in &self.vertices {
            b.xmin = b.xmin.min(p.x);
            b.xmax = b.xmax.max(p.x);
            b.ymin = b.ymin.min(p.y);
            b.ymax = b.ymax.max(p.y);
        }
        b
    }

    fn self_intersects(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a1, a2) = self.edge(i);
            for j in (i + 1)..n {
                // Skip adjacent edges (they share a vertex by construction).
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (b1, b2) = self.edge(j);
                if segments_properly_cross(a1, a2, b1, b2) {
                    return true;
                }
            }
        }
        false
    }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    cross(b.sub(a), c.sub(a))
}

/// True when the open interiors of the two segments cross, or when they
/// overlap collinearly over more than a point.
fn segments_properly_cross(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    // Collinear overlap along non-adjacent edges also breaks simplicity.
    if d1 == 0.0 && d2 == 0.0 && d3 == 0.0 && d4 == 0.0 {
        let (lo_a, hi_a) = ordered_span(a1, a2);
        let (lo_b, hi_b) = ordered_span(b1, b2);
        return lo_a.max(lo_b) < hi_a.min(hi_b);
    }
    false
}

fn ordered_span(p: Point2, q: Point2) -> (f64, f64) {
    // Project on the dominant axis for a 1-D overlap test.
    if (q.x - p.x).abs() >= (q.y - p.y).abs() {
        (p.x.min(q.x), p.x.max(q.x))
    } else {
        (p.y.min(q.y), p.y.max(q.y))
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BBox {
    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// Classification of a point against a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

/// Which of the two candidates realizes the effective distance: the straight
/// segment, or escaping through the boundary from both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistRoute {
    Direct,
    ViaBoundary,
}

/// Fraction of the domain diameter used as the default on-boundary tolerance.
pub const DEFAULT_EPS_GEOM_FACTOR: f64 = 1e-9;

/// Bounded planar region: one outer loop minus disjoint hole loops.
///
/// Immutable after construction; all queries are pure.
#[derive(Debug, Clone)]
pub struct Domain {
    outer: Polygon,
    holes: Vec<Polygon>,
    eps_geom: f64,
    bbox: BBox,
    diameter: f64,
    /// All boundary edges, outer loop first, then holes in order.
    edges: Vec<(Point2, Point2)>,
}

impl Domain {
    /// Builds a domain, normalizing orientation (outer counterclockwise,
    /// holes clockwise) and validating that holes lie strictly inside the
    /// outer loop and are pairwise disjoint. With disjoint simply connected
    /// holes strictly inside the outer loop the region is connected.
    pub fn new(outer: Polygon, holes: Vec<Polygon>, eps_geom: Option<f64>) -> Result<Self> {
        let outer = if outer.is_ccw() {
            outer
        } else {
            outer.reversed()
        };
        let holes: Vec<Polygon> = holes
            .into_iter()
            .map(|h| if h.is_ccw() { h.reversed() } else { h })
            .collect();

        let bbox = outer.bbox();
        let diameter = bbox.diagonal();
        let eps_geom = match eps_geom {
            Some(e) => {
                if e.is_nan() || e <= 0.0 || !e.is_finite() {
                    return Err(Error::InvalidDomain(format!(
                        "eps_geom must be positive and finite, got {e}"
                    )));
                }
                e
            }
            None => DEFAULT_EPS_GEOM_FACTOR * diameter,
        };

        for (hi, h) in holes.iter().enumerate() {
            for v in h.vertices() {
                if !outer.contains_point(*v) {
                    return Err(Error::InvalidDomain(format!(
                        "hole {hi} is not strictly inside the outer loop"
                    )));
                }
            }
            for i in 0..h.num_edges() {
                let (a, b) = h.edge(i);
                for j in 0..outer.num_edges() {
                    let (c, d) = outer.edge(j);
                    if segments_properly_cross(a, b, c, d) {
                        return Err(Error::InvalidDomain(format!(
                            "hole {hi} crosses the outer loop"
                        )));
                    }
                }
            }
        }
        for i in 0..holes.len() {
            for j in (i + 1)..holes.len() {
                if holes_overlap(&holes[i], &holes[j]) {
                    return Err(Error::InvalidDomain(format!("holes {i} and {j} overlap")));
                }
            }
        }

        let mut edges = Vec::new();
        for i in 0..outer.num_edges() {
            edges.push(outer.edge(i));
        }
        for h in &holes {
            for i in 0..h.num_edges() {
                edges.push(h.edge(i));
            }
        }

        Ok(Domain {
            outer,
            holes,
            eps_geom,
            bbox,
            diameter,
            edges,
        })
    }

    /// Unit square `[0, 1]^2`.
    pub fn unit_square() -> Domain {
        Domain::new(
            Polygon::rectangle(0.0, 0.0, 1.0, 1.0).unwrap(),
            vec![],
            None,
        )
        .unwrap()
    }

    /// Disc of radius `r` centered at the origin at the default boundary
    /// resolution (a 720-gon; distance quantities then carry an O(1/N^2)
    /// error of about 1e-5 relative).
    pub fn disc(r: f64) -> Result<Domain> {
        Domain::ngon_disc(r, 720)
    }

    /// Regular-polygon disc of radius `r` centered at the origin.
    pub fn ngon_disc(r: f64, n: usize) -> Result<Domain> {
        Domain::new(
            Polygon::regular_ngon(Point2::new(0.0, 0.0), r, n)?,
            vec![],
            None,
        )
    }

    pub fn eps_geom(&self) -> f64 {
        self.eps_geom
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn holes(&self) -> &[Polygon] {
        &self.holes
    }

    /// Area of the region (outer minus holes).
    pub fn area(&self) -> f64 {
        let mut a = self.outer.signed_area().abs();
        for h in &self.holes {
            a -= h.signed_area().abs();
        }
        a
    }

    /// The loop whose interior contains all the others.
    pub fn external_boundary(&self) -> &Polygon {
        &self.outer
    }

    /// Boundary edges, outer loop first, then hole loops in order.
    pub fn boundary_edges(&self) -> &[(Point2, Point2)] {
        &self.edges
    }

    fn raw_boundary_dist(&self, p: Point2) -> f64 {
        let mut best = f64::INFINITY;
        for &(a, b) in &self.edges {
            let (d, _) = point_segment_dist(p, a, b);
            if d < best {
                best = d;
            }
        }
        best
    }

    /// Membership of `p`: within `eps_geom` of any boundary edge counts as
    /// boundary, otherwise even-odd against the outer loop minus the holes.
    pub fn contains(&self, p: Point2) -> Membership {
        if self.raw_boundary_dist(p) <= self.eps_geom {
            return Membership::Boundary;
        }
        let inside =
            self.outer.contains_point(p) && !self.holes.iter().any(|h| h.contains_point(p));
        if inside {
            Membership::Interior
        } else {
            Membership::Exterior
        }
    }

    /// Distance from `p` to the boundary. Errors on exterior points.
    pub fn dist_to_boundary(&self, p: Point2) -> Result<f64> {
        let d = self.raw_boundary_dist(p);
        if d > self.eps_geom {
            let inside =
                self.outer.contains_point(p) && !self.holes.iter().any(|h| h.contains_point(p));
            if !inside {
                return Err(Error::ExteriorPoint(p.x, p.y));
            }
        }
        Ok(d)
    }

    /// Closest boundary point to `p`. Deterministic tie-break: smallest edge
    /// index (outer loop first, then holes), then smallest parameter along
    /// that edge. Distances within `1e-12 *` diameter count as tied, so
    /// rounding noise cannot override the index order.
    pub fn nearest_boundary_point(&self, p: Point2) -> Point2 {
        let tie = 1e-12 * self.diameter;
        let mut best = f64::INFINITY;
        let mut best_pt = self.edges[0].0;
        for &(a, b) in &self.edges {
            let (d, t) = point_segment_dist(p, a, b);
            if d < best - tie {
                best = d;
                best_pt = Segment { a, b }.at(t);
            }
        }
        best_pt
    }

    /// Effective transport distance between `p` and `q`: the minimum of the
    /// straight-line distance and the sum of the two boundary distances (the
    /// boundary acts as a free sink). Ties resolve to `ViaBoundary`.
    ///
    /// When the direct candidate wins, segment containment in the closure is
    /// verified; on failure (only reachable through floating-point
    /// borderline cases, since a straight segment leaving the closure forces
    /// the boundary route to be no longer) the result is demoted to the
    /// boundary route and its value.
    pub fn effective_distance(&self, p: Point2, q: Point2) -> Result<(f64, DistRoute)> {
        let dp = self.dist_to_boundary(p)?;
        let dq = self.dist_to_boundary(q)?;
        if p == q {
            return Err(Error::InvalidArgument(
                "effective_distance requires distinct points".into(),
            ));
        }
        let direct = p.dist(q);
        let via = dp + dq;
        if direct < via {
            if let Ok(s) = Segment::new(p, q) {
                if self.segment_in_closure(&s) {
                    return Ok((direct, DistRoute::Direct));
                }
            }
            return Ok((via, DistRoute::ViaBoundary));
        }
        Ok((via, DistRoute::ViaBoundary))
    }

    /// Intersection parameters of `s` with every boundary edge, including
    /// collinear-overlap endpoints, merged with `{0, 1}`, sorted and deduped.
    fn crossing_params(&self, s: &Segment) -> Vec<f64> {
        let mut ts = vec![0.0, 1.0];
        let d1 = s.b.sub(s.a);
        let len = s.length();
        for &(ea, eb) in &self.edges {
            let d2 = eb.sub(ea);
            let denom = cross(d1, d2);
            let w = ea.sub(s.a);
            // Scale-aware parallelism threshold.
            let scale = len * ea.dist(eb);
            if denom.abs() > 1e-14 * scale.max(f64::MIN_POSITIVE) {
                let t = cross(w, d2) / denom;
                let u = cross(w, d1) / denom;
                if (-1e-12..=1.0 + 1e-12).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
                    ts.push(t.clamp(0.0, 1.0));
                }
            } else if cross(w, d1).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                // Collinear: project the edge endpoints onto s.
                let len_sq = dot(d1, d1);
                for e in [ea, eb] {
                    let t = dot(e.sub(s.a), d1) / len_sq;
                    if (-1e-12..=1.0 + 1e-12).contains(&t) {
                        ts.push(t.clamp(0.0, 1.0));
                    }
                }
            }
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        ts
    }

    /// True iff the segment minus its endpoints never leaves the closure,
    /// decided by clipping against the boundary edges (exact up to
    /// `eps_geom`).
    pub fn segment_in_closure(&self, s: &Segment) -> bool {
        let ts = self.crossing_params(s);
        for w in ts.windows(2) {
            let mid = s.at(0.5 * (w[0] + w[1]));
            if self.contains(mid) == Membership::Exterior {
                return false;
            }
        }
        true
    }

    /// Length of `s` intersected with the open region, obtained by summing
    /// the strictly interior sub-intervals of the clipped segment.
    pub fn segment_length_inside(&self, s: &Segment) -> f64 {
        let ts = self.crossing_params(s);
        let len = s.length();
        let mut total = 0.0;
        for w in ts.windows(2) {
            let mid = s.at(0.5 * (w[0] + w[1]));
            if self.contains(mid) == Membership::Interior {
                total += (w[1] - w[0]) * len;
            }
        }
        total
    }
}

fn holes_overlap(a: &Polygon, b: &Polygon) -> bool {
    for i in 0..a.num_edges() {
        let (p, q) = a.edge(i);
        for j in 0..b.num_edges() {
            let (r, s) = b.edge(j);
            if segments_properly_cross(p, q, r, s) {
                return true;
            }
        }
    }
    // No edge crossings: containment would still overlap.
    a.contains_point(b.vertices()[0]) || b.contains_point(a.vertices()[0])
}

//! Planar geometry in millimeters: polygon area, containment, distance and
//! overlap. Polygons are plain vertex lists without a repeated closing point.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::units::{AreaQuantity, LengthQuantity};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("{0}")]
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn dist(self, o: Self) -> T {
        self.sub(o).dot(self.sub(o)).sqrt()
    }
}

/// Axis-aligned 3D box, `min` and `max` corners in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T> {
    pub min: [T; 3],
    pub max: [T; 3],
}

impl<T: Scalar> Aabb<T> {
    /// Build from two opposite corners in any order.
    pub fn from_corners(a: [T; 3], b: [T; 3]) -> Self {
        let mut min = a;
        let mut max = b;
        for i in 0..3 {
            if min[i] > max[i] {
                std::mem::swap(&mut min[i], &mut max[i]);
            }
        }
        Self { min, max }
    }

    pub fn extent(&self, axis: usize) -> T {
        self.max[axis] - self.min[axis]
    }

    /// Smaller of the two horizontal dimensions.
    pub fn plan_width(&self) -> T {
        self.extent(0).min(self.extent(1))
    }

    pub fn plan_center(&self) -> Point2<T> {
        let two = T::int(2);
        Point2::new(
            (self.min[0] + self.max[0]) / two,
            (self.min[1] + self.max[1]) / two,
        )
    }

    /// Plan rectangle, counter-clockwise.
    pub fn plan_rect(&self) -> Vec<Point2<T>> {
        vec![
            Point2::new(self.min[0], self.min[1]),
            Point2::new(self.max[0], self.min[1]),
            Point2::new(self.max[0], self.max[1]),
            Point2::new(self.min[0], self.max[1]),
        ]
    }
}

fn edges<T: Scalar>(poly: &[Point2<T>]) -> impl Iterator<Item = (Point2<T>, Point2<T>)> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

/// Shoelace sum; positive for counter-clockwise winding.
pub fn signed_area<T: Scalar>(poly: &[Point2<T>]) -> T {
    let twice = edges(poly).fold(T::zero(), |acc, (a, b)| acc + a.cross(b));
    twice / T::int(2)
}

pub fn polygon_area_mm2<T: Scalar>(poly: &[Point2<T>]) -> Result<T, GeometryError> {
    if poly.len() < 3 {
        return Err(GeometryError::TooFewVertices(poly.len()));
    }
    Ok(signed_area(poly).abs())
}

/// Footprint area in square feet.
pub fn polygon_area<T: Scalar>(poly: &[Point2<T>]) -> Result<AreaQuantity<T>, GeometryError> {
    polygon_area_mm2(poly).map(AreaQuantity::from_mm2)
}

pub fn centroid<T: Scalar>(poly: &[Point2<T>]) -> Point2<T> {
    let a = signed_area(poly);
    if a == T::zero() {
        let n = T::int(poly.len() as i64);
        let sx = poly.iter().fold(T::zero(), |s, p| s + p.x);
        let sy = poly.iter().fold(T::zero(), |s, p| s + p.y);
        return Point2::new(sx / n, sy / n);
    }
    let (mut cx, mut cy) = (T::zero(), T::zero());
    for (p, q) in edges(poly) {
        let c = p.cross(q);
        cx = cx + (p.x + q.x) * c;
        cy = cy + (p.y + q.y) * c;
    }
    let six_a = T::int(6) * a;
    Point2::new(cx / six_a, cy / six_a)
}

/// Reorder to counter-clockwise winding in place.
pub fn normalize_ccw<T: Scalar>(poly: &mut [Point2<T>]) {
    if signed_area(poly) < T::zero() {
        poly.reverse();
    }
}

/// Check the polygon is a usable footprint: at least three finite vertices,
/// non-zero area, and no two non-adjacent edges touching.
pub fn validate_simple<T: Scalar>(poly: &[Point2<T>]) -> Result<(), GeometryError> {
    let n = poly.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices(n));
    }
    if poly.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if signed_area(poly) == T::zero() {
        return Err(GeometryError::ZeroArea);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(GeometryError::SelfIntersecting(i, j));
            }
        }
    }
    Ok(())
}

fn orient<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    b.sub(a).cross(c.sub(a))
}

fn sign<T: Scalar>(v: T) -> i8 {
    if v > T::zero() {
        1
    } else if v < T::zero() {
        -1
    } else {
        0
    }
}

fn on_segment<T: Scalar>(a: Point2<T>, b: Point2<T>, p: Point2<T>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection, touching included.
pub fn segments_intersect<T: Scalar>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    d: Point2<T>,
) -> bool {
    let d1 = sign(orient(c, d, a));
    let d2 = sign(orient(c, d, b));
    let d3 = sign(orient(a, b, c));
    let d4 = sign(orient(a, b, d));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(c, d, a))
        || (d2 == 0 && on_segment(c, d, b))
        || (d3 == 0 && on_segment(a, b, c))
        || (d4 == 0 && on_segment(a, b, d))
}

/// Intersection where the segments cross at a single interior point of both.
fn segments_cross_properly<T: Scalar>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    d: Point2<T>,
    eps: T,
) -> bool {
    let scale_ab = a.dist(b);
    let scale_cd = c.dist(d);
    let o1 = orient(c, d, a) / scale_cd;
    let o2 = orient(c, d, b) / scale_cd;
    let o3 = orient(a, b, c) / scale_ab;
    let o4 = orient(a, b, d) / scale_ab;
    ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps))
        && ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps))
}

pub fn point_segment_distance<T: Scalar>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == T::zero() {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).max(T::zero()).min(T::one());
    let proj = Point2::new(a.x + ab.x * t, a.y + ab.y * t);
    p.dist(proj)
}

/// Distance from `p` to the polygon boundary.
pub fn boundary_distance<T: Scalar>(p: Point2<T>, poly: &[Point2<T>]) -> T {
    edges(poly).fold(T::infinity(), |m, (a, b)| {
        m.min(point_segment_distance(p, a, b))
    })
}

/// Point-in-polygon by ray casting; points within `eps` of the boundary
/// count as inside.
pub fn point_in_polygon<T: Scalar>(p: Point2<T>, poly: &[Point2<T>], eps: T) -> bool {
    if boundary_distance(p, poly) <= eps {
        return true;
    }
    let mut inside = false;
    for (a, b) in edges(poly) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Minimum boundary-to-boundary distance in millimeters; zero when the
/// polygons touch, cross, or one lies inside the other.
pub fn polygon_distance_mm<T: Scalar>(
    a: &[Point2<T>],
    b: &[Point2<T>],
) -> Result<T, GeometryError> {
    for poly in [a, b] {
        if poly.len() < 3 {
            return Err(GeometryError::TooFewVertices(poly.len()));
        }
    }
    for (p, q) in edges(a) {
        for (r, s) in edges(b) {
            if segments_intersect(p, q, r, s) {
                return Ok(T::zero());
            }
        }
    }
    if point_in_polygon(a[0], b, T::zero()) || point_in_polygon(b[0], a, T::zero()) {
        return Ok(T::zero());
    }
    // Disjoint segments attain their minimum at an endpoint of one of them.
    let from_a = a
        .iter()
        .fold(T::infinity(), |m, &p| m.min(boundary_distance(p, b)));
    let from_b = b
        .iter()
        .fold(T::infinity(), |m, &p| m.min(boundary_distance(p, a)));
    Ok(from_a.min(from_b))
}

pub fn polygon_distance<T: Scalar>(
    a: &[Point2<T>],
    b: &[Point2<T>],
) -> Result<LengthQuantity<T>, GeometryError> {
    polygon_distance_mm(a, b).map(LengthQuantity::mm)
}

/// Convex hull by monotone chain, counter-clockwise, collinear points dropped.
pub fn convex_hull<T: Scalar>(points: &[Point2<T>]) -> Vec<Point2<T>> {
    let mut pts: Vec<Point2<T>> = points.to_vec();
    pts.sort_by(|p, q| {
        p.x.partial_cmp(&q.x)
            .unwrap()
            .then(p.y.partial_cmp(&q.y).unwrap())
    });
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2<T>> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2<T>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero()
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Separating-axis overlap test for convex polygons. Shapes that only touch,
/// or overlap by no more than `eps`, do not count.
pub fn convex_overlap<T: Scalar>(a: &[Point2<T>], b: &[Point2<T>], eps: T) -> bool {
    for poly in [a, b] {
        for (p, q) in edges(poly) {
            let e = q.sub(p);
            let len = e.dot(e).sqrt();
            if len == T::zero() {
                continue;
            }
            let axis = Point2::new(-e.y / len, e.x / len);
            let project = |s: &[Point2<T>]| {
                s.iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
                        let d = v.dot(axis);
                        (lo.min(d), hi.max(d))
                    })
            };
            let (alo, ahi) = project(a);
            let (blo, bhi) = project(b);
            if ahi - blo <= eps || bhi - alo <= eps {
                return false;
            }
        }
    }
    true
}

/// True when `inner` lies within `outer`: every vertex inside (boundary
/// included) and no edge of `outer` properly crossing an edge of `inner`.
pub fn polygon_within<T: Scalar>(inner: &[Point2<T>], outer: &[Point2<T>], eps: T) -> bool {
    if !inner.iter().all(|&p| point_in_polygon(p, outer, eps)) {
        return false;
    }
    for (p, q) in edges(inner) {
        for (r, s) in edges(outer) {
            if segments_cross_properly(p, q, r, s, eps) {
                return false;
            }
        }
    }
    true
}

/// Rectangle directly in front of a plan box: starts at the face the
/// `facing` vector points out of, extends `depth` along it, and is as wide
/// as the box measured across the facing direction.
pub fn front_rectangle<T: Scalar>(bbox: &Aabb<T>, facing: Point2<T>, depth: T) -> Vec<Point2<T>> {
    let two = T::int(2);
    let c = bbox.plan_center();
    let (hx, hy) = (bbox.extent(0) / two, bbox.extent(1) / two);
    let side = Point2::new(-facing.y, facing.x);
    let half_depth = hx * facing.x.abs() + hy * facing.y.abs();
    let half_width = hx * side.x.abs() + hy * side.y.abs();
    let front = Point2::new(c.x + facing.x * half_depth, c.y + facing.y * half_depth);
    let far = Point2::new(front.x + facing.x * depth, front.y + facing.y * depth);
    let mut rect = vec![
        Point2::new(front.x - side.x * half_width, front.y - side.y * half_width),
        Point2::new(far.x - side.x * half_width, far.y - side.y * half_width),
        Point2::new(far.x + side.x * half_width, far.y + side.y * half_width),
        Point2::new(front.x + side.x * half_width, front.y + side.y * half_width),
    ];
    normalize_ccw(&mut rect);
    rect
}

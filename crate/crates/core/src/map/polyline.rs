//! Arc-length parameterised polylines with a smooth Frenet frame.
//!
//! Tangents live on the vertices (central differences) and are blended
//! linearly along each segment, so the frame `c(s) + d * n(s)` is continuous
//! and the projection below is its exact inverse for moderate offsets.

use crate::error::{Error, Result};
use crate::geometry::Vec2;

const CHUNK: usize = 16;
const MIN_SPACING: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Chunk {
    first_segment: usize,
    end_segment: usize,
    min: Vec2,
    max: Vec2,
}

impl Chunk {
    fn distance_sq_lower_bound(&self, p: Vec2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx * dx + dy * dy
    }
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc-length of the foot point, clamped to `[0, length]`.
    pub s: f64,
    /// Signed lateral offset, left positive.
    pub d: f64,
    /// Longitudinal residual past either end; zero for interior feet.
    pub overshoot: f64,
    /// Heading of the local tangent.
    pub heading: f64,
}

impl Projection {
    /// Euclidean distance from the point to its foot.
    pub fn distance(&self) -> f64 {
        self.d.hypot(self.overshoot)
    }
}

#[derive(Debug, Clone)]
pub struct Polyline {
    points: Vec<Vec2>,
    stations: Vec<f64>,
    tangents: Vec<Vec2>,
    chunks: Vec<Chunk>,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicates. Needs at least two
    /// distinct points.
    pub fn new(points: impl IntoIterator<Item = Vec2>) -> Result<Self> {
        let mut pts: Vec<Vec2> = Vec::new();
        for p in points {
            if !p.is_finite() {
                return Err(Error::Geometry("non-finite polyline point".into()));
            }
            if pts.last().is_none_or(|q| q.distance(p) > MIN_SPACING) {
                pts.push(p);
            }
        }
        if pts.len() < 2 {
            return Err(Error::Geometry(
                "polyline needs at least two distinct points".into(),
            ));
        }
        let mut stations = Vec::with_capacity(pts.len());
        stations.push(0.0);
        for w in pts.windows(2) {
            let last = *stations.last().unwrap();
            stations.push(last + w[0].distance(w[1]));
        }
        let n = pts.len();
        let tangents = (0..n)
            .map(|i| {
                let a = pts[i.saturating_sub(1)];
                let b = pts[(i + 1).min(n - 1)];
                let t = (b - a).normalized();
                if t.norm() > 0.5 {
                    t
                } else {
                    (pts[(i + 1).min(n - 1)] - pts[i]).normalized()
                }
            })
            .collect();
        let segments = n - 1;
        let chunks = (0..segments)
            .step_by(CHUNK)
            .map(|first| {
                let end = (first + CHUNK).min(segments);
                let mut min = pts[first];
                let mut max = pts[first];
                for p in &pts[first..=end] {
                    min = Vec2::new(min.x.min(p.x), min.y.min(p.y));
                    max = Vec2::new(max.x.max(p.x), max.y.max(p.y));
                }
                Chunk {
                    first_segment: first,
                    end_segment: end,
                    min,
                    max,
                }
            })
            .collect();
        Ok(Self {
            points: pts,
            stations,
            tangents,
            chunks,
        })
    }

    /// Builds a polyline with vertices at most `max_spacing` apart, inserting
    /// evenly spaced points on longer segments.
    pub fn resampled(points: &[Vec2], max_spacing: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(points.len());
        for (i, &p) in points.iter().enumerate() {
            if i > 0 {
                let prev = points[i - 1];
                let pieces = (prev.distance(p) / max_spacing).ceil() as usize;
                for k in 1..pieces {
                    out.push(prev.lerp(p, k as f64 / pieces as f64));
                }
            }
            out.push(p);
        }
        Self::new(out)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    pub fn length(&self) -> f64 {
        *self.stations.last().unwrap()
    }

    pub fn first(&self) -> Vec2 {
        self.points[0]
    }

    pub fn last(&self) -> Vec2 {
        *self.points.last().unwrap()
    }

    /// Segment index and fraction for a (clamped) arc-length.
    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length());
        let i = match self
            .stations
            .binary_search_by(|probe| probe.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
        .min(self.points.len() - 2);
        let len = self.stations[i + 1] - self.stations[i];
        (i, ((s - self.stations[i]) / len).clamp(0.0, 1.0))
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        let (i, t) = self.locate(s);
        self.points[i].lerp(self.points[i + 1], t)
    }

    pub fn tangent_at(&self, s: f64) -> Vec2 {
        let (i, t) = self.locate(s);
        self.tangents[i].lerp(self.tangents[i + 1], t).normalized()
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.tangent_at(s).heading()
    }

    /// Point, unit tangent and unit left normal at `s`.
    pub fn frame_at(&self, s: f64) -> (Vec2, Vec2, Vec2) {
        let (i, t) = self.locate(s);
        let tangent = self.tangents[i].lerp(self.tangents[i + 1], t).normalized();
        (
            self.points[i].lerp(self.points[i + 1], t),
            tangent,
            tangent.perp(),
        )
    }

    /// `centerline(s) + d * normal(s)`.
    pub fn offset_point(&self, s: f64, d: f64) -> Vec2 {
        let (c, _, n) = self.frame_at(s);
        c + n * d
    }

    /// Curvature estimated from the heading change over a +-`half_window` m window.
    pub fn curvature_at(&self, s: f64, half_window: f64) -> f64 {
        let lo = (s - half_window).max(0.0);
        let hi = (s + half_window).min(self.length());
        if hi - lo < 1e-9 {
            return 0.0;
        }
        let dh = crate::geometry::wrap_angle(self.heading_at(hi) - self.heading_at(lo));
        dh / (hi - lo)
    }

    /// Index of the closest segment and the squared distance to it.
    fn nearest_segment(&self, p: Vec2) -> (usize, f64, f64) {
        let mut order: Vec<(f64, usize)> = self
            .chunks
            .iter()
            .enumerate()
            .map(|(i, c)| (c.distance_sq_lower_bound(p), i))
            .collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut best = (0, 0.0, f64::INFINITY);
        for (bound, ci) in order {
            if bound > best.2 {
                break;
            }
            let chunk = &self.chunks[ci];
            for i in chunk.first_segment..chunk.end_segment {
                let a = self.points[i];
                let ab = self.points[i + 1] - a;
                let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
                let dist = (a + ab * t - p).norm_sq();
                if dist < best.2 {
                    best = (i, t, dist);
                }
            }
        }
        best
    }

    /// Projects `p` onto the polyline. Always defined; `s` is clamped to the
    /// polyline's extent.
    pub fn project(&self, p: Vec2) -> Projection {
        let (i, t, _) = self.nearest_segment(p);
        let length = self.length();
        let mut s = self.stations[i] + t * (self.stations[i + 1] - self.stations[i]);
        for _ in 0..12 {
            let (c, tangent, _) = self.frame_at(s);
            let step = (p - c).dot(tangent);
            let next = (s + step).clamp(0.0, length);
            let moved = (next - s).abs();
            s = next;
            if moved < 1e-10 {
                break;
            }
        }
        let (c, tangent, normal) = self.frame_at(s);
        let rel = p - c;
        Projection {
            s,
            d: rel.dot(normal),
            overshoot: rel.dot(tangent),
            heading: tangent.heading(),
        }
    }

    /// Appends the vertices of `next`, skipping a leading vertex that
    /// coincides with this polyline's end.
    pub fn concat(&self, next: &Polyline) -> Result<Polyline> {
        Polyline::new(
            self.points
                .iter()
                .chain(next.points.iter())
                .copied(),
        )
    }

    /// Extends the polyline straight along its final tangent.
    pub fn extended(&self, extra: f64) -> Result<Polyline> {
        let end = self.last();
        let dir = (end - self.points[self.points.len() - 2]).normalized();
        Polyline::new(self.points.iter().copied().chain([end + dir * extra]))
    }
}

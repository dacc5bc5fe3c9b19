use crate::error::{Error, Result};
use crate::geometry::Vec2;

const BOUNDARY_EPS: f64 = 1e-9;

/// A simple polygon with a horizontal-strip edge index for fast
/// point-in-polygon queries.
#[derive(Debug, Clone)]
pub struct Polygon {
    vertices: Vec<Vec2>,
    min: Vec2,
    max: Vec2,
    strip_height: f64,
    strips: Vec<Vec<usize>>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry("polygon needs at least three vertices".into()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite polygon vertex".into()));
        }
        let mut min = vertices[0];
        let mut max = vertices[0];
        for v in &vertices {
            min = Vec2::new(min.x.min(v.x), min.y.min(v.y));
            max = Vec2::new(max.x.max(v.x), max.y.max(v.y));
        }
        let n = vertices.len();
        let strip_count = n.clamp(1, 512);
        let strip_height = ((max.y - min.y) / strip_count as f64).max(1e-9);
        let mut strips = vec![Vec::new(); strip_count];
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let lo = ((a.y.min(b.y) - min.y) / strip_height).floor() as isize;
            let hi = ((a.y.max(b.y) - min.y) / strip_height).floor() as isize;
            let top = strip_count as isize - 1;
            for k in lo.clamp(0, top)..=hi.clamp(0, top) {
                strips[k as usize].push(i);
            }
        }
        Ok(Self {
            vertices,
            min,
            max,
            strip_height,
            strips,
        })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Even-odd containment; points on an edge count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        if p.x < self.min.x - BOUNDARY_EPS
            || p.x > self.max.x + BOUNDARY_EPS
            || p.y < self.min.y - BOUNDARY_EPS
            || p.y > self.max.y + BOUNDARY_EPS
        {
            return false;
        }
        let k = (((p.y - self.min.y) / self.strip_height).floor() as isize)
            .clamp(0, self.strips.len() as isize - 1) as usize;
        let n = self.vertices.len();
        let mut inside = false;
        for &i in &self.strips[k] {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let ab = b - a;
            let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
            if (a + ab * t - p).norm_sq() <= BOUNDARY_EPS * BOUNDARY_EPS {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

//! Bowyer-Watson Delaunay triangulation and barycentric linear interpolation in 2-D.
//!
//! Geometry runs in `f64` on coordinates centred and scaled into `[-1, 1]²`,
//! whatever the caller's scalar type.

use super::{InterpError, ScatterND};
use crate::scalar::Scalar;

type P = [f64; 2];

const INSIDE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Triangulation<T> {
    data: ScatterND<T>,
    center: P,
    scale: f64,
    pts: Vec<P>,
    /// Counter-clockwise vertex triples.
    tris: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, Copy)]
struct Circle {
    c: P,
    r2: f64,
}

fn orient(a: P, b: P, c: P) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn circumcircle(a: P, b: P, c: P) -> Circle {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    let r2 = (a[0] - ux).powi(2) + (a[1] - uy).powi(2);
    Circle { c: [ux, uy], r2 }
}

/// Area of the convex hull (Andrew's monotone chain).
fn hull_area(pts: &[P]) -> f64 {
    let mut p: Vec<P> = pts.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut hull: Vec<P> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &P>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    let n = hull.len();
    (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn bowyer_watson(pts: &[P], span: f64) -> Vec<[usize; 3]> {
    let n = pts.len();
    let mut all = pts.to_vec();
    all.push([-span, -span]);
    all.push([span, -span]);
    all.push([0.0, span]);
    let mut tris: Vec<([usize; 3], Circle)> = vec![([n, n + 1, n + 2], circumcircle(all[n], all[n + 1], all[n + 2]))];
    for (i, &p) in pts.iter().enumerate() {
        let mut edges: Vec<[usize; 2]> = Vec::new();
        tris.retain(|(t, circ)| {
            let d2 = (p[0] - circ.c[0]).powi(2) + (p[1] - circ.c[1]).powi(2);
            if d2 < circ.r2 {
                edges.extend_from_slice(&[[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]]);
                false
            } else {
                true
            }
        });
        // Boundary of the cavity: edges that appear exactly once.
        for (k, e) in edges.iter().enumerate() {
            let shared = edges
                .iter()
                .enumerate()
                .any(|(j, f)| j != k && ((e[0] == f[0] && e[1] == f[1]) || (e[0] == f[1] && e[1] == f[0])));
            if shared {
                continue;
            }
            let mut t = [e[0], e[1], i];
            if orient(all[t[0]], all[t[1]], all[t[2]]) < 0.0 {
                t.swap(0, 1);
            }
            tris.push((t, circumcircle(all[t[0]], all[t[1]], all[t[2]])));
        }
    }
    tris.into_iter()
        .map(|(t, _)| t)
        .filter(|t| t.iter().all(|&v| v < n))
        .collect()
}

impl<T: Scalar> Triangulation<T> {
    pub fn new(data: &ScatterND<T>) -> Result<Self, InterpError> {
        if data.dim() != 2 {
            return Err(InterpError::DimensionMismatch {
                expected: 2,
                got: data.dim(),
            });
        }
        if data.len() < 3 {
            return Err(InterpError::DegenerateGeometry);
        }
        let raw: Vec<P> = (0..data.len())
            .map(|i| {
                let p = data.point(i);
                [p[0].to_f64_lossy(), p[1].to_f64_lossy()]
            })
            .collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &raw {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let scale = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / 2.0).max(f64::MIN_POSITIVE);
        let pts: Vec<P> = raw
            .iter()
            .map(|p| [(p[0] - center[0]) / scale, (p[1] - center[1]) / scale])
            .collect();

        let hull = hull_area(&pts);
        if hull <= 1e-12 {
            return Err(InterpError::DegenerateGeometry);
        }
        // A finite super-triangle can swallow thin hull triangles; widen it until
        // the triangulation tiles the whole hull.
        let mut tris = Vec::new();
        for span in [1e3, 1e5, 1e7] {
            tris = bowyer_watson(&pts, span);
            let area: f64 = tris.iter().map(|t| orient(pts[t[0]], pts[t[1]], pts[t[2]]) / 2.0).sum();
            if (area - hull).abs() <= 1e-9 * hull {
                break;
            }
        }
        Ok(Self {
            data: data.clone(),
            center,
            scale,
            pts,
            tris,
        })
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.tris
    }

    /// Containing triangle and barycentric weights, `None` outside the hull.
    pub fn locate(&self, q: &[T]) -> Option<([usize; 3], [f64; 3])> {
        let q = [
            (q[0].to_f64_lossy() - self.center[0]) / self.scale,
            (q[1].to_f64_lossy() - self.center[1]) / self.scale,
        ];
        self.tris.iter().find_map(|&t| {
            let (a, b, c) = (self.pts[t[0]], self.pts[t[1]], self.pts[t[2]]);
            let den = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
            let w0 = ((b[1] - c[1]) * (q[0] - c[0]) + (c[0] - b[0]) * (q[1] - c[1])) / den;
            let w1 = ((c[1] - a[1]) * (q[0] - c[0]) + (a[0] - c[0]) * (q[1] - c[1])) / den;
            let w2 = 1.0 - w0 - w1;
            (w0 >= -INSIDE_TOL && w1 >= -INSIDE_TOL && w2 >= -INSIDE_TOL).then_some((t, [w0, w1, w2]))
        })
    }

    pub fn interpolate(&self, q: &[T]) -> Result<Option<T>, InterpError> {
        self.data.check_query(q)?;
        if q.iter().any(|c| !c.is_finite()) {
            return Ok(None);
        }
        Ok(self.locate(q).map(|(t, w)| {
            let v = self.data.values();
            T::lit(w[0]) * v[t[0]] + T::lit(w[1]) * v[t[1]] + T::lit(w[2]) * v[t[2]]
        }))
    }
}

/// Delaunay-linear interpolation; queries outside the convex hull give `None`.
pub fn interp_linear_2d<T: Scalar>(data: &ScatterND<T>, queries: &[Vec<T>]) -> Result<Vec<Option<T>>, InterpError> {
    let tri = Triangulation::new(data)?;
    queries.iter().map(|q| tri.interpolate(q)).collect()
}

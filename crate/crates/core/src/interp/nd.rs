use super::InterpError;
use crate::scalar::Scalar;

/// Scattered points in `dim` dimensions (e.g. lat/lon or lat/lon/time) with one value each.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterND<T> {
    dim: usize,
    coords: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> ScatterND<T> {
    pub fn new(points: &[Vec<T>], values: Vec<T>) -> Result<Self, InterpError> {
        if points.len() != values.len() {
            return Err(InterpError::LengthMismatch {
                x: points.len(),
                y: values.len(),
            });
        }
        let dim = points.first().map_or(2, Vec::len);
        if dim < 2 {
            return Err(InterpError::DimensionTooSmall(dim));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(InterpError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) || !values[i].is_finite() {
                return Err(InterpError::NonFinite(i));
            }
            coords.extend_from_slice(p);
        }
        let data = Self { dim, coords, values };
        // Lexicographic sort exposes duplicates as neighbours.
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| {
            data.point(a)
                .iter()
                .zip(data.point(b))
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if data.point(w[0]) == data.point(w[1]) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(InterpError::DuplicatePoint(a, b));
            }
        }
        Ok(data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub(crate) fn check_query(&self, q: &[T]) -> Result<(), InterpError> {
        if q.len() != self.dim {
            return Err(InterpError::DimensionMismatch {
                expected: self.dim,
                got: q.len(),
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Value of the Euclidean-nearest data point; ties go to the lowest insertion index.
pub fn interp_nearest_nd<T: Scalar>(data: &ScatterND<T>, queries: &[Vec<T>]) -> Result<Vec<T>, InterpError> {
    if data.is_empty() {
        return Err(InterpError::EmptyData);
    }
    queries
        .iter()
        .map(|q| {
            data.check_query(q)?;
            let mut best = 0;
            let mut best_d = dist2(data.point(0), q);
            for i in 1..data.len() {
                let d = dist2(data.point(i), q);
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            Ok(data.values[best])
        })
        .collect()
}

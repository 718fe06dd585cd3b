use std::fmt;
use std::str::FromStr;

use super::InterpError;
use crate::linalg::solve_tridiagonal;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method1D {
    Nearest,
    Linear,
    /// Natural cubic spline (zero second derivative at both ends).
    SplineCubic,
    /// Fritsch-Carlson monotone piecewise cubic Hermite.
    Pchip,
    Akima,
}

impl Method1D {
    pub const ALL: [Method1D; 5] = [
        Method1D::Nearest,
        Method1D::Linear,
        Method1D::SplineCubic,
        Method1D::Pchip,
        Method1D::Akima,
    ];

    /// Spline of the given degree. Only cubic is implemented.
    pub fn spline(degree: u32) -> Result<Self, InterpError> {
        if degree == 3 {
            Ok(Method1D::SplineCubic)
        } else {
            Err(InterpError::UnsupportedDegree(degree))
        }
    }

    pub fn min_knots(self) -> usize {
        match self {
            Method1D::Nearest | Method1D::Linear | Method1D::Pchip => 2,
            Method1D::SplineCubic => 4,
            Method1D::Akima => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method1D::Nearest => "nearest",
            Method1D::Linear => "linear",
            Method1D::SplineCubic => "spline",
            Method1D::Pchip => "pchip",
            Method1D::Akima => "akima",
        }
    }
}

impl fmt::Display for Method1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method1D {
    type Err = InterpError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method1D::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| InterpError::UnknownMethod(s.to_string()))
    }
}

/// Knots with strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct Knots1D<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Scalar> Knots1D<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self, InterpError> {
        if x.len() != y.len() {
            return Err(InterpError::LengthMismatch { x: x.len(), y: y.len() });
        }
        if x.len() < 2 {
            return Err(InterpError::TooFewKnots {
                method: "any",
                need: 2,
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().zip(&y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(InterpError::NonFinite(i));
        }
        if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(InterpError::NonIncreasingX(i + 1));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// A fitted 1-D interpolant.
#[derive(Debug, Clone)]
pub struct Interpolant1D<T> {
    knots: Knots1D<T>,
    method: Method1D,
    /// First derivatives at the knots (Hermite methods) or second derivatives (spline).
    derivs: Vec<T>,
}

impl<T: Scalar> Interpolant1D<T> {
    pub fn fit(knots: Knots1D<T>, method: Method1D) -> Result<Self, InterpError> {
        if knots.len() < method.min_knots() {
            return Err(InterpError::TooFewKnots {
                method: method.name(),
                need: method.min_knots(),
                got: knots.len(),
            });
        }
        let derivs = match method {
            Method1D::Nearest | Method1D::Linear => Vec::new(),
            Method1D::SplineCubic => natural_second_derivatives(&knots.x, &knots.y),
            Method1D::Pchip => pchip_slopes(&knots.x, &knots.y),
            Method1D::Akima => akima_slopes(&knots.x, &knots.y),
        };
        Ok(Self { knots, method, derivs })
    }

    pub fn method(&self) -> Method1D {
        self.method
    }

    pub fn knots(&self) -> &Knots1D<T> {
        &self.knots
    }

    /// Index `i` of the segment `[x_i, x_{i+1}]` used for `q` (clamped to the end segments).
    fn segment(&self, q: T) -> usize {
        let n = self.knots.len();
        let p = self.knots.x.partition_point(|&xi| xi <= q);
        p.saturating_sub(1).min(n - 2)
    }

    /// `None` for NaN queries and for queries outside the knot range unless `extrapolate`.
    pub fn eval(&self, q: T, extrapolate: bool) -> Option<T> {
        if !q.is_finite() {
            return None;
        }
        let x = &self.knots.x;
        let y = &self.knots.y;
        let n = x.len();
        let outside = q < x[0] || q > x[n - 1];
        if outside {
            if !extrapolate {
                return None;
            }
            return Some(match self.method {
                Method1D::Nearest => {
                    if q < x[0] {
                        y[0]
                    } else {
                        y[n - 1]
                    }
                }
                _ => {
                    // Extend the chord of the end segment.
                    let i = if q < x[0] { 0 } else { n - 2 };
                    let slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
                    y[i] + slope * (q - x[i])
                }
            });
        }
        let i = self.segment(q);
        let (x0, x1, y0, y1) = (x[i], x[i + 1], y[i], y[i + 1]);
        let h = x1 - x0;
        Some(match self.method {
            Method1D::Nearest => {
                if q - x0 <= x1 - q {
                    y0
                } else {
                    y1
                }
            }
            Method1D::Linear => {
                if q == x0 {
                    y0
                } else {
                    y0 + (y1 - y0) * ((q - x0) / h)
                }
            }
            Method1D::SplineCubic => {
                let (m0, m1) = (self.derivs[i], self.derivs[i + 1]);
                let six = T::lit(6.0);
                let a = x1 - q;
                let b = q - x0;
                m0 * a * a * a / (six * h)
                    + m1 * b * b * b / (six * h)
                    + (y0 / h - m0 * h / six) * a
                    + (y1 / h - m1 * h / six) * b
            }
            Method1D::Pchip | Method1D::Akima => hermite(q, x0, h, y0, y1, self.derivs[i], self.derivs[i + 1]),
        })
    }

    pub fn eval_many(&self, queries: &[T], extrapolate: bool) -> Vec<Option<T>> {
        queries.iter().map(|&q| self.eval(q, extrapolate)).collect()
    }
}

/// Fit `method` on `knots` and evaluate every query.
pub fn interp1d<T: Scalar>(
    knots: &Knots1D<T>,
    method: Method1D,
    queries: &[T],
    extrapolate: bool,
) -> Result<Vec<Option<T>>, InterpError> {
    Ok(Interpolant1D::fit(knots.clone(), method)?.eval_many(queries, extrapolate))
}

#[inline]
fn hermite<T: Scalar>(q: T, x0: T, h: T, y0: T, y1: T, d0: T, d1: T) -> T {
    let t = (q - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h00 = two * t3 - three * t2 + T::one();
    let h10 = t3 - two * t2 + t;
    let h01 = three * t2 - two * t3;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

fn secants<T: Scalar>(x: &[T], y: &[T]) -> (Vec<T>, Vec<T>) {
    let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d = y.windows(2).zip(&h).map(|(w, &hi)| (w[1] - w[0]) / hi).collect();
    (h, d)
}

/// Second derivatives of the natural cubic spline.
fn natural_second_derivatives<T: Scalar>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let (h, d) = secants(x, y);
    let m = n - 2;
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let mut lower = vec![T::zero(); m];
    let mut diag = vec![T::zero(); m];
    let mut upper = vec![T::zero(); m];
    let mut rhs = vec![T::zero(); m];
    for k in 0..m {
        let i = k + 1;
        lower[k] = h[i - 1];
        diag[k] = two * (h[i - 1] + h[i]);
        upper[k] = h[i];
        rhs[k] = six * (d[i] - d[i - 1]);
    }
    let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs);
    let mut out = vec![T::zero(); n];
    out[1..n - 1].copy_from_slice(&inner);
    out
}

fn same_sign<T: Scalar>(a: T, b: T) -> bool {
    (a > T::zero() && b > T::zero()) || (a < T::zero() && b < T::zero())
}

/// Fritsch-Carlson slopes: weighted harmonic mean inside, shape-preserving
/// three-point formula at the ends.
fn pchip_slopes<T: Scalar>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let (h, del) = secants(x, y);
    if n == 2 {
        return vec![del[0], del[0]];
    }
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let mut d = vec![T::zero(); n];
    for k in 1..n - 1 {
        if same_sign(del[k - 1], del[k]) {
            let w1 = two * h[k] + h[k - 1];
            let w2 = h[k] + two * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: T, h1: T, del0: T, del1: T| -> T {
        let s = ((two * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if !same_sign(s, del0) {
            T::zero()
        } else if !same_sign(del0, del1) && s.abs() > three * del0.abs() {
            three * del0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

/// Akima (1970) slopes with the standard two-point linear extension of the secants at both ends.
fn akima_slopes<T: Scalar>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let (_, del) = secants(x, y);
    let two = T::lit(2.0);
    // m[k + 2] holds secant k; two ghost secants on each side.
    let mut m = vec![T::zero(); n + 3];
    m[2..n + 1].copy_from_slice(&del);
    m[1] = two * m[2] - m[3];
    m[0] = two * m[1] - m[2];
    m[n + 1] = two * m[n] - m[n - 1];
    m[n + 2] = two * m[n + 1] - m[n];
    (0..n)
        .map(|i| {
            let (mm2, mm1, m0, mp1) = (m[i], m[i + 1], m[i + 2], m[i + 3]);
            let w1 = (mp1 - m0).abs();
            let w2 = (mm1 - mm2).abs();
            if w1 + w2 == T::zero() {
                (mm1 + m0) / two
            } else {
                (w1 * mm1 + w2 * m0) / (w1 + w2)
            }
        })
        .collect()
}

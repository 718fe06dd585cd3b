use std::fmt;
use std::str::FromStr;

use super::nd::dist2;
use super::{InterpError, ScatterND};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Largest system the dense solver accepts.
pub const MAX_RBF_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RbfKernelKind {
    Linear,
    Cubic,
    ThinPlate,
    Gaussian,
    Multiquadric,
    InverseMultiquadric,
}

impl RbfKernelKind {
    pub fn name(self) -> &'static str {
        match self {
            RbfKernelKind::Linear => "linear",
            RbfKernelKind::Cubic => "cubic",
            RbfKernelKind::ThinPlate => "thin_plate",
            RbfKernelKind::Gaussian => "gaussian",
            RbfKernelKind::Multiquadric => "multiquadric",
            RbfKernelKind::InverseMultiquadric => "inverse_multiquadric",
        }
    }

    /// Kernels whose value depends on a length scale.
    pub fn needs_shape(self) -> bool {
        matches!(
            self,
            RbfKernelKind::Gaussian | RbfKernelKind::Multiquadric | RbfKernelKind::InverseMultiquadric
        )
    }
}

impl fmt::Display for RbfKernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RbfKernelKind {
    type Err = InterpError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use RbfKernelKind::*;
        [Linear, Cubic, ThinPlate, Gaussian, Multiquadric, InverseMultiquadric]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| InterpError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfKernel<T> {
    kind: RbfKernelKind,
    shape: Option<T>,
    smoothing: T,
}

impl<T: Scalar> Default for RbfKernel<T> {
    fn default() -> Self {
        Self {
            kind: RbfKernelKind::ThinPlate,
            shape: None,
            smoothing: T::zero(),
        }
    }
}

impl<T: Scalar> RbfKernel<T> {
    pub fn new(kind: RbfKernelKind, shape: Option<T>, smoothing: T) -> Result<Self, InterpError> {
        match (kind.needs_shape(), shape) {
            (true, Some(s)) if s > T::zero() && s.is_finite() => {}
            (true, _) => return Err(InterpError::MissingShape(kind.name())),
            (false, Some(_)) => return Err(InterpError::UnexpectedShape(kind.name())),
            (false, None) => {}
        }
        if !(smoothing >= T::zero()) || !smoothing.is_finite() {
            return Err(InterpError::InvalidSmoothing);
        }
        Ok(Self { kind, shape, smoothing })
    }

    pub fn kind(&self) -> RbfKernelKind {
        self.kind
    }

    pub fn smoothing(&self) -> T {
        self.smoothing
    }

    /// φ(r).
    pub fn phi(&self, r: T) -> T {
        let eps = self.shape.unwrap_or_else(T::one);
        match self.kind {
            RbfKernelKind::Linear => r,
            RbfKernelKind::Cubic => r * r * r,
            RbfKernelKind::ThinPlate => {
                if r == T::zero() {
                    T::zero()
                } else {
                    r * r * r.ln()
                }
            }
            RbfKernelKind::Gaussian => (-(eps * r) * (eps * r)).exp(),
            RbfKernelKind::Multiquadric => (T::one() + (eps * r) * (eps * r)).sqrt(),
            RbfKernelKind::InverseMultiquadric => T::one() / (T::one() + (eps * r) * (eps * r)).sqrt(),
        }
    }
}

/// Radial basis interpolant: weights solve `(K + λI) w = y`.
#[derive(Debug, Clone)]
pub struct RbfInterpolant<T> {
    data: ScatterND<T>,
    kernel: RbfKernel<T>,
    weights: Vec<T>,
}

impl<T: Scalar> RbfInterpolant<T> {
    pub fn fit(data: &ScatterND<T>, kernel: RbfKernel<T>) -> Result<Self, InterpError> {
        let n = data.len();
        if n == 0 {
            return Err(InterpError::EmptyData);
        }
        if n > MAX_RBF_POINTS {
            return Err(InterpError::TooManyPoints(n));
        }
        let mut k = Matrix::from_fn(n, |i, j| kernel.phi(dist2(data.point(i), data.point(j)).sqrt()));
        for i in 0..n {
            k.add(i, i, kernel.smoothing);
        }
        let weights = k.solve(data.values()).ok_or(InterpError::SingularSystem)?;
        Ok(Self {
            data: data.clone(),
            kernel,
            weights,
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn eval(&self, q: &[T]) -> Result<T, InterpError> {
        self.data.check_query(q)?;
        Ok((0..self.data.len())
            .map(|i| self.weights[i] * self.kernel.phi(dist2(self.data.point(i), q).sqrt()))
            .sum())
    }
}

pub fn interp_rbf<T: Scalar>(
    data: &ScatterND<T>,
    kernel: RbfKernel<T>,
    queries: &[Vec<T>],
) -> Result<Vec<T>, InterpError> {
    let f = RbfInterpolant::fit(data, kernel)?;
    queries.iter().map(|q| f.eval(q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn scatter(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = SplitMix64::new(seed);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.next_f64() * 4.0, rng.next_f64() * 4.0])
            .collect();
        let vals = pts.iter().map(|p| (p[0]).sin() + p[1] * 0.5).collect();
        (pts, vals)
    }

    #[test]
    fn reproduces_data_for_every_kernel() {
        let (pts, vals) = scatter(30, 1);
        let d = ScatterND::new(&pts, vals.clone()).unwrap();
        let kernels = [
            RbfKernel::new(RbfKernelKind::Linear, None, 0.0).unwrap(),
            RbfKernel::new(RbfKernelKind::Cubic, None, 0.0).unwrap(),
            RbfKernel::default(),
            RbfKernel::new(RbfKernelKind::Gaussian, Some(1.5), 0.0).unwrap(),
            RbfKernel::new(RbfKernelKind::Multiquadric, Some(1.0), 0.0).unwrap(),
            RbfKernel::new(RbfKernelKind::InverseMultiquadric, Some(1.0), 0.0).unwrap(),
        ];
        for k in kernels {
            let got = interp_rbf(&d, k, &pts).unwrap();
            for (g, v) in got.iter().zip(&vals) {
                assert!((g - v).abs() <= 1e-6 * v.abs().max(1.0), "{}: {g} vs {v}", k.kind());
            }
        }
    }

    #[test]
    fn constant_data_with_linear_kernel_three_points() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let d = ScatterND::new(&pts, vec![4.0f64; 3]).unwrap();
        let k = RbfKernel::new(RbfKernelKind::Linear, None, 0.0).unwrap();
        let f = RbfInterpolant::fit(&d, k).unwrap();
        for p in &pts {
            assert!((f.eval(p).unwrap() - 4.0).abs() < 1e-6);
        }
        let w = f.weights();
        assert!(
            (w[1] - w[2]).abs() < 1e-12,
            "symmetric configuration gives symmetric weights"
        );
    }

    #[test]
    fn shape_and_size_validation() {
        assert!(matches!(
            RbfKernel::<f64>::new(RbfKernelKind::Gaussian, None, 0.0),
            Err(InterpError::MissingShape("gaussian"))
        ));
        assert!(matches!(
            RbfKernel::new(RbfKernelKind::ThinPlate, Some(1.0), 0.0),
            Err(InterpError::UnexpectedShape(_))
        ));
        assert!(matches!(
            RbfKernel::new(RbfKernelKind::Cubic, None, -1.0),
            Err(InterpError::InvalidSmoothing)
        ));
        let pts: Vec<Vec<f64>> = (0..MAX_RBF_POINTS + 1).map(|i| vec![i as f64, 0.0]).collect();
        let d = ScatterND::new(&pts, vec![0.0; pts.len()]).unwrap();
        assert!(matches!(
            RbfInterpolant::fit(&d, RbfKernel::default()),
            Err(InterpError::TooManyPoints(2001))
        ));
    }

    #[test]
    fn smoothing_relaxes_interpolation() {
        let (pts, vals) = scatter(20, 3);
        let d = ScatterND::new(&pts, vals.clone()).unwrap();
        let k = RbfKernel::new(RbfKernelKind::Gaussian, Some(1.0), 1.0).unwrap();
        let got = interp_rbf(&d, k, &pts).unwrap();
        let max_dev = got.iter().zip(&vals).map(|(g, v)| (g - v).abs()).fold(0.0, f64::max);
        assert!(max_dev > 1e-3);
    }

    /// High-order kernels may overshoot the data range between samples; this is
    /// permitted behaviour, shown here on a step.
    #[test]
    fn cubic_kernel_can_overshoot_a_step() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        let vals: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 1.0 }).collect();
        let d = ScatterND::new(&pts, vals).unwrap();
        let f = RbfInterpolant::fit(&d, RbfKernel::new(RbfKernelKind::Cubic, None, 0.0).unwrap()).unwrap();
        let extreme = (0..=900)
            .map(|s| f.eval(&[s as f64 / 100.0, 0.0]).unwrap())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        assert!(extreme.0 < 0.0 || extreme.1 > 1.0, "{extreme:?}");
    }
}

use super::GapFillError;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Linear model `y = w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsModel<T> {
    pub coefficients: Vec<T>,
    pub intercept: T,
}

impl<T: Scalar> OlsModel<T> {
    /// Solve the ridge-regularised normal equations `(XᵀX + λD) β = Xᵀy`, where
    /// `X` carries a trailing column of ones and `D` penalises only the slopes.
    pub fn fit(rows: &[Vec<T>], target: &[T], ridge: T) -> Result<Self, GapFillError> {
        let p = rows.first().map_or(0, Vec::len);
        let need = (2 * p).max(2);
        if rows.len() < need {
            return Err(GapFillError::TooFewRows { need, got: rows.len() });
        }
        let k = p + 1;
        let mut xtx = Matrix::<T>::zeros(k);
        let mut xty = vec![T::zero(); k];
        for (row, &y) in rows.iter().zip(target) {
            for a in 0..k {
                let xa = if a < p { row[a] } else { T::one() };
                xty[a] = xty[a] + xa * y;
                for b in a..k {
                    let xb = if b < p { row[b] } else { T::one() };
                    xtx.add(a, b, xa * xb);
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                xtx.set(a, b, xtx.get(b, a));
            }
        }
        for a in 0..p {
            xtx.add(a, a, ridge);
        }
        let beta = xtx.solve(&xty).ok_or(GapFillError::SingularNormalEquations)?;
        Ok(Self {
            coefficients: beta[..p].to_vec(),
            intercept: beta[p],
        })
    }

    pub fn predict_row(&self, row: &[T]) -> T {
        self.coefficients
            .iter()
            .zip(row)
            .fold(self.intercept, |acc, (&w, &x)| acc + w * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.5]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let m = OlsModel::fit(&rows, &y, 1e-8).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((m.intercept - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dot_product_prediction() {
        let m = OlsModel {
            coefficients: vec![2.0],
            intercept: 1.0,
        };
        assert_eq!(m.predict_row(&[3.0]), 7.0);
    }

    #[test]
    fn collinear_columns_without_ridge_are_singular() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            OlsModel::fit(&rows, &y, 0.0),
            Err(GapFillError::SingularNormalEquations)
        ));
        assert!(OlsModel::fit(&rows, &y, 1e-3).is_ok());
    }

    #[test]
    fn too_few_rows() {
        let rows = vec![vec![1.0, 2.0, 3.0]; 5];
        assert!(matches!(
            OlsModel::fit(&rows, &[1.0; 5], 1e-8),
            Err(GapFillError::TooFewRows { need: 6, got: 5 })
        ));
    }
}

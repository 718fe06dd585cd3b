use serde::Serialize;

use super::BenchError;
use crate::scalar::Scalar;

/// Error metrics for one scored fold; `None` marks an undefined value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricSet {
    pub r2: Option<f64>,
    pub rmse: Option<f64>,
    pub nrmse: Option<f64>,
    pub mae: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    R2,
    Rmse,
    Nrmse,
    Mae,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::R2, Metric::Rmse, Metric::Nrmse, Metric::Mae];

    pub fn name(self) -> &'static str {
        match self {
            Metric::R2 => "r2",
            Metric::Rmse => "rmse",
            Metric::Nrmse => "nrmse",
            Metric::Mae => "mae",
        }
    }
}

impl MetricSet {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::R2 => self.r2,
            Metric::Rmse => self.rmse,
            Metric::Nrmse => self.nrmse,
            Metric::Mae => self.mae,
        }
    }
}

/// Truth ranges below this leave nRMSE undefined.
pub const NRMSE_MIN_RANGE: f64 = 1e-9;

pub fn score<T: Scalar>(truth: &[T], pred: &[T]) -> Result<MetricSet, BenchError> {
    if truth.len() != pred.len() {
        return Err(BenchError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(BenchError::Empty);
    }
    let t: Vec<f64> = truth.iter().map(|v| v.to_f64_lossy()).collect();
    let p: Vec<f64> = pred.iter().map(|v| v.to_f64_lossy()).collect();
    let n = t.len() as f64;
    let ss_res: f64 = t.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
    let mae = t.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    let rmse = (ss_res / n).sqrt();
    let mean = t.iter().sum::<f64>() / n;
    let ss_tot: f64 = t.iter().map(|a| (a - mean) * (a - mean)).sum();
    let (lo, hi) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let range = hi - lo;
    Ok(MetricSet {
        r2: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
        rmse: Some(rmse),
        nrmse: (range >= NRMSE_MIN_RANGE).then(|| rmse / range),
        mae: Some(mae),
    })
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // Tied values share the mean of their 1-based ranks.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` when either
/// side is constant or lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let m = score(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(m.rmse, Some(0.0));
        assert_eq!(m.mae, Some(0.0));
        assert_eq!(m.r2, Some(1.0));
        assert_eq!(m.nrmse, Some(0.0));
    }

    #[test]
    fn constant_truth() {
        let m = score(&[5.0, 5.0, 5.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.r2, None);
        assert_eq!(m.nrmse, None);
        assert!(m.rmse.is_some() && m.mae.is_some());
    }

    #[test]
    fn input_errors() {
        assert_eq!(score::<f64>(&[], &[]).unwrap_err(), BenchError::Empty);
        assert!(matches!(
            score(&[1.0], &[1.0, 2.0]),
            Err(BenchError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn spearman_with_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 9.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }
}

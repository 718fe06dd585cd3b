use std::fmt;
use std::str::FromStr;

use super::{BenchError, Metric, ResultRow};
use crate::obs::csv_field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Variable,
    FeatureSet,
    Model,
    GapSize,
    Site,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Variable,
        Dimension::FeatureSet,
        Dimension::Model,
        Dimension::GapSize,
        Dimension::Site,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Variable => "variable",
            Dimension::FeatureSet => "feature_set",
            Dimension::Model => "model",
            Dimension::GapSize => "gap_size",
            Dimension::Site => "site",
        }
    }

    fn key(self, row: &ResultRow) -> String {
        let c = &row.config;
        match self {
            Dimension::Variable => c.variable.to_string(),
            Dimension::FeatureSet => c.feature_set_name().to_string(),
            Dimension::Model => c.model.to_string(),
            Dimension::GapSize => c.gap_size.to_string(),
            Dimension::Site => c.site.clone(),
        }
    }
}

impl FromStr for Dimension {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| BenchError::InvalidGrid(format!("unknown dimension {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Median,
    /// Population standard deviation over the mean.
    Cv,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Mean => "MEAN",
            Statistic::Median => "MEDIAN",
            Statistic::Cv => "CV",
        }
    }

    fn apply(self, xs: &mut [f64]) -> Option<f64> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        match self {
            Statistic::Mean => Some(mean),
            Statistic::Median => {
                xs.sort_by(f64::total_cmp);
                let m = xs.len() / 2;
                Some(if xs.len() % 2 == 1 {
                    xs[m]
                } else {
                    (xs[m - 1] + xs[m]) / 2.0
                })
            }
            Statistic::Cv => {
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                (mean != 0.0).then(|| var.sqrt() / mean)
            }
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MEAN" => Ok(Statistic::Mean),
            "MEDIAN" => Ok(Statistic::Median),
            "CV" => Ok(Statistic::Cv),
            _ => Err(BenchError::InvalidGrid(format!("unknown statistic {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub key: Vec<String>,
    pub n_rows: usize,
    /// Indexed like [`Metric::ALL`].
    pub values: [Option<f64>; 4],
    /// Rows whose metric was undefined and left out.
    pub excluded: [usize; 4],
}

impl AggregateRow {
    pub fn value(&self, m: Metric) -> Option<f64> {
        self.values[Metric::ALL.iter().position(|&x| x == m).unwrap_or(0)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTable {
    pub group_by: Vec<Dimension>,
    pub statistic: Statistic,
    pub rows: Vec<AggregateRow>,
}

fn header(group_by: &[Dimension]) -> Vec<String> {
    let mut h: Vec<String> = group_by.iter().map(|d| d.name().to_string()).collect();
    h.push("n_rows".into());
    for m in Metric::ALL {
        h.push(m.name().into());
        h.push(format!("{}_excluded", m.name()));
    }
    h
}

impl AggregateTable {
    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut c = r.key.clone();
                c.push(r.n_rows.to_string());
                for k in 0..4 {
                    c.push(r.values[k].map(|v| v.to_string()).unwrap_or_default());
                    c.push(r.excluded[k].to_string());
                }
                c
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = header(&self.group_by).join(",");
        out.push('\n');
        for row in self.cells() {
            out.push_str(&row.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned columns for terminals; undefined values print as `-` and
    /// numbers are rounded to 4 decimals.
    pub fn to_text(&self) -> String {
        let head = header(&self.group_by);
        let k = self.group_by.len();
        let body: Vec<Vec<String>> = self
            .cells()
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .enumerate()
                    .map(|(j, c)| {
                        let is_value = j > k && (j - k) % 2 == 1;
                        match (is_value, c.parse::<f64>()) {
                            (true, Ok(v)) => format!("{v:.4}"),
                            (true, Err(_)) => "-".into(),
                            _ => c,
                        }
                    })
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..head.len())
            .map(|j| {
                body.iter()
                    .map(|r| r[j].len())
                    .chain([head[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    if j < k {
                        format!("{c:<w$}", w = widths[j])
                    } else {
                        format!("{c:>w$}", w = widths[j])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = format!(
            "{} by {}\n",
            self.statistic,
            if k == 0 {
                "(all)".to_string()
            } else {
                self.group_by.iter().map(|d| d.name()).collect::<Vec<_>>().join(", ")
            }
        );
        out.push_str(&line(&head));
        out.push('\n');
        for r in &body {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Group rows by `group_by` (groups in first-appearance order) and reduce each
/// metric with `statistic`, skipping undefined values.
pub fn aggregate(rows: &[ResultRow], group_by: &[Dimension], statistic: Statistic) -> AggregateTable {
    let mut keys: Vec<Vec<String>> = Vec::new();
    let mut members: Vec<Vec<&ResultRow>> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for r in rows {
        let key: Vec<String> = group_by.iter().map(|d| d.key(r)).collect();
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            keys.push(key);
            members.push(Vec::new());
            members.len() - 1
        });
        members[slot].push(r);
    }
    let rows = keys
        .into_iter()
        .zip(members)
        .map(|(key, group)| {
            let mut values = [None; 4];
            let mut excluded = [0; 4];
            for (k, m) in Metric::ALL.into_iter().enumerate() {
                let mut xs: Vec<f64> = group.iter().filter_map(|r| r.metrics.get(m)).collect();
                excluded[k] = group.len() - xs.len();
                values[k] = statistic.apply(&mut xs);
            }
            AggregateRow {
                key,
                n_rows: group.len(),
                values,
                excluded,
            }
        })
        .collect();
    AggregateTable {
        group_by: group_by.to_vec(),
        statistic,
        rows,
    }
}

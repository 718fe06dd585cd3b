//! Coverage-complete artificial gap sampling.
//!
//! The index line is tiled into contiguous blocks of `gap_len` slots, the
//! blocks are shuffled with a seeded [`SplitMix64`], and dealt round-robin to
//! evaluation folds. Every eligible (originally observed) index ends up hidden
//! in exactly one fold, while no fold hides more than `max_missing_frac` of
//! the eligible indices.

use std::fmt::Write as _;

use thiserror::Error;

use crate::obs::TimeSeries;
use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GapGenError {
    #[error("series of {series_len} slots ({eligible} eligible) cannot be split into folds of {gap_len}-slot blocks under a {max_missing_frac} missing limit")]
    SeriesTooShort {
        series_len: usize,
        eligible: usize,
        gap_len: usize,
        max_missing_frac: f64,
    },
    #[error("max_missing_frac must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("gap_len must be at least 1")]
    InvalidGapLength,
    #[error("fold {fold} out of range for a plan with {folds} folds")]
    FoldOutOfRange { fold: usize, folds: usize },
    #[error("plan covers {plan} slots but the series has {series}")]
    LengthMismatch { plan: usize, series: usize },
    #[error("manifest line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },
}

/// A contiguous run of hidden indices `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Block {
    pub start: usize,
    pub len: usize,
}

impl Block {
    pub fn indices(self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskPlan {
    pub series_len: usize,
    pub gap_len: usize,
    /// Each fold is a sorted list of disjoint blocks.
    pub folds: Vec<Vec<Block>>,
    pub seed: u64,
    pub max_missing_frac: f64,
    pub eligible_count: usize,
}

impl MaskPlan {
    pub fn fold_count(&self) -> usize {
        self.folds.len()
    }

    /// Sorted indices hidden by `fold`.
    pub fn fold_indices(&self, fold: usize) -> Result<Vec<usize>, GapGenError> {
        let blocks = self.folds.get(fold).ok_or(GapGenError::FoldOutOfRange {
            fold,
            folds: self.folds.len(),
        })?;
        Ok(blocks.iter().flat_map(|b| b.indices()).collect())
    }

    pub fn fold_size(&self, fold: usize) -> usize {
        self.folds[fold].iter().map(|b| b.len).sum()
    }

    /// Text manifest: `# key=value` header comments, then `fold_id,start_index,length` rows.
    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# series_len={} gap_len={} max_missing_frac={} seed={}",
            self.series_len, self.gap_len, self.max_missing_frac, self.seed
        );
        out.push_str("fold_id,start_index,length\n");
        for (f, blocks) in self.folds.iter().enumerate() {
            for b in blocks {
                let _ = writeln!(out, "{f},{},{}", b.start, b.len);
            }
        }
        out
    }

    pub fn from_manifest(text: &str) -> Result<MaskPlan, GapGenError> {
        let bad = |line: usize, reason: &str| GapGenError::MalformedManifest {
            line,
            reason: reason.to_string(),
        };
        let mut series_len = None;
        let mut gap_len = None;
        let mut frac = None;
        let mut seed = None;
        let mut folds: Vec<Vec<Block>> = Vec::new();
        let mut seen_header = false;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let l = raw.trim();
            if l.is_empty() {
                continue;
            }
            if let Some(meta) = l.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    let (key, v) = kv.split_once('=').ok_or_else(|| bad(line, "expected key=value"))?;
                    match key {
                        "series_len" => series_len = v.parse().ok(),
                        "gap_len" => gap_len = v.parse().ok(),
                        "max_missing_frac" => frac = v.parse().ok(),
                        "seed" => seed = v.parse().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            if !seen_header {
                if l != "fold_id,start_index,length" {
                    return Err(bad(line, "expected header fold_id,start_index,length"));
                }
                seen_header = true;
                continue;
            }
            let cols: Vec<usize> = l
                .split(',')
                .map(|c| c.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(line, "expected three non-negative integers"))?;
            let [fold, start, len] = cols[..] else {
                return Err(bad(line, "expected three columns"));
            };
            if len == 0 {
                return Err(bad(line, "zero-length block"));
            }
            if folds.len() <= fold {
                folds.resize(fold + 1, Vec::new());
            }
            folds[fold].push(Block { start, len });
        }
        let series_len = series_len.ok_or_else(|| bad(1, "missing series_len"))?;
        let mut covered = vec![false; series_len];
        for blocks in &mut folds {
            blocks.sort();
            for b in blocks.iter() {
                for i in b.indices() {
                    if i >= series_len || covered[i] {
                        return Err(bad(0, "blocks overlap or exceed series_len"));
                    }
                    covered[i] = true;
                }
            }
        }
        Ok(MaskPlan {
            series_len,
            gap_len: gap_len.ok_or_else(|| bad(1, "missing gap_len"))?,
            folds,
            seed: seed.ok_or_else(|| bad(1, "missing seed"))?,
            max_missing_frac: frac.ok_or_else(|| bad(1, "missing max_missing_frac"))?,
            eligible_count: covered.iter().filter(|&&c| c).count(),
        })
    }
}

/// Plan over an index line where every slot is eligible.
pub fn make_coverage_masks(
    series_len: usize,
    gap_len: usize,
    max_missing_frac: f64,
    seed: u64,
) -> Result<MaskPlan, GapGenError> {
    make_coverage_masks_eligible(&vec![true; series_len], gap_len, max_missing_frac, seed)
}

/// Plan over the observed slots of `series`; missing slots are never hidden.
pub fn plan_for_series<T: Copy>(
    series: &TimeSeries<T>,
    gap_len: usize,
    max_missing_frac: f64,
    seed: u64,
) -> Result<MaskPlan, GapGenError> {
    let eligible: Vec<bool> = series.values().iter().map(Option::is_some).collect();
    make_coverage_masks_eligible(&eligible, gap_len, max_missing_frac, seed)
}

/// Fewest folds satisfying the per-fold limit when no slot is missing.
pub fn min_fold_count(max_missing_frac: f64) -> usize {
    (1.0 / max_missing_frac - 1e-9).ceil().max(1.0) as usize
}

/// Plan over an explicit eligibility mask.
///
/// Blocks tile the raw index line; a block overlapping ineligible slots
/// contributes only its eligible sub-runs. The fold count starts at
/// `ceil(1 / max_missing_frac)` and grows only when an uneven deal would push a
/// fold past the limit. The tail remainder (`len mod gap_len`) joins the
/// smallest fold if it fits, otherwise it forms a fold of its own.
pub fn make_coverage_masks_eligible(
    eligible: &[bool],
    gap_len: usize,
    max_missing_frac: f64,
    seed: u64,
) -> Result<MaskPlan, GapGenError> {
    if !(max_missing_frac > 0.0 && max_missing_frac <= 1.0) {
        return Err(GapGenError::InvalidFraction(max_missing_frac));
    }
    if gap_len == 0 {
        return Err(GapGenError::InvalidGapLength);
    }
    let n = eligible.len();
    let eligible_count = eligible.iter().filter(|&&e| e).count();
    let too_short = || GapGenError::SeriesTooShort {
        series_len: n,
        eligible: eligible_count,
        gap_len,
        max_missing_frac,
    };
    let f0 = min_fold_count(max_missing_frac);
    if eligible_count == 0 || n < gap_len * f0 {
        return Err(too_short());
    }
    let limit = max_missing_frac * eligible_count as f64 * (1.0 + 1e-12);
    let fits = |size: usize| size as f64 <= limit;

    let n_blocks = n / gap_len;
    let mut order: Vec<usize> = (0..n_blocks).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let block_weight = |b: usize| eligible[b * gap_len..(b + 1) * gap_len].iter().filter(|&&e| e).count();
    let tail_start = n_blocks * gap_len;
    let tail_weight = eligible[tail_start..].iter().filter(|&&e| e).count();

    for n_folds in f0..=n_blocks.max(f0) {
        let mut members: Vec<Vec<Block>> = vec![Vec::new(); n_folds];
        let mut sizes = vec![0usize; n_folds];
        for (k, &b) in order.iter().enumerate() {
            members[k % n_folds].push(Block {
                start: b * gap_len,
                len: gap_len,
            });
            sizes[k % n_folds] += block_weight(b);
        }
        if !sizes.iter().all(|&s| fits(s)) {
            continue;
        }
        if tail_weight > 0 {
            let tail = Block {
                start: tail_start,
                len: n - tail_start,
            };
            let smallest = (0..n_folds).min_by_key(|&f| (sizes[f], f)).expect("n_folds >= 1");
            if fits(sizes[smallest] + tail_weight) {
                members[smallest].push(tail);
                sizes[smallest] += tail_weight;
            } else if fits(tail_weight) {
                members.push(vec![tail]);
                sizes.push(tail_weight);
            } else {
                continue;
            }
        }
        let folds: Vec<Vec<Block>> = members
            .into_iter()
            .map(|blocks| {
                let mut runs = Vec::new();
                for b in blocks {
                    split_eligible(eligible, b, &mut runs);
                }
                runs.sort();
                runs
            })
            .filter(|runs| !runs.is_empty())
            .collect();
        return Ok(MaskPlan {
            series_len: n,
            gap_len,
            folds,
            seed,
            max_missing_frac,
            eligible_count,
        });
    }
    Err(too_short())
}

fn split_eligible(eligible: &[bool], block: Block, out: &mut Vec<Block>) {
    let mut i = block.start;
    let end = block.start + block.len;
    while i < end {
        if !eligible[i] {
            i += 1;
            continue;
        }
        let s = i;
        while i < end && eligible[i] {
            i += 1;
        }
        out.push(Block { start: s, len: i - s });
    }
}

/// Hide one fold: returns the training series (fold slots set missing) and the
/// hidden `(index, value)` pairs.
pub fn apply_mask<T: Copy>(
    series: &TimeSeries<T>,
    plan: &MaskPlan,
    fold: usize,
) -> Result<(TimeSeries<T>, Vec<(usize, T)>), GapGenError> {
    if plan.series_len != series.len() {
        return Err(GapGenError::LengthMismatch {
            plan: plan.series_len,
            series: series.len(),
        });
    }
    let idx = plan.fold_indices(fold)?;
    let mut values = series.values().to_vec();
    let mut truth = Vec::with_capacity(idx.len());
    for i in idx {
        if let Some(v) = values[i].take() {
            truth.push((i, v));
        }
    }
    Ok((series.with_values(values), truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obs::{Step, VariableKind};
    use chrono::{TimeZone, Utc};
    use chrono_tz::Tz;
    use proptest::prelude::*;

    /// Brute-force check of the plan invariants against the eligibility mask.
    fn check_plan(plan: &MaskPlan, eligible: &[bool]) -> Result<(), String> {
        let mut owner = vec![None; eligible.len()];
        for f in 0..plan.fold_count() {
            let mut size = 0;
            for b in &plan.folds[f] {
                if b.len == 0 || b.len > plan.gap_len {
                    return Err(format!("block {b:?} has bad length"));
                }
                for i in b.indices() {
                    if !eligible[i] {
                        return Err(format!("ineligible index {i} hidden"));
                    }
                    if owner[i].is_some() {
                        return Err(format!("index {i} in two folds"));
                    }
                    owner[i] = Some(f);
                    size += 1;
                }
            }
            let eligible_count = eligible.iter().filter(|&&e| e).count();
            if size as f64 > plan.max_missing_frac * eligible_count as f64 + 1e-9 {
                return Err(format!("fold {f} hides {size} of {eligible_count}"));
            }
        }
        for (i, e) in eligible.iter().enumerate() {
            if *e != owner[i].is_some() {
                return Err(format!("index {i} coverage wrong"));
            }
        }
        Ok(())
    }

    #[test]
    fn hundred_by_four_gives_five_exact_folds() {
        let plan = make_coverage_masks(100, 4, 0.2, 11).unwrap();
        assert_eq!(plan.fold_count(), 5);
        for f in 0..5 {
            assert_eq!(plan.fold_size(f), 20);
        }
        check_plan(&plan, &[true; 100]).unwrap();
    }

    #[test]
    fn single_block_cannot_respect_limit() {
        assert!(matches!(
            make_coverage_masks(10, 10, 0.2, 0),
            Err(GapGenError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn six_by_one_at_half() {
        let plan = make_coverage_masks(6, 1, 0.5, 5).unwrap();
        assert_eq!(plan.fold_count(), 2);
        assert_eq!(plan.fold_size(0), 3);
        assert_eq!(plan.fold_size(1), 3);
        check_plan(&plan, &[true; 6]).unwrap();
    }

    #[test]
    fn invalid_arguments() {
        assert!(matches!(
            make_coverage_masks(100, 4, 0.0, 0),
            Err(GapGenError::InvalidFraction(_))
        ));
        assert!(matches!(
            make_coverage_masks(100, 4, 1.5, 0),
            Err(GapGenError::InvalidFraction(_))
        ));
        assert!(matches!(
            make_coverage_masks(100, 4, f64::NAN, 0),
            Err(GapGenError::InvalidFraction(_))
        ));
        assert!(matches!(
            make_coverage_masks(100, 0, 0.2, 0),
            Err(GapGenError::InvalidGapLength)
        ));
    }

    #[test]
    fn tail_remainder_is_covered() {
        // 103 = 25 blocks of 4 + 3 tail slots.
        let plan = make_coverage_masks(103, 4, 0.2, 2).unwrap();
        check_plan(&plan, &[true; 103]).unwrap();
        assert!(plan.folds.iter().flatten().any(|b| b.start == 100 && b.len == 3));
    }

    #[test]
    fn missing_slots_are_never_hidden() {
        let mut eligible = vec![true; 200];
        for i in (0..200).step_by(7) {
            eligible[i] = false;
        }
        let plan = make_coverage_masks_eligible(&eligible, 6, 0.2, 8).unwrap();
        check_plan(&plan, &eligible).unwrap();
    }

    #[test]
    fn seeds_change_the_permutation() {
        let plans: Vec<_> = (0..10).map(|s| make_coverage_masks(120, 4, 0.2, s).unwrap()).collect();
        let distinct: std::collections::HashSet<String> = plans.iter().map(|p| format!("{:?}", p.folds)).collect();
        assert_eq!(distinct.len(), 10);
        assert_eq!(make_coverage_masks(120, 4, 0.2, 3).unwrap(), plans[3]);
    }

    #[test]
    fn manifest_round_trip() {
        let plan = make_coverage_masks(97, 5, 0.25, 42).unwrap();
        let back = MaskPlan::from_manifest(&plan.to_manifest()).unwrap();
        assert_eq!(back, plan);
        assert!(MaskPlan::from_manifest(
            "# series_len=4 gap_len=1 max_missing_frac=0.5 seed=1\nfold_id,start_index,length\n0,0,2\n1,1,1\n"
        )
        .is_err());
    }

    fn series(values: Vec<Option<f64>>) -> TimeSeries<f64> {
        TimeSeries::new(
            "S",
            VariableKind::Ta,
            Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
            Step::HOURLY,
            values,
            Tz::UTC,
        )
        .unwrap()
    }

    #[test]
    fn apply_mask_hides_fold_and_returns_truth() {
        let s = series(vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0), Some(5.0)]);
        let plan = MaskPlan {
            series_len: 5,
            gap_len: 2,
            folds: vec![vec![Block { start: 2, len: 2 }], vec![Block { start: 0, len: 2 }]],
            seed: 0,
            max_missing_frac: 0.4,
            eligible_count: 5,
        };
        let (train, truth) = apply_mask(&s, &plan, 0).unwrap();
        assert_eq!(train.values(), &[Some(1.0), Some(2.0), None, None, Some(5.0)]);
        assert_eq!(truth, vec![(2, 3.0), (3, 4.0)]);
        assert!(matches!(
            apply_mask(&s, &plan, 7),
            Err(GapGenError::FoldOutOfRange { fold: 7, folds: 2 })
        ));
    }

    #[test]
    fn every_observed_index_is_hidden_exactly_once() {
        let mut v: Vec<Option<f64>> = (0..150).map(|i| Some(i as f64)).collect();
        for i in [3, 4, 5, 60, 61, 149] {
            v[i] = None;
        }
        let s = series(v);
        let plan = plan_for_series(&s, 4, 0.2, 99).unwrap();
        let mut seen = vec![0usize; s.len()];
        for f in 0..plan.fold_count() {
            let (train, truth) = apply_mask(&s, &plan, f).unwrap();
            for &(i, val) in &truth {
                seen[i] += 1;
                assert_eq!(val, i as f64);
                assert!(train.is_missing(i));
            }
        }
        for i in 0..s.len() {
            assert_eq!(seen[i], usize::from(!s.is_missing(i)), "index {i}");
        }
    }

    proptest! {
        #[test]
        fn random_plans_hold_invariants(
            gap_len in 1usize..30,
            extra in 0usize..400,
            frac in prop::sample::select(vec![0.1, 0.2, 0.25, 0.3, 0.5, 1.0]),
            seed in any::<u64>(),
            holes in proptest::collection::vec(0usize..1000, 0..20),
        ) {
            let n = gap_len * min_fold_count(frac) + extra;
            let mut eligible = vec![true; n];
            for h in holes { if h < n { eligible[h] = false; } }
            match make_coverage_masks_eligible(&eligible, gap_len, frac, seed) {
                Ok(plan) => {
                    prop_assert!(check_plan(&plan, &eligible).is_ok(), "{:?}", check_plan(&plan, &eligible));
                    prop_assert_eq!(make_coverage_masks_eligible(&eligible, gap_len, frac, seed).unwrap(), plan);
                }
                // Only possible when holes make one block heavier than the limit.
                Err(GapGenError::SeriesTooShort { .. }) => prop_assert!(eligible.iter().any(|e| !e)),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
    }
}

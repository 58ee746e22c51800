//! Windowed-median alarms and the benefit / false-alarm evaluation.
//!
//! Time indices are 1-based: `y[0]` is the score at `t = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
    TwoSided,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Increase => "increase",
            Direction::Decrease => "decrease",
            Direction::TwoSided => "two_sided",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "increase" => Ok(Direction::Increase),
            "decrease" => Ok(Direction::Decrease),
            "two_sided" => Ok(Direction::TwoSided),
            other => Err(Error::Config(format!("unknown alarm direction '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub window: usize,
    pub delta: f64,
    pub direction: Direction,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { window: 5, delta: 0.01, direction: Direction::TwoSided }
    }
}

/// Inclusive 1-based transition period `[start, end]`; `start` is `t*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub benefit: f64,
    pub far: f64,
    pub delay: Option<usize>,
    pub auc: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

/// Compare the medians of `y_{t-2W+1..t-W}` and `y_{t-W+1..t}`.
pub fn alarm_at(y: &[f64], t: usize, cfg: &DetectorConfig) -> Result<bool> {
    let w = cfg.window;
    if w == 0 {
        return Err(Error::Config("window must be >= 1".into()));
    }
    if t < 2 * w || t > y.len() {
        return Err(Error::WindowUnderflow { t, window: w, needed: 2 * w });
    }
    let earlier = median(&y[t - 2 * w..t - w]);
    let later = median(&y[t - w..t]);
    Ok(match cfg.direction {
        Direction::Increase => later - earlier > cfg.delta,
        Direction::Decrease => earlier - later > cfg.delta,
        Direction::TwoSided => (later - earlier).abs() > cfg.delta,
    })
}

/// Every `t` at which the rule fires, in ascending order.
pub fn alarms(y: &[f64], cfg: &DetectorConfig) -> Vec<usize> {
    let first = 2 * cfg.window.max(1);
    (first..=y.len()).filter(|&t| alarm_at(y, t, cfg).unwrap_or(false)).collect()
}

/// `1 - (t_hat - t*) / U` for `t* <= t_hat < t* + U`, else 0.
pub fn benefit(t_hat: Option<usize>, t_star: usize, u: usize) -> f64 {
    match t_hat {
        Some(t) if t >= t_star && t < t_star + u => 1.0 - (t - t_star) as f64 / u as f64,
        _ => 0.0,
    }
}

/// Alarms outside the transition over eligible (`t >= 2W`) times outside it.
pub fn false_alarm_rate(alarms: &[usize], transition: Transition, len: usize, window: usize) -> Result<f64> {
    let outside = |t: &usize| *t < transition.start || *t > transition.end;
    let eligible = (2 * window..=len).filter(outside).count();
    if eligible == 0 {
        return Err(Error::UndefinedFar);
    }
    let false_alarms = alarms.iter().filter(|t| outside(t)).count();
    Ok(false_alarms as f64 / eligible as f64)
}

/// First alarm at or after `t*`, relative to `t*`.
pub fn delay(alarms: &[usize], t_star: usize) -> Option<usize> {
    alarms.iter().copied().filter(|&t| t >= t_star).min().map(|t| t - t_star)
}

/// First alarm inside the transition period.
pub fn first_detection(alarms: &[usize], transition: Transition) -> Option<usize> {
    alarms.iter().copied().filter(|&t| t >= transition.start && t <= transition.end).min()
}

/// `(FAR, benefit)` at one threshold.
pub fn operating_point(y: &[f64], transition: Transition, u: usize, cfg: &DetectorConfig) -> Result<(f64, f64)> {
    let fired = alarms(y, cfg);
    let far = false_alarm_rate(&fired, transition, y.len(), cfg.window)?;
    Ok((far, benefit(first_detection(&fired, transition), transition.start, u)))
}

/// Area under the benefit-vs-FAR curve after adding `(0,0)` and `(1,1)`.
///
/// Only the upper envelope counts: a point is dropped when another point has
/// no higher FAR and at least the same benefit.
pub fn auc_from_points(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut envelope: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (far, ben) in pts {
        if envelope.last().map_or(true, |last: &(f64, f64)| ben > last.1) {
            envelope.push((far, ben));
        }
    }
    let last = *envelope.last().unwrap();
    if last.0 < 1.0 {
        envelope.push((1.0, last.1));
    }
    envelope.windows(2).map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1)).sum()
}

/// Benefit-FAR AUC over a sweep of thresholds.
pub fn benefit_far_auc(y: &[f64], transition: Transition, u: usize, template: &DetectorConfig, delta_grid: &[f64]) -> Result<f64> {
    let points = delta_grid
        .iter()
        .map(|&delta| operating_point(y, transition, u, &DetectorConfig { delta, ..*template }))
        .collect::<Result<Vec<_>>>()?;
    Ok(auc_from_points(&points))
}

/// 101 thresholds spaced geometrically over `[1e-4, 10]`, descending.
pub fn default_delta_grid() -> Vec<f64> {
    let (lo, hi) = (1e-4f64.ln(), 10f64.ln());
    (0..=100).rev().map(|i| (lo + (hi - lo) * i as f64 / 100.0).exp()).collect()
}

/// Full evaluation: AUC over the grid plus benefit, FAR and delay at `cfg.delta`.
pub fn evaluate(y: &[f64], transition: Transition, u: usize, cfg: &DetectorConfig, delta_grid: &[f64]) -> Result<EvalResult> {
    let fired = alarms(y, cfg);
    Ok(EvalResult {
        benefit: benefit(first_detection(&fired, transition), transition.start, u),
        far: false_alarm_rate(&fired, transition, y.len(), cfg.window)?,
        delay: delay(&fired, transition.start),
        auc: benefit_far_auc(y, transition, u, cfg, delta_grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inc(delta: f64) -> DetectorConfig {
        DetectorConfig { window: 5, delta, direction: Direction::Increase }
    }

    #[test]
    fn constant_series_never_alarms() {
        let y = vec![0.7; 40];
        assert!(alarms(&y, &DetectorConfig { delta: 1e-9, ..DetectorConfig::default() }).is_empty());
    }

    #[test]
    fn step_fires() {
        let y = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert!(alarm_at(&y, 10, &inc(0.5)).unwrap());
        let dec = DetectorConfig { direction: Direction::Decrease, ..inc(0.5) };
        assert!(!alarm_at(&y, 10, &dec).unwrap());
        assert!(matches!(alarm_at(&y, 9, &inc(0.5)), Err(Error::WindowUnderflow { t: 9, .. })));
    }

    #[test]
    fn median_ignores_a_single_outlier() {
        let y = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 100.0];
        assert!(!alarm_at(&y, 10, &inc(0.5)).unwrap());
        let mean_later: f64 = y[5..].iter().sum::<f64>() / 5.0;
        assert!(mean_later > 0.5);
    }

    #[test]
    fn benefit_examples() {
        assert_eq!(benefit(Some(26), 26, 25), 1.0);
        assert_eq!(benefit(Some(51), 26, 25), 0.0);
        assert!((benefit(Some(39), 26, 25) - 0.48).abs() < 1e-15);
        assert_eq!(benefit(None, 26, 25), 0.0);
        assert_eq!(benefit(Some(20), 26, 25), 0.0);
    }

    #[test]
    fn far_examples() {
        let tr = Transition { start: 26, end: 75 };
        assert_eq!(false_alarm_rate(&[], tr, 100, 5).unwrap(), 0.0);
        let everywhere: Vec<usize> = (10..=100).collect();
        assert_eq!(false_alarm_rate(&everywhere, tr, 100, 5).unwrap(), 1.0);
        let tr2 = Transition { start: 61, end: 100 };
        let two = [12, 30];
        assert!((false_alarm_rate(&two, tr2, 100, 5).unwrap() - 2.0 / 51.0).abs() < 1e-15);
        let tr3 = Transition { start: 52, end: 101 };
        assert!((false_alarm_rate(&two, tr3, 101, 1).unwrap() - 2.0 / 50.0).abs() < 1e-15);
        assert!(matches!(false_alarm_rate(&[], Transition { start: 1, end: 10 }, 10, 1), Err(Error::UndefinedFar)));
    }

    #[test]
    fn delay_examples() {
        assert_eq!(delay(&[10, 28, 40], 26), Some(2));
        assert_eq!(delay(&[26], 26), Some(0));
        assert_eq!(delay(&[], 26), None);
    }

    #[test]
    fn auc_anchor_convention() {
        let tr = Transition { start: 26, end: 75 };
        let grid = default_delta_grid();
        let template = inc(0.0);
        // Strictly increasing series: fires everywhere for every threshold below its slope.
        let ramp: Vec<f64> = (0..100).map(|t| t as f64 * 100.0).collect();
        assert_eq!(benefit_far_auc(&ramp, tr, 25, &template, &grid).unwrap(), 0.5);
        let flat = vec![1.0; 100];
        assert_eq!(benefit_far_auc(&flat, tr, 25, &template, &grid).unwrap(), 0.5);
        // Fires on 26..=30 only.
        let step: Vec<f64> = (1..=100).map(|t| if t >= 24 { 1.0 } else { 0.0 }).collect();
        assert_eq!(benefit_far_auc(&step, tr, 25, &template, &grid).unwrap(), 1.0);
        // Fires on 82..=86 only: false alarms with no benefit.
        let late: Vec<f64> = (1..=100).map(|t| if t >= 80 { 1.0 } else { 0.0 }).collect();
        assert_eq!(benefit_far_auc(&late, tr, 25, &template, &grid).unwrap(), 0.5);
        assert_eq!(auc_from_points(&[(0.0, 1.0)]), 1.0);
        assert_eq!(auc_from_points(&[(1.0, 1.0)]), 0.5);
        assert_eq!(auc_from_points(&[(0.0, 0.0)]), 0.5);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_delta_grid();
        assert_eq!(g.len(), 101);
        assert!((g[0] - 10.0).abs() < 1e-12 && (g[100] - 1e-4).abs() < 1e-18);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    proptest! {
        #[test]
        fn alarm_monotone_in_delta(y in proptest::collection::vec(-1.0f64..1.0, 12), d1 in 0.0f64..1.0, frac in 0.0f64..1.0) {
            let hi = DetectorConfig { window: 3, delta: d1, direction: Direction::TwoSided };
            let lo = DetectorConfig { delta: d1 * frac, ..hi };
            for t in 6..=12 {
                if alarm_at(&y, t, &hi).unwrap() {
                    prop_assert!(alarm_at(&y, t, &lo).unwrap());
                }
            }
        }

        #[test]
        fn window_permutation_invariance(y in proptest::collection::vec(-1.0f64..1.0, 10), delta in 0.0f64..0.5) {
            let cfg = DetectorConfig { window: 5, delta, direction: Direction::Increase };
            let mut p = y.clone();
            p[..5].reverse();
            p[5..].rotate_left(2);
            prop_assert_eq!(alarm_at(&y, 10, &cfg).unwrap(), alarm_at(&p, 10, &cfg).unwrap());
        }

        #[test]
        fn benefit_non_increasing(a in 26usize..51, b in 26usize..51) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(benefit(Some(lo), 26, 25) >= benefit(Some(hi), 26, 25));
        }

        #[test]
        fn metrics_in_unit_interval(y in proptest::collection::vec(-2.0f64..2.0, 60)) {
            let tr = Transition { start: 20, end: 40 };
            let cfg = DetectorConfig { window: 3, delta: 0.05, direction: Direction::TwoSided };
            let r = evaluate(&y, tr, 10, &cfg, &default_delta_grid()).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.benefit));
            prop_assert!((0.0..=1.0).contains(&r.far));
            prop_assert!((0.0..=1.0).contains(&r.auc));
        }

        #[test]
        fn dominated_points_do_not_change_auc(
            pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8),
            pick in 0usize..8, dx in 0.0f64..0.5, dy in 0.0f64..1.0,
        ) {
            let base = auc_from_points(&pts);
            let (f, b) = pts[pick % pts.len()];
            let mut more = pts.clone();
            more.push(((f + dx).min(1.0), b * (1.0 - dy)));
            prop_assert!((auc_from_points(&more) - base).abs() < 1e-12);
        }

        #[test]
        fn auc_ignores_order_and_duplicates(
            pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..8),
            pick in 0usize..8,
        ) {
            let base = auc_from_points(&pts);
            let mut more = pts.clone();
            more.reverse();
            more.push(pts[pick % pts.len()]);
            prop_assert!((auc_from_points(&more) - base).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }
    }
}

//! Synthetic drift series: a cluster that gradually splits off, and a cluster
//! whose share gradually shrinks to nothing.
//!
//! Every segment of every panel draws from its own ChaCha8 stream keyed by
//! `(seed, dataset, t, segment)`, so panels can be generated in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::TimePanel;
use crate::seed::derive_seed;

pub const DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    MovingOverlap,
    MovingImbalance,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::MovingOverlap => "moving_overlap",
            DatasetKind::MovingImbalance => "moving_imbalance",
        }
    }

    fn tag(self) -> u64 {
        match self {
            DatasetKind::MovingOverlap => 1,
            DatasetKind::MovingImbalance => 2,
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moving_overlap" | "overlap" => Ok(DatasetKind::MovingOverlap),
            "moving_imbalance" | "imbalance" => Ok(DatasetKind::MovingImbalance),
            other => Err(Error::Config(format!("unknown dataset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDirection {
    Forward,
    Reverse,
}

impl std::str::FromStr for TimeDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(TimeDirection::Forward),
            "reverse" => Ok(TimeDirection::Reverse),
            other => Err(Error::Config(format!("unknown time direction '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSchedule {
    pub name: DatasetKind,
    pub direction: TimeDirection,
    pub steps: usize,
    pub points: usize,
    pub transition_start: usize,
    pub transition_end: usize,
}

impl Default for DriftSchedule {
    fn default() -> Self {
        DriftSchedule {
            name: DatasetKind::MovingOverlap,
            direction: TimeDirection::Forward,
            steps: 100,
            points: 1000,
            transition_start: 26,
            transition_end: 75,
        }
    }
}

impl DriftSchedule {
    pub fn new(name: DatasetKind, direction: TimeDirection) -> Self {
        DriftSchedule { name, direction, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.transition_start < 1 || self.transition_start > self.transition_end || self.steps < self.transition_end {
            return Err(Error::Config(format!(
                "transition [{}, {}] does not fit in {} steps",
                self.transition_start, self.transition_end, self.steps
            )));
        }
        if self.points < 4 {
            return Err(Error::Config("a drift panel needs at least 4 points".into()));
        }
        Ok(())
    }

    /// Drift value at `t` under this schedule's dataset.
    pub fn drift(&self, t: usize) -> f64 {
        match self.name {
            DatasetKind::MovingOverlap => overlap_shift(t),
            DatasetKind::MovingImbalance => imbalance_shift(t) as f64,
        }
    }

    /// The panel shown at (relabelled) time `t`.
    pub fn panel(&self, t: usize, seed: u64) -> Result<TimePanel> {
        if t < 1 || t > self.steps {
            return Err(Error::InvalidTime { t, max: self.steps });
        }
        let source_t = match self.direction {
            TimeDirection::Forward => t,
            TimeDirection::Reverse => self.steps + 1 - t,
        };
        let panel = match self.name {
            DatasetKind::MovingOverlap => overlap_sized(source_t, self.points, seed),
            DatasetKind::MovingImbalance => imbalance_sized(source_t, self.points, seed),
        };
        Ok(panel.with_time(t))
    }
}

/// Separation of the splitting cluster: 0 before t = 26, `0.12 (t - 26)` on
/// 26..=75, then 6.
pub fn overlap_shift(t: usize) -> f64 {
    match t {
        0..=25 => 0.0,
        26..=75 => 0.12 * (t - 26) as f64,
        _ => 6.0,
    }
}

/// Points moved from the rightmost cluster to its neighbour: 0 before
/// t = 26, `5 (t - 26)` on 26..=75, then 250.
pub fn imbalance_shift(t: usize) -> usize {
    match t {
        0..=25 => 0,
        26..=75 => 5 * (t - 26),
        _ => 250,
    }
}

fn check_time(t: usize) -> Result<()> {
    if (1..=100).contains(&t) { Ok(()) } else { Err(Error::InvalidTime { t, max: 100 }) }
}

/// 333 points around the origin, 333 around `[10,0,0]` and 334 around
/// `[10 + s(t), 0, 0]`, all with identity covariance.
pub fn moving_overlap_panel(t: usize, seed: u64) -> Result<TimePanel> {
    check_time(t)?;
    Ok(overlap_sized(t, 1000, seed))
}

/// Four clusters at x = 0, 10, 20, 30 with 250 / 250 / 250+s / 250-s points.
pub fn moving_imbalance_panel(t: usize, seed: u64) -> Result<TimePanel> {
    check_time(t)?;
    Ok(imbalance_sized(t, 1000, seed))
}

/// Overlap panel with `n` points split as `n/3`, `n/3` and the remainder.
pub fn overlap_sized(t: usize, n: usize, seed: u64) -> TimePanel {
    let third = n / 3;
    let segments = [(0.0, third), (10.0, third), (10.0 + overlap_shift(t), n - 2 * third)];
    build(DatasetKind::MovingOverlap, t, seed, &segments)
}

/// Imbalance panel with `n` points; segment sizes and the moved count scale
/// with `n / 1000`, and any remainder of `n / 4` goes to the first cluster.
pub fn imbalance_sized(t: usize, n: usize, seed: u64) -> TimePanel {
    let quarter = n / 4;
    let moved = imbalance_shift(t) * quarter / 250;
    let segments = [
        (0.0, n - 3 * quarter),
        (10.0, quarter),
        (20.0, quarter + moved),
        (30.0, quarter - moved),
    ];
    build(DatasetKind::MovingImbalance, t, seed, &segments)
}

fn build(kind: DatasetKind, t: usize, seed: u64, segments: &[(f64, usize)]) -> TimePanel {
    let n: usize = segments.iter().map(|s| s.1).sum();
    let mut data = Vec::with_capacity(n * DIM);
    for (seg, &(x_mean, count)) in segments.iter().enumerate() {
        let stream = derive_seed(seed, &[kind.tag(), t as u64, seg as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        for _ in 0..count {
            let z: [f64; DIM] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            data.extend_from_slice(&[x_mean + z[0], z[1], z[2]]);
        }
    }
    TimePanel::new(t, n, DIM, data).expect("generated panel is well formed")
}

/// Panels for `t = 1..=steps`; a reverse schedule plays the forward panels
/// backwards and relabels time from 1.
pub fn series(schedule: &DriftSchedule, seed: u64) -> Result<Vec<TimePanel>> {
    schedule.validate()?;
    (1..=schedule.steps).map(|t| schedule.panel(t, seed)).collect()
}

/// Reverse a series in time and relabel it `1..=T`.
pub fn reversed(panels: &[TimePanel]) -> Vec<TimePanel> {
    panels.iter().rev().enumerate().map(|(i, p)| p.clone().with_time(i + 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_mean(panel: &TimePanel, range: std::ops::Range<usize>) -> [f64; DIM] {
        let len = range.len() as f64;
        let mut m = [0.0; DIM];
        for i in range {
            for (a, v) in m.iter_mut().zip(panel.row(i)) {
                *a += v / len;
            }
        }
        m
    }

    #[test]
    fn overlap_drift_values() {
        assert_eq!(overlap_shift(25), 0.0);
        assert_eq!(overlap_shift(26), 0.0);
        assert!((overlap_shift(50) - 2.88).abs() < 1e-12);
        assert!((overlap_shift(75) - 5.88).abs() < 1e-12);
        assert_eq!(overlap_shift(76), 6.0);
    }

    #[test]
    fn imbalance_drift_values() {
        assert_eq!(imbalance_shift(1), 0);
        assert_eq!(imbalance_shift(75), 245);
        assert_eq!(imbalance_shift(76), 250);
    }

    #[test]
    fn segment_sizes() {
        let p = moving_overlap_panel(1, 0).unwrap();
        assert_eq!((p.len(), p.dim()), (1000, 3));
        let p = moving_imbalance_panel(75, 0).unwrap();
        assert_eq!(p.len(), 1000);
        // Last five points belong to the cluster at x = 30.
        assert!(column_mean(&p, 995..1000)[0] > 25.0);
        assert!(column_mean(&p, 255..995)[0] < 25.0);
        let gone = moving_imbalance_panel(76, 0).unwrap();
        assert!(gone.rows().all(|r| r[0] < 27.0));
    }

    #[test]
    fn invalid_time() {
        assert!(matches!(moving_overlap_panel(0, 1), Err(Error::InvalidTime { t: 0, .. })));
        assert!(matches!(moving_imbalance_panel(101, 1), Err(Error::InvalidTime { t: 101, .. })));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = moving_overlap_panel(30, 7).unwrap();
        let b = moving_overlap_panel(30, 7).unwrap();
        let c = moving_overlap_panel(30, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn reverse_relabels_and_is_an_involution() {
        let fwd = DriftSchedule { steps: 30, transition_end: 30, ..DriftSchedule::new(DatasetKind::MovingImbalance, TimeDirection::Forward) };
        let rev = DriftSchedule { direction: TimeDirection::Reverse, ..fwd };
        let f = series(&fwd, 3).unwrap();
        let r = series(&rev, 3).unwrap();
        assert_eq!(r[0].t(), 1);
        assert_eq!(r[0].as_slice(), f[29].as_slice());
        assert_eq!(reversed(&f), r);
        assert_eq!(reversed(&reversed(&f)), f);
    }

    #[test]
    fn overlap_structure_moves_from_two_to_three_clusters() {
        let early = moving_overlap_panel(1, 5).unwrap();
        let late = moving_overlap_panel(100, 5).unwrap();
        assert!((column_mean(&early, 666..1000)[0] - 10.0).abs() < 0.3);
        assert!((column_mean(&late, 666..1000)[0] - 16.0).abs() < 0.3);
    }

    #[test]
    fn segment_means_converge() {
        let n = 100_000;
        let third = n / 3;
        let p = overlap_sized(60, n, 11);
        let expected = [0.0, 10.0, 10.0 + overlap_shift(60)];
        for (seg, range) in [0..third, third..2 * third, 2 * third..n].into_iter().enumerate() {
            let m = column_mean(&p, range);
            assert!((m[0] - expected[seg]).abs() < 0.05 && m[1].abs() < 0.05 && m[2].abs() < 0.05);
        }
        let q = imbalance_sized(50, n, 11);
        let quarter = n / 4;
        let moved = imbalance_shift(50) * quarter / 250;
        let bounds = [0, quarter, 2 * quarter, 3 * quarter + moved, n];
        for seg in 0..4 {
            let m = column_mean(&q, bounds[seg]..bounds[seg + 1]);
            assert!((m[0] - 10.0 * seg as f64).abs() < 0.05 && m[1].abs() < 0.05 && m[2].abs() < 0.05);
        }
    }
}

//! Synthetic UWB logs with known ground truth.
//!
//! A tag walks between three off-center stops in a 12 m x 10 m room ringed by
//! eight ceiling-height anchors, dwelling 8 s at each stop. Ranges are logged
//! round-robin, one anchor every 2 ms. Each anchor has its own true noise
//! level; the fixture kind decides what the log reports.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};

use crate::gauss::SeededRng;

use super::{Anchor, AnchorMap, RangeRecord, TagTrack, TrackPoint, UwbDataset};

const ANCHORS: [[f64; 2]; 8] =
    [[0.0, 0.0], [6.0, 0.0], [12.0, 0.0], [12.0, 5.0], [12.0, 10.0], [6.0, 10.0], [0.0, 10.0], [0.0, 5.0]];
const ANCHOR_HEIGHT: f64 = 2.4;
const TAG_HEIGHT: f64 = 1.1;
const STOPS: [[f64; 2]; 3] = [[3.0, 2.5], [8.5, 3.5], [4.5, 7.5]];
const DWELL_S: f64 = 8.0;
const WALK_SPEED: f64 = 0.6;
const TRACK_DT: f64 = 0.02;
const RANGE_DT: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    /// Reported std equals the true noise std.
    Honest,
    /// Every range reads 0.3 m long and the reported std is 3x the truth.
    BiasedPessimistic,
    /// Reported std is 0.3x the truth.
    Optimistic,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 3] = [FixtureKind::Honest, FixtureKind::BiasedPessimistic, FixtureKind::Optimistic];

    fn range_bias(self) -> f64 {
        match self {
            FixtureKind::BiasedPessimistic => 0.3,
            _ => 0.0,
        }
    }

    fn std_factor(self) -> f64 {
        match self {
            FixtureKind::Honest => 1.0,
            FixtureKind::BiasedPessimistic => 3.0,
            FixtureKind::Optimistic => 0.3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureKind::Honest => "honest",
            FixtureKind::BiasedPessimistic => "biased-pessimistic",
            FixtureKind::Optimistic => "optimistic",
        }
    }
}

impl std::str::FromStr for FixtureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown fixture kind '{s}' (honest, biased-pessimistic, optimistic)"))
    }
}

/// True range noise std of anchor `i`, meters.
pub fn anchor_noise_std(i: usize) -> f64 {
    0.05 + 0.01 * i as f64
}

/// Piecewise-linear path: dwell, walk, dwell, ...
struct Path {
    /// (start time, end time, from, to)
    legs: Vec<(f64, f64, [f64; 2], [f64; 2])>,
}

impl Path {
    fn new() -> Self {
        let mut legs = Vec::new();
        let mut t = 0.0;
        for (k, &stop) in STOPS.iter().enumerate() {
            legs.push((t, t + DWELL_S, stop, stop));
            t += DWELL_S;
            if let Some(&next) = STOPS.get(k + 1) {
                let len = ((next[0] - stop[0]).powi(2) + (next[1] - stop[1]).powi(2)).sqrt();
                let dur = len / WALK_SPEED;
                legs.push((t, t + dur, stop, next));
                t += dur;
            }
        }
        Self { legs }
    }

    fn duration(&self) -> f64 {
        self.legs.last().map_or(0.0, |l| l.1)
    }

    fn at(&self, t: f64) -> [f64; 2] {
        let leg = self.legs.iter().find(|l| t <= l.1).unwrap_or_else(|| self.legs.last().unwrap());
        let f = ((t - leg.0) / (leg.1 - leg.0)).clamp(0.0, 1.0);
        [leg.2[0] + f * (leg.3[0] - leg.2[0]), leg.2[1] + f * (leg.3[1] - leg.2[1])]
    }
}

/// Deterministic synthetic dataset for `kind`.
pub fn generate_fixture(kind: FixtureKind, seed: u64) -> UwbDataset {
    let path = Path::new();
    let anchors: BTreeMap<String, Anchor> = ANCHORS
        .iter()
        .enumerate()
        .map(|(i, &p)| (format!("A{i}"), Anchor { position: p, height: Some(ANCHOR_HEIGHT) }))
        .collect();
    let ids: Vec<String> = anchors.keys().cloned().collect();

    let n_track = (path.duration() / TRACK_DT).floor() as usize + 1;
    let points = (0..n_track)
        .map(|i| {
            let t = i as f64 * TRACK_DT;
            let p = path.at(t);
            TrackPoint { t, position: [p[0], p[1], TAG_HEIGHT] }
        })
        .collect();

    let mut rng = SeededRng::new(seed);
    let n_ranges = (path.duration() / RANGE_DT).floor() as usize;
    let dz = ANCHOR_HEIGHT - TAG_HEIGHT;
    let records = (0..n_ranges)
        .map(|j| {
            let t = j as f64 * RANGE_DT;
            let i = j % ANCHORS.len();
            let p = path.at(t);
            let a = ANCHORS[i];
            let truth = ((p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2) + dz * dz).sqrt();
            let std = anchor_noise_std(i);
            let z: f64 = StandardNormal.sample(&mut rng);
            let measured = (truth + kind.range_bias() + std * z).max(0.0);
            RangeRecord::new(t, ids[i].clone(), measured, kind.std_factor() * std, Some(truth))
                .expect("fixture ranges are valid")
        })
        .collect();

    UwbDataset {
        records,
        anchors: AnchorMap::new(anchors).expect("fixture has 8 anchors"),
        track: TagTrack::new(points, true).expect("fixture track is sorted"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uwb::pipeline::build_periods;
    use crate::uwb::UwbConfig;

    #[test]
    fn three_static_periods_found() {
        let data = generate_fixture(FixtureKind::Honest, 1);
        let periods = build_periods(&data, &UwbConfig::default()).unwrap();
        assert_eq!(periods.len(), 3);
        for (p, stop) in periods.iter().zip(STOPS) {
            assert!((p.duration() - DWELL_S).abs() < 0.1, "{}", p.duration());
            assert!((p.ground_truth_position[0] - stop[0]).abs() < 1e-9);
            assert!((p.tag_height.unwrap() - TAG_HEIGHT).abs() < 1e-9);
            // 8 anchors every 16 ms; only the first and last packets may be partial
            let full = p.packets.iter().filter(|k| k.records.len() == 8).count();
            assert!(full + 2 >= p.packets.len() && p.packets.len() >= 480, "{} of {}", full, p.packets.len());
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_fixture(FixtureKind::Optimistic, 5);
        let b = generate_fixture(FixtureKind::Optimistic, 5);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn kind_parses() {
        for k in FixtureKind::ALL {
            assert_eq!(k.as_str().parse::<FixtureKind>().unwrap(), k);
        }
        assert!("x".parse::<FixtureKind>().is_err());
    }
}

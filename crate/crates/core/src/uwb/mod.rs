//! UWB range logs to per-period credibility diagnoses.
//!
//! The tag's ground-truth track is split into static periods (speed below a
//! threshold for a minimum duration). Inside each period, range records from
//! distinct anchors that arrive within a short window are grouped into
//! packets, every packet is solved for a 2-D position by weighted least
//! squares, and the resulting fixes are diagnosed against the period's
//! ground-truth position.

use std::collections::BTreeMap;

use crate::error::{CredError, Result};

pub mod fixture;
pub mod io;
pub mod packets;
pub mod pipeline;
pub mod segment;
pub mod wls;

pub use io::{ColumnMap, UwbDataset};
pub use packets::{aggregate_packets, Packet};
pub use pipeline::{diagnose_period, run_pipeline, PeriodDiagnosis, UwbConfig};
pub use segment::{segment_static, StaticPeriod};
pub use wls::{wls_position, PositionFix};

/// One range measurement between the tag and an anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeRecord {
    /// seconds
    pub timestamp: f64,
    pub anchor_id: String,
    /// meters
    pub measured_range: f64,
    /// meters
    pub reported_std: f64,
    /// meters, when the log carries ground truth
    pub surveyed_range: Option<f64>,
}

impl RangeRecord {
    pub fn new(
        timestamp: f64,
        anchor_id: impl Into<String>,
        measured_range: f64,
        reported_std: f64,
        surveyed_range: Option<f64>,
    ) -> Result<Self> {
        if !timestamp.is_finite() {
            return Err(CredError::InvalidRange(format!("timestamp {timestamp} is not finite")));
        }
        if !(measured_range >= 0.0) || !measured_range.is_finite() {
            return Err(CredError::InvalidRange(format!("measured range {measured_range} must be >= 0")));
        }
        if !(reported_std > 0.0) || !reported_std.is_finite() {
            return Err(CredError::InvalidRange(format!("reported std {reported_std} must be > 0")));
        }
        Ok(Self { timestamp, anchor_id: anchor_id.into(), measured_range, reported_std, surveyed_range })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    /// Horizontal position, meters.
    pub position: [f64; 2],
    /// meters; enables height-corrected horizontal ranging
    pub height: Option<f64>,
}

/// Anchor id to surveyed position.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorMap {
    anchors: BTreeMap<String, Anchor>,
}

impl AnchorMap {
    pub fn new(anchors: BTreeMap<String, Anchor>) -> Result<Self> {
        if anchors.len() < 3 {
            return Err(CredError::InvalidConfig(format!(
                "2-D positioning needs at least 3 anchors, got {}",
                anchors.len()
            )));
        }
        Ok(Self { anchors })
    }

    pub fn get(&self, id: &str) -> Result<&Anchor> {
        self.anchors.get(id).ok_or_else(|| CredError::UnknownAnchor(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Anchor)> {
        self.anchors.iter()
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub t: f64,
    /// meters; z is zero when the track is planar
    pub position: [f64; 3],
}

/// Ground-truth tag trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TagTrack {
    points: Vec<TrackPoint>,
    has_height: bool,
}

impl TagTrack {
    pub fn new(points: Vec<TrackPoint>, has_height: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(CredError::EmptyTrack);
        }
        if let Some(i) = points.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(CredError::UnsortedTrack(i + 1));
        }
        Ok(Self { points, has_height })
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn has_height(&self) -> bool {
        self.has_height
    }

    /// Speed (m/s) at every sample: central differences in 3-D (one-sided at
    /// the ends), then a 5-sample moving median.
    pub fn speeds(&self) -> Vec<f64> {
        let p = &self.points;
        let n = p.len();
        if n == 1 {
            return vec![0.0];
        }
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                let dt = p[b].t - p[a].t;
                let d2: f64 = (0..3).map(|k| (p[b].position[k] - p[a].position[k]).powi(2)).sum();
                d2.sqrt() / dt
            })
            .collect();
        moving_median(&raw, 5)
    }
}

/// Centered moving median; the window shrinks at the edges.
pub(crate) fn moving_median(xs: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..xs.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(xs.len());
            let mut w: Vec<f64> = xs[lo..hi].to_vec();
            w.sort_by(|a, b| a.total_cmp(b));
            let m = w.len();
            if m % 2 == 1 {
                w[m / 2]
            } else {
                0.5 * (w[m / 2 - 1] + w[m / 2])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_validation() {
        assert!(RangeRecord::new(0.0, "a", 1.0, 0.1, None).is_ok());
        assert!(RangeRecord::new(0.0, "a", -1.0, 0.1, None).is_err());
        assert!(RangeRecord::new(0.0, "a", 1.0, 0.0, None).is_err());
        assert!(RangeRecord::new(f64::NAN, "a", 1.0, 0.1, None).is_err());
    }

    #[test]
    fn anchor_map_needs_three() {
        let mut m = BTreeMap::new();
        m.insert("a".into(), Anchor { position: [0.0, 0.0], height: None });
        m.insert("b".into(), Anchor { position: [1.0, 0.0], height: None });
        assert!(AnchorMap::new(m.clone()).is_err());
        m.insert("c".into(), Anchor { position: [0.0, 1.0], height: None });
        let map = AnchorMap::new(m).unwrap();
        assert_eq!(map.get("zz"), Err(CredError::UnknownAnchor("zz".into())));
    }

    #[test]
    fn track_validation() {
        assert_eq!(TagTrack::new(vec![], false), Err(CredError::EmptyTrack));
        let p = |t| TrackPoint { t, position: [0.0; 3] };
        assert_eq!(TagTrack::new(vec![p(0.0), p(1.0), p(1.0)], false), Err(CredError::UnsortedTrack(2)));
    }

    #[test]
    fn median_filter() {
        assert_eq!(moving_median(&[1.0, 100.0, 1.0, 1.0, 1.0], 5), vec![1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(moving_median(&[3.0], 5), vec![3.0]);
    }

    #[test]
    fn speeds_of_constant_velocity() {
        let pts: Vec<TrackPoint> =
            (0..20).map(|i| TrackPoint { t: i as f64 * 0.1, position: [i as f64 * 0.1, 0.0, 0.0] }).collect();
        let track = TagTrack::new(pts, false).unwrap();
        for s in track.speeds() {
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

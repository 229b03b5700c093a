use crate::error::Result;

use super::{Packet, TagTrack};

/// An interval during which the tag is at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticPeriod {
    /// seconds
    pub start: f64,
    /// seconds
    pub end: f64,
    /// Mean horizontal track position over the interval, meters.
    pub ground_truth_position: [f64; 2],
    /// Mean track height when the track carries one.
    pub tag_height: Option<f64>,
    pub packets: Vec<Packet>,
}

impl StaticPeriod {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Maximal runs of samples with speed below `v_max` lasting at least
/// `min_duration` seconds. Packets are left empty.
pub fn segment_static(track: &TagTrack, v_max: f64, min_duration: f64) -> Result<Vec<StaticPeriod>> {
    let speeds = track.speeds();
    let pts = track.points();
    let mut periods = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        if speeds[i] >= v_max {
            i += 1;
            continue;
        }
        let a = i;
        while i + 1 < pts.len() && speeds[i + 1] < v_max {
            i += 1;
        }
        let b = i;
        i += 1;
        if pts[b].t - pts[a].t < min_duration {
            continue;
        }
        let n = (b - a + 1) as f64;
        let mut mean = [0.0; 3];
        for p in &pts[a..=b] {
            for k in 0..3 {
                mean[k] += p.position[k] / n;
            }
        }
        periods.push(StaticPeriod {
            start: pts[a].t,
            end: pts[b].t,
            ground_truth_position: [mean[0], mean[1]],
            tag_height: track.has_height().then_some(mean[2]),
            packets: Vec::new(),
        });
    }
    Ok(periods)
}

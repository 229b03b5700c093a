use super::RangeRecord;

/// Absorbs decimal round-off in logged timestamps.
const WINDOW_SLACK: f64 = 1e-9;

/// Near-simultaneous ranges from distinct anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub records: Vec<RangeRecord>,
}

impl Packet {
    /// Time of the first record.
    pub fn timestamp(&self) -> f64 {
        self.records[0].timestamp
    }

    pub fn span(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.timestamp) - self.timestamp()
    }

    fn has_anchor(&self, id: &str) -> bool {
        self.records.iter().any(|r| r.anchor_id == id)
    }
}

/// Greedy forward grouping of time-sorted records.
///
/// A packet starts at the earliest unassigned record and takes following
/// records while they fall within `window` seconds of its first record and
/// come from an anchor not yet in the packet. Packets with fewer than three
/// anchors cannot fix a 2-D position and are dropped.
pub fn aggregate_packets(records: &[RangeRecord], window: f64) -> Vec<Packet> {
    let mut out = Vec::new();
    let mut current: Option<Packet> = None;
    for r in records {
        if let Some(p) = &current {
            if r.timestamp - p.timestamp() > window + WINDOW_SLACK || p.has_anchor(&r.anchor_id) {
                out.extend(current.take().filter(|p| p.records.len() >= 3));
            }
        }
        current.get_or_insert_with(|| Packet { records: Vec::new() }).records.push(r.clone());
    }
    out.extend(current.filter(|p| p.records.len() >= 3));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn rec(t: f64, a: &str) -> RangeRecord {
        RangeRecord::new(t, a, 5.0, 0.1, None).unwrap()
    }

    #[test]
    fn four_records_inside_window() {
        let r = [rec(0.0, "a"), rec(0.01, "b"), rec(0.02, "c"), rec(0.025, "d")];
        let p = aggregate_packets(&r, 0.03);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].records.len(), 4);
    }

    #[test]
    fn window_exceeded_underdetermined_dropped() {
        let r = [rec(0.0, "a"), rec(0.05, "b")];
        assert!(aggregate_packets(&r, 0.03).is_empty());
    }

    #[test]
    fn repeated_anchor_closes_packet() {
        let r = [rec(0.0, "a"), rec(0.001, "b"), rec(0.002, "c"), rec(0.003, "a"), rec(0.004, "b"), rec(0.005, "c")];
        let p = aggregate_packets(&r, 0.03);
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].timestamp(), 0.003);
    }

    #[test]
    fn interleaved_eight_anchors() {
        let ids: Vec<String> = (0..8).map(|i| format!("A{i}")).collect();
        let r: Vec<RangeRecord> = (0..400).map(|j| rec(j as f64 * 0.01, &ids[j % 8])).collect();
        let p = aggregate_packets(&r, 0.03);
        assert!(!p.is_empty());
        for pk in &p {
            assert!(pk.records.len() <= 4 && pk.records.len() >= 3);
            let distinct: HashSet<&str> = pk.records.iter().map(|r| r.anchor_id.as_str()).collect();
            assert_eq!(distinct.len(), pk.records.len());
        }
    }

    proptest! {
        #[test]
        fn packets_are_short_and_distinct(
            gaps in prop::collection::vec(0.0f64..0.02, 1..300),
            anchors in prop::collection::vec(0usize..6, 300),
            window in 0.005f64..0.1,
        ) {
            let mut t = 0.0;
            let records: Vec<RangeRecord> = gaps.iter().zip(&anchors).map(|(g, a)| {
                t += g;
                rec(t, &format!("A{a}"))
            }).collect();
            for pk in aggregate_packets(&records, window) {
                prop_assert!(pk.span() <= window + WINDOW_SLACK);
                prop_assert!(pk.records.len() >= 3);
                let distinct: HashSet<&str> = pk.records.iter().map(|r| r.anchor_id.as_str()).collect();
                prop_assert_eq!(distinct.len(), pk.records.len());
            }
        }
    }
}

use nalgebra::{Matrix2, Vector2};

use crate::error::{CredError, Result};
use crate::gauss::{SpdMatrix, Vector};

use super::{AnchorMap, Packet};

const MAX_ITERATIONS: usize = 50;
const STEP_TOLERANCE: f64 = 1e-8;
/// Anchor spread ratio below which the anchors are treated as collinear.
const COLLINEAR_RATIO: f64 = 1e-9;

/// A weighted least-squares position and its claimed covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionFix {
    /// seconds, time of the packet's first record
    pub timestamp: f64,
    /// meters
    pub estimate: [f64; 2],
    /// m^2, inverse of the weighted normal matrix at the solution
    pub covariance: SpdMatrix,
    /// Weighted RMS range residual, meters.
    pub residual_norm: f64,
    pub n_measurements: usize,
    pub iterations: usize,
}

impl PositionFix {
    pub fn estimate_vector(&self) -> Vector {
        Vector::from_row_slice(&self.estimate)
    }
}

struct Obs {
    anchor: Vector2<f64>,
    range: f64,
    weight: f64,
}

/// Horizontal range and its std from a slant range when both heights are known.
/// Returns `None` when the slant range is shorter than the height difference.
fn horizontal(range: f64, std: f64, dz: Option<f64>) -> Option<(f64, f64)> {
    let Some(dz) = dz else { return Some((range, std)) };
    let h2 = range * range - dz * dz;
    if h2 <= 0.0 {
        return None;
    }
    let h = h2.sqrt();
    // d h / d r = r / h
    Some((h, std * range / h))
}

/// Gauss-Newton solution of the range equations of one packet.
///
/// Weights are `1 / std^2`. `init` defaults to the centroid of the packet's
/// anchors. With `tag_height` and anchor heights both known, slant ranges are
/// projected onto the horizontal plane first; ranges shorter than the height
/// difference are skipped.
pub fn wls_position(
    packet: &Packet,
    anchors: &AnchorMap,
    init: Option<[f64; 2]>,
    tag_height: Option<f64>,
) -> Result<PositionFix> {
    let mut obs = Vec::with_capacity(packet.records.len());
    for r in &packet.records {
        let a = anchors.get(&r.anchor_id)?;
        let dz = match (a.height, tag_height) {
            (Some(ah), Some(th)) => Some(ah - th),
            _ => None,
        };
        if let Some((range, std)) = horizontal(r.measured_range, r.reported_std, dz) {
            obs.push(Obs { anchor: Vector2::from(a.position), range, weight: 1.0 / (std * std) });
        }
    }
    if obs.len() < 3 {
        return Err(CredError::SingularGeometry);
    }
    check_spread(&obs)?;

    let mut p = match init {
        Some(p) => Vector2::from(p),
        None => obs.iter().map(|o| o.anchor).sum::<Vector2<f64>>() / obs.len() as f64,
    };
    for iter in 1..=MAX_ITERATIONS {
        let (h, g) = normal_equations(&obs, &p);
        let chol = h.cholesky().ok_or(CredError::SingularGeometry)?;
        let step = chol.solve(&g);
        if !step.iter().all(|v| v.is_finite()) {
            return Err(CredError::SingularGeometry);
        }
        p += step;
        if step.norm() < STEP_TOLERANCE {
            return finish(&obs, p, packet.timestamp(), iter);
        }
    }
    Err(CredError::NoConvergence(MAX_ITERATIONS))
}

/// `H = sum w u u^T`, `g = sum w u r` with `u` the unit vector from anchor
/// to position and `r` the range residual.
fn normal_equations(obs: &[Obs], p: &Vector2<f64>) -> (Matrix2<f64>, Vector2<f64>) {
    let mut h = Matrix2::zeros();
    let mut g = Vector2::zeros();
    for o in obs {
        let diff = p - o.anchor;
        let dist = diff.norm().max(1e-12);
        let u = diff / dist;
        h += o.weight * u * u.transpose();
        g += o.weight * u * (o.range - dist);
    }
    (h, g)
}

fn finish(obs: &[Obs], p: Vector2<f64>, timestamp: f64, iterations: usize) -> Result<PositionFix> {
    let (h, _) = normal_equations(obs, &p);
    let cov = h.try_inverse().ok_or(CredError::SingularGeometry)?;
    let covariance = SpdMatrix::from_row_slice(2, &[cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]])
        .map_err(|_| CredError::SingularGeometry)?;
    let (mut wr2, mut w) = (0.0, 0.0);
    for o in obs {
        let r = o.range - (p - o.anchor).norm();
        wr2 += o.weight * r * r;
        w += o.weight;
    }
    Ok(PositionFix {
        timestamp,
        estimate: [p.x, p.y],
        covariance,
        residual_norm: (wr2 / w).sqrt(),
        n_measurements: obs.len(),
        iterations,
    })
}

/// Collinear anchors leave the position unobservable across their line.
fn check_spread(obs: &[Obs]) -> Result<()> {
    let n = obs.len() as f64;
    let c = obs.iter().map(|o| o.anchor).sum::<Vector2<f64>>() / n;
    let scatter = obs.iter().fold(Matrix2::zeros(), |acc, o| {
        let d = o.anchor - c;
        acc + d * d.transpose()
    });
    let eig = scatter.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= COLLINEAR_RATIO * hi {
        return Err(CredError::SingularGeometry);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::SeededRng;
    use crate::uwb::{Anchor, RangeRecord};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};
    use std::collections::BTreeMap;

    fn anchors(pos: &[(f64, f64)]) -> AnchorMap {
        let m: BTreeMap<String, Anchor> = pos
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (format!("A{i}"), Anchor { position: [x, y], height: None }))
            .collect();
        AnchorMap::new(m).unwrap()
    }

    fn packet(map: &AnchorMap, tag: [f64; 2], noise: &[f64], std: f64) -> Packet {
        let records = map
            .iter()
            .zip(noise)
            .map(|((id, a), n)| {
                let d = ((tag[0] - a.position[0]).powi(2) + (tag[1] - a.position[1]).powi(2)).sqrt();
                RangeRecord::new(0.0, id.clone(), d + n, std, Some(d)).unwrap()
            })
            .collect();
        Packet { records }
    }

    fn square() -> AnchorMap {
        anchors(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)])
    }

    #[test]
    fn exact_ranges_square() {
        let map = square();
        let fix = wls_position(&packet(&map, [3.0, 4.0], &[0.0; 4], 0.1), &map, None, None).unwrap();
        assert!((fix.estimate[0] - 3.0).abs() < 1e-6 && (fix.estimate[1] - 4.0).abs() < 1e-6);
        assert!(fix.residual_norm < 1e-6);
        assert_eq!(fix.n_measurements, 4);
    }

    #[test]
    fn covariance_matches_monte_carlo() {
        let map = square();
        let tag = [3.0, 4.0];
        let std = 0.1;
        let mut rng = SeededRng::new(11);
        let n = 10_000;
        let mut ests = Vec::with_capacity(n);
        let mut claimed = None;
        for _ in 0..n {
            let noise: Vec<f64> = (0..4).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); std * z }).collect();
            let fix = wls_position(&packet(&map, tag, &noise, std), &map, None, None).unwrap();
            claimed.get_or_insert(fix.covariance.matrix().clone());
            ests.push(fix.estimate);
        }
        let mean = [0, 1].map(|k| ests.iter().map(|e| e[k]).sum::<f64>() / n as f64);
        let mut emp = [[0.0; 2]; 2];
        for e in &ests {
            for i in 0..2 {
                for j in 0..2 {
                    emp[i][j] += (e[i] - mean[i]) * (e[j] - mean[j]) / (n as f64 - 1.0);
                }
            }
        }
        let claimed = claimed.unwrap();
        let scale = claimed[(0, 0)].max(claimed[(1, 1)]);
        for i in 0..2 {
            for j in 0..2 {
                let rel = (emp[i][j] - claimed[(i, j)]).abs() / scale;
                assert!(rel < 0.15, "entry ({i},{j}): empirical {} vs claimed {}", emp[i][j], claimed[(i, j)]);
            }
        }
    }

    #[test]
    fn collinear_anchors_are_singular() {
        let map = anchors(&[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)]);
        let r = wls_position(&packet(&map, [3.0, 4.0], &[0.0; 3], 0.1), &map, None, None);
        assert_eq!(r, Err(CredError::SingularGeometry));
    }

    #[test]
    fn unknown_anchor_is_reported() {
        let map = square();
        let mut p = packet(&map, [3.0, 4.0], &[0.0; 4], 0.1);
        p.records[2].anchor_id = "ghost".into();
        assert_eq!(wls_position(&p, &map, None, None), Err(CredError::UnknownAnchor("ghost".into())));
    }

    #[test]
    fn height_correction_recovers_planar_position() {
        let mut m = BTreeMap::new();
        for (i, (x, y)) in [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)].into_iter().enumerate() {
            m.insert(format!("A{i}"), Anchor { position: [x, y], height: Some(2.5) });
        }
        let map = AnchorMap::new(m).unwrap();
        let tag = [6.0, 3.0];
        let th = 1.0;
        let records = map
            .iter()
            .map(|(id, a)| {
                let d = ((tag[0] - a.position[0]).powi(2) + (tag[1] - a.position[1]).powi(2) + 1.5f64.powi(2)).sqrt();
                RangeRecord::new(0.0, id.clone(), d, 0.1, None).unwrap()
            })
            .collect();
        let p = Packet { records };
        let fix = wls_position(&p, &map, None, Some(th)).unwrap();
        assert!((fix.estimate[0] - 6.0).abs() < 1e-6 && (fix.estimate[1] - 3.0).abs() < 1e-6);
        // Without the correction the slant ranges pull the fix off target.
        let raw = wls_position(&p, &map, None, None).unwrap();
        assert!(((raw.estimate[0] - 6.0).powi(2) + (raw.estimate[1] - 3.0).powi(2)).sqrt() > 1e-3);
    }

    proptest! {
        #[test]
        fn noiseless_recovery(x in 0.5f64..9.5, y in 0.5f64..9.5) {
            let map = anchors(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (5.0, -1.0)]);
            let fix = wls_position(&packet(&map, [x, y], &[0.0; 5], 0.05), &map, None, None).unwrap();
            prop_assert!((fix.estimate[0] - x).abs() < 1e-6);
            prop_assert!((fix.estimate[1] - y).abs() < 1e-6);
        }
    }
}

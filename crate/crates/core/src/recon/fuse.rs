use std::collections::BTreeMap;

use crate::geometry::Vec3;

use super::{huber_weight, PointCloud, RawPoint, ReconError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub position: Vec3,
    pub confidence: f64,
    pub quality: f64,
    /// Reprojection residual in meters; only used with Huber reweighting.
    pub residual: f64,
}

impl Observation {
    pub fn new(position: Vec3, confidence: f64, quality: f64) -> Self {
        Observation { position, confidence, quality, residual: 0.0 }
    }

    fn weight(&self, huber_k: Option<f64>) -> f64 {
        let w = self.confidence * self.quality;
        match huber_k {
            Some(k) => w * huber_weight(self.residual, k),
            None => w,
        }
    }
}

impl From<&RawPoint> for Observation {
    fn from(p: &RawPoint) -> Self {
        Observation { position: p.position, confidence: p.confidence, quality: p.quality, residual: p.reproj_error }
    }
}

/// Weighted mean with `w = C * Q` (times the Huber weight of the residual when
/// `huber_k` is set).
pub fn fuse_observations(obs: &[Observation], huber_k: Option<f64>) -> Result<Vec3, ReconError> {
    let mut sum = Vec3::zeros();
    let mut total = 0.0;
    for o in obs {
        let w = o.weight(huber_k);
        if !(w >= 0.0) {
            return Err(ReconError::InvalidCloud(format!("negative fusion weight {w}")));
        }
        sum += o.position * w;
        total += w;
    }
    if total <= 0.0 {
        return Err(ReconError::ZeroWeight);
    }
    Ok(sum / total)
}

/// Collapses points sharing a track id into one fused point. Untracked
/// clouds are returned unchanged.
///
/// The fused point sits where the track first appears; it keeps the labels
/// and frame of its highest-weight observation, the largest confidence and
/// quality, and the weighted mean reprojection error.
pub fn fuse_tracks(cloud: &PointCloud, huber_k: Option<f64>) -> Result<PointCloud, ReconError> {
    let Some(tracks) = cloud.track() else {
        return Ok(cloud.clone());
    };
    let pts = cloud.points();
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut order = Vec::new();
    for (i, &t) in tracks.iter().enumerate() {
        let m = members.entry(t).or_default();
        if m.is_empty() {
            order.push(t);
        }
        m.push(i);
    }
    let mut points = Vec::with_capacity(order.len());
    let mut rep = Vec::with_capacity(order.len());
    for t in &order {
        let idx = &members[t];
        let obs: Vec<Observation> = idx.iter().map(|&i| Observation::from(&pts[i])).collect();
        let position = fuse_observations(&obs, huber_k)?;
        let weights: Vec<f64> = obs.iter().map(|o| o.weight(huber_k)).collect();
        let total: f64 = weights.iter().sum();
        let best = (0..idx.len()).fold(0, |b, k| if weights[k] > weights[b] { k } else { b });
        let src = &pts[idx[best]];
        points.push(RawPoint {
            position,
            confidence: idx.iter().map(|&i| pts[i].confidence).fold(0.0, f64::max),
            quality: idx.iter().map(|&i| pts[i].quality).fold(0.0, f64::max),
            frame_id: src.frame_id,
            reproj_error: idx.iter().zip(&weights).map(|(&i, w)| pts[i].reproj_error * w).sum::<f64>() / total,
        });
        rep.push(idx[best]);
    }
    fn pick<T: Copy>(v: Option<&[T]>, rep: &[usize]) -> Option<Vec<T>> {
        v.map(|v| rep.iter().map(|&i| v[i]).collect())
    }
    PointCloud::with_tracks(points, pick(cloud.semantic(), &rep), pick(cloud.instance(), &rep), Some(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recon::SemanticClass;
    use proptest::prelude::*;

    fn obs(x: f64, w: f64) -> Observation {
        Observation::new(Vec3::new(x, 0.0, 0.0), w, 1.0)
    }

    #[test]
    fn symmetric_pair_averages() {
        assert_eq!(fuse_observations(&[obs(0.0, 0.5), obs(2.0, 0.5)], None).unwrap(), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn confidence_weighted() {
        let p = fuse_observations(&[obs(0.0, 0.9), obs(1.0, 0.1)], None).unwrap();
        assert!((p - Vec3::new(0.1, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_observation_is_identity() {
        let o = Observation::new(Vec3::new(1.5, -2.0, 3.25), 0.3, 0.7);
        assert_eq!(fuse_observations(&[o], None).unwrap(), o.position);
    }

    #[test]
    fn zero_weights_error() {
        assert!(matches!(fuse_observations(&[obs(0.0, 0.0), obs(1.0, 0.0)], None), Err(ReconError::ZeroWeight)));
        assert!(matches!(fuse_observations(&[], None), Err(ReconError::ZeroWeight)));
    }

    #[test]
    fn huber_downweights_large_residuals() {
        let mut far = obs(1.0, 0.5);
        far.residual = 2.69;
        let p = fuse_observations(&[obs(0.0, 0.5), far], Some(1.345)).unwrap();
        // weights 0.5 and 0.25
        assert!((p.x - 1.0 / 3.0).abs() < 1e-15);
        let plain = fuse_observations(&[obs(0.0, 0.5), far], None).unwrap();
        assert_eq!(plain.x, 0.5);
    }

    #[test]
    fn tracks_collapse() {
        let p = |x: f64, c: f64| RawPoint::new(Vec3::new(x, 0.0, 0.0), c, 1.0, x as u32, 0.0);
        let cloud = PointCloud::with_tracks(
            vec![p(0.0, 0.9), p(5.0, 1.0), p(1.0, 0.1)],
            Some(vec![SemanticClass::Wall, SemanticClass::Floor, SemanticClass::Door]),
            Some(vec![1, 2, 3]),
            Some(vec![7, 8, 7]),
        )
        .unwrap();
        let fused = fuse_tracks(&cloud, None).unwrap();
        assert_eq!(fused.len(), 2);
        assert!((fused.points()[0].position.x - 0.1).abs() < 1e-15);
        assert_eq!(fused.instance().unwrap(), &[1, 2]);
        assert_eq!(fused.semantic().unwrap()[0], SemanticClass::Wall);
    }

    proptest! {
        #[test]
        fn invariant_under_weight_scaling(
            xs in prop::collection::vec((-10.0f64..10.0, 0.01f64..1.0), 1..20),
            scale in 0.01f64..1.0,
        ) {
            let a: Vec<_> = xs.iter().map(|&(x, w)| obs(x, w)).collect();
            let b: Vec<_> = xs.iter().map(|&(x, w)| obs(x, w * scale)).collect();
            let pa = fuse_observations(&a, None).unwrap();
            let pb = fuse_observations(&b, None).unwrap();
            prop_assert!((pa - pb).norm() <= 1e-12 * (1.0 + pa.norm()));
        }
    }
}

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::ply::{Element, Ply, ScalarType};

use super::ReconError;

/// Indoor semantic classes, numbered as in the S3DIS label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticClass {
    Ceiling,
    Floor,
    Wall,
    Beam,
    Column,
    Window,
    Door,
    Table,
    Chair,
    Sofa,
    Bookcase,
    Board,
    Clutter,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 13] = [
        SemanticClass::Ceiling,
        SemanticClass::Floor,
        SemanticClass::Wall,
        SemanticClass::Beam,
        SemanticClass::Column,
        SemanticClass::Window,
        SemanticClass::Door,
        SemanticClass::Table,
        SemanticClass::Chair,
        SemanticClass::Sofa,
        SemanticClass::Bookcase,
        SemanticClass::Board,
        SemanticClass::Clutter,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    /// Walls, floors and ceilings are reconstructed from the cloud; everything
    /// else needs a supplied mesh.
    pub fn is_planar(self) -> bool {
        matches!(self, SemanticClass::Wall | SemanticClass::Floor | SemanticClass::Ceiling)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SemanticClass::Ceiling => "ceiling",
            SemanticClass::Floor => "floor",
            SemanticClass::Wall => "wall",
            SemanticClass::Beam => "beam",
            SemanticClass::Column => "column",
            SemanticClass::Window => "window",
            SemanticClass::Door => "door",
            SemanticClass::Table => "table",
            SemanticClass::Chair => "chair",
            SemanticClass::Sofa => "sofa",
            SemanticClass::Bookcase => "bookcase",
            SemanticClass::Board => "board",
            SemanticClass::Clutter => "clutter",
        }
    }
}

impl fmt::Display for SemanticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemanticClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown semantic class `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawPoint {
    pub position: Vec3,
    /// Per-pixel confidence `C` in [0, 1].
    pub confidence: f64,
    /// Quality score `Q` in [0, 1].
    pub quality: f64,
    pub frame_id: u32,
    /// Reprojection error in meters.
    pub reproj_error: f64,
}

impl RawPoint {
    pub fn new(position: Vec3, confidence: f64, quality: f64, frame_id: u32, reproj_error: f64) -> Self {
        RawPoint { position, confidence, quality, frame_id, reproj_error }
    }

    fn check(&self, i: usize) -> Result<(), ReconError> {
        let bad = |what: &str| Err(ReconError::InvalidCloud(format!("point {i}: {what}")));
        if !self.position.iter().all(|c| c.is_finite()) {
            return bad("non-finite position");
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return bad("confidence outside [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.quality) {
            return bad("quality outside [0, 1]");
        }
        if !(self.reproj_error >= 0.0) {
            return bad("negative reprojection error");
        }
        Ok(())
    }
}

/// Points with optional per-point labels. Label vectors, when present, have
/// one entry per point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<RawPoint>,
    semantic: Option<Vec<SemanticClass>>,
    instance: Option<Vec<u32>>,
    /// Feature-track id; points sharing one are observations of the same surface point.
    track: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(
        points: Vec<RawPoint>,
        semantic: Option<Vec<SemanticClass>>,
        instance: Option<Vec<u32>>,
    ) -> Result<Self, ReconError> {
        Self::with_tracks(points, semantic, instance, None)
    }

    pub fn with_tracks(
        points: Vec<RawPoint>,
        semantic: Option<Vec<SemanticClass>>,
        instance: Option<Vec<u32>>,
        track: Option<Vec<u32>>,
    ) -> Result<Self, ReconError> {
        for (i, p) in points.iter().enumerate() {
            p.check(i)?;
        }
        let n = points.len();
        let len_ok = |len: Option<usize>, what: &str| match len {
            Some(l) if l != n => Err(ReconError::InvalidCloud(format!("{l} {what} for {n} points"))),
            _ => Ok(()),
        };
        len_ok(semantic.as_ref().map(Vec::len), "semantic labels")?;
        len_ok(instance.as_ref().map(Vec::len), "instance ids")?;
        len_ok(track.as_ref().map(Vec::len), "track ids")?;
        if instance.is_some() && semantic.is_none() {
            return Err(ReconError::InvalidCloud("instance ids without semantic labels".into()));
        }
        Ok(PointCloud { points, semantic, instance, track })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[RawPoint] {
        &self.points
    }

    pub fn semantic(&self) -> Option<&[SemanticClass]> {
        self.semantic.as_deref()
    }

    pub fn instance(&self) -> Option<&[u32]> {
        self.instance.as_deref()
    }

    pub fn track(&self) -> Option<&[u32]> {
        self.track.as_deref()
    }

    /// Keeps the points whose index satisfies `keep`, with their labels.
    pub fn retain_indices(&self, keep: impl Fn(usize) -> bool) -> PointCloud {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        self.select(&idx)
    }

    pub fn select(&self, idx: &[usize]) -> PointCloud {
        fn pick<T: Copy>(v: &Option<Vec<T>>, idx: &[usize]) -> Option<Vec<T>> {
            v.as_ref().map(|v| idx.iter().map(|&i| v[i]).collect())
        }
        PointCloud {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            semantic: pick(&self.semantic, idx),
            instance: pick(&self.instance, idx),
            track: pick(&self.track, idx),
        }
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.is_empty() {
            return None;
        }
        let sum = self.points.iter().fold(Vec3::zeros(), |acc, p| acc + p.position);
        Some(sum / self.len() as f64)
    }

    /// Reads a PLY vertex element with `x y z` plus optional `confidence`,
    /// `quality`, `frame_id`, `reproj_error`, `semantic_label`, `instance_id`
    /// and `track_id` properties. Missing confidence/quality default to 1.
    pub fn load_ply(path: &Path) -> Result<PointCloud, ReconError> {
        let ply = Ply::read_path(path).map_err(|e| ReconError::Ply { path: path.display().to_string(), source: e })?;
        Self::from_ply(&ply)
    }

    pub fn from_ply(ply: &Ply) -> Result<PointCloud, ReconError> {
        let v = ply.element("vertex").ok_or_else(|| ReconError::InvalidCloud("no vertex element".into()))?;
        let need = |name: &str| {
            v.scalar(name).ok_or_else(|| ReconError::InvalidCloud(format!("vertex property `{name}` missing")))
        };
        let (x, y, z) = (need("x")?, need("y")?, need("z")?);
        let col = |name: &str, default: f64| -> Vec<f64> {
            v.scalar(name).map(<[f64]>::to_vec).unwrap_or_else(|| vec![default; v.count])
        };
        let conf = col("confidence", 1.0);
        let qual = col("quality", 1.0);
        let frame = col("frame_id", 0.0);
        let reproj = col("reproj_error", 0.0);
        let points = (0..v.count)
            .map(|i| RawPoint::new(Vec3::new(x[i], y[i], z[i]), conf[i], qual[i], frame[i] as u32, reproj[i]))
            .collect();
        let semantic = v
            .scalar("semantic_label")
            .map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        SemanticClass::from_index(c as u8)
                            .filter(|_| c >= 0.0 && c.fract() == 0.0)
                            .ok_or_else(|| ReconError::InvalidCloud(format!("point {i}: semantic label {c}")))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        let ids = |name: &str| v.scalar(name).map(|s| s.iter().map(|&c| c as u32).collect::<Vec<_>>());
        PointCloud::with_tracks(points, semantic, ids("instance_id"), ids("track_id"))
    }

    pub fn to_ply(&self) -> Ply {
        let n = self.len();
        let col = |f: &dyn Fn(&RawPoint) -> f64| self.points.iter().map(f).collect::<Vec<_>>();
        let mut vertex = Element::new("vertex", n)
            .with_scalar("x", ScalarType::F64, col(&|p| p.position.x))
            .with_scalar("y", ScalarType::F64, col(&|p| p.position.y))
            .with_scalar("z", ScalarType::F64, col(&|p| p.position.z))
            .with_scalar("confidence", ScalarType::F64, col(&|p| p.confidence))
            .with_scalar("quality", ScalarType::F64, col(&|p| p.quality))
            .with_scalar("frame_id", ScalarType::U32, col(&|p| p.frame_id as f64))
            .with_scalar("reproj_error", ScalarType::F64, col(&|p| p.reproj_error));
        if let Some(s) = &self.semantic {
            vertex = vertex.with_scalar("semantic_label", ScalarType::U8, s.iter().map(|c| c.index() as f64).collect());
        }
        if let Some(ids) = &self.instance {
            vertex = vertex.with_scalar("instance_id", ScalarType::U32, ids.iter().map(|&i| i as f64).collect());
        }
        if let Some(ids) = &self.track {
            vertex = vertex.with_scalar("track_id", ScalarType::U32, ids.iter().map(|&i| i as f64).collect());
        }
        Ply { comments: vec!["sitewave point cloud".into()], elements: vec![vertex] }
    }

    pub fn write_ply(&self, path: &Path) -> Result<(), ReconError> {
        std::fs::write(path, self.to_ply().to_ascii())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64) -> RawPoint {
        RawPoint::new(Vec3::new(x, 0.0, 0.0), 0.5, 0.25, 3, 0.01)
    }

    #[test]
    fn rejects_out_of_range_attributes() {
        let mut p = pt(0.0);
        p.confidence = 1.5;
        assert!(PointCloud::new(vec![p], None, None).is_err());
        let mut p = pt(0.0);
        p.reproj_error = -0.1;
        assert!(PointCloud::new(vec![p], None, None).is_err());
    }

    #[test]
    fn instance_requires_semantic() {
        let r = PointCloud::new(vec![pt(0.0)], None, Some(vec![1]));
        assert!(matches!(r, Err(ReconError::InvalidCloud(_))));
    }

    #[test]
    fn ply_round_trip() {
        let cloud = PointCloud::with_tracks(
            vec![pt(0.125), pt(1.0 / 3.0)],
            Some(vec![SemanticClass::Wall, SemanticClass::Chair]),
            Some(vec![4, 9]),
            Some(vec![0, 0]),
        )
        .unwrap();
        let text = cloud.to_ply().to_ascii();
        let back = PointCloud::from_ply(&Ply::read(text.as_bytes()).unwrap()).unwrap();
        assert_eq!(back, cloud);
    }

    #[test]
    fn class_names_round_trip() {
        for c in SemanticClass::ALL {
            assert_eq!(c.to_string().parse::<SemanticClass>().unwrap(), c);
            assert_eq!(SemanticClass::from_index(c.index()), Some(c));
        }
        assert!(SemanticClass::Wall.is_planar() && !SemanticClass::Door.is_planar());
    }
}

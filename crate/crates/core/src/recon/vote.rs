use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::materials::MaterialClass;

use super::ReconError;

/// One frame's material prediction for one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameVote {
    pub object_id: u32,
    pub frame_id: u32,
    #[serde(rename = "material")]
    pub predicted_material: MaterialClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub material: MaterialClass,
    pub counts: BTreeMap<MaterialClass, usize>,
    /// Classes sharing the top count when there was a tie (winner included).
    pub tied: Vec<MaterialClass>,
}

impl VoteOutcome {
    pub fn is_tie(&self) -> bool {
        !self.tied.is_empty()
    }
}

/// Majority vote over the frames that saw `object_id`. Ties go to the class
/// with the highest priority (concrete, metal, glass, wood, plywood, air) and
/// are listed in [`VoteOutcome::tied`].
pub fn vote_material(votes: &[FrameVote], object_id: u32) -> Result<VoteOutcome, ReconError> {
    let mut counts: BTreeMap<MaterialClass, usize> = BTreeMap::new();
    for v in votes.iter().filter(|v| v.object_id == object_id) {
        *counts.entry(v.predicted_material).or_default() += 1;
    }
    let top = counts.values().copied().max().ok_or(ReconError::Unlabeled(vec![object_id]))?;
    let mut leaders: Vec<MaterialClass> = counts.iter().filter(|&(_, &c)| c == top).map(|(&m, _)| m).collect();
    leaders.sort_by_key(|m| m.vote_priority());
    let material = leaders[0];
    let tied = if leaders.len() > 1 { leaders } else { Vec::new() };
    Ok(VoteOutcome { material, counts, tied })
}

/// Parses `object_id,frame_id,material` rows (header required, `#` comments
/// allowed). Repeated `(object_id, frame_id)` pairs are rejected.
pub fn parse_votes(text: &str) -> Result<Vec<FrameVote>, ReconError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (row, rec) in rdr.deserialize::<FrameVote>().enumerate() {
        let v = rec.map_err(|e| ReconError::Votes(format!("row {}: {e}", row + 1)))?;
        if !seen.insert((v.object_id, v.frame_id)) {
            return Err(ReconError::Votes(format!("object {} has two votes from frame {}", v.object_id, v.frame_id)));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn load_votes(path: &Path) -> Result<Vec<FrameVote>, ReconError> {
    parse_votes(&std::fs::read_to_string(path)?)
}

pub fn write_votes(votes: &[FrameVote]) -> String {
    let mut out = String::from("object_id,frame_id,material\n");
    for v in votes {
        out.push_str(&format!("{},{},{}\n", v.object_id, v.frame_id, v.predicted_material));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use MaterialClass::*;

    fn votes(ms: &[MaterialClass]) -> Vec<FrameVote> {
        ms.iter()
            .enumerate()
            .map(|(f, &m)| FrameVote { object_id: 1, frame_id: f as u32, predicted_material: m })
            .collect()
    }

    #[test]
    fn strict_majority() {
        let o = vote_material(&votes(&[Wood, Wood, Metal]), 1).unwrap();
        assert_eq!(o.material, Wood);
        assert!(!o.is_tie());
    }

    #[test]
    fn singleton() {
        assert_eq!(vote_material(&votes(&[Wood]), 1).unwrap().material, Wood);
    }

    #[test]
    fn tie_uses_priority_and_is_reported() {
        let o = vote_material(&votes(&[Wood, Metal]), 1).unwrap();
        assert_eq!(o.material, Metal);
        assert_eq!(o.tied, vec![Metal, Wood]);
        let o = vote_material(&votes(&[Plywood, Glass, Concrete, Glass, Concrete]), 1).unwrap();
        assert_eq!(o.material, Concrete);
    }

    #[test]
    fn no_votes_is_an_error() {
        assert!(matches!(vote_material(&votes(&[Wood]), 2), Err(ReconError::Unlabeled(ids)) if ids == vec![2]));
    }

    #[test]
    fn csv_round_trip_and_duplicates() {
        let v = votes(&[Wood, Glass, Concrete]);
        assert_eq!(parse_votes(&write_votes(&v)).unwrap(), v);
        let dup = "object_id,frame_id,material\n1,3,wood\n1,3,metal\n";
        assert!(matches!(parse_votes(dup), Err(ReconError::Votes(_))));
        assert!(parse_votes("object_id,frame_id,material\n1,3,brick\n").is_err());
    }

    proptest! {
        #[test]
        fn argmax_invariant_under_duplication(ms in prop::collection::vec(0usize..5, 1..30)) {
            let ms: Vec<_> = ms.into_iter().map(|i| MaterialClass::ALL[i]).collect();
            let once = vote_material(&votes(&ms), 1).unwrap();
            let doubled: Vec<_> = ms.iter().chain(ms.iter()).copied().collect();
            let twice = vote_material(&votes(&doubled), 1).unwrap();
            prop_assert_eq!(once.material, twice.material);
            prop_assert_eq!(once.tied, twice.tied);
        }
    }
}

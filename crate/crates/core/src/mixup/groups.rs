use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{MixupError, Result};

pub const TEMPO_LOW_BPM: f64 = 60.0;
pub const TEMPO_HIGH_BPM: f64 = 180.0;

/// Fixed-width BPM bucket. `bpm_range` is half-open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TempoGroup {
    pub group_id: u32,
    pub bpm_range: (f64, f64),
    pub members: BTreeSet<String>,
}

fn bucket_count(width: f64) -> u32 {
    ((TEMPO_HIGH_BPM - TEMPO_LOW_BPM) / width).ceil().max(1.0) as u32
}

/// `floor((bpm − 60) / width)`, clamped into the first and last buckets.
pub fn group_id_for(bpm: f64, width: f64) -> Result<u32> {
    if !(width.is_finite() && width > 0.0) {
        return Err(MixupError::InvalidConfig(format!("bucket width {width} must be positive")));
    }
    if !bpm.is_finite() {
        return Err(MixupError::InvalidConfig(format!("tempo {bpm} is not finite")));
    }
    let last = bucket_count(width) - 1;
    let raw = ((bpm - TEMPO_LOW_BPM) / width).floor();
    Ok(raw.clamp(0.0, f64::from(last)) as u32)
}

/// Buckets tracks by tempo. Only non-empty groups are returned, ordered by id.
pub fn assign_tempo_groups(tempi: &BTreeMap<String, f64>, width: f64) -> Result<Vec<TempoGroup>> {
    let mut groups: BTreeMap<u32, TempoGroup> = BTreeMap::new();
    for (id, &bpm) in tempi {
        let g = group_id_for(bpm, width)?;
        let low = TEMPO_LOW_BPM + f64::from(g) * width;
        let high = (low + width).min(TEMPO_HIGH_BPM);
        groups
            .entry(g)
            .or_insert_with(|| TempoGroup {
                group_id: g,
                bpm_range: (low, high),
                members: BTreeSet::new(),
            })
            .members
            .insert(id.clone());
    }
    Ok(groups.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tempi(list: &[(&str, f64)]) -> BTreeMap<String, f64> {
        list.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn neighbours_share_a_bucket() {
        assert_eq!(group_id_for(120.0, 4.0).unwrap(), group_id_for(121.0, 4.0).unwrap());
        assert_ne!(group_id_for(120.0, 4.0).unwrap(), group_id_for(125.0, 4.0).unwrap());
    }

    #[test]
    fn out_of_range_tempi_are_clamped() {
        assert_eq!(group_id_for(45.0, 4.0).unwrap(), 0);
        assert_eq!(group_id_for(250.0, 4.0).unwrap(), 29);
        assert_eq!(group_id_for(179.9, 7.0).unwrap(), 17);
    }

    #[test]
    fn empty_corpus_has_no_groups() {
        assert!(assign_tempo_groups(&BTreeMap::new(), 4.0).unwrap().is_empty());
    }

    #[test]
    fn ranges_cover_members() {
        let groups =
            assign_tempo_groups(&tempi(&[("a", 120.0), ("b", 121.5), ("c", 178.0)]), 7.0).unwrap();
        assert_eq!(groups.len(), 2);
        for g in &groups {
            for m in &g.members {
                let bpm = [("a", 120.0), ("b", 121.5), ("c", 178.0)]
                    .iter()
                    .find(|x| x.0 == m)
                    .unwrap()
                    .1;
                assert!(g.bpm_range.0 <= bpm && bpm < g.bpm_range.1);
            }
        }
        assert_eq!(groups[1].bpm_range, (179.0 - 7.0, 179.0));
    }

    #[test]
    fn zero_width_is_rejected() {
        assert!(group_id_for(120.0, 0.0).is_err());
    }
}

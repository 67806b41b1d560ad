//! Finite joint distributions over (feature, group, label) with exact masses.
//!
//! A [`JointDistribution`] is the reference object everything else is built
//! from: cells carry exact positive/negative masses, groups are kept in
//! declaration order, and cells are kept in a canonical order (group
//! declaration order, then descending score, then feature id) so that every
//! derived artifact serializes deterministically.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::RandomizedClassifier;
use crate::error::{Error, Result};
use crate::rat::Rat;

/// Opaque feature token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureId(String);

/// Opaque protected-group token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(String);

macro_rules! token_impls {
    ($ty:ident) => {
        impl $ty {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }
        impl From<&str> for $ty {
            fn from(s: &str) -> Self {
                $ty(s.to_string())
            }
        }
        impl From<String> for $ty {
            fn from(s: String) -> Self {
                $ty(s)
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

token_impls!(FeatureId);
token_impls!(GroupId);

/// One input row: feature `x`, group `z`, label `y` in {0, 1}, mass `p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRecord {
    pub x: FeatureId,
    pub z: GroupId,
    pub y: u8,
    pub p: Rat,
}

/// A (feature, group) cell with its exact label masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    feature: FeatureId,
    group: GroupId,
    pos: Rat,
    neg: Rat,
}

impl Cell {
    pub fn feature(&self) -> &FeatureId {
        &self.feature
    }

    pub fn group(&self) -> &GroupId {
        &self.group
    }

    /// Mass of this cell carrying label 1.
    pub fn pos(&self) -> &Rat {
        &self.pos
    }

    /// Mass of this cell carrying label 0.
    pub fn neg(&self) -> &Rat {
        &self.neg
    }

    pub fn mass(&self) -> Rat {
        &self.pos + &self.neg
    }

    /// Probability of label 1 conditioned on landing in this cell.
    pub fn score(&self) -> Rat {
        &self.pos / self.mass()
    }
}

#[derive(Debug, Clone)]
struct GroupStats {
    mass: Rat,
    pos: Rat,
    neg: Rat,
}

/// Validated joint distribution with total mass exactly 1 and at least two
/// nonempty groups. Immutable after construction.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    cells: Vec<Cell>,
    groups: Vec<GroupId>,
    index: HashMap<(FeatureId, GroupId), usize>,
    group_index: HashMap<GroupId, usize>,
    stats: Vec<GroupStats>,
}

#[derive(Deserialize)]
struct DistributionFile {
    records: Vec<InputRecord>,
}

impl JointDistribution {
    /// Builds a distribution from raw rows.
    ///
    /// Masses for repeated (feature, group, label) keys are summed, zero-mass
    /// cells are dropped, and groups are declared in order of first
    /// appearance. A group mentioned only by zero-mass rows is still declared
    /// and therefore rejected as empty.
    pub fn from_records<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FeatureId, GroupId, bool, Rat)>,
    {
        let mut groups: Vec<GroupId> = Vec::new();
        let mut order: Vec<(FeatureId, GroupId)> = Vec::new();
        let mut sums: HashMap<(FeatureId, GroupId), (Rat, Rat)> = HashMap::new();

        for (feature, group, label, mass) in rows {
            if mass.is_negative() {
                return Err(Error::Schema(format!(
                    "negative mass {mass} for feature `{feature}` in group `{group}`"
                )));
            }
            if !groups.contains(&group) {
                groups.push(group.clone());
            }
            let key = (feature, group);
            let entry = sums.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (Rat::zero(), Rat::zero())
            });
            if label {
                entry.0 += mass;
            } else {
                entry.1 += mass;
            }
        }

        let mut total = Rat::zero();
        for (pos, neg) in sums.values() {
            total += pos;
            total += neg;
        }
        if !total.is_one() {
            return Err(Error::TotalMassNotOne {
                got: total.to_string(),
            });
        }
        if groups.len() < 2 {
            return Err(Error::FewerThanTwoGroups(groups.len()));
        }

        let group_pos = |g: &GroupId| groups.iter().position(|x| x == g).unwrap();
        let mut cells: Vec<Cell> = order
            .into_iter()
            .filter_map(|key| {
                let (pos, neg) = sums.remove(&key).unwrap();
                if pos.is_zero() && neg.is_zero() {
                    None
                } else {
                    Some(Cell {
                        feature: key.0,
                        group: key.1,
                        pos,
                        neg,
                    })
                }
            })
            .collect();
        cells.sort_by(|a, b| {
            group_pos(&a.group)
                .cmp(&group_pos(&b.group))
                .then_with(|| b.score().cmp(&a.score()))
                .then_with(|| a.feature.cmp(&b.feature))
        });

        let mut stats: Vec<GroupStats> = groups
            .iter()
            .map(|_| GroupStats {
                mass: Rat::zero(),
                pos: Rat::zero(),
                neg: Rat::zero(),
            })
            .collect();
        for cell in &cells {
            let gi = group_pos(&cell.group);
            stats[gi].mass += cell.mass();
            stats[gi].pos += &cell.pos;
            stats[gi].neg += &cell.neg;
        }
        if let Some(gi) = stats.iter().position(|s| s.mass.is_zero()) {
            return Err(Error::EmptyGroup(groups[gi].to_string()));
        }

        let index = cells
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.feature.clone(), c.group.clone()), i))
            .collect();
        let group_index = groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();

        Ok(JointDistribution {
            cells,
            groups,
            index,
            group_index,
            stats,
        })
    }

    pub fn from_input_records(records: &[InputRecord]) -> Result<Self> {
        let rows: Vec<_> = records
            .iter()
            .map(|r| {
                let label = match r.y {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(Error::Schema(format!(
                            "label must be 0 or 1, got {other}"
                        )))
                    }
                };
                Ok((r.x.clone(), r.z.clone(), label, r.p.clone()))
            })
            .collect::<Result<_>>()?;
        Self::from_records(rows)
    }

    /// Parses the JSON schema `{"records":[{"x","z","y","p"}, ...]}`.
    pub fn from_json_str(input: &str) -> Result<Self> {
        let file: DistributionFile = serde_json::from_str(input)
            .map_err(|e| Error::Schema(format!("distribution json: {e}")))?;
        Self::from_input_records(&file.records)
    }

    /// Parses CSV rows with header `x,z,y,p`.
    pub fn from_csv_str(input: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input.as_bytes());
        let mut records = Vec::new();
        for row in reader.deserialize::<InputRecord>() {
            records.push(row.map_err(|e| Error::Schema(format!("distribution csv: {e}")))?);
        }
        Self::from_input_records(&records)
    }

    /// Groups in declaration order.
    pub fn groups(&self) -> &[GroupId] {
        &self.groups
    }

    /// Cells in canonical order: group declaration order, then descending
    /// score, then feature id.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, feature: &FeatureId, group: &GroupId) -> Option<&Cell> {
        self.index
            .get(&(feature.clone(), group.clone()))
            .map(|&i| &self.cells[i])
    }

    fn group_stats(&self, group: &GroupId) -> Result<&GroupStats> {
        self.group_index
            .get(group)
            .map(|&i| &self.stats[i])
            .ok_or_else(|| Error::UnknownGroup(group.to_string()))
    }

    /// Total mass of a group, Pr[Z = group].
    pub fn group_mass(&self, group: &GroupId) -> Result<Rat> {
        Ok(self.group_stats(group)?.mass.clone())
    }

    /// Positive mass of a group, Pr[Z = group, Y = 1].
    pub fn group_pos(&self, group: &GroupId) -> Result<Rat> {
        Ok(self.group_stats(group)?.pos.clone())
    }

    /// Negative mass of a group, Pr[Z = group, Y = 0].
    pub fn group_neg(&self, group: &GroupId) -> Result<Rat> {
        Ok(self.group_stats(group)?.neg.clone())
    }

    /// Pr[Y = 1] over the whole distribution.
    pub fn prior_positive(&self) -> Rat {
        self.stats.iter().map(|s| &s.pos).sum()
    }

    /// Score of one cell, Pr[Y = 1 | (X, Z) = (feature, group)].
    pub fn score(&self, feature: &FeatureId, group: &GroupId) -> Result<Rat> {
        self.cell(feature, group)
            .map(Cell::score)
            .ok_or_else(|| Error::UnknownCell {
                feature: feature.to_string(),
                group: group.to_string(),
            })
    }

    /// Deterministic classifier accepting exactly the cells with score >= alpha.
    pub fn bayes_optimal(&self, alpha: &Rat) -> Result<RandomizedClassifier> {
        check_alpha(alpha)?;
        let entries = self
            .cells
            .iter()
            .map(|c| {
                let p = if &c.score() >= alpha {
                    Rat::one()
                } else {
                    Rat::zero()
                };
                (c.feature.clone(), c.group.clone(), p)
            })
            .collect();
        RandomizedClassifier::from_acceptances(entries)
    }

    /// The same distribution with labels 0 and 1 exchanged.
    pub fn flip_labels(&self) -> JointDistribution {
        let rows: Vec<_> = self
            .cells
            .iter()
            .flat_map(|c| {
                [
                    (c.feature.clone(), c.group.clone(), true, c.neg.clone()),
                    (c.feature.clone(), c.group.clone(), false, c.pos.clone()),
                ]
            })
            .collect();
        Self::from_records(rows).expect("label flip preserves validity")
    }
}

/// Validates 0 < alpha < 1.
pub fn check_alpha(alpha: &Rat) -> Result<()> {
    if alpha <= &Rat::zero() || alpha >= &Rat::one() {
        return Err(Error::AlphaOutOfRange(alpha.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier;
    use crate::testutil::{advantage_example, feat, grp, row};

    #[test]
    fn builds_the_two_group_example() {
        let dist = advantage_example();
        assert_eq!(dist.groups().len(), 2);
        assert_eq!(dist.cells().len(), 3);
        assert_eq!(dist.groups()[0], grp("A"));
        assert_eq!(dist.groups()[1], grp("D"));
    }

    #[test]
    fn sums_duplicate_rows_and_drops_zero_mass() {
        let dist = JointDistribution::from_records(vec![
            row("x1", "A", 1, "1/4"),
            row("x1", "A", 1, "1/4"),
            row("x1", "D", 0, "1/2"),
            row("x2", "A", 1, "0"),
        ])
        .unwrap();
        assert_eq!(dist.cells().len(), 2);
        assert_eq!(dist.score(&feat("x1"), &grp("A")).unwrap(), Rat::one());
        assert!(dist.cell(&feat("x2"), &grp("A")).is_none());
    }

    #[test]
    fn rejects_total_mass_not_one() {
        let err = JointDistribution::from_records(vec![
            row("x1", "A", 1, "3/8"),
            row("x1", "D", 0, "1/2"),
        ])
        .unwrap_err();
        assert_eq!(err.code(), "TotalMassNotOne");
    }

    #[test]
    fn rejects_group_declared_with_zero_mass() {
        let err = JointDistribution::from_records(vec![
            row("x", "A", 1, "1"),
            row("y", "D", 1, "0"),
        ])
        .unwrap_err();
        assert_eq!(err, Error::EmptyGroup("D".to_string()));
    }

    #[test]
    fn rejects_single_group() {
        let err =
            JointDistribution::from_records(vec![row("x", "A", 1, "1")]).unwrap_err();
        assert_eq!(err, Error::FewerThanTwoGroups(1));
    }

    #[test]
    fn prior_positive_matches_hand_count() {
        assert_eq!(advantage_example().prior_positive(), Rat::one_half());

        let all_neg = JointDistribution::from_records(vec![
            row("x", "A", 0, "1/2"),
            row("y", "D", 0, "1/2"),
        ])
        .unwrap();
        assert!(all_neg.prior_positive().is_zero());

        let all_pos = JointDistribution::from_records(vec![
            row("x", "A", 1, "1/2"),
            row("y", "D", 1, "1/2"),
        ])
        .unwrap();
        assert!(all_pos.prior_positive().is_one());
    }

    #[test]
    fn scores_are_exact_conditionals() {
        let dist = advantage_example();
        assert_eq!(dist.score(&feat("x1"), &grp("A")).unwrap(), Rat::new(3, 4));
        assert_eq!(dist.score(&feat("x2"), &grp("D")).unwrap(), Rat::zero());

        let balanced = JointDistribution::from_records(vec![
            row("x", "A", 1, "1/4"),
            row("x", "A", 0, "1/4"),
            row("y", "D", 1, "1/2"),
        ])
        .unwrap();
        assert_eq!(
            balanced.score(&feat("x"), &grp("A")).unwrap(),
            Rat::one_half()
        );

        let err = dist.score(&feat("x2"), &grp("A")).unwrap_err();
        assert_eq!(err.code(), "UnknownCell");
    }

    #[test]
    fn bayes_optimal_thresholds_scores() {
        let dist = advantage_example();
        let bayes = dist.bayes_optimal(&Rat::one_half()).unwrap();
        assert!(bayes.accept(&feat("x1"), &grp("A")).unwrap().is_one());
        assert!(bayes.accept(&feat("x1"), &grp("D")).unwrap().is_one());
        assert!(bayes.accept(&feat("x2"), &grp("D")).unwrap().is_zero());
        assert_eq!(
            classifier::loss01(&bayes, &dist).unwrap(),
            Rat::new(1, 4)
        );
    }

    #[test]
    fn bayes_accepts_everything_when_all_scores_pass() {
        let dist = JointDistribution::from_records(vec![
            row("x", "A", 1, "1/2"),
            row("y", "D", 1, "1/2"),
        ])
        .unwrap();
        let bayes = dist.bayes_optimal(&Rat::one_half()).unwrap();
        assert!(bayes.entries().all(|(_, _, p)| p.is_one()));
    }

    #[test]
    fn bayes_high_threshold_leaves_only_false_negatives() {
        let dist = advantage_example();
        let alpha = Rat::new(4, 5);
        let bayes = dist.bayes_optimal(&alpha).unwrap();
        assert!(bayes.entries().all(|(_, _, p)| p.is_zero()));
        let expected = (Rat::one() - &alpha) * dist.prior_positive();
        assert_eq!(
            classifier::loss(&bayes, &dist, &alpha).unwrap(),
            expected
        );
    }

    #[test]
    fn bayes_rejects_alpha_out_of_range() {
        let dist = advantage_example();
        assert!(dist.bayes_optimal(&Rat::one()).is_err());
        assert!(dist.bayes_optimal(&Rat::zero()).is_err());
    }

    #[test]
    fn json_and_csv_inputs_agree() {
        let json = r#"{"records":[
            {"x":"x1","z":"A","y":1,"p":"3/8"},
            {"x":"x1","z":"A","y":0,"p":"0.125"},
            {"x":"x1","z":"D","y":1,"p":"1/8"},
            {"x":"x1","z":"D","y":0,"p":"1/8"},
            {"x":"x2","z":"D","y":0,"p":"1/4"}
        ]}"#;
        let csv = "x,z,y,p\nx1,A,1,3/8\nx1,A,0,0.125\nx1,D,1,1/8\nx1,D,0,1/8\nx2,D,0,1/4\n";
        let a = JointDistribution::from_json_str(json).unwrap();
        let b = JointDistribution::from_csv_str(csv).unwrap();
        assert_eq!(a.cells(), b.cells());
        assert_eq!(a.groups(), b.groups());
    }

    #[test]
    fn flip_labels_swaps_masses() {
        let dist = advantage_example();
        let flipped = dist.flip_labels();
        assert_eq!(flipped.prior_positive(), Rat::one_half());
        assert_eq!(
            flipped.score(&feat("x2"), &grp("D")).unwrap(),
            Rat::one()
        );
        assert_eq!(
            flipped.score(&feat("x1"), &grp("A")).unwrap(),
            Rat::new(1, 4)
        );
    }
}

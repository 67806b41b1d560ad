//! Group-wise sorted cells, mass-prefix selections, and boundary sets.
//!
//! Within each group, cells with equal score are merged and the result is
//! sorted in strictly descending score order. Thresholding a group then means
//! taking a prefix of this order by relative mass, splitting at most one cell.
//! The boundary sets collect the finitely many rates at which some group's
//! prefix composition changes; the loss curves are linear between consecutive
//! boundary points, so solvers only ever evaluate there.

use serde::Serialize;

use crate::distribution::{FeatureId, GroupId, JointDistribution};
use crate::error::{Error, Result};
use crate::rat::Rat;

/// A merged cell of one group: exact score, relative mass within the group,
/// and the features that fell into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupCell {
    pub score: Rat,
    pub mass: Rat,
    pub members: Vec<FeatureId>,
}

impl GroupCell {
    /// Relative mass of this cell carrying label 1.
    pub fn pos_mass(&self) -> Rat {
        &self.mass * &self.score
    }

    /// Relative mass of this cell carrying label 0.
    pub fn neg_mass(&self) -> Rat {
        &self.mass * (Rat::one() - &self.score)
    }
}

/// One group's cells merged by equal score, in strictly descending score
/// order, with cumulative relative masses ending exactly at 1.
#[derive(Debug, Clone)]
pub struct SortedGroupCells {
    group: GroupId,
    cells: Vec<GroupCell>,
    cumulative: Vec<Rat>,
    pos_share: Rat,
    neg_share: Rat,
}

/// A group's selection at threshold `t`: the whole cells included plus at
/// most one cell split by an interior fraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassPrefix {
    pub group: GroupId,
    pub threshold: Rat,
    pub whole_cells: Vec<usize>,
    pub split_cell: Option<(usize, Rat)>,
}

/// What a boundary set indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Score,
    FalsePositive,
    FalseNegative,
}

/// Strictly increasing rates from 0 to 1 at which threshold classifiers
/// change cell composition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundarySet {
    pub kind: BoundaryKind,
    pub points: Vec<Rat>,
}

/// Builds the sorted, merged cells of one group.
pub fn build_sorted_cells(dist: &JointDistribution, group: &GroupId) -> Result<SortedGroupCells> {
    let group_mass = dist.group_mass(group)?;
    let mut cells: Vec<GroupCell> = Vec::new();
    for cell in dist.cells().iter().filter(|c| c.group() == group) {
        let score = cell.score();
        let mass = cell.mass() / &group_mass;
        match cells.last_mut() {
            Some(last) if last.score == score => {
                last.mass += mass;
                last.members.push(cell.feature().clone());
            }
            _ => cells.push(GroupCell {
                score,
                mass,
                members: vec![cell.feature().clone()],
            }),
        }
    }
    let mut cumulative = Vec::with_capacity(cells.len());
    let mut acc = Rat::zero();
    let mut pos_share = Rat::zero();
    for cell in &cells {
        acc += &cell.mass;
        cumulative.push(acc.clone());
        pos_share += cell.pos_mass();
    }
    debug_assert!(cumulative.last().map(Rat::is_one).unwrap_or(false));
    let neg_share = Rat::one() - &pos_share;
    Ok(SortedGroupCells {
        group: group.clone(),
        cells,
        cumulative,
        pos_share,
        neg_share,
    })
}

/// Sorted cells for every group, in group declaration order.
pub fn all_sorted_cells(dist: &JointDistribution) -> Vec<SortedGroupCells> {
    dist.groups()
        .iter()
        .map(|g| build_sorted_cells(dist, g).expect("group exists"))
        .collect()
}

fn check_threshold(t: &Rat) -> Result<()> {
    if t < &Rat::zero() || t > &Rat::one() {
        return Err(Error::ThresholdOutOfRange(t.to_string()));
    }
    Ok(())
}

impl SortedGroupCells {
    pub fn group(&self) -> &GroupId {
        &self.group
    }

    pub fn cells(&self) -> &[GroupCell] {
        &self.cells
    }

    pub fn cumulative(&self) -> &[Rat] {
        &self.cumulative
    }

    /// Pr[Y = 1 | Z = group].
    pub fn pos_share(&self) -> &Rat {
        &self.pos_share
    }

    /// Pr[Y = 0 | Z = group].
    pub fn neg_share(&self) -> &Rat {
        &self.neg_share
    }

    /// Relative mass of the leading cell when its score is exactly 1.
    pub fn leading_score_one_mass(&self) -> Rat {
        match self.cells.first() {
            Some(c) if c.score.is_one() => c.mass.clone(),
            _ => Rat::zero(),
        }
    }

    /// Relative mass of the trailing cell when its score is exactly 0.
    pub fn trailing_score_zero_mass(&self) -> Rat {
        match self.cells.last() {
            Some(c) if c.score.is_zero() => c.mass.clone(),
            _ => Rat::zero(),
        }
    }

    /// The top `t` fraction of this group's mass.
    pub fn mass_prefix(&self, t: &Rat) -> Result<MassPrefix> {
        check_threshold(t)?;
        let mut whole_cells = Vec::new();
        let mut split_cell = None;
        let mut prev = Rat::zero();
        for (i, cum) in self.cumulative.iter().enumerate() {
            if cum <= t {
                whole_cells.push(i);
                prev = cum.clone();
            } else {
                if t > &prev {
                    let fraction = (t - &prev) / &self.cells[i].mass;
                    split_cell = Some((i, fraction));
                }
                break;
            }
        }
        Ok(MassPrefix {
            group: self.group.clone(),
            threshold: t.clone(),
            whole_cells,
            split_cell,
        })
    }

    /// Group-conditional false positive rate of the threshold-`t` selection.
    pub fn fpr_at(&self, t: &Rat) -> Result<Rat> {
        self.require_negatives()?;
        let prefix = self.mass_prefix(t)?;
        let mut neg = Rat::zero();
        for &i in &prefix.whole_cells {
            neg += self.cells[i].neg_mass();
        }
        if let Some((i, fraction)) = &prefix.split_cell {
            neg += fraction * self.cells[*i].neg_mass();
        }
        Ok(neg / &self.neg_share)
    }

    /// Group-conditional false negative rate of the threshold-`t` selection.
    pub fn fnr_at(&self, t: &Rat) -> Result<Rat> {
        self.require_positives()?;
        let prefix = self.mass_prefix(t)?;
        let mut accepted_pos = Rat::zero();
        for &i in &prefix.whole_cells {
            accepted_pos += self.cells[i].pos_mass();
        }
        if let Some((i, fraction)) = &prefix.split_cell {
            accepted_pos += fraction * self.cells[*i].pos_mass();
        }
        Ok((&self.pos_share - accepted_pos) / &self.pos_share)
    }

    /// Inverts the threshold -> FPR map.
    ///
    /// The map is flat at 0 across a leading score-1 cell, so `r = 0` returns
    /// the end of that cell: the selection accepting exactly the score-1
    /// cells. Elsewhere the map is strictly increasing and the inverse is
    /// unique.
    pub fn threshold_for_fpr(&self, r: &Rat) -> Result<Rat> {
        self.require_negatives()?;
        check_threshold(r)?;
        if r.is_zero() {
            return Ok(self.leading_score_one_mass());
        }
        let target = r * &self.neg_share;
        let mut acc_neg = Rat::zero();
        let mut cum = Rat::zero();
        for cell in &self.cells {
            let neg = cell.neg_mass();
            if !neg.is_zero() && &acc_neg + &neg >= target {
                let fraction = (&target - &acc_neg) / &neg;
                return Ok(cum + fraction * &cell.mass);
            }
            acc_neg += neg;
            cum += &cell.mass;
        }
        unreachable!("target FPR {r} not reached; negatives exhausted")
    }

    /// Inverts the threshold -> FNR map.
    ///
    /// The map is flat at 0 across a trailing score-0 cell, so `r = 0`
    /// returns the start of that cell: the selection rejecting exactly the
    /// score-0 cells. Elsewhere the inverse is unique.
    pub fn threshold_for_fnr(&self, r: &Rat) -> Result<Rat> {
        self.require_positives()?;
        check_threshold(r)?;
        if r.is_zero() {
            return Ok(Rat::one() - self.trailing_score_zero_mass());
        }
        let target = (Rat::one() - r) * &self.pos_share;
        let mut acc_pos = Rat::zero();
        let mut cum = Rat::zero();
        for cell in &self.cells {
            let pos = cell.pos_mass();
            if !pos.is_zero() && &acc_pos + &pos >= target {
                let fraction = (&target - &acc_pos) / &pos;
                return Ok(cum + fraction * &cell.mass);
            }
            acc_pos += pos;
            cum += &cell.mass;
        }
        unreachable!("target FNR {r} not reached; positives exhausted")
    }

    fn require_negatives(&self) -> Result<()> {
        if self.neg_share.is_zero() {
            return Err(Error::UndefinedMetric {
                group: self.group.to_string(),
                rate: "false positive rate",
                mass: "negative",
            });
        }
        Ok(())
    }

    fn require_positives(&self) -> Result<()> {
        if self.pos_share.is_zero() {
            return Err(Error::UndefinedMetric {
                group: self.group.to_string(),
                rate: "false negative rate",
                mass: "positive",
            });
        }
        Ok(())
    }
}

fn finish_boundary_set(kind: BoundaryKind, mut points: Vec<Rat>) -> BoundarySet {
    points.push(Rat::zero());
    points.push(Rat::one());
    points.sort();
    points.dedup();
    BoundarySet { kind, points }
}

/// Union over all groups of {0} and the cumulative cell-mass prefixes.
pub fn score_boundaries(dist: &JointDistribution) -> BoundarySet {
    let mut points = Vec::new();
    for sc in all_sorted_cells(dist) {
        points.extend(sc.cumulative.iter().cloned());
    }
    finish_boundary_set(BoundaryKind::Score, points)
}

/// All FPR values at which some group's threshold sits on one of its own
/// cell boundaries: the image of each group's boundaries under its
/// threshold -> FPR map.
pub fn fp_boundaries(dist: &JointDistribution) -> Result<BoundarySet> {
    let mut points = Vec::new();
    for sc in all_sorted_cells(dist) {
        sc.require_negatives()?;
        for cum in &sc.cumulative {
            points.push(sc.fpr_at(cum)?);
        }
    }
    Ok(finish_boundary_set(BoundaryKind::FalsePositive, points))
}

/// FNR analogue of [`fp_boundaries`].
pub fn fn_boundaries(dist: &JointDistribution) -> Result<BoundarySet> {
    let mut points = Vec::new();
    for sc in all_sorted_cells(dist) {
        sc.require_positives()?;
        for cum in &sc.cumulative {
            points.push(sc.fnr_at(cum)?);
        }
    }
    Ok(finish_boundary_set(BoundaryKind::FalseNegative, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::JointDistribution;
    use crate::testutil::{advantage_example, feat, grp, rat, row};

    fn points(set: &BoundarySet) -> Vec<Rat> {
        set.points.clone()
    }

    #[test]
    fn sorts_and_conditions_group_cells() {
        let dist = advantage_example();
        let d = build_sorted_cells(&dist, &grp("D")).unwrap();
        assert_eq!(d.cells().len(), 2);
        assert_eq!(d.cells()[0].score, rat("1/2"));
        assert_eq!(d.cells()[0].mass, rat("1/2"));
        assert_eq!(d.cells()[0].members, vec![feat("x1")]);
        assert_eq!(d.cells()[1].score, Rat::zero());
        assert_eq!(d.cells()[1].mass, rat("1/2"));

        let a = build_sorted_cells(&dist, &grp("A")).unwrap();
        assert_eq!(a.cells().len(), 1);
        assert_eq!(a.cells()[0].score, rat("3/4"));
        assert!(a.cells()[0].mass.is_one());

        assert!(build_sorted_cells(&dist, &grp("missing")).is_err());
    }

    #[test]
    fn merges_equal_scores_into_one_cell() {
        let dist = JointDistribution::from_records(vec![
            row("u", "A", 1, "1/8"),
            row("u", "A", 0, "1/4"),
            row("v", "A", 1, "1/12"),
            row("v", "A", 0, "1/6"),
            row("w", "D", 1, "3/8"),
        ])
        .unwrap();
        let a = build_sorted_cells(&dist, &grp("A")).unwrap();
        assert_eq!(a.cells().len(), 1);
        assert_eq!(a.cells()[0].score, rat("1/3"));
        assert!(a.cells()[0].mass.is_one());
        assert_eq!(a.cells()[0].members, vec![feat("u"), feat("v")]);
    }

    #[test]
    fn mass_prefix_splits_interior_thresholds() {
        let dist = advantage_example();
        let a = build_sorted_cells(&dist, &grp("A")).unwrap();
        let p = a.mass_prefix(&rat("1/2")).unwrap();
        assert!(p.whole_cells.is_empty());
        assert_eq!(p.split_cell, Some((0, rat("1/2"))));

        let empty = a.mass_prefix(&Rat::zero()).unwrap();
        assert!(empty.whole_cells.is_empty());
        assert!(empty.split_cell.is_none());

        let d = build_sorted_cells(&dist, &grp("D")).unwrap();
        let boundary = d.mass_prefix(&rat("1/2")).unwrap();
        assert_eq!(boundary.whole_cells, vec![0]);
        assert!(boundary.split_cell.is_none());

        assert!(d.mass_prefix(&rat("3/2")).is_err());
    }

    #[test]
    fn score_boundaries_collect_all_prefix_points() {
        let dist = advantage_example();
        assert_eq!(
            points(&score_boundaries(&dist)),
            vec![Rat::zero(), rat("1/2"), Rat::one()]
        );

        let single = JointDistribution::from_records(vec![
            row("x", "A", 1, "1/2"),
            row("y", "D", 0, "1/2"),
        ])
        .unwrap();
        assert_eq!(
            points(&score_boundaries(&single)),
            vec![Rat::zero(), Rat::one()]
        );

        let thirds = JointDistribution::from_records(vec![
            row("d1", "D", 1, "1/6"),
            row("d2", "D", 1, "1/12"),
            row("d2", "D", 0, "1/12"),
            row("d3", "D", 0, "1/6"),
            row("a", "A", 1, "1/2"),
        ])
        .unwrap();
        assert_eq!(
            points(&score_boundaries(&thirds)),
            vec![Rat::zero(), rat("1/3"), rat("2/3"), Rat::one()]
        );
    }

    #[test]
    fn fp_boundaries_map_group_prefixes_through_fpr() {
        let dist = advantage_example();
        assert_eq!(
            points(&fp_boundaries(&dist).unwrap()),
            vec![Rat::zero(), rat("1/3"), Rat::one()]
        );

        let flat = JointDistribution::from_records(vec![
            row("x", "A", 1, "1/4"),
            row("x", "A", 0, "1/4"),
            row("y", "D", 1, "1/4"),
            row("y", "D", 0, "1/4"),
        ])
        .unwrap();
        assert_eq!(
            points(&fp_boundaries(&flat).unwrap()),
            vec![Rat::zero(), Rat::one()]
        );

        let no_negs = JointDistribution::from_records(vec![
            row("x", "A", 1, "1/2"),
            row("y", "D", 0, "1/2"),
        ])
        .unwrap();
        let err = fp_boundaries(&no_negs).unwrap_err();
        assert_eq!(err.code(), "UndefinedMetric");
    }

    #[test]
    fn fn_boundaries_mirror_fp_boundaries() {
        let dist = advantage_example();
        // Group A's interior prefixes and group D's positive cells produce no
        // interior FNR image points here, only the forced endpoints.
        assert_eq!(
            points(&fn_boundaries(&dist).unwrap()),
            vec![Rat::zero(), Rat::one()]
        );

        // Label-flip duality: FN boundaries of the flipped distribution are
        // exactly the FP boundaries of the original.
        let flipped = dist.flip_labels();
        assert_eq!(
            points(&fn_boundaries(&flipped).unwrap()),
            points(&fp_boundaries(&dist).unwrap())
        );

        let no_pos = JointDistribution::from_records(vec![
            row("x", "A", 0, "1/2"),
            row("y", "D", 1, "1/2"),
        ])
        .unwrap();
        assert_eq!(fn_boundaries(&no_pos).unwrap_err().code(), "UndefinedMetric");
    }

    #[test]
    fn fpr_map_inverts_exactly() {
        let dist = advantage_example();
        let a = build_sorted_cells(&dist, &grp("A")).unwrap();
        let d = build_sorted_cells(&dist, &grp("D")).unwrap();

        assert_eq!(a.threshold_for_fpr(&rat("1/3")).unwrap(), rat("1/3"));
        assert_eq!(d.threshold_for_fpr(&rat("1/3")).unwrap(), rat("1/2"));
        assert_eq!(a.threshold_for_fpr(&Rat::one()).unwrap(), Rat::one());
        assert_eq!(d.threshold_for_fpr(&Rat::one()).unwrap(), Rat::one());

        // Round trip through the forward map.
        let t = d.threshold_for_fpr(&rat("2/3")).unwrap();
        assert_eq!(d.fpr_at(&t).unwrap(), rat("2/3"));
    }

    #[test]
    fn fpr_zero_accepts_exactly_score_one_cells() {
        let dist = JointDistribution::from_records(vec![
            row("top", "A", 1, "1/8"),
            row("mid", "A", 1, "1/8"),
            row("mid", "A", 0, "1/8"),
            row("low", "A", 0, "1/8"),
            row("y", "D", 1, "1/4"),
            row("y", "D", 0, "1/4"),
        ])
        .unwrap();
        let a = build_sorted_cells(&dist, &grp("A")).unwrap();
        assert_eq!(a.threshold_for_fpr(&Rat::zero()).unwrap(), rat("1/4"));

        let d = build_sorted_cells(&dist, &grp("D")).unwrap();
        assert_eq!(d.threshold_for_fpr(&Rat::zero()).unwrap(), Rat::zero());
    }

    #[test]
    fn fnr_zero_rejects_exactly_score_zero_cells() {
        let dist = advantage_example();
        let a = build_sorted_cells(&dist, &grp("A")).unwrap();
        let d = build_sorted_cells(&dist, &grp("D")).unwrap();
        assert_eq!(a.threshold_for_fnr(&Rat::zero()).unwrap(), Rat::one());
        assert_eq!(d.threshold_for_fnr(&Rat::zero()).unwrap(), rat("1/2"));
        assert_eq!(a.threshold_for_fnr(&Rat::one()).unwrap(), Rat::zero());
        assert_eq!(d.threshold_for_fnr(&rat("1/2")).unwrap(), rat("1/4"));
    }
}

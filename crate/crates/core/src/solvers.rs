//! Optimal randomized fair classifiers by convex piecewise-linear minimization.
//!
//! For each fairness notion the family of candidate optima is a
//! one-parameter family of mass-threshold classifiers: a common selection
//! fraction for demographic parity, a common false positive rate for
//! predictive equality, a common false negative rate for equal opportunity.
//! The loss along the parameter is convex, piecewise linear, and continuous,
//! and its slope can only change on the notion's boundary set, so the global
//! minimum is the minimum over the boundary points.

use serde::{Serialize, Serializer};

use crate::cells::{self, all_sorted_cells, BoundarySet, SortedGroupCells};
use crate::classifier::{self, groupwise_threshold_classifier, Notion, RandomizedClassifier};
use crate::distribution::{check_alpha, GroupId, JointDistribution};
use crate::error::{Error, Result};
use crate::rat::Rat;

/// A convex piecewise-linear function sampled at its breakpoints, linear in
/// between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PiecewiseLinearCurve {
    pub breakpoints: Vec<Rat>,
    pub values: Vec<Rat>,
}

impl PiecewiseLinearCurve {
    pub fn new(breakpoints: Vec<Rat>, values: Vec<Rat>) -> Self {
        assert_eq!(breakpoints.len(), values.len());
        assert!(breakpoints.len() >= 2);
        debug_assert!(breakpoints.windows(2).all(|w| w[0] < w[1]));
        PiecewiseLinearCurve {
            breakpoints,
            values,
        }
    }

    /// Slope of each segment between consecutive breakpoints.
    pub fn segment_slopes(&self) -> Vec<Rat> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(bp, v)| (&v[1] - &v[0]) / (&bp[1] - &bp[0]))
            .collect()
    }

    /// Convexity test: nondecreasing segment slopes.
    pub fn is_convex(&self) -> bool {
        self.segment_slopes().windows(2).all(|w| w[0] <= w[1])
    }

    /// Exact linear interpolation at `r` within the breakpoint range.
    pub fn value_at(&self, r: &Rat) -> Result<Rat> {
        let first = self.breakpoints.first().unwrap();
        let last = self.breakpoints.last().unwrap();
        if r < first || r > last {
            return Err(Error::ThresholdOutOfRange(r.to_string()));
        }
        let hi = self.breakpoints.iter().position(|b| b >= r).unwrap();
        if &self.breakpoints[hi] == r {
            return Ok(self.values[hi].clone());
        }
        let lo = hi - 1;
        let span = &self.breakpoints[hi] - &self.breakpoints[lo];
        let along = (r - &self.breakpoints[lo]) / span;
        Ok(&self.values[lo] + (&self.values[hi] - &self.values[lo]) * along)
    }

    /// Index of the smallest breakpoint attaining the minimum value.
    pub fn argmin(&self) -> usize {
        let min = self.values.iter().min().unwrap();
        self.values.iter().position(|v| v == min).unwrap()
    }

    /// Number of breakpoints attaining the minimum value.
    pub fn argmin_count(&self) -> usize {
        let min = self.values.iter().min().unwrap();
        self.values.iter().filter(|v| *v == min).count()
    }

    /// The same curve with all values doubled: the 0-1 loss view of a curve
    /// computed at alpha = 1/2.
    pub fn to_zero_one(&self) -> Self {
        let two = Rat::from_int(2);
        PiecewiseLinearCurve {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * &two).collect(),
        }
    }
}

/// An optimal fair classifier together with the curve that certified it.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub notion: Notion,
    pub alpha: Rat,
    /// The optimal common rate: selection rate for DP, FPR for PE, FNR for EO.
    pub rate: Rat,
    #[serde(serialize_with = "ser_group_thresholds")]
    pub group_thresholds: Vec<(GroupId, Rat)>,
    pub loss: Rat,
    /// 0-1 loss, present exactly when alpha = 1/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss01: Option<Rat>,
    pub unique: bool,
    pub classifier: RandomizedClassifier,
    pub curve: PiecewiseLinearCurve,
}

fn ser_group_thresholds<S: Serializer>(
    thresholds: &[(GroupId, Rat)],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry<'a> {
        z: &'a GroupId,
        t: &'a Rat,
    }
    serializer.collect_seq(thresholds.iter().map(|(z, t)| Entry { z, t }))
}

fn zero_one_view(alpha: &Rat, loss: &Rat) -> Option<Rat> {
    (alpha == &Rat::one_half()).then(|| loss * Rat::from_int(2))
}

/// Per-group thresholds of the classifier at parameter `r`, in group
/// declaration order.
fn thresholds_at(cellsets: &[SortedGroupCells], notion: Notion, r: &Rat) -> Result<Vec<Rat>> {
    cellsets
        .iter()
        .map(|sc| match notion {
            Notion::Dp => Ok(r.clone()),
            Notion::Pe => sc.threshold_for_fpr(r),
            Notion::Eo => sc.threshold_for_fnr(r),
        })
        .collect()
}

fn boundary_set(dist: &JointDistribution, notion: Notion) -> Result<BoundarySet> {
    match notion {
        Notion::Dp => Ok(cells::score_boundaries(dist)),
        Notion::Pe => cells::fp_boundaries(dist),
        Notion::Eo => cells::fn_boundaries(dist),
    }
}

fn curve_over(
    dist: &JointDistribution,
    cellsets: &[SortedGroupCells],
    notion: Notion,
    alpha: &Rat,
    boundaries: &BoundarySet,
) -> Result<PiecewiseLinearCurve> {
    let mut values = Vec::with_capacity(boundaries.points.len());
    for r in &boundaries.points {
        let thresholds = thresholds_at(cellsets, notion, r)?;
        let f = groupwise_threshold_classifier(dist, cellsets, &thresholds)?;
        values.push(classifier::loss(&f, dist, alpha)?);
    }
    Ok(PiecewiseLinearCurve::new(
        boundaries.points.clone(),
        values,
    ))
}

/// Loss of the common-threshold classifier as a function of the selection
/// rate, sampled on the score boundaries.
pub fn dp_loss_curve(dist: &JointDistribution, alpha: &Rat) -> Result<PiecewiseLinearCurve> {
    loss_curve(dist, Notion::Dp, alpha)
}

/// Loss of the FPR-equalizing classifier as a function of the common FPR,
/// sampled on the FP boundaries.
pub fn pe_loss_curve(dist: &JointDistribution, alpha: &Rat) -> Result<PiecewiseLinearCurve> {
    loss_curve(dist, Notion::Pe, alpha)
}

/// Loss of the FNR-equalizing classifier as a function of the common FNR,
/// sampled on the FN boundaries.
pub fn eo_loss_curve(dist: &JointDistribution, alpha: &Rat) -> Result<PiecewiseLinearCurve> {
    loss_curve(dist, Notion::Eo, alpha)
}

pub fn loss_curve(
    dist: &JointDistribution,
    notion: Notion,
    alpha: &Rat,
) -> Result<PiecewiseLinearCurve> {
    check_alpha(alpha)?;
    let cellsets = all_sorted_cells(dist);
    let boundaries = boundary_set(dist, notion)?;
    curve_over(dist, &cellsets, notion, alpha, &boundaries)
}

/// Per-group mass thresholds of the unique FPR-equalizing classifier at
/// common false positive rate `r`.
pub fn fpr_to_thresholds(dist: &JointDistribution, r: &Rat) -> Result<Vec<(GroupId, Rat)>> {
    let cellsets = all_sorted_cells(dist);
    let thresholds = thresholds_at(&cellsets, Notion::Pe, r)?;
    Ok(dist.groups().iter().cloned().zip(thresholds).collect())
}

/// FNR analogue of [`fpr_to_thresholds`].
pub fn fnr_to_thresholds(dist: &JointDistribution, r: &Rat) -> Result<Vec<(GroupId, Rat)>> {
    let cellsets = all_sorted_cells(dist);
    let thresholds = thresholds_at(&cellsets, Notion::Eo, r)?;
    Ok(dist.groups().iter().cloned().zip(thresholds).collect())
}

/// Minimizes the notion's loss curve over its boundary set and returns the
/// optimal classifier. Ties break toward the smallest rate.
pub fn solve(dist: &JointDistribution, notion: Notion, alpha: &Rat) -> Result<Solution> {
    check_alpha(alpha)?;
    let cellsets = all_sorted_cells(dist);
    let boundaries = boundary_set(dist, notion)?;
    let curve = curve_over(dist, &cellsets, notion, alpha, &boundaries)?;

    let idx = curve.argmin();
    let rate = curve.breakpoints[idx].clone();
    let loss = curve.values[idx].clone();
    let unique = curve.argmin_count() == 1;

    let thresholds = thresholds_at(&cellsets, notion, &rate)?;
    let classifier = groupwise_threshold_classifier(dist, &cellsets, &thresholds)?;
    let group_thresholds = dist.groups().iter().cloned().zip(thresholds).collect();

    Ok(Solution {
        notion,
        alpha: alpha.clone(),
        rate,
        group_thresholds,
        loss01: zero_one_view(alpha, &loss),
        loss,
        unique,
        classifier,
        curve,
    })
}

pub fn solve_dp(dist: &JointDistribution, alpha: &Rat) -> Result<Solution> {
    solve(dist, Notion::Dp, alpha)
}

pub fn solve_pe(dist: &JointDistribution, alpha: &Rat) -> Result<Solution> {
    solve(dist, Notion::Pe, alpha)
}

pub fn solve_eo(dist: &JointDistribution, alpha: &Rat) -> Result<Solution> {
    solve(dist, Notion::Eo, alpha)
}

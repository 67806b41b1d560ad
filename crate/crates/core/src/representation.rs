//! Randomized fair representations with zero cost of fairness.
//!
//! A representation maps every (feature, group) to a distribution over
//! representation points. Points are the mass bands between consecutive
//! boundary rates of the chosen notion, so each point contributes the same
//! rate increment to every group: any accept/reject decision over the points
//! composes to an exactly fair classifier over the original space, and the
//! optimal threshold classifier is expressible by accepting a prefix of the
//! bands. Auditing enumerates every deterministic assignment and certifies
//! both claims exhaustively.

use std::collections::BTreeMap;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::cells::all_sorted_cells;
use crate::classifier::{self, Notion, RandomizedClassifier};
use crate::distribution::{check_alpha, FeatureId, GroupId, JointDistribution};
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::solvers;

/// Default cap on representation points for exhaustive audits.
pub const DEFAULT_AUDIT_CAP: usize = 20;

/// One representation point: the rate band it covers. A degenerate (0, 0]
/// band marks the zero-rate block (score-1 cells for FPR parity, score-0
/// cells for FNR parity) that contributes nothing to any group's rate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepPoint {
    pub id: String,
    pub band: (Rat, Rat),
}

/// One entry of the representation map: `feature` in `group` lands on point
/// index `point` with probability `prob`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapEntry {
    pub feature: FeatureId,
    pub group: GroupId,
    pub point: usize,
    pub prob: Rat,
}

/// A randomized map from (feature, group) to representation points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representation {
    pub notion: Notion,
    pub points: Vec<RepPoint>,
    pub map: Vec<MapEntry>,
}

impl Serialize for Representation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct WireEntry<'a> {
            x: &'a FeatureId,
            z: &'a GroupId,
            point: &'a str,
            p: &'a Rat,
        }
        let mut s = serializer.serialize_struct("Representation", 3)?;
        s.serialize_field("notion", &self.notion)?;
        s.serialize_field("points", &self.points)?;
        let map: Vec<_> = self
            .map
            .iter()
            .map(|e| WireEntry {
                x: &e.feature,
                z: &e.group,
                point: &self.points[e.point].id,
                p: &e.prob,
            })
            .collect();
        s.serialize_field("map", &map)?;
        s.end()
    }
}

/// Result of exhaustively checking every classifier over a representation.
#[derive(Debug, Clone, Serialize)]
pub struct RepresentationAudit {
    pub notion: Notion,
    pub n_points: usize,
    pub classifiers_checked: u64,
    pub all_fair: bool,
    pub best_loss: Rat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_loss01: Option<Rat>,
    pub cfr: Rat,
}

/// Per-group threshold marks at each boundary rate. For the zero-rate block,
/// `block_interval` carries the group's threshold interval that no band
/// covers.
struct GroupBands {
    group: GroupId,
    /// Threshold interval per band, aligned with the band points.
    intervals: Vec<(Rat, Rat)>,
    block_interval: Option<(Rat, Rat)>,
}

/// Builds the notion's fair representation from its boundary set.
pub fn build_representation(
    dist: &JointDistribution,
    notion: Notion,
    alpha: &Rat,
) -> Result<Representation> {
    check_alpha(alpha)?;
    let cellsets = all_sorted_cells(dist);
    let boundaries = match notion {
        Notion::Dp => crate::cells::score_boundaries(dist),
        Notion::Pe => crate::cells::fp_boundaries(dist)?,
        Notion::Eo => crate::cells::fn_boundaries(dist)?,
    };
    let rates = &boundaries.points;

    let mut group_bands = Vec::with_capacity(cellsets.len());
    let mut any_block = false;
    for sc in &cellsets {
        let marks: Vec<Rat> = match notion {
            Notion::Dp => rates.clone(),
            Notion::Pe => rates
                .iter()
                .map(|r| sc.threshold_for_fpr(r))
                .collect::<Result<_>>()?,
            Notion::Eo => rates
                .iter()
                .map(|r| sc.threshold_for_fnr(r))
                .collect::<Result<_>>()?,
        };
        let intervals = marks
            .windows(2)
            .map(|w| match notion {
                // FNR falls as the threshold grows, so bands run downward.
                Notion::Eo => (w[1].clone(), w[0].clone()),
                _ => (w[0].clone(), w[1].clone()),
            })
            .collect();
        let block_interval = match notion {
            Notion::Dp => None,
            Notion::Pe if !marks[0].is_zero() => Some((Rat::zero(), marks[0].clone())),
            Notion::Eo if !marks[0].is_one() => Some((marks[0].clone(), Rat::one())),
            _ => None,
        };
        any_block |= block_interval.is_some();
        group_bands.push(GroupBands {
            group: sc.group().clone(),
            intervals,
            block_interval,
        });
    }

    let mut points = Vec::new();
    if any_block {
        points.push(RepPoint {
            id: "p0".to_string(),
            band: (Rat::zero(), Rat::zero()),
        });
    }
    for (i, w) in rates.windows(2).enumerate() {
        points.push(RepPoint {
            id: format!("p{}", i + 1),
            band: (w[0].clone(), w[1].clone()),
        });
    }

    // Probability of a cell landing on a point: the overlap of the cell's
    // cumulative-mass span with the point's threshold interval, as a
    // fraction of the span. Merged features share the cell's distribution.
    let mut map = Vec::new();
    for (sc, bands) in cellsets.iter().zip(&group_bands) {
        let mut lo = Rat::zero();
        for (cell, hi) in sc.cells().iter().zip(sc.cumulative()) {
            let span = hi - &lo;
            let mut point_probs: Vec<(usize, Rat)> = Vec::new();
            let mut push = |idx: usize, interval: &(Rat, Rat)| {
                let a = if interval.0 > lo { &interval.0 } else { &lo };
                let b = if &interval.1 < hi { &interval.1 } else { hi };
                if b > a {
                    point_probs.push((idx, (b - a) / &span));
                }
            };
            if let Some(block) = &bands.block_interval {
                push(0, block);
            }
            let offset = usize::from(any_block);
            for (i, interval) in bands.intervals.iter().enumerate() {
                push(offset + i, interval);
            }
            debug_assert!(point_probs.iter().map(|(_, p)| p).sum::<Rat>().is_one());
            for member in &cell.members {
                for (idx, prob) in &point_probs {
                    map.push(MapEntry {
                        feature: member.clone(),
                        group: bands.group.clone(),
                        point: *idx,
                        prob: prob.clone(),
                    });
                }
            }
            lo = hi.clone();
        }
    }

    Ok(Representation {
        notion,
        points,
        map,
    })
}

fn compose(
    rep: &Representation,
    dist: &JointDistribution,
    accept: &[bool],
) -> RandomizedClassifier {
    let mut acceptance: HashMap<(FeatureId, GroupId), Rat> = HashMap::new();
    for entry in &rep.map {
        if accept[entry.point] {
            *acceptance
                .entry((entry.feature.clone(), entry.group.clone()))
                .or_insert_with(Rat::zero) += &entry.prob;
        }
    }
    let entries = dist
        .cells()
        .iter()
        .map(|c| {
            let key = (c.feature().clone(), c.group().clone());
            let p = acceptance.remove(&key).unwrap_or_else(Rat::zero);
            (key.0, key.1, p)
        })
        .collect();
    RandomizedClassifier::from_acceptances(entries).expect("band fractions lie in [0, 1]")
}

/// Composes the classifier `g` after the representation map: each cell's
/// acceptance is the total probability of landing on an accepted point.
pub fn apply_representation(
    rep: &Representation,
    g: &BTreeMap<String, bool>,
    dist: &JointDistribution,
) -> Result<RandomizedClassifier> {
    let accept = rep
        .points
        .iter()
        .map(|p| {
            g.get(&p.id)
                .copied()
                .ok_or_else(|| Error::IncompleteAssignment(p.id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(compose(rep, dist, &accept))
}

/// Enumerates all 2^n deterministic assignments over the representation
/// points, checks each composition for exact fairness, and reports the best
/// loss and the cost of fair representation against the notion's solver
/// optimum. Ties break toward the smallest assignment bitmask.
pub fn audit_representation(
    rep: &Representation,
    dist: &JointDistribution,
    alpha: &Rat,
    cap: usize,
) -> Result<RepresentationAudit> {
    check_alpha(alpha)?;
    let cap = cap.min(62);
    let n_points = rep.points.len();
    if n_points > cap {
        return Err(Error::TooManyPoints {
            points: n_points,
            cap,
        });
    }
    let solution = solvers::solve(dist, rep.notion, alpha)?;

    let total: u64 = 1 << n_points;
    let (all_fair, best_loss, _mask) = (0..total)
        .into_par_iter()
        .map(|mask| -> Result<(bool, Rat, u64)> {
            let accept: Vec<bool> = (0..n_points).map(|i| mask >> i & 1 == 1).collect();
            let f = compose(rep, dist, &accept);
            let fair = classifier::check_fairness(&f, dist, rep.notion)?.fair;
            let loss = classifier::loss(&f, dist, alpha)?;
            Ok((fair, loss, mask))
        })
        .try_reduce_with(|a, b| {
            let fair = a.0 && b.0;
            let (loss, mask) = if (&a.1, a.2) <= (&b.1, b.2) {
                (a.1, a.2)
            } else {
                (b.1, b.2)
            };
            Ok((fair, loss, mask))
        })
        .expect("at least the two constant assignments exist")?;

    let cfr = &best_loss - &solution.loss;
    Ok(RepresentationAudit {
        notion: rep.notion,
        n_points,
        classifiers_checked: total,
        all_fair,
        best_loss01: (alpha == &Rat::one_half()).then(|| &best_loss * Rat::from_int(2)),
        best_loss,
        cfr,
    })
}

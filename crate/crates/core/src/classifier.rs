//! Randomized classifiers: loss, rates, and exact fairness predicates.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::cells::{MassPrefix, SortedGroupCells};
use crate::distribution::{check_alpha, FeatureId, GroupId, JointDistribution};
use crate::error::{Error, Result};
use crate::rat::Rat;

/// The supported group-fairness notions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notion {
    /// Demographic parity: equal selection rate across groups.
    Dp,
    /// Predictive equality: equal false positive rate across groups.
    Pe,
    /// Equal opportunity: equal false negative rate across groups.
    Eo,
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Notion::Dp => "dp",
            Notion::Pe => "pe",
            Notion::Eo => "eo",
        })
    }
}

impl FromStr for Notion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dp" => Ok(Notion::Dp),
            "pe" => Ok(Notion::Pe),
            "eo" => Ok(Notion::Eo),
            other => Err(Error::Schema(format!(
                "unknown fairness notion `{other}`, expected dp, pe, or eo"
            ))),
        }
    }
}

/// One acceptance entry of a serialized classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcceptanceRecord {
    pub x: FeatureId,
    pub z: GroupId,
    pub p: Rat,
}

#[derive(Serialize, Deserialize)]
struct ClassifierFile {
    accept: Vec<AcceptanceRecord>,
}

/// Map from (feature, group) to an acceptance probability in [0, 1].
///
/// Serializes as `{"accept":[{"x","z","p"}, ...]}` preserving entry order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizedClassifier {
    entries: Vec<(FeatureId, GroupId, Rat)>,
    index: HashMap<(FeatureId, GroupId), usize>,
}

impl RandomizedClassifier {
    pub fn from_acceptances(entries: Vec<(FeatureId, GroupId, Rat)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (feature, group, p)) in entries.iter().enumerate() {
            if p < &Rat::zero() || p > &Rat::one() {
                return Err(Error::AcceptanceOutOfRange {
                    feature: feature.to_string(),
                    group: group.to_string(),
                    p: p.to_string(),
                });
            }
            if index
                .insert((feature.clone(), group.clone()), i)
                .is_some()
            {
                return Err(Error::Schema(format!(
                    "duplicate acceptance entry for feature `{feature}` in group `{group}`"
                )));
            }
        }
        Ok(RandomizedClassifier { entries, index })
    }

    /// Constant classifier over the cells of `dist`.
    pub fn constant(dist: &JointDistribution, p: Rat) -> Result<Self> {
        let entries = dist
            .cells()
            .iter()
            .map(|c| (c.feature().clone(), c.group().clone(), p.clone()))
            .collect();
        Self::from_acceptances(entries)
    }

    pub fn accept(&self, feature: &FeatureId, group: &GroupId) -> Option<&Rat> {
        self.index
            .get(&(feature.clone(), group.clone()))
            .map(|&i| &self.entries[i].2)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&FeatureId, &GroupId, &Rat)> {
        self.entries.iter().map(|(f, g, p)| (f, g, p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        self.entries
            .iter()
            .all(|(_, _, p)| p.is_zero() || p.is_one())
    }

    pub fn from_json_str(input: &str) -> Result<Self> {
        let file: ClassifierFile = serde_json::from_str(input)
            .map_err(|e| Error::Schema(format!("classifier json: {e}")))?;
        Self::from_acceptances(
            file.accept
                .into_iter()
                .map(|r| (r.x, r.z, r.p))
                .collect(),
        )
    }
}

impl Serialize for RandomizedClassifier {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let accept = self
            .entries
            .iter()
            .map(|(f, g, p)| AcceptanceRecord {
                x: f.clone(),
                z: g.clone(),
                p: p.clone(),
            })
            .collect();
        ClassifierFile { accept }.serialize(serializer)
    }
}

/// Exact per-group rates under one fairness notion.
#[derive(Debug, Clone, Serialize)]
pub struct FairnessReport {
    pub notion: Notion,
    #[serde(serialize_with = "ser_group_rates")]
    pub per_group_rate: Vec<(GroupId, Rat)>,
    pub fair: bool,
    pub max_gap: Rat,
}

fn ser_group_rates<S: Serializer>(
    rates: &[(GroupId, Rat)],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry<'a> {
        z: &'a GroupId,
        rate: &'a Rat,
    }
    serializer.collect_seq(rates.iter().map(|(z, rate)| Entry { z, rate }))
}

fn acceptance_for<'a>(
    f: &'a RandomizedClassifier,
    feature: &FeatureId,
    group: &GroupId,
) -> Result<&'a Rat> {
    f.accept(feature, group).ok_or_else(|| Error::IncompleteClassifier {
        feature: feature.to_string(),
        group: group.to_string(),
    })
}

/// Exact false positive and false negative probability masses of `f`.
fn error_masses(f: &RandomizedClassifier, dist: &JointDistribution) -> Result<(Rat, Rat)> {
    let mut fp = Rat::zero();
    let mut fn_ = Rat::zero();
    for cell in dist.cells() {
        let p = acceptance_for(f, cell.feature(), cell.group())?;
        fp += cell.neg() * p;
        fn_ += cell.pos() * (Rat::one() - p);
    }
    Ok((fp, fn_))
}

/// Cost-sensitive loss: alpha times the false positive mass plus
/// (1 - alpha) times the false negative mass.
pub fn loss(f: &RandomizedClassifier, dist: &JointDistribution, alpha: &Rat) -> Result<Rat> {
    check_alpha(alpha)?;
    let (fp, fn_) = error_masses(f, dist)?;
    Ok(alpha * fp + (Rat::one() - alpha) * fn_)
}

/// Standard 0-1 loss Pr[f(X, Z) != Y]; equals twice the cost-sensitive loss
/// at alpha = 1/2.
pub fn loss01(f: &RandomizedClassifier, dist: &JointDistribution) -> Result<Rat> {
    let (fp, fn_) = error_masses(f, dist)?;
    Ok(fp + fn_)
}

/// Pr[f = 1 | Z = group].
pub fn selection_rate(
    f: &RandomizedClassifier,
    dist: &JointDistribution,
    group: &GroupId,
) -> Result<Rat> {
    let group_mass = dist.group_mass(group)?;
    let mut accepted = Rat::zero();
    for cell in dist.cells().iter().filter(|c| c.group() == group) {
        accepted += cell.mass() * acceptance_for(f, cell.feature(), group)?;
    }
    Ok(accepted / group_mass)
}

/// Pr[f = 1 | Y = 0, Z = group].
pub fn fpr(f: &RandomizedClassifier, dist: &JointDistribution, group: &GroupId) -> Result<Rat> {
    let neg_mass = dist.group_neg(group)?;
    if neg_mass.is_zero() {
        return Err(Error::UndefinedMetric {
            group: group.to_string(),
            rate: "false positive rate",
            mass: "negative",
        });
    }
    let mut fp = Rat::zero();
    for cell in dist.cells().iter().filter(|c| c.group() == group) {
        fp += cell.neg() * acceptance_for(f, cell.feature(), group)?;
    }
    Ok(fp / neg_mass)
}

/// Pr[f = 0 | Y = 1, Z = group].
pub fn fnr(f: &RandomizedClassifier, dist: &JointDistribution, group: &GroupId) -> Result<Rat> {
    let pos_mass = dist.group_pos(group)?;
    if pos_mass.is_zero() {
        return Err(Error::UndefinedMetric {
            group: group.to_string(),
            rate: "false negative rate",
            mass: "positive",
        });
    }
    let mut fn_ = Rat::zero();
    for cell in dist.cells().iter().filter(|c| c.group() == group) {
        fn_ += cell.pos() * (Rat::one() - acceptance_for(f, cell.feature(), group)?);
    }
    Ok(fn_ / pos_mass)
}

/// Per-group rates under `notion` with an exact equality verdict.
pub fn check_fairness(
    f: &RandomizedClassifier,
    dist: &JointDistribution,
    notion: Notion,
) -> Result<FairnessReport> {
    let mut per_group_rate = Vec::with_capacity(dist.groups().len());
    for group in dist.groups() {
        let rate = match notion {
            Notion::Dp => selection_rate(f, dist, group)?,
            Notion::Pe => fpr(f, dist, group)?,
            Notion::Eo => fnr(f, dist, group)?,
        };
        per_group_rate.push((group.clone(), rate));
    }
    let max = per_group_rate.iter().map(|(_, r)| r).max().unwrap();
    let min = per_group_rate.iter().map(|(_, r)| r).min().unwrap();
    let max_gap = max - min;
    Ok(FairnessReport {
        notion,
        fair: max_gap.is_zero(),
        max_gap,
        per_group_rate,
    })
}

/// Assembles the classifier that accepts each group's mass prefix: whole
/// cells with probability 1, the split cell with its fraction applied
/// uniformly to every member feature, everything else with probability 0.
pub fn from_mass_prefixes<'a, I>(dist: &JointDistribution, prefixes: I) -> Result<RandomizedClassifier>
where
    I: IntoIterator<Item = (&'a SortedGroupCells, &'a MassPrefix)>,
{
    let mut acceptance: HashMap<(FeatureId, GroupId), Rat> = HashMap::new();
    let mut seen: Vec<GroupId> = Vec::new();
    for (cells, prefix) in prefixes {
        if cells.group() != &prefix.group || seen.contains(&prefix.group) {
            return Err(Error::GroupMismatch);
        }
        seen.push(prefix.group.clone());
        let mut set = |idx: usize, p: &Rat| {
            for member in &cells.cells()[idx].members {
                acceptance.insert((member.clone(), prefix.group.clone()), p.clone());
            }
        };
        for &i in &prefix.whole_cells {
            set(i, &Rat::one());
        }
        if let Some((i, fraction)) = &prefix.split_cell {
            set(*i, fraction);
        }
    }
    if seen.len() != dist.groups().len()
        || dist.groups().iter().any(|g| !seen.contains(g))
    {
        return Err(Error::GroupMismatch);
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
    RandomizedClassifier::from_acceptances(entries)
}

/// The mass-threshold classifier taking the same top fraction `t` of every
/// group, randomizing on at most one cell per group.
pub fn common_threshold_classifier(
    dist: &JointDistribution,
    cellsets: &[SortedGroupCells],
    t: &Rat,
) -> Result<RandomizedClassifier> {
    let prefixes = cellsets
        .iter()
        .map(|sc| sc.mass_prefix(t))
        .collect::<Result<Vec<_>>>()?;
    from_mass_prefixes(dist, cellsets.iter().zip(prefixes.iter()))
}

/// The group-wise mass-threshold classifier with one threshold per group, in
/// the same order as `cellsets`.
pub fn groupwise_threshold_classifier(
    dist: &JointDistribution,
    cellsets: &[SortedGroupCells],
    thresholds: &[Rat],
) -> Result<RandomizedClassifier> {
    if thresholds.len() != cellsets.len() {
        return Err(Error::GroupMismatch);
    }
    let prefixes = cellsets
        .iter()
        .zip(thresholds)
        .map(|(sc, t)| sc.mass_prefix(t))
        .collect::<Result<Vec<_>>>()?;
    from_mass_prefixes(dist, cellsets.iter().zip(prefixes.iter()))
}

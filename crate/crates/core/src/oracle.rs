//! Independent brute-force verification of the solvers.
//!
//! The fair classifiers over n cells form the box [0, 1]^n intersected with
//! one rate-equality hyperplane, so every vertex of the feasible polytope
//! has at most one fractional coordinate. [`vertex_enumerate_optimal`]
//! enumerates all binary assignments, solving the equality for each
//! coordinate in turn, and takes the loss-minimal feasible point; it shares
//! no code with the solvers and serves as their oracle.
//! [`best_deterministic_fair`] scans all 2^n binary classifiers instead.

use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{Notion, RandomizedClassifier};
use crate::distribution::{check_alpha, JointDistribution};
use crate::error::{Error, Result};
use crate::rat::Rat;

/// Default cap on the number of cells enumerated.
pub const DEFAULT_ORACLE_CAP: usize = 24;

/// Outcome of a brute-force search.
#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub notion: Notion,
    pub alpha: Rat,
    pub optimal_loss: Rat,
    /// 0-1 loss view, present exactly when alpha = 1/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_loss01: Option<Rat>,
    /// Feasible candidates examined.
    pub n_candidates: u64,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<RandomizedClassifier>,
}

/// Linear pieces shared by both searches, over cells in canonical order.
struct Forms {
    /// Rate-equality coefficients: c . p = 0 iff the rates agree.
    constraint: Vec<Rat>,
    /// Loss gradient per cell.
    loss_coeffs: Vec<Rat>,
    /// Loss of the all-reject classifier.
    base_loss: Rat,
}

fn constraint_coefficients(dist: &JointDistribution, notion: Notion) -> Result<Vec<Rat>> {
    let groups = dist.groups();
    if groups.len() != 2 {
        return Err(Error::TwoGroupsRequired(groups.len()));
    }
    let denominators: Vec<Rat> = groups
        .iter()
        .map(|g| match notion {
            Notion::Dp => dist.group_mass(g),
            Notion::Pe => {
                let neg = dist.group_neg(g)?;
                if neg.is_zero() {
                    return Err(Error::UndefinedMetric {
                        group: g.to_string(),
                        rate: "false positive rate",
                        mass: "negative",
                    });
                }
                Ok(neg)
            }
            Notion::Eo => {
                let pos = dist.group_pos(g)?;
                if pos.is_zero() {
                    return Err(Error::UndefinedMetric {
                        group: g.to_string(),
                        rate: "false negative rate",
                        mass: "positive",
                    });
                }
                Ok(pos)
            }
        })
        .collect::<Result<_>>()?;

    Ok(dist
        .cells()
        .iter()
        .map(|cell| {
            // Equal FNR is equivalent to equal acceptance share of positives.
            let weight = match notion {
                Notion::Dp => cell.mass(),
                Notion::Pe => cell.neg().clone(),
                Notion::Eo => cell.pos().clone(),
            };
            if cell.group() == &groups[0] {
                weight / &denominators[0]
            } else {
                -(weight / &denominators[1])
            }
        })
        .collect())
}

fn forms(dist: &JointDistribution, notion: Notion, alpha: &Rat) -> Result<Forms> {
    let constraint = constraint_coefficients(dist, notion)?;
    let one_minus_alpha = Rat::one() - alpha;
    let mut base_loss = Rat::zero();
    let loss_coeffs = dist
        .cells()
        .iter()
        .map(|cell| {
            base_loss += &one_minus_alpha * cell.pos();
            alpha * cell.neg() - &one_minus_alpha * cell.pos()
        })
        .collect();
    Ok(Forms {
        constraint,
        loss_coeffs,
        base_loss,
    })
}

/// A candidate acceptance vector: binary except for at most one coordinate.
#[derive(Clone)]
struct Candidate {
    loss: Rat,
    bits: u64,
    fractional: Option<(usize, Rat)>,
}

impl Candidate {
    fn acceptance(&self, n: usize) -> Vec<Rat> {
        (0..n)
            .map(|i| match &self.fractional {
                Some((j, p)) if *j == i => p.clone(),
                _ => {
                    if self.bits >> i & 1 == 1 {
                        Rat::one()
                    } else {
                        Rat::zero()
                    }
                }
            })
            .collect()
    }
}

/// Keeps the loss-minimal candidate, breaking ties toward the
/// lexicographically smallest acceptance vector.
struct Best {
    candidate: Option<(Candidate, Vec<Rat>)>,
    n: usize,
}

impl Best {
    fn new(n: usize) -> Self {
        Best { candidate: None, n }
    }

    fn offer(&mut self, cand: Candidate) {
        match &self.candidate {
            None => {
                let acc = cand.acceptance(self.n);
                self.candidate = Some((cand, acc));
            }
            Some((incumbent, inc_acc)) => {
                if cand.loss > incumbent.loss {
                    return;
                }
                let acc = cand.acceptance(self.n);
                if cand.loss < incumbent.loss || &acc < inc_acc {
                    self.candidate = Some((cand, acc));
                }
            }
        }
    }

    fn merge(mut self, other: Best) -> Best {
        if let Some((cand, _)) = other.candidate {
            self.offer(cand);
        }
        self
    }
}

/// Iterates binary assignments in Gray-code order, keeping the constraint
/// and loss sums incremental. `start..end` indexes the Gray sequence.
fn scan_range(
    forms: &Forms,
    start: u64,
    end: u64,
    mut visit: impl FnMut(u64, &Rat, &Rat),
) {
    let n = forms.constraint.len();
    let gray = |k: u64| k ^ (k >> 1);
    let mut bits = gray(start);
    let mut cdot = Rat::zero();
    let mut lsum = Rat::zero();
    for i in 0..n {
        if bits >> i & 1 == 1 {
            cdot += &forms.constraint[i];
            lsum += &forms.loss_coeffs[i];
        }
    }
    for k in start..end {
        visit(bits, &cdot, &lsum);
        if k + 1 < end {
            let flip = (k + 1).trailing_zeros() as usize;
            if bits >> flip & 1 == 1 {
                cdot -= &forms.constraint[flip];
                lsum -= &forms.loss_coeffs[flip];
                bits &= !(1 << flip);
            } else {
                cdot += &forms.constraint[flip];
                lsum += &forms.loss_coeffs[flip];
                bits |= 1 << flip;
            }
        }
    }
}

fn chunk_ranges(total: u64) -> Vec<(u64, u64)> {
    let chunks = (rayon::current_num_threads() as u64 * 4).max(1).min(total);
    let size = total.div_ceil(chunks);
    (0..chunks)
        .map(|i| (i * size, ((i + 1) * size).min(total)))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Exact optimum over all randomized fair classifiers of a 2-group
/// distribution, by enumerating the vertices of the feasible polytope.
pub fn vertex_enumerate_optimal(
    dist: &JointDistribution,
    notion: Notion,
    alpha: &Rat,
    cap: usize,
) -> Result<OracleResult> {
    check_alpha(alpha)?;
    let cap = cap.min(62);
    let n = dist.cells().len();
    if n > cap {
        return Err(Error::TooManyCells { cells: n, cap });
    }
    let forms = forms(dist, notion, alpha)?;
    let total: u64 = 1 << n;

    let (best, n_candidates) = chunk_ranges(total)
        .into_par_iter()
        .map(|(start, end)| {
            let mut best = Best::new(n);
            let mut count = 0u64;
            scan_range(&forms, start, end, |bits, cdot, lsum| {
                if cdot.is_zero() {
                    count += 1;
                    best.offer(Candidate {
                        loss: &forms.base_loss + lsum,
                        bits,
                        fractional: None,
                    });
                }
                for (j, cj) in forms.constraint.iter().enumerate() {
                    if cj.is_zero() {
                        continue;
                    }
                    let bit = bits >> j & 1 == 1;
                    let residual = if bit { cdot - cj } else { cdot.clone() };
                    // Solve cj * p + residual = 0 for p in [0, 1]: the
                    // residual must oppose cj and not exceed it in size.
                    if residual.is_positive() == cj.is_positive() && !residual.is_zero() {
                        continue;
                    }
                    if residual.abs() > cj.abs() {
                        continue;
                    }
                    let p = -(&residual / cj);
                    let lj = &forms.loss_coeffs[j];
                    let loss = &forms.base_loss
                        + lsum
                        + lj * &p
                        + if bit { -lj.clone() } else { Rat::zero() };
                    count += 1;
                    best.offer(Candidate {
                        loss,
                        bits,
                        fractional: Some((j, p)),
                    });
                }
            });
            (best, count)
        })
        .reduce(
            || (Best::new(n), 0),
            |(ba, ca), (bb, cb)| (ba.merge(bb), ca + cb),
        );

    let (candidate, acceptance) = best
        .candidate
        .expect("constant classifiers satisfy every rate equality");
    let witness = witness_classifier(dist, &acceptance)?;
    Ok(OracleResult {
        notion,
        alpha: alpha.clone(),
        optimal_loss01: (alpha == &Rat::one_half())
            .then(|| &candidate.loss * Rat::from_int(2)),
        optimal_loss: candidate.loss,
        n_candidates,
        feasible: true,
        witness: Some(witness),
    })
}

/// Exact optimum over all deterministic fair classifiers, by exhaustive scan
/// of the 2^n binary acceptance vectors. Works for any number of groups.
pub fn best_deterministic_fair(
    dist: &JointDistribution,
    notion: Notion,
    alpha: &Rat,
    cap: usize,
) -> Result<OracleResult> {
    check_alpha(alpha)?;
    let cap = cap.min(62);
    let n = dist.cells().len();
    if n > cap {
        return Err(Error::TooManyCells { cells: n, cap });
    }
    let groups = dist.groups();
    let group_of: Vec<usize> = dist
        .cells()
        .iter()
        .map(|c| groups.iter().position(|g| g == c.group()).unwrap())
        .collect();
    // Per-cell contribution to the group's rate numerator.
    let weights: Vec<Rat> = dist
        .cells()
        .iter()
        .map(|cell| match notion {
            Notion::Dp => Ok(cell.mass()),
            Notion::Pe => Ok(cell.neg().clone()),
            Notion::Eo => Ok(cell.pos().clone()),
        })
        .collect::<Result<_>>()?;
    let denominators: Vec<Rat> = groups
        .iter()
        .map(|g| match notion {
            Notion::Dp => dist.group_mass(g),
            Notion::Pe => dist.group_neg(g),
            Notion::Eo => dist.group_pos(g),
        })
        .collect::<Result<_>>()?;
    if let Some(i) = denominators.iter().position(Rat::is_zero) {
        return Err(Error::UndefinedMetric {
            group: groups[i].to_string(),
            rate: match notion {
                Notion::Dp => "selection rate",
                Notion::Pe => "false positive rate",
                Notion::Eo => "false negative rate",
            },
            mass: match notion {
                Notion::Dp => "total",
                Notion::Pe => "negative",
                Notion::Eo => "positive",
            },
        });
    }

    let one_minus_alpha = Rat::one() - alpha;
    let mut base_loss = Rat::zero();
    let loss_coeffs: Vec<Rat> = dist
        .cells()
        .iter()
        .map(|cell| {
            base_loss += &one_minus_alpha * cell.pos();
            alpha * cell.neg() - &one_minus_alpha * cell.pos()
        })
        .collect();

    let total: u64 = 1 << n;
    let gray = |k: u64| k ^ (k >> 1);
    let (best, n_fair) = chunk_ranges(total)
        .into_par_iter()
        .map(|(start, end)| {
            let mut best = Best::new(n);
            let mut fair_count = 0u64;
            let mut bits = gray(start);
            let mut rate_sums: Vec<Rat> = vec![Rat::zero(); groups.len()];
            let mut lsum = Rat::zero();
            for i in 0..n {
                if bits >> i & 1 == 1 {
                    rate_sums[group_of[i]] += &weights[i];
                    lsum += &loss_coeffs[i];
                }
            }
            for k in start..end {
                // All group rates equal: cross-multiplied numerators agree.
                let fair = (1..groups.len()).all(|g| {
                    &rate_sums[0] * &denominators[g] == &rate_sums[g] * &denominators[0]
                });
                if fair {
                    fair_count += 1;
                    best.offer(Candidate {
                        loss: &base_loss + &lsum,
                        bits,
                        fractional: None,
                    });
                }
                if k + 1 < end {
                    let flip = (k + 1).trailing_zeros() as usize;
                    if bits >> flip & 1 == 1 {
                        rate_sums[group_of[flip]] -= &weights[flip];
                        lsum -= &loss_coeffs[flip];
                        bits &= !(1 << flip);
                    } else {
                        rate_sums[group_of[flip]] += &weights[flip];
                        lsum += &loss_coeffs[flip];
                        bits |= 1 << flip;
                    }
                }
            }
            (best, fair_count)
        })
        .reduce(
            || (Best::new(n), 0),
            |(ba, ca), (bb, cb)| (ba.merge(bb), ca + cb),
        );

    match best.candidate {
        Some((candidate, acceptance)) => Ok(OracleResult {
            notion,
            alpha: alpha.clone(),
            optimal_loss01: (alpha == &Rat::one_half())
                .then(|| &candidate.loss * Rat::from_int(2)),
            optimal_loss: candidate.loss,
            n_candidates: n_fair,
            feasible: true,
            witness: Some(witness_classifier(dist, &acceptance)?),
        }),
        None => Ok(OracleResult {
            notion,
            alpha: alpha.clone(),
            optimal_loss: Rat::one(),
            optimal_loss01: None,
            n_candidates: 0,
            feasible: false,
            witness: None,
        }),
    }
}

fn witness_classifier(
    dist: &JointDistribution,
    acceptance: &[Rat],
) -> Result<RandomizedClassifier> {
    let entries = dist
        .cells()
        .iter()
        .zip(acceptance)
        .map(|(c, p)| (c.feature().clone(), c.group().clone(), p.clone()))
        .collect();
    RandomizedClassifier::from_acceptances(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{self, Notion};
    use crate::solvers;
    use crate::testutil::{advantage_example, rat, row};
    use crate::JointDistribution;

    #[test]
    fn vertex_oracle_matches_the_dp_solver_on_the_example() {
        let dist = advantage_example();
        let oracle =
            vertex_enumerate_optimal(&dist, Notion::Dp, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                .unwrap();
        assert_eq!(oracle.optimal_loss01, Some(rat("3/8")));
        let sol = solvers::solve_dp(&dist, &Rat::one_half()).unwrap();
        assert_eq!(oracle.optimal_loss, sol.loss);
        assert!(oracle.feasible);

        let witness = oracle.witness.unwrap();
        let report = classifier::check_fairness(&witness, &dist, Notion::Dp).unwrap();
        assert!(report.fair);
        assert_eq!(
            classifier::loss(&witness, &dist, &Rat::one_half()).unwrap(),
            oracle.optimal_loss
        );
    }

    #[test]
    fn vertex_oracle_matches_the_pe_solver_on_the_example() {
        let dist = advantage_example();
        let oracle =
            vertex_enumerate_optimal(&dist, Notion::Pe, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                .unwrap();
        assert_eq!(oracle.optimal_loss01, Some(rat("5/12")));
        let sol = solvers::solve_pe(&dist, &Rat::one_half()).unwrap();
        assert_eq!(oracle.optimal_loss, sol.loss);
    }

    #[test]
    fn vacuous_constraint_recovers_the_bayes_loss() {
        // Two groups with identical cell structure: the rate equality is
        // satisfied by symmetric classifiers, including the Bayes optimum.
        let dist = JointDistribution::from_records(vec![
            row("x", "A", 1, "3/16"),
            row("x", "A", 0, "1/16"),
            row("y", "A", 0, "1/4"),
            row("x", "B", 1, "3/16"),
            row("x", "B", 0, "1/16"),
            row("y", "B", 0, "1/4"),
        ])
        .unwrap();
        let alpha = Rat::one_half();
        let bayes = dist.bayes_optimal(&alpha).unwrap();
        let bayes_loss = classifier::loss(&bayes, &dist, &alpha).unwrap();
        for notion in [Notion::Dp, Notion::Pe, Notion::Eo] {
            let oracle =
                vertex_enumerate_optimal(&dist, notion, &alpha, DEFAULT_ORACLE_CAP).unwrap();
            assert_eq!(oracle.optimal_loss, bayes_loss, "{notion}");
        }
    }

    #[test]
    fn witness_has_at_most_one_fractional_coordinate() {
        let dist = advantage_example();
        for notion in [Notion::Dp, Notion::Pe, Notion::Eo] {
            let oracle =
                vertex_enumerate_optimal(&dist, notion, &rat("1/4"), DEFAULT_ORACLE_CAP)
                    .unwrap();
            let fractional = oracle
                .witness
                .unwrap()
                .entries()
                .filter(|(_, _, p)| !p.is_zero() && !p.is_one())
                .count();
            assert!(fractional <= 1, "{notion}: {fractional} fractional cells");
        }
    }

    #[test]
    fn deterministic_dp_on_the_example_admits_only_constants() {
        let dist = advantage_example();
        let oracle =
            best_deterministic_fair(&dist, Notion::Dp, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                .unwrap();
        assert_eq!(oracle.optimal_loss01, Some(rat("1/2")));
        assert_eq!(oracle.n_candidates, 2);
        assert!(oracle.feasible);
        assert!(oracle.witness.unwrap().is_deterministic());
    }

    #[test]
    fn deterministic_eo_on_the_example_is_the_bayes_classifier() {
        let dist = advantage_example();
        let oracle =
            best_deterministic_fair(&dist, Notion::Eo, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                .unwrap();
        assert_eq!(oracle.optimal_loss01, Some(rat("1/4")));
        assert_eq!(
            oracle.witness.unwrap(),
            dist.bayes_optimal(&Rat::one_half()).unwrap()
        );
    }

    #[test]
    fn constants_keep_the_deterministic_search_feasible() {
        let dist = JointDistribution::from_records(vec![
            row("a1", "A", 1, "1/3"),
            row("a2", "A", 0, "1/6"),
            row("d1", "D", 1, "1/6"),
            row("d2", "D", 0, "1/3"),
        ])
        .unwrap();
        for notion in [Notion::Dp, Notion::Pe, Notion::Eo] {
            let oracle =
                best_deterministic_fair(&dist, notion, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                    .unwrap();
            assert!(oracle.feasible, "{notion}");
            assert!(oracle.n_candidates >= 2, "{notion}");
        }
    }

    #[test]
    fn randomization_never_hurts() {
        let dist = advantage_example();
        for notion in [Notion::Dp, Notion::Pe, Notion::Eo] {
            let vertex =
                vertex_enumerate_optimal(&dist, notion, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                    .unwrap();
            let det =
                best_deterministic_fair(&dist, notion, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                    .unwrap();
            assert!(vertex.optimal_loss <= det.optimal_loss, "{notion}");
        }
        // Strict on the advantage example for DP.
        let vertex =
            vertex_enumerate_optimal(&dist, Notion::Dp, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                .unwrap();
        let det =
            best_deterministic_fair(&dist, Notion::Dp, &Rat::one_half(), DEFAULT_ORACLE_CAP)
                .unwrap();
        assert!(vertex.optimal_loss < det.optimal_loss);
    }

    #[test]
    fn caps_and_group_limits_are_enforced() {
        let dist = advantage_example();
        let err =
            vertex_enumerate_optimal(&dist, Notion::Dp, &Rat::one_half(), 2).unwrap_err();
        assert_eq!(err, Error::TooManyCells { cells: 3, cap: 2 });

        let three_groups = JointDistribution::from_records(vec![
            row("x", "A", 1, "1/3"),
            row("y", "B", 0, "1/3"),
            row("w", "C", 1, "1/3"),
        ])
        .unwrap();
        let err = vertex_enumerate_optimal(
            &three_groups,
            Notion::Dp,
            &Rat::one_half(),
            DEFAULT_ORACLE_CAP,
        )
        .unwrap_err();
        assert_eq!(err, Error::TwoGroupsRequired(3));
    }

    #[test]
    fn pe_oracle_equals_eo_oracle_on_flipped_labels() {
        let dist = advantage_example();
        let alpha = rat("1/4");
        let pe =
            vertex_enumerate_optimal(&dist, Notion::Pe, &alpha, DEFAULT_ORACLE_CAP).unwrap();
        let eo = vertex_enumerate_optimal(
            &dist.flip_labels(),
            Notion::Eo,
            &(Rat::one() - &alpha),
            DEFAULT_ORACLE_CAP,
        )
        .unwrap();
        assert_eq!(pe.optimal_loss, eo.optimal_loss);
    }
}

//! Helpers for the acceptance suite: the reference example, a deterministic
//! instance generator, and distribution serialization for CLI round trips.

#![allow(dead_code)]

use fairsolve_core::{FeatureId, GroupId, JointDistribution, Rat};
use rand::Rng;

pub fn rat(s: &str) -> Rat {
    Rat::parse(s).unwrap()
}

pub fn row(x: &str, z: &str, y: u8, p: &str) -> (FeatureId, GroupId, bool, Rat) {
    (FeatureId::from(x), GroupId::from(z), y == 1, rat(p))
}

/// Two-feature, two-group distribution on which the optimal randomized
/// DP-fair classifier strictly beats every deterministic one.
pub fn advantage_example() -> JointDistribution {
    JointDistribution::from_records(vec![
        row("x1", "A", 1, "3/8"),
        row("x1", "A", 0, "1/8"),
        row("x1", "D", 1, "1/8"),
        row("x1", "D", 0, "1/8"),
        row("x2", "D", 0, "1/4"),
    ])
    .unwrap()
}

/// Builds a distribution from per-cell integer weights, normalizing by the
/// grand total so the masses are exact and sum to 1.
pub fn dist_from_weights(group_sizes: &[usize], weights: &[(u32, u32)]) -> JointDistribution {
    assert_eq!(group_sizes.iter().sum::<usize>(), weights.len());
    let total: u32 = weights.iter().map(|(p, n)| p + n).sum();
    assert!(total > 0);
    let mut rows = Vec::new();
    let mut idx = 0;
    for (g, &size) in group_sizes.iter().enumerate() {
        let group = format!("g{g}");
        for i in 0..size {
            let feature = format!("{}{i}", (b'a' + g as u8) as char);
            let (pos, neg) = weights[idx];
            idx += 1;
            rows.push((
                FeatureId::from(feature.as_str()),
                GroupId::from(group.as_str()),
                true,
                Rat::new(pos as i64, total as i64),
            ));
            rows.push((
                FeatureId::from(feature.as_str()),
                GroupId::from(group.as_str()),
                false,
                Rat::new(neg as i64, total as i64),
            ));
        }
    }
    JointDistribution::from_records(rows).unwrap()
}

/// Random 2-group distribution with 2..=6 features per group and random
/// small masses; every group is guaranteed positive and negative mass, so
/// all three fairness notions are defined.
pub fn random_distribution(rng: &mut impl Rng) -> JointDistribution {
    let sizes = [rng.gen_range(2..=6), rng.gen_range(2..=6)];
    let mut weights = Vec::new();
    for &size in &sizes {
        let mut group: Vec<(u32, u32)> =
            (0..size).map(|_| (rng.gen_range(0..=9), rng.gen_range(0..=9))).collect();
        if group.iter().all(|(p, _)| *p == 0) {
            group[0].0 = rng.gen_range(1..=9);
        }
        if group.iter().all(|(_, n)| *n == 0) {
            group[size - 1].1 = rng.gen_range(1..=9);
        }
        for cell in &mut group {
            if cell.0 == 0 && cell.1 == 0 {
                cell.1 = 1;
            }
        }
        weights.extend(group);
    }
    dist_from_weights(&sizes, &weights)
}

/// Random rational in [0, 1] with a small denominator.
pub fn random_unit_rat(rng: &mut impl Rng) -> Rat {
    let den = rng.gen_range(1..=64);
    let num = rng.gen_range(0..=den);
    Rat::new(num, den)
}

/// Serializes a distribution back to the input JSON schema.
pub fn dist_to_json(dist: &JointDistribution) -> String {
    let mut records = Vec::new();
    for cell in dist.cells() {
        if !cell.pos().is_zero() {
            records.push(serde_json::json!({
                "x": cell.feature().as_str(),
                "z": cell.group().as_str(),
                "y": 1,
                "p": cell.pos().to_string(),
            }));
        }
        if !cell.neg().is_zero() {
            records.push(serde_json::json!({
                "x": cell.feature().as_str(),
                "z": cell.group().as_str(),
                "y": 0,
                "p": cell.neg().to_string(),
            }));
        }
    }
    serde_json::json!({ "records": records }).to_string()
}

use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Splits `indices` so that part A holds `round(fraction·n)` rows with every
/// class represented in proportion. Per-class quotas are floored and the
/// leftover slots go to the classes with the largest fractional remainder
/// (lower class index first on ties). Both parts come back sorted.
pub fn stratified_split_indices(
    indices: &[usize],
    labels: &[usize],
    num_classes: usize,
    fraction: f64,
    rng: &mut SeededRng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Split(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for &i in indices {
        by_class[labels[i]].push(i);
    }
    if let Some((c, members)) = by_class.iter().enumerate().find(|(_, m)| m.len() == 1) {
        return Err(Error::Split(format!(
            "class {c} has {} example; stratification needs at least 2",
            members.len()
        )));
    }

    let target = (fraction * indices.len() as f64).round() as usize;
    let quotas: Vec<f64> = by_class.iter().map(|m| fraction * m.len() as f64).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = take.iter().sum();
    let mut order: Vec<usize> = (0..num_classes).filter(|&c| !by_class[c].is_empty()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(target.saturating_sub(assigned)) {
        take[c] += 1;
    }

    let mut part_a = Vec::with_capacity(target);
    let mut part_b = Vec::with_capacity(indices.len() - target);
    for (members, k) in by_class.iter_mut().zip(take) {
        members.shuffle(rng);
        part_a.extend_from_slice(&members[..k]);
        part_b.extend_from_slice(&members[k..]);
    }
    part_a.sort_unstable();
    part_b.sort_unstable();
    Ok((part_a, part_b))
}

/// Stratified split of a whole dataset into `(fraction, 1 - fraction)` parts.
pub fn stratified_split(ds: &Dataset, fraction: f64, rng: &mut SeededRng) -> Result<(Vec<usize>, Vec<usize>)> {
    let all: Vec<usize> = (0..ds.len()).collect();
    stratified_split_indices(&all, &ds.y, ds.num_classes, fraction, rng)
}

/// Keeps a stratified `fraction` of `indices`.
pub fn stratified_subsample(
    indices: &[usize],
    labels: &[usize],
    num_classes: usize,
    fraction: f64,
    rng: &mut SeededRng,
) -> Result<Vec<usize>> {
    if fraction == 1.0 {
        return Ok(indices.to_vec());
    }
    Ok(stratified_split_indices(indices, labels, num_classes, fraction, rng)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Matrix;
    use proptest::prelude::*;

    fn labelled(y: Vec<usize>, k: usize) -> Dataset {
        let n = y.len();
        Dataset::new("t", Matrix::zeros(n, 1), y, k).unwrap()
    }

    #[test]
    fn exact_proportions() {
        let ds = labelled((0..100).map(|i| i % 2).collect(), 2);
        let (a, b) = stratified_split(&ds, 0.2, &mut SeededRng::new(0)).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(b.len(), 80);
        assert_eq!(a.iter().filter(|&&i| ds.y[i] == 0).count(), 10);
    }

    #[test]
    fn remainder_goes_to_largest_fraction() {
        // Class 0: 4 rows → quota 2.0; class 1: 2 rows → quota 1.0.
        let ds = labelled(vec![0, 0, 0, 0, 1, 1], 2);
        let (a, _) = stratified_split(&ds, 0.5, &mut SeededRng::new(1)).unwrap();
        let zeros = a.iter().filter(|&&i| ds.y[i] == 0).count();
        assert_eq!((zeros, a.len() - zeros), (2, 1));
    }

    #[test]
    fn singleton_class_is_rejected() {
        let ds = labelled(vec![0, 0, 0, 1], 2);
        assert!(matches!(
            stratified_split(&ds, 0.5, &mut SeededRng::new(0)),
            Err(Error::Split(_))
        ));
        let ds = labelled(vec![0, 0, 1, 1], 2);
        assert!(stratified_split(&ds, 0.0, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn same_seed_same_split() {
        let ds = labelled((0..50).map(|i| i % 3).collect(), 3);
        let a = stratified_split(&ds, 0.3, &mut SeededRng::new(5)).unwrap();
        let b = stratified_split(&ds, 0.3, &mut SeededRng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn proportional_within_one(
            counts in prop::collection::vec(2usize..60, 2..6),
            fraction in 0.05f64..0.95,
            seed in 0u64..1000,
        ) {
            let y: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat(c).take(n)).collect();
            let ds = labelled(y, counts.len());
            let (a, b) = stratified_split(&ds, fraction, &mut SeededRng::new(seed)).unwrap();
            prop_assert_eq!(a.len() + b.len(), ds.len());
            prop_assert_eq!(a.len(), (fraction * ds.len() as f64).round() as usize);
            let mut seen = vec![false; ds.len()];
            for &i in a.iter().chain(&b) {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
            for (c, &n) in counts.iter().enumerate() {
                let got = a.iter().filter(|&&i| ds.y[i] == c).count() as f64;
                prop_assert!((got - fraction * n as f64).abs() <= 1.0 + 1e-9);
            }
        }
    }
}

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Split, SynthError};

/// Replacement nouns partitioned into disjoint train/val/test sub-lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounLexicon {
    pub train_nouns: BTreeSet<String>,
    pub val_nouns: BTreeSet<String>,
    pub test_nouns: BTreeSet<String>,
    pub seed: u64,
}

impl NounLexicon {
    pub fn part(&self, split: Split) -> &BTreeSet<String> {
        match split {
            Split::Train => &self.train_nouns,
            Split::Val => &self.val_nouns,
            Split::Test => &self.test_nouns,
        }
    }

    /// The split whose partition contains `noun`, if any.
    pub fn split_of(&self, noun: &str) -> Option<Split> {
        let noun = noun.to_lowercase();
        [Split::Train, Split::Val, Split::Test].into_iter().find(|&s| self.part(s).contains(&noun))
    }
}

/// Reads a one-noun-per-line list; blank lines and `#` comments are skipped.
pub fn parse_noun_list(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_string).collect()
}

/// Partitions a noun list by seeded shuffle.
///
/// Nouns are lowercased and deduplicated first. Part sizes follow the
/// largest-remainder rounding of `ratio * n`, then any empty part borrows one
/// noun from the largest part.
pub fn partition_lexicon(nouns: &[String], ratios: (f64, f64, f64), seed: u64) -> Result<NounLexicon, SynthError> {
    let (rt, rv, rs) = ratios;
    if !(rt > 0.0 && rv > 0.0 && rs > 0.0) || ((rt + rv + rs) - 1.0).abs() > 1e-9 {
        return Err(SynthError::InvalidConfig(format!(
            "partition ratios must be positive and sum to 1, got ({rt}, {rv}, {rs})"
        )));
    }
    let unique: BTreeSet<String> = nouns.iter().map(|n| n.trim().to_lowercase()).filter(|n| !n.is_empty()).collect();
    if unique.len() < 3 {
        return Err(SynthError::TooFewNouns(unique.len()));
    }
    let mut pool: Vec<String> = unique.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);

    let sizes = apportion(pool.len(), [rt, rv, rs]);
    let test_nouns = pool.split_off(sizes[0] + sizes[1]).into_iter().collect();
    let val_nouns = pool.split_off(sizes[0]).into_iter().collect();
    let train_nouns = pool.into_iter().collect();
    Ok(NounLexicon { train_nouns, val_nouns, test_nouns, seed })
}

fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: [usize; 3] = [exact[0].floor() as usize, exact[1].floor() as usize, exact[2].floor() as usize];
    let mut rest = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        sizes[i] += 1;
        rest -= 1;
    }
    for i in 0..3 {
        if sizes[i] == 0 {
            let largest = (0..3).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).unwrap();
            sizes[largest] -= 1;
            sizes[i] += 1;
        }
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nouns(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("noun{i:04}")).collect()
    }

    #[test]
    fn exact_ratio_fit() {
        let lex = partition_lexicon(&nouns(10), (0.8, 0.1, 0.1), 1).unwrap();
        assert_eq!((lex.train_nouns.len(), lex.val_nouns.len(), lex.test_nouns.len()), (8, 1, 1));
    }

    #[test]
    fn deterministic_for_seed() {
        let a = partition_lexicon(&nouns(50), (0.8, 0.1, 0.1), 9).unwrap();
        let b = partition_lexicon(&nouns(50), (0.8, 0.1, 0.1), 9).unwrap();
        let c = partition_lexicon(&nouns(50), (0.8, 0.1, 0.1), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train_nouns, c.train_nouns);
    }

    #[test]
    fn thousand_nouns_partition_is_disjoint_and_complete() {
        let input = nouns(1000);
        let lex = partition_lexicon(&input, (0.8, 0.1, 0.1), 42).unwrap();
        assert!(lex.train_nouns.is_disjoint(&lex.val_nouns));
        assert!(lex.train_nouns.is_disjoint(&lex.test_nouns));
        assert!(lex.val_nouns.is_disjoint(&lex.test_nouns));
        let union: BTreeSet<String> =
            lex.train_nouns.iter().chain(&lex.val_nouns).chain(&lex.test_nouns).cloned().collect();
        assert_eq!(union, input.into_iter().collect());
        assert_eq!((lex.train_nouns.len(), lex.val_nouns.len(), lex.test_nouns.len()), (800, 100, 100));
    }

    #[test]
    fn duplicates_and_case_collapse() {
        let input: Vec<String> = ["Rock", "rock", "tree", "lake", " lake "].iter().map(|s| s.to_string()).collect();
        let lex = partition_lexicon(&input, (0.8, 0.1, 0.1), 0).unwrap();
        assert_eq!(lex.train_nouns.len() + lex.val_nouns.len() + lex.test_nouns.len(), 3);
        assert!(!lex.train_nouns.is_empty() && !lex.val_nouns.is_empty() && !lex.test_nouns.is_empty());
    }

    #[test]
    fn too_few_nouns() {
        let input: Vec<String> = vec!["a".into(), "A".into(), "b".into()];
        assert!(matches!(partition_lexicon(&input, (0.8, 0.1, 0.1), 0), Err(SynthError::TooFewNouns(2))));
    }

    #[test]
    fn bad_ratios() {
        assert!(partition_lexicon(&nouns(10), (0.5, 0.5, 0.1), 0).is_err());
        assert!(partition_lexicon(&nouns(10), (1.0, 0.0, 0.0), 0).is_err());
    }

    #[test]
    fn sizes_within_one_of_target() {
        for n in 3..200 {
            let lex = partition_lexicon(&nouns(n), (0.7, 0.2, 0.1), n as u64).unwrap();
            let got = [lex.train_nouns.len(), lex.val_nouns.len(), lex.test_nouns.len()];
            for (g, r) in got.iter().zip([0.7, 0.2, 0.1]) {
                if n >= 10 {
                    assert!((*g as f64 - r * n as f64).abs() <= 1.0, "n={n} got={got:?}");
                }
                assert!(*g >= 1);
            }
        }
    }
}

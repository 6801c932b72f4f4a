use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, DatasetError, Label, Record};

/// All record indices belonging to one subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectGroup {
    pub subject_id: String,
    pub label: Label,
    pub rows: Vec<usize>,
}

/// Groups the given record indices by subject, in order of first appearance.
pub fn group_subjects(records: &[Record], indices: &[usize]) -> Vec<SubjectGroup> {
    let mut groups: Vec<SubjectGroup> = Vec::new();
    let mut position = std::collections::HashMap::new();
    for &i in indices {
        let r = &records[i];
        match position.get(r.subject_id.as_str()) {
            Some(&g) => {
                let group: &mut SubjectGroup = &mut groups[g];
                group.rows.push(i);
            }
            None => {
                position.insert(r.subject_id.as_str(), groups.len());
                groups.push(SubjectGroup {
                    subject_id: r.subject_id.clone(),
                    label: r.label,
                    rows: vec![i],
                });
            }
        }
    }
    groups
}

fn by_class(groups: Vec<SubjectGroup>) -> [Vec<SubjectGroup>; 2] {
    let (pos, neg): (Vec<_>, Vec<_>) = groups
        .into_iter()
        .partition(|g| g.label == Label::Parkinson);
    [neg, pos]
}

/// Stratified subject-grouped k-fold assignment.
///
/// Subjects of each class are shuffled with `seed` and dealt round-robin,
/// the second class continuing where the first stopped so fold sizes stay
/// within one subject of each other. Returns the sorted test record
/// indices of every fold.
pub fn grouped_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, DatasetError> {
    if k < 2 {
        return Err(DatasetError::InvalidFoldCount(k));
    }
    let all: Vec<usize> = (0..ds.len()).collect();
    let groups = group_subjects(ds.records(), &all);
    if k > groups.len() {
        return Err(DatasetError::TooFewSubjects {
            k,
            needed: k,
            found: groups.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for mut class in by_class(groups) {
        class.shuffle(&mut rng);
        for g in class {
            folds[next % k].extend(g.rows);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Stratified subject-grouped holdout over `indices`: roughly `fraction`
/// of each class's subjects go to validation (at least one when the class
/// has two or more subjects). Returns sorted `(train, validation)` indices.
pub fn grouped_holdout(
    records: &[Record],
    indices: &[usize],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for mut class in by_class(group_subjects(records, indices)) {
        class.shuffle(&mut rng);
        let n = class.len();
        let n_val = if n >= 2 {
            ((fraction * n as f64).round() as usize).clamp(1, n - 1)
        } else {
            0
        };
        for (i, g) in class.into_iter().enumerate() {
            if i < n_val {
                val.extend(g.rows);
            } else {
                train.extend(g.rows);
            }
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector32;

    pub(crate) fn toy(n_pos: usize, n_neg: usize) -> Dataset {
        let mut records = Vec::new();
        for s in 0..n_pos + n_neg {
            for rep in 1..=3 {
                records.push(Record {
                    subject_id: format!("S{s:02}"),
                    replication_idx: rep,
                    features: FeatureVector32::new([s as f64; 32]),
                    label: Label::from_positive(s < n_pos),
                });
            }
        }
        Dataset::new(records, true).unwrap()
    }

    #[test]
    fn leave_one_subject_out() {
        let ds = toy(3, 4);
        let folds = grouped_folds(&ds, 7, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 3));
        for f in &folds {
            let id = &ds.records()[f[0]].subject_id;
            assert!(f.iter().all(|&i| &ds.records()[i].subject_id == id));
        }
    }

    #[test]
    fn too_many_folds() {
        let ds = toy(2, 2);
        assert!(matches!(
            grouped_folds(&ds, 5, 0),
            Err(DatasetError::TooFewSubjects { found: 4, .. })
        ));
        assert_eq!(
            grouped_folds(&ds, 1, 0),
            Err(DatasetError::InvalidFoldCount(1))
        );
    }

    #[test]
    fn same_seed_same_folds() {
        let ds = toy(10, 12);
        assert_eq!(
            grouped_folds(&ds, 5, 9).unwrap(),
            grouped_folds(&ds, 5, 9).unwrap()
        );
        assert_ne!(
            grouped_folds(&ds, 5, 9).unwrap(),
            grouped_folds(&ds, 5, 10).unwrap()
        );
    }

    #[test]
    fn holdout_keeps_subjects_together() {
        let ds = toy(10, 10);
        let all: Vec<usize> = (0..ds.len()).collect();
        let (train, val) = grouped_holdout(ds.records(), &all, 0.2, 3);
        assert_eq!(val.len(), 2 * 2 * 3);
        assert_eq!(train.len() + val.len(), ds.len());
        for &v in &val {
            let id = &ds.records()[v].subject_id;
            assert!(train.iter().all(|&t| &ds.records()[t].subject_id != id));
        }
    }
}

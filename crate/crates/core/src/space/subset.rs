use serde::{Deserialize, Serialize};

/// A finite set of point indices with its cached measure.
///
/// Members are kept sorted and deduplicated; construct through
/// [`MetricMeasureSpace::subset`](super::MetricMeasureSpace::subset) so the
/// cached measure always matches the member weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subset {
    members: Vec<usize>,
    measure: f64,
}

impl Subset {
    pub(crate) fn from_sorted(members: Vec<usize>, weights: &[f64]) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        let measure = members.iter().map(|&i| weights[i]).sum();
        Subset { members, measure }
    }

    pub(crate) fn from_mask(mask: &[bool], weights: &[f64]) -> Self {
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        Self::from_sorted(members, weights)
    }

    pub fn empty() -> Self {
        Subset {
            members: Vec::new(),
            measure: 0.0,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.members.iter().all(|&x| other.contains(x))
    }

    /// Membership mask over a space of `n` points.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &x in &self.members {
            mask[x] = true;
        }
        mask
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }
}

use std::fmt;

pub type FactId = u32;

/// Set of fact ids over a fixed universe, stored as a dense bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    words: Vec<u64>,
}

impl State {
    pub fn empty(universe: usize) -> Self {
        State {
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn from_facts(universe: usize, facts: impl IntoIterator<Item = FactId>) -> Self {
        let mut s = State::empty(universe);
        for f in facts {
            s.insert(f);
        }
        s
    }

    /// Number of facts the bitset can address (rounded up to whole words).
    pub fn capacity(&self) -> usize {
        self.words.len() * 64
    }

    #[inline]
    pub fn contains(&self, f: FactId) -> bool {
        let f = f as usize;
        self.words
            .get(f / 64)
            .is_some_and(|w| w & (1u64 << (f % 64)) != 0)
    }

    #[inline]
    pub fn insert(&mut self, f: FactId) {
        let f = f as usize;
        self.words[f / 64] |= 1u64 << (f % 64);
    }

    #[inline]
    pub fn remove(&mut self, f: FactId) {
        let f = f as usize;
        self.words[f / 64] &= !(1u64 << (f % 64));
    }

    pub fn contains_all(&self, facts: &[FactId]) -> bool {
        facts.iter().all(|&f| self.contains(f))
    }

    pub fn is_subset(&self, other: &State) -> bool {
        self.words
            .iter()
            .zip(other.words.iter().chain(std::iter::repeat(&0)))
            .all(|(a, b)| a & !b == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = FactId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros();
                w &= w - 1;
                Some((i * 64) as FactId + bit)
            })
        })
    }

    /// FNV-1a over the set's fact ids; stable across runs and platforms.
    pub fn stable_hash(&self) -> u64 {
        let mut h = crate::util::Fnv64::new();
        for f in self.iter() {
            h.write(&f.to_le_bytes());
        }
        h.finish()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_operations() {
        let mut s = State::from_facts(130, [0, 5, 64, 129]);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 5, 64, 129]);
        assert_eq!(s.len(), 4);
        s.remove(5);
        assert!(!s.contains(5));
        assert!(s.contains_all(&[0, 64]));
        let t = State::from_facts(130, [0, 64, 129, 7]);
        assert!(s.is_subset(&t));
        assert!(!t.is_subset(&s));
        assert!(State::empty(10).is_empty());
    }
}

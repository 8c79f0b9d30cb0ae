use alloc::vec;
use alloc::vec::Vec;

const ABSENT: u32 = u32::MAX;

/// Set of node ids with O(1) insert, remove and uniform indexing.
#[derive(Clone, Debug)]
pub(crate) struct IndexedSet {
    items: Vec<u32>,
    slot: Vec<u32>,
}

impl IndexedSet {
    pub fn with_universe(n: usize) -> Self {
        Self {
            items: Vec::new(),
            slot: vec![ABSENT; n],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub fn get(&self, index: usize) -> usize {
        self.items[index] as usize
    }

    pub fn insert(&mut self, v: usize) {
        debug_assert_eq!(self.slot[v], ABSENT);
        self.slot[v] = self.items.len() as u32;
        self.items.push(v as u32);
    }

    pub fn remove(&mut self, v: usize) {
        let at = self.slot[v];
        debug_assert_ne!(at, ABSENT);
        let last = self.items.pop().expect("remove from empty set");
        if last as usize != v {
            self.items[at as usize] = last;
            self.slot[last as usize] = at;
        }
        self.slot[v] = ABSENT;
    }
}

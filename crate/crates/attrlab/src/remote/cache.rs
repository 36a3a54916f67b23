use std::collections::{BTreeMap, HashMap};

/// Least-recently-used map from request body to response body.
#[derive(Debug, Default)]
pub struct LruCache {
    capacity: usize,
    tick: u64,
    entries: HashMap<String, (String, u64)>,
    order: BTreeMap<u64, String>,
}

impl LruCache {
    pub fn new(capacity: usize) -> Self {
        LruCache { capacity, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&mut self, key: &str) -> Option<String> {
        let tick = self.next_tick();
        let (value, used) = self.entries.get_mut(key)?;
        self.order.remove(used);
        *used = tick;
        self.order.insert(tick, key.to_string());
        Some(value.clone())
    }

    pub fn insert(&mut self, key: String, value: String) {
        if self.capacity == 0 {
            return;
        }
        let tick = self.next_tick();
        if let Some((_, old)) = self.entries.insert(key.clone(), (value, tick)) {
            self.order.remove(&old);
        }
        self.order.insert(tick, key);
        while self.entries.len() > self.capacity {
            let Some((_, oldest)) = self.order.pop_first() else { break };
            self.entries.remove(&oldest);
        }
    }

    fn next_tick(&mut self) -> u64 {
        self.tick += 1;
        self.tick
    }
}

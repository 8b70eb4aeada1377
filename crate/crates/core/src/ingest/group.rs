use std::collections::BTreeSet;

use super::{CleanTrip, IngestConfig};

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }
}

fn jaccard_similarity(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

/// Trips that start within `group_window_secs` of each other and share at least
/// `group_min_jaccard` of their objects are treated as one group sharing devices;
/// grouping is the transitive closure of that relation. Output is ordered by trip id.
pub fn infer_group_size(mut trips: Vec<CleanTrip>, config: &IngestConfig) -> Vec<CleanTrip> {
    let n = trips.len();
    let sets: Vec<BTreeSet<&str>> = trips.iter().map(|t| t.visited_objects()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        trips[a]
            .start_time
            .cmp(&trips[b].start_time)
            .then_with(|| trips[a].trip_id.cmp(&trips[b].trip_id))
    });
    let mut ds = DisjointSet::new(n);
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if trips[j].start_time - trips[i].start_time > config.group_window_secs {
                break;
            }
            if jaccard_similarity(&sets[i], &sets[j]) >= config.group_min_jaccard {
                ds.union(i, j);
            }
        }
    }
    let sizes: Vec<u32> = (0..n)
        .map(|i| {
            let r = ds.find(i);
            ds.size[r] as u32
        })
        .collect();
    drop(sets);
    for (t, s) in trips.iter_mut().zip(sizes) {
        t.group_size = s;
    }
    trips.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));
    trips
}

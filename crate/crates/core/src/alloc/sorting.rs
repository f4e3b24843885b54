use serde::Serialize;

/// Fixed comparator circuit. Applying the comparators in order, each
/// swapping its pair into ascending order, sorts any input of `width`
/// elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SortingNetwork {
    pub width: usize,
    /// `(i, j)` with `i < j`; after the comparator `v[i] <= v[j]`.
    pub comparators: Vec<(usize, usize)>,
}

/// Batcher's odd-even merge sort network.
///
/// Built for the next power of two and pruned to `n` wires: padding wires
/// can be taken to hold `+inf`, so comparators touching them never swap and
/// can be dropped.
pub fn build_sorting_network(n: usize) -> SortingNetwork {
    assert!(n >= 1, "sorting network width must be positive");
    let size = n.next_power_of_two();
    let mut comparators = Vec::new();
    let mut p = 1;
    while p < size {
        let mut k = p;
        while k >= 1 {
            let mut j = k % p;
            while j + k < size {
                for i in 0..k.min(size - j - k) {
                    let (a, b) = (i + j, i + j + k);
                    if a / (2 * p) == b / (2 * p) && b < n {
                        comparators.push((a, b));
                    }
                }
                j += 2 * k;
            }
            k /= 2;
        }
        p *= 2;
    }
    SortingNetwork { width: n, comparators }
}

impl SortingNetwork {
    pub fn apply<T: PartialOrd>(&self, values: &mut [T]) {
        assert_eq!(values.len(), self.width);
        for &(i, j) in &self.comparators {
            if values[j] < values[i] {
                values.swap(i, j);
            }
        }
    }

    /// Exhaustive zero-one check. Exponential in `width`.
    pub fn sorts_all_binary_inputs(&self) -> bool {
        assert!(self.width <= 24, "exhaustive check is limited to 24 wires");
        (0u32..1 << self.width).all(|mask| {
            let mut v: Vec<u8> = (0..self.width).map(|i| (mask >> i & 1) as u8).collect();
            self.apply(&mut v);
            v.windows(2).all(|w| w[0] <= w[1])
        })
    }

    /// Number of comparator layers when comparators are scheduled greedily.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.width];
        for &(i, j) in &self.comparators {
            let l = level[i].max(level[j]) + 1;
            level[i] = l;
            level[j] = l;
        }
        level.into_iter().max().unwrap_or(0)
    }
}

//! Loopless k-shortest paths by hop count.

use std::collections::{BTreeSet, HashSet, VecDeque};

/// Up to `k` loopless paths from `source` to `target` in order of hop count,
/// ties broken by the lexicographic order of the node sequence.
///
/// `adj[u]` lists the heads of `u`'s out-edges.
pub fn k_shortest_paths(adj: &[Vec<usize>], source: usize, target: usize, k: usize) -> Vec<Vec<usize>> {
    let mut found: Vec<Vec<usize>> = Vec::new();
    if k == 0 || source == target {
        return found;
    }
    let Some(first) = shortest(adj, source, target, &HashSet::new(), &HashSet::new()) else {
        return found;
    };
    found.push(first);
    let mut candidates: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    while found.len() < k {
        let last = found.last().unwrap().clone();
        for i in 0..last.len() - 1 {
            let root = &last[..=i];
            let mut cut: HashSet<(usize, usize)> = HashSet::new();
            for p in &found {
                if p.len() > i + 1 && &p[..=i] == root {
                    cut.insert((p[i], p[i + 1]));
                }
            }
            let blocked: HashSet<usize> = root[..i].iter().copied().collect();
            if let Some(spur) = shortest(adj, root[i], target, &blocked, &cut) {
                let mut path = root[..i].to_vec();
                path.extend(spur);
                if !found.contains(&path) {
                    candidates.insert((path.len(), path));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, p)) => found.push(p),
            None => break,
        }
    }
    found
}

/// Lexicographically smallest among the fewest-hop paths, avoiding
/// `blocked` nodes and `cut` edges.
fn shortest(
    adj: &[Vec<usize>],
    source: usize,
    target: usize,
    blocked: &HashSet<usize>,
    cut: &HashSet<(usize, usize)>,
) -> Option<Vec<usize>> {
    let n = adj.len();
    let usable = |u: usize, v: usize| !blocked.contains(&v) && !blocked.contains(&u) && !cut.contains(&(u, v));
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, heads) in adj.iter().enumerate() {
        for &v in heads {
            if usable(u, v) {
                rev[v].push(u);
            }
        }
    }
    // Hop distance to the target.
    let mut dist = vec![usize::MAX; n];
    dist[target] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    if dist[source] == usize::MAX {
        return None;
    }
    let mut path = vec![source];
    let mut u = source;
    while u != target {
        u = adj[u]
            .iter()
            .copied()
            .filter(|&v| usable(u, v) && dist[v] != usize::MAX && dist[v] + 1 == dist[u])
            .min()?;
        path.push(u);
    }
    Some(path)
}

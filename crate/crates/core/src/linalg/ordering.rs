//! Reverse Cuthill–McKee bandwidth-reducing ordering.

use std::collections::VecDeque;

/// Returns a permutation `perm` (new index -> old index) that reduces the
/// bandwidth of the symmetrized pattern given by `adjacency`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        // lowest-degree unvisited node, refined to a pseudo-peripheral one
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        let start = pseudo_peripheral(adjacency, &degree, seed, &visited);

        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(node) = queue.pop_front() {
            order.push(node);
            let mut next: Vec<usize> = adjacency[node].iter().copied().filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adjacency: &[Vec<usize>], start: usize, blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = blocked.to_vec();
    seen[start] = true;
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &u in levels.last().unwrap() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn pseudo_peripheral(adjacency: &[Vec<usize>], degree: &[usize], seed: usize, blocked: &[bool]) -> usize {
    let mut node = seed;
    let mut depth = bfs_levels(adjacency, node, blocked).len();
    for _ in 0..8 {
        let levels = bfs_levels(adjacency, node, blocked);
        let candidate = *levels
            .last()
            .unwrap()
            .iter()
            .min_by_key(|&&j| (degree[j], j))
            .unwrap();
        let cand_depth = bfs_levels(adjacency, candidate, blocked).len();
        if cand_depth > depth {
            node = candidate;
            depth = cand_depth;
        } else {
            break;
        }
    }
    node
}

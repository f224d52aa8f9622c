//! Reverse Cuthill–McKee ordering and a symmetric skyline (envelope)
//! Cholesky factorization.

use std::collections::VecDeque;

/// Reverse Cuthill–McKee permutation of an undirected graph given by
/// adjacency lists. Returns `order` with `order[new] = old`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(adjacency, &degree, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Repeated breadth-first sweeps towards a vertex of maximal eccentricity.
fn pseudo_peripheral(adjacency: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut root = seed;
    let mut depth = 0;
    loop {
        let levels = bfs_levels(adjacency, root);
        let max_level = levels.iter().filter_map(|l| *l).max().unwrap_or(0);
        if max_level <= depth && root != seed {
            return root;
        }
        depth = max_level;
        let candidate = (0..adjacency.len())
            .filter(|&v| levels[v] == Some(max_level))
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(root);
        if candidate == root {
            return root;
        }
        root = candidate;
    }
}

fn bfs_levels(adjacency: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let mut levels = vec![None; adjacency.len()];
    levels[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let l = levels[v].unwrap_or(0);
        for &w in &adjacency[v] {
            if levels[w].is_none() {
                levels[w] = Some(l + 1);
                queue.push_back(w);
            }
        }
    }
    levels
}

/// Lower triangle of a symmetric matrix stored row by row from the first
/// structurally nonzero column to the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SkylineMatrix {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineMatrix {
    /// `first[i]` is the leftmost column stored in row `i` (`first[i] <= i`).
    pub fn new(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        start.push(0);
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            start.push(start[i] + (i - f + 1));
        }
        let data = vec![0.0; *start.last().unwrap_or(&0)];
        Self { first, start, data }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Number of stored entries.
    pub fn profile(&self) -> usize {
        self.data.len()
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && j >= self.first[i]);
        self.start[i] + (j - self.first[i])
    }

    /// Adds `v` to entry `(i, j)`; either triangle may be addressed.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        let k = self.index(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        if c < self.first[r] {
            0.0
        } else {
            self.data[self.index(r, c)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for i in 0..self.dim() {
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let f = self.first[i];
            for (k, a) in row.iter().enumerate() {
                let j = f + k;
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Overwrites the matrix with its Cholesky factor `L` (`A = L Lᵀ`).
    /// Fails with the row of the first non-positive pivot.
    pub fn factorize(mut self) -> Result<CholeskyFactor, usize> {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let (row_i, row_j) = (si + (k0 - fi), self.start[j] + (k0 - fj));
                let len = j - k0;
                let mut dot = 0.0;
                for k in 0..len {
                    dot += self.data[row_i + k] * self.data[row_j + k];
                }
                let diag_j = self.data[self.start[j + 1] - 1];
                let idx = si + (j - fi);
                self.data[idx] = (self.data[idx] - dot) / diag_j;
            }
            let diag_idx = self.start[i + 1] - 1;
            let sq: f64 = self.data[si..diag_idx].iter().map(|x| x * x).sum();
            let d = self.data[diag_idx] - sq;
            if !(d > 0.0) || !d.is_finite() {
                return Err(i);
            }
            self.data[diag_idx] = d.sqrt();
        }
        Ok(CholeskyFactor { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: SkylineMatrix,
}

impl CholeskyFactor {
    /// Solves `A x = b` by forward and backward substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let n = l.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let f = l.first[i];
            let row = &l.data[l.start[i]..l.start[i + 1]];
            let dot: f64 = row[..i - f].iter().zip(&y[f..i]).map(|(a, x)| a * x).sum();
            y[i] = (y[i] - dot) / row[i - f];
        }
        for i in (0..n).rev() {
            let f = l.first[i];
            let row = &l.data[l.start[i]..l.start[i + 1]];
            y[i] /= row[i - f];
            let yi = y[i];
            for (k, a) in row[..i - f].iter().enumerate() {
                y[f + k] -= a * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn bandwidth(adjacency: &[Vec<usize>], order: &[usize]) -> usize {
        let mut pos = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        adjacency
            .iter()
            .enumerate()
            .flat_map(|(v, nb)| nb.iter().map(move |&w| (v, w)))
            .map(|(v, w)| pos[v].abs_diff(pos[w]))
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn rcm_narrows_a_shuffled_path() {
        // path graph with scrambled labels
        let labels = [5, 2, 8, 0, 7, 3, 9, 1, 6, 4];
        let mut adj = vec![Vec::new(); 10];
        for w in labels.windows(2) {
            adj[w[0]].push(w[1]);
            adj[w[1]].push(w[0]);
        }
        let order = reverse_cuthill_mckee(&adj);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_eq!(bandwidth(&adj, &order), 1);
    }

    #[test]
    fn rcm_handles_disconnected_graphs() {
        let adj = vec![vec![1], vec![0], vec![], vec![4], vec![3]];
        let order = reverse_cuthill_mckee(&adj);
        assert_eq!(order.len(), 5);
        assert_eq!(bandwidth(&adj, &order), 1);
    }

    #[test]
    fn factor_and_solve_tridiagonal() {
        let n = 6;
        let first: Vec<usize> = (0..n).map(|i: usize| i.saturating_sub(1)).collect();
        let mut a = SkylineMatrix::new(first);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = a.factorize().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = SkylineMatrix::new(vec![0, 0]);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0);
        assert_eq!(a.factorize().unwrap_err(), 1);
    }

    proptest! {
        #[test]
        fn random_spd_envelopes(n in 1usize..25, seed in prop::collection::vec(-1.0f64..1.0, 625), band in 0usize..6) {
            // A = M Mᵀ + n I restricted to a band stays SPD after adding the diagonal shift
            let first: Vec<usize> = (0..n).map(|i| i.saturating_sub(band)).collect();
            let mut a = SkylineMatrix::new(first.clone());
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in first[i]..i {
                    let v = seed[i * 25 + j];
                    a.add(i, j, v);
                    dense[i][j] = v;
                    dense[j][i] = v;
                }
                a.add(i, i, 2.0 * band as f64 + 1.0);
                dense[i][i] = 2.0 * band as f64 + 1.0;
            }
            let b: Vec<f64> = (0..n).map(|i| seed[600 + i % 25]).collect();
            let x = a.clone().factorize().unwrap().solve(&b);
            for i in 0..n {
                let r: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum::<f64>() - b[i];
                prop_assert!(r.abs() < 1e-12);
            }
            let y = a.mul_vec(&x);
            for i in 0..n {
                prop_assert!((y[i] - b[i]).abs() < 1e-12);
            }
        }
    }
}

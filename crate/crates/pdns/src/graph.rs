//! Symmetrically normalized user-item interaction graph.
//!
//! Nodes are users followed by items (users occupy `0..n_users`, item `i`
//! is node `n_users + i`). Every train pair (u, i) contributes the edge
//! u <-> i with weight `1/sqrt(deg(u) * deg(i))`. No self-loops.

use crate::dataset::InteractionDataset;

/// CSR adjacency over the combined user+item node space.
#[derive(Debug, Clone)]
pub struct NormalizedGraph {
    pub n_users: usize,
    pub n_items: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    weight: Vec<f64>,
}

impl NormalizedGraph {
    pub fn from_dataset(ds: &InteractionDataset) -> Self {
        let n_users = ds.n_users;
        let n_items = ds.n_items;
        let n_nodes = n_users + n_items;

        let mut deg = vec![0usize; n_nodes];
        for &(u, i) in &ds.train {
            deg[u as usize] += 1;
            deg[n_users + i as usize] += 1;
        }

        let mut row_ptr = vec![0usize; n_nodes + 1];
        for v in 0..n_nodes {
            row_ptr[v + 1] = row_ptr[v] + deg[v];
        }
        let nnz = row_ptr[n_nodes];
        let mut col_idx = vec![0u32; nnz];
        let mut weight = vec![0.0f64; nnz];
        let mut cursor = row_ptr.clone();
        for &(u, i) in &ds.train {
            let un = u as usize;
            let inode = n_users + i as usize;
            let w = 1.0 / ((deg[un] * deg[inode]) as f64).sqrt();
            col_idx[cursor[un]] = inode as u32;
            weight[cursor[un]] = w;
            cursor[un] += 1;
            col_idx[cursor[inode]] = un as u32;
            weight[cursor[inode]] = w;
            cursor[inode] += 1;
        }
        // deterministic neighbor order regardless of input pair order
        for v in 0..n_nodes {
            let r = row_ptr[v]..row_ptr[v + 1];
            let mut pairs: Vec<(u32, f64)> = col_idx[r.clone()]
                .iter()
                .copied()
                .zip(weight[r.clone()].iter().copied())
                .collect();
            pairs.sort_by_key(|&(c, _)| c);
            for (k, (c, w)) in pairs.into_iter().enumerate() {
                col_idx[row_ptr[v] + k] = c;
                weight[row_ptr[v] + k] = w;
            }
        }

        NormalizedGraph {
            n_users,
            n_items,
            row_ptr,
            col_idx,
            weight,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_users + self.n_items
    }

    /// Edge count (undirected pairs).
    pub fn n_edges(&self) -> usize {
        self.col_idx.len() / 2
    }

    /// One propagation step: `out[v] = sum_{w in N(v)} weight(v,w) * input[w]`
    /// over `dim`-wide rows.
    pub fn apply(&self, input: &[f64], output: &mut [f64], dim: usize) {
        debug_assert_eq!(input.len(), self.n_nodes() * dim);
        debug_assert_eq!(output.len(), input.len());
        output.fill(0.0);
        for v in 0..self.n_nodes() {
            let out_row = &mut output[v * dim..(v + 1) * dim];
            for e in self.row_ptr[v]..self.row_ptr[v + 1] {
                let src = self.col_idx[e] as usize * dim;
                let w = self.weight[e];
                let src_row = &input[src..src + dim];
                for (o, &x) in out_row.iter_mut().zip(src_row) {
                    *o += w * x;
                }
            }
        }
    }

    /// Mean of propagation layers 0..=layers applied to `input`.
    ///
    /// This is the linear operator behind both the forward embedding
    /// combination and (being symmetric) gradient backpropagation.
    pub fn smooth(&self, input: &[f64], layers: usize, dim: usize) -> Vec<f64> {
        let mut acc = input.to_vec();
        if layers == 0 {
            return acc;
        }
        let mut cur = input.to_vec();
        let mut next = vec![0.0; input.len()];
        for _ in 0..layers {
            self.apply(&cur, &mut next, dim);
            std::mem::swap(&mut cur, &mut next);
            for (a, &x) in acc.iter_mut().zip(&cur) {
                *a += x;
            }
        }
        let scale = 1.0 / (layers + 1) as f64;
        for a in &mut acc {
            *a *= scale;
        }
        acc
    }
}

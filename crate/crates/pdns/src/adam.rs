//! Sparse Adam over the embedding tables.
//!
//! Moment buffers are dense but only rows touched by a batch (including
//! graph-propagation ancestors, which arrive as touched rows after backprop)
//! receive moment and parameter updates. One global step counter drives bias
//! correction.

use crate::error::{Error, Result};
use crate::model::EmbeddingModel;

#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    m_user: Vec<f64>,
    v_user: Vec<f64>,
    m_item: Vec<f64>,
    v_item: Vec<f64>,
}

/// Per-batch gradient accumulator over raw embedding rows.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    pub dim: usize,
    pub user: Vec<f64>,
    pub item: Vec<f64>,
    user_touched: Vec<bool>,
    item_touched: Vec<bool>,
}

impl GradBuffer {
    pub fn new(n_users: usize, n_items: usize, dim: usize) -> Self {
        GradBuffer {
            dim,
            user: vec![0.0; n_users * dim],
            item: vec![0.0; n_items * dim],
            user_touched: vec![false; n_users],
            item_touched: vec![false; n_items],
        }
    }

    pub fn clear(&mut self) {
        self.user.fill(0.0);
        self.item.fill(0.0);
        self.user_touched.fill(false);
        self.item_touched.fill(false);
    }

    pub fn add_user(&mut self, u: usize, scale: f64, vec: &[f64]) {
        self.user_touched[u] = true;
        let row = &mut self.user[u * self.dim..(u + 1) * self.dim];
        for (g, &x) in row.iter_mut().zip(vec) {
            *g += scale * x;
        }
    }

    pub fn add_item(&mut self, i: usize, scale: f64, vec: &[f64]) {
        self.item_touched[i] = true;
        let row = &mut self.item[i * self.dim..(i + 1) * self.dim];
        for (g, &x) in row.iter_mut().zip(vec) {
            *g += scale * x;
        }
    }

    /// Uniformly rescale accumulated gradients (batch mean reduction).
    pub fn scale(&mut self, s: f64) {
        for g in self.user.iter_mut().chain(self.item.iter_mut()) {
            *g *= s;
        }
    }

    /// Replace contents with already-dense gradients (after graph backprop);
    /// every row with a nonzero entry counts as touched.
    pub fn set_dense(&mut self, user: Vec<f64>, item: Vec<f64>) {
        self.user = user;
        self.item = item;
        for (u, flag) in self.user_touched.iter_mut().enumerate() {
            *flag = self.user[u * self.dim..(u + 1) * self.dim]
                .iter()
                .any(|&x| x != 0.0);
        }
        for (i, flag) in self.item_touched.iter_mut().enumerate() {
            *flag = self.item[i * self.dim..(i + 1) * self.dim]
                .iter()
                .any(|&x| x != 0.0);
        }
    }

    pub fn touched_users(&self) -> impl Iterator<Item = usize> + '_ {
        self.user_touched
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(u, _)| u)
    }

    pub fn touched_items(&self) -> impl Iterator<Item = usize> + '_ {
        self.item_touched
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(i, _)| i)
    }
}

impl AdamState {
    pub fn new(model: &EmbeddingModel, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            m_user: vec![0.0; model.user_emb.len()],
            v_user: vec![0.0; model.user_emb.len()],
            m_item: vec![0.0; model.item_emb.len()],
            v_item: vec![0.0; model.item_emb.len()],
        }
    }

    /// One Adam step over the touched rows of `grads`.
    pub fn step(&mut self, model: &mut EmbeddingModel, grads: &GradBuffer) -> Result<()> {
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let dim = grads.dim;

        let update =
            |row: usize, grad: &[f64], theta: &mut [f64], m: &mut [f64], v: &mut [f64]| -> Result<()> {
                let r = row * dim..(row + 1) * dim;
                for (((g, th), mm), vv) in grad[r.clone()]
                    .iter()
                    .zip(&mut theta[r.clone()])
                    .zip(&mut m[r.clone()])
                    .zip(&mut v[r])
                {
                    if !g.is_finite() {
                        return Err(Error::NonFinite {
                            context: format!("gradient for row {row}"),
                        });
                    }
                    *mm = self.beta1 * *mm + (1.0 - self.beta1) * g;
                    *vv = self.beta2 * *vv + (1.0 - self.beta2) * g * g;
                    let m_hat = *mm / bc1;
                    let v_hat = *vv / bc2;
                    *th -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                }
                Ok(())
            };

        for u in grads.touched_users() {
            update(u, &grads.user, &mut model.user_emb, &mut self.m_user, &mut self.v_user)?;
        }
        for i in grads.touched_items() {
            update(i, &grads.item, &mut model.item_emb, &mut self.m_item, &mut self.v_item)?;
        }
        Ok(())
    }
}

//! Fixed-capacity bundle with reserved slots and cyclic replacement of the
//! remaining ones. The Gram matrix `GᵀB⁻¹G` is maintained incrementally: when
//! a slot changes only its row and column are recomputed.

use crate::bound::BundleModel;
use crate::error::{check_dim, Error, Result};
use crate::metric::{dot, Metric};

#[derive(Debug, Clone)]
pub struct CrsBundle {
    capacity: usize,
    reserved: usize,
    n: usize,
    metric: Metric,
    h: Vec<f64>,
    g: Vec<Vec<f64>>,
    filled: Vec<bool>,
    q: Vec<f64>,
    anchor: Option<Vec<f64>>,
    anchor_dot: Vec<f64>,
    cursor: usize,
    last_ring: Option<usize>,
}

impl CrsBundle {
    /// `anchor`, when given, is a fixed point `x̂` for which `⟨g_i, x̂⟩` is kept
    /// per slot.
    pub fn new(capacity: usize, reserved: usize, metric: Metric, anchor: Option<Vec<f64>>) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("bundle capacity must be at least 1".into()));
        }
        if reserved > capacity {
            return Err(Error::InvalidArgument(format!(
                "{reserved} reserved slots exceed the bundle capacity {capacity}"
            )));
        }
        let n = metric.dim();
        if let Some(a) = &anchor {
            check_dim(n, a.len())?;
        }
        Ok(Self {
            capacity,
            reserved,
            n,
            metric,
            h: vec![0.0; capacity],
            g: vec![Vec::new(); capacity],
            filled: vec![false; capacity],
            q: vec![0.0; capacity * capacity],
            anchor,
            anchor_dot: vec![0.0; capacity],
            cursor: 0,
            last_ring: None,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn reserved(&self) -> usize {
        self.reserved
    }

    /// Writes `(h, g)` into `slot` and refreshes the Gram row and column.
    pub fn set_slot(&mut self, slot: usize, h: f64, g: &[f64]) -> Result<()> {
        if slot >= self.capacity {
            return Err(Error::InvalidArgument(format!("slot {slot} out of range")));
        }
        check_dim(self.n, g.len())?;
        self.h[slot] = h;
        if self.g[slot].len() == self.n {
            self.g[slot].copy_from_slice(g);
        } else {
            self.g[slot] = g.to_vec();
        }
        self.filled[slot] = true;
        let c = self.capacity;
        for j in 0..c {
            if self.filled[j] {
                let v = self.metric.dual_inner_unchecked(&self.g[slot], &self.g[j]);
                self.q[slot * c + j] = v;
                self.q[j * c + slot] = v;
            }
        }
        if let Some(a) = &self.anchor {
            self.anchor_dot[slot] = dot(&self.g[slot], a);
        }
        Ok(())
    }

    /// Overwrites the reserved slots in order and, when `past` is given, stores
    /// it in the cyclic part, displacing the oldest entry there.
    pub fn crs_insert(&mut self, reserved: &[(f64, &[f64])], past: Option<(f64, &[f64])>) -> Result<()> {
        if reserved.len() > self.reserved {
            return Err(Error::InvalidArgument(format!(
                "{} reserved records given for {} reserved slots",
                reserved.len(),
                self.reserved
            )));
        }
        if let Some((h, g)) = past {
            let ring = self.capacity - self.reserved;
            if ring > 0 {
                let slot = self.reserved + self.cursor;
                self.set_slot(slot, h, g)?;
                self.last_ring = Some(slot);
                self.cursor = (self.cursor + 1) % ring;
            }
        }
        for (slot, (h, g)) in reserved.iter().enumerate() {
            self.set_slot(slot, *h, g)?;
        }
        Ok(())
    }

    /// Physical slot most recently written by the cyclic part.
    pub fn last_ring_slot(&self) -> Option<usize> {
        self.last_ring
    }

    /// Filled slots: reserved ones first, then the cyclic part in physical
    /// order.
    pub fn active(&self) -> Vec<usize> {
        (0..self.capacity).filter(|&i| self.filled[i]).collect()
    }

    pub fn offset(&self, slot: usize) -> f64 {
        self.h[slot]
    }

    pub fn gradient(&self, slot: usize) -> &[f64] {
        &self.g[slot]
    }

    pub fn anchor_dot(&self, slot: usize) -> f64 {
        self.anchor_dot[slot]
    }

    /// Gram matrix restricted to `idx`, row-major.
    pub fn gram_of(&self, idx: &[usize]) -> Vec<f64> {
        let c = self.capacity;
        let mut out = Vec::with_capacity(idx.len() * idx.len());
        for &i in idx {
            for &j in idx {
                out.push(self.q[i * c + j]);
            }
        }
        out
    }

    /// `Σ λ_k g_{idx_k}`.
    pub fn combine(&self, idx: &[usize], lambda: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&i, &l) in idx.iter().zip(lambda) {
            if l != 0.0 {
                crate::metric::axpy(l, &self.g[i], out);
            }
        }
    }

    pub fn to_model(&self, lipschitz: f64) -> Result<BundleModel> {
        let idx = self.active();
        BundleModel::from_parts(
            idx.iter().map(|&i| self.h[i]).collect(),
            idx.iter().map(|&i| self.g[i].clone()).collect(),
            lipschitz,
            self.metric.clone(),
        )
    }
}

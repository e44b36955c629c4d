use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::RuleFingerprint;
use crate::rng::seeded;

/// Offsets of each parameter block inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub input: usize,
    pub hidden: usize,
    pub actions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Wz,
    Wr,
    Wn,
    Uz,
    Ur,
    Un,
    Bz,
    Br,
    Bn,
    Wo,
    Bo,
}

impl Block {
    pub const ALL: [Block; 11] = [
        Block::Wz,
        Block::Wr,
        Block::Wn,
        Block::Uz,
        Block::Ur,
        Block::Un,
        Block::Bz,
        Block::Br,
        Block::Bn,
        Block::Wo,
        Block::Bo,
    ];
}

impl Layout {
    /// (rows, cols) of a block.
    pub fn shape(&self, b: Block) -> (usize, usize) {
        let (i, h, a) = (self.input, self.hidden, self.actions);
        match b {
            Block::Wz | Block::Wr | Block::Wn => (h, i),
            Block::Uz | Block::Ur | Block::Un => (h, h),
            Block::Bz | Block::Br | Block::Bn => (h, 1),
            Block::Wo => (a, h),
            Block::Bo => (a, 1),
        }
    }

    pub fn range(&self, b: Block) -> std::ops::Range<usize> {
        let mut start = 0;
        for blk in Block::ALL {
            let (r, c) = self.shape(blk);
            if blk == b {
                return start..start + r * c;
            }
            start += r * c;
        }
        unreachable!()
    }

    pub fn len(&self) -> usize {
        Block::ALL
            .iter()
            .map(|&b| {
                let (r, c) = self.shape(b);
                r * c
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Gated recurrent cell with a linear softmax readout.
///
/// ```text
/// z  = σ(Wz x + Uz h + bz)
/// r  = σ(Wr x + Ur h + br)
/// n  = tanh(Wn x + Un (r ⊙ h) + bn)
/// h' = (1 − z) ⊙ n + z ⊙ h
/// π  = softmax over legal actions of (Wo h' + bo)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentPolicy {
    pub layout: Layout,
    pub params: Vec<f64>,
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub n: Vec<f64>,
    pub h: Vec<f64>,
    pub probs: Vec<f64>,
    pub mask: Vec<bool>,
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `out += M v` for row-major `M` of shape (rows, v.len()).
fn matvec_add(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Mᵀ u` for row-major `M` of shape (u.len(), out.len()).
fn matvec_t_add(m: &[f64], u: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (ui, row) in u.iter().zip(m.chunks_exact(cols)) {
        if *ui == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += ui * a;
        }
    }
}

/// `g += u vᵀ`.
fn outer_add(g: &mut [f64], u: &[f64], v: &[f64]) {
    let cols = v.len();
    for (ui, row) in u.iter().zip(g.chunks_exact_mut(cols)) {
        if *ui == 0.0 {
            continue;
        }
        for (gi, vi) in row.iter_mut().zip(v) {
            *gi += ui * vi;
        }
    }
}

/// Softmax restricted to legal entries; illegal entries get probability 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::IllegalAction("no legal action available".into()));
    }
    if !max.is_finite() {
        return Err(Error::Numeric(format!("non-finite logit {max}")));
    }
    let mut p: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(l, &m)| if m { (l - max).exp() } else { 0.0 })
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    Ok(p)
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

impl RecurrentPolicy {
    pub fn zeros(input: usize, hidden: usize, actions: usize) -> Self {
        let layout = Layout {
            input,
            hidden,
            actions,
        };
        Self {
            params: vec![0.0; layout.len()],
            layout,
        }
    }

    /// Uniform fan-in initialization; the readout starts small so the initial policy is near uniform.
    pub fn init(input: usize, hidden: usize, actions: usize, seed: u64) -> Self {
        let mut p = Self::zeros(input, hidden, actions);
        let mut rng = seeded(seed, &[0x1417]);
        for b in Block::ALL {
            let (_, cols) = p.layout.shape(b);
            let bound = match b {
                Block::Bz | Block::Br | Block::Bn | Block::Bo => 0.0,
                Block::Wo => 0.1 / (cols as f64).sqrt(),
                _ => 1.0 / (cols as f64).sqrt(),
            };
            let range = p.layout.range(b);
            for v in &mut p.params[range] {
                *v = if bound > 0.0 {
                    rng.gen_range(-bound..bound)
                } else {
                    0.0
                };
            }
        }
        p
    }

    pub fn hidden_dim(&self) -> usize {
        self.layout.hidden
    }

    pub fn block(&self, b: Block) -> &[f64] {
        &self.params[self.layout.range(b)]
    }

    pub fn block_mut(&mut self, b: Block) -> &mut [f64] {
        let r = self.layout.range(b);
        &mut self.params[r]
    }

    pub fn param_norm(&self) -> f64 {
        self.params.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn fingerprint(&self, level: usize) -> RuleFingerprint {
        RuleFingerprint::from_reals(level, "gru-weights", &self.params)
    }

    /// Recurrent update only.
    pub fn cell(&self, h: &[f64], x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let hd = self.layout.hidden;
        if x.len() != self.layout.input || h.len() != hd {
            return Err(Error::InvalidInput(format!(
                "expected input {} and hidden {}, got {} and {}",
                self.layout.input,
                hd,
                x.len(),
                h.len()
            )));
        }
        let mut z = self.block(Block::Bz).to_vec();
        matvec_add(self.block(Block::Wz), x, &mut z);
        matvec_add(self.block(Block::Uz), h, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut r = self.block(Block::Br).to_vec();
        matvec_add(self.block(Block::Wr), x, &mut r);
        matvec_add(self.block(Block::Ur), h, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));

        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let mut n = self.block(Block::Bn).to_vec();
        matvec_add(self.block(Block::Wn), x, &mut n);
        matvec_add(self.block(Block::Un), &rh, &mut n);
        n.iter_mut().for_each(|v| *v = v.tanh());

        let h_new: Vec<f64> = (0..hd)
            .map(|k| (1.0 - z[k]) * n[k] + z[k] * h[k])
            .collect();
        if h_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite hidden state (parameter norm {:.3e})",
                self.param_norm()
            )));
        }
        Ok((z, r, n, h_new))
    }

    pub fn logits(&self, h: &[f64]) -> Vec<f64> {
        let mut l = self.block(Block::Bo).to_vec();
        matvec_add(self.block(Block::Wo), h, &mut l);
        l
    }

    pub fn readout(&self, h: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
        if mask.len() != self.layout.actions {
            return Err(Error::InvalidInput(format!(
                "mask has {} entries for {} actions",
                mask.len(),
                self.layout.actions
            )));
        }
        let logits = self.logits(h);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite logits (parameter norm {:.3e})",
                self.param_norm()
            )));
        }
        masked_softmax(&logits, mask)
    }

    /// One decision: recurrent update then masked action distribution.
    pub fn forward(&self, h: &[f64], x: &[f64], mask: &[bool]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (_, _, _, h_new) = self.cell(h, x)?;
        let probs = self.readout(&h_new, mask)?;
        Ok((probs, h_new))
    }

    /// Forward step that keeps the intermediates for backpropagation.
    pub fn forward_cached(&self, h: &[f64], x: &[f64], mask: &[bool]) -> Result<StepCache> {
        let (z, r, n, h_new) = self.cell(h, x)?;
        let probs = self.readout(&h_new, mask)?;
        Ok(StepCache {
            x: x.to_vec(),
            h_prev: h.to_vec(),
            z,
            r,
            n,
            h: h_new,
            probs,
            mask: mask.to_vec(),
        })
    }

    /// Accumulates into `grad` the gradient of a loss whose derivative with
    /// respect to each step's logits is `dlogits[t]`.
    pub fn backward(&self, steps: &[StepCache], dlogits: &[Vec<f64>], grad: &mut [f64]) {
        let lay = self.layout;
        let hd = lay.hidden;
        let mut dh_next = vec![0.0; hd];
        let wo = self.block(Block::Wo);
        let (uz, ur, un) = (self.block(Block::Uz), self.block(Block::Ur), self.block(Block::Un));
        for (s, dl) in steps.iter().zip(dlogits).rev() {
            outer_add(&mut grad[lay.range(Block::Wo)], dl, &s.h);
            for (g, d) in grad[lay.range(Block::Bo)].iter_mut().zip(dl) {
                *g += d;
            }
            let mut dh = dh_next.clone();
            matvec_t_add(wo, dl, &mut dh);

            let mut dh_prev = vec![0.0; hd];
            let mut dan = vec![0.0; hd];
            let mut daz = vec![0.0; hd];
            for k in 0..hd {
                let dn = dh[k] * (1.0 - s.z[k]);
                let dz = dh[k] * (s.h_prev[k] - s.n[k]);
                dh_prev[k] += dh[k] * s.z[k];
                dan[k] = dn * (1.0 - s.n[k] * s.n[k]);
                daz[k] = dz * s.z[k] * (1.0 - s.z[k]);
            }
            let rh: Vec<f64> = s.r.iter().zip(&s.h_prev).map(|(a, b)| a * b).collect();
            let mut drh = vec![0.0; hd];
            matvec_t_add(un, &dan, &mut drh);
            let mut dar = vec![0.0; hd];
            for k in 0..hd {
                dh_prev[k] += drh[k] * s.r[k];
                let dr = drh[k] * s.h_prev[k];
                dar[k] = dr * s.r[k] * (1.0 - s.r[k]);
            }

            outer_add(&mut grad[lay.range(Block::Wn)], &dan, &s.x);
            outer_add(&mut grad[lay.range(Block::Un)], &dan, &rh);
            outer_add(&mut grad[lay.range(Block::Wz)], &daz, &s.x);
            outer_add(&mut grad[lay.range(Block::Uz)], &daz, &s.h_prev);
            outer_add(&mut grad[lay.range(Block::Wr)], &dar, &s.x);
            outer_add(&mut grad[lay.range(Block::Ur)], &dar, &s.h_prev);
            for (blk, d) in [(Block::Bn, &dan), (Block::Bz, &daz), (Block::Br, &dar)] {
                for (g, v) in grad[lay.range(blk)].iter_mut().zip(d.iter()) {
                    *g += v;
                }
            }
            matvec_t_add(uz, &daz, &mut dh_prev);
            matvec_t_add(ur, &dar, &mut dh_prev);
            dh_next = dh_prev;
        }
    }
}

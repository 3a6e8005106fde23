//! Graph-level building blocks shared by the encoders.
//!
//! Every function takes already-bound graph variables; parameter ownership
//! and initialization live in [`super::model`].

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Sequence convolution with zero left padding.
///
/// `x` is `[n x m]`, `filters` is `[(window·m) x t]` where row block `k`
/// multiplies the term at offset `k` inside the window `x_{j-window+1..=j}`.
/// Output is `[n x t]`.
pub fn convolve(g: &mut Graph, x: Var, filters: Var, window: usize) -> Result<Var> {
    let (n, m) = (g.value(x).rows(), g.value(x).cols());
    let fshape = g.value(filters).shape().to_vec();
    if window == 0 || fshape.len() != 2 || fshape[0] != window * m {
        return Err(Error::Shape(format!(
            "convolve: filters {fshape:?} do not fit window {window} over {m}-dimensional terms"
        )));
    }
    let padded = if window > 1 {
        let pad = g.constant(Tensor::zeros(&[window - 1, m]));
        g.concat_rows(&[pad, x])?
    } else {
        x
    };
    let mut out: Option<Var> = None;
    for k in 0..window {
        let rows = g.slice_rows(padded, k, k + n)?;
        let block = g.slice_rows(filters, k * m, (k + 1) * m)?;
        let part = g.matmul(rows, block)?;
        out = Some(match out {
            Some(acc) => g.add(acc, part)?,
            None => part,
        });
    }
    Ok(out.expect("window >= 1"))
}

/// Column-wise maximum over positions: `[n x t] -> [1 x t]`.
pub fn max_pool(g: &mut Graph, c: Var) -> Result<Var> {
    g.max_rows(c)
}

/// Half-open row ranges of the left, inner and right pooling segments.
///
/// With `a = min(subj, obj)` and `b = max(subj, obj)`: left is `[0, a]`,
/// inner is `(a, b]` and right is `(b, n)`.
pub fn segments(n: usize, subj_pos: usize, obj_pos: usize) -> [(usize, usize); 3] {
    let (a, b) = (subj_pos.min(obj_pos), subj_pos.max(obj_pos));
    [(0, a + 1), (a + 1, b + 1), (b + 1, n)]
}

/// Max-pooling over the three participant-delimited segments, `[n x t] ->
/// [1 x 3t]`. An empty segment contributes a block of zeros.
pub fn piecewise_max_pool(g: &mut Graph, c: Var, subj_pos: usize, obj_pos: usize) -> Result<Var> {
    let (n, t) = (g.value(c).rows(), g.value(c).cols());
    if subj_pos == obj_pos || subj_pos >= n || obj_pos >= n {
        return Err(Error::InvalidArgument(format!(
            "piecewise pooling needs two distinct positions below {n}, got {subj_pos} and {obj_pos}"
        )));
    }
    let mut parts = Vec::with_capacity(3);
    for (start, end) in segments(n, subj_pos, obj_pos) {
        if start < end {
            let seg = g.slice_rows(c, start, end)?;
            parts.push(g.max_rows(seg)?);
        } else {
            parts.push(g.constant(Tensor::zeros(&[1, t])));
        }
    }
    g.concat_cols(&parts)
}

/// Parameters of the feed-forward attention scorer. `w_we` is `[2m x
/// h_mlp]`: its top `m` rows act on the term, the bottom `m` rows on the
/// feature.
#[derive(Clone, Copy, Debug)]
pub struct ScorerVars {
    pub w_we: Var,
    pub b_we: Var,
    pub w_a: Var,
    pub b_a: Var,
}

/// Attention of every term of `x [n x m]` against the feature `f [1 x m]`.
///
/// Returns `(ŝ [1 x m], α [n x 1])` with
/// `u_i = W_a·tanh(W_we·[x_i, f] + b_we) + b_a`, `α = softmax(u)` and
/// `ŝ = Σ α_i x_i`.
pub fn feature_attention(g: &mut Graph, x: Var, f: Var, p: ScorerVars) -> Result<(Var, Var)> {
    let m = g.value(x).cols();
    let top = g.slice_rows(p.w_we, 0, m)?;
    let bottom = g.slice_rows(p.w_we, m, 2 * m)?;
    let xw = g.matmul(x, top)?;
    let fw = g.matmul(f, bottom)?;
    let pre = g.add_row(xw, fw)?;
    let pre = g.add_row(pre, p.b_we)?;
    let hidden = g.tanh(pre);
    let u = g.matmul(hidden, p.w_a)?;
    let u = g.add_row(u, p.b_a)?;
    let alpha = g.softmax(u);
    let alpha_t = g.transpose(alpha)?;
    let s = g.matmul(alpha_t, x)?;
    Ok((s, alpha))
}

/// One LSTM direction: input weights `[m x 4h]`, recurrent weights `[h x
/// 4h]` and bias `[1 x 4h]`, gate blocks ordered input, forget, output,
/// candidate.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    pub w_x: Var,
    pub w_h: Var,
    pub b: Var,
}

/// How the two directions are merged per position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    /// `h_i = [→h_i, ←h_i]`, width `2h`.
    #[default]
    Concat,
    /// `h_i = →h_i + ←h_i`, width `h`.
    Sum,
}

/// Runs one direction over `x [n x m]`; returns the hidden rows in
/// position order.
fn lstm_direction(g: &mut Graph, x: Var, p: LstmVars, reverse: bool) -> Result<Vec<Var>> {
    let n = g.value(x).rows();
    let h = g.value(p.w_h).rows();
    let xw = g.matmul(x, p.w_x)?;
    let xw = g.add_row(xw, p.b)?;
    let mut out: Vec<Option<Var>> = vec![None; n];
    let mut state: Option<(Var, Var)> = None;
    let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
    for i in order {
        let mut z = g.slice_rows(xw, i, i + 1)?;
        if let Some((h_prev, _)) = state {
            let rec = g.matmul(h_prev, p.w_h)?;
            z = g.add(z, rec)?;
        }
        let zi = g.slice_cols(z, 0, h)?;
        let zf = g.slice_cols(z, h, 2 * h)?;
        let zo = g.slice_cols(z, 2 * h, 3 * h)?;
        let zg = g.slice_cols(z, 3 * h, 4 * h)?;
        let gi = g.sigmoid(zi);
        let go = g.sigmoid(zo);
        let cand = g.tanh(zg);
        let mut cell = g.mul(gi, cand)?;
        if let Some((_, c_prev)) = state {
            let gf = g.sigmoid(zf);
            let kept = g.mul(gf, c_prev)?;
            cell = g.add(cell, kept)?;
        }
        let ct = g.tanh(cell);
        let hidden = g.mul(go, ct)?;
        out[i] = Some(hidden);
        state = Some((hidden, cell));
    }
    Ok(out.into_iter().map(|v| v.expect("every position visited")).collect())
}

/// Bidirectional LSTM over `x [n x m]`, giving `H [n x 2h]` (or `[n x h]`
/// for [`Combine::Sum`]).
pub fn bilstm(g: &mut Graph, x: Var, forward: LstmVars, backward: LstmVars, combine: Combine) -> Result<Var> {
    if g.value(x).rows() == 0 {
        return Err(Error::InvalidArgument("bilstm: empty sequence".into()));
    }
    let fw = lstm_direction(g, x, forward, false)?;
    let bw = lstm_direction(g, x, backward, true)?;
    let fw = g.concat_rows(&fw)?;
    let bw = g.concat_rows(&bw)?;
    match combine {
        Combine::Concat => g.concat_cols(&[fw, bw]),
        Combine::Sum => g.add(fw, bw),
    }
}

/// Self-attention over hidden states `H [n x k]` with target `w [k x 1]`:
/// `α = softmax(tanh(H)·w)`, `s = tanh(αᵀ H)`. Returns `(s [1 x k], α [n x 1])`.
pub fn self_attention(g: &mut Graph, hs: Var, w: Var) -> Result<(Var, Var)> {
    let mt = g.tanh(hs);
    let u = g.matmul(mt, w)?;
    let alpha = g.softmax(u);
    let alpha_t = g.transpose(alpha)?;
    let weighted = g.matmul(alpha_t, hs)?;
    Ok((g.tanh(weighted), alpha))
}

/// Classifier head `softmax(dropout(tanh(s))·W_r + b_r)`. `mask` is the
/// dropout mask for `tanh(s)`, or `None` at inference.
pub fn classify(g: &mut Graph, s: Var, w_r: Var, b_r: Var, mask: Option<Tensor>) -> Result<Var> {
    let mut act = g.tanh(s);
    if let Some(mask) = mask {
        act = g.mul_const(act, mask)?;
    }
    let r = g.matmul(act, w_r)?;
    let r = g.add_row(r, b_r)?;
    Ok(g.softmax(r))
}

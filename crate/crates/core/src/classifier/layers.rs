//! Layer primitives with hand-written backward passes.
//!
//! Activations are `[channel][time][freq]` tensors. Only valid (unpadded)
//! frames are ever materialized, which is what makes frame masking exact.

/// Dense `[c][t][f]` activation tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub c: usize,
    pub t: usize,
    pub f: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(c: usize, t: usize, f: usize) -> Self {
        Tensor3 {
            c,
            t,
            f,
            data: vec![0.0; c * t * f],
        }
    }

    pub fn from_vec(c: usize, t: usize, f: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), c * t * f, "tensor data length");
        Tensor3 { c, t, f, data }
    }

    #[inline]
    pub fn idx(&self, c: usize, t: usize, f: usize) -> usize {
        (c * self.t + t) * self.f + f
    }

    pub fn row(&self, c: usize, t: usize) -> &[f64] {
        let s = self.idx(c, t, 0);
        &self.data[s..s + self.f]
    }
}

/// 2-D convolution with zero "same" padding (odd kernels), stride 1.
/// Weights are `[out][in][kh][kw]`.
pub fn conv2d(x: &Tensor3, w: &[f64], b: &[f64], out_c: usize, kh: usize, kw: usize) -> Tensor3 {
    debug_assert_eq!(w.len(), out_c * x.c * kh * kw);
    let mut y = Tensor3::zeros(out_c, x.t, x.f);
    let (pt, pf) = ((kh / 2) as isize, (kw / 2) as isize);
    for o in 0..out_c {
        let plane = o * x.t * x.f;
        y.data[plane..plane + x.t * x.f].fill(b[o]);
        for i in 0..x.c {
            for dy in 0..kh {
                let sy = dy as isize - pt;
                for dx in 0..kw {
                    let sx = dx as isize - pf;
                    let wv = w[((o * x.c + i) * kh + dy) * kw + dx];
                    if wv == 0.0 {
                        continue;
                    }
                    let (f_lo, f_hi) = (0.max(-sx) as usize, (x.f as isize).min(x.f as isize - sx) as usize);
                    if f_lo >= f_hi {
                        continue;
                    }
                    for t in 0..x.t {
                        let ti = t as isize + sy;
                        if ti < 0 || ti >= x.t as isize {
                            continue;
                        }
                        let src = (x.idx(i, ti as usize, 0) as isize + f_lo as isize + sx) as usize;
                        let dst = plane + t * x.f;
                        let src_row = &x.data[src..src + (f_hi - f_lo)];
                        for (yv, &xv) in y.data[dst + f_lo..dst + f_hi].iter_mut().zip(src_row) {
                            *yv += wv * xv;
                        }
                    }
                }
            }
        }
    }
    y
}

/// Gradients of [`conv2d`]: `(dw, db, dx)`; `dx` only when requested.
pub fn conv2d_backward(
    x: &Tensor3,
    w: &[f64],
    dy: &Tensor3,
    kh: usize,
    kw: usize,
    need_dx: bool,
) -> (Vec<f64>, Vec<f64>, Option<Tensor3>) {
    let out_c = dy.c;
    let mut dw = vec![0.0; w.len()];
    let mut db = vec![0.0; out_c];
    let mut dx = need_dx.then(|| Tensor3::zeros(x.c, x.t, x.f));
    let (pt, pf) = ((kh / 2) as isize, (kw / 2) as isize);
    for o in 0..out_c {
        let plane = o * dy.t * dy.f;
        db[o] = dy.data[plane..plane + dy.t * dy.f].iter().sum();
        for i in 0..x.c {
            for ky in 0..kh {
                let sy = ky as isize - pt;
                for kx in 0..kw {
                    let sx = kx as isize - pf;
                    let widx = ((o * x.c + i) * kh + ky) * kw + kx;
                    let (f_lo, f_hi) = (0.max(-sx) as usize, (x.f as isize).min(x.f as isize - sx) as usize);
                    if f_lo >= f_hi {
                        continue;
                    }
                    let wv = w[widx];
                    let mut acc = 0.0;
                    for t in 0..x.t {
                        let ti = t as isize + sy;
                        if ti < 0 || ti >= x.t as isize {
                            continue;
                        }
                        let src = (x.idx(i, ti as usize, 0) as isize + f_lo as isize + sx) as usize;
                        let len = f_hi - f_lo;
                        let g = &dy.data[plane + t * dy.f + f_lo..plane + t * dy.f + f_hi];
                        let xs = &x.data[src..src + len];
                        acc += g.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(dx) = dx.as_mut() {
                            for (d, &gv) in dx.data[src..src + len].iter_mut().zip(g) {
                                *d += wv * gv;
                            }
                        }
                    }
                    dw[widx] = acc;
                }
            }
        }
    }
    (dw, db, dx)
}

pub fn relu_inplace(x: &mut Tensor3) {
    x.data.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Zero the gradient wherever the ReLU output was not positive.
pub fn relu_backward_inplace(y: &Tensor3, dy: &mut Tensor3) {
    for (d, &v) in dy.data.iter_mut().zip(&y.data) {
        if v <= 0.0 {
            *d = 0.0;
        }
    }
}

/// Max pooling, ceil mode: edge windows cover only the samples that exist.
/// Returns the pooled tensor and, per output cell, the flat input index of
/// its maximum.
pub fn max_pool(x: &Tensor3, ph: usize, pw: usize) -> (Tensor3, Vec<usize>) {
    let (ot, of) = (x.t.div_ceil(ph), x.f.div_ceil(pw));
    let mut y = Tensor3::zeros(x.c, ot, of);
    let mut arg = vec![0usize; x.c * ot * of];
    for c in 0..x.c {
        for t in 0..ot {
            for f in 0..of {
                let mut best = f64::NEG_INFINITY;
                let mut best_i = 0;
                for ti in t * ph..((t + 1) * ph).min(x.t) {
                    for fi in f * pw..((f + 1) * pw).min(x.f) {
                        let i = x.idx(c, ti, fi);
                        if x.data[i] > best {
                            best = x.data[i];
                            best_i = i;
                        }
                    }
                }
                let o = y.idx(c, t, f);
                y.data[o] = best;
                arg[o] = best_i;
            }
        }
    }
    (y, arg)
}

pub fn max_pool_backward(arg: &[usize], dy: &Tensor3, input: (usize, usize, usize)) -> Tensor3 {
    let mut dx = Tensor3::zeros(input.0, input.1, input.2);
    for (&i, &g) in arg.iter().zip(&dy.data) {
        dx.data[i] += g;
    }
    dx
}

/// Mean over time and frequency: one value per channel.
pub fn global_avg_pool(x: &Tensor3) -> Vec<f64> {
    let n = (x.t * x.f) as f64;
    (0..x.c)
        .map(|c| x.data[c * x.t * x.f..(c + 1) * x.t * x.f].iter().sum::<f64>() / n)
        .collect()
}

pub fn global_avg_pool_backward(dy: &[f64], shape: (usize, usize, usize)) -> Tensor3 {
    let (c, t, f) = shape;
    let n = (t * f) as f64;
    let mut data = Vec::with_capacity(c * t * f);
    for &g in dy.iter().take(c) {
        data.extend(std::iter::repeat_n(g / n, t * f));
    }
    Tensor3::from_vec(c, t, f, data)
}

/// Mean over time only: `[c][f]` flattened.
pub fn time_avg_pool(x: &Tensor3) -> Vec<f64> {
    let mut out = vec![0.0; x.c * x.f];
    for c in 0..x.c {
        let o = &mut out[c * x.f..(c + 1) * x.f];
        for t in 0..x.t {
            for (acc, v) in o.iter_mut().zip(x.row(c, t)) {
                *acc += v;
            }
        }
        o.iter_mut().for_each(|v| *v /= x.t as f64);
    }
    out
}

pub fn time_avg_pool_backward(dy: &[f64], shape: (usize, usize, usize)) -> Tensor3 {
    let (c, t, f) = shape;
    let mut dx = Tensor3::zeros(c, t, f);
    for ci in 0..c {
        for ti in 0..t {
            let s = dx.idx(ci, ti, 0);
            for (d, g) in dx.data[s..s + f].iter_mut().zip(&dy[ci * f..(ci + 1) * f]) {
                *d = g / t as f64;
            }
        }
    }
    dx
}

/// `y = W x + b`, `W` is `[out][in]`.
pub fn dense(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(o, &bo)| bo + w[o * x.len()..(o + 1) * x.len()].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Accumulate `dW`, `db` and return `dx`.
pub fn dense_backward(x: &[f64], w: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let n = x.len();
    let mut dx = vec![0.0; n];
    for (o, &g) in dy.iter().enumerate() {
        db[o] += g;
        if g == 0.0 {
            continue;
        }
        let row = o * n;
        for i in 0..n {
            dw[row + i] += g * x[i];
            dx[i] += g * w[row + i];
        }
    }
    dx
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Cross-entropy of one example and its gradient w.r.t. the logits.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|&z| (z - m).exp()).sum::<f64>().ln();
    let loss = lse - logits[label];
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_identity_kernel() {
        let x = Tensor3::from_vec(1, 2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        let y = conv2d(&x, &w, &[0.5], 1, 3, 3);
        assert_eq!(y.data, vec![1.5, 2.5, 3.5, 4.5, 5.5, 6.5]);
    }

    #[test]
    fn conv_shift_kernel_uses_zero_padding() {
        let x = Tensor3::from_vec(1, 1, 3, vec![1.0, 2.0, 3.0]);
        // y[f] = x[f + 1]
        let mut w = vec![0.0; 9];
        w[5] = 1.0;
        let y = conv2d(&x, &w, &[0.0], 1, 3, 3);
        assert_eq!(y.data, vec![2.0, 3.0, 0.0]);
    }

    #[test]
    fn ceil_max_pool() {
        let x = Tensor3::from_vec(1, 3, 3, vec![1.0, 5.0, 2.0, 0.0, 3.0, 9.0, 7.0, 4.0, 8.0]);
        let (y, arg) = max_pool(&x, 2, 2);
        assert_eq!((y.t, y.f), (2, 2));
        assert_eq!(y.data, vec![5.0, 9.0, 7.0, 8.0]);
        assert_eq!(arg, vec![1, 5, 6, 8]);
    }

    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant() {
        let z = [1.0, -2.0, 0.5, 3.0];
        let p = softmax(&z);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let q = softmax(&z.map(|v| v + 100.0));
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_logits_loss_is_ln_k() {
        let (loss, _) = cross_entropy(&[0.0; 23], 4);
        assert!((loss - 23f64.ln()).abs() < 1e-12);
        assert!((loss - 3.1355).abs() < 1e-4);
    }

    #[test]
    fn confident_logits_loss_vanishes() {
        let (loss, _) = cross_entropy(&[60.0, 0.0, 0.0], 0);
        assert!(loss < 1e-20);
    }
}

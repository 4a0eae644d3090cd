//! Raw convolution kernels shared by the tape ops: im2col/col2im patch
//! extraction plus matrix products. A convolution is one GEMM against the
//! unrolled patch matrix; the transposed convolution reuses the same
//! geometry with the roles of the two sides swapped, which makes the
//! adjoint identity `<conv(x), y> == <x, deconv(y)>` hold by construction.

use ndarray::{Array2, ArrayView2};

/// Spatial geometry of one convolution (valid padding).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub channels_in: usize,
    pub channels_out: usize,
    pub h_in: usize,
    pub w_in: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        (self.h_in - self.kh) / self.stride + 1
    }
    pub fn out_w(&self) -> usize {
        (self.w_in - self.kw) / self.stride + 1
    }
}

/// Spatial geometry of a transposed convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeconvGeom {
    pub channels_in: usize,
    pub channels_out: usize,
    pub h_in: usize,
    pub w_in: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
}

impl DeconvGeom {
    pub fn out_h(&self) -> usize {
        (self.h_in - 1) * self.stride + self.kh
    }
    pub fn out_w(&self) -> usize {
        (self.w_in - 1) * self.stride + self.kw
    }
}

/// C = A[m,k] * B[k,n], allocating C.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let a = ArrayView2::from_shape((m, k), a).expect("matmul lhs shape");
    let b = ArrayView2::from_shape((k, n), b).expect("matmul rhs shape");
    let c: Array2<f64> = a.dot(&b);
    c.into_raw_vec()
}

/// Extract valid `kh x kw` patches at the given stride.
///
/// Output is `[C*kh*kw, P]` row-major, where `P = out_h*out_w` and row
/// `(c, ki, kj)` holds `input[c, oi*s+ki, oj*s+kj]` over output positions.
pub fn im2col(
    input: &[f64],
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
) -> Vec<f64> {
    let oh = (h - kh) / stride + 1;
    let ow = (w - kw) / stride + 1;
    let p = oh * ow;
    let mut cols = vec![0.0; c * kh * kw * p];
    for ch in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = ((ch * kh) + ki) * kw + kj;
                let out_row = &mut cols[row * p..(row + 1) * p];
                for oi in 0..oh {
                    let src = ch * h * w + (oi * stride + ki) * w + kj;
                    for oj in 0..ow {
                        out_row[oi * ow + oj] = input[src + oj * stride];
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add patch columns back into an image.
/// `h`/`w` describe the image being accumulated into.
pub fn col2im_acc(
    cols: &[f64],
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    out: &mut [f64],
) {
    let oh = (h - kh) / stride + 1;
    let ow = (w - kw) / stride + 1;
    let p = oh * ow;
    debug_assert_eq!(cols.len(), c * kh * kw * p);
    debug_assert_eq!(out.len(), c * h * w);
    for ch in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = ((ch * kh) + ki) * kw + kj;
                let col_row = &cols[row * p..(row + 1) * p];
                for oi in 0..oh {
                    let dst = ch * h * w + (oi * stride + ki) * w + kj;
                    for oj in 0..ow {
                        out[dst + oj * stride] += col_row[oi * ow + oj];
                    }
                }
            }
        }
    }
}

pub fn transpose(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; m.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = m[r * cols + c];
        }
    }
    out
}

/// Forward cross-correlation. Kernels are `[C_out, C_in, kh, kw]`.
pub fn conv2d_forward(
    input: &[f64],
    kernels: &[f64],
    bias: Option<&[f64]>,
    g: &ConvGeom,
) -> Vec<f64> {
    let p = g.out_h() * g.out_w();
    let kdim = g.channels_in * g.kh * g.kw;
    let cols = im2col(input, g.channels_in, g.h_in, g.w_in, g.kh, g.kw, g.stride);
    let mut out = matmul(kernels, &cols, g.channels_out, kdim, p);
    if let Some(b) = bias {
        for co in 0..g.channels_out {
            for v in &mut out[co * p..(co + 1) * p] {
                *v += b[co];
            }
        }
    }
    out
}

/// Gradients of [`conv2d_forward`] given upstream `d_out`.
/// Accumulates into whichever buffers are provided.
pub fn conv2d_backward(
    input: &[f64],
    kernels: &[f64],
    d_out: &[f64],
    g: &ConvGeom,
    d_input: Option<&mut [f64]>,
    d_kernels: Option<&mut [f64]>,
    d_bias: Option<&mut [f64]>,
) {
    let p = g.out_h() * g.out_w();
    let kdim = g.channels_in * g.kh * g.kw;
    if let Some(db) = d_bias {
        for co in 0..g.channels_out {
            db[co] += d_out[co * p..(co + 1) * p].iter().sum::<f64>();
        }
    }
    if let Some(dk) = d_kernels {
        // dK = dY * Cols^T
        let cols = im2col(input, g.channels_in, g.h_in, g.w_in, g.kh, g.kw, g.stride);
        let colst = transpose(&cols, kdim, p);
        let prod = matmul(d_out, &colst, g.channels_out, p, kdim);
        for (a, b) in dk.iter_mut().zip(prod) {
            *a += b;
        }
    }
    if let Some(di) = d_input {
        // dCols = K^T * dY, then scatter back into the image.
        let kt = transpose(kernels, g.channels_out, kdim);
        let dcols = matmul(&kt, d_out, kdim, g.channels_out, p);
        col2im_acc(&dcols, g.channels_in, g.h_in, g.w_in, g.kh, g.kw, g.stride, di);
    }
}

/// Forward transposed convolution. Kernels are `[C_in, C_out, kh, kw]`;
/// output is `[C_out, (H-1)*s+kh, (W-1)*s+kw]`. With a shared kernel tensor
/// this is exactly the adjoint of [`conv2d_forward`].
pub fn deconv2d_forward(
    input: &[f64],
    kernels: &[f64],
    bias: Option<&[f64]>,
    g: &DeconvGeom,
) -> Vec<f64> {
    let p_in = g.h_in * g.w_in;
    let kdim = g.channels_out * g.kh * g.kw;
    // OutCols[(co,ki,kj), p] = sum_ci K[ci,(co,ki,kj)] * X[ci, p]
    let kt = transpose(kernels, g.channels_in, kdim);
    let out_cols = matmul(&kt, input, kdim, g.channels_in, p_in);
    let (oh, ow) = (g.out_h(), g.out_w());
    let mut out = vec![0.0; g.channels_out * oh * ow];
    col2im_acc(&out_cols, g.channels_out, oh, ow, g.kh, g.kw, g.stride, &mut out);
    if let Some(b) = bias {
        let pp = oh * ow;
        for co in 0..g.channels_out {
            for v in &mut out[co * pp..(co + 1) * pp] {
                *v += b[co];
            }
        }
    }
    out
}

/// Gradients of [`deconv2d_forward`].
pub fn deconv2d_backward(
    input: &[f64],
    kernels: &[f64],
    d_out: &[f64],
    g: &DeconvGeom,
    d_input: Option<&mut [f64]>,
    d_kernels: Option<&mut [f64]>,
    d_bias: Option<&mut [f64]>,
) {
    let p_in = g.h_in * g.w_in;
    let kdim = g.channels_out * g.kh * g.kw;
    let (oh, ow) = (g.out_h(), g.out_w());
    if let Some(db) = d_bias {
        let pp = oh * ow;
        for co in 0..g.channels_out {
            db[co] += d_out[co * pp..(co + 1) * pp].iter().sum::<f64>();
        }
    }
    if d_input.is_none() && d_kernels.is_none() {
        return;
    }
    let d_out_cols = im2col(d_out, g.channels_out, oh, ow, g.kh, g.kw, g.stride);
    if let Some(di) = d_input {
        // dX = K * dOutCols
        let prod = matmul(kernels, &d_out_cols, g.channels_in, kdim, p_in);
        for (a, b) in di.iter_mut().zip(prod) {
            *a += b;
        }
    }
    if let Some(dk) = d_kernels {
        // dK = X * dOutCols^T
        let t = transpose(&d_out_cols, kdim, p_in);
        let prod = matmul(input, &t, g.channels_in, p_in, kdim);
        for (a, b) in dk.iter_mut().zip(prod) {
            *a += b;
        }
    }
}

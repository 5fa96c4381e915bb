use crate::scalar::Element;

/// Row-major A(m,k) x B(k,n). The k-loop sits outside the n-loop so the inner
/// update is a saxpy over contiguous rows: it vectorizes without reassociating
/// the accumulation order, keeping results bit-stable across builds.
pub(crate) fn matmul_raw<T: Element>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let o_row = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in a_row.iter().enumerate() {
            let b_row = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
    out
}

pub(crate) fn transpose_raw<T: Element>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

/// Output coordinates o for which 0 <= o*stride + k_off - pad < in_len,
/// clamped to [0, out_len). Lets conv loops run branch-free inner bodies.
#[inline]
pub(crate) fn valid_out_range(
    in_len: usize,
    k_off: usize,
    pad: usize,
    stride: usize,
    out_len: usize,
) -> (usize, usize) {
    let off = k_off as isize - pad as isize;
    let lo = if off >= 0 {
        0
    } else {
        ((-off) as usize + stride - 1) / stride
    };
    let hi_num = in_len as isize - 1 - off;
    if hi_num < 0 {
        return (0, 0);
    }
    let hi = hi_num as usize / stride + 1;
    (lo.min(out_len), hi.min(out_len))
}

pub(crate) struct ConvDims {
    pub b: usize,
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub c_out: usize,
    pub kh: usize,
    pub kw: usize,
    pub oh: usize,
    pub ow: usize,
    pub stride: usize,
    pub pad: usize,
}

pub(crate) fn conv2d_raw<T: Element>(x: &[T], k: &[T], d: &ConvDims) -> Vec<T> {
    let mut out = vec![T::zero(); d.b * d.c_out * d.oh * d.ow];
    for bi in 0..d.b {
        for oi in 0..d.c_out {
            let out_base = (bi * d.c_out + oi) * d.oh * d.ow;
            for ci in 0..d.c_in {
                let x_base = (bi * d.c_in + ci) * d.h * d.w;
                for ki in 0..d.kh {
                    let (oh_lo, oh_hi) = valid_out_range(d.h, ki, d.pad, d.stride, d.oh);
                    for kj in 0..d.kw {
                        let kv = k[((oi * d.c_in + ci) * d.kh + ki) * d.kw + kj];
                        let (ow_lo, ow_hi) = valid_out_range(d.w, kj, d.pad, d.stride, d.ow);
                        for ohh in oh_lo..oh_hi {
                            let ih = ohh * d.stride + ki - d.pad;
                            let x_row = &x[x_base + ih * d.w..x_base + (ih + 1) * d.w];
                            let o_row = &mut out[out_base + ohh * d.ow..out_base + (ohh + 1) * d.ow];
                            if d.stride == 1 {
                                let shift = kj as isize - d.pad as isize;
                                for oww in ow_lo..ow_hi {
                                    o_row[oww] += kv * x_row[(oww as isize + shift) as usize];
                                }
                            } else {
                                for oww in ow_lo..ow_hi {
                                    o_row[oww] += kv * x_row[oww * d.stride + kj - d.pad];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn conv2d_dx_raw<T: Element>(g: &[T], k: &[T], d: &ConvDims) -> Vec<T> {
    let mut dx = vec![T::zero(); d.b * d.c_in * d.h * d.w];
    for bi in 0..d.b {
        for oi in 0..d.c_out {
            let g_base = (bi * d.c_out + oi) * d.oh * d.ow;
            for ci in 0..d.c_in {
                let dx_base = (bi * d.c_in + ci) * d.h * d.w;
                for ki in 0..d.kh {
                    let (oh_lo, oh_hi) = valid_out_range(d.h, ki, d.pad, d.stride, d.oh);
                    for kj in 0..d.kw {
                        let kv = k[((oi * d.c_in + ci) * d.kh + ki) * d.kw + kj];
                        let (ow_lo, ow_hi) = valid_out_range(d.w, kj, d.pad, d.stride, d.ow);
                        for ohh in oh_lo..oh_hi {
                            let ih = ohh * d.stride + ki - d.pad;
                            let g_row = &g[g_base + ohh * d.ow..g_base + (ohh + 1) * d.ow];
                            let dx_row = &mut dx[dx_base + ih * d.w..dx_base + (ih + 1) * d.w];
                            for oww in ow_lo..ow_hi {
                                dx_row[oww * d.stride + kj - d.pad] += kv * g_row[oww];
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

pub(crate) fn conv2d_dk_raw<T: Element>(g: &[T], x: &[T], d: &ConvDims) -> Vec<T> {
    let mut dk = vec![T::zero(); d.c_out * d.c_in * d.kh * d.kw];
    for bi in 0..d.b {
        for oi in 0..d.c_out {
            let g_base = (bi * d.c_out + oi) * d.oh * d.ow;
            for ci in 0..d.c_in {
                let x_base = (bi * d.c_in + ci) * d.h * d.w;
                for ki in 0..d.kh {
                    let (oh_lo, oh_hi) = valid_out_range(d.h, ki, d.pad, d.stride, d.oh);
                    for kj in 0..d.kw {
                        let (ow_lo, ow_hi) = valid_out_range(d.w, kj, d.pad, d.stride, d.ow);
                        let mut acc = T::zero();
                        for ohh in oh_lo..oh_hi {
                            let ih = ohh * d.stride + ki - d.pad;
                            let g_row = &g[g_base + ohh * d.ow..g_base + (ohh + 1) * d.ow];
                            let x_row = &x[x_base + ih * d.w..x_base + (ih + 1) * d.w];
                            for oww in ow_lo..ow_hi {
                                acc += g_row[oww] * x_row[oww * d.stride + kj - d.pad];
                            }
                        }
                        dk[((oi * d.c_in + ci) * d.kh + ki) * d.kw + kj] += acc;
                    }
                }
            }
        }
    }
    dk
}

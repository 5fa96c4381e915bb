use crate::error::{Result, TensorError};
use crate::scalar::Element;
use crate::tensor::strides_of;

/// NumPy-style shape broadcasting, aligned from the trailing axis.
pub(crate) fn broadcast_shapes(
    op: &'static str,
    a: &[usize],
    b: &[usize],
) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let da = dim_from_right(a, i);
        let db = dim_from_right(b, i);
        out[rank - 1 - i] = if da == db || db == 1 {
            da
        } else if da == 1 {
            db
        } else {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: a.to_vec(),
                rhs: b.to_vec(),
            });
        };
    }
    Ok(out)
}

fn dim_from_right(shape: &[usize], i: usize) -> usize {
    if i < shape.len() {
        shape[shape.len() - 1 - i]
    } else {
        1
    }
}

/// True when `small` tiles `big` as a contiguous repeated block, i.e. padded
/// to the big rank it is all-ones followed by an exact suffix of `big`.
fn is_suffix(big: &[usize], small: &[usize]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    small
        .iter()
        .rev()
        .zip(big.iter().rev())
        .all(|(s, b)| s == b)
}

/// Elementwise combine with broadcasting. Fast paths cover the shapes that
/// dominate training (equal shapes, scalar, trailing-axis bias).
pub(crate) fn binary_map<T: Element>(
    a_shape: &[usize],
    a: &[T],
    b_shape: &[usize],
    b: &[T],
    out_shape: &[usize],
    f: impl Fn(T, T) -> T,
) -> Vec<T> {
    let n: usize = out_shape.iter().product();
    if a_shape == b_shape {
        return a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect();
    }
    if b.len() == 1 {
        let y = b[0];
        return a.iter().map(|&x| f(x, y)).collect();
    }
    if a.len() == 1 {
        let x = a[0];
        return b.iter().map(|&y| f(x, y)).collect();
    }
    if a_shape == out_shape && is_suffix(a_shape, b_shape) {
        let mut out = Vec::with_capacity(n);
        for chunk in a.chunks_exact(b.len()) {
            out.extend(chunk.iter().zip(b).map(|(&x, &y)| f(x, y)));
        }
        return out;
    }
    if b_shape == out_shape && is_suffix(b_shape, a_shape) {
        let mut out = Vec::with_capacity(n);
        for chunk in b.chunks_exact(a.len()) {
            out.extend(a.iter().zip(chunk).map(|(&x, &y)| f(x, y)));
        }
        return out;
    }
    general_binary(a_shape, a, b_shape, b, out_shape, f)
}

fn general_binary<T: Element>(
    a_shape: &[usize],
    a: &[T],
    b_shape: &[usize],
    b: &[T],
    out_shape: &[usize],
    f: impl Fn(T, T) -> T,
) -> Vec<T> {
    let rank = out_shape.len();
    let out_strides = strides_of(out_shape);
    let a_bstrides = broadcast_strides(a_shape, rank);
    let b_bstrides = broadcast_strides(b_shape, rank);
    let n: usize = out_shape.iter().product();
    let mut out = Vec::with_capacity(n);
    for lin in 0..n {
        let mut rem = lin;
        let mut ia = 0usize;
        let mut ib = 0usize;
        for d in 0..rank {
            let idx = rem / out_strides[d];
            rem %= out_strides[d];
            ia += idx * a_bstrides[d];
            ib += idx * b_bstrides[d];
        }
        out.push(f(a[ia], b[ib]));
    }
    out
}

/// Strides of `shape` padded on the left to `rank`, with zero stride on
/// broadcast (size-1 or missing) axes.
fn broadcast_strides(shape: &[usize], rank: usize) -> Vec<usize> {
    let strides = strides_of(shape);
    let pad = rank - shape.len();
    let mut out = vec![0usize; rank];
    for d in 0..shape.len() {
        out[pad + d] = if shape[d] == 1 { 0 } else { strides[d] };
    }
    out
}

/// Adjoint of broadcasting: sums `g` (laid out as `g_shape`) down to
/// `target_shape` by reducing every axis the forward pass expanded.
pub(crate) fn reduce_to_shape<T: Element>(
    g: &[T],
    g_shape: &[usize],
    target_shape: &[usize],
) -> Vec<T> {
    if g_shape == target_shape {
        return g.to_vec();
    }
    let t_numel: usize = target_shape.iter().product();
    if t_numel == 1 {
        let mut acc = T::zero();
        for &x in g {
            acc += x;
        }
        return vec![acc];
    }
    if is_suffix(g_shape, target_shape) {
        let mut out = vec![T::zero(); t_numel];
        for chunk in g.chunks_exact(t_numel) {
            for (o, &x) in out.iter_mut().zip(chunk) {
                *o += x;
            }
        }
        return out;
    }
    let rank = g_shape.len();
    let g_strides = strides_of(g_shape);
    let t_bstrides = broadcast_strides(target_shape, rank);
    let mut out = vec![T::zero(); t_numel];
    for (lin, &x) in g.iter().enumerate() {
        let mut rem = lin;
        let mut it = 0usize;
        for d in 0..rank {
            let idx = rem / g_strides[d];
            rem %= g_strides[d];
            it += idx * t_bstrides[d];
        }
        out[it] += x;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_align_right() {
        assert_eq!(
            broadcast_shapes("t", &[4, 1, 3], &[2, 3]).unwrap(),
            vec![4, 2, 3]
        );
        assert_eq!(broadcast_shapes("t", &[5], &[]).unwrap(), vec![5]);
        assert!(broadcast_shapes("t", &[3, 2], &[4, 2]).is_err());
    }

    #[test]
    fn suffix_bias_add() {
        let a = [1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [10.0f64, 20.0, 30.0];
        let out = binary_map(&[2, 3], &a, &[3], &b, &[2, 3], |x, y| x + y);
        assert_eq!(out, vec![11.0, 22.0, 33.0, 14.0, 25.0, 36.0]);
    }

    #[test]
    fn general_column_broadcast() {
        let a = [1.0f64, 2.0, 3.0, 4.0];
        let b = [10.0f64, 100.0];
        let out = binary_map(&[2, 2], &a, &[2, 1], &b, &[2, 2], |x, y| x * y);
        assert_eq!(out, vec![10.0, 20.0, 300.0, 400.0]);
    }

    #[test]
    fn reduce_inverts_broadcast() {
        let g = [1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(reduce_to_shape(&g, &[2, 3], &[3]), vec![5.0, 7.0, 9.0]);
        assert_eq!(reduce_to_shape(&g, &[2, 3], &[2, 1]), vec![6.0, 15.0]);
        assert_eq!(reduce_to_shape(&g, &[2, 3], &[1]), vec![21.0]);
        assert_eq!(reduce_to_shape(&g, &[2, 3], &[2, 3]), g.to_vec());
    }
}

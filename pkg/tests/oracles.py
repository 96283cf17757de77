"""Independent naive oracles used by tests.

These deliberately stay scalar/nested-loop implementations so they cannot
share bugs with the vectorized kernels they check. Accumulation happens in
float32 in the same fixed (kh, kw, channel / feature-index) order the kernels
document, so comparisons can be exact.
"""

import numpy as np

f32 = np.float32


def conv2d_naive(x, w, b, stride=1):
    """x: (H,W,C) f32, w: (kh,kw,C,OC), b: (OC,) -> (OH,OW,OC)."""
    h, wd, c = x.shape
    kh, kw, _, oc = w.shape
    oh = (h - kh) // stride + 1
    ow = (wd - kw) // stride + 1
    out = np.zeros((oh, ow, oc), f32)
    for r in range(oh):
        for q in range(ow):
            for o in range(oc):
                acc = f32(0.0)
                for i in range(kh):
                    for j in range(kw):
                        for ci in range(c):
                            acc = f32(acc + f32(x[r * stride + i, q * stride + j, ci] * w[i, j, ci, o]))
                out[r, q, o] = f32(acc + b[o])
    return out


def dense_naive(x, w, b):
    """x: (K,) f32, w: (K,U), b: (U,) -> (U,)."""
    k, u = w.shape
    out = np.zeros(u, f32)
    for j in range(u):
        acc = f32(0.0)
        for i in range(k):
            acc = f32(acc + f32(x[i] * w[i, j]))
        out[j] = f32(acc + b[j])
    return out


def maxpool2d_naive(x, ph, pw, stride):
    h, w, c = x.shape
    oh = (h - ph) // stride + 1
    ow = (w - pw) // stride + 1
    out = np.zeros((oh, ow, c), f32)
    for r in range(oh):
        for q in range(ow):
            for ci in range(c):
                out[r, q, ci] = x[r * stride:r * stride + ph,
                                  q * stride:q * stride + pw, ci].max()
    return out


def nearest_resize_naive(arr, out_w, out_h):
    """Index rule: src = floor((dst + 0.5) * src_size / dst_size), clamped."""
    h, w = arr.shape[:2]
    rows = [min(int((r + 0.5) * h / out_h), h - 1) for r in range(out_h)]
    cols = [min(int((q + 0.5) * w / out_w), w - 1) for q in range(out_w)]
    return arr[np.ix_(rows, cols)]

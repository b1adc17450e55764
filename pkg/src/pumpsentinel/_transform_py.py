"""Pure numpy kernel-transform core: dilated convolution with PPV/max pooling.

Fallback lane used when the compiled extension is unavailable. Accumulation
order matches the Cython core term for term, so both lanes produce identical
floating-point results.
"""

from __future__ import annotations

import numpy as np


def apply_kernels(x, weights, lengths, biases, dilations, paddings):
    """Pooled features for every (series, kernel) pair.

    Args:
        x: (n_series, series_len) float64 array.
        weights: flat float64 array, kernel weights concatenated.
        lengths, dilations, paddings: int64 arrays, one entry per kernel.
        biases: float64 array, one entry per kernel.

    Returns:
        (n_series, 2 * n_kernels) array, per kernel [ppv, max] in order.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n, series_len = x.shape
    n_kernels = len(lengths)
    out = np.empty((n, 2 * n_kernels))

    max_pad = int(paddings.max()) if n_kernels else 0
    padded = np.zeros((n, series_len + 2 * max_pad))
    padded[:, max_pad : max_pad + series_len] = x

    w_start = 0
    for k in range(n_kernels):
        length = int(lengths[k])
        dilation = int(dilations[k])
        pad = int(paddings[k])
        out_len = series_len + 2 * pad - (length - 1) * dilation
        if out_len < 1:
            raise ValueError(
                f"kernel {k}: receptive field {(length - 1) * dilation + 1} "
                f"exceeds padded length {series_len + 2 * pad}"
            )
        conv = np.full((n, out_len), biases[k])
        base = max_pad - pad
        for j in range(length):
            start = base + j * dilation
            conv += weights[w_start + j] * padded[:, start : start + out_len]
        out[:, 2 * k] = (conv > 0.0).sum(axis=1) / out_len
        out[:, 2 * k + 1] = conv.max(axis=1)
        w_start += length
    return out

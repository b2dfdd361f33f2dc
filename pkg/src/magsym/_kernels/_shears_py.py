"""Pure numpy implementation of the shear-sequence kernel."""

import numpy as np

from .ops import DRIFT, FULL, LOWER, UPPER


def apply_ops(Y, kinds, scalars, index, payloads):
    r = Y.shape[0] // 2
    q, p = Y[:r], Y[r:]
    for kind, s, ix in zip(kinds.tolist(), scalars.tolist(), index.tolist()):
        if kind == LOWER:
            p += payloads[ix] @ q
        elif kind == UPPER:
            q += payloads[ix] @ p
        elif kind == DRIFT:
            q += s * p
        elif kind == FULL:
            new_q = payloads[ix] @ q + payloads[ix + 1] @ p
            new_p = payloads[ix + 2] @ q + payloads[ix + 3] @ p
            q[...] = new_q
            p[...] = new_p
        else:
            raise ValueError(f"unknown op code {kind}")
    return Y

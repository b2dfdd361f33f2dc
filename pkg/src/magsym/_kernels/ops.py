"""Op codes shared by both kernel backends.

``LOWER``  p += P q      (kick, payload P)
``UPPER``  q += P p      (drift with matrix payload)
``DRIFT``  q += s p      (drift with scalar multiple of the identity)
``FULL``   [q; p] <- [[P0, P1], [P2, P3]] [q; p]   (four consecutive payloads)
"""

LOWER = 0
UPPER = 1
DRIFT = 2
FULL = 3

#: r x r products each op costs per block column of the state
MATRIX_OPS_COST = {LOWER: 1, UPPER: 1, DRIFT: 0, FULL: 4}

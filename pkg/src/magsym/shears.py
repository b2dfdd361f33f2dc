"""Assemble per-step shear sequences into flat op programs and run them.

A step builder returns, for a batch of ``n`` consecutive steps, a list of
:class:`OpSpec` (one per factor, rightmost factor first). :func:`run_steps`
flattens them, optionally fusing the last factor of each step with the first
factor of the next when both are of the same shear type, charges the cost
ledger and hands the program to the kernel.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from ._kernels import DRIFT, FULL, LOWER, MATRIX_OPS_COST, UPPER, apply_ops
from .linalg import CostLedger

__all__ = ["OpSpec", "Program", "assemble", "charge_ops", "run_program", "run_steps"]

_FUSABLE = (LOWER, UPPER, DRIFT)

# bytes of payload assembled per chunk
CHUNK_BYTES = 32 * 2**20


class OpSpec(NamedTuple):
    """One factor for ``n`` steps.

    ``payload`` is ``(n, nblk, r, r)`` (``nblk`` = 4 for ``FULL``, else 1) and
    ``scalar`` is ``(n,)``; whichever the kind does not use is ``None``.
    """

    kind: int
    payload: np.ndarray | None = None
    scalar: np.ndarray | None = None


class Program(NamedTuple):
    kinds: np.ndarray
    scalars: np.ndarray
    index: np.ndarray
    payloads: np.ndarray


class _Pending(NamedTuple):
    kind: int
    payload: np.ndarray | None  # (nblk, r, r)
    scalar: float


def _nblk(spec: OpSpec) -> int:
    return 0 if spec.kind == DRIFT else spec.payload.shape[1]


def assemble(specs: list[OpSpec], r: int, fuse: bool, pending: _Pending | None = None):
    """Flatten ``specs`` into a :class:`Program`.

    Returns ``(program, tail)``: with fusion the final factor is held back
    as ``tail`` so the next batch can absorb it; apply it with
    :func:`pending_program` once no more steps follow.
    """
    kinds_t = [s.kind for s in specs]
    m = len(specs)
    n = next(len(s.payload) if s.payload is not None else len(s.scalar) for s in specs)
    fuse = fuse and m > 1 and kinds_t[0] == kinds_t[-1] and kinds_t[0] in _FUSABLE
    if not fuse and pending is not None:
        raise ValueError("pending factor without fusion")

    specs = list(specs)
    tail = None
    if fuse:
        first, last = specs[0], specs[-1]
        if first.kind == DRIFT:
            s_last = last.scalar.astype(float).copy()
            s_last[:-1] += first.scalar[1:]
            s_first0 = float(first.scalar[0]) + (pending.scalar if pending is not None else 0.0)
            tail = _Pending(DRIFT, None, float(s_last[-1]))
            specs[-1] = OpSpec(DRIFT, None, s_last)
            head = OpSpec(DRIFT, None, np.array([s_first0]))
        else:
            p_last = last.payload.copy()
            p_last[:-1] += first.payload[1:]
            p_first0 = first.payload[:1].copy()
            if pending is not None:
                p_first0[0] += pending.payload
            tail = _Pending(last.kind, p_last[-1].copy(), 0.0)
            specs[-1] = OpSpec(last.kind, p_last, None)
            head = OpSpec(first.kind, p_first0, None)
        body = specs[1:]
    else:
        head = None
        body = specs

    # per-step layout of the body
    kinds_step = np.array([s.kind for s in body], dtype=np.int8)
    nblk = np.array([_nblk(s) for s in body], dtype=np.intp)
    per_step_pay = int(nblk.sum())
    offsets = np.concatenate([[0], np.cumsum(nblk)[:-1]])
    mats = [s.payload for s in body if s.kind != DRIFT]
    if mats:
        body_pay = np.concatenate(mats, axis=1).reshape(n * per_step_pay, r, r)
    else:
        body_pay = np.zeros((0, r, r))
    scal_step = np.zeros((n, len(body)))
    for j, s in enumerate(body):
        if s.kind == DRIFT:
            scal_step[:, j] = s.scalar
    kinds = np.tile(kinds_step, n)
    scalars = scal_step.reshape(-1)
    index = (np.arange(n)[:, None] * per_step_pay + offsets[None, :]).reshape(-1)
    index[np.tile(kinds_step == DRIFT, n)] = -1
    if fuse:
        # the held-back factor of the last step leaves an unreferenced payload
        kinds, scalars, index = kinds[:-1], scalars[:-1], index[:-1]
    if head is not None:
        hb = _nblk(head)
        kinds = np.concatenate([[head.kind], kinds]).astype(np.int8)
        scalars = np.concatenate([[head.scalar[0] if head.kind == DRIFT else 0.0], scalars])
        index = np.where(index >= 0, index + hb, index)
        index = np.concatenate([[0 if hb else -1], index])
        if hb:
            body_pay = np.concatenate([head.payload[0], body_pay], axis=0)
    return Program(kinds, scalars, index, body_pay), tail


def pending_program(tail: _Pending, r: int) -> Program:
    if tail.kind == DRIFT:
        return Program(np.array([DRIFT], np.int8), np.array([tail.scalar]), np.array([-1]), np.zeros((0, r, r)))
    return Program(np.array([tail.kind], np.int8), np.zeros(1), np.array([0]), tail.payload)


def charge_ops(kinds: np.ndarray, cols: int, r: int, ledger: CostLedger | None) -> None:
    """Charge a program's products: each payload application costs one product per block column."""
    if ledger is None or len(kinds) == 0:
        return
    units = sum(MATRIX_OPS_COST[int(k)] * c for k, c in zip(*np.unique(kinds, return_counts=True)))
    if cols == 2 * r:
        ledger.charge_mm(2 * units)
    else:
        ledger.charge_mv(cols * units)


def run_program(Y: np.ndarray, prog: Program, ledger: CostLedger | None = None, backend=None) -> np.ndarray:
    r = Y.shape[0] // 2
    charge_ops(prog.kinds, Y.shape[1], r, ledger)
    return apply_ops(Y, prog.kinds, prog.scalars, prog.index, prog.payloads, backend=backend)


StepBuilder = Callable[[float, float, int], list]


def run_steps(Y: np.ndarray, builder: StepBuilder, t0: float, h: float, steps: int, *,
              fuse: bool = True, ledger: CostLedger | None = None, backend=None,
              payloads_per_step: int = 8) -> np.ndarray:
    """Propagate ``Y`` (``(2r, k)``, modified in place) through ``steps`` steps.

    ``builder(t_start, h, n)`` returns the :class:`OpSpec` list for ``n``
    steps starting at ``t_start``. Work is chunked so that payload memory
    stays bounded.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    Y = np.ascontiguousarray(Y, dtype=float)
    r = Y.shape[0] // 2
    chunk = max(1, CHUNK_BYTES // (8 * r * r * max(payloads_per_step, 1)))
    done = 0
    tail = None
    while done < steps:
        n = min(chunk, steps - done)
        specs = builder(t0 + done * h, h, n)
        prog, tail = assemble(specs, r, fuse, tail)
        run_program(Y, prog, ledger, backend)
        done += n
    if tail is not None:
        run_program(Y, pending_program(tail, r), ledger, backend)
    return Y

"""Probability-domain belief propagation over GF(2^m).

Messages are length-2^m probability vectors exchanged on the Tanner graph
under a flooding schedule.  Check-node updates run in the transform domain:
after rotating each incoming message by its edge coefficient, the check
constraint is a convolution over the additive group of GF(2^m), which the
Walsh-Hadamard transform diagonalizes.  That turns the per-edge update from
O(2^{2m}) into O(m 2^m).

Every message is floored at MSG_FLOOR and renormalized after each node
update, which keeps the iteration free of underflow absorbing states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nbmimo.code import SparseParityMatrix, syndrome
from nbmimo.galois import FieldTable

MSG_FLOOR = 1e-30


class DecoderError(RuntimeError):
    """Raised when messages degenerate (NaN or zero-sum) during decoding."""


def fwht(a: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis (unnormalized).

    Self-inverse up to a factor of 2^m: fwht(fwht(x)) == len * x.
    """
    out = np.array(a, dtype=np.float64, copy=True)
    n = out.shape[-1]
    lead = out.shape[:-1]
    h = 1
    while h < n:
        out = out.reshape(lead + (n // (2 * h), 2, h))
        x = out[..., 0, :].copy()
        y = out[..., 1, :]
        out[..., 0, :] = x + y
        out[..., 1, :] = x - y
        out = out.reshape(lead + (n,))
        h *= 2
    return out


def _leave_one_out_product(values: np.ndarray) -> np.ndarray:
    """Per-slot product over axis -2 excluding the slot itself.

    For a single slot the empty product is all-ones, which in the transform
    domain is exactly the delta-at-zero convolution identity.
    """
    d = values.shape[-2]
    if d == 1:
        return np.ones_like(values)
    prefix = np.ones_like(values)
    suffix = np.ones_like(values)
    np.cumprod(values[..., :-1, :], axis=-2, out=prefix[..., 1:, :])
    np.cumprod(values[..., ::-1, :][..., :-1, :], axis=-2, out=suffix[..., 1:, :])
    suffix = suffix[..., ::-1, :]
    return prefix * suffix


def _normalize(msgs: np.ndarray) -> np.ndarray:
    msgs = np.maximum(msgs, MSG_FLOOR)
    msgs /= msgs.sum(axis=-1, keepdims=True)
    return msgs


class _BpGraph:
    """Edge bookkeeping for one parity-check matrix, built once and cached.

    Edges live in check-major order.  Node updates gather edges into
    (n_nodes, degree, q) blocks, one block per distinct degree, so the
    leave-one-out products vectorize for regular and irregular graphs alike.
    """

    def __init__(self, matrix: SparseParityMatrix, field: FieldTable):
        if matrix.m != field.m:
            raise ValueError("matrix and field disagree on m")
        self.matrix = matrix
        self.field = field
        q = field.size
        coefs = matrix.edge_coef
        # Index arrays implementing x -> h*x and x -> h^{-1}*x per edge.
        self.rot_fwd = field.mul_table[coefs]
        self.rot_inv = field.mul_table[field.inv_table[coefs]]
        self.edge_var = matrix.edge_col

        self.check_groups = self._degree_groups(matrix.edge_row, matrix.n_checks)
        self.var_groups = self._degree_groups(matrix.edge_col, matrix.n_symbols)
        self.q = q

    @staticmethod
    def _degree_groups(owner: np.ndarray, n_nodes: int):
        """[(node_ids, edge_index_matrix)] per distinct node degree."""
        order = np.argsort(owner, kind="stable")
        degrees = np.bincount(owner, minlength=n_nodes)
        starts = np.concatenate(([0], np.cumsum(degrees)))
        groups = []
        for d in np.unique(degrees):
            if d == 0:
                continue
            nodes = np.flatnonzero(degrees == d)
            idx = starts[nodes][:, None] + np.arange(d)[None, :]
            groups.append((nodes, order[idx]))
        return groups

    def check_update(self, v2c: np.ndarray) -> np.ndarray:
        """All check-to-variable messages from all variable-to-check messages."""
        rotated = np.take_along_axis(v2c, self.rot_inv, axis=1)
        f = fwht(rotated)
        g = np.empty_like(f)
        for _, idx in self.check_groups:
            g[idx.ravel()] = _leave_one_out_product(f[idx]).reshape(-1, self.q)
        conv = fwht(g) / self.q
        return np.take_along_axis(conv, self.rot_fwd, axis=1)

    def var_update(self, c2v: np.ndarray, priors: np.ndarray):
        """Returns (new v2c messages, posteriors), both normalized.

        Unchecked variables (degree 0, possible in hand-built matrices)
        keep their prior as posterior.
        """
        v2c = np.empty_like(c2v)
        post = priors.copy()
        for nodes, idx in self.var_groups:
            p = priors[nodes][:, None, :]
            incoming = c2v[idx]
            v2c[idx.ravel()] = _normalize(
                (p * _leave_one_out_product(incoming)).reshape(-1, self.q)
            )
            post[nodes] = _normalize(p[:, 0, :] * incoming.prod(axis=1))
        return v2c, post


def _graph_for(matrix: SparseParityMatrix, field: FieldTable) -> _BpGraph:
    cached = matrix._bp_graph
    if cached is None or cached.field is not field:
        cached = _BpGraph(matrix, field)
        matrix._bp_graph = cached
    return cached


@dataclass
class DecodeResult:
    hard: np.ndarray
    iterations_used: int
    converged: bool
    posteriors: np.ndarray | None = None


def decode(
    priors: np.ndarray,
    matrix: SparseParityMatrix,
    field: FieldTable,
    max_iterations: int,
    early_stop: bool = True,
    keep_posteriors: bool = False,
) -> DecodeResult:
    """Flooding BP; stops on a zero syndrome unless early_stop is disabled.

    The hard decision is the per-symbol posterior argmax with ties broken
    toward the lowest symbol value, so decoding is fully deterministic.
    `early_stop=False` runs out the full iteration budget, which tests use
    when comparing posteriors against exhaustive marginals.
    """
    priors = np.asarray(priors, dtype=np.float64)
    if priors.shape != (matrix.n_symbols, field.size):
        raise ValueError(
            f"priors must be ({matrix.n_symbols}, {field.size}), got {priors.shape}"
        )
    graph = _graph_for(matrix, field)
    priors = _normalize(priors.copy())

    hard = priors.argmax(axis=1)
    if early_stop and not syndrome(hard, matrix, field).any():
        return DecodeResult(
            hard, 0, True, priors if keep_posteriors else None
        )

    v2c = priors[graph.edge_var].copy()
    post = priors
    converged = False
    iterations = max_iterations
    for it in range(1, max_iterations + 1):
        c2v = _normalize(graph.check_update(v2c))
        v2c, post = graph.var_update(c2v, priors)
        if not np.all(np.isfinite(post)):
            raise DecoderError(f"non-finite posterior at iteration {it}")
        hard = post.argmax(axis=1)
        if early_stop and not syndrome(hard, matrix, field).any():
            converged = True
            iterations = it
            break
    else:
        converged = not syndrome(hard, matrix, field).any()

    return DecodeResult(
        hard, iterations, converged, post if keep_posteriors else None
    )

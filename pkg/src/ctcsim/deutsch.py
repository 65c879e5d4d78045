"""Deutsch self-consistency for a single CTC interaction.

The chronology-respecting input enters the upper wire and the CTC qubit the
lower wire, as in :mod:`ctcsim.chain`.  The upper output is identified with
the CTC input, so a consistent CTC state is a fixed point of
``rho -> Tr_lower[U (rho_in (x) rho) U^dagger]``.  The lower output is the
open line seen by the outside world.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ctcsim.chain import TwoWireUnitary
from ctcsim.metrics import trace_distance
from ctcsim.qmath import DensityMatrix, QMathError, apply_two_wire, kron, ptrace

DEGENERACY_ATOL = 1e-8


def _mat(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    return np.asarray(x, dtype=np.complex128)


def _joint(u: TwoWireUnitary, rho_in, rho_ctc) -> np.ndarray:
    a, b = _mat(rho_in), _mat(rho_ctc)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise QMathError("Deutsch oracle works on single qubits")
    return apply_two_wire(kron(a, b), u.matrix, 0, 1)


def consistency_map(u: TwoWireUnitary, rho_in, rho_ctc) -> DensityMatrix:
    """Upper-output marginal of ``u`` applied to ``rho_in (x) rho_ctc``."""
    return DensityMatrix(ptrace(_joint(u, rho_in, rho_ctc), [0]))


def deutsch_channel_output(u: TwoWireUnitary, rho_in, rho_ctc_star) -> DensityMatrix:
    """Lower-output (open line) marginal given a consistent CTC state."""
    return DensityMatrix(ptrace(_joint(u, rho_in, rho_ctc_star), [1]))


@dataclass(frozen=True)
class FixedPointReport:
    ctc_state: DensityMatrix
    output_state: DensityMatrix
    iterations: int
    residual: float
    converged: bool
    degenerate: bool = False


def _iterate(u, rho_in, seed, tol, max_iter):
    rho = _mat(seed)
    residual = float("inf")
    it = 0
    while it < max_iter:
        nxt = ptrace(_joint(u, rho_in, rho), [0])
        residual = trace_distance(nxt, rho)
        rho = nxt
        it += 1
        if residual <= tol:
            break
    return rho, it, residual


def fixed_point(
    u: TwoWireUnitary,
    rho_in,
    seed=None,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    check_degenerate: bool = True,
) -> FixedPointReport:
    """Plain iteration of the consistency map from ``seed``.

    Non-convergence is reported through ``converged=False`` rather than an
    exception.  With ``check_degenerate`` the iteration is repeated from the
    two canonical seeds ``I/2`` and ``|0><0|``; if their fixed points differ
    by more than 1e-8 in trace distance the report is flagged ``degenerate``
    (the result is then seed dependent).
    """
    if tol <= 0:
        raise QMathError("tol must be positive")
    if max_iter < 1:
        raise QMathError("max_iter must be >= 1")
    if seed is None:
        seed = DensityMatrix.maximally_mixed(1)
    rho, it, residual = _iterate(u, rho_in, seed, tol, max_iter)
    converged = residual <= tol

    degenerate = False
    if check_degenerate:
        mixed, _, _ = _iterate(u, rho_in, np.eye(2) / 2, tol, max_iter)
        zero, _, _ = _iterate(u, rho_in, np.diag([1.0, 0.0]), tol, max_iter)
        degenerate = trace_distance(mixed, zero) > DEGENERACY_ATOL

    ctc = DensityMatrix(rho)
    return FixedPointReport(
        ctc_state=ctc,
        output_state=deutsch_channel_output(u, rho_in, ctc),
        iterations=it,
        residual=residual,
        converged=converged,
        degenerate=degenerate,
    )

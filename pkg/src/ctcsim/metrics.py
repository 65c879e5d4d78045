"""Entropies, correlations and discrimination measures (all logarithms base 2)."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ctcsim.qmath import DensityMatrix, QMathError, hermitian_eigen, ptrace

ENTROPY_CLAMP = 1e-10
DEGENERATE_RECORD = 1e-12


def _mat(x) -> np.ndarray:
    if hasattr(x, "state"):
        x = x.state
    if isinstance(x, DensityMatrix):
        return x.matrix
    return np.asarray(x, dtype=np.complex128)


def _two_wire(x) -> np.ndarray:
    m = _mat(x)
    if m.shape != (4, 4):
        raise QMathError(f"expected a two-qubit state, got shape {m.shape}")
    return m


def _shannon(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho) -> float:
    """``-sum(l * log2(l))`` over the eigenvalues of ``rho``.

    Eigenvalues in ``[-1e-10, 0]`` are treated as zero; anything more negative
    is rejected as an invalid state.
    """
    w, _ = hermitian_eigen(_mat(rho))
    if w.size and w[0] < -ENTROPY_CLAMP:
        raise QMathError(f"invalid state: eigenvalue {w[0]:.3e} below zero")
    return max(_shannon(np.clip(w, 0.0, None)), 0.0)


def mutual_information(rho_ab) -> float:
    """``S(A) + S(B) - S(AB)`` for a two-qubit state."""
    m = _two_wire(rho_ab)
    return (
        von_neumann_entropy(ptrace(m, [0]))
        + von_neumann_entropy(ptrace(m, [1]))
        - von_neumann_entropy(m)
    )


def trace_norm(h) -> float:
    w, _ = hermitian_eigen(_mat(h))
    return float(np.sum(np.abs(w)))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    a, b = _mat(rho), _mat(sigma)
    if a.shape != b.shape:
        raise QMathError(f"dimension mismatch {a.shape} vs {b.shape}")
    return 0.5 * trace_norm(a - b)


def helstrom_success(rho0, rho1, p0: float = 0.5) -> float:
    """Optimal probability of telling ``rho0`` (prior ``p0``) from ``rho1``."""
    if not 0.0 <= p0 <= 1.0:
        raise QMathError(f"prior {p0} outside [0, 1]")
    return 0.5 * (1.0 + trace_norm(p0 * _mat(rho0) - (1.0 - p0) * _mat(rho1)))


def conditionals(retained):
    """Split a retained pair on the computational-basis value of wire A.

    Returns ``((p0, rho_out_given_0), (p1, rho_out_given_1))``.
    """
    m = _two_wire(retained)
    out = []
    for a in (0, 1):
        block = m[2 * a:2 * a + 2, 2 * a:2 * a + 2]
        p = float(np.trace(block).real)
        if p < DEGENERATE_RECORD:
            raise QMathError(f"degenerate record: P(A={a}) = {p:.3e}")
        out.append((p, block / p))
    return tuple(out)


def conditional_discrimination(retained) -> tuple[float, float]:
    """Helstrom success and trace distance of the open output given A's record."""
    (p0, r0), (_, r1) = conditionals(retained)
    return helstrom_success(r0, r1, p0), trace_distance(r0, r1)


def classical_mutual_information_zz(rho_ab) -> float:
    """Shannon mutual information of computational-basis outcomes on both wires."""
    m = _two_wire(rho_ab)
    joint = np.clip(np.diag(m).real, 0.0, None).reshape(2, 2)
    joint = joint / joint.sum()
    return max(
        _shannon(joint.sum(axis=1)) + _shannon(joint.sum(axis=0)) - _shannon(joint.ravel()),
        0.0,
    )


@dataclass(frozen=True)
class MetricsRecord:
    quantum_mutual_information: float
    classical_mutual_information_zz: float
    entropy_a: float
    entropy_b: float
    entropy_ab: float
    helstrom_success: Optional[float] = None
    trace_distance_conditionals: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def compute_metrics(retained) -> MetricsRecord:
    """Every metric of a retained pair; discrimination fields are ``None``
    when one value of the A record has vanishing probability."""
    m = _two_wire(retained)
    s_a = von_neumann_entropy(ptrace(m, [0]))
    s_b = von_neumann_entropy(ptrace(m, [1]))
    s_ab = von_neumann_entropy(m)
    try:
        helstrom, dist = conditional_discrimination(m)
    except QMathError:
        helstrom = dist = None
    return MetricsRecord(
        quantum_mutual_information=s_a + s_b - s_ab,
        classical_mutual_information_zz=classical_mutual_information_zz(m),
        entropy_a=s_a,
        entropy_b=s_b,
        entropy_ab=s_ab,
        helstrom_success=helstrom,
        trace_distance_conditionals=dist,
    )

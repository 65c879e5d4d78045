"""Dense linear algebra on small qubit registers.

Wire 0 is the most significant bit of a basis index: on a register of
``m`` wires the basis state ``|b_0 b_1 ... b_{m-1}>`` sits at index
``sum(b_k << (m - 1 - k))``.  Every module in the package uses this order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

MAX_WIRES = 26
HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10
UNITARY_ATOL = 1e-10
# Jacobi is used up to this dimension (5 wires); larger registers are only
# ever checked by the dense oracle's final reduced state.
JACOBI_MAX_DIM = 32


class QMathError(ValueError):
    """Raised for invalid operators, states or register layouts."""


class EigensolverError(QMathError):
    pass


def _array(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.matrix
    return np.asarray(x, dtype=np.complex128)


def num_wires(dim: int) -> int:
    m = int(dim).bit_length() - 1
    if dim < 1 or (1 << m) != dim:
        raise QMathError(f"dimension {dim} is not a power of two")
    return m


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator on qubit wires.

    Construction validates the invariants unless ``check=False`` is passed;
    the stored array is a read-only copy.
    """

    matrix: np.ndarray
    check: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise QMathError(f"density matrix must be square, got shape {m.shape}")
        num_wires(m.shape[0])
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.check:
            validate_density(m)

    @property
    def wires(self) -> int:
        return num_wires(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-12:
            raise QMathError(f"state vector not normalized (norm {norm:.3e})")
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, wires: int = 1) -> "DensityMatrix":
        d = 1 << wires
        return cls(np.eye(d) / d)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def allclose(self, other, atol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.matrix - _array(other))) <= atol)

    def __repr__(self):
        return f"DensityMatrix(wires={self.wires})"


def validate_density(rho) -> None:
    """Raise :class:`QMathError` unless ``rho`` is a valid density matrix."""
    a = _array(rho)
    herm = np.max(np.abs(a - a.conj().T))
    if herm > HERMITIAN_ATOL:
        raise QMathError(f"not Hermitian (max deviation {herm:.3e})")
    tr = np.trace(a)
    if abs(tr - 1.0) > TRACE_ATOL:
        raise QMathError(f"trace {tr.real:.12g} differs from 1")
    if a.shape[0] <= JACOBI_MAX_DIM:
        lo = hermitian_eigen(a)[0][0]
    else:
        lo = np.linalg.eigvalsh(hermitize(a))[0]
    if lo < -PSD_ATOL:
        raise QMathError(f"not positive semidefinite (min eigenvalue {lo:.3e})")


def kron(a, b) -> np.ndarray:
    """Kronecker product, refusing results wider than the register cap."""
    a, b = _array(a), _array(b)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > (1 << MAX_WIRES):
        raise QMathError(f"register too large (more than {MAX_WIRES} wires)")
    return np.kron(a, b)


def kron_all(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        out = kron(out, op)
    return out


def _letters(count: int) -> str:
    alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if count > len(alphabet):
        raise QMathError("register too large for index contraction")
    return alphabet[:count]


def ptrace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced density array on ``keep`` (in the listed order)."""
    rho = np.asarray(rho)
    m = num_wires(rho.shape[0])
    keep = [int(k) for k in keep]
    if not keep:
        raise QMathError("must keep >= 1 wire")
    if len(set(keep)) != len(keep):
        raise QMathError(f"duplicate wires in keep list {keep}")
    if any(k < 0 or k >= m for k in keep):
        raise QMathError(f"keep list {keep} out of range for {m} wires")
    letters = _letters(2 * m)
    rows = list(letters[:m])
    cols = list(letters[m:])
    for w in range(m):
        if w not in keep:
            cols[w] = rows[w]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    t = rho.reshape((2,) * (2 * m))
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = 1 << len(keep)
    return hermitize(red.reshape(d, d))


def partial_trace(rho: Union[DensityMatrix, np.ndarray], keep: Sequence[int]):
    """Trace out every wire not in ``keep``.

    Returns a :class:`DensityMatrix` when given one, otherwise an array.
    """
    red = ptrace(_array(rho), keep)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(red)
    return red


def check_unitary(u, atol: float = UNITARY_ATOL) -> np.ndarray:
    u = _array(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise QMathError(f"unitary must be square, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > atol:
        raise QMathError(f"not unitary (max deviation {dev:.3e})")
    return u


def apply_two_wire(
    rho: np.ndarray, u: np.ndarray, wire_a: int, wire_b: int, resymmetrize: bool = True
) -> np.ndarray:
    """``U rho U^dagger`` with ``u`` acting on (wire_a = upper, wire_b = lower)."""
    m = num_wires(rho.shape[0])
    if wire_a == wire_b:
        raise QMathError("unitary wires must differ")
    if not (0 <= wire_a < m and 0 <= wire_b < m):
        raise QMathError(f"wires ({wire_a}, {wire_b}) out of range for {m} wires")
    u4 = np.asarray(u).reshape(2, 2, 2, 2)
    t = np.asarray(rho).reshape((2,) * (2 * m))
    t = np.tensordot(u4, t, axes=([2, 3], [wire_a, wire_b]))
    t = np.moveaxis(t, [0, 1], [wire_a, wire_b])
    t = np.tensordot(t, u4.conj(), axes=([m + wire_a, m + wire_b], [2, 3]))
    t = np.moveaxis(t, [-2, -1], [m + wire_a, m + wire_b])
    t = t.reshape(rho.shape)
    return hermitize(t) if resymmetrize else t


def apply_two_wire_unitary(rho, u, wire_a: int, wire_b: int):
    """Apply a 4x4 unitary to two wires of a register.

    Args:
        rho: State as a :class:`DensityMatrix` or a square array.
        u: 4x4 unitary (or anything with a ``matrix`` attribute) in
            (upper, lower) basis order.
        wire_a: Register wire receiving the upper factor.
        wire_b: Register wire receiving the lower factor.
    """
    u = check_unitary(getattr(u, "matrix", u))
    if u.shape != (4, 4):
        raise QMathError(f"expected a 4x4 unitary, got shape {u.shape}")
    out = apply_two_wire(_array(rho), u, wire_a, wire_b)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out)
    return out


def hermitian_eigen(h, tol: float = 1e-15, max_sweeps: int = 100):
    """Eigendecomposition of a complex Hermitian matrix by cyclic Jacobi.

    Returns ``(values, vectors)`` with eigenvalues ascending and columns of
    ``vectors`` the matching orthonormal eigenvectors.
    """
    a = _array(h).copy()
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise QMathError(f"matrix must be square, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > 1e-10:
        raise QMathError(f"not Hermitian (max deviation {dev:.3e})")
    a = hermitize(a)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = max(np.linalg.norm(a), 1e-300)

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    else:
        raise EigensolverError("eigensolver failed to converge")

    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]

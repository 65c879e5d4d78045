"""The equivalent circuit: n copies of one two-wire unitary threaded by a CTC wire.

Stage ``j`` acts with ``U`` on (upper = ``B_j``, lower = the threaded wire).
The upper output becomes the threaded wire entering stage ``j + 1``; the
lower output is the open output of stage ``j``.  With ``U = I`` the open
output of stage ``j`` therefore carries ``B_{j-1}``.  The retained pair of
stage ``s`` is ``(A_s, open_s)``.

Two engines compute the retained pair:

* :func:`run_chain` contracts stage by stage, never holding more than four
  wires, and scales to thousands of stages.
* :func:`run_dense_oracle` builds the full ``2n + 1`` wire register and is
  limited to ``n <= 5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ctcsim.qmath import (
    DensityMatrix,
    QMathError,
    apply_two_wire,
    check_unitary,
    kron,
    kron_all,
    ptrace,
)
from ctcsim.states import GlobalInput

DENSE_ORACLE_MAX_N = 5
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)


class ChainError(QMathError):
    pass


@dataclass(frozen=True, eq=False)
class TwoWireUnitary:
    """4x4 unitary on the ordered wire pair (upper, lower)."""

    name: str
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.shape != (4, 4):
            raise ChainError(f"two-wire unitary must be 4x4, got {m.shape}")
        check_unitary(m, atol=1e-12)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def _controlled_on_lower(gate: np.ndarray) -> np.ndarray:
    # basis index = 2*upper + lower
    u = np.zeros((4, 4), dtype=np.complex128)
    for a in range(2):
        u[2 * a, 2 * a] = 1.0
        for b in range(2):
            u[2 * a + 1, 2 * b + 1] = gate[a, b]
    return u


def builtin_unitary(name: str) -> TwoWireUnitary:
    """Return one of ``identity``, ``swap``, ``cnot_lower_control``, ``ch_lower_control``.

    The controlled gates act on the upper wire when the lower (threaded)
    wire is ``|1>``.
    """
    if name == "identity":
        m = np.eye(4)
    elif name == "swap":
        m = np.eye(4)[[0, 2, 1, 3]]
    elif name == "cnot_lower_control":
        m = _controlled_on_lower(np.array([[0, 1], [1, 0]]))
    elif name == "ch_lower_control":
        m = _controlled_on_lower(_H)
    else:
        raise ChainError(f"unknown unitary {name!r}")
    return TwoWireUnitary(name, m)


BUILTIN_UNITARIES = ("identity", "swap", "cnot_lower_control", "ch_lower_control")


def default_stage(n: int) -> int:
    return math.ceil(n / 2) + 1


@dataclass(frozen=True)
class ChainConfig:
    """Truncated chain parameters.

    ``retained_stage`` defaults to ``ceil(n/2) + 1`` and ``ctc_seed`` (the
    lower input of stage 1) to the maximally mixed qubit.
    """

    n: int
    unitary: TwoWireUnitary
    retained_stage: Optional[int] = None
    ctc_seed: Optional[DensityMatrix] = None

    def __post_init__(self):
        if self.n < 2:
            raise ChainError("chain too short (n must be >= 2)")
        if self.retained_stage is None:
            object.__setattr__(self, "retained_stage", default_stage(self.n))
        if not 2 <= self.retained_stage <= self.n:
            raise ChainError(f"retained stage {self.retained_stage} outside [2, {self.n}]")
        if self.ctc_seed is None:
            object.__setattr__(self, "ctc_seed", DensityMatrix.maximally_mixed(1))
        if self.ctc_seed.wires != 1:
            raise ChainError("ctc seed must be a single-wire state")

    @property
    def s(self) -> int:
        return self.retained_stage


@dataclass(frozen=True)
class RetainedPair:
    """Two-qubit state on (A_s, open output of stage s)."""

    state: DensityMatrix
    n: int
    s: int
    form: str = ""
    unitary: str = ""
    meta: dict = field(default_factory=dict, compare=False)


def _check(inp: GlobalInput, cfg: ChainConfig) -> None:
    if inp.n != cfg.n:
        raise ChainError(f"input/config mismatch: input n={inp.n}, config n={cfg.n}")


def _run_branch(stages, cfg: ChainConfig):
    """Sequential contraction of one product branch.

    Returns the retained 4x4 array and the threaded-wire marginals at every
    stage boundary.
    """
    u = cfg.unitary.matrix
    s = cfg.s
    rho = cfg.ctc_seed.matrix
    labels = ["ctc"]
    trajectory = [rho]
    for j, pair in enumerate(stages, start=1):
        if j == s:
            rho = kron(rho, pair.matrix)
            labels += ["A_s", "B"]
        else:
            # A_j is never touched by U, so tracing it before the gate is exact
            rho = kron(rho, ptrace(pair.matrix, [1]))
            labels.append("B")
        ib, ic = len(labels) - 1, labels.index("ctc")
        rho = apply_two_wire(rho, u, ib, ic)
        labels[ib], labels[ic] = "ctc", ("open_s" if j == s else "open")
        if j != s:
            keep = [w for w, lab in enumerate(labels) if lab != "open"]
            rho = ptrace(rho, keep)
            labels = [labels[w] for w in keep]
        trajectory.append(ptrace(rho, [labels.index("ctc")]) if len(labels) > 1 else rho)
    retained = ptrace(rho, [labels.index("A_s"), labels.index("open_s")])
    return retained, trajectory


def _result(inp, cfg, retained, engine):
    return RetainedPair(
        DensityMatrix(retained), cfg.n, cfg.s,
        form=inp.form,
        unitary=cfg.unitary.name,
        meta={"engine": engine},
    )


def run_chain(inp: GlobalInput, cfg: ChainConfig) -> RetainedPair:
    """Retained pair of stage ``cfg.s``, mixed classically over branches."""
    _check(inp, cfg)
    total = np.zeros((4, 4), dtype=np.complex128)
    for q, stages in inp.branches:
        retained, _ = _run_branch(stages, cfg)
        total += q * retained
    return _result(inp, cfg, total, "sequential")


def ctc_wire_trajectory(inp: GlobalInput, cfg: ChainConfig) -> list[DensityMatrix]:
    """Branch-averaged threaded-wire state at each stage boundary.

    Entry ``j - 1`` is the state entering stage ``j``; the list has ``n + 1``
    entries, the last being the wire leaving stage ``n``.
    """
    _check(inp, cfg)
    acc = None
    for q, stages in inp.branches:
        _, traj = _run_branch(stages, cfg)
        weighted = [q * t for t in traj]
        acc = weighted if acc is None else [a + w for a, w in zip(acc, weighted)]
    return [DensityMatrix(a) for a in acc]


def run_dense_oracle(inp: GlobalInput, cfg: ChainConfig) -> RetainedPair:
    """Brute-force retained pair from the full ``2n + 1`` wire register.

    Wire 0 holds the seed; wires ``2j - 1`` and ``2j`` hold ``A_j`` and ``B_j``.
    Stage ``j`` acts on (``B_j``, lower input) where the lower input is the
    seed for ``j = 1`` and ``B_{j-1}`` otherwise.
    """
    _check(inp, cfg)
    n, s = cfg.n, cfg.s
    if n > DENSE_ORACLE_MAX_N:
        raise ChainError(f"oracle scale exceeded (n={n} > {DENSE_ORACLE_MAX_N})")
    u = cfg.unitary.matrix

    def lower_input(j):
        return 0 if j == 1 else 2 * (j - 1)

    total = np.zeros((4, 4), dtype=np.complex128)
    for q, stages in inp.branches:
        rho = kron_all(cfg.ctc_seed.matrix, *(st.matrix for st in stages))
        for j in range(1, n + 1):
            # full-register symmetrization is left to the final partial trace
            rho = apply_two_wire(rho, u, 2 * j, lower_input(j), resymmetrize=False)
        total += q * ptrace(rho, [2 * s - 1, lower_input(s)])
    return _result(inp, cfg, total, "dense")

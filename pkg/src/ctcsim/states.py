"""Pair ensembles and their n-pair global input forms.

A :class:`GlobalInput` is a convex list of branches; each branch assigns one
two-qubit state (wires ``A_j, B_j``) to every stage ``j = 1..n`` and the
global state of the branch is the tensor product of those stage states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ctcsim.qmath import DensityMatrix, QMathError

SQRT1_2 = 1.0 / np.sqrt(2.0)


class StateError(QMathError):
    pass


@dataclass(frozen=True, eq=False)
class PairEnsemble:
    """Proper mixture ``{(p_i, |phi_i>)}`` of two-qubit pure states on (A, B)."""

    components: Tuple[Tuple[float, np.ndarray], ...]
    name: str = "custom"

    def __post_init__(self):
        comps = []
        for p, psi in self.components:
            p = float(p)
            psi = np.array(psi, dtype=np.complex128).reshape(-1)
            if psi.shape != (4,):
                raise StateError(f"pair amplitudes must have 4 entries, got {psi.shape[0]}")
            if not 0.0 <= p <= 1.0:
                raise StateError(f"probability {p} outside [0, 1]")
            if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
                raise StateError("pair amplitudes not normalized")
            psi.setflags(write=False)
            comps.append((p, psi))
        if not comps:
            raise StateError("ensemble needs at least one component")
        total = sum(p for p, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise StateError(f"ensemble probabilities sum to {total}, not 1")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.components])

    def component_states(self) -> list[DensityMatrix]:
        return [DensityMatrix.from_vector(psi) for _, psi in self.components]

    def average(self) -> DensityMatrix:
        """Ensemble density matrix ``sum_i p_i |phi_i><phi_i|``."""
        rho = sum(p * np.outer(psi, psi.conj()) for p, psi in self.components)
        return DensityMatrix(rho)

    @property
    def is_pure(self) -> bool:
        return len(self.components) == 1

    @property
    def extrapolated(self) -> bool:
        """True for ensembles beyond two equal-weight components.

        Only pure states and equal two-way mixtures are discussed for the
        correlated-copies / i.i.d. ambiguity; anything else is reported as an
        extrapolation.
        """
        probs = self.probabilities
        if len(probs) == 1:
            return False
        return not (len(probs) == 2 and abs(probs[0] - 0.5) <= 1e-12)


def _ket(*amps) -> np.ndarray:
    return np.array(amps, dtype=np.complex128)


def bell_pair() -> PairEnsemble:
    """``|phi+> = (|00> + |11>)/sqrt(2)`` with probability one."""
    return PairEnsemble(((1.0, _ket(SQRT1_2, 0, 0, SQRT1_2)),), name="bell")


def classical_correlated_pair() -> PairEnsemble:
    """Equal mixture of ``|00>`` and ``|11>``."""
    return PairEnsemble(
        ((0.5, _ket(1, 0, 0, 0)), (0.5, _ket(0, 0, 0, 1))),
        name="classical",
    )


def nonorthogonal_pair() -> PairEnsemble:
    """Equal mixture of ``|0>|0>`` and ``|1>|->``, ``|-> = (|0> - |1>)/sqrt(2)``."""
    return PairEnsemble(
        ((0.5, _ket(1, 0, 0, 0)), (0.5, _ket(0, 0, SQRT1_2, -SQRT1_2))),
        name="nonorthogonal",
    )


BUILTIN_ENSEMBLES = {
    "bell": bell_pair,
    "classical": classical_correlated_pair,
    "nonorthogonal": nonorthogonal_pair,
}


@dataclass(frozen=True)
class InputForm:
    """How an ensemble is replicated over the n pairs.

    ``kind`` is one of ``"correlated"`` (one global draw shared by all pairs),
    ``"iid"`` (independent draw per pair) or ``"measured"`` (Bell pairs with
    the A-particle of ``measured_stage`` measured in the computational basis).
    """

    kind: str
    measured_stage: int | None = None

    KINDS = ("correlated", "iid", "measured")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise StateError(f"unknown input form {self.kind!r}")
        if self.kind == "measured" and self.measured_stage is None:
            raise StateError("measured form needs a stage")
        if self.kind != "measured" and self.measured_stage is not None:
            raise StateError("only the measured form takes a stage")

    @classmethod
    def correlated(cls) -> "InputForm":
        return cls("correlated")

    @classmethod
    def iid(cls) -> "InputForm":
        return cls("iid")

    @classmethod
    def measured(cls, stage: int) -> "InputForm":
        return cls("measured", int(stage))

    @classmethod
    def parse(cls, text: str) -> "InputForm":
        """Parse ``correlated``, ``iid`` or ``measured:K``."""
        text = text.strip().lower()
        if text.startswith("measured"):
            _, _, k = text.partition(":")
            if not k:
                raise StateError("measured form needs a stage, e.g. measured:3")
            return cls.measured(int(k))
        aliases = {"correlatedcopies": "correlated", "correlated-copies": "correlated"}
        return cls(aliases.get(text, text))

    def __str__(self):
        if self.kind == "measured":
            return f"measured:{self.measured_stage}"
        return self.kind


@dataclass(frozen=True, eq=False)
class GlobalInput:
    """Convex mixture of product inputs over n stages."""

    n: int
    branches: Tuple[Tuple[float, Tuple[DensityMatrix, ...]], ...]
    form: str = ""

    def __post_init__(self):
        total = 0.0
        for q, stages in self.branches:
            if len(stages) != self.n:
                raise StateError(f"branch has {len(stages)} stages, expected {self.n}")
            for rho in stages:
                if rho.wires != 2:
                    raise StateError("every stage state must be a two-qubit state")
            total += q
        if not self.branches:
            raise StateError("global input needs at least one branch")
        if abs(total - 1.0) > 1e-12:
            raise StateError(f"branch probabilities sum to {total}, not 1")

    def stage_average(self, j: int) -> DensityMatrix:
        """Branch-averaged pair state at stage ``j`` (1-based)."""
        return DensityMatrix(sum(q * stages[j - 1].matrix for q, stages in self.branches))

    def equals(self, other: "GlobalInput", atol: float = 0.0) -> bool:
        if self.n != other.n or len(self.branches) != len(other.branches):
            return False
        for (q1, s1), (q2, s2) in zip(self.branches, other.branches):
            if abs(q1 - q2) > atol:
                return False
            for r1, r2 in zip(s1, s2):
                if np.max(np.abs(r1.matrix - r2.matrix)) > atol:
                    return False
        return True

    @classmethod
    def mixture(cls, weight: float, first: "GlobalInput", second: "GlobalInput") -> "GlobalInput":
        """Convex combination ``weight*first + (1-weight)*second``."""
        if first.n != second.n:
            raise StateError("mixed inputs must have the same n")
        branches = [(weight * q, s) for q, s in first.branches]
        branches += [((1.0 - weight) * q, s) for q, s in second.branches]
        return cls(first.n, tuple(branches), "mixture")


def dephased_bell() -> DensityMatrix:
    return DensityMatrix(np.diag([0.5, 0, 0, 0.5]))


def build_global_input(ensemble: PairEnsemble, form: InputForm, n: int) -> GlobalInput:
    """Replicate ``ensemble`` over ``n`` pairs according to ``form``."""
    if n < 2:
        raise StateError("chain too short (n must be >= 2)")
    if form.kind == "correlated":
        branches = tuple(
            (p, (rho,) * n) for (p, _), rho in zip(ensemble.components, ensemble.component_states())
        )
        return GlobalInput(n, branches, str(form))
    if form.kind == "iid":
        return GlobalInput(n, ((1.0, (ensemble.average(),) * n),), str(form))

    k = form.measured_stage
    if not 1 <= k <= n:
        raise StateError(f"bad stage {k} for measured form with n={n}")
    bell = bell_pair()
    if not (ensemble.is_pure and np.allclose(ensemble.components[0][1], bell.components[0][1], atol=1e-12)):
        raise StateError("measured form is defined for Bell pairs only")
    pure = bell.component_states()[0]
    stages = [pure] * n
    stages[k - 1] = dephased_bell()
    return GlobalInput(n, ((1.0, tuple(stages)),), str(form))

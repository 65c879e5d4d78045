import numpy as np
import pytest

from ctcsim.metrics import classical_mutual_information_zz, mutual_information
from ctcsim.qmath import partial_trace
from ctcsim.states import (
    GlobalInput,
    InputForm,
    PairEnsemble,
    StateError,
    bell_pair,
    build_global_input,
    classical_correlated_pair,
    nonorthogonal_pair,
)
from qhelpers import proj, random_ensemble

DEPHASED = np.diag([0.5, 0, 0, 0.5])
MINUS = np.array([1, -1]) / np.sqrt(2)


def test_bell_pair():
    e = bell_pair()
    assert len(e.components) == 1 and e.components[0][0] == 1.0
    psi = e.components[0][1]
    assert np.allclose(psi, [2**-0.5, 0, 0, 2**-0.5], atol=1e-15)
    assert abs(psi[0] - 1 / np.sqrt(2)) <= 1e-15
    rho = e.average()
    assert partial_trace(rho, [0]).allclose(np.eye(2) / 2, atol=1e-15)
    assert abs(np.trace(rho.matrix @ rho.matrix) - 1) <= 1e-12


def test_classical_correlated_pair():
    e = classical_correlated_pair()
    assert e.average().allclose(DEPHASED, atol=0)
    assert abs(classical_mutual_information_zz(e.average()) - 1) <= 1e-12
    assert abs(mutual_information(e.average()) - 1) <= 1e-12


def test_nonorthogonal_pair():
    e = nonorthogonal_pair()
    b = partial_trace(e.average(), [1])
    assert b.allclose(0.5 * proj(1, 0) + 0.5 * np.outer(MINUS, MINUS), atol=1e-15)
    assert abs(np.vdot([1, 0], MINUS) - 1 / np.sqrt(2)) <= 1e-15
    # |1>|-> amplitudes: (|10> - |11>)/sqrt(2)
    assert np.allclose(e.components[1][1], [0, 0, MINUS[0], MINUS[1]])
    assert abs(e.probabilities.sum() - 1) <= 1e-15


def test_ensemble_validation():
    with pytest.raises(StateError):
        PairEnsemble(((0.5, [1, 0, 0, 0]),))
    with pytest.raises(StateError):
        PairEnsemble(((1.0, [1, 1, 0, 0]),))
    with pytest.raises(StateError):
        PairEnsemble(())
    with pytest.raises(StateError):
        PairEnsemble(((1.0, [1, 0, 0]),))


def test_extrapolated_label():
    assert not bell_pair().extrapolated
    assert not nonorthogonal_pair().extrapolated
    skewed = PairEnsemble(((0.3, [1, 0, 0, 0]), (0.7, [0, 0, 0, 1])))
    assert skewed.extrapolated


class TestBuildGlobalInput:
    def test_correlated_copies(self):
        g = build_global_input(classical_correlated_pair(), InputForm.correlated(), 3)
        assert len(g.branches) == 2
        (q0, s0), (q1, s1) = g.branches
        assert q0 == q1 == 0.5
        assert all(r.allclose(proj(1, 0, 0, 0), atol=0) for r in s0)
        assert all(r.allclose(proj(0, 0, 0, 1), atol=0) for r in s1)

    def test_iid(self):
        g = build_global_input(classical_correlated_pair(), InputForm.iid(), 3)
        assert len(g.branches) == 1 and g.branches[0][0] == 1.0
        assert all(r.allclose(DEPHASED, atol=0) for r in g.branches[0][1])

    def test_measured_single(self):
        g = build_global_input(bell_pair(), InputForm.measured(2), 3)
        stages = g.branches[0][1]
        bell = bell_pair().average()
        assert stages[0].allclose(bell, atol=0)
        assert stages[1].allclose(DEPHASED, atol=0)
        assert stages[2].allclose(bell, atol=0)

    def test_pure_forms_coincide(self):
        a = build_global_input(bell_pair(), InputForm.correlated(), 5)
        b = build_global_input(bell_pair(), InputForm.iid(), 5)
        assert a.equals(b, atol=0.0)

    def test_errors(self):
        with pytest.raises(StateError, match="too short"):
            build_global_input(bell_pair(), InputForm.iid(), 1)
        with pytest.raises(StateError, match="bad stage"):
            build_global_input(bell_pair(), InputForm.measured(4), 3)
        with pytest.raises(StateError, match="Bell"):
            build_global_input(classical_correlated_pair(), InputForm.measured(2), 3)

    @pytest.mark.parametrize("form", [InputForm.correlated(), InputForm.iid()])
    def test_stage_average_matches_ensemble(self, rng, form):
        for _ in range(10):
            e = random_ensemble(rng)
            g = build_global_input(e, form, 4)
            for j in range(1, 5):
                assert g.stage_average(j).allclose(e.average(), atol=1e-12)

    def test_measured_stage_average(self):
        g = build_global_input(bell_pair(), InputForm.measured(3), 4)
        assert g.stage_average(3).allclose(DEPHASED, atol=0)
        assert g.stage_average(1).allclose(bell_pair().average(), atol=0)

    def test_mixture(self):
        a = build_global_input(bell_pair(), InputForm.iid(), 3)
        b = build_global_input(classical_correlated_pair(), InputForm.correlated(), 3)
        m = GlobalInput.mixture(0.25, a, b)
        assert len(m.branches) == 3
        assert abs(sum(q for q, _ in m.branches) - 1) <= 1e-15


@pytest.mark.parametrize(
    "text,expected",
    [
        ("correlated", InputForm.correlated()),
        ("IID", InputForm.iid()),
        ("measured:3", InputForm.measured(3)),
        ("CorrelatedCopies", InputForm.correlated()),
    ],
)
def test_form_parsing(text, expected):
    assert InputForm.parse(text) == expected


def test_form_parsing_errors():
    with pytest.raises(StateError):
        InputForm.parse("measured")
    with pytest.raises(StateError):
        InputForm.parse("sometimes")

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkprobe import core, spin, twospin
from darkprobe.core import PulseSequence
from darkprobe.errors import SettingsError
from darkprobe.experiments import two_spin_state

WEAK = twospin.TwoSpinParams(1.0, 0.01, 0.01, -0.01, 0.01, 0.01)


def subspace_state(rng):
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    v = np.array([0, a[0], a[1], 0]) / np.linalg.norm(a)
    return np.outer(v, v.conj())


def test_derived_couplings():
    a = 0.02
    p = twospin.TwoSpinParams(1.0, a, a, -a, 0.0, 0.0)
    assert p.A_z == pytest.approx(2 * a)
    assert p.A == pytest.approx(a * math.sqrt(5))
    f = twospin.pseudo_spin_fields(p)
    assert f.v_x == pytest.approx(2 / math.sqrt(5))
    assert f.v_z == pytest.approx(1 / math.sqrt(5))


def test_weak_coupling_flag():
    assert WEAK.weak_coupling
    assert not twospin.TwoSpinParams(1.0, 0.2, 0.0, 0.0, 0.0, 0.0).weak_coupling


def test_vanishing_pseudo_potentials():
    with pytest.raises(SettingsError, match="A = 0"):
        twospin.pseudo_spin_fields(twospin.TwoSpinParams(1.0, 0.0, 0.01, 0.01, 0.0, 0.0))


def test_symmetric_couplings_are_invisible():
    # a_z1 = a_z2 -> A_z = 0 -> V0 = V1 on the subspace
    p = twospin.TwoSpinParams(1.0, 0.01, 0.02, 0.02, 0.0, 0.0)
    cos_phi, w = twospin.pseudo_observable(p, PulseSequence(3.0, 4))
    assert cos_phi == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(w, 0.0, atol=1e-12)


@given(ax=st.floats(-0.05, 0.05), az1=st.floats(-0.05, 0.05), az2=st.floats(-0.05, 0.05),
       tau=st.floats(1.0, 300.0), n=st.integers(1, 15))
@settings(max_examples=100, deadline=None)
def test_relabelled_closed_form_matches_pseudo_propagation(ax, az1, az2, tau, n):
    p = twospin.TwoSpinParams(1.0, ax, az1, az2, 0.0, 0.0)
    if p.A < 1e-4:
        return
    seq = PulseSequence(tau, n)
    try:
        cos_phi, w = twospin.pseudo_observable(p, seq)
    except spin.DegenerateRotationError:
        return
    v0, v1 = p.pseudo_operators()
    u0, u1 = core.sequence_propagators(v0, v1, seq)
    want = u0.conj().T @ u1
    got = cos_phi * core.IDENTITY2 - 1j * sum(wk * s for wk, s in zip(w, core.PAULI))
    assert np.allclose(got, want, atol=1e-12)


def test_pseudo_operators_are_the_subspace_block():
    # on span{|01>, |10>} the exact Hamiltonians reduce to the pseudo-spin ones
    p = twospin.TwoSpinParams(1.0, 0.03, 0.02, -0.01, 0.0, 0.0)
    h0, h1 = p.operators()
    idx = np.ix_(twospin.SUBSPACE, twospin.SUBSPACE)
    v0, v1 = p.pseudo_operators()
    assert np.allclose(h0[idx], v0)
    assert np.allclose(h1[idx], v1)


@pytest.mark.parametrize("name,expected", [("bell-plus", (1.0, 0.0)), ("bell-minus", (-1.0, 0.0)),
                                           ("product-01", (0.0, 0.0)), ("product-10", (0.0, 0.0))])
def test_witness_values(name, expected):
    assert twospin.witnesses(two_spin_state(name)) == expected


def test_product_state_pseudo_polarisation():
    # with sigma_z = diag(1, -1) on (|0>, |1>), |01> is the first pseudo-spin basis state
    assert np.allclose(twospin.pseudo_bloch(two_spin_state("product-01")), [0, 0, 1])
    assert np.allclose(twospin.pseudo_bloch(two_spin_state("product-10")), [0, 0, -1])


def test_witnesses_are_pseudo_spin_components():
    rng = np.random.default_rng(2)
    for _ in range(5):
        rho = subspace_state(rng)
        assert np.allclose(twospin.witnesses(rho), twospin.pseudo_bloch(rho)[:2], atol=1e-14)


@pytest.mark.parametrize("name", ["bell-plus", "bell-minus", "product-01", "product-10"])
def test_closed_form_against_full_oracle(name):
    seq = twospin.witness_settings(WEAK).seq
    res = twospin.witness_measurement(WEAK, seq, two_spin_state(name))
    assert res.abs_err <= 0.05
    assert res.subspace_population == pytest.approx(1.0)
    # populations of |00>, |11> change by at most C (coupling/omega0)^2 with C = 10
    assert res.leakage <= 10 * (WEAK.max_coupling / WEAK.omega0) ** 2


def test_oracle_conserves_probability():
    v0, v1 = WEAK.operators()
    full = core.propagate_full(v0, v1, PulseSequence(50.0, 3), two_spin_state("bell-plus"))
    assert np.trace(full).real == pytest.approx(1.0, abs=1e-12)


def test_low_population_warning():
    seq = PulseSequence(10.0, 1)
    with pytest.warns(UserWarning, match="low signal"):
        twospin.witness_measurement(WEAK, seq, two_spin_state("product-00"))


def test_tomography_recovers_witnesses():
    rng = np.random.default_rng(0)
    s = twospin.pseudo_settings(WEAK)
    for _ in range(3):
        rho = subspace_state(rng)
        r = twospin.pseudo_tomography(WEAK, rho, s)
        assert np.allclose(r[:2], twospin.witnesses(rho), atol=0.05)


def test_axis_relabel_preserves_orientation():
    # x <-> z alone would be a reflection; the y flip keeps det = +1
    m = np.array([twospin.to_pseudo_axis(e) for e in np.eye(3)])
    assert np.linalg.det(m) == pytest.approx(1.0)

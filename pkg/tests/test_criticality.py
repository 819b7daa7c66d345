import json
import math

import pytest
from hypothesis import given, strategies as st

from edgefield.criticality import (
    SQUARE_LATTICE_RHO,
    DegenerateRegion,
    InvalidM,
    InvalidRho,
    compute_criticality,
    default_m,
    solve_k,
)


def test_solve_k_square_lattice_small():
    assert solve_k(2, 0.5) == pytest.approx(2.0, abs=1e-12)


def test_solve_k_m8():
    # 64 / (64 + 16*4) = 0.5 confirms k=3 solves the density equation
    assert solve_k(8, 0.5) == pytest.approx(3.0, abs=1e-12)


def test_solve_k_solves_density_equation():
    for m in (2, 3, 5, 8, 16, 100, 3333):
        for rho in (0.1, 0.5, 0.9):
            k = solve_k(m, rho)
            assert m**2 / (m**2 + 2 * m * (k - 1) ** 2) == pytest.approx(rho, abs=1e-9)


def test_solve_k_closed_form_at_half():
    for m in range(1, 10_001):
        assert abs(solve_k(m, 0.5) - (1 + math.sqrt(m / 2))) < 1e-12


def test_rho_validation():
    with pytest.raises(InvalidRho):
        solve_k(2, 1.5)
    with pytest.raises(InvalidRho):
        solve_k(2, 0.0)
    with pytest.raises(InvalidRho):
        solve_k(2, 1.0)
    with pytest.raises(InvalidRho):
        solve_k(2, float("nan"))


def test_m_validation():
    with pytest.raises(InvalidM):
        solve_k(0, 0.5)
    with pytest.raises(InvalidM):
        solve_k(True, 0.5)
    with pytest.raises(InvalidM):
        compute_criticality(-3, 0.5)


def test_criticality_m2():
    r = compute_criticality(2, 0.5)
    assert (r.K_c, r.m_c, r.R_c) == (2, 1, 1)


def test_criticality_m8():
    r = compute_criticality(8, 0.5)
    assert (r.K_c, r.m_c, r.R_c) == (3, 2, 2)


def test_criticality_m16():
    r = compute_criticality(16, 0.5)
    assert (r.K_c, r.m_c, r.R_c) == (4, 4, 4)


def test_degenerate_region():
    with pytest.raises(DegenerateRegion):
        compute_criticality(1, 0.5)


def test_k_c_floor_of_two():
    # tiny k values still clamp to K_c >= 2
    for m in (2, 3, 4):
        assert compute_criticality(m, 0.999).K_c >= 2


def test_m_c_sawtooth_in_m():
    # m_c = m // K_c grows while K_c holds, and may drop by one exactly where
    # K_c increments (the solution crosses an integer); never drops otherwise
    prev = compute_criticality(2, 0.5)
    for m in range(3, 10_001):
        cur = compute_criticality(m, 0.5)
        if cur.K_c == prev.K_c:
            assert cur.m_c >= prev.m_c
        else:
            assert cur.K_c == prev.K_c + 1
        prev = cur


def test_m_c_dip_at_k_c_increment():
    # the canonical counterexample to global monotonicity
    assert compute_criticality(18, 0.5).m_c == 4
    assert compute_criticality(19, 0.5).m_c == 3


@given(st.integers(2, 10_000), st.floats(0.01, 0.99))
def test_result_internally_consistent(self_m, rho):
    try:
        r = compute_criticality(self_m, rho)
    except DegenerateRegion:
        return
    assert r.K_c == math.ceil(max(2.0, solve_k(self_m, rho)))
    assert r.m_c == self_m // r.K_c
    assert r.R_c == r.m_c
    assert r.m_c >= 1


def test_to_json_fields():
    payload = json.loads(compute_criticality(16, 0.5).to_json())
    assert payload["K_c"] == 4 and payload["m_c"] == 4 and payload["R_c"] == 4
    assert payload["m"] == 16 and payload["rho"] == 0.5


def test_default_m():
    assert default_m(16, 16) == 16
    assert default_m(10, 12) == 10
    assert default_m(2, 2) == 2


def test_square_lattice_constant():
    assert SQUARE_LATTICE_RHO == 0.5

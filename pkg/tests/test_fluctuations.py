import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from cavmag.errors import DomainError, InstabilityError
from cavmag.fluctuations import (
    diffusion_matrix,
    fluctuation_at,
    fluctuation_sweep,
    solve_lyapunov,
)
from cavmag.model import SystemParams, drive_bound
from cavmag.stability import Protocol, classify_point, drift_matrix, drift_matrix_for
from cavmag.steady_state import critical_strengths, steady_states

FIG6A = SystemParams(gamma=1.0, coupling_j=2.5, delta_a=3.0, delta_m=4.0)


def test_diffusion_matrix():
    assert np.array_equal(diffusion_matrix(SystemParams()), np.eye(4))
    assert np.array_equal(diffusion_matrix(SystemParams(gamma=2.0)), np.diag([1.0, 1.0, 2.0, 2.0]))
    with pytest.raises(DomainError):
        diffusion_matrix(SystemParams(), thermal_occupation=0.1)


def test_vacuum_of_decoupled_modes():
    p = SystemParams(coupling_j=0.0, drive_g=0.0, gamma=0.4)
    res = solve_lyapunov(drift_matrix_for(p, 0j), diffusion_matrix(p))
    assert np.allclose(res.v, 0.5 * np.eye(4), atol=1e-12)
    assert abs(res.magnon_fluctuation) < 1e-12


def test_undriven_coupled_is_vacuum():
    fp = fluctuation_at(FIG6A)
    assert abs(fp.fluctuation) < 1e-10


def test_unstable_rejected():
    p = FIG6A.replace(drive_g=2.3)
    with pytest.raises(InstabilityError):
        solve_lyapunov(drift_matrix_for(p, 0j), diffusion_matrix(p))


@st.composite
def stable_case(draw):
    p = SystemParams(
        gamma=draw(st.floats(0.1, 3.0)),
        coupling_j=draw(st.floats(0.0, 5.0)),
        delta_a=draw(st.floats(-5.0, 5.0)),
        delta_m=draw(st.floats(-6.0, 6.0)),
    )
    return p.replace(drive_g=draw(st.floats(0.0, 0.99)) * drive_bound(p))


@settings(max_examples=200)
@given(stable_case())
def test_matches_reference_solver(p):
    pt = classify_point(p)
    for label in pt.stable_branches:
        br = pt.branch(label)
        dm = drift_matrix(p, br)
        res = solve_lyapunov(dm, diffusion_matrix(p))
        ref = scipy.linalg.solve_continuous_lyapunov(dm.entries, -diffusion_matrix(p))
        assert np.allclose(res.v, ref, rtol=1e-7, atol=1e-9)
        assert np.max(np.abs(res.v - res.v.T)) < 1e-12
        assert res.residual < 1e-10 * max(1.0, np.abs(res.v).max())
        assert res.magnon_fluctuation >= -1e-12


def test_doublet_invariance():
    p = FIG6A.replace(drive_g=2.4)
    a = steady_states(p)[1]
    b = steady_states(p, partner=True)[1]
    fa = solve_lyapunov(drift_matrix(p, a), diffusion_matrix(p)).magnon_fluctuation
    fb = solve_lyapunov(drift_matrix(p, b), diffusion_matrix(p)).magnon_fluctuation
    assert fa == pytest.approx(fb, rel=1e-12)


def _approach(k_values):
    gc2 = critical_strengths(FIG6A).g_c2
    return [fluctuation_at(FIG6A.replace(drive_g=gc2 * (1 - 2.0**-k))).fluctuation for k in k_values]


def test_divergence_is_monotone_and_inverse_distance():
    values = _approach(range(1, 11))
    assert all(b > a for a, b in zip(values, values[1:]))
    # halving the distance doubles the fluctuation near the critical point
    assert values[-1] / values[-2] == pytest.approx(2.0, rel=1e-2)


def test_divergence_threshold_at_k10():
    assert _approach([10])[0] > 1e3


def test_far_below_threshold_is_small():
    assert fluctuation_at(FIG6A.replace(drive_g=0.5)).fluctuation < 0.05


def test_sweep_skips_marginal_points():
    gc2 = critical_strengths(FIG6A).g_c2
    pts = fluctuation_sweep(FIG6A, [1.0, gc2, 2.4, 3.5])
    assert [p.status for p in pts] == ["ok", "skipped", "ok", "invalid"]
    assert pts[0].branch == "Zero" and pts[2].branch == "Plus"
    assert all(len(p.row()) == 5 for p in pts)


def test_sweep_protocols_differ_in_bistable_region():
    p = FIG6A.replace(delta_m=2.2)
    gc1 = critical_strengths(p).g_c1
    up = fluctuation_sweep(p, [gc1 + 0.05], Protocol.SWEEP_UP)[0]
    down = fluctuation_sweep(p, [gc1 + 0.05], Protocol.SWEEP_DOWN)[0]
    assert (up.branch, down.branch) == ("Plus", "Zero")

import cmath
import math

import numpy as np
import pytest

import ctraj

FREE = """
[potential]
kind = free

[packet]
x0 = -0.4
p0 = 0.9
omega_re = 1.0
omega_im = 0.3

[run]
hbar = 0.5
T = 1.3
targets_lo = -2
targets_hi = 2
targets_n = 21
"""


def test_free_particle_totals_match_closed_form():
    cfg = ctraj.parse_config(FREE)
    field = ctraj.propagate(cfg)
    assert field["X"].shape == (21, 1)
    assert not field["empty"].any()
    # a = m Omega / 2
    a = 0.5 * complex(1.0, 0.3)
    for X, total in zip(field["X"][:, 0], field["total"]):
        exact = ctraj.free_particle_exact(X, -0.4, 0.9, a, 0.5, 1.0, 1.3)
        assert abs(total - exact) < 1e-9 * abs(exact)


def test_config_round_trip_and_edits():
    cfg = ctraj.parse_config(FREE)
    assert ctraj.parse_config(cfg.to_ini()) == cfg
    cfg.method = "bomca"
    cfg.T = 0.0
    field = ctraj.propagate(cfg)
    psi0 = np.exp(-0.5 * complex(1.0, 0.3) * (field["X"][:, 0] + 0.4) ** 2 / 0.5 + 1j * 0.9 * (field["X"][:, 0] + 0.4) / 0.5)
    assert np.max(np.abs(field["total"] - psi0)) < 1e-12


def test_capability_rejection():
    with pytest.raises(ctraj.CtrajError, match="UnsupportedOrder"):
        ctraj.parse_config("[potential]\ndimension = 2\n[run]\norder = 3\n")
    assert "classical_q" in ctraj.capability_matrix()


def test_state_size_and_stirling():
    assert ctraj.state_size(1, 1) == 4
    r = ctraj.stirling(10.0, 10.0, 10.0)
    assert r["correction"] == pytest.approx(1.0 / 120.0, rel=1e-14)
    assert r["corrected_error"] < r["leading_error"]


def test_propagator_and_checks():
    cfg = ctraj.parse_config(FREE + "\n[final_packet]\nx0 = 0.5\np0 = 0.9\nomega_re = 1.0\nomega_im = 0.3\n")
    out = ctraj.propagator(cfg)
    assert out["branch_count"] == 1
    assert out["closed_form_relative_error"] < 1e-10
    reports = ctraj.checks(cfg, "stirling")
    assert all(r["passed"] for r in reports)


def test_harmonic_compare():
    cfg = ctraj.parse_config(
        FREE.replace("kind = free", "kind = harmonic\nk = 1.0")
        + "\n[oracle]\nlo = -12\nhi = 12\nn = 1024\nsteps = 1000\n"
    )
    report = ctraj.compare(cfg)
    assert report["relative_L2"] < 1e-6
    assert report["excluded_targets"] == []
    # one full period of the unit oscillator: the continued square root gives -psi0
    psi_T = ctraj.harmonic_exact(0.3, 1.0, 0.1, 0.4, 0.5, 1.0, 1.0, 2 * math.pi)
    psi_0 = cmath.exp(-0.5 * 0.2**2 + 1j * 0.4 * 0.2)
    assert abs(psi_T + psi_0) < 1e-12

import numpy as np
import pytest

from chronon.analysis import (
    FrontPoints,
    NormAudit,
    PlanckLimits,
    compute_tau,
    eigen_baseline,
    equation_residual,
    locate_front_points,
    normalization_audit,
    planck_limits,
    residual_check,
    window_probabilities,
)
from chronon.core import ValidationError, Wavefunction
from chronon.models import DiscreteDelay, Front, LocalPerturbation, perturbed_state
from oracles import brute_front_points

# max |norm^2 - 1| of the bidirectional v = 1 front over t = 0, 0.25, ..., 4
FRONT_MAX_DEFECT = 0.013687216057557405
# brute-force window scan, reference quench, N = 1e6, k = 3, width L/50
FRONT_POINTS_REF = (-0.1262254901960782, 0.9129901960784315)
# residual of the LocalPerturbation path (eps 0.05, growth 1) at t1 + 0.05, probe 0.25/||H||
LOCAL_RESIDUAL_005 = 26.46768593858333

AUDIT_TIMES = np.linspace(0.0, 4.0, 17)


def test_norm_audit_validation():
    with pytest.raises(ValidationError):
        NormAudit([0.0, 1.0], [1.0])
    with pytest.raises(ValidationError):
        NormAudit([1.0, 0.5], [1.0, 1.0])
    assert NormAudit([0.0, 1.0], [1.0, 0.98]).max_defect == pytest.approx(0.02)


def test_audit_delay_model(reference):
    scn = reference.with_model(DiscreteDelay(1.0, 1.2))
    assert normalization_audit(scn, AUDIT_TIMES).max_defect <= 1e-9


def test_audit_identity_front(degenerate):
    scn = degenerate.with_model(Front(1.0))
    assert normalization_audit(scn, AUDIT_TIMES).max_defect <= 1e-12


def test_audit_front_reference(reference):
    scn = reference.with_model(Front(1.0))
    audit = normalization_audit(scn, AUDIT_TIMES)
    assert audit.max_defect == pytest.approx(FRONT_MAX_DEFECT, abs=1e-12)
    g = reference.grid
    covered = audit.times >= max(g.x_max, -g.x_min)
    assert covered.any()
    assert np.all(np.abs(audit.norms[covered] - 1) <= 1e-9)


def test_audit_csv_columns(reference):
    text = normalization_audit(reference.with_model(Front(1.0)), [0.0, 0.5]).to_csv()
    lines = text.splitlines()
    assert lines[0] == "time,norm_sq,defect"
    assert len(lines) == 3


def test_eigen_path_residual_is_second_order(reference):
    C = reference.E1**3 / 6  # sin(E h)/h - E = -E^3 h^2 / 6 + ...
    for h in (1e-2, 5e-3, 1e-3, 1e-4):
        r = eigen_baseline(reference, h)
        assert r <= 1.01 * C * h * h
    assert eigen_baseline(reference, 1e-4) < 1e-3 * eigen_baseline(reference, 1e-2)


def test_residual_rejects_nonpositive_probe(reference):
    path = lambda t: reference.psi0
    with pytest.raises(ValidationError):
        equation_residual(path, reference.h_pre, 1.0, 0.0)


def test_local_perturbation_residual(reference):
    scn = reference.with_model(LocalPerturbation(0.05, 1.0))
    ok, info = residual_check(scn, [0.05, 0.5])
    first = info["samples"][0]
    assert first["residual"] == pytest.approx(LOCAL_RESIDUAL_005, rel=1e-6)
    assert not ok
    assert first["residual"] >= 10 * eigen_baseline(reference, info["dt_probe"])


def test_residual_linear_in_epsilon(reference):
    g = reference.grid

    def residual(eps):
        amps = perturbed_state(reference.psi0, 0.0, eps, 0.1).amplitudes
        path = lambda t: Wavefunction(g, amps * np.exp(-1j * reference.E0 * t), t)
        return equation_residual(path, reference.h_pre, 1.0, 1e-4)

    assert residual(0.04) / residual(0.02) == pytest.approx(2.0, rel=0.05)


def test_window_probabilities_sum(reference):
    centers, p = window_probabilities(reference.psi0, 0.02)
    assert centers.size == p.size
    assert np.all(p >= 0) and np.all(p <= 1)


def test_front_points_identical_states(reference):
    fp = locate_front_points(reference.psi0, reference.psi0, 0.02, 10**6, x_A=0.0, L=1.0)
    assert fp.empty and fp.L_prime == 0.0


def test_front_points_match_brute_force(reference):
    fp = locate_front_points(reference.psi0, reference.psi1, 0.02, 10**6, 3, x_A=0.0, L=1.0)
    g = reference.grid
    brute = brute_front_points(g.x, reference.psi0.amplitudes, reference.psi1.amplitudes, 0.02, 10**6, 3)
    assert (fp.x_A_prime, fp.x_B_prime) == pytest.approx(brute, abs=1e-12)
    assert (fp.x_A_prime, fp.x_B_prime) == pytest.approx(FRONT_POINTS_REF, abs=1e-12)
    assert fp.L_prime == pytest.approx(max(-fp.x_A_prime, fp.x_B_prime))
    # the detectable interval stops short of x_B: reported, not clamped
    assert fp.below_L and fp.L_prime < 1.0


def test_front_points_grow_with_N(reference):
    intervals = []
    for N in (10**3, 10**4, 10**5, 10**6, 10**7):
        fp = locate_front_points(reference.psi0, reference.psi1, 0.02, N)
        if not fp.empty:
            intervals.append((fp.x_A_prime, fp.x_B_prime))
    assert len(intervals) >= 3
    for (a0, b0), (a1, b1) in zip(intervals, intervals[1:]):
        assert a1 <= a0 and b1 >= b0


def test_front_points_contain_well_when_resolved(strong):
    fp = locate_front_points(strong.psi0, strong.psi1, 0.1, 10**5, x_A=0.0, L=1.0)
    assert fp.x_A_prime <= 0.0 <= 1.0 <= fp.x_B_prime
    assert fp.L_prime >= 1.0 and not fp.below_L


def test_front_points_input_checks(reference):
    with pytest.raises(ValidationError):
        locate_front_points(reference.psi0, reference.psi1, 0.02, 1)
    with pytest.raises(ValidationError):
        locate_front_points(reference.psi0, reference.psi1, 1e-5, 100)


def test_front_points_round_trip(reference):
    fp = locate_front_points(reference.psi0, reference.psi1, 0.02, 10**6)
    assert FrontPoints.from_dict(fp.to_dict()) == fp


def test_compute_tau():
    assert compute_tau(1.0, 1.0) == 1.0
    assert compute_tau(2.4, 0.7) == pytest.approx(2 * compute_tau(1.2, 0.7))
    assert compute_tau(1.3, 1.0) >= compute_tau(1.0, 1.0)
    assert compute_tau(1.616e-35, 2.99792458e8) == pytest.approx(5.39e-44, rel=0.01)
    for bad in ((0.0, 1.0), (1.0, -1.0)):
        with pytest.raises(ValidationError):
            compute_tau(*bad)


def test_planck_limits():
    lim = planck_limits(1.616e-35)
    assert lim.t_P == pytest.approx(5.39e-44, rel=0.01)
    assert lim.max_ips_per_register == pytest.approx(1.86e43, rel=0.01)
    assert lim.t_P == lim.l_P / 2.99792458e8
    assert planck_limits(2 * 1.616e-35).max_ips_per_register == pytest.approx(lim.max_ips_per_register / 2)
    assert PlanckLimits.from_dict(lim.to_dict()) == lim
    assert lim.to_dict()["t_P"]["unit"] == "s"

"""Correlation series, typicality estimates, decay fits, domain walls."""

import numpy as np
import pytest

from mcbrick.dynamics import (
    boundary_autocorrelation,
    decay_fits,
    domain_wall_evolution,
    staggered_correlation,
)
from mcbrick.errors import CapacityError, ParameterError
from mcbrick.gates import (
    HamiltonianGateParams,
    gate_from_hamiltonian,
    identity_gate,
    random_mc_gate,
)


def phase_point(delta):
    p = HamiltonianGateParams(tau=np.pi / 3, delta=delta, B=0.5, D=0.5)
    return gate_from_hamiltonian(p)


def test_boundary_t0_normalization_and_fields():
    s = boundary_autocorrelation(phase_point(1.0), 8, 12)
    assert abs(s.values[0] - 1.0) < 1e-13
    assert s.method == "exact-trace"
    assert s.estimator_error is None
    assert s.times.tolist() == list(range(13))
    assert np.abs(s.values.imag).max() == 0 if np.iscomplexobj(s.values) else True


def test_boundary_phase_points_differ():
    sI = boundary_autocorrelation(phase_point(1.0), 8, 60)
    sII = boundary_autocorrelation(phase_point(1.4), 8, 60)
    assert sI.values[40:].min() > 0.1
    assert np.abs(sII.values[40:]).mean() < sI.values[40:].mean()


def test_sector_traces_recombine_to_full_trace():
    # the full trace is the dimension-weighted mean of the sector traces
    g = phase_point(1.4)
    L, steps = 8, 15
    full = boundary_autocorrelation(g, L, steps)
    from math import comb

    acc = np.zeros(steps + 1)
    for m in range(-L, L + 1, 2):
        s = boundary_autocorrelation(g, L, steps, sector=m)
        assert abs(s.values[0] - 1.0) < 1e-12
        assert s.metadata["sector"] == m
        acc += comb(L, (L + m) // 2) * s.values
    assert np.abs(acc / 2**L - full.values).max() < 1e-10


def test_sector_removes_conserved_background():
    # away from half filling tr_m(sz_0) != 0 leaves a floor; at m=0 it is 0
    g = phase_point(1.4)
    sz_mean_sq = []
    for m in (0, 2):
        s = boundary_autocorrelation(g, 8, 40, sector=m)
        sz_mean_sq.append(np.abs(s.values[25:]).mean())
    assert sz_mean_sq[0] < 0.1
    assert sz_mean_sq[1] > (2 / 8) ** 2 * 0.9  # (m/L)^2 background survives


def test_sector_typicality_matches_exact():
    g = phase_point(1.0)
    ex = boundary_autocorrelation(g, 8, 25, sector=0)
    ty = boundary_autocorrelation(g, 8, 25, method="typicality", seed=11, sector=0)
    assert abs(ty.values[0] - 1.0) < 1e-13
    ok = np.abs(ty.values - ex.values) < 3 * np.maximum(ty.estimator_error, 1e-14)
    assert ok[1:].mean() >= 0.9


def test_sector_parameter_validation():
    g = phase_point(1.0)
    with pytest.raises(ParameterError):
        boundary_autocorrelation(g, 8, 5, sector=1)  # parity mismatch
    with pytest.raises(ParameterError):
        boundary_autocorrelation(g, 8, 5, sector=10)  # out of range


def test_typicality_tracks_exact_within_errors():
    g = phase_point(1.0)
    exact = boundary_autocorrelation(g, 10, 60)
    typ = boundary_autocorrelation(g, 10, 60, method="typicality", seed=7)
    assert typ.estimator_error is not None
    assert abs(typ.values[0] - 1.0) < 1e-14
    assert typ.estimator_error[0] < 1e-14
    diff = np.abs(typ.values - exact.values)[1:]
    frac = (diff < 3 * typ.estimator_error[1:]).mean()
    assert frac >= 0.95
    assert typ.metadata["samples"] == 20


def test_method_and_capacity_guards():
    g = random_mc_gate(1)
    with pytest.raises(ParameterError):
        boundary_autocorrelation(g, 8, 5, method="montecarlo")
    with pytest.raises(CapacityError):
        boundary_autocorrelation(g, 14, 5)
    with pytest.raises(CapacityError):
        boundary_autocorrelation(g, 16, 5, method="typicality")


def test_staggered_normalization_and_guards():
    s = staggered_correlation(phase_point(1.0), 8, 30)
    assert abs(s.values[0] - 1.0) < 1e-12
    assert s.metadata["boundary"] == "periodic"
    assert s.metadata["fit"]["n_points"] >= 4
    flat = staggered_correlation(identity_gate(), 8, 10)
    assert np.ptp(flat.values) < 1e-12
    with pytest.raises(ParameterError):
        staggered_correlation(phase_point(1.0), 7, 10)
    with pytest.raises(CapacityError):
        staggered_correlation(phase_point(1.0), 14, 10)


def test_decay_fits_identify_models():
    t = np.arange(201)
    power = 2.0 * np.maximum(t, 1) ** -0.7
    fp = decay_fits(t, power)
    assert fp.t_min == 10.0 and fp.t_max == 200.0
    assert abs(fp.power_exponent + 0.7) < 1e-9
    assert fp.sse_ratio > 100
    expo = 1.5 * np.exp(-0.05 * t)
    fe = decay_fits(t, expo)
    assert abs(fe.exp_rate - 0.05) < 1e-9
    assert fe.sse_ratio < 1
    with pytest.raises(ParameterError):
        decay_fits(t[:3], power[:3])
    # near-zero points are dropped, not clamped into the fit
    dirty = power.copy()
    dirty[50] = 0.0
    assert decay_fits(t, dirty).n_points == fp.n_points - 1


def test_domain_wall_profiles_and_conservation():
    dw = domain_wall_evolution(random_mc_gate(5), 8, 30)
    assert dw.profiles[0].tolist() == [1.0] * 4 + [-1.0] * 4
    assert dw.transported[0] == 0.0
    assert dw.metadata["magnetization_drift"] < 1e-12
    total = dw.profiles.sum(axis=1)
    assert np.abs(total - total[0]).max() < 1e-12
    static = domain_wall_evolution(identity_gate(), 8, 5)
    assert np.ptp(static.profiles, axis=0).max() < 1e-14
    with pytest.raises(ParameterError):
        domain_wall_evolution(random_mc_gate(1), 7, 5)
    with pytest.raises(CapacityError):
        domain_wall_evolution(random_mc_gate(1), 18, 5)

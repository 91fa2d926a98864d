"""Time reversal: single-gate antiunitary, DM removal, global construction."""

import numpy as np
import pytest
from dataclasses import replace

from mcbrick.core import (
    BrickworkCircuit,
    build_propagator,
    homogeneous_circuit,
    propagator_apply,
)
from mcbrick.errors import TimeReversalRefusal
from mcbrick.gates import (
    HaarGateParams,
    HamiltonianGateParams,
    gate_from_haar,
    gate_from_hamiltonian,
    random_mc_gate,
)
from mcbrick.rmatrix import classify_phase_hamiltonian
from mcbrick.symmetry import (
    closure_defect,
    dm_rotation_gate,
    equivalent_circuit,
    global_time_reversal,
    reversal_residual,
    rotate_out_dm,
    single_gate_time_reversal,
    spectral_match_error,
    time_reversal_report,
)


def disordered_circuit(L, boundary, seed):
    n_even = L // 2 if boundary == "periodic" else L // 2 - 1
    return BrickworkCircuit(
        L,
        [random_mc_gate(seed + j) for j in range(L // 2)],
        [random_mc_gate(seed + 100 + j) for j in range(n_even)],
        boundary,
    )


def test_single_gate_reversal():
    for seed in range(50):
        g = random_mc_gate(seed)
        t1 = single_gate_time_reversal(g)
        assert t1.involution_defect() < 1e-14
        assert reversal_residual(t1, g.matrix) < 1e-12


def test_single_gate_theta_zero_is_plain_conjugation():
    g = gate_from_haar(HaarGateParams(0.3, 0.7, 0.4, 1.1, 0.0))
    t1 = single_gate_time_reversal(g)
    assert np.allclose(t1.diag, 1.0, atol=1e-13)
    assert reversal_residual(t1, g.matrix) < 1e-13


def test_antiunitary_state_action():
    g = random_mc_gate(3)
    t1 = single_gate_time_reversal(g)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    # T(c psi) = conj(c) T(psi)
    assert np.allclose(t1.apply(2j * psi), -2j * t1.apply(psi))
    # matrix() agrees with the diagonal action
    assert np.allclose(t1.matrix() @ np.conj(psi), t1.apply(psi))


def test_rotate_out_dm_matches_conjugation():
    rng = np.random.default_rng(11)
    for _ in range(40):
        tau = rng.uniform(0.05, 1.2)
        de, b, d, m, a = rng.uniform(-1.2, 1.2, size=5)
        p = HamiltonianGateParams(tau=tau, delta=de, B=b, D=d, M=m, A=a)
        p2 = rotate_out_dm(p)
        assert p2.D == 0.0
        assert np.isclose(p2.J, np.hypot(1.0, d))
        w = dm_rotation_gate(p).matrix
        g = gate_from_hamiltonian(p).matrix
        g2 = gate_from_hamiltonian(p2).matrix
        assert np.abs(w @ g @ w.conj().T - g2).max() < 1e-13


def test_rotate_out_dm_general_hopping():
    p = HamiltonianGateParams(tau=0.4, delta=0.6, B=0.1, D=-0.5, M=0.2, A=0.3, J=0.7)
    p2 = rotate_out_dm(p)
    assert np.isclose(p2.J, np.hypot(0.7, 0.5)) and p2.D == 0.0
    w = dm_rotation_gate(p).matrix
    g = gate_from_hamiltonian(p).matrix
    assert np.abs(w @ g @ w.conj().T - gate_from_hamiltonian(p2).matrix).max() < 1e-13


def test_rotate_out_dm_preserves_phase_label():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = HamiltonianGateParams(
            tau=rng.uniform(0.05, 1.5),
            delta=rng.uniform(-2.5, 2.5),
            B=rng.uniform(-1.0, 1.0),
            D=rng.uniform(-1.0, 1.0),
        )
        c1 = classify_phase_hamiltonian(p)
        c2 = classify_phase_hamiltonian(rotate_out_dm(p))
        assert c1.label == c2.label
        if not (c1.singular or c2.singular):
            assert np.isclose(c1.lhs, c2.lhs, rtol=1e-10, atol=1e-12)


def test_equivalent_circuit_preserves_spectrum():
    for boundary in ("open", "periodic"):
        circ = disordered_circuit(8, boundary, seed=40)
        sym = equivalent_circuit(circ)
        u = build_propagator(circ).entries
        ut = build_propagator(sym).entries
        assert spectral_match_error(u, ut) < 1e-10


def test_symmetrized_circuit_state_application():
    circ = disordered_circuit(6, "open", seed=77)
    sym = equivalent_circuit(circ)
    rng = np.random.default_rng(1)
    psi = rng.normal(size=64) + 1j * rng.normal(size=64)
    dense = build_propagator(sym).entries
    assert np.abs(propagator_apply(sym, psi) - dense @ psi).max() < 1e-12


def test_global_reversal_open_chain():
    for seed in (1, 2):
        circ = disordered_circuit(8, "open", seed=300 * seed)
        sym = equivalent_circuit(circ)
        tr = global_time_reversal(sym)
        assert tr.involution_defect() < 1e-13
        ut = build_propagator(sym).entries
        assert reversal_residual(tr, ut) < 1e-11
        # the unsymmetrized period does not reverse: layer order obstructs it
        u = build_propagator(circ).entries
        assert reversal_residual(tr, u) > 1e-3


def test_global_reversal_homogeneous_open():
    p = HamiltonianGateParams(tau=0.43, delta=0.9, B=0.25, D=0.55, M=0.1, A=-0.2)
    circ = homogeneous_circuit(gate_from_hamiltonian(p), 8, "open")
    rep = time_reversal_report(circ)
    assert rep["boundary"] == "open" and rep["L"] == 8
    assert rep["residual_TR"] < 1e-11
    assert rep["spectral_match_error"] < 1e-10
    assert rep["angle_defect"] == 0.0


def test_ring_refusal_carries_defect():
    p = HamiltonianGateParams(tau=0.5, delta=0.8, B=0.2, D=0.6, M=0.0, A=0.1)
    ring = homogeneous_circuit(gate_from_hamiltonian(p), 8, "periodic")
    defect = closure_defect(ring)
    assert abs(defect) > 1e-3
    with pytest.raises(TimeReversalRefusal) as exc:
        global_time_reversal(ring)
    assert np.isclose(exc.value.angle_defect, defect)
    assert abs(exc.value.angle_defect) <= np.pi / 2


def test_fine_tuned_ring_reverses():
    # D = 1 makes the bond angle -pi/4, so eight bonds telescope to -2 pi
    p = HamiltonianGateParams(tau=0.5, delta=0.8, B=0.2, D=1.0, M=0.0, A=0.1)
    ring = homogeneous_circuit(gate_from_hamiltonian(p), 8, "periodic")
    rep = time_reversal_report(ring)
    assert abs(rep["angle_defect"]) < 1e-9
    assert rep["residual_TR"] < 1e-11
    assert rep["spectral_match_error"] < 1e-10


def test_spectral_match_branch_cut():
    eps = 1e-11
    u = np.diag([np.exp(1j * eps), -1.0])
    v = np.diag([np.exp(-1j * eps), -1.0])
    # sorted phases pair across the cut; the assignment fallback repairs it
    assert spectral_match_error(u, v) < 1e-9
    assert spectral_match_error(u, u) == 0.0

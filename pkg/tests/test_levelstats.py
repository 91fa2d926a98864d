"""Eigenphase statistics: spacings, gap ratios, symmetry-resolved blocks."""

import numpy as np
import pytest

from mcbrick.core import BrickworkCircuit, homogeneous_circuit, sector_basis
from mcbrick.errors import CapacityError, ParameterError
from mcbrick.gates import random_mc_gate
from mcbrick.levelstats import (
    R_TILDE_COE,
    R_TILDE_CUE,
    R_TILDE_POISSON,
    chaotic_gate_pair,
    flip_reflection_permutation,
    full_spectrum,
    phase_modded_overlap,
    pooled_r_tilde,
    pooled_ratios,
    reference_curve,
    resolved_spectra,
    sample_coe_phases,
    sample_cue_phases,
    sample_poisson_phases,
    scaled_spacings,
    sector_spectrum,
    spacetime_pair,
    spacing_histogram,
    spacing_ratios,
)


def two_gate_circuit(L, boundary, seed):
    ga, gb = chaotic_gate_pair(seed)
    n_even = L // 2 if boundary == "periodic" else L // 2 - 1
    return BrickworkCircuit(L, [ga] * (L // 2), [gb] * n_even, boundary)


# ---------------------------------------------------------------- spacings


def test_scaled_spacings_unit_mean_and_wrap():
    rng = np.random.default_rng(3)
    ph = rng.uniform(0, 2 * np.pi, 257)
    s = scaled_spacings(ph)
    assert s.size == 257
    assert abs(s.mean() - 1.0) < 1e-12
    assert (s >= 0).all()
    # the wrap gap is included: [eps, 2pi - eps] has one ~full and one ~zero gap
    s2 = scaled_spacings(np.array([1e-3, 2 * np.pi - 1e-3]))
    assert abs(s2.sum() - 2.0) < 1e-12
    assert s2.min() < 1e-3 < 1.9 < s2.max()


def test_spacing_ratios_range_and_degenerate():
    ph = np.sort(np.random.default_rng(5).uniform(0, 2 * np.pi, 100))
    r = spacing_ratios(ph)
    assert r.size == 100
    assert ((r >= 0) & (r <= 1)).all()
    # exactly equidistant phases: all ratios 1
    assert np.allclose(spacing_ratios(np.linspace(0, 2 * np.pi, 16, endpoint=False)), 1.0)
    assert spacing_ratios(np.array([0.3])).size == 0


# ------------------------------------------------------- reference samplers


def test_poisson_reference_value():
    sets = [sample_poisson_phases(128, seed=s) for s in range(120)]
    r = np.concatenate([spacing_ratios(p) for p in sets]).mean()
    assert abs(r - R_TILDE_POISSON) < 0.006


def test_cue_reference_value():
    sets = sample_cue_phases(96, 40, seed=1)
    r = pooled_ratios(sets).mean()
    assert abs(r - R_TILDE_CUE) < 0.008


def test_coe_reference_value():
    sets = sample_coe_phases(96, 40, seed=2)
    r = pooled_ratios(sets).mean()
    assert abs(r - R_TILDE_COE) < 0.008


def test_histogram_identifies_its_own_class():
    cue = np.concatenate(sample_cue_phases(96, 30, seed=3))
    # pooled spacings per matrix, then one histogram
    from mcbrick.levelstats import pooled_spacings

    h = spacing_histogram(pooled_spacings(sample_cue_phases(96, 30, seed=3)))
    assert h.closest_reference() == "cue"
    assert not h.few_phases
    hp = spacing_histogram(pooled_spacings([sample_poisson_phases(400, seed=4)]))
    assert hp.closest_reference() == "poisson"
    small = spacing_histogram(np.ones(10))
    assert small.few_phases


def test_reference_curves_normalized():
    s = np.linspace(0, 30, 20001)
    for name in ("poisson", "coe", "cue"):
        dens = reference_curve(name, s)
        assert abs(np.trapezoid(dens, s) - 1.0) < 1e-6
    with pytest.raises(ParameterError):
        reference_curve("gue", s)


# ------------------------------------------------------------ sector blocks


def test_sector_spectrum_dimensions_and_pooling():
    ring = homogeneous_circuit(random_mc_gate(5), 8, "periodic")
    dims = 0
    for m in range(-8, 9, 2):
        for k in range(4):
            dims += sector_spectrum(ring, m, k).dim
    assert dims == 2**8
    with pytest.raises(ParameterError):
        sector_spectrum(homogeneous_circuit(random_mc_gate(5), 8, "open"), 0, k=1)


def test_flip_reflection_permutation_is_involution():
    for L in (2, 4, 6):
        perm = flip_reflection_permutation(L)
        assert (perm[perm] == np.arange(1 << L)).all()
        # spin flip of the reflected word: all-ones maps to zero
        assert perm[(1 << L) - 1] == 0


def test_resolved_spectra_block_structure():
    ring = homogeneous_circuit(random_mc_gate(5), 8, "periodic")
    # m=0, k=0: flip parity and both K branches -> four blocks
    res = resolved_spectra(ring, 0, 0)
    kinds = sorted(r.sector_key() for r in res)
    assert len(res) == 4
    assert all(".f" in key and ".st" in key for key in kinds)
    assert sum(r.dim for r in res) == sector_basis(8, 0, 0).dim
    assert "flip-reflection-parity" in res[0].metadata["resolved"]
    assert "spacetime-branch" in res[0].metadata["resolved"]
    # self-conjugate k = L/4 has theta2 = pi: branch exchange, two blocks
    res2 = resolved_spectra(ring, 0, 2)
    assert len(res2) == 2
    assert all(r.flip_parity is None for r in res2)
    # m != 0: no flip parity (the operation leaves the sector)
    res3 = resolved_spectra(ring, 2, 1)
    assert len(res3) == 2
    assert all(r.flip_parity is None for r in res3)


def test_resolved_spectra_union_matches_plain_block():
    ring = homogeneous_circuit(random_mc_gate(7), 8, "periodic")
    plain = sector_spectrum(ring, 0, 1)
    split = resolved_spectra(ring, 0, 1)
    ph = np.sort(np.concatenate([r.eigenphases for r in split]))
    assert np.abs(ph - plain.eigenphases).max() < 1e-10

    obc = homogeneous_circuit(random_mc_gate(7), 8, "open")
    plain = sector_spectrum(obc, 0)
    split = resolved_spectra(obc, 0)
    assert {r.sector_key() for r in split} == {"m+0.f+", "m+0.f-"}
    ph = np.sort(np.concatenate([r.eigenphases for r in split]))
    assert np.abs(ph - plain.eigenphases).max() < 1e-10


def test_resolved_spectra_mirror_sectors_degenerate():
    ring = homogeneous_circuit(random_mc_gate(11), 8, "periodic")
    a = sector_spectrum(ring, 2, 1).eigenphases
    b = sector_spectrum(ring, -2, 3).eigenphases  # k -> -k mod L/2
    assert np.abs(np.sort(a) - np.sort(b)).max() < 1e-10


def test_spacetime_pair_covers_block():
    ring = homogeneous_circuit(random_mc_gate(9), 8, "periodic")
    r0, r1 = spacetime_pair(ring, 0, 1)
    assert r0.spacetime_block == 0 and r1.spacetime_block == 1
    assert r0.dim + r1.dim == sector_basis(8, 0, 1).dim
    assert "spacetime_construction" in r0.metadata


def test_spacetime_needs_homogeneous_ring():
    circ = two_gate_circuit(8, "periodic", seed=1)
    with pytest.raises(ParameterError):
        sector_spectrum(circ, 0, 1, spacetime=True)
    # resolved_spectra silently skips refinements that do not apply
    res = resolved_spectra(circ, 0, 1)
    assert len(res) == 1
    assert res[0].metadata["resolved"] == ["magnetization", "momentum"]


def test_sector_capacity_guard():
    ring = homogeneous_circuit(random_mc_gate(3), 16, "periodic")
    with pytest.raises(CapacityError):
        sector_spectrum(ring, 0)


# ------------------------------------------------- statistics of circuits


def test_homogeneous_ring_poisson_like():
    ring = homogeneous_circuit(random_mc_gate(23), 12, "periodic")
    blocks = []
    for m in range(-12, 13, 2):
        for k in range(6):
            blocks.extend(resolved_spectra(ring, m, k))
    usable = [b for b in blocks if b.dim >= 2]
    # no residual exact degeneracies once fully resolved
    tiny = sum(int(np.sum(b.spacings * (2 * np.pi) / b.dim < 1e-10)) for b in usable)
    assert tiny == 0
    r = pooled_r_tilde(usable)
    assert abs(r - R_TILDE_POISSON) < 0.02


def test_unresolved_spectrum_reads_below_poisson():
    # merging symmetry sectors piles up uncorrelated spectra: the gap-ratio
    # mean collapses toward zero, a sharp negative control for resolution
    ring = homogeneous_circuit(random_mc_gate(23), 8, "periodic")
    merged = full_spectrum(ring)
    assert merged.r_tilde < R_TILDE_POISSON - 0.05
    resolved = []
    for m in range(-8, 9, 2):
        for k in range(4):
            resolved.extend(resolved_spectra(ring, m, k))
    r = pooled_r_tilde([b for b in resolved if b.dim >= 2])
    assert r > merged.r_tilde + 0.04


def test_two_gate_obc_beats_merged_and_sits_near_coe():
    circ = two_gate_circuit(12, "open", seed=424_200)
    blocks = [sector_spectrum(circ, m) for m in (0, 2, -2)]
    r = pooled_r_tilde(blocks)
    assert 0.49 < r < 0.56


def test_chaotic_gate_pair_deterministic_and_screened():
    ga, gb = chaotic_gate_pair(424_200)
    ga2, gb2 = chaotic_gate_pair(424_200)
    assert np.array_equal(ga.matrix, ga2.matrix)
    assert np.array_equal(gb.matrix, gb2.matrix)
    assert phase_modded_overlap(ga, gb) <= 0.8
    for g in (ga, gb):
        assert 0.55 <= abs(g.matrix[1, 2]) ** 2 <= 0.75
    # a gate against its own phase twist is flagged as near-equivalent
    from mcbrick.gates import TwoQubitGate, magnetization_phase_gate

    twisted = TwoQubitGate(magnetization_phase_gate(0.7) @ ga.matrix)
    assert phase_modded_overlap(ga, twisted) > 0.999

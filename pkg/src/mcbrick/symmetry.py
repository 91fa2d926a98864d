"""Antiunitary time reversal for brickwork circuits of MC gates.

Every magnetization-conserving two-qubit gate is antiunitarily equivalent
to its adjoint.  With theta the central-block angle the Haar-form
extraction returns (the phase of the lower off-diagonal entry once the
block determinant phase is removed), the diagonal rotation

    W(theta) = diag(1, e^{-i theta}, e^{+i theta}, 1)

satisfies W conj(g) W^dag = g^dag, so T1 = W(theta) K reverses the gate,
where K is complex conjugation in the computational basis.  For theta = 0
this is plain conjugation.

A full brickwork period resists a direct global statement because the two
layers do not commute, but symmetrizing the period into the three-layer
form sqrt(odd) . even . sqrt(odd) (a similarity transform, so the
spectrum is unchanged) restores it: a product of single-site z rotations
whose accumulated angles drop by the local bond angle theta_j across each
bond (j, j+1) yields an antiunitary T with T U~ T^{-1} = U~^dag on open
chains.  On a ring the site angles must close around the loop, which
requires the bond angle sum to vanish mod pi; a shift by pi only flips
the overall sign of the rotation product, so pi, not 2 pi, is the true
period of the obstruction.  Generic rings fail the condition and the
measured defect is raised through TimeReversalRefusal.

The same single-bond z rotation removes the antisymmetric (DM) part of a
gate generator: rotating by half of atan2(-D, J) maps the couplings
(J, D) to (sqrt(J^2 + D^2), 0) and leaves the other terms alone.
"""

import numpy as np
from dataclasses import dataclass, replace

from .core import BrickworkCircuit
from .errors import ParameterError, TimeReversalRefusal
from .gates import (
    TwoQubitGate,
    gate_sqrt,
    haar_params_from_gate,
    hamiltonian_params_from_gate,
)

__all__ = [
    "AntiUnitary",
    "SymmetrizedCircuit",
    "single_gate_time_reversal",
    "reversal_residual",
    "dm_rotation_angle",
    "dm_rotation_gate",
    "rotate_out_dm",
    "equivalent_circuit",
    "closure_defect",
    "global_time_reversal",
    "spectral_match_error",
    "time_reversal_report",
]


@dataclass
class AntiUnitary:
    """T = W K with W a diagonal unitary, stored as its diagonal."""

    diag: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.diag = np.asarray(self.diag, dtype=complex).reshape(-1)

    @property
    def dim(self):
        return self.diag.size

    def matrix(self):
        """Dense unitary part W."""
        return np.diag(self.diag)

    def apply(self, state):
        """T|psi> = W conj(|psi>)."""
        return self.diag * np.conj(np.asarray(state, dtype=complex).reshape(-1))

    def conjugate_operator(self, op):
        """T A T^{-1} = W conj(A) W^dag."""
        a = np.asarray(op.entries if hasattr(op, "entries") else op, dtype=complex)
        return self.diag[:, None] * a.conj() * self.diag.conj()[None, :]

    def involution_defect(self):
        """max |T^2 - 1| = max |W conj(W) - 1|; zero for pure phases."""
        return np.abs(self.diag * self.diag.conj() - 1.0).max()


def _w_pair(theta):
    return np.array([1.0, np.exp(-1j * theta), np.exp(1j * theta), 1.0])


def single_gate_time_reversal(gate):
    """Antiunitary T1 with T1 g T1^{-1} = g^dag for one MC gate."""
    theta = haar_params_from_gate(gate).params.theta_v
    return AntiUnitary(_w_pair(theta), label=f"W(theta={theta:.6g}) K")


def reversal_residual(tr, op):
    """max-entry size of T A T^{-1} - A^dag."""
    a = np.asarray(op.entries if hasattr(op, "entries") else op, dtype=complex)
    return float(np.abs(tr.conjugate_operator(a) - a.conj().T).max())


def dm_rotation_angle(params):
    """Half-angle of the z rotation that cancels the DM coupling."""
    return 0.5 * np.arctan2(-params.D, params.J)


def dm_rotation_gate(params):
    """The two-qubit z rotation W implementing rotate_out_dm by conjugation."""
    return TwoQubitGate(
        np.diag(_w_pair(dm_rotation_angle(params))), provenance="dm-rotation"
    )


def rotate_out_dm(params):
    """Generator parameters after rotating the DM term away.

    W g(params) W^dag equals the gate generated by the returned parameters,
    which have D = 0 and the hopping promoted to sqrt(J^2 + D^2).
    """
    return replace(params, J=float(np.hypot(params.J, params.D)), D=0.0)


@dataclass
class SymmetrizedCircuit:
    """Three-layer period sqrt(odd) . even . sqrt(odd).

    Duck-compatible with BrickworkCircuit where only L, boundary and
    layer_pairs() are consumed (propagator_apply, build_propagator).
    """

    L: int
    gates_half: list
    gates_even: list
    boundary: str = "open"

    def __post_init__(self):
        if self.L % 2 or self.L < 2:
            raise ParameterError("L must be even and >= 2")
        if self.boundary not in ("open", "periodic"):
            raise ParameterError(f"unknown boundary {self.boundary!r}")
        n_even = self.L // 2 if self.boundary == "periodic" else self.L // 2 - 1
        if len(self.gates_half) != self.L // 2 or len(self.gates_even) != n_even:
            raise ParameterError("gate counts do not match L and boundary")

    def bonds_odd(self):
        return [(2 * j, 2 * j + 1) for j in range(self.L // 2)]

    def bonds_even(self):
        bonds = [(2 * j + 1, 2 * j + 2) for j in range(self.L // 2 - 1)]
        if self.boundary == "periodic":
            bonds.append((self.L - 1, 0))
        return bonds

    def layer_pairs(self):
        """(gate matrix, bond) for one period, in application order."""
        halves = list(zip(self.gates_half, self.bonds_odd()))
        evens = list(zip(self.gates_even, self.bonds_even()))
        return halves + evens + halves


def equivalent_circuit(circuit):
    """Symmetrize one period into sqrt(odd) . even . sqrt(odd).

    The result is sqrt(O) U sqrt(O)^{-1}, a similarity transform of the
    period U = E O, so eigenphases are preserved.  Odd gates must admit
    the Hamiltonian form (a nonzero hopping rotation) for their MC square
    roots to be defined.
    """
    halves = [gate_sqrt(hamiltonian_params_from_gate(g)) for g in circuit.gates_odd]
    return SymmetrizedCircuit(
        circuit.L, halves, list(circuit.gates_even), circuit.boundary
    )


def _bond_angles(sym):
    """Central-block angle of the gate sitting on each bond (j, j+1)."""
    theta = {}
    for gate, (a, _b) in sym.layer_pairs():
        if a not in theta:
            theta[a] = haar_params_from_gate(gate).params.theta_v
    n_bonds = sym.L if sym.boundary == "periodic" else sym.L - 1
    return np.array([theta[j] for j in range(n_bonds)])


def closure_defect(circuit):
    """Loop defect of the site angles, reduced mod pi into [-pi/2, pi/2).

    Zero for open chains by construction.  On a ring the telescoped bond
    angles must return to the start; the defect is the reduced total bond
    angle, and time reversal exists only when it vanishes.
    """
    sym = circuit if isinstance(circuit, SymmetrizedCircuit) else equivalent_circuit(circuit)
    if sym.boundary != "periodic":
        return 0.0
    total = float(_bond_angles(sym).sum())
    return (total + np.pi / 2) % np.pi - np.pi / 2


def global_time_reversal(circuit, tol=1e-9):
    """Antiunitary T with T U~ T^{-1} = U~^dag for the symmetrized period.

    Site j carries the accumulated angle a_j = -sum_{k<j} theta_k with
    a_0 = 0 (the overall rotation phase is immaterial, so the first site
    is gauge-fixed to zero), and W acts as exp(i sum_j a_j sz_j).  For a
    periodic circuit the construction exists only when closure_defect
    vanishes; otherwise TimeReversalRefusal carries the measured defect.
    """
    sym = circuit if isinstance(circuit, SymmetrizedCircuit) else equivalent_circuit(circuit)
    if sym.boundary == "periodic":
        defect = closure_defect(sym)
        if abs(defect) > tol:
            raise TimeReversalRefusal(
                f"bond angles do not close around the ring "
                f"(defect {defect:.6g} mod pi)",
                angle_defect=defect,
            )
    thetas = _bond_angles(sym)
    a_site = np.concatenate([[0.0], np.cumsum(-thetas[: sym.L - 1])])
    n = np.arange(1 << sym.L)
    z = 2 * ((n[:, None] >> (sym.L - 1 - np.arange(sym.L))[None, :]) & 1) - 1
    return AntiUnitary(np.exp(1j * (z @ a_site)), label=f"global W K, L={sym.L}")


def spectral_match_error(u, v):
    """Largest distance between the eigenvalue multisets of two unitaries.

    Sorted-eigenphase comparison first; if that misaligns (phases piling
    near the branch cut), fall back to an optimal assignment.
    """
    a = np.asarray(u.entries if hasattr(u, "entries") else u, dtype=complex)
    b = np.asarray(v.entries if hasattr(v, "entries") else v, dtype=complex)
    ea = np.linalg.eigvals(a)
    eb = np.linalg.eigvals(b)
    ea = ea[np.argsort(np.angle(ea) % (2 * np.pi))]
    eb = eb[np.argsort(np.angle(eb) % (2 * np.pi))]
    err = float(np.abs(ea - eb).max())
    if err < 1e-8:
        return err
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(ea[:, None] - eb[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(min(err, cost[rows, cols].max()))


def time_reversal_report(circuit):
    """Summary of the global time-reversal test for one circuit.

    Builds the symmetrized period densely, so the full-dense L cap
    applies.  Raises TimeReversalRefusal for rings with nonzero defect.
    """
    from .core import build_propagator

    sym = equivalent_circuit(circuit)
    tr = global_time_reversal(sym)
    u = build_propagator(circuit).entries
    ut = build_propagator(sym).entries
    return {
        "boundary": circuit.boundary,
        "L": circuit.L,
        "residual_TR": reversal_residual(tr, ut),
        "spectral_match_error": spectral_match_error(u, ut),
        "angle_defect": closure_defect(sym),
    }

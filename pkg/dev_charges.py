"""Dev verification for charges.py (not part of the package)."""
import numpy as np
import time

from mcbrick.core import (
    build_propagator,
    homogeneous_circuit,
    translation_permutation,
    commutator_defect,
)
from mcbrick.gates import sample_haar
from mcbrick.rmatrix import (
    RMatrixParams,
    haar_to_r,
    gate_from_r,
    r_matrix,
    r_matrix_derivative,
)
from mcbrick.charges import (
    TransferMatrixSpec,
    transfer_matrix,
    propagator_from_transfer,
    r_matrix_second_derivative,
    charge_q1,
    charge_q1_closed_form,
    higher_charge,
    pauli_string_window_projection,
    _transfer_family,
    _traceless,
)

rng = np.random.default_rng(7)

print("== 1. second derivative vs finite differences ==")
for phase, rho in (("I", 0.7), ("II", 0.45)):
    p = RMatrixParams(beta=0.3, xi=0.8, theta=1.1, rho=rho, u=0.6, phase=phase)
    for x in (0.31, -0.52, 0.9):
        h = 1e-5
        fd = (r_matrix_derivative(p, x + h) - r_matrix_derivative(p, x - h)) / (2 * h)
        an = r_matrix_second_derivative(p, x)
        print(f"  phase {phase} x={x:+.2f}: |d2R_an - d2R_fd| = {np.abs(an - fd).max():.3e}")

print("== 2. propagator identity at L=4 and L=8 ==")
for phase, rho in (("I", 0.7), ("II", 0.45)):
    p = RMatrixParams(beta=0.3, xi=0.8, theta=1.1, rho=rho, u=0.6, phase=phase)
    for L in (4, 8):
        circ = homogeneous_circuit(gate_from_r(p), L, boundary="periodic")
        u_brick = build_propagator(circ).entries
        u_tm = propagator_from_transfer(p, L).entries
        print(f"  phase {phase} L={L}: |U_tm - U_brick| = {np.abs(u_tm - u_brick).max():.3e}")

print("== 3. transfer matrices commute ==")
p = RMatrixParams(beta=0.3, xi=0.8, theta=1.1, rho=0.7, u=0.6, phase="I")
(t1,) = _transfer_family(p, 0.23, 8, order=0)
(t2,) = _transfer_family(p, -0.41, 8, order=0)
print(f"  |[T(x),T(y)]| = {np.abs(t1 @ t2 - t2 @ t1).max():.3e}")

print("== 4. charges: cell vs log-derivative vs closed form, conservation ==")
for phase, rho, u in (("I", 0.7, 0.6), ("II", 0.45, 0.8)):
    p = RMatrixParams(beta=0.3, xi=0.8, theta=1.1, rho=rho, u=u, phase=phase)
    L = 8
    circ = homogeneous_circuit(gate_from_r(p), L, boundary="periodic")
    u_full = build_propagator(circ).entries
    for sign in ("+", "-"):
        qcell = charge_q1(p, sign, L)
        g = higher_charge(p, 1, sign, L)
        qcf = charge_q1_closed_form(p, sign, L)
        dcell = np.abs(qcell.matrix - g.matrix).max()
        # measure the constant relating closed form and cell construction
        num = np.vdot(qcell.matrix, qcf.matrix)
        den = np.vdot(qcell.matrix, qcell.matrix)
        ratio = num / den
        resid = np.abs(qcf.matrix - ratio * qcell.matrix).max()
        cons = commutator_defect(qcell.matrix, u_full, L)
        scale = np.abs(qcell.matrix).max()
        print(
            f"  phase {phase} Q1{sign}: |cell-G|={dcell:.3e} scale={scale:.3f} "
            f"[Q,U]={cons:.3e} cf_ratio={ratio:.6f} cf_resid={resid:.3e}"
        )
    t0 = time.time()
    L10 = 10
    circ10 = homogeneous_circuit(gate_from_r(p), L10, boundary="periodic")
    u10 = build_propagator(circ10).entries
    for sign in ("+", "-"):
        q2 = higher_charge(p, 2, sign, L10)
        cons2 = commutator_defect(q2.matrix, u10, L10)
        q1 = higher_charge(p, 1, sign, L10)
        cross = commutator_defect(q2.matrix, q1.matrix, L10)
        w1, r1 = pauli_string_window_projection(q1.matrix, L10, 3)
        w2, r2 = pauli_string_window_projection(q2.matrix, L10, 5)
        print(
            f"  phase {phase} Q2{sign} (L=10): [Q2,U]={cons2:.3e} [Q2,Q1]={cross:.3e} "
            f"support3(Q1) resid={r1:.3e}/{w1:.3f} support5(Q2) resid={r2:.3e}/{w2:.3f}"
        )
    print(f"  (Q2 block took {time.time()-t0:.1f}s)")

print("== 5. two-site shift invariance ==")
p = RMatrixParams(beta=0.3, xi=0.8, theta=1.1, rho=0.7, u=0.6, phase="I")
L = 8
perm = translation_permutation(L, sites=2)
q = charge_q1(p, "+", L).matrix
qs = q[np.ix_(perm, perm)]
print(f"  |S2 Q S2^-1 - Q| = {np.abs(qs - q).max():.3e}")

print("== 6. haar-sampled gates through the full pipeline ==")
from mcbrick.errors import CriticalManifoldError
n_ok = 0
for k in range(6):
    hp = sample_haar(1000 + k)
    try:
        p = haar_to_r(hp)
    except CriticalManifoldError:
        continue
    if p.degenerate:
        continue
    L = 8
    circ = homogeneous_circuit(gate_from_r(p), L, boundary="periodic")
    u_full = build_propagator(circ).entries
    q = charge_q1(p, "+", L)
    g = higher_charge(p, 1, "+", L)
    c1 = commutator_defect(q.matrix, u_full, L)
    d1 = np.abs(q.matrix - g.matrix).max()
    print(f"  seed {1000+k}: phase {p.phase} [Q1,U]={c1:.3e} |cell-G|={d1:.3e}")
    n_ok += 1
print(f"  ({n_ok} non-degenerate gates checked)")

"""Dev checks for the symmetry module: pin sign conventions numerically."""
import numpy as np
from dataclasses import replace

from mcbrick.core import BrickworkCircuit, build_propagator, homogeneous_circuit
from mcbrick.gates import (
    HamiltonianGateParams,
    gate_from_hamiltonian,
    gate_sqrt,
    haar_params_from_gate,
    hamiltonian_params_from_gate,
    random_mc_gate,
)

rng = np.random.default_rng(7)


def wpair(theta):
    return np.diag([1.0, np.exp(-1j * theta), np.exp(1j * theta), 1.0]).astype(complex)


# ---- 1. single-gate time reversal sign ------------------------------------
print("== single gate ==")
worst = {+1: 0.0, -1: 0.0}
for trial in range(200):
    g = random_mc_gate(int(rng.integers(1 << 30))).matrix
    th = haar_params_from_gate(g).params.theta_v
    for s in (+1, -1):
        w = wpair(s * th)
        r = np.abs(w @ g.conj() @ w.conj().T - g.conj().T).max()
        worst[s] = max(worst[s], r)
print("residual with W=diag(1,e^{-i s th},e^{+i s th},1):  s=+1:", worst[+1], " s=-1:", worst[-1])

# ---- 2. DM rotation sign ---------------------------------------------------
print("== DM rotation ==")
for s in (+1, -1):
    worst_dm = 0.0
    for trial in range(100):
        tau, de, b, d, m, a = rng.uniform(-1.2, 1.2, size=6)
        tau = abs(tau) + 0.05
        p = HamiltonianGateParams(tau=tau, delta=de, B=b, D=d, M=m, A=a)
        g = gate_from_hamiltonian(p).matrix
        thd = 0.5 * np.arctan2(s * d, 1.0)
        w = wpair(thd)
        p2 = replace(p, J=np.hypot(1.0, d), D=0.0)
        g2 = gate_from_hamiltonian(p2).matrix
        worst_dm = max(worst_dm, np.abs(w @ g @ w.conj().T - g2).max())
    print(f"  theta_dm = 0.5*atan2({s:+d}*D, J): worst resid {worst_dm:.3e}")

# ---- 3. global TR on symmetrized OBC circuit -------------------------------
print("== global, disordered OBC L=8 ==")
L = 8


def symmetrized_pairs(circ):
    halves = []
    for g in circ.gates_odd:
        halves.append(gate_sqrt(hamiltonian_params_from_gate(g.matrix)))
    bonds_o = circ.bonds_odd()
    bonds_e = circ.bonds_even()
    pairs = [(h.matrix, b) for h, b in zip(halves, bonds_o)]
    pairs += [(g.matrix, b) for g, b in zip(circ.gates_even, bonds_e)]
    pairs += [(h.matrix, b) for h, b in zip(halves, bonds_o)]
    return pairs


def dense_from_pairs(pairs, L):
    from mcbrick.core import _left_multiply  # dev only

    mat = np.eye(1 << L, dtype=complex)
    for g, (a, b) in pairs:
        mat = _left_multiply(g, mat, a, b, L)
    return mat


def bond_thetas(pairs, L, boundary):
    # one gate per bond; bond j = (j, j+1); take theta from the gate placed there
    th = {}
    for g, (a, b) in pairs:
        j = a if (b - a) % L == 1 else b
        th[a] = haar_params_from_gate(g).params.theta_v
    nb = L if boundary == "periodic" else L - 1
    return [th[j] for j in range(nb)]


def diag_w(angles_sites, L, s):
    n = np.arange(1 << L)
    bits = (n[:, None] >> (L - 1 - np.arange(L))[None, :]) & 1
    z = 2 * bits - 1
    return np.exp(1j * s * (z @ np.asarray(angles_sites)))


gates_o = [random_mc_gate(100 + j) for j in range(L // 2)]
gates_e = [random_mc_gate(200 + j) for j in range(L // 2 - 1)]
circ = BrickworkCircuit(L, gates_o, gates_e, "open")
pairs = symmetrized_pairs(circ)
ut = dense_from_pairs(pairs, L)
u = build_propagator(circ).entries
print("  spectra match (sorted eigphase cmp):", end=" ")
ev_u = np.sort(np.angle(np.linalg.eigvals(u)) % (2 * np.pi))
ev_t = np.sort(np.angle(np.linalg.eigvals(ut)) % (2 * np.pi))
print(np.abs(np.exp(1j * ev_u) - np.exp(1j * ev_t)).max())

ths = bond_thetas(pairs, L, "open")
for sacc in (+1, -1):
    a_site = np.concatenate([[0.0], np.cumsum([sacc * t for t in ths])])
    for sw in (+1, -1):
        wd = diag_w(a_site, L, sw)
        r = np.abs(wd[:, None] * ut.conj() * wd.conj()[None, :] - ut.conj().T).max()
        print(f"  accum s={sacc:+d}, W sign={sw:+d}: resid {r:.3e}")

# ---- 4. PBC: is the closure condition mod pi or mod 2pi? -------------------
print("== PBC closure ==")
from scipy.optimize import brentq


def total_theta(dval, L):
    p = HamiltonianGateParams(tau=0.5, delta=0.8, B=0.2, D=dval, M=0.0, A=0.1)
    g = gate_from_hamiltonian(p)
    circ = homogeneous_circuit(g, L, "periodic")
    pairs = symmetrized_pairs(circ)
    return sum(bond_thetas(pairs, L, "periodic")), circ, pairs


L = 8
for target in (0.0, np.pi):
    f = lambda d: ((total_theta(d, L)[0] - target + np.pi) % (2 * np.pi)) - np.pi
    # scan for a bracket
    ds = np.linspace(0.05, 1.6, 40)
    vals = [f(d) for d in ds]
    root = None
    for i in range(len(ds) - 1):
        if vals[i] * vals[i + 1] < 0 and abs(vals[i]) < 1.0:
            root = brentq(f, ds[i], ds[i + 1], xtol=1e-14)
            break
    if root is None:
        print(f"  target {target:.3f}: no bracket found, skipping")
        continue
    tot, circ, pairs = total_theta(root, L)
    ut = dense_from_pairs(pairs, L)
    ths = bond_thetas(pairs, L, "periodic")
    a_site = np.concatenate([[0.0], np.cumsum([-t for t in ths[:-1]])])
    wd = diag_w(a_site, L, +1)
    r = np.abs(wd[:, None] * ut.conj() * wd.conj()[None, :] - ut.conj().T).max()
    print(f"  D={root:.6f}  sum(theta) mod 2pi = {tot % (2 * np.pi):.6f}  resid {r:.3e}")

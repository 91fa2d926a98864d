"""Dev: find the discrete convention mapping the appendix density onto the
cell-built charge. Knobs: sign row s, DM sign, window reversal, center parity."""
import numpy as np
from itertools import product

from mcbrick.core import embed_operator
from mcbrick.rmatrix import RMatrixParams
from mcbrick.charges import charge_q1, _traceless, _H_XX, _H_DM, _SZ, _ID2, _three_site

def kernel_variant(p, s, dm, rev):
    if p.phase == "I":
        cu, su, s2u = np.cos(p.u), np.sin(p.u), np.sin(2 * p.u)
        chr_, shr = np.cosh(p.rho), np.sinh(p.rho)
        pref = 1.0 / (2j * (np.cos(2 * p.u) - np.cosh(2 * p.rho)))
    else:
        cu, su, s2u = np.cosh(p.u), 1j * np.sinh(p.u), 1j * np.sinh(2 * p.u)
        chr_, shr = np.cos(p.rho), 1j * np.sin(p.rho)
        pref = 1.0 / (2j * (np.cosh(2 * p.u) - np.cos(2 * p.rho)))
    cothr = chr_ / shr
    xu, th = p.xi * p.u, p.theta
    H_DM = dm * _H_DM
    zz = np.kron(_SZ, _SZ)
    k = np.zeros((8, 8), dtype=complex)
    k += 2.0 * cu * shr * (
        np.cos(th + s * xu) * _three_site(_H_XX, "01")
        + np.cos(th - s * xu) * _three_site(_H_XX, "12")
        - np.sin(th + s * xu) * _three_site(H_DM, "01")
        - np.sin(th - s * xu) * _three_site(H_DM, "12")
        - (chr_ / cu) * (_three_site(zz, "01") + _three_site(zz, "12"))
    )
    k -= 2.0 * su * su * cothr * (
        np.cos(2 * th) * _three_site(_H_XX, "02")
        - np.sin(2 * th) * _three_site(H_DM, "02")
        + _three_site(zz, "02")
    )
    sz2 = np.kron(np.eye(4, dtype=complex), _SZ)
    sz1 = np.kron(np.kron(_ID2, _SZ), _ID2)
    sz0 = np.kron(_SZ, np.eye(4, dtype=complex))
    k -= s * 2.0 * su * chr_ * (
        np.sin(th + s * xu) * _three_site(_H_XX, "01")
        + np.cos(th + s * xu) * _three_site(H_DM, "01")
    ) @ sz2
    k -= s * s2u * (
        np.sin(2 * th) * _three_site(_H_XX, "02")
        + np.cos(2 * th) * _three_site(H_DM, "02")
    ) @ sz1
    k -= s * 2.0 * su * chr_ * (
        np.sin(th - s * xu) * _three_site(_H_XX, "12")
        + np.cos(th - s * xu) * _three_site(H_DM, "12")
    ) @ sz0
    k = pref * k
    if rev:
        # reverse the window: site 0 <-> site 2
        permidx = [int(f"{i:03b}"[::-1], 2) for i in range(8)]
        k = k[np.ix_(permidx, permidx)]
    return k

L = 8
for phase, rho, u in (("I", 0.7, 0.6), ("II", 0.45, 0.8)):
    p = RMatrixParams(beta=0.3, xi=0.8, theta=1.1, rho=rho, u=u, phase=phase)
    cells = {sg: charge_q1(p, sg, L).matrix for sg in "+-"}
    print(f"phase {phase}:")
    for s, dm, rev, cpar in product((+1, -1), (+1, -1), (False, True), (0, 1)):
        ker = kernel_variant(p, s, dm, rev)
        total = np.zeros((1 << L, 1 << L), dtype=complex)
        for m in range(L // 2):
            c = (2 * m + cpar) % L
            total += embed_operator(ker, ((c - 1) % L, c, (c + 1) % L), L)
        total = _traceless(total)
        for sg in "+-":
            cell = cells[sg]
            ratio = np.vdot(cell, total) / np.vdot(cell, cell)
            resid = np.abs(total - ratio * cell).max()
            if resid < 1e-8:
                print(
                    f"  MATCH s={s:+d} dm={dm:+d} rev={rev} cpar={cpar} -> Q1{sg}"
                    f" ratio={ratio:.9f} resid={resid:.2e}"
                )

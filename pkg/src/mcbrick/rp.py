"""Ruelle-Pollicott spectra: the one-step propagator on few-site operators.

Heisenberg evolution of a homogeneous brickwall circuit is restricted to
the space of operators supported on at most r consecutive sites, organized
into translation classes with momentum k (shifts act by two sites, one
unit cell).  Operators are expanded in normalized strings over
{1, z, +, -}; a class representative is a length-r string whose first
letter is not the identity, starting on an even or an odd site.  One
brickwall step spreads support by at most two sites toward one side and
one toward the other (which side depends on the alignment of the support
edges with the gate layers), so every matrix element

    [T(k)]_{q',q} = sum_{j in {-1,0,1}} e^{-ikj} <S^{2j} q' | Uq>

is an exact finite computation on a window of r+5 sites; shifts beyond
|j| = 1 vanish identically because a representative keeps a non-identity
letter pinned near its first site.  T(k) is the compression of a unitary
channel, so its spectral radius never exceeds 1; eigenvalues strictly
inside the unit circle are the Ruelle-Pollicott resonances, and unit
eigenvalues at k = 0 are densities of conserved charges.  Gate charge
(raising minus lowering letters) is conserved, so T is block diagonal
over operator charge, which is also the main performance lever.

k is a free real parameter of the translation class, not a lattice
momentum of any finite ring.
"""

import numpy as np
from dataclasses import dataclass, field
from itertools import product

import scipy.linalg

from .charges import higher_charge, q1_kernels
from .errors import CapacityError, ParameterError, RefusalError, SymmetryError
from .gates import haar_params_from_gate
from .rmatrix import haar_to_r

__all__ = [
    "LETTERS",
    "LocalOperatorSpace",
    "TruncatedPropagator",
    "RPMode",
    "RPSpectrum",
    "build_basis",
    "charge_of_string",
    "string_tensor",
    "heisenberg_step",
    "truncated_propagator",
    "rp_spectrum",
    "unit_multiplicity",
    "conserved_density_vectors",
    "gap_scaling",
    "GapFit",
]

R_MAX = 6
BLOCK_DIM_MAX = 8192
MIXING_TOL = 1e-12
RADIUS_TOL = 1e-10
UNIT_TOL = 1e-8
CHARGE_OVERLAP_MIN = 0.99

LETTERS = "1zpm"
_SQRT2 = np.sqrt(2.0)
# single-site basis, orthonormal under tr(a^dag b)/2; bit 1 = sz +1
_SITE_OPS = {
    "1": np.eye(2, dtype=complex),
    "z": np.diag([-1.0, 1.0]).astype(complex),
    "p": _SQRT2 * np.array([[0, 0], [1, 0]], dtype=complex),
    "m": _SQRT2 * np.array([[0, 1], [0, 0]], dtype=complex),
}
_LETTER_CHARGE = {"1": 0, "z": 0, "p": 1, "m": -1}


def charge_of_string(label):
    """Raising minus lowering letter count."""
    return sum(_LETTER_CHARGE[ch] for ch in label)


@dataclass(frozen=True)
class LocalOperatorSpace:
    """Ordered string basis of one (support, parity, charge) class."""

    r: int
    parity: str
    charge_block: int
    basis: tuple

    @property
    def dim(self):
        return len(self.basis)


def _all_strings(r):
    return ["".join(t) for t in product(LETTERS, repeat=r) if t[0] != "1"]


def build_basis(r, parity, charge_block):
    """Translation-class representatives: length-r strings over {1,z,+,-}
    with a non-identity first letter and the requested charge."""
    if not 1 <= r <= R_MAX:
        raise CapacityError(f"support must satisfy 1 <= r <= {R_MAX}, got {r}")
    if parity not in ("even", "odd"):
        raise ParameterError(f"parity must be 'even' or 'odd', got {parity!r}")
    labels = tuple(s for s in _all_strings(r) if charge_of_string(s) == charge_block)
    return LocalOperatorSpace(r, parity, charge_block, labels)


def _gate_matrix(gate):
    m = gate.matrix if hasattr(gate, "matrix") else np.asarray(gate, dtype=complex)
    if m.shape != (4, 4):
        raise ParameterError("two-qubit gate must be a 4x4 matrix")
    return m


def _conjugation_superop(gate):
    """16x16 matrix of q -> g^dag q g in the normalized two-site string basis."""
    g = _gate_matrix(gate)
    basis = [
        np.kron(_SITE_OPS[a], _SITE_OPS[b]) for a in LETTERS for b in LETTERS
    ]
    out = np.empty((16, 16), dtype=complex)
    for b_idx, pb in enumerate(basis):
        evolved = g.conj().T @ pb @ g
        for a_idx, pa in enumerate(basis):
            out[a_idx, b_idx] = np.trace(pa.conj().T @ evolved) / 4.0
    return out


def _apply_pair(superop, flat, i, w):
    """Contract a 16x16 superoperator into axes (i, i+1) of string tensors.

    flat: (4**w, n) coefficient columns, C-ordered site axes.
    """
    lead = 4**i
    rest = flat.size // (lead * 16)
    m = flat.reshape(lead, 16, rest)
    return np.matmul(superop[None, :, :], m).reshape(flat.shape)


def _one_step(flat, w, window_parity, superop):
    """U^dag q U for string-coefficient columns on a w-site window.

    window_parity: lattice parity of window site 0.  Layer-one gates start
    on even lattice sites and are applied to states first, so conjugation
    applies the layer-two superoperators first.
    """
    first = [i for i in range(w - 1) if (i + window_parity) % 2 == 0]
    second = [i for i in range(w - 1) if (i + window_parity) % 2 == 1]
    out = flat
    for i in second:
        out = _apply_pair(superop, out, i, w)
    for i in first:
        out = _apply_pair(superop, out, i, w)
    return out


def _support_range(coeffs, w):
    """First and last window site carrying non-identity weight, or None."""
    t = np.abs(coeffs).reshape((4,) * w)
    occupied = []
    for i in range(w):
        m = np.moveaxis(t, i, 0)
        occupied.append(m[1:].sum() > 1e-14)
    idx = [i for i, o in enumerate(occupied) if o]
    if not idx:
        return None
    return idx[0], idx[-1]


def string_tensor(label, position, w):
    """Embed a string with its first letter at window site `position`."""
    if position < 0 or position + len(label) > w:
        raise ParameterError("string does not fit in the window")
    t = np.zeros((4,) * w, dtype=complex)
    idx = [0] * w
    for i, ch in enumerate(label):
        idx[position + i] = LETTERS.index(ch)
    t[tuple(idx)] = 1.0
    return t


def heisenberg_step(q, gate, window):
    """One brickwall step U^dag q U of a window operator, exactly.

    q: string coefficients, shape (4,)*w.  window: lattice position of
    window site 0; its parity aligns the two gate layers.  The operator
    must leave enough identity margin for its one-step light cone: two
    sites on a side where the outermost letter touches a layer-two gate
    from outside (even lattice site on the left edge, odd on the right),
    one site otherwise.  Too little margin raises ParameterError.
    """
    t = np.asarray(q, dtype=complex)
    w = t.ndim
    if t.shape != (4,) * w or w < 2:
        raise ParameterError("operator must have shape (4,)*w with w >= 2")
    span = _support_range(t, w)
    if span is not None:
        left, right = span
        need_left = 2 if (window + left) % 2 == 0 else 1
        need_right = 2 if (window + right) % 2 == 1 else 1
        if left < need_left or (w - 1 - right) < need_right:
            raise ParameterError(
                "window cannot contain the one-step light cone: need "
                f"{need_left} free sites left and {need_right} right of the "
                "support for this alignment"
            )
    superop = _conjugation_superop(gate)
    flat = t.reshape(-1, 1)
    out = _one_step(flat, w, window % 2, superop)
    return out.reshape((4,) * w)


@dataclass
class TruncatedPropagator:
    """Charge-blocked matrices of the r-local propagator at momentum k.

    labels[c] lists (parity, string) row/column labels of blocks[c]; all
    even-start representatives come first.  mixing_defect is the largest
    matrix element between different charge blocks (exactly conserved,
    so this is a numerical-noise figure).
    """

    k: float
    r: int
    blocks: dict
    labels: dict
    mixing_defect: float
    metadata: dict = field(default_factory=dict)

    def spectral_radius(self):
        return max(
            (np.abs(np.linalg.eigvals(b)).max() for b in self.blocks.values() if b.size),
            default=0.0,
        )

    def block_of(self, charge):
        return self.blocks[charge]


def truncated_propagator(gate, r, k):
    """Build T(k) on all charge blocks of the r-local string classes.

    Columns are conjugated on an (r+5)-site window (lattice sites -2 to
    r+2), which contains the one-step light cone of both parities and all
    row placements for shifts j in {-1, 0, 1}; elements with |j| > 1
    vanish identically, so the shift sum is exact.
    """
    if not 1 <= r <= R_MAX:
        raise CapacityError(f"support must satisfy 1 <= r <= {R_MAX}, got {r}")
    w = r + 5
    strings = _all_strings(r)
    charges = sorted({charge_of_string(s) for s in strings})
    by_charge = {c: [s for s in strings if charge_of_string(s) == c] for c in charges}
    labels = {
        c: [("even", s) for s in by_charge[c]] + [("odd", s) for s in by_charge[c]]
        for c in charges
    }
    if max(len(v) for v in labels.values()) > BLOCK_DIM_MAX:
        raise CapacityError(f"largest charge block exceeds {BLOCK_DIM_MAX}")

    # flat window index of a string placed with its first letter at `pos`
    digit_weight = 4 ** np.arange(w - 1, -1, -1)
    letter_index = {ch: i for i, ch in enumerate(LETTERS)}

    def flat_index(label, pos):
        return int(
            sum(digit_weight[pos + i] * letter_index[ch] for i, ch in enumerate(label))
        )

    # row gathering: string index within a 4^r extraction slice
    slice_weight = 4 ** np.arange(r - 1, -1, -1)

    def slice_index(label):
        return int(sum(slice_weight[i] * letter_index[ch] for i, ch in enumerate(label)))

    row_idx = {c: np.array([slice_index(s) for s in by_charge[c]]) for c in charges}
    # all representative slots and their charges, for leakage monitoring
    rep_charge = np.full(4**r, 99, dtype=int)
    for s in strings:
        rep_charge[slice_index(s)] = charge_of_string(s)

    superop = _conjugation_superop(gate)
    phases = {j: np.exp(-1j * k * j) for j in (-1, 0, 1)}
    blocks = {c: np.zeros((len(labels[c]), len(labels[c])), dtype=complex) for c in charges}
    mixing = 0.0

    chunk = max(1, int(2.0e8 / (16 * 4**w)))
    for c in charges:
        cols = labels[c]
        n_even = len(by_charge[c])
        for lo in range(0, len(cols), chunk):
            batch = cols[lo : lo + chunk]
            flat = np.zeros((4**w, len(batch)), dtype=complex)
            for jcol, (parity, label) in enumerate(batch):
                flat[flat_index(label, 2 + (parity == "odd")), jcol] = 1.0
            flat = _one_step(flat, w, 0, superop)
            for j in (-1, 0, 1):
                for p_row, base in (("even", 2), ("odd", 3)):
                    a = base + 2 * j
                    sl = flat.reshape(
                        (4**a, 4**r, 4 ** (w - a - r), len(batch))
                    )[0, :, 0, :]
                    rows = sl[row_idx[c]]
                    off = 0 if p_row == "even" else n_even
                    blocks[c][off : off + len(by_charge[c]), lo : lo + len(batch)] += (
                        phases[j] * rows
                    )
                    other = (rep_charge != c) & (rep_charge != 99)
                    if other.any():
                        mixing = max(mixing, float(np.abs(sl[other]).max()))

    if mixing > MIXING_TOL:
        raise SymmetryError(
            "propagator mixes operator-charge blocks", residual=mixing
        )
    tp = TruncatedPropagator(
        k=float(k),
        r=r,
        blocks=blocks,
        labels=labels,
        mixing_defect=mixing,
        metadata={"window_sites": w, "gate": getattr(gate, "provenance", "")},
    )
    radius = tp.spectral_radius()
    if radius > 1.0 + RADIUS_TOL:
        raise SymmetryError(
            "truncated propagator exceeds unit spectral radius",
            residual=float(radius - 1.0),
        )
    tp.metadata["spectral_radius"] = float(radius)
    return tp


@dataclass
class RPMode:
    eigenvalue: complex
    charge_block: int
    right: np.ndarray
    left: np.ndarray
    charge_overlap: object = None


@dataclass
class RPSpectrum:
    k: float
    r: int
    eps_keep: float
    modes: list
    block_dims: dict

    def eigenvalues(self):
        return np.array([m.eigenvalue for m in self.modes])


def rp_spectrum(tp, eps_keep=0.25, conserved=None):
    """Leading spectrum of the truncated propagator, per charge block.

    Keeps eigenvalues with |lambda| > 1 - eps_keep together with left and
    right eigenvectors.  If `conserved` maps charge blocks to column
    stacks of conserved-density vectors, each kept mode also records the
    norm of its right eigenvector's projection onto that span.
    """
    if any(len(v) > BLOCK_DIM_MAX for v in tp.labels.values()):
        raise CapacityError(f"block dimension exceeds {BLOCK_DIM_MAX}")
    modes = []
    proj = {}
    if conserved:
        for c, mat in conserved.items():
            q, _ = np.linalg.qr(np.asarray(mat, dtype=complex))
            proj[c] = q
    for c, block in tp.blocks.items():
        if not block.size:
            continue
        vals, vl, vr = scipy.linalg.eig(block, left=True, right=True)
        keep = np.abs(vals) > 1.0 - eps_keep
        for i in np.flatnonzero(keep):
            overlap = None
            if c in proj:
                v = vr[:, i] / np.linalg.norm(vr[:, i])
                overlap = float(np.linalg.norm(proj[c].conj().T @ v))
            modes.append(
                RPMode(
                    eigenvalue=complex(vals[i]),
                    charge_block=c,
                    right=vr[:, i],
                    left=vl[:, i],
                    charge_overlap=overlap,
                )
            )
    modes.sort(key=lambda m: -abs(m.eigenvalue))
    return RPSpectrum(
        k=tp.k,
        r=tp.r,
        eps_keep=float(eps_keep),
        modes=modes,
        block_dims={c: len(v) for c, v in tp.labels.items()},
    )


def unit_multiplicity(tp, tol=UNIT_TOL):
    """Number of eigenvalues within tol of 1 across all blocks."""
    count = 0
    for block in tp.blocks.values():
        if block.size:
            count += int(np.sum(np.abs(np.linalg.eigvals(block) - 1.0) < tol))
    return count


# ----------------------------------------------------- conserved densities


def _kernel_strings(kernel, sites):
    """Normalized-string expansion of a 2^s x 2^s kernel."""
    out = {}
    for letters in product(LETTERS, repeat=sites):
        p = _SITE_OPS[letters[0]]
        for ch in letters[1:]:
            p = np.kron(p, _SITE_OPS[ch])
        coeff = np.trace(p.conj().T @ kernel) / 2**sites
        if abs(coeff) > 1e-14:
            out[letters] = complex(coeff)
    return out


def _fold_kernel(kernel, start_parity, r, index):
    """Map a local density at a given start parity to basis coefficients.

    Components whose leading letters are the identity are the same
    translation class seen from a shifted start; they fold onto the
    representative with the parity of their first non-identity site.
    """
    vec = np.zeros(len(index), dtype=complex)
    for letters, coeff in _kernel_strings(kernel, 3).items():
        t = next(i for i, ch in enumerate(letters) if ch != "1")
        label = "".join(letters[t:]) + "1" * (r - (len(letters) - t))
        parity = "even" if (start_parity + t) % 2 == 0 else "odd"
        vec[index[(parity, label)]] += coeff
    return vec


def _ring_rep_coefficient(qmat, label, anchor, L):
    """tr(rep^dag Q)/2^L with the string placed at sites anchor..anchor+r-1."""
    idx = np.arange(1 << L)
    phase = np.ones(1 << L, dtype=complex)
    ok = np.ones(1 << L, dtype=bool)
    flip = 0
    for t, ch in enumerate(label):
        bitpos = L - 1 - (anchor + t)
        bit = (idx >> bitpos) & 1
        if ch == "z":
            phase = phase * np.where(bit == 1, 1.0, -1.0)
        elif ch == "p":
            ok &= bit == 0
            flip |= 1 << bitpos
            phase = phase * _SQRT2
        elif ch == "m":
            ok &= bit == 1
            flip |= 1 << bitpos
            phase = phase * _SQRT2
    rows = idx[ok] ^ flip
    return complex(np.sum(np.conj(phase[ok]) * qmat[rows, idx[ok]]) / 2**L)


def conserved_density_vectors(gate, r):
    """Charge-0 basis vectors of the densities conserved at k = 0.

    Magnetization always; for r >= 3 the first charge pair from the
    integrable structure of the gate; for r >= 5 the second pair,
    extracted from the dense construction on a 10-site ring.  Columns are
    normalized; ordering matches truncated_propagator labels.
    """
    zero = [s for s in _all_strings(r) if charge_of_string(s) == 0]
    labels = [("even", s) for s in zero] + [("odd", s) for s in zero]
    index = {lab: i for i, lab in enumerate(labels)}
    cols = []
    mag = np.zeros(len(labels), dtype=complex)
    mag[index[("even", "z" + "1" * (r - 1))]] = 1.0
    mag[index[("odd", "z" + "1" * (r - 1))]] = 1.0
    cols.append(mag)
    if r >= 3:
        # degenerate gates hit 0/0 in the map; NaN columns are dropped below
        with np.errstate(invalid="ignore"):
            p = haar_to_r(haar_params_from_gate(gate).params)
            k_plus, k_minus = q1_kernels(p)
        cols.append(_fold_kernel(k_plus, 1, r, index))
        cols.append(_fold_kernel(k_minus, 0, r, index))
        if r >= 5:
            L = 10
            for sign in ("+", "-"):
                family = higher_charge(p, 2, sign, L)
                vec = np.zeros(len(labels), dtype=complex)
                for i, (parity, label) in enumerate(labels):
                    anchor = 0 if parity == "even" else 1
                    vec[i] = _ring_rep_coefficient(family.matrix, label, anchor, L)
                cols.append(vec)
    mat = np.column_stack(cols)
    norms = np.linalg.norm(mat, axis=0)
    # degenerate gates (identity-like map points) have no usable kernel
    good = np.isfinite(norms) & (norms > 1e-10)
    return {0: mat[:, good] / norms[good]}


# ------------------------------------------------------------- gap fits


@dataclass
class GapFit:
    """Decay of the leading non-conserved eigenvalue with support size."""

    k: float
    model: str
    r_values: tuple
    gaps: dict
    lambda2: dict
    c: float = None
    rate: float = None
    intercept: float = None
    slope: float = None


def _lambda2(tp, conserved):
    """Largest-modulus eigenvalue outside the conserved eigenspace."""
    proj = {}
    for c, mat in (conserved or {}).items():
        q, _ = np.linalg.qr(np.asarray(mat, dtype=complex))
        proj[c] = q
    best = 0.0 + 0.0j
    for c, block in tp.blocks.items():
        if not block.size:
            continue
        vals, vecs = np.linalg.eig(block)
        for i, lam in enumerate(vals):
            if abs(lam - 1.0) < UNIT_TOL and c in proj:
                v = vecs[:, i] / np.linalg.norm(vecs[:, i])
                if np.linalg.norm(proj[c].conj().T @ v) > CHARGE_OVERLAP_MIN:
                    continue
            if abs(lam) > abs(best):
                best = lam
    return complex(best)


def gap_scaling(gate, k, r_list):
    """Fit 1 - |lambda_2| against support size r.

    k = 0 uses the exponential model log(1-|lambda2|) = log c - rate * r;
    other k fit the gap linearly in r.  Conserved unit eigenvalues are
    excluded by the overlap rule in _lambda2.  Fits need at least two
    distinct supports and a nonzero gap everywhere, otherwise refused.
    """
    r_values = tuple(sorted(set(int(r) for r in r_list)))
    if any(not 3 <= r <= R_MAX for r in r_values):
        raise ParameterError(f"supports must lie in 3..{R_MAX}, got {r_values}")
    if len(r_values) < 2:
        raise RefusalError("gap fit needs at least two distinct supports")
    gaps, lam2 = {}, {}
    for r in r_values:
        tp = truncated_propagator(gate, r, k)
        conserved = conserved_density_vectors(gate, r) if abs(k) < 1e-12 else None
        lam = _lambda2(tp, conserved)
        gap = 1.0 - abs(lam)
        if gap < 1e-12:
            raise RefusalError(
                f"no decaying mode at r={r}: every leading eigenvalue is conserved"
            )
        gaps[r] = float(gap)
        lam2[r] = lam
    rs = np.array(r_values, dtype=float)
    ys = np.array([gaps[r] for r in r_values])
    if abs(k) < 1e-12:
        slope, intercept = np.polyfit(rs, np.log(ys), 1)
        return GapFit(
            k=float(k),
            model="exponential",
            r_values=r_values,
            gaps=gaps,
            lambda2=lam2,
            c=float(np.exp(intercept)),
            rate=float(-slope),
        )
    slope, intercept = np.polyfit(rs, ys, 1)
    return GapFit(
        k=float(k),
        model="linear",
        r_values=r_values,
        gaps=gaps,
        lambda2=lam2,
        intercept=float(intercept),
        slope=float(slope),
    )

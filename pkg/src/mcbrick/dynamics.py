"""Infinite-temperature correlators and polarized-state evolution.

Autocorrelations tr(A(t) A)/2^L of diagonal observables are computed
either exactly (per magnetization sector, from the Schur form of the
sector propagator, so the cost of 200 time steps is one diagonalization)
or by typicality, averaging <v|A(t)A|v> over normalized Gaussian random
vectors evolved matrix-free.  State evolution (domain walls) is always
matrix-free Schrodinger propagation.
"""

import numpy as np
from dataclasses import dataclass, field

import scipy.linalg

from .core import (
    FULL_DENSE_MAX_L,
    build_propagator,
    homogeneous_circuit,
    magnetization_of,
    propagator_apply,
)
from .errors import CapacityError, ParameterError

__all__ = [
    "CorrelationSeries",
    "DecayFitComparison",
    "DomainWallResult",
    "boundary_autocorrelation",
    "staggered_correlation",
    "domain_wall_evolution",
    "decay_fits",
]

TYPICALITY_MAX_L = 14
DOMAIN_WALL_MAX_L = 16
TYPICALITY_SAMPLES = 20
FIT_FLOOR = 1e-14


@dataclass
class CorrelationSeries:
    """Correlation values at integer circuit steps.

    estimator_error is the per-point sample standard error and is only
    set by the typicality estimator.
    """

    times: np.ndarray
    values: np.ndarray
    method: str
    estimator_error: np.ndarray = None
    metadata: dict = field(default_factory=dict)


@dataclass
class DecayFitComparison:
    """Least-squares fits of log|C| against log t (power) and t (exponential)."""

    t_min: float
    t_max: float
    n_points: int
    power_exponent: float
    power_sse: float
    exp_rate: float
    exp_sse: float
    sse_ratio: float


@dataclass
class DomainWallResult:
    times: np.ndarray
    profiles: np.ndarray  # (steps+1, L) site-resolved <sigma^z_j(t)>
    transported: np.ndarray  # flips moved into the initially-down half
    metadata: dict = field(default_factory=dict)


def _sz_diagonal(L, site):
    """Diagonal of sigma^z at `site` (site 0 is the leftmost/most significant bit)."""
    bits = (np.arange(1 << L) >> (L - 1 - site)) & 1
    return np.where(bits == 1, 1.0, -1.0)


def _staggered_diagonal(L):
    """Diagonal of sum_j (-1)^j (sigma^z on both sites of cell j)."""
    a = np.zeros(1 << L)
    for cell in range(L // 2):
        sign = -1.0 if cell % 2 == 0 else 1.0
        a += sign * (_sz_diagonal(L, 2 * cell) + _sz_diagonal(L, 2 * cell + 1))
    return a


def _exact_autocorrelation(U, a, L, steps, m_values=None):
    """Normalized tr(U^-t A U^t A) for diagonal A over magnetization sectors.

    Each unitary sector block is brought to Schur (here: diagonal) form
    once; the time series is then a running phase-product sum over the
    |<alpha|A|beta>|^2 weights.  m_values selects sectors (by number of
    up spins); the default is all of them, i.e. the full trace, and the
    normalization is always the summed sector dimension.
    """
    occ = (magnetization_of(np.arange(1 << L), L) + L) // 2
    if m_values is None:
        m_values = range(L + 1)
    vals = np.zeros(steps + 1)
    dim = 0
    for m in m_values:
        idx = np.flatnonzero(occ == m)
        dim += len(idx)
        t_form, q = scipy.linalg.schur(U[np.ix_(idx, idx)], output="complex")
        lam = np.diag(t_form).copy()
        lam /= np.abs(lam)
        atil = q.conj().T @ (a[idx, None] * q)
        w = np.abs(atil) ** 2
        e = np.conj(lam)[:, None] * lam[None, :]
        p = np.ones_like(e)
        vals[0] += w.sum()
        for t in range(1, steps + 1):
            p *= e
            vals[t] += float((w * p.real).sum())
    return vals / dim


def _sector_up_count(L, sector):
    """Number of up spins for a total-sigma^z sector value."""
    if (L + sector) % 2 or not 0 <= (L + sector) // 2 <= L:
        raise ParameterError(f"magnetization {sector} impossible for L={L}")
    return (L + sector) // 2


def boundary_autocorrelation(
    gate,
    L,
    steps,
    method="exact-trace",
    seed=None,
    samples=TYPICALITY_SAMPLES,
    sector=None,
):
    """Normalized tr(sigma^z_0(t) sigma^z_0) for the open homogeneous circuit.

    method "exact-trace" needs L within the dense-propagator cap;
    "typicality" estimates the trace from `samples` normalized Gaussian
    vectors (error bar = sample standard error) and reaches L = 14.

    sector restricts the trace to one total-sigma^z sector (and the
    normalization to that sector's dimension).  The full trace carries a
    conserved background sum_m (tr_m sigma^z_0)^2 / (dim_m 2^L) ~ 1/L
    that never decays; in the half-filling sector tr_m sigma^z_0 = 0, so
    the series there decays to zero whenever no zero mode survives.
    """
    base = {"L": L, "boundary": "open", "site": 0, "steps": steps, "sector": sector}
    times = np.arange(steps + 1)
    m_sel = None if sector is None else [_sector_up_count(L, sector)]
    if method == "exact-trace":
        if L > FULL_DENSE_MAX_L:
            raise CapacityError(
                f"exact trace limited to L <= {FULL_DENSE_MAX_L}; use typicality"
            )
        circuit = homogeneous_circuit(gate, L, "open")
        a = _sz_diagonal(L, 0)
        vals = _exact_autocorrelation(
            build_propagator(circuit).entries, a, L, steps, m_sel
        )
        return CorrelationSeries(times, vals, method, None, base)
    if method != "typicality":
        raise ParameterError(f"method must be exact-trace or typicality, got {method!r}")
    if L > TYPICALITY_MAX_L:
        raise CapacityError(f"typicality limited to L <= {TYPICALITY_MAX_L}")
    circuit = homogeneous_circuit(gate, L, "open")
    a = _sz_diagonal(L, 0)
    support = None
    if m_sel is not None:
        occ = (magnetization_of(np.arange(1 << L), L) + L) // 2
        support = np.flatnonzero(occ == m_sel[0])
    rng = np.random.default_rng(seed)
    est = np.empty((samples, steps + 1))
    for s in range(samples):
        if support is None:
            v = rng.normal(size=1 << L) + 1j * rng.normal(size=1 << L)
        else:
            v = np.zeros(1 << L, dtype=complex)
            v[support] = rng.normal(size=len(support)) + 1j * rng.normal(
                size=len(support)
            )
        v /= np.linalg.norm(v)
        w = a * v
        est[s, 0] = np.vdot(v, a * w).real
        for t in range(1, steps + 1):
            v = propagator_apply(circuit, v)
            w = propagator_apply(circuit, w)
            est[s, t] = np.vdot(v, a * w).real
    err = est.std(axis=0, ddof=1) / np.sqrt(samples)
    meta = dict(base, samples=samples, seed=seed)
    return CorrelationSeries(times, est.mean(axis=0), method, err, meta)


def staggered_correlation(gate, L, steps):
    """C(t) = tr(S(t) S)/(L 2^L) on the ring, S the staggered cell magnetization.

    S flips sign under a one-cell shift, so this probes the k = pi sector.
    The series keeps its oscillations; a power-law/exponential fit
    comparison on the window [t_max/20, t_max] is attached as metadata.
    """
    if L % 2:
        raise ParameterError("staggered magnetization needs an even number of sites")
    if L > FULL_DENSE_MAX_L:
        raise CapacityError(f"exact trace limited to L <= {FULL_DENSE_MAX_L}")
    circuit = homogeneous_circuit(gate, L, "periodic")
    a = _staggered_diagonal(L)
    vals = _exact_autocorrelation(build_propagator(circuit).entries, a, L, steps) / L
    times = np.arange(steps + 1)
    meta = {"L": L, "boundary": "periodic", "steps": steps, "oscillations": "retained"}
    series = CorrelationSeries(times, vals, "exact-trace", None, meta)
    if steps >= 20:
        fit = decay_fits(times, vals)
        series.metadata["fit"] = fit.__dict__.copy()
    return series


def decay_fits(times, values, t_min=None, t_max=None):
    """Compare power-law and exponential decay on a time window.

    Both models are linear fits of log|C|: against log t (power law,
    slope = exponent) and against t (exponential, slope = -rate); the
    shared response makes the summed squared residuals comparable.
    Points with |C| below the fit floor are dropped, not clamped.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if t_max is None:
        t_max = float(times.max())
    if t_min is None:
        t_min = t_max / 20.0
    mask = (times >= t_min) & (times <= t_max) & (np.abs(values) > FIT_FLOOR)
    if mask.sum() < 4:
        raise ParameterError("fit window holds fewer than 4 usable points")
    t = times[mask]
    y = np.log(np.abs(values[mask]))
    p_slope, p_int = np.polyfit(np.log(t), y, 1)
    power_sse = float(np.sum((y - (p_slope * np.log(t) + p_int)) ** 2))
    e_slope, e_int = np.polyfit(t, y, 1)
    exp_sse = float(np.sum((y - (e_slope * t + e_int)) ** 2))
    return DecayFitComparison(
        t_min=float(t_min),
        t_max=float(t_max),
        n_points=int(mask.sum()),
        power_exponent=float(p_slope),
        power_sse=power_sse,
        exp_rate=float(-e_slope),
        exp_sse=exp_sse,
        sse_ratio=float(exp_sse / power_sse) if power_sse > 0 else np.inf,
    )


def domain_wall_evolution(gate, L, steps):
    """Evolve |up...up down...down> and track the magnetization profile.

    Returns per-site <sigma^z_j(t)> and the transported magnetization
    (number of flips moved into the initially-down half).  Sector weights
    are monitored; their largest drift is reported in the metadata.
    """
    if L % 2:
        raise ParameterError("domain wall needs an even number of sites")
    if not 2 <= L <= DOMAIN_WALL_MAX_L:
        raise CapacityError(f"state evolution limited to L <= {DOMAIN_WALL_MAX_L}")
    circuit = homogeneous_circuit(gate, L, "open")
    half = L // 2
    psi = np.zeros(1 << L, dtype=complex)
    psi[((1 << half) - 1) << half] = 1.0
    sz = np.array([_sz_diagonal(L, j) for j in range(L)])
    occ = (magnetization_of(np.arange(1 << L), L) + L) // 2
    profiles = np.empty((steps + 1, L))
    weights0 = np.bincount(occ, weights=np.abs(psi) ** 2, minlength=L + 1)
    drift = 0.0
    profiles[0] = sz @ np.abs(psi) ** 2
    for t in range(1, steps + 1):
        psi = propagator_apply(circuit, psi)
        prob = np.abs(psi) ** 2
        profiles[t] = sz @ prob
        w = np.bincount(occ, weights=prob, minlength=L + 1)
        drift = max(drift, float(np.abs(w - weights0).max()))
    transported = 0.5 * (profiles[:, half:] - profiles[0, half:]).sum(axis=1)
    meta = {
        "L": L,
        "boundary": "open",
        "steps": steps,
        "magnetization_drift": drift,
        "interface_bond": (half - 1, half),
    }
    return DomainWallResult(np.arange(steps + 1), profiles, transported, meta)

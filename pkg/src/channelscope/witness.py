"""Divisibility diagnostics along a channel trajectory.

All scanners take a callable ``F: t -> TransferMatrix`` (any
:class:`~channelscope.zoo.Dynamics` qualifies) and a time grid, and return a
:class:`WitnessSeries` with the columns they compute.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize

from .canon import damping_form
from .config import DEFAULT_TOLERANCES
from .errors import ChannelError, NotConverged, SingularIntermediate
from .linalg import (
    gell_mann_basis,
    hmax,
    random_density_matrix,
    random_pure_state,
    random_unitary,
    trace_norm_hermitian,
)
from .representations import (
    TransferMatrix,
    intermediate_map,
    matrix_units_images,
    maximally_entangled,
    transfer_to_choi,
)

TOL = DEFAULT_TOLERANCES
MACHINE_EPS = np.finfo(float).eps


def worker_count():
    try:
        return max(1, int(os.environ.get("CHANNELSCOPE_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class WitnessSeries:
    grid: np.ndarray
    choi_min_eig: np.ndarray = None
    cp_flags: np.ndarray = None
    td_derivative_max: np.ndarray = None
    p_flags: np.ndarray = None
    rates: np.ndarray = None
    trace_D: np.ndarray = None
    hmax_DDT: np.ndarray = None
    failures: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 1 or self.grid.size == 0:
            raise ValueError("grid must be a non-empty 1-d array")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")

    def __len__(self):
        return self.grid.size

    def merge(self, other):
        if other.grid.shape != self.grid.shape or np.any(other.grid != self.grid):
            raise ValueError("cannot merge series on different grids")
        updates = {}
        for name in ("choi_min_eig", "cp_flags", "td_derivative_max", "p_flags",
                     "rates", "trace_D", "hmax_DDT"):
            if getattr(other, name) is not None:
                updates[name] = getattr(other, name)
        out = replace(self, **updates)
        out.failures = self.failures + other.failures
        out.metadata = {**self.metadata, **other.metadata}
        return out


def make_grid(t_min, t_max, points):
    if points < 2 or not t_max > t_min:
        raise ValueError("grid needs t_max > t_min and at least 2 points")
    return np.linspace(float(t_min), float(t_max), int(points))


# ---------------------------------------------------------------- CP scan


def _choi_min_eig_between(F, t, eps, tol):
    Ft = F(t)
    inter, cond = intermediate_map(F(t + eps), Ft, max_condition=tol.condition,
                                   return_condition=True)
    return transfer_to_choi(inter).min_eig(), cond


def cp_divisibility_scan(F, grid, eps=1e-3, tol=TOL):
    """Minimum Choi eigenvalue of ``F(t + eps) F(t)^-1`` along the grid.

    A point is flagged CP-indivisible when the eigenvalue is below
    ``-max(tol.cp * eps, 10 * machine_eps * cond(F(t)))``. The value at
    ``eps/2`` is computed too; a sign disagreement is recorded in
    ``metadata['sign_unstable']``.
    """
    if not 1e-6 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-6, 1e-2]")
    grid = np.asarray(grid, dtype=float)

    def one(t):
        try:
            lo, cond = _choi_min_eig_between(F, t, eps, tol)
            half, _ = _choi_min_eig_between(F, t, eps / 2.0, tol)
        except SingularIntermediate as exc:
            return np.nan, np.nan, np.nan, str(exc)
        thr = max(tol.cp * eps, 10.0 * MACHINE_EPS * cond)
        return lo, half, thr, None

    results = _pmap(one, grid)
    mins = np.array([r[0] for r in results])
    halves = np.array([r[1] for r in results])
    thr = np.array([r[2] for r in results])
    failures = [(float(t), r[3]) for t, r in zip(grid, results) if r[3]]
    flags = np.where(np.isnan(mins), False, mins < -thr)
    half_flags = np.where(np.isnan(halves), False, halves < -thr / 2.0)
    unstable = [float(t) for t, a, b in zip(grid, flags, half_flags) if a != b]
    return WitnessSeries(
        grid,
        choi_min_eig=mins,
        cp_flags=flags,
        failures=failures,
        metadata={"cp_eps": eps, "sign_unstable": unstable},
    )


# ---------------------------------------------------------------- ensembles


@dataclass(frozen=True, eq=False)
class StatePairEnsemble:
    first: np.ndarray  # (n, D, D)
    second: np.ndarray
    policy: str = "custom"

    def __post_init__(self):
        for stack in (self.first, self.second):
            tr = np.einsum("nii->n", stack).real
            if np.max(np.abs(tr - 1.0)) > 1e-10:
                raise ValueError("ensemble members must have unit trace")
            if np.min(np.linalg.eigvalsh(stack)) < -1e-10:
                raise ValueError("ensemble members must be positive")

    def __len__(self):
        return self.first.shape[0]

    @property
    def differences(self):
        return self.first - self.second


def fibonacci_sphere(n):
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = np.pi * (1.0 + np.sqrt(5.0)) * k
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _bloch_state(n):
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]])
    return 0.5 * (np.eye(2) + n[0] * sx + n[1] * sy + n[2] * sz)


def default_ensemble(d, seed=0, n_pure=200, n_mixed=100):
    """Antipodal pure pairs plus random mixed pairs.

    For qubits the pure pairs sit on a Fibonacci lattice of the Bloch
    sphere; for ``d > 2`` they are random orthogonal pure pairs.
    """
    rng = np.random.default_rng(seed)
    first, second = [], []
    if d == 2:
        for n in fibonacci_sphere(n_pure):
            first.append(_bloch_state(n))
            second.append(_bloch_state(-n))
    else:
        for _ in range(n_pure):
            U = random_unitary(d, rng)
            first.append(np.outer(U[:, 0], U[:, 0].conj()))
            second.append(np.outer(U[:, 1], U[:, 1].conj()))
    for _ in range(n_mixed):
        first.append(random_density_matrix(d, rng))
        second.append(random_density_matrix(d, rng))
    return StatePairEnsemble(np.array(first), np.array(second), policy="antipodal+mixed")


# ---------------------------------------------------------------- trace-distance scans


def _derivative_points(t, h, one_sided=False):
    if t - h >= 0.0 and not one_sided:
        return (t - h, t + h), (-1.0 / (2 * h), 1.0 / (2 * h))
    return (t, t + h, t + 2 * h), (-1.5 / h, 2.0 / h, -0.5 / h)


def _td_derivatives(F, diffs_coords, t, h, d):
    basis = gell_mann_basis(d)
    times, weights = _derivative_points(t, h)
    acc = 0.0
    for s, w in zip(times, weights):
        out = basis.matrix(diffs_coords @ F(s).matrix.T)
        acc = acc + w * trace_norm_hermitian(out)
    return acc


def p_divisibility_scan(F, ensemble, grid, h=None, tol=TOL):
    """Largest ensemble derivative of ``||E(t)[rho_1 - rho_2]||_1`` per grid point."""
    grid = np.asarray(grid, dtype=float)
    spacing = np.min(np.diff(grid)) if grid.size > 1 else 1.0
    h = min(1e-4, spacing / 10.0) if h is None else h
    if grid.size > 1 and h > spacing / 10.0 + 1e-15:
        raise ValueError("h must not exceed a tenth of the grid spacing")
    d = ensemble.first.shape[1]
    coords = gell_mann_basis(d).coords(ensemble.differences).real

    def one(t):
        return float(np.max(_td_derivatives(F, coords, t, h, d)))

    vals = np.array(_pmap(one, grid))
    return WitnessSeries(
        grid,
        td_derivative_max=vals,
        p_flags=vals > tol.p,
        metadata={"p_h": h, "ensemble": ensemble.policy, "ensemble_size": len(ensemble)},
    )


def extended_apply(F, rho, d_anc):
    """``(I_anc (x) E)[rho]`` for a stack of states on ``C^d_anc (x) C^d``."""
    d = F.dim
    images = matrix_units_images(F)
    R = np.asarray(rho).reshape(rho.shape[:-2] + (d_anc, d, d_anc, d))
    out = np.einsum("...xayb,abij->...xiyj", R, images)
    return out.reshape(rho.shape)


def fixed_point_pairs(d, d_anc, fixed_point, rng, n=10):
    """Pairs ``(I/d_anc (x) rho_S, I/d_anc (x) fixed_point)``."""
    first, second = [], []
    anc = np.eye(d_anc) / d_anc
    for _ in range(n):
        first.append(np.kron(anc, random_density_matrix(d, rng)))
        second.append(np.kron(anc, fixed_point))
    return np.array(first), np.array(second)


def flag_witness_pair(F_t, d_anc, delta=0.5):
    """Preimage pair that exposes Choi negativity through an extra ancilla level.

    At time ``t`` the evolved states are ``(1 - delta) I/D + delta W_i`` with
    ``W_1`` maximally entangled on the first ``d`` ancilla levels and ``W_2 =
    |d><d| (x) I/d``. Pulling them back through ``I (x) E(t)`` gives initial
    states whose distinguishability grows whenever the intermediate map is
    not CP. ``delta`` is halved until both preimages are positive; returns
    ``None`` if that fails or the ancilla is too small.
    """
    d = F_t.dim
    if d_anc < d + 1:
        return None
    D = d_anc * d
    W1 = np.zeros((D, D), dtype=complex)
    W1[: d * d, : d * d] = maximally_entangled(d)
    flag = np.zeros((d_anc, d_anc))
    flag[d, d] = 1.0
    W2 = np.kron(flag, np.eye(d) / d)
    F_inv = TransferMatrix(np.linalg.inv(F_t.matrix))
    for _ in range(40):
        sig = [(1 - delta) * np.eye(D) / D + delta * W for W in (W1, W2)]
        pre = [extended_apply(F_inv, s, d_anc) for s in sig]
        pre = [0.5 * (p + p.conj().T) for p in pre]
        if all(np.linalg.eigvalsh(p)[0] >= 0.0 for p in pre):
            return pre[0], pre[1]
        delta *= 0.5
    return None


def random_entangled_pairs(d, d_anc, rng, n=200):
    D = d * d_anc
    first = np.array([random_pure_state(D, rng) for _ in range(n)])
    second = np.array([random_pure_state(D, rng) for _ in range(n)])
    return first, second


def _ext_derivative(F, first, second, d_anc, t, h):
    # right derivative: low-rank differences make the norm kink at t itself
    diffs = first - second
    times, weights = _derivative_points(t, h, one_sided=True)
    acc = 0.0
    for s, w in zip(times, weights):
        acc = acc + w * trace_norm_hermitian(extended_apply(F(s), diffs, d_anc))
    return acc


def ancilla_p_scan(F, grid, h=None, d_anc=None, fixed_point=None, seed=0, n_random=200,
                   tol=TOL, compare_standard=True):
    """Trace-distance scan of ``I_anc (x) E(t)`` with an ancilla of size ``d + 1``.

    The ensemble holds random pure entangled pairs, the fixed-point pairs
    ``(I (x) rho_S, I (x) fixed_point)`` when a fixed point is given, and at
    every grid point a flag-embedded preimage pair built from ``F(t)``.
    With ``compare_standard`` the same scan without the flag pair and with
    a ``d``-dimensional ancilla is stored in ``metadata['standard_ancilla']``.
    """
    grid = np.asarray(grid, dtype=float)
    d = F(float(grid[0])).dim
    d_anc = d + 1 if d_anc is None else d_anc
    spacing = np.min(np.diff(grid)) if grid.size > 1 else 1.0
    h = min(1e-4, spacing / 10.0) if h is None else h
    rng = np.random.default_rng(seed)

    def build(da):
        first, second = random_entangled_pairs(d, da, rng, n_random)
        if fixed_point is not None:
            f2, s2 = fixed_point_pairs(d, da, fixed_point, rng)
            first, second = np.concatenate([first, f2]), np.concatenate([second, s2])
        return first, second

    pairs = build(d_anc)
    std_pairs = build(d) if compare_standard else None

    def one(t):
        vals = _ext_derivative(F, *pairs, d_anc, t, h)
        best = float(np.max(vals))
        pair = flag_witness_pair(F(t), d_anc)
        if pair is not None:
            fv = _ext_derivative(F, pair[0][None], pair[1][None], d_anc, t, h)
            best = max(best, float(fv[0]))
        std = None
        if std_pairs is not None:
            std = float(np.max(_ext_derivative(F, *std_pairs, d, t, h)))
        return best, std

    results = _pmap(one, grid)
    vals = np.array([r[0] for r in results])
    meta = {"ancilla_dim": d_anc, "p_h": h, "ensemble_size": len(pairs[0]) + 1}
    if compare_standard:
        meta["standard_ancilla"] = {"ancilla_dim": d, "td_derivative_max": [r[1] for r in results]}
    return WitnessSeries(grid, td_derivative_max=vals, p_flags=vals > tol.p, metadata=meta)


# ---------------------------------------------------------------- damping criteria


def damping_criteria(form):
    """``(Tr D, h_max(D + D^T))`` of a damping form."""
    D = form.D
    return float(np.trace(D)), hmax(D + D.T)


def damping_scan(F, grid, h=1e-3, tol=TOL):
    grid = np.asarray(grid, dtype=float)
    trD, hm, failures = [], [], []
    for t in grid:
        try:
            a, b = damping_criteria(damping_form(F, t, h, tol=tol.step_agreement))
        except ChannelError as exc:
            a = b = np.nan
            failures.append((float(t), str(exc)))
        trD.append(a)
        hm.append(b)
    return WitnessSeries(grid, trace_D=np.array(trD), hmax_DDT=np.array(hm), failures=failures)


def rate_scan(rates_fn, grid):
    grid = np.asarray(grid, dtype=float)
    rows, failures = [], []
    width = None
    for t in grid:
        try:
            r = np.atleast_1d(np.asarray(rates_fn(t), dtype=float))
            width = r.size
        except ChannelError as exc:
            r = None
            failures.append((float(t), str(exc)))
        rows.append(r)
    width = width or 1
    table = np.array([np.full(width, np.nan) if r is None else r for r in rows])
    return WitnessSeries(grid, rates=table, failures=failures)


# ---------------------------------------------------------------- HCLA measure


def _negative_roots(f, a, b, points):
    ts = np.linspace(a, b, points)
    vals = np.array([f(t) for t in ts])
    roots = []
    for i in range(points - 1):
        if vals[i] == 0.0:
            roots.append(ts[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(optimize.brentq(f, ts[i], ts[i + 1], xtol=1e-14, rtol=1e-14))
    return roots


def hcla_measure(rates, t_max, t_min=0.0, points=2001, tol=TOL):
    """``-int sum_j min(gamma_j, 0) dt`` over ``[t_min, t_max]``.

    Sign changes of each rate are located on a sampling grid and polished
    with Brent's method; the integrand is then smooth between consecutive
    roots and each piece goes to adaptive quadrature.
    """
    probe = np.atleast_1d(rates(t_min + 0.5 * (t_max - t_min)))
    k = probe.size
    breaks = {t_min, t_max}
    for j in range(k):
        fj = lambda t, j=j: float(np.atleast_1d(rates(t))[j])  # noqa: E731
        breaks.update(_negative_roots(fj, t_min, t_max, points))
    breaks = sorted(breaks)

    def integrand(t):
        r = np.atleast_1d(rates(t))
        return float(-np.sum(np.minimum(r, 0.0)))

    total, err_total = 0.0, 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a <= 0:
            continue
        val, err = integrate.quad(integrand, a, b, limit=200, epsabs=1e-14, epsrel=1e-12)
        total += val
        err_total += err
    if err_total > max(tol.quadrature * abs(total), 1e-12):
        raise NotConverged(f"HCLA quadrature error estimate {err_total:.3e}")
    return total


# ---------------------------------------------------------------- onset


def onset_detector(series, rate_fn=None, xtol=1e-12):
    """Earliest time at which the CP verdict turns negative.

    Returns ``None`` when no grid point is flagged. With ``rate_fn``
    (``t -> min rate``) the onset is refined between the last unflagged and
    the first flagged grid point by a bracketing root search on the sign of
    the rate.
    """
    if series.cp_flags is None:
        raise ValueError("series has no CP verdicts")
    flagged = np.flatnonzero(series.cp_flags)
    if flagged.size == 0:
        return None
    k = int(flagged[0])
    hi = float(series.grid[k])
    lo = float(series.grid[k - 1]) if k > 0 else 0.0
    if rate_fn is None:
        return hi
    f_lo, f_hi = rate_fn(lo), rate_fn(hi)
    if f_lo <= 0.0:
        return lo
    if f_hi >= 0.0:
        return hi
    return float(optimize.brentq(rate_fn, lo, hi, xtol=xtol, rtol=4 * MACHINE_EPS))


# ---------------------------------------------------------------- combined scan


def full_scan(dynamics, grid, seed=0, tol=TOL, cp_eps=1e-3):
    """Rates, CP and P verdicts and damping criteria on one grid.

    ``failures`` collects every grid point where some column could not be
    computed, keyed by time; ``metadata['failure_fraction']`` is the share
    of grid points affected.
    """
    grid = np.asarray(grid, dtype=float)
    ensemble = default_ensemble(dynamics.dim, seed=seed)
    series = rate_scan(lambda t: dynamics.rates(t, tol=tol.step_agreement), grid)
    series = series.merge(cp_divisibility_scan(dynamics, grid, eps=cp_eps, tol=tol))
    series = series.merge(p_divisibility_scan(dynamics, ensemble, grid, tol=tol))
    series = series.merge(damping_scan(dynamics, grid, tol=tol))
    bad = sorted({t for t, _ in series.failures})
    series.metadata["failure_fraction"] = len(bad) / grid.size
    series.metadata["tolerances"] = tol.as_dict()
    return series

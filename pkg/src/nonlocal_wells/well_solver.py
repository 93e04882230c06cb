"""Bound states of the symmetric square double well and of general 1-D grids.

Units are hbar = m = 1.  The double well has its barrier top at V = 0 on
``|x| < a``, floor at ``-v0`` on ``a < |x| < b`` and hard walls at ``|x| = b``,
so bound states live in ``-v0 < E < 0``.  Inside a well the solution is
``sin(k (b - |x|))`` with ``k = sqrt(2 (E + v0))``; inside the barrier it is
``cosh`` (even) or ``sinh`` (odd) with rate ``kappa = sqrt(-2 E)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import mpmath
import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .serialize import csv_text
from .errors import (
    AmbiguousSegment,
    ConvergenceFailure,
    FitUnavailable,
    GridMismatch,
    InvalidParameters,
    NoBoundState,
    RootBracketFailure,
)

Parity = Literal["even", "odd"]

SCAN_INTERVALS = 2000
DEFAULT_SAMPLES = 2001
ORACLE_POINTS = 20001
RESIDUAL_TOL = 1e-10
# relative splitting below this many ulps of the working precision is reported as degenerate
DEGENERACY_DIGITS_MARGIN = 4


@dataclass(frozen=True)
class DoubleWellSpec:
    a: float
    b: float
    v0: float

    def __post_init__(self):
        if not (0 <= self.a < self.b):
            raise InvalidParameters(f"need 0 <= a < b, got a={self.a}, b={self.b}")
        if not self.v0 > 0:
            raise InvalidParameters(f"need v0 > 0, got {self.v0}")

    @property
    def width(self) -> float:
        return self.b - self.a

    def potential(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return np.where(x < self.a, 0.0, -self.v0)


@dataclass(frozen=True)
class EigenSolution:
    """One bound state sampled on a uniform grid.

    ``samples`` is an ``(N, 2)`` array of ``(x, psi)``.  ``wells`` lists the
    ``(lo, hi)`` support interval of every well, left to right.  Analytic
    states keep their ``spec`` so that ``evaluate`` can reproduce psi anywhere.
    """

    energy: float
    parity: Parity | None
    k_well: float
    kappa: float | None
    samples: np.ndarray
    norm_mid_coefficient: float
    wells: tuple[tuple[float, float], ...]
    residual: float | None = None
    spec: DoubleWellSpec | None = None
    energy_mp: object = field(default=None, repr=False, compare=False)

    @property
    def x(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def psi(self) -> np.ndarray:
        return self.samples[:, 1]

    def evaluate(self, x):
        if self.spec is None:
            return np.interp(x, self.x, self.psi)
        return _analytic_psi(self.spec, self.parity, self.energy, np.asarray(x, dtype=float))

    def to_json(self) -> dict:
        return {
            "energy": self.energy,
            "parity": self.parity,
            "k_well": self.k_well,
            "kappa": self.kappa,
            "samples": self.samples.tolist(),
        }

    def to_csv(self) -> str:
        return csv_text(["x", "psi"], self.samples.tolist())


@dataclass(frozen=True)
class GridProblem:
    x: np.ndarray
    v: np.ndarray
    n_states: int = 1
    wells: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        if x.ndim != 1 or x.shape != v.shape or len(x) < 3:
            raise InvalidParameters("x and v must be 1-D arrays of equal length >= 3")
        dx = np.diff(x)
        if np.any(dx <= 0):
            raise InvalidParameters("grid must be strictly increasing")
        if np.max(np.abs(dx - dx.mean())) > 1e-9 * dx.mean():
            raise InvalidParameters("grid spacing must be uniform")
        if self.n_states < 1:
            raise InvalidParameters("n_states must be >= 1")

    @classmethod
    def from_samples(cls, potential_samples, n_states=1, wells=None) -> GridProblem:
        arr = np.asarray(potential_samples, dtype=float)
        return cls(arr[:, 0], arr[:, 1], n_states, wells)

    @property
    def h(self) -> float:
        return (self.x[-1] - self.x[0]) / (len(self.x) - 1)


@dataclass(frozen=True)
class LocalReferenceState:
    """Bound state of one well with a hard wall at ``b`` and a step of height
    ``v0`` at ``a`` that extends to ``-inf``; sampled in right-well orientation.
    """

    energy: float
    samples: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def psi(self) -> np.ndarray:
        return self.samples[:, 1]


@dataclass(frozen=True)
class SplittingPoint:
    a: float
    delta_e: float | None
    e_even: float
    e_odd: float
    degenerate: bool = False


# ---------------------------------------------------------------------------
# transcendental matching condition


def _sinc(m, x):
    return 1 if x == 0 else m.sin(x) / x


def matching_residual(spec: DoubleWellSpec, parity: Parity, energy, m=math):
    """Dimensionless matching function whose zeros are the bound states.

    It is the continuity condition of psi'/psi at ``|x| = a`` multiplied
    through by ``sin(kL)/k`` so that it has no poles on ``[-v0, 0]``.
    ``m`` is ``math`` or ``mpmath``.
    """
    v0 = spec.v0 if m is math else m.mpf(spec.v0)
    a = spec.a if m is math else m.mpf(spec.a)
    width = spec.width if m is math else m.mpf(spec.b) - m.mpf(spec.a)
    k = m.sqrt(max(2 * (energy + v0), 0))
    kappa = m.sqrt(max(-2 * energy, 0))
    kl = k * width
    t = m.tanh(kappa * a)
    if parity == "even":
        return kappa * width * t * _sinc(m, kl) + m.cos(kl)
    return kappa * width * _sinc(m, kl) + m.cos(kl) * t


def _single_well_residual(spec: DoubleWellSpec, energy, m=math):
    k = m.sqrt(max(2 * (energy + spec.v0), 0))
    kappa = m.sqrt(max(-2 * energy, 0))
    kl = k * spec.width
    return kappa * spec.width * _sinc(m, kl) + m.cos(kl)


def _brackets(f, lo: float, hi: float, n: int):
    es = np.linspace(lo, hi, n + 1)
    vals = [f(float(e)) for e in es]
    out = []
    for i in range(n):
        f0, f1 = vals[i], vals[i + 1]
        if f0 == 0 and 0 < i:
            out.append((es[i], es[i]))
        elif f0 * f1 < 0:
            out.append((es[i], es[i + 1]))
    return out


def _bisect(f, lo, hi, max_iter=400):
    flo = f(lo)
    if flo == 0:
        return lo
    fhi = f(hi)
    if flo * fhi > 0:
        raise RootBracketFailure(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def _bisect_mp(f, lo, hi, dps):
    with mpmath.workdps(dps):
        lo, hi = mpmath.mpf(lo), mpmath.mpf(hi)
        flo, fhi = f(lo), f(hi)
        if flo * fhi > 0:
            raise RootBracketFailure(f"no sign change on [{lo}, {hi}] at {dps} digits")
        tol = mpmath.mpf(10) ** (-dps + 2) * max(abs(lo), abs(hi), 1)
        while hi - lo > tol:
            mid = (lo + hi) / 2
            fm = f(mid)
            if fm == 0:
                return mid
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        return (lo + hi) / 2


def _roots(spec, residual, max_levels, scan_intervals, dps=None):
    found = []
    for lo, hi in _brackets(residual, -spec.v0, 0.0, scan_intervals):
        if dps is None:
            e = lo if lo == hi else _bisect(residual, lo, hi)
            res = abs(residual(e))
            if res > RESIDUAL_TOL:
                raise RootBracketFailure(
                    f"bisection on [{lo}, {hi}] ended with residual {res:.3e}; refine the scan"
                )
            found.append((float(e), float(res), None))
        else:
            mres = lambda e: residual(e, mpmath)  # noqa: E731
            e_mp = _bisect_mp(mres, lo, hi, dps)
            with mpmath.workdps(dps):
                res = float(abs(mres(e_mp)))
            found.append((float(e_mp), res, e_mp))
        if len(found) >= max_levels:
            break
    return found


# ---------------------------------------------------------------------------
# analytic double well


def _sample_grid(b: float, n_points: int) -> np.ndarray:
    x = np.linspace(-b, b, n_points)
    return (x - x[::-1]) / 2


def _analytic_psi(spec: DoubleWellSpec, parity, energy: float, x: np.ndarray) -> np.ndarray:
    coeffs = _analytic_coefficients(spec, parity, energy)
    return _eval_analytic(spec, parity, energy, coeffs, x)


def _analytic_coefficients(spec, parity, energy):
    """Return (well amplitude A, kappa, k) with psi normalised to 1."""
    k = math.sqrt(2 * (energy + spec.v0))
    kappa = math.sqrt(-2 * energy)
    width, a = spec.width, spec.a
    s = math.sin(k * width)
    wells = 2 * (width / 2 - math.sin(2 * k * width) / (4 * k))
    x = kappa * a
    if a == 0:
        mid = 0.0
    elif parity == "even":
        mid = s * s * (a / math.cosh(x) ** 2 + math.tanh(x) / kappa) if x < 350 else s * s / kappa
    elif x < 1:
        mid = s * s * (math.sinh(2 * x) / (2 * kappa) - a) / math.sinh(x) ** 2
    else:
        mid = s * s * (1 / (kappa * math.tanh(x)) - a / math.sinh(x) ** 2) if x < 350 else s * s / kappa
    amp = 1 / math.sqrt(wells + mid)
    return amp, kappa, k


def _eval_analytic(spec, parity, energy, coeffs, x):
    amp, kappa, k = coeffs
    a, b = spec.a, spec.b
    ax = np.abs(x)
    sign = np.where(x < 0, 1.0, -1.0) if parity == "odd" else np.ones_like(x)
    out = np.zeros_like(x, dtype=float)
    in_well = (ax >= a) & (ax <= b)
    out[in_well] = amp * np.sin(k * (b - ax[in_well]))
    mid = ax < a
    if np.any(mid):
        s = amp * math.sin(k * (b - a))
        y = ax[mid]
        grow = np.exp(kappa * (y - a))
        if parity == "even":
            ratio = grow * (1 + np.exp(-2 * kappa * y)) / (1 + math.exp(-2 * kappa * a))
        else:
            ratio = grow * -np.expm1(-2 * kappa * y) / -math.expm1(-2 * kappa * a)
        out[mid] = s * ratio
    return sign * out


def _mid_coefficient(spec, parity, energy, coeffs):
    """Amplitude B of cosh/sinh(kappa x) in the barrier (0 for a = 0)."""
    amp, kappa, k = coeffs
    if spec.a == 0:
        return 0.0
    s = amp * math.sin(k * spec.width)
    x = kappa * spec.a
    if x > 700:
        return 0.0
    return s / (math.cosh(x) if parity == "even" else math.sinh(x))


def _build_solution(spec, parity, energy, residual, n_points, energy_mp=None):
    coeffs = _analytic_coefficients(spec, parity, energy)
    x = _sample_grid(spec.b, n_points)
    psi = _eval_analytic(spec, parity, energy, coeffs, x)
    if spec.a == 0:
        wells = ((-spec.b, 0.0), (0.0, spec.b))
    else:
        wells = ((-spec.b, -spec.a), (spec.a, spec.b))
    return EigenSolution(
        energy=energy,
        parity=parity,
        k_well=coeffs[2],
        kappa=coeffs[1],
        samples=np.column_stack([x, psi]),
        norm_mid_coefficient=_mid_coefficient(spec, parity, energy, coeffs),
        wells=wells,
        residual=residual,
        spec=spec,
        energy_mp=energy_mp,
    )


def solve_parity(
    spec: DoubleWellSpec,
    parity: Parity,
    max_levels: int = 1,
    *,
    n_points: int = DEFAULT_SAMPLES,
    scan_intervals: int = SCAN_INTERVALS,
    dps: int | None = None,
) -> list[EigenSolution]:
    """Lowest ``max_levels`` bound states of one parity, energies ascending.

    Roots are bracketed by scanning ``(-v0, 0)`` on ``scan_intervals`` equal
    subintervals and refined by bisection to full working precision.  With
    ``dps`` the refinement runs in mpmath at that many decimal digits and the
    exact root is kept on ``EigenSolution.energy_mp``.
    """
    if parity not in ("even", "odd"):
        raise InvalidParameters(f"parity must be 'even' or 'odd', got {parity!r}")
    if max_levels < 1:
        raise InvalidParameters("max_levels must be >= 1")
    if n_points < 3 or n_points % 2 == 0:
        raise InvalidParameters("n_points must be odd and >= 3")

    def residual(e, m=math):
        return matching_residual(spec, parity, e, m)

    roots = _roots(spec, residual, max_levels, scan_intervals, dps)
    if not roots:
        raise NoBoundState(f"no {parity} bound state for {spec}")
    return [_build_solution(spec, parity, e, res, n_points, e_mp) for e, res, e_mp in roots]


def solve(spec: DoubleWellSpec, levels: int, **kwargs) -> list[EigenSolution]:
    """Lowest ``levels`` states of either parity, energies ascending."""
    states = []
    for parity in ("even", "odd"):
        try:
            states += solve_parity(spec, parity, levels, **kwargs)
        except NoBoundState:
            pass
    if not states:
        raise NoBoundState(f"no bound state for {spec}")
    states.sort(key=lambda s: s.energy)
    return states[:levels]


def count_bound_states(spec: DoubleWellSpec) -> int:
    total = 0
    for parity in ("even", "odd"):
        try:
            total += len(solve_parity(spec, parity, 10**6, n_points=3))
        except NoBoundState:
            pass
    return total


def local_reference(spec: DoubleWellSpec, level: int = 0, n_points: int = DEFAULT_SAMPLES) -> LocalReferenceState:
    """Single-well reference sampled on the right half of the state grid."""
    roots = _roots(spec, lambda e, m=math: _single_well_residual(spec, e, m), level + 1, SCAN_INTERVALS)
    if len(roots) <= level:
        raise NoBoundState(f"single well has no level {level} for {spec}")
    energy = roots[level][0]
    k = math.sqrt(2 * (energy + spec.v0))
    kappa = math.sqrt(-2 * energy)
    width = spec.width
    s = math.sin(k * width)
    amp = 1 / math.sqrt(width / 2 - math.sin(2 * k * width) / (4 * k) + s * s / (2 * kappa))
    x = _sample_grid(spec.b, n_points)[n_points // 2 :]
    psi = np.where(
        x >= spec.a,
        amp * np.sin(k * (spec.b - x)),
        amp * s * np.exp(kappa * (np.minimum(x, spec.a) - spec.a)),
    )
    return LocalReferenceState(energy, np.column_stack([x, psi]))


# ---------------------------------------------------------------------------
# finite-difference oracle


def _lowest(diag: np.ndarray, off: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    n = min(n, len(diag))
    try:
        return eigh_tridiagonal(diag, off, select="i", select_range=(0, n - 1), lapack_driver="stebz")
    except (LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc


def _is_mirror_symmetric(x: np.ndarray, v: np.ndarray, h: float) -> bool:
    return bool(
        np.all(np.abs(x + x[::-1] - (x[0] + x[-1])) <= 1e-9 * h)
        and np.allclose(v, v[::-1], atol=1e-12 * max(1.0, np.max(np.abs(v))))
    )


def _sector_modes(v: np.ndarray, h: float, n_states: int) -> list[tuple[float, str, np.ndarray]]:
    """Even and odd eigenvectors of a mirror-symmetric grid, solved on the right half.

    Splitting by parity keeps near-degenerate doublets from mixing when their
    splitting is below the eigensolver's roundoff.
    """
    n = len(v)
    t = 0.5 / h**2
    c = n // 2
    modes = []
    if n % 2:
        # even: node c is free; rescaling it by sqrt(2) keeps the matrix symmetric
        diag = 2 * t + v[c : n - 1]
        off = np.full(len(diag) - 1, -t)
        off[0] = -math.sqrt(2) * t
        e, vec = _lowest(diag, off, n_states)
        vec[0] *= math.sqrt(2)
        modes += [(e[i], "even", vec[:, i]) for i in range(len(e))]
        diag = 2 * t + v[c + 1 : n - 1]
        e, vec = _lowest(diag, np.full(len(diag) - 1, -t), n_states)
        modes += [(e[i], "odd", np.concatenate([[0.0], vec[:, i]])) for i in range(len(e))]
    else:
        for parity, shift in (("even", -t), ("odd", t)):
            diag = 2 * t + v[c : n - 1]
            diag[0] += shift
            e, vec = _lowest(diag, np.full(len(diag) - 1, -t), n_states)
            modes += [(e[i], parity, vec[:, i]) for i in range(len(e))]
    modes.sort(key=lambda m: m[0])
    out = []
    for e, parity, half in modes[:n_states]:
        right = np.concatenate([half, [0.0]])
        sign = 1.0 if parity == "even" else -1.0
        if n % 2:
            psi = np.concatenate([sign * right[:0:-1], right])
        else:
            psi = np.concatenate([sign * right[::-1], right])
        out.append((float(e), parity, psi))
    return out


def grid_solve(problem: GridProblem) -> list[EigenSolution]:
    """Lowest eigenpairs of the 3-point finite-difference Hamiltonian.

    The first and last grid points carry Dirichlet zeros; the interior
    ``N - 2`` points are the unknowns.  Mirror-symmetric problems are solved
    sector by sector and carry a parity label.  Eigenvectors are normalised
    with the trapezoid rule and signed so that the left-most significant lobe
    is positive.
    """
    x, v, h = problem.x, problem.v, problem.h
    n_states = problem.n_states
    if n_states > len(x) - 2:
        raise InvalidParameters("n_states exceeds the number of interior points")
    if _is_mirror_symmetric(x, v, h):
        modes = _sector_modes(v, h, n_states)
    else:
        e, vec = _lowest(1.0 / h**2 + v[1:-1], np.full(len(x) - 3, -0.5 / h**2), n_states)
        modes = [(float(e[i]), None, np.concatenate([[0.0], vec[:, i], [0.0]])) for i in range(len(e))]

    wells = problem.wells if problem.wells is not None else detect_wells(x, v)
    v_min = float(np.min(v))
    out = []
    for e, parity, psi in modes:
        psi = psi / math.sqrt(np.trapezoid(psi**2, x))
        lead = np.flatnonzero(np.abs(psi) > 1e-3 * np.max(np.abs(psi)))[0]
        if psi[lead] < 0:
            psi = -psi
        out.append(
            EigenSolution(
                energy=e,
                parity=parity,
                k_well=math.sqrt(max(2 * (e - v_min), 0.0)),
                kappa=math.sqrt(-2 * e) if e < 0 else None,
                samples=np.column_stack([x, psi]),
                norm_mid_coefficient=float("nan"),
                wells=wells,
            )
        )
    return out


def detect_wells(x: np.ndarray, v: np.ndarray) -> tuple[tuple[float, float], ...]:
    """Maximal runs where V lies below the midpoint of its range."""
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi == lo:
        return ((float(x[0]), float(x[-1])),)
    inside = v < (lo + hi) / 2
    edges = np.flatnonzero(np.diff(inside.astype(int)))
    starts = [0] if inside[0] else []
    stops = []
    for e in edges:
        if inside[e + 1]:
            starts.append(e + 1)
        else:
            stops.append(e)
    if inside[-1]:
        stops.append(len(x) - 1)
    return tuple((float(x[s]), float(x[t])) for s, t in zip(starts, stops))


def _aligned_points(spec: DoubleWellSpec, min_points: int, search: int = 20000) -> tuple[int, bool]:
    """Smallest odd N >= min_points whose grid on [-b, b] has a node at x = a."""
    n0 = min_points + (min_points % 2 == 0)
    for n in range(n0, n0 + 2 * search, 2):
        pos = spec.a * (n - 1) / (2 * spec.b)
        if abs(pos - round(pos)) < 1e-9 * max(1.0, pos):
            return n, True
    return n0, False


def double_well_grid(spec: DoubleWellSpec, n_states: int, min_points: int = ORACLE_POINTS, n_points=None) -> GridProblem:
    """Grid problem on ``[-b, b]`` with cell-averaged potential.

    Unless ``n_points`` is forced the grid is sized so that the steps at
    ``|x| = a`` fall on nodes, where the averaged value is ``-v0 / 2``.
    """
    if n_points is None:
        n_points, _ = _aligned_points(spec, min_points)
    x = _sample_grid(spec.b, n_points)
    h = 2 * spec.b / (n_points - 1)
    # exact cell average over [x - h/2, x + h/2]
    barrier = np.clip(np.minimum(x + h / 2, spec.a) - np.maximum(x - h / 2, -spec.a), 0.0, h)
    v = -spec.v0 * (1 - barrier / h)
    return GridProblem(x, v, n_states, ((-spec.b, -spec.a), (spec.a, spec.b)))


def oracle_energies(
    spec: DoubleWellSpec,
    n_states: int,
    min_points: int = ORACLE_POINTS,
    extrapolate: bool = True,
) -> np.ndarray:
    """Finite-difference energies, Richardson-extrapolated from h and h/2.

    Both grids have at least ``min_points`` points and, when possible, nodes
    on the potential steps so that the error is a clean series in h^2.
    """
    coarse = double_well_grid(spec, n_states, min_points)
    e_h = np.array([s.energy for s in grid_solve(coarse)])
    if not extrapolate:
        return e_h
    fine = double_well_grid(spec, n_states, n_points=2 * len(coarse.x) - 1)
    e_h2 = np.array([s.energy for s in grid_solve(fine)])
    return (4 * e_h2 - e_h) / 3


def well_array_problem(
    n_wells: int,
    well_width: float,
    separation: float,
    v0: float,
    n_states: int,
    points_per_unit: int = 400,
) -> GridProblem:
    """Equal square wells of depth ``v0`` separated by zero-potential barriers.

    A barrier of the same width pads each end before the hard walls, so every
    well sees the same surroundings up to tunnelling corrections.
    """
    if n_wells < 1 or well_width <= 0 or separation <= 0 or v0 <= 0:
        raise InvalidParameters("invalid well array geometry")
    pitch = well_width + separation
    length = n_wells * pitch + separation
    n_points = int(round(length * points_per_unit)) + 1
    x = _sample_grid(length / 2, n_points)
    h = length / (n_points - 1)
    centres = [(i - (n_wells - 1) / 2) * pitch for i in range(n_wells)]
    v = np.zeros_like(x)
    for c in centres:
        v[np.abs(x - c) <= well_width / 2 + 1e-9 * h] = -v0
    wells = tuple((c - well_width / 2, c + well_width / 2) for c in centres)
    return GridProblem(x, v, n_states, wells)


# ---------------------------------------------------------------------------
# claims about the doublet


def _doublet(args):
    spec, dps = args
    even = solve_parity(spec, "even", 1, n_points=3, dps=dps)[0]
    odd = solve_parity(spec, "odd", 1, n_points=3, dps=dps)[0]
    return even, odd


def splitting_scan(
    b_minus_a: float,
    v0: float,
    a_values: Sequence[float],
    *,
    dps: int | None = None,
    workers: int = 1,
) -> list[SplittingPoint]:
    """Tunnelling splitting ``E_odd - E_even`` of the lowest doublet versus a.

    In double precision the splitting drops below roundoff once
    ``kappa * a`` exceeds about 15; pass ``dps`` to solve the matching
    condition in extended precision.  Points whose splitting is within
    ``10**(4 - digits) * |E|`` of zero are flagged ``degenerate`` and carry
    no ``delta_e``.
    """
    jobs = [(DoubleWellSpec(float(a), float(a) + b_minus_a, v0), dps) for a in a_values]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            doublets = list(pool.map(_doublet, jobs))
    else:
        doublets = [_doublet(j) for j in jobs]

    digits = 16 if dps is None else dps
    out = []
    for (spec, _), (even, odd) in zip(jobs, doublets):
        if dps is None:
            delta = float(odd.energy - even.energy)
        else:
            with mpmath.workdps(dps):
                delta = float(odd.energy_mp - even.energy_mp)
        floor = 10.0 ** (DEGENERACY_DIGITS_MARGIN - digits) * abs(even.energy)
        degenerate = bool(delta < floor)
        out.append(
            SplittingPoint(
                spec.a, None if degenerate else delta, float(even.energy), float(odd.energy), degenerate
            )
        )
    return out


def fit_log_splitting(points: Sequence[SplittingPoint]) -> tuple[float, float, float]:
    """Least-squares line through ``(a, ln dE)``: (slope, intercept, R^2)."""
    usable = [p for p in points if p.delta_e is not None]
    if len(usable) < 2:
        raise FitUnavailable("need at least two resolved splitting points")
    a = np.array([p.a for p in usable])
    y = np.log([p.delta_e for p in usable])
    slope, intercept = np.polyfit(a, y, 1)
    resid = y - (slope * a + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)
    dx = np.diff(x)
    w[0], w[-1] = dx[0] / 2, dx[-1] / 2
    w[1:-1] = (dx[:-1] + dx[1:]) / 2
    return w


def _segment(state: EigenSolution, well: str) -> tuple[np.ndarray, np.ndarray]:
    x, psi = state.x, state.psi
    if well == "right":
        keep = x >= -1e-12 * abs(x[-1])
        return x[keep], psi[keep]
    if well == "left":
        keep = x <= 1e-12 * abs(x[-1])
        return -x[keep][::-1], psi[keep][::-1]
    raise InvalidParameters(f"well must be 'left' or 'right', got {well!r}")


def segment_overlap(state: EigenSolution, reference: LocalReferenceState, well: str = "right") -> tuple[float, float]:
    """Best scale ``s`` with ``segment ~ s * reference`` and the relative L2 residual.

    The segment is the half of the state on the chosen side of the origin,
    mirrored to right-well orientation for ``well='left'``.
    """
    xs, seg = _segment(state, well)
    if len(xs) != len(reference.x) or np.max(np.abs(xs - reference.x)) > 1e-9 * max(1.0, abs(xs[-1])):
        raise GridMismatch("state segment and reference are sampled on different grids")
    w = _trapezoid_weights(xs)
    ref = reference.psi
    scale = float(np.sum(w * seg * ref) / np.sum(w * ref * ref))
    diff = seg - scale * ref
    residual = math.sqrt(np.sum(w * diff * diff) / np.sum(w * seg * seg))
    return scale, residual


def _hyperbolic_rate(x: np.ndarray, psi: np.ndarray, limit: float) -> float:
    """Rate r of ``c1 cosh(r x) + c2 sinh(r x)`` fitted on ``|x| <= limit``.

    Uses the three-term identity ``psi[i-1] + psi[i+1] = 2 cosh(r h) psi[i]``,
    which hyperbolic functions satisfy exactly on a uniform grid.
    """
    idx = np.flatnonzero(np.abs(x) <= limit)
    idx = idx[(idx > 0) & (idx < len(x) - 1)]
    idx = idx[np.isin(idx - 1, idx) & np.isin(idx + 1, idx)] if len(idx) > 2 else idx
    if len(idx) < 3:
        raise FitUnavailable("fewer than three samples inside the barrier")
    h = x[1] - x[0]
    d2 = psi[idx + 1] - 2 * psi[idx] + psi[idx - 1]
    delta = np.sum(d2 * psi[idx]) / (2 * np.sum(psi[idx] ** 2))
    if not delta > 0:
        raise FitUnavailable("segment is not exponentially growing/decaying")
    return math.log1p(delta + math.sqrt(delta * (delta + 2))) / h


def mid_decay_rate(
    spec: DoubleWellSpec,
    *,
    source: Literal["analytic", "grid"] = "analytic",
    n_points: int = DEFAULT_SAMPLES,
    fraction: float = 0.8,
) -> float:
    """Exponential rate of the even ground state inside the barrier.

    Fits the inner ``fraction`` of ``|x| < a``.  ``source='grid'`` fits the
    finite-difference eigenvector instead of the analytic one.
    """
    if spec.a == 0:
        raise FitUnavailable("a = 0 leaves no barrier region")
    if source == "analytic":
        state = solve_parity(spec, "even", 1, n_points=n_points)[0]
    else:
        state = grid_solve(double_well_grid(spec, 1))[0]
    return _hyperbolic_rate(state.x, state.psi, fraction * spec.a)


def segment_phases(state: EigenSolution, min_norm: float = 1e-6) -> np.ndarray:
    """Phase of each well segment relative to the left-most well.

    The phase of a segment is that of its integral over the well, or of its
    largest-magnitude sample when the integral nearly cancels.  Real states
    give +1 or -1.
    """
    x, psi = state.x, state.psi
    phases = []
    for lo, hi in state.wells:
        keep = (x >= lo) & (x <= hi)
        seg = psi[keep]
        norm = math.sqrt(np.trapezoid(np.abs(seg) ** 2, x[keep])) if keep.sum() > 1 else 0.0
        if norm < min_norm:
            raise AmbiguousSegment(f"segment on [{lo}, {hi}] has norm {norm:.2e}")
        total = np.trapezoid(seg, x[keep])
        if abs(total) < 1e-3 * np.trapezoid(np.abs(seg), x[keep]):
            total = seg[np.argmax(np.abs(seg))]
        phases.append(total / abs(total))
    phases = np.array(phases)
    rel = phases / phases[0]
    if np.all(np.isreal(rel)):
        return np.real(rel).astype(float)
    return rel

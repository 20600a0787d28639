"""Statistics of simulated populations and their predicted limits.

The empirical measure puts a unit point at -log mass in the component of
each fragment's type.  From it we evaluate the additive martingale, the
law-of-large-numbers and central-limit functionals (mass-weighted averages
of a test function of the rescaled log masses), largest-fragment decay
rates, and windowed fragment counts whose growth rate and type profile the
spectral data predicts.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    InvalidWindow,
    LatticeJumpSizes,
    NotIrreducible,
    ThetaAboveCritical,
)
from .measures import FragmentationSpec, jump_sizes
from .simulate import FragmentationPath, Snapshot
from .spectral import SpectralData, irreducibility_check


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Per-type lists of point locations -log X_n(t)."""

    t: float
    locations: tuple[np.ndarray, ...]

    def count(self) -> int:
        return sum(len(loc) for loc in self.locations)


def empirical_measure(snapshot: Snapshot, k: int | None = None) -> EmpiricalMeasure:
    """Locations -log mass grouped by fragment type (live and frozen alike)."""
    if k is None:
        k = int(snapshot.types.max()) if snapshot.types.size else 1
    locs = -np.log(snapshot.masses)
    return EmpiricalMeasure(
        t=snapshot.t,
        locations=tuple(locs[snapshot.types == j] for j in range(1, k + 1)))


def biggins_martingale(snapshot: Snapshot, sd: SpectralData, *,
                       theta_bar: float | None = None) -> float:
    """M(theta, t) = e^(t phi) sum_n v[type_n] mass_n^(theta+1).

    Above the critical exponent the formula still evaluates, but the
    martingale no longer converges to a nondegenerate limit; passing
    ``theta_bar`` turns that case into a warning.
    """
    if theta_bar is not None and sd.theta >= theta_bar:
        warnings.warn(f"theta = {sd.theta} at or above theta_bar = {theta_bar}",
                      ThetaAboveCritical, stacklevel=2)
    weights = sd.v[snapshot.types - 1]
    return float(math.exp(snapshot.t * sd.phi)
                 * np.sum(weights * snapshot.masses ** (sd.theta + 1.0)))


def lln_statistic(snapshot: Snapshot, f) -> float:
    """sum_n X_n f(t^-1 log X_n, T_n); converges to sum_j u_j f(-phi'(0), j)."""
    if snapshot.t <= 0:
        raise ValueError("need t > 0 to rescale")
    y = np.log(snapshot.masses) / snapshot.t
    return float(np.sum(snapshot.masses * f(y, snapshot.types)))


def clt_statistic(snapshot: Snapshot, f, drift: float) -> float:
    """sum_n X_n f(t^-1/2 (log X_n + drift t), T_n) with drift = phi'(0)."""
    if snapshot.t <= 0:
        raise ValueError("need t > 0 to rescale")
    y = (np.log(snapshot.masses) + drift * snapshot.t) / math.sqrt(snapshot.t)
    return float(np.sum(snapshot.masses * f(y, snapshot.types)))


def stationary_distribution(intensity: np.ndarray) -> np.ndarray:
    """The probability vector u with u Lambda = 0."""
    lam = np.asarray(intensity, dtype=float)
    if not irreducibility_check(lam):
        raise NotIrreducible("intensity matrix is not irreducible")
    k = lam.shape[0]
    a = lam.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    return np.linalg.solve(a, b)


@dataclass(frozen=True)
class LargestFragmentRates:
    """Decay rates -log(max mass)/t, overall and per type (None if absent)."""

    t: float
    overall: float
    per_type: tuple[float | None, ...]


def largest_fragment_rates(path: FragmentationPath, t: float,
                           k: int | None = None) -> LargestFragmentRates:
    """Observed decay rates of the largest fragment at time t."""
    if t <= 0:
        raise ValueError("need t > 0")
    snap = path.snapshot(t) if isinstance(path, FragmentationPath) else path
    if k is None:
        k = snap.types.max() if snap.types.size else 1
    overall = -math.log(snap.masses.max()) / t
    per = []
    for j in range(1, k + 1):
        sel = snap.masses[snap.types == j]
        per.append(-math.log(sel.max()) / t if sel.size else None)
    return LargestFragmentRates(t=t, overall=overall, per_type=tuple(per))


def ld_predicted_shape(t: float, theta: float, a: float, b: float,
                       j: int | None, sd: SpectralData) -> float:
    """Deterministic factor of the windowed-count estimate.

    u_j t^-1/2 e^(t((theta+1)phi' - phi)) (e^(-a(theta+1)) - e^(-b(theta+1)));
    the path-dependent limit constant multiplying it is not predicted.
    """
    if a >= b:
        raise InvalidWindow(f"need a < b, got a = {a}, b = {b}")
    if sd.phi_d1 is None:
        raise ValueError("spectral data must carry phi_d1")
    uj = 1.0 if j is None else float(sd.u[j - 1])
    return (uj / math.sqrt(t)
            * math.exp(t * ((theta + 1.0) * sd.phi_d1 - sd.phi))
            * (math.exp(-a * (theta + 1.0)) - math.exp(-b * (theta + 1.0))))


def ld_count(snapshot: Snapshot, theta: float, a: float, b: float,
             j: int | None, sd: SpectralData) -> tuple[int, float]:
    """Observed window count and its deterministic predicted shape.

    Counts fragments of type j with a e^(-t phi') <= mass <= b e^(-t phi').
    """
    shape = ld_predicted_shape(snapshot.t, theta, a, b, j, sd)
    t = snapshot.t
    lo = a * math.exp(-t * sd.phi_d1)
    hi = b * math.exp(-t * sd.phi_d1)
    in_window = (snapshot.masses >= lo) & (snapshot.masses <= hi)
    if j is not None:
        in_window &= snapshot.types == j
    return int(np.count_nonzero(in_window)), shape


def ld_window_exponent(sd: SpectralData) -> float:
    """Growth rate (theta+1) phi'(theta) - phi(theta) of window counts."""
    if sd.phi_d1 is None:
        raise ValueError("spectral data must carry phi_d1")
    return (sd.theta + 1.0) * sd.phi_d1 - sd.phi


# --- test-function family ----------------------------------------------------

def bump(center: float = 0.0, width: float = 1.0):
    def g(y):
        return np.exp(-((y - center) ** 2) / (2.0 * width ** 2))
    return g


def sigmoid(center: float = 0.0, width: float = 1.0):
    def g(y):
        return 1.0 / (1.0 + np.exp(-(y - center) / width))
    return g


def coswin(center: float = 0.0, width: float = 1.0):
    def g(y):
        z = (np.asarray(y) - center) / width
        return np.where(np.abs(z) <= 1.0, 0.5 * (1.0 + np.cos(np.pi * z)), 0.0)
    return g


_FAMILY = {"bump": bump, "sigmoid": sigmoid, "coswin": coswin}


def make_test_function(kind: str, center: float = 0.0, width: float = 1.0,
                  type_index: int | None = None):
    """f(y, types) = g(y) 1{type = type_index}, g from the built-in family."""
    if kind not in _FAMILY:
        raise ValueError(f"unknown test function {kind!r}; pick from "
                         f"{sorted(_FAMILY)}")
    g = _FAMILY[kind](center, width)

    def f(y, types):
        vals = g(np.asarray(y, dtype=float))
        if type_index is not None:
            vals = vals * (np.asarray(types) == type_index)
        return vals

    return f


# --- reference limits ---------------------------------------------------------

def adaptive_simpson(func, a: float, b: float, tol: float = 1e-8,
                     max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of ``func`` on [a, b]."""

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        x1 = 0.5 * (x0 + x2)
        lm, rm = 0.5 * (x0 + x1), 0.5 * (x1 + x2)
        flm, frm = func(lm), func(rm)
        left = simpson(x0, x1, f0, flm, f1)
        right = simpson(x1, x2, f1, frm, f2)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(x0, x1, f0, flm, f1, left, eps / 2.0, depth + 1)
                + recurse(x1, x2, f1, frm, f2, right, eps / 2.0, depth + 1))

    mid = 0.5 * (a + b)
    fa, fm, fb = func(a), func(mid), func(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def gaussian_limit(f, u: np.ndarray, variance: float, *,
                   span: float = 12.0) -> float:
    """sum_j u_j E f(N(0, variance), j), the central-limit reference value."""
    if variance < 0:
        raise ValueError(f"variance {variance} < 0")
    total = 0.0
    for j, uj in enumerate(np.asarray(u), start=1):
        if variance == 0.0:
            total += uj * float(f(np.array([0.0]), np.array([j]))[0])
            continue

        def integrand(y, j=j):
            return (float(f(np.array([y]), np.array([j]))[0])
                    * math.exp(-y * y / (2.0 * variance)))

        sigma = math.sqrt(variance)
        total += (uj * adaptive_simpson(integrand, -span * sigma, span * sigma)
                  / math.sqrt(2.0 * math.pi * variance))
    return total


def lattice_check(spec: FragmentationSpec, *, rtol: float = 1e-9,
                  max_denominator: int = 1000) -> bool:
    """Heuristic lattice test on jump sizes; warns when they look lattice.

    Returns True (and warns) when every pairwise ratio of distinct log-mass
    jump sizes is rational to within ``rtol``, so the sharp windowed-count
    asymptotics should not be trusted.
    """
    sizes = jump_sizes(spec)
    if not sizes:
        return False
    base = sizes[0]
    lattice = True
    for s in sizes[1:]:
        ratio = s / base
        approx = Fraction(ratio).limit_denominator(max_denominator)
        if abs(ratio - float(approx)) > rtol:
            lattice = False
            break
    if lattice:
        warnings.warn("jump sizes are pairwise commensurable (lattice walk)",
                      LatticeJumpSizes, stacklevel=2)
    return lattice

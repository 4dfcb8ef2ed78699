"""Strictly convex potentials, the numeric total Legendre transform, and
the dually flat machinery built on top of them.

The conjugate potential is never stored in closed form: every quantity on
the dual side goes through the unique solution x*(p) of grad psi(x) = p,
obtained by damped Newton.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionMismatchError,
    EvaluationError,
    NewtonConvergenceError,
    StrictConvexityError,
)
from .geometry import CanonicalPoint, fd_step

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100


def _cholesky_or_raise(H, where=""):
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise StrictConvexityError(
            f"Hessian not positive definite{' at ' + where if where else ''}"
        ) from exc


@dataclass(frozen=True)
class ConvexPotential:
    """A strictly convex scalar function with value/gradient/Hessian access.

    Gradient and Hessian default to central differences of ``value``.
    ``domain_hint`` is an optional (lower, upper) box used to seed solvers.
    """

    n: int
    value: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain_hint: Optional[tuple] = None
    name: str = "user"

    def __post_init__(self):
        if self.n < 1:
            raise DimensionMismatchError("dimension n must be >= 1")

    def value_at(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def gradient_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return np.atleast_1d(np.asarray(self.gradient(x), dtype=float))
        g = np.empty(self.n)
        for a in range(self.n):
            s = fd_step(x[a])
            e = np.zeros(self.n)
            e[a] = s
            g[a] = (self.value(x + e) - self.value(x - e)) / (2 * s)
        return g

    def hessian_at(self, x, check_spd: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            H = np.atleast_2d(np.asarray(self.hessian(x), dtype=float))
        else:
            H = np.empty((self.n, self.n))
            for a in range(self.n):
                s = fd_step(x[a])
                e = np.zeros(self.n)
                e[a] = s
                H[:, a] = (self.gradient_at(x + e) - self.gradient_at(x - e)) / (2 * s)
            H = 0.5 * (H + H.T)
        if check_spd:
            _cholesky_or_raise(H, where=np.array2string(x, precision=4))
        return H

    def initial_guess(self) -> np.ndarray:
        if self.domain_hint is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.domain_hint)
            return 0.5 * (lo + hi)
        return np.zeros(self.n)


# ---------------------------------------------------------------------------
# Built-in potentials with closed-form derivatives.

def quadratic_potential(M) -> ConvexPotential:
    """psi(x) = x.M.x / 2 for an SPD matrix M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _cholesky_or_raise(M, where="quadratic coefficient matrix")
    n = M.shape[0]
    return ConvexPotential(
        n=n,
        value=lambda x: 0.5 * float(x @ M @ x),
        gradient=lambda x: M @ x,
        hessian=lambda x: M,
        name="quadratic",
    )


def spin_potential(n: int = 1) -> ConvexPotential:
    """psi(x) = sum_a ln cosh x_a + n ln 2: the two-state partition log."""

    def value(x):
        # log(2 cosh t) written stably for large |t|
        return float(np.sum(np.abs(x) + np.log1p(np.exp(-2 * np.abs(x)))))

    return ConvexPotential(
        n=n,
        value=value,
        gradient=lambda x: np.tanh(x),
        hessian=lambda x: np.diag(1.0 / np.cosh(x) ** 2),
        name="spin",
    )


def separable_potential(pieces) -> ConvexPotential:
    """Sum of independent scalar potentials, one per coordinate.

    ``pieces`` is a list of (f, df, d2f) scalar-callable triples.
    """
    n = len(pieces)
    return ConvexPotential(
        n=n,
        value=lambda x: float(sum(f(x[a]) for a, (f, _, _) in enumerate(pieces))),
        gradient=lambda x: np.array([df(x[a]) for a, (_, df, _) in enumerate(pieces)]),
        hessian=lambda x: np.diag([d2f(x[a]) for a, (_, _, d2f) in enumerate(pieces)]),
        name="separable",
    )


BUILTIN_POTENTIALS = {
    "quadratic": lambda n=1: quadratic_potential(np.eye(int(n))),
    "spin": lambda n=1: spin_potential(int(n)),
}


# ---------------------------------------------------------------------------
# Total Legendre transform.

@dataclass(frozen=True)
class LegendreTransformResult:
    phi_value: float
    x_star: np.ndarray
    iterations: int
    residual: float


def legendre_transform(
    psi: ConvexPotential,
    p,
    x0=None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> LegendreTransformResult:
    """phi(p) = sup_x [x.p - psi(x)], solved via grad psi(x) = p.

    Damped Newton with Armijo backtracking on the squared gradient residual.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if len(p) != psi.n:
        raise DimensionMismatchError(f"p has length {len(p)}, expected {psi.n}")
    if not np.all(np.isfinite(p)):
        raise EvaluationError("p has non-finite entries", coords=p)
    x = np.atleast_1d(np.asarray(x0, dtype=float)) if x0 is not None else psi.initial_guess()

    r = psi.gradient_at(x) - p
    best_x, best_norm = x.copy(), float(np.max(np.abs(r)))
    for it in range(max_iter):
        norm = float(np.max(np.abs(r)))
        if norm < best_norm:
            best_x, best_norm = x.copy(), norm
        if norm <= tol:
            # one undamped polish step: near the root Newton is quadratic,
            # so this drives the residual to rounding level (matters where
            # the dual chart is ill-conditioned, e.g. saturated spin sites)
            try:
                x_p = x - np.linalg.solve(psi.hessian_at(x), r)
                r_p = psi.gradient_at(x_p) - p
                if float(np.max(np.abs(r_p))) < norm:
                    x, r, norm = x_p, r_p, float(np.max(np.abs(r_p)))
            except (StrictConvexityError, np.linalg.LinAlgError):
                pass
            phi = float(x @ p) - psi.value_at(x)
            return LegendreTransformResult(phi, x, it, norm)
        try:
            H = psi.hessian_at(x)
            step = np.linalg.solve(H, r)
        except (StrictConvexityError, np.linalg.LinAlgError):
            # iterate escaped into a flat region (e.g. p outside the dual
            # chart drives x to infinity): report non-convergence
            break
        # Armijo backtracking on ||grad psi - p||^2
        f0 = float(r @ r)
        t = 1.0
        while t > 1e-14:
            x_new = x - t * step
            r_new = psi.gradient_at(x_new) - p
            if float(r_new @ r_new) <= f0 * (1 - 1e-4 * t):
                break
            t *= 0.5
        else:
            break
        x, r = x_new, r_new
    raise NewtonConvergenceError(
        f"Newton did not reach tolerance {tol:g} in {max_iter} iterations "
        f"(best residual {best_norm:g})",
        best_x=best_x,
        residual=best_norm,
        iterations=max_iter,
    )


def involution_check(psi: ConvexPotential, x) -> float:
    """Transform forward then back: sup-norm of x*(grad psi(x)) - x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    res = legendre_transform(psi, psi.gradient_at(x), x0=psi.initial_guess())
    return float(np.max(np.abs(res.x_star - x)))


def metric(psi: ConvexPotential, x) -> np.ndarray:
    """Hessian metric of psi at x."""
    return psi.hessian_at(x)


def dual_metric(psi: ConvexPotential, p, x0=None) -> np.ndarray:
    """Hessian of the conjugate at p, computed as the inverse Hessian at x*(p)."""
    res = legendre_transform(psi, p, x0=x0)
    return np.linalg.inv(psi.hessian_at(res.x_star))


# ---------------------------------------------------------------------------
# Legendre-submanifold embeddings and defect functions.

def embed_psi(psi: ConvexPotential, x) -> CanonicalPoint:
    """(x, grad psi(x), psi(x)): the graph of psi in canonical coordinates."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return CanonicalPoint(x, psi.gradient_at(x), psi.value_at(x))


def embed_phi(psi: ConvexPotential, p, x0=None) -> CanonicalPoint:
    """(x*(p), p, p.x*(p) - phi(p)): the dual-side graph."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    res = legendre_transform(psi, p, x0=x0)
    return CanonicalPoint(res.x_star, p, float(p @ res.x_star) - res.phi_value)


def delta_psi(psi: ConvexPotential, pt: CanonicalPoint):
    """(Delta_0, Delta) = (psi(x) - z, grad psi(x) - p); zero exactly on the graph."""
    if pt.n != psi.n:
        raise DimensionMismatchError("point dimension mismatch")
    return psi.value_at(pt.x) - pt.z, psi.gradient_at(pt.x) - pt.p


def delta_phi(psi: ConvexPotential, pt: CanonicalPoint, x0=None):
    """Dual defects (Delta^0, Delta^a) = (x.p - phi(p) - z, x - grad phi(p))."""
    if pt.n != psi.n:
        raise DimensionMismatchError("point dimension mismatch")
    res = legendre_transform(psi, pt.p, x0=x0)
    d0 = float(pt.x @ pt.p) - res.phi_value - pt.z
    return d0, pt.x - res.x_star


# ---------------------------------------------------------------------------
# Dually flat workspace: psi plus cached access to the conjugate side.

class DuallyFlatWorkspace:
    """A strictly convex potential together with its numerically-derived dual.

    Caches x*(p) keyed by the rounded argument; the cache only ever grows
    and entries are immutable, so concurrent readers are safe.
    """

    def __init__(self, psi: ConvexPotential, cache: bool = True):
        self.psi = psi
        self._cache_enabled = cache
        self._cache: dict = {}

    @property
    def n(self) -> int:
        return self.psi.n

    def transform(self, p) -> LegendreTransformResult:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        key = p.tobytes() if self._cache_enabled else None
        if key is not None and key in self._cache:
            return self._cache[key]
        res = legendre_transform(self.psi, p)
        if key is not None:
            self._cache[key] = res
        return res

    def phi_value(self, p) -> float:
        return self.transform(p).phi_value

    def x_star(self, p) -> np.ndarray:
        return self.transform(p).x_star

    def metric(self, x) -> np.ndarray:
        return self.psi.hessian_at(x)

    def dual_metric_at_p(self, p) -> np.ndarray:
        return np.linalg.inv(self.psi.hessian_at(self.x_star(p)))

    def embed_psi(self, x) -> CanonicalPoint:
        return embed_psi(self.psi, x)

    def embed_phi(self, p) -> CanonicalPoint:
        return embed_phi(self.psi, p)


def canonical_divergence(ws: DuallyFlatWorkspace, x, x_prime) -> float:
    """D(xi || xi') = psi(x) + phi(p') - x.p' with p' = grad psi(x').

    Both arguments are x-coordinates of points on the psi-graph.
    Nonnegative, zero exactly on the diagonal.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    p_prime = ws.psi.gradient_at(x_prime)
    # phi(p') = x'.p' - psi(x') exactly, no solve needed on-graph
    phi_p = float(x_prime @ p_prime) - ws.psi.value_at(x_prime)
    return ws.psi.value_at(x) + phi_p - float(x @ p_prime)


def pythagorean_residual(
    ws: DuallyFlatWorkspace,
    x1,
    x2,
    x3,
    check_tol: float = 1e-6,
    verify_flows: bool = True,
) -> float:
    """Three-term divergence identity residual for a right-angled triple.

    ``x1``/``x2``/``x3`` are x-coordinates of the endpoints and the corner:
    the corner x2 joins x1 by a dual-side geodesic and x3 by a primal-side
    geodesic.  The right angle requires (x3 - x2).(p2 - p1) = 0; violating
    it raises.  When ``verify_flows`` is set, the two geodesic drifts are
    integrated for unit time and checked to land on the supplied points.
    """
    from .errors import PythagoreanConfigError

    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    x3 = np.atleast_1d(np.asarray(x3, dtype=float))
    p1 = ws.psi.gradient_at(x1)
    p2 = ws.psi.gradient_at(x2)
    ortho = float((x3 - x2) @ (p2 - p1))
    scale = max(1.0, float(np.linalg.norm(x3 - x2) * np.linalg.norm(p2 - p1)))
    if abs(ortho) > check_tol * scale:
        raise PythagoreanConfigError(
            f"not a Pythagorean configuration: inner product {ortho:.3g}"
        )
    if verify_flows and not np.allclose(x1, x2):
        _verify_geodesic_endpoints(ws, x1, x2, x3)
    d31 = canonical_divergence(ws, x3, x1)
    d32 = canonical_divergence(ws, x3, x2)
    d21 = canonical_divergence(ws, x2, x1)
    return abs(d31 - d32 - d21)


def _verify_geodesic_endpoints(ws, x1, x2, x3, tol=1e-6):
    """Integrate the two unit-time geodesic flows and confirm the corners."""
    from .errors import PythagoreanConfigError
    from .integrate import integrate_on_submanifold
    from .lifts import geodesic_drift_phi, geodesic_drift_psi

    p1 = ws.psi.gradient_at(x1)
    p2 = ws.psi.gradient_at(x2)
    drift_dual = geodesic_drift_psi(ws, p1, p2)
    x_end = integrate_on_submanifold(ws, drift_dual, side="psi", start=x1, t_end=1.0)
    if float(np.max(np.abs(ws.psi.gradient_at(x_end) - p2))) > tol:
        raise PythagoreanConfigError("dual geodesic does not reach the corner")
    drift_primal = geodesic_drift_phi(ws, x2, x3)
    p_end = integrate_on_submanifold(ws, drift_primal, side="phi", start=p2, t_end=1.0)
    if float(np.max(np.abs(ws.x_star(p_end) - x3))) > tol:
        raise PythagoreanConfigError("primal geodesic does not reach the endpoint")


def dual_christoffel(psi: ConvexPotential, x) -> np.ndarray:
    """Third-derivative tensor of psi by central differences of the Hessian.

    Diagnostic only; symmetric in its first two slots by construction.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = psi.n
    G = np.empty((n, n, n))
    for c in range(n):
        s = fd_step(x[c])
        e = np.zeros(n)
        e[c] = s
        G[:, :, c] = (
            psi.hessian_at(x + e, check_spd=False)
            - psi.hessian_at(x - e, check_spd=False)
        ) / (2 * s)
    return G

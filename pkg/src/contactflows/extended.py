"""Conserving lift on a (2n+3)-dimensional contact manifold.

The base potential is extended by a linear term in one extra coordinate,
psi~(x, x_extra) = psi(x) + anchor * x_extra, and the lift is arranged so
that psi~ is exactly conserved along the ambient flow: whatever the base
potential loses, the extra coordinate absorbs (entropy production in the
thermal circuit models).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonMetricExtensionError,
    OutsideInvariantChartError,
)
from .geometry import CanonicalPoint, ContactHamiltonian, hamiltonian_vector_field
from .lifts import LiftSpec


@dataclass(frozen=True)
class ExtendedPoint:
    """A point (x, x_extra, p, p_extra, z) of the extended contact manifold."""

    x: np.ndarray
    x_extra: float
    p: np.ndarray
    p_extra: float
    z: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        object.__setattr__(self, "x_extra", float(self.x_extra))
        object.__setattr__(self, "p_extra", float(self.p_extra))
        object.__setattr__(self, "z", float(self.z))
        if self.x.shape != self.p.shape:
            raise DimensionMismatchError("x and p lengths differ")
        vals = np.concatenate([self.x, self.p, [self.x_extra, self.p_extra, self.z]])
        if not np.all(np.isfinite(vals)):
            raise ValueError("extended point has non-finite entries")

    @property
    def n(self) -> int:
        return len(self.x)

    def flatten(self) -> CanonicalPoint:
        """Reinterpret as a canonical point of dimension n+1."""
        return CanonicalPoint(
            np.append(self.x, self.x_extra), np.append(self.p, self.p_extra), self.z
        )


def unflatten(pt: CanonicalPoint) -> ExtendedPoint:
    return ExtendedPoint(pt.x[:-1], pt.x[-1], pt.p[:-1], pt.p[-1], pt.z)


@dataclass(frozen=True)
class ExtendedTangent:
    dx: np.ndarray
    dx_extra: float
    dp: np.ndarray
    dp_extra: float
    dz: float


@dataclass(frozen=True)
class ExtendedLiftSpec:
    """A base lift plus the nonzero anchor constant of the extension.

    On the psi side the anchor is the pinned value of p_extra; on the phi
    side, of x_extra.
    """

    base: LiftSpec
    anchor: float

    def __post_init__(self):
        if float(self.anchor) == 0.0:
            raise ValueError("anchor must be nonzero")
        object.__setattr__(self, "anchor", float(self.anchor))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def side(self) -> str:
        return self.base.side


def dually_flat_workspace(spec: ExtendedLiftSpec):
    """The extended generating function has a degenerate Hessian block.

    It induces neither a Riemannian nor a pseudo-Riemannian metric, so no
    dually flat workspace exists; asking for one is a type error.
    """
    raise NonMetricExtensionError(
        "the extended potential is affine in the extra coordinate and "
        "does not induce a dually flat space"
    )


def tilde_potential_value(spec: ExtendedLiftSpec, x, x_extra) -> float:
    """psi~(x, x_extra) = psi(x) + anchor * x_extra (psi side)."""
    return spec.base.potential.value_at(x) + spec.anchor * float(x_extra)


def tilde_deltas(spec: ExtendedLiftSpec, pt: ExtendedPoint):
    """Defect functions of the extended Legendre submanifold.

    psi side:  D0 = psi(x) + anchor x_extra - z,
               Da = (p_extra / anchor) dpsi/dx_a - p_a.
    phi side:  D0 = x.p + (x_extra - anchor) p_extra - phi(p) - z,
               Da = x_a - (x_extra / anchor) dphi/dp_a.
    """
    if pt.n != spec.n:
        raise DimensionMismatchError("point dimension mismatch")
    base = spec.base
    if spec.side == "psi":
        d0 = tilde_potential_value(spec, pt.x, pt.x_extra) - pt.z
        d = (pt.p_extra / spec.anchor) * base.potential.gradient_at(pt.x) - pt.p
    else:
        res = base.workspace.transform(pt.p)
        d0 = (
            float(pt.x @ pt.p)
            + (pt.x_extra - spec.anchor) * pt.p_extra
            - res.phi_value
            - pt.z
        )
        d = pt.x - (pt.x_extra / spec.anchor) * res.x_star
    return d0, d


def tilde_hamiltonian(spec: ExtendedLiftSpec) -> ContactHamiltonian:
    """h~ = D~ . F + Gamma(D~0) as a canonical Hamiltonian in dimension n+1.

    Coordinates are flattened as X = (x, x_extra), P = (p, p_extra); the
    partials are assembled in closed form so the verified canonical-field
    evaluator does all the dynamics.
    """
    base = spec.base
    psi = base.potential
    F = base.drift
    Gam = base.restoring
    n = spec.n
    anchor = spec.anchor

    def split(X, P):
        return X[:n], X[n], P[:n], P[n]

    if spec.side == "psi":

        def deltas(x, xe, p, pe, z):
            d0 = psi.value_at(x) + anchor * xe - z
            d = (pe / anchor) * psi.gradient_at(x) - p
            return d0, d

        def value(X, P, z):
            x, xe, p, pe = split(X, P)
            d0, d = deltas(x, xe, p, pe, z)
            return float(d @ F.at(x)) + Gam.eval(d0)

        def grad_x(X, P, z):
            x, xe, p, pe = split(X, P)
            d0, d = deltas(x, xe, p, pe, z)
            H = psi.hessian_at(x, check_spd=False)
            gx = (pe / anchor) * (H @ F.at(x)) + F.jacobian_at(x).T @ d \
                + Gam.derivative(d0) * psi.gradient_at(x)
            return np.append(gx, Gam.derivative(d0) * anchor)

        def grad_p(X, P, z):
            x, xe, p, pe = split(X, P)
            return np.append(-F.at(x), float(psi.gradient_at(x) @ F.at(x)) / anchor)

        def dz_partial(X, P, z):
            x, xe, p, pe = split(X, P)
            d0, _ = deltas(x, xe, p, pe, z)
            return -Gam.derivative(d0)

    else:
        ws = base.workspace

        def deltas(x, xe, p, pe, z):
            res = ws.transform(p)
            d0 = float(x @ p) + (xe - anchor) * pe - res.phi_value - z
            d = x - (xe / anchor) * res.x_star
            return d0, d, res

        def value(X, P, z):
            x, xe, p, pe = split(X, P)
            d0, d, _ = deltas(x, xe, p, pe, z)
            return float(d @ F.at(p)) + Gam.eval(d0)

        def grad_x(X, P, z):
            x, xe, p, pe = split(X, P)
            d0, d, res = deltas(x, xe, p, pe, z)
            gx = F.at(p) + Gam.derivative(d0) * p
            ge = -float(res.x_star @ F.at(p)) / anchor + Gam.derivative(d0) * pe
            return np.append(gx, ge)

        def grad_p(X, P, z):
            x, xe, p, pe = split(X, P)
            d0, d, res = deltas(x, xe, p, pe, z)
            Hphi = np.linalg.inv(psi.hessian_at(res.x_star, check_spd=False))
            gp = -(xe / anchor) * (Hphi @ F.at(p)) + F.jacobian_at(p).T @ d \
                + Gam.derivative(d0) * (x - res.x_star)
            ge = Gam.derivative(d0) * (xe - anchor)
            return np.append(gp, ge)

        def dz_partial(X, P, z):
            x, xe, p, pe = split(X, P)
            d0, _, _ = deltas(x, xe, p, pe, z)
            return -Gam.derivative(d0)

    return ContactHamiltonian(
        n=n + 1, value=value, grad_x=grad_x, grad_p=grad_p, dz_partial=dz_partial
    )


def extended_lifted_field(spec: ExtendedLiftSpec, pt: ExtendedPoint) -> ExtendedTangent:
    """Ambient canonical field of h~ at any extended point."""
    v = hamiltonian_vector_field(tilde_hamiltonian(spec), pt.flatten())
    return ExtendedTangent(v.dx[:-1], v.dx[-1], v.dp[:-1], v.dp[-1], v.dz)


def restricted_extended_field(spec: ExtendedLiftSpec, u) -> ExtendedTangent:
    """Field restricted to the extended submanifold, driven by the chart
    coordinate u (x on the psi side, p on the phi side).

    The extra fiber coordinate absorbs the potential's drift:
    anchor * (dx_extra/dt) = -d psi / dt on the psi side, and the pinned
    coordinates z and the opposite extra stay exactly constant.
    """
    base = spec.base
    u = np.atleast_1d(np.asarray(u, dtype=float))
    f = base.drift.at(u)
    if spec.side == "psi":
        dp = base.potential.hessian_at(u) @ f
        dxe = -float(base.potential.gradient_at(u) @ f) / spec.anchor
        return ExtendedTangent(f, dxe, dp, 0.0, 0.0)
    Hphi = base.workspace.dual_metric_at_p(u)
    xs = base.workspace.x_star(u)
    dpe = -float(xs @ f) / spec.anchor
    return ExtendedTangent(Hphi @ f, 0.0, f, dpe, 0.0)


def embed_extended(spec: ExtendedLiftSpec, u, extra: float) -> ExtendedPoint:
    """A point of the extended submanifold over chart coordinate u.

    ``extra`` is the free coordinate (x_extra on the psi side, p_extra on
    the phi side); the rest are pinned by the generating function.
    """
    base = spec.base
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if spec.side == "psi":
        p = base.potential.gradient_at(u)
        z = tilde_potential_value(spec, u, extra)
        return ExtendedPoint(u, float(extra), p, spec.anchor, z)
    res = base.workspace.transform(u)
    z = float(u @ res.x_star) - res.phi_value
    return ExtendedPoint(res.x_star, spec.anchor, u, float(extra), z)


def extended_invariant_density(
    spec: ExtendedLiftSpec, pt: ExtendedPoint, Z: float = 1.0
) -> float:
    """Density h~^-(n+2) / Z on the invariant chart h~ > 0."""
    if spec.base.restoring.kind != "linear" or spec.base.restoring.gamma0 == 0:
        raise ValueError("invariant density requires linear restoring with nonzero rate")
    if Z <= 0:
        raise ValueError("normalization constant must be positive")
    hval = tilde_hamiltonian(spec)(pt.flatten())
    if hval <= 0:
        raise OutsideInvariantChartError(
            f"h~ = {hval:.6g} <= 0: point is outside the invariant chart"
        )
    return hval ** (-(spec.n + 2)) / Z

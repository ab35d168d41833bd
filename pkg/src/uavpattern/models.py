"""Radiation pattern bases over (azimuth, inclination) and pattern evaluation.

Three families are supported, all linear in their coefficients:

* ``SphericalHarmonics(order)`` -- real orthonormal harmonics, degrees
  ``0 .. order-1`` (``order**2`` functions).
* ``GridKernel(n_inclination, n_azimuth, sigma)`` -- exponential kernels of
  great-circle distance to a fixed lattice of nodes.
* ``Polynomial(order)`` -- monomials ``alpha**i * beta**j`` with ``i + j <= order``.

Pattern values are in dB.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import Direction, angular_distance_arrays


@dataclass(frozen=True)
class SphericalHarmonics:
    order: int

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ConfigError(f"spherical harmonics order must be a positive integer, got {self.order}")

    @property
    def dimension(self) -> int:
        return self.order**2

    @property
    def label(self) -> str:
        return f"sh:{self.order}"


@dataclass(frozen=True)
class GridKernel:
    n_inclination: int
    n_azimuth: int
    sigma: float = 0.03

    def __post_init__(self):
        for name in ("n_inclination", "n_azimuth"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")

    @property
    def dimension(self) -> int:
        return self.n_inclination * self.n_azimuth

    @property
    def label(self) -> str:
        return f"grid:{self.n_inclination}x{self.n_azimuth}:{self.sigma:g}"

    def nodes(self):
        """Node (azimuth, inclination) arrays, flattened inclination-row major.

        Both axes use cell centers, so no node repeats at the azimuth seam or
        collapses onto a pole.
        """
        az = -np.pi + (np.arange(self.n_azimuth) + 0.5) * (2 * np.pi / self.n_azimuth)
        inc = -np.pi / 2 + (np.arange(self.n_inclination) + 0.5) * (np.pi / self.n_inclination)
        inc_g, az_g = np.meshgrid(inc, az, indexing="ij")
        return az_g.ravel(), inc_g.ravel()


@dataclass(frozen=True)
class Polynomial:
    order: int

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 0:
            raise ConfigError(f"polynomial order must be a non-negative integer, got {self.order}")

    @property
    def dimension(self) -> int:
        return (self.order + 1) * (self.order + 2) // 2

    @property
    def label(self) -> str:
        return f"poly:{self.order}"


BasisSpec = Union[SphericalHarmonics, GridKernel, Polynomial]

SPEC_GRAMMAR = ("sh:ORDER", "grid:NINCxNAZ[:SIGMA]", "poly:ORDER")


def parse_spec(text: str) -> BasisSpec:
    """Parse a selector such as ``sh:14``, ``grid:10x20:0.03`` or ``poly:19``."""
    parts = text.strip().lower().split(":")
    try:
        kind = parts[0]
        if kind == "sh" and len(parts) == 2:
            return SphericalHarmonics(int(parts[1]))
        if kind == "poly" and len(parts) == 2:
            return Polynomial(int(parts[1]))
        if kind == "grid" and len(parts) in (2, 3):
            n_inc, n_az = (int(v) for v in parts[1].split("x"))
            sigma = float(parts[2]) if len(parts) == 3 else 0.03
            return GridKernel(n_inc, n_az, sigma)
    except ValueError as exc:
        raise ConfigError(f"invalid basis spec {text!r}: {exc}; valid forms: {', '.join(SPEC_GRAMMAR)}") from None
    raise ConfigError(f"unknown basis spec {text!r}; valid forms: {', '.join(SPEC_GRAMMAR)}")


def spec_to_dict(spec: BasisSpec) -> dict:
    if isinstance(spec, SphericalHarmonics):
        return {"kind": "sh", "order": spec.order}
    if isinstance(spec, GridKernel):
        return {"kind": "grid", "n_inclination": spec.n_inclination,
                "n_azimuth": spec.n_azimuth, "sigma": spec.sigma}
    if isinstance(spec, Polynomial):
        return {"kind": "poly", "order": spec.order}
    raise TypeError(f"not a basis spec: {spec!r}")


def spec_from_dict(d: dict) -> BasisSpec:
    kind = d.get("kind")
    if kind == "sh":
        return SphericalHarmonics(int(d["order"]))
    if kind == "grid":
        return GridKernel(int(d["n_inclination"]), int(d["n_azimuth"]), float(d["sigma"]))
    if kind == "poly":
        return Polynomial(int(d["order"]))
    raise ConfigError(f"unknown basis kind {kind!r}")


def basis_dimension(spec: BasisSpec) -> int:
    return spec.dimension


# -- Legendre functions -------------------------------------------------------

def assoc_legendre(l: int, m: int, x):
    """Associated Legendre function P_l^m(x) without the Condon-Shortley phase.

    Starts from the closed form ``P_m^m = (2m-1)!! (1-x^2)^(m/2)`` and runs
    the three-term recurrence upward in ``l``.
    """
    if l < 0 or m < 0 or m > l:
        raise DomainError(f"need 0 <= m <= l, got l={l}, m={m}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        raise DomainError("x must lie in [-1, 1]")
    somx2 = np.sqrt((1.0 - x) * (1.0 + x))
    pmm = np.ones_like(x)
    fact = 1.0
    for _ in range(m):
        pmm = pmm * fact * somx2
        fact += 2.0
    if l == m:
        return pmm if pmm.ndim else float(pmm)
    pmm1 = x * (2 * m + 1) * pmm
    if l == m + 1:
        return pmm1 if pmm1.ndim else float(pmm1)
    for ll in range(m + 2, l + 1):
        pll = (x * (2 * ll - 1) * pmm1 - (ll + m - 1) * pmm) / (ll - m)
        pmm, pmm1 = pmm1, pll
    return pll if pll.ndim else float(pll)


@lru_cache(maxsize=None)
def _normalized_legendre_coeffs(lmax):
    a = np.zeros((lmax + 1, lmax + 1))
    b = np.zeros((lmax + 1, lmax + 1))
    for m in range(lmax + 1):
        for l in range(m + 2, lmax + 1):
            a[l, m] = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b[l, m] = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
    return a, b


def normalized_legendre(lmax: int, x, s=None):
    """All orthonormal Legendre functions up to degree ``lmax``.

    Returns an array ``(lmax+1, lmax+1, *x.shape)`` where entry ``[l, m]`` is
    ``sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x)`` (zero for ``m > l``). The
    recurrence is carried out on the normalized values so high degrees do not
    overflow. ``s`` may pass ``sqrt(1 - x^2)`` when it is known more precisely.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt((1.0 - x) * (1.0 + x)) if s is None else np.asarray(s, dtype=float)
    a, b = _normalized_legendre_coeffs(lmax)
    p = np.zeros((lmax + 1, lmax + 1) + x.shape)
    p[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, lmax + 1):
        p[m, m] = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[m - 1, m - 1]
    for m in range(lmax):
        p[m + 1, m] = np.sqrt(2.0 * m + 3.0) * x * p[m, m]
    for m in range(lmax + 1):
        for l in range(m + 2, lmax + 1):
            p[l, m] = a[l, m] * (x * p[l - 1, m] - b[l, m] * p[l - 2, m])
    return p


# -- basis evaluation ---------------------------------------------------------

def _angles(direction_or_alpha, beta=None):
    if beta is None:
        d = direction_or_alpha
        return np.asarray(d.azimuth, dtype=float), np.asarray(d.inclination, dtype=float)
    return np.asarray(direction_or_alpha, dtype=float), np.asarray(beta, dtype=float)


def sh_basis_arrays(alpha, beta, order: int) -> np.ndarray:
    """Real spherical harmonics, shape ``(*alpha.shape, order**2)``.

    Column ``l*l + l + m`` holds Y_{l,m}, evaluated at colatitude
    ``pi/2 - beta`` and longitude ``alpha``: cosine terms for ``m > 0``, sine
    terms for ``m < 0``, no Condon-Shortley phase.
    """
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    lmax = order - 1
    # cos(colatitude) = sin(beta), sin(colatitude) = cos(beta) >= 0
    p = normalized_legendre(lmax, np.sin(beta), np.abs(np.cos(beta)))
    out = np.empty(alpha.shape + (order * order,))
    root2 = np.sqrt(2.0)
    for m in range(lmax + 1):
        if m == 0:
            for l in range(lmax + 1):
                out[..., l * l + l] = p[l, 0]
            continue
        cm = root2 * np.cos(m * alpha)
        sm = root2 * np.sin(m * alpha)
        for l in range(m, lmax + 1):
            out[..., l * l + l + m] = p[l, m] * cm
            out[..., l * l + l - m] = p[l, m] * sm
    return out


def grid_basis_arrays(alpha, beta, spec: GridKernel) -> np.ndarray:
    """Kernel values ``exp(-dist / (2 sigma))`` against every node.

    The exponent is linear in the great-circle distance (not squared).
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    node_az, node_inc = spec.nodes()
    dist = angular_distance_arrays(alpha[..., None], beta[..., None], node_az, node_inc)
    return np.exp(-dist / (2.0 * spec.sigma))


@lru_cache(maxsize=None)
def poly_exponents(order: int):
    """Exponent pairs ``(i, j)`` in graded-lexicographic order."""
    return tuple((i, g - i) for g in range(order + 1) for i in range(g, -1, -1))


def poly_basis_arrays(alpha, beta, order: int) -> np.ndarray:
    """Monomials in raw radians; deliberately not periodic in azimuth."""
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    apow = alpha[..., None] ** np.arange(order + 1)
    bpow = beta[..., None] ** np.arange(order + 1)
    exps = poly_exponents(order)
    i = np.fromiter((e[0] for e in exps), dtype=int, count=len(exps))
    j = np.fromiter((e[1] for e in exps), dtype=int, count=len(exps))
    return apow[..., i] * bpow[..., j]


def basis_matrix(spec: BasisSpec, alpha, beta) -> np.ndarray:
    """Evaluate any basis at arrays of angles; last axis indexes the basis."""
    if isinstance(spec, SphericalHarmonics):
        return sh_basis_arrays(alpha, beta, spec.order)
    if isinstance(spec, GridKernel):
        return grid_basis_arrays(alpha, beta, spec)
    if isinstance(spec, Polynomial):
        return poly_basis_arrays(alpha, beta, spec.order)
    raise TypeError(f"not a basis spec: {spec!r}")


def sh_basis(direction: Direction, order: int) -> np.ndarray:
    return sh_basis_arrays(*_angles(direction), order)


def grid_basis(direction: Direction, spec: GridKernel) -> np.ndarray:
    return grid_basis_arrays(*_angles(direction), spec)


def poly_basis(direction: Direction, order: int) -> np.ndarray:
    return poly_basis_arrays(*_angles(direction), order)


# -- patterns -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PatternFunction:
    """A gain pattern ``G(alpha, beta) = sum_i c_i f_i(alpha, beta)`` in dB."""

    spec: BasisSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size != self.spec.dimension:
            raise ValueError(
                f"{c.size} coefficients do not match {self.spec.label} (dimension {self.spec.dimension})"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __call__(self, alpha, beta):
        return basis_matrix(self.spec, alpha, beta) @ self.coeffs

    @classmethod
    def zero(cls, spec: BasisSpec) -> PatternFunction:
        return cls(spec, np.zeros(spec.dimension))


def eval_pattern(p: PatternFunction, direction: Direction) -> float:
    return float(p(direction.azimuth, direction.inclination))

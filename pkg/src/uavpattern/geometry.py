"""Pose geometry: body-frame bearings between two UAVs, sphere metrics, path loss.

All array functions broadcast over leading dimensions; the dataclasses are
thin scalar wrappers used at API boundaries and in tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, DomainError


def wrap_angle(x):
    """Wrap angles to the half-open interval (-pi, pi]; in-range values pass through unchanged."""
    x = np.asarray(x, dtype=float)
    inside = (x > -np.pi) & (x <= np.pi)
    out = np.where(inside, x, np.pi - np.mod(np.pi - x, 2.0 * np.pi))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise DomainError(f"non-finite vector component in {self!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class ReducedPose:
    """Position and heading of a UAV flying with its z-axis up."""

    t: float
    x: float
    y: float
    z: float
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    roll = property(lambda self: 0.0)
    pitch = property(lambda self: 0.0)

    def to_full(self) -> FullPose:
        return FullPose(self.t, self.x, self.y, self.z, 0.0, 0.0, self.heading)


@dataclass(frozen=True)
class FullPose:
    """Position plus intrinsic Z-Y-X attitude (heading, pitch, roll)."""

    t: float
    x: float
    y: float
    z: float
    roll: float = 0.0
    pitch: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        for name in ("roll", "pitch", "heading"):
            object.__setattr__(self, name, wrap_angle(getattr(self, name)))


@dataclass(frozen=True)
class Direction:
    """Azimuth in (-pi, pi] and inclination in [-pi/2, pi/2] of a bearing."""

    azimuth: float
    inclination: float

    def __post_init__(self):
        beta = float(self.inclination)
        if not np.isfinite(beta) or abs(beta) > np.pi / 2 + 1e-12:
            raise DomainError(f"inclination {beta} outside [-pi/2, pi/2]")
        object.__setattr__(self, "inclination", float(np.clip(beta, -np.pi / 2, np.pi / 2)))
        object.__setattr__(self, "azimuth", wrap_angle(self.azimuth))


@dataclass(frozen=True)
class JointObservation:
    """The five regression features of one joint pose."""

    dir_b_in_a: Direction
    dir_a_in_b: Direction
    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise DegenerateInputError(f"distance must be positive, got {self.d}")

    def as_row(self) -> np.ndarray:
        return np.array([
            self.dir_b_in_a.azimuth, self.dir_b_in_a.inclination,
            self.dir_a_in_b.azimuth, self.dir_a_in_b.inclination, self.d,
        ])


class Observations(NamedTuple):
    """Column arrays of joint observations (vectorized JointObservation)."""

    alpha_ba: np.ndarray
    beta_ba: np.ndarray
    alpha_ab: np.ndarray
    beta_ab: np.ndarray
    d: np.ndarray

    def features(self) -> np.ndarray:
        return np.column_stack(self)

    def __len__(self):
        return np.size(self.d)

    def row(self, i) -> JointObservation:
        return JointObservation(
            Direction(self.alpha_ba[i], self.beta_ba[i]),
            Direction(self.alpha_ab[i], self.beta_ab[i]),
            float(self.d[i]),
        )

    def subset(self, idx) -> Observations:
        return Observations(*(np.asarray(c)[idx] for c in self))

    @classmethod
    def from_rows(cls, rows) -> Observations:
        arr = np.array([o.as_row() for o in rows], dtype=float).reshape(-1, 5)
        return cls(*arr.T.copy())


def world_to_body(vec, roll, pitch, heading):
    """Rotate world-frame vectors into a body frame.

    Undoes heading about z, then pitch about y, then roll about x, i.e. applies
    the transpose of ``Rz(heading) @ Ry(pitch) @ Rx(roll)``.
    """
    v = np.asarray(vec, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    # undo heading
    c, s = np.cos(heading), np.sin(heading)
    x, y = c * x + s * y, -s * x + c * y
    # undo pitch
    c, s = np.cos(pitch), np.sin(pitch)
    x, z = c * x - s * z, s * x + c * z
    # undo roll
    c, s = np.cos(roll), np.sin(roll)
    y, z = c * y + s * z, -s * y + c * z
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def relative_in_frame(observer, target) -> Vec3:
    """Position of ``target`` expressed in the body frame of ``observer``.

    Accepts :class:`FullPose` or :class:`ReducedPose` (zero roll and pitch).
    """
    delta = np.array([target.x - observer.x, target.y - observer.y, target.z - observer.z])
    v = world_to_body(delta, observer.roll, observer.pitch, observer.heading)
    return Vec3(*map(float, v))


def direction_arrays(rel):
    """Azimuth and inclination of body-frame vectors ``rel[..., 3]``.

    Azimuth is pinned to 0 where the horizontal component vanishes.
    """
    rel = np.asarray(rel, dtype=float)
    x, y, z = rel[..., 0], rel[..., 1], rel[..., 2]
    rho = np.hypot(x, y)
    if np.any((rho == 0) & (z == 0)):
        raise DegenerateInputError("direction of a zero vector is undefined")
    alpha = np.where(rho > 0, np.arctan2(y, x), 0.0)
    beta = np.arctan2(z, rho)
    return wrap_angle(alpha), beta


def direction_of(rel) -> Direction:
    v = rel.as_array() if isinstance(rel, Vec3) else np.asarray(rel, dtype=float)
    alpha, beta = direction_arrays(v)
    return Direction(float(alpha), float(beta))


def observe(pos_a, att_a, pos_b, att_b) -> Observations:
    """Vectorized joint observation.

    ``pos_*`` are ``(n, 3)`` positions, ``att_*`` are ``(n, 3)`` attitudes as
    (roll, pitch, heading) columns.
    """
    pos_a = np.atleast_2d(np.asarray(pos_a, dtype=float))
    pos_b = np.atleast_2d(np.asarray(pos_b, dtype=float))
    att_a = np.atleast_2d(np.asarray(att_a, dtype=float))
    att_b = np.atleast_2d(np.asarray(att_b, dtype=float))
    delta = pos_b - pos_a
    d = np.linalg.norm(delta, axis=-1)
    if np.any(d == 0):
        raise DegenerateInputError("coincident UAV positions")
    rel_ba = world_to_body(delta, att_a[:, 0], att_a[:, 1], att_a[:, 2])
    rel_ab = world_to_body(-delta, att_b[:, 0], att_b[:, 1], att_b[:, 2])
    alpha_ba, beta_ba = direction_arrays(rel_ba)
    alpha_ab, beta_ab = direction_arrays(rel_ab)
    return Observations(
        np.atleast_1d(alpha_ba), np.atleast_1d(beta_ba),
        np.atleast_1d(alpha_ab), np.atleast_1d(beta_ab), d,
    )


def _pose_arrays(pose):
    return [pose.x, pose.y, pose.z], [pose.roll, pose.pitch, pose.heading]


def joint_observation(pose_a, pose_b) -> JointObservation:
    pa, aa = _pose_arrays(pose_a)
    pb, ab = _pose_arrays(pose_b)
    return observe(pa, aa, pb, ab).row(0)


def _unit_vectors(alpha, beta):
    cb = np.cos(beta)
    return np.stack(np.broadcast_arrays(cb * np.cos(alpha), cb * np.sin(alpha), np.sin(beta)), axis=-1)


def angular_distance_arrays(alpha1, beta1, alpha2, beta2):
    """Great-circle distance via atan2(|u x v|, u . v), in [0, pi]."""
    u = _unit_vectors(alpha1, beta1)
    v = _unit_vectors(alpha2, beta2)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.arctan2(cross, dot)


def angular_distance(p: Direction, q: Direction) -> float:
    return float(angular_distance_arrays(p.azimuth, p.inclination, q.azimuth, q.inclination))


def path_loss_db(wavelength, d):
    """Free-space path loss term ``20 log10(wavelength / (4 pi d))`` in dB.

    Warns when any distance is not in the far field (``d <= 2 wavelength``).
    """
    wavelength = np.asarray(wavelength, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.any(~(wavelength > 0)) or np.any(~(d > 0)):
        raise DomainError("wavelength and distance must be positive")
    if np.any(d <= 2 * wavelength):
        warnings.warn("distance within 2 wavelengths: far-field assumption violated", stacklevel=2)
    out = 20.0 * np.log10(wavelength / (4.0 * np.pi * d))
    return out if out.ndim else float(out)

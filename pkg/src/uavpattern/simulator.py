"""Synthetic calibration flights.

Two UAVs circle a vertical circle in the ``x = 0`` plane, always on opposite
ends of a diameter. After each loop UAV ``a`` turns its heading by one step,
so that over the whole flight it sees its partner from every azimuth. RSSI
samples are synthesized from ground-truth patterns with the Friis link budget
plus Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import Observations, observe, path_loss_db, wrap_angle
from .learning import TrainingSet
from .models import PatternFunction, SphericalHarmonics, basis_matrix

DEFAULT_NOISE_SIGMA = 2.74
DEFAULT_P_TX = 20.0
DEFAULT_WAVELENGTH = 0.125
DIPOLE_FLOOR_DB = -30.0
DIPOLE_SH_ORDER = 8


@dataclass(frozen=True)
class TrajectoryConfig:
    diameter: float = 10.0
    center_altitude: float = 20.0
    loops: int = 24
    samples_per_loop: int = 360
    heading_step: float | None = None
    sample_rate: float = 400.0
    turning_uav: str = "a"
    heading_mode: str = "fixed"

    def __post_init__(self):
        if not self.diameter > 0:
            raise ConfigError("diameter must be positive")
        if not self.center_altitude > self.diameter / 2:
            raise ConfigError("center altitude must exceed the circle radius")
        if int(self.loops) != self.loops or self.loops < 1:
            raise ConfigError("loops must be a positive integer")
        if int(self.samples_per_loop) != self.samples_per_loop or self.samples_per_loop < 1:
            raise ConfigError("samples_per_loop must be a positive integer")
        if not self.sample_rate > 0:
            raise ConfigError("sample_rate must be positive")
        if self.turning_uav not in ("a", "b"):
            raise ConfigError("turning_uav must be 'a' or 'b'")
        if self.heading_mode not in ("fixed", "face_center"):
            raise ConfigError("heading_mode must be 'fixed' or 'face_center'")
        if self.heading_step is None:
            object.__setattr__(self, "heading_step", 2 * np.pi / self.loops)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class PosePair:
    """Sampled joint trajectory: positions and (roll, pitch, heading) per UAV."""

    t: np.ndarray
    pos_a: np.ndarray
    att_a: np.ndarray
    pos_b: np.ndarray
    att_b: np.ndarray

    def __len__(self):
        return len(self.t)

    def observations(self) -> Observations:
        return observe(self.pos_a, self.att_a, self.pos_b, self.att_b)


def generate_trajectory(cfg: TrajectoryConfig = TrajectoryConfig()) -> PosePair:
    """Sample the joint circling trajectory.

    UAV ``a`` starts at ``(0, +r, z0)`` and ``b`` at ``(0, -r, z0)``; both
    begin facing each other. In ``fixed`` mode headings are constant within a
    loop; ``face_center`` keeps each UAV turned towards the circle center.
    """
    r = cfg.diameter / 2
    n = cfg.loops * cfg.samples_per_loop
    k = np.arange(n)
    loop = k // cfg.samples_per_loop
    theta = 2 * np.pi * (k % cfg.samples_per_loop) / cfg.samples_per_loop
    t = k / cfg.sample_rate
    c, s = np.cos(theta), np.sin(theta)
    zeros = np.zeros(n)
    pos_a = np.column_stack([zeros, r * c, cfg.center_altitude + r * s])
    pos_b = np.column_stack([zeros, -r * c, cfg.center_altitude - r * s])

    if cfg.heading_mode == "fixed":
        base_a = np.full(n, -np.pi / 2)
        base_b = np.full(n, np.pi / 2)
    else:
        # towards the center horizontally; undefined at the top/bottom, keep last side
        side = np.sign(c)
        side[side == 0] = 1.0
        base_a = np.where(side > 0, -np.pi / 2, np.pi / 2)
        base_b = -base_a
    turn = loop * cfg.heading_step
    head_a = base_a + (turn if cfg.turning_uav == "a" else 0.0)
    head_b = base_b + (turn if cfg.turning_uav == "b" else 0.0)
    att_a = np.column_stack([zeros, zeros, wrap_angle(head_a)])
    att_b = np.column_stack([zeros, zeros, wrap_angle(head_b)])
    return PosePair(t, pos_a, att_a, pos_b, att_b)


@dataclass(frozen=True, eq=False)
class GroundTruthScene:
    pattern_a: PatternFunction
    pattern_b: PatternFunction
    p_tx: float = DEFAULT_P_TX
    wavelength: float = DEFAULT_WAVELENGTH
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    seed: int = 0
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if not self.wavelength > 0:
            raise ConfigError("wavelength must be positive")

    def joint_gain(self, obs: Observations) -> np.ndarray:
        return self.pattern_a(obs.alpha_ba, obs.beta_ba) + self.pattern_b(obs.alpha_ab, obs.beta_ab)


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    poses: PosePair
    training_set: TrainingSet
    noiseless_p_rx: np.ndarray
    provenance: dict


def sample_noise(seed: int, index, sigma: float) -> np.ndarray:
    """Gaussian noise where sample ``i`` depends only on ``(seed, i)``."""
    index = np.atleast_1d(index)
    z = np.array([
        np.random.Generator(np.random.Philox(key=[int(seed) % 2**64, int(i)])).standard_normal()
        for i in index
    ])
    return sigma * z


def synthesize(poses: PosePair, scene: GroundTruthScene) -> SyntheticDataset:
    """RSSI for the link ``a -> b`` at every pose of the trajectory."""
    obs = poses.observations()
    if np.any(obs.d <= 2 * scene.wavelength):
        raise DomainError("far-field violation: some distance is within 2 wavelengths")
    clean = scene.p_tx + scene.joint_gain(obs) + path_loss_db(scene.wavelength, obs.d)
    noise = sample_noise(scene.seed, np.arange(len(poses)), scene.noise_sigma) if scene.noise_sigma > 0 else 0.0
    ts = TrainingSet(
        t=poses.t.copy(), obs=obs, p_tx=np.full(len(poses), float(scene.p_tx)),
        p_rx=clean + noise, wavelength=scene.wavelength, tx_id="a", rx_id="b",
    )
    provenance = {
        "p_tx_dbm": scene.p_tx, "wavelength_m": scene.wavelength,
        "noise_sigma_db": scene.noise_sigma, "seed": scene.seed,
        "pattern_a": scene.description.get("pattern_a"),
        "pattern_b": scene.description.get("pattern_b"),
    }
    return SyntheticDataset(poses, ts, clean, provenance)


# -- ground-truth patterns ----------------------------------------------------

@lru_cache(maxsize=None)
def _projection_grid(n_inc=48, n_az=96):
    x, w = np.polynomial.legendre.leggauss(n_inc)
    beta = np.arcsin(x)
    alpha = -np.pi + (np.arange(n_az) + 0.5) * 2 * np.pi / n_az
    bb, aa = np.meshgrid(beta, alpha, indexing="ij")
    ww = np.repeat(w[:, None], n_az, axis=1) * (2 * np.pi / n_az)
    return aa.ravel(), bb.ravel(), ww.ravel()


def _constrained_sh_projection(func, nulls, order=DIPOLE_SH_ORDER):
    """L2 projection of ``func`` onto SH of ``order`` with exact values at ``nulls``.

    ``nulls`` is a list of ``(alpha, beta, value)`` equality constraints,
    imposed through the KKT system of the constrained least squares problem.
    """
    spec = SphericalHarmonics(order)
    a, b, w = _projection_grid()
    B = basis_matrix(spec, a, b)
    f = func(a, b)
    G = B.T @ (w[:, None] * B)
    h = B.T @ (w * f)
    C = np.array([basis_matrix(spec, na, nb) for na, nb, _ in nulls])
    v = np.array([val for _, _, val in nulls])
    p = spec.dimension
    kkt = np.block([[G, C.T], [C, np.zeros((len(v), len(v)))]])
    sol = np.linalg.lstsq(kkt, np.concatenate([h, v]), rcond=None)[0]
    return PatternFunction(spec, sol[:p])


def _floored_db(power):
    return 10 * np.log10(np.maximum(power, 10 ** (DIPOLE_FLOOR_DB / 10)))


def make_ground_truth(kind: str, order: int = 4, seed: int = 0, amplitude: float = 5.0,
                      spec=None) -> PatternFunction:
    """Build a ground-truth pattern.

    ``dipole_vertical``: antenna along the body z axis, nulls at the poles.
    ``dipole_horizontal``: antenna along the body x axis, nulls at azimuth 0
    and pi on the horizon. Both are ``10 log10(sin^2)`` of the angle to the
    antenna axis, floored at -30 dB, projected onto order-8 harmonics with the
    nulls pinned to the floor. ``sh_random``: SH coefficients of ``order``
    drawn uniformly from ``[-amplitude, amplitude]``. ``zero``: zero pattern
    of ``spec`` (defaults to SH order 1).
    """
    if kind == "dipole_vertical":
        return _dipole(vertical=True)
    if kind == "dipole_horizontal":
        return _dipole(vertical=False)
    if kind == "sh_random":
        rng = np.random.default_rng(seed)
        spec = SphericalHarmonics(order)
        return PatternFunction(spec, rng.uniform(-amplitude, amplitude, spec.dimension))
    if kind == "zero":
        return PatternFunction.zero(spec or SphericalHarmonics(1))
    raise ConfigError(f"unknown ground-truth kind {kind!r}")


@lru_cache(maxsize=None)
def _dipole(vertical: bool) -> PatternFunction:
    if vertical:
        def func(a, b):
            return _floored_db(np.cos(b) ** 2)
        nulls = [(0.0, np.pi / 2, DIPOLE_FLOOR_DB), (0.0, -np.pi / 2, DIPOLE_FLOOR_DB)]
    else:
        def func(a, b):
            return _floored_db(1 - (np.cos(b) * np.cos(a)) ** 2)
        nulls = [(0.0, 0.0, DIPOLE_FLOOR_DB), (np.pi, 0.0, DIPOLE_FLOOR_DB)]
    return _constrained_sh_projection(func, nulls)


PATTERN_GRAMMAR = ("zero", "dipole-vertical", "dipole-horizontal", "random:ORDER[:AMPLITUDE]")


def parse_pattern(text: str, seed: int) -> tuple[PatternFunction, dict]:
    """Parse a CLI pattern selector; returns the pattern and its description."""
    t = text.strip().lower()
    if t == "zero":
        return make_ground_truth("zero"), {"kind": "zero"}
    if t in ("dipole-vertical", "dipole-horizontal"):
        kind = t.replace("-", "_")
        return make_ground_truth(kind), {"kind": kind, "floor_db": DIPOLE_FLOOR_DB, "sh_order": DIPOLE_SH_ORDER}
    parts = t.split(":")
    if parts[0] == "random" and len(parts) in (2, 3):
        try:
            order = int(parts[1])
            amplitude = float(parts[2]) if len(parts) == 3 else 5.0
            pattern = make_ground_truth("sh_random", order=order, seed=seed, amplitude=amplitude)
        except ValueError:
            pass
        else:
            return pattern, {"kind": "sh_random", "order": order, "seed": seed, "amplitude": amplitude}
    raise ConfigError(f"unknown pattern {text!r}; valid forms: {', '.join(PATTERN_GRAMMAR)}")

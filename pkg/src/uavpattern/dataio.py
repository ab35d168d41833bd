"""CSV logs, pose/signal matching, model files and pattern grid export.

File formats (UTF-8, ``.`` decimal separator, LF line endings):

* poses:   ``t,x,y,z,roll,pitch,yaw`` -- seconds, meters, radians
* signals: ``t,tx,rx,p_tx_dbm,p_rx_dbm``
* matched: ``t,tx,rx,alpha_ba,beta_ba,alpha_ab,beta_ab,d,p_tx_dbm,p_rx_dbm``
* pattern grid: ``alpha_rad,beta_rad,gain_db``
* noise analysis: ``t,max_spread_deg,rssi_std_db``
* model: JSON with ``format_version: 1``
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ModelFileError, ModelVersionError
from .geometry import Observations, observe, wrap_angle
from .learning import DecoupledModel, TrainingSet
from .models import spec_from_dict, spec_to_dict

log = logging.getLogger(__name__)

POSE_COLUMNS = ("t", "x", "y", "z", "roll", "pitch", "yaw")
REDUCED_POSE_COLUMNS = ("t", "x", "y", "z", "yaw")
SIGNAL_COLUMNS = ("t", "tx", "rx", "p_tx_dbm", "p_rx_dbm")
MATCHED_COLUMNS = ("t", "tx", "rx", "alpha_ba", "beta_ba", "alpha_ab", "beta_ab", "d", "p_tx_dbm", "p_rx_dbm")
GRID_COLUMNS = ("alpha_rad", "beta_rad", "gain_db")
NOISE_COLUMNS = ("t", "max_spread_deg", "rssi_std_db")
MODEL_FORMAT_VERSION = 1


def _fmt(v) -> str:
    return repr(float(v))


@dataclass(frozen=True, eq=False)
class PoseLog:
    uav_id: str
    t: np.ndarray
    pos: np.ndarray
    att: np.ndarray  # roll, pitch, heading

    def __post_init__(self):
        if len(self.t) == 0:
            raise DataError(f"pose log {self.uav_id!r} is empty")
        if np.any(np.diff(self.t) <= 0):
            raise DataError(f"pose log {self.uav_id!r}: timestamps not strictly increasing")

    def __len__(self):
        return len(self.t)

    def interpolate(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Positions linearly, each angle along its shortest arc."""
        t = np.asarray(t, dtype=float)
        if np.any((t < self.t[0]) | (t > self.t[-1])):
            raise DataError("interpolation time outside the pose log")
        pos = np.column_stack([np.interp(t, self.t, self.pos[:, j]) for j in range(3)])
        if len(self.t) == 1:
            return pos, np.repeat(self.att[:1], len(t), axis=0)
        i = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        frac = (t - self.t[i]) / (self.t[i + 1] - self.t[i])
        a0, a1 = self.att[i], self.att[i + 1]
        att = np.where(frac[:, None] == 1.0, a1, a0 + frac[:, None] * wrap_angle(a1 - a0))
        outside = (att <= -np.pi) | (att > np.pi)
        att[outside] = wrap_angle(att[outside])
        return pos, att


@dataclass(frozen=True, eq=False)
class SignalLog:
    t: np.ndarray
    tx: np.ndarray
    rx: np.ndarray
    p_tx: np.ndarray
    p_rx: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.t) < 0):
            raise DataError("signal log timestamps decrease")
        if not (np.all(np.isfinite(self.p_tx)) and np.all(np.isfinite(self.p_rx))):
            raise DataError("non-finite power in signal log")

    def __len__(self):
        return len(self.t)


# -- CSV reading --------------------------------------------------------------

def _read_rows(path):
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [(reader.line_num, row) for row in reader if row]
    return path, tuple(h.strip() for h in header), rows


def _floats(path, lineno, values):
    try:
        out = [float(v) for v in values]
    except ValueError:
        raise DataError(f"{path}:{lineno}: malformed number in {values}") from None
    if not all(np.isfinite(out)):
        raise DataError(f"{path}:{lineno}: non-finite value")
    return out


def load_pose_csv(path, uav_id: str | None = None) -> PoseLog:
    path, header, rows = _read_rows(path)
    if header == POSE_COLUMNS:
        reduced = False
    elif header == REDUCED_POSE_COLUMNS:
        reduced = True
        log.warning("%s: no roll/pitch columns, assuming zero (reduced state)", path)
    else:
        raise DataError(f"{path}: header {','.join(header)} does not match {','.join(POSE_COLUMNS)}")
    width = len(header)
    t, pos, att = [], [], []
    for lineno, row in rows:
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        v = _floats(path, lineno, row)
        if t and v[0] <= t[-1]:
            raise DataError(f"{path}:{lineno}: timestamp {v[0]} not after {t[-1]}")
        t.append(v[0])
        pos.append(v[1:4])
        att.append([0.0, 0.0, v[4]] if reduced else v[4:7])
    if not t:
        raise DataError(f"{path}: no pose rows")
    return PoseLog(uav_id or path.stem, np.array(t), np.array(pos), wrap_angle(np.array(att)))


def load_signal_csv(path) -> SignalLog:
    path, header, rows = _read_rows(path)
    if header != SIGNAL_COLUMNS:
        raise DataError(f"{path}: header {','.join(header)} does not match {','.join(SIGNAL_COLUMNS)}")
    t, tx, rx, ptx, prx = [], [], [], [], []
    for lineno, row in rows:
        if len(row) != 5:
            raise DataError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
        tt, a, b = _floats(path, lineno, [row[0], row[3], row[4]])
        if t and tt < t[-1]:
            raise DataError(f"{path}:{lineno}: timestamp {tt} before {t[-1]}")
        t.append(tt)
        tx.append(row[1].strip())
        rx.append(row[2].strip())
        ptx.append(a)
        prx.append(b)
    return SignalLog(np.array(t, dtype=float), np.array(tx, dtype=object), np.array(rx, dtype=object),
                     np.array(ptx, dtype=float), np.array(prx, dtype=float))


# -- CSV writing --------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_pose_csv(path, t, pos, att):
    _write_csv(path, POSE_COLUMNS, (
        [_fmt(tt), *map(_fmt, p), *map(_fmt, a)] for tt, p, a in zip(t, pos, att)
    ))


def write_signal_csv(path, t, tx, rx, p_tx, p_rx):
    tx = np.broadcast_to(np.asarray(tx, dtype=object), np.shape(t))
    rx = np.broadcast_to(np.asarray(rx, dtype=object), np.shape(t))
    p_tx = np.broadcast_to(p_tx, np.shape(t))
    _write_csv(path, SIGNAL_COLUMNS, (
        [_fmt(a), s, r, _fmt(b), _fmt(c)] for a, s, r, b, c in zip(t, tx, rx, p_tx, p_rx)
    ))


def write_matched_csv(path, ts: TrainingSet):
    feats = ts.obs.features()
    _write_csv(path, MATCHED_COLUMNS, (
        [_fmt(ts.t[i]), ts.tx_id, ts.rx_id, *map(_fmt, feats[i]), _fmt(ts.p_tx[i]), _fmt(ts.p_rx[i])]
        for i in range(len(ts))
    ))


def write_noise_csv(path, t, max_spread_deg, rssi_std_db):
    _write_csv(path, NOISE_COLUMNS, (
        [_fmt(a), _fmt(b), _fmt(c)] for a, b, c in zip(t, max_spread_deg, rssi_std_db)
    ))


def load_matched_csv(path, wavelength: float, a_id="a", b_id="b") -> TrainingSet:
    path, header, rows = _read_rows(path)
    if header != MATCHED_COLUMNS:
        raise DataError(f"{path}: header does not match {','.join(MATCHED_COLUMNS)}")
    data, links = [], set()
    for lineno, row in rows:
        if len(row) != len(MATCHED_COLUMNS):
            raise DataError(f"{path}:{lineno}: expected {len(MATCHED_COLUMNS)} fields, got {len(row)}")
        links.add((row[1].strip(), row[2].strip()))
        data.append(_floats(path, lineno, [row[0], *row[3:]]))
    if len(links) != 1:
        raise DataError(f"{path}: expected exactly one link direction, found {sorted(links)}")
    (tx, rx), = links
    arr = np.array(data, dtype=float)
    return TrainingSet(arr[:, 0], Observations(*arr[:, 1:6].T.copy()), arr[:, 6], arr[:, 7],
                       float(wavelength), tx, rx, a_id, b_id)


# -- matching -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatchResult:
    training_set: TrainingSet
    kept: int
    dropped: int
    pos_a: np.ndarray
    att_a: np.ndarray
    pos_b: np.ndarray
    att_b: np.ndarray


def match_samples(pose_a: PoseLog, pose_b: PoseLog, signals: SignalLog, direction,
                  wavelength: float) -> MatchResult:
    """Attach interpolated joint poses to every signal of one link direction.

    Signals outside the time span covered by both pose logs are dropped.
    """
    tx, rx = direction
    if {tx, rx} != {pose_a.uav_id, pose_b.uav_id}:
        raise DataError(f"direction {tx}->{rx} does not match pose logs {pose_a.uav_id}, {pose_b.uav_id}")
    lo = max(pose_a.t[0], pose_b.t[0])
    hi = min(pose_a.t[-1], pose_b.t[-1])
    if lo > hi:
        raise DataError("pose logs do not overlap in time")
    sel = (signals.tx == tx) & (signals.rx == rx)
    n_dir = int(sel.sum())
    keep = sel & (signals.t >= lo) & (signals.t <= hi)
    if not keep.any():
        raise DataError(f"no {tx}->{rx} signal falls inside the pose overlap [{lo}, {hi}]")
    t = signals.t[keep]
    pos_a, att_a = pose_a.interpolate(t)
    pos_b, att_b = pose_b.interpolate(t)
    obs = observe(pos_a, att_a, pos_b, att_b)
    ts = TrainingSet(t, obs, signals.p_tx[keep], signals.p_rx[keep], float(wavelength),
                     tx, rx, pose_a.uav_id, pose_b.uav_id)
    kept = int(keep.sum())
    return MatchResult(ts, kept, n_dir - kept, pos_a, att_a, pos_b, att_b)


def dataset_hash(ts: TrainingSet) -> str:
    h = hashlib.sha256()
    for arr in (ts.t, *ts.obs, ts.p_tx, ts.p_rx):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    h.update(f"{ts.tx_id}->{ts.rx_id};{ts.wavelength!r}".encode())
    return h.hexdigest()


# -- model files --------------------------------------------------------------

def model_to_dict(model: DecoupledModel, provenance: dict | None = None) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "spec": spec_to_dict(model.spec),
        "kappa": model.kappa,
        "wavelength": model.wavelength,
        "a_id": model.a_id,
        "b_id": model.b_id,
        "phi": [float(v) for v in model.phi],
        "psi": [float(v) for v in model.psi],
        "provenance": provenance or {},
    }


def save_model(model: DecoupledModel, path, provenance: dict | None = None):
    text = json.dumps(model_to_dict(model, provenance), indent=1) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def model_from_dict(doc) -> DecoupledModel:
    if not isinstance(doc, dict):
        raise ModelFileError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format_version {version!r}, expected {MODEL_FORMAT_VERSION}")
    try:
        spec = spec_from_dict(doc["spec"])
        return DecoupledModel(spec, np.array(doc["phi"], dtype=float), np.array(doc["psi"], dtype=float),
                              float(doc["kappa"]), float(doc["wavelength"]),
                              str(doc["a_id"]), str(doc["b_id"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"invalid model file: {exc}") from None


def load_model(path) -> DecoupledModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"cannot parse model file {path}: {exc}") from None
    return model_from_dict(doc)


# -- pattern grids ------------------------------------------------------------

def pattern_lattice(n_azimuth: int, n_inclination: int):
    """Uniform lattice: azimuths ``-pi + 2 pi (i+1)/n`` (ends at pi), inclinations pole to pole."""
    alpha = -np.pi + 2 * np.pi * (np.arange(n_azimuth) + 1) / n_azimuth
    beta = np.linspace(-np.pi / 2, np.pi / 2, n_inclination) if n_inclination > 1 else np.zeros(1)
    return alpha, beta


def pattern_grid(pattern, n_azimuth: int = 360, n_inclination: int = 181):
    """Flattened ``(alpha, beta, gain)`` with azimuth as the outer index."""
    alpha, beta = pattern_lattice(n_azimuth, n_inclination)
    aa, bb = np.meshgrid(alpha, beta, indexing="ij")
    aa, bb = aa.ravel(), bb.ravel()
    return aa, bb, pattern(aa, bb)


def export_pattern_grid(pattern, n_azimuth: int, n_inclination: int, path):
    aa, bb, gg = pattern_grid(pattern, n_azimuth, n_inclination)
    _write_csv(path, GRID_COLUMNS, ([_fmt(a), _fmt(b), _fmt(g)] for a, b, g in zip(aa, bb, gg)))

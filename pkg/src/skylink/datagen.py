"""Synthetic link datasets for the two measurement scenarios.

Generates rows of (distance, altitude, frequency, path loss, P_LoS, RSS)
for a distance sweep at fixed altitude or a set of altitude waypoints at
fixed ground distance, converts path loss to received signal strength
through a link budget, and serializes datasets as CSV plus a JSON metadata
sidecar sufficient to regenerate the file bit for bit.

Fading draws use a per-row substream seeded by (budget seed, row index),
so row order and parallel generation cannot change the output.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import channel_models as cm
from .errors import ConfigurationError, DomainError, SchemaError
from .fading import RicianParams

CSV_HEADER = ["index", "scenario", "D_m", "H_m", "F_MHz", "PL_dB", "PLOS", "RSS_dBm"]

FADING_KINDS = ("off", "rician", "gaussian_shadow")
PL_MODELS = ("hata", "a2g_mean")

DEFAULT_ALTITUDES_M = tuple(float(h) for h in range(20, 201, 20))
DEFAULT_GROUND_DISTANCE_M = 500.0
DEFAULT_FREQUENCY_MHZ = 2000.0
DEFAULT_RX_HEIGHT_M = 1.5


@dataclass(frozen=True)
class FadingSpec:
    """Fading model attached to a link budget: off, rician or gaussian_shadow."""

    kind: str = "off"
    rician: RicianParams | None = None
    sigma_db: float = 0.0

    def __post_init__(self):
        if self.kind not in FADING_KINDS:
            raise ConfigurationError(
                f"fading kind must be one of {FADING_KINDS}, got {self.kind!r}"
            )
        if self.kind == "rician" and self.rician is None:
            raise ConfigurationError("rician fading requires RicianParams")
        if not math.isfinite(self.sigma_db) or self.sigma_db < 0.0:
            raise ConfigurationError(f"sigma_db must be >= 0, got {self.sigma_db!r}")


@dataclass(frozen=True)
class LinkBudget:
    """Transmit-side power accounting for the RSS conversion.

    RSS = tx_power + tx_gain + rx_gain - path_loss - fading_term, all dB.
    """

    tx_power_dbm: float
    tx_gain_dbi: float = 0.0
    rx_gain_dbi: float = 0.0
    fading: FadingSpec = field(default_factory=FadingSpec)
    seed: int = 0

    def __post_init__(self):
        for name in ("tx_power_dbm", "tx_gain_dbi", "rx_gain_dbi"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")


def fading_draw_db(budget: LinkBudget, index: int) -> float:
    """One dB fading draw for a row index, from a per-index substream.

    gaussian_shadow draws sigma_db * g with g standard normal. rician
    draws an amplitude and converts to a power loss relative to the
    distribution's mean power (-10 log10(r^2 / (s^2 + 2 delta^2))), so the
    term is mean-power-neutral for any parameter scale. off draws 0.
    """
    kind = budget.fading.kind
    if kind == "off":
        return 0.0
    rng = np.random.default_rng([budget.seed, index])
    if kind == "gaussian_shadow":
        return budget.fading.sigma_db * float(rng.standard_normal())
    params = budget.fading.rician
    g1, g2 = rng.standard_normal(2)
    amp_sq = (params.s + params.delta * g1) ** 2 + (params.delta * g2) ** 2
    mean_power = params.s**2 + 2.0 * params.delta**2
    return -10.0 * math.log10(amp_sq / mean_power)


def rss_from_path_loss(budget: LinkBudget, pl_db: float, draw_db: float = 0.0) -> float:
    """Received signal strength in dBm for a path loss and fading draw."""
    if not math.isfinite(pl_db):
        raise DomainError(f"pl_db must be finite, got {pl_db!r}")
    term = 0.0 if budget.fading.kind == "off" else draw_db
    return budget.tx_power_dbm + budget.tx_gain_dbi + budget.rx_gain_dbi - pl_db - term


@dataclass(frozen=True)
class Sample:
    """One generated measurement row."""

    index: int
    scenario: str
    d_m: float
    h_m: float
    f_mhz: float
    pl_db: float
    plos: float
    rss_dbm: float


@dataclass
class Dataset:
    """Ordered samples plus metadata sufficient for exact regeneration."""

    samples: list[Sample]
    metadata: dict


def _budget_to_dict(budget: LinkBudget) -> dict:
    fading: dict = {"kind": budget.fading.kind}
    if budget.fading.kind == "rician":
        fading["s"] = budget.fading.rician.s
        fading["delta"] = budget.fading.rician.delta
    elif budget.fading.kind == "gaussian_shadow":
        fading["sigma_db"] = budget.fading.sigma_db
    return {
        "tx_power_dbm": budget.tx_power_dbm,
        "tx_gain_dbi": budget.tx_gain_dbi,
        "rx_gain_dbi": budget.rx_gain_dbi,
        "fading": fading,
        "seed": budget.seed,
    }


def budget_from_dict(data: dict) -> LinkBudget:
    """Build a LinkBudget from its JSON form (config block or metadata)."""
    fad = data.get("fading", {"kind": "off"})
    kind = fad.get("kind", "off")
    if kind == "rician":
        spec = FadingSpec(
            kind="rician",
            rician=RicianParams(s=float(fad["s"]), delta=float(fad["delta"])),
        )
    elif kind == "gaussian_shadow":
        spec = FadingSpec(kind="gaussian_shadow", sigma_db=float(fad["sigma_db"]))
    else:
        spec = FadingSpec(kind=kind)
    return LinkBudget(
        tx_power_dbm=float(data["tx_power_dbm"]),
        tx_gain_dbi=float(data.get("tx_gain_dbi", 0.0)),
        rx_gain_dbi=float(data.get("rx_gain_dbi", 0.0)),
        fading=spec,
        seed=int(data.get("seed", 0)),
    )


def _row_channel(
    env: cm.Environment,
    h_m: float,
    d_m: float,
    f_mhz: float,
    pl_model: str,
    plos_model: str,
    rx_height_m: float,
) -> tuple[float, float]:
    """Path loss and P_LoS for one geometry under the selected models."""
    geom = cm.LinkGeometry(h=h_m, r=d_m)
    theta = cm.elevation_angle(geom)
    if plos_model == "sigmoid":
        plos = cm.plos_sigmoid(env, theta)
    elif plos_model == "holis":
        plos = cm.plos_holis(env, theta)
    elif plos_model == "product":
        plos = cm.plos_product(env, geom.h, rx_height_m, geom.r)
    else:
        raise ConfigurationError(
            f"unknown plos model {plos_model!r}; expected one of {cm.PLOS_MODELS}"
        )
    if pl_model == "a2g_mean":
        params = cm.A2GParams(f_c=f_mhz * 1e6, env=env)
        pl = cm.mean_path_loss(params, geom, plos_model, rx_height_m=rx_height_m)
    elif pl_model == "hata":
        hp = cm.HataParams(f_mhz=f_mhz, h_b=h_m, h_m=rx_height_m)
        pl = cm.hata_path_loss(hp, cm.slant_distance(geom) / 1000.0)
    else:
        raise ConfigurationError(
            f"unknown path loss model {pl_model!r}; expected one of {PL_MODELS}"
        )
    return pl, plos


def _generate(
    scenario: str,
    env: cm.Environment,
    geometries: list[tuple[float, float]],
    f_mhz: float,
    budget: LinkBudget,
    pl_model: str,
    plos_model: str,
    rx_height_m: float,
    metadata: dict,
) -> Dataset:
    samples = []
    for i, (h_m, d_m) in enumerate(geometries):
        try:
            pl, plos = _row_channel(
                env, h_m, d_m, f_mhz, pl_model, plos_model, rx_height_m
            )
        except DomainError as exc:
            raise DomainError(f"row {i}: {exc}") from exc
        rss = rss_from_path_loss(budget, pl, fading_draw_db(budget, i))
        samples.append(
            Sample(
                index=i, scenario=scenario, d_m=float(d_m), h_m=float(h_m),
                f_mhz=float(f_mhz), pl_db=pl, plos=plos, rss_dbm=rss,
            )
        )
    return Dataset(samples=samples, metadata=metadata)


def gen_distance_sweep(
    env: cm.Environment,
    h_fixed: float,
    distances: list[float],
    f_mhz: float = DEFAULT_FREQUENCY_MHZ,
    budget: LinkBudget | None = None,
    pl_model: str = "a2g_mean",
    plos_model: str = "sigmoid",
    rx_height_m: float = DEFAULT_RX_HEIGHT_M,
) -> Dataset:
    """Distance-sweep scenario: fixed altitude, increasing ground distance."""
    if budget is None:
        budget = LinkBudget(tx_power_dbm=30.0)
    if h_fixed <= 0.0:
        raise ConfigurationError(f"h_fixed must be > 0, got {h_fixed}")
    if len(distances) == 0:
        raise ConfigurationError("distances must be non-empty")
    if any(b <= a for a, b in zip(distances, distances[1:])):
        raise ConfigurationError("distances must be strictly increasing")
    metadata = {
        "scenario": "distance_sweep",
        "environment": cm.environment_to_dict(env),
        "h_m": float(h_fixed),
        "distances_m": [float(d) for d in distances],
        "f_mhz": float(f_mhz),
        "pl_model": pl_model,
        "plos_model": plos_model,
        "rx_height_m": float(rx_height_m),
        "budget": _budget_to_dict(budget),
    }
    geometries = [(float(h_fixed), float(d)) for d in distances]
    return _generate(
        "distance_sweep", env, geometries, f_mhz, budget,
        pl_model, plos_model, rx_height_m, metadata,
    )


def gen_altitude_waypoints(
    env: cm.Environment,
    altitudes: list[float] | None = None,
    r_ground: float = DEFAULT_GROUND_DISTANCE_M,
    f_mhz: float = DEFAULT_FREQUENCY_MHZ,
    budget: LinkBudget | None = None,
    pl_model: str = "a2g_mean",
    plos_model: str = "sigmoid",
    rx_height_m: float = DEFAULT_RX_HEIGHT_M,
) -> Dataset:
    """Altitude-waypoint scenario: fixed ground distance, stepped altitude.

    The default waypoint list is 20, 40, ..., 200 m.
    """
    if budget is None:
        budget = LinkBudget(tx_power_dbm=30.0)
    if altitudes is None:
        altitudes = list(DEFAULT_ALTITUDES_M)
    if len(altitudes) == 0:
        raise ConfigurationError("altitudes must be non-empty")
    if any(h <= 0.0 for h in altitudes):
        raise ConfigurationError("altitudes must all be positive")
    if r_ground < 0.0:
        raise ConfigurationError(f"r_ground must be >= 0, got {r_ground}")
    metadata = {
        "scenario": "altitude_waypoints",
        "environment": cm.environment_to_dict(env),
        "altitudes_m": [float(h) for h in altitudes],
        "r_ground_m": float(r_ground),
        "f_mhz": float(f_mhz),
        "pl_model": pl_model,
        "plos_model": plos_model,
        "rx_height_m": float(rx_height_m),
        "budget": _budget_to_dict(budget),
    }
    geometries = [(float(h), float(r_ground)) for h in altitudes]
    return _generate(
        "altitude_waypoints", env, geometries, f_mhz, budget,
        pl_model, plos_model, rx_height_m, metadata,
    )


def generate_from_metadata(metadata: dict) -> Dataset:
    """Rebuild a dataset from a metadata sidecar; bit-identical output."""
    env = cm.environment_from_dict(metadata["environment"])
    budget = budget_from_dict(metadata["budget"])
    common = dict(
        f_mhz=metadata["f_mhz"],
        budget=budget,
        pl_model=metadata["pl_model"],
        plos_model=metadata["plos_model"],
        rx_height_m=metadata["rx_height_m"],
    )
    kind = metadata.get("scenario")
    if kind == "distance_sweep":
        return gen_distance_sweep(
            env, metadata["h_m"], metadata["distances_m"], **common
        )
    if kind == "altitude_waypoints":
        return gen_altitude_waypoints(
            env, metadata["altitudes_m"], metadata["r_ground_m"], **common
        )
    raise ConfigurationError(f"unknown scenario kind {kind!r} in metadata")


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle-and-partition into train and test datasets.

    Both sides keep the original sample order (by index) and a metadata
    record of the split; both must be non-empty.
    """
    if not (0.0 < train_fraction < 1.0):
        raise ConfigurationError(
            f"train_fraction must be in (0, 1), got {train_fraction}"
        )
    n = len(dataset.samples)
    n_train = int(n * train_fraction)
    if n_train == 0 or n_train == n:
        raise ConfigurationError(
            f"fraction {train_fraction} on {n} rows would empty one split"
        )
    order = np.random.default_rng(seed).permutation(n)
    picks = (sorted(order[:n_train].tolist()), sorted(order[n_train:].tolist()))
    out = []
    for role, pick in zip(("train", "test"), picks):
        meta = dict(dataset.metadata)
        meta["split"] = {"role": role, "train_fraction": train_fraction, "seed": seed}
        out.append(Dataset(samples=[dataset.samples[i] for i in pick], metadata=meta))
    return out[0], out[1]


def features_targets(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix (D, H, F, P) and target column (RSS) as arrays."""
    x = np.array(
        [[s.d_m, s.h_m, s.f_mhz, s.pl_db] for s in dataset.samples], dtype=float
    )
    y = np.array([[s.rss_dbm] for s in dataset.samples], dtype=float)
    return x, y


def _format(value: float) -> str:
    return repr(float(value))


def metadata_path_for(csv_path: str) -> str:
    """Sidecar JSON path: same basename with a .json extension."""
    stem, _ = os.path.splitext(csv_path)
    return stem + ".json"


def write_dataset(dataset: Dataset, csv_path: str) -> str:
    """Write the CSV and its JSON metadata sidecar; returns sidecar path.

    Floats are written in repr form (shortest exact round-trip), line
    endings are line feeds.
    """
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for s in dataset.samples:
            writer.writerow([
                s.index, s.scenario, _format(s.d_m), _format(s.h_m),
                _format(s.f_mhz), _format(s.pl_db), _format(s.plos),
                _format(s.rss_dbm),
            ])
    sidecar = metadata_path_for(csv_path)
    with open(sidecar, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(dataset.metadata, fh, indent=2)
        fh.write("\n")
    return sidecar


def read_dataset(csv_path: str) -> Dataset:
    """Read a dataset CSV (and sidecar metadata if present); schema-checked."""
    samples = []
    seen = set()
    with open(csv_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{csv_path}:1: empty file") from None
        if header != CSV_HEADER:
            raise SchemaError(
                f"{csv_path}:1: header {header!r} does not match "
                f"{','.join(CSV_HEADER)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise SchemaError(
                    f"{csv_path}:{lineno}: expected {len(CSV_HEADER)} fields, "
                    f"got {len(row)}"
                )
            try:
                sample = Sample(
                    index=int(row[0]), scenario=row[1], d_m=float(row[2]),
                    h_m=float(row[3]), f_mhz=float(row[4]), pl_db=float(row[5]),
                    plos=float(row[6]), rss_dbm=float(row[7]),
                )
            except ValueError as exc:
                raise SchemaError(f"{csv_path}:{lineno}: {exc}") from None
            if not (0.0 <= sample.plos <= 1.0):
                raise SchemaError(
                    f"{csv_path}:{lineno}: PLOS {sample.plos} outside [0, 1]"
                )
            if sample.index in seen:
                raise SchemaError(
                    f"{csv_path}:{lineno}: duplicate index {sample.index}"
                )
            seen.add(sample.index)
            samples.append(sample)
    if not samples:
        raise SchemaError(f"{csv_path}: no data rows")
    metadata = {}
    sidecar = metadata_path_for(csv_path)
    if os.path.exists(sidecar):
        with open(sidecar, encoding="utf-8") as fh:
            metadata = json.load(fh)
    return Dataset(samples=samples, metadata=metadata)


def write_curve_csv(
    path: str, comments: list[str], header: list[str], rows: list[list]
) -> None:
    """Plot-ready CSV with #-prefixed comment lines before the header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                _format(v) if isinstance(v, float) else v for v in row
            ])


def read_curve_csv(path: str) -> tuple[list[str], list[str], list[list[float]]]:
    """Read back a curve CSV: (comment lines, header, float rows)."""
    comments = []
    with open(path, encoding="utf-8", newline="") as fh:
        pos = fh.tell()
        while True:
            line = fh.readline()
            if line.startswith("#"):
                comments.append(line[1:].strip())
                pos = fh.tell()
            else:
                fh.seek(pos)
                break
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: no header row") from None
        rows = []
        for lineno, row in enumerate(reader, start=len(comments) + 2):
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return comments, header, rows

"""Command-line harness: generate, train, predict, eval, curves.

Every command is driven by a JSON run config and is deterministic given
that config (seeds included); reruns produce byte-identical artifacts.
Exit codes: 0 success, 1 runtime/numeric failure, 2 usage or validation
failure. The SKYLINK_LOG environment variable (error, warn, info, debug)
sets the log level.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import re
import sys

import numpy as np

from . import __version__
from . import channel_models as cm
from . import datagen
from . import fading
from . import rbf_net
from .errors import (
    ConfigurationError,
    DomainError,
    SchemaError,
    SkylinkError,
)

logger = logging.getLogger(__name__)

LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

FEATURE_HEADER = ["D_m", "H_m", "F_MHz", "PL_dB"]

_MISSING = object()


def _setup_logging() -> None:
    raw = os.environ.get("SKYLINK_LOG", "warn").lower()
    if raw not in LOG_LEVELS:
        logging.basicConfig(level=logging.WARNING)
        logger.warning("unknown SKYLINK_LOG value %r; using warn", raw)
        return
    logging.basicConfig(level=LOG_LEVELS[raw])


class RunConfig:
    """Parsed run config with path/line-aware error reporting."""

    def __init__(self, path: str):
        self.path = path
        with open(path, encoding="utf-8") as fh:
            self.text = fh.read()
        try:
            self.data = json.loads(self.text)
        except json.JSONDecodeError as exc:
            raise SchemaError(
                f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
            ) from exc
        if not isinstance(self.data, dict):
            raise SchemaError(f"{path}: run config must be a JSON object")

    def _line_of(self, key: str) -> int | None:
        match = re.search(rf'"{re.escape(key)}"\s*:', self.text)
        if match is None:
            return None
        return self.text.count("\n", 0, match.start()) + 1

    def where(self, dotted: str) -> str:
        line = self._line_of(dotted.split(".")[-1])
        return f"{self.path}:{line}" if line else self.path

    def get(self, dotted: str, default=_MISSING):
        node = self.data
        for part in dotted.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is not _MISSING:
                    return default
                raise ConfigurationError(
                    f"{self.path}: missing required config key {dotted!r}"
                )
            node = node[part]
        return node

    def fail(self, dotted: str, message: str) -> ConfigurationError:
        return ConfigurationError(f"{self.where(dotted)}: {dotted}: {message}")

    def sha256(self) -> str:
        canonical = json.dumps(
            self.data, sort_keys=True, separators=(",", ":")
        ).encode()
        return hashlib.sha256(canonical).hexdigest()[:12]


def _fmt(value: float) -> str:
    return repr(float(value))


def _resolve_path(cfg: RunConfig, p: str) -> str:
    if os.path.isabs(p):
        return p
    return os.path.join(os.path.dirname(os.path.abspath(cfg.path)), p)


def _load_environments(cfg: RunConfig) -> dict[str, cm.Environment]:
    env_file = _resolve_path(cfg, cfg.get("environment_file"))
    if not os.path.exists(env_file):
        raise ConfigurationError(
            f"{cfg.where('environment_file')}: environment file "
            f"{env_file!r} does not exist"
        )
    return cm.load_environments(env_file)


def _selected_environment(cfg: RunConfig) -> cm.Environment:
    envs = _load_environments(cfg)
    name = cfg.get("environment")
    if name not in envs:
        raise cfg.fail(
            "environment",
            f"{name!r} not defined (file has {sorted(envs)})",
        )
    return envs[name]


def _budget(cfg: RunConfig, seed_override: int | None) -> datagen.LinkBudget:
    block = cfg.get("budget", {"tx_power_dbm": 30.0})
    try:
        budget = datagen.budget_from_dict(block)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise cfg.fail("budget", f"malformed budget block: {exc}") from exc
    if seed_override is not None:
        budget = datagen.LinkBudget(
            tx_power_dbm=budget.tx_power_dbm,
            tx_gain_dbi=budget.tx_gain_dbi,
            rx_gain_dbi=budget.rx_gain_dbi,
            fading=budget.fading,
            seed=seed_override,
        )
    return budget


def _rbf_config(cfg: RunConfig, seed_override: int | None) -> rbf_net.RbfConfig:
    block = dict(cfg.get("rbf", {}))
    if seed_override is not None:
        block["seed"] = seed_override
    try:
        return rbf_net.RbfConfig(**block)
    except TypeError as exc:
        raise cfg.fail("rbf", f"malformed rbf block: {exc}") from exc


def _distances_from_block(cfg: RunConfig, block: dict) -> list[float]:
    spec = block.get("distances_m")
    if spec is None:
        raise cfg.fail("distances_m", "missing from distance_sweep scenario")
    if isinstance(spec, list):
        return [float(v) for v in spec]
    if isinstance(spec, dict) and set(spec) == {"start", "stop", "count"}:
        return np.linspace(
            float(spec["start"]), float(spec["stop"]), int(spec["count"])
        ).tolist()
    raise cfg.fail(
        "distances_m", "must be a list or an object with start, stop, count"
    )


def _scenario_dataset(
    cfg: RunConfig,
    env: cm.Environment,
    budget: datagen.LinkBudget,
    force_kind: str | None = None,
) -> datagen.Dataset:
    block = cfg.get("scenario", {})
    kind = block.get("kind", force_kind)
    if force_kind is not None and kind != force_kind:
        block = {}
        kind = force_kind
    pl_model = cfg.get("pl_model", "a2g_mean")
    plos_model = cfg.get("plos_model", "sigmoid")
    common = dict(
        f_mhz=float(block.get("f_mhz", datagen.DEFAULT_FREQUENCY_MHZ)),
        budget=budget,
        pl_model=pl_model,
        plos_model=plos_model,
        rx_height_m=float(block.get("rx_height_m", datagen.DEFAULT_RX_HEIGHT_M)),
    )
    if kind == "distance_sweep":
        if "distances_m" in block or "h_m" in block:
            distances = _distances_from_block(cfg, block)
            h_m = float(block.get("h_m", 100.0))
        else:
            distances = np.linspace(100.0, 2000.0, 200).tolist()
            h_m = 100.0
        return datagen.gen_distance_sweep(env, h_m, distances, **common)
    if kind == "altitude_waypoints":
        altitudes = block.get("altitudes_m")
        if altitudes is not None:
            altitudes = [float(v) for v in altitudes]
        r_ground = float(block.get("r_ground_m", datagen.DEFAULT_GROUND_DISTANCE_M))
        return datagen.gen_altitude_waypoints(env, altitudes, r_ground, **common)
    raise cfg.fail("scenario", f"unknown scenario kind {kind!r}")


def _out_dir(args, cfg: RunConfig | None) -> str:
    out = args.out
    if out is None and cfg is not None:
        out = cfg.get("out_dir", "out")
    if out is None:
        out = "out"
    os.makedirs(out, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    cfg = RunConfig(args.config)
    out = _out_dir(args, cfg)
    env = _selected_environment(cfg)
    budget = _budget(cfg, args.seed)
    dataset = _scenario_dataset(cfg, env, budget)
    csv_path = os.path.join(out, "dataset.csv")
    sidecar = datagen.write_dataset(dataset, csv_path)
    print(f"wrote {len(dataset.samples)} rows to {csv_path}")
    print(f"wrote metadata to {sidecar}")
    return 0


def _split_for_training(
    cfg: RunConfig, dataset: datagen.Dataset, seed_override: int | None
) -> tuple[datagen.Dataset, datagen.Dataset]:
    fraction = float(cfg.get("train.train_fraction", 0.8))
    seed = int(cfg.get("train.split_seed", 13))
    if seed_override is not None:
        seed = seed_override
    return datagen.split(dataset, fraction, seed)


def _train_model(
    cfg: RunConfig, dataset: datagen.Dataset, seed_override: int | None
) -> tuple[rbf_net.RbfNetwork, rbf_net.RbfConfig, rbf_net.TrainReport]:
    rbf_cfg = _rbf_config(cfg, seed_override)
    train_ds, test_ds = _split_for_training(cfg, dataset, seed_override)
    x_train, y_train = datagen.features_targets(train_ds)
    x_test, y_test = datagen.features_targets(test_ds)
    net = rbf_net.init_network(rbf_cfg, x_train)
    net, report = rbf_net.train(
        net, x_train, y_train, rbf_cfg, validation=(x_test, y_test)
    )
    return net, rbf_cfg, report


def cmd_train(args) -> int:
    cfg = RunConfig(args.config)
    out = _out_dir(args, cfg)
    dataset = datagen.read_dataset(args.dataset)
    net, rbf_cfg, report = _train_model(cfg, dataset, args.seed)
    model_path = os.path.join(out, "model.json")
    rbf_net.save_model(model_path, net, rbf_cfg)
    report_path = os.path.join(out, "training_report.csv")
    datagen.write_curve_csv(
        report_path,
        [
            f"skylink {__version__} config_sha256={cfg.sha256()}",
            f"final_train_rmse_db={_fmt(report.final_train_rmse_db)}",
            f"final_val_rmse_db={_fmt(report.final_val_rmse_db)}",
        ],
        ["epoch", "mse"],
        [[e, m] for e, m in enumerate(report.mse_per_epoch)],
    )
    print(f"wrote model to {model_path}")
    print(f"wrote report to {report_path}")
    print(f"train_rmse_db={_fmt(report.final_train_rmse_db)}")
    print(f"val_rmse_db={_fmt(report.final_val_rmse_db)}")
    mse = report.mse_per_epoch
    if rbf_cfg.update_mode == "paper_literal" and mse[-1] >= mse[0]:
        print(
            "warning: paper_literal updates did not reduce the training MSE "
            f"({_fmt(mse[0])} -> {_fmt(mse[-1])}); this update rule ascends "
            "the squared-error objective",
            file=sys.stderr,
        )
    return 0


def _predict_features(args, net: rbf_net.RbfNetwork) -> np.ndarray:
    if args.row is not None:
        try:
            values = [float(v) for v in args.row.split(",")]
        except ValueError as exc:
            raise DomainError(f"--row must be comma-separated numbers: {exc}")
        return np.array([values], dtype=float)
    with open(args.input, encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
    if first == ",".join(datagen.CSV_HEADER):
        ds = datagen.read_dataset(args.input)
        x, _ = datagen.features_targets(ds)
        return x
    if first == ",".join(FEATURE_HEADER):
        rows = []
        with open(args.input, encoding="utf-8", newline="") as fh:
            next(fh)
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != len(FEATURE_HEADER):
                    raise SchemaError(
                        f"{args.input}:{lineno}: expected "
                        f"{len(FEATURE_HEADER)} fields, got {len(parts)}"
                    )
                try:
                    rows.append([float(v) for v in parts])
                except ValueError as exc:
                    raise SchemaError(f"{args.input}:{lineno}: {exc}") from None
        if not rows:
            raise SchemaError(f"{args.input}: no data rows")
        return np.array(rows, dtype=float)
    raise SchemaError(
        f"{args.input}:1: header must be either the dataset schema or "
        f"{','.join(FEATURE_HEADER)!r}"
    )


def cmd_predict(args) -> int:
    net, _ = rbf_net.load_model(args.model)
    features = _predict_features(args, net)
    if features.shape[1] != net.input_dim:
        raise DomainError(
            f"model expects {net.input_dim} features per row, got {features.shape[1]}"
        )
    outside = np.any(
        (features < net.norm.x_min) | (features > net.norm.x_max), axis=1
    )
    if np.any(outside):
        logger.warning(
            "%d of %d input rows fall outside the model's training feature "
            "range; extrapolating",
            int(outside.sum()), features.shape[0],
        )
    for row in features:
        value = net.predict(row)
        print(_fmt(float(value[0])))
    return 0


def cmd_eval(args) -> int:
    net, _ = rbf_net.load_model(args.model)
    dataset = datagen.read_dataset(args.dataset)
    x, y = datagen.features_targets(dataset)
    if x.shape[1] != net.input_dim or y.shape[1] != net.output_dim:
        raise DomainError(
            f"model dimensions ({net.input_dim} features, {net.output_dim} "
            f"outputs) do not match the dataset"
        )
    err = net.predict(x).reshape(y.shape) - y
    print(f"rmse_db={_fmt(float(np.sqrt(np.mean(err ** 2))))}")
    print(f"mae_db={_fmt(float(np.mean(np.abs(err))))}")
    print(f"max_abs_error_db={_fmt(float(np.max(np.abs(err))))}")
    return 0


def _provenance(cfg: RunConfig) -> str:
    return f"skylink {__version__} config_sha256={cfg.sha256()}"


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", name)


def _curve_rician(cfg: RunConfig, out: str) -> list[str]:
    k_list = [float(k) for k in cfg.get("curves.rician_k", [0.0, 50.0, 100.0])]
    in_db = bool(cfg.get("curves.rician_k_db", False))
    r_max = float(cfg.get("curves.rician_r_max", 3.0))
    points = int(cfg.get("curves.rician_points", 301))
    if r_max <= 0.0 or points < 2:
        raise cfg.fail("curves", "rician grid needs r_max > 0 and points >= 2")
    grid = np.linspace(0.0, r_max, points)
    columns = []
    labels = []
    for k in k_list:
        k_lin = 10.0 ** (k / 10.0) if in_db else k
        params = fading.params_from_k(k_lin)
        unit = "dB" if in_db else ""
        label = f"K={k:g}{unit}" + (" (Rayleigh)" if k_lin == 0.0 else "")
        labels.append(label)
        columns.append([fading.rician_pdf(params, float(r)) for r in grid])
    header = ["r"] + [f"pdf_K{k:g}{'dB' if in_db else ''}" for k in k_list]
    rows = [
        [float(r)] + [col[i] for col in columns] for i, r in enumerate(grid)
    ]
    path = os.path.join(out, "rician.csv")
    comments = [
        _provenance(cfg),
        "amplitude density, unit mean power per series",
        "series: " + ", ".join(labels),
    ]
    datagen.write_curve_csv(path, comments, header, rows)
    return [path]


def _plos_columns(env: cm.Environment) -> list[str]:
    cols = ["plos_product"]
    if env.c is not None:
        cols.append("plos_holis")
    if env.sigmoid is not None:
        cols.append("plos_sigmoid")
    return cols


def _plos_value(env: cm.Environment, model: str, theta: float, h: float, rx: float):
    if model == "plos_product":
        r = cm.ground_distance_for_angle(h, theta)
        return cm.plos_product(env, h, rx, r)
    if model == "plos_holis":
        return cm.plos_holis(env, theta)
    return cm.plos_sigmoid(env, theta)


def _curve_plos_angle(cfg: RunConfig, out: str) -> list[str]:
    envs = _load_environments(cfg)
    h = float(cfg.get("curves.uav_height_m", 100.0))
    rx = float(cfg.get("curves.rx_height_m", datagen.DEFAULT_RX_HEIGHT_M))
    thetas = [float(t) for t in range(0, 91)]
    written = []
    for env in envs.values():
        cols = _plos_columns(env)
        rows = []
        for theta in thetas:
            rows.append(
                [theta] + [_plos_value(env, c, theta, h, rx) for c in cols]
            )
        path = os.path.join(out, f"plos_angle_{_safe_name(env.name)}.csv")
        comments = [
            _provenance(cfg),
            f"environment={env.name} uav_height_m={_fmt(h)} rx_height_m={_fmt(rx)}",
        ]
        datagen.write_curve_csv(path, comments, ["theta_deg"] + cols, rows)
        written.append(path)
    return written


def _curve_plos_fit(cfg: RunConfig, out: str) -> list[str]:
    envs = _load_environments(cfg)
    h = float(cfg.get("curves.uav_height_m", 100.0))
    rx = float(cfg.get("curves.rx_height_m", datagen.DEFAULT_RX_HEIGHT_M))
    theta_min = float(cfg.get("curves.theta_min_deg", 10.0))
    thetas = [float(t) for t in range(int(theta_min), 91)]
    written = []
    for env in envs.values():
        produced = [
            cm.plos_product(env, h, rx, cm.ground_distance_for_angle(h, t))
            for t in thetas
        ]
        fit_samples = [
            (t, p) for t, p in zip(thetas, produced) if 0.0 < p < 1.0
        ]
        a, b = cm.fit_sigmoid(fit_samples)
        fit_env = cm.Environment(
            name=env.name, alpha=env.alpha, beta=env.beta, gamma=env.gamma,
            eps_los_db=env.eps_los_db, eps_nlos_db=env.eps_nlos_db,
            sigmoid=(a, b),
        )
        fitted = [cm.plos_sigmoid(fit_env, t) for t in thetas]
        rmse = float(
            np.sqrt(np.mean((np.array(fitted) - np.array(produced)) ** 2))
        )
        rows = [[t, p, f] for t, p, f in zip(thetas, produced, fitted)]
        path = os.path.join(out, f"plos_fit_{_safe_name(env.name)}.csv")
        comments = [
            _provenance(cfg),
            f"environment={env.name} uav_height_m={_fmt(h)} rx_height_m={_fmt(rx)}",
            f"fitted a={_fmt(a)} b={_fmt(b)} rmse={_fmt(rmse)}",
        ]
        datagen.write_curve_csv(
            path, comments,
            ["theta_deg", "plos_product", "plos_sigmoid_fit"], rows,
        )
        written.append(path)
    return written


def _curve_rss(cfg: RunConfig, out: str, args, kind: str) -> list[str]:
    env = _selected_environment(cfg)
    budget = _budget(cfg, args.seed)
    dataset = _scenario_dataset(cfg, env, budget, force_kind=kind)
    net, _, report = _train_model(cfg, dataset, args.seed)
    x, y = datagen.features_targets(dataset)
    predicted = net.predict(x).reshape(-1)
    axis = 0 if kind == "distance_sweep" else 1
    header = ["D_m" if axis == 0 else "H_m", "rss_empirical_dbm", "rss_predicted_dbm"]
    rows = [
        [float(x[i, axis]), float(y[i, 0]), float(predicted[i])]
        for i in range(x.shape[0])
    ]
    name = "rss_distance" if kind == "distance_sweep" else "rss_altitude"
    path = os.path.join(out, f"{name}.csv")
    comments = [
        _provenance(cfg),
        f"environment={env.name} scenario={kind}",
        f"val_rmse_db={_fmt(report.final_val_rmse_db)}",
    ]
    datagen.write_curve_csv(path, comments, header, rows)
    return [path]


def cmd_curves(args) -> int:
    cfg = RunConfig(args.config)
    out = _out_dir(args, cfg)
    if args.which == "rician":
        written = _curve_rician(cfg, out)
    elif args.which == "plos_angle":
        written = _curve_plos_angle(cfg, out)
    elif args.which == "plos_fit":
        written = _curve_plos_fit(cfg, out)
    elif args.which == "rss_distance":
        written = _curve_rss(cfg, out, args, "distance_sweep")
    else:
        written = _curve_rss(cfg, out, args, "altitude_waypoints")
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config path")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument(
        "--seed", type=int, help="override every seed in the config"
    )

    parser = argparse.ArgumentParser(
        prog="skylink",
        description="UAV-to-ground channel toolkit: datasets, RBF training, curves",
    )
    parser.add_argument(
        "--version", action="version", version=f"skylink {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="generate a dataset")
    p.set_defaults(func=cmd_generate, needs_config=True)

    p = sub.add_parser("train", parents=[common], help="train an RBF model")
    p.add_argument("dataset", help="dataset CSV path")
    p.set_defaults(func=cmd_train, needs_config=True)

    p = sub.add_parser("predict", parents=[common], help="predict RSS rows")
    p.add_argument("model", help="model JSON path")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--row", help="comma-separated D,H,F,P feature row")
    group.add_argument("--input", help="CSV of feature rows or a dataset CSV")
    p.set_defaults(func=cmd_predict, needs_config=False)

    p = sub.add_parser("eval", parents=[common], help="evaluate a model")
    p.add_argument("model", help="model JSON path")
    p.add_argument("dataset", help="dataset CSV path")
    p.set_defaults(func=cmd_eval, needs_config=False)

    p = sub.add_parser("curves", parents=[common], help="emit figure curves")
    p.add_argument(
        "which",
        choices=["rician", "plos_angle", "plos_fit", "rss_distance", "rss_altitude"],
    )
    p.set_defaults(func=cmd_curves, needs_config=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    if args.needs_config and args.config is None:
        print("error: --config is required for this command", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (SchemaError, ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SkylinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

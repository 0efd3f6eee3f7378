"""End-to-end toy pipeline: data, base model, per-sample optimization, certification, metrics."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .certify import CertifyConfig, certify_dataset
from .config import dump_flat, load_flat, parse_flat
from .data import generate_radial_dataset, load_csv, save_csv
from .errors import AncerError, ConfigError, StageError
from .metrics import (acr, certified_accuracy_curve, factor_histograms, find_witness_delta,
                      superset_stats, write_factor_csvs)
from .nn_core import Dataset, accuracy, load_model, save_model, train_classifier
from .optimize import OptimizerConfig, optimize_ancer, optimize_isotropic
from .report import CertificationReport, fingerprint, write_report
from .smoothing import SmoothingSpec

log = logging.getLogger(__name__)

VARIANTS = ("fixed", "isotropic", "ancer")


@dataclass(frozen=True)
class ExperimentConfig:
    out_dir: str = "ancer_run"
    # data: CSV paths win over generation when set
    train_path: str = ""
    test_path: str = ""
    train_count: int = 1000
    test_count: int = 200
    data_noise: float = 0.0
    train_seed: int = 1
    test_seed: int = 2
    # base model
    model_path: str = ""
    train: bool = True
    arch: str = "2,32,32,2"
    epochs: int = 200
    train_lr: float = 0.05
    batch: int = 32
    model_seed: int = 0
    train_noise: float = 0.0
    # smoothing and optimization
    kind: str = "gaussian"
    fixed_sigma: float = 0.25
    init_sigma: float = 0.25
    iterations: int = 100
    samples_per_iter: int = 100
    kappa: float = 2.0
    learning_rate: float | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    opt_seed: int = 0
    eval_samples: int = 10_000
    # certification
    n0: int = 100
    n: int = 100_000
    alpha: float = 0.001
    cert_seed: int = 0
    workers: int = 1
    record_time: bool = False
    # metrics
    radii: str = "0,0.25,0.5,0.75,1,1.5,2"
    hist_bins: int = 20

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise ConfigError(f"kind must be gaussian or uniform, got {self.kind!r}")
        if not self.fixed_sigma > 0 or not self.init_sigma > 0:
            raise ConfigError("fixed_sigma and init_sigma must be positive")
        if self.n0 < 1 or self.n < 1 or not 0.0 < self.alpha < 1.0:
            raise ConfigError("need n0 >= 1, n >= 1 and 0 < alpha < 1")
        self.arch_list()
        self.radii_list()

    def arch_list(self) -> list[int]:
        try:
            return [int(a) for a in self.arch.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad arch {self.arch!r}") from exc

    def radii_list(self) -> list[float]:
        try:
            radii = [float(r) for r in self.radii.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad radii {self.radii!r}") from exc
        if radii != sorted(radii):
            raise ConfigError("radii must be ascending")
        return radii

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(iterations=self.iterations, samples_per_iter=self.samples_per_iter,
                               kappa=self.kappa, learning_rate=self.learning_rate,
                               adam_beta1=self.adam_beta1, adam_beta2=self.adam_beta2,
                               adam_eps=self.adam_eps, seed=self.opt_seed,
                               eval_samples=self.eval_samples)

    def certifier(self) -> CertifyConfig:
        return CertifyConfig(n0=self.n0, n=self.n, alpha=self.alpha, seed=self.cert_seed,
                             workers=self.workers, record_time=self.record_time)

    def fingerprint(self) -> str:
        # locations and worker count do not change any result
        skip = ("out_dir", "model_path", "workers")
        return fingerprint({f.name: getattr(self, f.name) for f in fields(self) if f.name not in skip})


def parse_experiment_config(text: str, source: str = "<config>") -> ExperimentConfig:
    return parse_flat(text, ExperimentConfig, source)


def load_experiment_config(path) -> ExperimentConfig:
    return load_flat(path, ExperimentConfig)


@dataclass
class ExperimentResult:
    out_dir: Path
    reports: dict[str, CertificationReport]
    summary: dict[str, str]
    files: list[Path] = field(default_factory=list)


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (AncerError, OSError, ArithmeticError) as exc:
                if isinstance(exc, StageError):
                    raise
                raise StageError(name, exc) from exc
        return run
    return wrap


@_stage("data")
def _load_data(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    train = load_csv(cfg.train_path) if cfg.train_path else \
        generate_radial_dataset(cfg.train_count, cfg.data_noise, cfg.train_seed)
    test = load_csv(cfg.test_path) if cfg.test_path else \
        generate_radial_dataset(cfg.test_count, cfg.data_noise, cfg.test_seed)
    return train, test


@_stage("model")
def _get_model(cfg: ExperimentConfig, train: Dataset, out: Path):
    if not cfg.train:
        return load_model(cfg.model_path)
    model = train_classifier(train, cfg.arch_list(), lr=cfg.train_lr, epochs=cfg.epochs,
                             batch=cfg.batch, seed=cfg.model_seed, noise_sd=cfg.train_noise)
    save_model(model, cfg.model_path or out / "model.txt")
    return model


@_stage("optimize")
def _optimize(cfg: ExperimentConfig, model, test: Dataset):
    ocfg = cfg.optimizer()
    iso, anc = [], []
    for i, x in enumerate(test.inputs):
        sigma, _ = optimize_isotropic(model, x, cfg.init_sigma, ocfg, cfg.kind, i)
        iso.append(SmoothingSpec.isotropic(cfg.kind, sigma, test.dim))
        anc.append(optimize_ancer(model, x, sigma, ocfg, cfg.kind, i))
    return iso, anc


@_stage("certify")
def _certify(cfg: ExperimentConfig, model, test: Dataset, specs: dict):
    ccfg = cfg.certifier()
    return {name: certify_dataset(model, test, specs[name], ccfg) for name in VARIANTS}


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


@_stage("metrics")
def _emit(cfg: ExperimentConfig, out: Path, reports: dict, model, test: Dataset) -> tuple[dict, list]:
    files = []
    for name, rep in reports.items():
        rep.fingerprint = cfg.fingerprint()
        path = out / f"{name}.csv"
        write_report(rep, path)
        files += [path, path.with_name(f"{name}.thetas.csv")]

    radii = cfg.radii_list()
    curves = {(name, proxy): certified_accuracy_curve(reports[name], radii, proxy)
              for name in VARIANTS for proxy in (False, True)}
    path = out / "curves.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["radius"] + [f"{n}{'_proxy' if p else ''}" for p in (False, True) for n in VARIANTS])
        for j, r in enumerate(radii):
            w.writerow([repr(r)] + [repr(curves[(n, p)][j][1]) for p in (False, True) for n in VARIANTS])
    files.append(path)

    sup = {f"ancer_vs_{b}": superset_stats(reports["ancer"], reports[b]) for b in ("isotropic", "fixed")}
    path = out / "superset.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["comparison", "radius_pct", "region_pct", "undetermined", "rows"])
        for key, t in sup.items():
            w.writerow([key, repr(t.radius), repr(t.region), t.undetermined, t.rows])
    files.append(path)

    hist = factor_histograms(reports["isotropic"], reports["ancer"], cfg.hist_bins)
    pairs, hpath = out / "factors.csv", out / "factor_hist.csv"
    write_factor_csvs(hist, pairs, hpath)
    files += [pairs, hpath]

    path = out / "witnesses.csv"
    witnesses = 0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["idx"] + [f"delta_{k}" for k in range(test.dim)])
        for ra, ri in zip(reports["ancer"].rows, reports["isotropic"].rows):
            if ra.abstain or ri.abstain or ra.predicted != ri.predicted:
                continue
            delta = find_witness_delta(ra, ri)
            if delta is not None:
                witnesses += 1
                w.writerow([ra.idx] + [repr(float(v)) for v in delta])
    files.append(path)

    summary = {"fingerprint": cfg.fingerprint(), "rows": len(test),
               "train_accuracy": model.train_accuracy if model.train_accuracy is not None else "nan",
               "test_accuracy": accuracy(model, test)}
    for name in VARIANTS:
        rep = reports[name]
        summary[f"{name}.acr"] = acr(rep)
        summary[f"{name}.acr_proxy"] = acr(rep, use_proxy=True)
        summary[f"{name}.clean_accuracy"] = certified_accuracy_curve(rep, [0.0])[0][1]
        summary[f"{name}.abstain"] = sum(r.abstain for r in rep.rows)
    for key, t in sup.items():
        summary[f"{key}.radius_pct"] = t.radius
        summary[f"{key}.region_pct"] = t.region
    for key, v in hist.medians.items():
        summary[f"median.{key}"] = v
    summary["witnesses"] = witnesses
    summary = {k: _fmt(v) for k, v in summary.items()}
    path = out / "summary.txt"
    path.write_text("".join(f"{k} = {v}\n" for k, v in summary.items()))
    (out / "config.txt").write_text(dump_flat(cfg))
    files += [path, out / "config.txt"]
    return summary, files


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every stage and write reports, curves, superset table, factor CSVs,
    witnesses and ``summary.txt`` into ``cfg.out_dir``. A failing stage raises
    StageError naming it."""
    if not cfg.train and not (cfg.model_path and Path(cfg.model_path).is_file()):
        raise ConfigError(f"train is disabled but model_path {cfg.model_path!r} is not a file")
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("setup", exc) from exc
    train, test = _load_data(cfg)
    if cfg.train_path == "" and cfg.test_path == "":
        save_csv(test, out / "test.csv")
    log.info("data: %d train, %d test", len(train), len(test))
    model = _get_model(cfg, train, out)
    if model.input_dim != test.dim:
        raise StageError("model", ConfigError(f"model input {model.input_dim} != data dimension {test.dim}"))
    iso, anc = _optimize(cfg, model, test)
    fixed = [SmoothingSpec.isotropic(cfg.kind, cfg.fixed_sigma, test.dim)] * len(test)
    log.info("optimized %d samples; certifying", len(test))
    reports = _certify(cfg, model, test, {"fixed": fixed, "isotropic": iso, "ancer": anc})
    summary, files = _emit(cfg, out, reports, model, test)
    return ExperimentResult(out, reports, summary, files)

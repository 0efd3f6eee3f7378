"""Command-line entry point: ``ancer <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .certify import CertifyConfig, certify_dataset
from .data import generate_radial_dataset, load_csv, save_csv
from .errors import (AncerError, ConfigError, DomainError, NumericError,
                     SpecKindError, StageError)
from .experiment import load_experiment_config, run_experiment
from .metrics import acr, certified_accuracy_curve, superset_stats
from .nn_core import load_model, save_model, train_classifier
from .optimize import OptimizerConfig, load_config, optimize_ancer, optimize_isotropic
from .report import read_report, write_report
from .smoothing import SmoothingSpec, read_theta_file, write_theta_file

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _numbers(text: str, kind=float) -> list:
    try:
        return [kind(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def cmd_gen_data(a) -> int:
    save_csv(generate_radial_dataset(a.count, a.noise, a.seed), a.out)
    return EXIT_OK


def cmd_train(a) -> int:
    data = load_csv(a.data)
    arch = _numbers(a.arch, int)
    model = train_classifier(data, arch, lr=a.lr, epochs=a.epochs, batch=a.batch,
                             seed=a.seed, noise_sd=a.noise_sd)
    save_model(model, a.out)
    print(f"training accuracy {model.train_accuracy:.4f}")
    return EXIT_OK


def cmd_optimize(a) -> int:
    model, data = load_model(a.model), load_csv(a.data)
    cfg = load_config(a.config) if a.config else OptimizerConfig()
    specs = []
    for i, x in enumerate(data.inputs):
        sigma, _ = optimize_isotropic(model, x, a.init_sigma, cfg, a.kind, i)
        if a.mode == "isotropic":
            specs.append(SmoothingSpec.isotropic(a.kind, sigma, data.dim))
        else:
            specs.append(optimize_ancer(model, x, sigma, cfg, a.kind, i))
    write_theta_file(a.out_thetas, specs)
    return EXIT_OK


def cmd_certify(a) -> int:
    model, data = load_model(a.model), load_csv(a.data)
    specs = read_theta_file(a.thetas)
    wrong = {s.kind for s in specs} - {a.kind}
    if wrong:
        raise ConfigError(f"--kind {a.kind} but the theta file holds {sorted(wrong)}")
    cfg = CertifyConfig(n0=a.n0, n=a.n, alpha=a.alpha, seed=a.seed, workers=a.workers,
                        record_time=a.record_time)
    write_report(certify_dataset(model, data, specs, cfg), a.out)
    return EXIT_OK


def cmd_report(a) -> int:
    radii = sorted(_numbers(a.radii))
    for path in a.inputs:
        rep = read_report(path)
        print(f"{path}: rows={len(rep)} acr={acr(rep):.6f} acr_proxy={acr(rep, True):.6f}")
        print("radius,certified_accuracy,proxy_certified_accuracy")
        for (r, v), (_, vp) in zip(certified_accuracy_curve(rep, radii),
                                   certified_accuracy_curve(rep, radii, True)):
            print(f"{r!r},{v!r},{vp!r}")
    return EXIT_OK


def cmd_compare(a) -> int:
    t = superset_stats(read_report(a.a), read_report(a.b))
    print(f"radius_pct = {t.radius!r}\nregion_pct = {t.region!r}\n"
          f"undetermined = {t.undetermined}\nrows = {t.rows}")
    return EXIT_OK


def cmd_run(a) -> int:
    cfg = load_experiment_config(a.config)
    if a.out_dir:
        cfg = replace(cfg, out_dir=a.out_dir)
    res = run_experiment(cfg)
    for k, v in res.summary.items():
        print(f"{k} = {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ancer", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-data", help="write the radial toy dataset as CSV")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_gen_data)

    s = sub.add_parser("train", help="train the base classifier")
    s.add_argument("--data", required=True)
    s.add_argument("--arch", default="2,32,32,2")
    s.add_argument("--epochs", type=int, default=200)
    s.add_argument("--lr", type=float, default=0.05)
    s.add_argument("--batch", type=int, default=32)
    s.add_argument("--noise-sd", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("optimize", help="per-sample smoothing parameters")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--kind", choices=("gaussian", "uniform"), default="gaussian")
    s.add_argument("--mode", choices=("isotropic", "ancer"), default="ancer")
    s.add_argument("--init-sigma", type=float, default=0.25)
    s.add_argument("--config")
    s.add_argument("--out-thetas", required=True)
    s.set_defaults(fn=cmd_optimize)

    s = sub.add_parser("certify", help="Monte Carlo certification of every sample")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--thetas", required=True)
    s.add_argument("--kind", choices=("gaussian", "uniform", "gmm"), default="gaussian")
    s.add_argument("--n0", type=int, default=100)
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--alpha", type=float, default=0.001)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--record-time", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_certify)

    s = sub.add_parser("report", help="ACR and certified-accuracy curves of report CSVs")
    s.add_argument("--in", dest="inputs", nargs="+", required=True)
    s.add_argument("--radii", default="0,0.25,0.5,0.75,1")
    s.set_defaults(fn=cmd_report)

    s = sub.add_parser("compare", help="superset statistics of report a over report b")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.set_defaults(fn=cmd_compare)

    s = sub.add_parser("run", help="full pipeline from a key=value config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir")
    s.set_defaults(fn=cmd_run)
    return p


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return exit_code(exc.cause)
    if isinstance(exc, (ConfigError, SpecKindError)):
        return EXIT_CONFIG
    if isinstance(exc, (NumericError, DomainError, ArithmeticError)):
        return EXIT_NUMERIC
    return EXIT_DATA


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (AncerError, OSError, ArithmeticError, ValueError) as exc:
        print(f"ancer {args.command}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())

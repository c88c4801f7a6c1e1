"""Command-line front end.

Commands: ``analyze``, ``expand``, ``trees``, ``resum`` and ``verify``. Every
command prints a JSON report carrying a hash of its configuration; commands
with table or plot output also write files under ``--out``. Exit status is 0
when all checks pass, 1 on a failed check and 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CheckFailure, FraclindError, InputError, ParseError, ValidationError
from .model import ComponentLabel, load_model, model_to_dict

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


@dataclass
class RunConfig:
    """Everything that determines a run's output."""

    command: str
    modelPath: str | None = None
    modelHash: str | None = None
    K: int | None = None
    branch: str = "auto"
    etaGrid: list = field(default_factory=list)
    treeCap: int | None = None
    treeDegree: int | None = None
    gamma: str | None = None
    nu: list | None = None
    resumDegree: int | None = None
    eta: float | None = None
    rho: float | None = None
    scan: bool = False
    cutoff: int = 50
    delta1: float = 0.25
    outputDir: str | None = None
    precision: int = 17
    seed: int = 0

    def validate(self) -> None:
        if self.K is not None and not 1 <= self.K <= 40:
            raise ValidationError("--K must lie in 1..40")
        if self.treeCap is not None and self.treeCap < 1:
            raise ValidationError("--cap must be positive")
        if self.treeDegree is not None and self.treeDegree < 1:
            raise ValidationError("--k must be positive")
        if self.resumDegree is not None and self.resumDegree < 0:
            raise ValidationError("--degree must be non-negative")
        if self.eta is not None and not 0 < self.eta < 1:
            raise ValidationError("--eta must lie in (0, 1)")
        if self.rho is not None and not self.rho > 0:
            raise ValidationError("--rho must be positive")
        if not 1 <= self.cutoff <= 1000:
            raise ValidationError("--cutoff must lie in 1..1000")
        if not 0 < self.delta1 <= 1:
            raise ValidationError("--delta1 must lie in (0, 1]")
        if not 1 <= self.precision <= 17:
            raise ValidationError("--precision must lie in 1..17")
        if any(not 0 < e < 1 for e in self.etaGrid):
            raise ValidationError("--eta-grid values must lie in (0, 1)")

    def digest(self) -> str:
        # the model enters through its content hash; the output location is not part of the result
        data = {k: v for k, v in asdict(self).items() if k not in ("modelPath", "outputDir")}
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- output helpers --------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _dumps(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, sort_keys=True)


def _fmt(value: float, precision: int) -> str:
    return format(float(value), f".{precision}g")


def _out_dir(config: RunConfig) -> Path | None:
    if config.outputDir is None:
        return None
    path = Path(config.outputDir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"output directory {path}: {exc}") from exc
    return path


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_plot(path: Path, header: list[str], columns: list, precision: int) -> None:
    lines = [f"# {line}" for line in header]
    for row in zip(*columns):
        lines.append(" ".join(_fmt(v, precision) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"{what}: {exc}") from exc


def _parse_ints(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"{what}: {exc}") from exc


def _file_hash(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()[:16]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _branch_arg(text: str):
    if text in ("plus", "minus", "auto"):
        return text
    raise ValidationError(f"--branch must be plus, minus or auto, not {text!r}")


# -- commands ----------------------------------------------------------------

def cmd_analyze(config: RunConfig, args) -> tuple[dict, int]:
    from .resonance import analyze

    model = load_model(config.modelPath)
    res = analyze(model, beta0=args.beta0, sigma=args.sigma)
    report = {"model": model.name, **res.as_dict()}
    return report, EXIT_OK


def cmd_expand(config: RunConfig, args) -> tuple[dict, int]:
    from .lindstedt import expand, residual_scaling

    model = load_model(config.modelPath)
    series = expand(model, config.K, branch=config.branch, sigma=args.sigma)
    rep = residual_scaling(series, config.etaGrid)
    n = model.dims
    compat = {str(k): v for k, v in sorted(series.compatibility.items())}
    max_compat = max(max(v) for v in series.compatibility.values())
    passed = max_compat < 1e-9 and rep.fitted_exponent >= config.K + 0.5
    determined = [b for k, b in enumerate(series.betas(), start=1) if series.determined[k]]
    report = {
        "model": model.name,
        "K": config.K,
        "branch": {"label": series.branch_label, "beta1": series.beta1, "requested": config.branch},
        "betas": determined,
        "compatibility": compat,
        "maxCompatibility": max_compat,
        "residual": rep.as_dict(),
        "passed": passed,
    }
    out = _out_dir(config)
    if out is not None:
        p = config.precision
        labels = [ComponentLabel(i, n).name for i in range(2 * n)]
        with open(out / "coefficients.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k"] + [f"nu{i + 1}" for i in range(n - 1)] + ["component", "re", "im"])
            for k in range(1, config.K + 1):
                for nu in sorted(series.support(k)):
                    for c, lab in enumerate(labels):
                        v = series.coefficient(k, nu, c)
                        if v != 0:
                            w.writerow([k, *nu, lab, _fmt(v.real, p), _fmt(v.imag, p)])
        with open(out / "averages.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "beta_k"])
            for k, b in enumerate(determined, start=1):
                w.writerow([k, _fmt(b, p)])
        _write_plot(out / "residual.dat",
                    ["equations-of-motion defect |omega.dX - E dH(X)|_1 of the truncated series",
                     f"branch {series.branch_label} beta1={_fmt(series.beta1, p)} K={config.K}",
                     f"config {config.digest()}", "eta residual"],
                    [rep.eta_values, rep.residual_norms], p)
        report["files"] = ["coefficients.csv", "averages.csv", "residual.json", "residual.dat"]
        _write_text(out / "residual.json", _dumps({**report, "configHash": config.digest()}) + "\n")
    return report, EXIT_OK if passed else EXIT_CHECK


def cmd_trees(config: RunConfig, args) -> tuple[dict, int]:
    from .lindstedt import expand
    from .resonance import analyze
    from .trees import TreeContext, TreeEnumerator, compare_with_recursion

    model = load_model(config.modelPath)
    n = model.dims
    nu = tuple(config.nu or [0] * (n - 1))
    if len(nu) != n - 1:
        raise ValidationError(f"--nu needs {n - 1} entries")
    gamma = ComponentLabel.parse(config.gamma, n).index
    res = analyze(model, sigma=args.sigma)
    series = expand(model, config.treeDegree + res.k0, branch=config.branch, sigma=args.sigma, resonance=res)
    en = TreeEnumerator(TreeContext(model, res, series.beta1), config.treeCap)
    cmp = compare_with_recursion(series, config.treeDegree, nu, gamma, en)
    passed = cmp.relative_error < 1e-10
    report = {"model": model.name, "branch": series.branch_label, "gammaLabel": config.gamma,
              **cmp.as_dict(), "passed": passed}
    return report, EXIT_OK if passed else EXIT_CHECK


def cmd_resum(config: RunConfig, args) -> tuple[dict, int]:
    from .resonance import analyze
    from .selfenergy import (
        cancellation_family_check,
        check_symmetry,
        invertibility_expression,
        propagator_bound_scan,
        self_energy_scale_minus1,
        zero_pattern_violations,
    )

    model = load_model(config.modelPath)
    res = analyze(model, sigma=args.sigma)
    branch = "plus" if config.branch == "auto" else config.branch
    M = self_energy_scale_minus1(model, res, degree=config.resumDegree, branch=branch, sigma=args.sigma)
    eta = config.eta
    n = model.dims
    checks = {
        "symmetry": {"ok": check_symmetry(M)},
        "zeroPattern": {"ok": not zero_pattern_violations(M),
                        "violations": [list(v) for v in zero_pattern_violations(M)]},
    }
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for _ in range(20):
        x = float(rng.uniform(0.01, 2.0))
        det = np.linalg.det(1j * x * np.eye(2 * n) - M(eta))
        pred = -((1j * x) ** (2 * (n - 1))) * invertibility_expression(x, eta, M)
        worst = max(worst, abs(det - pred) / max(abs(det), 1e-300))
    checks["determinant"] = {"ok": worst < 1e-10, "maxRelError": worst}
    scan = None
    if config.scan:
        scan = propagator_bound_scan(M, eta, config.rho, omega=model.omega, cutoff=config.cutoff)
        checks["propagatorBound"] = scan.as_dict()
        if M.degree >= 2 * res.k0:
            checks["cancellations"] = cancellation_family_check(model, M, eta=eta, resonance=res).as_dict()
    passed = all(c.get("ok", True) and c.get("controlOk", True) for c in checks.values())
    report = {"model": model.name, "branch": "plus" if M.beta1 > 0 else "minus", "beta1": M.beta1,
              "selfEnergy": M.as_dict(), "checks": checks, "passed": passed}
    out = _out_dir(config)
    if out is not None:
        _write_text(out / "self_energy.json", _dumps({**M.as_dict(), "configHash": config.digest()}) + "\n")
        files = ["self_energy.json"]
        if scan is not None:
            pts = scan.points
            _write_plot(out / "propagator_bound.dat",
                        ["resummed propagator norm against max(2 muN / x^2, 2 / mu1)",
                         f"eta={_fmt(eta, config.precision)} rho={_fmt(config.rho, config.precision)}",
                         f"config {config.digest()}", "x norm bound"],
                        [[p[0] for p in pts], [p[1] for p in pts], [p[2] for p in pts]], config.precision)
            files.append("propagator_bound.dat")
        report["files"] = files
    return report, EXIT_OK if passed else EXIT_CHECK


def cmd_verify(config: RunConfig, args) -> tuple[dict, int]:
    from .acceptance import run_all

    results = run_all()
    for r in results:
        print(r.line(), file=sys.stderr)
    passed = all(r.passed for r in results)
    report = {"criteria": [r.as_dict() for r in results], "passed": passed}
    out = _out_dir(config)
    if out is not None:
        _write_text(out / "verify.json", _dumps({**report, "configHash": config.digest()}) + "\n")
    return report, EXIT_OK if passed else EXIT_CHECK


def cmd_dump(config: RunConfig, args) -> tuple[dict, int]:
    from .model import counterexample_model, custom3_model, custom_model

    builders = {"counterexample": counterexample_model, "custom": custom_model, "custom3": custom3_model}
    return model_to_dict(builders[args.name]()), EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "expand": cmd_expand, "trees": cmd_trees,
            "resum": cmd_resum, "verify": cmd_verify, "model": cmd_dump}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraclind", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("model", help="JSON model file")
            p.add_argument("--sigma", type=int, choices=(-1, 1), default=1, help="sign of eps")
        p.add_argument("--out", dest="out", default=None, help="directory for artifact files")
        p.add_argument("--precision", type=int, default=17, help="significant digits in tables")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")

    p = sub.add_parser("analyze", help="resonance diagnostics")
    common(p)
    p.add_argument("--beta0", type=float, default=None, help="stationary point (default: auto)")

    p = sub.add_parser("expand", help="solve the series through order K")
    common(p)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--branch", default="auto")
    p.add_argument("--eta-grid", default="1e-3,2e-3,5e-3,1e-2")

    p = sub.add_parser("trees", help="tree sum against the recursion for one class")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--gamma", required=True, help="component label, e.g. A1, B, alpha1, beta")
    p.add_argument("--nu", default=None, help="fast mode as comma-separated integers")
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--branch", default="auto")

    p = sub.add_parser("resum", help="scale [-1] self-energy and its checks")
    common(p)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--rho", type=float, default=10.0)
    p.add_argument("--scan", action="store_true", help="scan the propagator bound on the divisor grid")
    p.add_argument("--cutoff", type=int, default=50)
    p.add_argument("--branch", default="plus")

    p = sub.add_parser("verify", help="run the acceptance checks")
    common(p, model=False)

    p = sub.add_parser("model", help="print a canonical model file")
    p.add_argument("name", choices=("counterexample", "custom", "custom3"))
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if getattr(args, "model", None) and args.command != "model":
        cfg.modelPath = args.model
        cfg.modelHash = _file_hash(args.model)
    cfg.outputDir = getattr(args, "out", None)
    cfg.precision = getattr(args, "precision", 17)
    cfg.seed = getattr(args, "seed", 0)
    if hasattr(args, "branch"):
        cfg.branch = _branch_arg(args.branch)
    if args.command == "expand":
        cfg.K = args.K
        cfg.etaGrid = _parse_floats(args.eta_grid, "--eta-grid")
    elif args.command == "trees":
        cfg.treeDegree = args.k
        cfg.treeCap = args.cap
        cfg.gamma = args.gamma
        cfg.nu = _parse_ints(args.nu, "--nu") if args.nu else None
    elif args.command == "resum":
        cfg.resumDegree = args.degree
        cfg.eta = args.eta
        cfg.rho = args.rho
        cfg.scan = args.scan
        cfg.cutoff = args.cutoff
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
        report, status = COMMANDS[args.command](config, args)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CheckFailure as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except FraclindError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    if args.command == "model":
        print(json.dumps(report, indent=2, sort_keys=True))
        return status
    report = {"command": args.command, "config": asdict(config), "configHash": config.digest(), **report}
    print(_dumps(report))
    return status


if __name__ == "__main__":
    sys.exit(main())

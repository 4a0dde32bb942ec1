"""Experiment harness and the ``bfselect`` command line.

``rbf-demo``
    Ten equidistant RBFs on [-1, 1] fitted to a noisy 1-D function; two
    functions are selected for the subdomain ``omega`` with the integral and
    the simplified scores, and the three predictives are written as CSV.

``random-fn``
    A 3-D function drawn from an SE-GP prior, fitted with Hilbert-space GPs of
    growing size; reduced models keeping a fraction ``rho`` of the basis
    (ranked by the dual-diagonal score) are compared with the full model
    against an exact GP reference.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import BoxDomain, RbfBasis, design_matrix
from .gp_exact import SeKernel, gp_predict, sample_gp_prior
from .hgp import HgpModel, build_hgp, hgp_fit, hgp_predict
from .metrics import mean_kl, nlpd, relative_metric, rmse, time_predict
from .posterior import DualPosterior, MomentPosterior, PredictiveDistribution, fit_moment
from .selection import (
    SelectionResult,
    dual_scores,
    integral_scores,
    reduce_moment,
    select_top_k,
    simplified_scores,
)

logger = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "L", "rho", "rel_kl", "rel_nlpd", "rel_rmse", "rel_time", "abs_time_full_s", "abs_time_reduced_s",
)
EXTENDED_LD = (14, 16, 18, 20)


class ConfigError(ValueError):
    pass


class MemoryBudgetError(MemoryError):
    pass


@dataclass
class RbfDemoConfig:
    seed: int = 32
    num_bfs: int = 10
    n_select: int = 2
    omega: tuple[float, float] = (-0.5, 0.0)
    lengthscale: float = 0.15
    prior_var: float = 1.0
    n_train: int = 50
    noise_var: float = 0.01
    truth_lengthscale: float = 0.25
    truth_kernel_var: float = 0.5
    grid_points: int = 221
    out: str = "results/rbf-demo"

    experiment = "rbf-demo"

    def validate(self) -> None:
        _check_seed(self.seed)
        for name in ("lengthscale", "prior_var", "noise_var", "truth_lengthscale", "truth_kernel_var"):
            _positive(name, getattr(self, name))
        for name in ("num_bfs", "n_train", "grid_points"):
            _positive(name, getattr(self, name))
        if not 0 <= self.n_select <= self.num_bfs:
            raise ConfigError(f"n_select={self.n_select} must lie in [0, num_bfs={self.num_bfs}]")
        if len(self.omega) != 2 or self.omega[0] > self.omega[1]:
            raise ConfigError(f"omega must be 'lo,hi' with lo <= hi, got {self.omega}")


@dataclass
class RandomFnConfig:
    seed: int = 0
    n_train: int = 1000
    lengthscale: float = 0.1
    kernel_var: float = 0.05
    noise_var: float = 0.01
    ld_list: tuple[int, ...] = (2, 4, 6, 8, 10, 12)
    rho_list: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.5, 1.0)
    nlpd_target: str = "gp-mean"
    extended: bool = False
    grid_per_dim: int = 15
    repetitions: int = 5
    memory_budget_gb: float = 4.0
    out: str = "results/random-fn"

    experiment = "random-fn"

    def validate(self) -> None:
        _check_seed(self.seed)
        for name in ("lengthscale", "kernel_var", "noise_var", "memory_budget_gb"):
            _positive(name, getattr(self, name))
        for name in ("n_train", "grid_per_dim", "repetitions"):
            _positive(name, getattr(self, name))
        if not self.ld_list or any(int(ld) < 1 for ld in self.ld_list):
            raise ConfigError(f"ld_list entries must be >= 1, got {self.ld_list}")
        if not self.rho_list or any(not 0 < r <= 1 for r in self.rho_list):
            raise ConfigError(f"rho values must lie in (0, 1], got {self.rho_list}")
        if self.nlpd_target not in ("gp-mean", "true-f"):
            raise ConfigError(f"nlpd_target must be 'gp-mean' or 'true-f', got {self.nlpd_target!r}")
        if self.n_train + self.grid_per_dim**3 > 5000:
            raise ConfigError("n_train + grid_per_dim^3 exceeds the 5000-point joint prior draw")

    @property
    def sweep(self) -> tuple[int, ...]:
        lds = tuple(int(ld) for ld in self.ld_list)
        if self.extended:
            lds += tuple(ld for ld in EXTENDED_LD if ld not in lds)
        return lds


ExperimentConfig = RbfDemoConfig | RandomFnConfig
CONFIGS = {"rbf-demo": RbfDemoConfig, "random-fn": RandomFnConfig}


def _positive(name, value):
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")


def _check_seed(seed):
    if int(seed) != seed or seed < 0 or seed >= 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")


# ----------------------------------------------------------------------------
# config parsing


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _unsigned(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an unsigned integer, got {text!r}") from exc
    if value < 0 or value >= 2**64:
        raise argparse.ArgumentTypeError(f"seed out of range: {text}")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bfselect", description="Adaptive basis function selection experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="experiment", required=True)
    S = argparse.SUPPRESS

    rbf = sub.add_parser("rbf-demo", help="1-D RBF selection demo", argument_default=S)
    rbf.add_argument("--config", help="JSON file with config values")
    rbf.add_argument("--seed", type=_unsigned)
    rbf.add_argument("--num-bfs", type=int)
    rbf.add_argument("--n-select", type=int)
    rbf.add_argument("--omega", type=_floats, help="subdomain as lo,hi")
    rbf.add_argument("--lengthscale", type=float, help="shared RBF lengthscale")
    rbf.add_argument("--prior-var", type=float, help="isotropic prior variance of the weights")
    rbf.add_argument("--n-train", type=int)
    rbf.add_argument("--noise-var", type=float)
    rbf.add_argument("--out")

    rnd = sub.add_parser("random-fn", help="3-D Hilbert GP sweep over L and rho", argument_default=S)
    rnd.add_argument("--config", help="JSON file with config values")
    rnd.add_argument("--seed", type=_unsigned)
    rnd.add_argument("--n-train", type=int)
    rnd.add_argument("--lengthscale", type=float)
    rnd.add_argument("--kernel-var", type=float)
    rnd.add_argument("--noise-var", type=float)
    rnd.add_argument("--ld-list", type=_ints)
    rnd.add_argument("--rho-list", type=_floats)
    rnd.add_argument("--nlpd-target", choices=("gp-mean", "true-f"))
    rnd.add_argument("--extended", action="store_true", help=f"append L_d in {EXTENDED_LD} to the sweep")
    rnd.add_argument("--repetitions", type=int, help="timed repetitions per prediction")
    rnd.add_argument("--memory-budget-gb", type=float)
    rnd.add_argument("--out")
    return parser


def _load_file(path: str, cls) -> dict:
    try:
        with open(path) as fh:
            values = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for name in ("omega", "ld_list", "rho_list"):
        if name in values:
            values[name] = tuple(values[name])
    return values


def parse_config(argv: Sequence[str] | None = None) -> ExperimentConfig:
    """Defaults, overridden by ``--config`` file values, overridden by flags."""
    args = vars(build_parser().parse_args(argv))
    cls = CONFIGS[args.pop("experiment")]
    args.pop("verbose", None)
    values = {}
    path = args.pop("config", None)
    if path is not None:
        values.update(_load_file(path, cls))
    values.update(args)
    try:
        config = cls(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def write_metadata(path: Path, config: ExperimentConfig, extra: dict | None = None) -> None:
    lines = [f"# bfselect {config.experiment}", f"experiment = {config.experiment}"]
    for key, value in dataclasses.asdict(config).items():
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])


# ----------------------------------------------------------------------------
# rbf-demo


@dataclass
class RbfDemoResult:
    basis: RbfBasis
    posterior: MomentPosterior
    omega: BoxDomain
    selections: dict[str, SelectionResult]
    grid: np.ndarray
    curves: dict[str, PredictiveDistribution]
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)


def run_rbf_demo(config: RbfDemoConfig, write: bool = True) -> RbfDemoResult:
    config.validate()
    rng = np.random.default_rng(config.seed)
    X = rng.uniform(-1.0, 1.0, size=(config.n_train, 1))
    truth = SeKernel(config.truth_kernel_var, config.truth_lengthscale)
    f = sample_gp_prior(truth, X, rng)
    y = f + np.sqrt(config.noise_var) * rng.standard_normal(config.n_train)

    basis = RbfBasis.equidistant(-1.0, 1.0, config.num_bfs, config.lengthscale)
    prior = np.full(config.num_bfs, config.prior_var)
    posterior = fit_moment(design_matrix(basis, X), y, config.noise_var, prior)
    omega = BoxDomain([config.omega[0]], [config.omega[1]])

    selections = {
        "integral": select_top_k(integral_scores(posterior.mean, basis, omega), config.n_select),
        "standard": select_top_k(simplified_scores(posterior.mean), config.n_select),
    }
    grid = np.linspace(-1.0, 1.0, config.grid_points).reshape(-1, 1)
    phi_grid = design_matrix(basis, grid)
    curves = {"base": PredictiveDistribution(*posterior.predict(phi_grid))}
    for name, sel in selections.items():
        reduced = reduce_moment(posterior, sel)
        curves[name] = PredictiveDistribution(*reduced.predict(phi_grid[:, sel.kept]))

    result = RbfDemoResult(basis, posterior, omega, selections, grid[:, 0], curves, X, y)
    if write:
        _write_rbf_outputs(Path(config.out), config, result)
    return result


def _write_rbf_outputs(out: Path, config: RbfDemoConfig, result: RbfDemoResult) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, pred in result.curves.items():
        rows = zip(result.grid, pred.means, np.sqrt(pred.variances))
        _write_csv(out / f"{name}.csv", ("x", "f", "std"), rows)
    rows = []
    for method, sel in result.selections.items():
        for i in sel.kept:
            rows.append((method, int(i), float(result.basis.centers[i, 0]), float(sel.scores[i])))
    _write_csv(out / "selection.csv", ("method", "index", "center", "score"), rows)
    write_metadata(out / "metadata.txt", config, {
        "residual_bound_integral": result.selections["integral"].residual_bound,
        "residual_bound_standard_in_units_of_C": result.selections["standard"].residual_bound,
    })


# ----------------------------------------------------------------------------
# random-fn


@dataclass
class RandomFnData:
    X: np.ndarray
    y: np.ndarray
    X_test: np.ndarray
    f_test: np.ndarray
    reference: PredictiveDistribution


@dataclass
class ResultRow:
    L: int
    rho: float
    rel_kl: float | None
    rel_nlpd: float | None
    rel_rmse: float | None
    rel_time: float | None
    abs_time_full_s: float
    abs_time_reduced_s: float
    n_kept: int = 0
    residual_bound: float = 0.0

    def as_csv_row(self) -> tuple:
        return tuple(getattr(self, c) for c in RESULT_COLUMNS)


def cube_grid(per_dim: int, dim: int = 3) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, per_dim)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def make_random_fn_data(config: RandomFnConfig) -> RandomFnData:
    """Joint prior draw over train and test inputs, noisy training targets, exact GP reference."""
    rng = np.random.default_rng(config.seed)
    X = rng.uniform(-1.0, 1.0, size=(config.n_train, 3))
    X_test = cube_grid(config.grid_per_dim)
    kernel = SeKernel(config.kernel_var, config.lengthscale)
    f = sample_gp_prior(kernel, np.vstack([X, X_test]), rng)
    y = f[: config.n_train] + np.sqrt(config.noise_var) * rng.standard_normal(config.n_train)
    reference = gp_predict(kernel, X, y, config.noise_var, X_test)
    return RandomFnData(X, y, X_test, f[config.n_train :], reference)


def estimate_bytes(L: int, n_train: int, n_test: int) -> int:
    # B, the precision copy and its factor, plus train and test design matrices
    return 8 * (3 * L * L + 2 * (n_train + n_test) * L)


def n_select(rho: float, L: int) -> int:
    return max(1, int(round(rho * L)))


def check_memory(config: RandomFnConfig) -> None:
    budget = config.memory_budget_gb * 2**30
    for ld in config.sweep:
        L = ld**3
        need = estimate_bytes(L, config.n_train, config.grid_per_dim**3)
        if need > budget:
            raise MemoryBudgetError(
                f"L={L} (L_d={ld}) needs ~{need / 2**30:.2f} GiB, budget is {config.memory_budget_gb} GiB"
            )


def _scores(pred: PredictiveDistribution, data: RandomFnData, targets: np.ndarray):
    return mean_kl(pred, data.reference), nlpd(pred, targets), rmse(pred.means, targets)


def evaluate_ld(config: RandomFnConfig, data: RandomFnData, ld: int) -> tuple[list[ResultRow], dict]:
    """Fit one Hilbert GP of size ``ld^3`` and evaluate every rho in the config."""
    model = build_hgp(BoxDomain.cube(-2.0, 2.0, 3), [ld] * 3, config.kernel_var,
                      config.lengthscale, config.noise_var)
    dual = hgp_fit(model, data.X, data.y)
    targets = data.reference.means if config.nlpd_target == "gp-mean" else data.f_test

    full = hgp_predict(model, dual, data.X_test)
    full_kl, full_nlpd, full_rmse = _scores(full, data, targets)
    t_full = time_predict(lambda: hgp_predict(model, dual, data.X_test), config.repetitions)

    rows, preds = [], {"full": full}
    for rho in config.rho_list:
        k = n_select(rho, model.size)

        def reduced_task(k=k):
            sel = select_top_k(dual_scores(dual), k)
            return hgp_predict(model, dual, data.X_test, sel), sel

        pred, sel = reduced_task()
        kl, nl, rm = _scores(pred, data, targets)
        t_red = time_predict(reduced_task, config.repetitions)
        preds[rho] = pred
        rows.append(ResultRow(
            L=model.size,
            rho=float(rho),
            rel_kl=relative_metric(kl, full_kl),
            rel_nlpd=relative_metric(nl, full_nlpd),
            rel_rmse=relative_metric(rm, full_rmse),
            rel_time=relative_metric(t_red, t_full),
            abs_time_full_s=t_full,
            abs_time_reduced_s=t_red,
            n_kept=int(sel.kept.size),
            residual_bound=sel.residual_bound,
        ))
        logger.info("L=%d rho=%.3g kept=%d rel_kl=%s rel_rmse=%s rel_time=%s",
                    model.size, rho, k, rows[-1].rel_kl, rows[-1].rel_rmse, rows[-1].rel_time)
    return rows, preds


def run_random_fn(config: RandomFnConfig, write: bool = True) -> list[ResultRow]:
    config.validate()
    check_memory(config)
    data = make_random_fn_data(config)
    rows = []
    for ld in config.sweep:
        rows.extend(evaluate_ld(config, data, ld)[0])
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "results.csv", RESULT_COLUMNS, (r.as_csv_row() for r in rows))
        write_metadata(out / "metadata.txt", config, {"sweep": ",".join(map(str, config.sweep))})
    return rows


# ----------------------------------------------------------------------------
# CLI


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(
        level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"bfselect: error: {exc}", file=sys.stderr)
        return 2
    if isinstance(config, RbfDemoConfig):
        result = run_rbf_demo(config)
        for method, sel in result.selections.items():
            centers = ", ".join(f"{result.basis.centers[i, 0]:+.3f}" for i in sel.kept)
            unit = " (units of C)" if method == "standard" else ""
            print(f"{method:>8}: kept {list(map(int, sel.kept))} centers [{centers}] "
                  f"residual bound {sel.residual_bound:.4g}{unit}")
    else:
        try:
            rows = run_random_fn(config)
        except MemoryBudgetError as exc:
            print(f"bfselect: error: {exc}", file=sys.stderr)
            return 3
        print(f"wrote {len(rows)} rows to {Path(config.out) / 'results.csv'}")
    print(f"outputs in {config.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

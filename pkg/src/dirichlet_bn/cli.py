"""Command-line interface.

Exit codes: 0 success, 2 malformed input or usage, 3 dimension mismatch,
4 variable count beyond the search method's limit.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from .core import (
    DataFormatError,
    DimensionMismatchError,
    check_same_variables,
    dag_to_dict,
    dataset_to_csv,
    read_csv,
    read_structure,
)
from .experiments import (
    DEFAULT_SIZES,
    SWEEP_ESS,
    TrialConfig,
    alpha_star,
    ess_sweep,
    learn,
    rows_to_csv,
    rows_to_json,
    run_config,
    table_rows,
)
from .scores import KINDS, SCHEME_NAMES, DataRatio, K2, make_scheme, score
from .search import SearchLimitError
from .simulate import PRESET_NAMES, forward_sample, preset, read_net

log = logging.getLogger("dirichlet_bn")

EXIT_OK, EXIT_PARSE, EXIT_DIMENSION, EXIT_LIMIT = 0, 2, 3, 4

DEFAULT_COLUMNS = (
    ("aic", "aic", None),
    ("bic", "bic", None),
    ("data-ratio", "asymptotic-ml", DataRatio(1.0 / 3.0)),
    ("k2", "exact-ml", K2()),
)


def _emit(text: str, out: str | None) -> None:
    """Write the whole output at once; files are replaced atomically."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        os.unlink(tmp)
        raise


def _check_file(path: str, flag: str) -> str:
    if not Path(path).is_file():
        raise DataFormatError(f"{flag}: no such file {path!r}")
    return path


def _scheme_from_args(args):
    if args.kind in ("aic", "bic"):
        if args.ess is not None:
            log.warning("--kind %s has no hyperparameters; ignoring --ess", args.kind)
        return None
    prior = read_net(_check_file(args.net, "--net")) if args.scheme == "bde" and args.net else None
    return make_scheme(args.scheme, args.ess, prior)


def _net_from_args(args):
    if args.net and args.preset:
        raise DataFormatError("give either --net or --preset, not both")
    if args.net:
        return read_net(_check_file(args.net, "--net"))
    return preset(args.preset or "structure1-skewed")


def _parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise DataFormatError(f"--sizes: expected comma-separated integers, got {text!r}") from None
    if not sizes or any(s <= 0 for s in sizes):
        raise DataFormatError("--sizes: sample sizes must be positive")
    return sizes


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise DataFormatError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def _parse_range(text: str) -> list[float]:
    try:
        lo, hi = (int(float(x)) for x in text.split(".."))
    except ValueError:
        raise DataFormatError(f"--alpha-star: expected LO..HI, got {text!r}") from None
    if lo <= 0 or hi < lo:
        raise DataFormatError("--alpha-star: need 0 < LO <= HI")
    return [float(a) for a in range(lo, hi + 1)]


# ---------------------------------------------------------------------------
# subcommands


def cmd_score(args) -> int:
    data = read_csv(_check_file(args.data, "--data"))
    dag, variables = read_structure(_check_file(args.structure, "--structure"))
    check_same_variables(data.variables, variables)
    report = score(data, dag, args.kind, _scheme_from_args(args))
    _emit(json.dumps(report.to_dict(data.variables), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_learn(args) -> int:
    data = read_csv(_check_file(args.data, "--data"))
    scheme = _scheme_from_args(args)
    result = learn(data, args.kind, scheme, args.method, args.max_parents)
    out = dag_to_dict(result.dag, data.variables)
    out.update(
        kind=args.kind,
        scheme=None if scheme is None else scheme.name,
        ess=None if scheme is None else scheme.ess,
        method=args.method,
        score_bits=result.score,
        n_candidates=result.n_candidates,
        n_ties=result.n_ties,
    )
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 0:
        raise DataFormatError("-n must be non-negative")
    net = _net_from_args(args)
    _emit(dataset_to_csv(forward_sample(net, args.n, args.seed)), args.out)
    return EXIT_OK


def _config(args, net, **kw) -> TrialConfig:
    return TrialConfig(
        net=net,
        sizes=_parse_sizes(args.sizes),
        trials=args.trials,
        base_seed=args.seed,
        method=args.method,
        arc_compare=args.arc_compare,
        max_parents=args.max_parents,
        n_jobs=args.jobs,
        **kw,
    )


def _alpha_column(args, net):
    if not args.alpha_star:
        return None
    return alpha_star(_config(args, net), _parse_range(args.alpha_star))


def _write_table(args, rows) -> None:
    text = rows_to_json(rows) if args.format == "json" else rows_to_csv(rows)
    _emit(text, args.out)


def cmd_experiment(args) -> int:
    net = _net_from_args(args)
    if args.kind:
        scheme = _scheme_from_args(args)
        label = args.kind if scheme is None else scheme.name
        columns = [(label, args.kind, scheme)]
    else:
        columns = DEFAULT_COLUMNS
    results = []
    for label, kind, scheme in columns:
        cfg = _config(args, net, kind=kind, scheme=scheme)
        ess = None if scheme is None else scheme.ess
        results += [(label, ess, cell) for cell in run_config(cfg)]
    _write_table(args, table_rows(results, _alpha_column(args, net)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    net = _net_from_args(args)
    ess_values = _parse_floats(args.ess_values, "--ess") if args.ess_values else list(SWEEP_ESS)
    if any(a <= 0 for a in ess_values):
        raise DataFormatError("--ess: values must be > 0")
    table = ess_sweep(_config(args, net), ess_values)
    results = [("bdeu", a, cell) for (a, _), cell in table.items()]
    _write_table(args, table_rows(results, _alpha_column(args, net)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dirichlet-bn",
        description="Score and exactly learn discrete Bayesian-network structures.",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scoring(sp, kind_default="exact-ml"):
        sp.add_argument("--kind", choices=KINDS, default=kind_default)
        sp.add_argument("--scheme", choices=SCHEME_NAMES, default="bdeu")
        sp.add_argument("--ess", type=float, default=None,
                        help="equivalent sample size (or data-ratio factor); scientific notation ok")
        sp.add_argument("--net", help="prior network JSON for --scheme bde")

    def output(sp):
        sp.add_argument("--out", help="output file (default: standard output)")

    sp = sub.add_parser("score", help="score a structure on a dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--structure", required=True)
    scoring(sp)
    output(sp)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("learn", help="find the optimal structure")
    sp.add_argument("--data", required=True)
    scoring(sp)
    sp.add_argument("--method", choices=("exhaustive", "dp"), default="dp")
    sp.add_argument("--max-parents", type=int, default=None)
    output(sp)
    sp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("sample", help="forward-sample a dataset")
    sp.add_argument("--net")
    sp.add_argument("--preset", choices=PRESET_NAMES)
    sp.add_argument("-n", "--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    output(sp)
    sp.set_defaults(func=cmd_sample)

    def trials(sp):
        sp.add_argument("--preset", choices=PRESET_NAMES)
        sp.add_argument("--sizes", default=",".join(map(str, DEFAULT_SIZES)))
        sp.add_argument("--trials", type=int, default=100)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--method", choices=("auto", "exhaustive", "dp"), default="auto")
        sp.add_argument("--max-parents", type=int, default=None)
        sp.add_argument("--arc-compare", choices=("directed", "cpdag"), default="directed")
        sp.add_argument("--alpha-star", metavar="LO..HI",
                        help="append the best integer BDeu ESS in LO..HI per sample size")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads per cell")
        output(sp)

    sp = sub.add_parser("experiment", help="AIC / BIC / ML recovery table")
    trials(sp)
    sp.add_argument("--kind", choices=KINDS, default=None,
                    help="run a single score instead of the default four columns")
    sp.add_argument("--scheme", choices=SCHEME_NAMES, default="bdeu")
    sp.add_argument("--ess", type=float, default=None)
    sp.add_argument("--net", help="generating network JSON")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("sweep", help="BDeu recovery table across ESS values")
    trials(sp)
    sp.add_argument("--ess", dest="ess_values", default=None,
                    help="comma-separated ESS values (default 1e-6,0.01,0.1,1,10,100,1e6)")
    sp.add_argument("--net", help="generating network JSON")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except SearchLimitError as exc:
        log.error("%s", exc)
        return EXIT_LIMIT
    except DimensionMismatchError as exc:
        log.error("%s", exc)
        return EXIT_DIMENSION
    except (DataFormatError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

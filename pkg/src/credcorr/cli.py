"""Command-line front end.

Exit status: 0 on success (a breakdown finding included), 1 on validation or
usage errors, 2 on numerical or solver errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .arbitrage import arbitrage_certificate
from .bounds import DefaultCorrelationMatrix, saturated_matrix, validate_matrix
from .copula import AssetCorrelationSpec, flat_copula_loss_distribution, simulate_copula
from .core import (
    LossDistribution,
    ReferencePortfolio,
    load_fixture,
    read_portfolio,
    scenario_indices,
)
from .errors import CreditCorrError, NumericalError, PortfolioParseError, ValidationError
from .implied import PricingConfig, breakdown_report
from .ladder import build_ladder, ladder_loss_distribution
from .pricing import KINDS, TrancheSpec, price_tranche_exhaustive, price_tranche_mc
from .rng import RNG_ALGORITHM

TOOL = "credcorr"
# excluded from the recorded config so that output is identical across them
_UNRECORDED = {"output", "threads", "handler"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def load_portfolio(ref: str) -> ReferencePortfolio:
    """A CSV path, or the name of a bundled fixture such as ``example5``."""
    path = Path(ref)
    if path.exists():
        return read_portfolio(path)
    if path.suffix == "" and "/" not in ref:
        return load_fixture(ref)
    raise ValidationError(f"portfolio file {ref!r} not found")


def read_matrix(path: str | Path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for ln, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise PortfolioParseError(f"{path}: {exc}", ln) from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValidationError(f"{path}: matrix must be square")
    return np.array(rows)


def write_matrix(matrix: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(matrix):
            writer.writerow([repr(float(x)) for x in row])


def emit_plot_data(data, path: str | Path | None = None, header: tuple[str, str] | None = None) -> str:
    """Write two-column CSV (loss/probability or rho/price) for external plotting."""
    if isinstance(data, LossDistribution):
        rows = data.points
        header = header or ("loss", "probability")
    else:
        rows = [(float(a), float(b)) for a, b in data]
        header = header or ("x", "y")
    if not rows:
        raise ValidationError("nothing to plot: empty data")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for a, b in rows:
        writer.writerow([repr(a), repr(b)])
    text = out.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def price_curve(portfolio: ReferencePortfolio, tranche: TrancheSpec, points: int = 11) -> list[tuple[float, float]]:
    """Exhaustive tranche price on an evenly spaced flat-correlation grid over [0, 1]."""
    grid = np.linspace(0.0, 1.0, points)
    grid[-1] = 1.0
    out = []
    for rho in grid:
        law = build_ladder(portfolio) if rho == 1.0 else flat_copula_loss_distribution(portfolio, float(rho))
        out.append((float(rho), price_tranche_exhaustive(portfolio, tranche, law).value))
    return out


# --- output helpers ---------------------------------------------------------

def _metadata(args: argparse.Namespace) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}
    return {"tool": TOOL, "version": __version__, "config": config,
            "seed": getattr(args, "seed", None), "rng": RNG_ALGORITHM}


def _json(payload: dict, args) -> str:
    return json.dumps({"meta": _metadata(args), **payload}, sort_keys=True, indent=2) + "\n"


def _csv(sections: list[tuple[Sequence[str], list]], args) -> str:
    out = io.StringIO()
    meta = _metadata(args)
    out.write(f"# {json.dumps(meta, sort_keys=True)}\n")
    writer = csv.writer(out, lineterminator="\n")
    for k, (header, rows) in enumerate(sections):
        if k:
            out.write("\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return out.getvalue()


def _emit(text: str, args) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _bits(row) -> str:
    return "".join(str(int(b)) for b in row)


def _warn_notionals(portfolio: ReferencePortfolio) -> None:
    total = portfolio.notional_sum()
    if abs(total - 1.0) > 1e-9:
        print(f"warning: notionals sum to {total:.12g}, not 1", file=sys.stderr)


def _law_spec(args, portfolio: ReferencePortfolio) -> AssetCorrelationSpec | None:
    if getattr(args, "flat_rho", None) is not None:
        return AssetCorrelationSpec(flat=args.flat_rho)
    if getattr(args, "corr_matrix", None):
        return AssetCorrelationSpec(matrix=read_matrix(args.corr_matrix))
    return None


# --- commands ---------------------------------------------------------------

def cmd_validate(args) -> int:
    pf = load_portfolio(args.portfolio)
    _warn_notionals(pf)
    payload = {
        "names": pf.labels,
        "n_names": pf.size,
        "notional_sum": pf.notional_sum(),
        "total_loss_capacity": pf.total_capacity(),
        "expected_loss": pf.expected_loss(),
    }
    if args.matrix:
        matrix = DefaultCorrelationMatrix(read_matrix(args.matrix))
        payload["matrix"] = validate_matrix(pf, matrix).to_dict()
    elif all(0.0 < p < 1.0 for p in pf.probs):
        payload["saturated_matrix"] = saturated_matrix(pf).entries.tolist()
    _emit(_json(payload, args), args)
    return 0


def cmd_ladder(args) -> int:
    pf = load_portfolio(args.portfolio)
    proc = build_ladder(pf)
    dist = ladder_loss_distribution(proc)
    losses = proc.losses()
    rows = [(k, _bits(proc.scenario(k).indicators), float(losses[k]), p)
            for k, p in enumerate(proc.scenario_probs)]
    if args.format == "csv":
        text = _csv([(("survivors", "indicators", "loss", "probability"), rows),
                     (("loss", "probability"), dist.points)], args)
    else:
        text = _json({
            "scenarios": [{"survivors": k, "indicators": b, "loss": l, "probability": p}
                          for k, b, l, p in rows],
            "loss_distribution": [{"loss": l, "probability": p} for l, p in dist.points],
        }, args)
    _emit(text, args)
    return 0


def cmd_simulate(args) -> int:
    pf = load_portfolio(args.portfolio)
    spec = _law_spec(args, pf)
    samples = simulate_copula(pf, spec, args.draws, args.seed, args.threads, args.family)
    idx, counts = np.unique(scenario_indices(samples), return_counts=True)
    rows = []
    for k, c in zip(idx.tolist(), counts.tolist()):
        bits = "".join(str((k >> i) & 1) for i in range(pf.size))
        rows.append((bits, int(c), c / args.draws))
    if args.format == "json":
        text = _json({"counts": [{"indicators": b, "count": c, "frequency": f} for b, c, f in rows],
                      "draws": args.draws}, args)
    else:
        text = _csv([(("indicators", "count", "frequency"), rows)], args)
    _emit(text, args)
    return 0


def cmd_price(args) -> int:
    pf = load_portfolio(args.portfolio)
    tranche = TrancheSpec(args.attachment, args.kind)
    spec = _law_spec(args, pf)
    if spec is None:
        val = price_tranche_exhaustive(pf, tranche, build_ladder(pf))
    elif spec.is_flat and args.method != "mc":
        try:
            law = flat_copula_loss_distribution(pf, spec.flat)
        except ValidationError:
            if args.method == "exhaustive":
                raise
            law = None
        val = (price_tranche_exhaustive(pf, tranche, law) if law is not None else
               price_tranche_mc(pf, tranche, spec, args.draws, args.seed, args.threads))
    else:
        if args.method == "exhaustive":
            raise ValidationError("exhaustive pricing needs --ladder or --flat-rho")
        val = price_tranche_mc(pf, tranche, spec, args.draws, args.seed, args.threads)
    payload = {"value": val.value, "stderr": val.stderr, "method": val.method,
               "details": val.metadata}
    _emit(_json(payload, args), args)
    return 0


def cmd_imply(args) -> int:
    pf = load_portfolio(args.portfolio)
    cfg = PricingConfig(args.method, args.draws, args.seed, args.threads)
    rep = breakdown_report(pf, TrancheSpec(args.attachment), args.market_price, cfg)
    _emit(_json(rep.to_dict(), args), args)
    return 0


def cmd_arb(args) -> int:
    pf = load_portfolio(args.portfolio)
    cert = arbitrage_certificate(pf, args.attachment, args.market_price, args.stress_lgd)
    _emit(_json(cert.to_dict(), args), args)
    return 0


def cmd_plot_data(args) -> int:
    pf = load_portfolio(args.portfolio)
    if args.what == "loss":
        if args.flat_rho is None or args.flat_rho == 1.0:
            dist = ladder_loss_distribution(build_ladder(pf))
        else:
            dist = flat_copula_loss_distribution(pf, args.flat_rho)
        text = emit_plot_data(dist)
    else:
        if args.attachment is None:
            raise UsageError("plot-data --what price-curve needs --attachment")
        curve = price_curve(pf, TrancheSpec(args.attachment, args.kind), args.points)
        text = emit_plot_data(curve, header=("rho", "price"))
    _emit(text, args)
    return 0


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--portfolio", required=True,
                        help="portfolio CSV, or a bundled fixture name (example5)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="write here instead of standard output")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: $CREDCORR_THREADS or 1)")
    common.add_argument("--seed", type=int, default=0)

    sampling = _Parser(add_help=False)
    sampling.add_argument("--draws", type=_positive_int, default=200_000)

    law = _Parser(add_help=False)
    group = law.add_mutually_exclusive_group()
    group.add_argument("--ladder", action="store_true", help="100%% correlation law (default)")
    group.add_argument("--flat-rho", type=float, help="flat Gaussian asset correlation")
    group.add_argument("--corr-matrix", help="CSV asset-correlation matrix (Monte Carlo only)")

    parser = _Parser(prog=TOOL, description="Maximal-correlation credit models and tranche arbitrage.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check a portfolio and correlation matrix")
    p.add_argument("--matrix", help="default-correlation matrix CSV (N rows, no header)")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("ladder", parents=[common], help="maximal-correlation scenario table")
    p.set_defaults(handler=cmd_ladder)

    p = sub.add_parser("simulate", parents=[common, sampling], help="copula Monte Carlo scenario counts")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--flat-rho", type=float)
    g.add_argument("--corr-matrix")
    p.add_argument("--family", choices=("gaussian", "student-t"), default="gaussian")
    p.set_defaults(handler=cmd_simulate, format="csv")

    p = sub.add_parser("price", parents=[common, sampling, law], help="price a tranche")
    p.add_argument("--attachment", type=float, required=True)
    p.add_argument("--kind", choices=KINDS, default="supersenior")
    p.add_argument("--method", choices=("auto", "exhaustive", "mc"), default="auto")
    p.set_defaults(handler=cmd_price)

    p = sub.add_parser("imply", parents=[common, sampling], help="implied flat correlation of a quote")
    p.add_argument("--attachment", type=float, required=True)
    p.add_argument("--market-price", type=float, required=True)
    p.add_argument("--method", choices=("auto", "exhaustive", "mc"), default="auto")
    p.set_defaults(handler=cmd_imply)

    p = sub.add_parser("arb", parents=[common], help="arbitrage portfolio and certificate")
    p.add_argument("--attachment", type=float, required=True)
    p.add_argument("--market-price", type=float, required=True)
    p.add_argument("--stress-lgd", action="store_true",
                   help="decompose against unit loss-given-default")
    p.set_defaults(handler=cmd_arb)

    p = sub.add_parser("plot-data", parents=[common], help="two-column CSV for plotting")
    p.add_argument("--what", choices=("loss", "price-curve"), default="loss")
    p.add_argument("--flat-rho", type=float)
    p.add_argument("--attachment", type=float)
    p.add_argument("--kind", choices=KINDS, default="supersenior")
    p.add_argument("--points", type=_positive_int, default=11)
    p.set_defaults(handler=cmd_plot_data)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"{TOOL}: numerical error: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return 2
    except (CreditCorrError, OSError) as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands wire the pipeline together: ``embed`` writes spectral embeddings,
``mediate`` runs the full two-stage mediation analysis, ``sensitivity`` sweeps
the embedding dimension, ``simulate`` drives the Monte Carlo harness, and
``positivity-export`` dumps embeddings joined with treatment for positivity
diagnostics. Exit code 0 means all outputs were fully written; on failure,
partial outputs are removed. Report paths also render PNG figures alongside
their CSV output unless ``--no-plots`` is given.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import secrets
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, io_formats, plots, simharness
from .embedding import ase, coembed, varimax_rotate, varimax_rotate_pair
from .errors import DimensionError, InputError, NetmedError
from .mediation import MediationReport, estimate_effects, sensitivity_curve
from .regression import fit_mediator, fit_outcome

def _FLOAT(value) -> str:
    return repr(float(value))


@contextmanager
def _output_guard():
    """Track written paths; remove them if the command fails midway."""
    written: list[Path] = []
    try:
        yield lambda p: written.append(Path(p))
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _d_range(text: str) -> tuple[int, int]:
    parts = text.split(":")
    try:
        lo, hi = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected MIN:MAX with integer bounds, got {text!r}"
        ) from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"d-range is inverted: {lo} > {hi}")
    if lo < 1:
        raise argparse.ArgumentTypeError(f"d-range lower bound must be >= 1, got {lo}")
    return lo, hi


def _add_network_args(parser) -> None:
    parser.add_argument("--network", required=True, metavar="EDGELIST",
                        help="CSV edge list with src,dst[,weight] rows")
    parser.add_argument("--n-hint", type=int, default=None,
                        help="total node count (retains trailing isolated nodes)")
    parser.add_argument("--one-based", action="store_true",
                        help="edge list node ids start at 1")
    parser.add_argument("--weighted", action="store_true",
                        help="read a third column of edge weights")
    parser.add_argument("--symmetrize", choices=["none", "max", "mean"], default="none",
                        help="policy applied after summing duplicate edges")
    parser.add_argument("--zero-diagonal", action="store_true",
                        help="zero the diagonal (drop self-loops)")


def _add_covariate_args(parser) -> None:
    parser.add_argument("--covariates", required=True, metavar="CSV",
                        help="headered CSV of node covariates; row order = node index")
    parser.add_argument("--outcome", required=True, help="outcome column name")
    parser.add_argument("--treatment", required=True, help="treatment column name")
    parser.add_argument("--controls", default="",
                        help="comma-separated control column names")
    parser.add_argument("--id-column", default=None, help="optional id column name")


def _load_network(args, n_default: int | None = None) -> np.ndarray:
    n_hint = args.n_hint if args.n_hint is not None else n_default
    a = io_formats.load_edgelist(
        args.network,
        n_hint=n_hint,
        symmetrize=args.symmetrize,
        weighted=args.weighted,
        one_based=args.one_based,
    )
    if args.zero_diagonal and a.shape[0] == a.shape[1]:
        np.fill_diagonal(a, 0.0)
    return a


def _load_table(args) -> io_formats.CovariateTable:
    controls = tuple(c.strip() for c in args.controls.split(",") if c.strip())
    return io_formats.load_covariates(
        args.covariates,
        outcome=args.outcome,
        treatment=args.treatment,
        controls=controls,
        id_column=args.id_column,
    )


def _is_symmetric(a: np.ndarray) -> bool:
    if a.shape[0] != a.shape[1]:
        return False
    scale = max(float(np.max(np.abs(a))), 1.0)
    return bool(np.max(np.abs(a - a.T)) <= 1e-8 * scale)


def _resolve_side(a: np.ndarray, side: str | None) -> str:
    if side is not None:
        return side
    return "symmetric" if _is_symmetric(a) else "right"


def _positions(a: np.ndarray, d: int, side: str, apply_varimax: bool = False):
    """Embedding for the requested side, optionally varimax-rotated."""
    if side == "symmetric":
        emb = ase(a, d)
        if apply_varimax:
            if d == 1:
                print("netmed: warning: varimax is an identity rotation at d=1",
                      file=sys.stderr)
            else:
                emb = varimax_rotate(emb)
        return emb
    left, right = coembed(a, d)
    if apply_varimax:
        if d == 1:
            print("netmed: warning: varimax is an identity rotation at d=1",
                  file=sys.stderr)
        else:
            left, right = varimax_rotate_pair(left, right)
    return left if side == "left" else right


def _check_alignment(a: np.ndarray, n: int) -> None:
    if a.shape[0] != n:
        raise InputError(
            f"network has {a.shape[0]} nodes but the covariate table has {n} rows; "
            "edge-list ids must reference covariate rows"
        )


def _write_embedding_csv(emb, path, register) -> None:
    register(path)
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["node"] + [f"dim{k + 1}" for k in range(emb.d)])
        for i in range(emb.n):
            writer.writerow([i] + [_FLOAT(v) for v in emb.positions[i]])


def _singular_values_path(output: str) -> Path:
    out = Path(output)
    return out.with_name(out.stem + "_singular_values" + (out.suffix or ".csv"))


def cmd_embed(args) -> None:
    a = _load_network(args)
    side = _resolve_side(a, args.side)
    emb = _positions(a, args.d, side, apply_varimax=args.varimax)
    with _output_guard() as register:
        _write_embedding_csv(emb, args.output, register)
        sv_path = _singular_values_path(args.output)
        register(sv_path)
        with sv_path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["index", "singular_value"])
            for k, value in enumerate(emb.singular_values):
                writer.writerow([k + 1, _FLOAT(float(value))])


def _mediation_report(a, table, d, side, contrast, alpha) -> MediationReport:
    emb = _positions(a, d, side)
    w = table.design_matrix()
    y = table.outcome_values()
    out = fit_outcome(w, emb.positions, y)
    med = fit_mediator(w, emb.positions)
    t, t_star = contrast
    nde, nie, total = estimate_effects(out, med, t, t_star, alpha)
    coef_names = tuple(table.design_names) + tuple(f"latent{k + 1}" for k in range(d))
    beta_se = np.sqrt(np.diag(out.sigma_beta) / out.n)
    return MediationReport(
        n=out.n, d=d, side=side, contrast=(float(t), float(t_star)), alpha=alpha,
        nde=nde, nie=nie, total=total, coef_names=coef_names,
        beta=out.beta, beta_se=beta_se, theta=med.theta,
    )


def cmd_mediate(args) -> None:
    table = _load_table(args)
    a = _load_network(args, n_default=table.n)
    _check_alignment(a, table.n)
    side = _resolve_side(a, args.side)
    report = _mediation_report(a, table, args.d, side, args.contrast, args.alpha)
    with _output_guard() as register:
        register(args.output)
        io_formats.emit_report(report, args.output, format="json")


def cmd_sensitivity(args) -> None:
    table = _load_table(args)
    a = _load_network(args, n_default=table.n)
    _check_alignment(a, table.n)
    side = _resolve_side(a, args.side)
    rows = sensitivity_curve(
        a, table, args.d_range, side=side, alpha=args.alpha,
        contrast=tuple(args.contrast),
    )
    with _output_guard() as register:
        register(args.output)
        io_formats.emit_report(rows, args.output, format="csv")
        if not args.no_plots:
            fig_path = Path(args.output).with_suffix(".png")
            register(fig_path)
            plots.plot_sensitivity_curve(rows, fig_path)


def cmd_simulate(args) -> None:
    scenario = simharness.parse_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, master_seed=args.seed)
    else:
        text = Path(args.scenario).read_text(encoding="utf-8")
        has_seed = any(
            line.split("#", 1)[0].strip().startswith("master_seed")
            for line in text.splitlines()
        )
        if not has_seed:
            generated = secrets.randbits(63)
            print(f"netmed: generated master_seed={generated}", file=sys.stderr)
            scenario = dataclasses.replace(scenario, master_seed=generated)

    report = simharness.run_scenario(scenario, threads=args.threads)
    prefix = args.out_prefix
    with _output_guard() as register:
        cells_path = f"{prefix}_cells.csv"
        register(cells_path)
        io_formats.emit_report(report, cells_path, format="csv")
        summary_path = f"{prefix}_summary.json"
        register(summary_path)
        io_formats.emit_report(report, summary_path, format="json")
        if not args.no_plots:
            for fig_path in plots.simulation_figures(report, prefix):
                register(fig_path)


def cmd_positivity_export(args) -> None:
    table = _load_table(args)
    a = _load_network(args, n_default=table.n)
    _check_alignment(a, table.n)
    side = _resolve_side(a, args.side)
    emb = _positions(a, args.d, side)
    treatment = table.treatment_values()
    with _output_guard() as register:
        register(args.output)
        with Path(args.output).open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["node", "treatment"] + [f"dim{k + 1}" for k in range(emb.d)])
            for i in range(emb.n):
                writer.writerow(
                    [i, _FLOAT(float(treatment[i]))] + [_FLOAT(v) for v in emb.positions[i]]
                )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netmed",
        description="Network-mediated causal effects via principal-components "
                    "network regression.",
    )
    parser.add_argument("--version", action="version", version=f"netmed {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_embed = sub.add_parser("embed", help="write a spectral embedding to CSV")
    _add_network_args(p_embed)
    p_embed.add_argument("--d", type=int, required=True, help="embedding dimension")
    p_embed.add_argument("--side", choices=["left", "right", "symmetric"], default=None,
                         help="embedding side (default: symmetric if the network is, "
                              "else right)")
    p_embed.add_argument("--varimax", action="store_true",
                         help="apply a varimax rotation to the embedding")
    p_embed.add_argument("--output", "-o", required=True, help="embedding CSV path")
    p_embed.set_defaults(func=cmd_embed)

    p_med = sub.add_parser("mediate", help="estimate direct and indirect effects")
    _add_network_args(p_med)
    _add_covariate_args(p_med)
    p_med.add_argument("--d", type=int, required=True, help="embedding dimension")
    p_med.add_argument("--side", choices=["left", "right", "symmetric"], default=None)
    p_med.add_argument("--contrast", type=float, nargs=2, default=(1.0, 0.0),
                       metavar=("T", "TSTAR"), help="treatment contrast (default 1 0)")
    p_med.add_argument("--alpha", type=float, default=0.05,
                       help="1 - confidence level (default 0.05)")
    p_med.add_argument("--output", "-o", required=True, help="report JSON path")
    p_med.set_defaults(func=cmd_mediate)

    p_sens = sub.add_parser("sensitivity", help="sweep the embedding dimension")
    _add_network_args(p_sens)
    _add_covariate_args(p_sens)
    p_sens.add_argument("--d-range", type=_d_range, required=True, metavar="MIN:MAX",
                        help="inclusive embedding dimension range")
    p_sens.add_argument("--side", choices=["left", "right", "symmetric"], default=None)
    p_sens.add_argument("--contrast", type=float, nargs=2, default=(1.0, 0.0),
                        metavar=("T", "TSTAR"))
    p_sens.add_argument("--alpha", type=float, default=0.05)
    p_sens.add_argument("--output", "-o", required=True, help="curve CSV path")
    p_sens.add_argument("--no-plots", action="store_true",
                        help="skip the PNG figure next to the CSV")
    p_sens.set_defaults(func=cmd_sensitivity)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    p_sim.add_argument("--scenario", required=True, help="key=value scenario file")
    p_sim.add_argument("--out-prefix", required=True,
                       help="prefix for _cells.csv, _summary.json, and figures")
    p_sim.add_argument("--seed", type=int, default=None,
                       help="override the scenario master seed")
    p_sim.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: NETMED_THREADS or cpu count)")
    p_sim.add_argument("--no-plots", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_pos = sub.add_parser("positivity-export",
                           help="export embedding columns joined with treatment")
    _add_network_args(p_pos)
    _add_covariate_args(p_pos)
    p_pos.add_argument("--d", type=int, required=True)
    p_pos.add_argument("--side", choices=["left", "right", "symmetric"], default=None)
    p_pos.add_argument("--output", "-o", required=True)
    p_pos.set_defaults(func=cmd_positivity_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (NetmedError, OSError) as exc:
        print(f"netmed: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

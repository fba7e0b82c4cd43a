"""Command-line pipeline: load curves and quotes, diagnose, repair, strip, report.

A run writes up to five artifacts under the output directory:

  diagnostics.csv     price / intrinsic / time-value ladder with violation flags
  outliers.csv        modified Z-scores (skipped when the outlier policy is off)
  strip.csv           caplet vols by fixing month
  strip.json          nodes, residuals, removed quotes, and the config echo
  volcurve_daily.csv  the evaluated vol curve sampled daily, for plotting

Bp quantities in CSV output carry 4 decimal places; the JSON sidecar keeps
full precision. Identical inputs produce byte-identical files.

Exit codes: 0 success; 2 when --strict is set, the outlier policy is off,
and the quote ladder has arbitrage violations; 1 for any input problem.
"""

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from .diagnostics import CapQuoteSet, decompose, detect_outliers
from .stripping import (
    StripConfig,
    add_synthetic_far_quote,
    bootstrap_sequential,
    strip_global,
    strip_time_value,
)
from .term_structures import InputError, ZeroCurve, build_schedule
from .vol_interpolation import FAMILIES, VolCurve

# click's usage errors normally exit 2; that code is reserved for the strict
# arbitrage signal, so downgrade them to plain input errors
click.exceptions.UsageError.exit_code = 1

_METHODS = ("tv", "bootstrap", "global")
_NODE_CHOICES = ("maturity", "mid")
_OUTLIER_POLICIES = ("off", "report", "remove")
_CURVE_INTERPS = ("loglinear", "cubic")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """One pipeline run, fully specified; mirrors the CLI flag surface."""

    projection_curve: str
    discount_curve: str
    quotes: str
    strike_bp: float = 0.0
    tenor_months: int = 1
    method: str = "bootstrap"
    family: str = "flat"
    beta: float = 1.0
    nodes: str = "maturity"
    positivity: str = "none"
    floor_bp: float = 0.0
    outliers: str = "report"
    mad_threshold: float = 3.0
    far_quote_months: int = 0
    far_quote_vol_bp: float = float("nan")
    curve_interp: str = "loglinear"
    strict: bool = False
    out_dir: str = "out"

    def __post_init__(self):
        if self.strike_bp < -1000.0:
            raise InputError("strike must be at least -1000 bp")
        if self.tenor_months < 1:
            raise InputError("tenor must be at least 1 month")
        if self.method not in _METHODS:
            raise InputError(f"method must be one of {_METHODS}; got {self.method!r}")
        if self.family not in FAMILIES:
            raise InputError(f"unknown vol family {self.family!r}")
        if self.beta <= 0.0:
            raise InputError("beta must be positive")
        if self.nodes not in _NODE_CHOICES:
            raise InputError("nodes must be 'maturity' or 'mid'")
        if self.outliers not in _OUTLIER_POLICIES:
            raise InputError(f"outlier policy must be one of {_OUTLIER_POLICIES}")
        if self.mad_threshold <= 0.0:
            raise InputError("MAD threshold must be positive")
        if self.curve_interp not in _CURVE_INTERPS:
            raise InputError(f"curve interpolation must be one of {_CURVE_INTERPS}")
        if self.far_quote_months < 0:
            raise InputError("far quote months must be positive")


def evaluated_curve(result, tenor_months=1):
    """sigma(t) exactly as the pricer evaluated it for this result.

    Node-based results rebuild the interpolated curve (positive part, or the
    exponential of the log-curve under the exp transform). Time-value results
    have no curve between fixings, so they step through the solved vols.
    """
    if result.method == "tv":
        times = np.asarray(result.caplet_times, dtype=float)
        vols = np.asarray(result.caplet_vols, dtype=float)

        def step(t):
            idx = np.searchsorted(times, np.asarray(t, dtype=float), side="right") - 1
            return vols[np.clip(idx, 0, len(vols) - 1)]

        return step
    cfg = result.config
    delta = tenor_months / 12.0
    if cfg.positivity == "exp":
        log_curve = VolCurve(
            cfg.family, result.node_times, np.log(result.node_values), beta=cfg.beta, delta=delta
        )
        return lambda t: np.exp(np.minimum(log_curve(t), 3.0))
    curve = VolCurve(cfg.family, result.node_times, result.node_values, beta=cfg.beta, delta=delta)
    return lambda t: np.maximum(curve(t), 0.0)


def _write_lines(path, lines):
    Path(path).write_text("\n".join(lines) + "\n")


def _write_diagnostics(path, report):
    lines = [
        "maturity_months,flat_vol_bp,cap_price_bp,intrinsic_bp,time_value_bp,"
        "d_price_bp,d_intrinsic_bp,d_time_value_bp,violation"
    ]
    for q in range(len(report.maturities_months)):
        month = int(report.maturities_months[q])
        cells = [
            f"{report.flat_vols_bp[q]:.4f}",
            f"{report.cap_price_bp[q]:.4f}",
            f"{report.intrinsic_bp[q]:.4f}",
            f"{report.time_value_bp[q]:.4f}",
            f"{report.dP_bp[q]:.4f}",
            f"{report.dIV_bp[q]:.4f}",
            f"{report.dTV_bp[q]:.4f}",
            str(int(month in report.violations)),
        ]
        lines.append(f"{month}," + ",".join(cells))
    _write_lines(path, lines)


def _write_outliers(path, quotes, report):
    lines = ["maturity_months,flat_vol_bp,score,flagged"]
    for q in range(len(quotes)):
        month = int(quotes.maturities_months[q])
        lines.append(
            f"{month},{quotes.flat_vols[q] * 1e4:.4f},{report.scores[q]:.4f},"
            f"{int(month in report.flagged)}"
        )
    _write_lines(path, lines)


def _write_strip_csv(path, result):
    lines = ["fixing_months,caplet_vol_bp"]
    for t, vol in zip(result.caplet_times, result.caplet_vols):
        lines.append(f"{round(t * 12)},{vol * 1e4:.4f}")
    _write_lines(path, lines)


def _write_strip_json(path, result, config):
    config_echo = dataclasses.asdict(config)
    if np.isnan(config_echo["far_quote_vol_bp"]):
        config_echo["far_quote_vol_bp"] = None  # strict-JSON friendly
    payload = {
        "method": result.method,
        "converged": result.converged,
        "iterations": result.iterations,
        "quote_months": [int(m) for m in result.quote_months],
        "market_prices_bp": [float(p) for p in result.market_prices_bp],
        "residuals_bp": [float(r) for r in result.residuals_bp],
        "removed_months": [int(m) for m in result.removed_months],
        "clamped_months": [int(m) for m in result.clamped_months],
        "node_times_years": [float(t) for t in result.node_times],
        "node_values_bp": [float(v) * 1e4 for v in result.node_values],
        "config": config_echo,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_daily_curve(path, result, tenor_months):
    sigma = evaluated_curve(result, tenor_months)
    days = np.arange(1, int(np.floor(result.caplet_times[-1] * 365.0)) + 1)
    times = days / 365.0
    vols_bp = np.asarray(sigma(times), dtype=float) * 1e4
    lines = ["t_years,caplet_vol_bp"]
    lines.extend(f"{t:.6f},{v:.4f}" for t, v in zip(times, vols_bp))
    _write_lines(path, lines)


def run_pipeline(config):
    """Diagnose, apply the outlier policy, strip, and write artifacts.

    Returns the process exit code. Input problems raise InputError; the
    command wrapper maps those to exit 1 without partial outputs (all
    inputs are parsed before anything is written).
    """
    forward = ZeroCurve.from_csv(config.projection_curve, interp=config.curve_interp)
    discount = ZeroCurve.from_csv(config.discount_curve, interp=config.curve_interp)
    quotes = CapQuoteSet.from_csv(config.quotes, strike=config.strike_bp * 1e-4)

    max_months = int(quotes.maturities_months[-1])
    if config.far_quote_months:
        max_months = max(max_months, config.far_quote_months)
    schedule = build_schedule(forward, discount, max_months, config.tenor_months)

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report = decompose(schedule, quotes)
    _write_diagnostics(out / "diagnostics.csv", report)

    if config.outliers != "off":
        outlier_report = detect_outliers(quotes, threshold=config.mad_threshold)
        _write_outliers(out / "outliers.csv", quotes, outlier_report)
        if config.outliers == "remove" and outlier_report.flagged:
            quotes = quotes.drop(outlier_report.flagged)
    elif config.strict and report.violations:
        months = ", ".join(f"{m}M" for m in report.violations)
        click.echo(f"arbitrage violations at {months}; strict mode, stopping", err=True)
        return 2

    if config.far_quote_months:
        vol = None if np.isnan(config.far_quote_vol_bp) else config.far_quote_vol_bp * 1e-4
        quotes = add_synthetic_far_quote(quotes, config.far_quote_months, vol)

    strip_cfg = StripConfig(
        family=config.family,
        placement=config.nodes,
        beta=config.beta,
        positivity=config.positivity,
        floor_bp=config.floor_bp,
    )
    if config.method == "tv":
        result = strip_time_value(schedule, quotes, strip_cfg)
    elif config.method == "bootstrap":
        result = bootstrap_sequential(schedule, quotes, strip_cfg)
    else:
        result = strip_global(schedule, quotes, strip_cfg)

    _write_strip_csv(out / "strip.csv", result)
    _write_strip_json(out / "strip.json", result, config)
    _write_daily_curve(out / "volcurve_daily.csv", result, config.tenor_months)

    click.echo(
        f"{config.method}: {len(result.quote_months)} quotes used, "
        f"max residual {result.max_abs_residual_bp:.3e} bp, outputs in {out}"
    )
    return 0


_STANDARD_ROWS = (
    ("flat at maturity", "bootstrap", dict(family="flat")),
    ("linear at maturity", "bootstrap", dict(family="linear")),
    ("cubic at maturity", "bootstrap", dict(family="cubic")),
    ("linear mid", "global", dict(family="linear", placement="mid")),
    ("cubic mid", "global", dict(family="cubic", placement="mid")),
    ("hyman mid", "global", dict(family="hyman", placement="mid")),
    (
        "hyman mid floor=10",
        "global",
        dict(family="hyman", placement="mid", positivity="floor", floor_bp=10.0),
    ),
    ("linear exp mid", "global", dict(family="linear", placement="mid", positivity="exp")),
    ("cubic exp mid", "global", dict(family="cubic", placement="mid", positivity="exp")),
)


def compare_methods(schedule, quotes, configs=None):
    """Min vol / min node / reprice error per configuration, on shared data.

    Each row is (label, min_vol_bp, min_node_bp, max relative reprice error).
    The default set is the nine standard configurations: bootstrap with
    at-maturity nodes for flat/linear/cubic, then the global solver on
    midpoint nodes for linear/cubic/hyman unconstrained, hyman with a 10 bp
    floor, and linear/cubic under the exp transform.
    """
    if configs is None:
        configs = [
            (label, engine, StripConfig(**kwargs)) for label, engine, kwargs in _STANDARD_ROWS
        ]
    rows = []
    for label, engine, cfg in configs:
        if engine == "bootstrap":
            result = bootstrap_sequential(schedule, quotes, cfg)
        else:
            result = strip_global(schedule, quotes, cfg)
        rows.append((label, result.min_caplet_vol_bp, result.min_node_bp, result.max_rel_error))
    return rows


def _load_market(projection_curve, discount_curve, quotes_path, strike_bp, tenor_months, curve_interp):
    forward = ZeroCurve.from_csv(projection_curve, interp=curve_interp)
    discount = ZeroCurve.from_csv(discount_curve, interp=curve_interp)
    quotes = CapQuoteSet.from_csv(quotes_path, strike=strike_bp * 1e-4)
    schedule = build_schedule(forward, discount, int(quotes.maturities_months[-1]), tenor_months)
    return schedule, quotes


def _parse_positivity(text):
    text = str(text).strip().lower()
    if text in ("none", "exp", "nonneg"):
        return text, 0.0
    if text.startswith("floor="):
        try:
            level = float(text[len("floor="):])
        except ValueError:
            raise InputError(f"bad floor level in positivity {text!r}") from None
        return "floor", level
    raise InputError(f"positivity must be none, exp, nonneg, or floor=<bp>; got {text!r}")


def _parse_far_quote(text):
    if text is None:
        return 0, float("nan")
    head, sep, tail = str(text).partition(":")
    try:
        months = int(head)
    except ValueError:
        raise InputError(f"far quote months must be an integer; got {head!r}") from None
    if not sep:
        return months, float("nan")
    try:
        return months, float(tail)
    except ValueError:
        raise InputError(f"far quote vol must be a number; got {tail!r}") from None


_CONFIG_KEYS = (
    "projection_curve",
    "discount_curve",
    "quotes",
    "strike_bp",
    "tenor_months",
    "method",
    "family",
    "beta",
    "nodes",
    "positivity",
    "outliers",
    "mad_threshold",
    "far_quote",
    "curve_interp",
    "strict",
    "out",
)


def _merge_json_config(ctx, values, config_path):
    """Overlay JSON config values under explicitly passed CLI flags."""
    if not config_path:
        return values
    try:
        raw = json.loads(Path(config_path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"config {config_path}: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError(f"config {config_path}: expected a JSON object")
    merged = dict(values)
    source = click.core.ParameterSource
    for key, value in raw.items():
        if key not in _CONFIG_KEYS:
            raise InputError(f"config {config_path}: unknown key {key!r}")
        if ctx.get_parameter_source(key) in (source.DEFAULT, None):
            merged[key] = value
    return merged


@click.group()
def main():
    """Cap-to-caplet volatility stripping under the normal model."""


def _market_options(command):
    opts = [
        click.option("--projection-curve", "projection_curve", type=click.Path(), default=None,
                     help="CSV of zero rates for the forward (projection) curve."),
        click.option("--discount-curve", "discount_curve", type=click.Path(), default=None,
                     help="CSV of zero rates for the discount curve."),
        click.option("--quotes", type=click.Path(), default=None,
                     help="CSV of cap maturities and flat vols."),
        click.option("--strike-bp", type=float, default=0.0, show_default=True,
                     help="Cap strike in bp."),
        click.option("--tenor-months", type=int, default=1, show_default=True,
                     help="Caplet tenor in months."),
        click.option("--curve-interp", type=click.Choice(_CURVE_INTERPS), default="loglinear",
                     show_default=True, help="Zero-curve interpolation."),
        click.option("--out", type=click.Path(), default="out", show_default=True,
                     help="Output directory."),
    ]
    for opt in reversed(opts):
        command = opt(command)
    return command


def _require_paths(values):
    for key, label in (
        ("projection_curve", "projection curve"),
        ("discount_curve", "discount curve"),
        ("quotes", "quotes"),
    ):
        if not values[key]:
            raise InputError(f"{label} CSV path is required (flag or config file)")


@main.command()
@_market_options
@click.option("--method", type=click.Choice(_METHODS), default="bootstrap", show_default=True,
              help="Stripping engine.")
@click.option("--family", type=click.Choice(FAMILIES), default="flat", show_default=True,
              help="Vol interpolation family.")
@click.option("--beta", type=float, default=1.0, show_default=True,
              help="Kernel transition width as a fraction of the tenor.")
@click.option("--nodes", type=click.Choice(_NODE_CHOICES), default="maturity",
              show_default=True, help="Node placement.")
@click.option("--positivity", default="none", show_default=True,
              help="Positivity handling: none, exp, nonneg, or floor=<bp>.")
@click.option("--outliers", type=click.Choice(_OUTLIER_POLICIES), default="report",
              show_default=True, help="Outlier policy.")
@click.option("--mad-threshold", type=float, default=3.0, show_default=True,
              help="Modified Z-score cutoff.")
@click.option("--far-quote", default=None, metavar="<months>[:<bp>]",
              help="Append a synthetic far quote (vol defaults to the last quote's).")
@click.option("--strict", is_flag=True,
              help="Exit 2 on arbitrage violations when the outlier policy is off.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file of option values; explicit flags take precedence.")
@click.pass_context
def run(ctx, config_path, **values):
    """Strip caplet vols from a cap ladder and write reports."""
    try:
        values = _merge_json_config(ctx, values, config_path)
        _require_paths(values)
        positivity, floor_bp = _parse_positivity(values["positivity"])
        far_months, far_vol_bp = _parse_far_quote(values["far_quote"])
        config = RunConfig(
            projection_curve=values["projection_curve"],
            discount_curve=values["discount_curve"],
            quotes=values["quotes"],
            strike_bp=float(values["strike_bp"]),
            tenor_months=int(values["tenor_months"]),
            method=values["method"],
            family=values["family"],
            beta=float(values["beta"]),
            nodes=values["nodes"],
            positivity=positivity,
            floor_bp=floor_bp,
            outliers=values["outliers"],
            mad_threshold=float(values["mad_threshold"]),
            far_quote_months=far_months,
            far_quote_vol_bp=far_vol_bp,
            curve_interp=values["curve_interp"],
            strict=bool(values["strict"]),
            out_dir=values["out"],
        )
        code = run_pipeline(config)
    except (InputError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    sys.exit(code)


@main.command()
@_market_options
@click.pass_context
def compare(ctx, **values):
    """Reprice-error table across the nine standard configurations."""
    try:
        _require_paths(values)
        schedule, quotes = _load_market(
            values["projection_curve"],
            values["discount_curve"],
            values["quotes"],
            float(values["strike_bp"]),
            int(values["tenor_months"]),
            values["curve_interp"],
        )
        rows = compare_methods(schedule, quotes)
        out = Path(values["out"])
        out.mkdir(parents=True, exist_ok=True)
        lines = ["method,min_vol_bp,min_node_bp,reprice_err"]
        lines.extend(
            f"{label},{vol:.4f},{node:.4f},{err:.2e}" for label, vol, node, err in rows
        )
        _write_lines(out / "compare.csv", lines)
        width = max(len(label) for label, *_ in rows)
        click.echo(f"{'method':<{width}}  {'min vol':>9}  {'min node':>9}  reprice err")
        for label, vol, node, err in rows:
            click.echo(f"{label:<{width}}  {vol:>9.2f}  {node:>9.2f}  {err:.2e}")
    except (InputError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    sys.exit(0)


if __name__ == "__main__":
    main()

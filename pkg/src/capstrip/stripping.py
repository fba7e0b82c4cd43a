"""Stripping engines: time-value interpolation, bootstrap, global solver.

All engines share one evaluation convention: the vol curve is sampled at
the caplet fixing times and floored at zero before pricing, so negative
node values (allowed while solving with positivity 'none') price as zero
vol. Market cap prices come from the quoted flat vols.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import bachelier, diagnostics
from .term_structures import InputError
from .vol_interpolation import VolCurve, build_monotone_c2

BRACKET_START = 0.05  # 500 bp
BRACKET_LIMIT = 100.0  # 1e6 bp


def place_nodes(maturities_months, delta_months=1, placement="maturity", midpoint_unshifted=False):
    """Node times (years) for a quote ladder.

    'maturity' puts tau_k at the last fixing of cap k (T_k - delta).
    'mid' keeps tau_1 there and centres later nodes between consecutive
    maturities, shifted back by delta; midpoint_unshifted drops that shift
    on the interior nodes (compat variant).
    """
    months = np.asarray(maturities_months, dtype=float)
    if np.any(np.diff(months) <= 0):
        raise InputError("maturities must be strictly increasing")
    if placement == "maturity":
        nodes = months - delta_months
    elif placement == "mid":
        shift = 0.0 if midpoint_unshifted else delta_months
        nodes = np.concatenate(
            ([months[0] - delta_months], 0.5 * (months[:-1] + months[1:]) - shift)
        )
    else:
        raise InputError(f"unknown node placement {placement!r}")
    if nodes[0] <= 0:
        raise InputError("first node time is not positive")
    if np.any(np.diff(nodes) <= 0):
        raise InputError("node times are not strictly increasing")
    return nodes / 12.0


def add_synthetic_far_quote(quotes, months, vol=None):
    """Append a synthetic long cap to steer extrapolation; default vol = last quote's."""
    if months <= quotes.maturities_months[-1]:
        raise InputError("synthetic quote must extend beyond the last maturity")
    if vol is None:
        vol = quotes.flat_vols[-1]
    return diagnostics.CapQuoteSet(
        np.append(quotes.maturities_months, int(months)),
        np.append(quotes.flat_vols, float(vol)),
        quotes.strike,
    )


@dataclass(frozen=True)
class StripConfig:
    family: str = "flat"
    placement: str = "maturity"
    beta: float = 1.0
    positivity: str = "none"
    floor_bp: float = 0.0
    midpoint_unshifted: bool = False
    max_iter: int = 200
    price_tol_bp: float = 1e-10
    step_tol: float = 1e-14
    fd_step: float = 1e-7
    lambda_init: float = 1e-3
    lambda_max: float = 1e12
    max_log_step: float = 1.0

    def __post_init__(self):
        if self.positivity not in ("none", "exp", "nonneg", "floor"):
            raise InputError(f"unknown positivity mode {self.positivity!r}")
        if self.positivity == "floor" and self.floor_bp < 0:
            raise InputError("floor must be non-negative")


@dataclass
class StripResult:
    method: str
    quote_months: np.ndarray
    market_prices_bp: np.ndarray
    residuals_bp: np.ndarray
    node_times: np.ndarray
    node_values: np.ndarray
    caplet_times: np.ndarray
    caplet_vols: np.ndarray
    removed_months: list = field(default_factory=list)
    clamped_months: list = field(default_factory=list)
    converged: bool = True
    iterations: int = 0
    config: StripConfig = field(default_factory=StripConfig)

    @property
    def max_abs_residual_bp(self):
        return float(np.max(np.abs(self.residuals_bp)))

    @property
    def max_rel_error(self):
        return float(np.max(np.abs(self.residuals_bp / self.market_prices_bp)))

    @property
    def min_caplet_vol_bp(self):
        return float(np.min(self.caplet_vols)) * 1e4

    @property
    def min_node_bp(self):
        return float(np.min(self.node_values)) * 1e4


def _caplet_counts(schedule, quotes):
    return np.array([schedule.caplet_count(m) for m in quotes.maturities_months])


def _model_cap_prices(schedule, strike, vols, counts):
    prices = bachelier.price_vector(
        schedule.forwards[: counts[-1]],
        strike,
        schedule.fixing_times[: counts[-1]],
        schedule.accruals[: counts[-1]],
        schedule.discounts[: counts[-1]],
        vols[: counts[-1]],
        clamp=True,
    )
    cumulative = np.concatenate(([0.0], np.cumsum(prices)))
    return cumulative[counts]


def _curve(config, taus, values, delta):
    return VolCurve(config.family, taus, values, beta=config.beta, delta=delta)


def _finish(method, schedule, quotes, market, taus, values, caplet_vols, config, **kw):
    counts = _caplet_counts(schedule, quotes)
    fixings = schedule.fixing_times[: counts[-1]]
    model = _model_cap_prices(schedule, quotes.strike, caplet_vols, counts)
    return StripResult(
        method=method,
        quote_months=quotes.maturities_months.copy(),
        market_prices_bp=market * 1e4,
        residuals_bp=(model - market) * 1e4,
        node_times=taus,
        node_values=np.asarray(values, dtype=float),
        caplet_times=fixings,
        caplet_vols=caplet_vols,
        config=config,
        **kw,
    )


def bootstrap_sequential(schedule, quotes, config=None):
    """Solve node values one quote at a time (Brent on the full cap price).

    Node q is the one-dimensional root matching the model price of cap q,
    with earlier nodes held fixed and the curve restricted to the solved
    nodes. Exact only where that restriction is harmless: at-maturity
    nodes keep each cap inside its own node span, while midpoint nodes
    let later nodes reach back into earlier caps, so the sequential pass
    is approximate there (converged reports the achieved repricing, and
    the global solver refines it; non-flat midpoint families skip the
    pass entirely). Evaluated vols are floored at zero, so when zero vol
    already overprices the cap (negative incremental time value) there is
    no root: the node clamps to zero, the miss is recorded in the
    residuals, and stripping continues.
    """
    config = config or StripConfig()
    if config.placement == "mid" and config.family != "flat":
        raise InputError(
            "midpoint nodes with a non-flat family are not triangular; use the global solver"
        )
    return _bootstrap(schedule, quotes, config)


def _bootstrap(schedule, quotes, config):
    counts = _caplet_counts(schedule, quotes)
    taus = place_nodes(
        quotes.maturities_months,
        schedule.tenor_months,
        config.placement,
        config.midpoint_unshifted,
    )
    market = diagnostics.cap_prices(schedule, quotes)
    delta = schedule.tenor_months / 12.0
    values = []
    clamped = []
    for q in range(len(quotes)):
        n = counts[q]
        times = schedule.fixing_times[:n]

        def cap_price(x):
            curve = _curve(config, taus[: q + 1], np.append(values, x), delta)
            vols = np.maximum(curve(times), 0.0)
            return _model_cap_prices(schedule, quotes.strike, vols, counts[q : q + 1])[-1]

        target = market[q]
        if cap_price(0.0) >= target:
            values.append(0.0)
            clamped.append(int(quotes.maturities_months[q]))
            continue
        hi = BRACKET_START
        while cap_price(hi) < target and hi < BRACKET_LIMIT:
            hi *= 2.0
        if cap_price(hi) < target:
            values.append(hi)
            clamped.append(int(quotes.maturities_months[q]))
            continue
        values.append(
            brentq(lambda x: cap_price(x) - target, 0.0, hi, xtol=1e-16, rtol=8.9e-16)
        )
    curve = _curve(config, taus, values, delta)
    caplet_vols = np.maximum(curve(schedule.fixing_times[: counts[-1]]), 0.0)
    result = _finish(
        "bootstrap",
        schedule,
        quotes,
        market,
        taus,
        values,
        caplet_vols,
        config,
        clamped_months=clamped,
    )
    result.converged = not clamped and result.max_abs_residual_bp <= config.price_tol_bp
    return result


def strip_global(schedule, quotes, config=None):
    """Fit all node values at once with damped Gauss-Newton iterations.

    Minimizes the sum of squared relative price errors, starting from the
    sequential bootstrap values. Steps use uniform Levenberg damping
    scaled by the largest curvature (near-flat directions from fully
    clamped regions then receive no spurious motion) with a backtracking
    line search. Positivity modes: 'none', 'exp' (nodes parameterised as
    exponentials), 'nonneg' (projection onto v >= 0 each accepted step),
    'floor' (post-solve shift up to floor_bp).
    """
    config = config or StripConfig()
    counts = _caplet_counts(schedule, quotes)
    taus = place_nodes(
        quotes.maturities_months,
        schedule.tenor_months,
        config.placement,
        config.midpoint_unshifted,
    )
    market = diagnostics.cap_prices(schedule, quotes)
    delta = schedule.tenor_months / 12.0
    fixings = schedule.fixing_times[: counts[-1]]
    n = len(taus)

    exp_mode = config.positivity == "exp"

    def vols_at_fixings(x):
        # under 'exp' the family interpolates log-vols and the curve is
        # exponentiated, so evaluated vols are positive for every family
        curve = _curve(config, taus, x, delta)
        if exp_mode:
            return np.exp(np.minimum(curve(fixings), 3.0))
        return np.maximum(curve(fixings), 0.0)

    def residual_of(x):
        model = _model_cap_prices(schedule, quotes.strike, vols_at_fixings(x), counts)
        return (model - market) / market

    # linear-family bootstrap start: family-neutral and free of the spline
    # overshoot a same-family start can bake into the frozen directions
    init_family = "flat" if config.family == "flat" else "linear"
    init = _bootstrap(schedule, quotes, replace(config, family=init_family)).node_values
    if exp_mode:
        x = np.log(np.maximum(init, 1e-4))
        lambda_min = 1e-3  # holds dead log-space directions in place
    else:
        x = init.copy()
        lambda_min = 1e-12

    def cost_of(x):
        r = residual_of(x)
        return r, float(r @ r)

    r, cost = cost_of(x)
    lam = config.lambda_init
    converged = False
    iterations = 0
    for iteration in range(config.max_iter):
        iterations = iteration + 1
        if np.max(np.abs(r * market)) * 1e4 <= config.price_tol_bp:
            converged = True
            break
        jac = np.empty((len(r), n))
        for k in range(n):
            bumped = x.copy()
            bumped[k] += config.fd_step
            jac[:, k] = (residual_of(bumped) - r) / config.fd_step
        gram = jac.T @ jac
        gradient = jac.T @ r
        damping = np.eye(n) * max(np.max(np.diag(gram)), 1e-300)
        moved = False
        while lam <= config.lambda_max:
            step = np.linalg.solve(gram + lam * damping, -gradient)
            if exp_mode:
                widest = np.max(np.abs(step))
                if widest > config.max_log_step:
                    step *= config.max_log_step / widest
            scale = 1.0
            for _ in range(20):
                candidate = x + scale * step
                if config.positivity == "nonneg":
                    candidate = np.maximum(candidate, 0.0)
                r_new, cost_new = cost_of(candidate)
                if cost_new <= cost * (1.0 - 1e-15):
                    moved = True
                    break
                scale *= 0.5
            if moved:
                step_size = np.max(np.abs(candidate - x) / np.maximum(1.0, np.abs(x)))
                x, r, cost = candidate, r_new, cost_new
                lam = max(lam / 10.0, lambda_min)
                if step_size <= config.step_tol:
                    converged = True
                break
            lam *= 10.0
        if not moved or converged:
            converged = converged or bool(np.max(np.abs(r * market)) * 1e4 <= config.price_tol_bp)
            break

    if config.positivity == "floor":
        x = np.maximum(x, config.floor_bp * 1e-4)
    caplet_vols = vols_at_fixings(x)
    values = np.exp(np.minimum(x, 3.0)) if exp_mode else x
    return _finish(
        "global",
        schedule,
        quotes,
        market,
        taus,
        values,
        caplet_vols,
        config,
        converged=converged,
        iterations=iterations,
    )


def strip_time_value(
    schedule, quotes, config=None, filter_arbitrage=True, interpolate="tv", interpolant="monotone"
):
    """Strip caplet vols by interpolating cap time values in maturity.

    Cap prices split into intrinsic plus time value; the time values,
    anchored at (0, 0), are interpolated on the caplet payment grid with
    the monotone C2 spline (or broken lines, interpolant='linear').
    Non-negative increments between consecutive payment times plus the
    caplet intrinsics give arbitrage-free caplet prices, inverted caplet
    by caplet. With the filter on, quotes whose time value does not
    increase are removed first (whichever of the offending pair sits
    farther from the line through its neighbours).

    interpolate='price' is a compatibility mode working on raw cap
    prices instead; its increments can fall below the caplet intrinsic
    (clamped up, vol zero there) even on data the default mode handles.
    """
    config = config or StripConfig()
    if interpolate not in ("tv", "price"):
        raise InputError(f"unknown interpolation target {interpolate!r}")
    if interpolant not in ("monotone", "linear"):
        raise InputError(f"unknown time-value interpolant {interpolant!r}")
    report = diagnostics.decompose(schedule, quotes)
    tv = (report.time_value_bp if interpolate == "tv" else report.cap_price_bp) * 1e-4
    months = quotes.maturities_months.astype(float)
    removed = []
    if filter_arbitrage:
        keep_tv = list(tv)
        keep_m = list(months)
        while True:
            bad = next(
                (j for j in range(1, len(keep_tv)) if keep_tv[j] <= keep_tv[j - 1]), None
            )
            if bad is None:
                break

            def distance(j):
                if 0 < j < len(keep_tv) - 1:
                    span = keep_m[j + 1] - keep_m[j - 1]
                    line = keep_tv[j - 1] + (keep_tv[j + 1] - keep_tv[j - 1]) * (
                        (keep_m[j] - keep_m[j - 1]) / span
                    )
                    return abs(keep_tv[j] - line)
                other = 1 if j == 0 else len(keep_tv) - 2
                return abs(keep_tv[j] - keep_tv[other])

            drop = bad - 1 if distance(bad - 1) > distance(bad) else bad
            removed.append(int(keep_m[drop]))
            del keep_tv[drop], keep_m[drop]
        if not keep_tv:
            raise InputError("arbitrage filter removed every quote")
        tv = np.array(keep_tv)
        months = np.array(keep_m)
    kept = diagnostics.CapQuoteSet(
        months.astype(int),
        quotes.flat_vols[np.isin(quotes.maturities_months, months.astype(int))],
        quotes.strike,
    )
    market = diagnostics.cap_prices(schedule, kept)
    counts = _caplet_counts(schedule, kept)

    knot_t = np.concatenate(([0.0], months / 12.0))
    knot_tv = np.concatenate(([0.0], tv))
    n = counts[-1]
    if interpolant == "linear":
        tv_at_pay = np.interp(schedule.pay_times[:n], knot_t, knot_tv)
    else:
        tv_at_pay = build_monotone_c2(knot_t, knot_tv)(schedule.pay_times[:n])
    intrinsic = bachelier.intrinsic_vector(
        schedule.forwards[:n], kept.strike, schedule.accruals[:n], schedule.discounts[:n]
    )
    caplet_vols = np.empty(n)
    previous = 0.0
    for i in range(n):
        level = max(float(tv_at_pay[i]), previous)
        increment = level - previous
        previous = level
        if interpolate == "tv":
            target = float(intrinsic[i]) + increment
        else:
            target = max(increment, float(intrinsic[i]))
        terms = bachelier.CapletQuoteInputs(
            forward=float(schedule.forwards[i]),
            strike=kept.strike,
            expiry=float(schedule.fixing_times[i]),
            accrual=float(schedule.accruals[i]),
            discount=float(schedule.discounts[i]),
        )
        caplet_vols[i] = bachelier.implied_vol(terms, target)

    prices = bachelier.price_vector(
        schedule.forwards[:n],
        kept.strike,
        schedule.fixing_times[:n],
        schedule.accruals[:n],
        schedule.discounts[:n],
        caplet_vols,
    )
    cumulative = np.concatenate(([0.0], np.cumsum(prices)))
    model = cumulative[counts]
    return StripResult(
        method="tv",
        quote_months=kept.maturities_months.copy(),
        market_prices_bp=market * 1e4,
        residuals_bp=(model - market) * 1e4,
        node_times=months / 12.0,
        node_values=tv,
        caplet_times=schedule.fixing_times[:n],
        caplet_vols=caplet_vols,
        removed_months=removed,
        config=config,
    )

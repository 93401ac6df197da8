"""Privacy accounting for aggregated-update noise.

Implements the closed-form (eps, delta) bounds driven by the smallest
eigenvalue of the aggregate update covariance, the RDP bounds for the
eigenvalue-floored mechanism (both printed variants, which disagree and are
adjudicated empirically by the verify module), RDP-to-DP conversion, order
optimization, subsampling amplification, and multi-round composition over a
round ledger.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    DeltaOutOfRegion,
    EmptyLedger,
    EmptyValidityInterval,
    LedgerOrderError,
    NoDpGuarantee,
    NonPositiveLambda,
)

# warning tags carried on results instead of raising
WARN_REGIME = "regime: high-privacy formula returned eps >= 1"
WARN_MEANINGLESS_DELTA = "meaningless_delta: total delta >= 1"
WARN_MIXED_VARIANTS = "mixed_curve_variants: summing RDP curves of different variants"
WARN_SUBSPACE = "subspace: smallest *nonzero* eigenvalue used; space coverage asserted by caller"
WARN_APPROX_GAUSSIAN = "approx_gaussian: update treated as Gaussian with supplied delta0"

ALPHA_CAP = 1e6  # stand-in upper bound for curves valid on all alpha > 1
GRID_POINTS = 10_000
GOLDEN_REL_TOL = 1e-6
_INTERVAL_MARGIN = 1e-9


class ClosedFormMode(Enum):
    GENERAL = "general"
    IID = "iid"
    SINGULAR = "singular"


class Region(Enum):
    HIGH = "high"
    LOW = "low"


class RdpVariant(Enum):
    THEOREM1_RDP = "theorem1_rdp"
    WFDP_A = "wfdp_a"
    WFDP_B = "wfdp_b"
    # Plain Gaussian-mechanism description of a closed-form round, used when a
    # ledger of closed-form rounds is composed in RDP mode.
    GAUSSIAN = "gaussian"


class CompositionMode(Enum):
    SIMPLE = "simple"
    RDP = "rdp"


@dataclass(frozen=True)
class PrivacyParams:
    """Scalar inputs shared by the privacy formulas.

    clip: L2 clip bound C on per-example gradients.
    batch: mini-batch size B.
    local_size: per-user dataset size D.
    ns_users: number of non-sensitive (noise-providing) users N.
    delta: DP relaxation term.
    approx_gauss_delta0: Gaussian-approximation slack delta0 (0 = exactly
        Gaussian); inflates delta by (1 + e^eps) * delta0.
    floor: eigenvalue floor sigma^2 used by the flooring mechanism.
    sampling_ratio: q for subsampling amplification (1 = no subsampling).
    rounds: number of training rounds T.
    """

    clip: float
    batch: int
    local_size: int = 1
    ns_users: int = 1
    delta: float = 1e-5
    approx_gauss_delta0: float = 0.0
    floor: float = 0.0
    sampling_ratio: float = 1.0
    rounds: int = 1

    def __post_init__(self):
        if not self.clip > 0:
            raise ValueError(f"clip must be positive, got {self.clip}")
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        if self.local_size < 1:
            raise ValueError(f"local_size must be >= 1, got {self.local_size}")
        if self.ns_users < 1:
            raise ValueError(f"ns_users must be >= 1, got {self.ns_users}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.approx_gauss_delta0 < 0:
            raise ValueError(f"approx_gauss_delta0 must be >= 0, got {self.approx_gauss_delta0}")
        if self.floor < 0:
            raise ValueError(f"floor must be >= 0, got {self.floor}")
        if not 0.0 < self.sampling_ratio <= 1.0:
            raise ValueError(f"sampling_ratio must be in (0, 1], got {self.sampling_ratio}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")

    def to_dict(self) -> dict:
        return {
            "clip": self.clip,
            "batch": self.batch,
            "local_size": self.local_size,
            "ns_users": self.ns_users,
            "delta": self.delta,
            "approx_gauss_delta0": self.approx_gauss_delta0,
            "floor": self.floor,
            "sampling_ratio": self.sampling_ratio,
            "rounds": self.rounds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrivacyParams":
        return cls(**d)


@dataclass(frozen=True)
class ClosedFormBound:
    """Result of the closed-form per-round bound."""

    eps: float
    region: Region
    delta_bound: float  # largest delta for which the formula's region is valid
    warnings: tuple[str, ...] = ()


def delta_validity_limit(eps: float) -> float:
    """Low-privacy-region validity limit f(eps) = 1/2 - e^(-3 eps) / sqrt(4 pi eps)."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return 0.5 - math.exp(-3.0 * eps) / math.sqrt(4.0 * math.pi * eps)


def eps_dp_closed_form(
    lambda_min: float,
    params: PrivacyParams,
    mode: ClosedFormMode = ClosedFormMode.GENERAL,
) -> ClosedFormBound:
    """Per-round (eps, delta) bound from the aggregate covariance spectrum.

    ``lambda_min`` is the smallest eigenvalue of the aggregate non-sensitive
    covariance in GENERAL mode, the *per-user* smallest eigenvalue in IID mode
    (scaled by N internally), and the smallest non-zero eigenvalue in SINGULAR
    mode (caller asserts the update-difference space is covered).

    Region split at lambda_0 = 4 C^2 sqrt(2 log(1.25/delta)) / B^2:
      high privacy (lambda > lambda_0): eps = 2 C sqrt(2 log(1.25/delta)) / (B sqrt(lambda)),
      low privacy  (lambda <= lambda_0): eps = max(1, 2 C^2 / (B^2 lambda)),
        valid only while delta < f(eps).
    The high-privacy formula is returned with a regime warning (not switched)
    if it lands at eps >= 1.
    """
    if not lambda_min > 0:
        raise NonPositiveLambda(f"lambda_min must be positive, got {lambda_min}")
    lam = lambda_min * params.ns_users if mode is ClosedFormMode.IID else lambda_min
    warnings: list[str] = []
    if mode is ClosedFormMode.SINGULAR:
        warnings.append(WARN_SUBSPACE)
    c, b, delta = params.clip, params.batch, params.delta
    root = math.sqrt(2.0 * math.log(1.25 / delta))
    lambda_0 = 4.0 * c * c * root / (b * b)
    if lam > lambda_0:
        eps = 2.0 * c * root / (b * math.sqrt(lam))
        if eps >= 1.0:
            warnings.append(WARN_REGIME)
        return ClosedFormBound(eps=eps, region=Region.HIGH, delta_bound=1.0, warnings=tuple(warnings))
    eps = max(1.0, 2.0 * c * c / (b * b * lam))
    bound = delta_validity_limit(eps)
    if delta >= bound:
        raise DeltaOutOfRegion(
            f"delta={delta:.3g} >= f(eps)={bound:.3g} in the low-privacy region"
        )
    return ClosedFormBound(eps=eps, region=Region.LOW, delta_bound=bound, warnings=tuple(warnings))


@dataclass(frozen=True)
class DeltaTotal:
    total: float
    meaningless: bool = False


def delta_approx_gaussian(eps: float, params: PrivacyParams) -> DeltaTotal:
    """Total delta when the aggregate is only approximately Gaussian.

    Returns delta + (1 + e^eps) * delta0; flagged (not rejected) when the
    total is >= 1 and therefore vacuous.
    """
    total = params.delta + (1.0 + math.exp(min(eps, 700.0))) * params.approx_gauss_delta0
    return DeltaTotal(total=total, meaningless=total >= 1.0)


def alpha_validity(
    params: PrivacyParams,
    variant: RdpVariant,
    sum_lambda_min: Optional[float] = None,
) -> tuple[float, float]:
    """Open interval of RDP orders on which the variant's bound is finite."""
    c2 = params.clip * params.clip
    if variant is RdpVariant.THEOREM1_RDP:
        if sum_lambda_min is None:
            raise ValueError("THEOREM1_RDP needs sum_lambda_min context")
        return 1.0, params.local_size * sum_lambda_min / c2
    if variant in (RdpVariant.WFDP_A, RdpVariant.WFDP_B):
        return 1.0, params.ns_users * params.floor * params.local_size / (2.0 * c2)
    if variant is RdpVariant.GAUSSIAN:
        return 1.0, math.inf
    raise ValueError(f"unknown variant {variant}")


def rdp_bound(
    alpha,
    params: PrivacyParams,
    variant: RdpVariant,
    sum_lambda_min: Optional[float] = None,
):
    """RDP epsilon at order(s) ``alpha``; +inf outside the validity interval.

    THEOREM1_RDP: (2aBC^2/D^2 + aC^2/((a-1)D)) / (sum_lambda_min - aC^2/D)
    WFDP_A:       (2aBC^2/D^2 + 2aC^2/((a-1)D)) / (N sigma^2 - 2aC^2/D)
    WFDP_B:       (2aC^2/D^2 + 2aC^2/((a-1)BD)) / (N sigma^2 - 2aC^2/(BD))
    GAUSSIAN:     2 a C^2 / (B^2 * sum_lambda_min)   (plain Gaussian mechanism
                  with sensitivity 2C/B and noise covariance eigenfloor
                  sum_lambda_min; used to re-express closed-form rounds)

    Accepts a scalar or an array of orders; out-of-range entries are reported
    as +inf rather than raised.
    """
    a = np.asarray(alpha, dtype=float)
    c2 = params.clip * params.clip
    b = float(params.batch)
    d = float(params.local_size)
    lo, hi = alpha_validity(params, variant, sum_lambda_min)
    inside = (a > lo) & (a < hi)
    out = np.full(a.shape, math.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        if variant is RdpVariant.THEOREM1_RDP:
            num = 2.0 * a * b * c2 / d**2 + a * c2 / ((a - 1.0) * d)
            den = sum_lambda_min - a * c2 / d
        elif variant is RdpVariant.WFDP_A:
            ns2 = params.ns_users * params.floor
            num = 2.0 * a * b * c2 / d**2 + 2.0 * a * c2 / ((a - 1.0) * d)
            den = ns2 - 2.0 * a * c2 / d
        elif variant is RdpVariant.WFDP_B:
            ns2 = params.ns_users * params.floor
            num = 2.0 * a * c2 / d**2 + 2.0 * a * c2 / ((a - 1.0) * b * d)
            den = ns2 - 2.0 * a * c2 / (b * d)
        elif variant is RdpVariant.GAUSSIAN:
            if sum_lambda_min is None or sum_lambda_min <= 0:
                raise NonPositiveLambda("GAUSSIAN variant needs positive sum_lambda_min")
            num = 2.0 * a * c2
            den = np.full(a.shape, b * b * sum_lambda_min)
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unknown variant {variant}")
        vals = np.where(inside & (den > 0), num / np.where(den > 0, den, 1.0), math.inf)
    out = np.where(inside, vals, out)
    if np.ndim(alpha) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class RdpCurve:
    """An RDP bound as a function of the order, with its validity interval."""

    variant: RdpVariant
    params: PrivacyParams
    sum_lambda_min: Optional[float] = None

    def alpha_interval(self) -> tuple[float, float]:
        return alpha_validity(self.params, self.variant, self.sum_lambda_min)

    def __call__(self, alpha):
        return rdp_bound(alpha, self.params, self.variant, self.sum_lambda_min)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "params": self.params.to_dict(),
            "sum_lambda_min": self.sum_lambda_min,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RdpCurve":
        return cls(
            variant=RdpVariant(d["variant"]),
            params=PrivacyParams.from_dict(d["params"]),
            sum_lambda_min=d.get("sum_lambda_min"),
        )


def rdp_to_dp(alpha: float, eps_rdp: float, delta: float) -> float:
    """Convert an (alpha, eps)-RDP guarantee to (eps, delta)-DP:
    eps_dp = eps_rdp + log(1/delta) / (alpha - 1)."""
    if not alpha > 1:
        raise ValueError(f"alpha must be > 1, got {alpha}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return eps_rdp + math.log(1.0 / delta) / (alpha - 1.0)


def _objective_grid(curves: Sequence[RdpCurve], delta: float, lo: float, hi: float):
    grid = np.geomspace(lo, hi, GRID_POINTS)
    total = np.zeros_like(grid)
    for curve in curves:
        total = total + curve(grid)
    objective = total + math.log(1.0 / delta) / (grid - 1.0)
    return grid, objective


def _golden_refine(fn, lo: float, hi: float) -> tuple[float, float]:
    """Golden-section minimization to GOLDEN_REL_TOL relative interval width."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > GOLDEN_REL_TOL * max(abs(a), abs(b), 1.0):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def _shared_interval(curves: Sequence[RdpCurve]) -> tuple[float, float]:
    lo, hi = 1.0, math.inf
    for curve in curves:
        clo, chi = curve.alpha_interval()
        lo, hi = max(lo, clo), min(hi, chi)
    if not hi > lo:
        raise EmptyValidityInterval(
            f"empty alpha validity interval ({lo:.6g}, {hi:.6g}); "
            "the parameters cannot yield a finite epsilon"
        )
    hi = min(hi, ALPHA_CAP)
    span = hi - lo
    return lo + _INTERVAL_MARGIN * span, hi - _INTERVAL_MARGIN * span


def optimize_alpha(
    curve: Union[RdpCurve, Sequence[RdpCurve]],
    delta: float,
    grid_points: int = GRID_POINTS,
) -> tuple[float, float]:
    """Minimize rdp_to_dp(alpha, curve(alpha), delta) over the validity interval.

    Dense log-spaced grid search (default 10^4 points) followed by one
    golden-section pass between the best grid point's neighbours. Accepts a
    single curve or several, in which case their RDP values are summed per
    order (multi-round composition).

    Returns (alpha_star, eps_star). Raises EmptyValidityInterval when the
    interval is empty (e.g. N sigma^2 D <= 2 C^2 for the floored mechanism).
    """
    curves = [curve] if isinstance(curve, RdpCurve) else list(curve)
    lo, hi = _shared_interval(curves)
    grid, objective = _objective_grid(curves, delta, lo, hi)
    finite = np.isfinite(objective)
    if not finite.any():
        raise EmptyValidityInterval("RDP bound is infinite on the whole order grid")
    idx = int(np.argmin(np.where(finite, objective, math.inf)))
    left = grid[max(idx - 1, 0)]
    right = grid[min(idx + 1, grid.size - 1)]

    def fn(x: float) -> float:
        total = sum(float(c(x)) for c in curves)
        return rdp_to_dp(x, total, delta)

    alpha_star, eps_star = _golden_refine(fn, left, right)
    if eps_star > objective[idx]:
        alpha_star, eps_star = float(grid[idx]), float(objective[idx])
    return alpha_star, eps_star


def amplify_subsampling(eps: float, q: float) -> float:
    """Privacy amplification by subsampling: log(1 + q (e^eps - 1)).

    Equals eps when q = 1 and never exceeds eps.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if not 0 < q <= 1:
        raise ValueError(f"q must be in (0, 1], got {q}")
    if math.isinf(eps):
        return eps
    if q == 1.0:
        return eps
    if eps > 50.0:
        # 1 + q(e^eps - 1) = q e^eps (1 + (1-q) e^-eps / q)
        return math.log(q) + eps + math.log1p((1.0 - q) * math.exp(-eps) / q)
    return math.log1p(q * math.expm1(eps))


def _json_float(value: Optional[float]):
    """Strict-JSON-safe float: infinities become the string "inf"."""
    if value is None:
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _parse_float(value) -> Optional[float]:
    if value is None:
        return None
    if isinstance(value, str):
        return float(value)
    return float(value)


@dataclass(frozen=True)
class LedgerEntry:
    """One accounted round: either a scalar bound or a deferred RDP curve."""

    round_index: int
    route: str
    lambda_min: Optional[float] = None
    eps: Optional[float] = None
    delta_total: Optional[float] = None
    region: Optional[str] = None
    curve: Optional[RdpCurve] = None
    noise_trace: float = 0.0
    warnings: tuple[str, ...] = ()
    cause: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "route": self.route,
            "lambda_min": self.lambda_min,
            "eps": _json_float(self.eps),
            "delta_total": self.delta_total,
            "region": self.region,
            "curve": self.curve.to_dict() if self.curve is not None else None,
            "noise_trace": self.noise_trace,
            "warnings": list(self.warnings),
            "cause": self.cause,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LedgerEntry":
        return cls(
            round_index=d["round_index"],
            route=d["route"],
            lambda_min=d.get("lambda_min"),
            eps=_parse_float(d.get("eps")),
            delta_total=d.get("delta_total"),
            region=d.get("region"),
            curve=RdpCurve.from_dict(d["curve"]) if d.get("curve") else None,
            noise_trace=d.get("noise_trace", 0.0),
            warnings=tuple(d.get("warnings", ())),
            cause=d.get("cause"),
        )


class RoundLedger:
    """Append-only per-round record feeding composition and reports."""

    def __init__(self, params: PrivacyParams, composition: CompositionMode = CompositionMode.SIMPLE):
        self.params = params
        self.composition = composition
        self.entries: list[LedgerEntry] = []

    def append(self, entry: LedgerEntry) -> None:
        if self.entries and entry.round_index <= self.entries[-1].round_index:
            raise LedgerOrderError(
                f"round {entry.round_index} not after {self.entries[-1].round_index}"
            )
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self, total_eps: Optional[float] = None, extra: Optional[dict] = None) -> dict:
        doc = {
            "params": self.params.to_dict(),
            "composition": self.composition.value,
            "entries": [e.to_dict() for e in self.entries],
            "total_eps": _json_float(total_eps),
            "warnings": sorted({w for e in self.entries for w in e.warnings}),
        }
        if extra:
            doc.update(extra)
        return doc

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(**kwargs), indent=2, sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RoundLedger":
        ledger = cls(
            params=PrivacyParams.from_dict(d["params"]),
            composition=CompositionMode(d.get("composition", "simple")),
        )
        for ed in d.get("entries", ()):
            ledger.append(LedgerEntry.from_dict(ed))
        return ledger


@dataclass(frozen=True)
class CompositionResult:
    total_eps: float
    mode: CompositionMode
    delta: float
    alpha_star: Optional[float] = None
    warnings: tuple[str, ...] = ()


def _entry_curve(entry: LedgerEntry, params: PrivacyParams) -> RdpCurve:
    """Curve for RDP composition; closed-form rounds become plain Gaussian curves."""
    if entry.curve is not None:
        return entry.curve
    if entry.lambda_min is None or entry.lambda_min <= 0:
        raise NoDpGuarantee(
            f"round {entry.round_index} has no RDP curve and no usable lambda_min"
        )
    return RdpCurve(RdpVariant.GAUSSIAN, params, sum_lambda_min=entry.lambda_min)


def _entry_scalar_eps(entry: LedgerEntry, delta: float) -> float:
    if entry.cause is not None and entry.eps is None:
        raise NoDpGuarantee(f"round {entry.round_index}: {entry.cause}")
    if entry.eps is not None:
        return entry.eps
    if entry.curve is not None:
        _, eps = optimize_alpha(entry.curve, delta)
        return eps
    raise NoDpGuarantee(f"round {entry.round_index} carries neither eps nor a curve")


def compose(
    ledger: RoundLedger,
    mode: CompositionMode = CompositionMode.SIMPLE,
    delta: Optional[float] = None,
) -> CompositionResult:
    """Total epsilon across all ledger rounds at a single target delta.

    SIMPLE sums per-round scalars (rounds carrying only a curve are first
    optimized to a scalar), amplifying each round by the configured sampling
    ratio. RDP sums per-round RDP curves on a shared order grid, converts once
    and minimizes over the order; no subsampling amplification is applied on
    this route (the amplified-RDP curve is out of scope), which only ever
    overstates epsilon.
    """
    if len(ledger) == 0:
        raise EmptyLedger("cannot compose an empty ledger")
    delta = ledger.params.delta if delta is None else delta
    q = ledger.params.sampling_ratio
    warnings: set[str] = set()
    if mode is CompositionMode.SIMPLE:
        total = 0.0
        for entry in ledger.entries:
            eps = _entry_scalar_eps(entry, delta)
            if math.isinf(eps):
                return CompositionResult(math.inf, mode, delta, warnings=tuple(sorted(warnings)))
            total += amplify_subsampling(eps, q)
        return CompositionResult(total, mode, delta, warnings=tuple(sorted(warnings)))

    curves = []
    for entry in ledger.entries:
        if entry.eps is not None and math.isinf(entry.eps):
            return CompositionResult(math.inf, mode, delta, warnings=tuple(sorted(warnings)))
        curves.append(_entry_curve(entry, ledger.params))
    variants = {c.variant for c in curves}
    if len(variants) > 1:
        warnings.add(WARN_MIXED_VARIANTS)
    alpha_star, eps_star = optimize_alpha(curves, delta)
    return CompositionResult(eps_star, mode, delta, alpha_star=alpha_star, warnings=tuple(sorted(warnings)))


Route = Union[ClosedFormMode, RdpVariant]


def account_round(
    lambda_min: float,
    params: PrivacyParams,
    route: Route,
    round_index: int = 0,
    noise_trace: float = 0.0,
    extra_warnings: Sequence[str] = (),
    cause: Optional[str] = None,
) -> LedgerEntry:
    """Build a ledger entry for one round via the requested route.

    Closed-form routes produce a scalar bound immediately (chaining the
    approximate-Gaussian delta inflation when delta0 > 0); RDP routes store
    the curve and defer the scalar to composition. A non-None ``cause`` marks
    a round whose guarantee failed outright (epsilon = +inf).
    """
    warnings = tuple(extra_warnings)
    if cause is not None:
        return LedgerEntry(
            round_index=round_index,
            route="refused",
            lambda_min=lambda_min if lambda_min > 0 else None,
            eps=math.inf,
            delta_total=params.delta,
            noise_trace=noise_trace,
            warnings=warnings,
            cause=cause,
        )
    if isinstance(route, ClosedFormMode):
        bound = eps_dp_closed_form(lambda_min, params, route)
        delta_total = params.delta
        merged = warnings + bound.warnings
        if params.approx_gauss_delta0 > 0:
            inflated = delta_approx_gaussian(bound.eps, params)
            delta_total = inflated.total
            if inflated.meaningless:
                merged = merged + (WARN_MEANINGLESS_DELTA,)
        lam_eff = lambda_min * params.ns_users if route is ClosedFormMode.IID else lambda_min
        return LedgerEntry(
            round_index=round_index,
            route=f"closed_form:{route.value}",
            lambda_min=lam_eff,
            eps=bound.eps,
            delta_total=delta_total,
            region=bound.region.value,
            noise_trace=noise_trace,
            warnings=merged,
        )
    if isinstance(route, RdpVariant):
        sum_lam = lambda_min if route in (RdpVariant.THEOREM1_RDP, RdpVariant.GAUSSIAN) else None
        curve = RdpCurve(route, params, sum_lambda_min=sum_lam)
        lo, hi = curve.alpha_interval()
        if not hi > lo:
            raise EmptyValidityInterval(
                f"empty alpha validity interval for {route.value}: upper bound {hi:.6g} <= 1"
            )
        return LedgerEntry(
            round_index=round_index,
            route=f"rdp:{route.value}",
            lambda_min=lambda_min,
            curve=curve,
            noise_trace=noise_trace,
            warnings=warnings,
        )
    raise ValueError(f"unknown route {route!r}")

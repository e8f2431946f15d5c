"""Closed-form constants, covering numbers and sample-error bounds.

Everything that can overflow is carried as a natural logarithm; the linear
value is offered for convenience and may be ``inf``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

LOG2E = math.log2(math.e)

# Constants of the deviation inequality for the rescaled centered loss class.
DEVIATION_CONST = 6998.0
COMPLEXITY_CONST = 13996.0
VALIDITY_CONST = 382.0


def _exp(log_value: float) -> float:
    return math.exp(log_value) if log_value < 709.0 else math.inf


def c_of_w(w: int) -> float:
    """2 (w+2) log2(e (w+2))."""
    if w < 0:
        raise ValueError("w must be >= 0")
    return 2.0 * (w + 2) * (LOG2E + math.log2(w + 2))


def vc_cashflow_bound(d: int, w: int) -> float:
    """Upper bound c(w) d on the VC dimension of the cash flow class."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return c_of_w(w) * d


def v_exponent(d: int, w: int) -> float:
    return 2.0 * d * (c_of_w(w) + 1.0)


def log_K(d: int, w: int, beta: float) -> float:
    """log of 6 e^4 (d+1)^2 (c(w) d + 1)^2 (1024 e beta)^v."""
    c = c_of_w(w)
    return (math.log(6.0) + 4.0 + 2.0 * math.log(d + 1) + 2.0 * math.log(c * d + 1)
            + v_exponent(d, w) * math.log(1024.0 * math.e * beta))


@dataclass(frozen=True)
class LogValue:
    log: float

    @property
    def value(self) -> float:
        return _exp(self.log)


def covering_bound_loss_class(eps: float, H: float, d: int, w: int) -> LogValue:
    """Bound on the empirical L1 covering number of the centered loss class."""
    if not (eps > 0 and H > 0):
        raise ValueError("eps and H must be positive")
    if d < 1 or w < 0:
        raise ValueError("need d >= 1 and w >= 0")
    ratio = math.log(64.0 * math.e * H / eps)
    if w == 0:
        return LogValue(4.0 + 4.0 * math.log(d + 1) + 4.0 * d * ratio)
    c = c_of_w(w)
    return LogValue(4.0 + 2.0 * math.log(d + 1) + 2.0 * math.log(c * d + 1)
                    + 2.0 * d * (c + 1.0) * ratio)


@dataclass(frozen=True)
class BoundInputs:
    d: int
    w: int
    beta: float
    n: int = 1
    eps: float = 1.0
    delta: float = 0.05
    T: Optional[int] = None
    t: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.w < 0:
            raise ValueError("w must be >= 0")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.T is not None and not 0 <= self.w <= self.T - self.t - 1:
            raise ValueError(f"w must lie in 0..T-t-1 = {self.T - self.t - 1}")


@dataclass(frozen=True)
class ErrorBound:
    sample_error: float
    approx_error: float
    value: float
    valid: bool  # n >= 382 beta^2 / eps


def error_bound(inp: BoundInputs, approx_error: float = 0.0) -> ErrorBound:
    """Bound on E ||q_hat_t - q_t||^2.

    ``approx_error`` is max_s inf_h ||h - q_s||^2 over the look-ahead window,
    which only the caller can know.
    """
    if approx_error < 0:
        raise ValueError("approximation error must be nonnegative")
    w, n, beta = inp.w, inp.n, inp.beta
    factor = 2.0 * 16.0**w
    lk = log_K(inp.d, w, beta)
    inner = (DEVIATION_CONST * beta**2 + math.log(DEVIATION_CONST) + lk + 2 * math.log(beta)) / n
    inner += v_exponent(inp.d, w) * math.log(n) / n
    sample = factor * (w + 2) * inner
    valid = n >= VALIDITY_CONST * beta**2 / inp.eps
    return ErrorBound(sample, approx_error, factor * approx_error + sample, valid)


@dataclass(frozen=True)
class SampleComplexity:
    log: float
    count: Optional[int]  # None when the count does not fit a float


def sample_complexity(inp: BoundInputs, rescale_eps: bool = False) -> SampleComplexity:
    """Number of paths sufficient for accuracy eps with confidence 1 - delta.

    Evaluates 2 * 13996 (w+2) 16^w beta^2 max(log(K/delta)/eps, v log(1/eps)).
    With ``rescale_eps`` the accuracy fed to the max is eps / (32 (w+2) 16^w),
    the substitution used when deriving the bound.
    """
    w = inp.w
    eps = inp.eps / (32.0 * (w + 2) * 16.0**w) if rescale_eps else inp.eps
    lk = log_K(inp.d, w, inp.beta)
    first = (lk - math.log(inp.delta)) / eps
    second = v_exponent(inp.d, w) * math.log(1.0 / eps)
    m = max(first, second)
    if m <= 0:
        return SampleComplexity(-math.inf, 0)
    log_bound = (math.log(2.0 * COMPLEXITY_CONST) + math.log(w + 2) + w * math.log(16.0)
                 + 2.0 * math.log(inp.beta) + math.log(m))
    count = math.ceil(math.exp(log_bound)) if log_bound < 709.0 else None
    return SampleComplexity(log_bound, count)


def truncation_error_bound(beta: float, p: float, r: float, moments: Sequence[float]) -> float:
    """Sum over future times of (r/(p-r) E[f_s^p] beta^(r-p))^(1/r).

    Bounds the L_r distance between continuation values of the payoff and of
    the payoff truncated at ``beta``; ``moments`` holds E[f_s^p] for s > t.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not 1 < r < p:
        raise ValueError(f"need 1 < r < p, got r={r}, p={p}")
    if any(m < 0 or not math.isfinite(m) for m in moments):
        raise ValueError("moments must be finite and nonnegative")
    return sum((r / (p - r) * m * beta ** (r - p)) ** (1.0 / r) for m in moments)


def sobolev_degree(n: int, m: int, k: int) -> int:
    """round(n^(1/(m+2k))), at least 1: the polynomial order balancing both errors."""
    if min(n, m, k) < 1:
        raise ValueError("n, m and k must be >= 1")
    return max(1, int(round(n ** (1.0 / (m + 2 * k)))))


@dataclass(frozen=True)
class BoundReport:
    c_w: float
    vc_cashflow: float
    v: float
    log_K: float
    K: float
    log_covering: float
    error_bound: float
    sample_error: float
    valid: bool
    log_sample_complexity: float
    sample_complexity: Optional[int]
    inputs: BoundInputs

    def rows(self) -> list[tuple[str, str]]:
        out = [(k, str(v)) for k, v in asdict(self.inputs).items()]
        for name in ("c_w", "vc_cashflow", "v", "log_K", "K", "log_covering", "sample_error",
                     "error_bound", "valid", "log_sample_complexity", "sample_complexity"):
            val = getattr(self, name)
            out.append((name, f"{val:.17g}" if isinstance(val, float) else str(val)))
        return out


def bound_report(inp: BoundInputs, approx_error: float = 0.0, H: Optional[float] = None) -> BoundReport:
    """Evaluate every constant and bound for one configuration.

    The covering number is taken at scale eps with uniform bound ``H``
    (default ``beta``).
    """
    eb = error_bound(inp, approx_error)
    sc = sample_complexity(inp)
    lk = log_K(inp.d, inp.w, inp.beta)
    return BoundReport(
        c_w=c_of_w(inp.w),
        vc_cashflow=vc_cashflow_bound(inp.d, inp.w),
        v=v_exponent(inp.d, inp.w),
        log_K=lk,
        K=_exp(lk),
        log_covering=covering_bound_loss_class(inp.eps, H or inp.beta, inp.d, inp.w).log,
        error_bound=eb.value,
        sample_error=eb.sample_error,
        valid=eb.valid,
        log_sample_complexity=sc.log,
        sample_complexity=sc.count,
        inputs=inp,
    )

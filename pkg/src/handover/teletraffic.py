"""Guard-channel cell analysis.

A cell has ``C`` channels, ``g`` of them reserved for handoffs. New calls
are admitted while fewer than ``C - g`` channels are busy, handoffs while
fewer than ``C`` are. A busy channel frees at rate ``mu_call + eta_dwell``
(call completes or the mobile leaves the cell), which makes occupancy a
birth-death chain with a product-form stationary law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConvergenceError, DegenerateInputError, InvalidParameterError, ValidationError


class DegenerateChainError(DegenerateInputError):
    pass


@dataclass(frozen=True)
class GuardChannelSpec:
    channels: int
    guard: int
    lambda_new: float
    lambda_handoff: float
    mu_call: float
    eta_dwell: float = 0.0

    def __post_init__(self):
        if int(self.channels) != self.channels or self.channels < 1:
            raise DegenerateChainError(f"channels must be a positive integer, got {self.channels}")
        if int(self.guard) != self.guard or not 0 <= self.guard < self.channels:
            raise ValidationError(
                f"guard channels must satisfy 0 <= g < C, got g={self.guard}, C={self.channels}"
            )
        for name in ("lambda_new", "lambda_handoff", "mu_call", "eta_dwell"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise InvalidParameterError(f"{name} must be finite and non-negative, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "channels", int(self.channels))
        object.__setattr__(self, "guard", int(self.guard))
        if self.holding_rate <= 0:
            raise DegenerateChainError("mu_call + eta_dwell must be positive")

    @property
    def holding_rate(self) -> float:
        return self.mu_call + self.eta_dwell

    @property
    def threshold(self) -> int:
        """Occupancy at and above which new calls are refused."""
        return self.channels - self.guard

    def birth_rate(self, n: int) -> float:
        if n < self.threshold:
            return self.lambda_new + self.lambda_handoff
        if n < self.channels:
            return self.lambda_handoff
        return 0.0

    def with_handoff_rate(self, rate: float) -> "GuardChannelSpec":
        return GuardChannelSpec(self.channels, self.guard, self.lambda_new, rate,
                                self.mu_call, self.eta_dwell)


@dataclass(frozen=True)
class MobilityParams:
    speed: float          # m/s
    radius: float         # m
    holding_time: float   # s

    def __post_init__(self):
        if not (self.speed >= 0 and self.radius > 0 and self.holding_time > 0):
            raise InvalidParameterError(
                "mobility needs speed >= 0, radius > 0 and holding_time > 0"
            )

    @property
    def mu_call(self) -> float:
        return 1.0 / self.holding_time


@dataclass(frozen=True)
class BlockingResult:
    stationary: np.ndarray
    p_block_new: float
    p_drop_handoff: float


def stationary_distribution(spec: GuardChannelSpec) -> np.ndarray:
    """Occupancy distribution over states ``0..C``."""
    nu = spec.holding_rate
    p = np.empty(spec.channels + 1)
    p[0] = 1.0
    for n in range(1, spec.channels + 1):
        p[n] = p[n - 1] * spec.birth_rate(n - 1) / (n * nu)
        if p[n] > 1e250:
            p[: n + 1] /= p[n]
    return p / p.sum()


def blocking_probabilities(spec: GuardChannelSpec) -> BlockingResult:
    p = stationary_distribution(spec)
    return BlockingResult(
        stationary=p,
        p_block_new=float(p[spec.threshold:].sum()),
        p_drop_handoff=float(p[spec.channels]),
    )


def balance_residual(spec: GuardChannelSpec, p: np.ndarray) -> float:
    """Largest global-balance violation of ``p`` (flow out minus flow in)."""
    C, nu = spec.channels, spec.holding_rate
    worst = 0.0
    for n in range(C + 1):
        out = p[n] * (spec.birth_rate(n) + n * nu)
        inflow = 0.0
        if n > 0:
            inflow += p[n - 1] * spec.birth_rate(n - 1)
        if n < C:
            inflow += p[n + 1] * (n + 1) * nu
        worst = max(worst, abs(out - inflow))
    return worst


def erlang_b(channels: int, offered_load: float) -> float:
    """Erlang-B blocking via ``B(k) = a B(k-1) / (k + a B(k-1))``."""
    if channels < 0 or offered_load < 0:
        raise InvalidParameterError("channels and offered load must be non-negative")
    b = 1.0
    for k in range(1, channels + 1):
        b = offered_load * b / (k + offered_load * b)
    return b


def dwell_rate(m: MobilityParams) -> float:
    """Cell-departure rate from the mean dwell time ``pi r / (2 v)`` in a disc cell."""
    if m.speed == 0:
        return 0.0
    return 2.0 * m.speed / (math.pi * m.radius)


class FixedPoint(NamedTuple):
    rate: float
    iterations: int


def handoff_rate_fixed_point(spec: GuardChannelSpec, tol: float = 1e-10,
                             max_iter: int = 1000) -> FixedPoint:
    """Self-consistent handoff arrival rate for a cell surrounded by identical cells.

    Handoffs out of the cell equal admitted traffic times the probability a
    call leaves before completing, ``eta / (eta + mu)``. ``spec.lambda_handoff``
    is the starting iterate.
    """
    lam_n = spec.lambda_new
    if lam_n == 0 or spec.eta_dwell == 0:
        return FixedPoint(0.0, 0)
    leave = spec.eta_dwell / spec.holding_rate
    rate = spec.lambda_handoff
    for it in range(1, max_iter + 1):
        r = blocking_probabilities(spec.with_handoff_rate(rate))
        new = (lam_n * (1 - r.p_block_new) + rate * (1 - r.p_drop_handoff)) * leave
        if abs(new - rate) < tol * lam_n:
            return FixedPoint(new, it)
        rate = new
    raise ConvergenceError(
        f"handoff rate did not converge in {max_iter} iterations", last=rate, iterations=max_iter
    )


def fixed_point_update(spec: GuardChannelSpec) -> float:
    """One application of the handoff-rate map at ``spec.lambda_handoff``."""
    r = blocking_probabilities(spec)
    leave = spec.eta_dwell / spec.holding_rate
    return (spec.lambda_new * (1 - r.p_block_new) + spec.lambda_handoff * (1 - r.p_drop_handoff)) * leave


def effective_channels(handover: str, channels: int) -> int:
    """Usable channels: soft handover holds two links, halving capacity."""
    kind = getattr(handover, "handover", handover)
    if channels < 1:
        raise InvalidParameterError("channels must be at least 1")
    if kind == "soft":
        return channels // 2
    if kind == "hard":
        return channels
    raise InvalidParameterError(f"unknown handover kind {kind!r}")


# -- calibration against published blocking values --------------------------


@dataclass
class Calibration:
    lambda_new: float
    lambda_handoff: float
    residual: float            # RMS of log10 ratios
    achieved: tuple
    targets: tuple


def calibrate_to_targets(targets, *, channels: int, guard: int, mu_call: float,
                         eta_dwell: float, soft_channels: Optional[int] = None,
                         grid: int = 121) -> Calibration:
    """Search ``(lambda_new, lambda_handoff)`` matching four blocking values.

    ``targets`` is ``(P_B hard, P_D hard, P_B soft, P_D soft)``; the hard cell
    uses ``channels``, the soft one ``soft_channels``. A log-spaced grid is
    refined with Nelder-Mead on the RMS log10 error.
    """
    from scipy.optimize import minimize

    soft_channels = channels // 2 if soft_channels is None else soft_channels
    nu = mu_call + eta_dwell
    logt = np.log10(np.asarray(targets, dtype=float))

    def achieved(lam_n, lam_h):
        out = []
        for c in (channels, soft_channels):
            r = blocking_probabilities(GuardChannelSpec(c, guard, lam_n, lam_h, mu_call, eta_dwell))
            out += [r.p_block_new, r.p_drop_handoff]
        return out

    def loss(x):
        vals = np.maximum(achieved(10 ** x[0], 10 ** x[1]), 1e-300)
        return float(np.sqrt(np.mean((np.log10(vals) - logt) ** 2)))

    logs = np.linspace(-4, 3, grid) + math.log10(nu)
    best = min(((loss((a, b)), a, b) for a in logs for b in logs), key=lambda t: t[0])
    res = minimize(loss, x0=[best[1], best[2]], method="Nelder-Mead",
                   options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000})
    x = res.x if res.fun < best[0] else np.array(best[1:])
    lam_n, lam_h = 10 ** x[0], 10 ** x[1]
    return Calibration(lam_n, lam_h, loss(x), tuple(achieved(lam_n, lam_h)), tuple(targets))

#!/usr/bin/env python3
"""
oracle.py - DCF飽和スループットの解析モデル

Markov-chain model of saturated basic-access DCF: every station always has
a frame, the conditional collision probability p is the same for every
attempt, and the backoff stage doubles the window up to cw_max and stays
there (no retry limit).

The fixed point is solved by bisection on tau in [0, 1] using the series
form of the window equation,

    tau = 2 / (1 + W + p * W * sum_{k<m} (2p)^k)

which equals the textbook ratio but has no 0/0 at p = 1/2.

Frame exchange durations come from the same PhyParams / MacParams the
simulator uses:

    T_s = T_data + SIFS + T_ack + DIFS
    T_c = T_data + DIFS
"""

import logging
from dataclasses import dataclass
from typing import Iterable

import pandas as pd
from scipy.optimize import bisect

from hetcell.mac import MacParams
from hetcell.radio import PhyParams

log = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-12

ORACLE_COLUMNS = ["n", "tau", "p", "s_mbps"]


class OracleError(ArithmeticError):
    """Fixed point failed its residual check."""


@dataclass(frozen=True)
class BianchiParams:
    n: int
    w: int
    m: int
    payload_bits: int
    slot_us: float
    sifs_us: float
    difs_us: float
    t_success_us: float
    t_collision_us: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.w < 1:
            raise ValueError(f"w must be >= 1, got {self.w}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.payload_bits < 0:
            raise ValueError("payload_bits must be >= 0")

    @classmethod
    def from_config(cls, n: int, mac: MacParams = MacParams(), phy: PhyParams = PhyParams(),
                    payload_bytes: int = 1500) -> "BianchiParams":
        w = mac.cw_min + 1
        m = ((mac.cw_max + 1) // w).bit_length() - 1
        t_data = phy.data_airtime_us(payload_bytes)
        t_ack = phy.control_airtime_us()
        return cls(
            n=n,
            w=w,
            m=m,
            payload_bits=payload_bytes * 8,
            slot_us=mac.slot_us,
            sifs_us=mac.sifs_us,
            difs_us=mac.difs_us,
            t_success_us=t_data + mac.sifs_us + t_ack + mac.difs_us,
            t_collision_us=t_data + mac.difs_us,
        )


@dataclass(frozen=True)
class ThroughputEstimate:
    tau: float
    p: float
    s_mbps: float


# ============================================================================
# Model equations
# ============================================================================

def collision_probability(tau: float, n: int) -> float:
    return 1.0 - (1.0 - tau) ** (n - 1)


def window_tau(p: float, w: int, m: int) -> float:
    """Transmission probability implied by collision probability p."""
    stages = sum((2.0 * p) ** k for k in range(m))
    return 2.0 / (1.0 + w + p * w * stages)


def residuals(params: BianchiParams, tau: float, p: float) -> tuple[float, float]:
    """Residuals of both defining equations at (tau, p)."""
    w, m = params.w, params.m
    q = 1.0 - 2.0 * p
    if abs(q) > 1e-3:
        implied = 2.0 * q / (q * (w + 1) + p * w * (1.0 - (2.0 * p) ** m))
    else:
        implied = window_tau(p, w, m)
    return tau - implied, p - collision_probability(tau, params.n)


def solve_tau(params: BianchiParams) -> tuple[float, float]:
    """Fixed point (tau, p) of the saturated DCF chain."""
    if params.n == 1:
        return 2.0 / (params.w + 1), 0.0

    def f(tau):
        return tau - window_tau(collision_probability(tau, params.n), params.w, params.m)

    tau = bisect(f, 0.0, 1.0, xtol=1e-16, maxiter=400)
    p = collision_probability(tau, params.n)

    r_tau, r_p = residuals(params, tau, p)
    if abs(r_tau) > RESIDUAL_TOLERANCE or abs(r_p) > RESIDUAL_TOLERANCE:
        raise OracleError(f"fixed point residuals ({r_tau:.3e}, {r_p:.3e}) for {params}")
    return tau, p


def saturation_throughput(params: BianchiParams) -> float:
    """Aggregate saturation throughput in Mbps (bits per microsecond)."""
    if params.payload_bits == 0:
        return 0.0
    tau, _ = solve_tau(params)
    n = params.n
    p_tr = 1.0 - (1.0 - tau) ** n
    p_s = n * tau * (1.0 - tau) ** (n - 1) / p_tr
    slot_time = ((1.0 - p_tr) * params.slot_us
                 + p_tr * p_s * params.t_success_us
                 + p_tr * (1.0 - p_s) * params.t_collision_us)
    return p_s * p_tr * params.payload_bits / slot_time


def estimate(params: BianchiParams) -> ThroughputEstimate:
    tau, p = solve_tau(params)
    return ThroughputEstimate(tau, p, saturation_throughput(params))


def oracle_table(n_values: Iterable[int], mac: MacParams = MacParams(), phy: PhyParams = PhyParams(),
                 payload_bytes: int = 1500) -> pd.DataFrame:
    """One (n, tau, p, s_mbps) row per station count."""
    rows = []
    for n in n_values:
        est = estimate(BianchiParams.from_config(n, mac, phy, payload_bytes))
        rows.append({"n": n, "tau": est.tau, "p": est.p, "s_mbps": est.s_mbps})
    log.debug("oracle evaluated %d points", len(rows))
    return pd.DataFrame(rows, columns=ORACLE_COLUMNS)

"""Iterative joint bandwidth-power allocation across K sub-channels.

Maximizes sum_k B_k log2(1 + P_k h_k / (N0 B_k)) subject to sum B_k <= B
and sum P_k <= P_total, by a projected-gradient sweep on the Lagrangian:
per iteration, a gradient step on each bandwidth, an exact per-channel
water-filling refresh of each power from the current multipliers, then
dual updates for the two budget multipliers and the per-variable
non-negativity multipliers, each followed by a positive-part projection.

Implementation notes that matter for reproducing published behavior:

* The non-negativity multiplier updates are dual-descent steps
  (mu <- [mu - beta B]+, lambda <- [lambda - beta P]+).  Ascent-signed
  updates make the iteration diverge.
* The iteration runs in scaled units (`bandwidth_scale` Hz and
  `power_scale` W per internal unit, defaults 10 MHz and 1 mW).  The step
  factor is calibrated to the 200 MHz / 30 mW / unit-scale-gain operating
  point; in raw SI units the same step factor would move bandwidths by
  fractions of a Hz per sweep.
* The loop always runs its full iteration budget and reports convergence
  as a flag: converged means the final sweep improved the (scaled)
  capacity by less than the stop threshold.  Stopping at the first small
  improvement would halt inside the initial multiplier transient, which
  passes through infeasible allocations.
* At B_k = P_k = 0 the bandwidth gradient is 0/0; it is resolved by
  continuity along the solver's own water-filling rule (the ratio P/B the
  next power refresh would impose), so emptied channels can re-enter when
  the bandwidth price drops.  Without this the zero allocation is
  absorbing and transient overshoots can permanently empty channels.

With distinct gains the true optimum concentrates everything on the best
sub-channel (bandwidth stationarity forces equal per-channel SNRs, power
stationarity then forces equal gains), so intermediate states with several
active channels are slow transit, not fixed points; the trace makes that
visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as channel_mod
from . import numerics
from .channel import ChannelParams
from .numerics import McConfig
from .power_alloc import PowerBudget

__all__ = [
    "JointProblem",
    "SolverConfig",
    "JointAllocState",
    "JointTrace",
    "SolveResult",
    "KktReport",
    "initial_state",
    "objective",
    "step",
    "solve",
    "solve_batch",
    "solve_fixed_bandwidth",
    "kkt_residual",
    "ergodic_capacity_p2",
]

LN2 = math.log(2.0)
#: gradient assigned to an empty channel whose water level is unbounded
_REVIVAL_GRADIENT_CAP = 50.0


@dataclass(frozen=True)
class JointProblem:
    """Instantaneous allocation instance: gains plus total budgets."""

    gains: tuple[float, ...]
    total_bandwidth: float
    total_power: float
    noise_psd: float

    def __post_init__(self):
        object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))
        if len(self.gains) < 1:
            raise ValueError("need at least one sub-channel gain")
        if any(g < 0.0 for g in self.gains):
            raise ValueError("gains must be non-negative")
        if min(self.total_bandwidth, self.total_power, self.noise_psd) <= 0.0:
            raise ValueError("budgets and noise PSD must be positive")

    @property
    def k(self) -> int:
        return len(self.gains)


@dataclass(frozen=True)
class SolverConfig:
    """Step factor, stop threshold, iteration budget, and internal scaling.

    `stop_delta` applies to the capacity expressed in `bandwidth_scale`
    bit/s units (0.01 at the default scale means 100 kbit/s).
    """

    step: float = 0.01
    stop_delta: float = 0.01
    max_iter: int = 8000
    bandwidth_scale: float = 1e7
    power_scale: float = 1e-3
    init_multiplier: float = 0.1

    def __post_init__(self):
        if self.step <= 0.0 or self.stop_delta <= 0.0:
            raise ValueError("step and stop_delta must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.bandwidth_scale <= 0.0 or self.power_scale <= 0.0:
            raise ValueError("scales must be positive")


@dataclass
class JointAllocState:
    """Solver state; primal variables in SI units, multipliers in solver units."""

    bandwidths: np.ndarray
    powers: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    omega: float
    chi: float
    iteration: int
    capacity: float


@dataclass
class JointTrace:
    """Per-iteration history (SI units) for plotting and CSV export."""

    iterations: np.ndarray
    bandwidths: np.ndarray
    powers: np.ndarray
    capacity: np.ndarray


@dataclass
class SolveResult:
    state: JointAllocState
    converged: bool
    trace: JointTrace | None


def _scaled(problem: JointProblem, cfg: SolverConfig):
    h = np.asarray(problem.gains, dtype=float)
    bn = problem.total_bandwidth / cfg.bandwidth_scale
    pn = problem.total_power / cfg.power_scale
    n0 = problem.noise_psd * cfg.bandwidth_scale / cfg.power_scale
    return h, bn, pn, n0


def _capacity_scaled(b: np.ndarray, p: np.ndarray, h: np.ndarray, n0: float) -> np.ndarray:
    """sum_k b log2(1 + p h / (n0 b)) with the b -> 0 limit taken as 0."""
    out = np.zeros_like(b)
    live = (b > 0.0) & (p > 0.0)
    out[live] = b[live] * np.log2(1.0 + p[live] * h[live] / (n0 * b[live]))
    return out.sum(axis=-1)


def _grad_bandwidth(snr: np.ndarray) -> np.ndarray:
    """d/dB of B log2(1 + S) at fixed P, as a function of S = Ph/(N0 B)."""
    return np.log2(1.0 + snr) - snr / ((1.0 + snr) * LN2)


def _sweep(h, b, p, lam, mu, omega, chi, bn, pn, n0, beta):
    """One full update sweep, batched over leading axes; mutates nothing."""
    wl = omega[..., None] - lam
    usable = h > 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv_snr_floor = np.where(usable, n0 / np.where(usable, h, 1.0), np.inf)
        # power per unit bandwidth the current multipliers imply; infinite
        # when the water level is unbounded on a usable channel
        u = np.where(
            wl > 0.0,
            np.maximum(1.0 / (np.maximum(wl, 1e-300) * LN2) - inv_snr_floor, 0.0),
            np.where(usable, np.inf, 0.0),
        )
        live = (b > 0.0) & (p > 0.0)
        snr = np.where(live, p * h / (n0 * np.where(b > 0.0, b, 1.0)), u * h / n0)
        grad = np.where(np.isfinite(snr), _grad_bandwidth(snr), _REVIVAL_GRADIENT_CAP)
    b = np.maximum(b + beta * (grad + mu - chi[..., None]), 0.0)
    with np.errstate(invalid="ignore"):
        # unbounded water level on a channel with bandwidth: cap at the
        # total budget; the dual pressure on omega corrects it afterwards
        p = np.minimum(np.where(np.isfinite(u), b * u, np.where(b > 0.0, pn, 0.0)), pn)
    chi = np.maximum(chi + beta * (b.sum(axis=-1) - bn), 0.0)
    mu = np.maximum(mu - beta * b, 0.0)
    omega = np.maximum(omega + beta * (p.sum(axis=-1) - pn), 0.0)
    lam = np.maximum(lam - beta * p, 0.0)
    return b, p, lam, mu, omega, chi


def initial_state(problem: JointProblem, cfg: SolverConfig | None = None) -> JointAllocState:
    """Uniform split of both budgets, all multipliers at the configured start."""
    cfg = cfg or SolverConfig()
    k = problem.k
    b = np.full(k, problem.total_bandwidth / k)
    p = np.full(k, problem.total_power / k)
    return JointAllocState(
        bandwidths=b,
        powers=p,
        lam=np.full(k, cfg.init_multiplier),
        mu=np.full(k, cfg.init_multiplier),
        omega=cfg.init_multiplier,
        chi=cfg.init_multiplier,
        iteration=0,
        capacity=objective(problem, b, p),
    )


def objective(problem: JointProblem, bandwidths, powers) -> float:
    """Realized sum rate in bit/s for a concrete allocation."""
    b = np.asarray(bandwidths, dtype=float)
    p = np.asarray(powers, dtype=float)
    h = np.asarray(problem.gains, dtype=float)
    return float(_capacity_scaled(b, p, h, problem.noise_psd))


def step(problem: JointProblem, state: JointAllocState, cfg: SolverConfig | None = None) -> JointAllocState:
    """Apply one update sweep to a state (bandwidths, powers, then duals)."""
    cfg = cfg or SolverConfig()
    h, bn, pn, n0 = _scaled(problem, cfg)
    b = state.bandwidths / cfg.bandwidth_scale
    p = state.powers / cfg.power_scale
    omega = np.asarray(state.omega, dtype=float)
    chi = np.asarray(state.chi, dtype=float)
    b, p, lam, mu, omega, chi = _sweep(
        h, b, p, state.lam.copy(), state.mu.copy(), omega, chi, bn, pn, n0, cfg.step
    )
    bw = b * cfg.bandwidth_scale
    pw = p * cfg.power_scale
    return JointAllocState(
        bandwidths=bw,
        powers=pw,
        lam=lam,
        mu=mu,
        omega=float(omega),
        chi=float(chi),
        iteration=state.iteration + 1,
        capacity=objective(problem, bw, pw),
    )


def solve_batch(
    gains: np.ndarray,
    total_bandwidth: float,
    total_power: float,
    noise_psd: float,
    cfg: SolverConfig | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the full iteration on a batch of gain vectors.

    gains: (n, K).  Returns (bandwidths (n, K), powers (n, K),
    capacities (n,)) in SI units.  Used by the ergodic-capacity Monte
    Carlo, where every draw is an independent allocation instance.
    """
    cfg = cfg or SolverConfig()
    h = np.asarray(gains, dtype=float)
    if h.ndim != 2:
        raise ValueError("gains must be a (n, K) array")
    n, k = h.shape
    bn = total_bandwidth / cfg.bandwidth_scale
    pn = total_power / cfg.power_scale
    n0 = noise_psd * cfg.bandwidth_scale / cfg.power_scale
    b = np.full((n, k), bn / k)
    p = np.full((n, k), pn / k)
    lam = np.full((n, k), cfg.init_multiplier)
    mu = np.full((n, k), cfg.init_multiplier)
    omega = np.full(n, cfg.init_multiplier)
    chi = np.full(n, cfg.init_multiplier)
    for _ in range(cfg.max_iter):
        b, p, lam, mu, omega, chi = _sweep(h, b, p, lam, mu, omega, chi, bn, pn, n0, cfg.step)
    caps = _capacity_scaled(b, p, h, n0) * cfg.bandwidth_scale
    return b * cfg.bandwidth_scale, p * cfg.power_scale, caps


def solve(
    problem: JointProblem, cfg: SolverConfig | None = None, keep_trace: bool = True
) -> SolveResult:
    """Run the allocation iteration for its full budget and report the result.

    The convergence flag is set when the last sweep improved the scaled
    capacity by less than `stop_delta`; a cleared flag means the iteration
    budget ended while the objective was still moving.
    """
    cfg = cfg or SolverConfig()
    h, bn, pn, n0 = _scaled(problem, cfg)
    k = problem.k
    b = np.full(k, bn / k)
    p = np.full(k, pn / k)
    lam = np.full(k, cfg.init_multiplier)
    mu = np.full(k, cfg.init_multiplier)
    omega = np.asarray(cfg.init_multiplier, dtype=float)
    chi = np.asarray(cfg.init_multiplier, dtype=float)

    n_rows = cfg.max_iter + 1
    tr_b = np.empty((n_rows, k)) if keep_trace else None
    tr_p = np.empty((n_rows, k)) if keep_trace else None
    tr_c = np.empty(n_rows) if keep_trace else None

    cap = float(_capacity_scaled(b, p, h, n0))
    if keep_trace:
        tr_b[0], tr_p[0], tr_c[0] = b, p, cap
    improvement = math.inf
    for i in range(1, cfg.max_iter + 1):
        b, p, lam, mu, omega, chi = _sweep(h, b, p, lam, mu, omega, chi, bn, pn, n0, cfg.step)
        new_cap = float(_capacity_scaled(b, p, h, n0))
        improvement = new_cap - cap
        cap = new_cap
        if keep_trace:
            tr_b[i], tr_p[i], tr_c[i] = b, p, cap
    converged = abs(improvement) < cfg.stop_delta

    state = JointAllocState(
        bandwidths=b * cfg.bandwidth_scale,
        powers=p * cfg.power_scale,
        lam=lam,
        mu=mu,
        omega=float(omega),
        chi=float(chi),
        iteration=cfg.max_iter,
        capacity=cap * cfg.bandwidth_scale,
    )
    trace = None
    if keep_trace:
        trace = JointTrace(
            iterations=np.arange(n_rows),
            bandwidths=tr_b * cfg.bandwidth_scale,
            powers=tr_p * cfg.power_scale,
            capacity=tr_c * cfg.bandwidth_scale,
        )
    return SolveResult(state=state, converged=converged, trace=trace)


def _waterfill_powers(h: np.ndarray, bk: np.ndarray, total_power: float, n0: float):
    """Exact water level theta with P_k = [theta - n0 bk / h_k]+, batched."""
    base = np.where(h > 0.0, n0 * bk / np.where(h > 0.0, h, 1.0), np.inf)
    lo = np.zeros(base.shape[:-1])
    finite = np.where(np.isfinite(base), base, 0.0)
    hi = total_power + finite.max(axis=-1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        spent = np.maximum(mid[..., None] - base, 0.0).sum(axis=-1)
        over = spent > total_power
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
    theta = 0.5 * (lo + hi)
    return np.maximum(theta[..., None] - base, 0.0), theta


def solve_fixed_bandwidth(
    problem: JointProblem, cfg: SolverConfig | None = None
) -> JointAllocState:
    """Baseline: equal bandwidths B/K, exact water-filled powers.

    Powers solve the power-only problem optimally (bisected water level),
    so the power-side multipliers are exact; the bandwidth-side
    multipliers are set to zero and carry no meaning here.
    """
    cfg = cfg or SolverConfig()
    h, bn, pn, n0 = _scaled(problem, cfg)
    k = problem.k
    bk = np.full(k, bn / k)
    p, theta = _waterfill_powers(h, bk, pn, n0)
    omega = bk[0] / (theta * LN2) if theta > 0.0 else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        grad_p = np.where(
            h > 0.0, bk * h / ((n0 * bk + p * h) * LN2), 0.0
        )
    lam = np.maximum(omega - grad_p, 0.0)
    bw = bk * cfg.bandwidth_scale
    pw = p * cfg.power_scale
    return JointAllocState(
        bandwidths=bw,
        powers=pw,
        lam=lam,
        mu=np.zeros(k),
        omega=float(omega),
        chi=0.0,
        iteration=0,
        capacity=objective(problem, bw, pw),
    )


@dataclass
class KktReport:
    """Violations of the first-order conditions at a state (solver units).

    Stationarity entries are meaningful in active coordinates only: the
    power line where P_k > 0, the bandwidth line where B_k > 0.
    Feasibility entries are relative budget violations.
    """

    stationarity_power: np.ndarray
    stationarity_bandwidth: np.ndarray
    active_power: np.ndarray
    active_bandwidth: np.ndarray
    comp_slack_power: np.ndarray
    comp_slack_bandwidth: np.ndarray
    comp_slack_total_power: float
    comp_slack_total_bandwidth: float
    feas_power: float
    feas_bandwidth: float
    feas_nonneg: float

    @property
    def max_stationarity_active(self) -> float:
        vals = [0.0]
        if np.any(self.active_power):
            vals.append(float(np.max(self.stationarity_power[self.active_power])))
        if np.any(self.active_bandwidth):
            vals.append(float(np.max(self.stationarity_bandwidth[self.active_bandwidth])))
        return max(vals)

    @property
    def max_feasibility(self) -> float:
        return max(self.feas_power, self.feas_bandwidth, self.feas_nonneg)


def kkt_residual(
    problem: JointProblem, state: JointAllocState, cfg: SolverConfig | None = None
) -> KktReport:
    """Measure first-order optimality violations of a state.

    Residuals are computed in the solver's scaled units (where the
    multipliers live).  Note the structural fact documented in the module
    docstring: with two or more active channels at distinct gains the
    bandwidth stationarity line cannot vanish, so a nonzero bandwidth
    residual at such states reflects the problem geometry rather than a
    solver defect.
    """
    cfg = cfg or SolverConfig()
    h, bn, pn, n0 = _scaled(problem, cfg)
    b = state.bandwidths / cfg.bandwidth_scale
    p = state.powers / cfg.power_scale
    active_b = b > 0.0
    active_p = p > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = np.where(active_b, p * h / (n0 * np.where(active_b, b, 1.0)), 0.0)
        grad_p = np.where(active_b, b * h / ((n0 * b + p * h) * LN2), 0.0)
    r_p = np.abs(grad_p + state.lam - state.omega)
    r_b = np.abs(_grad_bandwidth(snr) + state.mu - state.chi)
    return KktReport(
        stationarity_power=r_p,
        stationarity_bandwidth=r_b,
        active_power=active_p,
        active_bandwidth=active_b,
        comp_slack_power=np.abs(state.lam * p),
        comp_slack_bandwidth=np.abs(state.mu * b),
        comp_slack_total_power=abs(state.omega * (p.sum() - pn)),
        comp_slack_total_bandwidth=abs(state.chi * (b.sum() - bn)),
        feas_power=max(0.0, (p.sum() - pn) / pn),
        feas_bandwidth=max(0.0, (b.sum() - bn) / bn),
        feas_nonneg=max(0.0, float(-min(b.min(), p.min()))),
    )


def ergodic_capacity_p2(
    cp: ChannelParams,
    pb: PowerBudget,
    cfg: SolverConfig | None = None,
    mc_cfg: McConfig | None = None,
    scheme: str = "adaptive",
    threads: int = 1,
) -> tuple[float, float]:
    """Ergodic capacity of the per-draw allocation, by Monte Carlo.

    Each draw samples the K per-sub-channel gains from the exact channel
    law, allocates (adaptively or with fixed bandwidths), and contributes
    its realized sum rate.  `pb.peak_power` is the per-draw total power
    budget and `pb.bandwidth` the total bandwidth.  Returns (mean, std
    error) in bit/s.
    """
    cfg = cfg or SolverConfig()
    mc_cfg = mc_cfg or McConfig(samples=64, chunk_size=64)
    k = cp.k

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        cols = [
            channel_mod.sample_subchannel(sc, rng, n) for sc in cp.subchannels
        ]
        return np.stack(cols, axis=1)

    if scheme == "adaptive":
        def value(x: np.ndarray) -> np.ndarray:
            _, _, caps = solve_batch(
                x, pb.bandwidth, pb.peak_power, pb.noise_psd, cfg
            )
            return caps
    elif scheme == "fixed":
        def value(x: np.ndarray) -> np.ndarray:
            h = np.asarray(x, dtype=float)
            bn = pb.bandwidth / cfg.bandwidth_scale
            pn = pb.peak_power / cfg.power_scale
            n0 = pb.noise_psd * cfg.bandwidth_scale / cfg.power_scale
            bk = np.full(h.shape, bn / h.shape[-1])
            p, _ = _waterfill_powers(h, bk, pn, n0)
            return _capacity_scaled(bk, p, h, n0) * cfg.bandwidth_scale
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    return numerics.mc_expectation(k, sampler, value, mc_cfg, threads=threads)

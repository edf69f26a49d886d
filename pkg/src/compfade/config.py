"""Flat key=value experiment configuration with baked-in defaults.

An empty (or absent) config reproduces the reference operating point:
3 sub-channels with 8 reflectors each, fading and shadowing parameters 2,
scale gain 5, a 300 m two-hop distance product at path-loss exponent 0.5,
200 MHz total bandwidth, and the published solver constants.  Unknown
keys are rejected so typos cannot silently fall back to defaults.

The model leaves the noise spectral density unspecified; two defaults are
baked in and documented: `noise_psd` (water-filling and energy-efficiency
experiments) and `joint_noise_psd` (the joint allocation iteration, whose
anchor behavior sits at a lower SNR).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .channel import ChannelParams, FadingParams
from .energy import CircuitPowerModel, EeScenario, NodePowerModel
from .joint_alloc import JointProblem, SolverConfig
from .numerics import McConfig
from .power_alloc import PowerBudget

__all__ = ["ConfigError", "ExperimentConfig"]

_SQRT300 = math.sqrt(300.0)


class ConfigError(ValueError):
    """Bad config file: unknown key, unparsable value, or invalid combination."""


@dataclass
class ExperimentConfig:
    # channel
    k: int = 3
    n_reflectors: int = 8
    fading_m: float = 2.0
    shadowing_ms: float = 2.0
    mean_gain: float = 5.0
    dist_sr: float = _SQRT300
    dist_rd: float = _SQRT300
    pathloss_exp: float = 0.5
    # budgets / noise (watts, Hz, watts/Hz)
    bandwidth: float = 2e8
    noise_psd: float = 1e-13
    avg_power: float = 0.1
    peak_power: float = 1.0
    # joint allocation
    joint_gains: str = "5,5,5"
    joint_power: float = 0.03
    joint_noise_psd: float = 2.5e-10
    step: float = 0.01
    stop_delta: float = 0.01
    max_iter: int = 8000
    # Monte Carlo
    seed: int = 12345
    samples: int = 100_000
    chunk_size: int = 65_536
    # sweep axis ("" = the command's natural default sweep)
    sweep_name: str = ""
    sweep_start: float = 1.0
    sweep_stop: float = 4.0
    sweep_points: int = 4
    # gain grid for density/policy surfaces
    h_min: float = 0.05
    h_max: float = 25.0
    h_points: int = 101
    # energy model (watts)
    p_c: float = 3.0
    p_fpga_relay: float = 1.0
    p_pa: float = 5.0
    p_fpga_irs: float = 0.5
    p_pin: float = 0.0085
    eta: float = 0.8
    relay_mean_gain: float = 1.0
    ee_k_list: str = "3"
    ee_n_list: str = "8,16"

    @classmethod
    def load(cls, path: str | Path | None) -> "ExperimentConfig":
        """Parse key=value lines ('#' comments allowed); None means defaults."""
        cfg = cls()
        if path is None:
            return cfg
        known = {f.name: f.type for f in fields(cls)}
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                setattr(cfg, key, _convert(type(getattr(cfg, key)), value))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.k < 1 or self.n_reflectors < 1:
            raise ConfigError("k and n_reflectors must be >= 1")
        try:
            self.channel_params()
            self.power_budget()
            self.joint_problem()
            self.mc_config()
            self.solver_config()
        except (ValueError, ConfigError) as exc:
            raise ConfigError(str(exc)) from exc

    def effective_text(self) -> str:
        """Round-trippable echo of every effective key (defaults + overrides)."""
        lines = [f"{f.name}={getattr(self, f.name)!r}".replace("'", "") for f in fields(self)]
        return "\n".join(lines) + "\n"

    # --- object builders -------------------------------------------------

    def fading(self) -> FadingParams:
        return FadingParams(self.fading_m, self.shadowing_ms, self.mean_gain)

    def channel_params(self, **overrides) -> ChannelParams:
        merged = {
            "k": self.k,
            "n_reflectors": self.n_reflectors,
            "fading_m": self.fading_m,
            "shadowing_ms": self.shadowing_ms,
            "mean_gain": self.mean_gain,
            "dist_sr": self.dist_sr,
            "dist_rd": self.dist_rd,
            "pathloss_exp": self.pathloss_exp,
        }
        merged.update(overrides)
        fading = FadingParams(merged["fading_m"], merged["shadowing_ms"], merged["mean_gain"])
        return ChannelParams.homogeneous(
            k=int(merged["k"]),
            fading=fading,
            n_reflectors=int(merged["n_reflectors"]),
            dist_sr=merged["dist_sr"],
            dist_rd=merged["dist_rd"],
            pathloss_exp=merged["pathloss_exp"],
        )

    def power_budget(self, avg_power: float | None = None) -> PowerBudget:
        return PowerBudget(
            avg_power=self.avg_power if avg_power is None else avg_power,
            peak_power=self.peak_power,
            noise_psd=self.noise_psd,
            bandwidth=self.bandwidth,
        )

    def joint_problem(self) -> JointProblem:
        gains = tuple(float(t) for t in self.joint_gains.split(","))
        return JointProblem(
            gains=gains,
            total_bandwidth=self.bandwidth,
            total_power=self.joint_power,
            noise_psd=self.joint_noise_psd,
        )

    def solver_config(self) -> SolverConfig:
        return SolverConfig(step=self.step, stop_delta=self.stop_delta, max_iter=self.max_iter)

    def mc_config(self, seed: int | None = None, samples: int | None = None) -> McConfig:
        return McConfig(
            seed=self.seed if seed is None else seed,
            samples=self.samples if samples is None else samples,
            chunk_size=self.chunk_size,
        )

    def node_model(self, n_reflectors: int | None = None) -> NodePowerModel:
        return NodePowerModel(
            p_fpga_relay=self.p_fpga_relay,
            p_pa=self.p_pa,
            p_fpga_irs=self.p_fpga_irs,
            p_pin=self.p_pin,
            n_pins=self.n_reflectors if n_reflectors is None else n_reflectors,
            eta=self.eta,
        )

    def circuit_model(self) -> CircuitPowerModel:
        return CircuitPowerModel(aggregate=self.p_c)

    def scenario(self, k: int | None = None, n_reflectors: int | None = None) -> EeScenario:
        n = self.n_reflectors if n_reflectors is None else n_reflectors
        cp = self.channel_params(
            k=self.k if k is None else k, n_reflectors=n
        )
        return EeScenario(
            channel=cp,
            source_power=self.avg_power,
            budget=self.power_budget(),
            node=self.node_model(n_reflectors=n),
            circuit=self.circuit_model(),
            relay_mean_gain=self.relay_mean_gain,
        )

    def int_list(self, key: str) -> list[int]:
        try:
            return [int(t) for t in getattr(self, key).split(",") if t.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad integer list in {key}: {exc}") from exc


def _convert(target_type: type, value: str):
    if target_type is int:
        as_float = float(value)
        if as_float != int(as_float):
            raise ValueError(f"expected an integer, got {value!r}")
        return int(as_float)
    if target_type is float:
        return float(value)
    return value

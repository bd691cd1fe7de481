"""Responding to environment changes: forget, full transfer or partial transfer of a SAU agent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .sau import SAUAgent

KINDS = ("forget", "full", "partial")
_ALIASES = {"full_transfer": "full", "partial_transfer": "partial"}


@dataclass(frozen=True)
class TransferStrategy:
    """What to keep of the approximator when a singularity fires.

    ``layers`` lists the 1-based layers carried over by ``partial``; it is ignored by
    the other kinds.
    """

    kind: str
    layers: tuple[int, ...] = (2,)

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ConfigError(f"unknown transfer strategy {self.kind!r}", "transfer.strategy")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "layers", tuple(sorted({int(l) for l in self.layers})))

    def validate_for(self, n_layers: int) -> None:
        if self.kind != "partial":
            return
        if not self.layers:
            raise ConfigError("partial transfer needs at least one layer", "transfer.layers")
        if any(not 1 <= l <= n_layers for l in self.layers):
            raise ConfigError(f"transfer layers must lie in 1..{n_layers}", "transfer.layers")
        if len(self.layers) == n_layers:
            raise ConfigError("partial transfer of every layer is a full transfer", "transfer.layers")

    def reset_layers(self, n_layers: int) -> tuple[int, ...]:
        """Layers that get redrawn."""
        if self.kind == "forget":
            return tuple(range(1, n_layers + 1))
        if self.kind == "full":
            return ()
        return tuple(l for l in range(1, n_layers + 1) if l not in self.layers)


def apply_strategy(agent: SAUAgent, strategy: TransferStrategy, rng) -> SAUAgent:
    """Apply ``strategy`` in place and return the agent.

    Every strategy resets the exploration statistics, restarts the forced warm-up and
    empties the replay buffer. Redrawn layers also lose their optimizer history.
    """
    net = agent.net
    strategy.validate_for(net.n_layers)
    layers = strategy.reset_layers(net.n_layers)
    if layers:
        net.reinit(layers, np.random.default_rng(rng))
        agent.opt.reset([net.layer_slice(l) for l in layers])
    agent.reset_exploration()
    return agent


class SingularityDetector:
    """Interface for anomaly detectors: ``__call__(kpis, step) -> bool``."""

    def __call__(self, kpis, step: int) -> bool:  # pragma: no cover - interface
        raise NotImplementedError


class ScheduledSingularity(SingularityDetector):
    """Oracle detector that fires exactly at the scheduled event times.

    Event times are in seconds and map to the step ``round(time / step_seconds)``.
    Events at time 0 describe the initial state and never fire.
    """

    def __init__(self, event_times_s=(), step_seconds: float = 0.05):
        times = [float(t) for t in event_times_s]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("singularity times must be strictly increasing", "transfer.events")
        if any(t < 0 for t in times):
            raise ConfigError("singularity times must be nonnegative", "transfer.events")
        if step_seconds <= 0:
            raise ConfigError("step_seconds must be positive", "phy.step_seconds")
        self.event_times_s = tuple(times)
        self.step_seconds = step_seconds
        self.steps = frozenset(int(round(t / step_seconds)) for t in times if t > 0)

    def __call__(self, kpis=None, step: int = 0) -> bool:
        return step in self.steps

    def at_time(self, seconds: float) -> bool:
        return self(None, int(round(seconds / self.step_seconds)))


def detect_singularity(detector: SingularityDetector, kpis, step: int) -> bool:
    return bool(detector(kpis, step))

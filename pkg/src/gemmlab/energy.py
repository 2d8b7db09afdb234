"""Power sensors and the two-point energy estimator.

Energy over a measured region is approximated as the mean of the power read
just before and just after the region times its duration. That is exact for
power that varies linearly in time and a crude trapezoid otherwise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol

from .errors import ChannelMismatch, ConfigError, ProbeReadError, UnsupportedChannel


@dataclass(frozen=True)
class PowerSample:
    watts: float
    channel: str

    def __post_init__(self):
        if not self.watts >= 0:
            raise ValueError(f"power must be non-negative, got {self.watts}")


@dataclass(frozen=True)
class EnergyEstimate:
    channel: str
    joules: float

    def to_json_dict(self) -> dict:
        return {"channel": self.channel, "joules": self.joules}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "EnergyEstimate":
        return cls(str(obj["channel"]), float(obj["joules"]))


def estimate_energy(p_start: PowerSample, p_end: PowerSample, elapsed: float) -> EnergyEstimate:
    if p_start.channel != p_end.channel:
        raise ChannelMismatch(f"cannot combine channels {p_start.channel!r} and {p_end.channel!r}")
    if elapsed < 0:
        raise ValueError(f"elapsed time must be non-negative, got {elapsed}")
    return EnergyEstimate(p_start.channel, (p_start.watts + p_end.watts) / 2 * elapsed)


class PowerSensor(Protocol):
    @property
    def channels(self) -> tuple[str, ...]: ...

    def read(self, channel: str) -> PowerSample: ...


class NullSensor:
    """A sensor with no channels; every read fails."""

    channels: tuple[str, ...] = ()

    def read(self, channel: str) -> PowerSample:
        raise UnsupportedChannel(f"null sensor has no channel {channel!r}")


@dataclass(frozen=True)
class LinearDrift:
    """Power moving linearly from ``start`` to ``end`` watts over ``duration`` seconds, then flat."""

    start: float
    end: float
    duration: float

    def at(self, t: float) -> float:
        if self.duration <= 0 or t >= self.duration:
            return self.end
        if t <= 0:
            return self.start
        return self.start + (self.end - self.start) * t / self.duration


class MockSensor:
    """Synthetic sensor for tests and dry runs.

    Each channel is either a constant wattage or a :class:`LinearDrift`
    measured from the moment the sensor is created (or :meth:`reset`).
    The clock is injectable so drifting tests can be deterministic.
    """

    def __init__(self, channels: Mapping[str, float | LinearDrift],
                 clock: Callable[[], float] = time.perf_counter):
        self._profiles = dict(channels)
        self._clock = clock
        self._origin = clock()

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(self._profiles)

    def reset(self) -> None:
        self._origin = self._clock()

    def read(self, channel: str) -> PowerSample:
        try:
            profile = self._profiles[channel]
        except KeyError:
            raise UnsupportedChannel(f"mock sensor has no channel {channel!r}") from None
        if isinstance(profile, LinearDrift):
            return PowerSample(profile.at(self._clock() - self._origin), channel)
        return PowerSample(float(profile), channel)


class FileProbeSensor:
    """Reads one number per channel from a file (e.g. a sysfs power node).

    ``scale`` converts the raw reading to watts, e.g. ``1e-6`` for microwatts.
    """

    def __init__(self, paths: Mapping[str, str], scale: float = 1.0):
        self._paths = {ch: Path(p) for ch, p in paths.items()}
        self.scale = scale

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(self._paths)

    def read(self, channel: str) -> PowerSample:
        try:
            path = self._paths[channel]
        except KeyError:
            raise UnsupportedChannel(f"no probe configured for channel {channel!r}") from None
        try:
            raw = float(path.read_text().split()[0])
        except (OSError, ValueError, IndexError) as exc:
            raise ProbeReadError(f"cannot read power for {channel!r} from {path}: {exc}") from exc
        try:
            return PowerSample(raw * self.scale, channel)
        except ValueError as exc:
            raise ProbeReadError(f"{path}: {exc}") from exc


def sensor_from_config(cfg: Mapping | None) -> PowerSensor | None:
    """Build a sensor from a configuration mapping.

    Accepted forms::

        {"kind": "null"}
        {"kind": "mock", "channels": {"gpu": 2.0, "memory": [1.0, 3.0, 0.5]}}
        {"kind": "file", "paths": {"gpu": "/path/to/node"}, "scale": 1e-6}

    A three-element list under a mock channel is ``[start, end, duration]``.
    """
    if cfg is None:
        return None
    kind = cfg.get("kind")
    if kind == "null":
        return NullSensor()
    if kind == "mock":
        channels = {}
        for name, value in (cfg.get("channels") or {}).items():
            if isinstance(value, (list, tuple)):
                if len(value) != 3:
                    raise ConfigError(f"mock channel {name!r}: expected [start, end, duration]")
                channels[name] = LinearDrift(*(float(v) for v in value))
            else:
                channels[name] = float(value)
        return MockSensor(channels)
    if kind == "file":
        paths = cfg.get("paths")
        if not paths:
            raise ConfigError("file sensor needs a 'paths' mapping")
        return FileProbeSensor(paths, float(cfg.get("scale", 1.0)))
    raise ConfigError(f"unknown sensor kind {kind!r}")

"""Shared domain vocabulary: subjects, devices, channels, samples, time series.

Everything in here is an immutable value type, safe to share across threads.
Timestamps are integer epoch milliseconds, UTC, device-supplied.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

MS_PER_DAY = 86_400_000
MS_PER_MINUTE = 60_000

# Channel names double as file-name components, so the grammar is strict.
CHANNEL_RE = re.compile(r"[a-z0-9_]{1,64}")

# Above 2^53 millisecond timestamps stop being exactly representable as floats,
# which would silently corrupt chart payloads.
MAX_T_MS = 2**53


class SierraError(Exception):
    """Base class for all domain errors raised by this package."""


class ValidationError(SierraError):
    """A value failed a domain invariant."""


class NonFiniteValue(ValidationError):
    pass


class TimestampOutOfRange(ValidationError):
    pass


class BadChannelName(ValidationError):
    pass


def is_channel_name(name: str) -> bool:
    return isinstance(name, str) and CHANNEL_RE.fullmatch(name) is not None


@dataclass(frozen=True)
class Sample:
    """A single (channel, timestamp, value) reading from a device."""

    channel: str
    t_ms: int
    value: float


@dataclass(frozen=True)
class TimeSeries:
    """Stored points for one (subject, channel), sorted ascending by t_ms."""

    subject: str
    channel: str
    points: tuple[tuple[int, float], ...] = ()

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SubjectRecord:
    """A monitored person. ``phi`` holds plaintext field-path -> value pairs
    in memory only; the store encrypts them before anything touches disk."""

    id: str
    cohort: str = ""
    phi: dict[str, str] = field(default_factory=dict)
    created_at: int = 0


def validate_sample(s: Sample) -> Sample:
    """Return ``s`` unchanged iff every invariant holds, else raise.

    Idempotent: a sample that passes once will pass again.
    """
    if not is_channel_name(s.channel):
        raise BadChannelName(f"bad channel name: {s.channel!r}")
    if not isinstance(s.t_ms, int) or isinstance(s.t_ms, bool):
        raise TimestampOutOfRange(f"timestamp must be an integer, got {s.t_ms!r}")
    if not (0 <= s.t_ms < MAX_T_MS):
        raise TimestampOutOfRange(f"timestamp out of range: {s.t_ms}")
    v = s.value
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise NonFiniteValue(f"value must be a float, got {v!r}")
    if v != v or v in (float("inf"), float("-inf")):
        raise NonFiniteValue(f"value is not finite: {v!r}")
    return s


def day_bucket(t_ms: int, tz_offset_minutes: int = 0) -> int:
    """Integer days since epoch for ``t_ms`` shifted into the given UTC offset."""
    return (t_ms + tz_offset_minutes * MS_PER_MINUTE) // MS_PER_DAY


def day_start_ms(day_index: int, tz_offset_minutes: int = 0) -> int:
    """Epoch milliseconds at which ``day_index`` begins in the given offset."""
    return day_index * MS_PER_DAY - tz_offset_minutes * MS_PER_MINUTE

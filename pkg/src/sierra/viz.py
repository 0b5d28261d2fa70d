"""Visualization palette: pure data-stream transforms, a plugin registry,
and the built-in plugin set advertised through the portfolio listing.

A plugin is a descriptor plus a pure transform (TimeSeries, params) ->
DataStream; the registry handles parameter checking and the store query, so
plugin authors only write the transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .core import SierraError, TimeSeries, day_bucket, day_start_ms
from .store import Store

Point = tuple[float, float]


class DuplicatePluginId(SierraError):
    pass


class UnknownPlugin(SierraError):
    pass


class BadParams(SierraError):
    def __init__(self, issues: list[tuple[str, str]]):
        super().__init__("; ".join(f"{p}: {r}" for p, r in issues))
        self.issues = issues


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str  # "string" | "int" | "float" | "enum"
    required: bool = False
    default: object = None
    choices: tuple[str, ...] = ()


@dataclass(frozen=True)
class PluginDescriptor:
    id: str
    name: str
    description: str
    param_schema: tuple[ParamSpec, ...] = ()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "param_schema": [
                {
                    "name": p.name,
                    "type": p.type,
                    "required": p.required,
                    "default": p.default,
                    **({"choices": list(p.choices)} if p.type == "enum" else {}),
                }
                for p in self.param_schema
            ],
        }


@dataclass(frozen=True)
class DataStream:
    kind: str  # "series" | "multiseries" | "table" | "histogram"
    meta: dict
    payload: dict

    def to_json(self) -> dict:
        return {"kind": self.kind, "meta": self.meta, "payload": self.payload}


# ---------------------------------------------------------------------------
# transforms

def downsample_buckets(points: list[Point], n_buckets: int, mode: str = "mean") -> list[tuple]:
    """Split points into contiguous equal-count buckets and summarize each.

    mean mode emits (mean t, mean y); minmax emits (mean t, min y, max y).
    With |points| <= n_buckets the input passes through unchanged.
    """
    if n_buckets < 1:
        raise ValueError("n_buckets must be >= 1")
    if mode not in ("mean", "minmax"):
        raise ValueError(f"unknown downsample mode: {mode!r}")
    if len(points) <= n_buckets:
        return [tuple(p) for p in points]
    size = -(-len(points) // n_buckets)  # ceil division; last bucket may be short
    out = []
    for start in range(0, len(points), size):
        chunk = points[start:start + size]
        ts = [p[0] for p in chunk]
        ys = [p[1] for p in chunk]
        t = sum(ts) / len(ts)
        if mode == "mean":
            out.append((t, sum(ys) / len(ys)))
        else:
            out.append((t, min(ys), max(ys)))
    return out


def aggregate_daily(
    points: list[Point], stat: str = "mean", tz_offset_minutes: int = 0
) -> list[Point]:
    """One output point per nonempty day bucket; t is the day start in the
    given offset, y the chosen statistic over that day's values."""
    if stat not in ("mean", "min", "max", "count"):
        raise ValueError(f"unknown stat: {stat!r}")
    days: dict[int, list[float]] = {}
    for t_ms, y in points:
        days.setdefault(day_bucket(int(t_ms), tz_offset_minutes), []).append(y)
    out = []
    for day in sorted(days):
        ys = days[day]
        if stat == "mean":
            y = sum(ys) / len(ys)
        elif stat == "min":
            y = min(ys)
        elif stat == "max":
            y = max(ys)
        else:
            y = float(len(ys))
        out.append((day_start_ms(day, tz_offset_minutes), y))
    return out


def histogram(
    values: list[float], n_bins: int, lo: float, hi: float
) -> tuple[list[float], list[int], int]:
    """Equal-width bins over [lo, hi], half-open except the last bin which is
    closed. Returns (edges, counts, dropped); out-of-range values are dropped."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    edges = [lo + i * (hi - lo) / n_bins for i in range(n_bins + 1)]
    counts = [0] * n_bins
    dropped = 0
    for v in values:
        if v < lo or v > hi:
            dropped += 1
            continue
        idx = min(n_bins - 1, int((v - lo) / (hi - lo) * n_bins))
        counts[idx] += 1
    return edges, counts, dropped


# ---------------------------------------------------------------------------
# registry

Transform = Callable[[TimeSeries, dict], DataStream]


class PluginRegistry:
    """Write-once-at-startup registry; listing order is always by plugin id,
    so registration order never shows through."""

    def __init__(self):
        self._plugins: dict[str, tuple[PluginDescriptor, Transform]] = {}

    def register(self, descriptor: PluginDescriptor, transform: Transform) -> None:
        if descriptor.id in self._plugins:
            raise DuplicatePluginId(descriptor.id)
        for p in descriptor.param_schema:
            if p.required and p.default is not None:
                raise ValueError(f"required param {p.name!r} must not carry a default")
        self._plugins[descriptor.id] = (descriptor, transform)

    def list_portfolio(self) -> list[PluginDescriptor]:
        return [self._plugins[pid][0] for pid in sorted(self._plugins)]

    def _check_params(self, descriptor: PluginDescriptor, raw: dict) -> dict:
        issues: list[tuple[str, str]] = []
        known = {p.name: p for p in descriptor.param_schema}
        for name in raw:
            if name not in known:
                issues.append((name, "unknown parameter"))
        params: dict = {}
        for p in descriptor.param_schema:
            if p.name not in raw or raw[p.name] is None:
                if p.required:
                    issues.append((p.name, "missing required parameter"))
                else:
                    params[p.name] = p.default
                continue
            v = raw[p.name]
            try:
                if p.type == "int":
                    params[p.name] = int(v)
                elif p.type == "float":
                    params[p.name] = float(v)
                elif p.type == "enum":
                    v = str(v)
                    if v not in p.choices:
                        raise ValueError
                    params[p.name] = v
                else:
                    params[p.name] = str(v)
            except (TypeError, ValueError):
                issues.append((p.name, f"expected {p.type}"))
        if issues:
            raise BadParams(issues)
        return params

    def build_data_stream(self, plugin_id: str, raw_params: dict, store: Store) -> DataStream:
        """Query the window named in the params and run the plugin transform."""
        if plugin_id not in self._plugins:
            raise UnknownPlugin(plugin_id)
        descriptor, transform = self._plugins[plugin_id]
        params = self._check_params(descriptor, raw_params)
        series = store.query_series(params["subject"], params["channel"], params["t0"], params["t1"])
        return transform(series, params)


# ---------------------------------------------------------------------------
# built-in plugins

WINDOW_PARAMS = (
    ParamSpec("subject", "string", required=True),
    ParamSpec("channel", "string", required=True),
    ParamSpec("t0", "int", required=True),
    ParamSpec("t1", "int", required=True),
)


def _meta(series: TimeSeries, params: dict) -> dict:
    return {
        "subject": series.subject,
        "channel": series.channel,
        "window": [params["t0"], params["t1"]],
    }


def _timeseries_line(series: TimeSeries, params: dict) -> DataStream:
    points = [(float(t), v) for t, v in series.points]
    out = downsample_buckets(points, params["max_points"], params["mode"])
    return DataStream(kind="series", meta=_meta(series, params), payload={"points": [list(p) for p in out]})


def _daily_aggregate(series: TimeSeries, params: dict) -> DataStream:
    points = [(float(t), v) for t, v in series.points]
    out = aggregate_daily(points, params["stat"], params["tz_offset_minutes"])
    return DataStream(kind="series", meta=_meta(series, params), payload={"points": [list(p) for p in out]})


def _histogram(series: TimeSeries, params: dict) -> DataStream:
    values = [v for _, v in series.points]
    lo, hi = params["lo"], params["hi"]
    if lo is None:
        lo = min(values) if values else 0.0
    if hi is None:
        hi = max(values) if values else 1.0
    if not lo < hi:
        hi = lo + 1.0
    edges, counts, dropped = histogram(values, params["bins"], lo, hi)
    return DataStream(
        kind="histogram",
        meta=_meta(series, params),
        payload={"edges": edges, "counts": counts, "dropped": dropped},
    )


def _sheet(series: TimeSeries, params: dict) -> DataStream:
    rows = [[t, v] for t, v in series.points]
    return DataStream(
        kind="table",
        meta=_meta(series, params),
        payload={"columns": ["t_ms", "value"], "rows": rows},
    )


def builtin_registry() -> PluginRegistry:
    """Registry preloaded with the shipped plugin set."""
    reg = PluginRegistry()
    reg.register(
        PluginDescriptor(
            id="timeseries_line",
            name="Time-series line",
            description="Raw series for a window, bucket-downsampled once it exceeds the point budget.",
            param_schema=WINDOW_PARAMS + (
                ParamSpec("max_points", "int", default=1000),
                ParamSpec("mode", "enum", default="mean", choices=("mean", "minmax")),
            ),
        ),
        _timeseries_line,
    )
    reg.register(
        PluginDescriptor(
            id="daily_aggregate",
            name="Daily aggregate",
            description="One point per day: mean, min, max, or count of that day's values.",
            param_schema=WINDOW_PARAMS + (
                ParamSpec("stat", "enum", default="mean", choices=("mean", "min", "max", "count")),
                ParamSpec("tz_offset_minutes", "int", default=0),
            ),
        ),
        _daily_aggregate,
    )
    reg.register(
        PluginDescriptor(
            id="histogram",
            name="Value histogram",
            description="Distribution of values in the window over equal-width bins.",
            param_schema=WINDOW_PARAMS + (
                ParamSpec("bins", "int", default=20),
                ParamSpec("lo", "float"),
                ParamSpec("hi", "float"),
            ),
        ),
        _histogram,
    )
    reg.register(
        PluginDescriptor(
            id="sheet",
            name="Sheet",
            description="The window's raw (t_ms, value) rows as a table.",
            param_schema=WINDOW_PARAMS,
        ),
        _sheet,
    )
    return reg

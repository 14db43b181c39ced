"""Run reports: JSON-safe, deterministic except for the separate timings."""
from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import __version__

SCHEMA_VERSION = 1


def jsonable(obj):
    """Convert numpy scalars/arrays; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


@dataclass
class RunReport:
    kind: str
    config: dict
    results: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @contextmanager
    def stage(self, name: str):
        """Time a pipeline stage and record whether it completed."""
        t0 = time.perf_counter()
        try:
            yield
        except Exception as exc:
            self.stages[name] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
            self.timings[name] = time.perf_counter() - t0
            raise
        self.stages[name] = {"status": "ok"}
        self.timings[name] = time.perf_counter() - t0

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.stages.items() if v["status"] != "ok"]

    def to_dict(self) -> dict:
        return jsonable({
            "schema_version": SCHEMA_VERSION,
            "toolkit_version": __version__,
            "kind": self.kind,
            "config": self.config,
            "stages": self.stages,
            "results": self.results,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def timings_json(self) -> str:
        return json.dumps(jsonable(self.timings), indent=2, sort_keys=True) + "\n"

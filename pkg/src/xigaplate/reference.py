"""Bundled benchmark tables and per-mode comparison reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np


@dataclass(frozen=True)
class ReferenceTable:
    """Rows of ``(key, mode, value)`` with a relative tolerance.

    ``key_tolerance`` overrides the tolerance for individual configuration
    keys (used for degenerate limits that the tabulated sources disagree on).
    """

    name: str
    source: str
    convention: str
    tolerance: float
    rows: tuple
    key_tolerance: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for key, mode, value in self.rows:
            if value <= 0:
                raise ValueError(f"{self.name}: non-positive value at {key} mode {mode}")
            if (key, mode) in seen:
                raise ValueError(f"{self.name}: duplicate row {key} mode {mode}")
            seen.add((key, mode))

    @property
    def keys(self) -> list[str]:
        out = []
        for key, _, _ in self.rows:
            if key not in out:
                out.append(key)
        return out

    def values(self, key: str) -> np.ndarray:
        """Tabulated values for ``key`` ordered by mode."""
        sel = sorted((m, v) for k, m, v in self.rows if k == key)
        if not sel:
            raise KeyError(f"{self.name}: no rows for key {key!r}; known keys {self.keys}")
        return np.array([v for _, v in sel])

    def tolerance_for(self, key: str) -> float:
        return self.key_tolerance.get(key, self.tolerance)


@lru_cache(maxsize=1)
def _load_all() -> dict:
    text = resources.files("xigaplate").joinpath("data/reference_tables.json").read_text()
    data = json.loads(text)
    out = {}
    for name, t in data["tables"].items():
        rows = tuple((r["key"], int(r["mode"]), float(r["value"])) for r in t["rows"])
        out[name] = ReferenceTable(name, t["source"], t["convention"], float(t["tolerance"]),
                                   rows, dict(t.get("key_tolerance", {})))
    return out


def list_references() -> list[str]:
    return sorted(_load_all())


def load_reference(name: str) -> ReferenceTable:
    tables = _load_all()
    if name not in tables:
        raise KeyError(f"unknown reference table {name!r}; known: {sorted(tables)}")
    return tables[name]


@dataclass
class ModeComparison:
    mode: int
    computed: float
    reference: float
    rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.rel_error) <= self.tolerance

    def line(self, label: str = "") -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {label} mode={self.mode} computed={self.computed:.4f} "
                f"reference={self.reference:.4f} rel_error={self.rel_error:+.4%} "
                f"tol={self.tolerance:.1%}").replace("  ", " ")


@dataclass
class CompareReport:
    table: str
    key: str
    modes: list

    @property
    def passed(self) -> bool:
        return bool(self.modes) and all(m.passed for m in self.modes)

    def lines(self) -> list[str]:
        label = f"{self.table}[{self.key}]"
        return [m.line(label) for m in self.modes]

    def summary(self) -> str:
        return "\n".join(self.lines())


def compare(values, table: ReferenceTable, key: str, modes=None,
            tolerance: float | None = None) -> CompareReport:
    """Relative error of computed normalized frequencies against ``table[key]``.

    Only modes present in both the computed vector and the table are
    compared; a key with no rows raises ``KeyError``.
    """
    ref = table.values(key)
    values = np.asarray(values, dtype=float)
    n = min(len(ref), len(values))
    if modes is None:
        modes = range(1, n + 1)
    tol = table.tolerance_for(key) if tolerance is None else tolerance
    out = []
    for m in modes:
        if m > n:
            raise KeyError(f"mode {m} not available (computed {len(values)}, tabulated {len(ref)})")
        c, r = values[m - 1], ref[m - 1]
        out.append(ModeComparison(m, float(c), float(r), float((c - r) / r), tol))
    return CompareReport(table.name, key, out)

import copy

import pytest

from xigaplate.config import SCHEMA, parse_config, run_case

BASE = {
    "schema": SCHEMA,
    "name": "probe",
    "geometry": {"kind": "square", "L": 1.0, "W": 1.0},
    "thickness": {"ratio": 1000},
    "material": {"ceramic": "Al2O3", "metal": "Al", "n": 0, "scheme": "rule_of_mixture"},
    "theory": {"kind": "TSDT"},
    "boundary": "SSSS",
    "normalization": "cpt_hat",
    "mesh": {"p": 3, "n_el": 9},
    "n_modes": 5,
}


def make_case(**over):
    """Case dictionary built from a thin SSSS square plate; nested keys merge."""
    d = copy.deepcopy(BASE)
    for k, v in over.items():
        if v is None:
            d.pop(k, None)
        elif isinstance(v, dict) and isinstance(d.get(k), dict) and k not in ("geometry", "crack", "thickness"):
            d[k].update(v)
        else:
            d[k] = v
    return d


def solve_case(**over):
    return run_case(parse_config(make_case(**over)), write=False)


@pytest.fixture
def case():
    return make_case


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

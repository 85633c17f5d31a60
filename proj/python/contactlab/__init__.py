"""Contact Hamiltonian dynamics: flows, path energies, translated points,
and box-capacity audits on a small catalog of contact manifolds.

The heavy lifting lives in the compiled extension; this wrapper only adds
dict-to-JSON convenience so documents can be passed as plain Python objects.
"""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    Flow,
    Hamiltonian,
    IntegrationError,
    Manifold,
    SingularSystemError,
    UnsupportedError,
    constant,
    energy_report,
    flow,
    manifold,
    translated_scan,
    unit_ball_volume,
)

__all__ = [
    "ConfigError",
    "Flow",
    "Hamiltonian",
    "IntegrationError",
    "Manifold",
    "SingularSystemError",
    "UnsupportedError",
    "box_report",
    "capacity_audit",
    "constant",
    "displacement",
    "energy_report",
    "flow",
    "hamiltonian",
    "manifold",
    "manifold_from_json",
    "run_experiment",
    "translated_scan",
    "unit_ball_volume",
]


def _as_text(doc):
    return doc if isinstance(doc, str) else _json.dumps(doc)


def hamiltonian(man, table):
    """Compile a symbolic coefficient table (dict or JSON text)."""
    return _core.hamiltonian(man, _as_text(table))


def manifold_from_json(spec):
    """Build a custom chart manifold from a table (dict or JSON text)."""
    return _core.manifold_from_json(_as_text(spec))


def box_report(box):
    return _core.box_report(_as_text(box))


def displacement(ham, box, **kw):
    return _core.displacement(ham, _as_text(box), **kw)


def capacity_audit(ham, box, **kw):
    return _core.capacity_audit(ham, _as_text(box), **kw)


def run_experiment(config):
    """Run a full experiment config; writes report.json and tables."""
    return _core.run_experiment(_as_text(config))

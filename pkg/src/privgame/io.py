"""JSON and CSV formats for priors, metrics, mechanisms, attacks and results.

Mechanism: ``{"secrets": [...], "observables": [...], "rows": [[...]]}`` with
rows over secrets. Attack: the same keys with rows over observables, so
``observables`` comes first. Prior: ``{"secrets": [...], "probs": [...]}``.
Metrics: ``{"secrets", "observables", "cost", "privacy_dist", "disting"}``
plus an optional ``"ground"``, tables laid out as in :mod:`privgame.core`.
"""

from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

from .core import Attack, LabelSpace, Mechanism, MetricSet, Prior

LOAD_ROW_TOL = 1e-6


def _labels(values, role):
    # JSON turns tuples into lists; labels must stay hashable
    return LabelSpace(tuple(tuple(v) if isinstance(v, list) else v for v in values), role)


def _rows_checked(rows, what):
    a = np.asarray(rows, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{what} rows must form a matrix")
    dev = np.abs(a.sum(axis=1) - 1.0)
    if dev.size and dev.max() > LOAD_ROW_TOL:
        raise ValueError(f"{what} row {int(dev.argmax())} sums to {a.sum(axis=1)[dev.argmax()]:.9g}")
    return a / a.sum(axis=1, keepdims=True)


def _dump(obj: dict, path):
    Path(path).write_text(json.dumps(obj, indent=1) + "\n")


def _load(path) -> dict:
    return json.loads(Path(path).read_text())


def mechanism_to_dict(m: Mechanism) -> dict:
    return {"secrets": list(m.secrets), "observables": list(m.observables), "rows": m.rows.tolist()}


def mechanism_from_dict(d: dict) -> Mechanism:
    return Mechanism(_labels(d["secrets"], "secrets"), _labels(d["observables"], "observables"),
                     _rows_checked(d["rows"], "mechanism"))


def attack_to_dict(a: Attack) -> dict:
    return {"observables": list(a.observables), "secrets": list(a.secrets), "rows": a.rows.tolist()}


def attack_from_dict(d: dict) -> Attack:
    return Attack(_labels(d["observables"], "observables"), _labels(d["secrets"], "secrets"),
                  _rows_checked(d["rows"], "attack"))


def prior_to_dict(p: Prior) -> dict:
    return {"secrets": list(p.space), "probs": p.probs.tolist()}


def prior_from_dict(d: dict) -> Prior:
    return Prior(_labels(d["secrets"], "secrets"), d["probs"])


def metrics_to_dict(m: MetricSet) -> dict:
    out = {
        "secrets": list(m.secrets), "observables": list(m.observables),
        "cost": m.cost.tolist(), "privacy_dist": m.privacy_dist.tolist(), "disting": m.disting.tolist(),
    }
    if m.ground is not None:
        out["ground"] = m.ground.tolist()
    return out


def metrics_from_dict(d: dict) -> MetricSet:
    return MetricSet(_labels(d["secrets"], "secrets"), _labels(d["observables"], "observables"),
                     d["cost"], d["privacy_dist"], d["disting"], d.get("ground"))


def save_mechanism(m: Mechanism, path):
    _dump(mechanism_to_dict(m), path)


def load_mechanism(path) -> Mechanism:
    return mechanism_from_dict(_load(path))


def save_attack(a: Attack, path):
    _dump(attack_to_dict(a), path)


def load_attack(path) -> Attack:
    return attack_from_dict(_load(path))


def save_prior(p: Prior, path):
    _dump(prior_to_dict(p), path)


def load_prior(path) -> Prior:
    return prior_from_dict(_load(path))


def save_metrics(m: MetricSet, path):
    _dump(metrics_to_dict(m), path)


def load_metrics(path) -> MetricSet:
    return metrics_from_dict(_load(path))


def host_line() -> str:
    return f"host={platform.node()} python={platform.python_version()} machine={platform.machine()}"


def write_csv(path, columns, rows, metadata: dict | None = None, comments=()):
    """Write ``rows`` (dicts) under a ``#``-prefixed column line.

    ``metadata`` becomes one ``# key=value ...`` line above it; ``comments``
    are extra free-text ``#`` lines (column documentation).
    """
    with open(path, "w", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        if metadata:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in metadata.items()) + "\n")
        fh.write("# " + ",".join(columns) + "\n")
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="raise", lineterminator="\n")
        for r in rows:
            w.writerow({k: _fmt(r.get(k, "")) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if np.isfinite(v) else str(v)
    return v


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Inverse of :func:`write_csv`: the last ``#`` line names the columns; values stay strings."""
    header, data = None, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                header = line[1:].strip().split(",")
                continue
            if line.strip():
                data.append(line)
    if header is None:
        raise ValueError(f"{path}: no '#' column header")
    rows = [dict(zip(header, rec)) for rec in csv.reader(data)]
    return header, rows

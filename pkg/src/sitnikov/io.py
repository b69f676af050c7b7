"""JSON / CSV serialization with atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from .symbolic import ConnectionSpec, SymbolError


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(obj, indent=2) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        # mkstemp creates 0600; give the file the usual umask-derived mode
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write(path, dumps(obj))


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def load_spec(path) -> ConnectionSpec:
    try:
        d = read_json(path)
    except OSError as exc:
        raise SymbolError(f"cannot read spec {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SymbolError(f"spec {path} is not valid JSON: {exc}") from exc
    return ConnectionSpec.from_dict(d)


def load_orbit(path):
    """PeriodicOrbit or ConnectingOrbit, by the 'kind' field."""
    from .connection import ConnectingOrbit
    from .periodic import PeriodicOrbit

    d = read_json(path)
    kind = d.get("kind")
    if kind == "periodic":
        return PeriodicOrbit.from_dict(d)
    if kind == "connection":
        return ConnectingOrbit.from_dict(d)
    raise ValueError(f"{path}: unknown orbit kind {kind!r}")


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else repr(float(v)) for v in row])
    return buf.getvalue()


def trajectory_csv(traj) -> str:
    return rows_to_csv(("t", "y"), zip(traj.closed_times(), traj.closed_values()))

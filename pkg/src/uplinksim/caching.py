"""Disk cache for Monte-Carlo tables (BICM capacity, BLER thresholds).

Tables live as versioned JSON under the directory named by the
``UPLINKSIM_CACHE_DIR`` environment variable (default ``~/.cache/uplinksim``)
and are keyed by a hash of their build parameters, build seed included.
"""

import hashlib
import json
import os
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
CACHE_ENV = "UPLINKSIM_CACHE_DIR"


def cache_dir() -> Path:
    d = os.environ.get(CACHE_ENV)
    path = Path(d) if d else Path.home() / ".cache" / "uplinksim"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _key(kind: str, params: dict) -> str:
    canon = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return f"{kind}_{hashlib.sha256(canon.encode()).hexdigest()[:16]}.json"


def load(kind: str, params: dict) -> dict | None:
    path = cache_dir() / _key(kind, params)
    if not path.exists():
        return None
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("schema_version") != SCHEMA_VERSION:
        return None
    return blob["payload"]


def store(kind: str, params: dict, payload: dict) -> Path:
    path = cache_dir() / _key(kind, params)

    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(type(o))

    blob = {"schema_version": SCHEMA_VERSION, "kind": kind,
            "params": params, "payload": payload}
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        json.dump(blob, fh, default=default)
    tmp.replace(path)
    return path

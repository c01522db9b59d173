"""Self-describing checkpoint archives, content digests, and stage manifests.

Checkpoints are zip archives holding ``meta.json`` plus one ``.npy`` member
per parameter tensor (shape, dtype, and byte order are declared by the npy
headers). Archive bytes are deterministic: fixed member timestamps, stored
(uncompressed) members, and sorted member order.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from pathlib import Path

import numpy as np

_EPOCH = (1980, 1, 1, 0, 0, 0)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def archive_fingerprint(meta: dict, tensors: dict[str, np.ndarray]) -> str:
    """Digest of an archive's logical content, independent of zip packaging."""
    h = hashlib.sha256()
    h.update(canonical_json(meta).encode("utf-8"))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        h.update(name.encode("utf-8"))
        h.update(str(arr.shape).encode("utf-8"))
        h.update(arr.dtype.str.encode("utf-8"))
        h.update(arr.tobytes())
    return h.hexdigest()


def save_archive(path: str | Path, meta: dict, tensors: dict[str, np.ndarray]) -> None:
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=_EPOCH)
        zf.writestr(info, canonical_json(meta))
        for name in sorted(tensors):
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(tensors[name]))
            info = zipfile.ZipInfo(f"tensors/{name}.npy", date_time=_EPOCH)
            zf.writestr(info, buf.getvalue())


def load_archive(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json").decode("utf-8"))
        tensors = {}
        for member in zf.namelist():
            if member.startswith("tensors/") and member.endswith(".npy"):
                name = member[len("tensors/") : -len(".npy")]
                tensors[name] = np.load(io.BytesIO(zf.read(member)))
    return meta, tensors


def write_manifest(
    path: str | Path,
    command: str,
    config: dict,
    inputs: dict[str, str],
    seed: int | None = None,
) -> None:
    manifest = {
        "command": command,
        "config": config,
        "config_digest": config_digest(config),
        "inputs": inputs,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))

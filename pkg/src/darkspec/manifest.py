"""Deterministic run manifests.

Every CLI run writes a manifest next to its outputs: the resolved config
snapshot, seed, grid parameters, code version, per-stage wall-clock
timings, and a SHA-256 digest of every data file. Re-running with the
same inputs reproduces byte-identical data files (timings naturally
differ and are not part of that contract).
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    config_snapshot: dict
    seed: int
    grid_parameters: dict
    code_version: str
    timings_s: dict = field(default_factory=dict)
    output_digests: dict = field(default_factory=dict)

    def add_output(self, path) -> None:
        self.output_digests[str(path)] = file_digest(path)

    def write(self, path) -> None:
        doc = {
            "subcommand": self.subcommand,
            "config": self.config_snapshot,
            "seed": self.seed,
            "grids": self.grid_parameters,
            "code_version": self.code_version,
            "timings_s": {k: round(v, 6) for k, v in self.timings_s.items()},
            "outputs": self.output_digests,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


class StageTimer:
    """Context-manager stopwatch feeding RunManifest.timings_s."""

    def __init__(self, manifest: RunManifest, name: str):
        self.manifest = manifest
        self.name = name

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.manifest.timings_s[self.name] = time.perf_counter() - self._t0
        return False

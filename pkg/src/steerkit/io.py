"""File input/output and run manifests for the command-line workbench.

Inputs are JSON files in the assemblage wire format or ``fixture:NAME``
references to the built-in examples.  Every run records a manifest with the
git-style blob hash of each input, the tolerances and seed, and the list of
files written; result files point back to their manifest by file name.
"""

from __future__ import annotations

import hashlib
import json
import platform
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .assemblage import Assemblage, MeasurementAssemblage, from_json, repair_povm, to_json, validate_measurements
from .config import Tolerances
from .errors import ParseError
from .fixtures import FIXTURES

FIXTURE_PREFIX = "fixture:"
REPAIR_LIMIT = 1e-3  # largest completeness defect fixed silently on load


def git_blob_sha1(data: bytes) -> str:
    """Object id ``git hash-object`` would assign to ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def dumps(payload) -> str:
    """Deterministic JSON; floats use the shortest round-tripping repr."""
    return json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n"


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


@dataclass
class LoadedInput:
    spec: str
    family: Assemblage | MeasurementAssemblage
    sha1: str
    repair: dict | None = None

    def record(self) -> dict:
        out = {"path": self.spec, "sha1": self.sha1}
        if self.repair is not None:
            out["repair"] = self.repair
        return out


def parse_json_text(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_input(spec: str, repair: bool = True) -> LoadedInput:
    """Read an assemblage or measurement file (or a ``fixture:NAME``)."""
    if spec.startswith(FIXTURE_PREFIX):
        name = spec[len(FIXTURE_PREFIX):]
        if name not in FIXTURES:
            raise ParseError(f"unknown fixture '{name}'; choose from {', '.join(sorted(FIXTURES))}")
        data = dumps(to_json(FIXTURES[name]())).encode()
    else:
        try:
            data = Path(spec).read_bytes()
        except OSError as exc:
            raise ParseError(f"{spec}: {exc.strerror}") from exc
    family = from_json(parse_json_text(data.decode("utf-8"), spec))
    record = None
    if repair and isinstance(family, MeasurementAssemblage) and not validate_measurements(family).passed:
        fixed, record = repair_povm(family)
        worst = max(record["completeness_defect"] + record["clipped_eigenvalue_mass"])
        record["applied"] = worst <= REPAIR_LIMIT
        if record["applied"]:
            family = fixed
    return LoadedInput(spec, family, git_blob_sha1(data), record)


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    inputs: list[dict]
    tolerances: dict
    seed: int | None
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    @classmethod
    def start(cls, command: str, argv: list[str], inputs: list[LoadedInput], tol: Tolerances,
              seed: int | None) -> "RunManifest":
        return cls(command, list(argv), [i.record() for i in inputs], asdict(tol), seed)

    def to_dict(self) -> dict:
        return asdict(self)


class OutputSink:
    """Collects result files next to ``--out`` and writes the manifest last.

    With ``out=None`` the primary result goes to stdout and companion files
    are skipped; the manifest is then embedded in the printed result.
    """

    def __init__(self, out: str | None, manifest: RunManifest, directory: bool = False):
        self.manifest = manifest
        self.directory = directory
        self.out = Path(out) if out else None
        if self.out is not None and directory:
            self.out.mkdir(parents=True, exist_ok=True)

    @property
    def manifest_path(self) -> Path | None:
        if self.out is None:
            return None
        if self.directory:
            return self.out / "manifest.json"
        return self.out.with_name(self.out.stem + ".manifest.json")

    def companion(self, suffix: str) -> Path | None:
        if self.out is None:
            return None
        if self.directory:
            return self.out / suffix
        return self.out.with_name(f"{self.out.stem}.{suffix}")

    def _stamp(self, payload):
        if isinstance(payload, dict) and self.manifest_path is not None:
            payload = dict(payload, manifest=self.manifest_path.name)
        return payload

    def write_json(self, path: Path | None, payload) -> None:
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(self._stamp(payload)), encoding="utf-8")
        self.manifest.outputs.append(str(path))

    def write_text(self, path: Path | None, text: str) -> None:
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
        self.manifest.outputs.append(str(path))

    def emit(self, payload) -> None:
        """Write the primary result and then the manifest."""
        if self.out is None or self.directory:
            if self.directory:
                self.write_json(self.out / "result.json", payload)
                self._finish()
            else:
                sys.stdout.write(dumps(dict(payload, manifest=self.manifest.to_dict())))
            return
        self.write_json(self.out, payload)
        self._finish()

    def _finish(self) -> None:
        self.manifest_path.write_text(dumps(self.manifest.to_dict()), encoding="utf-8")

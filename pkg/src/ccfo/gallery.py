"""Enrolled templates: persistence, 1:1 verification and 1:N identification.

On disk a gallery is a directory holding ``manifest.tsv`` and one
``templates/<id>.ccfo`` file per record. A template file is an ASCII
header followed by little-endian float64 angles then coherences::

    CCFO 1
    mode standard
    block 16
    grid 16 16
    source probes/a.pgm          (optional)
    enrolled 2026-01-01T00:00:00Z (optional)
    <empty line>
    <rows*cols theta values><rows*cols coherence values>
"""
import os
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptTemplateError,
    DuplicateIdError,
    EmptyGalleryError,
    GridMismatchError,
    ManifestError,
    ParameterMismatchError,
    TemplateVersionError,
    UnknownIdError,
)
from .matcher import MatchConfig, MatchResult, match
from .orientation import MODES, OrientationField
from .pipeline import PipelineConfig, extract_field

MAGIC = "CCFO"
VERSION = "1"
MANIFEST = "manifest.tsv"
TEMPLATE_DIR = "templates"
TEMPLATE_EXT = ".ccfo"


def check_id(ident: str) -> str:
    if not isinstance(ident, str) or not ident:
        raise ValueError("identity label must be a non-empty string")
    if not ident.isprintable() or "\t" in ident:
        raise ValueError(f"identity label {ident!r} contains non-printable characters")
    # labels double as file names
    if "/" in ident or "\\" in ident or ident in (".", ".."):
        raise ValueError(f"identity label {ident!r} cannot be used as a file name")
    return ident


def _single_line(text: str, what: str) -> str:
    if "\n" in text or "\r" in text:
        raise ValueError(f"{what} must fit on one line")
    return text


@dataclass(frozen=True)
class GalleryRecord:
    id: str
    field: OrientationField
    source: str = ""
    enrolled_at: str = ""

    def __post_init__(self):
        check_id(self.id)
        _single_line(self.source, "source path")
        _single_line(self.enrolled_at, "timestamp")


@dataclass(frozen=True)
class Gallery:
    """Immutable set of records, kept in id order, sharing block size and mode."""
    block_size: int = 16
    mode: str = "standard"
    records: tuple = dc_field(default_factory=tuple)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterMismatchError(f"unknown estimator mode {self.mode!r}")
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DuplicateIdError(f"duplicate id {dup!r}")
        if ids != sorted(ids):
            object.__setattr__(self, "records", tuple(sorted(self.records, key=lambda r: r.id)))
        for r in self.records:
            _check_record_fits(self, r.field, r.id)

    def __len__(self):
        return len(self.records)

    @property
    def ids(self):
        return [r.id for r in self.records]

    @property
    def grid(self):
        return self.records[0].field.shape if self.records else None

    def get(self, ident) -> GalleryRecord:
        for r in self.records:
            if r.id == ident:
                return r
        raise UnknownIdError(f"unknown id {ident!r}")

    def __contains__(self, ident):
        return any(r.id == ident for r in self.records)


def _check_record_fits(g: Gallery, f: OrientationField, ident: str):
    if f.block_size != g.block_size or f.mode != g.mode:
        raise ParameterMismatchError(
            f"template {ident!r} was built with mode={f.mode} block={f.block_size}, "
            f"gallery uses mode={g.mode} block={g.block_size}")
    grid = g.records[0].field.shape if g.records else f.shape
    if f.shape != grid:
        raise GridMismatchError(
            f"template {ident!r} has grid {f.rows}x{f.cols}, gallery grid is {grid[0]}x{grid[1]}")


def add_record(g: Gallery, record: GalleryRecord) -> Gallery:
    if record.id in g:
        raise DuplicateIdError(f"duplicate id {record.id!r}")
    _check_record_fits(g, record.field, record.id)
    return Gallery(g.block_size, g.mode, g.records + (record,))


def enroll(g: Gallery, ident: str, img, params: PipelineConfig = None,
           source: str = "", enrolled_at: str = "") -> Gallery:
    """Run the template pipeline on ``img`` and return a gallery with the new record."""
    if params is None:
        params = PipelineConfig(block_size=g.block_size, mode=g.mode)
    if params.block_size != g.block_size or params.mode != g.mode:
        raise ParameterMismatchError(
            f"pipeline uses mode={params.mode} block={params.block_size}, "
            f"gallery uses mode={g.mode} block={g.block_size}")
    check_id(ident)
    if ident in g:
        raise DuplicateIdError(f"duplicate id {ident!r}")
    f = extract_field(img, params)
    return add_record(g, GalleryRecord(ident, f, source, enrolled_at))


def verify(g: Gallery, ident: str, probe: OrientationField, cfg: MatchConfig = MatchConfig()) -> MatchResult:
    return match(g.get(ident).field, probe, cfg)


def identify(g: Gallery, probe: OrientationField, cfg: MatchConfig = MatchConfig()):
    """Score ``probe`` against every record.

    Returns ``(best_id, result, ranked)`` where ``ranked`` is a list of
    ``(id, score)`` in descending score order, ties going to the smaller id.
    The best candidate is always returned; ``result.decision`` says whether
    it clears the threshold.
    """
    if not g.records:
        raise EmptyGalleryError("gallery is empty")
    results = {r.id: match(r.field, probe, cfg) for r in g.records}
    ranked = sorted(((k, v.score) for k, v in results.items()), key=lambda kv: (-kv[1], kv[0]))
    best = ranked[0][0]
    return best, results[best], ranked


# --- template files ---------------------------------------------------------

def encode_template(f: OrientationField, source: str = "", enrolled_at: str = "") -> bytes:
    lines = [f"{MAGIC} {VERSION}", f"mode {f.mode}", f"block {f.block_size}",
             f"grid {f.rows} {f.cols}"]
    if source:
        lines.append(f"source {_single_line(source, 'source path')}")
    if enrolled_at:
        lines.append(f"enrolled {_single_line(enrolled_at, 'timestamp')}")
    header = ("\n".join(lines) + "\n\n").encode("utf-8")
    payload = (np.ascontiguousarray(f.theta, dtype="<f8").tobytes()
               + np.ascontiguousarray(f.coherence, dtype="<f8").tobytes())
    return header + payload


def decode_template(blob: bytes, name: str = "template"):
    """Parse template bytes into ``(field, source, enrolled_at)``."""
    end = blob.find(b"\n\n")
    if end < 0:
        raise CorruptTemplateError(f"{name}: header is not terminated by an empty line")
    try:
        lines = blob[:end].decode("utf-8").split("\n")
    except UnicodeDecodeError as exc:
        raise CorruptTemplateError(f"{name}: header is not UTF-8") from exc
    first = lines[0].split(" ")
    if len(first) != 2 or first[0] != MAGIC:
        raise CorruptTemplateError(f"{name}: not a {MAGIC} template")
    if first[1] != VERSION:
        raise TemplateVersionError(f"{name}: unknown format version {first[1]!r}")

    meta = {}
    for line in lines[1:]:
        key, _, value = line.partition(" ")
        if key in meta or key not in ("mode", "block", "grid", "source", "enrolled"):
            raise CorruptTemplateError(f"{name}: unexpected header line {line!r}")
        meta[key] = value
    try:
        mode = meta["mode"]
        block = int(meta["block"])
        rows, cols = (int(v) for v in meta["grid"].split(" "))
    except (KeyError, ValueError) as exc:
        raise CorruptTemplateError(f"{name}: incomplete or malformed header") from exc
    if mode not in MODES or block < 1 or rows < 1 or cols < 1:
        raise CorruptTemplateError(f"{name}: invalid header values")

    payload = blob[end + 2:]
    count = rows * cols
    if len(payload) != 16 * count:
        raise CorruptTemplateError(
            f"{name}: payload holds {len(payload)} bytes, grid {rows}x{cols} needs {16 * count}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    theta = values[:count].reshape(rows, cols).copy()
    coherence = values[count:].reshape(rows, cols).copy()
    f = OrientationField(theta, coherence, block, mode)
    return f, meta.get("source", ""), meta.get("enrolled", "")


def write_template(f: OrientationField, path, source: str = "", enrolled_at: str = "") -> None:
    blob = encode_template(f, source, enrolled_at)
    with open(path, "wb") as fh:
        fh.write(blob)


def read_template(path):
    with open(path, "rb") as fh:
        return decode_template(fh.read(), str(path))


# --- gallery directories ----------------------------------------------------

def save_gallery(g: Gallery, directory) -> None:
    root = Path(directory)
    (root / TEMPLATE_DIR).mkdir(parents=True, exist_ok=True)
    lines = []
    for r in sorted(g.records, key=lambda r: r.id):
        rel = f"{TEMPLATE_DIR}/{r.id}{TEMPLATE_EXT}"
        write_template(r.field, root / rel, r.source, r.enrolled_at)
        lines.append(f"{r.id}\t{rel}\n")
    tmp = root / (MANIFEST + ".tmp")
    tmp.write_text("".join(lines), encoding="utf-8")
    os.replace(tmp, root / MANIFEST)


def load_gallery(directory, block_size: int = 16, mode: str = "standard") -> Gallery:
    """Load a gallery directory.

    ``block_size`` and ``mode`` only matter for an empty manifest; otherwise
    they are taken from the stored templates.
    """
    root = Path(directory)
    manifest = root / MANIFEST
    if not manifest.is_file():
        raise ManifestError(f"missing manifest: {manifest}")
    records = []
    for lineno, line in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ManifestError(f"{manifest}:{lineno}: expected '<id>\\t<path>'")
        ident, rel = parts
        path = root / rel
        if not path.is_file():
            raise ManifestError(f"template for id {ident!r} is missing: {path}")
        f, source, enrolled = read_template(path)
        records.append(GalleryRecord(ident, f, source, enrolled))
    if records:
        block_size, mode = records[0].field.block_size, records[0].field.mode
    return Gallery(block_size, mode, tuple(records))

"""On-disk episode datasets: JSON manifest plus one binary blob per episode.

Blob layout (little endian):
    magic "HADS" | version u32 | T u32 | H u32 | W u32
    frames  T*H*W*3 bytes, uint8
    controls T*2 float64
    goal advice:     count u32, then per string: length u32 + UTF-8 bytes
    stimulus advice: count u32, same encoding

Everything not covered by the blob (seed, route intent, scenario
metadata, splits by seed range) lives in the manifest.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .episodes import Episode, EpisodeMeta
from .scene import WorldConfig

MAGIC = b"HADS"
VERSION = 1
MANIFEST = "manifest.json"


class DatasetError(ValueError):
    """Malformed dataset file; the message carries the byte offset."""


def _write_string(out: bytearray, s: str) -> None:
    raw = s.encode("utf-8")
    out += struct.pack("<I", len(raw))
    out += raw


def episode_to_bytes(ep: Episode) -> bytes:
    t, h, w, _ = ep.frames.shape
    out = bytearray()
    out += MAGIC
    out += struct.pack("<IIII", VERSION, t, h, w)
    out += np.ascontiguousarray(ep.frames, dtype=np.uint8).tobytes()
    out += np.ascontiguousarray(ep.controls, dtype="<f8").tobytes()
    out += struct.pack("<I", len(ep.goal_advice))
    for s in ep.goal_advice:
        _write_string(out, s)
    out += struct.pack("<I", len(ep.stimulus_advice))
    for s in ep.stimulus_advice:
        _write_string(out, s)
    return bytes(out)


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise DatasetError(
                f"truncated episode blob: wanted {n} bytes at offset {self.pos}, "
                f"file has {len(self.raw)}")
        chunk = self.raw[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def episode_from_bytes(raw: bytes, seed: int = 0, route_intent: str = "straight",
                       rate_hz: int = 10,
                       meta: EpisodeMeta | None = None) -> Episode:
    r = _Reader(raw)
    if r.take(4) != MAGIC:
        raise DatasetError("bad magic at offset 0, not an episode blob")
    version = r.u32()
    if version != VERSION:
        raise DatasetError(f"unsupported blob version {version} at offset 4")
    t, h, w = r.u32(), r.u32(), r.u32()
    frames = np.frombuffer(r.take(t * h * w * 3), dtype=np.uint8)
    frames = frames.reshape(t, h, w, 3).copy()
    controls = np.frombuffer(r.take(t * 2 * 8), dtype="<f8").reshape(t, 2).copy()

    def read_strings() -> list[str]:
        n = r.u32()
        if n > 1000:
            raise DatasetError(f"implausible advice count {n} at offset {r.pos - 4}")
        return [r.take(r.u32()).decode("utf-8") for _ in range(n)]

    goal = read_strings()
    stim = read_strings()
    if r.pos != len(raw):
        raise DatasetError(f"trailing bytes after offset {r.pos}")
    return Episode(frames=frames, controls=controls, goal_advice=goal,
                   stimulus_advice=stim, route_intent=route_intent, seed=seed,
                   rate_hz=rate_hz, meta=meta or EpisodeMeta("clear"))


def write_dataset(episodes: Iterable[Episode], path, config: WorldConfig,
                  splits: dict[str, Sequence[int]] | None = None) -> None:
    """Write episodes plus a manifest; splits are [start, end) seed ranges."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, ep in enumerate(episodes):
        name = f"ep_{i:05d}.had"
        (path / name).write_bytes(episode_to_bytes(ep))
        entries.append({
            "file": name,
            "seed": ep.seed,
            "route_intent": ep.route_intent,
            "rate_hz": ep.rate_hz,
            "t": int(len(ep)),
            "meta": asdict(ep.meta),
        })
    manifest = {
        "format_version": VERSION,
        "config": asdict(config),
        "splits": {k: list(map(int, v)) for k, v in (splits or {}).items()},
        "episodes": entries,
    }
    (path / MANIFEST).write_text(json.dumps(manifest, indent=1))


class Dataset:
    """Lazy sequence of episodes backed by a dataset directory."""

    def __init__(self, path):
        self.path = Path(path)
        manifest_path = self.path / MANIFEST
        if not manifest_path.exists():
            raise DatasetError(f"no {MANIFEST} in {self.path}")
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("format_version") != VERSION:
            raise DatasetError(
                f"unsupported dataset version {manifest.get('format_version')}")
        self.manifest = manifest
        cfg = dict(manifest["config"])
        cfg["legal_turns"] = tuple(cfg["legal_turns"])
        cfg["scenario_weights"] = tuple(
            (str(n), float(w)) for n, w in cfg["scenario_weights"])
        self.config = WorldConfig(**cfg)
        self.splits = {k: tuple(v) for k, v in manifest.get("splits", {}).items()}

    def __len__(self) -> int:
        return len(self.manifest["episodes"])

    def __getitem__(self, i: int) -> Episode:
        entry = self.manifest["episodes"][i]
        raw = (self.path / entry["file"]).read_bytes()
        meta_kw = dict(entry["meta"])
        if meta_kw.get("turn_window") is not None:
            meta_kw["turn_window"] = tuple(meta_kw["turn_window"])
        ep = episode_from_bytes(
            raw,
            seed=int(entry["seed"]),
            route_intent=entry["route_intent"],
            rate_hz=int(entry["rate_hz"]),
            meta=EpisodeMeta(**meta_kw),
        )
        if len(ep) != entry["t"]:
            raise DatasetError(
                f"{entry['file']}: manifest says T={entry['t']}, blob has {len(ep)}")
        return ep

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def read_dataset(path) -> Dataset:
    return Dataset(path)

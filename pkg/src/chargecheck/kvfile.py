"""Line-oriented ``key = value`` files.

Blank lines and ``#`` comments are ignored. Keys are case-sensitive and may
appear only once. Writing goes through a temporary file and ``os.replace`` so
a reader never sees a half-written file.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Mapping

from .errors import DomainError


def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise DomainError(f"{source}:{lineno}: empty key")
        if key in out:
            raise DomainError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_kv(path: str | os.PathLike) -> dict[str, str]:
    path = Path(path)
    return parse_kv(path.read_text(encoding="utf-8"), source=str(path))


def format_kv(items: Mapping[str, object]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in items.items())


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_kv(path: str | os.PathLike, items: Mapping[str, object]) -> None:
    atomic_write_text(path, format_kv(items))


def get_float(kv: Mapping[str, str], key: str, default: float | None = None) -> float:
    if key not in kv:
        if default is None:
            raise DomainError(f"missing key {key!r}")
        return default
    try:
        return float(kv[key])
    except ValueError:
        raise DomainError(f"key {key!r}: not a number: {kv[key]!r}") from None


def get_int(kv: Mapping[str, str], key: str, default: int | None = None) -> int:
    if key not in kv:
        if default is None:
            raise DomainError(f"missing key {key!r}")
        return default
    try:
        return int(kv[key])
    except ValueError:
        raise DomainError(f"key {key!r}: not an integer: {kv[key]!r}") from None


def get_floats(kv: Mapping[str, str], key: str, default: tuple[float, ...]) -> tuple[float, ...]:
    if key not in kv:
        return default
    try:
        return tuple(float(x) for x in kv[key].split(",") if x.strip())
    except ValueError:
        raise DomainError(f"key {key!r}: expected comma-separated numbers") from None


def get_bool(kv: Mapping[str, str], key: str, default: bool) -> bool:
    if key not in kv:
        return default
    v = kv[key].lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise DomainError(f"key {key!r}: expected a boolean, got {kv[key]!r}")

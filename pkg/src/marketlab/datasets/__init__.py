"""Bundled synthetic fixtures shipped with the package.

``dataset:<name>`` references in spec files and CLI arguments resolve here,
so bundled data works regardless of where the package is installed. The
files are generated once by ``python -m marketlab.datasets.generate`` and
committed; they contain no real market data.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..errors import MarketLabError

DATASET_SCHEME = "dataset:"


def list_datasets() -> list[str]:
    root = resources.files(__package__)
    names = []
    for entry in root.iterdir():
        if entry.name.endswith((".csv", ".json")):
            names.append(entry.name)
    return sorted(names)


def dataset_path(name: str) -> Path:
    path = Path(str(resources.files(__package__) / name))
    if not path.exists():
        raise MarketLabError(f"no bundled dataset {name!r}; available: {list_datasets()}")
    return path


def resolve_data_path(value: str) -> Path:
    """Resolve either a filesystem path or a ``dataset:<name>`` reference."""
    if value.startswith(DATASET_SCHEME):
        return dataset_path(value[len(DATASET_SCHEME):])
    return Path(value)

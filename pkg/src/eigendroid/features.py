"""Feature catalog and keyword extraction from decoded application artifacts.

A catalog is an ordered list of binary features. Feature ``i`` of an
application is 1 when any of its literal patterns occurs (case-sensitive
substring) in any document the feature is scoped to.

Catalog file format (JSON, UTF-8)::

    {
      "format": "eigendroid-catalog",
      "format_version": 1,
      "version": "<free text>",
      "features": [
        {"name": "SEND SMS", "kind": "permission",
         "patterns": ["SEND_SMS", "android.permission.SEND_SMS"],
         "scope": ["manifest"]},
        ...
      ]
    }

``kind`` is one of ``permission``, ``api``, ``intent``, ``command-related``.
``scope`` is a list drawn from ``manifest``, ``code-dump``,
``embedded-files`` or the single string ``"all"``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import CatalogError
from .vectors import Dataset, FeatureVector

CATALOG_FORMAT = "eigendroid-catalog"
CATALOG_FORMAT_VERSION = 1

KINDS = ("permission", "api", "intent", "command-related")
DOCUMENTS = ("manifest", "code-dump", "embedded-files")

# file names inside one app directory for the ``extract`` CLI
DOCUMENT_FILES = {
    "manifest": "manifest.txt",
    "code-dump": "code.txt",
    "embedded-files": "files.txt",
}


@dataclass(frozen=True)
class FeatureDefinition:
    name: str
    kind: str
    patterns: tuple
    scope: tuple = DOCUMENTS

    def __post_init__(self):
        if not self.name:
            raise CatalogError("feature name must be nonempty")
        if self.kind not in KINDS:
            raise CatalogError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        patterns = tuple(self.patterns)
        if not patterns or any(not isinstance(p, str) or not p for p in patterns):
            raise CatalogError(f"feature {self.name!r}: patterns must be nonempty strings")
        scope = self.scope
        if scope == "all" or scope == ("all",) or scope == ["all"]:
            scope = DOCUMENTS
        scope = tuple(scope)
        bad = [s for s in scope if s not in DOCUMENTS]
        if bad or not scope:
            raise CatalogError(f"feature {self.name!r}: invalid scope {list(scope)!r}")
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "scope", scope)

    def to_dict(self) -> dict:
        scope = "all" if set(self.scope) == set(DOCUMENTS) else list(self.scope)
        return {
            "name": self.name,
            "kind": self.kind,
            "patterns": list(self.patterns),
            "scope": scope,
        }


@dataclass(frozen=True)
class FeatureCatalog:
    entries: tuple
    version: str = "unversioned"

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise CatalogError("catalog must contain at least one feature")
        seen = set()
        for e in entries:
            if e.name in seen:
                raise CatalogError(f"duplicate feature name {e.name!r}")
            seen.add(e.name)
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def names(self) -> tuple:
        return tuple(e.name for e in self.entries)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def subset(self, indices, version: Optional[str] = None) -> "FeatureCatalog":
        return FeatureCatalog(
            tuple(self.entries[i] for i in indices),
            version if version is not None else self.version,
        )

    def to_dict(self) -> dict:
        return {
            "format": CATALOG_FORMAT,
            "format_version": CATALOG_FORMAT_VERSION,
            "version": self.version,
            "features": [e.to_dict() for e in self.entries],
        }


def catalog_from_dict(doc) -> FeatureCatalog:
    if not isinstance(doc, Mapping):
        raise CatalogError("catalog document must be a JSON object")
    if doc.get("format") != CATALOG_FORMAT:
        raise CatalogError(f"not a catalog document (format={doc.get('format')!r})")
    if doc.get("format_version") != CATALOG_FORMAT_VERSION:
        raise CatalogError(
            f"unsupported catalog format_version {doc.get('format_version')!r}"
        )
    raw = doc.get("features")
    if not isinstance(raw, list):
        raise CatalogError("catalog 'features' must be a list")
    entries = []
    for i, item in enumerate(raw):
        try:
            entries.append(
                FeatureDefinition(
                    name=item["name"],
                    kind=item["kind"],
                    patterns=item["patterns"],
                    scope=item.get("scope", "all"),
                )
            )
        except (KeyError, TypeError) as exc:
            raise CatalogError(f"catalog feature #{i + 1} is malformed: {exc}") from None
    return FeatureCatalog(tuple(entries), str(doc.get("version", "unversioned")))


def load_catalog(source) -> FeatureCatalog:
    """Load a catalog from a path, an open text file, or an already-parsed dict."""
    if isinstance(source, Mapping):
        return catalog_from_dict(source)
    try:
        if hasattr(source, "read"):
            doc = json.load(source)
        else:
            with open(source, encoding="utf-8") as fh:
                doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog does not parse: {exc}") from None
    return catalog_from_dict(doc)


def save_catalog(catalog: FeatureCatalog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(catalog.to_dict(), fh, indent=2)
        fh.write("\n")


def default_catalog_path():
    return resources.files("eigendroid") / "data" / "default_catalog.json"


def default_catalog() -> FeatureCatalog:
    """The shipped 100-feature catalog, in gain-ratio ranking order."""
    with default_catalog_path().open(encoding="utf-8") as fh:
        return load_catalog(fh)


@dataclass(frozen=True)
class ArtifactBundle:
    """Decoded text artifacts of one application, keyed by document role."""

    app_id: str
    documents: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not self.app_id:
            raise ValueError("app_id must be nonempty")
        unknown = set(self.documents) - set(DOCUMENTS)
        if unknown:
            raise ValueError(f"unknown document roles: {sorted(unknown)}")

    def text(self, role: str) -> str:
        return self.documents.get(role) or ""


def extract(bundle: ArtifactBundle, catalog: FeatureCatalog) -> FeatureVector:
    values = np.zeros(len(catalog), dtype=np.uint8)
    texts = {role: bundle.text(role) for role in DOCUMENTS}
    for i, feat in enumerate(catalog.entries):
        docs = [texts[r] for r in feat.scope if texts[r]]
        if any(p in doc for doc in docs for p in feat.patterns):
            values[i] = 1
    return FeatureVector(bundle.app_id, values)


def extract_batch(
    bundles: Sequence[ArtifactBundle], catalog: FeatureCatalog, threads: int = 1
) -> Dataset:
    """Extract every bundle; output order always equals input order."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vectors = list(pool.map(lambda b: extract(b, catalog), bundles))
    else:
        vectors = [extract(b, catalog) for b in bundles]
    return Dataset.from_vectors(vectors, catalog.names)


def read_bundle_dir(path) -> ArtifactBundle:
    """Read one app directory (``manifest.txt``, ``code.txt``, ``files.txt``)."""
    path = Path(path)
    docs = {}
    for role, fname in DOCUMENT_FILES.items():
        f = path / fname
        if f.is_file():
            docs[role] = f.read_text(encoding="utf-8", errors="replace")
    return ArtifactBundle(path.name, docs)


def read_bundles(root) -> list:
    """One bundle per subdirectory of ``root``, sorted by directory name."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"input directory not found: {root}")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    return [read_bundle_dir(p) for p in subdirs]

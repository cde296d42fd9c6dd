"""Immutable column-oriented tabular data with typed features and missing cells.

The dataset is the common currency of the whole pipeline: CSV ingestion,
descriptive statistics, zero-as-missing recoding and deterministic splitting
all live here. Every operation returns a new ``Dataset``; nothing mutates in
place, so datasets are safe to share across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np


class _MissingType:
    """Singleton marker for an absent cell. Distinct from any legal value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __bool__(self):
        return False


MISSING = _MissingType()

KINDS = ("numeric", "categorical", "binary")
ROLES = ("input", "target", "derived", "excluded")


class StructuralError(ValueError):
    """Malformed tabular input: ragged rows, duplicate headers, etc."""


class UnknownFeatureError(KeyError):
    """A named feature does not exist in the dataset."""

    def __str__(self):
        return self.args[0] if self.args else ""


@dataclass(frozen=True)
class FeatureMeta:
    """Description of one column: kind, unit, modelling role, ontology link."""

    name: str
    kind: str = "numeric"
    unit: str = ""
    role: str = "input"
    ontology_uri: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.role not in ROLES:
            raise ValueError(f"unknown feature role {self.role!r}")


def _is_numeric_kind(meta: FeatureMeta) -> bool:
    # binary is a numeric sub-kind for the purposes of arithmetic transforms
    return meta.kind in ("numeric", "binary")


@dataclass(frozen=True)
class Dataset:
    """Immutable table: ordered features plus per-feature cell tuples.

    Cells are floats (numeric/binary), strings (categorical) or MISSING.
    """

    features: tuple[FeatureMeta, ...]
    columns: tuple[tuple, ...]  # parallel to features

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise StructuralError("duplicate feature names in dataset")
        if len(self.columns) != len(self.features):
            raise ValueError("features and columns length mismatch")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise ValueError(f"columns have unequal lengths: {sorted(lengths)}")
        for meta, col in zip(self.features, self.columns):
            if meta.kind == "binary":
                bad = [v for v in col if v is not MISSING and v not in (0, 1, 0.0, 1.0)]
                if bad:
                    raise ValueError(
                        f"binary feature {meta.name!r} holds non-binary value {bad[0]!r}"
                    )

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_columns(features: Sequence[FeatureMeta], columns: Sequence[Iterable]) -> "Dataset":
        return Dataset(tuple(features), tuple(tuple(c) for c in columns))

    # -- basic access ----------------------------------------------------------

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def _index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise UnknownFeatureError(f"unknown feature {name!r}")

    def feature(self, name: str) -> FeatureMeta:
        return self.features[self._index(name)]

    def has_feature(self, name: str) -> bool:
        return any(f.name == name for f in self.features)

    def column(self, name: str) -> tuple:
        return self.columns[self._index(name)]

    def numeric_values(self, name: str) -> np.ndarray:
        """Non-missing values of a numeric/binary feature as a float array."""
        meta = self.feature(name)
        if not _is_numeric_kind(meta):
            raise ValueError(f"feature {name!r} is not numeric")
        return np.array([v for v in self.column(name) if v is not MISSING], dtype=float)

    def missing_fraction(self, name: str) -> float:
        col = self.column(name)
        if not col:
            return 0.0
        return sum(1 for v in col if v is MISSING) / len(col)

    def to_matrix(self, names: Sequence[str]) -> np.ndarray:
        """Dense float matrix over the named features; missing cells are an error."""
        cols = []
        for name in names:
            col = self.column(name)
            if any(v is MISSING for v in col):
                raise ValueError(f"feature {name!r} still has missing cells")
            cols.append(np.array(col, dtype=float))
        return np.column_stack(cols) if cols else np.empty((self.n_rows, 0))

    def input_feature_names(self) -> tuple[str, ...]:
        """Features a model trains on: roles input and derived."""
        return tuple(f.name for f in self.features if f.role in ("input", "derived"))

    def target_name(self) -> str:
        targets = [f.name for f in self.features if f.role == "target"]
        if len(targets) != 1:
            raise ValueError(f"expected exactly one target feature, found {targets}")
        return targets[0]

    # -- derived datasets -------------------------------------------------------

    def replace_column(self, name: str, values: Iterable, meta: Optional[FeatureMeta] = None) -> "Dataset":
        i = self._index(name)
        values = tuple(values)
        if len(values) != self.n_rows:
            raise ValueError("replacement column has wrong length")
        feats = list(self.features)
        if meta is not None:
            feats[i] = meta
        cols = list(self.columns)
        cols[i] = values
        return Dataset(tuple(feats), tuple(cols))

    def add_column(self, meta: FeatureMeta, values: Iterable) -> "Dataset":
        if self.has_feature(meta.name):
            raise StructuralError(f"feature {meta.name!r} already exists")
        values = tuple(values)
        if len(values) != self.n_rows:
            raise ValueError("new column has wrong length")
        return Dataset(self.features + (meta,), self.columns + (values,))

    def set_role(self, name: str, role: str) -> "Dataset":
        i = self._index(name)
        feats = list(self.features)
        feats[i] = replace(feats[i], role=role)
        return Dataset(tuple(feats), self.columns)

    def select_rows(self, indices: Sequence[int]) -> "Dataset":
        cols = tuple(tuple(col[i] for i in indices) for col in self.columns)
        return Dataset(self.features, cols)


# -- CSV ingestion ----------------------------------------------------------------


def _parse_cell(text: str):
    text = text.strip()
    if text == "":
        return MISSING
    try:
        return float(text)
    except ValueError:
        return text


def load_csv(path, meta: Optional[Mapping[str, Mapping]] = None) -> Dataset:
    """Load an RFC-4180-style CSV with a header row into a Dataset.

    Cells parse as numbers where possible, otherwise stay categorical tokens;
    empty fields become MISSING. A column is numeric iff every non-missing cell
    parses, binary if its values are only {0, 1}. ``meta`` optionally overrides
    inferred per-feature metadata, keyed by feature name with any of the
    FeatureMeta field names.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise StructuralError(f"{path}: empty file, header row required")
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise StructuralError(f"{path}: duplicate header names {dupes}")
        raw_columns: list[list] = [[] for _ in header]
        for row_index, row in enumerate(reader):
            if len(row) != len(header):
                raise StructuralError(
                    f"{path}: row {row_index + 1} has {len(row)} fields, expected {len(header)}"
                )
            for i, cell in enumerate(row):
                raw_columns[i].append(cell)

    features = []
    columns = []
    for name, raw in zip(header, raw_columns):
        parsed = [_parse_cell(c) for c in raw]
        non_missing = [v for v in parsed if v is not MISSING]
        if non_missing and all(isinstance(v, float) for v in non_missing):
            values = set(v for v in non_missing)
            kind = "binary" if values <= {0.0, 1.0} else "numeric"
            col = parsed
        elif not non_missing:
            kind = "numeric"  # empty or all-missing column, nothing to contradict
            col = parsed
        else:
            kind = "categorical"
            col = [c.strip() if _parse_cell(c) is not MISSING else MISSING for c in raw]
        fm = FeatureMeta(name=name, kind=kind)
        if meta and name in meta:
            fm = replace(fm, **dict(meta[name]))
        features.append(fm)
        columns.append(col)
    return Dataset.from_columns(features, columns)


# -- descriptive statistics ---------------------------------------------------------


@dataclass(frozen=True)
class FeatureStats:
    """Summary of one feature. Moment fields are None when undefined."""

    name: str
    count: int  # total rows, the reporting convention for raw tables
    n_present: int
    missing_fraction: float
    mean: Optional[float] = None
    std: Optional[float] = None
    min: Optional[float] = None
    q25: Optional[float] = None
    median: Optional[float] = None
    q75: Optional[float] = None
    max: Optional[float] = None


@dataclass(frozen=True)
class DescriptiveStats:
    per_feature: tuple[FeatureStats, ...]

    def __getitem__(self, name: str) -> FeatureStats:
        for fs in self.per_feature:
            if fs.name == name:
                return fs
        raise UnknownFeatureError(f"unknown feature {name!r}")


def descriptive_stats(d: Dataset) -> DescriptiveStats:
    """Per-feature summary; missing cells are excluded from every statistic.

    ``count`` reports total rows; moments of an all-missing column are None.
    std uses the sample (n-1) denominator and needs at least two values.
    """
    out = []
    for meta in d.features:
        col = d.column(meta.name)
        missing = sum(1 for v in col if v is MISSING)
        frac = missing / len(col) if col else 0.0
        if not _is_numeric_kind(meta):
            out.append(FeatureStats(meta.name, len(col), len(col) - missing, frac))
            continue
        values = d.numeric_values(meta.name)
        if values.size == 0:
            out.append(FeatureStats(meta.name, len(col), 0, frac))
            continue
        q25, med, q75 = np.percentile(values, [25, 50, 75])
        std = float(np.std(values, ddof=1)) if values.size >= 2 else None
        out.append(
            FeatureStats(
                name=meta.name,
                count=len(col),
                n_present=int(values.size),
                missing_fraction=frac,
                mean=float(np.mean(values)),
                std=std,
                min=float(values.min()),
                q25=float(q25),
                median=float(med),
                q75=float(q75),
                max=float(values.max()),
            )
        )
    return DescriptiveStats(tuple(out))


# -- zero-as-missing recoding ----------------------------------------------------


def mark_missing_zeros(d: Dataset, features: Sequence[str]) -> Dataset:
    """Recode exact-zero cells of the named numeric features as MISSING.

    Zero stays a legal value everywhere else; this is a state transition on
    the named columns only. Idempotent.
    """
    result = d
    for name in features:
        meta = result.feature(name)  # raises UnknownFeatureError
        if not _is_numeric_kind(meta):
            raise ValueError(f"feature {name!r} is not numeric")
        col = result.column(name)
        new = tuple(MISSING if (v is not MISSING and v == 0) else v for v in col)
        result = result.replace_column(name, new)
    return result


# -- deterministic splitting -------------------------------------------------------


def split(d: Dataset, fractions: Sequence[float], seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded (train, validation, test) row partition.

    Fractions must be positive and sum to 1 within 1e-9. Sizes are apportioned
    by largest remainder after flooring, so leftover rows land in the part with
    the largest fractional share (train, for the usual 50/25/25 style splits).
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError("expected (train, validation, test) fractions")
    if any(f <= 0 for f in fractions):
        raise ValueError(f"fractions must be positive, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got sum {sum(fractions)!r}")

    n = d.n_rows
    exact = [f * n for f in fractions]
    sizes = [int(np.floor(e)) for e in exact]
    leftovers = n - sum(sizes)
    remainders = sorted(range(3), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in range(leftovers):
        sizes[remainders[i % 3]] += 1

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    bounds = np.cumsum(sizes)
    parts = (perm[: bounds[0]], perm[bounds[0]: bounds[1]], perm[bounds[1]: bounds[2]])
    return tuple(d.select_rows(list(p)) for p in parts)  # type: ignore[return-value]

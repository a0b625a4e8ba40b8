"""Tabular ingestion: CSV to numeric matrices with one-hot categoricals.

An *encoding* (a plain dict stored inside model documents) records how the
source columns were turned into numeric features, so rows arriving later can
be encoded identically.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from aacbr.errors import SchemaError

log = logging.getLogger(__name__)

COMPAS_ROWS = 6172
COMPAS_LABEL = "two_year_recid"
COMPAS_NUMERIC = ("age", "priors_count", "juv_fel_count", "juv_misd_count", "juv_other_count", "length_of_stay")
COMPAS_CATEGORICAL = ("sex", "race", "age_cat", "c_charge_degree")
COMPAS_FEATURE_SETS = {
    "A": (),
    "B": ("age_cat",),
    "C": ("age_cat", "race"),
    "D": ("age_cat", "race", "sex"),
}

WELFARE_ROWS = 2000
WELFARE_LABEL = "eligible"
WELFARE_REQUIRED = ("age", "is_spouse", "is_absent", "capital_resources")


class DataWarning(UserWarning):
    """The data parsed, but does not look like the canonical file."""


@dataclass(frozen=True)
class Dataset:
    name: str
    feature_names: tuple
    X: np.ndarray
    y: np.ndarray
    label_name: str
    categorical: dict = field(default_factory=dict)  # source column -> one-hot column names
    encoding: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.y)

    def class_counts(self) -> dict:
        labels, counts = np.unique(self.y, return_counts=True)
        return {str(k): int(v) for k, v in zip(labels, counts)}


def _read(source) -> pd.DataFrame:
    if isinstance(source, pd.DataFrame):
        return source.copy()
    try:
        return pd.read_csv(source, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise SchemaError(f"{source}: file is empty") from exc
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{source}: not UTF-8 ({exc.reason})") from exc


def _label_text(series: pd.Series) -> np.ndarray:
    if pd.api.types.is_float_dtype(series) and (series.dropna() % 1 == 0).all():
        series = series.astype("Int64")
    return series.astype(str).to_numpy()


def _onehot_name(column: str, level) -> str:
    return f"{column}={level}"


def _is_numeric(series: pd.Series) -> bool:
    return pd.api.types.is_numeric_dtype(series) or pd.api.types.is_bool_dtype(series)


def encode_frame(df: pd.DataFrame, label_col: str, categorical=None, name: str = "data") -> Dataset:
    """Encode ``df``; non-numeric columns (and any listed in ``categorical``) become one-hot."""
    if df.empty:
        raise SchemaError(f"{name}: no rows")
    if label_col not in df.columns:
        raise SchemaError(f"{name}: label column {label_col!r} not found in {list(df.columns)}")
    df = df.loc[:, [c for c in df.columns if c and not str(c).startswith("Unnamed:")]]
    if df[label_col].isna().any():
        raise SchemaError(f"{name}: label column {label_col!r} has missing values")
    labels = _label_text(df[label_col])
    if len(set(labels)) > 2:
        raise SchemaError(f"{name}: label column {label_col!r} is not binary ({sorted(set(labels))[:5]}...)")
    forced = set(categorical or ())
    columns = []
    for col in df.columns:
        if col == label_col:
            continue
        series = df[col]
        if series.isna().any():
            raise SchemaError(f"{name}: column {col!r} has {int(series.isna().sum())} missing values")
        if col in forced or not _is_numeric(series):
            levels = sorted(series.astype(str).unique().tolist())
            columns.append({"name": col, "kind": "categorical", "levels": levels})
        else:
            columns.append({"name": col, "kind": "numeric"})
    encoding = {"label": label_col, "columns": columns}
    X, names, cat = _apply_encoding(df, encoding, name)
    return Dataset(name, names, X, labels, label_col, cat, encoding)


def _apply_encoding(df: pd.DataFrame, encoding: dict, name: str):
    blocks, names, cat = [], [], {}
    for column in encoding["columns"]:
        col = column["name"]
        if col not in df.columns:
            raise SchemaError(f"{name}: missing column {col!r}")
        if column["kind"] == "numeric":
            try:
                blocks.append(pd.to_numeric(df[col]).astype(float).to_numpy()[:, None])
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{name}: column {col!r} is not numeric") from exc
            names.append(col)
        else:
            values = df[col].astype(str).to_numpy()
            unknown = set(values) - set(column["levels"])
            if unknown:
                log.warning("%s: column %r has unseen levels %s; they encode as all zeros", name, col, sorted(unknown))
            onehot = [_onehot_name(col, lv) for lv in column["levels"]]
            blocks.append(np.stack([(values == lv).astype(float) for lv in column["levels"]], axis=1))
            names.extend(onehot)
            cat[col] = onehot
    X = np.hstack(blocks) if blocks else np.zeros((len(df), 0))
    if np.isnan(X).any():
        raise SchemaError(f"{name}: missing values after encoding")
    return X, tuple(names), cat


def encode_rows(df: pd.DataFrame, encoding: dict, name: str = "rows") -> np.ndarray:
    """Encode new rows with a stored encoding; the label column may be absent."""
    return _apply_encoding(df, encoding, name)[0]


def load_csv(source, label_col: str | None = None, categorical=None, name: str | None = None) -> Dataset:
    df = _read(source)
    if label_col is None:
        if df.shape[1] == 0:
            raise SchemaError("no columns")
        label_col = df.columns[-1]
    return encode_frame(df, label_col, categorical, name or (Path(source).stem if not isinstance(source, pd.DataFrame) else "data"))


def drop_features(ds: Dataset, columns) -> Dataset:
    """Drop source columns, including every one-hot column derived from them."""
    columns = set(columns)
    doomed = set()
    for col in columns:
        doomed.update(ds.categorical.get(col, [col]))
    keep = [i for i, n in enumerate(ds.feature_names) if n not in doomed]
    encoding = dict(ds.encoding)
    encoding["columns"] = [c for c in ds.encoding.get("columns", []) if c["name"] not in columns]
    return replace(
        ds,
        feature_names=tuple(ds.feature_names[i] for i in keep),
        X=ds.X[:, keep],
        categorical={k: v for k, v in ds.categorical.items() if k not in columns},
        encoding=encoding,
    )


def compas_filter(df: pd.DataFrame) -> pd.DataFrame:
    """The screening filters of the original two-year recidivism analysis."""
    days = pd.to_numeric(df["days_b_screening_arrest"], errors="coerce")
    keep = (
        days.between(-30, 30)
        & (pd.to_numeric(df["is_recid"], errors="coerce") != -1)
        & (df["c_charge_degree"].astype(str) != "O")
        & (df["score_text"].astype(str) != "N/A")
        & df["score_text"].notna()
    )
    return df.loc[keep]


def ingest_compas(source, expected_rows: int = COMPAS_ROWS) -> Dataset:
    """Filter and encode the two-year recidivism file.

    Features are demographics, charge degree, jail stay length and
    criminal history; the COMPAS scores themselves are not used.
    """
    df = _read(source)
    required = {"days_b_screening_arrest", "is_recid", "score_text", "c_jail_in", "c_jail_out", COMPAS_LABEL}
    required.update(set(COMPAS_NUMERIC) - {"length_of_stay"})
    required.update(COMPAS_CATEGORICAL)
    missing = sorted(required - set(df.columns))
    if missing:
        raise SchemaError(f"COMPAS file lacks columns {missing}")
    df = compas_filter(df)
    if len(df) != expected_rows:
        warnings.warn(f"COMPAS filtering kept {len(df)} rows, expected {expected_rows}", DataWarning, stacklevel=2)
    jail_in = pd.to_datetime(df["c_jail_in"], errors="coerce")
    jail_out = pd.to_datetime(df["c_jail_out"], errors="coerce")
    stay = (jail_out - jail_in).dt.total_seconds() / 86400.0
    if stay.isna().any():
        log.warning("COMPAS: %d rows lack jail dates; length_of_stay set to 0", int(stay.isna().sum()))
    df = df.assign(length_of_stay=stay.fillna(0.0))
    frame = df.loc[:, list(COMPAS_NUMERIC) + list(COMPAS_CATEGORICAL) + [COMPAS_LABEL]].reset_index(drop=True)
    return encode_frame(frame, COMPAS_LABEL, categorical=COMPAS_CATEGORICAL, name="compas")


def select_feature_set(ds: Dataset, set_id: str) -> Dataset:
    if set_id not in COMPAS_FEATURE_SETS:
        raise SchemaError(f"unknown feature set {set_id!r}; expected one of {sorted(COMPAS_FEATURE_SETS)}")
    out = drop_features(ds, COMPAS_FEATURE_SETS[set_id])
    return replace(out, name=f"{ds.name}-{set_id}")


def ingest_welfare(source, label_col: str = WELFARE_LABEL, expected_rows: int = WELFARE_ROWS) -> Dataset:
    df = _read(source)
    missing = [c for c in WELFARE_REQUIRED + (label_col,) if c not in df.columns]
    if not any(str(c).startswith("paid_contribution") for c in df.columns):
        missing.append("paid_contribution*")
    if missing:
        raise SchemaError(f"Welfare file lacks columns {missing}")
    ds = encode_frame(df, label_col, name="welfare")
    if len(ds) != expected_rows:
        warnings.warn(f"Welfare file has {len(ds)} rows, expected {expected_rows}", DataWarning, stacklevel=2)
    counts = ds.class_counts()
    if len(set(counts.values())) > 1:
        warnings.warn(f"Welfare classes are unbalanced: {counts}", DataWarning, stacklevel=2)
    return ds

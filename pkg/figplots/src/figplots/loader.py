"""Shared CSV loader. The column tuples below are the interface contract
with the simulator's sweep harness; rendering never recomputes physics, so
everything a figure shows must come through these columns."""

import pandas as pd

from .errors import EmptyDataError, MissingColumnError

SWEEP_COLUMNS = (
    "figure", "variant", "alpha", "beta_re", "beta_im", "xi", "tau",
    "N", "k_plus", "k_minus", "loss", "outcome", "fidelity",
    "avg_fidelity", "probability", "branch_count", "leakage",
)

DIST_COLUMNS = (
    "figure", "stage", "variant", "alpha", "beta_re", "beta_im",
    "tau", "n", "p_n", "overlay_cos",
)


def load_csv(path):
    """Parse a sweep or distribution CSV (recognized by its header)."""
    try:
        frame = pd.read_csv(path)
    except (pd.errors.EmptyDataError, FileNotFoundError) as exc:
        raise EmptyDataError(f"{path}: {exc}")
    header = tuple(frame.columns)
    if header not in (SWEEP_COLUMNS, DIST_COLUMNS):
        for schema in (SWEEP_COLUMNS, DIST_COLUMNS):
            missing = set(schema) - set(header)
            if missing != set(schema):
                raise MissingColumnError(
                    f"{path}: header is missing {sorted(missing)}"
                )
        raise MissingColumnError(f"{path}: header matches neither schema")
    if frame.empty:
        raise EmptyDataError(f"{path}: no data rows")
    return frame


def require(frame, columns, context=""):
    missing = [c for c in columns if c and c not in frame.columns]
    if missing:
        where = f" for {context}" if context else ""
        raise MissingColumnError(f"missing column(s){where}: {missing}")
    return frame


def beta_label(re, im):
    """Compact legend label for a complex resource amplitude."""
    re, im = float(re), float(im)
    if im == 0:
        return f"beta={re:g}"
    if re == 0:
        return f"beta={im:g}i"
    return f"beta={re:g}{im:+g}i"

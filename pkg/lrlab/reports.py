"""
lrlab Reports
CSV tables and JSON summaries written at full precision, byte-stable across repeat runs
"""

import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from lrlab.config import config_hash

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"

__all__ = ["CSV_FLOAT_FORMAT", "config_hash", "to_plain", "write_frame", "write_summary"]


def to_plain(obj):
    """JSON-ready copy: numpy scalars and arrays become Python values, NaN and inf become None"""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, pd.DataFrame):
        return to_plain(obj.to_dict(orient="records"))
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (np.complexfloating, complex)):
        return {"re": to_plain(obj.real), "im": to_plain(obj.imag)}
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_frame(df, path):
    """DataFrame to CSV with 17 significant digits and no index"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = df.copy()
    for column in frame.columns:
        if np.iscomplexobj(frame[column].to_numpy()):
            values = frame.pop(column).to_numpy()
            frame[f"{column}_re"] = values.real
            frame[f"{column}_im"] = values.imag
    frame.to_csv(path, float_format=CSV_FLOAT_FORMAT, index=False)
    logger.debug(f"wrote {len(frame)} rows to {path}")
    return path


def write_summary(obj, path):
    """Sorted-key JSON with full-precision floats"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_plain(obj), f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.debug(f"wrote summary {path}")
    return path

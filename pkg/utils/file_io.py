# utils/file_io.py
import io
import json
import os
import sys
import logging
from typing import Any, Optional

import pandas as pd

logger = logging.getLogger("FileIO")


def ensure_parent_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def atomic_write_bytes(path: str, data: bytes) -> None:
    ensure_parent_dir(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def dataframe_to_csv(df: pd.DataFrame, float_format: Optional[str] = None) -> str:
    """RFC-4180 style CSV with a header row and LF line endings"""
    buf = io.StringIO()
    df.to_csv(buf, index=False, lineterminator="\n", float_format=float_format)
    return buf.getvalue()


def to_json_text(payload: Any) -> str:
    """Stable JSON text: fixed indentation, insertion key order, trailing newline"""
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def write_output(text: str, output: Optional[str] = None) -> None:
    """Write to a file (atomically) or to stdout"""
    if output:
        atomic_write_text(output, text)
        logger.info(f"Wrote {len(text)} bytes to {output}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()

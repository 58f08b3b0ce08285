"""File formats: Pmf JSON, report JSON, trace/moment/operator CSV.

Floats are written with 17 significant digits so every float64 survives a
round trip, and files are written through a temporary file plus rename so a
failing command never leaves partial output behind.
"""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .dist import Moments, Pmf
from .errors import FileNotFound, ParseError
from .limit import FixedPointResult, MarkovOperatorMatrix
from .tail import CParamEstimate, InvarianceReport

LOAD_SUM_TOL = 1e-9


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def c_value(x: float) -> float | str:
    """JSON value for a decay rate; infinity is the literal string ``"inf"``."""
    return "inf" if math.isinf(x) else float(x)


def dumps(obj: Any, indent: int = 0, _level: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1)) if indent else ""
    end = "\n" + " " * (indent * _level) if indent else ""
    sep = ",\n" if indent else ", "
    nl = "\n" if indent else ""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize {obj!r} as JSON")
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{" + nl + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        # numeric arrays stay on one line
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[" + nl + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# --- Pmf JSON -------------------------------------------------------------


def pmf_to_dict(p: Pmf) -> dict:
    return {"offset": int(p.offset), "probs": [float(v) for v in p.probs]}


def pmf_from_dict(data: Any) -> Pmf:
    """Parse ``{"offset": int, "probs": [...]}``; the deficit is ``1 - sum``."""
    if not isinstance(data, dict) or "offset" not in data or "probs" not in data:
        raise ParseError('pmf JSON needs "offset" and "probs"')
    offset, probs = data["offset"], data["probs"]
    if isinstance(offset, bool) or not isinstance(offset, int) or offset < 0:
        raise ParseError("offset must be a non-negative integer")
    if not isinstance(probs, list) or not probs:
        raise ParseError("probs must be a non-empty list")
    try:
        arr = np.array([float(v) for v in probs])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"probs must be numbers: {exc}") from None
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ParseError("probs must be finite and non-negative")
    total = math.fsum(arr)
    if abs(total - 1.0) > LOAD_SUM_TOL:
        raise ParseError(f"probs sum to {total!r}, expected 1 within {LOAD_SUM_TOL:g}")
    # a sum a few ulps above 1 is kept as written so round trips stay exact
    return Pmf(offset, arr, max(0.0, 1.0 - total))


def pmf_dumps(p: Pmf) -> str:
    return dumps(pmf_to_dict(p)) + "\n"


def pmf_loads(text: str) -> Pmf:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return pmf_from_dict(data)


def read_text(path: str | os.PathLike) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFound(f"no such file: {path}") from None
    except IsADirectoryError:
        raise FileNotFound(f"not a file: {path}") from None


def load_pmf(path: str | os.PathLike) -> Pmf:
    return pmf_loads(read_text(path))


def save_pmf(path: str | os.PathLike, p: Pmf) -> None:
    atomic_write(path, pmf_dumps(p))


# --- reports --------------------------------------------------------------


def estimate_to_dict(est: CParamEstimate) -> dict:
    return {
        "value": c_value(est.value),
        "spread": float(est.spread) if math.isfinite(est.spread) else "inf",
        "converged": bool(est.converged),
        "window_start": int(est.window_start),
        "window_end": int(est.window_end),
    }


def invariance_report_to_dict(report: InvarianceReport) -> dict:
    return {
        "estimates": [
            {
                "k": int(k),
                "value": c_value(e.value),
                "spread": float(e.spread) if math.isfinite(e.spread) else "inf",
                "converged": bool(e.converged),
            }
            for k, e in report.estimates
        ],
        "max_deviation": c_value(report.max_deviation),
    }


def fixed_point_diagnostics(result: FixedPointResult) -> dict:
    return {
        "residual": float(result.residual),
        "iterations": int(result.iterations),
        "mass_at_zero_raw": float(result.mass_at_zero_raw),
        "spectral_estimate": float(result.spectral_estimate),
        "converged": bool(result.converged),
    }


# --- CSV ------------------------------------------------------------------


def trace_csv(paths: np.ndarray) -> str:
    """``path,step,value`` rows, path-major."""
    n_paths, n_cols = paths.shape
    rows = np.column_stack(
        (
            np.repeat(np.arange(n_paths), n_cols),
            np.tile(np.arange(n_cols), n_paths),
            paths.ravel(),
        )
    )
    buf = io.StringIO()
    buf.write("path,step,value\n")
    np.savetxt(buf, rows, fmt="%d", delimiter=",")
    return buf.getvalue()


def moments_csv(moms: Iterable[Moments]) -> str:
    lines = ["step,mean,variance"]
    lines += [f"{i},{fmt_float(m.mean)},{fmt_float(m.variance)}" for i, m in enumerate(moms)]
    return "\n".join(lines) + "\n"


def operator_csv(M: MarkovOperatorMatrix) -> str:
    """``y,k,value`` rows in row-major order, zeros omitted."""
    lines = ["y,k,value"]
    if M.entries is not None:
        ys, ks = np.nonzero(M.entries)
        lines += [f"{y},{k},{fmt_float(M.entries[y, k])}" for y, k in zip(ys, ks)]
    else:
        cols = list(M.columns())
        for y in range(M.K + 1):
            for k, col in enumerate(cols):
                if col[y]:
                    lines.append(f"{y},{k},{fmt_float(col[y])}")
    return "\n".join(lines) + "\n"

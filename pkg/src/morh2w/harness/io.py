"""Model and result file I/O.

State-space systems load from a single JSON document with row-major
matrices, or from a directory of Matrix Market files A.mtx/B.mtx/
C.mtx/D.mtx.  JSON writes use full float repr, so write/read round-trips
are bit-exact.
"""

import json
import os
import tempfile
import warnings

import numpy as np
import scipy.io

from ..errors import DimensionMismatch, ParseError, UnstableSystem
from ..statespace import StateSpace

__all__ = ["load_statespace", "save_statespace", "save_reduction_result"]


def load_statespace(path, stability_warning=True):
    """Load a system from a JSON file or a Matrix Market directory.

    An unstable system triggers a warning, not an error: some benchmark
    plants are only marginally scaled.
    """
    if os.path.isdir(path):
        mats = {}
        for name in ("A", "B", "C", "D"):
            fname = os.path.join(path, f"{name}.mtx")
            if name == "D" and not os.path.exists(fname):
                mats["D"] = None
                continue
            if not os.path.exists(fname):
                raise ParseError(f"missing {name}.mtx in {path}")
            try:
                M = scipy.io.mmread(fname)
            except Exception as exc:
                raise ParseError(f"{fname}: {exc}") from exc
            mats[name] = np.asarray(M.todense() if hasattr(M, "todense") else M,
                                    dtype=float)
        sys = StateSpace(mats["A"], mats["B"], mats["C"], mats["D"])
    else:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
        except OSError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        missing = {"A", "B", "C"} - set(doc)
        if missing:
            raise ParseError(f"{path}: missing keys {sorted(missing)}")
        try:
            sys = StateSpace(doc["A"], doc["B"], doc["C"], doc.get("D"))
        except DimensionMismatch:
            raise
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: {exc}") from exc
    if stability_warning and not sys.is_stable():
        warnings.warn(
            f"{path}: system has spectral abscissa "
            f"{sys.spectral_abscissa():.3e} (not declared stable)",
            UserWarning,
            stacklevel=2,
        )
    return sys


def save_statespace(sys, path):
    """Write a system as a JSON document (lossless float repr)."""
    doc = {
        "A": sys.A.tolist(),
        "B": sys.B.tolist(),
        "C": sys.C.tolist(),
        "D": sys.D.tolist(),
    }
    _atomic_write_text(path, json.dumps(doc, indent=1) + "\n")


def _atomic_write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_reduction_result(result, outdir, prob=None, report=None, extra_meta=None):
    """Serialize a reduction run into a directory.

    Writes rom.json, history.csv, projection.json (V/W), meta.json, and,
    when the optimality report is available (or a problem to compute it
    from), report.csv.
    """
    os.makedirs(outdir, exist_ok=True)
    save_statespace(result.rom, os.path.join(outdir, "rom.json"))
    result.history.to_csv(os.path.join(outdir, "history.csv"))
    if result.V is not None and result.W is not None:
        _atomic_write_text(
            os.path.join(outdir, "projection.json"),
            json.dumps({"V": result.V.tolist(), "W": result.W.tolist()}) + "\n",
        )
    meta = {
        "method": result.method,
        "converged": bool(result.converged),
        "iterations": result.iterations,
        "seconds_total": float(sum(result.history.seconds)),
        "diagnostics": _jsonable(result.diagnostics),
    }
    if extra_meta:
        meta.update(_jsonable(extra_meta))
    _atomic_write_text(os.path.join(outdir, "meta.json"),
                       json.dumps(meta, indent=1) + "\n")

    if report is None and prob is not None and result.rom.is_stable(margin=0.0):
        from ..optimality import deviation_report

        report = deviation_report(prob, result.rom, result.V, result.W)
    if report is not None:
        _atomic_write_text(
            os.path.join(outdir, "report.csv"),
            report.csv_header() + "\n" + report.csv_row() + "\n",
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj

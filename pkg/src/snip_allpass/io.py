"""File formats: JSON data sets, filters, group-delay assignments, CSV signals and reports.

Complex numbers are written as ``[re, im]`` pairs, so a complex matrix is a
nested list of shape (rows, cols, 2).
"""

import csv
import json
from pathlib import Path

import numpy as np

from .dataset import InterpolationPoint, ValidatedDataSet, validate_dataset
from .exceptions import DimensionMismatch, ValidationError
from .gdopt import GammaAssignment
from .pickmat import PickMatrix
from .polyfilter import AllPassFilter, MatrixPolynomial


class FormatError(ValidationError):
    """A file does not follow the expected layout."""


def encode_complex(a):
    """Nested ``[re, im]`` lists for a complex scalar or array."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(obj):
    """Inverse of :func:`encode_complex`."""
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise FormatError("complex values must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _matrix(obj, m=None, what="matrix"):
    M = decode_complex(obj)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or (m is not None and M.shape[0] != m):
        raise FormatError(f"{what} must be a square {m or ''} complex matrix")
    return M


def _load(path_or_obj):
    if isinstance(path_or_obj, (str, Path)):
        with open(path_or_obj) as fh:
            return json.load(fh)
    return path_or_obj


def _dump(obj, path=None):
    text = json.dumps(obj, indent=1)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


# data sets


def dataset_to_json(ds: ValidatedDataSet):
    pts = []
    for p in ds.raw_points():
        pts.append({
            "omega": p.omega,
            "A": encode_complex(p.A),
            "gamma": None if p.gamma is None else encode_complex(p.gamma),
        })
    return {"m": ds.m, "points": pts}


def raw_points_from_json(obj):
    """Parse a data-set document into unvalidated points."""
    obj = _load(obj)
    try:
        m = int(obj["m"])
        raw = obj["points"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"data set needs 'm' and 'points': {exc}") from exc
    pts = []
    for k, p in enumerate(raw):
        try:
            g = p.get("gamma")
            pts.append(InterpolationPoint(
                float(p["omega"]),
                _matrix(p["A"], m, f"points[{k}].A"),
                None if g is None else _matrix(g, m, f"points[{k}].gamma"),
            ))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"points[{k}] is malformed: {exc}") from exc
    return pts


def load_dataset(path_or_obj, **validate_kw) -> ValidatedDataSet:
    return validate_dataset(raw_points_from_json(path_or_obj), **validate_kw)


def save_dataset(ds, path=None):
    return _dump(dataset_to_json(ds), path)


# filters


def filter_to_json(f: AllPassFilter):
    d = max(f.N.degree, f.D.degree)
    pad = lambda P: [encode_complex(P.coeffs[k]) if k <= P.degree else encode_complex(np.zeros((f.m, f.m)))
                     for k in range(d + 1)]
    return {
        "m": f.m,
        "degree": d,
        "N": pad(f.N),
        "D": pad(f.D),
        "derotation": None if f.derotation is None else encode_complex(f.derotation),
        "interp_omegas": list(f.interp_omegas),
    }


def filter_from_json(obj) -> AllPassFilter:
    obj = _load(obj)
    try:
        m = int(obj["m"])
        N = MatrixPolynomial([_matrix(c, m, "N coefficient") for c in obj["N"]])
        D = MatrixPolynomial([_matrix(c, m, "D coefficient") for c in obj["D"]])
        rot = obj.get("derotation")
        C = None if rot is None else _matrix(rot, m, "derotation")
        omegas = tuple(float(w) for w in obj.get("interp_omegas", ()))
    except (KeyError, TypeError, ValueError, DimensionMismatch) as exc:
        raise FormatError(f"malformed filter document: {exc}") from exc
    if not obj["N"] or not obj["D"]:
        raise FormatError("filter needs at least one coefficient in N and D")
    return AllPassFilter(N, D, omegas, C)


def save_filter(f, path=None):
    return _dump(filter_to_json(f), path)


def load_filter(path_or_obj):
    return filter_from_json(path_or_obj)


# group-delay optimization


def gd_problem_from_json(obj):
    """``{"omegas": [...], "As": [matrix, ...]}`` to arrays."""
    obj = _load(obj)
    try:
        omegas = np.asarray(obj["omegas"], dtype=float)
        As = np.stack([decode_complex(a) for a in obj["As"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"group-delay problem needs 'omegas' and 'As': {exc}") from exc
    if As.ndim != 3 or As.shape[1] != As.shape[2] or len(As) != len(omegas):
        raise FormatError("As must be a list of square matrices, one per omega")
    return omegas, As


def gamma_assignment_to_json(ga: GammaAssignment):
    return {
        "gammas": [encode_complex(g) for g in ga.gammas],
        "achieved_trace": ga.achieved_trace,
        "pd_witness": ga.pd_witness,
        "converged": ga.converged,
    }


def gamma_assignment_from_json(obj) -> GammaAssignment:
    obj = _load(obj)
    return GammaAssignment(
        [decode_complex(g) for g in obj["gammas"]],
        float(obj["achieved_trace"]),
        float(obj["pd_witness"]),
        bool(obj.get("converged", True)),
    )


def pick_to_json(P: PickMatrix):
    return {"m": P.m, "n": P.n, "P": encode_complex(P.P)}


# signals


def signal_to_csv(x, path, t=None):
    """Write a (T, m) complex signal as ``t, re(x_1), im(x_1), ...`` rows.

    ``path`` may also be an open text stream.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1:
        x = x[:, None]
    t = np.arange(len(x)) if t is None else np.asarray(t)
    m = x.shape[1]
    header = ["t"] + [f"{p}(x_{k + 1})" for k in range(m) for p in ("re", "im")]
    fh = path if hasattr(path, "write") else open(path, "w", newline="")
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for ti, row in zip(t, x):
            vals = [f"{ti}"]
            for v in row:
                vals += [f"{v.real:.16e}", f"{v.imag:.16e}"]
            w.writerow(vals)
    finally:
        if fh is not path:
            fh.close()


def signal_from_csv(path):
    """Read a signal CSV; returns ``(t, x)`` with ``x`` of shape (T, m).

    A header row is optional.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    if not rows:
        raise FormatError("signal file has no samples")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise FormatError(f"non-numeric signal entry: {exc}") from exc
    if data.ndim != 2 or data.shape[1] < 3 or (data.shape[1] - 1) % 2:
        raise FormatError("signal rows must be t followed by re/im pairs")
    x = data[:, 1::2] + 1j * data[:, 2::2]
    return data[:, 0], x


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


# comparison reports


def report_to_csv(report, path):
    """One row per grid frequency, method and metric: mean and median over seeds."""
    curves = report.curves
    points = set(int(i) for i in report.point_index)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "method", "metric", "mean", "median", "is_point"])
        for method, per in curves.items():
            for metric, c in per.items():
                for k, omega in enumerate(report.grid):
                    mean = c["mean"][k] if len(c["mean"]) else float("nan")
                    med = c["median"][k] if len(c["median"]) else float("nan")
                    w.writerow([f"{omega:.16e}", method, metric, f"{mean:.16e}", f"{med:.16e}", int(k in points)])


def report_summary_json(report, path=None):
    return _dump(report.summary(), path)


def load_json(path):
    return _load(path)

"""Versioned plain-text model files.

Layout: a magic line, key/value header, one CSV row of (z, m, n, o) per
anchor point, and an optional CORRUPTION section of index,value pairs.
Floats are written with full-precision repr so a load reproduces the
saved model bit for bit.
"""

import numpy as np

from .kernels import KernelSpec
from .spr import SemiParamModel

__all__ = ["MAGIC", "save_model", "load_model"]

MAGIC = "RESPIRE-MODEL v1"
_HEADER_KEYS = ("family", "length_scale", "lambda", "z_min", "z_max", "n")


def save_model(model: SemiParamModel, path: str, corruption=None):
    """Write a model (and optionally a target-correction vector) to disk.

    ``corruption`` is stored as the additive correction that was
    subtracted from the raw targets when the model was fit; readers can
    rebuild the fit targets as ``y - corruption`` with no further scaling.
    """
    zmin, zmax = model.norm_params
    n = model.z_train.shape[0]
    lines = [
        MAGIC,
        f"family: {model.kernel.family}",
        f"length_scale: {repr(model.kernel.length_scale)}",
        f"lambda: {repr(model.lam)}",
        f"z_min: {repr(zmin)}",
        f"z_max: {repr(zmax)}",
        f"n: {n}",
        "z,m,n,o",
    ]
    for i in range(n):
        lines.append(",".join(repr(float(v)) for v in
                              (model.z_train[i], model.m[i], model.n[i], model.o[i])))
    if corruption is not None:
        corruption = np.asarray(corruption, dtype=float)
        if corruption.shape != (n,):
            raise ValueError(f"corruption must have shape ({n},), got {corruption.shape}")
        lines.append("CORRUPTION")
        for i in np.nonzero(corruption)[0]:
            lines.append(f"{int(i)},{repr(float(corruption[i]))}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _fail(path, lineno, msg):
    raise ValueError(f"{path}:{lineno}: {msg}")


def load_model(path: str):
    """Read a model file; returns (model, corruption-or-None)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MAGIC:
        got = lines[0] if lines else "<empty file>"
        _fail(path, 1, f"bad magic line {got!r}, expected {MAGIC!r}")

    header = {}
    lineno = 1
    for key in _HEADER_KEYS:
        lineno += 1
        if lineno > len(lines):
            _fail(path, lineno, f"missing header line for {key!r}")
        line = lines[lineno - 1]
        prefix = f"{key}: "
        if not line.startswith(prefix):
            _fail(path, lineno, f"expected {key!r} header, got {line!r}")
        header[key] = line[len(prefix):]

    try:
        n = int(header["n"])
        spec = KernelSpec(header["family"], float(header["length_scale"]))
        lam = float(header["lambda"])
        zmin = float(header["z_min"])
        zmax = float(header["z_max"])
    except ValueError as exc:
        _fail(path, lineno, f"bad header value ({exc})")

    lineno += 1
    if lineno > len(lines) or lines[lineno - 1] != "z,m,n,o":
        _fail(path, lineno, "expected column line 'z,m,n,o'")

    z = np.empty(n)
    m = np.empty(n)
    nn = np.empty(n)
    o = np.empty(n)
    for i in range(n):
        lineno += 1
        if lineno > len(lines):
            _fail(path, lineno, f"expected {n} coefficient rows, file ended at {i}")
        parts = lines[lineno - 1].split(",")
        if len(parts) != 4:
            _fail(path, lineno, f"expected 4 comma-separated values, got {len(parts)}")
        try:
            z[i], m[i], nn[i], o[i] = (float(p) for p in parts)
        except ValueError:
            _fail(path, lineno, f"unparseable coefficient row {lines[lineno - 1]!r}")

    corruption = None
    if lineno < len(lines) and lines[lineno] == "CORRUPTION":
        lineno += 1
        corruption = np.zeros(n)
        for line in lines[lineno:]:
            lineno += 1
            if line == "":
                continue
            parts = line.split(",")
            if len(parts) != 2:
                _fail(path, lineno, f"expected 'index,value' pair, got {line!r}")
            try:
                idx = int(parts[0])
                val = float(parts[1])
            except ValueError:
                _fail(path, lineno, f"unparseable corruption entry {line!r}")
            if not 0 <= idx < n:
                _fail(path, lineno, f"corruption index {idx} out of range [0, {n})")
            corruption[idx] = val
    elif lineno < len(lines):
        trailing = [ln for ln in lines[lineno:] if ln.strip()]
        if trailing:
            _fail(path, lineno + 1, f"unexpected trailing content {trailing[0]!r}")

    model = SemiParamModel(kernel=spec, lam=lam, z_train=z, m=m, n=nn, o=o,
                           norm_params=(zmin, zmax))
    return model, corruption

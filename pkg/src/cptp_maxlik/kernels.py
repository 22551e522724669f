"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``CPTP_MAXLIK_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the numpy fallback is used. ``BACKEND`` names the
active choice.
"""

import os

from . import _pykernels

_forced = os.environ.get("CPTP_MAXLIK_PURE_PYTHON", "") not in ("", "0")

if _forced:
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"


def get_backend(name=None):
    """Return the kernel module for ``name`` ("compiled" or "python"), default active."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _supports(d, dim_h=1):
    return _impl is _pykernels or (d <= _impl.MAX_DIM and dim_h <= _impl.MAX_DIM_H)


def _pick(d, dim_h=1):
    return _impl if _supports(d, dim_h) else _pykernels


def cell_probabilities(S, effects):
    return _impl.cell_probabilities(S, effects)


def log_likelihood(S, effects, counts, pmin):
    return _impl.log_likelihood(S, effects, counts, pmin)


def r_matrix(S, effects, counts, pmin):
    return _impl.r_matrix(S, effects, counts, pmin)


def factor_from_params(params, d):
    return _pick(d).factor_from_params(params, d)


def gram_from_params(params, d):
    return _pick(d).gram_from_params(params, d)


def retract_gram(S0, dim_h, dim_k):
    return _pick(dim_h * dim_k, dim_h).retract_gram(S0, dim_h, dim_k)


def neg_loglik_loose(params, effects, counts, dim_h, dim_k, pmin):
    return _pick(dim_h * dim_k).neg_loglik_loose(params, effects, counts, dim_h, dim_k, pmin)


def neg_loglik_retracted(params, effects, counts, dim_h, dim_k, pmin):
    return _pick(dim_h * dim_k, dim_h).neg_loglik_retracted(
        params, effects, counts, dim_h, dim_k, pmin
    )

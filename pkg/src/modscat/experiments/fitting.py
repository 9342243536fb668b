import numpy as np


def fit_decay_rate(t, y, window=None):
    """Least-squares slope of ``log y`` against ``log t``; returns ``(alpha, prefactor)``
    for ``y ~ prefactor * t^{-alpha}``.

    ``window`` defaults to ``[T/4, T]`` with ``T = max(t)``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    T = t.max()
    lo, hi = (T / 4.0, T) if window is None else window
    sel = (t >= lo) & (t <= hi) & (y > 0)
    if sel.sum() < 2:
        raise ValueError("fewer than two points in the fitting window")
    slope, icpt = np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)
    return float(-slope), float(np.exp(icpt))

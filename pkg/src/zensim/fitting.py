"""Least-squares fit models shared by the experiment drivers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit


@dataclass(frozen=True)
class FitResult:
    """Point estimates with 68% confidence intervals from the residual covariance."""

    model: str
    params: dict[str, float]
    ci68: dict[str, float]
    residual_norm: float
    ok: bool = True
    message: str = ""

    def __getitem__(self, key: str) -> float:
        return self.params[key]


def _exp_decay(t, a, tau, c):
    return a * np.exp(-t / tau) + c


def _gaussian_decay(t, a, tau, c):
    return a * np.exp(-((t / tau) ** 2)) + c


def _cosine(t, a, omega, phi, c):
    return a * np.cos(omega * t + phi) + c


def _cos_gaussian(t, a, tau, omega, phi, c):
    return a * np.exp(-((t / tau) ** 2)) * np.cos(omega * t + phi) + c


def _cos_exp(t, a, tau, omega, phi, c):
    return a * np.exp(-t / tau) * np.cos(omega * t + phi) + c


def _rb_decay(m, p0, d):
    return 0.5 + p0 * d**m


def _detuned_rabi(delta, c0, j0, delta0):
    return c0 * j0**2 / (j0**2 + (delta - delta0) ** 2)


MODELS = {
    "exp-decay": (_exp_decay, ("a", "tau", "c")),
    "gaussian-decay": (_gaussian_decay, ("a", "tau", "c")),
    "cosine": (_cosine, ("a", "omega", "phi", "c")),
    "cos-gaussian": (_cos_gaussian, ("a", "tau", "omega", "phi", "c")),
    "cos-exp": (_cos_exp, ("a", "tau", "omega", "phi", "c")),
    "rb-decay": (_rb_decay, ("p0", "d")),
    "detuned-rabi": (_detuned_rabi, ("c0", "j0", "delta0")),
}


def _dominant_frequency(t: np.ndarray, y: np.ndarray) -> float:
    """FFT-based initial guess for oscillation fits (uniform grids)."""
    if len(t) < 4:
        return 1.0
    dt = np.median(np.diff(t))
    yf = np.fft.rfft(y - y.mean())
    freqs = np.fft.rfftfreq(len(t), dt)
    idx = int(np.argmax(np.abs(yf[1:]))) + 1
    return float(2.0 * np.pi * freqs[idx]) if freqs[idx] > 0 else 1.0


def _default_p0(model: str, t: np.ndarray, y: np.ndarray) -> list[float]:
    span = float(t.max() - t.min()) or 1.0
    amp = float((y.max() - y.min()) / 2.0) or 0.5
    if model == "exp-decay":
        return [amp * 2, span / 2, float(y.min())]
    if model == "gaussian-decay":
        return [amp * 2, span / 2, float(y.min())]
    if model == "cosine":
        return [amp, _dominant_frequency(t, y), 0.0, float(y.mean())]
    if model in ("cos-gaussian", "cos-exp"):
        return [amp, span, _dominant_frequency(t, y), 0.0, float(y.mean())]
    if model == "rb-decay":
        return [0.5, 0.999]
    if model == "detuned-rabi":
        return [float(y.max()), span / 4, float(t[np.argmax(y)])]
    raise ValueError(f"unknown model {model!r}")


def fit(
    model: str,
    t: np.ndarray,
    y: np.ndarray,
    sigma: np.ndarray | None = None,
    p0: list[float] | None = None,
) -> FitResult:
    """Least-squares fit of a named model; never silently substitutes values.

    Non-convergence is reported through ``ok=False`` with diagnostics in
    ``message``; params then hold the best attempt (or nan).
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; available: {sorted(MODELS)}")
    func, names = MODELS[model]
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 3 * len(names):
        raise ValueError(
            f"{model} has {len(names)} parameters; need >= {3 * len(names)} points, "
            f"got {len(t)}"
        )
    guess = p0 if p0 is not None else _default_p0(model, t, y)
    use_sigma = None
    if sigma is not None:
        s = np.asarray(sigma, dtype=float)
        if np.all(s > 0):
            use_sigma = s
    try:
        popt, pcov = curve_fit(
            func, t, y, p0=guess, sigma=use_sigma, absolute_sigma=use_sigma is not None,
            maxfev=20000,
        )
    except RuntimeError as exc:
        nan = float("nan")
        return FitResult(
            model=model,
            params={n: nan for n in names},
            ci68={n: nan for n in names},
            residual_norm=nan,
            ok=False,
            message=f"fit did not converge: {exc}",
        )
    resid = y - func(t, *popt)
    errs = np.sqrt(np.maximum(np.diag(pcov), 0.0))
    return FitResult(
        model=model,
        params={n: float(v) for n, v in zip(names, popt)},
        ci68={n: float(e) for n, e in zip(names, errs)},
        residual_norm=float(np.linalg.norm(resid)),
    )


def r_squared(y: np.ndarray, y_model: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - y_model) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

"""Multi-peak waveform fitting and density-matrix extraction.

Each pulse is modelled as

    A * ( exp(-(x - x0)^2 / (2 sigma^2))
          + R * exp(-(x - x0)/tau1) / (1 + exp(-(x - x0)/tau2)) )

and all peaks of a trace are fitted jointly with a damped Gauss-Newton
(Levenberg-Marquardt) iteration on a forward-difference Jacobian.
Internally the fit works on ``log sigma``, ``log tau1`` and the log of the
left-side rate ``1/tau2 - 1/tau1`` (so ``tau2 < tau1`` and the tail decays on
both sides); ``x0``, ``A`` and ``R`` are used as they are. Every parameter
except ``A`` lives in a box: centres within a few initial widths of their
grid position, ``sigma`` within a factor 4 of its start, decay constants of
at least a few samples, ``0 <= R <= R_MAX``. A peak whose amplitude is at
noise level otherwise has no identifiable shape and its parameters drift
without bound. Parameters pressed against the box are held for the step.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .protocols import DmEstimate
from .pulselab import FWHM_TO_SIGMA, Waveform

__all__ = [
    "PeakModel",
    "MultiPeakFit",
    "ExtractionResult",
    "FitError",
    "peak_eval",
    "multipeak_eval",
    "grid_init",
    "fit_multipeak",
    "forward_jacobian",
    "extract_density",
    "perturb",
]

MAX_ITERATIONS = 500
REL_DECREASE_TOL = 1e-10
GRAD_TOL = 1e-8
_N_PARAMS = 6
# box for the log parameters (sigma ps, tau1 ps, left rate 1/ps); tails
# narrower than a few ps would fit single noise samples
_LOG_LO = np.array([np.log(1.0), np.log(5.0), np.log(1e-5)])
_LOG_HI = np.array([np.log(5e3), np.log(5e4), np.log(0.5)])
X0_REACH = 4.0  # initial sigmas
R_MAX = 9.0


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class PeakModel:
    x0: float
    sigma: float
    tau1: float = 50.0
    tau2: float = 10.0
    A: float = 1.0
    R: float = 0.0

    def __post_init__(self):
        if min(self.sigma, self.tau1, self.tau2) <= 0:
            raise ValueError("sigma, tau1 and tau2 must be positive")
        if self.R < 0:
            raise ValueError("tail ratio R must be non-negative")


@dataclass(frozen=True)
class MultiPeakFit:
    peaks: list
    residual_norm: float
    converged: bool
    iterations: int
    gradient_norm: float = 0.0
    message: str = ""

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.A for p in self.peaks])


@dataclass(frozen=True)
class ExtractionResult:
    A0: float
    A1: float
    A2: float
    A01: dict
    A12: dict
    A02: dict
    rho: DmEstimate
    diagonal: np.ndarray = field(repr=False, default=None)
    shifted: dict = field(repr=False, default=None)

    @property
    def normalization(self) -> float:
        return float(np.sum(self.diagonal))


def _shape(x, x0, sigma, tau1, tau2, R):
    u = np.asarray(x, dtype=float) - x0
    gauss = np.exp(-0.5 * (u / sigma) ** 2)
    if R == 0:
        return gauss
    # log-space keeps exp(-u/tau1) from overflowing far left of the peak
    log_tail = -u / tau1 - np.logaddexp(0.0, -u / tau2)
    return gauss + R * np.exp(np.minimum(log_tail, 700.0))


def peak_eval(m: PeakModel, x):
    return m.A * _shape(x, m.x0, m.sigma, m.tau1, m.tau2, m.R)


def multipeak_eval(peaks, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for p in peaks:
        total += peak_eval(p, x)
    return total


def _taus(lt1, lrate):
    tau1 = np.exp(lt1)
    return tau1, 1.0 / (1.0 / tau1 + np.exp(lrate))


def _pack(peaks) -> np.ndarray:
    rows = []
    for p in peaks:
        if not p.tau2 < p.tau1:
            raise ValueError("initial peaks need tau2 < tau1")
        rows.append([p.x0, np.log(p.sigma), np.log(p.tau1), np.log(1 / p.tau2 - 1 / p.tau1),
                     p.A, p.R])
    th = np.array(rows, dtype=float)
    th[:, 1:4] = np.clip(th[:, 1:4], _LOG_LO, _LOG_HI)
    return th.ravel()


def _box(peaks):
    """Per-parameter bounds: centres stay near their initial grid position
    (a vanished peak must not wander onto its neighbour), log parameters in
    the fixed box, and ``R <= R_MAX``."""
    lo, hi = [], []
    for p in peaks:
        reach = X0_REACH * p.sigma
        lo.append([p.x0 - reach, np.log(p.sigma / 4), *_LOG_LO[1:], -np.inf, 0.0])
        hi.append([p.x0 + reach, np.log(p.sigma * 4), *_LOG_HI[1:], np.inf, R_MAX])
    return np.ravel(lo), np.ravel(hi)


def _unpack(theta):
    out = []
    for x0, ls, lt1, lrate, a, r in np.asarray(theta, dtype=float).reshape(-1, _N_PARAMS):
        tau1, tau2 = _taus(lt1, lrate)
        out.append(PeakModel(x0=x0, sigma=np.exp(ls), tau1=tau1, tau2=tau2, A=a, R=max(r, 0.0)))
    return out


def _model(theta, x):
    total = np.zeros_like(x)
    for x0, ls, lt1, lrate, a, r in np.asarray(theta, dtype=float).reshape(-1, _N_PARAMS):
        tau1, tau2 = _taus(lt1, lrate)
        total += a * _shape(x, x0, np.exp(ls), tau1, tau2, r)
    return total


def _pinned(theta, grad, lo, hi):
    """Parameters sitting on a bound with the descent direction pointing out."""
    return ((theta <= lo) & (grad > 0)) | ((theta >= hi) & (grad < 0))


def forward_jacobian(fun, theta, f0=None):
    """Forward-difference Jacobian of ``fun`` at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    f0 = fun(theta) if f0 is None else f0
    jac = np.empty((f0.size, theta.size))
    base = np.sqrt(np.finfo(float).eps)
    for j in range(theta.size):
        h = base * max(abs(theta[j]), 1.0)
        step = theta.copy()
        step[j] += h
        h = step[j] - theta[j]
        jac[:, j] = (fun(step) - f0) / h
    return jac


def grid_init(wave: Waveform, centers, width, R=0.05, tau1=50.0, tau2=10.0):
    """Initial peaks on a known time grid, amplitude read off the trace."""
    y = np.asarray(wave.samples, dtype=float)
    peaks = []
    for c in centers:
        idx = int(np.clip(np.rint((c - wave.t0) / wave.dt), 0, y.size - 1))
        peaks.append(PeakModel(x0=float(c), sigma=width * FWHM_TO_SIGMA, tau1=tau1, tau2=tau2,
                               A=float(y[idx]), R=R))
    return peaks


def _peak_term(row, x):
    x0, ls, lt1, lrate, a, r = row
    tau1, tau2 = _taus(lt1, lrate)
    return a * _shape(x, x0, np.exp(ls), tau1, tau2, r)


def _blockwise_jacobian(theta, x, terms):
    """Forward differences, re-evaluating only the peak a parameter belongs to."""
    th = theta.reshape(-1, _N_PARAMS)
    jac = np.empty((x.size, theta.size))
    base = np.sqrt(np.finfo(float).eps)
    for p, row in enumerate(th):
        for q in range(_N_PARAMS):
            h = base * max(abs(row[q]), 1.0)
            step = row.copy()
            step[q] += h
            h = step[q] - row[q]
            jac[:, p * _N_PARAMS + q] = (_peak_term(step, x) - terms[p]) / h
    return jac


def fit_multipeak(wave: Waveform, n_peaks, init, max_iter=MAX_ITERATIONS) -> MultiPeakFit:
    """Jointly fit ``n_peaks`` peaks to an intensity trace.

    Levenberg-Marquardt with MINPACK-style scaling (running maximum of the
    Jacobian column norms) and Nielsen's damping update. Converges when the
    relative decrease of the squared residual on an accepted step drops
    below 1e-10 or the gradient infinity-norm below 1e-8 (components
    pressing against the parameter box are held fixed for that step and
    ignored by the gradient test). Hitting the iteration
    cap, or damping growing without an acceptable step, returns a result
    flagged ``converged=False`` rather than raising.
    """
    if n_peaks < 1 or len(init) != n_peaks:
        raise ValueError(f"need {n_peaks} initial peaks, got {len(init)}")
    if np.iscomplexobj(wave.samples):
        raise ValueError("fit an intensity waveform, not a complex field")
    x = wave.times
    y = np.asarray(wave.samples, dtype=float)

    def evaluate(th):
        terms = [_peak_term(row, x) for row in th.reshape(-1, _N_PARAMS)]
        return terms, np.sum(terms, axis=0) - y

    theta = _pack(init)
    lo, hi = _box(init)
    theta = np.clip(theta, lo, hi)
    terms, r = evaluate(theta)
    cost = 0.5 * float(r @ r)
    lam = None
    nu = 2.0
    scale = None
    gnorm = np.inf
    message = "iteration cap reached"
    converged = False
    it = 0
    tiny_cost = 1e-30 * max(1.0, float(y @ y))
    while it < max_iter:
        it += 1
        jac = _blockwise_jacobian(theta, x, terms)
        grad = jac.T @ r
        free = ~_pinned(theta, grad, lo, hi)
        gnorm = float(np.max(np.abs(grad[free]), initial=0.0))
        if gnorm < GRAD_TOL or cost <= tiny_cost:
            converged, message = True, "gradient below tolerance"
            break
        jac = jac[:, free]
        grad = grad[free]
        jtj = jac.T @ jac
        col = np.diag(jtj)
        if scale is None:
            scale = np.zeros(theta.size)
        scale[free] = np.maximum(scale[free], col)
        diag = np.maximum(scale[free], 1e-12 * scale.max())
        if lam is None:
            lam = 1e-3
        accepted = False
        while lam < 1e16:
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= nu
                nu *= 2.0
                continue
            trial = theta.copy()
            trial[free] += delta
            trial = np.clip(trial, lo, hi)
            terms_new, r_new = evaluate(trial)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                accepted = True
                break
            lam *= nu
            nu *= 2.0
        if not accepted:
            message = "damping escalated without an improving step"
            break
        # predicted decrease of the unclipped step; the gain ratio only tunes damping
        predicted = -float(grad @ delta) - 0.5 * float(delta @ jtj @ delta)
        gain = (cost - cost_new) / predicted if predicted > 0 else 0.0
        rel = (cost - cost_new) / cost
        theta, terms, r, cost = trial, terms_new, r_new, cost_new
        lam = max(lam * max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3), 1e-12)
        nu = 2.0
        if rel < REL_DECREASE_TOL:
            converged, message = True, "relative decrease below tolerance"
            break
    return MultiPeakFit(_unpack(theta), float(np.sqrt(2.0 * cost)), converged, it, gnorm, message)


def extract_density(no_amzi: MultiPeakFit, shifted: dict) -> ExtractionResult:
    """Build the density matrix from fitted peak amplitudes.

    ``no_amzi`` is the d-peak fit of the plain train. ``shifted`` maps a
    shift ``m`` (delay in periods) to ``{phase: fit}`` for phases 0, 90, 180
    and 270; the (d+m)-peak trace gives ``rho[i, i+m]`` from peak ``i+m`` as
    ``[A(0)-A(180)] + 1j [A(90)-A(270)]`` over the diagonal sum. Elements
    below the diagonal are the conjugates.
    """
    fits = [("no-AMZI", no_amzi)] + [(f"shift {m}, phase {ph}", f)
                                     for m, per in sorted(shifted.items())
                                     for ph, f in sorted(per.items())]
    for name, f in fits:
        if not f.converged:
            raise FitError(f"fit '{name}' did not converge: {f.message}")
    diag = no_amzi.amplitudes
    d = diag.size
    total = float(np.sum(diag))
    if not total > 0:
        raise FitError(f"normalization A = {total:.6g} is not positive")

    rho = np.diag(diag / total).astype(np.complex128)
    picked = {}
    for m, per in shifted.items():
        if not 1 <= m < d:
            raise FitError(f"shift {m} out of range for a {d}-pulse train")
        missing = {0, 90, 180, 270} - set(per)
        if missing:
            raise FitError(f"shift {m} lacks phases {sorted(missing)}")
        for ph, f in per.items():
            if len(f.peaks) != d + m:
                raise FitError(f"shift {m} fit has {len(f.peaks)} peaks, expected {d + m}")
        picked[m] = {}
        for i in range(d - m):
            amp = {ph: per[ph].peaks[i + m].A for ph in (0, 90, 180, 270)}
            picked[m][i] = amp
            val = complex(amp[0] - amp[180], amp[90] - amp[270]) / total
            rho[i, i + m] = val
            rho[i + m, i] = val.conjugate()

    zeros = np.zeros((d, d))
    est = DmEstimate(d, rho, zeros, zeros.copy(), "shift", 0, "state")

    def series(m, i):
        return dict(picked.get(m, {}).get(i, {}))

    return ExtractionResult(
        A0=float(diag[0]) if d > 0 else 0.0,
        A1=float(diag[1]) if d > 1 else 0.0,
        A2=float(diag[2]) if d > 2 else 0.0,
        A01=series(1, 0), A12=series(1, 1), A02=series(2, 0),
        rho=est, diagonal=diag.copy(), shifted=picked,
    )


def perturb(peaks, rng, dx=10.0, damp=0.2):
    """Shift centres by up to ``dx`` and scale amplitudes by up to ``damp``."""
    return [replace(p, x0=p.x0 + rng.uniform(-dx, dx), A=p.A * (1 + rng.uniform(-damp, damp)))
            for p in peaks]

"""
Explicit Runge-Kutta integration of every system form, plus invariant
monitoring along the computed trajectory.

No structure-preserving scheme is used: the bracket of the two-system is
degenerate and non-canonical, so conserved quantities are monitored rather
than enforced.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import dynamics as dyn
from .dynamics import MultiVectorState, TwoState, VectorFormState
from .poisson import bracket_rhs, casimirs, extended_energy
from .structure import (
    from_upper_triangle,
    signature_series,
    sp_residual,
    split_sym_antisym,
    upper_triangle,
)
from .model import standard_j

__all__ = [
    "FORMS",
    "IntegrationError",
    "StepUnderflowError",
    "NonFiniteStateError",
    "IntegratorConfig",
    "Trajectory",
    "InvariantReport",
    "integrate",
    "integrate_array",
    "rk4",
    "dopri5",
    "invariant_report",
    "sorted_spectrum",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_report_json",
]

FORMS = ("base", "variational", "vector", "two", "bracket", "multivector")


class IntegrationError(RuntimeError):
    pass


class StepUnderflowError(IntegrationError):
    pass


class NonFiniteStateError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Integrator settings.

    ``method`` is ``"rk4"`` (fixed step ``step``, shortened so that an
    integer number of steps lands on ``t_end``) or ``"adaptive"``
    (Dormand-Prince 5(4) with tolerances ``rtol``/``atol``).
    """

    method: str = "adaptive"
    t_end: float = 1.0
    step: float = 1e-3
    rtol: float = 1e-10
    atol: float = 1e-12
    sample_stride: int = 1
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 5.0

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.step <= 0 or self.rtol <= 0 or self.atol <= 0:
            raise ValueError("step and tolerances must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    form: str
    n_steps: int = 0
    n_rejected: int = 0

    def __len__(self):
        return len(self.times)

    @property
    def x(self):
        """Phase-vector samples, shape ``(len, 2n)``."""
        return np.array([s if self.form == "base" else s.x for s in self.states])

    def moments(self):
        """Moment matrices ``M`` per sample, or ``None`` for base/variational."""
        if self.form in ("two", "bracket", "multivector"):
            return np.array([s.M for s in self.states])
        if self.form == "vector":
            return np.array([np.outer(s.y, s.y) for s in self.states])
        return None


# ---------------------------------------------------------------------------
# generic explicit stepping


def _check_finite(y, t):
    if not np.isfinite(y).all():
        raise NonFiniteStateError(f"non-finite state at t={t:.6g}")


def rk4(f, y0, t_end, step, sample_stride=1):
    """Classical fourth-order Runge-Kutta with a fixed step."""
    y = np.array(y0, dtype=float)
    ts, ys = [0.0], [y.copy()]
    if t_end == 0:
        return np.array(ts), ys, 0, 0
    nsteps = max(1, math.ceil(t_end / step - 1e-12))
    h = t_end / nsteps
    for i in range(1, nsteps + 1):
        t = (i - 1) * h
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(y, t + h)
        if i % sample_stride == 0 or i == nsteps:
            ts.append(i * h if i < nsteps else t_end)
            ys.append(y.copy())
    return np.array(ts), ys, nsteps, 0


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.zeros(0),
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_A = [np.asarray(row) for row in _A]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B - _B_LOW


def _err_norm(err, y, ynew, rtol, atol):
    if not err.size:
        return 0.0
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
    return float((np.abs(err) / scale).max())


def _initial_step(f, y, f0, t_end, rtol, atol):
    # Hairer, Norsett & Wanner, starting step selection
    scale = atol + rtol * np.abs(y)
    d0 = np.max(np.abs(y) / scale) if y.size else 0.0
    d1 = np.max(np.abs(f0) / scale) if y.size else 0.0
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end)
    f1 = f(y + h0 * f0)
    d2 = (np.max(np.abs(f1 - f0) / scale) if y.size else 0.0) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_end)


def dopri5(f, y0, t_end, rtol, atol, sample_stride=1, safety=0.9,
           min_factor=0.2, max_factor=5.0):
    """
    Dormand-Prince 5(4) with proportional step control.

    The local error is measured in the max norm scaled by
    ``atol + rtol * |y|``. Samples are taken every ``sample_stride`` accepted
    steps and at ``t_end``.
    """
    y = np.array(y0, dtype=float)
    ts, ys = [0.0], [y.copy()]
    if t_end == 0:
        return np.array(ts), ys, 0, 0
    t = 0.0
    K = np.empty((7,) + y.shape)
    K[0] = f(y)
    h = _initial_step(f, y, K[0], t_end, rtol, atol)
    hmin = 1e-14 * t_end
    accepted = rejected = 0
    while t < t_end:
        last = t + h >= t_end * (1 - 1e-15)
        if last:
            h = t_end - t
        for i in range(1, 7):
            yi = y + h * (_A[i] @ K[:i])
            K[i] = f(yi)
        ynew = yi  # stage 7 evaluates at the 5th-order solution (FSAL)
        en = _err_norm(h * (_E @ K), y, ynew, rtol, atol)
        if not math.isfinite(en):
            en = math.inf
        if en <= 1.0:
            t = t_end if last else t + h
            y = ynew
            _check_finite(y, t)
            K[0] = K[6]
            accepted += 1
            if accepted % sample_stride == 0 or last:
                ts.append(t)
                ys.append(y)
            factor = max_factor if en == 0 else safety * en ** -0.2
            h *= min(max_factor, max(min_factor, factor))
        else:
            rejected += 1
            factor = 0.0 if en == math.inf else safety * en ** -0.2
            h *= max(min_factor, factor)
        if h < hmin and t < t_end:
            raise StepUnderflowError(f"step {h:.3e} below {hmin:.3e} at t={t:.6g}")
    if ts[-1] != t_end:
        ts.append(t_end)
        ys.append(y.copy())
    return np.array(ts), ys, accepted, rejected


# ---------------------------------------------------------------------------
# form plumbing


def _packers(model, form, state):
    d = model.dim
    if form == "base":
        return (lambda s: np.asarray(s, dtype=float),
                lambda a: a,
                lambda a: dyn.base_rhs(model, a))
    if form in ("vector", "variational"):
        rhs = dyn.vector_form_rhs if form == "vector" else dyn.naive_union_rhs

        def f(a):
            out = rhs(model, VectorFormState(a[:d], a[d:]))
            return np.concatenate([out.x, out.y])

        return (lambda s: np.concatenate([s.x, s.y]),
                lambda a: VectorFormState(a[:d].copy(), a[d:].copy()),
                f)
    if form in ("two", "bracket"):
        if form == "two":
            def f(a):
                xdot, phidot = dyn.two_system_arrays(model, a[:d], a[d:].reshape(d, d))
                return np.concatenate([xdot, phidot.ravel()])
        else:
            def f(a):
                out = bracket_rhs(model, TwoState(a[:d], a[d:].reshape(d, d)))
                return np.concatenate([out.x, out.phi.ravel()])

        return (lambda s: np.concatenate([s.x, s.phi.ravel()]),
                lambda a: TwoState(a[:d].copy(), a[d:].reshape(d, d).copy()),
                f)
    if form == "multivector":
        mp, mm = len(state.ys), len(state.zs)

        def unpack(a):
            vecs = a[d:].reshape(-1, d)
            return MultiVectorState(a[:d].copy(), vecs[:mp].copy(), vecs[mp:].copy())

        def f(a):
            out = dyn.multivector_rhs(model, unpack(a))
            return np.concatenate([out.x, out.ys.ravel(), out.zs.ravel()])

        return (lambda s: np.concatenate([s.x, s.ys.ravel(), s.zs.ravel()]),
                unpack, f)
    raise ValueError(f"unknown form {form!r}; expected one of {FORMS}")


def _check_state(model, form, state):
    if form == "base":
        if np.shape(state) != (model.dim,):
            raise ValueError("base form needs a phase vector of length 2n")
        return
    expected = {
        "vector": VectorFormState,
        "variational": VectorFormState,
        "two": TwoState,
        "bracket": TwoState,
        "multivector": MultiVectorState,
    }[form]
    if not isinstance(state, expected):
        raise TypeError(f"form {form!r} needs a {expected.__name__}")
    if state.x.shape != (model.dim,):
        raise ValueError("state dimension does not match the model")
    if form in ("two", "bracket"):
        res = sp_residual(state.phi)
        if res > dyn.sp_tolerance(state.phi):
            import warnings

            warnings.warn(
                f"initial Phi is outside sp(2n): residual {res:.3e}",
                dyn.SpResidualWarning,
                stacklevel=3,
            )


def integrate_array(f, y0, cfg):
    """Integrate ``y' = f(y)`` on a flat array; returns ``(t, ys, acc, rej)``."""
    if cfg.method == "rk4":
        return rk4(f, y0, cfg.t_end, cfg.step, cfg.sample_stride)
    return dopri5(f, y0, cfg.t_end, cfg.rtol, cfg.atol, cfg.sample_stride,
                  cfg.safety, cfg.min_factor, cfg.max_factor)


def integrate(model, state, form, cfg, sample_times=None):
    """
    Integrate ``state`` under the named system form.

    Parameters
    ----------
    model : HamiltonianModel
    state : ndarray | VectorFormState | TwoState | MultiVectorState
        Must match ``form``: ``"base"`` takes a phase vector, ``"vector"``
        and ``"variational"`` a :class:`VectorFormState`, ``"two"`` and
        ``"bracket"`` a :class:`TwoState`, ``"multivector"`` a
        :class:`MultiVectorState`.
    form : str
        One of :data:`FORMS`.
    cfg : IntegratorConfig
    sample_times : array_like, optional
        Increasing times starting at 0. When given, the integrator is
        restarted on each interval so that states are recorded exactly at
        these times (``cfg.t_end`` and ``cfg.sample_stride`` are ignored).

    Raises
    ------
    StepUnderflowError
        Adaptive step fell below ``1e-14 * t_end``.
    NonFiniteStateError
        The state became NaN or infinite.
    """
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}; expected one of {FORMS}")
    _check_state(model, form, state)
    pack, unpack, f = _packers(model, form, state)
    if sample_times is None:
        ts, ys, acc, rej = integrate_array(f, pack(state), cfg)
        return Trajectory(ts, [unpack(y) for y in ys], form, acc, rej)
    ts = np.asarray(sample_times, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or ts[0] != 0 or np.any(np.diff(ts) <= 0):
        raise ValueError("sample_times must be strictly increasing and start at 0")
    y = pack(state)
    ys, acc, rej = [y], 0, 0
    for dt in np.diff(ts):
        _, seg, a, r = integrate_array(f, y, replace(cfg, t_end=float(dt), sample_stride=1))
        y = seg[-1]
        ys.append(y)
        acc += a
        rej += r
    return Trajectory(ts, [unpack(y) for y in ys], form, acc, rej)


# ---------------------------------------------------------------------------
# invariants


def _spectrum_key_scale(phi):
    return 1e-7 * max(1.0, float(np.linalg.norm(phi)))


def sorted_spectrum(phi):
    """
    Eigenvalues of ``Phi`` sorted by (real part, imaginary part).

    Real parts are snapped to a grid of ``1e-7 * max(1, |Phi|)`` for the sort
    key only, so rounding noise on a purely imaginary pair cannot reorder it.
    """
    lam = np.linalg.eigvals(phi)
    q = _spectrum_key_scale(phi)
    order = np.lexsort((lam.imag, np.round(lam.real / q)))
    return lam[order]


@dataclass
class InvariantReport:
    """Named invariant series with drift ``max|v(t) - v(0)| / max(1, |v(0)|)``."""

    times: np.ndarray
    series: dict = field(default_factory=dict)
    max_drift: dict = field(default_factory=dict)

    def add(self, name, values):
        values = np.asarray(values)
        self.series[name] = values
        v0 = values[0]
        diff = np.abs(values - v0)
        if values.ndim > 1:
            diff = diff.reshape(len(values), -1).max(axis=1)
            ref = float(np.max(np.abs(v0))) if np.size(v0) else 0.0
        else:
            ref = float(np.abs(v0))
        self.max_drift[name] = float(np.max(diff) / max(1.0, ref)) if len(diff) else 0.0

    def to_json_obj(self):
        out = {}
        for name, vals in self.series.items():
            if np.iscomplexobj(vals):
                vals = np.stack([vals.real, vals.imag], axis=-1)
            out[name] = {"values": vals.tolist(), "max_drift": self.max_drift[name]}
        return out


def invariant_report(model, traj, antisymmetric=None):
    """
    Monitor conserved quantities along ``traj``.

    Two-system and bracket trajectories get the extended energy, each
    Casimir, the sorted spectrum of ``Phi``, the signature of ``M`` (as
    ``[m+, m-, m0]``) and the sp(2n) residual. If the initial ``M`` had an
    antisymmetric part, or ``antisymmetric=True``, the sorted spectrum of
    ``J M_a`` is added; it evolves by a Lax equation of its own.
    Vector and multivector trajectories get the extended energy with the
    composed moment matrix; base and variational trajectories get ``H(x)``.
    """
    rep = InvariantReport(np.asarray(traj.times))
    if traj.form in ("base", "variational"):
        xs = traj.x
        rep.add("energy", [model.value(x) for x in xs])
        return rep
    if traj.form in ("vector", "multivector"):
        Ms = traj.moments()
        rep.add("energy", [extended_energy(model, TwoState.from_moments(x, M))
                           for x, M in zip(traj.x, Ms)])
        return rep
    if traj.form not in ("two", "bracket"):
        raise ValueError(f"unknown form {traj.form!r}")
    n = model.n
    J = standard_j(n)
    energy, cas, spec, spres, anti, syms = [], [], [], [], [], []
    for s in traj.states:
        Msym, Ma = split_sym_antisym(s.M)
        syms.append(Msym)
        energy.append(extended_energy(model, s))
        cas.append(casimirs(s.phi, n))
        spec.append(sorted_spectrum(s.phi))
        spres.append(sp_residual(s.phi))
        anti.append(sorted_spectrum(J @ Ma))
    sig = signature_series(syms)
    rep.add("energy", energy)
    cas = np.array(cas)
    for k in range(n):
        rep.add(f"casimir_{2 * k}", cas[:, k])
    rep.add("spectrum", np.array(spec))
    rep.add("signature", sig.astype(float))
    rep.add("sp_residual", spres)
    if antisymmetric is None:
        antisymmetric = bool(np.any(split_sym_antisym(traj.states[0].M)[1]))
    if antisymmetric:
        rep.add("antisymmetric_spectrum", np.array(anti))
    return rep


# ---------------------------------------------------------------------------
# file formats


def _fmt(v):
    return format(float(v), ".17g")


def trajectory_rows(traj, dim):
    Ms = traj.moments()
    xs = traj.x
    for i, t in enumerate(traj.times):
        row = [t, *xs[i]]
        if Ms is not None:
            row.extend(upper_triangle(0.5 * (Ms[i] + Ms[i].T)))
        elif traj.form == "variational":
            row.extend(traj.states[i].y)
        yield row


def trajectory_header(traj, dim, x_labels=None):
    x_labels = list(x_labels) if x_labels else [f"x{k + 1}" for k in range(dim)]
    header = ["t", *x_labels]
    if traj.moments() is not None:
        header += [f"M{a + 1}{b + 1}" for a, b in zip(*np.triu_indices(dim))]
    elif traj.form == "variational":
        header += [f"y{k + 1}" for k in range(dim)]
    return header


def write_trajectory_csv(traj, path, x_labels=None):
    """
    CSV with header ``t, x1..x2n, M11, M12, ...`` (upper triangle of ``M``);
    values printed with 17 significant digits and ``\\n`` line endings.
    """
    dim = traj.x.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(traj, dim, x_labels))
        for row in trajectory_rows(traj, dim):
            w.writerow([_fmt(v) for v in row])


def read_trajectory_csv(path, n):
    """
    Read a trajectory CSV back as a two-system :class:`Trajectory`.

    Columns are taken by position: time, ``2n`` phase coordinates, then the
    upper triangle of ``M`` (absent columns mean ``M = 0``).
    """
    d = 2 * n
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    data = data.reshape(-1, len(rows[0]))
    nm = d * (d + 1) // 2
    if data.shape[1] not in (1 + d, 1 + d + nm):
        raise ValueError(f"{path}: expected {1 + d} or {1 + d + nm} columns")
    states = []
    for r in data:
        M = from_upper_triangle(r[1 + d:], d) if data.shape[1] > 1 + d else np.zeros((d, d))
        states.append(TwoState.from_moments(r[1:1 + d], M))
    return Trajectory(data[:, 0], states, "two")


def write_report_json(rep, path):
    with open(path, "w") as fh:
        json.dump(rep.to_json_obj(), fh, indent=1)
        fh.write("\n")

"""
Command-line front end.

Subcommands: ``simulate``, ``compare``, ``oracle``, ``example-quartic`` and
``invariants``. Exit codes: 0 success, 1 deviation above tolerance, 2 bad
or missing configuration, 3 integration failure, 4 oracle precondition
unmet, 5 hard-coded and derived right-hand sides disagree.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys

import numpy as np

from .config import ConfigError, load_config
from .dynamics import MultiVectorState, TwoState, VectorFormState, two_system_rhs
from .integrate import (
    IntegrationError,
    IntegratorConfig,
    integrate,
    invariant_report,
    read_trajectory_csv,
    write_report_json,
    write_trajectory_csv,
)
from .model import quartic
from .oracles import (
    ActionAngleModel,
    OraclePreconditionError,
    QuadraticModel,
    action_angle_closed_form,
    action_angle_closed_form_rate,
    action_angle_hamiltonian,
    action_angle_rhs,
    beta_growth,
    check_stationary,
    quadratic_closed_form,
    stationary_point_solution,
)
from .structure import decompose_signature, signature_of

EXIT_OK, EXIT_DEVIATION, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_ORACLE, EXIT_MISMATCH = range(6)

MOMENT_FORMS = ("vector", "two", "bracket", "multivector")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def initial_state(cfg, form, model=None):
    """Initial state for ``form`` built from the config's ``x`` and ``M``."""
    x0 = np.array(cfg.x0, dtype=float)
    d = 2 * cfg.n
    M0 = cfg.initial_moments()
    if form == "base":
        return x0
    if form in ("two", "bracket"):
        return TwoState.from_moments(x0, M0)
    if form == "multivector":
        if cfg.M0 is None:
            return MultiVectorState(x0, np.reshape(cfg.ys, (-1, d)), np.reshape(cfg.zs, (-1, d)))
        ys, zs = decompose_signature(M0)
        return MultiVectorState(x0, ys, zs)
    # vector / variational need a single y with M = y y^T
    if cfg.M0 is None and len(cfg.ys) <= 1 and not cfg.zs:
        y = np.array(cfg.ys[0]) if cfg.ys else np.zeros(d)
        return VectorFormState(x0, y)
    sig = signature_of(M0)
    if sig.m_minus or sig.m_plus > 1:
        raise CliError(
            f"form {form!r} needs M = y y^T (rank <= 1, nonnegative); "
            f"initial M has signature {tuple(sig[:2])}",
            EXIT_CONFIG,
        )
    ys, _ = decompose_signature(M0)
    return VectorFormState(x0, ys[0] if len(ys) else np.zeros(d))


def _run(model, state, form, icfg, times=None):
    try:
        return integrate(model, state, form, icfg, sample_times=times)
    except IntegrationError as exc:
        raise CliError(f"integration failed: {exc}", EXIT_INTEGRATION) from None


def _default_stem(config_path):
    # keyed by content hash so parallel sweeps do not overwrite each other
    with open(config_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()[:12]
    stem = os.path.splitext(os.path.basename(config_path))[0]
    return os.path.join(os.path.dirname(config_path), f"{stem}-{digest}")


def _out(path, config_path, suffix):
    return path or _default_stem(config_path) + suffix


def cmd_simulate(args):
    cfg = load_config(args.config)
    model = cfg.build_model()
    traj = _run(model, initial_state(cfg, cfg.form, model), cfg.form, cfg.integrator)
    csv_path = _out(args.trajectory or cfg.trajectory_path, args.config, ".csv")
    json_path = _out(args.report or cfg.report_path, args.config, ".json")
    write_trajectory_csv(traj, csv_path, cfg.x_labels())
    rep = invariant_report(model, traj)
    write_report_json(rep, json_path)
    print(f"form={cfg.form} samples={len(traj)} steps={traj.n_steps} rejected={traj.n_rejected}")
    for name, drift in rep.max_drift.items():
        print(f"max_drift[{name}] = {drift:.3e}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def compare_forms(cfg, form_a, form_b):
    """
    Integrate two forms from consistent initial data on a common time grid;
    return ``(x_deviation, M_deviation)`` maxima (``M`` is ``nan`` when a form
    carries no moments).
    """
    for f in (form_a, form_b):
        if f not in MOMENT_FORMS and not (form_a == form_b == f):
            raise CliError(
                f"cannot compare {form_a!r} with {form_b!r}; comparable forms: {MOMENT_FORMS}",
                EXIT_CONFIG,
            )
    model = cfg.build_model()
    times = np.linspace(0.0, cfg.integrator.t_end, cfg.samples)
    ta = _run(model, initial_state(cfg, form_a, model), form_a, cfg.integrator, times)
    tb = _run(model, initial_state(cfg, form_b, model), form_b, cfg.integrator, times)
    dx = float(np.max(np.abs(ta.x - tb.x)))
    Ma, Mb = ta.moments(), tb.moments()
    dM = float(np.max(np.abs(Ma - Mb))) if Ma is not None and Mb is not None else float("nan")
    return dx, dM


def cmd_compare(args):
    cfg = load_config(args.config)
    if cfg.compare_form is None:
        raise CliError("run.compare must name the second form", EXIT_CONFIG)
    dx, dM = compare_forms(cfg, cfg.form, cfg.compare_form)
    print(f"{cfg.form} vs {cfg.compare_form}: max x deviation = {dx:.3e}, "
          f"max M deviation = {dM:.3e}, tolerance = {cfg.tolerance:.1e}")
    worst = dx if np.isnan(dM) else max(dx, dM)
    ok = worst <= cfg.tolerance
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_DEVIATION


def oracle_quadratic(cfg):
    model = cfg.build_model()
    if getattr(model, "degree", 3) > 2:
        raise CliError("quadratic oracle needs a polynomial of degree <= 2", EXIT_ORACLE)
    d = 2 * cfg.n
    z = np.zeros(d)
    qm = QuadraticModel(model.hessian(z), model.gradient(z), model.value(z))
    s0 = initial_state(cfg, "two", model)
    times = np.linspace(0.0, cfg.integrator.t_end, cfg.samples)
    traj = _run(model, s0, "two", cfg.integrator, times)
    dev = 0.0
    for t, s in zip(times, traj.states):
        ref = quadratic_closed_form(qm, s0.x, s0.phi, t)
        dev = max(dev, np.max(np.abs(s.x - ref.x)), np.max(np.abs(s.phi - ref.phi)))
    return {"deviation": float(dev)}


def oracle_zero_phi(cfg):
    model = cfg.build_model()
    d = 2 * cfg.n
    x0 = np.array(cfg.x0, dtype=float)
    times = np.linspace(0.0, cfg.integrator.t_end, cfg.samples)
    two = _run(model, TwoState(x0, np.zeros((d, d))), "two", cfg.integrator, times)
    base = _run(model, x0, "base", cfg.integrator, times)
    phi_dev = float(max(np.max(np.abs(s.phi)) for s in two.states))
    return {"phi_deviation": phi_dev,
            "deviation": float(max(phi_dev, np.max(np.abs(two.x - base.x))))}


def oracle_stationary(cfg):
    model = cfg.build_model()
    x0 = np.array(cfg.x0, dtype=float)
    try:
        check_stationary(model, x0)
    except OraclePreconditionError as exc:
        raise CliError(f"stationary-point oracle: {exc}", EXIT_ORACLE) from None
    s0 = initial_state(cfg, "two", model)
    times = np.linspace(0.0, cfg.integrator.t_end, cfg.samples)
    traj = _run(model, s0, "two", cfg.integrator, times)
    dev = 0.0
    for t, s in zip(times, traj.states):
        ref = stationary_point_solution(model, x0, s0.phi, t)
        dev = max(dev, np.max(np.abs(s.x - ref.x)), np.max(np.abs(s.phi - ref.phi)))
    return {"deviation": float(dev)}


def oracle_action_angle(cfg):
    if not cfg.action_coeffs or len(cfg.action_initial) != 5:
        raise CliError(
            "action-angle oracle needs run.action_coeffs and a 5-entry run.action_initial",
            EXIT_ORACLE,
        )
    am = ActionAngleModel.from_polynomial(cfg.action_coeffs)
    init = np.array(cfg.action_initial, dtype=float)
    times = np.linspace(0.0, cfg.integrator.t_end, cfg.samples)
    residual = 0.0
    for t in times:
        sol = action_angle_closed_form(am, init, t)
        r = action_angle_closed_form_rate(am, init, t) - action_angle_rhs(am, sol)
        residual = max(residual, np.max(np.abs(r)) / max(1.0, np.max(np.abs(sol))))
    # Direct integration of the full two-system with phase coordinates
    # (theta, I). alpha is taken as the I-I moment and gamma as the
    # theta-theta moment; with this labeling alpha' = 0 and
    # gamma' = 2 H'' beta hold exactly, so only the beta equation is probed.
    I0, th0, a0, b0, g0 = init
    model = action_angle_hamiltonian(am)
    s0 = TwoState.from_moments([th0, I0], [[g0, b0], [b0, a0]])
    traj = _run(model, s0, "two", cfg.integrator, times)
    growth = beta_growth(times, traj.moments()[:, 0, 1])
    growth["predicted_slope"] = am.d2H(I0) * a0
    return {"deviation": float(residual), "direct_beta": growth}


ORACLES = {
    "quadratic": oracle_quadratic,
    "zero-phi": oracle_zero_phi,
    "stationary": oracle_stationary,
    "action-angle": oracle_action_angle,
}


def cmd_oracle(args):
    cfg = load_config(args.config)
    if cfg.oracle is None:
        raise CliError("run.oracle must select an oracle case", EXIT_CONFIG)
    tol = cfg.tolerance
    if cfg.oracle == "action-angle":
        tol = min(tol, 1e-12)
    res = ORACLES[cfg.oracle](cfg)
    print(f"oracle {cfg.oracle}: max deviation = {res['deviation']:.3e} (tolerance {tol:.1e})")
    if "phi_deviation" in res:
        print(f"Phi deviation from zero = {res['phi_deviation']:.3e}")
    if "direct_beta" in res:
        g = res["direct_beta"]
        print(f"direct two-system integration: beta(t) looks {g['label']} "
              f"(linear-fit residual {g['linear_residual']:.2e}, "
              f"exponential-fit residual {g['exponential_residual']:.2e}) [informational]")
        if "linear_slope" in g:
            print(f"  fitted slope {g['linear_slope']:.6g}, H''(I0)*alpha0 = "
                  f"{g['predicted_slope']:.6g}")
    ok = res["deviation"] <= tol
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_DEVIATION


def quartic_explicit_rhs(epsilon, state):
    """The fifth-order system for ``(q, p, alpha, beta, gamma)``, written out by hand."""
    q, p, a, b, g = state
    k = 1 + 3 * epsilon * q * q
    return np.array([
        p,
        -(q + epsilon * q ** 3) - 3 * epsilon * q * a,
        2 * b,
        -k * a + g,
        -2 * b * k,
    ])


def quartic_derived_rhs(model, state):
    """Same vector field obtained from the generic two-system right-hand side."""
    q, p, a, b, g = state
    out = two_system_rhs(model, TwoState.from_moments([q, p], [[a, b], [b, g]]))
    Md = out.M
    return np.array([out.x[0], out.x[1], Md[0, 0], Md[0, 1], Md[1, 1]])


def quartic_mismatch(epsilon, states):
    model = quartic(epsilon)
    worst = 0.0
    for s in states:
        ref = quartic_explicit_rhs(epsilon, s)
        got = quartic_derived_rhs(model, s)
        worst = max(worst, float(np.max(np.abs(ref - got)) / max(1.0, np.max(np.abs(ref)))))
    return worst


def cmd_example_quartic(args):
    eps = args.epsilon
    model = quartic(eps)
    q, p, a, b, g = args.state
    s0 = TwoState.from_moments([q, p], [[a, b], [b, g]])
    icfg = IntegratorConfig(t_end=args.t_end, rtol=args.rtol, atol=args.atol)
    traj = _run(model, s0, "two", icfg)
    states = [np.array([s.x[0], s.x[1], s.M[0, 0], 0.5 * (s.M[0, 1] + s.M[1, 0]), s.M[1, 1]])
              for s in traj.states]
    mismatch = quartic_mismatch(eps, states)
    print(f"hard-coded vs derived right-hand side: max relative mismatch = {mismatch:.3e}")
    if mismatch > 1e-12:
        print("FAIL: the two-system construction disagrees with the explicit equations")
        return EXIT_MISMATCH
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "quartic_trajectory.csv")
    json_path = os.path.join(args.out_dir, "quartic_report.json")
    write_trajectory_csv(traj, csv_path, ["q", "p"])
    rep = invariant_report(model, traj)
    write_report_json(rep, json_path)
    for name, drift in rep.max_drift.items():
        print(f"max_drift[{name}] = {drift:.3e}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_invariants(args):
    cfg = load_config(args.config)
    model = cfg.build_model()
    try:
        traj = read_trajectory_csv(args.csv, cfg.n)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read trajectory: {exc}", EXIT_CONFIG) from None
    rep = invariant_report(model, traj)
    json_path = _out(args.report or cfg.report_path, args.config, ".json")
    write_report_json(rep, json_path)
    for name, drift in rep.max_drift.items():
        print(f"max_drift[{name}] = {drift:.3e}")
    print(f"wrote {json_path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="twosystem",
        description="Integrate and check the two-system of a Hamiltonian system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one form, write CSV and report")
    p.add_argument("config")
    p.add_argument("--trajectory", help="CSV output path (overrides config)")
    p.add_argument("--report", help="JSON report path (overrides config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="integrate two forms and report deviations")
    p.add_argument("config")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="compare a closed-form case with integration")
    p.add_argument("config")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("example-quartic", help="run the fifth-order quartic example")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--state", type=float, nargs=5, default=[1.0, 0.0, 1.0, 0.0, 1.0],
                   metavar=("Q", "P", "ALPHA", "BETA", "GAMMA"))
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_example_quartic)

    p = sub.add_parser("invariants", help="recompute the invariant report from a CSV")
    p.add_argument("config", help="config naming the model")
    p.add_argument("csv")
    p.add_argument("--report", help="JSON report path")
    p.set_defaults(func=cmd_invariants)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

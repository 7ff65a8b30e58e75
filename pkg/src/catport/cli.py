"""Command-line front end: single teleportation runs, figure-data sweeps,
and the self-validation suite.

Exit codes: 0 success, 1 failed validation or run, 2 invalid configuration
or impossible outcome, 3 Fock cutoff too small.
"""

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import experiments, focknum, loss, protocol
from . import engine as engine_mod
from .errors import (
    CatportError,
    ConfigError,
    CutoffTooSmallError,
    ImpossibleOutcomeError,
)
from .protocol import Outcomes, ProtocolConfig

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_CUTOFF = 3

_DEFAULT_MU = 0.5 + 0j
_DEFAULT_NU = complex(np.sqrt(3.0) / 2.0)
_DEFAULT_BETA = 4.0j

_DEFAULTS = {
    "alpha": 4.0, "variant": 1, "xi": None, "tau": None,
    "kplus": 1, "kminus": 0, "outcomes": None,
    "engine": "branch", "correction": "physical", "cutoff_margin": 1.0,
}

# complex quantities are set component-wise; giving either component
# replaces the whole value (the other component defaults to zero)
_PAIR_KEYS = ("mu_re", "mu_im", "nu_re", "nu_im", "beta_re", "beta_im")


def _add_config_flags(parser):
    parser.add_argument("--mu-re", type=float, dest="mu_re")
    parser.add_argument("--mu-im", type=float, dest="mu_im")
    parser.add_argument("--nu-re", type=float, dest="nu_re")
    parser.add_argument("--nu-im", type=float, dest="nu_im")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta-re", type=float, dest="beta_re")
    parser.add_argument("--beta-im", type=float, dest="beta_im")
    parser.add_argument("--variant", type=int, choices=(1, 2))
    parser.add_argument("--xi", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--kplus", type=int)
    parser.add_argument("--kminus", type=int)
    parser.add_argument("--outcomes", help="comma-separated signs, e.g. +,+,+")
    parser.add_argument("--engine", choices=("branch", "dense"))
    parser.add_argument("--correction", choices=("physical", "ideal"))
    parser.add_argument("--cutoff-margin", type=float, dest="cutoff_margin")
    parser.add_argument("--config", help="key=value file; flags take precedence")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="catport",
        description="Cat-state teleportation simulator and experiment runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_tel = sub.add_parser("teleport", help="single postselected run")
    _add_config_flags(p_tel)
    p_tel.add_argument("--out", help="write the run as one CSV row")

    p_sweep = sub.add_parser("sweep", help="figure-data parameter sweep")
    p_sweep.add_argument("--figure", required=True, choices=experiments.FIGURES)
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--alpha-grid", dest="alpha_grid", help="lo:hi:step")
    p_sweep.add_argument("--beta-grid", dest="beta_grid", help="lo:hi:step")
    p_sweep.add_argument("--xi-grid", dest="xi_grid", help="lo:hi:step")
    p_sweep.add_argument("--loss-grid", dest="loss_grid", help="lo:hi:step")
    p_sweep.add_argument("--n-list", dest="n_list", help="comma-separated ints")
    p_sweep.add_argument("--jobs", type=int)
    p_sweep.add_argument("--oracle", action="store_true",
                         help="replay rescaled spots on the dense engine")
    p_sweep.add_argument("--out", help="CSV path (default catport_<figure>.csv)")

    p_val = sub.add_parser("validate", help="run the invariant suite")
    p_val.add_argument("--level", choices=("fast", "full"), default="fast")
    return parser


# ------------------------------------------------------------------ config assembly

def _read_config_file(path):
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line needs key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = value
    return values


_FILE_PARSERS = {
    "variant": int, "kplus": int, "kminus": int, "jobs": int,
    "outcomes": str, "engine": str, "correction": str, "figure": str,
    "n_list": str, "alpha_grid": str, "beta_grid": str, "xi_grid": str,
    "loss_grid": str, "out": str,
}

_KNOWN_KEYS = set(_DEFAULTS) | set(_FILE_PARSERS) | set(_PAIR_KEYS)


def _resolve(args, name):
    """Flag value, else config-file value, else built-in default."""
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    file_values = getattr(args, "_file_values", {})
    if name in file_values:
        return _FILE_PARSERS.get(name, float)(file_values[name])
    return _DEFAULTS.get(name)


def _complex_pair(args, re_name, im_name, default):
    re = _resolve(args, re_name)
    im = _resolve(args, im_name)
    if re is None and im is None:
        return default
    return complex(re or 0.0, im or 0.0)


def _signs(text):
    table = {"+": 1, "-": -1, "+1": 1, "-1": -1}
    try:
        return tuple(table[part.strip()] for part in text.split(","))
    except KeyError:
        raise ConfigError(f"outcomes must be comma-separated signs, got {text!r}")


def _config_from(args):
    mu = _complex_pair(args, "mu_re", "mu_im", _DEFAULT_MU)
    nu = _complex_pair(args, "nu_re", "nu_im", _DEFAULT_NU)
    beta = _complex_pair(args, "beta_re", "beta_im", _DEFAULT_BETA)
    return ProtocolConfig(
        mu=mu, nu=nu,
        alpha=_resolve(args, "alpha"), beta=beta,
        variant=_resolve(args, "variant"),
        xi=_resolve(args, "xi"), tau=_resolve(args, "tau"),
        k_plus=_resolve(args, "kplus"), k_minus=_resolve(args, "kminus"),
        engine=_resolve(args, "engine"),
        correction_mode=_resolve(args, "correction"),
        cutoff_margin=_resolve(args, "cutoff_margin"),
    )


def _outcomes_from(text, cfg):
    """Parse the outcome signs against a built config. The trailing sign is
    the dispersive classification and is only accepted for single-shot
    readout, where it must agree with the requested (k_plus, k_minus)."""
    if text is None:
        return None
    signs = _signs(text)
    parity_len = 2 if cfg.variant == 1 else 1
    if len(signs) not in (parity_len, parity_len + 1):
        raise ConfigError(
            f"variant {cfg.variant} takes {parity_len} parity sign(s) plus an "
            f"optional dispersive sign, got {len(signs)}"
        )
    outcomes = (
        Outcomes(sigma_a=signs[0], sigma_b=signs[1])
        if cfg.variant == 1
        else Outcomes(sigma_ab=signs[0])
    )
    if len(signs) == parity_len:
        return outcomes
    requested = signs[-1]
    if cfg.n_meas != 1:
        raise ConfigError(
            "a sign-valued dispersive outcome needs N = 1; use --kplus/--kminus"
        )
    implied = protocol.classify_sigma_a_prime(cfg, cfg.k_plus, cfg.k_minus)
    if implied != requested:
        raise ConfigError(
            f"dispersive outcome {'+' if requested > 0 else '-'} contradicts "
            f"k_plus={cfg.k_plus}, k_minus={cfg.k_minus} (classified "
            f"{'+' if implied > 0 else '-'})"
        )
    return outcomes._replace(sigma_a_prime=requested)


# ------------------------------------------------------------------ teleport

def _fmt(value):
    return f"{value:.12g}"


def cmd_teleport(args):
    cfg = _config_from(args)
    if cfg.renormalized_input:
        print(f"note: (mu, nu) renormalized to ({cfg.mu:.6g}, {cfg.nu:.6g})")
    outcomes = _outcomes_from(_resolve(args, "outcomes"), cfg)
    result = protocol.teleport(cfg, outcomes)
    shown = outcomes or (
        Outcomes(1, 1) if cfg.variant == 1 else Outcomes(sigma_ab=1)
    )
    outcome_str = experiments.outcome_string(
        cfg.variant, shown, result.sigma_a_prime
    )
    print(f"outcome           {outcome_str}")
    print(f"fidelity          {_fmt(result.fidelity)}")
    print(f"p_parity          {_fmt(result.p_parity)}")
    print(f"p_dispersive      {_fmt(result.p_dispersive)}")
    print(f"p_joint           {_fmt(result.p_joint)}")
    print(f"correction        {result.correction}")
    print(f"k_plus/k_minus    {result.k_plus}/{result.k_minus}")
    print(f"branch_count      {result.branch_count}")
    print(f"leakage           {_fmt(result.leakage)}")
    print(f"x_failure_weight  {_fmt(result.x_failure_weight)}")
    if args.out:
        row = experiments.ResultRow(
            figure="teleport", variant=cfg.variant,
            alpha=abs(cfg.alpha), beta=complex(cfg.beta),
            xi=cfg.xi, tau=cfg.tau_eff, n_meas=result.k_plus + result.k_minus,
            k_plus=result.k_plus, k_minus=result.k_minus,
            outcome=outcome_str, fidelity=result.fidelity,
            probability=result.p_joint, branch_count=result.branch_count,
            leakage=result.leakage,
        )
        path = experiments.write_rows([row], args.out)
        experiments.write_manifest([path], {"command": "teleport"})
        print(f"wrote {path}")
    return EXIT_OK


# ------------------------------------------------------------------ sweep

def _parse_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be lo:hi:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ConfigError(f"grid {text!r} must have hi >= lo and step > 0")
    return experiments.grid(lo, hi, step)


def _spec_from(args):
    spec = experiments.preset(args.figure)
    overrides = {}
    if _resolve(args, "outcomes") is not None:
        signs = _signs(_resolve(args, "outcomes"))
        expect = 2 if spec.variant == 1 else 1
        if len(signs) != expect:
            raise ConfigError(
                f"sweeps take the {expect} parity sign(s) only; the dispersive "
                "outcome is fixed by k_plus = N"
            )
        overrides["outcomes"] = signs
    if getattr(args, "kminus", None) not in (None, 0):
        raise ConfigError("sweeps fix k_minus = 0; use the teleport command")
    for flag, field in (
        ("engine", "engine"), ("correction", "correction_mode"),
        ("cutoff_margin", "cutoff_margin"), ("alpha", "alpha"),
        ("kplus", "n_meas"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    mu = _complex_pair(args, "mu_re", "mu_im", None)
    if mu is not None:
        overrides["mu"] = mu
    nu = _complex_pair(args, "nu_re", "nu_im", None)
    if nu is not None:
        overrides["nu"] = nu
    beta = _complex_pair(args, "beta_re", "beta_im", None)
    if beta is not None:
        if spec.kind == "map":
            raise ConfigError("map presets sweep beta; use --beta-grid")
        overrides["beta_values"] = (beta,)
    if getattr(args, "xi", None) is not None:
        if spec.kind not in ("xi", "avg_xi"):
            raise ConfigError("--xi only applies to interaction-time presets")
        overrides["xi_grid"] = (args.xi,)
    if getattr(args, "tau", None) is not None:
        raise ConfigError(
            "sweep interaction times follow the preset rule; use --xi-grid "
            "or the teleport command for a fixed tau"
        )
    for flag, field in (
        ("alpha_grid", "alpha_grid"), ("beta_grid", "beta_grid"),
        ("xi_grid", "xi_grid"), ("loss_grid", "loss_grid"),
    ):
        text = _resolve(args, flag)
        if text is not None:
            overrides[field] = _parse_grid(text)
    if getattr(args, "n_list", None) is not None:
        try:
            overrides["n_list"] = tuple(
                int(p) for p in args.n_list.split(",") if p.strip()
            )
        except ValueError:
            raise ConfigError(f"--n-list must be comma-separated ints")
    return replace(spec, **overrides)


def cmd_sweep(args):
    spec = _spec_from(args)
    jobs = getattr(args, "jobs", None)
    if jobs is None and "jobs" in getattr(args, "_file_values", {}):
        jobs = int(args._file_values["jobs"])
    rows = experiments.run_sweep(spec, jobs)
    out = args.out or f"catport_{spec.figure}.csv"
    path = experiments.write_rows(rows, out)
    manifest = experiments.write_manifest(
        [path],
        {
            "command": "sweep", "figure": spec.figure, "kind": spec.kind,
            "variant": spec.variant, "rows": len(rows),
            "jobs": experiments.resolve_jobs(jobs),
        },
    )
    print(f"wrote {len(rows)} rows to {path} (manifest {manifest})")
    if args.oracle:
        worst = 0.0
        for report in experiments.dense_oracle_spots(spec):
            print(
                f"oracle alpha={report['alpha']:.3g} beta={report['beta']:.3g}: "
                f"fidelity gap {report['fidelity_gap']:.3e}, "
                f"probability gap {report['probability_gap']:.3e}"
            )
            worst = max(worst, report["fidelity_gap"], report["probability_gap"])
        if worst > 1e-8:
            print(f"FAIL dense-oracle gap {worst:.3e} exceeds 1e-08")
            return EXIT_FAIL
        print("oracle ok")
    return EXIT_OK


# ------------------------------------------------------------------ validate

def _check_povm_completeness():
    tau, n = 0.037, 5
    total = np.zeros(201)
    for k_plus in range(n + 1):
        total += np.abs(focknum.dispersive_diag(tau, k_plus, n - k_plus, 200)) ** 2
    defect = float(np.max(np.abs(total - 1.0)))
    assert defect < 1e-9, f"defect {defect:.3e}"
    return f"defect {defect:.1e}"


def _check_displacement_unitarity():
    mat = focknum.displacement(1.3 - 0.7j, 80)
    defect = float(np.max(np.abs(mat.conj().T @ mat - np.eye(81))))
    assert defect < 1e-10, f"defect {defect:.3e}"
    return f"defect {defect:.1e}"


def _check_bs_unitarity():
    rng = np.random.default_rng(11)
    amps = rng.normal(size=(6, 7, 1)) + 1j * rng.normal(size=(6, 7, 1))
    state = engine_mod.DenseState(amps / np.linalg.norm(amps))
    out = engine_mod.apply_bs_dense(state, (0, 1))
    drift = abs(out.norm_sq() - 1.0)
    assert drift < 1e-10, f"norm drift {drift:.3e}"
    return f"norm drift {drift:.1e}"


def _check_parity_completeness():
    even = focknum.parity_projector(1, 40)
    odd = focknum.parity_projector(-1, 40)
    defect = float(np.max(np.abs(even + odd - 1.0)))
    assert defect == 0.0 and set(np.unique(even)) == {0.0, 1.0}
    return "projectors partition the basis"


def _check_engine_equivalence():
    worst = 0.0
    for variant in (1, 2):
        gaps = []
        for eng in ("branch", "dense"):
            cfg = ProtocolConfig(alpha=1.2, beta=1.2j, variant=variant,
                                 engine=eng, correction_mode="ideal")
            result = protocol.teleport(cfg)
            gaps.append((result.fidelity, result.p_joint))
        worst = max(
            worst,
            abs(gaps[0][0] - gaps[1][0]),
            abs(gaps[0][1] - gaps[1][1]),
        )
    assert worst < 1e-8, f"max engine gap {worst:.3e}"
    return f"max gap {worst:.1e}"


def _check_kraus_completeness():
    worst = 0.0
    for gamma in (0.65, 0.8):
        channel = loss.LossChannel.for_block(gamma, 60)
        worst = max(worst, channel.completeness_defect(60))
    assert worst < 1e-9, f"defect {worst:.3e}"
    return f"defect {worst:.1e}"


def _check_correction_tables():
    single = {
        (1, 1, 1): "I", (1, 1, -1): "Z", (1, -1, 1): "X", (-1, 1, 1): "X",
        (1, -1, -1): "XZ", (-1, 1, -1): "XZ", (-1, -1, 1): "I",
        (-1, -1, -1): "Z",
    }
    for (sa, sb, sap), want in single.items():
        got = protocol.correction_for(1, Outcomes(sa, sb, None, sap))
        assert got == want, f"variant 1 {(sa, sb, sap)} -> {got}, want {want}"
    joint = {(1, 1): "I", (-1, 1): "X", (1, -1): "Z", (-1, -1): "XZ"}
    for (sab, sap), want in joint.items():
        got = protocol.correction_for(2, Outcomes(None, None, sab, sap))
        assert got == want, f"variant 2 {(sab, sap)} -> {got}, want {want}"
    return "12 outcome rows"


def _check_dense_oracle_replay():
    worst = 0.0
    for figure in ("3a", "8a"):
        for report in experiments.dense_oracle_spots(experiments.preset(figure)):
            worst = max(
                worst, report["fidelity_gap"], report["probability_gap"]
            )
    assert worst < 1e-8, f"max replay gap {worst:.3e}"
    return f"max gap {worst:.1e}"


def cmd_validate(args):
    checks = [
        ("dispersive-povm-completeness", _check_povm_completeness),
        ("displacement-unitarity", _check_displacement_unitarity),
        ("beamsplitter-unitarity", _check_bs_unitarity),
        ("parity-completeness", _check_parity_completeness),
        ("engine-equivalence", _check_engine_equivalence),
        ("kraus-completeness", _check_kraus_completeness),
        ("correction-tables", _check_correction_tables),
    ]
    if args.level == "full":
        checks.append(("dense-oracle-replay", _check_dense_oracle_replay))
    failed = None
    for name, check in checks:
        try:
            detail = check()
        except Exception as exc:  # noqa: BLE001 - report any invariant breach
            print(f"FAIL {name}: {exc}")
            failed = failed or name
        else:
            print(f"ok   {name} ({detail})")
    if failed:
        print(f"validation failed at: {failed}")
        return EXIT_FAIL
    print(f"all {len(checks)} invariants hold")
    return EXIT_OK


# ------------------------------------------------------------------ entry

def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config_path = getattr(args, "config", None)
        try:
            args._file_values = (
                _read_config_file(config_path) if config_path else {}
            )
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        if args.command == "teleport":
            return cmd_teleport(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_validate(args)
    except (ConfigError, ImpossibleOutcomeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CutoffTooSmallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CUTOFF
    except CatportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

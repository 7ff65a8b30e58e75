"""Parameter sweeps producing the fidelity data tables (amplitude maps,
interaction-time curves, readout-count curves, loss curves, outcome averages)
plus Fock-distribution diagnostics, with CSV/manifest emission."""

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import loss as loss_channel
from . import focknum, protocol
from .errors import ConfigError
from .protocol import Outcomes, ProtocolConfig

SCHEMA_VERSION = 1
SWEEP_COLUMNS = (
    "figure", "variant", "alpha", "beta_re", "beta_im", "xi", "tau", "N",
    "k_plus", "k_minus", "loss", "outcome", "fidelity", "avg_fidelity",
    "probability", "branch_count", "leakage",
)
DIST_COLUMNS = (
    "figure", "stage", "variant", "alpha", "beta_re", "beta_im", "tau",
    "n", "p_n", "overlay_cos",
)

_SQ32 = np.sqrt(3.0) / 2.0


def grid(lo, hi, step):
    """Inclusive monotone grid with decimal-friendly rounding."""
    count = int(round((hi - lo) / step))
    return tuple(round(lo + i * step, 10) for i in range(count + 1))


@dataclass(frozen=True)
class SweepSpec:
    figure: str
    kind: str  # map | xi | avg_xi | n | loss | dist
    variant: int = 1
    mu: complex = 0.5
    nu: complex = _SQ32
    alpha: float = 4.0
    alpha_grid: tuple = ()
    beta_grid: tuple = ()
    beta_axis: str = "imag"  # maps: real or imaginary beta axis
    beta_values: tuple = ()  # curve families (complex values)
    xi_grid: tuple = ()
    n_list: tuple = ()
    loss_grid: tuple = ()
    n_meas: int = 1  # readout count for map/loss/dist rows (k_plus = N)
    tau_rule: str = "xi"  # quarter_alpha | half_nbar | xi
    xi: float = 2.0
    outcomes: tuple = None  # parity signs: (sa, sb) or (sab,)
    engine: str = "branch"
    correction_mode: str = "physical"
    cutoff_margin: float = 1.0

    def __post_init__(self):
        need = {
            "map": ("alpha_grid", "beta_grid"),
            "xi": ("xi_grid", "beta_values"),
            "avg_xi": ("xi_grid", "beta_values"),
            "n": ("n_list", "beta_values"),
            "loss": ("loss_grid", "beta_values", "n_list"),
            "dist": (),
        }
        if self.kind not in need:
            raise ConfigError(f"unknown sweep kind {self.kind!r}")
        for name in need[self.kind]:
            values = getattr(self, name)
            if len(values) == 0:
                raise ConfigError(f"{self.kind} sweep needs a non-empty {name}")
        for name in ("alpha_grid", "beta_grid", "xi_grid", "loss_grid", "n_list"):
            values = getattr(self, name)
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError(f"{name} must be strictly increasing")
        if self.beta_axis not in ("real", "imag"):
            raise ConfigError("beta_axis must be 'real' or 'imag'")
        if self.tau_rule not in ("quarter_alpha", "half_nbar", "xi"):
            raise ConfigError(f"unknown tau rule {self.tau_rule!r}")

    def parity_outcomes(self):
        if self.outcomes is not None:
            signs = tuple(self.outcomes)
        else:
            signs = (1, 1) if self.variant == 1 else (1,)
        if self.variant == 1:
            if len(signs) != 2:
                raise ConfigError("variant 1 takes two parity signs")
            return Outcomes(sigma_a=signs[0], sigma_b=signs[1])
        if len(signs) != 1:
            raise ConfigError("variant 2 takes one parity sign")
        return Outcomes(sigma_ab=signs[0])


@dataclass
class ResultRow:
    figure: str
    variant: int
    alpha: float
    beta: complex
    xi: float = None
    tau: float = None
    n_meas: int = None
    k_plus: int = None
    k_minus: int = None
    loss: float = None
    outcome: str = ""
    fidelity: float = None
    avg_fidelity: float = None
    probability: float = None
    branch_count: int = None
    leakage: float = None
    runtime: float = None

    def __post_init__(self):
        for value in (self.fidelity, self.avg_fidelity):
            if value is not None and not 0.0 <= value <= 1.0 + 1e-9:
                raise ConfigError(f"fidelity {value} outside [0, 1]")


# ------------------------------------------------------------------ presets

FIGURES = (
    "3a", "3b", "4a", "4b", "5a", "5b", "6a", "6b", "7a", "7b",
    "8a", "8b", "9a", "9b", "dist", "loss",
)

_N_LIST = (1, 2, 3, 5, 7, 10, 15, 20, 30, 50, 70, 100)


def preset(figure):
    """Named sweep configurations for the standard figure set."""
    amp = grid(3.0, 4.0, 0.1)
    xi_g = grid(1.8, 2.4, 0.01)
    real_betas = (2.0, 3.0, 4.0)
    imag_betas = (2.0j, 3.0j, 4.0j)
    if figure in ("3a", "3b", "7a", "7b", "8a", "8b"):
        return SweepSpec(
            figure=figure,
            kind="map",
            variant=2 if figure[0] == "8" else 1,
            alpha_grid=amp,
            beta_grid=amp,
            beta_axis="real" if figure[0] == "7" else "imag",
            n_meas=1000 if figure[1] == "b" else 1,
            tau_rule="quarter_alpha",
        )
    if figure in ("4a", "4b", "9a", "9b"):
        return SweepSpec(
            figure=figure,
            kind="xi",
            variant=2 if figure[0] == "9" else 1,
            xi_grid=xi_g,
            beta_values=real_betas if figure[1] == "a" else imag_betas,
        )
    if figure in ("5a", "5b"):
        return SweepSpec(
            figure=figure,
            kind="n",
            n_list=_N_LIST,
            beta_values=real_betas if figure == "5a" else imag_betas,
            tau_rule="half_nbar",
        )
    if figure in ("6a", "6b"):
        return SweepSpec(
            figure=figure,
            kind="avg_xi",
            xi_grid=xi_g,
            beta_values=real_betas if figure == "6a" else imag_betas,
        )
    if figure == "loss":
        return SweepSpec(
            figure="loss",
            kind="loss",
            loss_grid=grid(0.0, 0.5, 0.01),
            beta_values=real_betas + imag_betas,
            n_list=(1, 1000),
            tau_rule="half_nbar",
        )
    if figure == "dist":
        return SweepSpec(figure="dist", kind="dist")
    raise ConfigError(f"unknown figure preset {figure!r}")


# ------------------------------------------------------------------ tasks

def _resolved_tau(rule, alpha, beta):
    if rule == "quarter_alpha":
        return np.pi / (4 * alpha**2)
    if rule == "half_nbar":
        return np.pi / (2 * (abs(alpha) ** 2 + abs(beta) ** 2))
    return None  # xi rule: leave tau to the config


def _config_for(spec, alpha, beta, xi=None, tau=None, n=None):
    n = spec.n_meas if n is None else n
    return ProtocolConfig(
        mu=spec.mu, nu=spec.nu, alpha=alpha, beta=beta, variant=spec.variant,
        xi=xi, tau=tau, k_plus=n, k_minus=0,
        engine=spec.engine, correction_mode=spec.correction_mode,
        cutoff_margin=spec.cutoff_margin,
    )


def outcome_string(variant, outcomes, sigma_a_prime=None):
    def sign(s):
        return "+" if s > 0 else "-"

    parts = (
        [sign(outcomes.sigma_a), sign(outcomes.sigma_b)]
        if variant == 1
        else [sign(outcomes.sigma_ab)]
    )
    if sigma_a_prime is not None:
        parts.append(sign(sigma_a_prime))
    return "".join(parts)


def _tasks_for(spec):
    if spec.kind == "map":
        for alpha in spec.alpha_grid:
            for b in spec.beta_grid:
                beta = 1j * b if spec.beta_axis == "imag" else b
                yield {"alpha": alpha, "beta": beta,
                       "tau": _resolved_tau(spec.tau_rule, alpha, beta)}
    elif spec.kind in ("xi", "avg_xi"):
        for beta in spec.beta_values:
            for xi in spec.xi_grid:
                yield {"alpha": spec.alpha, "beta": beta, "xi": xi}
    elif spec.kind == "n":
        for beta in spec.beta_values:
            for n in spec.n_list:
                yield {"alpha": spec.alpha, "beta": beta, "n": n,
                       "tau": _resolved_tau(spec.tau_rule, spec.alpha, beta)}
    elif spec.kind == "loss":
        for beta in spec.beta_values:
            for n in spec.n_list:
                for lost in spec.loss_grid:
                    yield {"alpha": spec.alpha, "beta": beta, "n": n,
                           "loss": lost,
                           "tau": _resolved_tau(spec.tau_rule, spec.alpha, beta)}
    else:
        raise ConfigError(f"{spec.kind} sweeps have no task grid")


def _eval_task(args):
    spec, task = args
    started = time.perf_counter()
    cfg = _config_for(
        spec, task["alpha"], task["beta"],
        xi=task.get("xi"), tau=task.get("tau"), n=task.get("n"),
    )
    outcomes = spec.parity_outcomes()
    row = ResultRow(
        figure=spec.figure, variant=spec.variant,
        alpha=task["alpha"], beta=complex(task["beta"]),
        xi=task.get("xi"), tau=cfg.tau_eff,
        n_meas=cfg.n_meas, k_plus=cfg.k_plus, k_minus=cfg.k_minus,
        loss=task.get("loss"),
    )
    if spec.kind == "avg_xi":
        row.avg_fidelity = protocol.average_fidelity(
            cfg, outcomes.sigma_a, outcomes.sigma_b
        )
        row.probability = _parity_probability(cfg, outcomes)
        row.outcome = outcome_string(spec.variant, outcomes)
    elif spec.kind == "loss":
        row.avg_fidelity = loss_channel.lossy_fidelity(
            cfg, 1.0 - task["loss"], outcomes
        )
        row.probability = _parity_probability(cfg, outcomes)
        row.outcome = outcome_string(spec.variant, outcomes)
    else:
        result = protocol.teleport(cfg, outcomes)
        row.fidelity = result.fidelity
        row.probability = result.p_joint
        row.branch_count = result.branch_count
        row.leakage = result.leakage
        row.outcome = outcome_string(spec.variant, outcomes, result.sigma_a_prime)
    row.runtime = time.perf_counter() - started
    return row


def _parity_probability(cfg, outcomes):
    state = protocol.second_bs(
        protocol.entangle_resource(protocol.prepare_initial(cfg))
    )
    if cfg.variant == 1:
        _, p = protocol.measure_variant1(state, outcomes.sigma_a, outcomes.sigma_b)
    else:
        _, p = protocol.measure_variant2(state, outcomes.sigma_ab)
    return p


def resolve_jobs(jobs=None):
    if jobs is None:
        env = os.environ.get("CATPORT_JOBS")
        if env is not None:
            try:
                jobs = int(env)
            except ValueError:
                raise ConfigError(f"CATPORT_JOBS must be an integer, got {env!r}")
        else:
            jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ConfigError("job count must be at least 1")
    return jobs


def run_sweep(spec, jobs=None):
    """Evaluate every grid point; rows come back in grid order regardless of
    the parallelism degree."""
    if spec.kind == "dist":
        return distribution_rows(spec)
    tasks = [(spec, t) for t in _tasks_for(spec)]
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(tasks) <= 1:
        return [_eval_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_eval_task, tasks, chunksize=8))


# ------------------------------------------------------------------ sweep fronts

def sweep_alpha_beta(spec, jobs=None):
    if spec.kind != "map":
        raise ConfigError("sweep_alpha_beta expects a map spec")
    return run_sweep(spec, jobs)


def sweep_xi(spec, jobs=None):
    if spec.kind not in ("xi", "avg_xi"):
        raise ConfigError("sweep_xi expects a xi or avg_xi spec")
    return run_sweep(spec, jobs)


def sweep_measurements(spec, jobs=None):
    if spec.kind != "n":
        raise ConfigError("sweep_measurements expects an n spec")
    return run_sweep(spec, jobs)


def sweep_loss(spec, jobs=None):
    if spec.kind != "loss":
        raise ConfigError("sweep_loss expects a loss spec")
    if spec.variant != 1:
        raise ConfigError("the loss average is defined for variant 1")
    if spec.loss_grid[0] < 0.0 or spec.loss_grid[-1] > 0.5:
        raise ConfigError("loss grid must stay inside [0, 0.5]")
    return run_sweep(spec, jobs)


# ------------------------------------------------------------------ optimal xi

def find_optimal_xi(spec, beta=None, tol=1e-3):
    """Grid scan of the fidelity over spec.xi_grid followed by a ternary
    refinement; returns (xi_star, f_star)."""
    if spec.kind not in ("xi", "avg_xi"):
        raise ConfigError("find_optimal_xi expects a xi or avg_xi spec")
    beta = spec.beta_values[0] if beta is None else beta
    outcomes = spec.parity_outcomes()

    def f_of(xi):
        cfg = _config_for(spec, spec.alpha, beta, xi=xi)
        if spec.kind == "avg_xi":
            return protocol.average_fidelity(cfg, outcomes.sigma_a, outcomes.sigma_b)
        return protocol.teleport(cfg, outcomes).fidelity

    values = [f_of(xi) for xi in spec.xi_grid]
    best = int(np.argmax(values))
    lo = spec.xi_grid[max(best - 1, 0)]
    hi = spec.xi_grid[min(best + 1, len(spec.xi_grid) - 1)]
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f_of(m1) < f_of(m2):
            lo = m1
        else:
            hi = m2
    xi_star = (lo + hi) / 2
    return xi_star, f_of(xi_star)


# ------------------------------------------------------------------ distributions

@dataclass
class DistRow:
    figure: str
    stage: str
    variant: int  # None for ideal rows
    alpha: float
    beta: complex
    tau: float
    n: int
    p_n: float
    overlay_cos: float


def fock_distribution(cfg, stage):
    """Fock-level probabilities of the displaced interference mode.

    stage 'ideal': equal-weight mixture of the four displaced coherent
    components (labels 0, 2chi, chi+chi_bar, chi-chi_bar).
    stage 'parity': the post-parity-measurement state of the configured
    variant ((+,+) resp. (+)), displaced by chi.
    """
    chi, chb = cfg.chi, cfg.chi_bar
    tau = cfg.tau_eff
    if stage == "ideal":
        labels = (0.0, 2 * chi, chi + chb, chi - chb)
        occ = max(abs(l) ** 2 for l in labels)
        n_max = focknum.cutoff_for(occ, cfg.cutoff_margin)
        p_n = np.zeros(n_max + 1)
        for label in labels:
            p_n += np.abs(focknum.coherent_vector(label, n_max)) ** 2 / len(labels)
        variant = None
    elif stage == "parity":
        from . import engine

        state = protocol.second_bs(
            protocol.entangle_resource(protocol.prepare_initial(cfg))
        )
        if cfg.variant == 1:
            state, _ = protocol.measure_variant1(state, 1, 1)
        else:
            state, _ = protocol.measure_variant2(state, 1)
        occ = max(abs(chi) + abs(chb), 2 * abs(chi)) ** 2
        n_max = focknum.cutoff_for(occ, cfg.cutoff_margin)
        if isinstance(state, engine.BranchState):
            state = engine.displace_branch(state, 0, chi)
            rho = engine.reduced_density_branch(state, 0, n_max + 1)
        else:
            state = engine.displace_dense(state, 0, chi, n_max)
            rho = engine.reduced_density_dense(state, 0)
        p_n = np.clip(np.diag(rho).real, 0.0, None)
        n_max = len(p_n) - 1
        variant = cfg.variant
    else:
        raise ConfigError(f"unknown distribution stage {stage!r}")
    return [
        DistRow(
            figure="dist", stage=stage, variant=variant,
            alpha=abs(cfg.alpha), beta=complex(cfg.beta), tau=tau,
            n=n, p_n=float(p_n[n]), overlay_cos=float(np.cos(n * tau)),
        )
        for n in range(n_max + 1)
    ]


def distribution_rows(spec):
    """The distribution preset: ideal component histograms at alpha=5 for
    both beta axes, plus measured histograms for both variants at alpha=4,
    beta=4i, tau = pi/(4 alpha^2)."""
    rows = []
    for beta in (5.0j, 5.0):
        cfg = ProtocolConfig(
            mu=spec.mu, nu=spec.nu, alpha=5.0, beta=beta,
            tau=np.pi / 100.0, correction_mode="ideal",
            cutoff_margin=spec.cutoff_margin,
        )
        rows.extend(fock_distribution(cfg, "ideal"))
    for variant in (1, 2):
        cfg = ProtocolConfig(
            mu=spec.mu, nu=spec.nu, alpha=4.0, beta=4.0j, variant=variant,
            tau=np.pi / 64.0, engine=spec.engine,
            cutoff_margin=spec.cutoff_margin,
        )
        rows.extend(fock_distribution(cfg, "parity"))
    return rows


def local_maxima(p_n):
    """Indices of local maxima of a histogram. Exact float ties (integer-mean
    Poisson components have pmf(m-1) == pmf(m)) count their right edge; the
    n=0 boundary counts when the first step falls."""
    p = np.asarray(p_n)
    out = [0] if p[0] > p[1] else []
    out += [n for n in range(1, len(p) - 1) if p[n] >= p[n - 1] and p[n] > p[n + 1]]
    return out


def oscillation_contrast(p_n, skip=2):
    """Peak-to-trough amplitude of the even/odd alternating component of a
    Fock histogram (estimated from second differences), relative to the
    histogram peak. The first `skip` levels are excluded so the vacuum
    component's n=0 spike does not count as oscillation."""
    body = np.asarray(p_n)[skip:]
    alternating = np.abs(body[1:-1] - (body[:-2] + body[2:]) / 2.0)
    return 2.0 * float(alternating.max()) / float(body.max())


# ------------------------------------------------------------------ oracle spots

def dense_oracle_spots(spec, extra_spots=((1.2, 1.2j), (1.5, 1.0j))):
    """Rescale a representative sweep point to small amplitude and replay it
    on both engines; returns per-spot dicts with the fidelity gap."""
    spots = []
    task = next(iter(_tasks_for(spec))) if spec.kind != "dist" else {
        "alpha": 4.0, "beta": 4.0j}
    scale = 1.2 / max(abs(task["alpha"]), abs(task["beta"]), 1.2)
    spots.append((task["alpha"] * scale, task["beta"] * scale))
    spots.extend(extra_spots)
    reports = []
    for alpha, beta in spots:
        fids = {}
        probs = {}
        for eng in ("branch", "dense"):
            cfg = ProtocolConfig(
                mu=spec.mu, nu=spec.nu, alpha=alpha, beta=beta,
                variant=spec.variant, engine=eng, correction_mode="ideal",
            )
            result = protocol.teleport(cfg)
            fids[eng] = result.fidelity
            probs[eng] = result.p_joint
        reports.append({
            "alpha": alpha, "beta": beta,
            "fidelity_branch": fids["branch"], "fidelity_dense": fids["dense"],
            "fidelity_gap": abs(fids["branch"] - fids["dense"]),
            "probability_gap": abs(probs["branch"] - probs["dense"]),
        })
    return reports


# ------------------------------------------------------------------ CSV / manifest

def _format(value):
    if value is None or value == "":
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.12g}"


def _sweep_record(row):
    return (
        row.figure, row.variant, row.alpha,
        None if row.beta is None else row.beta.real,
        None if row.beta is None else row.beta.imag,
        row.xi, row.tau, row.n_meas, row.k_plus, row.k_minus, row.loss,
        row.outcome, row.fidelity, row.avg_fidelity, row.probability,
        row.branch_count, row.leakage,
    )


def _dist_record(row):
    return (
        row.figure, row.stage, row.variant, row.alpha,
        row.beta.real, row.beta.imag, row.tau, row.n, row.p_n, row.overlay_cos,
    )


def write_rows(rows, path):
    """CSV emission; schema depends on the row type (sweep vs distribution)."""
    if rows and isinstance(rows[0], DistRow):
        header, record = DIST_COLUMNS, _dist_record
    else:
        header, record = SWEEP_COLUMNS, _sweep_record
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(v) for v in record(row)) + "\n")
    return path


def write_manifest(outputs, config, path=None):
    """<out>.manifest.json with schema version, timestamp, the resolved
    configuration, and a sha256 per emitted file."""
    outputs = [outputs] if isinstance(outputs, str) else list(outputs)
    path = path or outputs[0] + ".manifest.json"
    listed = []
    for out in outputs:
        digest = hashlib.sha256()
        with open(out, "rb") as fh:
            digest.update(fh.read())
        listed.append({"path": os.path.basename(out), "sha256": digest.hexdigest()})
    payload = {
        "schema_version": SCHEMA_VERSION,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": config,
        "outputs": listed,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path

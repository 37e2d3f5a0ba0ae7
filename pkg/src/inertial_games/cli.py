"""Command-line front end.

Every command reads one INI-style configuration file (or a ``summary.json``
written by an earlier run), writes its tables into ``--out`` and exits with
0 on success, 2 on a configuration error, 3 on a numerical failure and 4
when ``--strict`` is given and a limit computation did not converge.
"""

import argparse
import configparser
import json
import math
import os
import sys

import numpy as np

from . import analysis, designer, finite, kernel, processes
from .errors import ConfigError, NumericalError, UnconvergedError
from .output import (
    PATH_COLUMNS,
    SCHEMA_VERSION,
    path_rows,
    write_csv,
    write_json,
    write_svg,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNCONVERGED = 0, 2, 3, 4


def _float(s):
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"not a number: {s!r}") from None


def _int(s):
    try:
        v = float(s)
    except ValueError:
        raise ConfigError(f"not an integer: {s!r}") from None
    if not v.is_integer():
        raise ConfigError(f"not an integer: {s!r}")
    return int(v)


def _floats(s):
    return [_float(x) for x in s.replace(";", ",").split(",") if x.strip()]


def _ints(s):
    return [_int(x) for x in s.replace(";", ",").split(",") if x.strip()]


def _str(s):
    return s.strip()


# section -> key -> (parser, default); a default of ... marks a required key.
SCHEMA = {
    "game": {
        "c": (_float, 1.0),
        "lambda0": (_float, ...),
        "theta": (_float, None),
        "a": (_float, 1.0),
        "b": (_float, 1.0),
    },
    "learning": {
        "process": (_str, None),
        "sigma": (_float, None),
        "C": (_float, None),
        "p": (_float, None),
        "r": (_float, None),
        "sigma2": (_floats, None),
        "tail": (_float, math.inf),
        "prefix": (_floats, None),
    },
    "run": {
        "T": (_int, 100),
        "tol": (_float, 1e-10),
        "T_max": (_int, 100_000),
        "seed": (_int, 0),
    },
    "design": {"mu_target": (_float, ...), "verify_T": (_int, 400)},
    "finite": {
        "N": (_ints, [100]),
        "T": (_int, 50),
        "replications": (_int, 200),
        "workers": (_int, 1),
    },
    "phase": {
        "lambda0_grid": (_floats, ...),
        "theta_grid": (_floats, ...),
        "T_max": (_int, 100_000),
    },
    "transition": {
        "epsilon": (_float, 0.05),
        "alpha": (_float, 0.5),
        "beta": (_float, None),
        "T": (_int, 2000),
    },
    "reduce": {"sigma2": (_floats, ...), "tau2": (_floats, ...), "T": (_int, ...)},
    "refine": {"n": (_ints, [1, 2, 8]), "T": (_int, 50)},
    "idsds": {"eta": (_float, ...), "k_max": (_int, 1000)},
    "classify": {
        "T": (_int, 1000),
        "window_lo": (_int, None),
        "window_hi": (_int, None),
        "delta": (_float, 0.15),
    },
}

# sections each command reads; [run] is always accepted.
COMMAND_SECTIONS = {
    "simulate": ("game", "learning"),
    "design": ("game", "design"),
    "limit": ("game", "learning"),
    "classify": ("learning", "classify"),
    "finite": ("game", "learning", "finite"),
    "phase": ("game", "learning", "phase"),
    "transition": ("game", "learning", "transition"),
    "reduce": ("game", "reduce"),
    "refine": ("game", "learning", "refine"),
    "idsds": ("game", "idsds"),
}


class Config:
    """Validated configuration: parsed values plus the raw strings for echoing."""

    def __init__(self, raw):
        self.raw = {}
        self.values = {}
        for section, entries in raw.items():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            keys = SCHEMA[section]
            parsed = {}
            for key, text in entries.items():
                if key not in keys:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                parsed[key] = keys[key][0](str(text))
            self.raw[section] = {k: str(v) for k, v in entries.items()}
            self.values[section] = parsed

    def section(self, name):
        out = {}
        given = self.values.get(name, {})
        for key, (_, default) in SCHEMA[name].items():
            if key in given:
                out[key] = given[key]
            elif default is ...:
                raise ConfigError(f"missing required key {key!r} in [{name}]")
            else:
                out[key] = default
        return out

    def require(self, name):
        if name not in self.values:
            raise ConfigError(f"missing section [{name}]")
        return self.section(name)


def read_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from None
        raw = obj.get("config_echo", obj)
        if not isinstance(raw, dict) or not all(isinstance(v, dict) for v in raw.values()):
            raise ConfigError("JSON config must map sections to key/value tables")
        return Config(raw)
    parser = configparser.ConfigParser(interpolation=None, default_section="\0defaults")
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"invalid config file: {exc}") from None
    return Config({s: dict(parser[s]) for s in parser.sections()})


def build_game(cfg):
    g = cfg.require("game")
    return kernel.GameConfig(g["c"], g["lambda0"], g["a"], g["b"]), g["theta"]


def build_spec(cfg):
    ls = cfg.require("learning")
    kind = ls["process"]
    if kind is None:
        raise ConfigError("[learning] needs a 'process' key")
    params = {
        "IID": ("sigma",),
        "OneShot": ("sigma",),
        "SocialDoubling": ("sigma",),
        "PowerPrecision": ("C", "p"),
        "GeometricPrecision": ("C", "r"),
        "Explicit": ("sigma2",),
    }
    if kind not in params:
        raise ConfigError(f"unknown process {kind!r}; choose from {', '.join(params)}")
    kwargs = {}
    for key in params[kind]:
        if ls[key] is None:
            raise ConfigError(f"process {kind} needs key {key!r}")
        kwargs[key] = ls[key]
    if kind == "Explicit":
        kwargs["tail"] = ls["tail"]
    spec = processes.spec_from_dict({"kind": kind, **kwargs})
    if ls["prefix"]:
        spec = processes.Prefixed(tuple(ls["prefix"]), spec)
    return spec


class Run:
    def __init__(self, args, cfg):
        self.args = args
        self.cfg = cfg
        self.out = args.out
        self.unconverged = []
        run = cfg.section("run")
        self.seed = args.seed if args.seed is not None else run["seed"]
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        self.run = run

    def file(self, name):
        return os.path.join(self.out, name)

    def echo(self):
        raw = {s: dict(v) for s, v in self.cfg.raw.items()}
        raw.setdefault("run", {})["seed"] = str(self.seed)
        return raw

    def summary(self, mu_inf=None, gamma_inf=None, converged=None, regime=None, **diag):
        obj = {
            "schema_version": SCHEMA_VERSION,
            "command": self.args.command,
            "config_echo": self.echo(),
            "mu_inf": mu_inf,
            "gamma_inf": gamma_inf,
            "converged": converged,
            "regime": regime,
            "diagnostics": diag,
        }
        write_json(self.file("summary.json"), obj)
        return obj

    def limit(self, game, spec, T_max=None):
        rep = analysis.limit_threshold(
            game, spec, tol=self.run["tol"], T_max=T_max or self.run["T_max"]
        )
        if not rep.converged:
            self.unconverged.append(rep)
        return rep


def _limit_diag(rep):
    return {
        "periods_used": rep.periods_used,
        "last_step_size": rep.last_step_size,
        "stability": rep.stability,
        "monotone": rep.monotone,
        "max_residual": rep.max_residual,
    }


def _write_path(run, name, game, theta, sched, T):
    if T == 0:
        write_csv(run.file(name), PATH_COLUMNS, [])
        return None, None
    path = kernel.threshold_path(game, sched, T)
    lam = (
        kernel.aggregate_play(theta, path, sched).lam
        if theta is not None
        else np.full(T, math.nan)
    )
    rows = path_rows(sched.times[:T], path.mu_star, path.gamma, sched.A[:T], sched.eta2[:T], lam)
    write_csv(run.file(name), PATH_COLUMNS, rows)
    return path, lam


def cmd_simulate(run):
    """Threshold and play paths for one configuration."""
    game, theta = build_game(run.cfg)
    spec = build_spec(run.cfg)
    T = run.run["T"]
    if T < 0:
        raise ConfigError("T must be non-negative")
    sched = processes.materialize(spec, T) if T else None
    path, lam = _write_path(run, "thresholds.csv", game, theta, sched, T)
    _write_path(run, "play.csv", game, theta, sched, T)
    rep = run.limit(game, spec)
    diag = _limit_diag(rep)
    if T >= 16:
        cls = processes.classify_growth(sched)
        diag["growth"] = cls.verdict.value
        diag["growth_exponent"] = cls.exponent
    if T:
        diag["final_mu_star"] = path.mu_star[-1]
        diag["final_lambda"] = lam[-1]
        diag["max_residual_path"] = float(path.residuals.max())
    if theta is not None and rep.converged:
        diag["limit_play"] = analysis.limit_play(theta, rep)
    if run.args.plot and T:
        series = {"mu_star": path.mu_star}
        if theta is not None:
            series["lambda"] = lam
        write_svg(run.file("plot.svg"), sched.times, series, title="threshold and play")
    run.summary(rep.mu_inf, rep.gamma_inf, rep.converged, rep.regime, **diag)


def cmd_limit(run):
    """Limit threshold and limit play."""
    game, theta = build_game(run.cfg)
    rep = run.limit(game, build_spec(run.cfg))
    diag = _limit_diag(rep)
    if theta is not None and rep.converged:
        diag["limit_play"] = analysis.limit_play(theta, rep)
    run.summary(rep.mu_inf, rep.gamma_inf, rep.converged, rep.regime, **diag)


def cmd_design(run):
    """Synthesize a learning process for a target limit threshold."""
    game, _ = build_game(run.cfg)
    d = run.cfg.require("design")
    target = designer.DesignTarget(d["mu_target"], game.lambda0, game.c)
    res = designer.design_process(target, verify_T=d["verify_T"])
    N = res.truncation_index
    t = np.arange(1, N + 1)
    write_csv(
        run.file("design.csv"),
        ("t", "gamma", "A", "eta2", "sigma2"),
        zip(t, res.gamma, res.A, res.eta2, res.sigma2),
    )
    diag = {k: v for k, v in res.diagnostics.items() if k != "slack"}
    diag["min_sigma_inv2"] = float(np.min(1.0 / res.sigma2))
    body = {
        "target": target.mu_target,
        "achieved_mu_inf": res.achieved_mu_inf,
        "gamma_star": res.gamma_star,
        "gamma2": res.gamma2,
        "truncation_index": N,
        "tail_bound": res.tail_bound,
        "eta1_sq": res.eta1_sq,
        "diagnostics": diag,
    }
    write_json(run.file("design.json"), body)
    if run.args.plot:
        write_svg(run.file("plot.svg"), t[1:], {"log10 A": np.log10(res.A[1:])}, title="designed step scales")
    gamma_inf = res.gamma_star
    run.summary(res.achieved_mu_inf, gamma_inf, True, diag["verify_regime"], **body)


def cmd_classify(run):
    """Classify posterior-precision growth against t^2."""
    spec = build_spec(run.cfg)
    c = run.cfg.section("classify")
    sched = processes.materialize(spec, c["T"])
    window = None
    if c["window_lo"] is not None or c["window_hi"] is not None:
        window = (c["window_lo"] or c["T"] // 2 + 1, c["window_hi"] or c["T"])
    cls = processes.classify_growth(sched, window, c["delta"])
    run.summary(
        regime=cls.verdict.value,
        verdict=cls.verdict.value,
        exponent=cls.exponent,
        superpolynomial=cls.superpolynomial,
        window=list(cls.window),
    )


def cmd_finite(run):
    """Finite-population Monte Carlo against the continuum path."""
    game, theta = build_game(run.cfg)
    if theta is None:
        raise ConfigError("[game] needs theta for the finite-player simulation")
    spec = build_spec(run.cfg)
    f = run.cfg.require("finite")
    results, digests, rows = [], {}, []
    for N in f["N"]:
        fsc = finite.FiniteSimConfig(N, f["T"], theta, run.seed, f["replications"])
        res = finite.simulate_finite(game, spec, fsc, workers=f["workers"])
        results.append(res)
        digests[str(N)] = res.digest()
        rows.extend((N, r, e) for r, e in enumerate(res.sup_error))
    write_csv(run.file("finite.csv"), ("N", "rep", "sup_error"), rows)
    table = (
        finite.concentration_report(results)
        if len(results) >= 2
        else [(r.config.N, r.mean_sup_error, r.p95_sup_error) for r in results]
    )
    run.summary(
        concentration=[{"N": n, "mean": m, "p95": p} for n, m, p in table],
        digests=digests,
        seed=run.seed,
    )


def cmd_phase(run):
    """Limit-action phase diagram over (lambda0, theta)."""
    game, _ = build_game(run.cfg)
    spec = build_spec(run.cfg)
    ph = run.cfg.require("phase")
    diagram = analysis.phase_diagram(
        spec, ph["lambda0_grid"], ph["theta_grid"], c=game.c, T_max=ph["T_max"], tol=run.run["tol"]
    )
    write_csv(run.file("phase.csv"), ("lambda0", "theta", "limit_action", "mu_inf"), diagram.rows)
    if not all(diagram.converged.values()):
        run.unconverged.append(diagram)
    if run.args.plot:
        l0 = sorted(diagram.boundary)
        write_svg(
            run.file("plot.svg"), l0, {"mu_inf": [diagram.boundary[x] for x in l0]},
            title="limit-play boundary", xlabel="lambda0",
        )
    run.summary(
        converged=all(diagram.converged.values()),
        boundary=[{"lambda0": k, "mu_inf": v} for k, v in sorted(diagram.boundary.items())],
    )


def cmd_transition(run):
    """Sudden/gradual transition verdict for a play path."""
    game, theta = build_game(run.cfg)
    if theta is None:
        raise ConfigError("[game] needs theta for transition detection")
    spec = build_spec(run.cfg)
    tr = run.cfg.section("transition")
    sched = processes.materialize(spec, tr["T"])
    path, lam = _write_path(run, "play.csv", game, theta, sched, tr["T"])
    play = kernel.PlayPath(theta, lam)
    sigma = spec.sigma if isinstance(spec, processes.IID) else None
    rep = analysis.detect_transition(
        play, theta, game, tr["epsilon"], tr["alpha"], tr["beta"], sigma=sigma
    )
    if run.args.plot:
        write_svg(run.file("plot.svg"), sched.times, {"lambda": lam}, title=f"{rep.regime} transition")
    run.summary(
        regime=rep.regime,
        T_cross=rep.T_cross,
        max_step=rep.max_step,
        epsilon=rep.epsilon,
        alpha=rep.alpha,
        beta=rep.beta,
        beta_bar=rep.beta_bar,
        step_bound=rep.step_bound,
    )


def cmd_reduce(run):
    """Fold past-play signals into an equivalent state-signal process."""
    game, theta = build_game(run.cfg)
    r = run.cfg.require("reduce")
    pp = processes.PastPlaySpec(tuple(r["sigma2"]), tuple(r["tau2"]))
    reduced = processes.reduce_past_play_signals(pp, r["T"])
    sched = processes.materialize(reduced, r["T"])
    write_csv(run.file("reduced.csv"), ("t", "sigma2"), zip(range(1, r["T"] + 1), reduced.sigma2))
    _write_path(run, "play.csv", game, theta, sched, r["T"])
    cls = processes.classify_growth(sched, (1, r["T"])) if r["T"] >= 8 else None
    run.summary(
        regime=cls.verdict.value if cls else None,
        sigma2=list(reduced.sigma2),
        precision=sched.precision,
    )


def cmd_refine(run):
    """Threshold paths on refined time grids."""
    game, theta = build_game(run.cfg)
    spec = build_spec(run.cfg)
    rf = run.cfg.section("refine")
    T = rf["T"]
    integer_paths = {}
    for n in rf["n"]:
        sched = processes.refine_time_grid(spec, n, T)
        path, _ = _write_path(run, f"refine_n{n}.csv", game, theta, sched, len(sched))
        integer_paths[n] = path.mu_star[n - 1::n]
    ns = sorted(integer_paths)
    gaps = {
        f"{a}-{b}": float(np.max(np.abs(integer_paths[a] - integer_paths[b])))
        for a, b in zip(ns, ns[1:])
    }
    run.summary(integer_time_gaps=gaps, n=ns)


def cmd_idsds(run):
    """Iterated-deletion cutoffs of the contemporaneous game."""
    game, _ = build_game(run.cfg)
    i = run.cfg.require("idsds")
    upper, lower = analysis.idsds_contemporaneous_cutoffs(i["eta"], game.c, i["k_max"])
    write_csv(run.file("idsds.csv"), ("k", "upper", "lower"), zip(range(upper.size), upper, lower))
    gap = abs(upper[-1] - lower[-1])
    converged = bool(gap < 1e-10)
    if not converged:
        run.unconverged.append(gap)
    run.summary(
        mu_inf=0.5 * (upper[-1] + lower[-1]),
        converged=converged,
        iterations=upper.size - 1,
        final_gap=gap,
    )


COMMANDS = {
    "simulate": cmd_simulate,
    "design": cmd_design,
    "limit": cmd_limit,
    "classify": cmd_classify,
    "finite": cmd_finite,
    "phase": cmd_phase,
    "transition": cmd_transition,
    "reduce": cmd_reduce,
    "refine": cmd_refine,
    "idsds": cmd_idsds,
}

CONFIG_HELP = """\
configuration sections and keys (defaults in parentheses):
  [game]       c (1), lambda0 (required), theta, a (1), b (1)
  [learning]   process = IID | OneShot | SocialDoubling | PowerPrecision |
               GeometricPrecision | Explicit; sigma; C; p; r;
               sigma2 (comma list, 'inf' allowed); tail (inf); prefix (comma list)
  [run]        T (100), tol (1e-10), T_max (100000), seed (0)
  [design]     mu_target (required), verify_T (400)
  [finite]     N (comma list, 100), T (50), replications (200), workers (1)
  [phase]      lambda0_grid, theta_grid (comma lists), T_max (100000)
  [transition] epsilon (0.05), alpha (0.5), beta (min(1.04, (1+beta_bar)/2)), T (2000)
  [reduce]     sigma2, tau2 (comma lists; tau2 starts at t = 2), T
  [refine]     n (1,2,8), T (50)
  [idsds]      eta (required), k_max (1000)
  [classify]   T (1000), window_lo, window_hi (last half), delta (0.15)

exit codes: 0 ok, 2 configuration error, 3 numerical failure,
            4 unconverged limit with --strict
"""


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="INI configuration file or a previous summary.json")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides [run] seed)")
    common.add_argument("--plot", action="store_true", help="also write plot.svg")
    common.add_argument("--strict", action="store_true", help="exit 4 if a limit does not converge")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    parser = argparse.ArgumentParser(
        prog="inertial-games",
        description="Threshold dynamics, learning-process design and limit play in inertial coordination games.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(
            name, parents=[common], help=(fn.__doc__ or "").strip().rstrip("."),
            epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter,
        )
    return parser


def _fail(code, exc):
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    t = getattr(exc, "t", None)
    if t is not None:
        err["t"] = t
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = read_config(args.config)
        for name in COMMAND_SECTIONS[args.command]:
            if name in ("game", "learning") and name not in cfg.values:
                raise ConfigError(f"'{args.command}' needs a [{name}] section")
        run = Run(args, cfg)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](run)
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, exc)
    except (NumericalError, ArithmeticError) as exc:
        return _fail(EXIT_NUMERIC, exc)
    if args.strict and run.unconverged:
        return _fail(EXIT_UNCONVERGED, UnconvergedError("limit computation did not converge"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

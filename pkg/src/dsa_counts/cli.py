"""Command-line interface: ``dsa-counts {simulate,fit,replicate,density,tau}``.

Settings are resolved as recipe < config file < command-line flags. Every
command accepts ``--config``, ``--seed`` and ``--out`` and writes a
``manifest.json`` whose ``config`` block can be fed back via ``--config`` to
repeat the run.
"""

from __future__ import annotations

import argparse
import copy
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dynamics import GridSpec, ModelParams, Variant, parameter_names, solve
from .errors import ConfigError, DSAError
from .inference import FitSpec, PriorSpec, SamplerConfig, Scenario, fit, replicate_study
from .io import (
    read_counts_csv,
    read_events_json,
    write_counts_csv,
    write_density_csv,
    write_draws_csv,
    write_events_json,
    write_json,
)
from .likelihood import density_infection, estimate_population, solve_tau
from .recipes import get_recipe
from .simulate import aggregate_counts, make_rng, sellke_simulate, sellke_simulate_frailty, simulate_dsa_events

log = logging.getLogger("dsa_counts")

EXIT_CODES = {
    "config": 2,
    "parse": 3,
    "domain": 4,
    "degenerate": 4,
    "unsupported": 4,
    "integration": 5,
    "sampler": 5,
}

DEFAULTS = {
    "model": "standard",
    "seed": 0,
    "likelihood": "counts",
    "level": 0.05,
    "figures": True,
    "workers": None,
    "density_points": 500,
    "sampler": {"draws": 20000, "burn_in": None, "chains": 1, "adapt_window": 100},
    "data": {"path": None, "N": None, "M": None, "estimate_n": False},
    "scenario": {"truth": {}, "N": 1000, "M": None, "T": 10.0, "schedule": {"step": 1.0},
                 "generator": "dsa", "replicates": 50},
    "fixed": {},
    "priors": None,
}


# ---------------------------------------------------------------------------
# configuration


def deep_merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in (update or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key not in ("priors", "fixed"):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must contain a mapping")
    # a manifest from a previous run
    if "command" in raw and isinstance(raw.get("config"), dict):
        raw = raw["config"]
    return raw


def _flag_overrides(args) -> dict:
    o: dict = {}

    def put(path, value):
        if value is None:
            return
        node = o
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value

    get = lambda name: getattr(args, name, None)  # noqa: E731
    put(("model",), get("model"))
    put(("seed",), get("seed"))
    put(("out",), get("out"))
    put(("likelihood",), get("likelihood"))
    put(("workers",), get("workers"))
    put(("level",), get("level"))
    if get("no_figures"):
        o["figures"] = False
    put(("sampler", "draws"), get("draws"))
    put(("sampler", "burn_in"), get("burn_in"))
    put(("sampler", "chains"), get("chains"))
    put(("data", "path"), get("data"))
    if get("estimate_n"):
        put(("data", "estimate_n"), True)
    if args.command == "fit":
        put(("data", "N"), get("N"))
        put(("data", "M"), get("M"))
    else:
        put(("scenario", "N"), get("N"))
        put(("scenario", "M"), get("M"))
    put(("scenario", "T"), get("T"))
    put(("scenario", "generator"), get("generator"))
    put(("scenario", "replicates"), get("replicates"))
    if get("step") is not None:
        put(("scenario", "schedule"), {"step": args.step})
    for name in ("beta", "gamma", "rho", "nu"):
        put(("scenario", "truth", name), get(name))
    put(("density_points",), get("points"))
    for item in get("fix") or []:
        if "=" not in item:
            raise ConfigError(f"--fix expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        o.setdefault("fixed", {})[name.strip()] = float(value)
    return o


def resolve_config(args) -> dict:
    file_cfg = load_config_file(args.config) if getattr(args, "config", None) else {}
    flags = _flag_overrides(args)
    recipe = getattr(args, "recipe", None) or file_cfg.get("recipe")
    cfg = copy.deepcopy(DEFAULTS)
    if recipe:
        cfg = deep_merge(cfg, get_recipe(recipe))
        cfg["recipe"] = recipe
    cfg = deep_merge(cfg, file_cfg)
    cfg = deep_merge(cfg, flags)
    cfg["command"] = args.command
    if cfg.get("out") is None:
        cfg["out"] = str(Path("runs") / args.command)
    path = cfg["data"].get("path")
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"data file not found: {path}")
        cfg["data"]["path"] = str(p.resolve())
    return cfg


@dataclass
class RunConfig:
    raw: dict

    @property
    def variant(self) -> Variant:
        try:
            return Variant(self.raw["model"])
        except ValueError:
            raise ConfigError(f"unknown model {self.raw['model']!r}; use standard, frailty or network") from None

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out(self) -> Path:
        return Path(self.raw["out"])

    @property
    def figures(self) -> bool:
        return bool(self.raw["figures"])

    def priors(self) -> PriorSpec:
        spec = self.raw.get("priors")
        return PriorSpec.default(self.variant) if not spec else PriorSpec.from_dict(spec)

    def fit_spec(self) -> FitSpec:
        priors = self.priors()
        fixed = {k: float(v) for k, v in (self.raw.get("fixed") or {}).items()}
        spec = FitSpec(self.variant, priors, self.raw["likelihood"], fixed,
                       estimate_n=bool(self.raw["data"].get("estimate_n")))
        missing = [n for n in spec.names if n not in priors.priors]
        if missing:
            raise ConfigError(f"no prior for sampled parameters {missing}")
        return spec

    def sampler(self) -> SamplerConfig:
        s = self.raw["sampler"]
        return SamplerConfig(int(s["draws"]), None if s.get("burn_in") is None else int(s["burn_in"]),
                             self.seed, int(s.get("adapt_window", 100)))

    @property
    def chains(self) -> int:
        return int(self.raw["sampler"].get("chains", 1))

    def truth(self) -> ModelParams:
        truth = dict(self.raw["scenario"].get("truth") or {})
        missing = [n for n in parameter_names(self.variant) if n not in truth]
        if missing:
            raise ConfigError(f"scenario truth is missing {missing}")
        return ModelParams(variant=self.variant, **{n: float(truth[n]) for n in parameter_names(self.variant)})

    def scenario_sizes(self):
        sc = self.raw["scenario"]
        truth = self.truth()
        N = int(sc["N"])
        M = sc.get("M")
        M = max(1, int(round(truth.rho * N))) if M is None else int(M)
        T = float(sc["T"])
        return N, M, T, build_schedule(sc.get("schedule"), T)

    def scenario(self) -> Scenario:
        N, M, T, schedule = self.scenario_sizes()
        sc = self.raw["scenario"]
        return Scenario(self.truth(), N, M, T, tuple(schedule), int(sc["replicates"]), sc["generator"],
                        self.fit_spec(), self.sampler(), float(self.raw["level"]))


def build_schedule(spec, T: float) -> np.ndarray:
    if isinstance(spec, dict) and "step" in spec:
        step = float(spec["step"])
        if not step > 0:
            raise ConfigError("schedule step must be positive")
        n = max(1, math.ceil(T / step - 1e-9))
        sched = np.minimum(np.arange(n + 1) * step, T)
        sched[-1] = T
        return sched
    if isinstance(spec, (list, tuple)):
        sched = np.array([float(x) for x in spec])
        if sched[0] != 0:
            sched = np.concatenate([[0.0], sched])
        return sched
    raise ConfigError("schedule must be {step: h} or a list of observation times")


def _prepare_out(cfg: RunConfig) -> Path:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(cfg: RunConfig, outputs, extra=None):
    manifest = {
        "command": cfg.raw["command"],
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.raw,
        "outputs": sorted(Path(p).name for p in outputs),
    }
    if extra:
        manifest.update(extra)
    path = cfg.out / "manifest.json"
    write_json(manifest, path)
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: RunConfig) -> list[Path]:
    """Simulate one epidemic; write events.json, counts.csv and the manifest."""
    out = _prepare_out(cfg)
    truth = cfg.truth()
    N, M, T, schedule = cfg.scenario_sizes()
    generator = cfg.raw["scenario"]["generator"]
    rng = make_rng(cfg.seed)
    if generator == "dsa":
        events = simulate_dsa_events(truth, N, M, T, rng)
    elif generator == "sellke":
        if truth.variant is Variant.POISSON_NETWORK:
            raise ConfigError("exact network simulation is not provided; use the dsa generator")
        sim = sellke_simulate_frailty if truth.variant is Variant.GAMMA_FRAILTY else sellke_simulate
        events = sim(truth, N, M, T, rng)
    else:
        raise ConfigError(f"unknown generator {generator!r}")
    counts = aggregate_counts(events, schedule)
    outputs = [out / "events.json", out / "counts.csv"]
    write_events_json(events, outputs[0])
    write_counts_csv(counts, outputs[1])
    if cfg.figures:
        from .plotting import plot_counts

        outputs.append(out / "counts.png")
        plot_counts(counts, outputs[-1], title=f"{generator} epidemic, K={counts.K}")
    outputs.append(_write_manifest(cfg, outputs, {"K": counts.K}))
    log.info("simulated K=%d infections", counts.K)
    return outputs


def _load_data(cfg: RunConfig, selector: str):
    d = cfg.raw["data"]
    path = d.get("path")
    if not path:
        raise ConfigError("fit needs a data file (--data or data.path)")
    if path.endswith(".json"):
        events = read_events_json(path)
        if selector == "counts":
            raise ConfigError("an event record was given; choose --likelihood complete, times or times_n")
        return events
    if selector != "counts":
        raise ConfigError(f"the {selector!r} likelihood needs an event-record JSON file")
    N = d.get("N")
    M = d.get("M")
    return read_counts_csv(path, None if N is None else int(N), None if M is None else int(M))


def cmd_fit(cfg: RunConfig) -> list[Path]:
    """Fit a model; write draws, summaries, the fitted infection-time density and the manifest."""
    spec = cfg.fit_spec()
    data = _load_data(cfg, spec.selector)
    out = _prepare_out(cfg)
    result = fit(data, spec, cfg.sampler(), level=float(cfg.raw["level"]), chains=cfg.chains)
    mean_params = result.posterior_mean_params()
    T = data.T
    traj = solve(mean_params, GridSpec.default(T))
    t = np.linspace(0.0, T, int(cfg.raw["density_points"]))
    density = density_infection(traj, t, T)

    outputs = [out / "draws.csv", out / "summary.json", out / "summary.txt", out / "density.csv"]
    draws_chains = result.chains
    if len(draws_chains) == 1:
        write_draws_csv(draws_chains[0], outputs[0])
    else:
        _write_pooled_draws(draws_chains, outputs[0])
    summary = {
        "model": spec.variant.value,
        "likelihood": spec.selector,
        "fixed": spec.fixed,
        "posterior": result.summary.to_dict(),
        "posterior_mean": mean_params.as_dict(),
        "R0_at_mean": mean_params.R0,
        "mode": dict(zip(spec.names, result.mode)),
        "data": {"K": int(data.K), "N": data.N, "T": T},
    }
    if spec.selector == "counts" and spec.estimate_n:
        summary["N_hat"] = estimate_population(data, traj)
    write_json(summary, outputs[1])
    text = result.summary.table()
    if "N_hat" in summary:
        text += f"N_hat at posterior mean: {summary['N_hat']}\n"
    outputs[2].write_text(text, encoding="utf-8", newline="\n")
    write_density_csv(t, density, outputs[3])
    if cfg.figures:
        from .plotting import plot_density_overlay, plot_traces

        counts = data if spec.selector == "counts" else aggregate_counts(data, build_schedule({"step": 1.0}, T))
        outputs += [out / "density.png", out / "trace.png"]
        plot_density_overlay(counts, t, density, outputs[-2])
        plot_traces(result.chain, outputs[-1])
    outputs.append(_write_manifest(cfg, outputs))
    return outputs


def _write_pooled_draws(chains, path):
    from .io import _write_text, format_float

    names = list(chains[0].names)
    lines = [",".join(["chain"] + names + ["log_post"])]
    for k, c in enumerate(chains):
        lp = c.log_post[c.burn_in:]
        for row, v in zip(c.retained, lp):
            lines.append(",".join([str(k)] + [format_float(x) for x in row] + [format_float(v)]))
    _write_text(path, "\n".join(lines) + "\n")


def cmd_replicate(cfg: RunConfig) -> list[Path]:
    """Run a coverage study; write coverage.json, coverage.txt and the manifest."""
    scenario = cfg.scenario()
    out = _prepare_out(cfg)
    workers = cfg.raw.get("workers")

    def progress(done, total):
        log.info("replicate %d/%d", done, total)

    report = replicate_study(scenario, cfg.seed, workers=workers, progress=progress)
    outputs = [out / "coverage.json", out / "coverage.txt"]
    write_json(report.to_dict(), outputs[0])
    outputs[1].write_text(report.table(), encoding="utf-8", newline="\n")
    if cfg.figures:
        from .plotting import plot_coverage

        outputs.append(out / "coverage.png")
        plot_coverage(report, outputs[-1])
    outputs.append(_write_manifest(cfg, outputs))
    return outputs


def cmd_density(cfg: RunConfig) -> list[Path]:
    """Infection-time density at given parameters on ``density_points`` times."""
    out = _prepare_out(cfg)
    params = cfg.truth()
    T = float(cfg.raw["scenario"]["T"])
    traj = solve(params, GridSpec.default(T))
    t = np.linspace(0.0, T, int(cfg.raw["density_points"]))
    outputs = [out / "density.csv"]
    write_density_csv(t, density_infection(traj, t, T), outputs[0])
    outputs.append(_write_manifest(cfg, outputs))
    return outputs


def cmd_tau(args) -> float:
    tau = solve_tau(args.R0, args.rho).tau
    print(repr(tau))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json({"R0": args.R0, "rho": args.rho, "tau": tau}, Path(args.out) / "tau.json")
    return tau


# ---------------------------------------------------------------------------
# argument parsing


def _common(p):
    p.add_argument("--config", help="YAML/JSON config file (or a previous manifest.json)")
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--out", help="output directory")


def _model_flags(p):
    p.add_argument("--recipe", help="preset: dsa-benchmark, sellke-benchmark, frailty, network, ebola, covid, covid-frailty")
    p.add_argument("--model", choices=[v.value for v in Variant])
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")


def _truth_flags(p):
    for name in ("beta", "gamma", "rho", "nu"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--T", type=float, help="observation horizon")


def _scenario_flags(p):
    _truth_flags(p)
    p.add_argument("--N", type=int, help="initial susceptibles")
    p.add_argument("--M", type=int, help="initial infected (default round(rho N))")
    p.add_argument("--step", type=float, help="observation interval length")
    p.add_argument("--generator", choices=["dsa", "sellke"])


def _sampler_flags(p):
    p.add_argument("--draws", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--likelihood", choices=["counts", "complete", "times", "times_n"])
    p.add_argument("--fix", action="append", metavar="NAME=VALUE", help="pin a parameter, e.g. gamma=0.1667")
    p.add_argument("--level", type=float, help="credible interval tail mass (default 0.05)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsa-counts", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one epidemic and its interval counts")
    _common(p), _model_flags(p), _scenario_flags(p)

    p = sub.add_parser("fit", help="fit a model to a count CSV or event JSON")
    _common(p), _model_flags(p), _sampler_flags(p)
    p.add_argument("--data", help="counts CSV or events JSON")
    p.add_argument("--N", type=int, help="initial susceptibles (overrides the file)")
    p.add_argument("--M", type=int)
    p.add_argument("--estimate-n", dest="estimate_n", action="store_true",
                   help="replace unknown N by K / (1 - s_T) at each parameter value")
    p.add_argument("--points", type=int, help="density grid size (default 500)")

    p = sub.add_parser("replicate", help="simulation study of coverage")
    _common(p), _model_flags(p), _scenario_flags(p), _sampler_flags(p)
    p.add_argument("--replicates", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("density", help="infection-time density at fixed parameters")
    _common(p), _model_flags(p), _truth_flags(p)
    p.add_argument("--points", type=int)

    p = sub.add_parser("tau", help="final-size probability for R0 and rho")
    _common(p)
    p.add_argument("--R0", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    return parser


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "replicate": cmd_replicate, "density": cmd_density}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "tau":
            cmd_tau(args)
            return 0
        cfg = RunConfig(resolve_config(args))
        outputs = COMMANDS[args.command](cfg)
        for path in outputs:
            print(path)
        return 0
    except DSAError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())

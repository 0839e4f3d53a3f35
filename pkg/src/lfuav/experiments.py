"""Experiment drivers behind the command-line interface.

Each ``run_*`` function writes its CSV outputs and a ``manifest.json`` into
an output directory and returns a small result object. The learning code is
imported lazily so that validation and outage maps never load it.

CSV schemas (header row always present):

``validation.csv``
    case, user, n1, n2, d, gbar0, gbar1, gbar2, closed_form, monte_carlo,
    std_error, z, status
``outage_map.csv``
    n1, n2, p_out_user1 .. p_out_userK, p_out_sum
``rewards.csv``
    episode, reward
``outage.csv``
    episode, outage_sum (summed outage at the last position of the episode)
``trajectory.csv``
    step, n1, n2, outage_sum (greedy rollout of the final policy; step 0 is
    the start position, outage evaluated at full quadrature precision)
``compare.csv``
    agent, d1, d2, seed, final_n1, final_n2, final_outage, grid_optimum,
    ratio, episodes_to_10pct, last50_reward_var, first50_reward_mean,
    last50_reward_mean
``compare_summary.csv``
    agent, d1, d2, runs, mean_final_outage, mean_episodes_to_10pct,
    mean_last50_reward_var
``curves.csv``
    agent, d1, d2, seed, episode, reward, outage_sum
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig
from .env import GridOutageCache, RelayEnv, SystemOutageFn
from .geometry import link_budget
from .outage import outage_closed_form, outage_monte_carlo
from .quadrature import QuadratureError

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
MANIFEST_VERSION = 1


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__
        return __version__


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    # floats go through repr, which round-trips and is platform independent
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    command: str
    args: dict
    config: dict
    config_hash: str
    seed: int
    code_version: str
    started: str
    finished: str | None = None
    status: str = "running"
    outputs: list[str] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    manifest_version: int = MANIFEST_VERSION

    @classmethod
    def begin(cls, command: str, cfg: ExperimentConfig, out: Path, **args) -> "RunManifest":
        man = cls(command, args, cfg.raw, cfg.hash(), int(cfg.raw["seed"]), code_version(), _now())
        out.mkdir(parents=True, exist_ok=True)
        man.write(out)
        return man

    def finish(self, out: Path, outputs: Sequence[Path], results: dict, status: str = "complete") -> None:
        self.outputs = sorted(p.name for p in outputs)
        self.results = results
        self.status = status
        self.finished = _now()
        self.write(out)

    def write(self, out: Path) -> Path:
        path = out / MANIFEST
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST
        return cls(**json.loads(path.read_text()))


def seeded(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    """The config with ``seed`` overriding its own (None keeps it)."""
    return cfg if seed is None else cfg.with_overrides(seed=int(seed))


# ---------------------------------------------------------------------------
# validate


@dataclass(frozen=True)
class ValidationRow:
    case: int
    user: int
    n1: float
    n2: float
    d: float
    gbar: tuple[float, float, float]
    closed_form: float
    monte_carlo: float
    std_error: float
    z: float
    status: str


@dataclass
class ValidationReport:
    rows: list[ValidationRow]
    z_pass: float
    z_fail: float

    def cases(self) -> dict[int, list[ValidationRow]]:
        out: dict[int, list[ValidationRow]] = {}
        for r in self.rows:
            out.setdefault(r.case, []).append(r)
        return out

    @property
    def cases_within(self) -> int:
        """Geometries where every user agrees within ``z_pass`` standard errors."""
        return sum(all(r.status == "ok" and abs(r.z) <= self.z_pass for r in rs)
                   for rs in self.cases().values())

    @property
    def violations(self) -> list[ValidationRow]:
        return [r for r in self.rows if r.status != "ok" or abs(r.z) > self.z_fail]


def _z(cf: float, mc: float, se: float) -> float:
    if se > 0:
        return (mc - cf) / se
    # a zero-variance MC estimate (all or no samples in outage) is exact for 0 or 1
    return 0.0 if abs(mc - cf) <= 1e-8 else math.inf


def validation_geometries(cfg: ExperimentConfig) -> list[tuple[float, float, float]]:
    """Random UAV positions in the area, with D cycling through the configured values."""
    v = cfg.raw["validate"]
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.raw["seed"]), 1]))
    x0, x1, y0, y1 = cfg.raw["env"]["area"]
    ds = v["d_values"]
    out = []
    for i in range(int(v["n_geometries"])):
        n1, n2 = rng.uniform(x0, x1), rng.uniform(y0, y1)
        out.append((float(n1), float(n2), float(ds[i % len(ds)])))
    return out


def validate_outage(cfg: ExperimentConfig) -> ValidationReport:
    v = cfg.raw["validate"]
    radio, a2g, quad, m = cfg.radio(), cfg.a2g(), cfg.quad(), cfg.m
    rows = []
    for case, (n1, n2, d) in enumerate(validation_geometries(cfg)):
        layout = cfg.layout((n1, n2))
        spec = cfg.specs([d] * layout.n_users)[0]
        for k in range(layout.n_users):
            budget = link_budget(layout, radio, a2g, k)
            gbar = (budget.g0, budget.g1, budget.g2)
            mc = outage_monte_carlo(budget, spec, m, int(v["mc_samples"]),
                                    seed=[int(cfg.raw["seed"]), 2, case, k], workers=int(v["mc_workers"]))
            try:
                cf = outage_closed_form(budget, spec, m, quad).value
                status = "ok"
            except QuadratureError as exc:
                log.warning("case %d user %d: %s", case, k + 1, exc)
                cf, status = math.nan, "quadrature_failure"
            z = _z(cf, mc.value, mc.std_error) if status == "ok" else math.nan
            rows.append(ValidationRow(case, k + 1, n1, n2, d, gbar, cf, mc.value, mc.std_error, z, status))
    return ValidationReport(rows, float(v["z_pass"]), float(v["z_fail"]))


def run_validate(cfg: ExperimentConfig, out: Path) -> ValidationReport:
    out = Path(out)
    man = RunManifest.begin("validate", cfg, out)
    report = validate_outage(cfg)
    path = write_csv(out / "validation.csv",
                     ["case", "user", "n1", "n2", "d", "gbar0", "gbar1", "gbar2", "closed_form",
                      "monte_carlo", "std_error", "z", "status"],
                     ([r.case, r.user, r.n1, r.n2, r.d, *r.gbar, r.closed_form, r.monte_carlo,
                       r.std_error, r.z, r.status] for r in report.rows))
    results = {"cases": len(report.cases()), "cases_within_z_pass": report.cases_within,
               "violations": len(report.violations)}
    man.finish(out, [path], results, "complete" if not report.violations else "violation")
    return report


# ---------------------------------------------------------------------------
# outage map / grid oracle


@dataclass
class OutageMap:
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # (nx, ny, K)

    @property
    def total(self) -> np.ndarray:
        return self.values.sum(axis=2)

    def argmin(self) -> tuple[float, float, float]:
        t = self.total
        i, j = np.unravel_index(int(np.argmin(t)), t.shape)
        return float(self.xs[i]), float(self.ys[j]), float(t[i, j])


def outage_map(cfg: ExperimentConfig, grid_n: int | None = None, d: Sequence[float] | None = None) -> OutageMap:
    n = int(cfg.raw["outage_map"]["grid_n"] if grid_n is None else grid_n)
    if n < 2:
        raise ConfigError("grid_n must be >= 2")
    fn = SystemOutageFn(cfg.layout(), cfg.radio(), cfg.a2g(), cfg.specs(d), cfg.m, cfg.quad())
    x0, x1, y0, y1 = cfg.raw["env"]["area"]
    xs, ys = np.linspace(x0, x1, n), np.linspace(y0, y1, n)
    values = np.array([[fn(x, y) for y in ys] for x in xs])
    return OutageMap(xs, ys, values)


def run_outage_map(cfg: ExperimentConfig, out: Path, grid_n: int | None = None) -> OutageMap:
    out = Path(out)
    grid_n = int(cfg.raw["outage_map"]["grid_n"] if grid_n is None else grid_n)
    man = RunManifest.begin("outage-map", cfg, out, grid_n=grid_n)
    omap = outage_map(cfg, grid_n)
    k = omap.values.shape[2]
    header = ["n1", "n2", *[f"p_out_user{u + 1}" for u in range(k)], "p_out_sum"]
    rows = ([float(x), float(y), *map(float, omap.values[i, j]), float(omap.total[i, j])]
            for i, x in enumerate(omap.xs) for j, y in enumerate(omap.ys))
    path = write_csv(out / "outage_map.csv", header, rows)
    n1, n2, best = omap.argmin()
    man.finish(out, [path], {"argmin": [n1, n2], "argmin_outage_sum": best})
    return omap


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    agent: str
    seed: int
    d: tuple[float, ...]
    rewards: list[float]
    outage: list[float]
    trajectory: list[tuple[float, float]]
    trajectory_outage: list[float]
    mu: float

    @property
    def final_position(self) -> tuple[float, float]:
        return self.trajectory[-1]

    @property
    def final_outage(self) -> float:
        return self.trajectory_outage[-1]

    def first_mean(self, n: int = 50) -> float:
        return float(np.mean(self.rewards[:n]))

    def last_mean(self, n: int = 50) -> float:
        return float(np.mean(self.rewards[-n:]))

    def last_var(self, n: int = 50) -> float:
        return float(np.var(self.rewards[-n:]))

    def episodes_to_within(self, frac: float = 0.1) -> int:
        """First episode (1-based) whose reward is within ``frac`` of the best episode."""
        r = np.asarray(self.rewards)
        return int(np.argmax(r >= (1.0 - frac) * r.max())) + 1


def training_outage_fn(cfg: ExperimentConfig, d: Sequence[float] | None = None):
    """Relaxed-tolerance outage, optionally replaced by a bilinear lattice cache."""
    fn = SystemOutageFn(cfg.layout(), cfg.radio(), cfg.a2g(), cfg.specs(d), cfg.m, cfg.quad(relaxed=True))
    e = cfg.raw["env"]
    if e["grid_cache"]:
        return GridOutageCache(fn, cfg.env_config(mu=1.0), int(e["grid_cache_n"]))
    return fn


def resolve_mu(cfg: ExperimentConfig, outage_fn) -> float:
    """``env.mu``, with ``"auto"`` meaning the value that makes the start reward one."""
    mu = cfg.raw["env"]["mu"]
    if mu != "auto":
        return float(mu)
    start = cfg.raw["env"]["start"]
    per_user = np.asarray(outage_fn(float(start[0]), float(start[1])))
    return per_user.size / max(float(per_user.sum()), float(cfg.raw["env"]["eps_guard"]))


def train_agent(cfg: ExperimentConfig, agent: str, seed: int | None = None,
                d: Sequence[float] | None = None, outage_fn=None, checkpoint: Path | None = None,
                progress_every: int = 0) -> TrainResult:
    from .rl.checkpoint import save_checkpoint
    from .rl.train import Trainer, greedy_rollout

    seed = int(cfg.raw["seed"] if seed is None else seed)
    d = tuple(cfg.raw["distortion"]["d"] if d is None else d)
    if outage_fn is None:
        outage_fn = training_outage_fn(cfg, d)
    mu = resolve_mu(cfg, outage_fn)
    env = RelayEnv(cfg.env_config(mu=mu), outage_fn)
    trainer = Trainer(env, agent, cfg.agent(), cfg.train(), seed)

    def progress(t):
        if progress_every and t.episode % progress_every == 0:
            log.info("%s seed %d D=%s episode %d reward %.4g outage %.4g", agent, seed, d,
                     t.episode, t.log.episode_rewards[-1], t.log.episode_outage[-1])

    trainer.run(progress=progress)
    positions, _ = greedy_rollout(env, trainer.agent)
    exact = SystemOutageFn(cfg.layout(), cfg.radio(), cfg.a2g(), cfg.specs(d), cfg.m, cfg.quad())
    exact_outage = [float(np.sum(exact(*p))) for p in positions]
    if checkpoint is not None:
        save_checkpoint(trainer, checkpoint, extra={"config_hash": cfg.hash(), "d": list(d), "mu": mu})
    return TrainResult(agent, seed, d, list(trainer.log.episode_rewards), list(trainer.log.episode_outage),
                       [tuple(p) for p in positions], exact_outage, mu)


def run_train(cfg: ExperimentConfig, out: Path, agent: str) -> TrainResult:
    out = Path(out)
    man = RunManifest.begin("train", cfg, out, agent=agent)
    res = train_agent(cfg, agent, checkpoint=out / "checkpoint.npz", progress_every=25)
    files = [
        write_csv(out / "rewards.csv", ["episode", "reward"],
                  ((i + 1, r) for i, r in enumerate(res.rewards))),
        write_csv(out / "outage.csv", ["episode", "outage_sum"],
                  ((i + 1, o) for i, o in enumerate(res.outage))),
        write_csv(out / "trajectory.csv", ["step", "n1", "n2", "outage_sum"],
                  ((i, p[0], p[1], o) for i, (p, o) in enumerate(zip(res.trajectory, res.trajectory_outage)))),
        out / "checkpoint.npz",
    ]
    results = {"final_position": list(res.final_position), "final_outage": res.final_outage, "mu": res.mu,
               "first50_reward_mean": res.first_mean(), "last50_reward_mean": res.last_mean()}
    man.finish(out, files, results)
    return res


# ---------------------------------------------------------------------------
# comparison


@dataclass
class CompareReport:
    runs: list[TrainResult]
    optimum: dict[tuple[float, ...], tuple[float, float, float]]
    flags: list[str]

    def select(self, agent: str, d: tuple[float, ...]) -> list[TrainResult]:
        return [r for r in self.runs if r.agent == agent and r.d == d]

    def mean_final_outage(self, agent: str, d: tuple[float, ...]) -> float:
        return float(np.mean([r.final_outage for r in self.select(agent, d)]))


def compare_seeds(cfg: ExperimentConfig) -> list[int]:
    seeds = [int(s) for s in cfg.raw["compare"]["seeds"]]
    # the top-level seed shifts the whole set so --seed picks a fresh matched group
    return [s + int(cfg.raw["seed"]) for s in seeds]


def compare_agents(cfg: ExperimentConfig) -> CompareReport:
    c = cfg.raw["compare"]
    seeds = compare_seeds(cfg)
    if len(seeds) < 2:
        raise ConfigError("compare needs at least two seeds")
    runs, optimum, flags = [], {}, []
    for d in (tuple(float(x) for x in pair) for pair in c["d_pairs"]):
        optimum[d] = outage_map(cfg, d=d).argmin()
        fn = training_outage_fn(cfg, d)  # shared: every agent and seed sees the same environment
        for agent in c["agents"]:
            for seed in seeds:
                runs.append(train_agent(cfg, agent, seed, d, outage_fn=fn))
    report = CompareReport(runs, optimum, flags)
    if {"sac", "ddpg"} <= set(c["agents"]):
        for d in optimum:
            sac, ddpg = report.mean_final_outage("sac", d), report.mean_final_outage("ddpg", d)
            if sac > ddpg:
                flags.append(f"SAC mean final outage {sac:.6g} exceeds DDPG {ddpg:.6g} at D={list(d)}")
    return report


def run_compare(cfg: ExperimentConfig, out: Path) -> CompareReport:
    out = Path(out)
    man = RunManifest.begin("compare", cfg, out)
    rep = compare_agents(cfg)
    rows, summary, curves = [], [], []
    for r in rep.runs:
        best = rep.optimum[r.d][2]
        rows.append([r.agent, *r.d, r.seed, *r.final_position, r.final_outage, best, r.final_outage / best,
                     r.episodes_to_within(), r.last_var(), r.first_mean(), r.last_mean()])
        curves += [[r.agent, *r.d, r.seed, i + 1, rew, o] for i, (rew, o) in enumerate(zip(r.rewards, r.outage))]
    groups = dict.fromkeys((r.agent, r.d) for r in rep.runs)
    for agent, d in groups:
        sel = rep.select(agent, d)
        summary.append([agent, *d, len(sel), rep.mean_final_outage(agent, d),
                        float(np.mean([r.episodes_to_within() for r in sel])),
                        float(np.mean([r.last_var() for r in sel]))])
    files = [
        write_csv(out / "compare.csv",
                  ["agent", "d1", "d2", "seed", "final_n1", "final_n2", "final_outage", "grid_optimum",
                   "ratio", "episodes_to_10pct", "last50_reward_var", "first50_reward_mean",
                   "last50_reward_mean"], rows),
        write_csv(out / "compare_summary.csv",
                  ["agent", "d1", "d2", "runs", "mean_final_outage", "mean_episodes_to_10pct",
                   "mean_last50_reward_var"], summary),
        write_csv(out / "curves.csv", ["agent", "d1", "d2", "seed", "episode", "reward", "outage_sum"], curves),
    ]
    results = {"flags": rep.flags,
               "grid_optimum": {",".join(map(str, d)): list(v) for d, v in rep.optimum.items()}}
    man.finish(out, files, results, "complete" if not rep.flags else "flagged")
    return rep

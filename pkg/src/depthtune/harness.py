"""Experiment orchestration: training, validation, surrogate and pretraining runs.

Run directory layout (``train``)::

    config.ini                  resolved configuration
    summary.csv                 one row per episode
    episodes/episode_NNN.csv    per-step records, t = 0..T
    sweep/init_NN.csv           greedy episodes from each sweep start layer
    weights/{actor,critic,fmodel}.fmdl

``validate`` writes ``validation/`` (episodes, summary, re-saved weights),
``surrogate`` writes ``summary.csv`` plus ``seed_NN/`` subdirectories, and
``fmodel-pretrain`` writes ``pretrain_report.csv``. ``report`` adds
``report/*.csv`` (and ``.svg``) next to the logs it reads.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

from . import data as data_mod
from .config import ExperimentConfig, dump_config
from .env import TargetEnv
from .fmodel import FModel, encode_dataset, pretrain_experiment
from .nn import load_network, save_network
from .plot import line_chart_svg
from .rl import ActorCritic, run_episode
from .seeding import derive_seed

log = logging.getLogger(__name__)

STEP_FIELDS = ["t", "layer", "loss", "reward", "action", "epsilon",
               "actor_loss", "critic_loss", "fault"]
SUMMARY_FIELDS = ["episode", "init_layer", "best_layer", "final_layer", "discounted_return",
                  "fmodel_prediction", "fmodel_loss"]


def fmt(value):
    """Stable text for CSV cells: shortest round-trip floats, blanks for NaN."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def episode_rows(ep_log):
    return [[r.t, r.layer, float(r.loss), float(r.reward), r.action, float(r.epsilon),
             float(r.actor_loss), float(r.critic_loss), r.fault] for r in ep_log.records]


def write_episode(path, ep_log):
    write_rows(path, STEP_FIELDS, episode_rows(ep_log))


def load_dataset(cfg):
    name = cfg.data.dataset
    if name == "boston":
        return data_mod.load_boston()
    if name == "iris":
        return data_mod.load_iris()
    return data_mod.load_csv(name, cfg.data.target, cfg.data.has_header)


def _prepare(ds, cfg):
    return data_mod.normalize(ds)[0] if cfg.data.normalize else ds


def training_data(cfg):
    raw = data_mod.take_top(load_dataset(cfg), cfg.data.top_k)
    return raw, _prepare(raw, cfg)


def validation_data(cfg):
    full = load_dataset(cfg)
    start = cfg.data.valid_start
    raw = data_mod.take_rows(full, start, min(start + cfg.data.top_k, full.n_rows))
    return raw, _prepare(raw, cfg)


def child_seeds(master):
    return {k: derive_seed(master, k) for k in ("env", "controller", "fmodel", "split")}


def _init_layer(cfg, fmodel, encoded):
    if cfg.run.init_layer == "fmodel":
        return fmodel.init_layer(encoded, cfg.env.layer_max)
    return min(max(int(cfg.run.init_layer), 1), cfg.env.layer_max)


def run_sweep(env, controller, inits, steps, out_dir, label="sweep"):
    """Greedy, non-learning episodes from each start layer."""
    logs = {}
    for init in inits:
        if not 1 <= init <= env.layer_max:
            raise ValueError(f"sweep start {init} outside [1, {env.layer_max}]")
        ep = run_episode(env, controller, init, steps, learn=False, epsilon=0.0,
                         nonce=f"{label}{init}", episode=init)
        if out_dir is not None:
            write_episode(Path(out_dir) / f"init_{init:02d}.csv", ep)
        logs[init] = ep
    return logs


def train_two_stage(env, controller, fmodel, encoded, episodes, steps, fmodel_steps,
                    init_layer, on_episode=None):
    """Each episode: refine the layer count with the controller, then pull the
    F model toward the episode's best layer. ``init_layer`` is a callable."""
    logs = []
    for m in range(1, episodes + 1):
        ep = run_episode(env, controller, init_layer(), steps, learn=True, nonce=m, episode=m)
        f_loss = fmodel.update(encoded, float(ep.best_layer), fmodel_steps)
        if on_episode is not None:
            on_episode(ep, f_loss)
        logs.append(ep)
    return logs


@dataclass
class TrainingResult:
    out_dir: Path
    episodes: list
    sweep: dict
    controller: ActorCritic
    fmodel: FModel


def run_training(cfg: ExperimentConfig, out_dir, env=None):
    """The two-stage loop: episodes of controller refinement, then an F-model update.

    ``env`` replaces the target-network environment (e.g. with a surrogate);
    by default it is built from ``cfg.data`` and ``cfg.env``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = child_seeds(cfg.run.seed)
    raw, prepared = training_data(cfg)
    if env is None:
        env = TargetEnv(prepared, replace(cfg.env, seed=seeds["env"]))
    controller = ActorCritic(cfg.rl, seeds["controller"])
    fmodel = cfg.fmodel.build(seeds["fmodel"])
    encoded = encode_dataset(raw, cfg.fmodel.normalize)
    (out / "config.ini").write_text(dump_config(cfg), encoding="utf-8")

    summary = []

    def record(ep, f_loss):
        write_episode(out / "episodes" / f"episode_{ep.episode:03d}.csv", ep)
        summary.append([ep.episode, ep.init_layer, ep.best_layer, ep.final_layer,
                        float(ep.discounted_return), float(fmodel.predict(encoded)), f_loss])
        write_rows(out / "summary.csv", SUMMARY_FIELDS, summary)
        log.info("episode %d: init %d best %d final %d", ep.episode, ep.init_layer,
                 ep.best_layer, ep.final_layer)

    logs = train_two_stage(env, controller, fmodel, encoded, cfg.run.episodes, cfg.run.steps,
                           cfg.run.fmodel_steps, lambda: _init_layer(cfg, fmodel, encoded),
                           on_episode=record)
    sweep = run_sweep(env, controller, cfg.run.init_sweep, cfg.run.steps, out / "sweep")
    save_controller(controller, out / "weights")
    fmodel.save(out / "weights" / "fmodel.fmdl")
    return TrainingResult(out, logs, sweep, controller, fmodel)


def save_controller(controller, weights_dir):
    weights_dir = Path(weights_dir)
    weights_dir.mkdir(parents=True, exist_ok=True)
    save_network(controller.policy.net, weights_dir / "actor.fmdl")
    save_network(controller.value.net, weights_dir / "critic.fmdl")


def load_weights(weights_dir, cfg, seed):
    weights_dir = Path(weights_dir)
    for name in ("actor", "critic", "fmodel"):
        if not (weights_dir / f"{name}.fmdl").is_file():
            raise FileNotFoundError(f"missing weight file {weights_dir / (name + '.fmdl')}")
    controller = ActorCritic.from_networks(load_network(weights_dir / "actor.fmdl"),
                                           load_network(weights_dir / "critic.fmdl"),
                                           cfg.rl, seed)
    return controller, FModel.load(weights_dir / "fmodel.fmdl")


def run_validation(cfg: ExperimentConfig, weights_dir, out_dir, env=None):
    """Frozen episodes (no learning, epsilon 0) starting from the F-model's layer."""
    out = Path(out_dir) / "validation"
    seeds = child_seeds(cfg.run.seed)
    controller, fmodel = load_weights(weights_dir, cfg, derive_seed(cfg.run.seed, "validation"))
    raw, prepared = validation_data(cfg)
    if env is None:
        env = TargetEnv(prepared, replace(cfg.env, seed=seeds["env"]))
    init = fmodel.init_layer(encode_dataset(raw, cfg.fmodel.normalize), cfg.env.layer_max)
    logs, summary = [], []
    for k in range(1, cfg.run.validation_episodes + 1):
        ep = run_episode(env, controller, init, cfg.run.steps, learn=False, epsilon=0.0,
                         nonce=f"valid{k}", episode=k)
        write_episode(out / "episodes" / f"episode_{k:03d}.csv", ep)
        summary.append([k, ep.init_layer, ep.best_layer, ep.final_layer,
                        float(ep.discounted_return), float("nan"), float("nan")])
        logs.append(ep)
    write_rows(out / "summary.csv", SUMMARY_FIELDS, summary)
    save_controller(controller, out / "weights")
    fmodel.save(out / "weights" / "fmodel.fmdl")
    return logs


@dataclass
class SurrogateSeedResult:
    index: int
    seed: int
    terminal_layer: int
    argmin: int
    success: bool
    sweep_final: dict


def run_surrogate(cfg: ExperimentConfig, out_dir=None, tolerance=0):
    """Train one controller per seed on an analytic environment.

    Success means the terminal layer of a greedy episode from
    ``surrogate.init_layer`` lies within ``tolerance`` of the brute-force argmin.
    """
    sc = cfg.surrogate
    out = Path(out_dir) if out_dir is not None else None
    results = []
    for i in range(sc.seeds):
        seed = derive_seed(cfg.run.seed, "surrogate", i)
        env = sc.env(cfg.env.layer_max, seed=derive_seed(seed, "noise"))
        controller = ActorCritic(cfg.rl, seed)
        seed_dir = out / f"seed_{i:02d}" if out is not None else None
        for m in range(1, sc.episodes + 1):
            ep = run_episode(env, controller, sc.init_layer, cfg.run.steps, learn=True,
                             nonce=m, episode=m)
            if seed_dir is not None:
                write_episode(seed_dir / "episodes" / f"episode_{m:03d}.csv", ep)
        final = run_episode(env, controller, sc.init_layer, cfg.run.steps, learn=False,
                            epsilon=0.0, nonce="greedy", episode=sc.episodes + 1)
        sweep = run_sweep(env, controller, cfg.run.init_sweep, cfg.run.steps,
                          seed_dir / "sweep" if seed_dir is not None else None)
        argmin = env.argmin()
        terminal = final.final_layer
        results.append(SurrogateSeedResult(i, seed, terminal, argmin,
                                           abs(terminal - argmin) <= tolerance,
                                           {k: v.final_layer for k, v in sweep.items()}))
    if out is not None:
        write_rows(out / "summary.csv", ["index", "seed", "terminal_layer", "argmin", "success"],
                   [[r.index, r.seed, r.terminal_layer, r.argmin, r.success] for r in results])
        (out / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    return results


PRETRAIN_FIELDS = ["dataset", "true_layer", "random_initialized", "train_layer", "test_layer"]


def run_fmodel_pretrain(cfg: ExperimentConfig, out_dir=None):
    fc = cfg.fmodel
    if not fc.targets:
        raise ValueError("fmodel.targets must not be empty")
    datasets = [load_dataset(replace(cfg, data=replace(cfg.data, dataset=name)))
                for name in fc.datasets]
    report, model = pretrain_experiment(
        datasets, fc.targets, fc.epochs, names=[Path(n).stem for n in fc.datasets],
        top_k=cfg.data.top_k, test_fraction=fc.test_fraction, normalize=fc.normalize,
        row_fill=fc.row_fill, seed=cfg.run.seed,
        model=fc.build(derive_seed(cfg.run.seed, "fmodel")))
    if out_dir is not None:
        out = Path(out_dir)
        write_rows(out / "pretrain_report.csv", PRETRAIN_FIELDS,
                   [[r.dataset, r.target, r.initial, r.train, r.test] for r in report.rows])
        model.save(out / "fmodel_pretrained.fmdl")
        (out / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    return report


# --- reporting -------------------------------------------------------------

def _episode_files(directory):
    return sorted(Path(directory).glob("episode_*.csv"))


def _series_rows(files, key_of, column):
    rows = []
    for f in files:
        key = key_of(f)
        for rec in read_rows(f):
            rows.append([key, int(rec["t"]), rec[column]])
    return rows


def _episode_no(path):
    return int(path.stem.split("_")[1])


def _init_no(path):
    return int(path.stem.split("_")[1])


def _update_rows(files, column):
    rows, k = [], 0
    for f in files:
        for rec in read_rows(f):
            if rec[column] != "":
                k += 1
                rows.append([k, rec[column]])
    return rows


def emit_report(run_dir, svg=True, last=15):
    """Write one plot-data CSV per figure under ``run_dir/report``.

    Every input is read before anything is written, so a failure leaves no
    partial report behind.
    """
    run = Path(run_dir)
    episodes = _episode_files(run / "episodes")
    if not episodes:
        raise FileNotFoundError(f"no episode logs under {run / 'episodes'}")
    figures = {}
    tail = episodes[-last:]
    figures["last15_loss"] = (["episode", "t", "loss"],
                                    _series_rows(tail, _episode_no, "loss"))
    figures["last15_layer"] = (["episode", "t", "layer"],
                                     _series_rows(tail, _episode_no, "layer"))
    sweep = sorted((run / "sweep").glob("init_*.csv"))
    if sweep:
        figures["sweep_loss"] = (["init_layer", "t", "loss"],
                                       _series_rows(sweep, _init_no, "loss"))
        figures["sweep_layer"] = (["init_layer", "t", "layer"],
                                        _series_rows(sweep, _init_no, "layer"))
    valid = _episode_files(run / "validation" / "episodes")
    if valid:
        figures["validation_loss"] = (["episode", "t", "loss"],
                                            _series_rows(valid, _episode_no, "loss"))
        figures["validation_layer"] = (["episode", "t", "layer"],
                                             _series_rows(valid, _episode_no, "layer"))
    figures["actor_loss"] = (["update", "actor_loss"], _update_rows(episodes, "actor_loss"))
    figures["critic_loss"] = (["update", "critic_loss"],
                                    _update_rows(episodes, "critic_loss"))

    svgs = {}
    if svg:
        for name, (header, rows) in figures.items():
            if not rows:
                continue
            svgs[name] = line_chart_svg(_to_series(header, rows), title=name,
                                        xlabel=header[-2], ylabel=header[-1])

    report = run / "report"
    report.mkdir(exist_ok=True)
    for name, (header, rows) in figures.items():
        write_rows(report / f"{name}.csv", header, rows)
    for name, text in svgs.items():
        (report / f"{name}.svg").write_text(text, encoding="utf-8")
    return sorted(report.glob("*.csv"))


def _to_series(header, rows):
    if len(header) == 2:
        return {header[1]: ([float(r[0]) for r in rows], [float(r[1]) for r in rows])}
    series = {}
    for key, x, y in rows:
        xs, ys = series.setdefault(f"{header[0]} {key}", ([], []))
        xs.append(float(x))
        ys.append(float(y))
    return series


def trend_decreases(values, frac=0.1, magnitude=False):
    """True if the mean of the last ``frac`` of values is below the first ``frac``."""
    vals = [abs(v) for v in values] if magnitude else list(values)
    k = max(1, int(len(vals) * frac))
    if len(vals) < 2 * k:
        raise ValueError("not enough values for a trend check")
    return sum(vals[-k:]) / k < sum(vals[:k]) / k

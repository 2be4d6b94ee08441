"""Command-line entry point: ``drl-basal <command> --config experiment.json``.

Commands run in order generate -> train-general -> train-personal ->
evaluate -> compare -> plot; each reads what the previous ones wrote
under the output directory and records a manifest of its outputs.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .evaluation import (
    Trace,
    agp,
    agp_svg,
    compare,
    curve_svg,
    cvga_points,
    cvga_svg,
    metrics,
    read_reports,
    write_comparison,
    write_reports,
)
from .evaluation.metrics import REPORT_SCHEMA_VERSION
from .evaluation.trace import TRACE_SCHEMA_VERSION
from .exceptions import CheckpointError, NonFiniteGradient, NumericalBlowup
from .reward import RewardScheme
from .sim import average_subject, subject_by_id
from .therapy import SafetyConstraints
from .training import (
    GENERALIZED,
    LGS,
    PERSONALIZED,
    PolicyCheckpoint,
    TrainConfig,
    default_qnet_config,
    evaluation_scenario,
    rollout,
    start_generalized,
    start_personalized,
    training_scenario,
)

EXIT_CONFIG = 1
EXIT_MISSING = 2
EXIT_NUMERICAL = 3
_TRAIN_FIELDS = tuple(f.name for f in fields(TrainConfig))


class ConfigError(ValueError):
    pass


class MissingInput(FileNotFoundError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    cohort: str = "adult"
    modes: tuple = ("SH", "DH")
    reward_scheme: int = 4
    subjects: tuple = ()  # empty: the first n_subjects perturbed subjects of the cohort
    n_subjects: int = 10
    cohort_seed: int = 0
    output_dir: str = "runs/experiment"
    cell_type: str = "vanilla_rnn"
    safety_constraints: bool = True
    agp_min_days: int = 7
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.cohort not in ("adult", "adolescent"):
            raise ConfigError(f"cohort must be 'adult' or 'adolescent', got {self.cohort!r}")
        modes = tuple(self.modes)
        if not modes or any(m not in ("SH", "DH") for m in modes) or len(set(modes)) != len(modes):
            raise ConfigError("modes must be a non-empty list drawn from 'SH', 'DH'")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "subjects", tuple(self.subjects))
        try:
            RewardScheme(self.reward_scheme)
        except ValueError:
            raise ConfigError("reward_scheme must be 1, 2, 3 or 4") from None
        if self.n_subjects < 1 or self.agp_min_days < 2:
            raise ConfigError("n_subjects must be >= 1 and agp_min_days >= 2")
        for s in self.subjects:
            if not s.startswith(self.cohort + "_"):
                raise ConfigError(f"subject {s!r} is not in cohort {self.cohort!r}")

    @property
    def subject_ids(self) -> tuple:
        if self.subjects:
            return self.subjects
        return tuple(f"{self.cohort}_{i:02d}" for i in range(1, self.n_subjects + 1))

    def flat(self) -> dict:
        d = asdict(self)
        d.update(d.pop("train"))
        d["modes"] = list(self.modes)
        d["subjects"] = list(self.subjects)
        return d

    @classmethod
    def from_flat(cls, d: dict) -> "ExperimentConfig":
        own = {f.name for f in fields(cls)} - {"train"}
        unknown = sorted(set(d) - own - set(_TRAIN_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        try:
            train = TrainConfig(**{k: v for k, v in d.items() if k in _TRAIN_FIELDS})
            return cls(train=train, **{k: v for k, v in d.items() if k in own})
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None

    def hash(self) -> str:
        blob = json.dumps(self.flat(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path, overrides=()) -> ExperimentConfig:
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise MissingInput(f"config file {path} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} must look like key=value")
        try:
            d[key] = json.loads(raw)
        except json.JSONDecodeError:
            d[key] = raw
    return ExperimentConfig.from_flat(d)


# output layout ----------------------------------------------------------
class Run:
    def __init__(self, cfg: ExperimentConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.root = Path(cfg.output_dir)
        self.written = []

    def path(self, *parts) -> Path:
        return self.root.joinpath(*parts)

    def require(self, p: Path) -> Path:
        if not p.exists():
            raise MissingInput(f"required input {p} does not exist (run the earlier command first)")
        return p

    def out(self, *parts) -> Path:
        p = self.path(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(p)
        return p

    def write_text(self, text: str, *parts):
        self.out(*parts).write_text(text)

    def manifest(self):
        cfg = self.cfg
        outputs = {str(p.relative_to(self.root)): hashlib.sha256(p.read_bytes()).hexdigest()
                   for p in sorted(set(self.written))}
        doc = {
            "command": self.command,
            "package_version": __version__,
            "config": cfg.flat(),
            "config_hash": cfg.hash(),
            "seeds": {"train_seed": cfg.train.seed, "cohort_seed": cfg.cohort_seed},
            "schema_versions": {"trace_csv": TRACE_SCHEMA_VERSION,
                                "report_csv": REPORT_SCHEMA_VERSION},
            "outputs": outputs,
        }
        p = self.path("manifests", f"{self.command}.json")
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _subjects(cfg):
    return [subject_by_id(s, cfg.cohort_seed) for s in cfg.subject_ids]


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# commands ---------------------------------------------------------------
def cmd_generate(run: Run):
    cfg = run.cfg
    avg = average_subject(cfg.cohort)
    run.write_text(_dump(avg.to_dict()), "subjects", f"{avg.subject_id}.json")
    run.write_text(_dump(training_scenario(avg, cfg.train, GENERALIZED).to_dict()),
                   "scenarios", f"{avg.subject_id}_{GENERALIZED}.json")
    for s in _subjects(cfg):
        run.write_text(_dump(s.to_dict()), "subjects", f"{s.subject_id}.json")
        run.write_text(_dump(training_scenario(s, cfg.train, PERSONALIZED).to_dict()),
                       "scenarios", f"{s.subject_id}_{PERSONALIZED}.json")
        run.write_text(_dump(evaluation_scenario(s, cfg.train.test_days, cfg.train.seed).to_dict()),
                       "scenarios", f"{s.subject_id}_test.json")


def cmd_train_general(run: Run):
    cfg = run.cfg
    avg = average_subject(cfg.cohort)
    for mode in cfg.modes:
        qcfg = default_qnet_config(mode, cfg.train, cell_type=cfg.cell_type)
        tr = start_generalized(avg, mode, cfg.train, qcfg, cfg.reward_scheme).run()
        tr.policy_checkpoint().save(run.out("checkpoints", f"general_{mode}.ckpt"))
        tr.write_progress(run.out("logs", f"general_{mode}.csv"))


def _load_checkpoint(run, name) -> PolicyCheckpoint:
    try:
        return PolicyCheckpoint.load(run.require(run.path("checkpoints", name)))
    except CheckpointError as e:
        raise MissingInput(f"checkpoint {name} is unreadable: {e}") from None


def cmd_train_personal(run: Run):
    cfg = run.cfg
    generals = {m: _load_checkpoint(run, f"general_{m}.ckpt") for m in cfg.modes}
    cons = SafetyConstraints() if cfg.safety_constraints else None
    for s in _subjects(cfg):
        for mode in cfg.modes:
            tr = start_personalized(generals[mode], s, cfg.train, cons).run()
            tr.policy_checkpoint().save(run.out("checkpoints", f"{s.subject_id}_{mode}.ckpt"))
            tr.write_progress(run.out("logs", f"{s.subject_id}_{mode}.csv"))


def cmd_evaluate(run: Run):
    cfg = run.cfg
    subjects = _subjects(cfg)
    policies = {(s.subject_id, m): _load_checkpoint(run, f"{s.subject_id}_{m}.ckpt")
                for s in subjects for m in cfg.modes}
    cons = SafetyConstraints() if cfg.safety_constraints else None
    reports = []
    for s in subjects:
        scenario = evaluation_scenario(s, cfg.train.test_days, cfg.train.seed)
        traces = [rollout(LGS, s, scenario, reward_scheme=cfg.reward_scheme)]
        for m in cfg.modes:
            ck = policies[(s.subject_id, m)]
            traces.append(rollout((ck.theta1, m), s, scenario, cons, cfg.reward_scheme))
        for tr in traces:
            tr.to_csv(run.out("traces", f"{s.subject_id}_{tr.controller}.csv"))
            reports.append(metrics(tr))
    write_reports(run.out("reports", "reports.csv"), reports)


def _controllers(cfg):
    return [LGS] + [f"DRL-{m}" for m in cfg.modes]


def cmd_compare(run: Run):
    cfg = run.cfg
    reports = read_reports(run.require(run.path("reports", "reports.csv")))
    by_ctrl = {}
    for r in reports:
        by_ctrl.setdefault(r.controller, []).append(r)
    rows = []
    tags = _controllers(cfg)
    for i, a in enumerate(tags):
        for b in tags[i + 1:]:
            if a not in by_ctrl or b not in by_ctrl:
                raise MissingInput(f"reports for {a} or {b} are missing")
            rows.extend(compare(by_ctrl[b], by_ctrl[a]))
    write_comparison(run.out("reports", "comparison.csv"), rows)


def cmd_plot(run: Run):
    cfg = run.cfg
    for sid in cfg.subject_ids:
        traces = {t: Trace.from_csv(run.require(run.path("traces", f"{sid}_{t}.csv")))
                  for t in _controllers(cfg)}
        days = min(len(t) for t in traces.values()) // 288
        if days >= cfg.agp_min_days:
            run.write_text(agp_svg({k: agp(t, min_days=cfg.agp_min_days) for k, t in traces.items()},
                                   f"AGP {sid}"), "plots", f"agp_{sid}.svg")
        run.write_text(cvga_svg({k: cvga_points(t) for k, t in traces.items()}, f"CVGA {sid}"),
                       "plots", f"cvga_{sid}.svg")
    for phase_files, name in (([f"general_{m}" for m in cfg.modes], "general"),
                              ([f"{s}_{m}" for s in cfg.subject_ids for m in cfg.modes],
                               "personal")):
        curves = {}
        for stem in phase_files:
            p = run.path("logs", f"{stem}.csv")
            if p.exists():
                with open(p, newline="") as fh:
                    rows = list(csv.DictReader(fh))
                curves[stem] = ([int(r["step"]) for r in rows],
                                [float(r["running_tir"]) for r in rows])
        if curves:
            run.write_text(curve_svg(curves, f"Training progress ({name})", "TIR over last day (%)"),
                           "plots", f"training_{name}.svg")


COMMANDS = {
    "generate": cmd_generate,
    "train-general": cmd_train_general,
    "train-personal": cmd_train_personal,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drl-basal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", "-c", required=True, help="experiment JSON file")
        sp.add_argument("--output-dir", "-o", help="override output_dir")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config value (JSON literal); repeatable")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.set)
        if args.output_dir:
            overrides.append(f"output_dir={json.dumps(args.output_dir)}")
        cfg = load_config(args.config, overrides)
        run = Run(cfg, args.command)
        COMMANDS[args.command](run)
        run.manifest()
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingInput as e:
        print(f"missing input: {e}", file=sys.stderr)
        return EXIT_MISSING
    except (NumericalBlowup, NonFiniteGradient, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())

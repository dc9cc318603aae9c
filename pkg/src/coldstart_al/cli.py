"""Command-line surface: simulate, sample, analyze, dump-embeddings, train-lm.

Runs are configured by an INI-style file (sections of key=value pairs);
command-line flags override file values. Unknown sections or keys are
rejected so typos fail fast. The env var COLDSTART_AL_SEED serves as the
seed fallback when neither flag nor config provides one.

Exit codes: 0 success, 1 usage/config error, 2 data error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass

from . import __version__
from .analysis import (
    aggregate,
    summary_table,
    write_aggregate_csv,
    write_aggregate_json,
    write_diagnostics_csv,
    write_raw_csv,
)
from .corpus import build_vocab, load_dataset, tokenize_records
from .embeddings import (
    Featurizer,
    FeaturizerConfig,
    per_sentence_seed,
    save_embeddings_file,
    surprisal_embedding,
)
from .results import AlRunResult
from .simulation import AlRunConfig, prepare_env, run_al, run_single_shot
from .strategies import COLD_START
from .surprisal_lm import save_nll_file, token_nll, train_lm
from .util import DataFormatError

SEED_ENV_VAR = "COLDSTART_AL_SEED"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ConfigError(Exception):
    pass


# section -> key -> (type tag, AlRunConfig field or special handler name)
_CONFIG_SCHEMA = {
    "data": {
        "path": ("str", "data_path"),
        "test_path": ("str", "test_path"),
        "format": ("str", "data_format"),
        "test_fraction": ("float", "test_fraction"),
        "max_len": ("int", "max_len"),
        "min_count": ("int", "min_count"),
        "split_seed": ("int", "split_seed"),
    },
    "provider": {
        "kind": ("str", "provider"),
        "nll_path": ("str", "nll_path"),
        "embeddings_path": ("str", "embeddings_path"),
        "order": ("int", "lm_order"),
        "alpha": ("float", "lm_alpha"),
        "lambda": ("float", "lm_lambda"),
    },
    "features": {
        "dim": ("int", "feature_dim"),
    },
    "model": {
        "hidden_dim": ("int", "hidden_dim"),
    },
    "train": {
        "learning_rate": ("float", "train.learning_rate"),
        "beta1": ("float", "train.beta1"),
        "beta2": ("float", "train.beta2"),
        "weight_decay": ("float", "train.weight_decay"),
        "epochs": ("int", "train.epochs"),
        "batch_size": ("int", "train.batch_size"),
        "linear_decay": ("bool", "train.linear_decay"),
    },
    "run": {
        "strategies": ("strlist", "strategies"),
        "seeds": ("intlist", "seeds"),
        "k": ("int", "k"),
        "iterations": ("int", "iterations"),
        "p": ("float", "p"),
        "kmeans_init": ("str", "kmeans_init"),
        "kmeans_iters": ("int", "kmeans_iters"),
        "mode": ("str", "mode"),
        "diagnostics": ("bool", "diagnostics"),
    },
    "output": {
        "dir": ("str", None),
    },
}


def _coerce(kind: str, raw: str, where: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "strlist":
            return [s.strip() for s in raw.split(",") if s.strip()]
        if kind == "intlist":
            return [int(s.strip()) for s in raw.split(",") if s.strip()]
        return raw.strip()
    except ValueError as e:
        raise ConfigError(f"config field {where}: {e}") from e


def load_config(path: str) -> tuple[AlRunConfig, str | None, set[str]]:
    """Parse the INI config into an AlRunConfig plus the output dir, if set.

    Also returns the set of "section.key" names that actually appeared, so
    callers can tell configured values apart from defaults.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"config file {path!r}: {e}") from e
    if not read:
        raise ConfigError(f"config file {path!r} not found or unreadable")
    cfg = AlRunConfig()
    out_dir: str | None = None
    seen: set[str] = set()
    for section in parser.sections():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _CONFIG_SCHEMA[section]:
                raise ConfigError(f"unknown config key {key!r} in section [{section}]")
            kind, target = _CONFIG_SCHEMA[section][key]
            value = _coerce(kind, raw, f"[{section}] {key}")
            seen.add(f"{section}.{key}")
            if target is None:
                out_dir = value
            elif target.startswith("train."):
                setattr(cfg.train, target.split(".", 1)[1], value)
            else:
                setattr(cfg, target, value)
    return cfg, out_dir, seen


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from e


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    config: dict
    artifact_version: str
    dataset_sha256: str
    seeds: list[int]
    outputs: dict[str, str]

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True)


def _config_snapshot(cfg: AlRunConfig) -> dict:
    blob = dataclasses.asdict(cfg)
    blob["train"] = dataclasses.asdict(cfg.train)
    return blob


def _run_one(args):
    cfg, env, strategy, seed = args
    if cfg.mode == "single":
        return run_single_shot(cfg, env, strategy, seed)
    return run_al(cfg, env, strategy, seed)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg, out_dir, seen = load_config(args.config)
    for flag, field in (
        ("data", "data_path"),
        ("format", "data_format"),
        ("k", "k"),
        ("iterations", "iterations"),
        ("p", "p"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, field, value)
    if args.strategies:
        cfg.strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    if args.seeds:
        cfg.seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    elif "run.seeds" not in seen:
        env_seed = _env_seed()
        if env_seed is not None:
            cfg.seeds = [env_seed]
    out_dir = args.out or out_dir
    if not out_dir:
        raise ConfigError("no output directory: set [output] dir or pass --out")
    if not cfg.data_path:
        raise ConfigError("no dataset: set [data] path or pass --data")
    cfg.validate()

    os.makedirs(out_dir, exist_ok=True)
    results_dir = os.path.join(out_dir, "results")
    os.makedirs(results_dir, exist_ok=True)
    outputs = {
        "raw_csv": os.path.join(out_dir, "raw.csv"),
        "aggregate_csv": os.path.join(out_dir, "aggregate.csv"),
        "aggregate_json": os.path.join(out_dir, "aggregate.json"),
        "results_dir": results_dir,
    }
    manifest = RunManifest(
        config=_config_snapshot(cfg),
        artifact_version=__version__,
        dataset_sha256=_sha256(cfg.data_path),
        seeds=list(cfg.seeds),
        outputs=outputs,
    )
    manifest.write(os.path.join(out_dir, "manifest.json"))

    env = prepare_env(cfg)
    jobs = args.jobs or os.cpu_count() or 1
    tasks = [(cfg, env, strategy, seed) for strategy in cfg.strategies for seed in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    for res in results:
        name = f"{res.strategy}_seed{res.seed}.json"
        with open(os.path.join(results_dir, name), "w", encoding="utf-8") as fh:
            json.dump(res.to_dict(), fh, indent=2)
    write_raw_csv(results, outputs["raw_csv"])
    rows = aggregate(results)
    write_aggregate_csv(rows, outputs["aggregate_csv"])
    write_aggregate_json(rows, outputs["aggregate_json"])
    print(summary_table(rows))
    print(f"wrote {len(results)} runs to {out_dir}")
    return EXIT_OK


def _build_sample_inputs(args: argparse.Namespace):
    dataset = load_dataset(args.data, args.format)
    vocab = build_vocab(dataset.records, args.min_count)
    seqs = tokenize_records(dataset, vocab, args.max_len)
    ids = [r.id for r in dataset.records]
    return dataset, vocab, seqs, ids


def cmd_sample(args: argparse.Namespace) -> int:
    if args.strategy not in COLD_START:
        raise ConfigError(
            f"strategy {args.strategy!r} needs a trained model; "
            f"standalone sampling supports: {', '.join(COLD_START)}"
        )
    seed = args.seed
    if seed is None:
        seed = _env_seed()
    if seed is None:
        seed = 0
    dataset, vocab, seqs, ids = _build_sample_inputs(args)
    if args.strategy == "alps":
        from .strategies import sample_alps
        from .surprisal_lm import load_external_nll

        if args.nll:
            nll_by_id = load_external_nll(args.nll, max_len=args.max_len, known_ids=seqs)
            missing = [i for i in ids if i not in nll_by_id]
            if missing:
                raise DataFormatError(f"NLL file lacks {len(missing)} ids (first: {missing[0]!r})")
        else:
            lm = train_lm((seqs[i] for i in ids), vocab, order=args.order, alpha=args.alpha, lam=args.lam)
            nll_by_id = {i: token_nll(lm, seqs[i]) for i in ids}
        batch = sample_alps(ids, nll_by_id, args.k, args.p, seed, init=args.kmeans_init)
    elif args.strategy == "emb-km":
        from .strategies import sample_emb_km

        featurizer = Featurizer(FeaturizerConfig(dim=args.feature_dim))
        feats = {i: featurizer(seqs[i]) for i in ids}
        batch = sample_emb_km(ids, feats, args.k, seed, init=args.kmeans_init)
    else:
        from .strategies import sample_random

        batch = sample_random(ids, args.k, seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        for rid in batch.ids:
            fh.write(rid + "\n")
    print(f"selected {len(batch.ids)} ids -> {args.out}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    results_dir = args.results
    if not os.path.isdir(results_dir):
        raise DataFormatError(f"results directory {results_dir!r} does not exist")
    own_outputs = {"aggregate.json", "manifest.json"}  # keeps re-analysis idempotent
    names = sorted(
        n for n in os.listdir(results_dir) if n.endswith(".json") and n not in own_outputs
    )
    results = []
    for name in names:
        with open(os.path.join(results_dir, name), encoding="utf-8") as fh:
            try:
                results.append(AlRunResult.from_dict(json.load(fh)))
            except (json.JSONDecodeError, KeyError) as e:
                raise DataFormatError(f"{name}: not a valid run result ({e})") from e
    if not results:
        raise DataFormatError(f"no run results (*.json) found in {results_dir!r}")
    out_dir = args.out or results_dir
    os.makedirs(out_dir, exist_ok=True)
    rows = aggregate(results)
    write_aggregate_csv(rows, os.path.join(out_dir, "aggregate.csv"))
    write_aggregate_json(rows, os.path.join(out_dir, "aggregate.json"))
    write_diagnostics_csv(rows, os.path.join(out_dir, "diagnostics.csv"))
    table = summary_table(rows)
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    print(table)
    return EXIT_OK


def cmd_dump_embeddings(args: argparse.Namespace) -> int:
    seed = args.seed
    if seed is None:
        seed = _env_seed()
    if seed is None:
        seed = 0
    dataset, vocab, seqs, ids = _build_sample_inputs(args)
    if args.family == "surprisal":
        lm = train_lm((seqs[i] for i in ids), vocab, order=args.order, alpha=args.alpha, lam=args.lam)
        vectors = {
            i: surprisal_embedding(token_nll(lm, seqs[i]), args.p, per_sentence_seed(seed, i)).values
            for i in ids
        }
    else:
        featurizer = Featurizer(FeaturizerConfig(dim=args.feature_dim))
        vectors = {i: featurizer(seqs[i]).values for i in ids}
    save_embeddings_file(args.out, vectors)
    print(f"wrote {len(vectors)} {args.family} vectors -> {args.out}")
    return EXIT_OK


def cmd_train_lm(args: argparse.Namespace) -> int:
    dataset, vocab, seqs, ids = _build_sample_inputs(args)
    lm = train_lm((seqs[i] for i in ids), vocab, order=args.order, alpha=args.alpha, lam=args.lam)
    save_nll_file(args.out, (token_nll(lm, seqs[i]) for i in ids))
    print(f"wrote NLL vectors for {len(ids)} sentences -> {args.out}")
    return EXIT_OK


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--format", default="jsonl", choices=["jsonl", "tsv"])
    p.add_argument("--max-len", dest="max_len", type=int, default=128)
    p.add_argument("--min-count", dest="min_count", type=int, default=1)


def _add_lm_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--lam", type=float, default=0.5, help="forward/backward blend weight")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldstart-al",
        description="Cold-start active learning: simulate, sample, analyze.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the full AL benchmark from a config file")
    p_sim.add_argument("--config", required=True, help="INI config file")
    p_sim.add_argument("--out", help="output directory (overrides [output] dir)")
    p_sim.add_argument("--data", help="dataset path override")
    p_sim.add_argument("--format", choices=["jsonl", "tsv"], help="dataset format override")
    p_sim.add_argument("--strategies", help="comma-separated strategy ids override")
    p_sim.add_argument("--seeds", help="comma-separated seeds override")
    p_sim.add_argument("--k", type=int, help="queries per iteration override")
    p_sim.add_argument("--iterations", type=int, help="iteration count override")
    p_sim.add_argument("--p", type=float, help="token sampling fraction override")
    p_sim.add_argument("--jobs", type=int, help="parallel (strategy, seed) workers; default: cores")
    p_sim.set_defaults(func=cmd_simulate)

    p_sample = sub.add_parser("sample", help="select k sentences with a cold-start strategy")
    _add_data_args(p_sample)
    p_sample.add_argument("--strategy", required=True, help=f"one of: {', '.join(COLD_START)}")
    p_sample.add_argument("--k", type=int, required=True)
    p_sample.add_argument("--seed", type=int, default=None)
    p_sample.add_argument("--out", required=True, help="output file, one id per line")
    p_sample.add_argument("--p", type=float, default=0.15)
    p_sample.add_argument("--nll", help="external NLL file (alps only)")
    p_sample.add_argument("--kmeans-init", dest="kmeans_init", default="random", choices=["random", "kmeans++"])
    p_sample.add_argument("--feature-dim", dest="feature_dim", type=int, default=512)
    _add_lm_args(p_sample)
    p_sample.set_defaults(func=cmd_sample)

    p_an = sub.add_parser("analyze", help="aggregate run results into CSV summaries")
    p_an.add_argument("--results", required=True, help="directory of per-run result JSON files")
    p_an.add_argument("--out", help="output directory (defaults to the results dir)")
    p_an.set_defaults(func=cmd_analyze)

    p_dump = sub.add_parser("dump-embeddings", help="write sentence embeddings as JSONL")
    _add_data_args(p_dump)
    p_dump.add_argument("--family", required=True, choices=["surprisal", "feature"])
    p_dump.add_argument("--out", required=True)
    p_dump.add_argument("--seed", type=int, default=None)
    p_dump.add_argument("--p", type=float, default=0.15)
    p_dump.add_argument("--feature-dim", dest="feature_dim", type=int, default=512)
    _add_lm_args(p_dump)
    p_dump.set_defaults(func=cmd_dump_embeddings)

    p_lm = sub.add_parser("train-lm", help="train the n-gram provider and export NLL vectors")
    _add_data_args(p_lm)
    p_lm.add_argument("--out", required=True, help="NLL interchange file to write")
    _add_lm_args(p_lm)
    p_lm.set_defaults(func=cmd_train_lm)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses exit code 2 for usage errors; keep 2 for data errors
        return EXIT_USAGE if e.code == 2 else (e.code or EXIT_OK)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as e:
        if isinstance(e, DataFormatError):
            print(f"error: {e}", file=sys.stderr)
            return EXIT_DATA
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands cover each pipeline stage (ingest, train, surprise, null,
puborder, greedy, ranks, epochs) plus `run` for the whole chain and
`report` to pretty-print a result bundle. Every value in the config file
can be overridden with a flag of the same dotted name, e.g.
``--topics.k 40`` or ``--null.samples=200``.

All exports are byte-deterministic for a fixed (inputs, config, seed);
wall-clock timestamps appear only in the *.meta.json sidecars.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import epochs as epochs_mod
from . import nullmodel as null_mod
from . import paths as paths_mod
from . import surprise as surprise_mod
from . import topics as topics_mod
from .config import RunConfig, apply_override, load_run_config
from .errors import InputError

SUMMARY_FORMAT_VERSION = 1
KINDS = ("T2T", "T2P")

_COMMANDS = (
    "ingest", "train", "surprise", "null", "puborder",
    "greedy", "ranks", "epochs", "run", "report",
)


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# artifact locations and loading

def _corpus_path(cfg: RunConfig) -> Path:
    return cfg.out / "corpus.json"


def _kdir(cfg: RunConfig, k: int) -> Path:
    return cfg.out / f"k{k}"


def _require(path: Path, what: str, hint: str) -> Path:
    if not path.exists():
        raise InputError(f"missing {what}: {path} (run `readpath {hint}` first)")
    return path


def _load_corpus(cfg: RunConfig):
    return corpus_mod.load_cache(_require(_corpus_path(cfg), "corpus cache", "ingest"))


def _load_model(cfg: RunConfig, k: int) -> topics_mod.TopicModel:
    return topics_mod.load_model(_require(_kdir(cfg, k) / "model.bin", "topic model", "train"))


def _load_null_means(kdir: Path, kind: str) -> np.ndarray:
    path = _require(kdir / f"null_{kind.lower()}.csv", f"null ensemble ({kind})", "null")
    rows = path.read_text(encoding="utf-8").strip().splitlines()[1:]
    return np.array([float(r.split(",")[1]) for r in rows])


# --------------------------------------------------------------------------
# pipeline steps (each writes its exports and returns its results)

def cmd_ingest(cfg: RunConfig) -> dict:
    if cfg.manifest is None:
        raise InputError("corpus.manifest is required for ingest")
    records = corpus_mod.load_manifest(cfg.manifest)
    vocab, matrix = corpus_mod.build_corpus(records, cfg.tokenizer_config())
    cfg.out.mkdir(parents=True, exist_ok=True)
    corpus_mod.save_cache(_corpus_path(cfg), records, vocab, matrix)
    stats = corpus_mod.ingest_stats(vocab, matrix)
    print(json.dumps(stats, sort_keys=True))
    return stats


def _train_models(cfg: RunConfig, vocab, matrix) -> dict[int, topics_mod.TopicModel]:
    fingerprint = corpus_mod.corpus_fingerprint(vocab, matrix)
    models = topics_mod.sweep_k(
        matrix, cfg.k_list, cfg.topic_params(), fingerprint=fingerprint, threads=cfg.threads
    )
    out = {}
    for model in models:
        kdir = _kdir(cfg, model.k)
        kdir.mkdir(parents=True, exist_ok=True)
        topics_mod.save_model(kdir / "model.bin", model)
        _dump_json(
            kdir / "model.meta.json",
            {
                "created_utc": _utc_now(),
                "k": model.k,
                "seed": model.params.seed,
                "iterations": model.params.iterations,
                "corpus_fingerprint": model.corpus_fingerprint,
            },
        )
        out[model.k] = model
        _note(f"trained k={model.k}")
    return out


def cmd_train(cfg: RunConfig) -> None:
    _, vocab, matrix = _load_corpus(cfg)
    _train_models(cfg, vocab, matrix)


def _reading_series(model, kind: str) -> surprise_mod.SurpriseSeries:
    fn = surprise_mod.t2t_series if kind == "T2T" else surprise_mod.t2p_series
    return fn(model.theta)


def _step_surprise(kdir: Path, model, records) -> dict[str, surprise_mod.SurpriseSeries]:
    out = {}
    doc_ids = [r.id for r in records[1:]]
    dates = [r.read_date.isoformat() for r in records[1:]]
    for kind in KINDS:
        series = _reading_series(model, kind)
        stem = kdir / f"series_{kind.lower()}"
        surprise_mod.write_series_csv(stem.with_suffix(".csv"), series, doc_ids, dates)
        surprise_mod.write_series_metadata(
            stem.with_suffix(".meta.json"), series, model.corpus_fingerprint
        )
        out[kind] = series
    return out


def cmd_surprise(cfg: RunConfig) -> None:
    records, _, _ = _load_corpus(cfg)
    for k in cfg.k_list:
        _step_surprise(_kdir(cfg, k), _load_model(cfg, k), records)


def _step_null(kdir: Path, model, records, cfg: RunConfig) -> dict[str, null_mod.NullEnsemble]:
    ncfg = cfg.null_config()
    out = {}
    for kind in KINDS:
        ens = null_mod.build_null(model.theta, records, kind, ncfg, threads=cfg.threads)
        null_mod.write_ensemble_json(kdir / f"null_{kind.lower()}.json", ens, ncfg)
        null_mod.write_ensemble_csv(kdir / f"null_{kind.lower()}.csv", ens)
        out[kind] = ens
    return out


def cmd_null(cfg: RunConfig) -> None:
    records, _, _ = _load_corpus(cfg)
    for k in cfg.k_list:
        _step_null(_kdir(cfg, k), _load_model(cfg, k), records, cfg)


def _step_puborder(kdir: Path, model, records, cfg: RunConfig) -> dict[str, surprise_mod.SurpriseSeries]:
    ncfg = cfg.null_config()
    rep_order = null_mod.publication_order_ids(records)
    doc_ids = [records[i].id for i in rep_order[1:]]
    pub_years = [str(records[i].pub_year) for i in rep_order[1:]]
    out = {}
    for kind in KINDS:
        series = null_mod.publication_order_series(model.theta, records, kind, ncfg)
        stem = kdir / f"puborder_{kind.lower()}"
        surprise_mod.write_series_csv(stem.with_suffix(".csv"), series, doc_ids, pub_years)
        surprise_mod.write_series_metadata(
            stem.with_suffix(".meta.json"), series, model.corpus_fingerprint
        )
        out[kind] = series
    return out


def cmd_puborder(cfg: RunConfig) -> None:
    records, _, _ = _load_corpus(cfg)
    for k in cfg.k_list:
        _step_puborder(_kdir(cfg, k), _load_model(cfg, k), records, cfg)


def _step_greedy(kdir: Path, model, records, cfg: RunConfig) -> dict[str, paths_mod.GreedyPath]:
    matrix = paths_mod.divergence_matrix(model.theta)
    doc_ids = [r.id for r in records]
    gt2t = paths_mod.greedy_t2t_path(matrix, start_index=0)
    gt2p = paths_mod.greedy_t2p_path(model.theta, start_index=0)
    paths_mod.write_path_csv(kdir / "greedy_t2t.csv", gt2t, doc_ids)
    paths_mod.write_path_csv(kdir / "greedy_t2p.csv", gt2p, doc_ids)
    if cfg.export_matrix:
        paths_mod.write_matrix_csv(kdir / "matrix.csv", matrix)
    return {"T2T": gt2t, "T2P": gt2p}


def cmd_greedy(cfg: RunConfig) -> None:
    records, _, _ = _load_corpus(cfg)
    for k in cfg.k_list:
        _step_greedy(_kdir(cfg, k), _load_model(cfg, k), records, cfg)


def _step_ranks(kdir: Path, model, records, cfg: RunConfig) -> paths_mod.RankDistribution:
    matrix = paths_mod.divergence_matrix(model.theta)
    observed = list(range(len(records)))
    null_orders = null_mod.null_permutations(records, cfg.null_config())
    rd = paths_mod.rank_distribution(matrix, observed, null_orders)
    paths_mod.write_rank_csv(kdir / "ranks.csv", rd)
    paths_mod.write_rank_json(kdir / "ranks.json", rd)
    return rd


def cmd_ranks(cfg: RunConfig) -> None:
    records, _, _ = _load_corpus(cfg)
    for k in cfg.k_list:
        _step_ranks(_kdir(cfg, k), _load_model(cfg, k), records, cfg)


def _step_epochs(
    kdir: Path, model, records, cfg: RunConfig,
    nulls: dict[str, null_mod.NullEnsemble] | None,
) -> dict[str, dict]:
    """Fit epoch models for both series kinds. The series handed to the
    segmenter is the raw surprise by default (epochs.input = raw) or the
    null-relative surprise (epochs.input = relative); per-epoch relative
    means are reported whenever null statistics are available."""
    ecfg = cfg.epoch_config()
    dates = [r.read_date for r in records[: len(records) - 1]]
    out = {}
    for kind in KINDS:
        series = _reading_series(model, kind)
        null_means = None
        if nulls is not None:
            null_means = nulls[kind].position_mean
        elif (kdir / f"null_{kind.lower()}.csv").exists():
            null_means = _load_null_means(kdir, kind)
        if cfg.epoch_input == "relative":
            if null_means is None:
                raise InputError(
                    f"epochs.input=relative needs the null ensemble: {kdir / f'null_{kind.lower()}.csv'}"
                )
            fit_values = series.values - null_means
        else:
            fit_values = series.values
        best, table = epochs_mod.select_n(fit_values, ecfg, dates=dates)
        break_dates = epochs_mod.break_to_date(best, records)
        rel_means = None
        if null_means is not None:
            rel_means = [
                float(x)
                for x in surprise_mod.epoch_mean_relative(series, null_means, best.breaks)
            ]
        epochs_mod.write_epoch_report(
            kdir / f"epochs_{kind.lower()}.json",
            kind,
            cfg.epoch_input,
            best,
            table,
            break_dates=break_dates,
            relative_means=rel_means,
        )
        landscape = epochs_mod.single_break_landscape(fit_values, ecfg, dates=dates)
        epochs_mod.write_landscape_csv(kdir / f"landscape_{kind.lower()}.csv", landscape)
        out[kind] = {
            "selected_n": best.n,
            "breaks": list(best.breaks),
            "break_dates": [d.isoformat() for _, d in break_dates],
            "segment_means": list(best.means),
            "segment_variances": list(best.variances),
            "segment_relative_means": rel_means,
            "aic_table": table,
        }
    return out


def cmd_epochs(cfg: RunConfig) -> None:
    records, _, _ = _load_corpus(cfg)
    for k in cfg.k_list:
        _step_epochs(_kdir(cfg, k), _load_model(cfg, k), records, cfg, nulls=None)


def _declared_exports(cfg: RunConfig) -> list[str]:
    names = ["model.bin", "model.meta.json", "ranks.csv", "ranks.json", "summary.json"]
    for kind in ("t2t", "t2p"):
        names += [
            f"series_{kind}.csv",
            f"series_{kind}.meta.json",
            f"null_{kind}.json",
            f"null_{kind}.csv",
            f"puborder_{kind}.csv",
            f"puborder_{kind}.meta.json",
            f"greedy_{kind}.csv",
            f"epochs_{kind}.json",
            f"landscape_{kind}.csv",
        ]
    if cfg.export_matrix:
        names.append("matrix.csv")
    return sorted(names)


def cmd_run(cfg: RunConfig) -> None:
    """Whole pipeline: ingest (when needed), train per k, every analysis,
    one bundle directory per k with a summary and a file manifest."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    if not _corpus_path(cfg).exists():
        if cfg.manifest is None:
            raise InputError("no corpus cache and no corpus.manifest configured")
        cmd_ingest(cfg)
    records, vocab, matrix = _load_corpus(cfg)
    models = _train_models(cfg, vocab, matrix)

    for k, model in models.items():
        kdir = _kdir(cfg, k)
        series = _step_surprise(kdir, model, records)
        nulls = _step_null(kdir, model, records, cfg)
        puborder = _step_puborder(kdir, model, records, cfg)
        greedy = _step_greedy(kdir, model, records, cfg)
        ranks = _step_ranks(kdir, model, records, cfg)
        epoch_info = _step_epochs(kdir, model, records, cfg, nulls)

        summary = {
            "format_version": SUMMARY_FORMAT_VERSION,
            "k": k,
            "documents": len(records),
            "seed": cfg.seed,
            "surprise": {},
            "epochs": epoch_info,
            "ranks": {
                "bin_edges": [float(e) for e in ranks.bin_edges],
                "observed_props": [float(p) for p in ranks.observed_props],
                "null_props": [float(p) for p in ranks.null_props],
                "ratio": [None if not np.isfinite(r) else float(r) for r in ranks.ratio],
            },
        }
        for kind in KINDS:
            ens = nulls[kind]
            lo, hi = ens.aggregate_quantiles()
            summary["surprise"][kind] = {
                "observed_bits_per_step": series[kind].mean_bits,
                "null_mean_bits_per_step": ens.aggregate_mean,
                "null_std_bits_per_step": ens.aggregate_std,
                "null_q025_bits_per_step": lo,
                "null_q975_bits_per_step": hi,
                "p_value_below_null": ens.p_value,
                "greedy_bits_per_step": greedy[kind].mean_bits,
                "publication_order_bits_per_step": puborder[kind].mean_bits,
            }
        _dump_json(kdir / "summary.json", summary)
        _dump_json(
            kdir / "manifest.json",
            {"format_version": 1, "k": k, "files": _declared_exports(cfg)},
        )
        _note(f"bundle complete: {kdir}")

    _dump_json(
        cfg.out / "run_meta.json",
        {"created_utc": _utc_now(), "k_list": cfg.k_list, "seed": cfg.seed},
    )


def cmd_report(bundle: Path) -> None:
    bundle = Path(bundle)
    manifest_path = bundle / "manifest.json"
    if not manifest_path.exists():
        raise InputError(f"not a result bundle (no manifest.json): {bundle}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    for name in manifest["files"]:
        if not (bundle / name).exists():
            raise InputError(f"bundle is missing a declared artifact: {name}")
    summary = json.loads((bundle / "summary.json").read_text(encoding="utf-8"))

    sur = summary["surprise"]
    print(f"bits per step (k={summary['k']}, {summary['documents']} documents)")
    rows = [
        ("reading order", "observed_bits_per_step", "{:.4f}"),
        ("null mean", "null_mean_bits_per_step", "{:.4f}"),
        ("null std", "null_std_bits_per_step", "{:.4f}"),
        ("null 2.5%", "null_q025_bits_per_step", "{:.4f}"),
        ("null 97.5%", "null_q975_bits_per_step", "{:.4f}"),
        ("p-value (below null)", "p_value_below_null", "{:.6g}"),
        ("greedy shortest path", "greedy_bits_per_step", "{:.4f}"),
        ("publication order", "publication_order_bits_per_step", "{:.4f}"),
    ]
    print(f"  {'measure':<24}{'T2T':>12}{'T2P':>12}")
    for label, key, fmt in rows:
        t2t = fmt.format(sur["T2T"][key])
        t2p = fmt.format(sur["T2P"][key])
        print(f"  {label:<24}{t2t:>12}{t2p:>12}")

    for kind in KINDS:
        ep = summary["epochs"][kind]
        print(f"\nepochs from {kind} surprise: n={ep['selected_n']} selected by AIC")
        bounds = ep["breaks"] + [summary["documents"] - 1]
        for i, b in enumerate(ep["breaks"]):
            rel = ep["segment_relative_means"]
            rel_s = f"  relative {rel[i]:+.4f}" if rel is not None else ""
            print(
                f"  epoch {i + 1}: positions [{b}, {bounds[i + 1]}) from {ep['break_dates'][i]}"
                f"  mean {ep['segment_means'][i]:.4f}  var {ep['segment_variances'][i]:.4f}{rel_s}"
            )
        print("  n  params      loglik         AIC    rel.likelihood")
        for row in ep["aic_table"]:
            print(
                f"  {row['n']}  {row['n_params']:>6}  {row['log_likelihood']:>10.3f}"
                f"  {row['aic']:>10.3f}  {row['relative_likelihood']:>14.6g}"
            )


# --------------------------------------------------------------------------
# argument handling

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="readpath",
        description="Exploration/exploitation analysis of an ordered reading corpus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        if name == "report":
            p.add_argument("bundle", type=Path, help="result bundle directory (out/k<NN>)")
            continue
        p.add_argument("--config", type=Path, default=None, help="INI configuration file")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--k", type=int, default=None, help="topic count (single model)")
        p.add_argument("--samples", type=int, default=None, help="null permutation count")
        p.add_argument("--threads", type=int, default=None)
    return parser


def _split_overrides(rest: list[str]) -> list[tuple[str, str]]:
    """Interpret leftover args as dotted-name overrides: --section.key value
    or --section.key=value."""
    out = []
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--") or "." not in tok:
            raise InputError(f"unrecognized argument: {tok}")
        body = tok[2:]
        if "=" in body:
            key, value = body.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(rest):
                raise InputError(f"override {tok} needs a value")
            key, value = body, rest[i + 1]
            i += 2
        out.append((key, value))
    return out


def _config_from_args(args, overrides: list[tuple[str, str]]) -> RunConfig:
    cfg = load_run_config(args.config)
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.k is not None:
        cfg.k_list = [args.k]
    if args.samples is not None:
        cfg.samples = args.samples
    if args.threads is not None:
        cfg.threads = args.threads
    for dotted, value in overrides:
        apply_override(cfg, dotted, value)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args, rest = parser.parse_known_args(argv)
    except SystemExit as exc:  # argparse handles --help (0) and bad usage
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "report":
            if rest:
                raise InputError(f"unrecognized argument: {rest[0]}")
            cmd_report(args.bundle)
            return 0
        cfg = _config_from_args(args, _split_overrides(rest))
        dispatch = {
            "ingest": cmd_ingest,
            "train": cmd_train,
            "surprise": cmd_surprise,
            "null": cmd_null,
            "puborder": cmd_puborder,
            "greedy": cmd_greedy,
            "ranks": cmd_ranks,
            "epochs": cmd_epochs,
            "run": cmd_run,
        }
        dispatch[args.command](cfg)
        return 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""groomlens command line: fixture generation, splitting, training, reports,
agreement, and the review service.

All randomness flows from explicit --seed flags; re-running a subcommand
with identical inputs and seeds reproduces identical artifact bytes (the run
manifest's created_at field is the one exception).

A groomlens.toml config file mirrors every flag (one table per subcommand,
flag names with dashes replaced by underscores); command-line flags win.

Exit codes: 0 success, 2 validation error, 3 incomplete run, 4 backend
unavailable. Errors print one JSON object {"error": code, "detail": ...} to
stderr.
"""

from __future__ import annotations

import concurrent.futures
import functools
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import bow, fixtures
from .agreement import RatingEvent, UncertainPolicy, emit_agreement_report
from .corpus import coverage, load_corpus, serialize_corpus
from .errors import GroomlensError, IncompleteRun
from .evaluation import (
    MetricsSummary,
    ResampleMetrics,
    emit_report,
    merge_summaries,
    save_summary,
    score,
)
from .nli import (
    WINDOW_EXCLUDED_BEHAVIORS,
    TrainConfig,
    load_backend,
    run_ladder,
)
from .sampling import (
    DEFAULT_RUNGS,
    FULL,
    Region,
    ShotLadder,
    load_split,
    resample,
    save_split,
)
from .taxonomy import BEHAVIOR_IDS
from .text import preprocess

EXIT_VALIDATION = 2
EXIT_INCOMPLETE = 3
EXIT_BACKEND = 4

_EXIT_BY_CODE = {
    "INCOMPLETE_RUN": EXIT_INCOMPLETE,
    "BACKEND_UNAVAILABLE": EXIT_BACKEND,
    "UNTRAINABLE_BACKEND": EXIT_BACKEND,
}


def _fail(exc: GroomlensError) -> None:
    sys.stderr.write(json.dumps({"error": exc.code, "detail": exc.detail}) + "\n")
    sys.exit(_EXIT_BY_CODE.get(exc.code, EXIT_VALIDATION))


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GroomlensError as exc:
            _fail(exc)

    return wrapper


def _load_config(path: str | None) -> dict:
    candidates = [Path(path)] if path else [Path("groomlens.toml")]
    for candidate in candidates:
        if candidate.is_file():
            with open(candidate, "rb") as fh:
                return tomllib.load(fh)
    return {}


@click.group()
@click.option("--config", type=click.Path(), default=None, help="Config file (default groomlens.toml).")
@click.pass_context
def main(ctx, config):
    """Predatory-behavior classification pipeline and validation service."""
    ctx.default_map = _load_config(config)


def _file_digest(*paths: Path) -> str:
    h = hashlib.sha256()
    for path in paths:
        h.update(path.read_bytes())
    return h.hexdigest()


def _write_manifest(run_dir: Path, **fields) -> None:
    manifest = dict(fields)
    manifest.setdefault("run_id", run_dir.name)
    manifest["created_at"] = datetime.now(timezone.utc).isoformat()
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


@main.command("gen-fixture")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--messages", type=int, default=1000, show_default=True,
              help="Number of labelled offender messages to generate.")
@click.option("--coverage-file", type=click.Path(exists=True), default=None,
              help="JSON mapping behavior_id -> positive fraction.")
@click.option("--out", type=click.Path(), default=".", show_default=True)
@handle_errors
def gen_fixture(seed, messages, coverage_file, out):
    """Generate a synthetic chats.jsonl + labels.jsonl corpus."""
    cov = json.loads(Path(coverage_file).read_text()) if coverage_file else None
    corpus = fixtures.generate_corpus(seed=seed, offender_messages=messages, coverage=cov)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    serialize_corpus(corpus, out_dir / "chats.jsonl", out_dir / "labels.jsonl")
    click.echo(f"wrote {out_dir / 'chats.jsonl'} ({corpus.n_messages} messages, "
               f"{len(corpus.labels)} labelled)")


@main.command("split")
@click.option("--corpus", "chats_path", type=click.Path(exists=True), required=True)
@click.option("--labels", "labels_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--resamples", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(), default="splits", show_default=True)
@handle_errors
def split_cmd(chats_path, labels_path, seed, resamples, out):
    """Stratified 70/20/10 splits with repeated resampling."""
    corpus = load_corpus(chats_path, labels_path)
    plans = resample(corpus, seed, resamples)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for plan in plans:
        save_split(plan, out_dir / f"split_{plan.seed}.json")
    sizes = plans[0].sizes()
    click.echo(f"wrote {len(plans)} split files to {out_dir} "
               f"(sizes {sizes[Region.TRAIN]}/{sizes[Region.TEST]}/{sizes[Region.VALIDATION]})")


def _parse_behaviors(raw: str) -> list[str]:
    if raw == "all":
        return list(BEHAVIOR_IDS)
    chosen = [b.strip() for b in raw.split(",") if b.strip()]
    unknown = set(chosen) - set(BEHAVIOR_IDS)
    if unknown:
        raise click.BadParameter(f"unknown behaviors: {sorted(unknown)}")
    return chosen


def _load_plans(split_paths: tuple[str, ...]):
    return [load_split(p) for p in split_paths]


@main.command("train-bow")
@click.option("--corpus", "chats_path", type=click.Path(exists=True), required=True)
@click.option("--labels", "labels_path", type=click.Path(exists=True), required=True)
@click.option("--split", "split_paths", type=click.Path(exists=True), multiple=True, required=True,
              help="split.json files; repeat for resamples.")
@click.option("--behavior", default="all", show_default=True)
@click.option("--grid", default="default", show_default=True,
              help="'default' or a grid.json override path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "run_dir", type=click.Path(), required=True, help="Run artifact directory.")
@handle_errors
def train_bow(chats_path, labels_path, split_paths, behavior, grid, seed, jobs, run_dir):
    """Train the four bag-of-words classifiers under exhaustive grid search."""
    corpus = load_corpus(chats_path, labels_path)
    plans = _load_plans(split_paths)
    behaviors = _parse_behaviors(behavior)
    grids = (
        {alg: bow.GridSpec.default(alg) for alg in bow.Algorithm}
        if grid == "default"
        else bow.load_grid_overrides(grid)
    )
    run_path = Path(run_dir)
    run_path.mkdir(parents=True, exist_ok=True)

    doc_cache = {
        ref: preprocess(corpus.message(ref).text, source_ref=ref) for ref in corpus.offender_refs()
    }

    def train_one(behavior_id: str) -> list[tuple[Path, MetricsSummary, list | None]]:
        out = []
        for alg in bow.Algorithm:
            per_resample = []
            first_predictions = None
            for plan_no, plan in enumerate(plans):
                train_refs = plan.region_refs(Region.TRAIN)
                test_refs = plan.region_refs(Region.TEST)
                train_docs = [doc_cache[r] for r in train_refs]
                train_labels = [corpus.label(r, behavior_id) for r in train_refs]
                model = bow.fit_grid(train_docs, train_labels, grids[alg], seed=seed)
                test_docs = [doc_cache[r] for r in test_refs]
                gold = [corpus.label(r, behavior_id) for r in test_refs]
                preds, scores = bow.predict(model, test_docs)
                per_resample.append(ResampleMetrics.from_counts(score(list(preds), gold)))
                if plan_no == 0:
                    first_predictions = [
                        {"chat_id": r[0], "index": r[1], "score": round(float(s), 6),
                         "prediction": bool(p)}
                        for r, p, s in zip(test_refs, preds, scores)
                    ]
                    bow.save_model(model, run_path / "models" / behavior_id / alg.value)
            summary = MetricsSummary(
                behavior_id=behavior_id,
                model_id=bow.DISPLAY_NAMES[alg],
                window_size=1,
                rung="full",
                resamples=tuple(per_resample),
                mean={},
                sd={},
            )
            summary = merge_summaries([summary])
            slug_dir = run_path / behavior_id / "1" / f"bow-{alg.value}"
            out.append((slug_dir, summary, first_predictions))
        return out

    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(train_one, behaviors))

    for group in results:
        for slug_dir, summary, predictions in group:
            slug_dir.mkdir(parents=True, exist_ok=True)
            save_summary(summary, slug_dir / "metrics.json")
            if predictions is not None:
                with open(slug_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
                    for rec in predictions:
                        fh.write(json.dumps(rec) + "\n")

    cov = coverage(corpus)
    (run_path / "coverage.json").write_text(json.dumps(cov, indent=2, sort_keys=True) + "\n")
    _write_manifest(
        run_path,
        chats_path=str(Path(chats_path).resolve()),
        labels_path=str(Path(labels_path).resolve()),
        corpus_sha256=_file_digest(Path(chats_path), Path(labels_path)),
        split_seeds=[p.seed for p in plans],
        resample_policy="all regions resampled per seed",
        models=[alg.value for alg in bow.Algorithm],
        behaviors=behaviors,
        seed=seed,
    )
    click.echo(f"trained bow models for {len(behaviors)} behaviors into {run_path}")


def _parse_ladder(raw: str) -> ShotLadder:
    if raw == "default":
        return ShotLadder(DEFAULT_RUNGS)
    rungs = tuple(int(x) for x in raw.split(",") if x.strip() != "")
    return ShotLadder(rungs)


@main.command("train-nli")
@click.option("--corpus", "chats_path", type=click.Path(exists=True), required=True)
@click.option("--labels", "labels_path", type=click.Path(exists=True), required=True)
@click.option("--split", "split_paths", type=click.Path(exists=True), multiple=True, required=True)
@click.option("--behavior", default="all", show_default=True)
@click.option("--backend", default="mock", show_default=True,
              help="'mock', 'transformer', or a backend config JSON path.")
@click.option("--ladder", default="default", show_default=True,
              help="'default' or comma-separated rungs (the full rung is implicit).")
@click.option("--window", "windows", type=click.Choice(["1", "3", "5"]), multiple=True,
              default=("1",), show_default=True)
@click.option("--threshold", type=float, default=0.5, show_default=True,
              help="Entailment probability decision threshold.")
@click.option("--negative-policy", type=click.Choice(["balanced", "natural"]),
              default="balanced", show_default=True)
@click.option("--include-all-behaviors", is_flag=True,
              help="Also run high-coverage behaviors at window sizes 3 and 5.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "run_dir", type=click.Path(), required=True)
@handle_errors
def train_nli(chats_path, labels_path, split_paths, behavior, backend, ladder, windows,
              threshold, negative_policy, include_all_behaviors, seed, jobs, run_dir):
    """Entailment pipeline: zero/few/full-shot ladders and window sizes."""
    from .taxonomy import default_taxonomy

    corpus = load_corpus(chats_path, labels_path)
    plans = _load_plans(split_paths)
    behaviors = _parse_behaviors(behavior)
    taxonomy = default_taxonomy()
    ladder_spec = _parse_ladder(ladder)
    window_sizes = sorted({int(w) for w in windows})

    if backend in ("mock", "transformer"):
        backend_config = {"kind": backend, "seed": seed}
        if backend == "mock":
            backend_config["keyword_table"] = fixtures.default_keyword_table(taxonomy)
    else:
        backend_config = json.loads(Path(backend).read_text())

    run_path = Path(run_dir)
    run_path.mkdir(parents=True, exist_ok=True)

    tasks = []
    for behavior_id in behaviors:
        for window in window_sizes:
            if (
                window > 1
                and behavior_id in WINDOW_EXCLUDED_BEHAVIORS
                and not include_all_behaviors
            ):
                continue
            # Multi-message runs reuse full-shot training only.
            task_ladder = ladder_spec if window == 1 else ShotLadder(())
            tasks.append((behavior_id, window, task_ladder))

    def run_one(task):
        behavior_id, window, task_ladder = task
        per_plan: dict[str, list[MetricsSummary]] = {}
        for plan_no, plan in enumerate(plans):
            config = TrainConfig(seed=seed + plan.seed, base_model_id=backend_config.get(
                "base_model_id", backend_config["kind"]))
            results = run_ladder(
                corpus, plan, behavior_id, window, task_ladder,
                load_backend(backend_config), config, taxonomy,
                out_dir=run_path if plan_no == 0 else None,
                threshold=threshold,
                negative_policy=negative_policy,
            )
            for rung_key, summary in results.items():
                per_plan.setdefault(rung_key, []).append(summary)
        for rung_key, summaries in per_plan.items():
            merged = merge_summaries(summaries)
            rung_dir = run_path / behavior_id / str(window) / rung_key
            rung_dir.mkdir(parents=True, exist_ok=True)
            save_summary(merged, rung_dir / "metrics.json")

    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        list(pool.map(run_one, tasks))

    cov = coverage(corpus)
    (run_path / "coverage.json").write_text(json.dumps(cov, indent=2, sort_keys=True) + "\n")
    _write_manifest(
        run_path,
        chats_path=str(Path(chats_path).resolve()),
        labels_path=str(Path(labels_path).resolve()),
        corpus_sha256=_file_digest(Path(chats_path), Path(labels_path)),
        split_seeds=[p.seed for p in plans],
        resample_policy="all regions resampled per seed",
        backend=backend_config["kind"],
        windows=window_sizes,
        ladder=list(ladder_spec.rungs),
        threshold=threshold,
        negative_policy=negative_policy,
        behaviors=behaviors,
        seed=seed,
    )
    click.echo(f"ran {len(tasks)} ladder tasks into {run_path}")


@main.command("report")
@click.option("--run", "run_dir", type=click.Path(), required=True)
@click.option("--format", "formats", default="md,csv", show_default=True)
@handle_errors
def report_cmd(run_dir, formats):
    """Emit summary tables and learning-curve files for a completed run."""
    run_path = Path(run_dir)
    if not run_path.is_dir():
        raise IncompleteRun(f"run directory {run_dir} does not exist")
    written = emit_report(run_path, formats=[f.strip() for f in formats.split(",")])
    click.echo(f"wrote {len(written)} report files under {run_path / 'report'}")


@main.command("kappa")
@click.option("--run", "run_dir", type=click.Path(exists=True), required=True)
@click.option("--ratings", "ratings_path", type=click.Path(exists=True), required=True)
@click.option("--policy", type=click.Choice(["exclude", "agree"]), default="exclude",
              show_default=True)
@click.option("--out", type=click.Path(), default=None,
              help="Default: <run>/report/agreement_report.json")
@handle_errors
def kappa_cmd(run_dir, ratings_path, policy, out):
    """Pairwise Cohen's kappa between gold labels, rater, and model."""
    from .review_service import select_best_predictions

    run_path = Path(run_dir)
    manifest_path = run_path / "manifest.json"
    if not manifest_path.exists():
        raise IncompleteRun(f"no manifest.json in {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    corpus = load_corpus(manifest["chats_path"], manifest["labels_path"])
    predictions = select_best_predictions(run_path)
    if not predictions:
        raise IncompleteRun(f"no prediction artifacts in {run_dir}")

    events = []
    with open(ratings_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(RatingEvent.from_dict(json.loads(line)))

    rated = {(ev.message_ref, ev.behavior_id) for ev in events}
    gold = {
        (ref, b): corpus.label(ref, b)
        for ref, b in rated
        if ref in corpus.labels and b in predictions and ref in predictions[b]
    }
    model = {key: predictions[key[1]][key[0]] for key in gold}

    out_path = Path(out) if out else run_path / "report" / "agreement_report.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    chosen = UncertainPolicy.EXCLUDE_UNCERTAIN if policy == "exclude" else UncertainPolicy.UNCERTAIN_AS_AGREE
    report = emit_agreement_report(gold, model, events, out_path, primary_policy=chosen)
    click.echo(f"wrote {out_path} (total overall kappa "
               f"{report['total'].get('overall', float('nan')):.3f})")


@main.command("serve")
@click.option("--port", type=int, default=8080, show_default=True, envvar="PORT")
@click.option("--data-dir", type=click.Path(), required=True, envvar="DATA_DIR",
              help="Directory containing runs/ and sessions/.")
@click.option("--assets", type=click.Path(), default=None,
              help="Static UI bundle directory (default <data-dir>/ui when present).")
@click.option("--host", default="127.0.0.1", show_default=True)
@handle_errors
def serve_cmd(port, data_dir, assets, host):
    """Start the review service (and UI, when a bundle is present)."""
    import uvicorn

    from .review_service import create_app

    data_path = Path(data_dir)
    asset_dir = Path(assets) if assets else data_path / "ui"
    app = create_app(data_path, data_path / "runs", asset_dir if asset_dir.is_dir() else None)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

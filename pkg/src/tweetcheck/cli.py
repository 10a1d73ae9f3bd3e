"""Command-line interface: ingest, features, factver, bias, train, evaluate,
sweep, predict, serve, report."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, corpus
from .biaser import bias_score, load_bias_model, save_bias_model, train_bias_model
from .embeddings import load_embeddings, save_embeddings
from .exceptions import TweetcheckError
from .factver import factver_score, load_index
from .features import (
    apply_scaler,
    assemble_feature_vector,
    feature_label_correlation,
    fit_scaler,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    Resources,
    make_bundle,
    render_table,
    run_experiment,
    seed_sweep,
)
from .pipeline import Pipeline, load_bundle, save_bundle, store_embedder, provider_embedder
from .synthetic import make_synthetic


@click.group()
@click.version_option(version=__version__, prog_name="tweetcheck")
def main():
    """Multilingual fake-tweet detection engine."""


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


# --- ingest -----------------------------------------------------------------


@main.group()
def ingest():
    """Dataset loading, conversion, and synthetic fixtures."""


@ingest.command("validate")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--schema", default=corpus.SCHEMA_VERSION, show_default=True)
def ingest_validate(data_path: str, schema: str):
    """Validate a dataset file and print per-language tallies."""
    try:
        ds = corpus.load_dataset(data_path, schema=schema)
    except TweetcheckError as exc:
        _fail(exc)
    click.echo(json.dumps({"records": len(ds), "counts": ds.counts()}, ensure_ascii=False))


@ingest.command("convert-csv")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--text-col", default="text", show_default=True)
@click.option("--id-col", default=None)
@click.option("--label-col", default="label", show_default=True)
@click.option("--lang-col", default=None)
@click.option("--lang", default="en", show_default=True)
@click.option("--label-map", default=None, help='e.g. "no=1,yes=0" for claim-question answers')
def ingest_convert(in_path, out_path, text_col, id_col, label_col, lang_col, lang, label_map):
    """Convert a CSV export into the line-delimited dataset format."""
    mapping = None
    if label_map:
        mapping = {}
        for pair in label_map.split(","):
            key, _, value = pair.partition("=")
            mapping[key.strip()] = int(value)
    try:
        n = corpus.convert_csv(
            in_path,
            out_path,
            text_col=text_col,
            id_col=id_col,
            label_col=label_col,
            lang_col=lang_col,
            lang=lang,
            label_map=mapping,
        )
    except TweetcheckError as exc:
        _fail(exc)
    click.echo(f"wrote {n} records to {out_path}")


@ingest.command("synth")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--rows", default=100, show_default=True, help="rows per language")
@click.option("--dim", default=16, show_default=True)
@click.option("--seed", default=7, show_default=True)
def ingest_synth(out_dir, rows, dim, seed):
    """Write the synthetic trilingual dataset + embeddings fixture."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds, store = make_synthetic(rows_per_lang=rows, dim=dim, seed=seed)
    corpus.save_dataset(ds, out / "tweets.jsonl")
    save_embeddings(store, out / "embeddings.jsonl")
    click.echo(f"wrote {len(ds)} records and {len(store)} embeddings to {out}")


# --- features ---------------------------------------------------------------


def _load_resources(embeddings, index, allowlist, bias_model) -> Resources:
    store = load_embeddings(embeddings) if embeddings else None
    idx = load_index(index, allowlist) if index and allowlist else None
    bm = load_bias_model(bias_model) if bias_model else None
    return Resources(embeddings=store, index=idx, bias_model=bm)


_FAMILIES_HELP = "comma-separated subset of TextEmbd,tweettext,tweetuser,FactVer,Bias"


@main.group()
def features():
    """Feature extraction and the correlation report."""


@features.command("extract")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--families", default="tweettext", show_default=True, help=_FAMILIES_HELP)
@click.option("--embeddings", default=None, type=click.Path(exists=True))
@click.option("--index", default=None, type=click.Path(exists=True))
@click.option("--allowlist", default=None, type=click.Path(exists=True))
@click.option("--bias-model", default=None, type=click.Path(exists=True))
@click.option("--as-of", default="2020-06-01T00:00:00+00:00", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def features_extract(data_path, families, embeddings, index, allowlist, bias_model, as_of, out_path):
    """Write one {id, layout_hash, values} line per record."""
    from .harness import _build_matrix

    fams = tuple(f.strip() for f in families.split(","))
    try:
        ds = corpus.load_dataset(data_path)
        resources = _load_resources(embeddings, index, allowlist, bias_model)
        cfg = ExperimentConfig(
            train_langs=ds.langs, test_langs=ds.langs, families=fams, as_of=as_of
        )
        matrix, layout, _ = _build_matrix(list(ds), cfg, resources)
    except TweetcheckError as exc:
        _fail(exc)
    from .features import layout_hash

    lh = layout_hash(layout)
    with open(out_path, "w", encoding="utf-8") as fh:
        for rec, row in zip(ds, matrix):
            fh.write(json.dumps({"id": rec.id, "layout_hash": lh, "values": row.tolist()}))
            fh.write("\n")
    click.echo(f"wrote {len(ds)} rows ({len(layout)} features) to {out_path}")


@features.command("correlate")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--families", default="tweettext,tweetuser", show_default=True, help=_FAMILIES_HELP)
@click.option("--embeddings", default=None, type=click.Path(exists=True))
@click.option("--index", default=None, type=click.Path(exists=True))
@click.option("--allowlist", default=None, type=click.Path(exists=True))
@click.option("--bias-model", default=None, type=click.Path(exists=True))
@click.option("--as-of", default="2020-06-01T00:00:00+00:00", show_default=True)
def features_correlate(data_path, families, embeddings, index, allowlist, bias_model, as_of):
    """Print the feature-to-label correlation table."""
    from .harness import _build_matrix

    fams = tuple(f.strip() for f in families.split(","))
    try:
        ds = corpus.load_dataset(data_path)
        resources = _load_resources(embeddings, index, allowlist, bias_model)
        cfg = ExperimentConfig(
            train_langs=ds.langs, test_langs=ds.langs, families=fams, as_of=as_of
        )
        matrix, layout, _ = _build_matrix(list(ds), cfg, resources)
        report = feature_label_correlation(matrix, [r.label for r in ds], names=layout)
    except TweetcheckError as exc:
        _fail(exc)
    click.echo(report.render_table())


# --- factver / bias ---------------------------------------------------------


@main.command("factver")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--allowlist", required=True, type=click.Path(exists=True))
@click.option("--k", default=10, show_default=True)
@click.option("--text", required=True)
def factver_cmd(index_path, allowlist, k, text):
    """Score one text against the trusted index."""
    try:
        idx = load_index(index_path, allowlist)
        result = factver_score(corpus.preprocess_text(text), idx, k)
    except TweetcheckError as exc:
        _fail(exc)
    click.echo(
        json.dumps(
            {
                "score": result.score,
                "k_used": result.k_used,
                "matched_titles": list(result.matched_titles),
            },
            ensure_ascii=False,
        )
    )


@main.group()
def bias():
    """Train or apply the offensive-language bias model."""


@bias.command("train")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True),
              help="line-delimited {text, offensive} records")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=50, show_default=True)
def bias_train(data_path, out_path, seed, epochs):
    rows = []
    for lineno, line in enumerate(Path(data_path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        raw = json.loads(line)
        rows.append((raw["text"], int(raw["offensive"])))
    from .biaser import BiasConfig

    try:
        model = train_bias_model(rows, seed=seed, config=BiasConfig(epochs=epochs))
    except TweetcheckError as exc:
        _fail(exc)
    save_bias_model(model, out_path)
    click.echo(f"trained on {len(rows)} examples, wrote {out_path}")


@bias.command("score")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--text", required=True)
def bias_score_cmd(model_path, text):
    try:
        model = load_bias_model(model_path)
    except TweetcheckError as exc:
        _fail(exc)
    click.echo(json.dumps({"bias_score": bias_score(model, text)}))


# --- train / evaluate / sweep -----------------------------------------------


def _experiment_config(config_path: str) -> ExperimentConfig:
    raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
    return ExperimentConfig.from_dict(raw)


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", default=None, type=click.Path(exists=True))
@click.option("--index", default=None, type=click.Path(exists=True))
@click.option("--allowlist", default=None, type=click.Path(exists=True))
@click.option("--bias-model", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def train_cmd(config_path, data_path, embeddings, index, allowlist, bias_model, out_path):
    """Train a model bundle (classifier + scaler + layout) for serving."""
    try:
        cfg = _experiment_config(config_path)
        ds = corpus.load_dataset(data_path)
        resources = _load_resources(embeddings, index, allowlist, bias_model)
        bundle = make_bundle(cfg, ds, resources)
    except TweetcheckError as exc:
        _fail(exc)
    save_bundle(bundle, out_path)
    click.echo(f"wrote bundle {bundle.fingerprint} to {out_path}")


@main.command("evaluate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", default=None, type=click.Path(exists=True))
@click.option("--index", default=None, type=click.Path(exists=True))
@click.option("--allowlist", default=None, type=click.Path(exists=True))
@click.option("--bias-model", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
def evaluate_cmd(config_path, data_path, embeddings, index, allowlist, bias_model, out_path):
    """Run one experiment and print (or save) its report."""
    try:
        cfg = _experiment_config(config_path)
        ds = corpus.load_dataset(data_path)
        resources = _load_resources(embeddings, index, allowlist, bias_model)
        report = run_experiment(cfg, ds, resources)
    except TweetcheckError as exc:
        _fail(exc)
    if out_path:
        report.save(out_path)
        click.echo(f"wrote report to {out_path}")
    else:
        click.echo(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))


@main.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", default=None, type=click.Path(exists=True))
@click.option("--index", default=None, type=click.Path(exists=True))
@click.option("--allowlist", default=None, type=click.Path(exists=True))
@click.option("--bias-model", default=None, type=click.Path(exists=True))
@click.option("--seeds", required=True, help="comma-separated list, e.g. 1,2,3")
@click.option("--out-dir", default=None, type=click.Path())
def sweep_cmd(config_path, data_path, embeddings, index, allowlist, bias_model, seeds, out_dir):
    """Run the same experiment across seeds and summarize F-score spread."""
    seed_list = [int(s) for s in seeds.split(",") if s.strip()]
    try:
        cfg = _experiment_config(config_path)
        ds = corpus.load_dataset(data_path)
        resources = _load_resources(embeddings, index, allowlist, bias_model)
        result = seed_sweep(cfg, ds, resources, seed_list)
    except TweetcheckError as exc:
        _fail(exc)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for report in result.reports:
            report.save(out / f"report-seed{report.config['split_seed']}.json")
        (out / "summary.json").write_text(json.dumps(result.summary(), indent=2), encoding="utf-8")
        click.echo(f"wrote {len(result.reports)} reports to {out}")
    click.echo(json.dumps(result.summary()))


# --- predict / serve / report -----------------------------------------------


@main.command("predict")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--text", required=True)
@click.option("--embeddings", default=None, type=click.Path(exists=True))
@click.option("--provider-url", default=None)
@click.option("--index", default=None, type=click.Path(exists=True))
@click.option("--allowlist", default=None, type=click.Path(exists=True))
@click.option("--bias-model", default=None, type=click.Path(exists=True))
def predict_cmd(bundle_path, text, embeddings, provider_url, index, allowlist, bias_model):
    """Classify one text with a trained bundle."""
    try:
        bundle = load_bundle(bundle_path)
        embedder = None
        if provider_url:
            from .embeddings import EmbeddingProviderClient

            embedder = provider_embedder(EmbeddingProviderClient(endpoint=provider_url))
        elif embeddings:
            embedder = store_embedder(load_embeddings(embeddings))
        resources = _load_resources(None, index, allowlist, bias_model)
        pipe = Pipeline(
            bundle=bundle,
            embedder=embedder,
            index=resources.index,
            bias_model=resources.bias_model,
        )
        verdict = pipe.classify(text)
    except TweetcheckError as exc:
        _fail(exc)
    click.echo(json.dumps(verdict.to_dict(), ensure_ascii=False))


@main.command("serve")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
def serve_cmd(config_path):
    """Start the prediction service (config file + TWEETCHECK_* env overrides)."""
    from .service import load_serve_config, serve

    try:
        cfg = load_serve_config(config_path)
        serve(cfg)
    except TweetcheckError as exc:
        _fail(exc)
    except OSError as exc:
        _fail(exc)


@main.command("report")
@click.argument("reports", nargs=-1, type=click.Path(exists=True))
@click.option("--table", is_flag=True, help="render a fixed-width grid")
@click.option("--reference", is_flag=True, help="include bundled reference benchmark rows")
def report_cmd(reports, table, reference):
    """Render saved experiment reports."""
    loaded = [ExperimentReport.load(p) for p in reports]
    if table or reference:
        click.echo(render_table(loaded, include_reference=reference))
    else:
        for rep in loaded:
            click.echo(json.dumps(rep.to_dict(), ensure_ascii=False))


if __name__ == "__main__":
    main()

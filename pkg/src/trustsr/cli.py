"""Command-line surface tying scoring, selection and validation together.

Exit codes partition error classes: 2 for configuration problems, 3 for
data problems, 4 for provider failures, 5 when confidence filtering leaves
no candidate.  Every failure also writes a one-line JSON object to stderr.
All reports are serialized deterministically (sorted keys, fixed float
repr) so reruns over unchanged inputs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click

from . import __version__, errors
from .embedding import EmbeddingProvider, cached, mock_provider, remote_provider
from .harness import DegradationKind, DegradationSpec, build_ladder, degrade
from .image import (
    ensemble_average,
    load_image,
    load_sample_set,
    save_image,
    save_sample_set,
)
from .metrics import (
    DEFAULT_ABLATION_GRID,
    TwsWeights,
    WaveletConfig,
    WeightConfig,
    ablation_sweep,
    tws,
)
from .stats import t_test_one_sample, t_test_two_sample
from .vlm import (
    PromptAxis,
    ReplayVlmProvider,
    default_pool,
    load_human_csv,
    load_provider_config,
    robustness_row,
    two_stage_pipeline,
)

CACHE_ENV = "TRUSTSR_CACHE_DIR"


# --- serialization helpers --------------------------------------------------


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_json(path: Path, obj) -> None:
    path.write_text(_dump_json(obj))


def _write_csv(path: Path, rows: list[dict], fieldnames: list[str]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fieldnames})


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


# --- option parsing helpers -------------------------------------------------


def _parse_weights(text: str) -> TwsWeights:
    parts = text.split(",")
    if len(parts) != 3:
        raise errors.ConfigError(
            f"--weights needs three comma-separated values, got {text!r}"
        )
    try:
        clip, edge, wavelet = (float(p) for p in parts)
    except ValueError as exc:
        raise errors.ConfigError(f"--weights: {exc}") from exc
    try:
        return TwsWeights(clip, edge, wavelet)
    except ValueError as exc:
        raise errors.ConfigError(str(exc)) from exc


def _parse_floats_list(text: str, flag: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise errors.ConfigError(f"{flag}: {exc}") from exc


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise errors.ConfigError(f"cannot read config {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise errors.ConfigError(f"config {p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise errors.ConfigError(f"config {p} must hold a JSON object")
    return doc


def _effective(ctx: click.Context, name: str, config: dict, fallback):
    """CLI flag beats config file beats built-in default."""
    source = ctx.get_parameter_source(name)
    value = ctx.params.get(name)
    if source is not None and source.name != "DEFAULT":
        return value
    if name in config:
        return config[name]
    return fallback if fallback is not None else value


def _check_out_dir(out_dir: Path, inputs: list[Path]) -> None:
    resolved = out_dir.resolve()
    for input_path in inputs:
        parent = input_path.resolve()
        if parent.is_file():
            parent = parent.parent
        if resolved == parent:
            raise errors.ConfigError(
                f"output dir {out_dir} must be distinct from input dir {parent}"
            )


def _build_embedding_provider(
    provider: str,
    endpoint: str | None,
    mock_dim: int,
    mock_seed: int,
    cache_dir: str | None,
) -> EmbeddingProvider:
    if provider == "mock":
        built: EmbeddingProvider = mock_provider(dim=mock_dim, seed=mock_seed)
    elif provider == "remote":
        if not endpoint:
            raise errors.ConfigError("--provider remote requires --endpoint")
        built = remote_provider(endpoint)
    else:
        raise errors.ConfigError(f"unknown embedding provider {provider!r}")
    cache_root = cache_dir or os.environ.get(CACHE_ENV)
    if cache_root:
        built = cached(built, cache_root)
    return built


_SCORE_CSV_FIELDS = [
    "candidate_id",
    "s_clip_raw",
    "s_edge_raw",
    "s_wavelet_raw",
    "s_clip",
    "s_edge",
    "s_wavelet",
    "tws",
]


def _embedding_options(fn):
    fn = click.option("--provider", default="mock", show_default=True,
                      type=click.Choice(["mock", "remote"]),
                      help="Embedding provider backing the semantic component.")(fn)
    fn = click.option("--endpoint", default=None, help="Remote embedding endpoint URL.")(fn)
    fn = click.option("--mock-dim", default=64, show_default=True, type=int)(fn)
    fn = click.option("--mock-seed", default=0, show_default=True, type=int)(fn)
    fn = click.option("--cache-dir", default=None,
                      help=f"Embedding cache dir (default ${CACHE_ENV} if set).")(fn)
    return fn


# --- commands ----------------------------------------------------------------


@click.group()
@click.version_option(version=__version__, prog_name="trustsr")
def cli() -> None:
    """Rank, select and validate super-resolution candidate images."""


@cli.command()
@click.option("--manifest", required=True, type=click.Path(), help="Sample-set manifest.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--weights", default=None, help="lambda_clip,lambda_edge,lambda_wavelet.")
@click.option("--wavelet-scale", default=None, type=float,
              help="Fixed divisor for the wavelet component instead of min-max.")
@click.option("--levels", default=2, show_default=True, type=int,
              help="Wavelet decomposition levels.")
@click.option("--formats", default="json,csv", show_default=True)
@click.option("--jobs", default=1, show_default=True, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="JSON config file; flags override its values.")
@_embedding_options
@click.pass_context
def score(ctx, manifest, out_dir, weights, wavelet_scale, levels, formats, jobs,
          config_path, provider, endpoint, mock_dim, mock_seed, cache_dir):
    """Score every candidate in a manifest and write the report."""
    config = _load_config_file(config_path)
    weights_text = _effective(ctx, "weights", config, "0.2,0.3,0.5")
    wavelet_scale = _effective(ctx, "wavelet_scale", config, None)
    levels = int(_effective(ctx, "levels", config, 2))
    provider_name = _effective(ctx, "provider", config, "mock")
    tws_weights = _parse_weights(weights_text)
    sample_set = load_sample_set(manifest)
    out = Path(out_dir)
    _check_out_dir(out, [Path(manifest)])
    out.mkdir(parents=True, exist_ok=True)
    embedder = _build_embedding_provider(
        provider_name, endpoint, mock_dim, mock_seed, cache_dir
    )
    cfg = WaveletConfig(levels=levels)
    breakdowns = tws(
        None, sample_set,
        weights=tws_weights, provider=embedder, cfg=cfg,
        wavelet_scale=wavelet_scale, jobs=max(1, jobs),
    )
    report = {
        "command": "score",
        "config": {
            "manifest": str(manifest),
            "weights": tws_weights.as_dict(),
            "wavelet": {"name": cfg.wavelet_name, "levels": cfg.levels,
                        "boundary": cfg.boundary_mode},
            "wavelet_scale": wavelet_scale,
            "embedding_provider": embedder.provider_id,
            "scene_metadata": sample_set.metadata,
        },
        "scene_id": sample_set.scene_id,
        "scores": [bd.as_dict() for bd in breakdowns],
    }
    wanted = {f.strip() for f in formats.split(",") if f.strip()}
    if not wanted <= {"json", "csv"}:
        raise errors.ConfigError(f"--formats must be a subset of json,csv: {formats!r}")
    if "json" in wanted or not wanted:
        _write_json(out / "scores.json", report)
    if "csv" in wanted:
        _write_csv(out / "scores.csv", [bd.as_dict() for bd in breakdowns],
                   _SCORE_CSV_FIELDS)
    click.echo(f"scored {len(breakdowns)} candidates -> {out}")


@cli.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--replay", default=None, type=click.Path(),
              help="Replay log serving both pipeline stages; no network needed.")
@click.option("--info-provider-id", default="info", show_default=True)
@click.option("--artifact-provider-id", default="artifact", show_default=True)
@click.option("--info-config", default=None, type=click.Path(),
              help="Live provider config for the identification stage.")
@click.option("--artifact-config", default=None, type=click.Path(),
              help="Live provider config for the artifact stage.")
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--threshold", default=80.0, show_default=True, type=float,
              help="Mean confidence a candidate must reach to survive stage one.")
@click.option("--batch-size", default=10, show_default=True, type=int)
@click.option("--jobs", default=1, show_default=True, type=int)
def select(manifest, out_dir, replay, info_provider_id, artifact_provider_id,
           info_config, artifact_config, k, threshold, batch_size, jobs):
    """Run the two-stage selection pipeline and write the ensembled image."""
    if k < 1:
        raise errors.ConfigError("--k must be >= 1")
    sample_set = load_sample_set(manifest)
    out = Path(out_dir)
    _check_out_dir(out, [Path(manifest)])
    if replay:
        info_provider = ReplayVlmProvider(info_provider_id, replay)
        artifact_provider = ReplayVlmProvider(artifact_provider_id, replay)
    elif info_config and artifact_config:
        info_provider = load_provider_config(info_config)
        artifact_provider = load_provider_config(artifact_config)
    else:
        raise errors.ConfigError(
            "select needs either --replay or both --info-config and --artifact-config"
        )
    result, ensembled = two_stage_pipeline(
        sample_set,
        default_pool(PromptAxis.INFORMATION),
        default_pool(PromptAxis.ARTIFACT),
        info_provider,
        artifact_provider,
        k=k,
        confidence_threshold=threshold,
        batch_size=batch_size,
        jobs=jobs,
    )
    out.mkdir(parents=True, exist_ok=True)
    save_image(ensembled, out / "ensemble.png")
    report = {
        "command": "select",
        "config": {
            "manifest": str(manifest),
            "k": k,
            "confidence_threshold": threshold,
            "batch_size": batch_size,
            "info_provider": info_provider.provider_id,
            "artifact_provider": artifact_provider.provider_id,
            "replay": str(replay) if replay else None,
            "scene_metadata": sample_set.metadata,
        },
        "scene_id": sample_set.scene_id,
        "selection": result.as_dict(),
        "ensemble_image": "ensemble.png",
        "ensembled_candidates": result.top_k,
    }
    _write_json(out / "selection.json", report)
    click.echo(f"selected top-{len(result.top_k)} of {len(sample_set)} -> {out}")


@cli.command()
@click.option("--scene", "scene_manifests", multiple=True, required=True,
              type=click.Path(), help="Sample-set manifest; repeatable.")
@click.option("--provider", "provider_specs", multiple=True, required=True,
              help="ID=REPLAY_LOG pair; repeatable, one report row each.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--human-info", default=None, type=click.Path())
@click.option("--human-artifact", default=None, type=click.Path())
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--batch-size", default=10, show_default=True, type=int)
@click.option("--jobs", default=1, show_default=True, type=int)
def robustness(scene_manifests, provider_specs, out_dir, human_info,
               human_artifact, k, batch_size, jobs):
    """Prompt consistency and human agreement per provider, both axes."""
    scenes = [load_sample_set(m) for m in scene_manifests]
    out = Path(out_dir)
    _check_out_dir(out, [Path(m) for m in scene_manifests])
    human_info_sel = load_human_csv(human_info) if human_info else None
    human_artifact_sel = load_human_csv(human_artifact) if human_artifact else None
    rows = []
    for spec in provider_specs:
        if "=" not in spec:
            raise errors.ConfigError(f"--provider expects ID=REPLAY_LOG, got {spec!r}")
        provider_id, log_path = spec.split("=", 1)
        provider = ReplayVlmProvider(provider_id, log_path)
        rows.append(
            robustness_row(
                provider, scenes,
                default_pool(PromptAxis.INFORMATION),
                default_pool(PromptAxis.ARTIFACT),
                human_info=human_info_sel,
                human_artifact=human_artifact_sel,
                batch_size=batch_size, k=k, jobs=jobs,
            )
        )
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "command": "robustness",
        "config": {
            "scenes": [str(m) for m in scene_manifests],
            "k": k,
            "batch_size": batch_size,
            "human_info": str(human_info) if human_info else None,
            "human_artifact": str(human_artifact) if human_artifact else None,
        },
        "rows": rows,
    }
    _write_json(out / "robustness.json", report)
    _write_csv(
        out / "robustness.csv",
        rows,
        ["provider_id", "consistency_info", "consistency_artifact",
         "agreement_info", "agreement_artifact",
         "topk_overlap_info", "topk_overlap_artifact"],
    )
    click.echo(f"robustness over {len(rows)} providers -> {out}")


@cli.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--grid", "grid_path", default=None, type=click.Path(),
              help="JSON list of named weight rows; defaults to the built-in grid.")
@click.option("--wavelet-scale", default=None, type=float)
@click.option("--levels", default=2, show_default=True, type=int)
@_embedding_options
def ablation(manifest, out_dir, grid_path, wavelet_scale, levels,
             provider, endpoint, mock_dim, mock_seed, cache_dir):
    """Mean score per weight configuration over one candidate set."""
    sample_set = load_sample_set(manifest)
    out = Path(out_dir)
    _check_out_dir(out, [Path(manifest)])
    if grid_path:
        try:
            doc = json.loads(Path(grid_path).read_text())
            grid = [
                WeightConfig(
                    str(row["name"]),
                    TwsWeights(
                        float(row["lambda_clip"]),
                        float(row["lambda_edge"]),
                        float(row["lambda_wavelet"]),
                    ),
                )
                for row in doc
            ]
        except OSError as exc:
            raise errors.ConfigError(f"cannot read grid {grid_path}: {exc}") from exc
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise errors.ConfigError(f"bad grid file {grid_path}: {exc}") from exc
        if not grid:
            raise errors.ConfigError("ablation grid is empty")
    else:
        grid = list(DEFAULT_ABLATION_GRID)
    embedder = _build_embedding_provider(provider, endpoint, mock_dim, mock_seed, cache_dir)
    rows = ablation_sweep(
        sample_set, grid, provider=embedder,
        cfg=WaveletConfig(levels=levels), wavelet_scale=wavelet_scale,
    )
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "command": "ablation",
        "config": {
            "manifest": str(manifest),
            "wavelet_scale": wavelet_scale,
            "levels": levels,
            "embedding_provider": embedder.provider_id,
            "scene_metadata": sample_set.metadata,
        },
        "rows": rows,
    }
    _write_json(out / "ablation.json", report)
    _write_csv(out / "ablation.csv", rows,
               ["name", "lambda_clip", "lambda_edge", "lambda_wavelet", "mean_tws"])
    click.echo(f"ablation over {len(rows)} configurations -> {out}")


@cli.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--ids", default=None, help="Comma-separated candidate subset.")
def ensemble(manifest, out_path, ids):
    """Pixel-average candidates from a manifest into one image."""
    sample_set = load_sample_set(manifest)
    if ids:
        wanted = [i.strip() for i in ids.split(",") if i.strip()]
        missing = [i for i in wanted if i not in sample_set.candidate_ids]
        if missing:
            raise errors.ConfigError(f"--ids not in manifest: {missing}")
        images = [sample_set.image(i) for i in wanted]
    else:
        images = [img for _, img in sample_set.candidates]
    save_image(ensemble_average(images), out_path)
    click.echo(f"ensembled {len(images)} candidates -> {out_path}")


@cli.group()
def stats() -> None:
    """Statistical tests over newline-delimited float files."""


def _read_floats(path: str) -> list[float]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise errors.IoError(f"cannot read {path}: {exc}") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise errors.FormatError(f"{path}:{lineno}: not a number: {line!r}") from exc
    return values


@stats.command()
@click.option("--a", "a_path", required=True, type=click.Path())
@click.option("--b", "b_path", default=None, type=click.Path())
@click.option("--mu0", default=None, type=float,
              help="Hypothesized mean for the one-sample test.")
@click.option("--alternative", default="two-sided", show_default=True,
              type=click.Choice(["two-sided", "greater", "less"]))
def ttest(a_path, b_path, mu0, alternative):
    """Two-sample (equal variance) or one-sample t-test."""
    if (b_path is None) == (mu0 is None):
        raise errors.ConfigError("provide exactly one of --b (two-sample) or --mu0")
    a = _read_floats(a_path)
    if b_path is not None:
        result = t_test_two_sample(a, _read_floats(b_path), alternative=alternative)
    else:
        result = t_test_one_sample(a, mu0, alternative=alternative)
    click.echo(_dump_json(result.as_dict()), nl=False)


@cli.command()
@click.option("--image", "image_path", required=True, type=click.Path())
@click.option("--kind", required=True,
              type=click.Choice([k.value for k in DegradationKind]))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--strength", default=None, type=float,
              help="Single distortion strength; writes one image file.")
@click.option("--strengths", default=None,
              help="Ascending severities; writes a ladder directory.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--scene-id", default="ladder", show_default=True)
@click.option("--bit-depth", default=8, show_default=True, type=click.Choice(["8", "16"]))
def degrade_cmd(image_path, kind, out_path, strength, strengths, seed, scene_id,
                bit_depth):
    """Apply a distortion, or build a full degradation ladder."""
    if (strength is None) == (strengths is None):
        raise errors.ConfigError("provide exactly one of --strength or --strengths")
    reference = load_image(image_path)
    kind_enum = DegradationKind(kind)
    if strength is not None:
        degraded = degrade(reference, DegradationSpec(kind_enum, strength, seed=seed))
        save_image(degraded, out_path, bit_depth=int(bit_depth))
        click.echo(f"degraded image -> {out_path}")
        return
    values = _parse_floats_list(strengths, "--strengths")
    ladder = build_ladder(reference, kind_enum, values, scene_id=scene_id, seed=seed)
    manifest = save_sample_set(ladder, out_path, bit_depth=int(bit_depth))
    click.echo(f"ladder with {len(ladder)} rungs -> {manifest}")


cli.add_command(degrade_cmd, name="degrade")


def main(argv=None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        _emit_error("ConfigError", exc.format_message())
        sys.exit(2)
    except errors.TrustSrError as exc:
        _emit_error(type(exc).__name__, str(exc))
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()

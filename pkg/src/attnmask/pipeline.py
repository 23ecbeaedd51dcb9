"""End-to-end orchestration: config, run manifests, extractor calls, benchmark.

A run goes archive (or image, via the external extractor command) ->
aggregation -> merging -> label mask -> optional guidance scores -> optional
selection and metrics, with every stage artifact persisted under the run
directory and listed in a manifest. Given the same archive bytes and config,
a run is a pure function: artifacts are byte-identical across reruns, and the
run id is a content hash of the canonical config plus input digests.

The extractor is an external process behind a command template (placeholders
``{image} {prompt} {timestep} {out}``), so this package never links a deep
learning runtime. The ``ATTNMASK_EXTRACTOR`` environment variable overrides
the configured template. Extractor invocations are serialized through a
single process-wide slot; benchmark images otherwise run on a bounded worker
pool.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import shlex
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from . import __version__
from .aggregation import aggregate_stack, compute_weights
from .archive import read_archive_file
from .errors import ConfigError, ExtractorError, StackValidationError
from .guidance import (
    RelevanceMap,
    auto_select,
    build_relevance_map,
    default_token_selection,
    score_regions,
    weight_anchor_maps,
)
from .masking import (
    BinaryMask,
    ConfidenceMap,
    LabelMask,
    Region,
    extract_regions,
    nms_mask,
    render_overlay,
    select_regions,
    split_connected_components,
)
from .merging import MergeParams, ProposalSet, merge_first_pass, merge_refine, sample_anchors
from .metrics import (
    DatasetEvalResult,
    compute_metrics,
    confusion_counts,
    evaluate_dataset,
    report_json,
    report_table,
)
from .pngio import (
    read_binary_mask_png,
    read_image_rgb,
    read_label_mask_png,
    write_binary_mask_png,
    write_confidence_png,
    write_label_mask_png,
    write_region_sidecar,
    write_rgb_png,
)
from .resample import resize_binary_bilinear, resize_image_bilinear
from .stack import AttentionStack, validate_stack

EXTRACTOR_ENV_VAR = "ATTNMASK_EXTRACTOR"
ARCHIVE_SUFFIX = ".atnp"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
_PLACEHOLDERS = ("{image}", "{prompt}", "{timestep}", "{out}")

# accelerator exclusivity: one extractor subprocess at a time per process
_EXTRACTOR_SLOT = threading.Lock()

WEIGHT_MODES = ("proportional", "uniform")
SELECTION_POLICIES = ("none", "top1", "ratio")
GUIDANCE_MODES = ("rank", "weight-anchors")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; the pipeline itself carries no randomness."""

    target: int = 64
    merge: MergeParams = field(default_factory=MergeParams)
    weight_mode: str = "proportional"
    out_width: int = 512
    out_height: int = 512
    selection_policy: str = "none"
    selection_ratio: float = 0.5
    prompt: str = ""
    timestep: int = 300
    extractor_template: Optional[str] = None
    guidance_mode: str = "rank"
    split_components: bool = False
    keep_aggregated: bool = False
    workers: int = 1
    random_free: bool = True

    def __post_init__(self) -> None:
        if self.target < 1:
            raise ConfigError(f"target must be >= 1, got {self.target}", field="target")
        if self.merge.grid > self.target:
            raise ConfigError(
                f"grid {self.merge.grid} exceeds target resolution {self.target}", field="grid"
            )
        if self.out_width < self.target or self.out_height < self.target:
            raise ConfigError(
                f"output size ({self.out_width}x{self.out_height}) below target {self.target}",
                field="out_width",
            )
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"unknown weight mode {self.weight_mode!r}", field="weights")
        if self.selection_policy not in SELECTION_POLICIES:
            raise ConfigError(f"unknown selection policy {self.selection_policy!r}", field="select")
        if not 0 < self.selection_ratio <= 1:
            raise ConfigError(
                f"selection ratio must lie in (0, 1], got {self.selection_ratio}", field="ratio"
            )
        if self.timestep < 1:
            raise ConfigError(f"timestep must be >= 1, got {self.timestep}", field="timestep")
        if self.guidance_mode not in GUIDANCE_MODES:
            raise ConfigError(f"unknown guidance mode {self.guidance_mode!r}", field="guidance_mode")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}", field="workers")
        if not self.random_free:
            raise ConfigError("the pipeline is random-free by contract", field="random_free")

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "grid": self.merge.grid,
            "tau": self.merge.threshold,
            "iters": self.merge.iterations,
            "epsilon": self.merge.epsilon,
            "member_weighted": self.merge.member_weighted,
            "weights": self.weight_mode,
            "out_width": self.out_width,
            "out_height": self.out_height,
            "select": self.selection_policy,
            "ratio": self.selection_ratio,
            "prompt": self.prompt,
            "timestep": self.timestep,
            "extractor": self.extractor_template,
            "guidance_mode": self.guidance_mode,
            "split_components": self.split_components,
            "keep_aggregated": self.keep_aggregated,
            "workers": self.workers,
            "random_free": self.random_free,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {
            "target", "grid", "tau", "iters", "epsilon", "member_weighted", "weights",
            "out_width", "out_height", "select", "ratio", "prompt", "timestep",
            "extractor", "guidance_mode", "split_components", "keep_aggregated",
            "workers", "random_free",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}", field=sorted(unknown)[0])
        defaults = cls()
        merge_fields = {
            "grid": ("grid", int),
            "tau": ("threshold", float),
            "iters": ("iterations", int),
            "epsilon": ("epsilon", float),
            "member_weighted": ("member_weighted", bool),
        }
        merge_kwargs = {}
        for key, (attr, cast) in merge_fields.items():
            if key in raw:
                try:
                    merge_kwargs[attr] = cast(raw[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad value for {key!r}: {raw[key]!r}", field=key) from exc
        try:
            merge = dataclasses.replace(defaults.merge, **merge_kwargs)
        except ValueError as exc:
            offender = next(iter(merge_kwargs))
            for key, (attr, _) in merge_fields.items():
                if attr in str(exc) or key in str(exc):
                    offender = key
                    break
            raise ConfigError(str(exc), field=offender) from exc
        try:
            return cls(
                target=int(raw.get("target", defaults.target)),
                merge=merge,
                weight_mode=str(raw.get("weights", defaults.weight_mode)),
                out_width=int(raw.get("out_width", defaults.out_width)),
                out_height=int(raw.get("out_height", defaults.out_height)),
                selection_policy=str(raw.get("select", defaults.selection_policy)),
                selection_ratio=float(raw.get("ratio", defaults.selection_ratio)),
                prompt=str(raw.get("prompt", defaults.prompt)),
                timestep=int(raw.get("timestep", defaults.timestep)),
                extractor_template=raw.get("extractor", defaults.extractor_template),
                guidance_mode=str(raw.get("guidance_mode", defaults.guidance_mode)),
                split_components=bool(raw.get("split_components", defaults.split_components)),
                keep_aggregated=bool(raw.get("keep_aggregated", defaults.keep_aggregated)),
                workers=int(raw.get("workers", defaults.workers)),
                random_free=bool(raw.get("random_free", defaults.random_free)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}", field=None) from exc

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def load_config(path: Union[str, Path]) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    return RunConfig.from_dict(raw)


@dataclass(frozen=True)
class RunManifest:
    """Content-addressed record of one run and its on-disk artifacts."""

    run_id: str
    created_at: str
    finished_at: str
    config: dict
    inputs: dict
    artifacts: dict
    versions: dict

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class SegmentationResult:
    """In-memory outputs of the segmentation stages for one stack."""

    stack: AttentionStack
    proposals: ProposalSet
    label_mask: LabelMask
    confidence: ConfidenceMap
    regions: list[Region]
    relevance: Optional[RelevanceMap] = None
    scores: Optional[list[tuple[int, float]]] = None
    selected: Optional[set[int]] = None
    selection_mask: Optional[BinaryMask] = None
    aggregated: Optional[np.ndarray] = None


def file_digest(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_id_for(config: RunConfig, input_digests: dict[str, str]) -> str:
    h = hashlib.sha256()
    h.update(config.canonical_json().encode("utf-8"))
    for name in sorted(input_digests):
        h.update(b"\0")
        h.update(name.encode("utf-8"))
        h.update(b"=")
        h.update(input_digests[name].encode("utf-8"))
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def segment_stack(stack: AttentionStack, config: RunConfig) -> SegmentationResult:
    """Pure segmentation core: stack in, masks/regions/scores out."""
    violations = validate_stack(stack, target=config.target)
    if violations:
        raise StackValidationError(violations)

    weights = compute_weights(stack.resolutions, config.weight_mode)
    fused = aggregate_stack(stack, weights, config.target)

    relevance = None
    if stack.cross_attention is not None and stack.metadata.token_strings:
        try:
            tokens = default_token_selection(stack.metadata)
        except ValueError:
            tokens = None  # prompt was all special tokens
        if tokens is not None:
            relevance = build_relevance_map(stack, weights, config.target, tokens)

    anchors = sample_anchors(fused, config.merge.grid)
    if config.guidance_mode == "weight-anchors" and relevance is not None:
        anchors = weight_anchor_maps(anchors, relevance)
    proposals = merge_refine(merge_first_pass(fused, anchors, config.merge))

    label_mask, confidence = nms_mask(proposals, config.out_width, config.out_height)
    if config.split_components:
        label_mask = split_connected_components(label_mask)
    regions = extract_regions(label_mask, confidence)

    scores = score_regions(label_mask, relevance) if relevance is not None else None

    selected = None
    selection_mask = None
    if config.selection_policy != "none":
        if scores is None:
            raise ConfigError(
                "selection policy requires text guidance (cross-attention records with a prompt)",
                field="select",
            )
        selected = auto_select(scores, config.selection_policy, config.selection_ratio)
        selection_mask = select_regions(label_mask, selected)

    return SegmentationResult(
        stack=stack,
        proposals=proposals,
        label_mask=label_mask,
        confidence=confidence,
        regions=regions,
        relevance=relevance,
        scores=scores,
        selected=selected,
        selection_mask=selection_mask,
        aggregated=np.asarray(fused.data) if config.keep_aggregated else None,
    )


def invoke_extractor(
    template: str,
    image_path: Union[str, Path],
    prompt: str,
    timestep: int,
    out_path: Union[str, Path],
) -> Path:
    """Run the external extractor command and verify its archive output.

    The template is split shell-style first and placeholders substituted per
    token, so prompts with spaces stay single arguments and no shell is ever
    involved. The produced archive must parse and its metadata must echo the
    requested prompt and timestep.
    """
    missing = [p for p in _PLACEHOLDERS if p not in template]
    if missing:
        raise ConfigError(
            f"extractor template missing placeholder(s) {missing}: {template!r}", field="extractor"
        )
    substitutions = {
        "{image}": str(image_path),
        "{prompt}": prompt,
        "{timestep}": str(timestep),
        "{out}": str(out_path),
    }
    argv = []
    for token in shlex.split(template):
        for placeholder, value in substitutions.items():
            token = token.replace(placeholder, value)
        argv.append(token)

    with _EXTRACTOR_SLOT:
        proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ExtractorError(
            f"extractor exited {proc.returncode}: {' '.join(argv[:3])}...\n"
            f"stderr: {proc.stderr.strip()[-2000:]}"
        )
    out = Path(out_path)
    if not out.exists():
        raise ExtractorError(f"extractor exited 0 but wrote no archive at {out}")
    try:
        stack = read_archive_file(out)
    except Exception as exc:
        raise ExtractorError(f"extractor output is not a readable archive: {exc}") from exc
    if stack.metadata.prompt != prompt:
        raise ExtractorError(
            f"metadata mismatch: archive prompt {stack.metadata.prompt!r} != requested {prompt!r}"
        )
    if stack.metadata.timestep != timestep:
        raise ExtractorError(
            f"metadata mismatch: archive timestep {stack.metadata.timestep} != requested {timestep}"
        )
    return out


def _canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_result_artifacts(
    result: SegmentationResult,
    run_dir: Path,
    base_image: Optional[np.ndarray],
    gt: Optional[BinaryMask],
) -> dict[str, str]:
    """Persist every stage output; returns {artifact name: relative path}."""
    artifacts: dict[str, str] = {}

    def add(name: str, filename: str) -> Path:
        artifacts[name] = filename
        return run_dir / filename

    np.save(add("proposals", "proposals.npy"), result.proposals.stacked())
    proposal_meta = [
        {"members": p.members, "provenance": list(p.provenance)}
        for p in result.proposals.proposals
    ]
    add("proposal_meta", "proposals.json").write_text(_canonical_dumps(proposal_meta))

    write_label_mask_png(result.label_mask, add("label_mask", "label_mask.png"))
    write_region_sidecar(result.regions, add("regions", "regions.json"))
    write_confidence_png(result.confidence, add("confidence", "confidence.png"))

    if result.aggregated is not None:
        np.save(add("aggregated", "aggregated.npy"), result.aggregated)
    if result.relevance is not None:
        np.save(add("relevance", "relevance.npy"), result.relevance.values)
    if result.scores is not None:
        add("scores", "scores.json").write_text(
            _canonical_dumps([{"label": l, "score": s} for l, s in result.scores])
        )
    if result.selection_mask is not None:
        write_binary_mask_png(result.selection_mask, add("selection", "selection.png"))
        add("selection_labels", "selection.json").write_text(
            _canonical_dumps(sorted(result.selected or ()))
        )

    if base_image is not None and result.selection_mask is not None:
        gt_working = None
        if gt is not None:
            bits = resize_binary_bilinear(
                gt.bits, result.label_mask.height, result.label_mask.width
            )
            gt_working = BinaryMask(
                width=result.label_mask.width, height=result.label_mask.height, bits=bits
            )
        overlay = render_overlay(base_image, gt_working, result.selection_mask)
        write_rgb_png(overlay, add("overlay", "overlay.png"))

    if gt is not None and result.selection_mask is not None:
        pred_bits = resize_binary_bilinear(result.selection_mask.bits, gt.height, gt.width)
        pred = BinaryMask(width=gt.width, height=gt.height, bits=pred_bits)
        report = compute_metrics(confusion_counts(pred, gt))
        add("metrics", "metrics.json").write_text(_canonical_dumps(report.as_dict()))
    return artifacts


def run_pipeline(
    config: RunConfig,
    input_path: Union[str, Path],
    out_dir: Union[str, Path],
    gt_path: Optional[Union[str, Path]] = None,
    on_stage: Optional[Callable[[str], None]] = None,
) -> RunManifest:
    """Execute the stage sequence for one image or pre-captured archive.

    Raster inputs require a configured extractor (the ``ATTNMASK_EXTRACTOR``
    environment variable overrides the config template) and are resized to the
    working size first. Everything downstream of the archive is deterministic:
    rerunning with the same archive bytes and config reproduces every artifact
    byte for byte.
    """
    created = _now()
    input_path = Path(input_path)
    if not input_path.exists():
        raise ConfigError(f"input not found: {input_path}", field="input")
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    inputs = {input_path.name: file_digest(input_path)}
    gt = None
    if gt_path is not None:
        gt = read_binary_mask_png(gt_path)
        inputs[Path(gt_path).name] = file_digest(gt_path)
    run_id = run_id_for(config, inputs)

    base_image = None
    extra_artifacts: dict[str, str] = {}
    if input_path.suffix.lower() == ARCHIVE_SUFFIX:
        archive_path = input_path
    elif input_path.suffix.lower() in IMAGE_SUFFIXES:
        template = os.environ.get(EXTRACTOR_ENV_VAR) or config.extractor_template
        if not template:
            raise ConfigError(
                "extractor required: raster input needs an extractor command template "
                f"(config 'extractor' or ${EXTRACTOR_ENV_VAR})",
                field="extractor",
            )
        working = resize_image_bilinear(
            read_image_rgb(input_path), config.out_height, config.out_width
        )
        working_path = run_dir / "working_image.png"
        write_rgb_png(working, working_path)
        extra_artifacts["working_image"] = "working_image.png"
        archive_path = run_dir / "captured.atnp"
        if on_stage is not None:
            on_stage("extracting")
        invoke_extractor(template, working_path, config.prompt, config.timestep, archive_path)
        extra_artifacts["captured_archive"] = "captured.atnp"
        base_image = working
    else:
        raise ConfigError(
            f"input must be a raster image {IMAGE_SUFFIXES} or a {ARCHIVE_SUFFIX} archive, "
            f"got {input_path.suffix!r}"
        )

    if on_stage is not None:
        on_stage("segmenting")
    stack = read_archive_file(archive_path)
    result = segment_stack(stack, config)
    artifacts = _write_result_artifacts(result, run_dir, base_image, gt)
    artifacts.update(extra_artifacts)

    manifest = RunManifest(
        run_id=run_id,
        created_at=created,
        finished_at=_now(),
        config=config.to_dict(),
        inputs=inputs,
        artifacts=dict(sorted(artifacts.items())),
        versions=_versions(),
    )
    (run_dir / "manifest.json").write_text(_canonical_dumps(manifest.to_dict()))
    return manifest


def _versions() -> dict:
    import platform

    return {
        "attnmask": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def oracle_best_selection(
    label_mask: LabelMask, gt: BinaryMask
) -> tuple[set[int], BinaryMask]:
    """Greedy label subset maximizing DSC against ground truth.

    An upper bound on selection quality, reported separately from honest
    guided selection. Deterministic: candidates are tried in ascending label
    order and added only on strict improvement.
    """
    present = label_mask.present_labels()
    selected: set[int] = set()
    best = -1.0
    best_mask = BinaryMask(
        width=gt.width,
        height=gt.height,
        bits=np.zeros((gt.height, gt.width), dtype=bool),
    )
    empty = compute_metrics(confusion_counts(best_mask, gt))
    best = empty.dsc
    while True:
        leader = None
        for candidate in present:
            if candidate in selected:
                continue
            trial = selected | {candidate}
            bits = np.isin(label_mask.labels, sorted(trial))
            resized = resize_binary_bilinear(bits, gt.height, gt.width)
            pred = BinaryMask(width=gt.width, height=gt.height, bits=resized)
            dsc = compute_metrics(confusion_counts(pred, gt)).dsc
            if dsc > best and (leader is None or dsc > leader[1]):
                leader = (candidate, dsc, pred)
        if leader is None:
            return selected, best_mask
        selected.add(leader[0])
        best = leader[1]
        best_mask = leader[2]


def _benchmark_one(
    config: RunConfig,
    image_path: Path,
    mask_path: Path,
    run_dir: Path,
    selection_mode: str,
) -> tuple[BinaryMask, BinaryMask, tuple[int, ...]]:
    """Segment one dataset image; returns (pred at gt dims, gt, selection)."""
    gt = read_binary_mask_png(mask_path)
    if selection_mode == "guided":
        run_config = config if config.selection_policy != "none" else dataclasses.replace(
            config, selection_policy="top1"
        )
    else:
        run_config = dataclasses.replace(config, selection_policy="none")

    run_pipeline(run_config, image_path, run_dir, gt_path=mask_path)
    # selection happens at benchmark level, on the persisted label mask
    label_mask = read_label_mask_png(run_dir / "label_mask.png")

    if selection_mode == "guided":
        chosen = tuple(sorted(json.loads((run_dir / "selection.json").read_text())))
        bits = np.isin(label_mask.labels, list(chosen))
    elif selection_mode == "oracle":
        selected, _ = oracle_best_selection(label_mask, gt)
        chosen = tuple(sorted(selected))
        bits = np.isin(label_mask.labels, list(chosen))
        write_binary_mask_png(
            BinaryMask(width=label_mask.width, height=label_mask.height, bits=bits),
            run_dir / "oracle_selection.png",
        )
    else:
        raise ConfigError(f"unknown benchmark selection mode {selection_mode!r}", field="selection")

    working_image = run_dir / "working_image.png"
    if working_image.exists():
        gt_bits = resize_binary_bilinear(gt.bits, label_mask.height, label_mask.width)
        overlay = render_overlay(
            read_image_rgb(working_image),
            BinaryMask(width=label_mask.width, height=label_mask.height, bits=gt_bits),
            BinaryMask(width=label_mask.width, height=label_mask.height, bits=bits),
        )
        write_rgb_png(overlay, run_dir / "benchmark_overlay.png")

    pred_bits = resize_binary_bilinear(bits, gt.height, gt.width)
    pred = BinaryMask(width=gt.width, height=gt.height, bits=pred_bits)
    return pred, gt, chosen


def discover_dataset(dataset_root: Union[str, Path]) -> tuple[dict[str, tuple[Path, Path]], list[dict]]:
    """Pair ``images/<id>.*`` with ``masks/<id>.png`` by stem.

    Returns (pairs, failures); unpaired masks are reported as "missing image"
    and unpaired images as "missing mask".
    """
    root = Path(dataset_root)
    images_dir = root / "images"
    masks_dir = root / "masks"
    if not images_dir.is_dir() or not masks_dir.is_dir():
        raise ConfigError(f"dataset root {root} must contain images/ and masks/")
    failures: list[dict] = []
    images: dict[str, Path] = {}
    for path in sorted(images_dir.iterdir()):
        if path.suffix.lower() in IMAGE_SUFFIXES + (ARCHIVE_SUFFIX,):
            images[path.stem] = path
    pairs: dict[str, tuple[Path, Path]] = {}
    for mask_path in sorted(masks_dir.glob("*.png")):
        stem = mask_path.stem
        if stem not in images:
            failures.append({"id": stem, "error": "missing image"})
            continue
        pairs[stem] = (images[stem], mask_path)
    for stem in sorted(set(images) - set(pairs)):
        failures.append({"id": stem, "error": "missing mask"})
    return pairs, failures


def run_benchmark(
    config: RunConfig,
    dataset_root: Union[str, Path],
    out_dir: Union[str, Path],
    selection_mode: str = "oracle",
) -> tuple[DatasetEvalResult, list[dict]]:
    """Run the pipeline per dataset image and aggregate metrics.

    Per-image failures are recorded and skipped (the failure list is part of
    the report). The JSON report carries no timestamps, so a rerun on the same
    inputs reproduces it byte for byte; timestamps live only in each run's
    manifest.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pairs, failures = discover_dataset(dataset_root)

    results: dict[str, tuple[BinaryMask, BinaryMask, tuple[int, ...]]] = {}

    def work(stem: str) -> None:
        image_path, mask_path = pairs[stem]
        run_dir = out / "runs" / stem
        run_dir.mkdir(parents=True, exist_ok=True)
        results[stem] = _benchmark_one(config, image_path, mask_path, run_dir, selection_mode)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {stem: pool.submit(work, stem) for stem in sorted(pairs)}
            for stem, future in futures.items():
                try:
                    future.result()
                except Exception as exc:
                    failures.append({"id": stem, "error": str(exc)})
    else:
        for stem in sorted(pairs):
            try:
                work(stem)
            except Exception as exc:
                failures.append({"id": stem, "error": str(exc)})

    if not results:
        raise ConfigError("benchmark produced no successful image runs")

    triples = [(pred, gt, stem) for stem, (pred, gt, _) in sorted(results.items())]
    selections = {stem: chosen for stem, (_, _, chosen) in results.items()}
    evaluation = evaluate_dataset(triples, selection_mode=selection_mode, selections=selections)

    report = report_json(evaluation, config=config.to_dict())
    report["failures"] = sorted(failures, key=lambda f: f["id"])
    (out / "report.json").write_text(_canonical_dumps(report))
    mode_note = "oracle (GT-informed upper bound, not a zero-shot result)" if (
        selection_mode == "oracle"
    ) else selection_mode
    (out / "report.txt").write_text(
        report_table(evaluation) + f"\nselection mode: {mode_note}\n"
    )
    return evaluation, failures


def evaluate_external_masks(
    pred_dir: Union[str, Path],
    gt_dir: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
) -> DatasetEvalResult:
    """Metrics-only mode: score externally produced masks against ground truth.

    Pairs ``<gt_dir>/<id>.png`` with ``<pred_dir>/<id>.png`` by stem. Useful
    for comparison tables where other models' predictions are ingested as-is.
    """
    preds = {p.stem: p for p in sorted(Path(pred_dir).glob("*.png"))}
    gts = {p.stem: p for p in sorted(Path(gt_dir).glob("*.png"))}
    if not gts:
        raise ConfigError(f"no ground-truth masks found under {gt_dir}")
    missing = sorted(set(gts) - set(preds))
    if missing:
        raise ConfigError(f"missing prediction mask(s) for id(s): {missing}")
    pairs = [
        (read_binary_mask_png(preds[stem]), read_binary_mask_png(gts[stem]), stem)
        for stem in sorted(gts)
    ]
    evaluation = evaluate_dataset(pairs, selection_mode="external")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(_canonical_dumps(report_json(evaluation)))
        (out / "report.txt").write_text(report_table(evaluation) + "\n")
    return evaluation

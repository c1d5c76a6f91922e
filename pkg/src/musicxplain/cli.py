"""Command-line surface: `musicxplain explain | aggregate | selfcheck`.

Configuration precedence is flags > config file > built-in defaults. The
config file is plain `key = value` lines (keys match the long flag names
with underscores), `#` starts a comment.

Exit codes are stable API: 0 success, 1 selfcheck failure, 2 configuration
error, 3 I/O error, 4 predictor or protocol error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from types import SimpleNamespace
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .aggregate import (
    GlobalReport,
    average_importance,
    homogeneity_importance,
    load_weight_table,
)
from .audio import DEFAULT_SOURCE_NAMES, SeparatorSpec, load_wav
from .core import MultimodalInstance
from .engine import LimeConfig, LocalExplanation, explain_instance
from .errors import (
    FormatError,
    NumericalError,
    PredictorError,
    ProtocolError,
    ValidationError,
)
from .predictors import (
    BandEnergyToyModel,
    ExternalPredictor,
    FusedToyModel,
    LexiconToyModel,
    PredictorContract,
    external_predictor_connect,
)
from .schemas import validate_global_report, validate_local_explanation
from .selfcheck import run_selfcheck

EXIT_OK = 0
EXIT_SELFCHECK = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PREDICTOR = 4

# sample rate stamped on requests when the instance carries no audio
TEXT_ONLY_SAMPLE_RATE = 22050

MODALITIES = ("multimodal", "text", "audio")


# ---------------------------------------------------------------------------
# Configuration resolution
# ---------------------------------------------------------------------------


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (caster for config-file strings, built-in default)
_EXPLAIN_OPTIONS = {
    "model": (str, None),
    "model_params": (str, None),
    "separator": (str, "hpss"),
    "sources": (str, ",".join(DEFAULT_SOURCE_NAMES)),
    "n_segments": (int, 10),
    "n_samples": (int, None),
    "inclusion_prob": (float, 0.5),
    "kernel_width": (float, 0.25),
    "ridge_lambda": (float, 1.0),
    "seed": (int, 0),
    "modality": (str, "multimodal"),
    "target_classes": (str, None),
    "workers": (int, 1),
    "out": (str, "explanations"),
}

_AGGREGATE_OPTIONS = {
    "explanations": (str, None),
    "method": (str, "avg"),
    "top_k": (int, 10),
    "collapse_segments": (_parse_bool, False),
    "out": (str, "report"),
    "svg": (str, None),
}

_ALL_KEYS = set(_EXPLAIN_OPTIONS) | set(_AGGREGATE_OPTIONS)


def parse_config_file(path) -> dict[str, str]:
    """`key = value` lines; keys use underscores; `#` comments allowed."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key in values:
            raise FormatError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value.strip()
    unknown = set(values) - _ALL_KEYS
    if unknown:
        raise ValidationError(f"{path}: unknown config keys: {', '.join(sorted(unknown))}")
    return values


def _resolve_options(ns: argparse.Namespace, options: dict) -> SimpleNamespace:
    """Apply flags > config file > defaults for one command's option table."""
    file_values = parse_config_file(ns.config) if getattr(ns, "config", None) else {}
    resolved = {}
    for key, (cast, default) in options.items():
        flag_value = getattr(ns, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in file_values:
            try:
                resolved[key] = cast(file_values[key])
            except ValueError as exc:
                raise ValidationError(f"config key {key!r}: {exc}") from exc
        else:
            resolved[key] = default
    return SimpleNamespace(**resolved)


# ---------------------------------------------------------------------------
# Model and separator assembly
# ---------------------------------------------------------------------------


def _load_params_file(path: str | None, needed_by: str) -> dict:
    if not path:
        raise ValidationError(f"model {needed_by!r} requires --model-params <json file>")
    try:
        params = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read model params {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model params {path} is not valid JSON: {exc}") from exc
    if not isinstance(params, dict) or "labels" not in params:
        raise ValidationError(f"model params {path} must be an object with a 'labels' list")
    return params


def _per_class(params: dict, field: str, labels: Sequence[str], path_hint: str) -> list:
    table = params.get(field)
    if not isinstance(table, dict):
        raise ValidationError(f"model params {path_hint} needs a {field!r} object keyed by class name")
    missing = [name for name in labels if name not in table]
    if missing:
        raise ValidationError(f"model params {path_hint}: {field!r} missing classes {missing}")
    return [table[name] for name in labels]


def _build_lexicon(params: dict, path_hint: str) -> LexiconToyModel:
    labels = list(params["labels"])
    keywords = _per_class(params, "keywords", labels, path_hint)
    return LexiconToyModel(labels, keywords, tau=float(params.get("tau", 1.0)))


def _build_band(params: dict, path_hint: str) -> BandEnergyToyModel:
    labels = list(params["labels"])
    bands = [tuple(b) for b in _per_class(params, "bands_hz", labels, path_hint)]
    return BandEnergyToyModel(labels, bands, tau=float(params.get("tau", 1.0)))


def build_model(spec: str, params_path: str | None) -> PredictorContract:
    """`toy:lexicon` | `toy:band` | `toy:fused` (with a params JSON), or
    `extern:<command>` for a subprocess speaking the wire protocol."""
    if spec is None:
        raise ValidationError("no model configured; pass --model or set it in the config file")
    if spec.startswith("extern:"):
        command = spec[len("extern:"):].strip()
        if not command:
            raise ValidationError("extern: model needs a command")
        return external_predictor_connect(command)
    if spec == "toy:lexicon":
        return _build_lexicon(_load_params_file(params_path, spec), params_path)
    if spec == "toy:band":
        return _build_band(_load_params_file(params_path, spec), params_path)
    if spec == "toy:fused":
        params = _load_params_file(params_path, spec)
        alpha = float(params.get("alpha", 0.5))
        return FusedToyModel(_build_lexicon(params, params_path), _build_band(params, params_path), alpha)
    raise ValidationError(
        f"unknown model spec {spec!r}; expected toy:lexicon, toy:band, toy:fused, or extern:<command>"
    )


def build_separator(spec: str, sources: Sequence[str]) -> SeparatorSpec:
    if spec == "null":
        return SeparatorSpec.null()
    if spec == "hpss":
        return SeparatorSpec.hpss()
    if spec.startswith("stems:"):
        directory = spec[len("stems:"):]
        if not Path(directory).is_dir():
            raise ValidationError(f"stems directory {directory!r} does not exist")
        return SeparatorSpec.stems(directory, sources)
    if spec.startswith("extern:"):
        command = spec[len("extern:"):].strip()
        if not command:
            raise ValidationError("extern: separator needs a command")
        return SeparatorSpec.external(command, sources)
    raise ValidationError(
        f"unknown separator {spec!r}; expected null, hpss, stems:<dir>, or extern:<command>"
    )


def parse_target_classes(text: str | None, n_classes: int) -> list[int] | None:
    if text is None:
        return None
    if text.strip().lower() == "all":
        return list(range(n_classes))
    try:
        indices = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"target classes must be 'all' or comma-separated ints: {text!r}") from exc
    if not indices:
        raise ValidationError("target classes is empty")
    if len(set(indices)) != len(indices):
        raise ValidationError(f"duplicate target classes: {text!r}")
    for c in indices:
        if not (0 <= c < n_classes):
            raise ValidationError(f"target class {c} out of range for {n_classes} classes")
    return indices


class _LockedPredictor(PredictorContract):
    """Serializes access to a single predictor pipe across worker threads."""

    def __init__(self, inner: PredictorContract):
        self.labels = inner.labels
        self._inner = inner
        self._lock = threading.Lock()

    def predict_proba(self, batch):
        with self._lock:
            return self._inner.predict_proba(batch)


# ---------------------------------------------------------------------------
# Instance inputs
# ---------------------------------------------------------------------------


def read_manifest(path) -> list[tuple[str, str, str]]:
    """Rows of `id,audio_path,lyrics_path`; relative paths resolve against
    the manifest's directory; empty path cells mean a missing modality."""
    base = Path(path).parent
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["id", "audio_path", "lyrics_path"]
        names = [n.strip() for n in reader.fieldnames or []]
        if names != expected:
            raise FormatError(f"{path}: manifest header must be {','.join(expected)}")
        rows = []
        seen = set()
        for lineno, row in enumerate(reader, 2):
            instance_id = (row["id"] or "").strip()
            if not instance_id:
                raise FormatError(f"{path}:{lineno}: empty instance id")
            if instance_id in seen:
                raise FormatError(f"{path}:{lineno}: duplicate instance id {instance_id!r}")
            seen.add(instance_id)
            audio_path = (row["audio_path"] or "").strip()
            lyrics_path = (row["lyrics_path"] or "").strip()
            rows.append(
                (
                    instance_id,
                    str(base / audio_path) if audio_path and not os.path.isabs(audio_path) else audio_path,
                    str(base / lyrics_path) if lyrics_path and not os.path.isabs(lyrics_path) else lyrics_path,
                )
            )
    if not rows:
        raise FormatError(f"{path}: manifest lists no instances")
    return rows


def load_instance(instance_id: str, audio_path: str, lyrics_path: str, modality: str) -> MultimodalInstance:
    lyrics = ""
    if lyrics_path and modality != "audio":
        lyrics = Path(lyrics_path).read_text(encoding="utf-8")
    if audio_path and modality != "text":
        waveform, sample_rate = load_wav(audio_path)
    else:
        waveform, sample_rate = np.zeros(0, dtype=np.float32), TEXT_ONLY_SAMPLE_RATE
    return MultimodalInstance(id=instance_id, lyrics=lyrics, audio=waveform, sample_rate=sample_rate)


def _sanitize_stem(instance_id: str) -> str:
    stem = re.sub(r"[^A-Za-z0-9._-]+", "_", instance_id).strip("._") or "instance"
    return stem[:80]


def assign_output_stems(instance_ids: Sequence[str]) -> dict[str, str]:
    """Collision-free file stems for every instance id, deterministically."""
    stems: dict[str, str] = {}
    used: set[str] = set()
    for instance_id in instance_ids:
        stem = _sanitize_stem(instance_id)
        candidate, bump = stem, 1
        while candidate in used:
            bump += 1
            candidate = f"{stem}-{bump}"
        used.add(candidate)
        stems[instance_id] = candidate
    return stems


def atomic_write_text(path: Path, text: str):
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


# ---------------------------------------------------------------------------
# explain
# ---------------------------------------------------------------------------


def cmd_explain(ns: argparse.Namespace) -> int:
    try:
        opts = _resolve_options(ns, _EXPLAIN_OPTIONS)
        if opts.modality not in MODALITIES:
            raise ValidationError(f"modality must be one of {MODALITIES}, got {opts.modality!r}")
        if opts.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {opts.workers}")
        lime = LimeConfig(
            n_samples=opts.n_samples,
            inclusion_prob=opts.inclusion_prob,
            kernel_width=opts.kernel_width,
            ridge_lambda=opts.ridge_lambda,
            seed=opts.seed,
        )
        sources = tuple(s.strip() for s in opts.sources.split(",") if s.strip())
        separator = build_separator(opts.separator, sources)

        if ns.manifest and (ns.id or ns.audio or ns.lyrics):
            raise ValidationError("pass either --manifest or --id/--audio/--lyrics, not both")
        if ns.manifest:
            rows = read_manifest(ns.manifest)
        else:
            if not ns.id:
                raise ValidationError("single-instance mode requires --id")
            if not (ns.audio or ns.lyrics):
                raise ValidationError("single-instance mode requires --audio and/or --lyrics")
            rows = [(ns.id, ns.audio or "", ns.lyrics or "")]

        out_dir = Path(opts.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except (ValidationError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        model = build_model(opts.model, opts.model_params)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProtocolError, PredictorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PREDICTOR

    try:
        try:
            targets = parse_target_classes(opts.target_classes, model.n_classes)
        except ValidationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        predictor = _LockedPredictor(model) if opts.workers > 1 else model
        return _run_instances(rows, predictor, separator, lime, targets, opts, out_dir)
    finally:
        if isinstance(model, ExternalPredictor):
            model.close()


def _run_instances(rows, model, separator, lime, targets, opts, out_dir: Path) -> int:
    stems = assign_output_stems([row[0] for row in rows])

    def process(row) -> list[LocalExplanation]:
        instance = load_instance(row[0], row[1], row[2], opts.modality)
        return explain_instance(
            instance, model, separator, lime,
            target_classes=targets, n_segments=opts.n_segments,
        )

    outcomes: list[tuple[str, object]] = []
    if opts.workers == 1:
        for row in rows:
            try:
                outcomes.append((row[0], process(row)))
            except (PredictorError, ProtocolError) as exc:
                print(f"error: instance {row[0]!r}: {exc}", file=sys.stderr)
                return EXIT_PREDICTOR
            except (ValidationError, FormatError, NumericalError, OSError) as exc:
                outcomes.append((row[0], exc))
    else:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            futures = [(row[0], pool.submit(process, row)) for row in rows]
            for instance_id, future in futures:
                try:
                    outcomes.append((instance_id, future.result()))
                except (PredictorError, ProtocolError) as exc:
                    print(f"error: instance {instance_id!r}: {exc}", file=sys.stderr)
                    pool.shutdown(cancel_futures=True)
                    return EXIT_PREDICTOR
                except (ValidationError, FormatError, NumericalError, OSError) as exc:
                    outcomes.append((instance_id, exc))

    failures = 0
    for instance_id, outcome in outcomes:
        if isinstance(outcome, Exception):
            failures += 1
            print(f"error: instance {instance_id!r}: {outcome}", file=sys.stderr)
            continue
        try:
            _write_explanations(out_dir, stems[instance_id], outcome)
        except OSError as exc:
            failures += 1
            print(f"error: instance {instance_id!r}: {exc}", file=sys.stderr)
            continue
        print(_summary_line(instance_id, outcome))
    return EXIT_IO if failures else EXIT_OK


def _write_explanations(out_dir: Path, stem: str, explanations: list[LocalExplanation]):
    for exp in explanations:
        doc = exp.to_dict()
        validate_local_explanation(doc)
        atomic_write_text(out_dir / f"{stem}.class{exp.class_label.index}.json", _dump_json(doc))


def _summary_line(instance_id: str, explanations: list[LocalExplanation]) -> str:
    exp = next(
        (e for e in explanations if e.class_label == e.predicted_class),
        explanations[0],
    )
    top = ", ".join(f"{desc.label()}={weight:+.4f}" for desc, weight in exp.top_features(3))
    return (
        f"{instance_id}: predicted={exp.predicted_class.name} "
        f"p={exp.predicted_probability:.4f} | top: {top}"
    )


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------

_METHODS = {
    "avg": average_importance,
    "average": average_importance,
    "homogeneity": homogeneity_importance,
}


def cmd_aggregate(ns: argparse.Namespace) -> int:
    try:
        opts = _resolve_options(ns, _AGGREGATE_OPTIONS)
        if not opts.explanations:
            raise ValidationError("pass --explanations <dir> of explanation JSON files")
        if opts.method not in _METHODS:
            raise ValidationError(f"method must be avg or homogeneity, got {opts.method!r}")
        if opts.top_k < 1:
            raise ValidationError(f"top-k must be >= 1, got {opts.top_k}")
    except (ValidationError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        table = load_weight_table(opts.explanations)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        report = _METHODS[opts.method](table)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        out_dir = Path(opts.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        doc = report.to_dict(k=opts.top_k, collapse_segments=opts.collapse_segments)
        validate_global_report(doc)
        atomic_write_text(out_dir / "report.json", _dump_json(doc))
        atomic_write_text(
            out_dir / "report.csv",
            report.to_csv_text(k=opts.top_k, collapse_segments=opts.collapse_segments),
        )
        if opts.svg:
            _write_svg_charts(Path(opts.svg), report, opts.top_k, opts.collapse_segments)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    print(f"wrote {out_dir / 'report.json'} and {out_dir / 'report.csv'}")
    return EXIT_OK


_SVG_COLORS = {"audio": "#3b6ea5", "text": "#c46a1f"}


def render_class_svg(class_name: str, method: str, rows: list[dict]) -> str:
    """One static horizontal bar chart: top features of one class, audio and
    text bars in different colors. Deterministic output for fixed input."""
    label_w, bar_max, row_h, top, bottom, width = 240, 400, 26, 46, 40, 720
    height = top + max(len(rows), 1) * row_h + bottom
    peak = max((entry["importance"] for entry in rows), default=0.0)
    scale = bar_max / peak if peak > 0 else 0.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="16" y="26" font-size="15" font-weight="bold">'
        f"{escape(class_name)} (top {len(rows)}, {escape(method)})</text>",
    ]
    for i, entry in enumerate(rows):
        key = entry["key"]
        label = f"{key['source']}@seg{key['segment']}" if isinstance(key, dict) else key
        y = top + i * row_h
        bar = entry["importance"] * scale
        color = _SVG_COLORS[entry["modality"]]
        parts.append(
            f'<text x="{label_w - 8}" y="{y + 17}" font-size="12" text-anchor="end">'
            f"{escape(label)}</text>"
        )
        parts.append(
            f'<rect x="{label_w}" y="{y + 4}" width="{bar:.2f}" height="{row_h - 9}" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{label_w + bar:.2f}" y="{y + 17}" font-size="11" dx="6">'
            f"{entry['importance']:.5g}</text>"
        )
    legend_y = height - 16
    parts.append(f'<rect x="16" y="{legend_y - 10}" width="12" height="12" fill="{_SVG_COLORS["audio"]}"/>')
    parts.append(f'<text x="34" y="{legend_y}" font-size="11">audio</text>')
    parts.append(f'<rect x="86" y="{legend_y - 10}" width="12" height="12" fill="{_SVG_COLORS["text"]}"/>')
    parts.append(f'<text x="104" y="{legend_y}" font-size="11">text</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _write_svg_charts(svg_dir: Path, report: GlobalReport, k: int, collapse_segments: bool):
    svg_dir.mkdir(parents=True, exist_ok=True)
    for c, label in enumerate(report.labels):
        rows = report.class_rows(c, k, collapse_segments)
        chart = render_class_svg(label.name, report.method.value, rows)
        atomic_write_text(svg_dir / f"class{c:02d}_{_sanitize_stem(label.name)}.svg", chart)


# ---------------------------------------------------------------------------
# selfcheck
# ---------------------------------------------------------------------------


def cmd_selfcheck(_: argparse.Namespace) -> int:
    results = run_selfcheck()
    for result in results:
        if result.ok:
            print(f"ok   {result.name}")
        else:
            print(f"FAIL {result.name}: {result.detail}")
    failed = [r for r in results if not r.ok]
    if failed:
        print(f"selfcheck failed: {failed[0].name}", file=sys.stderr)
        return EXIT_SELFCHECK
    print(f"selfcheck passed ({len(results)} checks)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="musicxplain",
        description="Multimodal (lyrics + audio) local explanations for music classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="explain instances against a classifier")
    p_explain.add_argument("--config", help="key = value config file")
    p_explain.add_argument("--model", help="toy:lexicon | toy:band | toy:fused | extern:<command>")
    p_explain.add_argument("--model-params", dest="model_params", help="JSON parameter file for toy models")
    p_explain.add_argument("--separator", help="null | hpss | stems:<dir> | extern:<command>")
    p_explain.add_argument("--sources", help="comma-separated source names for stems/extern separators")
    p_explain.add_argument("--id", help="instance id (single-instance mode)")
    p_explain.add_argument("--audio", help="WAV path (single-instance mode)")
    p_explain.add_argument("--lyrics", help="lyrics text file (single-instance mode)")
    p_explain.add_argument("--manifest", help="CSV manifest with header id,audio_path,lyrics_path")
    p_explain.add_argument("--out", help="output directory for explanation JSON files")
    p_explain.add_argument("--modality", help="multimodal | text | audio")
    p_explain.add_argument("--n-samples", dest="n_samples", type=int)
    p_explain.add_argument("--n-segments", dest="n_segments", type=int)
    p_explain.add_argument("--inclusion-prob", dest="inclusion_prob", type=float)
    p_explain.add_argument("--kernel-width", dest="kernel_width", type=float)
    p_explain.add_argument("--ridge-lambda", dest="ridge_lambda", type=float)
    p_explain.add_argument("--seed", type=int)
    p_explain.add_argument("--target-classes", dest="target_classes",
                           help="'all' or comma-separated class indices (default: predicted class)")
    p_explain.add_argument("--workers", type=int)
    p_explain.set_defaults(func=cmd_explain)

    p_aggregate = sub.add_parser("aggregate", help="fold explanation files into a global report")
    p_aggregate.add_argument("--config", help="key = value config file")
    p_aggregate.add_argument("--explanations", help="directory of explanation JSON files")
    p_aggregate.add_argument("--method", help="avg | homogeneity")
    p_aggregate.add_argument("--top-k", dest="top_k", type=int)
    p_aggregate.add_argument("--collapse-segments", dest="collapse_segments",
                             action="store_const", const=True,
                             help="sum audio importances over segments per source")
    p_aggregate.add_argument("--out", help="output directory for report.json / report.csv")
    p_aggregate.add_argument("--svg", help="directory for per-class bar charts")
    p_aggregate.set_defaults(func=cmd_aggregate)

    p_selfcheck = sub.add_parser("selfcheck", help="run the embedded invariant suite")
    p_selfcheck.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())

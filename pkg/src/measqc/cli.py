"""Command-line interface.

Subcommands: parse, score, reward-quantity, reward-relation, entropy, and
dataset (build-aug | build-trace | validate). Exit codes: 0 success, 1 I/O
error, 2 validation error, 3 configuration error. Low scores never change
the exit code.

Every run records its resolved protocol (criterion, thresholds, config and
its SHA-256) inside the output: reports carry a "protocol" block, JSONL
outputs start with a protocol record. Data payloads carry no timestamps,
so reruns with identical inputs and flags are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal
from pathlib import Path

from . import __version__
from .annotations import Corpus, Document, assemble_groups, load_documents, load_measeval_tsv
from .entropy import TokenRecord, TraceSample, compute_stats, extract_bracket_segments
from .errors import ClientError, ConfigError, MeasQCError, TemplateError, ValidationError
from .lexicon import load_narrative_cues, load_scope_patterns, load_unit_lexicon
from .pipeline import (
    AUG_TEMPLATE,
    TRACE_TEMPLATE,
    HttpClient,
    MockClient,
    PromptTemplate,
    TraceExample,
    build_aug_candidates,
    build_trace_candidates,
    example_record,
    validate_trace,
)
from .quantities import QuantityParser
from .reward_quantity import QuantityRewardConfig, total_reward
from .reward_relation import RelationRewardConfig, total_reward_rel
from .scoring import MatchCriterion, score_report
from .traces import ConclusionRow

IO_ERROR, VALIDATION_ERROR, CONFIG_ERROR = 1, 2, 3


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _dump_jsonl(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n"


def _sha256(obj) -> str:
    payload = json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _read_jsonl(path: str) -> list[dict]:
    records = []
    for line_no, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{line_no}: bad JSON record: {exc.msg}")
    return records


def _write(path: str | None, payload: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(payload)
    else:
        Path(path).write_text(payload, encoding="utf-8")


def _decimal_str(value: Decimal | None) -> str | None:
    return None if value is None else str(value)


def _load_reward_config(path: str | None) -> dict:
    if path is None:
        return {}
    raw = _read_text(path)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = set(data) - {"quantity", "relation"}
    if unknown:
        raise ConfigError(f"config {path}: unknown sections {sorted(unknown)}")
    return data


def _documents_from_inputs(paths: list[str]) -> dict[str, str]:
    docs: dict[str, str] = {}
    for raw in paths:
        path = Path(raw)
        if not path.exists():
            raise FileNotFoundError(raw)
        if path.is_dir() or path.suffix in (".tsv", ".jsonl"):
            docs.update(load_documents(path))
        else:
            docs[path.stem] = path.read_text(encoding="utf-8")
    return docs


# -- parse ------------------------------------------------------------------


def _cmd_parse(args) -> int:
    lexicon = load_unit_lexicon(args.lexicon)
    patterns = load_scope_patterns(args.scope_patterns, lexicon=lexicon)
    parser = QuantityParser(lexicon=lexicon, patterns=patterns)
    lines = []
    if args.candidates:
        for raw in args.inputs:
            for line in _read_text(raw).splitlines():
                if not line.strip():
                    continue
                parsed = parser.validate_span(line)
                record = {
                    "candidate": line,
                    "parsed": _quantity_record(parsed) if parsed else None,
                    "out_of_scope": sorted(
                        {p.pattern_id for p, _ in parser.out_of_scope_hits(line)}
                    ),
                }
                lines.append(_dump_jsonl(record))
    else:
        docs = _documents_from_inputs(args.inputs)
        for doc_id in sorted(docs):
            if not docs[doc_id].strip():
                continue
            for q in parser.extract(docs[doc_id]):
                record = {"doc_id": doc_id, **_quantity_record(q)}
                lines.append(_dump_jsonl(record))
    _write(args.out, "".join(lines))
    return 0


def _quantity_record(q) -> dict:
    return {
        "surface": q.surface,
        "start": q.span.start,
        "end": q.span.end,
        "value": _decimal_str(q.value),
        "low": _decimal_str(q.low),
        "high": _decimal_str(q.high),
        "unit": q.unit,
        "unit_surface": q.unit_surface,
        "modifiers": list(q.modifiers),
        "kind": q.kind,
    }


# -- score ------------------------------------------------------------------


def _load_corpus(path: str, documents: dict[str, str] | None) -> Corpus:
    return load_measeval_tsv(_read_text(path), documents)


def _score(pred_tsv, gold_tsv, criterion, documents, relaxed_binary, overall_mode):
    pred = load_measeval_tsv(pred_tsv, documents)
    gold = load_measeval_tsv(gold_tsv, documents)
    return score_report(
        pred,
        gold,
        MatchCriterion(criterion),
        relaxed_binary=relaxed_binary,
        overall_mode=overall_mode,
    )


def _score_payload(report) -> dict:
    payload = report.to_dict()
    payload["protocol"]["config_sha256"] = _sha256(payload["protocol"])
    payload["protocol"]["toolkit_version"] = __version__
    return payload


def score_report_dict(
    pred_tsv: str,
    gold_tsv: str,
    criterion: str,
    documents: dict[str, str] | None = None,
    relaxed_binary: bool = False,
    overall_mode: str = "macro",
) -> dict:
    """The score report exactly as the CLI emits it (shared with bindings)."""
    return _score_payload(
        _score(pred_tsv, gold_tsv, criterion, documents, relaxed_binary, overall_mode)
    )


def _cmd_score(args) -> int:
    documents = load_documents(args.docs) if args.docs else None
    report = _score(
        _read_text(args.pred),
        _read_text(args.gold),
        args.criterion,
        documents,
        args.binary_overlap,
        args.overall,
    )
    payload = _score_payload(report)
    if args.out:
        _write(args.out, _dump_json(payload))
    if not args.quiet:
        sys.stdout.write(report.to_table() + "\n")
    elif not args.out:
        _write(None, _dump_json(payload))
    return 0


# -- rewards ----------------------------------------------------------------


def _gold_quantity_rows(corpus: Corpus, doc_id: str) -> list[ConclusionRow]:
    rows = []
    for a in corpus.annotations_for(doc_id):
        if a.annot_class == "Quantity":
            rows.append(ConclusionRow(a.surface, a.unit, a.modifiers))
    return rows


def _map_ordered(worker, items, jobs: int) -> list:
    if jobs <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, items))


def reward_quantity_records(
    generations: list[dict], gold_tsv: str, config_mapping: dict | None = None,
    jobs: int = 1,
) -> list[dict]:
    """Per-generation breakdown records (shared by the CLI and bindings)."""
    config = QuantityRewardConfig.from_mapping(config_mapping or {})
    corpus = load_measeval_tsv(gold_tsv)
    known = set(corpus.annotations)
    for gen in generations:
        if gen["doc_id"] not in known:
            raise ValidationError(
                f"generation references unknown document {gen['doc_id']!r}"
            )

    def worker(gen: dict) -> dict:
        breakdown = total_reward(
            gen["generation"], _gold_quantity_rows(corpus, gen["doc_id"]), config
        )
        return {"doc_id": gen["doc_id"], **breakdown.to_record()}

    return _map_ordered(worker, generations, jobs)


def reward_relation_records(
    generations: list[dict],
    gold_tsv: str,
    documents: dict[str, str],
    config_mapping: dict | None = None,
    cues: dict[str, str] | None = None,
    jobs: int = 1,
) -> list[dict]:
    config = RelationRewardConfig.from_mapping(config_mapping or {})
    corpus = load_measeval_tsv(gold_tsv, documents)
    for gen in generations:
        if gen["doc_id"] not in documents:
            raise ValidationError(
                f"generation references unknown document {gen['doc_id']!r}"
            )

    def worker(gen: dict) -> dict:
        doc_id = gen["doc_id"]
        gold_groups, _ = assemble_groups(corpus.annotations_for(doc_id))
        document = Document(doc_id, documents[doc_id])
        breakdown = total_reward_rel(gen["generation"], document, gold_groups, config, cues)
        return {"doc_id": doc_id, **breakdown.to_record()}

    return _map_ordered(worker, generations, jobs)


def _reward_protocol(phase: str, config) -> dict:
    resolved = config.to_dict()
    return {
        "protocol": {
            "phase": phase,
            "config": resolved,
            "config_sha256": _sha256(resolved),
            "toolkit_version": __version__,
        }
    }


def _cmd_reward_quantity(args) -> int:
    sections = _load_reward_config(args.config)
    config_mapping = sections.get("quantity", {})
    config = QuantityRewardConfig.from_mapping(config_mapping)
    generations = _read_jsonl(args.generations)
    records = reward_quantity_records(
        generations, _read_text(args.gold), config_mapping, jobs=args.jobs
    )
    lines = [_dump_jsonl(_reward_protocol("quantity", config))]
    lines += [_dump_jsonl(r) for r in records]
    _write(args.out, "".join(lines))
    return 0


def _cmd_reward_relation(args) -> int:
    sections = _load_reward_config(args.config)
    config_mapping = sections.get("relation", {})
    config = RelationRewardConfig.from_mapping(config_mapping)
    generations = _read_jsonl(args.generations)
    documents = load_documents(args.docs)
    cues = load_narrative_cues(args.cues) if args.cues else None
    records = reward_relation_records(
        generations, _read_text(args.gold), documents, config_mapping, cues,
        jobs=args.jobs,
    )
    lines = [_dump_jsonl(_reward_protocol("relation", config))]
    lines += [_dump_jsonl(r) for r in records]
    _write(args.out, "".join(lines))
    return 0


# -- entropy ----------------------------------------------------------------


def _trace_from_record(record: dict) -> TraceSample:
    tokens = []
    for t in record.get("tokens", []):
        tokens.append(
            TokenRecord(
                token=t["t"],
                top_k=tuple((str(c), float(p)) for c, p in t.get("top_k", [])),
                entropy=t.get("entropy"),
            )
        )
    return TraceSample(sample_id=str(record["sample_id"]), tokens=tuple(tokens))


def entropy_report_dict(
    records: list[dict], tau: float, std_over: str = "tokens", dump_tokens: bool = False
) -> dict:
    samples = [_trace_from_record(r) for r in records]
    stats = compute_stats(samples, tau=tau, std_over=std_over)
    unknown = 0
    unmatched = 0
    token_dump = []
    for sample in samples:
        segments, stray = extract_bracket_segments(list(sample.tokens))
        unmatched += len(stray)
        unknown += sum(1 for s in segments if s.role is None)
        if dump_tokens:
            for seg in segments:
                for t in seg.tokens:
                    token_dump.append(
                        {
                            "sample_id": sample.sample_id,
                            "role": seg.role,
                            "token": t.token,
                            "entropy_bits": t.entropy_bits,
                        }
                    )
    payload = {
        "protocol": {
            "spike_threshold_bits": tau,
            "std_over": std_over,
            "toolkit_version": __version__,
        },
        "samples": len(samples),
        "groups": {g: (s.to_dict() if s else None) for g, s in stats.items()},
        "unknown_role_brackets": unknown,
        "unmatched_brackets": unmatched,
    }
    if dump_tokens:
        payload["tokens"] = token_dump
    return payload


def _cmd_entropy(args) -> int:
    records = _read_jsonl(args.traces)
    payload = entropy_report_dict(
        records, tau=args.tau, std_over=args.std_over, dump_tokens=args.dump_tokens
    )
    _write(args.out, _dump_json(payload))
    return 0


# -- dataset ----------------------------------------------------------------


def _make_client(name: str):
    if name == "mock":
        return MockClient()
    if name == "http":
        return HttpClient()
    raise ConfigError(f"unknown client {name!r}")


def _load_template(path: str | None, default: PromptTemplate) -> PromptTemplate:
    if path is None:
        return default
    return PromptTemplate(Path(path).stem, _read_text(path))


def _dataset_protocol(args, template: PromptTemplate) -> dict:
    return {
        "protocol": {
            "subcommand": args.dataset_cmd,
            "template": template.template_id,
            "seed": getattr(args, "seed", None),
            "client": getattr(args, "client", None),
            "max_in_flight": getattr(args, "max_in_flight", None),
            "toolkit_version": __version__,
        }
    }


def _cmd_dataset(args) -> int:
    if args.dataset_cmd == "build-aug":
        template = _load_template(args.template, AUG_TEMPLATE)
        texts = [(r["doc_id"], r["text"]) for r in _read_jsonl(args.inputs)]
        examples, stats = build_aug_candidates(
            texts, _make_client(args.client), template,
            seed=args.seed, max_in_flight=args.max_in_flight,
        )
        lines = [_dump_jsonl(_dataset_protocol(args, template))]
        lines += [_dump_jsonl(example_record(e)) for e in examples]
        _write(args.out, "".join(lines))
        sys.stderr.write(
            f"build-aug: {stats.accepted} accepted, {stats.rejected} rejected, "
            f"{stats.skipped} skipped, {stats.failed} failed ({stats.total} total)\n"
        )
        return 0
    if args.dataset_cmd == "build-trace":
        template = _load_template(args.template, TRACE_TEMPLATE)
        corpus = load_measeval_tsv(_read_text(args.gold))
        items = []
        for r in _read_jsonl(args.inputs):
            items.append((r["doc_id"], r["text"], _gold_quantity_rows(corpus, r["doc_id"])))
        examples, stats = build_trace_candidates(
            items, _make_client(args.client), template,
            seed=args.seed, max_in_flight=args.max_in_flight,
        )
        lines = [_dump_jsonl(_dataset_protocol(args, template))]
        lines += [_dump_jsonl(example_record(e)) for e in examples]
        _write(args.out, "".join(lines))
        sys.stderr.write(
            f"build-trace: {stats.accepted} accepted, {stats.rejected} rejected, "
            f"{stats.skipped} skipped, {stats.failed} failed ({stats.total} total)\n"
        )
        return 0
    if args.dataset_cmd == "validate":
        corpus = load_measeval_tsv(_read_text(args.gold))
        lines = [
            _dump_jsonl(
                {"protocol": {"subcommand": "validate", "toolkit_version": __version__}}
            )
        ]
        for r in _read_jsonl(args.trajectories):
            example = TraceExample(
                doc_id=r["doc_id"],
                text=r.get("text", ""),
                gold=tuple(_gold_quantity_rows(corpus, r["doc_id"])),
                trajectory=r["generation"],
                accepted=False,
            )
            checked = validate_trace(example)
            lines.append(
                _dump_jsonl(
                    {"doc_id": checked.doc_id, "accepted": checked.accepted,
                     "reason": checked.reason}
                )
            )
        _write(args.out, "".join(lines))
        return 0
    raise ConfigError(f"unknown dataset subcommand {args.dataset_cmd!r}")


# -- argument wiring ---------------------------------------------------------


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="measqc",
        description="Quality control for scientific measurement extraction.",
    )
    parser.add_argument("--version", action="version", version=f"measqc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="extract quantities from documents")
    p.add_argument("inputs", nargs="+", help="text file(s), directory, docs TSV, or JSONL")
    p.add_argument("--candidates", action="store_true",
                   help="treat each input line as a candidate for validate_span")
    p.add_argument("--lexicon", default=None, help="alternative unit lexicon TSV")
    p.add_argument("--scope-patterns", default=None, help="alternative scope pattern TSV")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("score", help="score predictions against gold annotations")
    p.add_argument("pred", help="predicted annotations TSV")
    p.add_argument("gold", help="gold annotations TSV")
    p.add_argument("--criterion", choices=["strict", "relaxed"], default="relaxed")
    p.add_argument("--overall", choices=["macro", "micro"], default="macro")
    p.add_argument("--binary-overlap", action="store_true",
                   help="relaxed credit = 1 on any overlap instead of token F1")
    p.add_argument("--docs", default=None, help="document texts (dir, TSV, or JSONL)")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--quiet", action="store_true", help="suppress the text table")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("reward-quantity", help="quantity-phase reward over generations")
    p.add_argument("generations", help="JSONL of {doc_id, generation}")
    p.add_argument("gold", help="gold annotations TSV")
    p.add_argument("--config", default=None, help="JSON config with a 'quantity' section")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_reward_quantity)

    p = sub.add_parser("reward-relation", help="relation-phase reward over narratives")
    p.add_argument("generations", help="JSONL of {doc_id, generation}")
    p.add_argument("gold", help="gold annotations TSV")
    p.add_argument("--docs", required=True, help="document texts (dir, TSV, or JSONL)")
    p.add_argument("--config", default=None, help="JSON config with a 'relation' section")
    p.add_argument("--cues", default=None, help="alternative narrative cue TSV")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_reward_relation)

    p = sub.add_parser("entropy", help="bracket-entropy statistics over traces")
    p.add_argument("traces", help="JSONL of {sample_id, tokens: [{t, top_k}]}")
    p.add_argument("--tau", type=float, default=1.0, help="spike threshold in bits")
    p.add_argument("--std-over", choices=["tokens", "brackets"], default="tokens")
    p.add_argument("--dump-tokens", action="store_true",
                   help="include per-token entropies in the report")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("dataset", help="build and filter training corpora")
    dataset_sub = p.add_subparsers(dest="dataset_cmd", required=True)

    d = dataset_sub.add_parser("build-aug", help="anchored augmentation corpus")
    d.add_argument("inputs", help="JSONL of {doc_id, text}")
    d.add_argument("--template", default=None, help="prompt template file")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--client", choices=["mock", "http"], default="mock")
    d.add_argument("--max-in-flight", type=int, default=4)
    d.add_argument("--out", default=None)
    d.set_defaults(func=_cmd_dataset)

    d = dataset_sub.add_parser("build-trace", help="gold-guided traceback corpus")
    d.add_argument("inputs", help="JSONL of {doc_id, text}")
    d.add_argument("gold", help="gold annotations TSV")
    d.add_argument("--template", default=None, help="prompt template file")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--client", choices=["mock", "http"], default="mock")
    d.add_argument("--max-in-flight", type=int, default=4)
    d.add_argument("--out", default=None)
    d.set_defaults(func=_cmd_dataset)

    d = dataset_sub.add_parser("validate", help="traceback consistency filter")
    d.add_argument("trajectories", help="JSONL of {doc_id, generation}")
    d.add_argument("gold", help="gold annotations TSV")
    d.add_argument("--out", default=None)
    d.set_defaults(func=_cmd_dataset)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: file not found: {exc}\n")
        return IO_ERROR
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return IO_ERROR
    except (ConfigError, TemplateError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return CONFIG_ERROR
    except ClientError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return IO_ERROR
    except MeasQCError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return VALIDATION_ERROR


if __name__ == "__main__":
    sys.exit(main())

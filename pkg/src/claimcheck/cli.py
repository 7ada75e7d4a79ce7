"""Command-line entry point.

Subcommands cover the whole pipeline: ``detect`` and ``retrieve`` run posts
through backends, ``evaluate`` scores a labeled dataset, ``curate`` and
``stats`` build and inspect corpora, ``serve`` starts the review service.
Recording happens by running any backend-touching command with
``--backend-mode record`` against live endpoints.

Config precedence is flags > environment > config file. Every output
embeds a fingerprint of the effective run configuration so results can be
traced to the settings that produced them.

Exit codes: 0 ok, 1 usage/config error, 2 some posts failed, 3 fatal.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .backends import (BackendError, BackendMode, HttpLlm, HttpTransport,
                       ImageStore, ResponseCache, SearchClient,
                       load_backend_config)
from .evaluation import (ERROR_POLICIES, ParseError, SplitMismatch, evaluate,
                         format_report, load_dataset, records_to_jsonl,
                         report_to_dict)
from .models import (EvidenceBundle, Label, ReasoningMethod, ValidationError,
                     canonical_json, validate_post)
from .postprocess import DomainPolicy, default_policy, domain_filter, \
    extract_evidence, load_domain_list
from .prompting import DEFAULT_ENSEMBLE_TEMPLATES
from .reasoning import MethodFailed, ReasonerConfig, reason
from .retrieval import (ALL_STRATEGIES, AllStrategiesFailed, RetrievalPlan,
                        StrategyId, retrieve)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_FATAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; this artifact reserves 2 for
    partial failures, so usage errors exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit2(message)


class SystemExit2(SystemExit):
    def __init__(self, message):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(EXIT_USAGE)


@dataclass(frozen=True)
class RunConfig:
    """Effective pipeline settings, the unit of provenance."""

    strategies: tuple[int, ...]
    k: int
    n_queries: int
    domain_filter: bool
    extract: bool
    method: str
    samples: int
    model_id: str
    mode: str
    error_policy: str = "count_as_wrong"

    def fingerprint(self) -> str:
        payload = {
            "strategies": list(self.strategies), "k": self.k,
            "n_queries": self.n_queries, "domain_filter": self.domain_filter,
            "extract": self.extract, "method": self.method,
            "samples": self.samples, "model_id": self.model_id,
            "mode": self.mode, "error_policy": self.error_policy,
        }
        digest = hashlib.sha256(canonical_json(payload).encode("utf-8"))
        return digest.hexdigest()[:16]


def parse_strategies(raw: str) -> tuple[int, ...]:
    raw = raw.strip().lower()
    if raw == "all":
        return tuple(int(s) for s in ALL_STRATEGIES)
    if raw in ("none", ""):
        return ()
    try:
        ids = tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise UsageError(f"bad strategy list {raw!r}; use 'all', 'none', "
                         "or comma-separated ids 1-8") from None
    for sid in ids:
        if not 1 <= sid <= 8:
            raise UsageError(f"strategy id out of range: {sid}")
    if len(set(ids)) != len(ids):
        raise UsageError(f"duplicate strategy ids in {raw!r}")
    return ids


def _add_pipeline_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="backend config JSON "
                     "(default: $CLAIMCHECK_CONFIG)")
    sub.add_argument("--backend-mode", choices=["live", "record", "replay"],
                     help="override backend mode")
    sub.add_argument("--cache-root", help="record/replay cache directory")
    sub.add_argument("--strategies", default="all",
                     help="'all', 'none', or comma-separated ids 1-8")
    sub.add_argument("--k", type=int, default=5, help="results per search call")
    sub.add_argument("--n-queries", type=int, default=3,
                     help="generated queries for strategies 4 and 5")
    sub.add_argument("--reasoning", default="cot",
                     choices=[m.value for m in ReasoningMethod])
    sub.add_argument("--samples", type=int, default=5,
                     help="sample count for self-consistency")
    sub.add_argument("--model-id", default=None,
                     help="model id (default from config)")
    sub.add_argument("--no-domain-filter", action="store_true",
                     help="keep evidence from blocked domains")
    sub.add_argument("--blocklist", help="extra blocklist file")
    sub.add_argument("--source-exclusions", help="extra source-exclusion file")
    sub.add_argument("--extract", action="store_true",
                     help="condense evidence with the LLM before reasoning")
    sub.add_argument("--jobs", type=int, default=1,
                     help="parallel workers across posts")


@dataclass
class Pipeline:
    """Everything a backend-touching subcommand needs, built from args."""

    search: SearchClient
    llm: HttpLlm
    plan: RetrievalPlan | None
    method: ReasoningMethod
    reasoner: ReasonerConfig
    policy: DomainPolicy | None
    extract: bool
    run_config: RunConfig
    jobs: int


def build_pipeline(args) -> Pipeline:
    backend_cfg = load_backend_config(args.config, mode=args.backend_mode,
                                      cache_root=args.cache_root)
    if backend_cfg.mode != BackendMode.LIVE and not backend_cfg.cache_root:
        raise UsageError(f"{backend_cfg.mode} mode needs a cache root")
    cache = ResponseCache(backend_cfg.cache_root)
    transport = None if backend_cfg.mode == BackendMode.REPLAY \
        else HttpTransport()
    image_store = ImageStore(backend_cfg.image_store) \
        if backend_cfg.image_store else None
    search = SearchClient(backend_cfg, cache, transport=transport,
                          image_store=image_store)
    llm = HttpLlm(backend_cfg, cache, transport=transport)

    strategy_ids = parse_strategies(args.strategies)
    plan = None
    if strategy_ids:
        plan = RetrievalPlan(
            strategies=tuple(StrategyId(s) for s in strategy_ids),
            k=args.k, n_queries=args.n_queries)
    method = ReasoningMethod(args.reasoning)
    model_id = args.model_id or backend_cfg.llm.model_id
    reasoner = ReasonerConfig(model_id=model_id, samples=args.samples,
                              ensemble_templates=DEFAULT_ENSEMBLE_TEMPLATES)

    policy = None
    if not args.no_domain_filter:
        policy = default_policy()
        if args.blocklist:
            policy = DomainPolicy(
                blocklist=policy.blocklist | load_domain_list(args.blocklist),
                source_exclusions=policy.source_exclusions,
                allow_override=policy.allow_override)
        if args.source_exclusions:
            policy = DomainPolicy(
                blocklist=policy.blocklist,
                source_exclusions=(policy.source_exclusions
                                   | load_domain_list(args.source_exclusions)),
                allow_override=policy.allow_override)
    if args.extract and backend_cfg.mode == BackendMode.LIVE \
            and not backend_cfg.llm.endpoint:
        raise UsageError("--extract needs an LLM backend")

    run_config = RunConfig(
        strategies=strategy_ids, k=args.k, n_queries=args.n_queries,
        domain_filter=policy is not None, extract=args.extract,
        method=method.value, samples=args.samples, model_id=model_id,
        mode=backend_cfg.mode,
        error_policy=getattr(args, "error_policy", "count_as_wrong"))
    return Pipeline(search=search, llm=llm, plan=plan, method=method,
                    reasoner=reasoner, policy=policy, extract=args.extract,
                    run_config=run_config, jobs=args.jobs)


def _read_posts(path: str):
    posts = []
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            posts.append(validate_post(json.loads(line)))
        except (json.JSONDecodeError, ValidationError) as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return posts


def _open_out(path: str | None):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands

def cmd_detect(args) -> int:
    pipe = build_pipeline(args)
    posts = _read_posts(args.posts)
    fingerprint = pipe.run_config.fingerprint()
    failures = 0
    out = _open_out(args.out)
    try:
        for post in posts:
            try:
                if pipe.plan is None:
                    bundle = EvidenceBundle(post_id=post.id)
                else:
                    bundle = retrieve(post, pipe.plan, search=pipe.search,
                                      llm=pipe.llm, jobs=1)
                if pipe.policy is not None:
                    bundle = domain_filter(bundle, pipe.policy)
                if pipe.extract:
                    bundle, _ = extract_evidence(bundle, post.text, pipe.llm,
                                                 pipe.reasoner.model_id)
                verdict = reason(post, bundle, pipe.method, pipe.llm,
                                 pipe.reasoner)
                record = {
                    "post_id": post.id,
                    "label": verdict.label.value,
                    "confidence": verdict.confidence,
                    "rationale": verdict.rationale,
                    "method": verdict.reasoning_method.value,
                    "config": fingerprint,
                }
            except (AllStrategiesFailed, MethodFailed, BackendError) as exc:
                failures += 1
                record = {"post_id": post.id,
                          "error": f"{type(exc).__name__}: {exc}",
                          "config": fingerprint}
            out.write(canonical_json(record) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_retrieve(args) -> int:
    from .models import bundle_to_record
    pipe = build_pipeline(args)
    if pipe.plan is None:
        raise UsageError("retrieve needs at least one strategy")
    posts = _read_posts(args.posts)
    failures = 0
    out = _open_out(args.out)
    try:
        for post in posts:
            try:
                bundle = retrieve(post, pipe.plan, search=pipe.search,
                                  llm=pipe.llm, jobs=1)
                if pipe.policy is not None:
                    bundle = domain_filter(bundle, pipe.policy)
                record = bundle_to_record(bundle)
                record["config"] = pipe.run_config.fingerprint()
            except (AllStrategiesFailed, BackendError) as exc:
                failures += 1
                record = {"post_id": post.id,
                          "error": f"{type(exc).__name__}: {exc}"}
            out.write(canonical_json(record) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_evaluate(args) -> int:
    pipe = build_pipeline(args)
    dataset = load_dataset(args.dataset, args.split_file)
    posts = dataset.split(args.split) if args.split else dataset.posts
    if not posts:
        raise UsageError("no posts selected (wrong --split name?)")
    outcome = evaluate(
        posts, llm=pipe.llm, search=pipe.search, plan=pipe.plan,
        method=pipe.method, reasoner_config=pipe.reasoner,
        policy=pipe.policy, extract=pipe.extract,
        error_policy=args.error_policy,
        fingerprint=pipe.run_config.fingerprint(), jobs=args.jobs)
    text = format_report(outcome.report)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if args.records:
        Path(args.records).write_text(records_to_jsonl(outcome.records),
                                      encoding="utf-8")
    if args.report_json:
        Path(args.report_json).write_text(
            canonical_json(report_to_dict(outcome.report)) + "\n",
            encoding="utf-8")
    return EXIT_PARTIAL if outcome.report.n_errors else EXIT_OK


def cmd_curate(args) -> int:
    import numpy as np

    from .backends.embeddings import load_sidecar_embeddings
    from .curation import (InsufficientCandidates, MissingTopic,
                           embeddings_by_topic, ot_select, topic_quota)

    fakes = _read_posts(args.fakes)
    candidates = _read_posts(args.candidates)
    vectors, _ = load_sidecar_embeddings(args.embeddings)
    try:
        quota = topic_quota(fakes)
        selection = ot_select(
            embeddings_by_topic(fakes, vectors),
            embeddings_by_topic(candidates, vectors),
            quota, eps=args.eps)
    except (InsufficientCandidates, MissingTopic, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    payload = {
        "chosen": {topic.value: list(ids)
                   for topic, ids in sorted(selection.chosen.items(),
                                            key=lambda kv: kv[0].value)},
        "counts": {topic.value: n
                   for topic, n in sorted(selection.counts.items(),
                                          key=lambda kv: kv[0].value)},
        "total_cost": round(selection.total_cost, 6),
    }
    out = _open_out(args.out)
    try:
        out.write(canonical_json(payload) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_stats(args) -> int:
    from .curation import dataset_stats, format_stats
    dataset = load_dataset(args.dataset, args.split_file)
    posts = dataset.split(args.split) if args.split else dataset.posts
    sys.stdout.write(format_stats(dataset_stats(posts)))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .loop import LoopStore, create_app, digest_bundle
    from .models import EvidenceBundle

    if not args.journal:
        raise UsageError("serve needs --journal")
    pipe = build_pipeline(args)
    fingerprint = pipe.run_config.fingerprint()

    def detector(post):
        if pipe.plan is None:
            bundle = EvidenceBundle(post_id=post.id)
        else:
            bundle = retrieve(post, pipe.plan, search=pipe.search, llm=pipe.llm)
        if pipe.policy is not None:
            bundle = domain_filter(bundle, pipe.policy)
        verdict = reason(post, bundle, pipe.method, pipe.llm, pipe.reasoner)
        return verdict, digest_bundle(bundle)

    store = LoopStore.open(args.journal, snapshot_path=args.snapshot)
    app = create_app(store, detector, token=args.token or "",
                     fingerprint=fingerprint)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        if args.snapshot:
            store.save_snapshot(args.snapshot)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="claimcheck",
                     description="Evidence-grounded misinformation detection")
    parser.add_argument("-v", "--verbose", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    detect = commands.add_parser("detect", help="judge posts from a JSONL file")
    _add_pipeline_args(detect)
    detect.add_argument("--posts", required=True)
    detect.add_argument("--out", help="output JSONL (default stdout)")
    detect.set_defaults(fn=cmd_detect)

    retrieve_cmd = commands.add_parser("retrieve",
                                       help="dump evidence bundles only")
    _add_pipeline_args(retrieve_cmd)
    retrieve_cmd.add_argument("--posts", required=True)
    retrieve_cmd.add_argument("--out")
    retrieve_cmd.set_defaults(fn=cmd_retrieve)

    ev = commands.add_parser("evaluate", help="score a labeled dataset")
    _add_pipeline_args(ev)
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--split-file")
    ev.add_argument("--split")
    ev.add_argument("--error-policy", default="count_as_wrong",
                    choices=list(ERROR_POLICIES))
    ev.add_argument("--report", help="write the text report here too")
    ev.add_argument("--report-json", help="machine-readable report path")
    ev.add_argument("--records", help="per-post prediction JSONL path")
    ev.set_defaults(fn=cmd_evaluate)

    curate = commands.add_parser("curate",
                                 help="transport-matched real-post selection")
    curate.add_argument("--fakes", required=True)
    curate.add_argument("--candidates", required=True)
    curate.add_argument("--embeddings", required=True,
                        help="sidecar JSONL of id -> unit vector")
    curate.add_argument("--eps", type=float, default=0.05)
    curate.add_argument("--out")
    curate.set_defaults(fn=cmd_curate)

    stats = commands.add_parser("stats", help="corpus distribution histograms")
    stats.add_argument("--dataset", required=True)
    stats.add_argument("--split-file")
    stats.add_argument("--split")
    stats.set_defaults(fn=cmd_stats)

    serve = commands.add_parser("serve", help="run the review-loop service")
    _add_pipeline_args(serve)
    serve.add_argument("--journal", required=False,
                       help="append-only event log path (required)")
    serve.add_argument("--snapshot", help="periodic state snapshot path")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8100)
    serve.add_argument("--token", help="bearer token required on all routes")
    serve.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit2:
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SplitMismatch, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())

"""Evidence retrieval strategies.

Eight numbered strategies map a post to search-backend calls. Strategies 1-5
go through the primary engine (A), 6-8 through the secondary engine (B):

===  ========================================================
sid  backend call
===  ========================================================
1    post text -> text search (A)
2    post text -> image search (A)
3    each attached image -> reverse image search (A)
4    each generated query -> image search (A)
5    each generated query -> text search (A)
6    post text -> text search (B)
7    post text -> image search (B)
8    post text -> news search (B)
===  ========================================================

Strategies 3-5 fan out into several backend calls; their results are
concatenated in call order and re-ranked, so a group may hold more than k
items. Failures stay local: a failed sub-call becomes a warning, a fully
failed strategy becomes an empty group with a warning, and retrieval as a
whole only raises once every requested strategy has failed.
"""
from __future__ import annotations

import datetime as _dt
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import IntEnum

from .backends.errors import BackendError
from .backends.llm import LlmMessage, LlmRequest
from .backends.search import Engine, SearchClient, SearchOp, SearchRequest
from .models import EvidenceBundle, EvidenceItem, Post, ProvenanceRecord
from .prompting import describe_images, load_raw, render_placeholders

log = logging.getLogger(__name__)

DEFAULT_RESULT_BUDGET = 5
DEFAULT_QUERY_COUNT = 3


class StrategyId(IntEnum):
    TEXT_SEARCH_A = 1
    IMAGE_SEARCH_A = 2
    REVERSE_IMAGE_A = 3
    QUERY_IMAGE_SEARCH_A = 4
    QUERY_TEXT_SEARCH_A = 5
    TEXT_SEARCH_B = 6
    IMAGE_SEARCH_B = 7
    NEWS_SEARCH_B = 8


ALL_STRATEGIES = tuple(StrategyId)

STRATEGY_LABELS = {
    1: "post text -> text search (engine A)",
    2: "post text -> image search (engine A)",
    3: "attached images -> reverse image search (engine A)",
    4: "generated queries -> image search (engine A)",
    5: "generated queries -> text search (engine A)",
    6: "post text -> text search (engine B)",
    7: "post text -> image search (engine B)",
    8: "post text -> news search (engine B)",
}

_ENGINE_BY_STRATEGY = {
    StrategyId.TEXT_SEARCH_A: Engine.A,
    StrategyId.IMAGE_SEARCH_A: Engine.A,
    StrategyId.REVERSE_IMAGE_A: Engine.A,
    StrategyId.QUERY_IMAGE_SEARCH_A: Engine.A,
    StrategyId.QUERY_TEXT_SEARCH_A: Engine.A,
    StrategyId.TEXT_SEARCH_B: Engine.B,
    StrategyId.IMAGE_SEARCH_B: Engine.B,
    StrategyId.NEWS_SEARCH_B: Engine.B,
}

_QUERY_STRATEGIES = (StrategyId.QUERY_IMAGE_SEARCH_A, StrategyId.QUERY_TEXT_SEARCH_A)


class RetrievalError(Exception):
    pass


class StrategyFailed(RetrievalError):
    """Every backend call of one strategy failed."""

    def __init__(self, strategy_id: int, reason: str):
        super().__init__(f"strategy {strategy_id} failed: {reason}")
        self.strategy_id = strategy_id
        self.reason = reason


class AllStrategiesFailed(RetrievalError):
    """No requested strategy produced even a partial result."""


@dataclass(frozen=True)
class RetrievalPlan:
    """Which strategies to run and with what budgets.

    ``strategies`` keeps request order and rejects duplicates so bundle
    iteration order is reproducible.
    """

    strategies: tuple[StrategyId, ...] = ALL_STRATEGIES
    k: int = DEFAULT_RESULT_BUDGET
    n_queries: int = DEFAULT_QUERY_COUNT

    def __post_init__(self) -> None:
        if not self.strategies:
            raise ValueError("plan needs at least one strategy")
        seen: set[int] = set()
        for sid in self.strategies:
            sid = StrategyId(sid)
            if sid in seen:
                raise ValueError(f"duplicate strategy {int(sid)} in plan")
            seen.add(sid)
        if self.k < 1:
            raise ValueError("result budget k must be >= 1")
        if self.n_queries < 1:
            raise ValueError("n_queries must be >= 1")


def generate_queries(post: Post, n: int, llm, model_id: str = "stub") -> list[str]:
    """Ask the LLM for up to ``n`` search queries grounded in the post.

    Completion lines are stripped and deduplicated in order; short output is
    padded with the post text itself, so the result is never empty but may
    hold fewer than ``n`` entries when padding collapses with an existing
    query.
    """
    if n < 1:
        raise ValueError("query count must be >= 1")
    system, user = load_raw("query_gen_v1")
    user = render_placeholders(user, {
        "claim": post.text,
        "images": describe_images(post),
        "n": str(n),
    })
    messages = []
    if system:
        messages.append(LlmMessage(role="system", text=system))
    messages.append(LlmMessage(role="user", text=user))
    response = llm.complete(LlmRequest(model_id=model_id, messages=tuple(messages)))
    lines = [line.strip() for line in response.text.splitlines()]
    queries = [line for line in lines if line][:n]
    while len(queries) < n:
        queries.append(post.text.strip())
    deduped: list[str] = []
    for query in queries:
        if query not in deduped:
            deduped.append(query)
    return deduped


def _stamp(items: list[EvidenceItem], sid: int) -> list[EvidenceItem]:
    return [replace(item, strategy_id=sid, rank=i)
            for i, item in enumerate(items, start=1)]


def run_strategy(post: Post, sid: StrategyId, *, search: SearchClient,
                 llm=None, k: int = DEFAULT_RESULT_BUDGET,
                 n_queries: int = DEFAULT_QUERY_COUNT,
                 ) -> tuple[list[EvidenceItem], list[str]]:
    """Execute one strategy; returns (stamped items, warnings).

    Raises StrategyFailed when no backend call of the strategy succeeded.
    Partial failures of fan-out strategies are reported as warnings.
    """
    sid = StrategyId(sid)
    engine = _ENGINE_BY_STRATEGY[sid]
    warnings: list[str] = []
    collected: list[EvidenceItem] = []
    attempted = 0
    succeeded = 0

    def _call(op: SearchOp, query: str) -> None:
        nonlocal attempted, succeeded
        attempted += 1
        try:
            collected.extend(search.search(
                SearchRequest(engine=engine, op=op, query=query, k=k)))
            succeeded += 1
        except BackendError as exc:
            warnings.append(f"strategy {int(sid)}: {op.value} for "
                            f"{query[:60]!r} failed: {exc}")

    if sid == StrategyId.TEXT_SEARCH_A:
        _call(SearchOp.TextSearch, post.text)
    elif sid == StrategyId.IMAGE_SEARCH_A:
        _call(SearchOp.ImageSearch, post.text)
    elif sid == StrategyId.REVERSE_IMAGE_A:
        for i, ref in enumerate(post.images, start=1):
            if not ref.hash:
                attempted += 1
                warnings.append(f"strategy {int(sid)}: image {i} has no "
                                "content hash, skipped")
                continue
            _call(SearchOp.ReverseImageSearch, ref.hash)
    elif sid in _QUERY_STRATEGIES:
        if llm is None:
            raise StrategyFailed(int(sid), "query generation needs an LLM backend")
        try:
            queries = generate_queries(post, n_queries, llm)
        except BackendError as exc:
            raise StrategyFailed(int(sid), f"query generation failed: {exc}") from exc
        op = (SearchOp.ImageSearch if sid == StrategyId.QUERY_IMAGE_SEARCH_A
              else SearchOp.TextSearch)
        for query in queries:
            _call(op, query)
    elif sid == StrategyId.TEXT_SEARCH_B:
        _call(SearchOp.TextSearch, post.text)
    elif sid == StrategyId.IMAGE_SEARCH_B:
        _call(SearchOp.ImageSearch, post.text)
    elif sid == StrategyId.NEWS_SEARCH_B:
        _call(SearchOp.NewsSearch, post.text)

    if succeeded == 0:
        reason = warnings[-1] if warnings else "no backend call attempted"
        raise StrategyFailed(int(sid), reason)
    return _stamp(collected, int(sid)), warnings


def retrieve(post: Post, plan: RetrievalPlan, *, search: SearchClient,
             llm=None, jobs: int = 1) -> EvidenceBundle:
    """Run every strategy in ``plan`` and assemble an evidence bundle.

    Strategies are independent: a failed one contributes an empty group and
    a warning. Only when all of them fail does AllStrategiesFailed propagate.
    With ``jobs`` > 1 the strategies run on a thread pool; merge order still
    follows the plan, so replay-mode output is identical either way.
    """
    results: dict[StrategyId, tuple[list[EvidenceItem], list[str]]] = {}
    failures: dict[StrategyId, StrategyFailed] = {}

    def _one(sid: StrategyId):
        return run_strategy(post, sid, search=search, llm=llm,
                            k=plan.k, n_queries=plan.n_queries)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {sid: pool.submit(_one, sid) for sid in plan.strategies}
        for sid, future in futures.items():
            try:
                results[sid] = future.result()
            except StrategyFailed as exc:
                failures[sid] = exc
    else:
        for sid in plan.strategies:
            try:
                results[sid] = _one(sid)
            except StrategyFailed as exc:
                failures[sid] = exc

    if not results:
        details = "; ".join(str(exc) for exc in failures.values())
        raise AllStrategiesFailed(f"all {len(failures)} strategies failed: {details}")

    timestamp = "" if search.is_replay() else \
        _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    groups: dict[int, tuple[EvidenceItem, ...]] = {}
    provenance: list[ProvenanceRecord] = []
    warnings: list[str] = []
    for sid in plan.strategies:
        backend_id = search.engine_id(_ENGINE_BY_STRATEGY[sid])
        if sid in results:
            items, strategy_warnings = results[sid]
            groups[int(sid)] = tuple(items)
            warnings.extend(strategy_warnings)
        else:
            groups[int(sid)] = ()
            warnings.append(str(failures[sid]))
        provenance.append(ProvenanceRecord(
            strategy_id=int(sid), backend=backend_id, timestamp=timestamp))
    return EvidenceBundle(post_id=post.id, groups=groups,
                          provenance=tuple(provenance), warnings=tuple(warnings))

from __future__ import annotations

import pytest

from claimcheck.backends import (BackendConfig, BackendMode, CountingLlm,
                                 EngineConfig, ImageStore, LlmEndpointConfig,
                                 ResponseCache, ScriptedLlm, ScriptedTransport,
                                 SearchClient)
from claimcheck.retrieval import (ALL_STRATEGIES, AllStrategiesFailed,
                                  RetrievalPlan, StrategyFailed, StrategyId,
                                  generate_queries, retrieve, run_strategy)

from helpers import make_post


def test_plan_validation():
    with pytest.raises(ValueError):
        RetrievalPlan(strategies=())
    with pytest.raises(ValueError):
        RetrievalPlan(strategies=(StrategyId.TEXT_SEARCH_A,
                                  StrategyId.TEXT_SEARCH_A))
    with pytest.raises(ValueError):
        RetrievalPlan(k=0)
    with pytest.raises(ValueError):
        RetrievalPlan(n_queries=0)
    assert len(ALL_STRATEGIES) == 8


def test_generate_queries_strips_dedups_and_pads():
    post = make_post(text="the original claim")
    llm = ScriptedLlm(["  first query \n\nsecond query\n"])
    queries = generate_queries(post, 3, llm)
    assert queries == ["first query", "second query", "the original claim"]

    llm = ScriptedLlm(["the original claim\nthe original claim\n"])
    assert generate_queries(post, 3, llm) == ["the original claim"]

    with pytest.raises(ValueError):
        generate_queries(post, 0, ScriptedLlm([]))


def _recording_search(tmp_path, handler, image_store=None):
    config = BackendConfig(
        mode=BackendMode.RECORD, cache_root=str(tmp_path),
        engine_a=EngineConfig(id="engine-a", endpoint="https://a.invalid/s"),
        engine_b=EngineConfig(id="engine-b", endpoint="https://b.invalid/s"),
        llm=LlmEndpointConfig(model_id="stub"))
    return SearchClient(config, ResponseCache(tmp_path),
                        transport=ScriptedTransport(handler),
                        image_store=image_store)


def _rows(*urls):
    return {"results": [{"url": u, "snippet": f"about {u}"} for u in urls]}


def test_text_strategy_stamps_ids_and_ranks(tmp_path):
    calls = []

    def handle(method, url, params, json_body):
        calls.append((url, params["type"], params.get("q")))
        return _rows("https://a.example/1", "https://a.example/2")

    search = _recording_search(tmp_path, handle)
    post = make_post(text="some claim")
    items, warnings = run_strategy(post, StrategyId.TEXT_SEARCH_A,
                                   search=search)
    assert warnings == []
    assert [(i.strategy_id, i.rank) for i in items] == [(1, 1), (1, 2)]
    assert calls == [("https://a.invalid/s", "text_search", "some claim")]

    items_b, _ = run_strategy(post, StrategyId.TEXT_SEARCH_B, search=search)
    assert calls[-1][0] == "https://b.invalid/s"
    assert all(i.strategy_id == 6 for i in items_b)


def test_reverse_image_fans_out_and_recompacts_ranks(tmp_path):
    def handle(method, url, params, json_body):
        return _rows(f"https://m.example/{params['image_hash'][:6]}-1",
                     f"https://m.example/{params['image_hash'][:6]}-2")

    store = ImageStore(tmp_path / "imgs")
    digests = tuple(store.put(f"payload {i}".encode()) for i in range(2))
    from claimcheck.models import ImageRef, Post
    post = Post(id="p1", text="claim",
                images=tuple(ImageRef(hash=d) for d in digests))

    search = _recording_search(tmp_path / "cache", handle, image_store=store)
    items, warnings = run_strategy(post, StrategyId.REVERSE_IMAGE_A,
                                   search=search)
    assert warnings == []
    assert [i.rank for i in items] == [1, 2, 3, 4]
    assert all(i.strategy_id == 3 for i in items)
    assert items[0].source_url.startswith(f"https://m.example/{digests[0][:6]}")
    assert items[2].source_url.startswith(f"https://m.example/{digests[1][:6]}")


def test_reverse_image_skips_unhashed_refs(tmp_path):
    from claimcheck.models import ImageRef, Post
    post = Post(id="p1", text="claim",
                images=(ImageRef(url="https://i.example/a.png"),))
    search = _recording_search(tmp_path, lambda *a: _rows())
    with pytest.raises(StrategyFailed):
        run_strategy(post, StrategyId.REVERSE_IMAGE_A, search=search)


def test_query_strategies_need_an_llm(tmp_path):
    search = _recording_search(tmp_path, lambda *a: _rows())
    with pytest.raises(StrategyFailed):
        run_strategy(make_post(), StrategyId.QUERY_TEXT_SEARCH_A,
                     search=search, llm=None)


def test_query_strategy_runs_one_search_per_query(tmp_path):
    seen = []

    def handle(method, url, params, json_body):
        seen.append(params["q"])
        return _rows(f"https://q.example/{len(seen)}")

    search = _recording_search(tmp_path, handle)
    llm = CountingLlm(ScriptedLlm(["alpha\nbeta\ngamma"]))
    items, warnings = run_strategy(make_post(), StrategyId.QUERY_TEXT_SEARCH_A,
                                   search=search, llm=llm, n_queries=3)
    assert llm.calls == 1
    assert seen == ["alpha", "beta", "gamma"]
    assert [i.rank for i in items] == [1, 2, 3]


def test_retrieve_merges_in_plan_order_and_isolates_failures(tmp_path):
    def handle(method, url, params, json_body):
        if params["type"] == "news_search":
            raise AssertionError("engine b should not be reachable")
        return _rows("https://a.example/1")

    config = BackendConfig(
        mode=BackendMode.RECORD, cache_root=str(tmp_path),
        engine_a=EngineConfig(id="engine-a", endpoint="https://a.invalid/s"),
        engine_b=EngineConfig(id="engine-b"),  # no endpoint: strategy 8 fails
        llm=LlmEndpointConfig(model_id="stub"))
    search = SearchClient(config, ResponseCache(tmp_path),
                          transport=ScriptedTransport(handle))
    plan = RetrievalPlan(strategies=(StrategyId.NEWS_SEARCH_B,
                                     StrategyId.TEXT_SEARCH_A))
    bundle = retrieve(make_post(), plan, search=search)
    assert list(bundle.groups) == [8, 1]
    assert bundle.groups[8] == ()
    assert len(bundle.groups[1]) == 1
    assert len(bundle.warnings) == 1
    assert [p.strategy_id for p in bundle.provenance] == [8, 1]
    assert [p.backend for p in bundle.provenance] == ["engine-b", "engine-a"]


def test_retrieve_all_failed_raises(tmp_path):
    config = BackendConfig(
        mode=BackendMode.RECORD, cache_root=str(tmp_path),
        engine_a=EngineConfig(id="engine-a"),
        engine_b=EngineConfig(id="engine-b"),
        llm=LlmEndpointConfig(model_id="stub"))
    search = SearchClient(config, ResponseCache(tmp_path))
    plan = RetrievalPlan(strategies=(StrategyId.TEXT_SEARCH_A,
                                     StrategyId.TEXT_SEARCH_B))
    with pytest.raises(AllStrategiesFailed):
        retrieve(make_post(), plan, search=search)


def test_replay_provenance_has_no_wall_clock(tmp_path):
    def handle(method, url, params, json_body):
        return _rows("https://a.example/1")

    record_cfg = BackendConfig(
        mode=BackendMode.RECORD, cache_root=str(tmp_path),
        engine_a=EngineConfig(id="engine-a", endpoint="https://a.invalid/s"),
        llm=LlmEndpointConfig(model_id="stub"))
    post = make_post(text="tick")
    plan = RetrievalPlan(strategies=(StrategyId.TEXT_SEARCH_A,))
    recorded = retrieve(post, plan, search=SearchClient(
        record_cfg, ResponseCache(tmp_path),
        transport=ScriptedTransport(handle)))
    assert recorded.provenance[0].timestamp != ""

    replay_cfg = BackendConfig(
        mode=BackendMode.REPLAY, cache_root=str(tmp_path),
        engine_a=EngineConfig(id="engine-a"),
        llm=LlmEndpointConfig(model_id="stub"))
    replayed = retrieve(post, plan,
                        search=SearchClient(replay_cfg, ResponseCache(tmp_path)))
    assert replayed.provenance[0].timestamp == ""
    assert replayed.groups == recorded.groups


def test_retrieve_parallel_equals_serial(tmp_path):
    def handle(method, url, params, json_body):
        return _rows(f"https://{params['type']}.example/1")

    config = BackendConfig(
        mode=BackendMode.RECORD, cache_root=str(tmp_path),
        engine_a=EngineConfig(id="engine-a", endpoint="https://a.invalid/s"),
        engine_b=EngineConfig(id="engine-b", endpoint="https://b.invalid/s"),
        llm=LlmEndpointConfig(model_id="stub"))
    search = SearchClient(config, ResponseCache(tmp_path),
                          transport=ScriptedTransport(handle))
    plan = RetrievalPlan(strategies=(StrategyId.TEXT_SEARCH_A,
                                     StrategyId.TEXT_SEARCH_B,
                                     StrategyId.NEWS_SEARCH_B))
    post = make_post(text="parallel check")
    serial = retrieve(post, plan, search=search, jobs=1)
    parallel = retrieve(post, plan, search=search, jobs=3)
    assert serial.groups == parallel.groups
    assert [p.strategy_id for p in serial.provenance] == \
        [p.strategy_id for p in parallel.provenance]

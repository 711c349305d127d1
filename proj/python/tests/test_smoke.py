import json
import math
import pathlib

import pytest

import msnv

CORPUS = pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "corpus"


@pytest.fixture(scope="module")
def docs():
    return msnv.load_documents(str(CORPUS))


def test_corpus_loads(docs):
    assert len(docs) == 14
    assert sum(len(d.reference_ids) for d in docs) == 35
    d = docs[0]
    assert msnv.Document.from_json(d.to_json()) == d


def test_thresholds_match_ceiling(docs):
    for d in docs:
        for ref in d.reference_ids:
            m = int(d.mean_fixations(ref))
            assert d.trigger_threshold(ref) == max(1, -(-2 * m // 5))
    with pytest.raises(KeyError):
        docs[0].trigger_threshold("nope")


def test_fixation_detection():
    samples = [msnv.GazeSample(k * 1000 / 120, 400, 300) for k in range(18)]
    samples += [msnv.GazeSample((18 + k) * 1000 / 120, 700, 300) for k in range(18)]
    fx = msnv.detect_fixations(samples)
    assert len(fx) == 2
    assert fx[0].centroid_x == 400 and fx[1].centroid_x == 700
    assert fx[0].duration_ms == pytest.approx(17 * 1000 / 120)
    assert msnv.detect_fixations(samples[:12]) == []


def test_trace_round_trip(tmp_path, docs):
    trace = msnv.synthesize_trace(docs[1], speed=0.8, seed=3, noise=2, dropout=0.05)
    path = tmp_path / "t.gaze"
    msnv.save_trace(str(path), trace)
    assert path.read_text().startswith("gaze/1\n")
    assert msnv.load_trace(str(path)) == trace
    path.write_text("gaze/1\n0,1,2,1,1,,,\n8,x,2,1,1,,,\n")
    with pytest.raises(msnv.TraceFormatError, match="line 3"):
        msnv.load_trace(str(path))


def test_replay_full_and_slow(docs):
    fast = msnv.replay([(d, msnv.synthesize_trace(d, speed=1.0, seed=i)) for i, d in enumerate(docs)], participant="F")
    assert fast["format"] == "report/1"
    assert fast["summary"]["triggered"] == fast["summary"]["available"] == 35
    for doc_rep, d in zip(fast["documents"], docs):
        for t in doc_rep["triggers"]:
            assert t["ordinal"] == t["threshold"] == d.trigger_threshold(t["referenceId"])
    slow = msnv.replay([(d, msnv.synthesize_trace(d, speed=0.39, seed=i)) for i, d in enumerate(docs)])
    assert slow["summary"]["triggered"] == 0
    with pytest.raises(ValueError):
        msnv.synthesize_trace(docs[0], speed=0)


def test_screening_and_cohort(tmp_path, docs):
    d = docs[2]
    good = msnv.replay([(d, msnv.synthesize_trace(d, seed=1))], participant="good")
    skim = msnv.replay([(d, msnv.synthesize_trace(d, skip=1.0, seed=1))], participant="skim")
    assert msnv.screen_participant(json.dumps(good)) == ("keep", None)
    verdict, heat = msnv.screen_participant(json.dumps(skim), heatmap_path=str(tmp_path / "h.csv"))
    assert verdict == "flag-low-trigger" and pathlib.Path(heat).exists()
    s = msnv.cohort([good, skim], exclude=["skim"])
    assert s["participants"] == 2 and s["above"] == 1 and s["retained"] == 1
    assert s["retained_mean"] == 1.0
    assert s["flagged"] == ["skim"]


def test_session_over_ndjson(docs):
    s = msnv.Session(docs[:2], seed=5)
    assert s.phase == "await-hello"
    out = [json.loads(line) for line in s.handle_line('{"type":"HELLO","participantId":"P1"}')]
    assert out[0]["type"] == "SHOW_DOC" and "items" not in out[0]["doc"]
    assert json.loads(s.handle_line("garbage")[0])["type"] == "ERROR"
    s.abort()
    log = json.loads(s.log_json())
    assert log["format"] == "msnvlog/1" and log["partial"] is True


def test_statistics():
    assert msnv.bh_adjust([0.01, 0.04, 0.03, 0.005]) == pytest.approx([0.02, 0.04, 0.04, 0.02])
    assert msnv.tertile_split([1, 2, 3, 4, 5, 6, 7, 8, 9]) == ["low"] * 3 + ["medium"] * 3 + ["high"] * 3
    assert msnv.median_split([1, 2, 3, 4]) == ["low", "low", "high", "high"]
    assert msnv.perception_modes([[2, 3, 2, 3], [5, 5, 5]]) == [[2.5], [5.0]]
    with pytest.raises(msnv.DomainError):
        msnv.bh_adjust([1.5])


def test_colors_and_handshake(docs):
    assert msnv.contrast_ratio("#FFFFFF", "#000000") == 21.0
    for d in docs:
        for c in d.adjust_bar_colors().bar_colors:
            assert msnv.contrast_ratio(c, "#000000") >= 4.5
    assert msnv.websocket_accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="
    order = msnv.randomize_tasks([d.id for d in docs], 9)
    assert sorted(order) == [d.id for d in docs]
    assert not math.isnan(msnv.contrast_ratio("#808080", "#000000"))

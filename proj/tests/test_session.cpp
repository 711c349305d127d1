#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "msnv/session.hpp"
#include "oracles.hpp"

using namespace msnv;

namespace {

const std::string kCorpus = std::string(MSNV_FIXTURE_DIR) + "/corpus";

std::shared_ptr<DocumentStore> store_of(const std::vector<Document>& docs) {
    auto s = std::make_shared<DocumentStore>();
    for (const auto& d : docs) (*s)[d.id] = d;
    return s;
}

template <typename T>
bool is(const std::vector<wire::Outbound>& out, std::size_t i = 0) {
    return out.size() > i && std::holds_alternative<T>(out[i]);
}

}  // namespace

TEST_SUITE("session") {

TEST_CASE("task randomization") {
    const std::vector<std::string> ids{"a", "b", "c", "d", "e", "f", "g"};
    CHECK(randomize_tasks(ids, 5) == randomize_tasks(ids, 5));
    CHECK(randomize_tasks({"only"}, 9) == std::vector<std::string>{"only"});
    bool any_moved = false;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto order = randomize_tasks(ids, seed);
        any_moved = any_moved || order != ids;
        std::sort(order.begin(), order.end());
        CHECK(order == ids);
    }
    CHECK(any_moved);
    CHECK(participant_seed(1, "P1") == participant_seed(1, "P1"));
    CHECK(participant_seed(1, "P1") != participant_seed(1, "P2"));
    CHECK(participant_seed(1, "P1") != participant_seed(2, "P1"));
}

TEST_CASE("phase machine") {
    const auto docs = load_documents(kCorpus);
    double now = 0;
    Session s(SessionConfig{"", {"doc01", "doc02"}, 7, {}}, store_of(docs), [&] { return now; });
    CHECK(s.phase() == Phase::AwaitHello);

    auto out = s.handle_message(wire::Gaze{1, 10, 10, true, true});
    REQUIRE(is<wire::Error>(out));
    CHECK_FALSE(std::get<wire::Error>(out[0]).fatal);
    CHECK(s.phase() == Phase::AwaitHello);

    out = s.handle_message(wire::Hello{"P1"});
    REQUIRE(is<wire::ShowDoc>(out));
    const auto first = std::get<wire::ShowDoc>(out[0]).doc;
    CHECK(first.items.empty());
    CHECK(s.phase() == Phase::Loading);
    CHECK(is<wire::Error>(s.handle_message(wire::Hello{"P1"})));
    const std::string other = first.id == "doc01" ? "doc02" : "doc01";
    out = s.handle_message(wire::DocReady{other});
    REQUIRE(is<wire::Error>(out));
    CHECK_FALSE(std::get<wire::Error>(out[0]).fatal);

    now = 1000;
    CHECK(s.handle_message(wire::DocReady{first.id}).empty());
    CHECK(s.phase() == Phase::Reading);
    CHECK(is<wire::Error>(s.handle_message(wire::Answers{first.id, {0, 0, 0}, {3, 3}})));
    CHECK(s.handle_message(wire::Gaze{1000, 10, 10, true, true}).empty());
    CHECK(is<wire::Error>(s.handle_message(wire::Gaze{999, 10, 10, true, true})));

    now = 57300;
    out = s.handle_message(wire::Next{first.id});
    REQUIRE(is<wire::Questions>(out));
    const auto& q = std::get<wire::Questions>(out[0]);
    CHECK(q.doc_id == first.id);
    REQUIRE(q.items.size() == 5);
    CHECK(q.items[0].kind == "stars");
    CHECK(q.items[0].scale == 5);
    CHECK(q.items[2].kind == "choice");
    CHECK(s.log().tasks.back().next_pressed_at_ms == 57300);
    CHECK(s.log().tasks.back().shown_at_ms == 1000);
    CHECK(s.phase() == Phase::Questions);

    const auto& doc = store_of(docs)->at(first.id);
    CHECK(is<wire::Error>(s.handle_message(wire::Answers{first.id, {0}, {3, 3}})));
    CHECK(is<wire::Error>(s.handle_message(wire::Answers{first.id, {0, 0, 0}, {3, 6}})));
    CHECK(is<wire::Error>(s.handle_message(wire::Answers{first.id, {0, 0, 0}, {3}})));
    CHECK(is<wire::Error>(s.handle_message(wire::Answers{first.id, {0, 99, 0}, {3, 3}})));
    std::vector<int> right;
    for (const auto& it : doc.items) right.push_back(static_cast<int>(it.answer));
    std::vector<int> one_right{right[0], static_cast<int>((doc.items[1].answer + 1) % doc.items[1].choices.size()),
                               static_cast<int>((doc.items[2].answer + 1) % doc.items[2].choices.size())};
    out = s.handle_message(wire::Answers{first.id, one_right, {4, 2}});
    REQUIRE(is<wire::ShowDoc>(out));
    const auto m = compute_measures(s.log().tasks.front());
    CHECK(m.time_on_task_ms == 56300);
    CHECK(m.accuracy == doctest::Approx(1.0 / 3.0));
    CHECK(m.ease == 4);
    CHECK(m.interest == 2);

    const auto second = std::get<wire::ShowDoc>(out[0]).doc.id;
    CHECK(second != first.id);
    now = 60000;
    s.handle_message(wire::DocReady{second});
    now = 70000;
    s.handle_message(wire::Next{second});
    std::vector<int> all_right;
    for (const auto& it : store_of(docs)->at(second).items) all_right.push_back(static_cast<int>(it.answer));
    out = s.handle_message(wire::Answers{second, all_right, {5, 5}});
    REQUIRE(is<wire::End>(out));
    CHECK(compute_measures(s.log().tasks.back()).accuracy == 1.0);
    CHECK(s.phase() == Phase::Perception);
    CHECK(is<wire::Error>(s.handle_message(wire::Ratings{{1, 2, 3}})));
    CHECK(is<wire::Error>(s.handle_message(wire::Ratings{{1, 2, 3, 4, 5, 6, 7, 8, 1, 1}})));
    CHECK(s.handle_message(wire::Ratings{{1, 2, 3, 4, 5, 6, 7, 7, 7, 7}}).empty());
    CHECK(s.phase() == Phase::Ended);
    CHECK_FALSE(s.log().partial);
    CHECK(is<wire::Error>(s.handle_message(wire::Hello{"P1"})));
}

TEST_CASE("unknown documents are fatal") {
    const auto docs = load_documents(kCorpus);
    Session s(SessionConfig{"", {"doc01", "nope"}, 1, {}}, store_of(docs), [] { return 0.0; });
    auto out = s.handle_message(wire::Hello{"P1"});
    REQUIRE(is<wire::Error>(out));
    CHECK(std::get<wire::Error>(out[0]).fatal);
    CHECK(s.phase() == Phase::Aborted);
    CHECK(s.log().partial);

    Session empty(SessionConfig{}, std::make_shared<DocumentStore>(), [] { return 0.0; });
    out = empty.handle_message(wire::Hello{"P1"});
    REQUIRE(is<wire::Error>(out));
    CHECK(std::get<wire::Error>(out[0]).fatal);
}

TEST_CASE("handle_line") {
    const auto docs = load_documents(kCorpus);
    Session s(SessionConfig{}, store_of(docs), [] { return 0.0; });
    auto out = s.handle_line("{broken");
    REQUIRE(out.size() == 1);
    CHECK(std::holds_alternative<wire::Error>(wire::decode_outbound(out[0])));
    out = s.handle_line(R"({"type":"HELLO","participantId":"P9"})");
    REQUIRE(out.size() == 1);
    const auto shown = wire::decode_outbound(out[0]);
    REQUIRE(std::holds_alternative<wire::ShowDoc>(shown));
    CHECK(std::get<wire::ShowDoc>(shown).doc.items.empty());
    CHECK(s.log().order.size() == 14);
    CHECK(s.log().order == randomize_tasks(s.log().config.document_ids, participant_seed(0, "P9")));
}

TEST_CASE("live gaze drives highlights") {
    // Oracle: brute-force fixations, point-in-rect hits on sentence boxes,
    // and ceil(0.4 M) thresholds. The fixation still open at NEXT never
    // reaches the engine.
    const auto docs = load_documents(kCorpus);
    const auto store = store_of(docs);
    std::size_t highlights = 0;
    for (const auto& doc : docs) {
        double now = 0;
        Session s(SessionConfig{"", {doc.id}, 3, {}}, store, [&] { return now; });
        s.handle_message(wire::Hello{"P1"});
        s.handle_message(wire::DocReady{doc.id});
        ReaderProfile rp;
        rp.revisit_probability = 0.3;
        rp.skip_probability = 0.2;
        const auto trace = synthesize_trace(doc, rp, 77);

        std::vector<wire::Highlight> got;
        for (const auto& g : trace)
            for (const auto& o : s.handle_message(wire::Gaze{g.timestamp_ms, g.x, g.y, g.left_valid, g.right_valid}))
                if (std::holds_alternative<wire::Highlight>(o)) got.push_back(std::get<wire::Highlight>(o));

        auto fx = oracle::brute_force_idt(trace, 100, 35, doc.layout.display);
        if (!fx.empty()) fx.pop_back();
        std::map<std::string, int> hits;
        std::vector<wire::Highlight> want;
        for (const auto& f : fx) {
            for (const auto& r : doc.references) {
                bool inside = false;
                for (auto si : r.sentence_indices)
                    for (const auto& box : doc.layout.sentences[si])
                        inside = inside || (f.centroid_x >= box.x && f.centroid_x < box.x + box.w &&
                                            f.centroid_y >= box.y && f.centroid_y < box.y + box.h);
                if (!inside) continue;
                if (++hits[r.id] == oracle::ceil_fraction(static_cast<long>(r.mean_fixations), 2, 5))
                    want.push_back({r.id, r.data_point_ids, "#000000", 3});
            }
        }
        CHECK(got == want);
        highlights += got.size();

        now = 1;
        s.handle_message(wire::Next{doc.id});
        const auto& t = s.log().tasks.back();
        CHECK(t.triggers.size() == want.size());
        CHECK(t.gaze.samples == trace.size());
        CHECK(t.gaze.fixations == fx.size() + 1);
    }
    CHECK(highlights > 0);
}

TEST_CASE("measures need a finished task") {
    TaskRecord t;
    t.document_id = "d";
    CHECK_THROWS_AS(compute_measures(t), MeasureError);
    t.next_pressed_at_ms = 0;
    t.choices = {1};
    t.correct = {true};
    t.ease = 3;
    t.interest = 3;
    CHECK_THROWS_AS(compute_measures(t), MeasureError);
    t.next_pressed_at_ms = 10;
    CHECK(compute_measures(t).accuracy == 1.0);
    t.interest.reset();
    CHECK_THROWS_AS(compute_measures(t), MeasureError);
    t.interest = 3;
    t.correct.clear();
    CHECK_THROWS_AS(compute_measures(t), MeasureError);
}

TEST_CASE("log export") {
    const auto docs = load_documents(kCorpus);
    const auto log = oracle::run_scripted_session(docs, 4);
    REQUIRE(log.tasks.size() == 14);
    CHECK_FALSE(log.partial);
    REQUIRE(log.perception.has_value());
    CHECK(parse_log(export_log(log)) == log);
    std::size_t triggers = 0;
    for (const auto& t : log.tasks) {
        triggers += t.triggers.size();
        CHECK_NOTHROW(compute_measures(t));
    }
    CHECK(triggers <= 35);
    CHECK(triggers > 0);

    const auto path = (std::filesystem::temp_directory_path() / "msnv_log_test.json").string();
    write_log(path, log);
    CHECK(load_log(path) == log);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(write_log("/nonexistent-dir/x/log.json", log), ExportError);
    CHECK_THROWS(parse_log("{}"));
    CHECK_THROWS(parse_log("not json"));
}

TEST_CASE("aborted sessions keep earlier tasks") {
    const auto docs = load_documents(kCorpus);
    const auto full = oracle::run_scripted_session(docs, 8);
    const auto part = oracle::run_scripted_session(docs, 8, 5);
    CHECK(part.partial);
    REQUIRE(part.tasks.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(part.tasks[i] == full.tasks[i]);
    CHECK_FALSE(part.perception.has_value());
    CHECK(parse_log(export_log(part)) == part);
}

TEST_CASE("questions") {
    const auto doc = load_documents(kCorpus).front();
    const auto q = questions_for(doc);
    REQUIRE(q.items.size() == 2 + doc.items.size());
    CHECK(q.items[1].kind == "stars");
    for (std::size_t i = 0; i < doc.items.size(); ++i) {
        CHECK(q.items[2 + i].prompt == doc.items[i].prompt);
        CHECK(q.items[2 + i].choices == doc.items[i].choices);
    }
}

}  // TEST_SUITE

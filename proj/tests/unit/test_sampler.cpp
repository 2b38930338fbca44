#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "notesampler/common.hpp"
#include "notesampler/corpus.hpp"
#include "notesampler/sampler.hpp"
#include "notesampler/tokenizer.hpp"

using namespace notesampler;

namespace {

Tokenizer whitespace_tok() { return Tokenizer(TokenizerSpec{}); }

std::vector<std::string> seq(size_t l) {
    std::vector<std::string> v;
    v.reserve(l);
    for (size_t i = 0; i < l; ++i) v.push_back("t" + std::to_string(i));
    return v;
}

// Record with one nursing note of `n_len` tokens and one discharge note of
// `d_len` tokens; token text makes provenance verifiable.
Record two_note_record(size_t n_len, size_t d_len) {
    auto join = [](const std::vector<std::string>& v, const std::string& prefix) {
        std::string s;
        for (const auto& t : v) {
            if (!s.empty()) s += ' ';
            s += prefix + t;
        }
        return s;
    };
    Record r;
    r.record_id = "r1";
    r.label = 1;
    r.notes.push_back(Note{"n0", "nursing", "2024-01-01T00:00:00",
                           join(seq(n_len), "n.")});
    r.notes.push_back(Note{"d0", "discharge", "2024-01-09T00:00:00",
                           join(seq(d_len), "d.")});
    return r;
}

}  // namespace

TEST_CASE("window_bounds matches hand-computed anchors") {
    CHECK(window_bounds(1000, 200, 0.5) == std::pair<size_t, size_t>{400, 600});
    CHECK(window_bounds(1000, 200, 0.0) == std::pair<size_t, size_t>{0, 200});
    CHECK(window_bounds(1000, 200, 1.0) == std::pair<size_t, size_t>{800, 1000});
    CHECK(window_bounds(1000, 200, 0.05) == std::pair<size_t, size_t>{0, 200});
    CHECK(window_bounds(10, 4, 1.0) == std::pair<size_t, size_t>{6, 10});
    CHECK(window_bounds(10, 10, 0.3) == std::pair<size_t, size_t>{0, 10});
    CHECK_THROWS_WITH_AS(window_bounds(5, 6, 0.5),
                         "window exceeds text; use extract_window",
                         std::runtime_error);
}

TEST_CASE("window_bounds properties over random inputs") {
    Rng rng(31);
    for (int trial = 0; trial < 2000; ++trial) {
        size_t n = 1 + rng.next_below(300);
        size_t l = n + rng.next_below(2000);
        double p = rng.next_double();
        auto [start, end] = window_bounds(l, n, p);
        CHECK(end - start == n);
        CHECK(end <= l);
        CHECK(window_bounds(l, n, 0.0).first == 0);
        CHECK(window_bounds(l, n, 1.0).second == l);
        // Monotone in p.
        double p2 = rng.next_double();
        auto [s1, e1] = window_bounds(l, n, std::min(p, p2));
        auto [s2, e2] = window_bounds(l, n, std::max(p, p2));
        CHECK(s1 <= s2);
        (void)e1;
        (void)e2;
    }
}

TEST_CASE("extract_window keeps short inputs whole") {
    Tokenizer tok = whitespace_tok();
    auto tokens = seq(5);
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto got = extract_window(tokens, 8, p, tok);
        REQUIRE(got.size() == 8);
        for (size_t i = 0; i < 5; ++i) CHECK(got[i] == tokens[i]);
        for (size_t i = 5; i < 8; ++i) CHECK(got[i] == "<pad>");
    }
    // Exact-length input: window is the identity at any p.
    auto exact = extract_window(tokens, 5, 0.7, tok);
    CHECK(exact == tokens);
}

TEST_CASE("extract_fragmented takes first ceil and last floor halves") {
    Tokenizer tok = whitespace_tok();
    auto tokens = seq(10);

    auto got = extract_window(tokens, 4, 0.0, tok);  // sanity for the oracle below
    CHECK(got == std::vector<std::string>{"t0", "t1", "t2", "t3"});

    auto frag = extract_fragmented(tokens, 5, tok);
    CHECK(frag == std::vector<std::string>{"t0", "t1", "t2", "t8", "t9"});

    // Short input behaves like extract_window: keep all, pad right.
    auto short_frag = extract_fragmented(seq(3), 5, tok);
    CHECK(short_frag == std::vector<std::string>{"t0", "t1", "t2", "<pad>", "<pad>"});
}

TEST_CASE("fragmented equals front window plus back window") {
    Tokenizer tok = whitespace_tok();
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t n = 1 + rng.next_below(40);
        size_t l = n + rng.next_below(200);
        auto tokens = seq(l);
        auto frag = extract_fragmented(tokens, n, tok);
        size_t front = (n + 1) / 2, back = n / 2;
        std::vector<std::string> want(tokens.begin(), tokens.begin() + front);
        want.insert(want.end(), tokens.end() - back, tokens.end());
        CHECK(frag == want);
    }
}

TEST_CASE("plan_window accounts for every budget token") {
    Rng rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t budget = 1 + rng.next_below(60);
        size_t l = rng.next_below(150);
        WindowPosition pos = rng.next_bool(0.25) ? WindowPosition::both()
                                                 : WindowPosition::at(rng.next_double());
        WindowPlan plan = plan_window(l, budget, pos);
        size_t covered = 0;
        for (auto [s, e] : plan.spans) {
            CHECK(s <= e);
            CHECK(e <= l);
            covered += e - s;
        }
        CHECK(covered + plan.pad_len == budget);
        if (l >= budget) CHECK(plan.pad_len == 0);
        if (l < budget) CHECK(covered == l);
    }
}

TEST_CASE("WindowPosition parse, name, and validation") {
    CHECK(WindowPosition::parse("both").fragmented);
    CHECK(WindowPosition::parse("0.35") == WindowPosition::at(0.35));
    CHECK(WindowPosition::at(0.0).name() == "0.0");
    CHECK(WindowPosition::at(1.0).name() == "1.0");
    CHECK(WindowPosition::at(0.35).name() == "0.35");
    CHECK(WindowPosition::both().name() == "both");
    CHECK(WindowPosition::parse(WindowPosition::at(0.7).name()) ==
          WindowPosition::at(0.7));
    CHECK_THROWS_AS(WindowPosition::at(1.2), SchemaError);
    CHECK_THROWS_AS(WindowPosition::at(-0.1), SchemaError);
    CHECK_THROWS_AS(WindowPosition::parse("middle"), SchemaError);
}

TEST_CASE("SamplerConfig ids and validation") {
    SamplerConfig single;
    single.sources = {NoteSelector::Discharge};
    single.positions = {WindowPosition::at(0.5)};
    single.budget = 512;
    CHECK(single.config_id() == "discharge_p0.5_n512");
    CHECK_NOTHROW(single.validate());

    SamplerConfig mixed;
    mixed.sources = {NoteSelector::FirstNursing, NoteSelector::Discharge};
    mixed.positions = {WindowPosition::at(0.0), WindowPosition::both()};
    mixed.budget = 512;
    CHECK(mixed.config_id() == "first_nursing+discharge_p0.0-both_n512");
    CHECK_NOTHROW(mixed.validate());

    SamplerConfig bad = single;
    bad.budget = 0;
    CHECK_THROWS_AS(bad.validate(), SchemaError);
    bad = single;
    bad.positions.clear();
    CHECK_THROWS_AS(bad.validate(), SchemaError);
    bad = mixed;
    bad.sources.push_back(NoteSelector::Discharge);
    bad.positions.push_back(WindowPosition::at(0.5));
    CHECK_THROWS_AS(bad.validate(), SchemaError);
}

TEST_CASE("sample single source fills the whole budget") {
    Tokenizer tok = whitespace_tok();
    Record r = two_note_record(20, 10);
    SamplerConfig cfg;
    cfg.sources = {NoteSelector::Discharge};
    cfg.positions = {WindowPosition::at(1.0)};
    cfg.budget = 4;

    SampledInput s = sample(r, cfg, tok);
    CHECK(s.record_id == "r1");
    CHECK(s.config_id == "discharge_p1.0_n4");
    CHECK(s.tokens == std::vector<std::string>{"d.t6", "d.t7", "d.t8", "d.t9"});
    CHECK(s.pad_len() == 0);
    REQUIRE(s.provenance.size() == 1);
    CHECK(s.provenance[0].selector == NoteSelector::Discharge);
    CHECK(s.provenance[0].note_id == "d0");
    CHECK(s.provenance[0].budget == 4);
    CHECK(s.content_tokens() == s.tokens);
}

TEST_CASE("sample mixes two sources with ceil/floor budgets") {
    Tokenizer tok = whitespace_tok();
    Record r = two_note_record(20, 10);
    SamplerConfig cfg;
    cfg.sources = {NoteSelector::FirstNursing, NoteSelector::Discharge};
    cfg.positions = {WindowPosition::at(0.0), WindowPosition::at(1.0)};
    cfg.budget = 5;  // odd: 3 nursing + 2 discharge

    SampledInput s = sample(r, cfg, tok);
    CHECK(s.tokens ==
          std::vector<std::string>{"n.t0", "n.t1", "n.t2", "d.t8", "d.t9"});
    REQUIRE(s.provenance.size() == 2);
    CHECK(s.provenance[0].budget == 3);
    CHECK(s.provenance[1].budget == 2);
    CHECK(s.provenance[0].note_id == "n0");
    CHECK(s.provenance[1].note_id == "d0");
}

TEST_CASE("sample pads per source without reallocation") {
    Tokenizer tok = whitespace_tok();
    Record r = two_note_record(2, 50);  // nursing too short for its share
    SamplerConfig cfg;
    cfg.sources = {NoteSelector::LastNursing, NoteSelector::Discharge};
    cfg.positions = {WindowPosition::at(0.5), WindowPosition::at(0.0)};
    cfg.budget = 8;  // 4 + 4

    SampledInput s = sample(r, cfg, tok);
    // Nursing keeps its 2 tokens + 2 pads; discharge gets a real 4-window.
    CHECK(s.tokens == std::vector<std::string>{"n.t0", "n.t1", "<pad>", "<pad>",
                                               "d.t0", "d.t1", "d.t2", "d.t3"});
    CHECK(s.pad_len() == 2);
    CHECK(s.provenance[0].pad_len == 2);
    CHECK(s.provenance[1].pad_len == 0);
    // content_tokens strips the interior pads.
    CHECK(s.content_tokens() == std::vector<std::string>{"n.t0", "n.t1", "d.t0",
                                                         "d.t1", "d.t2", "d.t3"});
}

TEST_CASE("separator is charged to the first source") {
    Tokenizer tok = whitespace_tok();
    Record r = two_note_record(20, 20);
    SamplerConfig cfg;
    cfg.sources = {NoteSelector::FirstNursing, NoteSelector::Discharge};
    cfg.positions = {WindowPosition::at(0.0), WindowPosition::at(0.0)};
    cfg.budget = 6;
    cfg.separator = "[sep]";

    SampledInput s = sample(r, cfg, tok);
    // First share is 3, one slot spent on the separator.
    CHECK(s.tokens == std::vector<std::string>{"n.t0", "n.t1", "[sep]", "d.t0",
                                               "d.t1", "d.t2"});
    CHECK(s.provenance[0].budget == 3);

    // Separator goes after the first source's tokens but before its pads.
    Record short_first = two_note_record(1, 20);
    SampledInput s2 = sample(short_first, cfg, tok);
    CHECK(s2.tokens == std::vector<std::string>{"n.t0", "[sep]", "<pad>", "d.t0",
                                                "d.t1", "d.t2"});
}

TEST_CASE("mixing budget split is exact for random shapes") {
    Tokenizer tok = whitespace_tok();
    Rng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t n_len = rng.next_below(80);
        size_t d_len = rng.next_below(80);
        Record r = two_note_record(n_len ? n_len : 1, d_len ? d_len : 1);
        SamplerConfig cfg;
        cfg.sources = {NoteSelector::FirstNursing, NoteSelector::Discharge};
        cfg.positions = {WindowPosition::at(rng.next_double()),
                         rng.next_bool(0.3) ? WindowPosition::both()
                                            : WindowPosition::at(rng.next_double())};
        cfg.budget = 2 + rng.next_below(64);

        SampledInput s = sample(r, cfg, tok);
        REQUIRE(s.tokens.size() == cfg.budget);
        REQUIRE(s.provenance.size() == 2);
        size_t b0 = s.provenance[0].budget, b1 = s.provenance[1].budget;
        CHECK(b0 == (cfg.budget + 1) / 2);
        CHECK(b1 == cfg.budget / 2);

        // Count tokens by origin prefix; pads belong to their source's share.
        size_t from_n = 0, from_d = 0, pads = 0;
        for (const auto& t : s.tokens) {
            if (t.rfind("n.", 0) == 0) ++from_n;
            else if (t.rfind("d.", 0) == 0) ++from_d;
            else ++pads;
        }
        CHECK(from_n + s.provenance[0].pad_len == b0);
        CHECK(from_d + s.provenance[1].pad_len == b1);
        CHECK(pads == s.pad_len());
        CHECK(s.content_tokens().size() == cfg.budget - s.pad_len());
    }
}

TEST_CASE("export_samples writes ordered filtered JSONL") {
    Tokenizer tok = whitespace_tok();
    Corpus c;
    for (int i = 0; i < 8; ++i) {
        Record r = two_note_record(6, 6);
        r.record_id = "r" + std::to_string(i);
        r.label = i % 2;
        c.records.push_back(std::move(r));
    }
    c = split_corpus(std::move(c), 3);

    SamplerConfig a;
    a.sources = {NoteSelector::Discharge};
    a.positions = {WindowPosition::at(0.0)};
    a.budget = 4;
    SamplerConfig b = a;
    b.positions = {WindowPosition::at(1.0)};

    std::string path = "/tmp/notesampler_test_samples.jsonl";
    export_samples(c, {b, a}, tok, {Split::Train, Split::Test}, path);

    std::ifstream in(path);
    std::string line;
    std::vector<std::pair<std::string, std::string>> order;
    size_t train_or_test = 0;
    while (std::getline(in, line)) {
        REQUIRE(line.find("\"tokens\"") != std::string::npos);
        auto grab = [&](const std::string& key) {
            size_t k = line.find("\"" + key + "\":\"");
            REQUIRE(k != std::string::npos);
            size_t v = k + key.size() + 4;
            return line.substr(v, line.find('"', v) - v);
        };
        order.emplace_back(grab("config_id"), grab("record_id"));
        std::string split = grab("split");
        CHECK(split != "val");
        ++train_or_test;
    }
    // 8 records minus the val share, times two configs.
    size_t val_count = split_quota(4, 4).total.val;
    CHECK(train_or_test == 2 * (8 - val_count));
    CHECK(std::is_sorted(order.begin(), order.end()));
    CHECK(order.front().first == "discharge_p0.0_n4");  // config order is sorted, not as-given

    // Byte determinism.
    std::string path2 = path + ".2";
    export_samples(c, {b, a}, tok, {Split::Train, Split::Test}, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
    std::remove(path.c_str());
    std::remove(path2.c_str());

    Corpus unsplit;
    unsplit.records.push_back(two_note_record(6, 6));
    CHECK_THROWS_AS(
        export_samples(unsplit, {a}, tok, {Split::Test}, "/tmp/nope.jsonl"),
        SchemaError);
}

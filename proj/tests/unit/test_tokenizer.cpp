#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "notesampler/common.hpp"
#include "notesampler/tokenizer.hpp"

using namespace notesampler;

namespace {

Tokenizer make(TokenizerKind kind) {
    TokenizerSpec spec;
    spec.kind = kind;
    return Tokenizer(spec);
}

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "/tmp/notesampler_test_" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("whitespace tokenizer splits and lowercases") {
    Tokenizer tok = make(TokenizerKind::Whitespace);
    CHECK(tok.tokenize("Hello  world\n") == std::vector<std::string>{"hello", "world"});
    CHECK(tok.tokenize("\t a\tb  c ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tok.tokenize("").empty());
    CHECK(tok.tokenize("   \n\t ").empty());
}

TEST_CASE("whitespace tokenizer treats unicode spaces as separators") {
    Tokenizer tok = make(TokenizerKind::Whitespace);
    // NBSP, em space, ideographic space
    CHECK(tok.tokenize("a\xC2\xA0m") == std::vector<std::string>{"a", "m"});
    CHECK(tok.tokenize("a\xE2\x80\x83m") == std::vector<std::string>{"a", "m"});
    CHECK(tok.tokenize("a\xE3\x80\x80m") == std::vector<std::string>{"a", "m"});
}

TEST_CASE("lowercasing folds ASCII only") {
    Tokenizer tok = make(TokenizerKind::Whitespace);
    CHECK(tok.tokenize("ABC") == std::vector<std::string>{"abc"});
    // U+00C9 LATIN CAPITAL E WITH ACUTE stays as-is
    CHECK(tok.tokenize("\xC3\x89TAT") == std::vector<std::string>{"\xC3\x89tat"});
}

TEST_CASE("whitespace tokens re-tokenize to themselves") {
    Tokenizer tok = make(TokenizerKind::Whitespace);
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        std::vector<std::string> want;
        size_t n = 1 + rng.next_below(8);
        for (size_t i = 0; i < n; ++i) {
            std::string w;
            size_t len = 1 + rng.next_below(6);
            for (size_t j = 0; j < len; ++j)
                w += static_cast<char>('a' + rng.next_below(26));
            want.push_back(w);
            if (!text.empty()) text += rng.next_bool(0.5) ? " " : "\t";
            text += w;
        }
        CHECK(tok.tokenize(text) == want);
    }
}

TEST_CASE("char tokenizer emits one token per scalar") {
    Tokenizer tok = make(TokenizerKind::Char);
    CHECK(tok.tokenize("ab") == std::vector<std::string>{"a", "b"});
    // Multi-byte scalar stays one token
    CHECK(tok.tokenize("a\xE2\x82\xACz") ==
          std::vector<std::string>{"a", "\xE2\x82\xAC", "z"});
    CHECK(tok.tokenize("AB") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("char tokenizer replaces invalid bytes") {
    Tokenizer tok = make(TokenizerKind::Char);
    // Lone continuation byte and truncated lead byte each become U+FFFD
    CHECK(tok.tokenize("\x80") == std::vector<std::string>{"\xEF\xBF\xBD"});
    CHECK(tok.tokenize("a\xC3") ==
          std::vector<std::string>{"a", "\xEF\xBF\xBD"});
    // Overlong encoding of '/': both bytes invalid, one token each
    CHECK(tok.tokenize("\xC0\xAF") ==
          std::vector<std::string>{"\xEF\xBF\xBD", "\xEF\xBF\xBD"});
}

TEST_CASE("decode_utf8 rejects surrogates and out-of-range") {
    size_t pos = 0;
    CHECK(decode_utf8("\xED\xA0\x80", pos) == 0xFFFD);  // U+D800
    CHECK(pos == 1);
    pos = 0;
    CHECK(decode_utf8("\xF4\x90\x80\x80", pos) == 0xFFFD);  // > U+10FFFF
    CHECK(pos == 1);
    pos = 0;
    CHECK(decode_utf8("\xF0\x9F\x98\x80", pos) == 0x1F600);  // 4-byte ok
    CHECK(pos == 4);
}

TEST_CASE("is_unicode_space covers the usual suspects") {
    for (uint32_t cp : {0x20u, 0x09u, 0x0Au, 0x0Du, 0xA0u, 0x2003u, 0x3000u})
        CHECK(is_unicode_space(cp));
    for (uint32_t cp : {0x41u, 0x5Fu, 0x200Bu /* zero-width space is not split */})
        CHECK(!is_unicode_space(cp));
}

TEST_CASE("vocab tokenizer greedy longest match") {
    std::string path = write_temp(
        "vocab.txt", "<pad>\n<unk>\nab\na\nb\n");
    TokenizerSpec spec;
    spec.kind = TokenizerKind::VocabGreedy;
    spec.vocab_path = path;
    Tokenizer tok(spec);
    CHECK(tok.tokenize("aba") == std::vector<std::string>{"ab", "a"});
    CHECK(tok.tokenize("ba") == std::vector<std::string>{"b", "a"});
    CHECK(tok.tokenize("abq") == std::vector<std::string>{"ab", "<unk>"});
    // lowercase fold happens before matching
    CHECK(tok.tokenize("ABA") == std::vector<std::string>{"ab", "a"});
    std::remove(path.c_str());
}

TEST_CASE("vocab tokenizer validates the vocab file") {
    TokenizerSpec spec;
    spec.kind = TokenizerKind::VocabGreedy;

    spec.vocab_path = write_temp("vocab_nopad.txt", "<unk>\na\n");
    CHECK_THROWS_AS(Tokenizer{spec}, SchemaError);
    std::remove(spec.vocab_path.c_str());

    spec.vocab_path = write_temp("vocab_nounk.txt", "<pad>\na\n");
    CHECK_THROWS_AS(Tokenizer{spec}, SchemaError);
    std::remove(spec.vocab_path.c_str());

    spec.vocab_path = "/nonexistent/vocab.txt";
    CHECK_THROWS_AS(Tokenizer{spec}, SchemaError);
}

TEST_CASE("pad_to and truncate_to") {
    Tokenizer tok = make(TokenizerKind::Whitespace);
    auto padded = tok.pad_to({"a", "b"}, 4);
    CHECK(padded == std::vector<std::string>{"a", "b", "<pad>", "<pad>"});
    CHECK(tok.pad_to({"a"}, 1) == std::vector<std::string>{"a"});
    CHECK_THROWS_WITH_AS(tok.pad_to({"a", "b"}, 1),
                         "pad_to on over-length sequence", std::runtime_error);

    CHECK(tok.truncate_to({"a", "b", "c"}, 2) == std::vector<std::string>{"a", "b"});
    CHECK(tok.truncate_to({"a"}, 5) == std::vector<std::string>{"a"});

    // pad then drop pads round-trips
    auto rt = tok.pad_to({"x", "y"}, 7);
    rt.erase(std::remove(rt.begin(), rt.end(), tok.pad_token()), rt.end());
    CHECK(rt == std::vector<std::string>{"x", "y"});
}

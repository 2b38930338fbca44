#pragma once

// Tokenization: whitespace / char / vocab-greedy strategies, plus pad/truncate
// helpers. Tokens are plain strings; all strategies are deterministic and
// byte-oriented (UTF-8 aware where splitting or per-character tokens need it).

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "notesampler/common.hpp"

namespace notesampler {

enum class TokenizerKind { Whitespace, Char, VocabGreedy };

struct TokenizerSpec {
    TokenizerKind kind = TokenizerKind::Whitespace;
    bool lowercase = true;  // ASCII-only folding
    std::string pad_token = "<pad>";
    // VocabGreedy only: newline-separated token file. Must contain pad_token
    // and "<unk>".
    std::string vocab_path;
};

class Tokenizer {
public:
    explicit Tokenizer(TokenizerSpec spec);

    // Text -> token list. Never emits empty tokens; whitespace never appears
    // inside a token for the Whitespace kind.
    std::vector<std::string> tokenize(std::string_view text) const;

    // Right-pads with pad_token up to `len`. Throws std::runtime_error
    // "pad_to on over-length sequence" if tokens.size() > len.
    std::vector<std::string> pad_to(std::vector<std::string> tokens, size_t len) const;

    // Keeps the first `len` tokens (no-op when already short enough).
    std::vector<std::string> truncate_to(std::vector<std::string> tokens, size_t len) const;

    const TokenizerSpec& spec() const { return spec_; }
    const std::string& pad_token() const { return spec_.pad_token; }

private:
    std::vector<std::string> tokenize_whitespace(std::string_view text) const;
    std::vector<std::string> tokenize_char(std::string_view text) const;
    std::vector<std::string> tokenize_vocab(std::string_view text) const;

    TokenizerSpec spec_;
    // VocabGreedy state: tokens bucketed by byte length, longest first.
    std::vector<size_t> vocab_lengths_;  // distinct lengths, descending
    std::unordered_set<std::string> vocab_;
};

// True for the code points the Whitespace tokenizer splits on.
bool is_unicode_space(uint32_t cp);

// Decodes one UTF-8 scalar at text[pos]; advances pos. Invalid bytes decode
// to U+FFFD and advance by one byte (deterministic, never throws).
uint32_t decode_utf8(std::string_view text, size_t& pos);

}  // namespace notesampler

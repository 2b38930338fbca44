#include "notesampler/tokenizer.hpp"

#include <algorithm>
#include <fstream>

namespace notesampler {

namespace {

constexpr std::string_view kUnknownToken = "<unk>";
constexpr std::string_view kReplacementUtf8 = "\xEF\xBF\xBD";  // U+FFFD

void ascii_lower_inplace(std::string& s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
}

}  // namespace

bool is_unicode_space(uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0:
        case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

uint32_t decode_utf8(std::string_view text, size_t& pos) {
    const auto bad = [&pos](size_t advance) {
        pos += advance;
        return 0xFFFDu;
    };
    unsigned char b0 = static_cast<unsigned char>(text[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    size_t need;
    uint32_t cp;
    if ((b0 & 0xE0) == 0xC0) { need = 1; cp = b0 & 0x1Fu; }
    else if ((b0 & 0xF0) == 0xE0) { need = 2; cp = b0 & 0x0Fu; }
    else if ((b0 & 0xF8) == 0xF0) { need = 3; cp = b0 & 0x07u; }
    else return bad(1);  // stray continuation or invalid lead
    if (pos + need >= text.size()) return bad(1);  // truncated sequence
    for (size_t i = 1; i <= need; ++i) {
        unsigned char b = static_cast<unsigned char>(text[pos + i]);
        if ((b & 0xC0) != 0x80) return bad(1);
        cp = (cp << 6) | (b & 0x3Fu);
    }
    // Reject overlong encodings, surrogates, and out-of-range values.
    static constexpr uint32_t kMinByLen[4] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMinByLen[need] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
        return bad(1);
    pos += need + 1;
    return cp;
}

Tokenizer::Tokenizer(TokenizerSpec spec) : spec_(std::move(spec)) {
    if (spec_.pad_token.empty())
        throw SchemaError("tokenizer pad_token must be non-empty");
    if (spec_.kind != TokenizerKind::VocabGreedy) return;

    if (spec_.vocab_path.empty())
        throw SchemaError("vocab_greedy tokenizer requires vocab_path");
    std::ifstream in(spec_.vocab_path);
    if (!in)
        throw SchemaError("vocab file missing: " + spec_.vocab_path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        vocab_.insert(line);
    }
    if (vocab_.empty())
        throw SchemaError("vocab file invalid (no tokens): " + spec_.vocab_path);
    if (!vocab_.count(spec_.pad_token))
        throw SchemaError("vocab file missing pad token " + spec_.pad_token);
    if (!vocab_.count(std::string(kUnknownToken)))
        throw SchemaError("vocab file missing unknown-token entry <unk>");

    std::unordered_set<size_t> lens;
    for (const auto& t : vocab_) lens.insert(t.size());
    vocab_lengths_.assign(lens.begin(), lens.end());
    std::sort(vocab_lengths_.rbegin(), vocab_lengths_.rend());
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    switch (spec_.kind) {
        case TokenizerKind::Whitespace: return tokenize_whitespace(text);
        case TokenizerKind::Char: return tokenize_char(text);
        case TokenizerKind::VocabGreedy: return tokenize_vocab(text);
    }
    throw std::runtime_error("unreachable tokenizer kind");
}

std::vector<std::string> Tokenizer::tokenize_whitespace(std::string_view text) const {
    std::vector<std::string> out;
    size_t pos = 0, token_start = 0;
    bool in_token = false;
    while (pos < text.size()) {
        size_t here = pos;
        uint32_t cp = decode_utf8(text, pos);
        if (is_unicode_space(cp)) {
            if (in_token) {
                out.emplace_back(text.substr(token_start, here - token_start));
                in_token = false;
            }
        } else if (!in_token) {
            token_start = here;
            in_token = true;
        }
    }
    if (in_token) out.emplace_back(text.substr(token_start));
    if (spec_.lowercase)
        for (auto& t : out) ascii_lower_inplace(t);
    return out;
}

std::vector<std::string> Tokenizer::tokenize_char(std::string_view text) const {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t here = pos;
        uint32_t cp = decode_utf8(text, pos);
        if (cp == 0xFFFDu)  // real U+FFFD slices to the same bytes
            out.emplace_back(kReplacementUtf8);
        else
            out.emplace_back(text.substr(here, pos - here));
    }
    if (spec_.lowercase)
        for (auto& t : out) ascii_lower_inplace(t);
    return out;
}

std::vector<std::string> Tokenizer::tokenize_vocab(std::string_view text) const {
    std::string folded;
    if (spec_.lowercase) {
        folded.assign(text);
        ascii_lower_inplace(folded);
        text = folded;
    }
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos < text.size()) {
        bool matched = false;
        for (size_t len : vocab_lengths_) {
            if (len > text.size() - pos) continue;
            std::string candidate(text.substr(pos, len));
            if (vocab_.count(candidate)) {
                out.push_back(std::move(candidate));
                pos += len;
                matched = true;
                break;
            }
        }
        if (!matched) {
            out.emplace_back(kUnknownToken);
            decode_utf8(text, pos);  // advance one scalar
        }
    }
    return out;
}

std::vector<std::string> Tokenizer::pad_to(std::vector<std::string> tokens,
                                           size_t len) const {
    if (tokens.size() > len)
        throw std::runtime_error("pad_to on over-length sequence");
    tokens.resize(len, spec_.pad_token);
    return tokens;
}

std::vector<std::string> Tokenizer::truncate_to(std::vector<std::string> tokens,
                                                size_t len) const {
    if (tokens.size() > len) tokens.resize(len);
    return tokens;
}

}  // namespace notesampler

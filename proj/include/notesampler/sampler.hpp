#pragma once

// Window extraction under a fixed token budget: position-parameterized
// sliding windows, the fragmented first+last variant, and two-source mixing
// with an even budget split. All extraction goes through plan_window(), so
// the materializing API and the hashing hot path can't drift apart.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "notesampler/corpus.hpp"
#include "notesampler/tokenizer.hpp"

namespace notesampler {

// Window anchor within a token sequence: a relative position p in [0,1], or
// the fragmented variant taking the first ceil(n/2) and last floor(n/2).
struct WindowPosition {
    bool fragmented = false;
    double p = 0.0;  // meaningful only when !fragmented

    static WindowPosition at(double p);            // SchemaError unless 0 <= p <= 1
    static WindowPosition both();                  // fragmented
    static WindowPosition parse(std::string_view); // "0.35" or "both"
    std::string name() const;                      // "0.35" / "both"; at least one decimal

    bool operator==(const WindowPosition& o) const {
        return fragmented == o.fragmented && (fragmented || p == o.p);
    }
};

// Contiguous-window bounds for a sequence of length l >= n: half-open
// [start, start + n) where start = clamp(round(l*p - n/2), 0, l - n) and
// round(x) = floor(x + 1/2). Throws std::runtime_error
// "window exceeds text; use extract_window" when l < n.
std::pair<size_t, size_t> window_bounds(size_t l, size_t n, double p);

// Extraction plan: half-open spans into the source sequence plus trailing
// pad count. sum(span lengths) + pad_len == budget always.
struct WindowPlan {
    std::vector<std::pair<size_t, size_t>> spans;
    size_t pad_len = 0;
};

WindowPlan plan_window(size_t l, size_t budget, const WindowPosition& pos);

// Materializing wrappers. Both return exactly n tokens; when the input is
// shorter than n the position is ignored and the whole input is kept, padded
// on the right.
std::vector<std::string> extract_window(const std::vector<std::string>& tokens,
                                        size_t n, double p,
                                        const Tokenizer& tokenizer);
std::vector<std::string> extract_fragmented(const std::vector<std::string>& tokens,
                                            size_t n, const Tokenizer& tokenizer);

// --- Sampling configurations ---------------------------------------------

// One or two note sources, each with its own window position, sharing a
// total budget. With two sources the first gets ceil(n/2) tokens and the
// second floor(n/2); each side pads its own shortfall (no reallocation).
struct SamplerConfig {
    std::vector<NoteSelector> sources;     // size 1 or 2
    std::vector<WindowPosition> positions; // same size as sources
    size_t budget = 0;
    // Optional marker between two sources, counted against the first
    // source's budget (off by default so the ceil/floor allocation is pure).
    std::optional<std::string> separator;

    // "<sources joined by '+'>_p<pos1>[-<pos2>]_n<budget>", e.g.
    // "first_nursing+discharge_p0.0-both_n512".
    std::string config_id() const;

    void validate() const;  // SchemaError on bad arity / budget 0
};

struct SourceTrace {
    NoteSelector selector;
    std::string note_id;
    size_t budget = 0;   // this source's share of the total
    size_t pad_len = 0;  // pads inside that share
    std::vector<std::pair<size_t, size_t>> spans;  // into the note's token list
};

struct SampledInput {
    std::string record_id;
    std::string config_id;
    std::vector<std::string> tokens;  // exactly config.budget entries
    std::vector<SourceTrace> provenance;

    size_t pad_len() const;  // total pads across sources
    // Tokens minus pads, in order (reconstructed from provenance, since pads
    // can be interior when two sources mix).
    std::vector<std::string> content_tokens() const;
};

SampledInput sample(const Record& record, const SamplerConfig& config,
                    const Tokenizer& tokenizer);

// Writes one JSON object per line:
//   {"record_id","config_id","split","label","tokens","pad_len"}
// for every (config, record) pair whose split is in `splits_included`, ordered
// by (config_id, record_id). The corpus must carry a split assignment.
void export_samples(const Corpus& corpus,
                    const std::vector<SamplerConfig>& configs,
                    const Tokenizer& tokenizer,
                    const std::vector<Split>& splits_included,
                    const std::string& out_path);

}  // namespace notesampler

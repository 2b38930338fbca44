#pragma once

// Synthetic corpora with a planted positional signal: discriminative tokens
// placed at controlled positions inside noise text, giving the search harness
// machine-checkable ground truth.

#include <cstdint>
#include <string>
#include <vector>

#include "notesampler/corpus.hpp"

namespace notesampler {

enum class PositionProfile { FrontBack, Uniform, Front, Back };

std::string_view profile_name(PositionProfile p);
PositionProfile parse_profile(std::string_view name);  // SchemaError otherwise

// Per-category generation parameters. When carries_signal is set, a record's
// notes of this category receive that category's signal tokens (placed per
// profile) with probability signal_strength for positives and
// 1 - signal_strength for negatives; the draw is independent across
// categories.
struct CategoryGen {
    std::string category;
    size_t min_tokens = 0;
    size_t max_tokens = 0;
    PositionProfile profile = PositionProfile::Uniform;
    bool carries_signal = false;
    size_t min_notes = 1;  // notes of this category per record
    size_t max_notes = 1;
};

struct SynthSpec {
    size_t n_records = 2000;
    double label_balance = 0.5;      // fraction of positives (exact counts)
    double signal_strength = 0.9;    // in (0.5, 1]
    size_t signal_tokens_per_category = 8;
    // Injections per signal-carrying note. High enough that a 512-token
    // window at any position almost surely contains several signal tokens
    // for the default note lengths; window position then moves detection
    // only through coverage, not through placement luck.
    size_t signal_tokens_per_note = 28;
    // Large enough that individual noise words (and almost all noise
    // bigrams) are too rare for the proxy to overfit, keeping AUC noise
    // across window positions small.
    size_t noise_vocab_size = 3000;
    std::vector<CategoryGen> categories;
    uint64_t seed = 0;

    // 2000 records, balance 0.5, strength 0.9; nursing 900-1800 tokens,
    // uniform, 1-3 notes; discharge 1200-2000 tokens, front_back, 1 note.
    // Both categories carry (independent) signal, so one corpus exercises
    // both the positional-recovery and the mixing-gain checks.
    static SynthSpec defaults();

    void validate() const;  // SchemaError on out-of-range fields
};

// JSON round trip for spec files; missing fields take defaults() values.
SynthSpec parse_synth_spec_json(const std::string& json_text);
std::string synth_spec_to_json(const SynthSpec& spec);

Corpus generate(const SynthSpec& spec);

// Machine-checkable expected orderings implied by the planted profiles,
// consumed by tests: e.g. front_back discharge -> auc(discharge,p=0.0) beats
// auc(discharge,p=0.5). Margins are in AUC units; margin 0 means ">=".
struct GroundTruthConstraint {
    std::string kind;       // "auc_order" | "mixing_large_n_gain"
    std::string category;   // note category ("" for mixing constraints)
    std::string better_p;   // position name, e.g. "0.0" or "both"
    std::string worse_p;
    double margin = 0.0;
    std::string text;       // human-readable form
};

std::vector<GroundTruthConstraint> ground_truth(const SynthSpec& spec);
void save_ground_truth_json(const std::vector<GroundTruthConstraint>& constraints,
                            const std::string& path);

}  // namespace notesampler

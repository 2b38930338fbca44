#include "notesampler/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace notesampler {

using ordered_json = nlohmann::ordered_json;

std::string_view profile_name(PositionProfile p) {
    switch (p) {
        case PositionProfile::FrontBack: return "front_back";
        case PositionProfile::Uniform: return "uniform";
        case PositionProfile::Front: return "front";
        case PositionProfile::Back: return "back";
    }
    return "?";
}

PositionProfile parse_profile(std::string_view name) {
    if (name == "front_back") return PositionProfile::FrontBack;
    if (name == "uniform") return PositionProfile::Uniform;
    if (name == "front") return PositionProfile::Front;
    if (name == "back") return PositionProfile::Back;
    throw SchemaError("unknown position profile: " + std::string(name));
}

SynthSpec SynthSpec::defaults() {
    SynthSpec spec;
    CategoryGen nursing;
    nursing.category = "nursing";
    nursing.min_tokens = 900;
    nursing.max_tokens = 1800;
    nursing.profile = PositionProfile::Uniform;
    nursing.carries_signal = true;
    nursing.min_notes = 1;
    nursing.max_notes = 3;
    CategoryGen discharge;
    discharge.category = "discharge";
    discharge.min_tokens = 1200;
    discharge.max_tokens = 2000;
    discharge.profile = PositionProfile::FrontBack;
    discharge.carries_signal = true;
    discharge.min_notes = 1;
    discharge.max_notes = 1;
    spec.categories = {std::move(nursing), std::move(discharge)};
    return spec;
}

void SynthSpec::validate() const {
    if (!(label_balance > 0.0 && label_balance < 1.0))
        throw SchemaError("label_balance must be in (0,1)");
    if (!(signal_strength > 0.5 && signal_strength <= 1.0))
        throw SchemaError("signal_strength must be in (0.5,1]");
    if (signal_tokens_per_category == 0)
        throw SchemaError("signal_tokens_per_category must be positive");
    if (signal_tokens_per_note == 0)
        throw SchemaError("signal_tokens_per_note must be positive");
    if (noise_vocab_size < 2)
        throw SchemaError("noise_vocab_size must be at least 2");
    if (categories.empty())
        throw SchemaError("synth spec needs at least one category");
    if (categories.size() > 11)
        throw SchemaError("synth spec supports at most 11 categories");
    bool has_nursing = false, has_discharge = false;
    std::unordered_set<std::string> names;
    for (const auto& cat : categories) {
        if (cat.category.empty())
            throw SchemaError("category name must be non-empty");
        if (!names.insert(cat.category).second)
            throw SchemaError("duplicate category: " + cat.category);
        if (cat.min_tokens == 0 || cat.min_tokens > cat.max_tokens)
            throw SchemaError("bad token length range for " + cat.category);
        if (cat.min_notes == 0 || cat.min_notes > cat.max_notes)
            throw SchemaError("bad note count range for " + cat.category);
        if (cat.max_notes > 100)
            throw SchemaError("at most 100 notes per category");
        if (cat.category == "nursing") has_nursing = true;
        if (cat.category == "discharge") has_discharge = true;
    }
    if (!has_nursing || !has_discharge)
        throw SchemaError("synth spec must include nursing and discharge categories");
}

namespace {

std::vector<std::string> make_noise_vocab(size_t size, Rng& rng) {
    static constexpr char kConsonants[] = "bcdfghjklmnpqrstvwz";
    static constexpr char kVowels[] = "aeiou";
    std::vector<std::string> vocab;
    std::unordered_set<std::string> seen;
    while (vocab.size() < size) {
        std::string w;
        if (!vocab.empty() && rng.next_bool(0.2)) {
            // typo-like variant: clone an existing word, flip one letter
            w = vocab[rng.next_below(vocab.size())];
            w[rng.next_below(w.size())] =
                kConsonants[rng.next_below(sizeof(kConsonants) - 1)];
        } else {
            size_t syllables = 2 + rng.next_below(3);
            for (size_t s = 0; s < syllables; ++s) {
                w += kConsonants[rng.next_below(sizeof(kConsonants) - 1)];
                w += kVowels[rng.next_below(sizeof(kVowels) - 1)];
            }
        }
        // keep the signal-token namespace clean
        if (w.rfind("sig", 0) == 0) continue;
        if (seen.insert(w).second) vocab.push_back(std::move(w));
    }
    return vocab;
}

void inject_signal(std::vector<std::string_view>& tokens,
                   const std::vector<std::string>& signal,
                   PositionProfile profile, size_t count, Rng& rng) {
    const size_t L = tokens.size();
    const size_t region = std::max<size_t>(1, L / 10);
    for (size_t j = 0; j < count; ++j) {
        size_t pos = 0;
        switch (profile) {
            case PositionProfile::Uniform: pos = rng.next_below(L); break;
            case PositionProfile::Front: pos = rng.next_below(region); break;
            case PositionProfile::Back: pos = L - region + rng.next_below(region); break;
            case PositionProfile::FrontBack:
                pos = (j % 2 == 0) ? rng.next_below(region)
                                   : L - region + rng.next_below(region);
                break;
        }
        tokens[pos] = signal[rng.next_below(signal.size())];
    }
}

std::string note_timestamp(size_t month, size_t note_index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "2130-%02zu-%02zuT%02zu:00:00", month,
                  1 + note_index / 24, note_index % 24);
    return std::string(buf);
}

std::string record_id_for(size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "r%06zu", index);
    return std::string(buf);
}

}  // namespace

Corpus generate(const SynthSpec& spec) {
    spec.validate();

    Rng vocab_rng = Rng::stream(spec.seed, 0);
    const std::vector<std::string> noise =
        make_noise_vocab(spec.noise_vocab_size, vocab_rng);

    std::unordered_map<std::string, std::vector<std::string>> signal;
    for (const auto& cat : spec.categories) {
        if (!cat.carries_signal) continue;
        std::vector<std::string> toks;
        for (size_t k = 0; k < spec.signal_tokens_per_category; ++k)
            toks.push_back("sig" + cat.category + std::to_string(k));
        signal.emplace(cat.category, std::move(toks));
    }

    // Exact label counts, then a seeded shuffle; keeps the balance invariant
    // independent of n_records.
    const size_t n_pos = std::min(
        spec.n_records,
        static_cast<size_t>(static_cast<double>(spec.n_records) *
                                spec.label_balance +
                            0.5));
    std::vector<int> labels(spec.n_records, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<ptrdiff_t>(n_pos), 1);
    Rng label_rng = Rng::stream(spec.seed, 1);
    label_rng.shuffle(labels);

    // The discharge category always takes the last month so nursing (and any
    // other) notes precede it chronologically.
    std::unordered_map<std::string, size_t> month_of;
    size_t next_month = 1;
    for (const auto& cat : spec.categories)
        if (cat.category != "discharge") month_of[cat.category] = next_month++;
    month_of["discharge"] = 12;

    Corpus corpus;
    corpus.records.reserve(spec.n_records);
    for (size_t r = 0; r < spec.n_records; ++r) {
        Rng rng = Rng::stream(spec.seed, 2 + r);
        Record rec;
        rec.record_id = record_id_for(r);
        rec.label = labels[r];

        for (const auto& cat : spec.categories) {
            const size_t n_notes =
                cat.min_notes + rng.next_below(cat.max_notes - cat.min_notes + 1);
            bool carries = false;
            if (cat.carries_signal) {
                const double p_carry = rec.label ? spec.signal_strength
                                                 : 1.0 - spec.signal_strength;
                carries = rng.next_bool(p_carry);
            }
            for (size_t k = 0; k < n_notes; ++k) {
                const size_t len =
                    cat.min_tokens +
                    rng.next_below(cat.max_tokens - cat.min_tokens + 1);
                std::vector<std::string_view> tokens;
                tokens.reserve(len);
                for (size_t t = 0; t < len; ++t)
                    tokens.push_back(noise[rng.next_below(noise.size())]);
                if (carries)
                    inject_signal(tokens, signal.at(cat.category), cat.profile,
                                  spec.signal_tokens_per_note, rng);

                Note note;
                note.note_id = cat.category + "-" + std::to_string(k);
                note.category = cat.category;
                note.timestamp = note_timestamp(month_of.at(cat.category), k);
                size_t bytes = 0;
                for (const auto& t : tokens) bytes += t.size() + 1;
                note.text.reserve(bytes);
                for (size_t t = 0; t < tokens.size(); ++t) {
                    if (t) note.text += ' ';
                    note.text.append(tokens[t]);
                }
                rec.notes.push_back(std::move(note));
            }
        }
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

std::vector<GroundTruthConstraint> ground_truth(const SynthSpec& spec) {
    spec.validate();
    std::vector<GroundTruthConstraint> out;
    auto add_order = [&out](const std::string& cat, const char* better,
                            const char* worse, double margin) {
        GroundTruthConstraint c;
        c.kind = "auc_order";
        c.category = cat;
        c.better_p = better;
        c.worse_p = worse;
        c.margin = margin;
        c.text = "auc(" + cat + ",p=" + better + ") " +
                 (margin > 0.0 ? ">" : ">=") + " auc(" + cat + ",p=" + worse + ")";
        out.push_back(std::move(c));
    };

    bool nursing_signal = false, discharge_signal = false;
    for (const auto& cat : spec.categories) {
        if (!cat.carries_signal) continue;
        if (cat.category == "nursing") nursing_signal = true;
        if (cat.category == "discharge") discharge_signal = true;
        switch (cat.profile) {
            case PositionProfile::FrontBack:
                add_order(cat.category, "0.0", "0.5", 0.05);
                add_order(cat.category, "1.0", "0.5", 0.05);
                add_order(cat.category, "both", "0.0", 0.0);
                break;
            case PositionProfile::Front:
                add_order(cat.category, "0.0", "0.5", 0.05);
                add_order(cat.category, "0.0", "1.0", 0.05);
                break;
            case PositionProfile::Back:
                add_order(cat.category, "1.0", "0.5", 0.05);
                add_order(cat.category, "1.0", "0.0", 0.05);
                break;
            case PositionProfile::Uniform:
                break;  // no ordering implied
        }
    }
    if (nursing_signal && discharge_signal) {
        GroundTruthConstraint c;
        c.kind = "mixing_large_n_gain";
        c.text = "mixing beats discharge-only at large n";
        out.push_back(std::move(c));
    }
    return out;
}

void save_ground_truth_json(const std::vector<GroundTruthConstraint>& constraints,
                            const std::string& path) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : constraints) {
        ordered_json obj;
        obj["kind"] = c.kind;
        obj["category"] = c.category;
        obj["better_p"] = c.better_p;
        obj["worse_p"] = c.worse_p;
        obj["margin"] = c.margin;
        obj["text"] = c.text;
        arr.push_back(std::move(obj));
    }
    ordered_json root;
    root["constraints"] = std::move(arr);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write ground truth file: " + path);
    out << root.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

PositionProfile profile_from_json(const ordered_json& v) {
    if (!v.is_string()) throw SchemaError("profile must be a string");
    return parse_profile(v.get<std::string>());
}

CategoryGen category_from_json(const ordered_json& obj) {
    if (!obj.is_object()) throw SchemaError("category entry must be an object");
    CategoryGen cat;
    for (const auto& [key, value] : obj.items()) {
        if (key == "category") cat.category = value.get<std::string>();
        else if (key == "min_tokens") cat.min_tokens = value.get<size_t>();
        else if (key == "max_tokens") cat.max_tokens = value.get<size_t>();
        else if (key == "profile") cat.profile = profile_from_json(value);
        else if (key == "carries_signal") cat.carries_signal = value.get<bool>();
        else if (key == "min_notes") cat.min_notes = value.get<size_t>();
        else if (key == "max_notes") cat.max_notes = value.get<size_t>();
        else throw SchemaError("unknown field in category spec: " + key);
    }
    if (cat.category.empty())
        throw SchemaError("category spec needs a category name");
    return cat;
}

}  // namespace

SynthSpec parse_synth_spec_json(const std::string& json_text) {
    ordered_json obj;
    try {
        obj = ordered_json::parse(json_text);
    } catch (const ordered_json::parse_error& e) {
        throw SchemaError("invalid synth spec JSON: " + std::string(e.what()));
    }
    if (!obj.is_object()) throw SchemaError("synth spec must be a JSON object");

    SynthSpec spec = SynthSpec::defaults();
    try {
        for (const auto& [key, value] : obj.items()) {
            if (key == "n_records") spec.n_records = value.get<size_t>();
            else if (key == "label_balance") spec.label_balance = value.get<double>();
            else if (key == "signal_strength") spec.signal_strength = value.get<double>();
            else if (key == "signal_tokens_per_category")
                spec.signal_tokens_per_category = value.get<size_t>();
            else if (key == "signal_tokens_per_note")
                spec.signal_tokens_per_note = value.get<size_t>();
            else if (key == "noise_vocab_size") spec.noise_vocab_size = value.get<size_t>();
            else if (key == "seed") spec.seed = value.get<uint64_t>();
            else if (key == "categories") {
                if (!value.is_array())
                    throw SchemaError("categories must be an array");
                spec.categories.clear();
                for (const auto& cj : value)
                    spec.categories.push_back(category_from_json(cj));
            } else {
                throw SchemaError("unknown field in synth spec: " + key);
            }
        }
    } catch (const ordered_json::exception& e) {
        throw SchemaError("invalid synth spec JSON: " + std::string(e.what()));
    }
    spec.validate();
    return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
    ordered_json obj;
    obj["n_records"] = spec.n_records;
    obj["label_balance"] = spec.label_balance;
    obj["signal_strength"] = spec.signal_strength;
    obj["signal_tokens_per_category"] = spec.signal_tokens_per_category;
    obj["signal_tokens_per_note"] = spec.signal_tokens_per_note;
    obj["noise_vocab_size"] = spec.noise_vocab_size;
    obj["seed"] = spec.seed;
    ordered_json cats = ordered_json::array();
    for (const auto& cat : spec.categories) {
        ordered_json cj;
        cj["category"] = cat.category;
        cj["min_tokens"] = cat.min_tokens;
        cj["max_tokens"] = cat.max_tokens;
        cj["profile"] = std::string(profile_name(cat.profile));
        cj["carries_signal"] = cat.carries_signal;
        cj["min_notes"] = cat.min_notes;
        cj["max_notes"] = cat.max_notes;
        cats.push_back(std::move(cj));
    }
    obj["categories"] = std::move(cats);
    return obj.dump(2) + "\n";
}

}  // namespace notesampler

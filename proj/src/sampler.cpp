#include "notesampler/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace notesampler {

using ordered_json = nlohmann::ordered_json;

WindowPosition WindowPosition::at(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw SchemaError("window position must be in [0,1], got " +
                          format_fixed(p, 6));
    WindowPosition pos;
    pos.p = p;
    return pos;
}

WindowPosition WindowPosition::both() {
    WindowPosition pos;
    pos.fragmented = true;
    return pos;
}

WindowPosition WindowPosition::parse(std::string_view text) {
    if (text == "both") return both();
    try {
        size_t consumed = 0;
        std::string owned(text);
        double p = std::stod(owned, &consumed);
        if (consumed != owned.size()) throw std::invalid_argument(owned);
        return at(p);
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception&) {
        throw SchemaError("cannot parse window position: " + std::string(text));
    }
}

std::string WindowPosition::name() const {
    if (fragmented) return "both";
    std::string s = format_fixed(p, 6);
    size_t dot = s.find('.');
    size_t last = s.size();
    while (last > dot + 2 && s[last - 1] == '0') --last;
    s.resize(last);
    return s;
}

std::pair<size_t, size_t> window_bounds(size_t l, size_t n, double p) {
    if (n == 0) throw SchemaError("window budget must be positive");
    if (!(p >= 0.0 && p <= 1.0))
        throw SchemaError("window position must be in [0,1], got " +
                          format_fixed(p, 6));
    if (l < n)
        throw std::runtime_error("window exceeds text; use extract_window");
    // Midpoint l*p, so the raw interval is [l*p - n/2, l*p + n/2); round the
    // start with floor(x + 1/2), then clamp into the text.
    double raw = std::floor(static_cast<double>(l) * p -
                            static_cast<double>(n) / 2.0 + 0.5);
    double hi = static_cast<double>(l - n);
    size_t start = static_cast<size_t>(std::min(std::max(raw, 0.0), hi));
    return {start, start + n};
}

WindowPlan plan_window(size_t l, size_t budget, const WindowPosition& pos) {
    if (budget == 0) throw SchemaError("window budget must be positive");
    WindowPlan plan;
    if (l < budget) {
        // Too short: position is irrelevant, keep everything and pad.
        if (l > 0) plan.spans.emplace_back(0, l);
        plan.pad_len = budget - l;
        return plan;
    }
    if (pos.fragmented) {
        size_t head = (budget + 1) / 2;
        size_t tail = budget / 2;
        plan.spans.emplace_back(0, head);
        if (tail > 0) plan.spans.emplace_back(l - tail, l);
        return plan;
    }
    plan.spans.push_back(window_bounds(l, budget, pos.p));
    return plan;
}

namespace {

void append_plan(std::vector<std::string>& out,
                 const std::vector<std::string>& tokens, const WindowPlan& plan,
                 const Tokenizer& tokenizer) {
    for (auto [s, e] : plan.spans)
        out.insert(out.end(), tokens.begin() + static_cast<ptrdiff_t>(s),
                   tokens.begin() + static_cast<ptrdiff_t>(e));
    out.insert(out.end(), plan.pad_len, tokenizer.pad_token());
}

}  // namespace

std::vector<std::string> extract_window(const std::vector<std::string>& tokens,
                                        size_t n, double p,
                                        const Tokenizer& tokenizer) {
    WindowPlan plan = plan_window(tokens.size(), n, WindowPosition::at(p));
    std::vector<std::string> out;
    out.reserve(n);
    append_plan(out, tokens, plan, tokenizer);
    return out;
}

std::vector<std::string> extract_fragmented(const std::vector<std::string>& tokens,
                                            size_t n, const Tokenizer& tokenizer) {
    WindowPlan plan = plan_window(tokens.size(), n, WindowPosition::both());
    std::vector<std::string> out;
    out.reserve(n);
    append_plan(out, tokens, plan, tokenizer);
    return out;
}

void SamplerConfig::validate() const {
    if (sources.empty() || sources.size() > 2)
        throw SchemaError("config must have 1 or 2 sources");
    if (positions.size() != sources.size())
        throw SchemaError("config needs one window position per source");
    if (budget < 2) throw SchemaError("config budget must be at least 2");
    for (const auto& pos : positions)
        if (!pos.fragmented && !(pos.p >= 0.0 && pos.p <= 1.0))
            throw SchemaError("window position must be in [0,1]");
    if (separator) {
        if (sources.size() != 2)
            throw SchemaError("separator requires two sources");
        if (separator->empty())
            throw SchemaError("separator token must be non-empty");
        if ((budget + 1) / 2 < 2)
            throw SchemaError("separator leaves no budget for the first source");
    }
}

std::string SamplerConfig::config_id() const {
    std::string id;
    for (size_t i = 0; i < sources.size(); ++i) {
        if (i) id += '+';
        id += selector_name(sources[i]);
    }
    id += "_p";
    for (size_t i = 0; i < positions.size(); ++i) {
        if (i) id += '-';
        id += positions[i].name();
    }
    id += "_n" + std::to_string(budget);
    return id;
}

size_t SampledInput::pad_len() const {
    size_t total = 0;
    for (const auto& trace : provenance) total += trace.pad_len;
    return total;
}

std::vector<std::string> SampledInput::content_tokens() const {
    // Walk the per-source blocks and keep everything that is not padding.
    // Block layout: window tokens, optional separator, pads.
    std::vector<std::string> out;
    out.reserve(tokens.size());
    size_t cursor = 0;
    for (const auto& trace : provenance) {
        size_t content = trace.budget - trace.pad_len;
        for (size_t k = 0; k < content; ++k) out.push_back(tokens[cursor + k]);
        cursor += trace.budget;
    }
    return out;
}

SampledInput sample(const Record& record, const SamplerConfig& config,
                    const Tokenizer& tokenizer) {
    config.validate();
    const size_t k = config.sources.size();
    std::vector<size_t> budgets;
    if (k == 1)
        budgets = {config.budget};
    else
        budgets = {(config.budget + 1) / 2, config.budget / 2};

    SampledInput out;
    out.record_id = record.record_id;
    out.config_id = config.config_id();
    out.tokens.reserve(config.budget);

    for (size_t i = 0; i < k; ++i) {
        const Note& note = select_note(record, config.sources[i]);
        std::vector<std::string> note_tokens = tokenizer.tokenize(note.text);
        const bool sep_here = config.separator.has_value() && i == 0;
        const size_t window_budget = budgets[i] - (sep_here ? 1 : 0);
        WindowPlan plan =
            plan_window(note_tokens.size(), window_budget, config.positions[i]);

        SourceTrace trace;
        trace.selector = config.sources[i];
        trace.note_id = note.note_id;
        trace.budget = budgets[i];
        trace.pad_len = plan.pad_len;
        trace.spans = plan.spans;
        out.provenance.push_back(std::move(trace));

        for (auto [s, e] : plan.spans)
            out.tokens.insert(out.tokens.end(),
                              note_tokens.begin() + static_cast<ptrdiff_t>(s),
                              note_tokens.begin() + static_cast<ptrdiff_t>(e));
        if (sep_here) out.tokens.push_back(*config.separator);
        out.tokens.insert(out.tokens.end(), plan.pad_len, tokenizer.pad_token());
    }
    return out;
}

void export_samples(const Corpus& corpus,
                    const std::vector<SamplerConfig>& configs,
                    const Tokenizer& tokenizer,
                    const std::vector<Split>& splits_included,
                    const std::string& out_path) {
    if (!corpus.split_assignment)
        throw SchemaError("corpus is not split; run preprocess first");
    std::set<std::string> seen_ids;
    for (const auto& cfg : configs) {
        cfg.validate();
        if (!seen_ids.insert(cfg.config_id()).second)
            throw SchemaError("duplicate config_id: " + cfg.config_id());
    }

    std::vector<const SamplerConfig*> ordered;
    ordered.reserve(configs.size());
    for (const auto& cfg : configs) ordered.push_back(&cfg);
    std::sort(ordered.begin(), ordered.end(),
              [](const SamplerConfig* a, const SamplerConfig* b) {
                  return a->config_id() < b->config_id();
              });

    std::vector<const Record*> records;
    records.reserve(corpus.records.size());
    for (const auto& rec : corpus.records) {
        Split sp = corpus.split_assignment->by_record.at(rec.record_id);
        if (std::find(splits_included.begin(), splits_included.end(), sp) !=
            splits_included.end())
            records.push_back(&rec);
    }
    std::sort(records.begin(), records.end(),
              [](const Record* a, const Record* b) {
                  return a->record_id < b->record_id;
              });

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write samples file: " + out_path);
    for (const SamplerConfig* cfg : ordered) {
        for (const Record* rec : records) {
            SampledInput si = sample(*rec, *cfg, tokenizer);
            ordered_json obj;
            obj["record_id"] = rec->record_id;
            obj["config_id"] = si.config_id;
            obj["split"] = std::string(split_name(
                corpus.split_assignment->by_record.at(rec->record_id)));
            obj["label"] = rec->label;
            obj["tokens"] = si.tokens;
            obj["pad_len"] = si.pad_len();
            out << obj.dump() << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + out_path);
}

}  // namespace notesampler

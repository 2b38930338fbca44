#include "notesampler/search.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <thread>
#include <unordered_map>

#include <json.hpp>

namespace notesampler {

using ordered_json = nlohmann::ordered_json;

SearchSpec SearchSpec::defaults() {
    SearchSpec spec;
    for (int i = 0; i <= 10; ++i)
        spec.single_note_p_values.push_back(
            WindowPosition::at(static_cast<double>(i) / 10.0));
    spec.single_note_p_values.push_back(WindowPosition::both());
    spec.mixing_p_values = {WindowPosition::at(0.0), WindowPosition::at(1.0),
                            WindowPosition::both()};
    spec.note_options = {
        {NoteSelector::FirstNursing},
        {NoteSelector::LastNursing},
        {NoteSelector::Discharge},
        {NoteSelector::FirstNursing, NoteSelector::Discharge},
        {NoteSelector::LastNursing, NoteSelector::Discharge},
    };
    return spec;
}

void SearchSpec::validate() const {
    if (budget < 2) throw SchemaError("search budget must be at least 2");
    for (const auto& values : {single_note_p_values, mixing_p_values})
        for (const auto& pos : values)
            if (!pos.fragmented && !(pos.p >= 0.0 && pos.p <= 1.0))
                throw SchemaError("window position must be in [0,1]");
    if (note_options.empty())
        throw SchemaError("note_options must be non-empty");
    for (const auto& option : note_options)
        if (option.empty() || option.size() > 2)
            throw SchemaError("note options must have 1 or 2 selectors");
    if (bootstrap_iters < 100)
        throw SchemaError("bootstrap_iters must be at least 100");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw SchemaError("alpha must be in (0,1)");
}

std::vector<SamplerConfig> enumerate_configs(const SearchSpec& spec) {
    spec.validate();
    std::vector<SamplerConfig> configs;
    std::set<std::string> ids;
    auto push = [&](std::vector<NoteSelector> sources,
                    std::vector<WindowPosition> positions) {
        SamplerConfig cfg;
        cfg.sources = std::move(sources);
        cfg.positions = std::move(positions);
        cfg.budget = spec.budget;
        cfg.validate();
        if (!ids.insert(cfg.config_id()).second)
            throw SchemaError("duplicate config_id: " + cfg.config_id());
        configs.push_back(std::move(cfg));
    };
    for (const auto& option : spec.note_options) {
        if (option.size() == 1) {
            for (const auto& p : spec.single_note_p_values) push(option, {p});
        } else {
            for (const auto& p1 : spec.mixing_p_values)
                for (const auto& p2 : spec.mixing_p_values)
                    push(option, {p1, p2});
        }
    }
    return configs;
}

uint64_t config_seed(uint64_t master_seed, const std::string& config_id) {
    return mix64(master_seed ^ fnv1a64(config_id));
}

// --- spec JSON ------------------------------------------------------------

namespace {

WindowPosition position_from_json(const ordered_json& v) {
    if (v.is_number()) return WindowPosition::at(v.get<double>());
    if (v.is_string()) return WindowPosition::parse(v.get<std::string>());
    throw SchemaError("window position must be a number or \"both\"");
}

ordered_json positions_to_json(const std::vector<WindowPosition>& positions) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : positions) arr.push_back(p.name());
    return arr;
}

std::vector<NoteSelector> option_from_json(const ordered_json& v) {
    if (!v.is_array()) throw SchemaError("note option must be an array of selectors");
    std::vector<NoteSelector> option;
    for (const auto& s : v) {
        if (!s.is_string()) throw SchemaError("note selector must be a string");
        option.push_back(parse_selector(s.get<std::string>()));
    }
    return option;
}

}  // namespace

SearchSpec parse_search_spec_json(const std::string& json_text) {
    ordered_json obj;
    try {
        obj = ordered_json::parse(json_text);
    } catch (const ordered_json::parse_error& e) {
        throw SchemaError("invalid search spec JSON: " + std::string(e.what()));
    }
    if (!obj.is_object()) throw SchemaError("search spec must be a JSON object");

    SearchSpec spec = SearchSpec::defaults();
    try {
        for (const auto& [key, value] : obj.items()) {
            if (key == "budget") spec.budget = value.get<size_t>();
            else if (key == "single_note_p_values") {
                spec.single_note_p_values.clear();
                for (const auto& v : value)
                    spec.single_note_p_values.push_back(position_from_json(v));
            } else if (key == "mixing_p_values") {
                spec.mixing_p_values.clear();
                for (const auto& v : value)
                    spec.mixing_p_values.push_back(position_from_json(v));
            } else if (key == "note_options") {
                spec.note_options.clear();
                for (const auto& v : value)
                    spec.note_options.push_back(option_from_json(v));
            } else if (key == "master_seed") {
                spec.master_seed = value.get<uint64_t>();
            } else if (key == "bootstrap_iters") {
                spec.bootstrap_iters = value.get<size_t>();
            } else if (key == "alpha") {
                spec.alpha = value.get<double>();
            } else {
                throw SchemaError("unknown field in search spec: " + key);
            }
        }
    } catch (const ordered_json::exception& e) {
        throw SchemaError("invalid search spec JSON: " + std::string(e.what()));
    }
    spec.validate();
    return spec;
}

std::string search_spec_to_json(const SearchSpec& spec) {
    ordered_json obj;
    obj["budget"] = spec.budget;
    obj["single_note_p_values"] = positions_to_json(spec.single_note_p_values);
    obj["mixing_p_values"] = positions_to_json(spec.mixing_p_values);
    ordered_json options = ordered_json::array();
    for (const auto& option : spec.note_options) {
        ordered_json arr = ordered_json::array();
        for (NoteSelector s : option) arr.push_back(std::string(selector_name(s)));
        options.push_back(std::move(arr));
    }
    obj["note_options"] = std::move(options);
    obj["master_seed"] = spec.master_seed;
    obj["bootstrap_iters"] = spec.bootstrap_iters;
    obj["alpha"] = spec.alpha;
    return obj.dump(2) + "\n";
}

uint64_t search_spec_hash(const SearchSpec& spec) {
    return fnv1a64(search_spec_to_json(spec));
}

namespace {

SamplerConfig sampler_config_from_json(const ordered_json& obj) {
    if (!obj.is_object()) throw SchemaError("config must be a JSON object");
    SamplerConfig cfg;
    try {
        for (const auto& [key, value] : obj.items()) {
            if (key == "sources") {
                cfg.sources = option_from_json(value);
            } else if (key == "positions") {
                if (!value.is_array())
                    throw SchemaError("positions must be an array");
                for (const auto& v : value)
                    cfg.positions.push_back(position_from_json(v));
            } else if (key == "budget") {
                cfg.budget = value.get<size_t>();
            } else if (key == "separator") {
                cfg.separator = value.get<std::string>();
            } else {
                throw SchemaError("unknown field in config: " + key);
            }
        }
    } catch (const ordered_json::exception& e) {
        throw SchemaError("invalid config JSON: " + std::string(e.what()));
    }
    cfg.validate();
    return cfg;
}

}  // namespace

std::vector<SamplerConfig> parse_sample_spec_json(const std::string& json_text) {
    ordered_json obj;
    try {
        obj = ordered_json::parse(json_text);
    } catch (const ordered_json::parse_error& e) {
        throw SchemaError("invalid sample spec JSON: " + std::string(e.what()));
    }
    if (obj.is_object() && obj.contains("configs")) {
        const auto& arr = obj.at("configs");
        if (!arr.is_array()) throw SchemaError("configs must be an array");
        std::vector<SamplerConfig> configs;
        for (const auto& cj : arr) configs.push_back(sampler_config_from_json(cj));
        if (configs.empty()) throw SchemaError("configs list is empty");
        return configs;
    }
    if (obj.is_object() && obj.contains("sources"))
        return {sampler_config_from_json(obj)};
    return enumerate_configs(parse_search_spec_json(json_text));
}

// --- run_search ------------------------------------------------------------

namespace {

// Tokenized note text packed into one buffer; ~12 bytes/token instead of a
// std::string each.
struct FlatTokens {
    std::string buf;
    std::vector<uint32_t> offsets;  // size count()+1 when non-empty

    size_t count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::string_view at(size_t i) const {
        return std::string_view(buf).substr(offsets[i], offsets[i + 1] - offsets[i]);
    }
};

FlatTokens flatten(const std::vector<std::string>& tokens) {
    FlatTokens ft;
    size_t bytes = 0;
    for (const auto& t : tokens) bytes += t.size();
    ft.buf.reserve(bytes);
    ft.offsets.reserve(tokens.size() + 1);
    ft.offsets.push_back(0);
    for (const auto& t : tokens) {
        ft.buf += t;
        ft.offsets.push_back(static_cast<uint32_t>(ft.buf.size()));
    }
    return ft;
}

struct TokenCache {
    // [selector][record index]; only used selectors / train+test records are
    // populated.
    std::array<std::vector<FlatTokens>, 3> by_selector;
};

// Mirrors sample(): per-source ceil/floor budgets, separator against the
// first source, pads skipped (featurize drops them anyway). Equivalence with
// featurize(sample(...).content_tokens()) is pinned by a test.
FeatureVec featurize_via_cache(const TokenCache& cache, size_t rec_idx,
                               const SamplerConfig& cfg,
                               const ModelHyperparams& hp,
                               std::string_view pad_token) {
    std::vector<std::string_view> views;
    views.reserve(cfg.budget);
    const size_t k = cfg.sources.size();
    for (size_t i = 0; i < k; ++i) {
        size_t source_budget =
            k == 1 ? cfg.budget : (i == 0 ? (cfg.budget + 1) / 2 : cfg.budget / 2);
        const bool sep_here = cfg.separator.has_value() && i == 0;
        if (sep_here) source_budget -= 1;
        const FlatTokens& ft =
            cache.by_selector[static_cast<int>(cfg.sources[i])][rec_idx];
        WindowPlan plan = plan_window(ft.count(), source_budget, cfg.positions[i]);
        for (auto [s, e] : plan.spans)
            for (size_t t = s; t < e; ++t) views.push_back(ft.at(t));
        if (sep_here) views.emplace_back(*cfg.separator);
    }
    return featurize(views, hp.dims, hp.ngram_orders, pad_token);
}

void sort_reports(std::vector<EvalReport>& reports) {
    std::sort(reports.begin(), reports.end(),
              [](const EvalReport& a, const EvalReport& b) {
                  if (a.auc != b.auc) return a.auc > b.auc;
                  return a.config_id < b.config_id;
              });
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

SearchResult run_search(const Corpus& corpus, const SearchSpec& spec,
                        const Tokenizer& tokenizer,
                        const ModelHyperparams& hp, unsigned jobs) {
    spec.validate();
    if (!corpus.split_assignment)
        throw SchemaError("corpus is not split; run preprocess first");
    for (const auto& rec : corpus.records)
        if (!corpus.split_assignment->by_record.count(rec.record_id))
            throw SchemaError("split assignment missing record " + rec.record_id);

    const std::vector<SamplerConfig> configs = enumerate_configs(spec);
    const uint64_t split_h = split_hash(*corpus.split_assignment);

    std::vector<size_t> train_idx, test_idx;
    for (size_t i = 0; i < corpus.records.size(); ++i) {
        switch (corpus.split_assignment->by_record.at(corpus.records[i].record_id)) {
            case Split::Train: train_idx.push_back(i); break;
            case Split::Test: test_idx.push_back(i); break;
            case Split::Val: break;  // reserved for hyperparameter sanity
        }
    }
    // Canonical record_id order: results depend on the record sets, never on
    // the permutation the corpus file happened to arrive in. (The bootstrap
    // resamples by position, and SGD shuffles positions, so this matters.)
    auto by_record_id = [&](size_t a, size_t b) {
        return corpus.records[a].record_id < corpus.records[b].record_id;
    };
    std::sort(train_idx.begin(), train_idx.end(), by_record_id);
    std::sort(test_idx.begin(), test_idx.end(), by_record_id);

    std::array<bool, 3> selector_used{};
    for (const auto& cfg : configs)
        for (NoteSelector s : cfg.sources) selector_used[static_cast<int>(s)] = true;

    TokenCache cache;
    for (int s = 0; s < 3; ++s)
        if (selector_used[s]) cache.by_selector[s].resize(corpus.records.size());
    auto tokenize_into_cache = [&](size_t idx) {
        const Record& rec = corpus.records[idx];
        for (int s = 0; s < 3; ++s) {
            if (!selector_used[s]) continue;
            const Note& note = select_note(rec, static_cast<NoteSelector>(s));
            cache.by_selector[s][idx] = flatten(tokenizer.tokenize(note.text));
        }
    };
    try {
        for (size_t idx : train_idx) tokenize_into_cache(idx);
        for (size_t idx : test_idx) tokenize_into_cache(idx);
    } catch (const std::runtime_error& e) {
        throw SchemaError(std::string("corpus is not filtered (") + e.what() +
                          "); run preprocess first");
    }

    std::vector<std::optional<EvalReport>> report_slots(configs.size());
    std::vector<std::optional<FailedConfig>> failure_slots(configs.size());

    auto eval_one = [&](size_t ci) {
        const SamplerConfig& cfg = configs[ci];
        const std::string id = cfg.config_id();
        try {
            const uint64_t seed = config_seed(spec.master_seed, id);

            std::vector<FeatureVec> features;
            std::vector<int> labels;
            features.reserve(train_idx.size());
            labels.reserve(train_idx.size());
            for (size_t idx : train_idx) {
                features.push_back(featurize_via_cache(cache, idx, cfg, hp,
                                                       tokenizer.pad_token()));
                labels.push_back(corpus.records[idx].label);
            }
            ProxyModel model = train(features, labels, hp, seed);
            features.clear();
            features.shrink_to_fit();

            ScoredSet scored;
            scored.reserve(test_idx.size());
            for (size_t idx : test_idx) {
                const Record& rec = corpus.records[idx];
                FeatureVec fv = featurize_via_cache(cache, idx, cfg, hp,
                                                    tokenizer.pad_token());
                scored.push_back({rec.record_id, rec.label, model.predict(fv)});
            }
            report_slots[ci] = make_report(id, scored, spec.bootstrap_iters,
                                           spec.alpha, seed, split_h);
        } catch (const std::exception& e) {
            failure_slots[ci] = FailedConfig{id, e.what()};
        }
    };

    const unsigned workers = std::max(
        1u, std::min(jobs, static_cast<unsigned>(configs.size())));
    if (workers <= 1) {
        for (size_t ci = 0; ci < configs.size(); ++ci) eval_one(ci);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    size_t ci = next.fetch_add(1);
                    if (ci >= configs.size()) return;
                    eval_one(ci);
                }
            });
        for (auto& t : pool) t.join();
    }

    SearchResult result;
    result.configs = configs;
    result.spec_hash = search_spec_hash(spec);
    for (size_t ci = 0; ci < configs.size(); ++ci) {
        if (report_slots[ci]) result.reports.push_back(std::move(*report_slots[ci]));
        else result.failed.push_back(std::move(*failure_slots[ci]));
    }
    sort_reports(result.reports);
    std::sort(result.failed.begin(), result.failed.end(),
              [](const FailedConfig& a, const FailedConfig& b) {
                  return a.config_id < b.config_id;
              });
    return result;
}

SearchResult evaluate_external_scores(const Corpus& corpus,
                                      const std::string& scores_path,
                                      const std::vector<SamplerConfig>& configs,
                                      size_t bootstrap_iters, double alpha,
                                      uint64_t master_seed) {
    if (!corpus.split_assignment)
        throw SchemaError("corpus is not split; run preprocess first");
    if (configs.empty()) throw SchemaError("no configs to evaluate");
    const uint64_t split_h = split_hash(*corpus.split_assignment);

    std::set<std::string> config_ids;
    for (const auto& cfg : configs) {
        cfg.validate();
        if (!config_ids.insert(cfg.config_id()).second)
            throw SchemaError("duplicate config_id: " + cfg.config_id());
    }

    std::unordered_map<std::string, int> test_label;
    for (const auto& rec : corpus.records) {
        auto it = corpus.split_assignment->by_record.find(rec.record_id);
        if (it == corpus.split_assignment->by_record.end())
            throw SchemaError("split assignment missing record " + rec.record_id);
        if (it->second == Split::Test) test_label.emplace(rec.record_id, rec.label);
    }
    const std::vector<std::string> test_ids =
        corpus.split_assignment->ids_in(Split::Test);

    std::ifstream in(scores_path);
    if (!in) throw SchemaError("cannot open scores file: " + scores_path);

    // (config_id -> record_id -> score), plus offender bookkeeping.
    std::map<std::string, std::unordered_map<std::string, double>> scores;
    std::vector<std::string> offenders;
    Fnv1a64 file_hash;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        file_hash.update(line);
        file_hash.update_byte('\n');
        if (line.empty()) continue;
        ordered_json obj;
        try {
            obj = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw SchemaError("line " + std::to_string(lineno) +
                              ": invalid JSON: " + e.what());
        }
        std::string record_id, config_id;
        double score = 0.0;
        try {
            record_id = obj.at("record_id").get<std::string>();
            config_id = obj.at("config_id").get<std::string>();
            score = obj.at("score").get<double>();
        } catch (const ordered_json::exception&) {
            throw SchemaError("line " + std::to_string(lineno) +
                              ": expected fields record_id, config_id, score");
        }
        if (!(score >= 0.0 && score <= 1.0))
            throw SchemaError("line " + std::to_string(lineno) +
                              ": score out of [0,1]");
        if (!config_ids.count(config_id)) {
            offenders.push_back("unknown config " + config_id);
            continue;
        }
        if (!test_label.count(record_id)) {
            offenders.push_back("record " + record_id + " not in test split");
            continue;
        }
        if (!scores[config_id].emplace(record_id, score).second)
            offenders.push_back("duplicate (" + record_id + ", " + config_id + ")");
    }
    for (const auto& id : config_ids) {
        const auto& have = scores[id];
        for (const auto& rid : test_ids)
            if (!have.count(rid))
                offenders.push_back("missing (" + rid + ", " + id + ")");
    }
    if (!offenders.empty()) {
        std::sort(offenders.begin(), offenders.end());
        std::string msg = "scores file does not cover (test record, config) "
                          "pairs exactly once: ";
        const size_t shown = std::min<size_t>(offenders.size(), 20);
        for (size_t i = 0; i < shown; ++i) {
            if (i) msg += "; ";
            msg += offenders[i];
        }
        if (offenders.size() > shown)
            msg += "; +" + std::to_string(offenders.size() - shown) + " more";
        throw SchemaError(msg);
    }

    SearchResult result;
    result.configs = configs;
    result.spec_hash = file_hash.digest();
    for (const auto& id : config_ids) {
        ScoredSet set;
        set.reserve(test_ids.size());
        for (const auto& rid : test_ids)
            set.push_back({rid, test_label.at(rid), scores.at(id).at(rid)});
        result.reports.push_back(make_report(id, set, bootstrap_iters, alpha,
                                             config_seed(master_seed, id),
                                             split_h));
    }
    sort_reports(result.reports);
    return result;
}

void rank_and_report(const SearchResult& result, const std::string& out_path) {
    if (result.reports.empty() && result.failed.empty())
        throw SchemaError("empty search result");

    std::unordered_map<std::string, const SamplerConfig*> by_id;
    for (const auto& cfg : result.configs) by_id.emplace(cfg.config_id(), &cfg);

    std::vector<EvalReport> reports = result.reports;
    sort_reports(reports);

    const EvalReport* baseline = nullptr;
    if (result.baseline_config_id) {
        for (const auto& r : reports)
            if (r.config_id == *result.baseline_config_id) baseline = &r;
        if (!baseline)
            throw SchemaError("baseline config not found: " +
                              *result.baseline_config_id);
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report file: " + out_path);
    out << "config_id,sources,p_params,n,auc,ci_low,ci_high,n_pos,n_neg";
    if (baseline) out << ",is_baseline,delta_vs_baseline";
    out << '\n';
    for (const auto& r : reports) {
        auto it = by_id.find(r.config_id);
        if (it == by_id.end())
            throw std::runtime_error("report for unknown config " + r.config_id);
        const SamplerConfig& cfg = *it->second;
        std::string sources, p_params;
        for (size_t i = 0; i < cfg.sources.size(); ++i) {
            if (i) sources += '+';
            sources += selector_name(cfg.sources[i]);
        }
        for (size_t i = 0; i < cfg.positions.size(); ++i) {
            if (i) p_params += '-';
            p_params += cfg.positions[i].name();
        }
        out << r.config_id << ',' << sources << ',' << p_params << ','
            << cfg.budget << ',' << format_fixed(r.auc) << ','
            << format_fixed(r.ci_low) << ',' << format_fixed(r.ci_high) << ','
            << r.n_pos << ',' << r.n_neg;
        if (baseline)
            out << ',' << (&r == baseline ? 1 : 0) << ','
                << format_fixed(compare(r, *baseline));
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + out_path);

    if (!result.failed.empty()) {
        const std::string failed_path = out_path + ".failed.csv";
        std::ofstream fout(failed_path, std::ios::binary);
        if (!fout)
            throw std::runtime_error("cannot write failed-config file: " + failed_path);
        fout << "config_id,error\n";
        for (const auto& f : result.failed)
            fout << f.config_id << ',' << csv_escape(f.message) << '\n';
        if (!fout) throw std::runtime_error("write failed: " + failed_path);
    }
}

}  // namespace notesampler

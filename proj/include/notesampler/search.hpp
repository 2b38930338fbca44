#pragma once

// The outer search over sampling configurations: enumerate, train/evaluate
// the proxy per configuration (or import external scores), rank by AUC.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "notesampler/corpus.hpp"
#include "notesampler/metrics.hpp"
#include "notesampler/model.hpp"
#include "notesampler/sampler.hpp"
#include "notesampler/tokenizer.hpp"

namespace notesampler {

struct SearchSpec {
    size_t budget = 512;
    // Positions tried for single-source options / for each side of two-source
    // options.
    std::vector<WindowPosition> single_note_p_values;  // default 0.0..1.0 step .1 + both
    std::vector<WindowPosition> mixing_p_values;       // default {0.0, 1.0, both}
    // Each option is 1 or 2 selectors; two-source options take the cartesian
    // square of mixing_p_values.
    std::vector<std::vector<NoteSelector>> note_options;  // default the 5 options
    uint64_t master_seed = 0;
    size_t bootstrap_iters = 1000;
    double alpha = 0.05;

    static SearchSpec defaults();
    void validate() const;  // SchemaError on bad p ranges / empty options
};

SearchSpec parse_search_spec_json(const std::string& json_text);
std::string search_spec_to_json(const SearchSpec& spec);  // canonical form
uint64_t search_spec_hash(const SearchSpec& spec);

// Sampling-config lists for the standalone export: either
// {"configs":[{...},...]}, a single {"sources":...,"positions":...,
// "budget":...} object, or a full search spec (which gets enumerated).
std::vector<SamplerConfig> parse_sample_spec_json(const std::string& json_text);

// Deterministic order: options as listed; single-source options expand over
// single_note_p_values; two-source options over mixing_p_values x
// mixing_p_values (first source's position varies slowest).
std::vector<SamplerConfig> enumerate_configs(const SearchSpec& spec);

// Seed for one configuration's train/eval runs.
uint64_t config_seed(uint64_t master_seed, const std::string& config_id);

struct FailedConfig {
    std::string config_id;
    std::string message;
};

struct SearchResult {
    std::vector<EvalReport> reports;        // sorted by (-auc, config_id)
    std::vector<FailedConfig> failed;       // sorted by config_id
    std::vector<SamplerConfig> configs;     // everything enumerated/evaluated
    std::optional<std::string> baseline_config_id;
    uint64_t spec_hash = 0;
};

// Trains and evaluates the proxy for every enumerated config. Requires the
// corpus to be filtered and carry a split assignment (SchemaError otherwise).
// One config's failure lands in `failed` without aborting the rest. `jobs`
// bounds parallel config evaluation; the result is identical for any value.
SearchResult run_search(const Corpus& corpus, const SearchSpec& spec,
                        const Tokenizer& tokenizer,
                        const ModelHyperparams& hp, unsigned jobs = 1);

// Builds reports from an external scores file (JSONL lines
// {"record_id","config_id","score"}) instead of training. The file must
// cover every (test record, config) pair exactly once with scores in [0,1];
// violations raise SchemaError listing the offenders.
SearchResult evaluate_external_scores(const Corpus& corpus,
                                      const std::string& scores_path,
                                      const std::vector<SamplerConfig>& configs,
                                      size_t bootstrap_iters, double alpha,
                                      uint64_t master_seed);

// CSV `config_id,sources,p_params,n,auc,ci_low,ci_high,n_pos,n_neg`, rows
// sorted by auc descending then config_id. When a baseline is set the columns
// `is_baseline,delta_vs_baseline` are appended (SchemaError if the baseline
// id has no report). Failed configs go to `<out_path>.failed.csv` (only
// written when there are any).
void rank_and_report(const SearchResult& result, const std::string& out_path);

}  // namespace notesampler

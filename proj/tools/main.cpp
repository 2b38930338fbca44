// notesampler CLI: preprocess -> synth/sample -> search -> report.
// Exit codes: 0 success, 1 runtime failure, 2 usage/schema error.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "notesampler/corpus.hpp"
#include "notesampler/manifest.hpp"
#include "notesampler/model.hpp"
#include "notesampler/sampler.hpp"
#include "notesampler/search.hpp"
#include "notesampler/synth.hpp"
#include "notesampler/tokenizer.hpp"

namespace {

using namespace notesampler;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Tokenizer make_tokenizer(const std::string& flag) {
    TokenizerSpec spec;
    if (flag == "whitespace") {
        spec.kind = TokenizerKind::Whitespace;
    } else if (flag == "char") {
        spec.kind = TokenizerKind::Char;
    } else if (flag.rfind("vocab:", 0) == 0) {
        spec.kind = TokenizerKind::VocabGreedy;
        spec.vocab_path = flag.substr(6);
        if (spec.vocab_path.empty())
            throw SchemaError("vocab tokenizer needs a path: vocab:<file>");
    } else {
        throw SchemaError("unknown tokenizer: " + flag +
                          " (expected whitespace, char, or vocab:<path>)");
    }
    return Tokenizer(spec);
}

std::vector<Split> parse_splits_flag(const std::string& flag) {
    if (flag == "all") return {Split::Train, Split::Val, Split::Test};
    return {parse_split(flag)};
}

std::string splits_sibling(const std::string& corpus_path) {
    return corpus_path + ".splits.csv";
}

// Corpus JSONL plus its sibling split CSV, as preprocess writes them.
Corpus load_split_corpus(const std::string& corpus_path) {
    Corpus corpus = load_corpus_jsonl(corpus_path);
    const std::string splits_path = splits_sibling(corpus_path);
    if (!std::ifstream(splits_path))
        throw SchemaError("missing split file " + splits_path +
                          "; run preprocess first");
    return attach_splits(std::move(corpus), load_splits_csv(splits_path));
}

void cmd_preprocess(const std::string& in, const std::string& out,
                    uint64_t seed) {
    Corpus corpus = load_corpus_jsonl(in);
    corpus = filter_records(scrub_corpus(std::move(corpus)));
    if (corpus.records.empty()) throw SchemaError("0 records after filter");
    corpus = split_corpus(std::move(corpus), seed);
    save_corpus_jsonl(corpus, out);
    save_splits_csv(*corpus.split_assignment, splits_sibling(out));

    RunManifest m;
    m.command = "preprocess";
    m.add_param("corpus", in);
    m.add_param("out", out);
    m.add_param("seed", std::to_string(seed));
    m.add_input(in);
    m.master_seed = seed;
    m.write(out + ".manifest.json");
}

void cmd_synth(const std::string& spec_path, const std::string& out,
               std::optional<uint64_t> seed_flag) {
    SynthSpec spec = spec_path.empty() ? SynthSpec::defaults()
                                       : parse_synth_spec_json(read_file(spec_path));
    if (seed_flag) spec.seed = *seed_flag;
    Corpus corpus = generate(spec);
    save_corpus_jsonl(corpus, out);
    save_ground_truth_json(ground_truth(spec), out + ".ground_truth.json");

    RunManifest m;
    m.command = "synth";
    m.add_param("spec", spec_path.empty() ? "(defaults)" : spec_path);
    m.add_param("out", out);
    m.add_param("seed", std::to_string(spec.seed));
    if (!spec_path.empty()) m.add_input(spec_path);
    m.master_seed = spec.seed;
    m.write(out + ".manifest.json");
}

void cmd_sample(const std::string& corpus_path, const std::string& spec_path,
                const std::string& out, const std::string& tokenizer_flag,
                const std::string& splits_flag) {
    Corpus corpus = load_split_corpus(corpus_path);
    std::vector<SamplerConfig> configs = parse_sample_spec_json(read_file(spec_path));
    Tokenizer tokenizer = make_tokenizer(tokenizer_flag);
    export_samples(corpus, configs, tokenizer, parse_splits_flag(splits_flag), out);

    RunManifest m;
    m.command = "sample";
    m.add_param("corpus", corpus_path);
    m.add_param("spec", spec_path);
    m.add_param("out", out);
    m.add_param("tokenizer", tokenizer_flag);
    m.add_param("splits", splits_flag);
    m.add_input(corpus_path);
    m.add_input(splits_sibling(corpus_path));
    m.add_input(spec_path);
    m.write(out + ".manifest.json");
}

void cmd_search(const std::string& corpus_path, const std::string& spec_path,
                const std::string& out, std::optional<uint64_t> seed_flag,
                const std::string& tokenizer_flag,
                const std::string& import_scores, const std::string& baseline,
                unsigned jobs) {
    Corpus corpus = load_split_corpus(corpus_path);
    SearchSpec spec = spec_path.empty() ? SearchSpec::defaults()
                                        : parse_search_spec_json(read_file(spec_path));
    if (seed_flag) spec.master_seed = *seed_flag;
    spec.validate();

    SearchResult result;
    if (!import_scores.empty()) {
        result = evaluate_external_scores(corpus, import_scores,
                                          enumerate_configs(spec),
                                          spec.bootstrap_iters, spec.alpha,
                                          spec.master_seed);
    } else {
        Tokenizer tokenizer = make_tokenizer(tokenizer_flag);
        ModelHyperparams hp;
        result = run_search(corpus, spec, tokenizer, hp, jobs);
    }
    if (!baseline.empty()) result.baseline_config_id = baseline;
    rank_and_report(result, out);

    RunManifest m;
    m.command = "search";
    m.add_param("corpus", corpus_path);
    m.add_param("spec", spec_path.empty() ? "(defaults)" : spec_path);
    m.add_param("out", out);
    m.add_param("seed", std::to_string(spec.master_seed));
    m.add_param("tokenizer", tokenizer_flag);
    if (!import_scores.empty()) m.add_param("import_scores", import_scores);
    if (!baseline.empty()) m.add_param("baseline", baseline);
    // --jobs is omitted on purpose: it must never change output bytes.
    m.add_input(corpus_path);
    m.add_input(splits_sibling(corpus_path));
    if (!spec_path.empty()) m.add_input(spec_path);
    if (!import_scores.empty()) m.add_input(import_scores);
    m.master_seed = spec.master_seed;
    m.write(out + ".manifest.json");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Select high-signal sections of long multi-note records under "
                 "a fixed token budget, and rank sampling configurations by "
                 "held-out AUC."};
    app.require_subcommand(1);

    std::string pre_corpus, pre_out;
    uint64_t pre_seed = 42;
    auto* pre = app.add_subcommand(
        "preprocess", "Scrub de-id placeholders, filter, and split a corpus");
    pre->add_option("--corpus", pre_corpus, "Input corpus JSONL")->required();
    pre->add_option("--out", pre_out, "Output corpus JSONL")->required();
    pre->add_option("--seed", pre_seed, "Split seed (default 42)");
    pre->callback([&] { cmd_preprocess(pre_corpus, pre_out, pre_seed); });

    std::string synth_spec, synth_out;
    uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand(
        "synth", "Generate a synthetic corpus with a planted positional signal");
    synth->add_option("--spec", synth_spec, "Generator spec JSON (built-in defaults when omitted)");
    synth->add_option("--out", synth_out, "Output corpus JSONL")->required();
    auto* synth_seed_opt =
        synth->add_option("--seed", synth_seed, "Overrides the spec's seed");
    synth->callback([&] {
        cmd_synth(synth_spec, synth_out,
                  synth_seed_opt->count() ? std::optional<uint64_t>(synth_seed)
                                          : std::nullopt);
    });

    std::string sample_corpus, sample_spec, sample_out;
    std::string sample_tokenizer = "whitespace", sample_splits = "test";
    auto* sample = app.add_subcommand(
        "sample", "Export budgeted token windows as JSONL");
    sample->add_option("--corpus", sample_corpus, "Preprocessed corpus JSONL")->required();
    sample->add_option("--spec", sample_spec,
                       "Config JSON: one config, {\"configs\":[...]}, or a search spec")
        ->required();
    sample->add_option("--out", sample_out, "Output samples JSONL")->required();
    sample->add_option("--tokenizer", sample_tokenizer,
                       "whitespace | char | vocab:<path> (default whitespace)");
    sample->add_option("--splits", sample_splits,
                       "train | val | test | all (default test)");
    sample->callback([&] {
        cmd_sample(sample_corpus, sample_spec, sample_out, sample_tokenizer,
                   sample_splits);
    });

    std::string search_corpus, search_spec, search_out;
    std::string search_tokenizer = "whitespace", search_scores, search_baseline;
    uint64_t search_seed = 0;
    unsigned search_jobs = 1;
    auto* search = app.add_subcommand(
        "search", "Train/evaluate the proxy per sampling config and rank by AUC");
    search->add_option("--corpus", search_corpus, "Preprocessed corpus JSONL")->required();
    search->add_option("--spec", search_spec, "Search spec JSON (built-in defaults when omitted)");
    search->add_option("--out", search_out, "Output report CSV")->required();
    auto* search_seed_opt = search->add_option(
        "--seed", search_seed, "Overrides the spec's master_seed");
    search->add_option("--tokenizer", search_tokenizer,
                       "whitespace | char | vocab:<path> (default whitespace)");
    search->add_option("--import-scores", search_scores,
                       "Score external predictions (JSONL) instead of training the proxy");
    search->add_option("--baseline", search_baseline,
                       "config_id to report AUC deltas against");
    search->add_option("--jobs", search_jobs,
                       "Parallel config evaluations (default 1; never changes results)");
    search->callback([&] {
        cmd_search(search_corpus, search_spec, search_out,
                   search_seed_opt->count() ? std::optional<uint64_t>(search_seed)
                                            : std::nullopt,
                   search_tokenizer, search_scores, search_baseline, search_jobs);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const SchemaError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

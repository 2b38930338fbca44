#pragma once

// Corpus model and preprocessing: JSONL load/save, de-identification scrub,
// record filtering, note selection, and the label-stratified split.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "notesampler/common.hpp"

namespace notesampler {

struct Note {
    std::string note_id;
    std::string category;   // e.g. "nursing", "discharge"
    std::string timestamp;  // ISO-8601 "YYYY-MM-DDTHH:MM:SS"; lexicographic == chronological
    std::string text;
};

struct Record {
    std::string record_id;
    int label = 0;  // 0 or 1
    std::vector<Note> notes;
};

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);  // SchemaError on anything else

struct SplitAssignment {
    // record_id -> split; covers exactly the records of the corpus it was
    // built from.
    std::unordered_map<std::string, Split> by_record;

    std::vector<std::string> ids_in(Split s) const;  // sorted record_ids
};

struct Corpus {
    std::vector<Record> records;
    std::optional<SplitAssignment> split_assignment;
};

// --- JSONL I/O ----------------------------------------------------------
// One record per line: {"record_id","label","notes":[{"note_id","category",
// "timestamp","text"},...]}. Malformed lines raise SchemaError naming the
// 1-based line and the problem, e.g. "line 3: missing field label".
Corpus load_corpus_jsonl(const std::string& path);
void save_corpus_jsonl(const Corpus& corpus, const std::string& path);

// Split CSV: header "record_id,split", rows sorted by record_id.
void save_splits_csv(const SplitAssignment& splits, const std::string& path);
SplitAssignment load_splits_csv(const std::string& path);

// --- Preprocessing ------------------------------------------------------

// Deletes every bracketed de-identification placeholder "[** ... **]"
// (non-greedy, may span newlines). Unpaired "[**" is left as-is. Idempotent:
// scrub_deid(scrub_deid(t)) == scrub_deid(t) for all t.
std::string scrub_deid(std::string_view text);

// Scrubs every note's text; notes whose text becomes empty are dropped from
// their record. Record order and note order are preserved.
Corpus scrub_corpus(Corpus corpus);

// Keeps exactly the records that have at least one nursing note and at least
// one discharge note with non-empty post-scrub text. Idempotent; order
// preserved.
Corpus filter_records(Corpus corpus);

// --- Note selection -----------------------------------------------------
// Selectors assume the record passed the filter; they throw std::runtime_error
// if the requested category is absent. Ordering key is (timestamp, note_id).

enum class NoteSelector { FirstNursing, LastNursing, Discharge };

std::string_view selector_name(NoteSelector s);
NoteSelector parse_selector(std::string_view name);  // SchemaError on anything else

const Note& select_note(const Record& record, NoteSelector selector);

// --- Split --------------------------------------------------------------

// Label-stratified 75/12.5/12.5 split, deterministic in (corpus, seed).
// Guarantees, for N = record count and each set s with ideal fraction f_s:
//   |count(s) - f_s * N| <= 1,  and per label y: |count(y,s) - f_s * n_y| <= 1.
// Throws std::runtime_error("too small to split") when the corpus has fewer
// than 8 records. Returns the corpus with split_assignment populated.
Corpus split_corpus(Corpus corpus, uint64_t seed);

// Attaches a previously saved assignment, validating that it covers exactly
// the corpus's records (SchemaError otherwise).
Corpus attach_splits(Corpus corpus, SplitAssignment splits);

// Set sizes the split uses; exposed for tests. Returns {train,val,test} for
// a given group size pair (label0_count, label1_count).
struct SplitQuota {
    size_t train, val, test;
};
struct StratifiedQuota {
    SplitQuota total, label0, label1;
};
StratifiedQuota split_quota(size_t n_label0, size_t n_label1);

// FNV-1a-64 over the sorted test-set record_ids (each id then a '\n').
// Used to detect evaluations from mismatched splits.
uint64_t split_hash(const SplitAssignment& splits);

}  // namespace notesampler

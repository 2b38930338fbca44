#include "notesampler/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace notesampler {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kNursing = "nursing";
constexpr std::string_view kDischarge = "discharge";

std::string line_err(size_t lineno, const std::string& what) {
    return "line " + std::to_string(lineno) + ": " + what;
}

const ordered_json& require_field(const ordered_json& obj, const char* name,
                                  size_t lineno) {
    auto it = obj.find(name);
    if (it == obj.end())
        throw SchemaError(line_err(lineno, std::string("missing field ") + name));
    return *it;
}

std::string require_string(const ordered_json& obj, const char* name,
                           size_t lineno) {
    const auto& v = require_field(obj, name, lineno);
    if (!v.is_string())
        throw SchemaError(line_err(lineno, std::string("field ") + name +
                                               " must be a string"));
    return v.get<std::string>();
}

// (timestamp, note_id) ordering used everywhere notes are ranked.
bool note_before(const Note& a, const Note& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.note_id < b.note_id;
}

bool csv_safe(const std::string& id) {
    return id.find_first_of(",\"\r\n") == std::string::npos;
}

}  // namespace

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw SchemaError("unknown split name: " + std::string(name));
}

std::vector<std::string> SplitAssignment::ids_in(Split s) const {
    std::vector<std::string> ids;
    for (const auto& [id, sp] : by_record)
        if (sp == s) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

Corpus load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open corpus file: " + path);
    Corpus corpus;
    std::unordered_map<std::string, size_t> seen_ids;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json obj;
        try {
            obj = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw SchemaError(line_err(lineno, std::string("invalid JSON: ") + e.what()));
        }
        if (!obj.is_object())
            throw SchemaError(line_err(lineno, "record must be a JSON object"));

        Record rec;
        rec.record_id = require_string(obj, "record_id", lineno);
        if (!csv_safe(rec.record_id))
            throw SchemaError(
                line_err(lineno, "record_id not CSV-safe: " + rec.record_id));
        const auto& label = require_field(obj, "label", lineno);
        if (!label.is_number_integer() ||
            (label.get<int64_t>() != 0 && label.get<int64_t>() != 1))
            throw SchemaError(line_err(lineno, "field label must be 0 or 1"));
        rec.label = label.get<int>();

        const auto& notes = require_field(obj, "notes", lineno);
        if (!notes.is_array())
            throw SchemaError(line_err(lineno, "field notes must be an array"));
        for (const auto& nj : notes) {
            if (!nj.is_object())
                throw SchemaError(line_err(lineno, "note must be a JSON object"));
            Note note;
            note.note_id = require_string(nj, "note_id", lineno);
            note.category = require_string(nj, "category", lineno);
            note.timestamp = require_string(nj, "timestamp", lineno);
            note.text = require_string(nj, "text", lineno);
            rec.notes.push_back(std::move(note));
        }
        std::stable_sort(rec.notes.begin(), rec.notes.end(), note_before);

        auto [it, inserted] = seen_ids.emplace(rec.record_id, lineno);
        if (!inserted)
            throw SchemaError(line_err(lineno, "duplicate record_id " + rec.record_id +
                                                   " (first seen line " +
                                                   std::to_string(it->second) + ")"));
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path);
    for (const auto& rec : corpus.records) {
        ordered_json obj;
        obj["record_id"] = rec.record_id;
        obj["label"] = rec.label;
        ordered_json notes = ordered_json::array();
        for (const auto& n : rec.notes) {
            ordered_json nj;
            nj["note_id"] = n.note_id;
            nj["category"] = n.category;
            nj["timestamp"] = n.timestamp;
            nj["text"] = n.text;
            notes.push_back(std::move(nj));
        }
        obj["notes"] = std::move(notes);
        out << obj.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_splits_csv(const SplitAssignment& splits, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write splits file: " + path);
    std::vector<std::string> ids;
    ids.reserve(splits.by_record.size());
    for (const auto& [id, _] : splits.by_record) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    out << "record_id,split\n";
    for (const auto& id : ids) {
        if (!csv_safe(id))
            throw SchemaError("record_id not CSV-safe: " + id);
        out << id << ',' << split_name(splits.by_record.at(id)) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

SplitAssignment load_splits_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open splits file: " + path);
    SplitAssignment splits;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "record_id,split")
                throw SchemaError(line_err(lineno, "expected header record_id,split"));
            continue;
        }
        size_t comma = line.rfind(',');
        if (comma == std::string::npos)
            throw SchemaError(line_err(lineno, "expected record_id,split row"));
        std::string id = line.substr(0, comma);
        Split sp = parse_split(line.substr(comma + 1));
        if (!splits.by_record.emplace(id, sp).second)
            throw SchemaError(line_err(lineno, "duplicate record_id " + id));
    }
    return splits;
}

std::string scrub_deid(std::string_view text) {
    // One non-greedy delete pass; the caller loops to a fixpoint because a
    // deletion can splice a new marker together across the removed span.
    auto pass = [](std::string_view s, bool& changed) {
        std::string out;
        out.reserve(s.size());
        size_t i = 0;
        while (i < s.size()) {
            size_t open = s.find("[**", i);
            if (open == std::string_view::npos) {
                out.append(s.substr(i));
                break;
            }
            size_t close = s.find("**]", open + 3);
            if (close == std::string_view::npos) {
                // Unmatched opener: keep it and everything before it.
                out.append(s.substr(i, open + 3 - i));
                i = open + 3;
            } else {
                out.append(s.substr(i, open - i));
                i = close + 3;
                changed = true;
            }
        }
        return out;
    };

    bool changed = false;
    std::string result = pass(text, changed);
    while (changed) {
        changed = false;
        result = pass(result, changed);
    }
    return result;
}

Corpus scrub_corpus(Corpus corpus) {
    for (auto& rec : corpus.records) {
        std::vector<Note> kept;
        kept.reserve(rec.notes.size());
        for (auto& note : rec.notes) {
            note.text = scrub_deid(note.text);
            if (!note.text.empty()) kept.push_back(std::move(note));
        }
        rec.notes = std::move(kept);
    }
    return corpus;
}

Corpus filter_records(Corpus corpus) {
    std::vector<Record> kept;
    kept.reserve(corpus.records.size());
    for (auto& rec : corpus.records) {
        bool has_nursing = false, has_discharge = false;
        for (const auto& note : rec.notes) {
            if (note.category != kNursing && note.category != kDischarge) continue;
            // Judge by post-scrub emptiness so the filter commutes with
            // scrubbing (scrub_deid is idempotent).
            if (scrub_deid(note.text).empty()) continue;
            if (note.category == kNursing) has_nursing = true;
            else has_discharge = true;
        }
        if (has_nursing && has_discharge) kept.push_back(std::move(rec));
    }
    corpus.records = std::move(kept);
    return corpus;
}

std::string_view selector_name(NoteSelector s) {
    switch (s) {
        case NoteSelector::FirstNursing: return "first_nursing";
        case NoteSelector::LastNursing: return "last_nursing";
        case NoteSelector::Discharge: return "discharge";
    }
    return "?";
}

NoteSelector parse_selector(std::string_view name) {
    if (name == "first_nursing") return NoteSelector::FirstNursing;
    if (name == "last_nursing") return NoteSelector::LastNursing;
    if (name == "discharge") return NoteSelector::Discharge;
    throw SchemaError("unknown note selector: " + std::string(name));
}

const Note& select_note(const Record& record, NoteSelector selector) {
    std::string_view category =
        selector == NoteSelector::Discharge ? kDischarge : kNursing;
    const Note* best = nullptr;
    // FirstNursing takes the minimum (timestamp, note_id); LastNursing and
    // Discharge (latest discharge) take the maximum.
    bool want_min = selector == NoteSelector::FirstNursing;
    for (const auto& note : record.notes) {
        if (note.category != category) continue;
        if (!best || (want_min ? note_before(note, *best)
                               : note_before(*best, note)))
            best = &note;
    }
    if (!best)
        throw std::runtime_error("selector " + std::string(selector_name(selector)) +
                                 " has no matching note in record " +
                                 record.record_id);
    return *best;
}

StratifiedQuota split_quota(size_t n_label0, size_t n_label1) {
    const size_t N = n_label0 + n_label1;
    // Set sizes: largest remainder on N * (6/8, 1/8, 1/8), ties favoring
    // train, then val, then test.
    std::array<size_t, 3> weight = {6, 1, 1};
    std::array<size_t, 3> total{}, rem{};
    size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
        size_t num = N * weight[s];
        total[s] = num / 8;
        rem[s] = num % 8;
        assigned += total[s];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rem[a] > rem[b]; });
    for (size_t leftover = N - assigned, k = 0; k < leftover; ++k)
        ++total[order[k]];

    // Label-0 counts: largest remainder against the scaled targets
    // n_label0 * total[s] / N, exact in integers. Label 1 takes the rest;
    // both labels then deviate from every ideal by at most one record.
    std::array<size_t, 3> a0{}, rem0{};
    if (N > 0) {
        size_t assigned0 = 0;
        for (int s = 0; s < 3; ++s) {
            size_t num = n_label0 * total[s];
            a0[s] = num / N;
            rem0[s] = num % N;
            assigned0 += a0[s];
        }
        std::array<int, 3> order0 = {0, 1, 2};
        std::stable_sort(order0.begin(), order0.end(),
                         [&](int a, int b) { return rem0[a] > rem0[b]; });
        for (size_t leftover = n_label0 - assigned0, k = 0; k < leftover; ++k)
            ++a0[order0[k]];
    }

    StratifiedQuota q;
    q.total = {total[0], total[1], total[2]};
    q.label0 = {a0[0], a0[1], a0[2]};
    q.label1 = {total[0] - a0[0], total[1] - a0[1], total[2] - a0[2]};
    return q;
}

Corpus split_corpus(Corpus corpus, uint64_t seed) {
    if (corpus.records.size() < 8)
        throw std::runtime_error("too small to split");

    std::vector<size_t> group0, group1;
    for (size_t i = 0; i < corpus.records.size(); ++i)
        (corpus.records[i].label == 0 ? group0 : group1).push_back(i);

    StratifiedQuota q = split_quota(group0.size(), group1.size());

    SplitAssignment splits;
    auto assign_group = [&](std::vector<size_t>& group, const SplitQuota& quota,
                            uint64_t stream_index) {
        Rng rng = Rng::stream(seed, stream_index);
        rng.shuffle(group);
        size_t pos = 0;
        for (auto [count, sp] : {std::pair{quota.train, Split::Train},
                                 std::pair{quota.val, Split::Val},
                                 std::pair{quota.test, Split::Test}}) {
            for (size_t k = 0; k < count; ++k, ++pos)
                splits.by_record.emplace(corpus.records[group[pos]].record_id, sp);
        }
    };
    assign_group(group0, q.label0, 0);
    assign_group(group1, q.label1, 1);

    corpus.split_assignment = std::move(splits);
    return corpus;
}

Corpus attach_splits(Corpus corpus, SplitAssignment splits) {
    for (const auto& rec : corpus.records)
        if (!splits.by_record.count(rec.record_id))
            throw SchemaError("split assignment missing record " + rec.record_id);
    if (splits.by_record.size() != corpus.records.size())
        for (const auto& [id, _] : splits.by_record) {
            bool known = std::any_of(corpus.records.begin(), corpus.records.end(),
                                     [&](const Record& r) { return r.record_id == id; });
            if (!known)
                throw SchemaError("split assignment references unknown record " + id);
        }
    corpus.split_assignment = std::move(splits);
    return corpus;
}

uint64_t split_hash(const SplitAssignment& splits) {
    Fnv1a64 h;
    for (const auto& id : splits.ids_in(Split::Test)) {
        h.update(id);
        h.update_byte('\n');
    }
    return h.digest();
}

}  // namespace notesampler

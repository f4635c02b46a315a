#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "itemval/csv.hpp"
#include "itemval/errors.hpp"
#include "itemval/numfmt.hpp"

namespace itemval {

struct PoolItem {
    std::string id;
    std::string text;
};

struct ItemPool {
    std::vector<PoolItem> items;
    std::size_t size() const { return items.size(); }
};

// Pool CSV: header id,text.
inline ItemPool parse_pool(std::istream& in, const std::string& source) {
    CsvReader reader(in, source);
    std::vector<std::string> row;
    if (!reader.next(row) || row.size() < 2 || row[0] != "id" || row[1] != "text")
        throw InputError(source + ": expected header id,text");
    ItemPool pool;
    std::set<std::string> seen;
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        const std::string where = source + ":" + std::to_string(reader.line());
        if (row.size() < 2) throw InputError(where + ": pool row needs id,text");
        if (row[1].empty()) throw InputError(where + ": item '" + row[0] + "' has empty text");
        if (!seen.insert(row[0]).second)
            throw InputError(where + ": duplicate pool id '" + row[0] + "'");
        pool.items.push_back({row[0], row[1]});
    }
    return pool;
}

inline ItemPool parse_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open pool file: " + path);
    return parse_pool(in, path);
}

// Binomial coefficient via the multiplicative form; every intermediate step
// is an exact binomial so the division never truncates. k > n yields 0
// (nothing to choose), matching the degenerate pools below.
inline std::uint64_t count_pairs(std::uint64_t n, std::uint64_t k = 2) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        unsigned __int128 t = static_cast<unsigned __int128>(result) * (n - k + i);
        t /= i;
        if (t > UINT64_MAX) throw InputError("count_pairs: result overflows 64 bits");
        result = static_cast<std::uint64_t>(t);
    }
    return result;
}

struct PairRecord {
    std::uint64_t index_a = 0;
    std::uint64_t index_b = 0; // always index_a < index_b
    std::string_view text_a;
    std::string_view text_b;
    std::optional<double> score; // nullopt = UNSCORED
};

// Streams all unordered pairs (a, b) with a < b in lexicographic order.
// Holds only the cursor; memory use is independent of pool size.
class PairEnumerator {
public:
    explicit PairEnumerator(const ItemPool& pool) : pool_(&pool) {}

    std::uint64_t total() const { return count_pairs(pool_->size(), 2); }

    bool next(PairRecord& out) {
        const std::uint64_t n = pool_->size();
        if (n < 2 || a_ >= n - 1) return false;
        out.index_a = a_;
        out.index_b = b_;
        out.text_a = pool_->items[a_].text;
        out.text_b = pool_->items[b_].text;
        out.score.reset();
        if (++b_ == n) {
            ++a_;
            b_ = a_ + 1;
        }
        return true;
    }

    // Fast-forwards the cursor; used when resuming from a checkpoint.
    void skip(std::uint64_t count) {
        const std::uint64_t n = pool_->size();
        while (count > 0 && n >= 2 && a_ < n - 1) {
            const std::uint64_t row_left = n - b_;
            if (count >= row_left) {
                count -= row_left;
                ++a_;
                b_ = a_ + 1;
            } else {
                b_ += count;
                count = 0;
            }
        }
    }

private:
    const ItemPool* pool_;
    std::uint64_t a_ = 0;
    std::uint64_t b_ = 1;
};

enum class PairFormat { Jsonl, Csv };

inline constexpr std::size_t kHistogramBins = 20;
using ScoreHistogram = std::array<std::uint64_t, kHistogramBins>;

inline std::size_t histogram_bin(double score) {
    // 20 uniform bins over [-1, 1]; the right edge lands in the last bin
    auto bin = static_cast<long>(std::floor((score + 1.0) * 10.0));
    if (bin < 0) bin = 0;
    if (bin >= static_cast<long>(kHistogramBins)) bin = kHistogramBins - 1;
    return static_cast<std::size_t>(bin);
}

struct DatasetSummary {
    std::uint64_t records_written = 0;
    ScoreHistogram histogram{};

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json doc;
        doc["records_written"] = records_written;
        doc["score_histogram"] = histogram;
        return doc;
    }
};

inline std::string format_pair_line(const PairRecord& rec, PairFormat format) {
    if (!rec.score) throw InputError("export: unscored record reached the writer");
    if (format == PairFormat::Jsonl) {
        std::string out = "{\"text_a\":";
        out += nlohmann::json(rec.text_a).dump();
        out += ",\"text_b\":";
        out += nlohmann::json(rec.text_b).dump();
        out += ",\"score\":";
        out += format_double(*rec.score);
        out += "}\n";
        return out;
    }
    std::string out = csv_escape(std::string(rec.text_a));
    out += ',';
    out += csv_escape(std::string(rec.text_b));
    out += ',';
    out += format_double(*rec.score);
    out += '\n';
    return out;
}

inline const char* pair_csv_header() { return "text_a,text_b,score\n"; }

// ---------------------------------------------------------------------------
// Checkpointing. The checkpoint file holds the count of fully written
// records as decimal text; it lives next to the dataset as <output>.ckpt.

inline std::string checkpoint_path(const std::string& output_path) {
    return output_path + ".ckpt";
}

inline std::optional<std::uint64_t> read_checkpoint(const std::string& output_path) {
    std::ifstream in(checkpoint_path(output_path));
    if (!in) return std::nullopt;
    std::uint64_t count = 0;
    if (!(in >> count))
        throw InputError("corrupt checkpoint file: " + checkpoint_path(output_path));
    return count;
}

inline void write_checkpoint(const std::string& output_path, std::uint64_t count) {
    const std::string path = checkpoint_path(output_path);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint: " + tmp);
        out << count << "\n";
        if (!out.flush()) throw IoError("checkpoint write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline void remove_checkpoint(const std::string& output_path) {
    std::error_code ec;
    std::filesystem::remove(checkpoint_path(output_path), ec);
}

// Scores one batch of records; must return one score per record, in order.
// Throws RemoteError when the backend fails for good.
using BatchScorer = std::function<std::vector<double>(const std::vector<PairRecord>&)>;

struct PairRunOptions {
    std::string output_path;
    PairFormat format = PairFormat::Jsonl;
    std::size_t batch_size = 16;
    bool resume = false;
};

namespace detail {

// Re-reads the first `records` records of an interrupted output file:
// rebuilds the score histogram and returns the byte offset where writing
// must continue. Quoted CSV text may span lines, so records are re-parsed
// rather than counted by newline.
inline std::uint64_t scan_existing_records(const std::string& path, PairFormat format,
                                           std::uint64_t records, ScoreHistogram& hist) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("resume: cannot open existing output: " + path);
    if (format == PairFormat::Jsonl) {
        std::string line;
        std::uint64_t seen = 0;
        std::uint64_t offset = 0;
        while (seen < records && std::getline(in, line)) {
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error&) {
                throw InputError("resume: corrupt record " + std::to_string(seen + 1) + " in " +
                                 path);
            }
            hist[histogram_bin(rec.at("score").get<double>())]++;
            offset += line.size() + 1;
            ++seen;
        }
        if (seen < records)
            throw InputError("resume: checkpoint claims " + std::to_string(records) +
                             " records but " + path + " holds " + std::to_string(seen));
        return offset;
    }
    CsvReader reader(in, path);
    std::vector<std::string> row;
    if (!reader.next(row) || row.size() != 3 || row[0] != "text_a")
        throw InputError("resume: " + path + " is missing the text_a,text_b,score header");
    for (std::uint64_t seen = 0; seen < records; ++seen) {
        if (!reader.next(row) || row.size() != 3)
            throw InputError("resume: checkpoint claims " + std::to_string(records) +
                             " records but " + path + " holds " + std::to_string(seen));
        hist[histogram_bin(parse_double(row[2], path))]++;
    }
    return static_cast<std::uint64_t>(in.tellg());
}

} // namespace detail

// Enumerate -> score -> export with checkpoints after every fully written
// batch. A run interrupted by a scorer failure can be resumed and produces
// output byte-identical to an uninterrupted run.
inline DatasetSummary run_pair_dataset(const ItemPool& pool, const BatchScorer& scorer,
                                       const PairRunOptions& opt) {
    const std::uint64_t total = count_pairs(pool.size(), 2);
    ScoreHistogram hist{};
    std::uint64_t written = 0;

    std::ofstream out;
    if (opt.resume) {
        auto ckpt = read_checkpoint(opt.output_path);
        if (ckpt) {
            if (*ckpt > total)
                throw InputError("resume: checkpoint count " + std::to_string(*ckpt) +
                                 " exceeds total pair count " + std::to_string(total));
            written = *ckpt;
            const std::uint64_t offset =
                detail::scan_existing_records(opt.output_path, opt.format, written, hist);
            std::filesystem::resize_file(opt.output_path, offset);
            out.open(opt.output_path, std::ios::binary | std::ios::app);
        }
    }
    if (!out.is_open()) {
        written = 0;
        hist = ScoreHistogram{};
        out.open(opt.output_path, std::ios::binary | std::ios::trunc);
        if (out && opt.format == PairFormat::Csv) out << pair_csv_header();
    }
    if (!out) throw IoError("cannot open output: " + opt.output_path);
    write_checkpoint(opt.output_path, written);

    PairEnumerator en(pool);
    en.skip(written);

    std::vector<PairRecord> batch;
    batch.reserve(opt.batch_size);
    bool done = false;
    while (!done) {
        batch.clear();
        PairRecord rec;
        while (batch.size() < opt.batch_size && en.next(rec)) batch.push_back(rec);
        if (batch.empty()) break;
        done = batch.size() < opt.batch_size;

        std::vector<double> scores = scorer(batch);
        if (scores.size() != batch.size())
            throw RemoteError("scorer returned " + std::to_string(scores.size()) +
                              " scores for a " + std::to_string(batch.size()) + "-pair batch");
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (!std::isfinite(scores[i]) || scores[i] < -1.0 || scores[i] > 1.0)
                throw RemoteError("score out of range for pair (" +
                                  std::to_string(batch[i].index_a) + ", " +
                                  std::to_string(batch[i].index_b) + "): " +
                                  format_double(scores[i]));
            batch[i].score = scores[i];
        }
        for (const auto& b : batch) {
            out << format_pair_line(b, opt.format);
            hist[histogram_bin(*b.score)]++;
        }
        if (!out.flush()) throw IoError("write failed: " + opt.output_path);
        written += batch.size();
        write_checkpoint(opt.output_path, written);
    }

    if (written != total)
        throw RuntimeFailure("pair run ended at " + std::to_string(written) + " of " +
                             std::to_string(total) + " records");
    remove_checkpoint(opt.output_path);
    DatasetSummary summary;
    summary.records_written = written;
    summary.histogram = hist;
    return summary;
}

} // namespace itemval

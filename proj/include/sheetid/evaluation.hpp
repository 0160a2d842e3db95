#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sheetid/ingestion.hpp"
#include "sheetid/ngram_index.hpp"
#include "sheetid/query_engine.hpp"

namespace sheetid {

/// Condition 1: the query's own PDF is searchable. Condition 2: it is
/// excluded, and only queries whose piece has another PDF are evaluated.
enum class Condition { exact_present = 1, exact_removed = 2 };

struct EvalOptions {
    Condition condition = Condition::exact_present;
    /// Runs queries concurrently; latency is then not reported.
    bool parallel = false;
    std::size_t threads = 0;
    /// Runs the first query once, untimed, before measuring.
    bool warmup = true;
};

struct QueryRecord {
    std::string query_id;
    std::size_t rank = 0;
    double reciprocal_rank = 0.0;
    double seconds = 0.0;
    std::size_t fingerprints = 0;
    std::size_t postings = 0;
};

struct EvalReport {
    double mrr = 0.0;
    std::vector<QueryRecord> records;
    bool latency_reported = true;
    double latency_mean = 0.0;
    /// Sample standard deviation (n - 1).
    double latency_std = 0.0;
    SearchConfig config;
    Condition condition = Condition::exact_present;
    /// Condition 2 queries dropped because their piece has a single PDF.
    std::size_t skipped = 0;
    std::size_t piece_count = 0;
};

/// Mean of 1/rank. Zero for an empty list. Throws UsageError on rank 0.
[[nodiscard]] double mean_reciprocal_rank(std::span<const std::size_t> ranks);

/// Runs every query (subset for condition 2). Truth ids are resolved against
/// the bundle before any timing; unresolvable ids throw InputError.
[[nodiscard]] EvalReport evaluate(const QuerySet& queries, const IndexBundle& bundle, const SearchConfig& config,
                                  const EvalOptions& options = {});

/// query_id,rank,rr,seconds,fingerprints,postings
void write_report_csv(const EvalReport& report, std::ostream& out);
void write_report_json(const EvalReport& report, std::ostream& out);
void write_report_summary(const EvalReport& report, std::ostream& out);

struct DistributionEntry {
    FingerprintKey key;
    std::uint64_t count = 0;
    /// Dynamic export: the key's database count exceeds gamma, so it could
    /// only have been emitted at the length cap.
    bool cap_forced = false;
};

/// Fingerprint values ordered from most to least frequent.
struct DistributionExport {
    std::string mode;
    std::vector<DistributionEntry> entries;

    [[nodiscard]] std::uint64_t total() const noexcept;
    [[nodiscard]] std::uint64_t peak(bool exclude_cap_forced = false) const noexcept;
};

/// Fixed mode: posting-list length of every stored n-gram key.
/// Dynamic mode: how often each key is emitted when the dynamic scheme runs
/// over every PDF sequence in `scores`.
[[nodiscard]] DistributionExport export_distribution(const IndexBundle& bundle,
                                                     std::span<const BootlegScore> scores,
                                                     const SearchConfig& config);

/// Same, over the corpus sequences recovered from the bundle.
[[nodiscard]] DistributionExport export_distribution(const IndexBundle& bundle, const SearchConfig& config);

/// rank,count
void write_distribution_csv(const DistributionExport& dist, std::ostream& out);

} // namespace sheetid

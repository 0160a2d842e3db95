#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sheetid/core_model.hpp"
#include "sheetid/ngram_index.hpp"

namespace sheetid {

enum class SearchMode { fixed, dynamic };

/// Threshold meaning "never extend": every fingerprint is a 1-gram lookup.
inline constexpr std::uint64_t kUnboundedGamma = std::numeric_limits<std::uint64_t>::max();

struct SearchConfig {
    SearchMode mode = SearchMode::dynamic;
    /// n-gram order in fixed mode.
    std::size_t fixed_n = 1;
    /// Dynamic mode: largest posting count a non-capped lookup may process.
    std::uint64_t gamma = kDefaultGamma;
    /// Dynamic mode: longest n-gram tried before a lookup is forced.
    std::size_t n_max = kDefaultNMax;
    /// Relative offsets r fall in bin floor(r / bin_width).
    std::int64_t bin_width = 1;
    /// Postings of this PDF are ignored, as if it had never been indexed.
    std::optional<PdfIndex> exclude_pdf;

    [[nodiscard]] static SearchConfig fixed(std::size_t n);
    [[nodiscard]] static SearchConfig dynamic(std::uint64_t gamma = kDefaultGamma, std::size_t n_max = kDefaultNMax);

    /// Throws UsageError for nonsensical values and IndexAbsentError when
    /// the bundle lacks an index the mode needs.
    void validate(const IndexBundle& bundle) const;

    /// "dynamic" or "fixed:N".
    [[nodiscard]] std::string mode_string() const;
};

/// Parses "dynamic" or "fixed:N" into `config`. Throws UsageError.
void parse_mode(std::string_view text, SearchConfig& config);

struct QueryFingerprint {
    std::size_t start = 0;
    FingerprintKey key;
    /// Postings the lookup will process (excluded PDF not counted).
    std::size_t count = 0;
    /// Dynamic mode: emitted at the length cap with count > gamma.
    bool forced = false;
};

struct SearchDiagnostics {
    std::size_t fingerprints = 0;
    std::size_t forced = 0;
    std::size_t postings = 0;
    double seconds = 0.0;
};

struct PieceScore {
    std::uint64_t piece_id = 0;
    PieceIndex piece = 0;
    std::uint32_t score = 0;

    friend bool operator==(const PieceScore&, const PieceScore&) = default;
};

/// Every piece of the bundle, ordered by score descending then piece_id ascending.
struct RankedResult {
    std::vector<PieceScore> ranking;
    SearchDiagnostics diagnostics;
};

/// One fingerprint per start position: the shortest n-gram starting there
/// whose count is <= gamma, or the longest allowed one if none qualifies.
[[nodiscard]] std::vector<QueryFingerprint> make_dynamic_fingerprints(std::span<const BootlegWord> words,
                                                                      const IndexBundle& bundle,
                                                                      const SearchConfig& config);

/// All n-grams of the query, stride 1. `count` is left at zero.
[[nodiscard]] std::vector<QueryFingerprint> make_fixed_fingerprints(std::span<const BootlegWord> words,
                                                                    std::size_t n);

/// Histogram-of-offsets scoring. Each PDF scores the tallest bin of
/// (db offset - query offset); a piece scores its best PDF.
[[nodiscard]] RankedResult score_search(std::span<const QueryFingerprint> fingerprints, const IndexBundle& bundle,
                                        const SearchConfig& config);

/// Fingerprinting + scoring + ranking, timed with a monotonic clock.
[[nodiscard]] RankedResult search(std::span<const BootlegWord> words, const IndexBundle& bundle,
                                  const SearchConfig& config);

/// 1-based position of `piece_id`. Throws UsageError for unknown pieces.
[[nodiscard]] std::size_t rank_of(const RankedResult& result, std::uint64_t piece_id);

/// Floor division for possibly negative offsets.
[[nodiscard]] constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept
{
    const std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

} // namespace sheetid

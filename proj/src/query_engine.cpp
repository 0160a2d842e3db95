#include "sheetid/query_engine.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>

#include "sheetid/error.hpp"

namespace sheetid {

SearchConfig SearchConfig::fixed(std::size_t n)
{
    SearchConfig config;
    config.mode = SearchMode::fixed;
    config.fixed_n = n;
    return config;
}

SearchConfig SearchConfig::dynamic(std::uint64_t gamma, std::size_t n_max)
{
    SearchConfig config;
    config.mode = SearchMode::dynamic;
    config.gamma = gamma;
    config.n_max = n_max;
    return config;
}

void SearchConfig::validate(const IndexBundle& bundle) const
{
    if (bin_width < 1) {
        throw UsageError("bin width must be >= 1, got " + std::to_string(bin_width));
    }
    if (exclude_pdf && *exclude_pdf >= bundle.manifest().pdf_count()) {
        throw UsageError("excluded pdf index " + std::to_string(*exclude_pdf) + " is not in the bundle");
    }
    if (mode == SearchMode::fixed) {
        if (fixed_n == 0 || fixed_n > kMaxGram) {
            throw UsageError("fixed n must be in [1, " + std::to_string(kMaxGram) + "], got "
                             + std::to_string(fixed_n));
        }
        (void)bundle.index(fixed_n);
        return;
    }
    if (gamma == 0) {
        throw UsageError("gamma must be positive");
    }
    if (n_max == 0 || n_max > kMaxGram) {
        throw UsageError("n_max must be in [1, " + std::to_string(kMaxGram) + "], got " + std::to_string(n_max));
    }
    (void)bundle.index(n_max);
}

std::string SearchConfig::mode_string() const
{
    return mode == SearchMode::dynamic ? std::string("dynamic") : "fixed:" + std::to_string(fixed_n);
}

void parse_mode(std::string_view text, SearchConfig& config)
{
    if (text == "dynamic") {
        config.mode = SearchMode::dynamic;
        return;
    }
    constexpr std::string_view prefix = "fixed:";
    if (text.starts_with(prefix)) {
        const std::string_view digits = text.substr(prefix.size());
        std::size_t n = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (!digits.empty() && ec == std::errc{} && ptr == digits.data() + digits.size() && n >= 1) {
            config.mode = SearchMode::fixed;
            config.fixed_n = n;
            return;
        }
    }
    throw UsageError("mode must be 'dynamic' or 'fixed:N', got '" + std::string(text) + "'");
}

namespace {

std::size_t effective_count(std::span<const Posting> postings, const std::optional<PdfIndex>& exclude)
{
    if (!exclude) {
        return postings.size();
    }
    const auto [lo, hi] = std::ranges::equal_range(postings, *exclude, {}, &Posting::pdf);
    return postings.size() - static_cast<std::size_t>(hi - lo);
}

} // namespace

std::vector<QueryFingerprint> make_dynamic_fingerprints(std::span<const BootlegWord> words,
                                                        const IndexBundle& bundle, const SearchConfig& config)
{
    if (config.mode != SearchMode::dynamic) {
        throw UsageError("make_dynamic_fingerprints needs a dynamic-mode config");
    }
    config.validate(bundle);
    std::vector<QueryFingerprint> out;
    out.reserve(words.size());
    for (std::size_t start = 0; start < words.size(); ++start) {
        const std::size_t cap = std::min(config.n_max, words.size() - start);
        for (std::size_t n = 1; n <= cap; ++n) {
            FingerprintKey key(words.subspan(start, n));
            const std::size_t count = effective_count(bundle.lookup(key), config.exclude_pdf);
            if (count <= config.gamma || n == cap) {
                out.push_back(QueryFingerprint{start, key, count, count > config.gamma});
                break;
            }
        }
    }
    return out;
}

std::vector<QueryFingerprint> make_fixed_fingerprints(std::span<const BootlegWord> words, std::size_t n)
{
    std::vector<QueryFingerprint> out;
    if (n == 0 || words.size() < n) {
        return out;
    }
    out.reserve(words.size() - n + 1);
    for (std::size_t start = 0; start + n <= words.size(); ++start) {
        out.push_back(QueryFingerprint{start, FingerprintKey(words.subspan(start, n)), 0, false});
    }
    return out;
}

RankedResult score_search(std::span<const QueryFingerprint> fingerprints, const IndexBundle& bundle,
                          const SearchConfig& config)
{
    if (config.bin_width < 1) {
        throw UsageError("bin width must be >= 1, got " + std::to_string(config.bin_width));
    }
    RankedResult result;
    auto& diag = result.diagnostics;
    diag.fingerprints = fingerprints.size();

    // (pdf, biased bin) packed into one integer; sorting groups equal bins.
    constexpr std::int64_t kBias = std::int64_t{1} << 31;
    std::vector<std::uint64_t> hits;
    for (const QueryFingerprint& fp : fingerprints) {
        diag.forced += fp.forced ? 1 : 0;
        const auto postings = bundle.lookup(fp.key);
        diag.postings += effective_count(postings, config.exclude_pdf);
        for (const Posting& p : postings) {
            if (config.exclude_pdf && p.pdf == *config.exclude_pdf) {
                continue;
            }
            const std::int64_t rel = static_cast<std::int64_t>(p.offset) - static_cast<std::int64_t>(fp.start);
            const auto bin = static_cast<std::uint64_t>(floor_div(rel, config.bin_width) + kBias);
            hits.push_back((static_cast<std::uint64_t>(p.pdf) << 32) | (bin & 0xffffffffULL));
        }
    }
    std::sort(hits.begin(), hits.end());

    const CorpusManifest& manifest = bundle.manifest();
    std::vector<std::uint32_t> piece_scores(manifest.piece_count(), 0);
    for (std::size_t i = 0; i < hits.size();) {
        std::size_t j = i;
        while (j < hits.size() && hits[j] == hits[i]) {
            ++j;
        }
        const auto pdf = static_cast<PdfIndex>(hits[i] >> 32);
        auto& best = piece_scores[manifest.pdfs()[pdf].piece];
        best = std::max(best, static_cast<std::uint32_t>(j - i));
        i = j;
    }

    result.ranking.reserve(manifest.piece_count());
    for (std::size_t p = 0; p < manifest.piece_count(); ++p) {
        result.ranking.push_back(
            PieceScore{manifest.pieces()[p].id, static_cast<PieceIndex>(p), piece_scores[p]});
    }
    std::sort(result.ranking.begin(), result.ranking.end(), [](const PieceScore& a, const PieceScore& b) {
        return a.score != b.score ? a.score > b.score : a.piece_id < b.piece_id;
    });
    return result;
}

RankedResult search(std::span<const BootlegWord> words, const IndexBundle& bundle, const SearchConfig& config)
{
    config.validate(bundle);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<QueryFingerprint> fingerprints = config.mode == SearchMode::dynamic
                                                     ? make_dynamic_fingerprints(words, bundle, config)
                                                     : make_fixed_fingerprints(words, config.fixed_n);
    RankedResult result = score_search(fingerprints, bundle, config);
    const auto t1 = std::chrono::steady_clock::now();
    result.diagnostics.seconds = std::chrono::duration<double>(t1 - t0).count();
    return result;
}

std::size_t rank_of(const RankedResult& result, std::uint64_t piece_id)
{
    for (std::size_t i = 0; i < result.ranking.size(); ++i) {
        if (result.ranking[i].piece_id == piece_id) {
            return i + 1;
        }
    }
    throw UsageError("piece " + std::to_string(piece_id) + " is not in the ranking");
}

} // namespace sheetid

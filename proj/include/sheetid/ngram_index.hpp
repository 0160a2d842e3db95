#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "sheetid/core_model.hpp"

namespace sheetid {

/// Default n_max: databases for n = 1..4.
inline constexpr std::size_t kDefaultNMax = 4;
/// Default distinctiveness threshold recorded in new bundles.
inline constexpr std::uint64_t kDefaultGamma = 1000;

/// One occurrence of an n-gram: the PDF and the position of its first word.
struct Posting {
    PdfIndex pdf = 0;
    std::uint32_t offset = 0;

    friend constexpr auto operator<=>(const Posting&, const Posting&) = default;
};

/// Reverse index for one n. Keys are kept sorted; posting lists are sorted
/// by (pdf, offset). Immutable once built.
class NGramIndex {
public:
    NGramIndex() = default;
    explicit NGramIndex(std::size_t n);

    /// Assembles an index from already-sorted parts (CSR layout:
    /// postings of keys[i] are postings[starts[i] .. starts[i+1])).
    /// Throws FormatError if ordering or layout invariants do not hold.
    static NGramIndex from_parts(std::size_t n, std::vector<FingerprintKey> keys, std::vector<std::uint64_t> starts,
                                 std::vector<Posting> postings);

    [[nodiscard]] std::size_t n() const noexcept { return n_; }

    /// Empty span for absent keys. Throws UsageError when key.n() != n().
    [[nodiscard]] std::span<const Posting> lookup(const FingerprintKey& key) const;
    [[nodiscard]] std::size_t count(const FingerprintKey& key) const { return lookup(key).size(); }

    [[nodiscard]] std::size_t key_count() const noexcept { return keys_.size(); }
    [[nodiscard]] std::size_t posting_count() const noexcept { return postings_.size(); }
    [[nodiscard]] const std::vector<FingerprintKey>& keys() const noexcept { return keys_; }
    [[nodiscard]] std::span<const Posting> postings_at(std::size_t slot) const;

    friend bool operator==(const NGramIndex& a, const NGramIndex& b);

private:
    void index_slots();

    std::size_t n_ = 0;
    std::vector<FingerprintKey> keys_;
    std::vector<std::uint64_t> starts_{0};
    std::vector<Posting> postings_;
    std::unordered_map<FingerprintKey, std::uint32_t, FingerprintKeyHash> slots_;
};

/// Every n-gram (stride 1) of every score. Scores shorter than n add nothing.
/// Work is sharded over PDFs on `threads` workers; the result does not
/// depend on the thread count.
[[nodiscard]] NGramIndex build_index(std::span<const BootlegScore> scores, std::size_t n, std::size_t threads = 1);

struct BuildParams {
    std::uint32_t n_max = kDefaultNMax;
    std::uint64_t gamma_default = kDefaultGamma;
    std::uint32_t corpus_checksum = 0;

    friend bool operator==(const BuildParams&, const BuildParams&) = default;
};

/// Indexes for n = 1..n_max built from one corpus snapshot, plus that
/// snapshot's manifest and per-PDF word counts.
class IndexBundle {
public:
    IndexBundle() = default;
    IndexBundle(CorpusManifest manifest, std::vector<std::uint32_t> pdf_lengths, BuildParams params,
                std::vector<NGramIndex> indexes);

    [[nodiscard]] const CorpusManifest& manifest() const noexcept { return manifest_; }
    [[nodiscard]] const BuildParams& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t n_max() const noexcept { return indexes_.size(); }
    [[nodiscard]] const std::vector<std::uint32_t>& pdf_lengths() const noexcept { return pdf_lengths_; }

    [[nodiscard]] bool has_index(std::size_t n) const noexcept { return n >= 1 && n <= indexes_.size(); }
    /// Throws IndexAbsentError when n is outside 1..n_max.
    [[nodiscard]] const NGramIndex& index(std::size_t n) const;

    /// Count of `key` in the index for key.n().
    [[nodiscard]] std::size_t count(const FingerprintKey& key) const { return index(key.n()).count(key); }
    [[nodiscard]] std::span<const Posting> lookup(const FingerprintKey& key) const
    {
        return index(key.n()).lookup(key);
    }

    friend bool operator==(const IndexBundle&, const IndexBundle&) = default;

private:
    CorpusManifest manifest_;
    std::vector<std::uint32_t> pdf_lengths_;
    BuildParams params_;
    std::vector<NGramIndex> indexes_;
};

/// Throws UsageError unless 1 <= n_max <= kMaxGram.
[[nodiscard]] IndexBundle build_bundle(const Corpus& corpus, std::size_t n_max = kDefaultNMax,
                                       std::size_t threads = 1, std::uint64_t gamma_default = kDefaultGamma);

/// Recovers every PDF's word sequence from the 1-gram index.
[[nodiscard]] std::vector<BootlegScore> reconstruct_scores(const IndexBundle& bundle);

/// Binary bundle format. Layout (little-endian):
///   "SHEETIDX" | u32 version | u64 file size
///   | u32 n_max | u64 gamma_default | u32 corpus crc
///   | manifest | per-pdf lengths
///   | for n in 1..n_max: u32 n | u64 keys | u64 postings
///       | per key: n x u64 words, varint list length,
///         postings as varint pdf delta + varint offset (delta within a pdf)
///   | u32 crc32 of everything before it
inline constexpr std::uint32_t kBundleVersion = 1;

void write_bundle(const IndexBundle& bundle, std::ostream& out);
[[nodiscard]] IndexBundle read_bundle(std::span<const unsigned char> bytes);

void save_bundle(const IndexBundle& bundle, const std::filesystem::path& path);
[[nodiscard]] IndexBundle load_bundle(const std::filesystem::path& path);

} // namespace sheetid

#pragma once

#include <array>
#include <bitset>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace sheetid {

/// Number of staff-line positions (both hands) in one bootleg column.
inline constexpr std::size_t kStaffPositions = 62;

/// Longest n-gram any index or fingerprint may use.
inline constexpr std::size_t kMaxGram = 5;

/// Dense corpus-local indices, assigned in manifest order at ingestion.
using PdfIndex = std::uint32_t;
using PieceIndex = std::uint32_t;

/// One bootleg-score column. Bit i is staff position i, counted upward from
/// the lowest left-hand position. Bits 62 and 63 are always clear.
struct BootlegWord {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(BootlegWord, BootlegWord) = default;
};

inline constexpr std::uint64_t kWordMask = (std::uint64_t{1} << kStaffPositions) - 1;

[[nodiscard]] constexpr bool is_valid_word(std::uint64_t raw) noexcept { return (raw & ~kWordMask) == 0; }

/// Throws InputError when `raw` has bit 62 or 63 set.
[[nodiscard]] BootlegWord make_word(std::uint64_t raw);

[[nodiscard]] BootlegWord pack_word(const std::bitset<kStaffPositions>& column) noexcept;
[[nodiscard]] std::bitset<kStaffPositions> unpack_word(BootlegWord word);

/// Global word sequence of one PDF: every page concatenated in page order.
struct BootlegScore {
    PdfIndex pdf = 0;
    std::vector<BootlegWord> words;
};

/// n consecutive words used as one opaque (64*n)-bit key.
class FingerprintKey {
public:
    FingerprintKey() = default;

    /// Throws UsageError unless 1 <= words.size() <= kMaxGram.
    explicit FingerprintKey(std::span<const BootlegWord> words);

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return {words_.data(), n_}; }
    [[nodiscard]] std::size_t hash() const noexcept;
    [[nodiscard]] std::string to_string() const;

    // Unused slots are zero, so member-wise comparison is sequence comparison.
    friend bool operator==(const FingerprintKey&, const FingerprintKey&) = default;
    friend auto operator<=>(const FingerprintKey&, const FingerprintKey&) = default;

private:
    std::array<std::uint64_t, kMaxGram> words_{};
    std::uint8_t n_ = 0;
};

struct FingerprintKeyHash {
    std::size_t operator()(const FingerprintKey& key) const noexcept { return key.hash(); }
};

struct PieceEntry {
    std::uint64_t id = 0;
    std::string name;
    std::vector<PdfIndex> pdfs;
};

struct PdfEntry {
    std::uint64_t id = 0;
    std::string source;
    PieceIndex piece = 0;
};

/// Piece -> PDF hierarchy. External ids are whatever the manifest says; the
/// position of an entry in pieces()/pdfs() is its dense index.
class CorpusManifest {
public:
    /// Throws InputError on a duplicate piece id.
    PieceIndex add_piece(std::uint64_t id, std::string name);
    /// Throws InputError on a duplicate pdf id or unknown piece index.
    PdfIndex add_pdf(PieceIndex piece, std::uint64_t id, std::string source);

    [[nodiscard]] const std::vector<PieceEntry>& pieces() const noexcept { return pieces_; }
    [[nodiscard]] const std::vector<PdfEntry>& pdfs() const noexcept { return pdfs_; }
    [[nodiscard]] std::size_t piece_count() const noexcept { return pieces_.size(); }
    [[nodiscard]] std::size_t pdf_count() const noexcept { return pdfs_.size(); }

    [[nodiscard]] std::optional<PieceIndex> find_piece(std::uint64_t id) const;
    [[nodiscard]] std::optional<PdfIndex> find_pdf(std::uint64_t id) const;

    friend bool operator==(const CorpusManifest& a, const CorpusManifest& b);

private:
    std::vector<PieceEntry> pieces_;
    std::vector<PdfEntry> pdfs_;
    std::unordered_map<std::uint64_t, PieceIndex> piece_by_id_;
    std::unordered_map<std::uint64_t, PdfIndex> pdf_by_id_;
};

bool operator==(const PieceEntry& a, const PieceEntry& b);
bool operator==(const PdfEntry& a, const PdfEntry& b);

/// Manifest plus one score per PDF; scores[i].pdf == i.
struct Corpus {
    CorpusManifest manifest;
    std::vector<BootlegScore> scores;

    [[nodiscard]] std::size_t total_words() const noexcept;
};

/// Convenience for assembling corpora in memory.
class CorpusBuilder {
public:
    CorpusBuilder& piece(std::uint64_t id, std::string name = {});
    /// Adds a PDF to the most recently added piece. Zero words are dropped,
    /// same as file ingestion.
    CorpusBuilder& pdf(std::uint64_t id, std::span<const std::uint64_t> words, std::string source = {});
    CorpusBuilder& pdf(std::uint64_t id, std::initializer_list<std::uint64_t> words, std::string source = {});

    [[nodiscard]] Corpus build() &&;
    [[nodiscard]] const Corpus& peek() const noexcept { return corpus_; }

private:
    Corpus corpus_;
};

/// CRC-32 over ids and word sequences; identifies a corpus snapshot.
[[nodiscard]] std::uint32_t corpus_checksum(const Corpus& corpus);

} // namespace sheetid

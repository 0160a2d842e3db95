#include "sheetid/core_model.hpp"

#include <algorithm>
#include <sstream>

#include <boost/crc.hpp>

#include "sheetid/error.hpp"

namespace sheetid {

BootlegWord make_word(std::uint64_t raw)
{
    if (!is_valid_word(raw)) {
        std::ostringstream msg;
        msg << "bootleg word 0x" << std::hex << raw << " has bits above position 61 set";
        throw InputError(msg.str());
    }
    return BootlegWord{raw};
}

BootlegWord pack_word(const std::bitset<kStaffPositions>& column) noexcept
{
    return BootlegWord{column.to_ullong()};
}

std::bitset<kStaffPositions> unpack_word(BootlegWord word)
{
    return std::bitset<kStaffPositions>(make_word(word.value).value);
}

FingerprintKey::FingerprintKey(std::span<const BootlegWord> words)
{
    if (words.empty() || words.size() > kMaxGram) {
        throw UsageError("fingerprint length " + std::to_string(words.size()) + " outside [1, "
                         + std::to_string(kMaxGram) + "]");
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
        words_[i] = words[i].value;
    }
    n_ = static_cast<std::uint8_t>(words.size());
}

namespace {

constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

} // namespace

std::size_t FingerprintKey::hash() const noexcept
{
    std::uint64_t h = mix64(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        h = mix64(h ^ (words_[i] + 0x9e3779b97f4a7c15ULL));
    }
    return static_cast<std::size_t>(h);
}

std::string FingerprintKey::to_string() const
{
    std::ostringstream out;
    out << '(' << std::hex;
    for (std::size_t i = 0; i < n_; ++i) {
        out << (i ? "," : "") << "0x" << words_[i];
    }
    out << ')';
    return out.str();
}

PieceIndex CorpusManifest::add_piece(std::uint64_t id, std::string name)
{
    if (piece_by_id_.contains(id)) {
        throw InputError("duplicate piece id " + std::to_string(id));
    }
    const auto index = static_cast<PieceIndex>(pieces_.size());
    pieces_.push_back(PieceEntry{id, std::move(name), {}});
    piece_by_id_.emplace(id, index);
    return index;
}

PdfIndex CorpusManifest::add_pdf(PieceIndex piece, std::uint64_t id, std::string source)
{
    if (piece >= pieces_.size()) {
        throw InputError("pdf " + std::to_string(id) + " refers to unknown piece index " + std::to_string(piece));
    }
    if (pdf_by_id_.contains(id)) {
        throw InputError("duplicate pdf id " + std::to_string(id));
    }
    const auto index = static_cast<PdfIndex>(pdfs_.size());
    pdfs_.push_back(PdfEntry{id, std::move(source), piece});
    pieces_[piece].pdfs.push_back(index);
    pdf_by_id_.emplace(id, index);
    return index;
}

std::optional<PieceIndex> CorpusManifest::find_piece(std::uint64_t id) const
{
    if (auto it = piece_by_id_.find(id); it != piece_by_id_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::optional<PdfIndex> CorpusManifest::find_pdf(std::uint64_t id) const
{
    if (auto it = pdf_by_id_.find(id); it != pdf_by_id_.end()) {
        return it->second;
    }
    return std::nullopt;
}

bool operator==(const PieceEntry& a, const PieceEntry& b)
{
    return a.id == b.id && a.name == b.name && a.pdfs == b.pdfs;
}

bool operator==(const PdfEntry& a, const PdfEntry& b)
{
    return a.id == b.id && a.source == b.source && a.piece == b.piece;
}

bool operator==(const CorpusManifest& a, const CorpusManifest& b)
{
    return a.pieces_ == b.pieces_ && a.pdfs_ == b.pdfs_;
}

std::size_t Corpus::total_words() const noexcept
{
    std::size_t total = 0;
    for (const auto& score : scores) {
        total += score.words.size();
    }
    return total;
}

CorpusBuilder& CorpusBuilder::piece(std::uint64_t id, std::string name)
{
    if (name.empty()) {
        name = "piece-" + std::to_string(id);
    }
    corpus_.manifest.add_piece(id, std::move(name));
    return *this;
}

CorpusBuilder& CorpusBuilder::pdf(std::uint64_t id, std::span<const std::uint64_t> words, std::string source)
{
    if (corpus_.manifest.piece_count() == 0) {
        throw UsageError("CorpusBuilder::pdf called before any piece");
    }
    const auto piece = static_cast<PieceIndex>(corpus_.manifest.piece_count() - 1);
    const PdfIndex index = corpus_.manifest.add_pdf(piece, id, std::move(source));
    BootlegScore score{index, {}};
    score.words.reserve(words.size());
    for (std::uint64_t raw : words) {
        if (raw != 0) {
            score.words.push_back(make_word(raw));
        }
    }
    corpus_.scores.push_back(std::move(score));
    return *this;
}

CorpusBuilder& CorpusBuilder::pdf(std::uint64_t id, std::initializer_list<std::uint64_t> words, std::string source)
{
    return pdf(id, std::span<const std::uint64_t>(words.begin(), words.size()), std::move(source));
}

Corpus CorpusBuilder::build() &&
{
    return std::move(corpus_);
}

std::uint32_t corpus_checksum(const Corpus& corpus)
{
    boost::crc_32_type crc;
    auto feed = [&crc](std::uint64_t v) {
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i) {
            bytes[i] = static_cast<unsigned char>(v >> (8 * i));
        }
        crc.process_bytes(bytes, sizeof bytes);
    };
    feed(corpus.manifest.piece_count());
    for (const auto& piece : corpus.manifest.pieces()) {
        feed(piece.id);
        feed(piece.pdfs.size());
        for (PdfIndex pdf : piece.pdfs) {
            feed(pdf);
        }
    }
    feed(corpus.manifest.pdf_count());
    for (std::size_t i = 0; i < corpus.manifest.pdf_count(); ++i) {
        feed(corpus.manifest.pdfs()[i].id);
        const auto& words = corpus.scores.at(i).words;
        feed(words.size());
        for (BootlegWord w : words) {
            feed(w.value);
        }
    }
    return crc.checksum();
}

} // namespace sheetid

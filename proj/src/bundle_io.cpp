#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>

#include <boost/crc.hpp>

#include "sheetid/error.hpp"
#include "sheetid/ngram_index.hpp"

namespace sheetid {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'H', 'E', 'E', 'T', 'I', 'D', 'X'};
constexpr std::size_t kHeaderBytes = kMagic.size() + 4 + 8;
constexpr std::size_t kTrailerBytes = 4;

class Writer {
public:
    void raw(const void* data, std::size_t size) { buf_.append(static_cast<const char*>(data), size); }

    template <typename T>
    void fixed(T value)
    {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<char>(static_cast<std::uint64_t>(value) >> (8 * i)));
        }
    }

    void varint(std::uint64_t value)
    {
        while (value >= 0x80) {
            buf_.push_back(static_cast<char>((value & 0x7f) | 0x80));
            value >>= 7;
        }
        buf_.push_back(static_cast<char>(value));
    }

    void text(const std::string& s)
    {
        fixed<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    std::string& buffer() { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

    template <typename T>
    T fixed()
    {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    std::uint64_t varint()
    {
        std::uint64_t v = 0;
        for (unsigned shift = 0; shift < 64; shift += 7) {
            need(1);
            const unsigned char b = bytes_[pos_++];
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if ((b & 0x80) == 0) {
                return v;
            }
        }
        throw FormatError("bundle: varint longer than 64 bits at byte " + std::to_string(pos_));
    }

    std::string text()
    {
        const auto size = fixed<std::uint32_t>();
        need(size);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), size);
        pos_ += size;
        return s;
    }

    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (bytes_.size() - pos_ < n) {
            throw TruncatedError("bundle: truncated at byte " + std::to_string(pos_));
        }
    }

    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32(const void* data, std::size_t size)
{
    boost::crc_32_type crc;
    crc.process_bytes(data, size);
    return crc.checksum();
}

void read_manifest(Reader& r, CorpusManifest& manifest, std::vector<std::uint32_t>& lengths)
{
    try {
        const auto piece_count = r.fixed<std::uint32_t>();
        for (std::uint32_t i = 0; i < piece_count; ++i) {
            const auto id = r.fixed<std::uint64_t>();
            manifest.add_piece(id, r.text());
        }
        const auto pdf_count = r.fixed<std::uint32_t>();
        lengths.reserve(pdf_count);
        for (std::uint32_t i = 0; i < pdf_count; ++i) {
            const auto id = r.fixed<std::uint64_t>();
            std::string source = r.text();
            const auto piece = r.fixed<std::uint32_t>();
            manifest.add_pdf(piece, id, std::move(source));
            lengths.push_back(r.fixed<std::uint32_t>());
        }
    } catch (const InputError& e) {
        throw FormatError(std::string("bundle: invalid manifest: ") + e.what());
    }
}

} // namespace

void write_bundle(const IndexBundle& bundle, std::ostream& out)
{
    Writer w;
    w.raw(kMagic.data(), kMagic.size());
    w.fixed<std::uint32_t>(kBundleVersion);
    w.fixed<std::uint64_t>(0); // file size, patched below

    const BuildParams& params = bundle.params();
    w.fixed<std::uint32_t>(params.n_max);
    w.fixed<std::uint64_t>(params.gamma_default);
    w.fixed<std::uint32_t>(params.corpus_checksum);

    const CorpusManifest& manifest = bundle.manifest();
    w.fixed<std::uint32_t>(static_cast<std::uint32_t>(manifest.piece_count()));
    for (const auto& piece : manifest.pieces()) {
        w.fixed<std::uint64_t>(piece.id);
        w.text(piece.name);
    }
    w.fixed<std::uint32_t>(static_cast<std::uint32_t>(manifest.pdf_count()));
    for (std::size_t i = 0; i < manifest.pdf_count(); ++i) {
        const auto& pdf = manifest.pdfs()[i];
        w.fixed<std::uint64_t>(pdf.id);
        w.text(pdf.source);
        w.fixed<std::uint32_t>(pdf.piece);
        w.fixed<std::uint32_t>(bundle.pdf_lengths()[i]);
    }

    for (std::size_t n = 1; n <= bundle.n_max(); ++n) {
        const NGramIndex& index = bundle.index(n);
        w.fixed<std::uint32_t>(static_cast<std::uint32_t>(n));
        w.fixed<std::uint64_t>(index.key_count());
        w.fixed<std::uint64_t>(index.posting_count());
        for (std::size_t slot = 0; slot < index.key_count(); ++slot) {
            for (std::uint64_t word : index.keys()[slot].words()) {
                w.fixed<std::uint64_t>(word);
            }
            const auto postings = index.postings_at(slot);
            w.varint(postings.size());
            Posting prev{};
            for (const Posting& p : postings) {
                w.varint(p.pdf - prev.pdf);
                w.varint(p.pdf == prev.pdf ? p.offset - prev.offset : p.offset);
                prev = p;
            }
        }
    }

    std::string& buf = w.buffer();
    const std::uint64_t total = buf.size() + kTrailerBytes;
    for (std::size_t i = 0; i < 8; ++i) {
        buf[kMagic.size() + 4 + i] = static_cast<char>(total >> (8 * i));
    }
    w.fixed<std::uint32_t>(crc32(buf.data(), buf.size()));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw Error("bundle: write failed");
    }
}

IndexBundle read_bundle(std::span<const unsigned char> bytes)
{
    const std::size_t magic_seen = std::min(bytes.size(), kMagic.size());
    if (magic_seen > 0 && std::memcmp(bytes.data(), kMagic.data(), magic_seen) != 0) {
        throw FormatError("bundle: bad magic bytes (not a sheetid bundle)");
    }
    if (bytes.size() < kHeaderBytes) {
        throw TruncatedError("bundle: file shorter than its header (" + std::to_string(bytes.size()) + " bytes)");
    }
    Reader header(bytes.subspan(kMagic.size()));
    if (const auto version = header.fixed<std::uint32_t>(); version != kBundleVersion) {
        throw VersionError("bundle: format version " + std::to_string(version) + ", this build reads version "
                           + std::to_string(kBundleVersion));
    }
    const auto declared = header.fixed<std::uint64_t>();
    if (bytes.size() < declared) {
        throw TruncatedError("bundle: file has " + std::to_string(bytes.size()) + " bytes, header declares "
                             + std::to_string(declared));
    }
    if (bytes.size() > declared || declared < kHeaderBytes + kTrailerBytes) {
        throw FormatError("bundle: size field " + std::to_string(declared) + " inconsistent with file size "
                          + std::to_string(bytes.size()));
    }
    const std::size_t body_end = bytes.size() - kTrailerBytes;
    const std::uint32_t stored = Reader(bytes.subspan(body_end)).fixed<std::uint32_t>();
    if (crc32(bytes.data(), body_end) != stored) {
        throw ChecksumError("bundle: checksum mismatch");
    }

    Reader r(bytes.subspan(kHeaderBytes, body_end - kHeaderBytes));
    BuildParams params;
    params.n_max = r.fixed<std::uint32_t>();
    params.gamma_default = r.fixed<std::uint64_t>();
    params.corpus_checksum = r.fixed<std::uint32_t>();
    if (params.n_max == 0 || params.n_max > kMaxGram) {
        throw FormatError("bundle: n_max " + std::to_string(params.n_max) + " out of range");
    }

    CorpusManifest manifest;
    std::vector<std::uint32_t> lengths;
    read_manifest(r, manifest, lengths);
    const auto pdf_count = static_cast<std::uint32_t>(manifest.pdf_count());

    std::vector<NGramIndex> indexes;
    for (std::size_t n = 1; n <= params.n_max; ++n) {
        if (r.fixed<std::uint32_t>() != n) {
            throw FormatError("bundle: expected section for n=" + std::to_string(n));
        }
        const auto key_count = r.fixed<std::uint64_t>();
        const auto posting_count = r.fixed<std::uint64_t>();
        if (key_count > r.remaining() || posting_count > r.remaining()) {
            throw FormatError("bundle: section n=" + std::to_string(n) + " declares more entries than bytes");
        }
        std::vector<FingerprintKey> keys;
        keys.reserve(key_count);
        std::vector<std::uint64_t> starts{0};
        starts.reserve(key_count + 1);
        std::vector<Posting> postings;
        postings.reserve(posting_count);
        std::array<BootlegWord, kMaxGram> words{};
        for (std::uint64_t k = 0; k < key_count; ++k) {
            for (std::size_t j = 0; j < n; ++j) {
                words[j] = BootlegWord{r.fixed<std::uint64_t>()};
            }
            keys.emplace_back(std::span<const BootlegWord>(words.data(), n));
            const auto list_size = r.varint();
            Posting prev{};
            for (std::uint64_t j = 0; j < list_size; ++j) {
                Posting p;
                p.pdf = static_cast<PdfIndex>(prev.pdf + r.varint());
                const auto off = r.varint();
                p.offset = static_cast<std::uint32_t>(p.pdf == prev.pdf ? prev.offset + off : off);
                if (p.pdf >= pdf_count || static_cast<std::uint64_t>(p.offset) + n > lengths[p.pdf]) {
                    throw FormatError("bundle: posting outside its pdf in section n=" + std::to_string(n));
                }
                postings.push_back(p);
                prev = p;
            }
            starts.push_back(postings.size());
        }
        if (postings.size() != posting_count) {
            throw FormatError("bundle: section n=" + std::to_string(n) + " posting count mismatch");
        }
        indexes.push_back(NGramIndex::from_parts(n, std::move(keys), std::move(starts), std::move(postings)));
    }
    if (r.remaining() != 0) {
        throw FormatError("bundle: " + std::to_string(r.remaining()) + " unexpected bytes after last section");
    }
    return IndexBundle(std::move(manifest), std::move(lengths), params, std::move(indexes));
}

void save_bundle(const IndexBundle& bundle, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot open " + path.string() + " for writing");
    }
    write_bundle(bundle, out);
}

IndexBundle load_bundle(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open bundle " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_bundle(bytes);
}

} // namespace sheetid

#include "sheetid/ingestion.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sheetid/detail/parallel.hpp"
#include "sheetid/error.hpp"

namespace sheetid {

using json = nlohmann::json;

namespace {

json parse_json(std::string_view text, const std::string& origin)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw InputError(origin + ": not valid JSON: " + e.what());
    }
}

void require_version(const json& doc, const std::string& origin)
{
    if (!doc.is_object() || !doc.contains("format_version")) {
        throw InputError(origin + ": missing format_version");
    }
    const json& v = doc.at("format_version");
    if (!v.is_number_integer() || v.get<int>() != kTextFormatVersion) {
        throw InputError(origin + ": unsupported format_version " + v.dump() + " (expected "
                         + std::to_string(kTextFormatVersion) + ")");
    }
}

std::uint64_t require_id(const json& obj, const char* field, const std::string& origin)
{
    if (!obj.is_object() || !obj.contains(field)) {
        throw InputError(origin + ": missing " + field);
    }
    const json& v = obj.at(field);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw InputError(origin + ": " + field + " must be a non-negative integer, got " + v.dump());
    }
    return v.get<std::uint64_t>();
}

std::string optional_string(const json& obj, const char* field)
{
    if (auto it = obj.find(field); it != obj.end() && it->is_string()) {
        return it->get<std::string>();
    }
    return {};
}

/// Accepts a JSON unsigned number or a decimal/hex string; range-checks.
std::uint64_t word_from_json(const json& v, const std::string& where)
{
    std::uint64_t raw = 0;
    if (v.is_number_unsigned()) {
        raw = v.get<std::uint64_t>();
    } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        raw = static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else if (v.is_string()) {
        try {
            raw = parse_word_literal(v.get<std::string>());
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
    } else {
        throw InputError(where + ": expected an unsigned integer word, got " + v.dump());
    }
    if (!is_valid_word(raw)) {
        std::ostringstream msg;
        msg << where << ": word 0x" << std::hex << raw << " is >= 2^62";
        throw InputError(msg.str());
    }
    return raw;
}

std::vector<BootlegWord> words_from_json(const json& list, const std::string& where)
{
    if (!list.is_array()) {
        throw InputError(where + ": expected an array of words");
    }
    std::vector<BootlegWord> words;
    words.reserve(list.size());
    for (std::size_t col = 0; col < list.size(); ++col) {
        const std::uint64_t raw = word_from_json(list[col], where + " column " + std::to_string(col));
        if (raw != 0) {
            words.push_back(BootlegWord{raw});
        }
    }
    return words;
}

} // namespace

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::uint64_t parse_word_literal(std::string_view text)
{
    std::string_view digits = text;
    int base = 10;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
        digits.remove_prefix(2);
        base = 16;
    }
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
        throw InputError("malformed word literal '" + std::string(text) + "'");
    }
    return value;
}

std::vector<BootlegWord> parse_word_list(std::string_view text)
{
    std::vector<BootlegWord> words;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = text.find_first_of(", \t\n", pos);
        const std::string_view token = text.substr(pos, end == std::string_view::npos ? text.npos : end - pos);
        if (!token.empty()) {
            const std::uint64_t raw = parse_word_literal(token);
            if (!is_valid_word(raw)) {
                throw InputError("word '" + std::string(token) + "' is >= 2^62");
            }
            if (raw != 0) {
                words.push_back(BootlegWord{raw});
            }
        }
        if (end == std::string_view::npos) {
            break;
        }
        pos = end + 1;
    }
    return words;
}

CorpusManifest parse_manifest(std::string_view text)
{
    const std::string origin = "manifest";
    const json doc = parse_json(text, origin);
    require_version(doc, origin);
    CorpusManifest manifest;
    const json& pieces = doc.value("pieces", json::array());
    if (!pieces.is_array()) {
        throw InputError("manifest: pieces must be an array");
    }
    for (const json& piece : pieces) {
        const std::uint64_t piece_id = require_id(piece, "piece_id", origin);
        const std::string where = "manifest piece " + std::to_string(piece_id);
        const PieceIndex pi = manifest.add_piece(piece_id, optional_string(piece, "name"));
        const json& pdfs = piece.value("pdfs", json::array());
        if (!pdfs.is_array() || pdfs.empty()) {
            throw InputError(where + ": pdfs must be a nonempty array");
        }
        for (const json& pdf : pdfs) {
            manifest.add_pdf(pi, require_id(pdf, "pdf_id", where), optional_string(pdf, "source"));
        }
    }
    return manifest;
}

FeaturePages parse_feature_file(std::string_view text, const std::string& origin)
{
    const json doc = parse_json(text, origin);
    require_version(doc, origin);
    const json& pages = doc.value("pages", json::array());
    if (!pages.is_array()) {
        throw InputError(origin + ": pages must be an array");
    }
    FeaturePages out;
    out.reserve(pages.size());
    for (std::size_t p = 0; p < pages.size(); ++p) {
        const json& page = pages[p];
        const std::string where = origin + " page " + std::to_string(p);
        if (!page.is_array()) {
            throw InputError(where + ": expected an array of words");
        }
        auto& dst = out.emplace_back();
        dst.reserve(page.size());
        for (std::size_t col = 0; col < page.size(); ++col) {
            dst.push_back(word_from_json(page[col], where + " column " + std::to_string(col)));
        }
    }
    return out;
}

FeaturePages read_feature_file(const std::filesystem::path& path)
{
    return parse_feature_file(read_text_file(path), path.string());
}

std::vector<BootlegWord> flatten_pages(const FeaturePages& pages)
{
    std::vector<BootlegWord> words;
    for (const auto& page : pages) {
        for (std::uint64_t raw : page) {
            if (raw != 0) {
                words.push_back(make_word(raw));
            }
        }
    }
    return words;
}

Corpus ingest_corpus(const std::filesystem::path& manifest_path, const std::filesystem::path& feature_root,
                     std::size_t threads)
{
    Corpus corpus;
    const std::string manifest_text = read_text_file(manifest_path);
    const json doc = parse_json(manifest_text, manifest_path.string());
    corpus.manifest = parse_manifest(manifest_text);

    // Optional per-pdf "features" override; default <pdf_id>.json.
    std::vector<std::filesystem::path> files;
    files.reserve(corpus.manifest.pdf_count());
    for (const json& piece : doc.value("pieces", json::array())) {
        for (const json& pdf : piece.value("pdfs", json::array())) {
            std::string rel = optional_string(pdf, "features");
            if (rel.empty()) {
                rel = std::to_string(pdf.at("pdf_id").get<std::uint64_t>()) + ".json";
            }
            files.push_back(feature_root / rel);
        }
    }

    corpus.scores.resize(corpus.manifest.pdf_count());
    detail::for_each_shard(files.size(), detail::resolve_threads(threads),
                           [&](std::size_t, std::size_t begin, std::size_t end) {
                               for (std::size_t i = begin; i < end; ++i) {
                                   const auto& entry = corpus.manifest.pdfs()[i];
                                   if (!std::filesystem::exists(files[i])) {
                                       throw InputError("pdf " + std::to_string(entry.id) + ": feature file "
                                                        + files[i].string() + " not found");
                                   }
                                   corpus.scores[i].pdf = static_cast<PdfIndex>(i);
                                   corpus.scores[i].words = flatten_pages(read_feature_file(files[i]));
                               }
                           });
    return corpus;
}

QuerySet parse_queries(std::string_view text, const CorpusManifest& manifest)
{
    const std::string origin = "query file";
    const json doc = parse_json(text, origin);
    require_version(doc, origin);
    const json& list = doc.value("queries", json::array());
    if (!list.is_array()) {
        throw InputError("query file: queries must be an array");
    }
    QuerySet set;
    set.queries.reserve(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
        const json& rec = list[i];
        Query q;
        if (rec.is_object() && rec.contains("query_id")) {
            const json& id = rec.at("query_id");
            q.id = id.is_string() ? id.get<std::string>() : id.dump();
        } else {
            throw InputError("query file record " + std::to_string(i) + ": missing query_id");
        }
        const std::string where = "query " + q.id;
        q.piece_id = require_id(rec, "piece_id", where);
        q.pdf_id = require_id(rec, "pdf_id", where);
        const auto piece = manifest.find_piece(q.piece_id);
        if (!piece) {
            throw InputError(where + ": unknown piece id " + std::to_string(q.piece_id));
        }
        const auto pdf = manifest.find_pdf(q.pdf_id);
        if (!pdf) {
            throw InputError(where + ": unknown pdf id " + std::to_string(q.pdf_id));
        }
        if (manifest.pdfs()[*pdf].piece != *piece) {
            throw InputError(where + ": pdf " + std::to_string(q.pdf_id) + " does not belong to piece "
                             + std::to_string(q.piece_id));
        }
        q.words = words_from_json(rec.value("words", json::array()), where);
        q.empty = q.words.empty();
        set.queries.push_back(std::move(q));
    }
    return set;
}

QuerySet load_queries(const std::filesystem::path& path, const CorpusManifest& manifest)
{
    return parse_queries(read_text_file(path), manifest);
}

} // namespace sheetid

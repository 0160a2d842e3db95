#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sheetid/core_model.hpp"

namespace sheetid {

/// Version written to and required in every manifest, feature and query file.
inline constexpr int kTextFormatVersion = 1;

/// Pages of one feature file, raw words in page order (zeros still present).
using FeaturePages = std::vector<std::vector<std::uint64_t>>;

/// One labelled query. `empty` is set when no nonzero words remain; such a
/// query is kept and simply ranks its truth piece by tie-break.
struct Query {
    std::string id;
    std::uint64_t piece_id = 0;
    std::uint64_t pdf_id = 0;
    std::vector<BootlegWord> words;
    bool empty = false;
};

struct QuerySet {
    std::vector<Query> queries;
};

/// Parses a manifest document (no feature files touched).
[[nodiscard]] CorpusManifest parse_manifest(std::string_view text);

/// Reads one feature document. `origin` names the file in diagnostics.
[[nodiscard]] FeaturePages parse_feature_file(std::string_view text, const std::string& origin);
[[nodiscard]] FeaturePages read_feature_file(const std::filesystem::path& path);

/// Page-order concatenation with zero words removed.
[[nodiscard]] std::vector<BootlegWord> flatten_pages(const FeaturePages& pages);

/// Loads the manifest and every PDF's feature file (<feature_root>/<pdf_id>.json
/// unless the manifest names another path). Files load on up to `threads`
/// workers; assembly order is manifest order regardless.
[[nodiscard]] Corpus ingest_corpus(const std::filesystem::path& manifest_path,
                                   const std::filesystem::path& feature_root, std::size_t threads = 1);

[[nodiscard]] QuerySet parse_queries(std::string_view text, const CorpusManifest& manifest);
[[nodiscard]] QuerySet load_queries(const std::filesystem::path& path, const CorpusManifest& manifest);

/// Parses "5", "0x1f" or "0X1F" into a word value. Throws InputError.
[[nodiscard]] std::uint64_t parse_word_literal(std::string_view text);

/// Splits a comma/space separated list of word literals (CLI --words).
[[nodiscard]] std::vector<BootlegWord> parse_word_list(std::string_view text);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

} // namespace sheetid

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sheetid/error.hpp"
#include "sheetid/evaluation.hpp"
#include "sheetid/ingestion.hpp"
#include "sheetid/ngram_index.hpp"
#include "sheetid/query_engine.hpp"

namespace py = pybind11;
using namespace sheetid;

namespace {

// Validates every word; zero words are dropped as they are at ingestion.
std::vector<BootlegWord> to_words(const std::vector<std::uint64_t>& raw)
{
    std::vector<BootlegWord> out;
    out.reserve(raw.size());
    for (auto v : raw) {
        const BootlegWord w = make_word(v);
        if (w.value != 0) {
            out.push_back(w);
        }
    }
    return out;
}

std::vector<std::uint64_t> from_words(std::span<const BootlegWord> words)
{
    std::vector<std::uint64_t> out;
    out.reserve(words.size());
    for (auto w : words) {
        out.push_back(w.value);
    }
    return out;
}

py::tuple key_tuple(const FingerprintKey& key)
{
    py::tuple t(key.n());
    for (std::size_t i = 0; i < key.n(); ++i) {
        t[i] = py::int_(key.words()[i]);
    }
    return t;
}

std::vector<std::pair<std::uint64_t, std::uint32_t>> external_postings(const IndexBundle& bundle,
                                                                       std::span<const Posting> postings)
{
    std::vector<std::pair<std::uint64_t, std::uint32_t>> out;
    out.reserve(postings.size());
    for (const Posting& p : postings) {
        out.emplace_back(bundle.manifest().pdfs()[p.pdf].id, p.offset);
    }
    return out;
}

PdfIndex pdf_index(const CorpusManifest& manifest, std::uint64_t pdf_id)
{
    const auto idx = manifest.find_pdf(pdf_id);
    if (!idx) {
        throw UsageError("unknown pdf id " + std::to_string(pdf_id));
    }
    return *idx;
}

SearchConfig make_config(const IndexBundle& bundle, const std::string& mode, std::optional<std::uint64_t> gamma,
                         std::size_t n_max, std::int64_t bin_width, std::optional<std::uint64_t> exclude_pdf_id)
{
    SearchConfig cfg;
    parse_mode(mode, cfg);
    cfg.gamma = gamma.value_or(bundle.params().gamma_default);
    cfg.n_max = n_max;
    cfg.bin_width = bin_width;
    if (exclude_pdf_id) {
        cfg.exclude_pdf = pdf_index(bundle.manifest(), *exclude_pdf_id);
    }
    cfg.validate(bundle);
    return cfg;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Sheet music identification from bootleg-score features";

    auto error = py::register_exception<Error>(m, "SheetidError", PyExc_RuntimeError);
    auto input_error = py::register_exception<InputError>(m, "InputError", error.ptr());
    auto usage_error = py::register_exception<UsageError>(m, "UsageError", error.ptr());
    py::register_exception<IndexAbsentError>(m, "IndexAbsentError", usage_error.ptr());
    auto format_error = py::register_exception<FormatError>(m, "FormatError", error.ptr());
    py::register_exception<VersionError>(m, "VersionError", format_error.ptr());
    py::register_exception<TruncatedError>(m, "TruncatedError", format_error.ptr());
    py::register_exception<ChecksumError>(m, "ChecksumError", format_error.ptr());
    (void)input_error;

    m.attr("STAFF_POSITIONS") = kStaffPositions;
    m.attr("MAX_GRAM") = kMaxGram;
    m.attr("DEFAULT_N_MAX") = kDefaultNMax;
    m.attr("DEFAULT_GAMMA") = kDefaultGamma;
    m.attr("UNBOUNDED_GAMMA") = kUnboundedGamma;

    m.def(
        "pack_word",
        [](const std::vector<std::size_t>& positions) {
            std::bitset<kStaffPositions> bits;
            for (auto p : positions) {
                if (p >= kStaffPositions) {
                    throw InputError("staff position " + std::to_string(p) + " outside [0, 62)");
                }
                bits.set(p);
            }
            return pack_word(bits).value;
        },
        py::arg("positions"), "Word with the given staff positions set (0 = lowest left-hand position).");
    m.def(
        "unpack_word",
        [](std::uint64_t word) {
            const auto bits = unpack_word(BootlegWord{word});
            std::vector<std::size_t> positions;
            for (std::size_t i = 0; i < kStaffPositions; ++i) {
                if (bits.test(i)) {
                    positions.push_back(i);
                }
            }
            return positions;
        },
        py::arg("word"), "Sorted staff positions set in the word.");

    py::class_<PieceEntry>(m, "Piece")
        .def_readonly("piece_id", &PieceEntry::id)
        .def_readonly("name", &PieceEntry::name)
        .def_readonly("pdfs", &PieceEntry::pdfs);
    py::class_<PdfEntry>(m, "Pdf")
        .def_readonly("pdf_id", &PdfEntry::id)
        .def_readonly("source", &PdfEntry::source)
        .def_readonly("piece", &PdfEntry::piece);
    py::class_<CorpusManifest>(m, "Manifest")
        .def_property_readonly("pieces", &CorpusManifest::pieces)
        .def_property_readonly("pdfs", &CorpusManifest::pdfs)
        .def_property_readonly("piece_count", &CorpusManifest::piece_count)
        .def_property_readonly("pdf_count", &CorpusManifest::pdf_count);

    py::class_<Corpus>(m, "Corpus")
        .def_readonly("manifest", &Corpus::manifest)
        .def_property_readonly("total_words", &Corpus::total_words)
        .def("words", [](const Corpus& c, std::uint64_t pdf_id) {
            return from_words(c.scores[pdf_index(c.manifest, pdf_id)].words);
        })
        .def_property_readonly("checksum", [](const Corpus& c) { return corpus_checksum(c); });

    py::class_<CorpusBuilder>(m, "CorpusBuilder")
        .def(py::init<>())
        .def("piece", &CorpusBuilder::piece, py::arg("piece_id"), py::arg("name") = "",
             py::return_value_policy::reference_internal)
        .def(
            "pdf",
            [](CorpusBuilder& b, std::uint64_t id, const std::vector<std::uint64_t>& words,
               const std::string& source) -> CorpusBuilder& { return b.pdf(id, words, source); },
            py::arg("pdf_id"), py::arg("words"), py::arg("source") = "", py::return_value_policy::reference_internal)
        .def("build", [](CorpusBuilder& b) { return std::move(b).build(); });

    m.def("ingest_corpus", &ingest_corpus, py::arg("manifest"), py::arg("features"), py::arg("threads") = 1,
          py::call_guard<py::gil_scoped_release>());

    py::class_<Query>(m, "Query")
        .def_readonly("query_id", &Query::id)
        .def_readonly("piece_id", &Query::piece_id)
        .def_readonly("pdf_id", &Query::pdf_id)
        .def_property_readonly("words", [](const Query& q) { return from_words(q.words); })
        .def_readonly("empty", &Query::empty);
    py::class_<QuerySet>(m, "QuerySet")
        .def_readonly("queries", &QuerySet::queries)
        .def("__len__", [](const QuerySet& s) { return s.queries.size(); });
    m.def("load_queries", &load_queries, py::arg("path"), py::arg("manifest"));

    py::class_<BuildParams>(m, "BuildParams")
        .def_readonly("n_max", &BuildParams::n_max)
        .def_readonly("gamma_default", &BuildParams::gamma_default)
        .def_readonly("corpus_checksum", &BuildParams::corpus_checksum);

    py::class_<IndexBundle>(m, "Bundle")
        .def_property_readonly("manifest", &IndexBundle::manifest)
        .def_property_readonly("params", &IndexBundle::params)
        .def_property_readonly("n_max", &IndexBundle::n_max)
        .def("has_index", &IndexBundle::has_index)
        .def("key_count", [](const IndexBundle& b, std::size_t n) { return b.index(n).key_count(); })
        .def("posting_count", [](const IndexBundle& b, std::size_t n) { return b.index(n).posting_count(); })
        .def(
            "count",
            [](const IndexBundle& b, const std::vector<std::uint64_t>& gram) {
                return b.count(FingerprintKey(to_words(gram)));
            },
            py::arg("gram"))
        .def(
            "lookup",
            [](const IndexBundle& b, const std::vector<std::uint64_t>& gram) {
                return external_postings(b, b.lookup(FingerprintKey(to_words(gram))));
            },
            py::arg("gram"), "(pdf_id, offset) pairs, sorted by pdf then offset.")
        .def("save", [](const IndexBundle& b, const std::filesystem::path& p) { save_bundle(b, p); })
        .def("__eq__", [](const IndexBundle& a, const IndexBundle& b) { return a == b; });

    m.def("build_bundle", &build_bundle, py::arg("corpus"), py::arg("n_max") = kDefaultNMax, py::arg("threads") = 1,
          py::arg("gamma_default") = kDefaultGamma, py::call_guard<py::gil_scoped_release>());
    m.def("load_bundle", &load_bundle, py::arg("path"));

    py::class_<SearchConfig>(m, "SearchConfig")
        .def_property_readonly("mode", &SearchConfig::mode_string)
        .def_readonly("gamma", &SearchConfig::gamma)
        .def_readonly("n_max", &SearchConfig::n_max)
        .def_readonly("bin_width", &SearchConfig::bin_width)
        .def("__repr__", [](const SearchConfig& c) { return "SearchConfig(" + c.mode_string() + ")"; });
    m.def("search_config", &make_config, py::arg("bundle"), py::arg("mode") = "dynamic",
          py::arg("gamma") = py::none(), py::arg("n_max") = kDefaultNMax, py::arg("bin_width") = 1,
          py::arg("exclude_pdf_id") = py::none(),
          "Validated search settings. gamma defaults to the value recorded in the bundle.");

    py::class_<QueryFingerprint>(m, "Fingerprint")
        .def_readonly("start", &QueryFingerprint::start)
        .def_property_readonly("gram", [](const QueryFingerprint& f) { return key_tuple(f.key); })
        .def_readonly("count", &QueryFingerprint::count)
        .def_readonly("forced", &QueryFingerprint::forced);
    m.def(
        "fingerprints",
        [](const IndexBundle& bundle, const std::vector<std::uint64_t>& words, const SearchConfig& cfg) {
            const auto w = to_words(words);
            return cfg.mode == SearchMode::dynamic ? make_dynamic_fingerprints(w, bundle, cfg)
                                                   : make_fixed_fingerprints(w, cfg.fixed_n);
        },
        py::arg("bundle"), py::arg("words"), py::arg("config"));

    py::class_<PieceScore>(m, "PieceScore")
        .def_readonly("piece_id", &PieceScore::piece_id)
        .def_readonly("score", &PieceScore::score)
        .def("__repr__", [](const PieceScore& s) {
            return "PieceScore(piece_id=" + std::to_string(s.piece_id) + ", score=" + std::to_string(s.score) + ")";
        });
    py::class_<SearchDiagnostics>(m, "SearchDiagnostics")
        .def_readonly("fingerprints", &SearchDiagnostics::fingerprints)
        .def_readonly("forced", &SearchDiagnostics::forced)
        .def_readonly("postings", &SearchDiagnostics::postings)
        .def_readonly("seconds", &SearchDiagnostics::seconds);
    py::class_<RankedResult>(m, "RankedResult")
        .def_readonly("ranking", &RankedResult::ranking)
        .def_readonly("diagnostics", &RankedResult::diagnostics)
        .def("rank_of", [](const RankedResult& r, std::uint64_t piece_id) { return rank_of(r, piece_id); });
    m.def(
        "search",
        [](const IndexBundle& bundle, const std::vector<std::uint64_t>& words, const SearchConfig& cfg) {
            const auto w = to_words(words);
            py::gil_scoped_release release;
            return search(w, bundle, cfg);
        },
        py::arg("bundle"), py::arg("words"), py::arg("config"));

    m.def(
        "mean_reciprocal_rank",
        [](const std::vector<std::size_t>& ranks) { return mean_reciprocal_rank(ranks); }, py::arg("ranks"));

    py::class_<QueryRecord>(m, "QueryRecord")
        .def_readonly("query_id", &QueryRecord::query_id)
        .def_readonly("rank", &QueryRecord::rank)
        .def_readonly("reciprocal_rank", &QueryRecord::reciprocal_rank)
        .def_readonly("seconds", &QueryRecord::seconds)
        .def_readonly("fingerprints", &QueryRecord::fingerprints)
        .def_readonly("postings", &QueryRecord::postings);
    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("mrr", &EvalReport::mrr)
        .def_readonly("records", &EvalReport::records)
        .def_readonly("latency_reported", &EvalReport::latency_reported)
        .def_readonly("latency_mean", &EvalReport::latency_mean)
        .def_readonly("latency_std", &EvalReport::latency_std)
        .def_readonly("skipped", &EvalReport::skipped);
    m.def(
        "evaluate",
        [](const QuerySet& queries, const IndexBundle& bundle, const SearchConfig& cfg, int condition, bool parallel,
           std::size_t threads, bool warmup) {
            if (condition != 1 && condition != 2) {
                throw UsageError("condition must be 1 or 2");
            }
            EvalOptions opt;
            opt.condition = static_cast<Condition>(condition);
            opt.parallel = parallel;
            opt.threads = threads;
            opt.warmup = warmup;
            py::gil_scoped_release release;
            return evaluate(queries, bundle, cfg, opt);
        },
        py::arg("queries"), py::arg("bundle"), py::arg("config"), py::arg("condition") = 1,
        py::arg("parallel") = false, py::arg("threads") = 0, py::arg("warmup") = true);

    m.def(
        "export_distribution",
        [](const IndexBundle& bundle, const SearchConfig& cfg) {
            const DistributionExport dist = export_distribution(bundle, cfg);
            py::list out;
            for (const auto& e : dist.entries) {
                out.append(py::make_tuple(key_tuple(e.key), e.count, e.cap_forced));
            }
            return out;
        },
        py::arg("bundle"), py::arg("config"),
        "(gram, count, cap_forced) triples, most frequent first.");
}

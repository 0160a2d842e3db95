#include "sheetid/cli.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sheetid/error.hpp"
#include "sheetid/evaluation.hpp"
#include "sheetid/ingestion.hpp"
#include "sheetid/ngram_index.hpp"
#include "sheetid/query_engine.hpp"

namespace sheetid {

namespace {

struct SearchFlags {
    std::string mode = "dynamic";
    std::optional<std::uint64_t> gamma;
    std::size_t n_max = kDefaultNMax;
    std::int64_t bin_width = 1;

    void attach(CLI::App& cmd)
    {
        cmd.add_option("--mode", mode, "fingerprinting: 'dynamic' or 'fixed:N' (N = 1..5)")
            ->capture_default_str();
        cmd.add_option("--gamma", gamma,
                       "dynamic mode: most postings a lookup may process before the n-gram is extended "
                       "[default: the bundle's recorded value, 1000 unless set at build time]");
        cmd.add_option("--n-max", n_max, "dynamic mode: longest n-gram tried; longer keys are never formed")
            ->capture_default_str();
        cmd.add_option("--bin-width", bin_width, "width of a relative-offset histogram bin (1 = exact offsets)")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
    }

    SearchConfig resolve(const IndexBundle& bundle) const
    {
        SearchConfig config;
        parse_mode(mode, config);
        config.gamma = gamma.value_or(bundle.params().gamma_default);
        config.n_max = n_max;
        config.bin_width = bin_width;
        return config;
    }
};

void write_file(const std::string& path, const std::function<void(std::ostream&)>& fn)
{
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw InputError("cannot open " + path + " for writing");
    }
    fn(file);
}

int cmd_build(const std::string& manifest, const std::string& features, const std::string& out_path,
              std::size_t n_max, std::size_t threads, std::uint64_t gamma_default, std::ostream& out)
{
    const Corpus corpus = ingest_corpus(manifest, features, threads);
    const IndexBundle bundle = build_bundle(corpus, n_max, threads, gamma_default);
    save_bundle(bundle, out_path);
    out << "pieces   " << corpus.manifest.piece_count() << '\n'
        << "pdfs     " << corpus.manifest.pdf_count() << '\n'
        << "words    " << corpus.total_words() << '\n';
    for (std::size_t n = 1; n <= bundle.n_max(); ++n) {
        const NGramIndex& index = bundle.index(n);
        out << n << "-gram   " << index.key_count() << " keys, " << index.posting_count() << " postings\n";
    }
    out << "wrote " << out_path << '\n';
    return 0;
}

int cmd_query(const std::string& bundle_path, const std::string& words_text, const std::string& feature_file,
              const SearchFlags& flags, std::optional<std::uint64_t> exclude_pdf_id, std::size_t top_k,
              std::ostream& out, std::ostream& err)
{
    const IndexBundle bundle = load_bundle(bundle_path);
    SearchConfig config = flags.resolve(bundle);
    if (exclude_pdf_id) {
        const auto pdf = bundle.manifest().find_pdf(*exclude_pdf_id);
        if (!pdf) {
            throw UsageError("--exclude-pdf: unknown pdf id " + std::to_string(*exclude_pdf_id));
        }
        config.exclude_pdf = *pdf;
    }
    std::vector<BootlegWord> words;
    if (!feature_file.empty()) {
        words = flatten_pages(read_feature_file(feature_file));
    } else {
        try {
            words = parse_word_list(words_text);
        } catch (const InputError& e) {
            throw UsageError(std::string("--words: ") + e.what());
        }
    }
    if (words.empty()) {
        err << "warning: query has no nonzero words; every piece scores 0\n";
    }
    const RankedResult result = search(words, bundle, config);
    const auto& pieces = bundle.manifest().pieces();
    out << std::left << std::setw(6) << "rank" << std::setw(12) << "piece_id" << std::setw(8) << "score"
        << "name\n";
    for (std::size_t i = 0; i < std::min(top_k, result.ranking.size()); ++i) {
        const PieceScore& ps = result.ranking[i];
        out << std::setw(6) << (i + 1) << std::setw(12) << ps.piece_id << std::setw(8) << ps.score
            << pieces[ps.piece].name << '\n';
    }
    out << "# " << config.mode_string() << ", " << result.diagnostics.fingerprints << " fingerprints, "
        << result.diagnostics.postings << " postings, " << result.diagnostics.seconds << " s\n";
    return 0;
}

int cmd_bench(const std::string& bundle_path, const std::string& queries_path, const SearchFlags& flags,
              bool exclude_truth, bool parallel, std::size_t threads, bool warmup, const std::string& report_path,
              const std::string& csv_path, std::ostream& out)
{
    const IndexBundle bundle = load_bundle(bundle_path);
    const SearchConfig config = flags.resolve(bundle);
    const QuerySet queries = load_queries(queries_path, bundle.manifest());
    EvalOptions options;
    options.condition = exclude_truth ? Condition::exact_removed : Condition::exact_present;
    options.parallel = parallel;
    options.threads = threads;
    options.warmup = warmup;
    const EvalReport report = evaluate(queries, bundle, config, options);
    if (!report_path.empty()) {
        write_file(report_path, [&](std::ostream& o) { write_report_json(report, o); });
    }
    if (!csv_path.empty()) {
        write_file(csv_path, [&](std::ostream& o) { write_report_csv(report, o); });
    }
    write_report_summary(report, out);
    return 0;
}

int cmd_stats(const std::string& bundle_path, const SearchFlags& flags, const std::string& csv_path,
              std::ostream& out)
{
    const IndexBundle bundle = load_bundle(bundle_path);
    const SearchConfig config = flags.resolve(bundle);
    const DistributionExport dist = export_distribution(bundle, config);
    if (csv_path.empty() || csv_path == "-") {
        write_distribution_csv(dist, out);
    } else {
        write_file(csv_path, [&](std::ostream& o) { write_distribution_csv(dist, o); });
        std::size_t forced = 0;
        for (const auto& e : dist.entries) {
            forced += e.cap_forced ? 1 : 0;
        }
        out << dist.mode << ": " << dist.entries.size() << " distinct fingerprints, " << dist.total()
            << " total, peak " << dist.peak() << " (" << forced << " cap-forced keys)\n"
            << "wrote " << csv_path << '\n';
    }
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"sheetid: identify the piece a bootleg-score excerpt comes from", "sheetid"};
    app.require_subcommand(1);

    auto* build = app.add_subcommand("build", "ingest a corpus and write an n-gram index bundle");
    std::string manifest;
    std::string features;
    std::string out_path;
    std::size_t build_n_max = kDefaultNMax;
    std::size_t threads = 1;
    std::uint64_t gamma_default = kDefaultGamma;
    build->add_option("--manifest", manifest, "corpus manifest (JSON)")->required();
    build->add_option("--features", features, "directory holding <pdf_id>.json feature files")->required();
    build->add_option("--out", out_path, "bundle file to write")->required();
    build->add_option("--n-max", build_n_max, "build n-gram indexes for n = 1..N (5 enables the fixed:5 mode)")
        ->capture_default_str()
        ->check(CLI::Range(1, static_cast<int>(kMaxGram)));
    build->add_option("--threads", threads, "worker threads for loading and indexing (0 = all cores)")
        ->capture_default_str();
    build->add_option("--gamma-default", gamma_default, "gamma recorded in the bundle for later searches")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    auto* query = app.add_subcommand("query", "rank pieces for one query");
    std::string bundle_path;
    std::string words_text;
    std::string feature_file;
    SearchFlags query_flags;
    std::optional<std::uint64_t> exclude_pdf;
    std::size_t top_k = 10;
    query->add_option("--bundle", bundle_path, "index bundle")->required();
    auto* words_opt = query->add_option("--words", words_text, "comma-separated words (decimal or 0x hex)");
    auto* file_opt = query->add_option("--feature-file", feature_file, "query as a feature file");
    words_opt->excludes(file_opt);
    query_flags.attach(*query);
    query->add_option("--exclude-pdf", exclude_pdf, "ignore this pdf id while searching");
    query->add_option("--top-k", top_k, "pieces to print")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "evaluate a query set: MRR and per-query search latency");
    std::string queries_path;
    std::string report_path;
    std::string csv_path;
    SearchFlags bench_flags;
    bool exclude_truth = false;
    bool parallel = false;
    bool no_warmup = false;
    std::size_t bench_threads = 0;
    bench->add_option("--bundle", bundle_path, "index bundle")->required();
    bench->add_option("--queries", queries_path, "query set (JSON)")->required();
    bench_flags.attach(*bench);
    bench->add_flag("--exclude-truth-pdf", exclude_truth,
                    "condition 2: drop each query's own pdf; only pieces with >= 2 pdfs are evaluated");
    bench->add_flag("--parallel", parallel, "run queries concurrently (latency is not reported)");
    bench->add_option("--threads", bench_threads, "threads for --parallel (0 = all cores)")->capture_default_str();
    bench->add_flag("--no-warmup", no_warmup, "do not run an untimed warm-up query");
    bench->add_option("--report", report_path, "write the full report as JSON");
    bench->add_option("--csv", csv_path, "write per-query rows as CSV");

    auto* stats = app.add_subcommand("stats", "export a fingerprint frequency distribution as CSV");
    SearchFlags stats_flags;
    std::string stats_out;
    stats->add_option("--bundle", bundle_path, "index bundle")->required();
    stats_flags.attach(*stats);
    stats->add_option("--out", stats_out, "CSV destination ('-' or omitted: stdout)");

    std::vector<std::string> argv_store{"sheetid"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) {
        argv.push_back(a.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*build) {
            return cmd_build(manifest, features, out_path, build_n_max, threads, gamma_default, out);
        }
        if (*query) {
            return cmd_query(bundle_path, words_text, feature_file, query_flags, exclude_pdf, top_k, out, err);
        }
        if (*bench) {
            return cmd_bench(bundle_path, queries_path, bench_flags, exclude_truth, parallel, bench_threads,
                             !no_warmup, report_path, csv_path, out);
        }
        if (*stats) {
            return cmd_stats(bundle_path, stats_flags, stats_out, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace sheetid

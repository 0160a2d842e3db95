#include "sheetid/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sheetid/detail/parallel.hpp"
#include "sheetid/error.hpp"

namespace sheetid {

double mean_reciprocal_rank(std::span<const std::size_t> ranks)
{
    if (ranks.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t r : ranks) {
        if (r == 0) {
            throw UsageError("ranks are 1-based; got 0");
        }
        sum += 1.0 / static_cast<double>(r);
    }
    return sum / static_cast<double>(ranks.size());
}

namespace {

struct Resolved {
    const Query* query = nullptr;
    std::optional<PdfIndex> exclude;
};

std::vector<Resolved> resolve(const QuerySet& queries, const IndexBundle& bundle, Condition condition,
                              std::size_t& skipped)
{
    const CorpusManifest& manifest = bundle.manifest();
    std::vector<Resolved> out;
    out.reserve(queries.queries.size());
    skipped = 0;
    for (const Query& q : queries.queries) {
        const auto piece = manifest.find_piece(q.piece_id);
        const auto pdf = manifest.find_pdf(q.pdf_id);
        if (!piece || !pdf || manifest.pdfs()[*pdf].piece != *piece) {
            throw InputError("query " + q.id + ": truth piece " + std::to_string(q.piece_id) + " / pdf "
                             + std::to_string(q.pdf_id) + " not resolvable in this bundle");
        }
        if (condition == Condition::exact_removed) {
            if (manifest.pieces()[*piece].pdfs.size() < 2) {
                ++skipped;
                continue;
            }
            out.push_back(Resolved{&q, *pdf});
        } else {
            out.push_back(Resolved{&q, std::nullopt});
        }
    }
    return out;
}

} // namespace

EvalReport evaluate(const QuerySet& queries, const IndexBundle& bundle, const SearchConfig& config,
                    const EvalOptions& options)
{
    EvalReport report;
    report.config = config;
    report.condition = options.condition;
    report.piece_count = bundle.manifest().piece_count();
    report.latency_reported = !options.parallel;
    config.validate(bundle);
    const std::vector<Resolved> work = resolve(queries, bundle, options.condition, report.skipped);

    auto run_one = [&](const Resolved& item) {
        SearchConfig cfg = config;
        if (options.condition == Condition::exact_removed) {
            cfg.exclude_pdf = item.exclude;
        }
        const RankedResult result = search(item.query->words, bundle, cfg);
        QueryRecord rec;
        rec.query_id = item.query->id;
        // An empty query carries no evidence; it gets the worst rank rather
        // than whatever the id tie-break would give it.
        rec.rank = item.query->empty ? result.ranking.size() : rank_of(result, item.query->piece_id);
        rec.reciprocal_rank = 1.0 / static_cast<double>(rec.rank);
        rec.seconds = result.diagnostics.seconds;
        rec.fingerprints = result.diagnostics.fingerprints;
        rec.postings = result.diagnostics.postings;
        return rec;
    };

    report.records.resize(work.size());
    if (options.parallel) {
        detail::for_each_shard(work.size(), detail::resolve_threads(options.threads),
                               [&](std::size_t, std::size_t begin, std::size_t end) {
                                   for (std::size_t i = begin; i < end; ++i) {
                                       report.records[i] = run_one(work[i]);
                                       report.records[i].seconds = 0.0;
                                   }
                               });
    } else {
        if (options.warmup && !work.empty()) {
            (void)run_one(work.front());
        }
        for (std::size_t i = 0; i < work.size(); ++i) {
            report.records[i] = run_one(work[i]);
        }
    }

    std::vector<std::size_t> ranks;
    ranks.reserve(report.records.size());
    for (const auto& rec : report.records) {
        ranks.push_back(rec.rank);
    }
    report.mrr = mean_reciprocal_rank(ranks);

    if (report.latency_reported && !report.records.empty()) {
        double sum = 0.0;
        for (const auto& rec : report.records) {
            sum += rec.seconds;
        }
        report.latency_mean = sum / static_cast<double>(report.records.size());
        if (report.records.size() > 1) {
            double sq = 0.0;
            for (const auto& rec : report.records) {
                sq += (rec.seconds - report.latency_mean) * (rec.seconds - report.latency_mean);
            }
            report.latency_std = std::sqrt(sq / static_cast<double>(report.records.size() - 1));
        }
    }
    return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out)
{
    out << "query_id,rank,rr,seconds,fingerprints,postings\n";
    out << std::setprecision(9);
    for (const auto& rec : report.records) {
        out << rec.query_id << ',' << rec.rank << ',' << rec.reciprocal_rank << ',' << rec.seconds << ','
            << rec.fingerprints << ',' << rec.postings << '\n';
    }
}

void write_report_json(const EvalReport& report, std::ostream& out)
{
    using nlohmann::json;
    json doc;
    doc["format_version"] = kTextFormatVersion;
    doc["mrr"] = report.mrr;
    doc["condition"] = static_cast<int>(report.condition);
    doc["queries"] = report.records.size();
    doc["skipped"] = report.skipped;
    doc["pieces"] = report.piece_count;
    doc["config"] = {
        {"mode", report.config.mode_string()},
        {"gamma", report.config.gamma},
        {"n_max", report.config.n_max},
        {"bin_width", report.config.bin_width},
    };
    doc["latency"] = {
        {"reported", report.latency_reported},
        {"scope", "search only: fingerprinting, scoring, ranking"},
        {"mean_seconds", report.latency_mean},
        {"std_seconds", report.latency_std},
    };
    json records = json::array();
    for (const auto& rec : report.records) {
        records.push_back({{"query_id", rec.query_id},
                           {"rank", rec.rank},
                           {"rr", rec.reciprocal_rank},
                           {"seconds", rec.seconds},
                           {"fingerprints", rec.fingerprints},
                           {"postings", rec.postings}});
    }
    doc["records"] = std::move(records);
    out << doc.dump(2) << '\n';
}

void write_report_summary(const EvalReport& report, std::ostream& out)
{
    const auto flags = out.flags();
    out << std::left << std::setw(22) << "mode" << report.config.mode_string() << '\n';
    if (report.config.mode == SearchMode::dynamic) {
        out << std::setw(22) << "gamma" << report.config.gamma << '\n'
            << std::setw(22) << "n_max" << report.config.n_max << '\n';
    }
    out << std::setw(22) << "condition" << static_cast<int>(report.condition) << '\n'
        << std::setw(22) << "queries" << report.records.size();
    if (report.skipped) {
        out << " (" << report.skipped << " skipped: single-pdf piece)";
    }
    out << '\n' << std::setw(22) << "MRR" << std::fixed << std::setprecision(4) << report.mrr << '\n';
    if (report.latency_reported) {
        out << std::setw(22) << "search latency mean" << std::setprecision(6) << report.latency_mean << " s\n"
            << std::setw(22) << "search latency std" << report.latency_std << " s\n";
    } else {
        out << std::setw(22) << "search latency" << "not measured (parallel run)\n";
    }
    out.flags(flags);
}

std::uint64_t DistributionExport::total() const noexcept
{
    std::uint64_t sum = 0;
    for (const auto& e : entries) {
        sum += e.count;
    }
    return sum;
}

std::uint64_t DistributionExport::peak(bool exclude_cap_forced) const noexcept
{
    for (const auto& e : entries) {
        if (!exclude_cap_forced || !e.cap_forced) {
            return e.count;
        }
    }
    return 0;
}

DistributionExport export_distribution(const IndexBundle& bundle, std::span<const BootlegScore> scores,
                                       const SearchConfig& config)
{
    config.validate(bundle);
    DistributionExport dist;
    dist.mode = config.mode_string();
    if (config.mode == SearchMode::fixed) {
        const NGramIndex& index = bundle.index(config.fixed_n);
        dist.entries.reserve(index.key_count());
        for (std::size_t slot = 0; slot < index.key_count(); ++slot) {
            dist.entries.push_back(DistributionEntry{index.keys()[slot], index.postings_at(slot).size(), false});
        }
    } else {
        std::unordered_map<FingerprintKey, DistributionEntry, FingerprintKeyHash> emitted;
        for (const BootlegScore& score : scores) {
            for (const QueryFingerprint& fp : make_dynamic_fingerprints(score.words, bundle, config)) {
                auto [it, inserted] = emitted.try_emplace(fp.key, DistributionEntry{fp.key, 0, fp.forced});
                ++it->second.count;
            }
        }
        dist.entries.reserve(emitted.size());
        for (auto& [key, entry] : emitted) {
            dist.entries.push_back(entry);
        }
    }
    std::sort(dist.entries.begin(), dist.entries.end(), [](const DistributionEntry& a, const DistributionEntry& b) {
        return a.count != b.count ? a.count > b.count : a.key < b.key;
    });
    return dist;
}

DistributionExport export_distribution(const IndexBundle& bundle, const SearchConfig& config)
{
    if (config.mode == SearchMode::fixed) {
        return export_distribution(bundle, std::span<const BootlegScore>{}, config);
    }
    const std::vector<BootlegScore> scores = reconstruct_scores(bundle);
    return export_distribution(bundle, scores, config);
}

void write_distribution_csv(const DistributionExport& dist, std::ostream& out)
{
    out << "rank,count\n";
    for (std::size_t i = 0; i < dist.entries.size(); ++i) {
        out << (i + 1) << ',' << dist.entries[i].count << '\n';
    }
}

} // namespace sheetid

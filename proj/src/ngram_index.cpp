#include "sheetid/ngram_index.hpp"

#include <algorithm>

#include "sheetid/detail/parallel.hpp"
#include "sheetid/error.hpp"

namespace sheetid {

NGramIndex::NGramIndex(std::size_t n) : n_(n)
{
    if (n == 0 || n > kMaxGram) {
        throw UsageError("n-gram order " + std::to_string(n) + " outside [1, " + std::to_string(kMaxGram) + "]");
    }
}

NGramIndex NGramIndex::from_parts(std::size_t n, std::vector<FingerprintKey> keys, std::vector<std::uint64_t> starts,
                                  std::vector<Posting> postings)
{
    NGramIndex index(n);
    if (starts.size() != keys.size() + 1 || starts.front() != 0 || starts.back() != postings.size()) {
        throw FormatError("n=" + std::to_string(n) + ": posting layout does not match key count");
    }
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i].n() != n) {
            throw FormatError("n=" + std::to_string(n) + ": key " + keys[i].to_string() + " has wrong length");
        }
        if (i > 0 && !(keys[i - 1] < keys[i])) {
            throw FormatError("n=" + std::to_string(n) + ": keys not strictly ascending");
        }
        if (starts[i] >= starts[i + 1]) {
            throw FormatError("n=" + std::to_string(n) + ": empty or inverted posting list");
        }
        if (!std::is_sorted(postings.begin() + static_cast<std::ptrdiff_t>(starts[i]),
                            postings.begin() + static_cast<std::ptrdiff_t>(starts[i + 1]))) {
            throw FormatError("n=" + std::to_string(n) + ": posting list of " + keys[i].to_string() + " not sorted");
        }
    }
    index.keys_ = std::move(keys);
    index.starts_ = std::move(starts);
    index.postings_ = std::move(postings);
    index.index_slots();
    return index;
}

void NGramIndex::index_slots()
{
    slots_.clear();
    slots_.reserve(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        slots_.emplace(keys_[i], static_cast<std::uint32_t>(i));
    }
}

std::span<const Posting> NGramIndex::lookup(const FingerprintKey& key) const
{
    if (key.n() != n_) {
        throw UsageError("lookup of a " + std::to_string(key.n()) + "-gram in the " + std::to_string(n_)
                         + "-gram index");
    }
    const auto it = slots_.find(key);
    if (it == slots_.end()) {
        return {};
    }
    return postings_at(it->second);
}

std::span<const Posting> NGramIndex::postings_at(std::size_t slot) const
{
    const auto begin = starts_.at(slot);
    const auto end = starts_.at(slot + 1);
    return {postings_.data() + begin, static_cast<std::size_t>(end - begin)};
}

bool operator==(const NGramIndex& a, const NGramIndex& b)
{
    return a.n_ == b.n_ && a.keys_ == b.keys_ && a.starts_ == b.starts_ && a.postings_ == b.postings_;
}

namespace {

struct Entry {
    FingerprintKey key;
    Posting posting;

    friend auto operator<=>(const Entry&, const Entry&) = default;
};

} // namespace

NGramIndex build_index(std::span<const BootlegScore> scores, std::size_t n, std::size_t threads)
{
    NGramIndex probe(n); // validates n
    threads = detail::resolve_threads(threads);

    std::vector<std::vector<Entry>> shards(std::max<std::size_t>(1, std::min(threads, scores.size())));
    detail::for_each_shard(scores.size(), shards.size(), [&](std::size_t shard, std::size_t begin, std::size_t end) {
        auto& out = shards[shard];
        std::size_t expected = 0;
        for (std::size_t i = begin; i < end; ++i) {
            if (scores[i].words.size() >= n) {
                expected += scores[i].words.size() - n + 1;
            }
        }
        out.reserve(expected);
        for (std::size_t i = begin; i < end; ++i) {
            const auto& words = scores[i].words;
            if (words.size() < n) {
                continue;
            }
            for (std::size_t off = 0; off + n <= words.size(); ++off) {
                out.push_back(Entry{FingerprintKey(std::span(words).subspan(off, n)),
                                    Posting{scores[i].pdf, static_cast<std::uint32_t>(off)}});
            }
        }
        std::sort(out.begin(), out.end());
    });

    // Entries are totally ordered, so merging sorted shards in any order
    // yields the same sequence.
    std::vector<Entry> all = std::move(shards.front());
    for (std::size_t s = 1; s < shards.size(); ++s) {
        const auto mid = static_cast<std::ptrdiff_t>(all.size());
        all.insert(all.end(), shards[s].begin(), shards[s].end());
        shards[s] = {};
        std::inplace_merge(all.begin(), all.begin() + mid, all.end());
    }

    std::vector<FingerprintKey> keys;
    std::vector<std::uint64_t> starts{0};
    std::vector<Posting> postings;
    postings.reserve(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i == 0 || !(all[i].key == all[i - 1].key)) {
            if (i != 0) {
                starts.push_back(postings.size());
            }
            keys.push_back(all[i].key);
        }
        postings.push_back(all[i].posting);
    }
    if (!all.empty()) {
        starts.push_back(postings.size());
    }
    return NGramIndex::from_parts(n, std::move(keys), std::move(starts), std::move(postings));
}

IndexBundle::IndexBundle(CorpusManifest manifest, std::vector<std::uint32_t> pdf_lengths, BuildParams params,
                         std::vector<NGramIndex> indexes)
    : manifest_(std::move(manifest)), pdf_lengths_(std::move(pdf_lengths)), params_(params),
      indexes_(std::move(indexes))
{
    if (pdf_lengths_.size() != manifest_.pdf_count()) {
        throw FormatError("bundle: pdf length table does not match manifest");
    }
    if (params_.n_max != indexes_.size()) {
        throw FormatError("bundle: n_max does not match the number of indexes");
    }
    for (std::size_t i = 0; i < indexes_.size(); ++i) {
        if (indexes_[i].n() != i + 1) {
            throw FormatError("bundle: index " + std::to_string(i) + " has order " + std::to_string(indexes_[i].n()));
        }
    }
}

const NGramIndex& IndexBundle::index(std::size_t n) const
{
    if (!has_index(n)) {
        throw IndexAbsentError("index absent: bundle holds n-gram indexes 1.." + std::to_string(indexes_.size())
                               + ", requested n=" + std::to_string(n));
    }
    return indexes_[n - 1];
}

IndexBundle build_bundle(const Corpus& corpus, std::size_t n_max, std::size_t threads, std::uint64_t gamma_default)
{
    if (n_max == 0 || n_max > kMaxGram) {
        throw UsageError("n_max " + std::to_string(n_max) + " outside [1, " + std::to_string(kMaxGram) + "]");
    }
    if (corpus.scores.size() != corpus.manifest.pdf_count()) {
        throw UsageError("corpus has " + std::to_string(corpus.scores.size()) + " scores for "
                         + std::to_string(corpus.manifest.pdf_count()) + " pdfs");
    }
    std::vector<std::uint32_t> lengths;
    lengths.reserve(corpus.scores.size());
    for (std::size_t i = 0; i < corpus.scores.size(); ++i) {
        if (corpus.scores[i].pdf != i) {
            throw UsageError("corpus score " + std::to_string(i) + " carries pdf index "
                             + std::to_string(corpus.scores[i].pdf));
        }
        lengths.push_back(static_cast<std::uint32_t>(corpus.scores[i].words.size()));
    }
    std::vector<NGramIndex> indexes;
    indexes.reserve(n_max);
    for (std::size_t n = 1; n <= n_max; ++n) {
        indexes.push_back(build_index(corpus.scores, n, threads));
    }
    BuildParams params{static_cast<std::uint32_t>(n_max), gamma_default, corpus_checksum(corpus)};
    return IndexBundle(corpus.manifest, std::move(lengths), params, std::move(indexes));
}

std::vector<BootlegScore> reconstruct_scores(const IndexBundle& bundle)
{
    const auto& lengths = bundle.pdf_lengths();
    std::vector<BootlegScore> scores(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        scores[i].pdf = static_cast<PdfIndex>(i);
        scores[i].words.resize(lengths[i]);
    }
    const NGramIndex& unigrams = bundle.index(1);
    for (std::size_t slot = 0; slot < unigrams.key_count(); ++slot) {
        const BootlegWord word{unigrams.keys()[slot].words()[0]};
        for (const Posting& p : unigrams.postings_at(slot)) {
            scores.at(p.pdf).words.at(p.offset) = word;
        }
    }
    return scores;
}

} // namespace sheetid

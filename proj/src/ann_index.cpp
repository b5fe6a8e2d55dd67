#include "lsrom/ann_index.hpp"

#include <algorithm>
#include <cmath>

#include "lsrom/rng.hpp"

namespace lsrom {

struct AnnIndex::VisitedPool {
    struct List {
        std::vector<std::uint32_t> tags;
        std::uint32_t epoch = 0;
    };

    std::mutex mutex;
    std::vector<std::unique_ptr<List>> free;

    std::unique_ptr<List> acquire(std::size_t n) {
        std::unique_ptr<List> list;
        {
            std::lock_guard lock(mutex);
            if (!free.empty()) {
                list = std::move(free.back());
                free.pop_back();
            }
        }
        if (!list) list = std::make_unique<List>();
        if (list->tags.size() < n) list->tags.resize(n, 0);
        if (++list->epoch == 0) {
            std::fill(list->tags.begin(), list->tags.end(), 0);
            list->epoch = 1;
        }
        return list;
    }

    void release(std::unique_ptr<List> list) {
        std::lock_guard lock(mutex);
        free.push_back(std::move(list));
    }
};

AnnIndex::AnnIndex(std::size_t dim, AnnParams params)
    : dim_(dim),
      params_(params),
      level_mult_(1.0 / std::log(static_cast<double>(std::max<std::size_t>(params.max_degree, 2)))),
      rng_state_(derive_seed(params.seed, 0xA11)),
      visited_(std::make_unique<VisitedPool>()) {
    if (dim == 0) throw InvalidInput("ann index needs at least one dimension");
    if (params.max_degree < 2) throw InvalidInput("ann index max degree must be at least 2");
    if (params.ef_construction < 1 || params.ef_search < 1) throw InvalidInput("ef must be positive");
}

AnnIndex::AnnIndex(AnnIndex&&) noexcept = default;
AnnIndex& AnnIndex::operator=(AnnIndex&&) noexcept = default;
AnnIndex::~AnnIndex() = default;

AnnIndex AnnIndex::build(const Matrix& points, AnnParams params) {
    AnnIndex index(points.cols(), params);
    index.coords_.reserve(points.rows() * points.cols());
    for (std::size_t i = 0; i < points.rows(); ++i) index.add(points.row(i), i);
    return index;
}

double AnnIndex::dist(const double* a, const double* b) const {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

std::uint32_t* AnnIndex::link_block(std::uint32_t node, int level) {
    if (level == 0) return links0_.data() + std::size_t{node} * (capacity(0) + 1);
    return links_up_[node].data() + static_cast<std::size_t>(level - 1) * (capacity(1) + 1);
}

const std::uint32_t* AnnIndex::link_block(std::uint32_t node, int level) const {
    if (level == 0) return links0_.data() + std::size_t{node} * (capacity(0) + 1);
    return links_up_[node].data() + static_cast<std::size_t>(level - 1) * (capacity(1) + 1);
}

std::vector<std::uint32_t> AnnIndex::links(std::size_t node, std::size_t level) const {
    const auto n = static_cast<std::uint32_t>(node);
    if (static_cast<int>(level) > levels_[node]) return {};
    const auto* block = link_block(n, static_cast<int>(level));
    return {block + 1, block + 1 + block[0]};
}

std::size_t AnnIndex::level_size(std::size_t level) const {
    return static_cast<std::size_t>(
        std::count_if(levels_.begin(), levels_.end(), [&](int l) { return l >= static_cast<int>(level); }));
}

int AnnIndex::draw_level() {
    rng_state_ = derive_seed(rng_state_, 1);
    double u = static_cast<double>(rng_state_ >> 11) * 0x1.0p-53;
    if (u <= 0.0) u = 0x1.0p-53;
    return static_cast<int>(std::floor(-std::log(u) * level_mult_));
}

std::uint32_t AnnIndex::greedy_descent(const double* q, std::uint32_t entry, int from_level, int to_level) const {
    std::uint32_t cur = entry;
    double cur_d = dist(q, coords(cur));
    for (int level = from_level; level >= to_level; --level) {
        bool moved = true;
        while (moved) {
            moved = false;
            const auto* block = link_block(cur, level);
            for (std::uint32_t e = 0; e < block[0]; ++e) {
                const auto cand = block[1 + e];
                const double d = dist(q, coords(cand));
                if (d < cur_d || (d == cur_d && cand < cur)) {
                    cur_d = d;
                    cur = cand;
                    moved = true;
                }
            }
        }
    }
    return cur;
}

namespace {

inline bool closer(const std::pair<double, std::uint32_t>& a, const std::pair<double, std::uint32_t>& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
}
inline bool farther(const std::pair<double, std::uint32_t>& a, const std::pair<double, std::uint32_t>& b) {
    return closer(b, a);
}

}  // namespace

std::vector<AnnIndex::Candidate> AnnIndex::search_layer(const double* q, std::uint32_t entry, std::size_t ef,
                                                        int level) const {
    auto visited = visited_->acquire(size());
    auto& tags = visited->tags;
    const auto epoch = visited->epoch;

    // frontier is a min-heap (closest on top), best a max-heap (farthest on top).
    thread_local std::vector<Candidate> frontier;
    std::vector<Candidate> best;
    frontier.clear();
    best.reserve(ef + 1);
    const double d0 = dist(q, coords(entry));
    tags[entry] = epoch;
    frontier.emplace_back(d0, entry);
    best.emplace_back(d0, entry);

    while (!frontier.empty()) {
        const auto current = frontier.front();
        if (best.size() >= ef && closer(best.front(), current)) break;
        std::pop_heap(frontier.begin(), frontier.end(), farther);
        frontier.pop_back();
        const auto* block = link_block(current.second, level);
        for (std::uint32_t e = 0; e < block[0]; ++e) {
            const auto next = block[1 + e];
            if (tags[next] == epoch) continue;
            tags[next] = epoch;
            const Candidate c{dist(q, coords(next)), next};
            if (best.size() < ef || closer(c, best.front())) {
                frontier.push_back(c);
                std::push_heap(frontier.begin(), frontier.end(), farther);
                best.push_back(c);
                std::push_heap(best.begin(), best.end(), closer);
                if (best.size() > ef) {
                    std::pop_heap(best.begin(), best.end(), closer);
                    best.pop_back();
                }
            }
        }
    }
    visited_->release(std::move(visited));
    std::sort(best.begin(), best.end(), closer);
    return best;
}

// Keeps a candidate only if it is closer to the base point than to every
// neighbour already kept, which spreads links over different directions.
std::vector<AnnIndex::Candidate> AnnIndex::select_neighbors(std::vector<Candidate> sorted, std::size_t m) const {
    if (sorted.size() <= m) return sorted;
    std::vector<Candidate> kept;
    kept.reserve(m);
    for (const auto& c : sorted) {
        if (kept.size() >= m) break;
        bool diverse = true;
        for (const auto& k : kept) {
            if (dist(coords(c.second), coords(k.second)) < c.first) {
                diverse = false;
                break;
            }
        }
        if (diverse) kept.push_back(c);
    }
    return kept;
}

void AnnIndex::connect(std::uint32_t node, std::uint32_t other, int level) {
    auto* block = link_block(node, level);
    const auto cap = capacity(level);
    if (block[0] < cap) {
        block[1 + block[0]] = other;
        ++block[0];
        return;
    }
    std::vector<Candidate> cands;
    cands.reserve(cap + 1);
    const double* base = coords(node);
    for (std::uint32_t e = 0; e < block[0]; ++e) cands.emplace_back(dist(base, coords(block[1 + e])), block[1 + e]);
    cands.emplace_back(dist(base, coords(other)), other);
    std::sort(cands.begin(), cands.end());
    const auto kept = select_neighbors(std::move(cands), cap);
    block[0] = static_cast<std::uint32_t>(kept.size());
    for (std::size_t e = 0; e < kept.size(); ++e) block[1 + e] = kept[e].second;
}

void AnnIndex::add(std::span<const double> point, std::uint64_t id) {
    if (point.size() != dim_) throw InvalidInput("ann index: point dimension mismatch");
    const auto node = static_cast<std::uint32_t>(ids_.size());
    const int level = draw_level();
    coords_.insert(coords_.end(), point.begin(), point.end());
    ids_.push_back(id);
    levels_.push_back(level);
    links0_.resize(links0_.size() + capacity(0) + 1, 0);
    links_up_.emplace_back(static_cast<std::size_t>(level) * (capacity(1) + 1), 0);

    if (max_level_ < 0) {
        entry_ = node;
        max_level_ = level;
        return;
    }
    const double* q = coords(node);
    std::uint32_t ep = entry_;
    if (level < max_level_) ep = greedy_descent(q, ep, max_level_, level + 1);
    for (int lc = std::min(level, max_level_); lc >= 0; --lc) {
        auto cands = search_layer(q, ep, params_.ef_construction, lc);
        ep = cands.front().second;
        const auto chosen = select_neighbors(std::move(cands), params_.max_degree);
        auto* block = link_block(node, lc);
        block[0] = static_cast<std::uint32_t>(chosen.size());
        for (std::size_t e = 0; e < chosen.size(); ++e) block[1 + e] = chosen[e].second;
        for (const auto& c : chosen) connect(c.second, node, lc);
    }
    if (level > max_level_) {
        entry_ = node;
        max_level_ = level;
    }
}

std::vector<Neighbor> AnnIndex::knn(std::span<const double> query, std::size_t k) const {
    return knn(query, k, params_.ef_search);
}

std::vector<Neighbor> AnnIndex::knn(std::span<const double> query, std::size_t k, std::size_t ef) const {
    if (query.size() != dim_) throw InvalidInput("ann index: query dimension mismatch");
    if (k > size()) throw InvalidInput("ann index: k exceeds the number of indexed points");
    if (k == 0) return {};
    ef = std::max(ef, k);
    std::vector<Neighbor> out;
    if (ef >= size()) {
        // The beam would cover the whole index; scan it.
        out.reserve(size());
        for (std::uint32_t node = 0; node < size(); ++node) out.push_back({ids_[node], dist(query.data(), coords(node))});
    } else {
        const auto ep = greedy_descent(query.data(), entry_, max_level_, 1);
        const auto found = search_layer(query.data(), ep, ef, 0);
        out.reserve(found.size());
        for (const auto& [d, node] : found) out.push_back({ids_[node], d});
    }
    const auto kk = std::min(k, out.size());
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(kk), out.end());
    out.resize(kk);
    return out;
}

std::vector<Neighbor> exact_knn(const Matrix& points, std::span<const double> query, std::size_t k) {
    if (k > points.rows()) throw InvalidInput("exact_knn: k exceeds the number of points");
    if (query.size() != points.cols()) throw InvalidInput("exact_knn: dimension mismatch");
    std::vector<Neighbor> all(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) all[i] = {i, squared_distance(points.row(i), query)};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    all.resize(k);
    return all;
}

}  // namespace lsrom

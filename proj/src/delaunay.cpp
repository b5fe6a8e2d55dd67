#include "lsrom/delaunay.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>

namespace lsrom {

double orient2d(const double* a, const double* b, const double* c) {
    const long double abx = static_cast<long double>(b[0]) - a[0];
    const long double aby = static_cast<long double>(b[1]) - a[1];
    const long double acx = static_cast<long double>(c[0]) - a[0];
    const long double acy = static_cast<long double>(c[1]) - a[1];
    return static_cast<double>(abx * acy - aby * acx);
}

double in_circle(const double* a, const double* b, const double* c, const double* d) {
    const long double adx = static_cast<long double>(a[0]) - d[0];
    const long double ady = static_cast<long double>(a[1]) - d[1];
    const long double bdx = static_cast<long double>(b[0]) - d[0];
    const long double bdy = static_cast<long double>(b[1]) - d[1];
    const long double cdx = static_cast<long double>(c[0]) - d[0];
    const long double cdy = static_cast<long double>(c[1]) - d[1];
    const long double ad = adx * adx + ady * ady;
    const long double bd = bdx * bdx + bdy * bdy;
    const long double cd = cdx * cdx + cdy * cdy;
    return static_cast<double>(adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
                               ad * (bdx * cdy - bdy * cdx));
}

namespace {

using Tri = std::array<std::size_t, 3>;
using Edge = std::pair<std::size_t, std::size_t>;

Edge key(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

class Triangulator {
public:
    explicit Triangulator(const Matrix& pts) : pts_(pts) {}

    const double* p(std::size_t i) const { return pts_.data() + i * 2; }

    void add(std::size_t a, std::size_t b, std::size_t c) {
        if (orient2d(p(a), p(b), p(c)) < 0) std::swap(b, c);
        tris_.push_back({a, b, c});
    }

    std::vector<Tri>& tris() { return tris_; }

    // Lawson flips until every interior edge is locally Delaunay.
    void legalize() {
        bool flipped = true;
        std::size_t guard = 0;
        const std::size_t max_passes = 10 * tris_.size() + 100;
        while (flipped && guard++ < max_passes) {
            flipped = false;
            std::map<Edge, std::vector<std::size_t>> owners;
            for (std::size_t t = 0; t < tris_.size(); ++t) {
                for (int e = 0; e < 3; ++e) owners[key(tris_[t][e], tris_[t][(e + 1) % 3])].push_back(t);
            }
            std::vector<bool> touched(tris_.size(), false);
            for (auto& [edge, ts] : owners) {
                if (ts.size() != 2 || touched[ts[0]] || touched[ts[1]]) continue;
                auto& t1 = tris_[ts[0]];
                auto& t2 = tris_[ts[1]];
                const auto a = edge.first;
                const auto b = edge.second;
                const auto c = opposite(t1, a, b);
                const auto d = opposite(t2, a, b);
                if (in_circle(p(t1[0]), p(t1[1]), p(t1[2]), p(d)) > 0) {
                    // flip shared edge (a, b) into (c, d)
                    Tri n1{c, d, a};
                    Tri n2{c, d, b};
                    if (orient2d(p(n1[0]), p(n1[1]), p(n1[2])) < 0) std::swap(n1[1], n1[2]);
                    if (orient2d(p(n2[0]), p(n2[1]), p(n2[2])) < 0) std::swap(n2[1], n2[2]);
                    t1 = n1;
                    t2 = n2;
                    touched[ts[0]] = touched[ts[1]] = true;
                    flipped = true;
                }
            }
        }
    }

private:
    static std::size_t opposite(const Tri& t, std::size_t a, std::size_t b) {
        for (auto v : t) {
            if (v != a && v != b) return v;
        }
        return t[0];
    }

    const Matrix& pts_;
    std::vector<Tri> tris_;
};

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> delaunay_edges(const Matrix& points) {
    if (points.cols() != 2) throw InvalidInput("delaunay_edges expects 2-D points");
    const auto n = points.rows();
    std::vector<Edge> edges;
    if (n < 3) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
        }
        return edges;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points(a, 0) != points(b, 0)) return points(a, 0) < points(b, 0);
        if (points(a, 1) != points(b, 1)) return points(a, 1) < points(b, 1);
        return a < b;
    });

    Triangulator tri(points);
    auto P = [&](std::size_t i) { return points.data() + i * 2; };

    // Leading collinear chain.
    std::size_t m = 2;
    while (m < n && orient2d(P(order[0]), P(order[1]), P(order[m])) == 0.0) ++m;
    if (m == n) {
        for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back(key(order[i], order[i + 1]));
        std::sort(edges.begin(), edges.end());
        return edges;
    }
    const auto apex = order[m];
    for (std::size_t i = 0; i + 1 < m; ++i) tri.add(order[i], order[i + 1], apex);

    // Counter-clockwise hull as a cyclic vertex list.
    std::vector<std::size_t> hull;
    if (orient2d(P(order[0]), P(order[m - 1]), P(apex)) > 0) {
        for (std::size_t i = 0; i < m; ++i) hull.push_back(order[i]);
        hull.push_back(apex);
    } else {
        hull.push_back(apex);
        for (std::size_t i = m; i-- > 0;) hull.push_back(order[i]);
    }

    for (std::size_t s = m + 1; s < n; ++s) {
        const auto v = order[s];
        const auto h = hull.size();
        std::vector<bool> visible(h, false);
        for (std::size_t e = 0; e < h; ++e) {
            visible[e] = orient2d(P(hull[e]), P(hull[(e + 1) % h]), P(v)) < 0;
        }
        // Visible edges form one contiguous run on the cycle.
        std::size_t first = h;
        for (std::size_t e = 0; e < h; ++e) {
            if (visible[e] && !visible[(e + h - 1) % h]) {
                first = e;
                break;
            }
        }
        if (first == h) continue;  // on the hull boundary; cannot happen for sorted distinct input
        std::size_t count = 0;
        while (visible[(first + count) % h] && count < h) {
            const auto e = (first + count) % h;
            tri.add(hull[e], hull[(e + 1) % h], v);
            ++count;
        }
        // Replace the interior of the visible chain by v.
        std::vector<std::size_t> next;
        next.reserve(h + 1);
        const auto start_v = first;                 // keeps hull[first]
        const auto end_v = (first + count) % h;     // keeps hull[end_v]
        std::size_t i = end_v;
        do {
            next.push_back(hull[i]);
            i = (i + 1) % h;
        } while (i != (start_v + 1) % h);
        next.push_back(v);
        hull = std::move(next);
    }

    tri.legalize();
    for (const auto& t : tri.tris()) {
        for (int e = 0; e < 3; ++e) edges.push_back(key(t[e], t[(e + 1) % 3]));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

}  // namespace lsrom

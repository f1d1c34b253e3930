#pragma once

// Marching-squares level sets of a wave's stream function on [0, 2pi] x [0, 1].
// Curves that cross the xi = 0 / 2pi seam are split there, so every polyline stays inside one period.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "shearspec/catseye.hpp"

namespace shearspec {

struct Polyline {
    double level = 0.0;
    std::vector<std::pair<double, double>> points;  // (xi, y)
    bool closed = false;
};

struct ContourGrid {
    int nxi = 128;  // cells in xi over one period
    int ny = 256;   // cells in y
};

struct SampledField {
    std::vector<double> xi, y;
    std::vector<std::vector<double>> v;  // v[i][j] = psi(xi_i, y_j)
};

inline SampledField sample_wave(const TravellingWave& w, const ContourGrid& g = {}) {
    require(g.nxi >= 2 && g.ny >= 2, "sample_wave: grid too small");
    SampledField s;
    const double two_pi = 2.0 * std::numbers::pi;
    for (int i = 0; i <= g.nxi; ++i) s.xi.push_back(i == g.nxi ? two_pi : two_pi * i / g.nxi);
    for (int j = 0; j <= g.ny; ++j) s.y.push_back(static_cast<double>(j) / g.ny);
    s.v.assign(g.nxi + 1, std::vector<double>(g.ny + 1));
    for (int i = 0; i <= g.nxi; ++i)
        for (int j = 0; j <= g.ny; ++j) s.v[i][j] = (i == g.nxi) ? s.v[0][j] : w(s.xi[i], s.y[j]);
    return s;
}

inline std::vector<Polyline> contour_level(const SampledField& s, double level) {
    const int nx = static_cast<int>(s.xi.size()) - 1, ny = static_cast<int>(s.y.size()) - 1;
    // edge ids: horizontal (i,j)-(i+1,j) -> 2*(i*(ny+1)+j), vertical (i,j)-(i,j+1) -> 2*(i*(ny+1)+j)+1
    auto hid = [&](int i, int j) { return 2L * (static_cast<long>(i) * (ny + 1) + j); };
    auto vid = [&](int i, int j) { return 2L * (static_cast<long>(i) * (ny + 1) + j) + 1; };
    std::map<long, std::pair<double, double>> where;
    auto cross = [&](long id, int i0, int j0, int i1, int j1) {
        if (!where.count(id)) {
            double a = s.v[i0][j0], b = s.v[i1][j1];
            double t = (b == a) ? 0.5 : (level - a) / (b - a);
            t = std::clamp(t, 0.0, 1.0);
            where[id] = {s.xi[i0] + t * (s.xi[i1] - s.xi[i0]), s.y[j0] + t * (s.y[j1] - s.y[j0])};
        }
        return id;
    };
    std::vector<std::pair<long, long>> segs;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            double v00 = s.v[i][j], v10 = s.v[i + 1][j], v11 = s.v[i + 1][j + 1], v01 = s.v[i][j + 1];
            bool b00 = v00 >= level, b10 = v10 >= level, b11 = v11 >= level, b01 = v01 >= level;
            // edges in cyclic order: bottom, right, top, left
            std::vector<long> e;
            if (b00 != b10) e.push_back(cross(hid(i, j), i, j, i + 1, j));
            if (b10 != b11) e.push_back(cross(vid(i + 1, j), i + 1, j, i + 1, j + 1));
            if (b01 != b11) e.push_back(cross(hid(i, j + 1), i, j + 1, i + 1, j + 1));
            if (b00 != b01) e.push_back(cross(vid(i, j), i, j, i, j + 1));
            if (e.size() == 2) {
                segs.push_back({e[0], e[1]});
            } else if (e.size() == 4) {
                // ambiguous cell: the centre value decides which corners connect
                bool bc = 0.25 * (v00 + v10 + v11 + v01) >= level;
                if (bc == b00) {
                    segs.push_back({e[0], e[1]});
                    segs.push_back({e[2], e[3]});
                } else {
                    segs.push_back({e[0], e[3]});
                    segs.push_back({e[1], e[2]});
                }
            }
        }
    }
    std::map<long, std::vector<int>> at;
    for (int k = 0; k < static_cast<int>(segs.size()); ++k) {
        at[segs[k].first].push_back(k);
        at[segs[k].second].push_back(k);
    }
    std::vector<bool> used(segs.size(), false);
    std::vector<Polyline> out;
    auto walk = [&](int k0, long start) {
        Polyline pl;
        pl.level = level;
        pl.points.push_back(where[start]);
        long cur = start;
        int k = k0;
        while (k >= 0 && !used[k]) {
            used[k] = true;
            long nxt = segs[k].first == cur ? segs[k].second : segs[k].first;
            pl.points.push_back(where[nxt]);
            cur = nxt;
            k = -1;
            for (int c : at[cur])
                if (!used[c]) k = c;
        }
        pl.closed = pl.points.size() > 2 && cur == start;
        out.push_back(std::move(pl));
    };
    // open curves start at an edge used once (domain boundary or seam)
    for (auto& [id, ks] : at)
        if (ks.size() == 1 && !used[ks[0]]) walk(ks[0], id);
    for (int k = 0; k < static_cast<int>(segs.size()); ++k)
        if (!used[k]) walk(k, segs[k].first);
    return out;
}

inline std::vector<Polyline> streamlines(const TravellingWave& w, const std::vector<double>& levels,
                                         const ContourGrid& g = {}) {
    SampledField s = sample_wave(w, g);
    std::vector<Polyline> out;
    for (double l : levels) {
        auto p = contour_level(s, l);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

}  // namespace shearspec

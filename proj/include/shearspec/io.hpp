#pragma once

// Output plumbing: round-trip CSV, polyline SVG, content hashing and the on-disk result cache.

#include <charconv>
#include <chrono>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "shearspec/contour.hpp"
#include "shearspec/error.hpp"

namespace shearspec::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int schema_version = 1;

// 17 significant digits, fixed C-locale formatting
inline std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

// shortest representation that parses back to the same double
inline std::string fmt_short(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

using Cell = std::variant<double, long long, std::string>;

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != header_.size()) throw DomainError("csv: row width does not match header");
        rows_.push_back(cells);
    }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
        s += "\n";
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) s += ",";
                if (auto d = std::get_if<double>(&r[i])) s += fmt17(*d);
                else if (auto n = std::get_if<long long>(&r[i])) s += std::to_string(*n);
                else s += std::get<std::string>(r[i]);
            }
            s += "\n";
        }
        return s;
    }

    std::size_t size() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

inline json complex_json(std::complex<double> c) { return json{{"re", c.real()}, {"im", c.imag()}}; }

// a number with the grid it came from
inline json measured(double v, int N, double refinement_delta) {
    json j{{"value", v}, {"N", N}};
    j["refinement_delta"] = std::isfinite(refinement_delta) ? json(refinement_delta) : json(nullptr);
    return j;
}
inline json measured(std::complex<double> v, int N, double refinement_delta) {
    json j = measured(0.0, N, refinement_delta);
    j["value"] = complex_json(v);
    return j;
}
inline json exact(double v) { return json{{"value", v}, {"exact", true}}; }

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string utc_timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// streamlines as bare polylines plus labels; xi in [0, 2 pi] across, y in [0, 1] upwards
inline std::string streamlines_svg(const std::vector<Polyline>& lines, const std::string& title, int width = 800,
                                   int height = 400) {
    const double two_pi = 2.0 * std::numbers::pi, m = 40.0;
    auto X = [&](double xi) { return m + (width - 2 * m) * xi / two_pi; };
    auto Y = [&](double y) { return height - m - (height - 2 * m) * y; };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 "
      << width << " " << height << "\">\n";
    o << "<text x=\"" << m << "\" y=\"" << m / 2 << "\">" << title << "</text>\n";
    o << "<polyline points=\"" << X(0) << "," << Y(0) << " " << X(two_pi) << "," << Y(0) << " " << X(two_pi) << ","
      << Y(1) << " " << X(0) << "," << Y(1) << " " << X(0) << "," << Y(0) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (const auto& l : lines) {
        if (l.points.size() < 2) continue;
        o << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.7\" points=\"";
        for (std::size_t i = 0; i < l.points.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", X(l.points[i].first), Y(l.points[i].second));
            o << buf;
        }
        o << "\"/>\n";
    }
    o << "<text x=\"" << width / 2 << "\" y=\"" << height - 10 << "\">xi</text>\n";
    o << "<text x=\"8\" y=\"" << height / 2 << "\">y</text>\n";
    o << "<text x=\"" << X(0) - 4 << "\" y=\"" << height - m + 16 << "\">0</text>\n";
    o << "<text x=\"" << X(two_pi) - 12 << "\" y=\"" << height - m + 16 << "\">2pi</text>\n";
    o << "</svg>\n";
    return o.str();
}

inline void write_text(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << s;
}

inline std::optional<std::string> read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) return std::nullopt;
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Result record: the payload is a pure function of the input hash; created and from_cache are metadata.
struct ResultRecord {
    int schema = schema_version;
    std::string input_hash;
    std::string subcommand;
    json config;
    std::string created;
    json payload;
    json provenance;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> side_files;  // file name -> content

    json to_json() const {
        json j;
        j["schema_version"] = schema;
        j["input_hash"] = input_hash;
        j["subcommand"] = subcommand;
        j["config"] = config;
        j["created"] = created;
        j["payload"] = payload;
        j["provenance"] = provenance;
        j["warnings"] = warnings;
        json names = json::array();
        for (const auto& [k, v] : side_files) names.push_back(k);
        j["side_files"] = names;
        return j;
    }

    static ResultRecord from_json(const json& j) {
        ResultRecord r;
        r.schema = j.at("schema_version").get<int>();
        r.input_hash = j.at("input_hash").get<std::string>();
        r.subcommand = j.at("subcommand").get<std::string>();
        r.config = j.at("config");
        r.created = j.at("created").get<std::string>();
        r.payload = j.at("payload");
        r.provenance = j.at("provenance");
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    }
};

// cache root: $SHEARSPEC_CACHE_DIR when set, else <out>/.cache
inline fs::path cache_root(const fs::path& out_dir) {
    if (const char* e = std::getenv("SHEARSPEC_CACHE_DIR"); e && *e) return fs::path(e);
    return out_dir / ".cache";
}

class ResultCache {
public:
    explicit ResultCache(fs::path root, std::ostream* log = &std::cerr) : root_(std::move(root)), log_(log) {}

    const fs::path& root() const { return root_; }

    // hit iff the stored hash and schema version match; unreadable entries are misses
    std::optional<ResultRecord> lookup(const std::string& key, int schema = schema_version) const {
        fs::path dir = root_ / key;
        auto text = read_text(dir / "record.json");
        if (!text) return std::nullopt;
        try {
            json j = json::parse(*text);
            ResultRecord r = ResultRecord::from_json(j);
            if (r.schema != schema || r.input_hash != key) return std::nullopt;
            for (const auto& name : j.at("side_files")) {
                auto content = read_text(dir / "files" / name.get<std::string>());
                if (!content) throw Error("missing side file " + name.get<std::string>());
                r.side_files[name.get<std::string>()] = *content;
            }
            return r;
        } catch (const std::exception& e) {
            if (log_) *log_ << "warning: ignoring corrupted cache entry " << key << ": " << e.what() << "\n";
            return std::nullopt;
        }
    }

    void store(const ResultRecord& r) const {
        fs::path dir = root_ / r.input_hash;
        fs::path tmp = root_ / (r.input_hash + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
        fs::remove_all(tmp);
        for (const auto& [name, content] : r.side_files) write_text(tmp / "files" / name, content);
        write_text(tmp / "record.json", r.to_json().dump(2) + "\n");
        std::error_code ec;
        fs::remove_all(dir, ec);
        fs::rename(tmp, dir, ec);
        if (ec) fs::remove_all(tmp, ec);
    }

private:
    fs::path root_;
    std::ostream* log_;
};

}  // namespace shearspec::io

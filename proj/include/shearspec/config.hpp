#pragma once

// Run configuration: flat key = value files plus command-line overrides (overrides win).
// Every key is typed and belongs to a set of subcommands; values are canonicalised before hashing.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "shearspec/error.hpp"
#include "shearspec/io.hpp"

namespace shearspec {

class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

enum class KeyType { real, integer, boolean, text, real_list, int_list };

struct KeySpec {
    std::string name;
    KeyType type;
    std::string default_value;
    std::string help;
    std::set<std::string> commands;  // empty: every subcommand
    bool hashed = true;              // false for plumbing keys (out, cache, workers)
};

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s = {"sturm", "rayleigh", "os", "catseye", "shear3d", "drift", "sweep"};
    return s;
}

inline const std::vector<KeySpec>& key_table() {
    using T = KeyType;
    static const std::vector<KeySpec> t = {
        {"profile", T::text, "oscillatory", "linear | oscillatory | sine", {}},
        {"n", T::integer, "1", "oscillation index of U_n", {}},
        {"A", T::real, "0.06", "amplitude of U_n", {}},
        {"coeffs", T::real_list, "", "sine coefficients for profile=sine", {}},
        {"N", T::integer, "0", "Chebyshev grid size (0: sizing rule)", {"sturm", "rayleigh", "os"}},
        {"modes", T::integer, "3", "eigenvalues per inflection point", {"sturm"}},
        {"alpha", T::real, "0", "wavenumber (0: alpha_n / 2)", {"rayleigh", "os"}},
        {"seed_im", T::real, "0.05", "Im c of the Rayleigh seed", {"rayleigh"}},
        {"branch", T::boolean, "false", "continue the unstable branch in alpha", {"rayleigh"}},
        {"cauchy_tol", T::real, "1e-6", "two-grid tolerance for a resolved Rayleigh mode", {"rayleigh"}},
        {"step", T::real, "0", "continuation step (0: 2% of alpha_n)", {"rayleigh"}},
        {"max_steps", T::integer, "400", "continuation steps per direction", {"rayleigh"}},
        {"R", T::real, "1e4", "Reynolds number", {"os"}},
        {"track", T::real_list, "", "ascending R schedule for the inviscid-limit track", {"os"}},
        {"sobolev", T::int_list, "0,1,2", "Sobolev orders for boundary-layer norms", {"os"}},
        {"agree_tol", T::real, "1e-6", "two-grid agreement for retained OS modes", {"os"}},
        {"beta", T::real, "1e-3", "wave amplitude", {"catseye"}},
        {"order", T::text, "leading", "leading | newton", {"catseye"}},
        {"Nxi", T::integer, "16", "half-period xi intervals", {"catseye"}},
        {"Ny", T::integer, "0", "Chebyshev N in y (0: catseye sizing rule, shear3d 128)", {"catseye", "shear3d"}},
        {"newton_tol", T::real, "1e-12", "Newton residual target", {"catseye"}},
        {"levels", T::integer, "15", "streamline levels", {"catseye"}},
        {"contour_nxi", T::integer, "128", "contour sampling cells in xi", {"catseye"}},
        {"contour_ny", T::integer, "256", "contour sampling cells in y", {"catseye"}},
        {"eps", T::real_list, "0,1e-3,1e-2", "perturbation sizes", {"shear3d"}},
        {"gshape", T::text, "default", "perturbation shape: default = sin(pi y) cos(2 pi z / Lz)", {"shear3d"}},
        {"Nz", T::integer, "16", "Fourier modes in z", {"shear3d"}},
        {"Lz", T::real, "1", "period in z", {"shear3d"}},
        {"alpha0", T::real, "0", "streamwise wavenumber (0: alpha_n / 2)", {"shear3d"}},
        {"map", T::text, "auto", "auto: cluster y nodes at the critical layer; off", {"shear3d"}},
        {"tail_tol", T::real, "1e-2", "eigenvector tail above which a 3D candidate is unresolved", {"shear3d"}},
        {"epsilon", T::real, "1e-4", "viscosity of the drift", {"drift"}},
        {"t", T::real, "1", "drift time", {"drift"}},
        {"samples", T::integer, "65", "uniform y samples written", {"drift"}},
        {"task", T::text, "sturm", "subcommand run at each sweep point", {"sweep"}},
        {"over", T::text, "", "semicolon-separated key=v1,v2,... axes", {"sweep"}},
        {"out", T::text, "out", "output directory", {}, false},
        {"cache", T::boolean, "true", "use the result cache", {}, false},
        {"workers", T::integer, "0", "worker threads (0: automatic)", {}, false},
    };
    return t;
}

inline const KeySpec* find_key(const std::string& name) {
    for (const auto& k : key_table())
        if (k.name == name) return &k;
    return nullptr;
}

inline bool key_applies(const KeySpec& k, const std::string& cmd) {
    return k.commands.empty() || k.commands.count(cmd) || cmd == "sweep";
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError("config: " + key + " expects a finite number, got '" + v + "'");
    return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    long long x = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: " + key + " expects a boolean, got '" + v + "'");
}

// canonical text for hashing: shortest round-trip numbers, normalised lists
inline std::string canonical(const KeySpec& k, const std::string& v) {
    switch (k.type) {
        case KeyType::real: return io::fmt_short(parse_real(k.name, v));
        case KeyType::integer: return std::to_string(parse_int(k.name, v));
        case KeyType::boolean: return parse_bool(k.name, v) ? "true" : "false";
        case KeyType::text: return v;
        case KeyType::real_list: {
            std::string s;
            if (v.empty()) return s;
            for (const auto& p : split(v, ',')) s += (s.empty() ? "" : ",") + io::fmt_short(parse_real(k.name, p));
            return s;
        }
        case KeyType::int_list: {
            std::string s;
            if (v.empty()) return s;
            for (const auto& p : split(v, ',')) s += (s.empty() ? "" : ",") + std::to_string(parse_int(k.name, p));
            return s;
        }
    }
    return v;
}

}  // namespace detail

class RunConfig {
public:
    RunConfig() = default;
    explicit RunConfig(std::string cmd) : cmd_(std::move(cmd)) {
        if (std::find(subcommands().begin(), subcommands().end(), cmd_) == subcommands().end())
            throw ConfigError("unknown subcommand '" + cmd_ + "'");
        for (const auto& k : key_table())
            if (key_applies(k, cmd_)) values_[k.name] = k.default_value;
    }

    const std::string& subcommand() const { return cmd_; }

    void set(const std::string& key, const std::string& value) {
        const KeySpec* k = find_key(key);
        if (!k) throw ConfigError("config: unknown key '" + key + "'");
        if (!key_applies(*k, cmd_)) throw ConfigError("config: key '" + key + "' does not apply to " + cmd_);
        values_[key] = detail::canonical(*k, detail::trim(value));
    }

    // key = value lines, '#' comments; unknown keys are errors
    void load_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("config: cannot read " + path);
        std::string line;
        int no = 0;
        while (std::getline(f, line)) {
            ++no;
            if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
            line = detail::trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: " + path + ":" + std::to_string(no) + ": expected key = value");
            set(detail::trim(line.substr(0, eq)), line.substr(eq + 1));
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::string& raw(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("config: key '" + key + "' not available for " + cmd_);
        return it->second;
    }
    double real(const std::string& key) const { return detail::parse_real(key, raw(key)); }
    int integer(const std::string& key) const {
        long long v = detail::parse_int(key, raw(key));
        if (v < -1000000000LL || v > 1000000000LL) throw ConfigError("config: " + key + " out of range");
        return static_cast<int>(v);
    }
    bool boolean(const std::string& key) const { return detail::parse_bool(key, raw(key)); }
    const std::string& text(const std::string& key) const { return raw(key); }
    std::vector<double> reals(const std::string& key) const {
        std::vector<double> v;
        if (raw(key).empty()) return v;
        for (const auto& p : detail::split(raw(key), ',')) v.push_back(detail::parse_real(key, p));
        return v;
    }
    std::vector<int> integers(const std::string& key) const {
        std::vector<int> v;
        if (raw(key).empty()) return v;
        for (const auto& p : detail::split(raw(key), ',')) v.push_back(static_cast<int>(detail::parse_int(key, p)));
        return v;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    // hashed subset as a JSON object (sorted keys)
    io::json canonical_json() const {
        io::json j = io::json::object();
        for (const auto& [k, v] : values_)
            if (find_key(k)->hashed) j[k] = v;
        return j;
    }

    std::string input_hash() const {
        io::json j{{"schema_version", io::schema_version}, {"subcommand", cmd_}, {"config", canonical_json()}};
        return io::hex64(io::fnv1a(j.dump()));
    }

    // per-key and per-module limits; throws ConfigError
    void validate() const {
        auto pos = [&](const std::string& k) {
            if (has(k) && !(real(k) > 0.0)) throw ConfigError("config: " + k + " must be positive");
        };
        auto nonneg = [&](const std::string& k) {
            if (has(k) && real(k) < 0.0) throw ConfigError("config: " + k + " must be >= 0");
        };
        const std::string& prof = text("profile");
        if (prof != "linear" && prof != "oscillatory" && prof != "sine")
            throw ConfigError("config: profile must be linear, oscillatory or sine");
        if (integer("n") < 1) throw ConfigError("config: n must be >= 1");
        if (prof == "sine" && reals("coeffs").empty()) throw ConfigError("config: profile=sine needs coeffs");
        for (const char* k : {"R", "agree_tol", "cauchy_tol", "tail_tol", "beta", "newton_tol", "Lz", "seed_im"}) pos(k);
        for (const char* k : {"alpha", "alpha0", "step", "epsilon", "t"}) nonneg(k);
        auto grid = [&](const std::string& k, int lo) {
            if (has(k) && integer(k) != 0 && integer(k) < lo)
                throw ConfigError("config: " + k + " must be 0 (automatic) or >= " + std::to_string(lo));
        };
        grid("N", 32);
        if (cmd_ == "catseye") grid("Ny", 32);
        if (cmd_ == "shear3d") grid("Ny", 16);
        if (has("Nz") && (integer("Nz") < 2 || integer("Nz") % 2)) throw ConfigError("config: Nz must be even and >= 2");
        if (has("Nxi") && integer("Nxi") < 4) throw ConfigError("config: Nxi must be >= 4");
        if (has("modes") && integer("modes") < 2) throw ConfigError("config: modes must be >= 2");
        if (has("levels") && integer("levels") < 1) throw ConfigError("config: levels must be >= 1");
        if (has("contour_nxi") && integer("contour_nxi") < 8) throw ConfigError("config: contour_nxi must be >= 8");
        if (has("contour_ny") && integer("contour_ny") < 8) throw ConfigError("config: contour_ny must be >= 8");
        if (has("samples") && integer("samples") < 2) throw ConfigError("config: samples must be >= 2");
        if (has("max_steps") && integer("max_steps") < 1) throw ConfigError("config: max_steps must be >= 1");
        if (has("order") && text("order") != "leading" && text("order") != "newton")
            throw ConfigError("config: order must be leading or newton");
        if (has("map") && text("map") != "auto" && text("map") != "off") throw ConfigError("config: map must be auto or off");
        if (has("gshape") && text("gshape") != "default") throw ConfigError("config: gshape must be 'default'");
        if (has("track")) {
            auto t = reals("track");
            for (double r : t)
                if (!(r > 0.0)) throw ConfigError("config: track values must be positive");
            if (!std::is_sorted(t.begin(), t.end())) throw ConfigError("config: track must be ascending");
        }
        if (has("sobolev"))
            for (int s : integers("sobolev"))
                if (s < 0) throw ConfigError("config: sobolev orders must be >= 0");
        if (integer("workers") < 0) throw ConfigError("config: workers must be >= 0");
        if (cmd_ == "sweep") {
            if (text("task") == "sweep" ||
                std::find(subcommands().begin(), subcommands().end(), text("task")) == subcommands().end())
                throw ConfigError("config: task must name a subcommand other than sweep");
            if (text("over").empty()) throw ConfigError("config: sweep needs at least one axis in 'over'");
        }
    }

private:
    std::string cmd_;
    std::map<std::string, std::string> values_;
};

// "A=0.045,0.06;n=1,2" -> ordered axes
inline std::vector<std::pair<std::string, std::vector<std::string>>> parse_axes(const std::string& over) {
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& part : detail::split(over, ';')) {
        if (part.empty()) continue;
        auto eq = part.find('=');
        if (eq == std::string::npos) throw ConfigError("config: sweep axis '" + part + "' needs key=v1,v2,...");
        std::string key = detail::trim(part.substr(0, eq));
        auto vals = detail::split(part.substr(eq + 1), ',');
        if (vals.empty() || key.empty()) throw ConfigError("config: empty sweep axis '" + part + "'");
        for (const auto& a : axes)
            if (a.first == key) throw ConfigError("config: duplicate sweep axis '" + key + "'");
        axes.push_back({key, vals});
    }
    return axes;
}

}  // namespace shearspec

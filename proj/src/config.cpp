#include "embedcast/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace embedcast {

namespace {

struct Entry {
    std::string value;
    int line;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

class Parsed {
public:
    std::map<std::string, Section> sections;

    const Entry* find(const std::string& section, const std::string& key) {
        auto s = sections.find(section);
        if (s == sections.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        consumed_.insert(section + "." + key);
        return &k->second;
    }

    // every key must have been consumed by a `find`; anything left is unknown
    void reject_unknown(const std::map<std::string, std::vector<std::string>>& known) const {
        for (const auto& [sec, entries] : sections) {
            auto ks = known.find(sec);
            if (ks == known.end()) {
                std::string suggestion = suggest_section(sec, known);
                throw ConfigError("unknown section [" + sec + "]" + suggestion,
                                  entries.empty() ? 0 : entries.begin()->second.line);
            }
            for (const auto& [key, entry] : entries) {
                if (consumed_.count(sec + "." + key)) continue;
                // prefer a prefix relation, then small edit distance
                std::string best;
                for (const auto& cand : ks->second) {
                    const bool prefix = key.rfind(cand, 0) == 0 || cand.rfind(key, 0) == 0;
                    if (prefix && cand.size() > best.size()) best = cand;
                }
                if (best.empty()) {
                    std::size_t best_d = 3;  // suggest within edit distance 2
                    for (const auto& cand : ks->second) {
                        const std::size_t d = edit_distance(key, cand);
                        if (d < best_d) {
                            best_d = d;
                            best = cand;
                        }
                    }
                }
                std::string msg = "unknown key `" + key + "` in [" + sec + "]";
                if (!best.empty()) msg += "; did you mean `" + best + "`?";
                throw ConfigError(msg, entry.line);
            }
        }
    }

private:
    std::set<std::string> consumed_;

    static std::string suggest_section(const std::string& sec,
                                       const std::map<std::string, std::vector<std::string>>& known) {
        for (const auto& [cand, _] : known)
            if (edit_distance(sec, cand) <= 2) return "; did you mean [" + cand + "]?";
        return "";
    }
};

Parsed tokenize(const std::string& text) {
    Parsed p;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("malformed section header: " + t, lineno);
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", lineno);
            p.sections[section];
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value, got: " + t, lineno);
        std::string key = trim(t.substr(0, eq));
        std::string value = t.substr(eq + 1);
        // strip trailing comment outside quotes
        bool quoted = false;
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (value[i] == '"') quoted = !quoted;
            if (value[i] == '#' && !quoted) {
                value = value.substr(0, i);
                break;
            }
        }
        value = strip_quotes(trim(value));
        if (key.empty()) throw ConfigError("empty key", lineno);
        if (section.empty()) throw ConfigError("key outside any section: " + key, lineno);
        if (p.sections[section].count(key))
            throw ConfigError("duplicate key `" + key + "` in [" + section + "]", lineno);
        p.sections[section][key] = {value, lineno};
    }
    return p;
}

double to_double(const Entry& e, const std::string& name) {
    try {
        std::size_t pos = 0;
        double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(name + " must be a number, got `" + e.value + "`", e.line);
    }
}

long long to_int(const Entry& e, const std::string& name) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError(name + " must be an integer, got `" + e.value + "`", e.line);
    }
}

bool to_bool(const Entry& e, const std::string& name) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError(name + " must be true or false, got `" + e.value + "`", e.line);
}

std::vector<int> to_int_list(const Entry& e, const std::string& name) {
    std::vector<int> out;
    std::stringstream ss(e.value);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        try {
            out.push_back(std::stoi(cell));
        } catch (...) {
            throw ConfigError(name + " must be a comma list of integers", e.line);
        }
    }
    if (out.empty()) throw ConfigError(name + " must not be empty", e.line);
    return out;
}

void expect_one_of(const Entry& e, const std::string& name,
                   std::initializer_list<const char*> options) {
    for (const char* o : options)
        if (e.value == o) return;
    std::string opts;
    for (const char* o : options) opts += std::string(opts.empty() ? "" : " | ") + o;
    throw ConfigError(name + " must be one of {" + opts + "}, got `" + e.value + "`", e.line);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    Parsed p = tokenize(text);
    ExperimentConfig c;

    if (const Entry* e = p.find("run", "seed")) {
        c.seed = static_cast<std::uint64_t>(to_int(*e, "seed"));
        c.seed_set = true;
    }
    if (const Entry* e = p.find("run", "threads")) c.threads = static_cast<int>(to_int(*e, "threads"));
    if (const Entry* e = p.find("run", "curves")) c.curves = to_bool(*e, "curves");
    if (const Entry* e = p.find("run", "spectra")) c.spectra = to_bool(*e, "spectra");
    if (const Entry* e = p.find("run", "bound")) c.bound = to_bool(*e, "bound");
    if (const Entry* e = p.find("run", "periodogram")) c.periodogram = to_bool(*e, "periodogram");

    if (const Entry* e = p.find("system", "kind")) {
        expect_one_of(*e, "system.kind", {"torus-rotation", "lorenz63", "l63rot"});
        c.system = e->value;
    }
    if (const Entry* e = p.find("system", "dt")) c.dt = to_double(*e, "dt");
    if (const Entry* e = p.find("system", "substep")) c.substep = to_double(*e, "substep");
    if (const Entry* e = p.find("system", "rho1")) c.rho1 = to_double(*e, "rho1");
    if (const Entry* e = p.find("system", "rho2")) c.rho2 = to_double(*e, "rho2");
    if (const Entry* e = p.find("system", "rho")) c.rot_rho = to_double(*e, "rho");
    if (const Entry* e = p.find("system", "sigma")) c.sigma = to_double(*e, "sigma");
    if (const Entry* e = p.find("system", "rho_l")) c.rho_l = to_double(*e, "rho_l");
    if (const Entry* e = p.find("system", "beta")) c.beta = to_double(*e, "beta");
    if (const Entry* e = p.find("system", "transient")) c.transient = to_int(*e, "transient");
    if (const Entry* e = p.find("system", "lag")) c.lag = static_cast<int>(to_int(*e, "lag"));

    if (const Entry* e = p.find("observation", "kind")) {
        expect_one_of(*e, "observation.kind", {"coordinate", "full-state", "torus-trig"});
        c.observation = e->value;
    }
    if (const Entry* e = p.find("observation", "components"))
        c.components = to_int_list(*e, "components");
    if (const Entry* e = p.find("observation", "normalize")) c.normalize = to_bool(*e, "normalize");

    if (const Entry* e = p.find("embedding", "paradigm")) {
        expect_one_of(*e, "embedding.paradigm", {"delay", "reservoir", "both"});
        c.paradigm = e->value;
    }
    if (const Entry* e = p.find("embedding", "Q")) {
        c.Q = static_cast<int>(to_int(*e, "Q"));
        if (c.Q < 1) throw ConfigError("Q must be >= 1, got " + e->value, e->line);
    }
    if (const Entry* e = p.find("embedding", "reservoir_size"))
        c.reservoir_size = to_int(*e, "reservoir_size");
    if (const Entry* e = p.find("embedding", "lambda")) {
        c.lambda = to_double(*e, "lambda");
        if (!(c.lambda > 0 && c.lambda < 1))
            throw ConfigError("contraction factor must be in (0,1), got " + e->value, e->line);
    }
    if (const Entry* e = p.find("embedding", "washout")) c.washout = to_int(*e, "washout");

    if (const Entry* e = p.find("hypothesis", "kind")) {
        expect_one_of(*e, "hypothesis.kind", {"affine", "fourier", "rbf"});
        c.hypothesis = e->value;
    }
    if (const Entry* e = p.find("hypothesis", "fourier_kmax"))
        c.fourier_kmax = static_cast<int>(to_int(*e, "fourier_kmax"));
    if (const Entry* e = p.find("hypothesis", "fourier_mode")) {
        expect_one_of(*e, "hypothesis.fourier_mode", {"direct", "phase-pairs"});
        c.fourier_mode = e->value;
    }
    if (const Entry* e = p.find("hypothesis", "rbf_centers"))
        c.rbf_centers = to_int(*e, "rbf_centers");
    if (const Entry* e = p.find("hypothesis", "ridge")) {
        if (e->value == "auto") {
            c.ridge = -1;
        } else {
            c.ridge = to_double(*e, "ridge");
            if (c.ridge < 0) throw ConfigError("ridge must be >= 0 or auto", e->line);
        }
    }

    if (const Entry* e = p.find("training", "length")) c.length = to_int(*e, "length");
    if (const Entry* e = p.find("training", "holdout")) {
        c.holdout = to_double(*e, "holdout");
        if (!(c.holdout >= 0 && c.holdout < 1))
            throw ConfigError("holdout must lie in [0,1)", e->line);
    }

    if (const Entry* e = p.find("forecast", "mode")) {
        expect_one_of(*e, "forecast.mode", {"iterative", "direct", "both"});
        c.mode = e->value;
    }
    if (const Entry* e = p.find("forecast", "horizon")) c.horizon = to_int(*e, "horizon");
    if (const Entry* e = p.find("forecast", "ensemble")) c.ensemble = to_int(*e, "ensemble");
    if (const Entry* e = p.find("forecast", "guard_factor"))
        c.guard_factor = to_double(*e, "guard_factor");

    if (const Entry* e = p.find("spectrum", "steps")) c.spectrum_steps = to_int(*e, "steps");
    if (const Entry* e = p.find("spectrum", "refactor_every"))
        c.refactor_every = static_cast<int>(to_int(*e, "refactor_every"));

    if (const Entry* e = p.find("output", "dir")) c.out_dir = e->value;

    static const std::map<std::string, std::vector<std::string>> known = {
        {"run", {"seed", "threads", "curves", "spectra", "bound", "periodogram"}},
        {"system",
         {"kind", "dt", "substep", "rho1", "rho2", "rho", "sigma", "rho_l", "beta", "transient",
          "lag"}},
        {"observation", {"kind", "components", "normalize"}},
        {"embedding", {"paradigm", "Q", "reservoir_size", "lambda", "washout"}},
        {"hypothesis", {"kind", "fourier_kmax", "fourier_mode", "rbf_centers", "ridge"}},
        {"training", {"length", "holdout"}},
        {"forecast", {"mode", "horizon", "ensemble", "guard_factor"}},
        {"spectrum", {"steps", "refactor_every"}},
        {"output", {"dir"}},
    };
    p.reject_unknown(known);

    c.validate();
    return c;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void ExperimentConfig::validate() const {
    if (!seed_set) throw ConfigError("[run] seed is mandatory");
    if (!(dt > 0)) throw ConfigError("dt must be positive");
    if (transient < 0) throw ConfigError("transient must be >= 0");
    if (lag < 1) throw ConfigError("lag must be >= 1");
    if (length < 16) throw ConfigError("training length must be >= 16");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (ensemble < 1) throw ConfigError("ensemble must be >= 1");
    if (!(guard_factor > 0)) throw ConfigError("guard_factor must be positive");
    if (reservoir_size < 1) throw ConfigError("reservoir_size must be >= 1");
    if (washout < 1) throw ConfigError("washout must be >= 1");
    if (fourier_kmax < 1) throw ConfigError("fourier_kmax must be >= 1");
    if (rbf_centers < 1) throw ConfigError("rbf_centers must be >= 1");
    if (spectrum_steps < 10) throw ConfigError("spectrum steps must be >= 10");
    if (refactor_every < 1) throw ConfigError("refactor_every must be >= 1");
    const double two_pi = 2.0 * std::numbers::pi;
    if (system == "torus-rotation" && (rho1 < 0 || rho1 >= two_pi || rho2 < 0 || rho2 >= two_pi))
        throw ConfigError("torus rotation components must lie in [0, 2*pi)");
    if (system == "l63rot" && (rot_rho < 0 || rot_rho >= two_pi))
        throw ConfigError("rho must lie in [0, 2*pi)");
    for (int comp : components)
        if (comp < 0) throw ConfigError("observation components must be >= 0");
}

std::string ExperimentConfig::echo() const {
    std::ostringstream os;
    os.precision(17);
    os << "[run]\n";
    os << "seed = " << seed << "\n";
    os << "threads = " << threads << "\n";
    os << "curves = " << (curves ? "true" : "false") << "\n";
    os << "spectra = " << (spectra ? "true" : "false") << "\n";
    os << "bound = " << (bound ? "true" : "false") << "\n";
    os << "periodogram = " << (periodogram ? "true" : "false") << "\n\n";

    os << "[system]\n";
    os << "kind = \"" << system << "\"\n";
    os << "dt = " << dt << "\n";
    os << "substep = " << (substep > 0 ? substep : dt) << "\n";
    if (system == "torus-rotation") os << "rho1 = " << rho1 << "\nrho2 = " << rho2 << "\n";
    if (system == "l63rot") os << "rho = " << rot_rho << "\n";
    if (system != "torus-rotation")
        os << "sigma = " << sigma << "\nrho_l = " << rho_l << "\nbeta = " << beta << "\n";
    os << "transient = " << transient << "\n";
    os << "lag = " << lag << "\n\n";

    os << "[observation]\n";
    os << "kind = \"" << observation << "\"\n";
    os << "components = \"";
    for (std::size_t i = 0; i < components.size(); ++i)
        os << (i ? "," : "") << components[i];
    os << "\"\n";
    os << "normalize = " << (normalize ? "true" : "false") << "\n\n";

    os << "[embedding]\n";
    os << "paradigm = \"" << paradigm << "\"\n";
    if (paradigm != "reservoir") os << "Q = " << Q << "\n";
    if (paradigm != "delay") {
        os << "reservoir_size = " << reservoir_size << "\n";
        os << "lambda = " << lambda << "\n";
        os << "washout = " << washout << "\n";
    }
    os << "\n[hypothesis]\n";
    os << "kind = \"" << hypothesis << "\"\n";
    if (hypothesis == "fourier") {
        os << "fourier_kmax = " << fourier_kmax << "\n";
        os << "fourier_mode = \"" << fourier_mode << "\"\n";
    }
    if (hypothesis == "rbf") os << "rbf_centers = " << rbf_centers << "\n";
    if (ridge >= 0)
        os << "ridge = " << ridge << "\n";
    else
        os << "ridge = \"auto\"\n";

    os << "\n[training]\n";
    os << "length = " << length << "\n";
    os << "holdout = " << holdout << "\n";

    os << "\n[forecast]\n";
    os << "mode = \"" << mode << "\"\n";
    os << "horizon = " << horizon << "\n";
    os << "ensemble = " << ensemble << "\n";
    os << "guard_factor = " << guard_factor << "\n";

    os << "\n[spectrum]\n";
    os << "steps = " << spectrum_steps << "\n";
    os << "refactor_every = " << refactor_every << "\n";

    os << "\n[output]\n";
    os << "dir = \"" << out_dir << "\"\n";
    return os.str();
}

}  // namespace embedcast

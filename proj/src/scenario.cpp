#include "jumpsde/scenario.hpp"

#include "jumpsde/builtin.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

namespace jumpsde {

namespace {

enum class Kind { Num, Int, Str, Expr, ExprT, Vector, Points, Bool };

struct KeySpec {
    std::string key;
    Kind kind;
    std::optional<std::string> def;   // nullopt: required unless `optional`
    std::vector<std::string> choices = {};
    bool optional = false;            // may be absent, and then is not emitted
};

const std::vector<std::string> kSections{"model", "levy", "sim", "check", "coupling", "fk", "ergodicity",
                                         "irreducibility"};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

double parse_double(const std::string& v, int line, const std::string& key) {
    const std::string t = trim(v);
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (t.empty() || *end != '\0') throw SyntaxError(at_line(line) + key + " expects a number, got '" + t + "'", line);
    return x;
}

std::vector<double> parse_numbers(const std::string& v, int line, const std::string& key) {
    std::string t = v;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream is(t);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_double(tok, line, key));
    return out;
}

std::string join_numbers(const std::vector<double>& v, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + format_number(v[i]);
    return s;
}

// "s12" or "σ12" -> (1, 2); anything else -> (0, 0)
std::pair<int, int> sigma_key(const std::string& k) {
    std::string digits;
    if (k.rfind("s", 0) == 0) {
        digits = k.substr(1);
    } else if (k.rfind("\xcf\x83", 0) == 0) {
        digits = k.substr(2);
    } else {
        return {0, 0};
    }
    if (digits.size() != 2 || !std::isdigit(static_cast<unsigned char>(digits[0])) ||
        !std::isdigit(static_cast<unsigned char>(digits[1]))) {
        return {0, 0};
    }
    return {digits[0] - '0', digits[1] - '0'};
}

struct RawEntry {
    std::string value;
    int line = 0;
};
using RawSection = std::vector<std::pair<std::string, RawEntry>>;

std::vector<KeySpec> keys_for(const std::string& sec, const std::map<std::string, RawEntry>& raw) {
    const auto get = [&](const std::string& k, const std::string& def) {
        const auto it = raw.find(k);
        return it == raw.end() ? def : trim(it->second.value);
    };
    if (sec == "levy") {
        const std::string fam = get("family", "none");
        std::vector<KeySpec> s{{"family", Kind::Str, "none", {"none", "power_law", "uniform_ball", "atoms"}}};
        if (fam == "power_law") {
            s.push_back({"alpha", Kind::Num, std::nullopt});
            s.push_back({"r_lo", Kind::Num, "0"});
            s.push_back({"r_hi", Kind::Num, "1"});
            s.push_back({"scale", Kind::Num, "1"});
        } else if (fam == "uniform_ball") {
            s.push_back({"radius", Kind::Num, "1"});
            s.push_back({"mass", Kind::Num, "1"});
        } else if (fam == "atoms") {
            s.push_back({"atoms", Kind::Points, std::nullopt});
        }
        if (fam != "none") s.push_back({"threshold", Kind::Num, "1"});
        return s;
    }
    if (sec == "sim") {
        return {{"dt", Kind::Num, "0.001"},
                {"horizon", Kind::Num, "1"},
                {"paths", Kind::Int, "1000"},
                {"scheme", Kind::Str, "tamed-euler", {"euler", "tamed-euler"}},
                {"seed", Kind::Int, "0"},
                {"explosion_radius", Kind::Num, "1e8"},
                {"truncation", Kind::Num, "0.01"},
                {"threads", Kind::Int, "0"},
                {"x0", Kind::Vector, std::nullopt}};
    }
    if (sec == "check") {
        return {{"probes", Kind::Str, "pairs", {"ball", "grid", "pairs"}},
                {"count", Kind::Int, "1000"},
                {"radius", Kind::Num, "3"},
                {"delta0", Kind::Num, "0.5"},
                {"min_sep", Kind::Num, "1e-08"},
                {"probe_seed", Kind::Int, "0"},
                {"modulus", Kind::Str, std::nullopt, {"linear", "power", "r_log_inv", "r_loglog_inv", "r_log_inv_loglog_inv", "log_growth", "loglog_growth", "constant"}, true},
                {"modulus_c", Kind::Num, "1"},
                {"modulus_p", Kind::Num, "1"},
                {"kappa", Kind::Num, std::nullopt, {}, true},
                {"lambda0", Kind::Num, std::nullopt, {}, true},
                {"V", Kind::Str, "abs2", {"abs2", "quartic"}}};
    }
    if (sec == "coupling") {
        return {{"kind", Kind::Str, "synchronous", {"synchronous", "reflection"}},
                {"lambda0", Kind::Num, "0"},
                {"glue_radius", Kind::Num, "1e-08"},
                {"z0", Kind::Vector, std::nullopt}};
    }
    if (sec == "fk") {
        return {{"T", Kind::Num, "1"}, {"f", Kind::Expr, std::nullopt}, {"rho", Kind::ExprT, "0"},
                {"g", Kind::ExprT, "0"}, {"t", Kind::Num, "0"},         {"x", Kind::Vector, std::nullopt}};
    }
    if (sec == "ergodicity") {
        return {{"t_max", Kind::Num, "10"},
                {"t_step", Kind::Num, "0.1"},
                {"V", Kind::Str, "abs2", {"abs2", "quartic"}},
                {"cells", Kind::Int, "4"},
                {"reference_horizon", Kind::Num, "0"}};
    }
    if (sec == "irreducibility") {
        return {{"t", Kind::Num, "1"}, {"targets", Kind::Points, std::nullopt}};
    }
    return {};
}

std::string normalize_value(const KeySpec& sp, const std::string& value, int line, int d, const std::string& sec) {
    const std::string v = trim(value);
    const std::string where = at_line(line) + "[" + sec + "] " + sp.key + ": ";
    try {
        switch (sp.kind) {
            case Kind::Num: return format_number(parse_double(v, line, sp.key));
            case Kind::Int: {
                const double x = parse_double(v, line, sp.key);
                if (x != std::floor(x)) throw SyntaxError(where + "expects an integer", line);
                return std::to_string(static_cast<long>(x));
            }
            case Kind::Str:
                if (!sp.choices.empty() && std::find(sp.choices.begin(), sp.choices.end(), v) == sp.choices.end()) {
                    std::string opts;
                    for (const auto& c : sp.choices) opts += (opts.empty() ? "" : ", ") + c;
                    throw UnknownSymbol(where + "unknown value '" + v + "' (" + opts + ")", line);
                }
                return v;
            case Kind::Bool:
                if (v == "true" || v == "yes" || v == "1") return "true";
                if (v == "false" || v == "no" || v == "0") return "false";
                throw SyntaxError(where + "expects true or false", line);
            case Kind::Expr: return Expr::parse(v, {d, false, false}).to_string();
            case Kind::ExprT: return Expr::parse(v, {d, true, false}).to_string();
            case Kind::Vector: {
                const auto xs = parse_numbers(v, line, sp.key);
                if (static_cast<int>(xs.size()) != d) {
                    throw DimensionMismatch(where + "has " + std::to_string(xs.size()) + " coordinates, d = " +
                                                std::to_string(d),
                                            line);
                }
                return join_numbers(xs, ", ");
            }
            case Kind::Points: {
                const auto pts = parse_point_list(v, d);
                std::string s;
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    std::vector<double> c(pts[i].first.data(), pts[i].first.data() + pts[i].first.size());
                    s += (i ? "; " : "") + join_numbers(c, " ") + " : " + format_number(pts[i].second);
                }
                return s;
            }
        }
    } catch (const ExprError& e) {
        const std::string what = e.what();
        if (what.rfind("line ", 0) == 0) throw;
        const std::string msg = where + what;
        if (dynamic_cast<const DimensionMismatch*>(&e)) throw DimensionMismatch(msg, line);
        if (dynamic_cast<const UnknownSymbol*>(&e)) throw UnknownSymbol(msg, line);
        throw SyntaxError(msg, line);
    } catch (const InvalidArgument& e) {
        throw SyntaxError(where + e.what(), line);
    }
    return v;
}

}  // namespace

std::vector<std::pair<Vec, double>> parse_point_list(const std::string& text, int d) {
    std::vector<std::pair<Vec, double>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (trim(item).empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw InvalidArgument("expected 'coordinates : value' in '" + trim(item) + "'");
        const auto xs = parse_numbers(item.substr(0, colon), 0, "point");
        if (static_cast<int>(xs.size()) != d) {
            throw DimensionMismatch("point '" + trim(item.substr(0, colon)) + "' has " + std::to_string(xs.size()) +
                                        " coordinates, d = " + std::to_string(d),
                                    0);
        }
        Vec p(d);
        for (int j = 0; j < d; ++j) p[j] = xs[j];
        out.emplace_back(p, parse_double(item.substr(colon + 1), 0, "value"));
    }
    if (out.empty()) throw InvalidArgument("empty point list");
    return out;
}

Scenario parse_scenario(const std::string& text) {
    // pass 1: sections and raw entries
    std::map<std::string, std::map<std::string, RawEntry>> raw;
    std::map<std::string, RawSection> ordered;
    std::string cur;
    std::istringstream is(text);
    std::string line;
    int ln = 0;
    while (std::getline(is, line)) {
        ++ln;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw SyntaxError(at_line(ln) + "unterminated section header", ln);
            cur = trim(line.substr(1, line.size() - 2));
            if (std::find(kSections.begin(), kSections.end(), cur) == kSections.end()) {
                throw UnknownSymbol(at_line(ln) + "unknown section [" + cur + "]", ln);
            }
            if (raw.count(cur)) throw SyntaxError(at_line(ln) + "section [" + cur + "] appears twice", ln);
            raw[cur];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw SyntaxError(at_line(ln) + "expected 'key = value'", ln);
        if (cur.empty()) throw SyntaxError(at_line(ln) + "key outside of any section", ln);
        std::string key = trim(line.substr(0, eq));
        const auto [si, sj] = sigma_key(key);
        if (si > 0) key = "s" + std::to_string(si) + std::to_string(sj);
        if (raw[cur].count(key)) throw SyntaxError(at_line(ln) + "duplicate key '" + key + "'", ln);
        raw[cur][key] = {trim(line.substr(eq + 1)), ln};
    }
    if (!raw.count("model")) throw SyntaxError("line 1: missing [model] section", 1);

    Scenario s;
    // model: built-in or coefficient expressions
    auto& model = raw["model"];
    auto& mv = s.values["model"];
    int d = 0;
    if (model.count("builtin")) {
        const RawEntry& b = model["builtin"];
        const auto names = builtin_names();
        if (std::find(names.begin(), names.end(), b.value) == names.end()) {
            throw UnknownSymbol(at_line(b.line) + "unknown built-in model '" + b.value + "'", b.line);
        }
        mv["builtin"] = b.value;
        int dreq = 2;
        if (model.count("d")) dreq = static_cast<int>(parse_double(model["d"].value, model["d"].line, "d"));
        d = builtin_by_name(b.value, dreq).d;
        if (model.count("d") && d != dreq) {
            throw DimensionMismatch(at_line(model["d"].line) + b.value + " has dimension " + std::to_string(d),
                                    model["d"].line);
        }
        mv["d"] = std::to_string(d);
        if (!model.count("d")) s.defaulted.push_back("model.d");
        for (const auto& [k, e] : model) {
            if (k != "builtin" && k != "d") {
                throw UnknownSymbol(at_line(e.line) + "key '" + k + "' cannot be combined with a built-in model", e.line);
            }
        }
        if (raw.count("levy")) throw SyntaxError(at_line(1) + "a built-in model carries its own [levy] section", 1);
    } else {
        if (!model.count("d")) throw SyntaxError("line 1: [model] needs builtin or d", 1);
        const RawEntry& de = model["d"];
        const double dd = parse_double(de.value, de.line, "d");
        if (dd < 1 || dd > 9 || dd != std::floor(dd)) throw SyntaxError(at_line(de.line) + "d must be 1..9", de.line);
        d = static_cast<int>(dd);
        int q = d;
        if (model.count("noise")) {
            q = static_cast<int>(parse_double(model["noise"].value, model["noise"].line, "noise"));
            if (q < 1 || q > 9) throw SyntaxError(at_line(model["noise"].line) + "noise must be 1..9", model["noise"].line);
        } else {
            s.defaulted.push_back("model.noise");
        }
        mv["d"] = std::to_string(d);
        mv["noise"] = std::to_string(q);
        bool any_sigma = false;
        for (const auto& [k, e] : model) {
            if (k == "d" || k == "noise" || k == "jump" || k == "jump_amp" || k == "compensate_large") continue;
            const auto [i, j] = sigma_key(k);
            if (i > 0) {
                if (i > d || j > q || i < 1 || j < 1) {
                    throw DimensionMismatch(at_line(e.line) + "'" + k + "' is outside the " + std::to_string(d) + "x" +
                                                std::to_string(q) + " diffusion matrix",
                                            e.line);
                }
                any_sigma = true;
                continue;
            }
            if (k.size() >= 2 && k[0] == 'b' && k.find_first_not_of("0123456789", 1) == std::string::npos) {
                const int i = std::atoi(k.c_str() + 1);
                if (i < 1 || i > d) {
                    throw DimensionMismatch(at_line(e.line) + "'" + k + "' exceeds d = " + std::to_string(d), e.line);
                }
                continue;
            }
            throw UnknownSymbol(at_line(e.line) + "unknown key '" + k + "' in [model]", e.line);
        }
        for (int i = 1; i <= d; ++i) {
            const std::string k = "b" + std::to_string(i);
            if (model.count(k)) {
                mv[k] = normalize_value({k, Kind::Expr, "0"}, model[k].value, model[k].line, d, "model");
            } else {
                mv[k] = "0";
                s.defaulted.push_back("model." + k);
            }
        }
        if (any_sigma) {
            for (int i = 1; i <= d; ++i) {
                for (int j = 1; j <= q; ++j) {
                    const std::string k = "s" + std::to_string(i) + std::to_string(j);
                    if (model.count(k)) {
                        mv[k] = normalize_value({k, Kind::Expr, "0"}, model[k].value, model[k].line, d, "model");
                    } else {
                        mv[k] = "0";
                        s.defaulted.push_back("model." + k);
                    }
                }
            }
        }
        const auto opt = [&](const KeySpec& sp) {
            if (model.count(sp.key)) {
                mv[sp.key] = normalize_value(sp, model[sp.key].value, model[sp.key].line, d, "model");
            } else {
                mv[sp.key] = *sp.def;
                s.defaulted.push_back("model." + sp.key);
            }
        };
        opt({"jump", Kind::Str, "none", {"none", "scaled"}});
        if (mv["jump"] == "scaled") opt({"jump_amp", Kind::Expr, "1"});
        else if (model.count("jump_amp")) {
            throw SyntaxError(at_line(model["jump_amp"].line) + "jump_amp needs jump = scaled", model["jump_amp"].line);
        }
        opt({"compensate_large", Kind::Bool, "true"});
        if (mv["jump"] == "scaled" && !raw.count("levy")) {
            throw SyntaxError("line 1: jump = scaled needs a [levy] section", 1);
        }
    }

    // the fixed-schema sections
    for (const auto& sec : kSections) {
        if (sec == "model") continue;
        const bool present = raw.count(sec) > 0;
        if (!present && sec != "sim") continue;
        const auto& r = raw[sec];
        const auto schema = keys_for(sec, r);
        auto& out = s.values[sec];
        for (const auto& [k, e] : r) {
            const bool known = std::any_of(schema.begin(), schema.end(), [&](const KeySpec& sp) { return sp.key == k; });
            if (!known) throw UnknownSymbol(at_line(e.line) + "unknown key '" + k + "' in [" + sec + "]", e.line);
        }
        for (const auto& sp : schema) {
            const auto it = r.find(sp.key);
            if (it != r.end()) {
                out[sp.key] = normalize_value(sp, it->second.value, it->second.line, d, sec);
            } else if (sp.def) {
                out[sp.key] = sp.def->empty() ? "" : normalize_value(sp, *sp.def, 0, d, sec);
                s.defaulted.push_back(sec + "." + sp.key);
            } else if (sp.kind == Kind::Vector) {
                out[sp.key] = join_numbers(std::vector<double>(d, 0.0), ", ");
                s.defaulted.push_back(sec + "." + sp.key);
            } else if (!sp.optional) {
                throw SyntaxError("line 1: [" + sec + "] needs '" + sp.key + "'", 1);
            }
        }
    }
    for (const auto& sec : kSections) {
        if (s.values.count(sec)) s.sections.push_back(sec);
    }
    return s;
}

std::string emit_scenario(const Scenario& s) {
    std::string out;
    for (const auto& sec : s.sections) {
        if (!out.empty()) out += "\n";
        out += "[" + sec + "]\n";
        const auto& vals = s.values.at(sec);
        std::vector<std::string> keys;
        if (sec == "model") {
            // builtin/d/noise first, then b, sigma, jump keys
            for (const char* k : {"builtin", "d", "noise"}) {
                if (vals.count(k)) keys.push_back(k);
            }
            const int d = std::stoi(vals.at("d"));
            for (int i = 1; i <= d; ++i) {
                if (vals.count("b" + std::to_string(i))) keys.push_back("b" + std::to_string(i));
            }
            for (const auto& [k, v] : vals) {
                if (sigma_key(k).first > 0) keys.push_back(k);
            }
            for (const char* k : {"jump", "jump_amp", "compensate_large"}) {
                if (vals.count(k)) keys.push_back(k);
            }
        } else {
            std::map<std::string, RawEntry> raw;
            for (const auto& [k, v] : vals) raw[k] = {v, 0};
            for (const auto& sp : keys_for(sec, raw)) {
                if (vals.count(sp.key)) keys.push_back(sp.key);
            }
        }
        for (const auto& k : keys) out += k + " = " + vals.at(k) + "\n";
    }
    return out;
}

std::string normalize_scenario(const std::string& text) { return emit_scenario(parse_scenario(text)); }

// ---------------------------------------------------------------------------

bool Scenario::has(const std::string& section) const { return values.count(section) > 0; }

const std::string& Scenario::get(const std::string& section, const std::string& key) const {
    const auto s = values.find(section);
    if (s == values.end()) throw InvalidArgument("scenario has no [" + section + "] section");
    const auto k = s->second.find(key);
    if (k == s->second.end()) throw InvalidArgument("scenario has no " + section + "." + key);
    return k->second;
}

double Scenario::number(const std::string& section, const std::string& key) const {
    return parse_double(get(section, key), 0, key);
}

long Scenario::integer(const std::string& section, const std::string& key) const {
    return static_cast<long>(number(section, key));
}

Vec Scenario::vector(const std::string& section, const std::string& key) const {
    const auto xs = parse_numbers(get(section, key), 0, key);
    return Eigen::Map<const Vec>(xs.data(), static_cast<long>(xs.size()));
}

std::optional<double> Scenario::optional_number(const std::string& section, const std::string& key) const {
    if (!has(section) || !values.at(section).count(key)) return std::nullopt;
    return number(section, key);
}

Expr Scenario::expr(const std::string& section, const std::string& key, bool with_t) const {
    return Expr::parse(get(section, key), {dim(), with_t, false});
}

int Scenario::dim() const { return std::stoi(get("model", "d")); }

Vec Scenario::x0() const { return vector("sim", "x0"); }

SimConfig Scenario::sim() const {
    SimConfig c;
    c.dt = number("sim", "dt");
    c.horizon = number("sim", "horizon");
    c.n_paths = integer("sim", "paths");
    c.scheme = scheme_from_string(get("sim", "scheme"));
    c.master_seed = static_cast<std::uint64_t>(integer("sim", "seed"));
    c.explosion_radius = number("sim", "explosion_radius");
    c.small_jump_truncation = number("sim", "truncation");
    c.threads = static_cast<int>(integer("sim", "threads"));
    return c;
}

Model Scenario::model() const {
    const auto& mv = values.at("model");
    const int d = dim();
    if (mv.count("builtin")) return builtin_by_name(mv.at("builtin"), d);
    Model m;
    m.name = "scenario";
    m.origin = "coefficients from a scenario file";
    m.d = d;
    const int q = std::stoi(mv.at("noise"));
    m.noise_dim = q;
    std::vector<Expr> b;
    for (int i = 1; i <= d; ++i) b.push_back(expr("model", "b" + std::to_string(i)));
    m.drift = [b](const Vec& x) {
        Vec out(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i](x);
        return out;
    };
    if (mv.count("s11")) {
        std::vector<Expr> s;
        for (int i = 1; i <= d; ++i) {
            for (int j = 1; j <= q; ++j) s.push_back(expr("model", "s" + std::to_string(i) + std::to_string(j)));
        }
        m.diffusion = [s, d, q](const Vec& x) {
            Mat out(d, q);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < q; ++j) out(i, j) = s[i * q + j](x);
            }
            return out;
        };
    }
    m.compensate_large = mv.at("compensate_large") == "true";
    m.levy = LevyMeasure::zero(d);
    if (mv.at("jump") == "scaled") {
        const auto& lv = values.at("levy");
        const std::string fam = lv.at("family");
        if (fam == "power_law") {
            m.levy = LevyMeasure::power_law(d, number("levy", "alpha"), number("levy", "r_lo"), number("levy", "r_hi"),
                                            number("levy", "scale"));
        } else if (fam == "uniform_ball") {
            m.levy = LevyMeasure::uniform_ball(d, number("levy", "radius"), number("levy", "mass"));
        } else if (fam == "atoms") {
            std::vector<Vec> pts;
            std::vector<double> ms;
            for (const auto& [p, w] : parse_point_list(lv.at("atoms"), d)) {
                pts.push_back(p);
                ms.push_back(w);
            }
            m.levy = LevyMeasure::atoms(pts, ms);
        }
        if (fam != "none") m.levy = m.levy.with_threshold(number("levy", "threshold"));
        const Expr amp = expr("model", "jump_amp");
        m.jump = JumpKernel::separable([amp, d](const Vec& x) -> Mat { return amp(x) * Mat::Identity(d, d); },
                                       [](const Vec& u) -> Vec { return u; }, d, false);
    }
    m.validate();
    return m;
}

}  // namespace jumpsde

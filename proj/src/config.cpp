#include "evodiff/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "evodiff/common.hpp"
#include "evodiff/io.hpp"

namespace evodiff {

namespace {

struct Value {
    enum class Kind { Number, String, Bool, NumberArray, StringArray, EmptyArray };
    Kind kind = Kind::Number;
    double num = 0.0;
    std::string str;
    bool flag = false;
    std::vector<double> nums;
    std::vector<std::string> strs;
    int line = 0;
};

using Section = std::map<std::string, Value>;

struct Raw {
    std::map<std::string, Section> sections; // "" is the root
};

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void parse_fail(const std::string& src, int line, std::size_t col,
                             const std::string& what) {
    throw ConfigError({strfmt("%s:%d:%zu: %s", src.c_str(), line, col + 1, what.c_str())});
}

/// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

bool parse_number(const std::string& tok, double& out) {
    if (tok.empty()) return false;
    char* end = nullptr;
    out = std::strtod(tok.c_str(), &end);
    return end == tok.c_str() + tok.size();
}

std::string unquote(const std::string& src, int line, std::size_t col, const std::string& tok) {
    std::string out;
    std::size_t i = 1;
    for (; i < tok.size(); ++i) {
        if (tok[i] == '\\' && i + 1 < tok.size()) {
            out.push_back(tok[i + 1]);
            ++i;
            continue;
        }
        if (tok[i] == '"') break;
        out.push_back(tok[i]);
    }
    if (i >= tok.size()) parse_fail(src, line, col, "unterminated string");
    if (trim(tok.substr(i + 1)) != "")
        parse_fail(src, line, col + i + 1, "trailing characters after string value");
    return out;
}

Value parse_value(const std::string& src, int line, std::size_t col, const std::string& tok) {
    Value v;
    v.line = line;
    if (tok.empty()) parse_fail(src, line, col, "missing value");
    if (tok.front() == '"') {
        v.kind = Value::Kind::String;
        v.str = unquote(src, line, col, tok);
        return v;
    }
    if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::Bool;
        v.flag = tok == "true";
        return v;
    }
    if (tok.front() == '[') {
        if (tok.back() != ']') parse_fail(src, line, col, "unterminated array");
        const std::string inner = trim(tok.substr(1, tok.size() - 2));
        if (inner.empty()) {
            v.kind = Value::Kind::EmptyArray;
            return v;
        }
        // split on top-level commas (arrays do not nest)
        std::vector<std::string> items;
        std::string cur;
        bool quoted = false;
        for (char c : inner) {
            if (c == '"') quoted = !quoted;
            if (c == ',' && !quoted) {
                items.push_back(trim(cur));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        items.push_back(trim(cur));
        if (!items.empty() && items.front().size() && items.front().front() == '"') {
            v.kind = Value::Kind::StringArray;
            for (const auto& it : items) {
                if (it.empty() || it.front() != '"')
                    parse_fail(src, line, col, "mixed array element types");
                v.strs.push_back(unquote(src, line, col, it));
            }
        } else {
            v.kind = Value::Kind::NumberArray;
            for (const auto& it : items) {
                double num = 0.0;
                if (!parse_number(it, num))
                    parse_fail(src, line, col,
                               strfmt("array element \"%s\" is not a number", it.c_str()));
                v.nums.push_back(num);
            }
        }
        return v;
    }
    if (!parse_number(tok, v.num))
        parse_fail(src, line, col, strfmt("value \"%s\" is not a number, string, boolean or "
                                          "array",
                                          tok.c_str()));
    v.kind = Value::Kind::Number;
    return v;
}

Raw parse_raw(const std::string& text, const std::string& src) {
    Raw raw;
    raw.sections[""]; // root always present
    std::string section;
    std::istringstream in(text);
    std::string rawline;
    int line = 0;
    while (std::getline(in, rawline)) {
        ++line;
        const std::string stripped = trim(strip_comment(rawline));
        if (stripped.empty()) continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                parse_fail(src, line, rawline.find('['), "unterminated section header");
            section = trim(stripped.substr(1, stripped.size() - 2));
            std::string probe = section;
            std::replace(probe.begin(), probe.end(), '.', '_');
            if (!valid_key(probe))
                parse_fail(src, line, rawline.find('['), strfmt("invalid section name \"%s\"",
                                                                section.c_str()));
            raw.sections[section];
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            parse_fail(src, line, 0, "expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        if (!valid_key(key))
            parse_fail(src, line, 0, strfmt("invalid key \"%s\"", key.c_str()));
        Section& sec = raw.sections[section];
        if (sec.count(key)) {
            const std::string where =
                section.empty() ? std::string("the root section")
                                : strfmt("[%s]", section.c_str());
            parse_fail(src, line, 0,
                       strfmt("duplicate key \"%s\" in %s (first defined at line %d)",
                              key.c_str(), where.c_str(), sec[key].line));
        }
        const std::size_t vcol = rawline.find('=') + 1;
        sec[key] = parse_value(src, line, vcol, trim(stripped.substr(eq + 1)));
    }
    return raw;
}

/// Typed accessors over one parsed section; collects type errors and
/// reports keys nobody consumed.
class Fields {
public:
    Fields(Raw& raw, std::string name, std::vector<std::string>& errors)
        : name_(std::move(name)), errors_(errors) {
        auto it = raw.sections.find(name_);
        if (it != raw.sections.end()) sec_ = &it->second;
    }

    bool has(const std::string& key) const { return sec_ && sec_->count(key); }

    double number(const std::string& key, double def) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind != Value::Kind::Number) {
            type_error(key, "a number", v->line);
            return def;
        }
        return v->num;
    }

    int integer(const std::string& key, int def) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind != Value::Kind::Number || v->num != std::floor(v->num)) {
            type_error(key, "an integer", v->line);
            return def;
        }
        return static_cast<int>(v->num);
    }

    bool boolean(const std::string& key, bool def) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind != Value::Kind::Bool) {
            type_error(key, "true or false", v->line);
            return def;
        }
        return v->flag;
    }

    std::string text(const std::string& key, const std::string& def) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind != Value::Kind::String) {
            type_error(key, "a quoted string", v->line);
            return def;
        }
        return v->str;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> def = {}) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind == Value::Kind::EmptyArray) return {};
        if (v->kind != Value::Kind::NumberArray) {
            type_error(key, "an array of numbers", v->line);
            return def;
        }
        return v->nums;
    }

    std::vector<int> integers(const std::string& key, std::vector<int> def = {}) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind == Value::Kind::EmptyArray) return {};
        if (v->kind != Value::Kind::NumberArray) {
            type_error(key, "an array of integers", v->line);
            return def;
        }
        std::vector<int> out;
        for (double x : v->nums) {
            if (x != std::floor(x)) {
                type_error(key, "an array of integers", v->line);
                return def;
            }
            out.push_back(static_cast<int>(x));
        }
        return out;
    }

    std::vector<std::string> texts(const std::string& key, std::vector<std::string> def = {}) {
        const Value* v = take(key);
        if (!v) return def;
        if (v->kind == Value::Kind::EmptyArray) return {};
        if (v->kind != Value::Kind::StringArray) {
            type_error(key, "an array of quoted strings", v->line);
            return def;
        }
        return v->strs;
    }

    void finish() {
        if (!sec_) return;
        for (const auto& [key, value] : *sec_)
            if (!consumed_.count(key))
                errors_.push_back(strfmt("unknown key \"%s\" in %s (line %d)", key.c_str(),
                                         where().c_str(), value.line));
    }

private:
    const Value* take(const std::string& key) {
        if (!sec_) return nullptr;
        auto it = sec_->find(key);
        if (it == sec_->end()) return nullptr;
        consumed_.insert(key);
        return &it->second;
    }
    void type_error(const std::string& key, const char* want, int line) {
        errors_.push_back(strfmt("%s.%s expects %s (line %d)",
                                 name_.empty() ? "config" : name_.c_str(), key.c_str(), want,
                                 line));
    }
    std::string where() const {
        return name_.empty() ? std::string("the root section") : strfmt("[%s]", name_.c_str());
    }

    Section* sec_ = nullptr;
    std::string name_;
    std::vector<std::string>& errors_;
    std::set<std::string> consumed_;
};

std::size_t builtin_component_count(const std::string& name) {
    if (name == "brusselator-surface" || name == "example3") return 2;
    if (name == "reversible-reaction") return 3;
    return 0;
}

std::string fmt_num(double v) { return strfmt("%.17g", v); }

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join_numbers(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt_num(v[i]);
    }
    return out + "]";
}

std::string join_integers(const std::vector<int>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += strfmt("%d", v[i]);
    }
    return out + "]";
}

std::string join_texts(const std::vector<std::string>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += quote(v[i]);
    }
    return out + "]";
}

} // namespace

AppConfig parse_config(const std::string& text, const std::string& source_name) {
    Raw raw = parse_raw(text, source_name);
    std::vector<std::string> errors;
    AppConfig cfg;

    static const std::set<std::string> known_sections = {
        "", "growth", "model", "model.constants", "grid", "time", "diagnostics", "output"};
    for (const auto& [name, sec] : raw.sections)
        if (!known_sections.count(name))
            errors.push_back(strfmt("unknown section [%s]", name.c_str()));

    {
        Fields root(raw, "", errors);
        cfg.schema = root.integer("schema", 1);
        if (cfg.schema != 1)
            errors.push_back(strfmt("schema version %d is not supported (expected 1)",
                                    cfg.schema));
        root.finish();
    }
    {
        Fields f(raw, "growth", errors);
        cfg.growth.kind = f.text("kind", cfg.growth.kind);
        cfg.growth.dim = f.integer("dim", cfg.growth.dim);
        cfg.growth.horizon = f.number("horizon", cfg.growth.horizon);
        cfg.growth.rho = f.number("rho", cfg.growth.rho);
        cfg.growth.saturation = f.number("saturation", cfg.growth.saturation);
        cfg.growth.scales = f.texts("scales");
        cfg.growth.times = f.numbers("times");
        cfg.growth.values.clear();
        for (int k = 1; k <= 3; ++k) {
            const std::string key = strfmt("values_%d", k);
            if (!f.has(key)) break;
            cfg.growth.values.push_back(f.numbers(key));
        }
        cfg.growth.jacobian = f.text("jacobian", cfg.growth.jacobian);
        f.finish();

        static const std::set<std::string> kinds = {"static", "isotropic-exponential",
                                                    "isotropic-logistic", "per-axis",
                                                    "tabulated"};
        if (!kinds.count(cfg.growth.kind))
            errors.push_back(strfmt("growth.kind \"%s\" is not one of static, "
                                    "isotropic-exponential, isotropic-logistic, per-axis, "
                                    "tabulated",
                                    cfg.growth.kind.c_str()));
        if (cfg.growth.dim < 1 || cfg.growth.dim > 3)
            errors.push_back(strfmt("growth.dim must be 1, 2 or 3, got %d", cfg.growth.dim));
        if (!(cfg.growth.horizon > 0.0))
            errors.push_back(strfmt("growth.horizon must be positive, got %g",
                                    cfg.growth.horizon));
        if (cfg.growth.kind == "isotropic-logistic" && !(cfg.growth.saturation > 1.0))
            errors.push_back(strfmt("growth.saturation must exceed 1 for the logistic law, "
                                    "got %g",
                                    cfg.growth.saturation));
        if (cfg.growth.kind == "per-axis" &&
            cfg.growth.scales.size() != static_cast<std::size_t>(cfg.growth.dim))
            errors.push_back(strfmt("growth.scales needs %d expressions, got %zu",
                                    cfg.growth.dim, cfg.growth.scales.size()));
        if (cfg.growth.kind == "tabulated") {
            if (cfg.growth.times.size() < 2)
                errors.push_back("growth.times needs at least two samples");
            if (cfg.growth.values.size() != static_cast<std::size_t>(cfg.growth.dim))
                errors.push_back(strfmt("tabulated growth needs values_1..values_%d",
                                        cfg.growth.dim));
            for (std::size_t k = 0; k < cfg.growth.values.size(); ++k)
                if (cfg.growth.values[k].size() != cfg.growth.times.size())
                    errors.push_back(strfmt("growth.values_%zu has %zu samples, times has %zu",
                                            k + 1, cfg.growth.values[k].size(),
                                            cfg.growth.times.size()));
        }
        if (cfg.growth.jacobian != "paper-sqrt" && cfg.growth.jacobian != "standard-det")
            errors.push_back(strfmt("growth.jacobian \"%s\" is not paper-sqrt or standard-det",
                                    cfg.growth.jacobian.c_str()));
    }
    {
        Fields f(raw, "model", errors);
        cfg.model.builtin = f.text("builtin", "");
        cfg.model.f = f.texts("f");
        cfg.model.g = f.texts("g");
        cfg.model.d = f.numbers("d");
        cfg.model.initial = f.texts("initial");
        cfg.model.initial_snapshot = f.text("initial_snapshot", "");
        cfg.model.flux_convention = f.text("flux_convention", cfg.model.flux_convention);
        f.finish();

        cfg.model.constants.clear();
        if (raw.sections.count("model.constants")) {
            for (const auto& [key, value] : raw.sections["model.constants"]) {
                if (value.kind != Value::Kind::Number)
                    errors.push_back(strfmt("model.constants.%s expects a number (line %d)",
                                            key.c_str(), value.line));
                else
                    cfg.model.constants[key] = value.num;
            }
        }

        if (!cfg.model.builtin.empty()) {
            const auto names = ReactionModel::builtin_names();
            if (std::find(names.begin(), names.end(), cfg.model.builtin) == names.end())
                errors.push_back(strfmt("model.builtin \"%s\" is unknown (known: "
                                        "brusselator-surface, reversible-reaction, example3)",
                                        cfg.model.builtin.c_str()));
            if (!cfg.model.f.empty() || !cfg.model.g.empty())
                errors.push_back("model.builtin and model.f/model.g are mutually exclusive");
        } else {
            if (cfg.model.f.empty() || cfg.model.g.empty())
                errors.push_back("model needs either builtin or both f and g expression lists");
            if (cfg.model.f.size() != cfg.model.g.size())
                errors.push_back(strfmt("model.f has %zu entries, model.g has %zu",
                                        cfg.model.f.size(), cfg.model.g.size()));
        }
        for (double di : cfg.model.d)
            if (!(di > 0.0))
                errors.push_back(strfmt("model.d entries must be positive, got %g", di));
        if (!cfg.model.initial.empty() && !cfg.model.initial_snapshot.empty())
            errors.push_back("model.initial and model.initial_snapshot are mutually exclusive");
        if (!cfg.model.initial_snapshot.empty() &&
            !std::filesystem::exists(cfg.model.initial_snapshot))
            errors.push_back(strfmt("model.initial_snapshot \"%s\" does not exist",
                                    cfg.model.initial_snapshot.c_str()));
        if (cfg.model.flux_convention != "d-scaled" && cfg.model.flux_convention != "plain")
            errors.push_back(strfmt("model.flux_convention \"%s\" is not d-scaled or plain",
                                    cfg.model.flux_convention.c_str()));
    }
    {
        Fields f(raw, "grid", errors);
        cfg.grid.extents = f.numbers("extents", cfg.grid.extents);
        cfg.grid.nodes = f.integers("nodes", cfg.grid.nodes);
        f.finish();
        const auto dim = static_cast<std::size_t>(cfg.growth.dim);
        if (cfg.grid.extents.size() != dim)
            errors.push_back(strfmt("grid.extents has %zu entries, growth.dim is %d",
                                    cfg.grid.extents.size(), cfg.growth.dim));
        if (cfg.grid.nodes.size() != dim)
            errors.push_back(strfmt("grid.nodes has %zu entries, growth.dim is %d",
                                    cfg.grid.nodes.size(), cfg.growth.dim));
        for (double L : cfg.grid.extents)
            if (!(L > 0.0)) errors.push_back(strfmt("grid.extents must be positive, got %g", L));
        for (int N : cfg.grid.nodes)
            if (N < 3) errors.push_back(strfmt("grid.nodes must be at least 3, got %d", N));
    }
    {
        Fields f(raw, "time", errors);
        cfg.time.t_end = f.number("t_end", cfg.time.t_end);
        cfg.time.dt = f.number("dt", cfg.time.dt);
        cfg.time.stepper = f.text("stepper", cfg.time.stepper);
        cfg.time.safety = f.number("safety", cfg.time.safety);
        cfg.time.snapshot_every = f.integer("snapshot_every", cfg.time.snapshot_every);
        f.finish();
        if (!(cfg.time.t_end > 0.0))
            errors.push_back(strfmt("time.t_end must be positive, got %g", cfg.time.t_end));
        if (cfg.time.t_end > cfg.growth.horizon)
            errors.push_back(strfmt("time.t_end = %s exceeds growth.horizon = %s",
                                    fmt_num(cfg.time.t_end).c_str(),
                                    fmt_num(cfg.growth.horizon).c_str()));
        if (cfg.time.dt < 0.0)
            errors.push_back(strfmt("time.dt must be nonnegative, got %g", cfg.time.dt));
        if (cfg.time.stepper != "rk4" && cfg.time.stepper != "imex-cn")
            errors.push_back(strfmt("time.stepper \"%s\" is not rk4 or imex-cn",
                                    cfg.time.stepper.c_str()));
        if (!(cfg.time.safety > 0.0) || cfg.time.safety > 1.0)
            errors.push_back(strfmt("time.safety must lie in (0, 1], got %g", cfg.time.safety));
        if (cfg.time.snapshot_every < 0)
            errors.push_back(strfmt("time.snapshot_every must be nonnegative, got %d",
                                    cfg.time.snapshot_every));
    }
    {
        Fields f(raw, "diagnostics", errors);
        const bool threshold_given = f.has("blowup_threshold");
        cfg.diagnostics.lyapunov_p = f.integer("lyapunov_p", cfg.diagnostics.lyapunov_p);
        cfg.diagnostics.positivity = f.text("positivity", cfg.diagnostics.positivity);
        cfg.diagnostics.overshoot_tol = f.number("overshoot_tol", cfg.diagnostics.overshoot_tol);
        cfg.diagnostics.blowup_threshold =
            f.number("blowup_threshold", cfg.diagnostics.blowup_threshold);
        cfg.diagnostics.quasi_positivity_precheck =
            f.boolean("quasi_positivity_precheck", cfg.diagnostics.quasi_positivity_precheck);
        cfg.diagnostics.mass_weights = f.numbers("mass_weights");
        f.finish();
        if (cfg.diagnostics.lyapunov_p < 2)
            errors.push_back(strfmt("diagnostics.lyapunov_p must be at least 2, got %d",
                                    cfg.diagnostics.lyapunov_p));
        if (cfg.diagnostics.positivity != "auto" && cfg.diagnostics.positivity != "on" &&
            cfg.diagnostics.positivity != "off")
            errors.push_back(strfmt("diagnostics.positivity \"%s\" is not auto, on or off",
                                    cfg.diagnostics.positivity.c_str()));
        if (cfg.diagnostics.overshoot_tol < 0.0)
            errors.push_back(strfmt("diagnostics.overshoot_tol must be nonnegative, got %g",
                                    cfg.diagnostics.overshoot_tol));
        if (threshold_given && !(cfg.diagnostics.blowup_threshold > 0.0))
            errors.push_back(strfmt("diagnostics.blowup_threshold must be positive, got %g",
                                    cfg.diagnostics.blowup_threshold));
        for (double w : cfg.diagnostics.mass_weights)
            if (!(w > 0.0))
                errors.push_back(strfmt("diagnostics.mass_weights must be positive, got %g", w));
    }
    {
        Fields f(raw, "output", errors);
        cfg.output.directory = f.text("directory", cfg.output.directory);
        cfg.output.prefix = f.text("prefix", cfg.output.prefix);
        cfg.output.snapshots = f.boolean("snapshots", cfg.output.snapshots);
        cfg.output.diagnostics = f.boolean("diagnostics", cfg.output.diagnostics);
        f.finish();
        if (cfg.output.directory.empty()) errors.push_back("output.directory must not be empty");
        if (cfg.output.prefix.empty() ||
            cfg.output.prefix.find('/') != std::string::npos)
            errors.push_back(strfmt("output.prefix \"%s\" must be a bare file prefix",
                                    cfg.output.prefix.c_str()));
    }

    // Cross-field checks that need the component count.
    std::size_t m = cfg.model.builtin.empty() ? cfg.model.f.size()
                                              : builtin_component_count(cfg.model.builtin);
    if (m > 0) {
        if (!cfg.model.d.empty() && cfg.model.d.size() != m)
            errors.push_back(strfmt("model.d has %zu entries for %zu components",
                                    cfg.model.d.size(), m));
        if (!cfg.model.initial.empty() && cfg.model.initial.size() != m)
            errors.push_back(strfmt("model.initial has %zu expressions for %zu components",
                                    cfg.model.initial.size(), m));
        if (!cfg.diagnostics.mass_weights.empty() && cfg.diagnostics.mass_weights.size() != m)
            errors.push_back(strfmt("diagnostics.mass_weights has %zu entries for %zu "
                                    "components",
                                    cfg.diagnostics.mass_weights.size(), m));
    }

    if (!errors.empty()) throw ConfigError(errors);
    return cfg;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(strfmt("cannot open config file \"%s\"", path.c_str()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

std::string write_config(const AppConfig& cfg) {
    std::string out;
    out += strfmt("schema = %d\n\n", cfg.schema);

    out += "[growth]\n";
    out += "kind = " + quote(cfg.growth.kind) + "\n";
    out += strfmt("dim = %d\n", cfg.growth.dim);
    out += "horizon = " + fmt_num(cfg.growth.horizon) + "\n";
    out += "rho = " + fmt_num(cfg.growth.rho) + "\n";
    out += "saturation = " + fmt_num(cfg.growth.saturation) + "\n";
    out += "scales = " + join_texts(cfg.growth.scales) + "\n";
    out += "times = " + join_numbers(cfg.growth.times) + "\n";
    for (std::size_t k = 0; k < cfg.growth.values.size(); ++k)
        out += strfmt("values_%zu = ", k + 1) + join_numbers(cfg.growth.values[k]) + "\n";
    out += "jacobian = " + quote(cfg.growth.jacobian) + "\n";

    out += "\n[model]\n";
    out += "builtin = " + quote(cfg.model.builtin) + "\n";
    out += "f = " + join_texts(cfg.model.f) + "\n";
    out += "g = " + join_texts(cfg.model.g) + "\n";
    out += "d = " + join_numbers(cfg.model.d) + "\n";
    out += "initial = " + join_texts(cfg.model.initial) + "\n";
    out += "initial_snapshot = " + quote(cfg.model.initial_snapshot) + "\n";
    out += "flux_convention = " + quote(cfg.model.flux_convention) + "\n";
    if (!cfg.model.constants.empty()) {
        out += "\n[model.constants]\n";
        for (const auto& [key, value] : cfg.model.constants)
            out += key + " = " + fmt_num(value) + "\n";
    }

    out += "\n[grid]\n";
    out += "extents = " + join_numbers(cfg.grid.extents) + "\n";
    out += "nodes = " + join_integers(cfg.grid.nodes) + "\n";

    out += "\n[time]\n";
    out += "t_end = " + fmt_num(cfg.time.t_end) + "\n";
    out += "dt = " + fmt_num(cfg.time.dt) + "\n";
    out += "stepper = " + quote(cfg.time.stepper) + "\n";
    out += "safety = " + fmt_num(cfg.time.safety) + "\n";
    out += strfmt("snapshot_every = %d\n", cfg.time.snapshot_every);

    out += "\n[diagnostics]\n";
    out += strfmt("lyapunov_p = %d\n", cfg.diagnostics.lyapunov_p);
    out += "positivity = " + quote(cfg.diagnostics.positivity) + "\n";
    out += "overshoot_tol = " + fmt_num(cfg.diagnostics.overshoot_tol) + "\n";
    if (cfg.diagnostics.blowup_threshold > 0.0)
        out += "blowup_threshold = " + fmt_num(cfg.diagnostics.blowup_threshold) + "\n";
    out += std::string("quasi_positivity_precheck = ") +
           (cfg.diagnostics.quasi_positivity_precheck ? "true" : "false") + "\n";
    out += "mass_weights = " + join_numbers(cfg.diagnostics.mass_weights) + "\n";

    out += "\n[output]\n";
    out += "directory = " + quote(cfg.output.directory) + "\n";
    out += "prefix = " + quote(cfg.output.prefix) + "\n";
    out += std::string("snapshots = ") + (cfg.output.snapshots ? "true" : "false") + "\n";
    out += std::string("diagnostics = ") + (cfg.output.diagnostics ? "true" : "false") + "\n";
    return out;
}

void save_config(const AppConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(strfmt("cannot write config file \"%s\"", path.c_str()));
    out << write_config(cfg);
}

std::string config_hash(const AppConfig& cfg) {
    const std::string text = write_config(cfg);
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return strfmt("%016llx", static_cast<unsigned long long>(h));
}

GrowthLaw make_growth(const GrowthSection& g) {
    GrowthLaw law = [&]() {
        if (g.kind == "static") return GrowthLaw::make_static(g.dim, g.horizon);
        if (g.kind == "isotropic-exponential")
            return GrowthLaw::isotropic_exponential(g.dim, g.horizon, g.rho);
        if (g.kind == "isotropic-logistic")
            return GrowthLaw::isotropic_logistic(g.dim, g.horizon, g.rho, g.saturation);
        if (g.kind == "per-axis") return GrowthLaw::per_axis(g.horizon, g.scales);
        if (g.kind == "tabulated") return GrowthLaw::tabulated(g.horizon, g.times, g.values);
        throw ValidationError(strfmt("unknown growth kind \"%s\"", g.kind.c_str()));
    }();
    law.set_jacobian(g.jacobian == "standard-det" ? JacobianMode::StandardDet
                                                  : JacobianMode::PaperSqrt);
    return law;
}

ReactionModel make_model(const ModelSection& m) {
    if (!m.builtin.empty()) return ReactionModel::builtin(m.builtin, m.constants, m.d);
    std::vector<double> d = m.d;
    if (d.empty()) d.assign(m.f.size(), 1.0);
    return ReactionModel::from_expressions(m.f, m.g, d, m.constants);
}

Grid make_grid(const GridSection& g) { return Grid(g.extents, g.nodes); }

StateField make_initial(const AppConfig& cfg, const Grid& grid, const ReactionModel& model) {
    if (!cfg.model.initial_snapshot.empty()) {
        StateField state = read_snapshot_for_grid(cfg.model.initial_snapshot, grid);
        if (state.components() != model.m)
            throw ValidationError(strfmt("snapshot \"%s\" holds %zu components, model has %zu",
                                         cfg.model.initial_snapshot.c_str(), state.components(),
                                         model.m));
        return state;
    }
    if (cfg.model.initial.size() != model.m)
        throw ValidationError(strfmt("model.initial has %zu expressions for %zu components",
                                     cfg.model.initial.size(), model.m));
    static const std::vector<std::string> all_vars = {"x", "y", "z"};
    const std::vector<std::string> vars(all_vars.begin(), all_vars.begin() + grid.dim());
    StateField state(model.m, grid.num_nodes(), 0.0);
    std::vector<double> coords(static_cast<std::size_t>(grid.dim()));
    for (std::size_t i = 0; i < model.m; ++i) {
        Expression expr = Expression::parse(cfg.model.initial[i], vars, model.constants);
        for (std::size_t p = 0; p < grid.num_nodes(); ++p) {
            const auto pos = grid.position(p);
            for (int k = 0; k < grid.dim(); ++k) coords[static_cast<std::size_t>(k)] = pos[static_cast<std::size_t>(k)];
            state.comp[i][p] = expr.eval(coords);
        }
    }
    return state;
}

SolveOptions make_solve_options(const AppConfig& cfg) {
    SolveOptions opts;
    opts.t_end = cfg.time.t_end;
    opts.stepper = cfg.time.stepper == "imex-cn" ? Stepper::ImexCN : Stepper::ExplicitRK4;
    opts.dt = cfg.time.dt;
    opts.safety = cfg.time.safety;
    opts.snapshot_every = cfg.time.snapshot_every;
    opts.overshoot_tol = cfg.diagnostics.overshoot_tol;
    opts.blowup_threshold = cfg.diagnostics.blowup_threshold;
    opts.positivity = cfg.diagnostics.positivity == "on"
                          ? PositivityMonitor::On
                          : (cfg.diagnostics.positivity == "off" ? PositivityMonitor::Off
                                                                 : PositivityMonitor::Auto);
    opts.flux = cfg.model.flux_convention == "plain" ? FluxConvention::Plain
                                                     : FluxConvention::DScaled;
    opts.quasi_positivity_precheck = cfg.diagnostics.quasi_positivity_precheck;
    opts.lyapunov_p = cfg.diagnostics.lyapunov_p;
    opts.mass_weights = cfg.diagnostics.mass_weights;
    return opts;
}

} // namespace evodiff

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ottosim/cycle.hpp"
#include "ottosim/error.hpp"
#include "ottosim/log.hpp"
#include "ottosim/model.hpp"
#include "ottosim/version.hpp"

namespace ottosim {

using json = nlohmann::json;

enum class Spacing { linear, log };

struct AxisSpec {
    std::string name;  ///< xi | theta | t1 | tau
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 2;
    Spacing spacing = Spacing::linear;

    [[nodiscard]] double value(std::size_t i) const {
        if (i + 1 == count) return max;
        const double f = static_cast<double>(i) / static_cast<double>(count - 1);
        if (spacing == Spacing::log) return std::exp(std::log(min) + f * (std::log(max) - std::log(min)));
        return min + f * (max - min);
    }
    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = value(i);
        return out;
    }
};

inline constexpr std::size_t max_grid_points = 1'000'000;

/// Column order of the CSV/JSON output tables.
inline const std::vector<std::string>& output_columns() {
    static const std::vector<std::string> cols{
        "xi",  "theta", "t1",  "tau", "Q_h",      "Q_c",       "W23",       "W41",            "w41_paper_literal",
        "W_out", "eta", "power", "F12", "F23", "F41", "Wfri_exp", "Wfri_comp", "closure_defect", "engine_flag",
        "status"};
    return cols;
}

struct SweepSpec {
    EngineParams base;
    StrokeMode mode;
    double t1 = 50.0;
    double tau = 10.0;
    std::vector<AxisSpec> axes;
    CycleOptions options;
    std::vector<std::string> outputs = output_columns();

    [[nodiscard]] std::size_t grid_size() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.count;
        return n;
    }
};

struct SweepRow {
    double xi = 0.0;
    double theta = 0.0;
    double t1 = 0.0;
    double tau = 0.0;
    double Q_h = 0.0;
    double Q_c = 0.0;
    double W23 = 0.0;
    double W41 = 0.0;
    double w41_paper_literal = 0.0;
    double W_out = 0.0;
    double eta = 0.0;
    double power = 0.0;
    double F12 = 0.0;
    double F23 = 0.0;
    double F41 = 0.0;
    double Wfri_exp = 0.0;
    double Wfri_comp = 0.0;
    double closure_defect = 0.0;
    bool engine_flag = false;
    std::string status = "ok";

    // Integrator diagnostics; not part of the exported tables.
    double min_eigenvalue = 0.0;
    double max_trace_drift_rate = 0.0;
    double max_purity_drift = 0.0;

    [[nodiscard]] bool ok() const { return status == "ok"; }
};

namespace detail {

inline double* row_field(SweepRow& r, std::string_view name) {
    if (name == "xi") return &r.xi;
    if (name == "theta") return &r.theta;
    if (name == "t1") return &r.t1;
    if (name == "tau") return &r.tau;
    if (name == "Q_h") return &r.Q_h;
    if (name == "Q_c") return &r.Q_c;
    if (name == "W23") return &r.W23;
    if (name == "W41") return &r.W41;
    if (name == "w41_paper_literal") return &r.w41_paper_literal;
    if (name == "W_out") return &r.W_out;
    if (name == "eta") return &r.eta;
    if (name == "power") return &r.power;
    if (name == "F12") return &r.F12;
    if (name == "F23") return &r.F23;
    if (name == "F41") return &r.F41;
    if (name == "Wfri_exp") return &r.Wfri_exp;
    if (name == "Wfri_comp") return &r.Wfri_comp;
    if (name == "closure_defect") return &r.closure_defect;
    return nullptr;
}

inline const double* row_field(const SweepRow& r, std::string_view name) {
    return row_field(const_cast<SweepRow&>(r), name);
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw SpecError{"csv: cannot parse number '" + std::string{s} + "'"};
    return v;
}

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// RFC 4180 record splitter. Returns false at end of input.
inline bool csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string cur;
    bool quoted = false;
    bool any = false;
    for (int ch = in.get(); ch != std::char_traits<char>::eof(); ch = in.get()) {
        any = true;
        const char c = static_cast<char>(ch);
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    cur += '"';
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            break;
        } else if (c == '\n') {
            break;
        } else {
            cur += c;
        }
    }
    if (quoted) throw SpecError{"csv: unterminated quoted field"};
    if (!any) return false;
    fields.push_back(std::move(cur));
    return true;
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw SpecError{where + ": expected an object"};
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw SpecError{where + ": unknown key '" + key + "'"};
    }
}

template <class T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw SpecError{where + "." + key + ": wrong type"};
    }
}

inline double get_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.at(key).is_number()) throw SpecError{where + "." + key + ": expected a number"};
    return obj.at(key).get<double>();
}

template <class E>
E get_enum(const json& obj, const std::string& key, const std::string& where,
           std::initializer_list<std::pair<std::string_view, E>> table) {
    const auto s = get_as<std::string>(obj, key, where);
    for (const auto& [name, value] : table)
        if (name == s) return value;
    throw SpecError{where + "." + key + ": invalid value '" + s + "'"};
}

template <class E>
std::string enum_name(E v, std::initializer_list<std::pair<std::string_view, E>> table) {
    for (const auto& [name, value] : table)
        if (value == v) return std::string{name};
    return "?";
}

inline const std::initializer_list<std::pair<std::string_view, HeatingMode>> heating_names{
    {"finite", HeatingMode::finite}, {"full", HeatingMode::full}};
inline const std::initializer_list<std::pair<std::string_view, UnitaryMode>> unitary_names{
    {"adiabatic", UnitaryMode::adiabatic}, {"finite", UnitaryMode::finite}, {"sudden", UnitaryMode::sudden}};
inline const std::initializer_list<std::pair<std::string_view, Spacing>> spacing_names{
    {"linear", Spacing::linear}, {"log", Spacing::log}};
inline const std::initializer_list<std::pair<std::string_view, FullThermalization>> thermalization_names{
    {"gibbs", FullThermalization::gibbs}, {"steady_state", FullThermalization::steady_state}};
inline const std::initializer_list<std::pair<std::string_view, InitialState>> initial_names{
    {"bare", InitialState::bare}, {"dressed", InitialState::dressed}};
inline const std::initializer_list<std::pair<std::string_view, Projection>> projection_names{
    {"full", Projection::full}, {"atoms_only", Projection::atoms_only}};

} // namespace detail

/// Structural and physical validation; throws SpecError naming the offending key.
inline void validate_spec(const SweepSpec& s) {
    try {
        s.base.validate();
    } catch (const Error& e) {
        throw SpecError{std::string{"base: "} + e.what()};
    }
    if (s.axes.empty()) throw SpecError{"axes: at least one axis is required"};
    if (s.axes.size() > 2) throw SpecError{"axes: at most two axes are supported"};
    if (s.axes.size() == 2 && s.axes[0].name == s.axes[1].name)
        throw SpecError{"axes: duplicate axis '" + s.axes[0].name + "'"};
    if (!(s.options.dt > 0.0)) throw SpecError{"dt: must be positive"};
    if (s.options.sample_stride == 0) throw SpecError{"sample_stride: must be positive"};
    if (!(s.t1 >= 0.0)) throw SpecError{"mode.t1: must be >= 0"};
    if (!(s.tau >= 0.0)) throw SpecError{"mode.tau: must be >= 0"};
    std::size_t total = 1;
    for (const auto& a : s.axes) {
        const std::string where = "axes." + a.name;
        if (a.name != "xi" && a.name != "theta" && a.name != "t1" && a.name != "tau")
            throw SpecError{"axes: unknown axis name '" + a.name + "'"};
        if (a.count < 2) throw SpecError{where + ".count: must be >= 2"};
        if (!std::isfinite(a.min) || !std::isfinite(a.max) || a.min > a.max)
            throw SpecError{where + ": need finite min <= max"};
        if (a.spacing == Spacing::log && !(a.min > 0.0)) throw SpecError{where + ".min: log spacing needs min > 0"};
        if (a.name == "xi" && !(a.min > 0.0)) throw SpecError{where + ".min: xi must be > 0"};
        if (a.name == "theta" && (a.min < 0.0 || a.max > std::numbers::pi))
            throw SpecError{where + ": theta must lie in [0, pi]"};
        if ((a.name == "t1" || a.name == "tau") && a.min < 0.0) throw SpecError{where + ".min: must be >= 0"};
        if (a.name == "t1" && s.mode.heating != HeatingMode::finite)
            throw SpecError{where + ": t1 axis requires mode.heating = finite"};
        if (a.name == "tau" && s.mode.unitary != UnitaryMode::finite)
            throw SpecError{where + ": tau axis requires mode.unitary = finite"};
        if (a.count > max_grid_points || total * a.count > max_grid_points)
            throw SpecError{"axes: grid exceeds " + std::to_string(max_grid_points) + " points"};
        total *= a.count;
    }
    const auto& cols = output_columns();
    for (const auto& c : s.outputs)
        if (std::find(cols.begin(), cols.end(), c) == cols.end()) throw SpecError{"outputs: unknown column '" + c + "'"};
}

/// Builds a spec from a parsed JSON document (strict: unknown keys are errors).
inline SweepSpec spec_from_json(const json& doc) {
    using namespace detail;
    check_keys(doc, "spec", {"base", "mode", "axes", "dt", "sample_stride", "outputs", "options"});
    SweepSpec s;
    if (doc.contains("base")) {
        const auto& b = doc.at("base");
        check_keys(b, "base", {"omega", "g", "B_h", "B_c", "chi1", "chi2", "Gamma", "theta", "xi", "nbar", "n_ph"});
        auto num = [&](const char* k, double& out) {
            if (b.contains(k)) out = get_number(b, k, "base");
        };
        num("omega", s.base.omega);
        num("g", s.base.g);
        num("B_h", s.base.B_h);
        num("B_c", s.base.B_c);
        num("chi1", s.base.chi1);
        num("chi2", s.base.chi2);
        num("Gamma", s.base.Gamma);
        num("theta", s.base.theta);
        num("xi", s.base.xi);
        num("nbar", s.base.nbar);
        if (b.contains("n_ph")) {
            if (!b.at("n_ph").is_number_unsigned()) throw SpecError{"base.n_ph: expected a positive integer"};
            s.base.n_ph = b.at("n_ph").get<std::size_t>();
        }
    }
    if (doc.contains("mode")) {
        const auto& m = doc.at("mode");
        check_keys(m, "mode", {"heating", "unitary", "t1", "tau"});
        if (m.contains("heating")) s.mode.heating = get_enum(m, "heating", "mode", heating_names);
        if (m.contains("unitary")) s.mode.unitary = get_enum(m, "unitary", "mode", unitary_names);
        if (m.contains("t1")) s.t1 = get_number(m, "t1", "mode");
        if (m.contains("tau")) s.tau = get_number(m, "tau", "mode");
    }
    if (!doc.contains("axes") || !doc.at("axes").is_array()) throw SpecError{"axes: required array"};
    for (const auto& a : doc.at("axes")) {
        check_keys(a, "axes[]", {"name", "min", "max", "count", "spacing"});
        for (const char* k : {"name", "min", "max", "count"})
            if (!a.contains(k)) throw SpecError{std::string{"axes[]."} + k + ": required"};
        AxisSpec ax;
        ax.name = get_as<std::string>(a, "name", "axes[]");
        const std::string where = "axes." + ax.name;
        ax.min = get_number(a, "min", where);
        ax.max = get_number(a, "max", where);
        if (!a.at("count").is_number_unsigned()) throw SpecError{where + ".count: expected a positive integer"};
        ax.count = a.at("count").get<std::size_t>();
        if (a.contains("spacing")) ax.spacing = get_enum(a, "spacing", where, spacing_names);
        s.axes.push_back(ax);
    }
    if (doc.contains("dt")) s.options.dt = get_number(doc, "dt", "spec");
    if (doc.contains("sample_stride")) {
        if (!doc.at("sample_stride").is_number_unsigned()) throw SpecError{"sample_stride: expected a positive integer"};
        s.options.sample_stride = doc.at("sample_stride").get<std::size_t>();
    }
    if (doc.contains("outputs")) {
        const auto wanted = get_as<std::vector<std::string>>(doc, "outputs", "spec");
        const auto& cols = output_columns();
        for (const auto& c : wanted)
            if (std::find(cols.begin(), cols.end(), c) == cols.end())
                throw SpecError{"outputs: unknown column '" + c + "'"};
        s.outputs.clear();
        for (const auto& c : cols)
            if (std::find(wanted.begin(), wanted.end(), c) != wanted.end()) s.outputs.push_back(c);
    }
    if (doc.contains("options")) {
        const auto& o = doc.at("options");
        check_keys(o, "options", {"full_thermalization", "thermalize_with_phonon", "initial_state", "projection",
                                  "homotopy_points"});
        if (o.contains("full_thermalization"))
            s.options.full_thermalization = get_enum(o, "full_thermalization", "options", thermalization_names);
        if (o.contains("thermalize_with_phonon"))
            s.options.thermalize_with_phonon = get_as<bool>(o, "thermalize_with_phonon", "options");
        if (o.contains("initial_state"))
            s.options.initial_state = get_enum(o, "initial_state", "options", initial_names);
        if (o.contains("projection")) s.options.projection = get_enum(o, "projection", "options", projection_names);
        if (o.contains("homotopy_points")) {
            if (!o.at("homotopy_points").is_number_unsigned())
                throw SpecError{"options.homotopy_points: expected a positive integer"};
            s.options.homotopy_points = o.at("homotopy_points").get<std::size_t>();
        }
    }
    validate_spec(s);
    return s;
}

/// Fully expanded spec (every field explicit). Keys are sorted, so dump() is canonical.
inline json spec_to_json(const SweepSpec& s) {
    using namespace detail;
    json axes = json::array();
    for (const auto& a : s.axes)
        axes.push_back({{"name", a.name},
                        {"min", a.min},
                        {"max", a.max},
                        {"count", a.count},
                        {"spacing", enum_name(a.spacing, spacing_names)}});
    return json{
        {"base",
         {{"omega", s.base.omega},
          {"g", s.base.g},
          {"B_h", s.base.B_h},
          {"B_c", s.base.B_c},
          {"chi1", s.base.chi1},
          {"chi2", s.base.chi2},
          {"Gamma", s.base.Gamma},
          {"theta", s.base.theta},
          {"xi", s.base.xi},
          {"nbar", s.base.nbar},
          {"n_ph", s.base.n_ph}}},
        {"mode",
         {{"heating", enum_name(s.mode.heating, heating_names)},
          {"unitary", enum_name(s.mode.unitary, unitary_names)},
          {"t1", s.t1},
          {"tau", s.tau}}},
        {"axes", axes},
        {"dt", s.options.dt},
        {"sample_stride", s.options.sample_stride},
        {"outputs", s.outputs},
        {"options",
         {{"full_thermalization", enum_name(s.options.full_thermalization, thermalization_names)},
          {"thermalize_with_phonon", s.options.thermalize_with_phonon},
          {"initial_state", enum_name(s.options.initial_state, initial_names)},
          {"projection", enum_name(s.options.projection, projection_names)},
          {"homotopy_points", s.options.homotopy_points}}}};
}

inline SweepSpec parse_spec(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw SpecError{"parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                        e.what()};
    }
    return spec_from_json(doc);
}

inline SweepSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) throw SpecError{"cannot open spec file '" + path.string() + "'"};
    const std::string text{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
    try {
        return parse_spec(text);
    } catch (const SpecError& e) {
        throw SpecError{path.string() + ": " + e.what()};
    }
}

/// FNV-1a 64-bit hash of the canonical spec JSON, as 16 hex digits.
inline std::string spec_hash(const SweepSpec& s) {
    const std::string text = spec_to_json(s).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

/// Parameter set and durations for grid point `index` (row-major in axis order).
struct GridPoint {
    EngineParams params;
    double t1 = 0.0;
    double tau = 0.0;
};

inline GridPoint grid_point(const SweepSpec& s, std::size_t index) {
    GridPoint gp{s.base, s.t1, s.tau};
    for (std::size_t k = s.axes.size(); k-- > 0;) {
        const auto& a = s.axes[k];
        const double v = a.value(index % a.count);
        index /= a.count;
        if (a.name == "xi") gp.params.xi = v;
        else if (a.name == "theta") gp.params.theta = v;
        else if (a.name == "t1") gp.t1 = v;
        else if (a.name == "tau") gp.tau = v;
    }
    return gp;
}

inline SweepRow make_row(const GridPoint& gp, const CycleResult& r) {
    SweepRow row;
    row.xi = gp.params.xi;
    row.theta = gp.params.theta;
    row.t1 = gp.t1;
    row.tau = gp.tau;
    row.Q_h = r.Q_h;
    row.Q_c = r.Q_c;
    row.W23 = r.W23;
    row.W41 = r.W41;
    row.w41_paper_literal = r.w41_paper_literal;
    row.W_out = r.W_out;
    row.eta = r.eta;
    row.power = r.power;
    row.F12 = r.F12;
    row.F23 = r.F23;
    row.F41 = r.F41;
    row.Wfri_exp = r.Wfri_exp;
    row.Wfri_comp = r.Wfri_comp;
    row.closure_defect = r.closure_defect;
    row.engine_flag = r.engine_flag;
    row.min_eigenvalue = r.min_eigenvalue;
    row.max_trace_drift_rate = r.max_trace_drift_rate;
    row.max_purity_drift = r.max_purity_drift;
    return row;
}

inline SweepRow error_row(const GridPoint& gp, const std::string& msg) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    SweepRow row;
    row.xi = gp.params.xi;
    row.theta = gp.params.theta;
    row.t1 = gp.t1;
    row.tau = gp.tau;
    for (const auto& c : output_columns())
        if (auto* f = detail::row_field(row, c); f && c != "xi" && c != "theta" && c != "t1" && c != "tau") *f = nan;
    row.status = "error: " + msg;
    return row;
}

inline SweepRow evaluate_point(const SweepSpec& s, std::size_t index) {
    const GridPoint gp = grid_point(s, index);
    try {
        return make_row(gp, run_cycle(gp.params, s.mode, gp.t1, gp.tau, s.options));
    } catch (const std::exception& e) {
        log::warn("grid point " + std::to_string(index) + " failed: " + e.what());
        return error_row(gp, e.what());
    }
}

/// Evaluates every grid point on `workers` threads. Rows come back in grid order;
/// per-point failures become rows with status "error: ...".
inline std::vector<SweepRow> run_sweep(const SweepSpec& s, std::size_t workers) {
    if (workers == 0) throw InvalidArgument{"run_sweep: workers must be positive"};
    if (s.axes.empty()) throw SpecError{"axes: at least one axis is required"};
    if (s.axes.size() > 2) throw SpecError{"axes: at most two axes are supported"};
    for (const auto& a : s.axes)
        if (a.count < 2) throw SpecError{"axes." + a.name + ".count: must be >= 2"};
    const std::size_t n = s.grid_size();
    if (n > max_grid_points) throw SpecError{"axes: grid exceeds limit"};

    std::vector<SweepRow> rows(n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            rows[i] = evaluate_point(s, i);
            const auto d = done.fetch_add(1) + 1;
            if (d % 100 == 0 || d == n) log::debug("sweep: " + std::to_string(d) + "/" + std::to_string(n));
        }
    };
    workers = std::min(workers, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return rows;
}

inline void write_csv(const std::vector<SweepRow>& rows, std::ostream& out,
                      const std::vector<std::string>& columns = output_columns()) {
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (j) out << ',';
            const auto& c = columns[j];
            if (c == "engine_flag") out << (r.engine_flag ? "true" : "false");
            else if (c == "status") out << detail::csv_quote(r.status);
            else out << detail::format_double(*detail::row_field(r, c));
        }
        out << '\n';
    }
}

inline void write_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path,
                      const std::vector<std::string>& columns = output_columns()) {
    std::ofstream out{path, std::ios::binary};
    if (!out) throw Error{"cannot write '" + path.string() + "'"};
    write_csv(rows, out, columns);
    if (!out) throw Error{"write failed for '" + path.string() + "'"};
}

/// Columns absent from the header keep their defaults.
inline std::vector<SweepRow> read_csv(std::istream& in) {
    std::vector<std::string> header;
    if (!detail::csv_record(in, header)) throw SpecError{"csv: missing header"};
    const auto& cols = output_columns();
    for (const auto& h : header)
        if (std::find(cols.begin(), cols.end(), h) == cols.end()) throw SpecError{"csv: unknown column '" + h + "'"};
    std::vector<SweepRow> rows;
    std::vector<std::string> fields;
    while (detail::csv_record(in, fields)) {
        if (fields.size() != header.size())
            throw SpecError{"csv: row " + std::to_string(rows.size() + 1) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(header.size())};
        SweepRow r;
        for (std::size_t j = 0; j < header.size(); ++j) {
            const auto& c = header[j];
            if (c == "engine_flag") {
                if (fields[j] != "true" && fields[j] != "false")
                    throw SpecError{"csv: engine_flag must be true or false"};
                r.engine_flag = fields[j] == "true";
            } else if (c == "status") {
                r.status = fields[j];
            } else {
                *detail::row_field(r, c) = detail::parse_double(fields[j]);
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<SweepRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) throw Error{"cannot read '" + path.string() + "'"};
    try {
        return read_csv(in);
    } catch (const SpecError& e) {
        throw SpecError{path.string() + ": " + e.what()};
    }
}

/// Array of objects with the same fields as the CSV; non-finite numbers become null.
inline json rows_to_json(const std::vector<SweepRow>& rows, const std::vector<std::string>& columns = output_columns()) {
    json arr = json::array();
    for (const auto& r : rows) {
        json obj = json::object();
        for (const auto& c : columns) {
            if (c == "engine_flag") obj[c] = r.engine_flag;
            else if (c == "status") obj[c] = r.status;
            else {
                const double v = *detail::row_field(r, c);
                obj[c] = std::isfinite(v) ? json(v) : json(nullptr);
            }
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline void write_json(const std::vector<SweepRow>& rows, const std::filesystem::path& path,
                       const std::vector<std::string>& columns = output_columns()) {
    std::ofstream out{path, std::ios::binary};
    if (!out) throw Error{"cannot write '" + path.string() + "'"};
    out << rows_to_json(rows, columns).dump(2) << '\n';
    if (!out) throw Error{"write failed for '" + path.string() + "'"};
}

/// One cycle as a JSON object; non-finite numbers become null.
inline json cycle_to_json(const CycleResult& r) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json strokes = json::array();
    for (const auto& s : r.strokes)
        strokes.push_back(
            {{"label", s.label}, {"U_before", num(s.U_before)}, {"U_after", num(s.U_after)}, {"duration", num(s.duration)}});
    return json{{"Q_h", num(r.Q_h)},
                {"Q_c", num(r.Q_c)},
                {"W23", num(r.W23)},
                {"W41", num(r.W41)},
                {"w41_paper_literal", num(r.w41_paper_literal)},
                {"W_net_raw", num(r.W_net_raw)},
                {"W_out", num(r.W_out)},
                {"eta", num(r.eta)},
                {"eta_raw", num(r.eta_raw)},
                {"power", num(r.power)},
                {"t_cycle", num(r.t_cycle)},
                {"F12", num(r.F12)},
                {"F23", num(r.F23)},
                {"F41", num(r.F41)},
                {"Wfri_exp", num(r.Wfri_exp)},
                {"Wfri_comp", num(r.Wfri_comp)},
                {"closure_defect", num(r.closure_defect)},
                {"first_law_residual", num(r.first_law_residual)},
                {"engine_flag", r.engine_flag},
                {"min_eigenvalue", num(r.min_eigenvalue)},
                {"max_trace_drift_rate", num(r.max_trace_drift_rate)},
                {"max_purity_drift", num(r.max_purity_drift)},
                {"strokes", strokes}};
}

inline json sweep_metadata(const SweepSpec& s, std::size_t row_count) {
    return json{{"tool", tool_name},
                {"version", tool_version},
                {"spec", spec_to_json(s)},
                {"spec_hash", spec_hash(s)},
                {"dt", s.options.dt},
                {"columns", s.outputs},
                {"rows", row_count}};
}

inline void write_metadata(const SweepSpec& s, std::size_t row_count, const std::filesystem::path& path) {
    std::ofstream out{path, std::ios::binary};
    if (!out) throw Error{"cannot write '" + path.string() + "'"};
    out << sweep_metadata(s, row_count).dump(2) << '\n';
    if (!out) throw Error{"write failed for '" + path.string() + "'"};
}

} // namespace ottosim

// Command-line front end. Kept in a header so the tests can drive run()
// directly; main.cpp only forwards argv.
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbmcond/fbmcond.hpp"

namespace fbmcond::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Bad flag value; the message already names the flag.
class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flags that take numbers (and therefore grids), in sweep order: the first
// flag varies slowest.
inline const std::vector<std::string>& numeric_flags()
{
    static const std::vector<std::string> f = {"hurst", "lambda", "mu",     "sigma",   "delta",     "s",     "t",
                                               "T",     "z0",     "strike", "rate",    "step-m",    "range-a",
                                               "max-terms", "tol", "terms-L", "width-mult", "dt",    "paths",
                                               "seed",  "repeats", "points", "workers"};
    return f;
}

inline bool is_integer_flag(const std::string& f)
{
    return f == "max-terms" || f == "terms-L" || f == "paths" || f == "seed" || f == "repeats" || f == "points" ||
           f == "workers";
}

inline const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c = {"variance", "mean", "pdf", "price", "mc-validate"};
    return c;
}

/// Resolved defaults for one subcommand.
inline std::map<std::string, std::string> defaults_for(const std::string& cmd)
{
    std::map<std::string, std::string> d = {
        {"model", "fou"},   {"hurst", "0.75"},   {"lambda", "0.5"},  {"mu", "0"},          {"sigma", "0.3"},
        {"delta", "0.8"},   {"s", "0"},          {"t", "5"},         {"T", "3"},           {"z0", "10"},
        {"strike", "10"},   {"rate", "0.1"},     {"side", "call"},   {"step-m", "0.5"},    {"range-a", "5"},
        {"max-terms", "20"}, {"tol", "1e-8"},    {"terms-L", "16"},  {"width-mult", "10"}, {"dt", "0.01"},
        {"paths", "10000"}, {"seed", "1"},       {"scheme", "cholesky"}, {"repeats", "10"}, {"points", "401"},
        {"workers", "0"},   {"format", "csv"},   {"path", ""}};
    if (cmd == "mean") {
        d["s"] = "3";
        d["t"] = "6";
    } else if (cmd == "pdf") {
        d["model"] = "gfou";
        d["t"] = "3";
    } else if (cmd == "price") {
        d["model"] = "gfou";
        d["t"] = "0";
    }
    return d;
}

// ---- grids -----------------------------------------------------------------

namespace detail {

inline double parse_number(const std::string& flag, const std::string& text)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v))
        throw usage_error("--" + flag + ": expected a number or lo:hi:step, got '" + text + "'");
    return v;
}

// Grid points are rounded to 12 significant digits so 0.1:0.9:0.1 yields 0.3, not 0.30000000000000004.
inline double tidy(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::stod(buf);
}

}  // namespace detail

/// "x" or "lo:hi:step" (inclusive of hi up to rounding).
inline std::vector<double> parse_grid(const std::string& flag, const std::string& text)
{
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) return {detail::parse_number(flag, text)};
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos)
        throw usage_error("--" + flag + ": grid must be lo:hi:step, got '" + text + "'");
    const double lo = detail::parse_number(flag, text.substr(0, c1));
    const double hi = detail::parse_number(flag, text.substr(c1 + 1, c2 - c1 - 1));
    const double step = detail::parse_number(flag, text.substr(c2 + 1));
    if (!(step > 0.0)) throw usage_error("--" + flag + ": grid step must be > 0");
    if (hi < lo) throw usage_error("--" + flag + ": grid requires lo <= hi");
    const double count = std::floor((hi - lo) / step + 1e-9);
    if (count > 1e6) throw usage_error("--" + flag + ": grid has more than 1e6 points");
    std::vector<double> out;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(count); ++i)
        out.push_back(detail::tidy(lo + step * static_cast<double>(i)));
    return out;
}

// ---- output tables ---------------------------------------------------------

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::string> warnings;
};

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string cell_text(const Cell& c)
{
    if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
    if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    return "";
}

inline nlohmann::json cell_json(const Cell& c)
{
    if (std::holds_alternative<double>(c)) {
        const double v = std::get<double>(c);
        return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    }
    if (std::holds_alternative<long long>(c)) return std::get<long long>(c);
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    return nullptr;
}

// ---- one grid point ----------------------------------------------------------

struct Point {
    std::map<std::string, double> v;

    double operator[](const std::string& k) const { return v.at(k); }
    std::size_t count(const std::string& k) const { return static_cast<std::size_t>(v.at(k)); }
};

struct Built {
    FouParams fou;
    ProcessMap map;
    double x0;
};

inline Built build_model(const std::string& model, const Point& p)
{
    const double H = p["hurst"];
    if (model == "fbm") return {FouParams::fbm(H), make_map(MapKind::identity), 0.0};
    if (model == "fou") return {FouParams(p["lambda"], p["mu"], p["sigma"], H), make_map(MapKind::identity), p["z0"]};
    const MapKind kind = model == "gfou" ? MapKind::gfou : model == "fcir" ? MapKind::fcir : MapKind::polynomial;
    const auto d = make_derived_model(kind, H, p["lambda"], p["sigma"], p["z0"], p["delta"], p["mu"]);
    return {d.fou, d.map, d.x0};
}

inline QuadratureConfig quad_config(const Point& p)
{
    QuadratureConfig q;
    q.step_m = p["step-m"];
    q.range_a = p["range-a"];
    q.max_terms = p.count("max-terms");
    q.series_tol = p["tol"];
    return q;
}

inline McConfig mc_config(const Point& p, const std::string& scheme)
{
    McConfig c;
    c.dt = p["dt"];
    c.n_paths = p.count("paths");
    c.seed = static_cast<std::uint64_t>(p["seed"]);
    c.scheme = scheme == "spectral" ? FbmScheme::spectral : FbmScheme::cholesky;
    c.workers = p.count("workers");
    return c;
}

/// Rejects out-of-range values with a message naming the flag.
inline void validate_point(const std::string& cmd, const std::string& model, const Point& p)
{
    auto need = [](bool ok, const char* flag, const char* what) {
        if (!ok) throw usage_error(std::string("--") + flag + ": " + what);
    };
    need(p["hurst"] > 0.0 && p["hurst"] < 1.0, "hurst", "must lie in (0, 1)");
    need(p["lambda"] >= 0.0, "lambda", "must be >= 0");
    need(p["sigma"] > 0.0, "sigma", "must be > 0");
    need(p["delta"] >= 0.0 && p["delta"] <= 1.0, "delta", "must lie in [0, 1]");
    need(p["s"] >= 0.0, "s", "must be >= 0");
    need(p["step-m"] > 0.0, "step-m", "must be > 0");
    need(p["range-a"] > 0.0, "range-a", "must be > 0");
    need(p["max-terms"] >= 1.0, "max-terms", "must be >= 1");
    need(p["tol"] > 0.0, "tol", "must be > 0");
    need(p["terms-L"] >= 1.0, "terms-L", "must be >= 1");
    need(p["width-mult"] > 0.0, "width-mult", "must be > 0");
    need(p["strike"] > 0.0, "strike", "must be > 0");
    need(p["dt"] > 0.0, "dt", "must be > 0");
    need(p["paths"] >= 1.0, "paths", "must be >= 1");
    need(p["repeats"] >= 1.0, "repeats", "must be >= 1");
    need(p["points"] >= 2.0, "points", "must be >= 2");
    if (cmd == "price") {
        need(p["t"] >= 0.0, "t", "valuation time must be >= 0");
        need(p["T"] > p["t"], "T", "maturity must exceed --t");
    } else {
        need(p["t"] >= p["s"], "t", "must be >= --s");
    }
    if (model == "gfou") need(p["z0"] > 0.0, "z0", "gfou requires z0 > 0");
    if (model == "fcir") need(p["z0"] >= 0.0, "z0", "fcir requires z0 >= 0");
    if (model == "poly") need(p["z0"] >= 0.0, "z0", "poly requires z0 >= 0");
}

// ---- observed path on [0, s] ---------------------------------------------------

/// Two-column CSV (time, B^H value); '#' lines and a non-numeric header are skipped.
inline FbmGrid read_path_file(const std::string& file)
{
    std::ifstream in(file);
    if (!in) throw usage_error("--path: cannot open '" + file + "'");
    std::vector<double> times, values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',')) continue;
        try {
            times.push_back(std::stod(a));
            values.push_back(std::stod(b));
        } catch (const std::exception&) {
            if (!times.empty()) throw usage_error("--path: bad row '" + line + "'");
        }
    }
    try {
        return FbmGrid(std::move(times), std::move(values));
    } catch (const domain_error& e) {
        throw usage_error(std::string("--path: ") + e.what());
    }
}

/// The conditioning history: the trivial path at s = 0, a file, or a seeded draw.
inline FbmGrid history_for(const Point& p, double s, const std::string& path_file)
{
    if (s == 0.0) return FbmGrid::origin();
    if (!path_file.empty()) {
        FbmGrid g = read_path_file(path_file);
        if (std::abs(g.end_time() - s) > 1e-9 * std::max(1.0, s))
            throw usage_error("--path: file ends at " + format_double(g.end_time()) + ", expected --s " +
                              format_double(s));
        return g;
    }
    // Only the leading block of the factorization is used, so t = s + dt suffices.
    const ConditionalResimulator sim(p["hurst"], p["dt"], s, s + p["dt"]);
    return sim.draw_history(static_cast<std::uint64_t>(p["seed"]));
}

// ---- subcommands -----------------------------------------------------------------

struct Context {
    std::string model;
    std::string side;
    std::string scheme;
    std::string path_file;
};

inline void cmd_variance(const Context& ctx, const Point& p, Table& out)
{
    const Built b = build_model(ctx.model, p);
    const auto r = conditional_variance_detail(b.fou, TimeWindow(p["s"], p["t"]), quad_config(p));
    if (r.series_warning)
        out.warnings.push_back("series: expansion exhausted above tolerance at hurst=" + format_double(p["hurst"]) +
                               " t=" + format_double(p["t"]));
    out.rows.push_back({p["hurst"], p["s"], p["t"], r.variance, r.stddev(), static_cast<long long>(r.nodes),
                        static_cast<long long>(r.max_terms_used), static_cast<long long>(r.series_warning)});
}

inline void cmd_mean(const Context& ctx, const Point& p, Table& out)
{
    const Built b = build_model(ctx.model, p);
    const FbmGrid hist = history_for(p, p["s"], ctx.path_file);
    const TimeWindow w(p["s"], p["t"]);
    const auto q = quad_config(p);
    const double x_s = reconstruct_state(b.fou, hist, b.x0);
    const double mean = conditional_mean_from_state(b.fou, w, hist, x_s, q);
    const double var = conditional_variance(b.fou, w, q);
    out.rows.push_back({p["hurst"], p["s"], p["t"], x_s, mean, var, std::sqrt(var)});
}

inline void cmd_pdf(const Context& ctx, const Point& p, Table& out)
{
    const Built b = build_model(ctx.model, p);
    const FbmGrid hist = history_for(p, p["s"], ctx.path_file);
    const auto law = conditional_law(b.fou, TimeWindow(p["s"], p["t"]), hist, b.x0, quad_config(p));
    if (auto w = mask_warning(b.map, law)) out.warnings.push_back(*w);
    const double sd = law.stddev();
    double lo = law.mean - 4.0 * sd;
    const double hi = law.mean + 4.0 * sd;
    const bool clamped = lo <= b.map.domain_lo();
    if (clamped) lo = b.map.domain_lo();
    const std::size_t n = p.count("points");
    // At a clamped edge g' vanishes and the density is unbounded; that node is dropped.
    for (std::size_t i = clamped ? 1 : 0; i < n; ++i) {
        const double x = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        const double z = b.map.forward(x);
        out.rows.push_back({p["hurst"], p["s"], p["t"], x, z, pdf_transform(b.map, law, z)});
    }
}

inline void cmd_price(const Context& ctx, const Point& p, Table& out)
{
    const Built b = build_model(ctx.model, p);
    const double t = p["t"], T = p["T"];
    const FbmGrid hist = history_for(p, t, ctx.path_file);
    const auto law = conditional_law(b.fou, TimeWindow(t, T), hist, b.x0, quad_config(p));
    CosConfig cfg;
    cfg.n_terms = p.count("terms-L");
    cfg.width_multiplier = p["width-mult"];
    const OptionSide side = ctx.side == "put" ? OptionSide::put : OptionSide::call;
    const OptionSpec spec(p["strike"], p["rate"], t, T, side);
    const double cos = cos_price(spec, b.map, law, cfg);
    if (b.map.kind() != MapKind::gfou) {
        out.rows.push_back({p["hurst"], p["strike"], ctx.side, std::string("cos"), cos, {}, {}, {}});
        return;
    }
    const double closed = gfou_closed_form(spec, law);
    const double abs_err = std::abs(cos - closed);
    // C - P = e^{-r(T-t)} (E[Z_T] - K), with E[Z_T] = exp(mu + var / 2)
    const OptionSpec other(spec.strike, spec.rate, t, T, side == OptionSide::call ? OptionSide::put : OptionSide::call);
    const double forward = std::exp(law.mean + 0.5 * law.variance);
    const double gap = spec.eta() * (cos - cos_price(other, b.map, law, cfg)) - spec.discount() * (forward - spec.strike);
    out.rows.push_back({p["hurst"], p["strike"], ctx.side, std::string("cos"), cos, abs_err, abs_err / closed, gap});
    out.rows.push_back({p["hurst"], p["strike"], ctx.side, std::string("closed"), closed, {}, {}, {}});
}

inline void cmd_mc_validate(const Context& ctx, const Point& p, Table& out)
{
    const Built b = build_model(ctx.model, p);
    const bool is_fbm = ctx.model == "fbm";
    const double s = p["s"], t = p["t"];
    if (!(t > s)) throw usage_error("--t: mc-validate requires t > s");
    const TimeWindow w(s, t);
    const auto q = quad_config(p);
    const double analytic_sd = std::sqrt(conditional_variance(b.fou, w, q));
    McConfig cfg = mc_config(p, ctx.scheme);
    const std::size_t repeats = p.count("repeats");
    // keep only the grid points the statistics read
    const auto s_steps = static_cast<std::size_t>(std::llround(s / cfg.dt));
    const auto t_steps = static_cast<std::size_t>(std::llround(t / cfg.dt));
    cfg.record_stride = std::max<std::size_t>(1, std::gcd(s_steps, t_steps));

    std::optional<ConditionalResimulator> sim;
    std::optional<FbmGrid> hist;
    if (s > 0.0) {
        sim.emplace(p["hurst"], cfg.dt, s, t);
        hist = sim->draw_history(cfg.seed);
    }
    double sd_sum = 0.0, sd_rel = 0.0, sd_se2 = 0.0;
    double mean_sum = 0.0, mean_se2 = 0.0, mean_analytic = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
        McConfig c = cfg;
        c.seed = cfg.seed + r;
        PathBundle bundle = [&] {
            if (sim) return is_fbm ? sim->continue_fbm(*hist, c) : sim->continue_fou(b.fou, b.x0, *hist, c);
            return is_fbm ? gen_fbm_paths(p["hurst"], t, c) : gen_fou_paths(b.fou, t, c, b.x0);
        }();
        for (const auto& wmsg : bundle.warnings) out.warnings.push_back(wmsg);
        const EmpiricalStats st = empirical_conditional_stats(bundle, s, t);
        sd_sum += st.stddev;
        sd_rel += std::abs(st.stddev - analytic_sd) / analytic_sd;
        sd_se2 += st.se_stddev * st.se_stddev;
        mean_sum += st.mean;
        mean_se2 += st.se_mean * st.se_mean;
        if (r == 0 && sim) {
            // the Euler state at s is shared by every continuation
            const double x_s = bundle.at(0, bundle.time_index(s));
            mean_analytic = conditional_mean_from_state(b.fou, w, *hist, x_s, q);
        }
    }
    const double R = static_cast<double>(repeats);
    out.rows.push_back({p["hurst"], s, t, std::string("std"), analytic_sd, sd_sum / R, std::sqrt(sd_se2) / R,
                        100.0 * sd_rel / R});
    if (sim) {
        const double emp = mean_sum / R;
        out.rows.push_back({p["hurst"], s, t, std::string("mean"), mean_analytic, emp, std::sqrt(mean_se2) / R,
                            100.0 * std::abs(emp - mean_analytic) / std::abs(mean_analytic)});
    }
}

inline std::vector<std::string> columns_for(const std::string& cmd)
{
    if (cmd == "variance") return {"hurst", "s", "t", "variance", "std", "nodes", "terms", "warning"};
    if (cmd == "mean") return {"hurst", "s", "t", "x_s", "mean", "variance", "std"};
    if (cmd == "pdf") return {"hurst", "s", "t", "x", "z", "pdf"};
    if (cmd == "price") return {"hurst", "strike", "side", "method", "price", "abs_err", "rel_err", "parity_gap"};
    return {"hurst", "s", "t", "quantity", "analytic", "empirical", "se", "rel_error_pct"};
}

// ---- driver ----------------------------------------------------------------------

struct Request {
    std::string command;
    std::map<std::string, std::string> flags;  ///< every flag, defaults resolved
    std::string out_path;
};

inline Table execute(const Request& req)
{
    const auto& f = req.flags;
    const Context ctx{f.at("model"), f.at("side"), f.at("scheme"), f.at("path")};
    if (ctx.model == "fbm") {
        for (const char* k : {"lambda", "mu", "sigma"})
            if (f.at(k) != defaults_for(req.command).at(k))
                throw usage_error(std::string("--") + k + ": does not apply to --model fbm");
    }

    std::vector<std::vector<double>> values;
    for (const auto& name : numeric_flags()) {
        values.push_back(parse_grid(name, f.at(name)));
        if (is_integer_flag(name))
            for (double v : values.back())
                if (v < 0.0 || v != std::floor(v)) throw usage_error("--" + name + ": must be a non-negative integer");
    }

    Table table;
    table.columns = columns_for(req.command);
    // swept flags that the command does not already report become leading columns
    std::vector<std::string> extra;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& name = numeric_flags()[i];
        if (values[i].size() > 1 && std::find(table.columns.begin(), table.columns.end(), name) == table.columns.end())
            extra.push_back(name);
    }
    table.columns.insert(table.columns.begin(), extra.begin(), extra.end());

    std::vector<std::size_t> idx(values.size(), 0);
    while (true) {
        Point p;
        for (std::size_t i = 0; i < values.size(); ++i) p.v[numeric_flags()[i]] = values[i][idx[i]];
        validate_point(req.command, ctx.model, p);
        const std::size_t before = table.rows.size();
        if (req.command == "variance") cmd_variance(ctx, p, table);
        else if (req.command == "mean") cmd_mean(ctx, p, table);
        else if (req.command == "pdf") cmd_pdf(ctx, p, table);
        else if (req.command == "price") cmd_price(ctx, p, table);
        else cmd_mc_validate(ctx, p, table);
        for (std::size_t r = before; r < table.rows.size(); ++r) {
            std::vector<Cell> lead;
            for (const auto& name : extra) lead.emplace_back(p[name]);
            table.rows[r].insert(table.rows[r].begin(), lead.begin(), lead.end());
        }
        // odometer: last flag fastest
        std::size_t k = values.size();
        while (k > 0 && ++idx[k - 1] == values[k - 1].size()) idx[--k] = 0;
        if (k == 0) break;
    }
    return table;
}

inline nlohmann::json meta_json(const Request& req, const Table& table)
{
    nlohmann::json meta;
    meta["command"] = req.command;
    meta["flags"] = req.flags;
    meta["warnings"] = table.warnings;
    return meta;
}

inline void write_table(std::ostream& os, const Request& req, const Table& table)
{
    if (req.flags.at("format") == "json") {
        nlohmann::json doc;
        doc["meta"] = meta_json(req, table);
        doc["rows"] = nlohmann::json::array();
        for (const auto& row : table.rows) {
            nlohmann::json r = nlohmann::json::object();
            for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = cell_json(row[i]);
            doc["rows"].push_back(std::move(r));
        }
        os << doc.dump(2) << '\n';
        return;
    }
    os << "# command=" << req.command << '\n';
    for (const auto& [k, v] : req.flags) os << "# " << k << '=' << v << '\n';
    for (const auto& w : table.warnings) os << "# warning=" << w << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
}

/// Reads the command and flags back from a previous run's output (JSON or CSV).
inline Request read_replay(const std::string& file)
{
    std::ifstream in(file);
    if (!in) throw usage_error("--replay: cannot open '" + file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    Request req;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            const auto doc = nlohmann::json::parse(text);
            req.command = doc.at("meta").at("command").get<std::string>();
            req.flags = doc.at("meta").at("flags").get<std::map<std::string, std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw usage_error(std::string("--replay: ") + e.what());
        }
    } else {
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line) && line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2), value = line.substr(eq + 1);
            if (key == "command") req.command = value;
            else if (key != "warning") req.flags[key] = value;
        }
    }
    if (std::find(commands().begin(), commands().end(), req.command) == commands().end())
        throw usage_error("--replay: no recognizable command in '" + file + "'");
    auto full = defaults_for(req.command);
    for (const auto& [k, v] : req.flags) {
        if (!full.count(k)) throw usage_error("--replay: unknown flag '" + k + "'");
        full[k] = v;
    }
    req.flags = std::move(full);
    return req;
}

/// Parses `args` (without the program name), runs, and writes to `out` or --out.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Conditional laws of fBm and fOU, derived processes and COS option prices", "fbmcond"};
    app.require_subcommand(0, 1);
    std::string replay_file, top_out;
    app.add_option("--replay", replay_file, "Re-run the command recorded in a previous output file");
    app.add_option("--out", top_out, "Output path for --replay (default stdout)");

    std::map<std::string, std::map<std::string, std::string>> store;
    std::map<std::string, CLI::App*> subs;
    std::map<std::string, std::string> out_paths;
    const std::map<std::string, std::string> help = {
        {"variance", "Conditional variance of X_t given F_s"},
        {"mean", "Conditional mean given an observed or seeded path on [0, s]"},
        {"pdf", "Density of the derived process on mu +- 4 sd of the underlying law"},
        {"price", "European option value by the COS method (and closed form for gfou)"},
        {"mc-validate", "Analytic moments against the Monte Carlo oracle"}};
    for (const auto& cmd : commands()) {
        auto& vals = store[cmd] = defaults_for(cmd);
        CLI::App* sub = app.add_subcommand(cmd, help.at(cmd));
        subs[cmd] = sub;
        sub->add_option("--model", vals["model"], "Process")
            ->check(CLI::IsMember({"fbm", "fou", "gfou", "fcir", "poly"}))
            ->capture_default_str();
        sub->add_option("--side", vals["side"], "Option side")->check(CLI::IsMember({"call", "put"}))->capture_default_str();
        sub->add_option("--scheme", vals["scheme"], "fBm sampler")
            ->check(CLI::IsMember({"cholesky", "spectral"}))
            ->capture_default_str();
        sub->add_option("--format", vals["format"], "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        sub->add_option("--path", vals["path"], "CSV of (time, fBm value) on [0, s]");
        sub->add_option("--out", out_paths[cmd], "Output path (default stdout)");
        for (const auto& name : numeric_flags()) sub->add_option("--" + name, vals[name], "number or lo:hi:step")->capture_default_str();
    }

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        Request req;
        if (!replay_file.empty()) {
            if (!app.get_subcommands().empty()) throw usage_error("--replay: cannot be combined with a subcommand");
            req = read_replay(replay_file);
            req.out_path = top_out;
        } else {
            if (app.get_subcommands().empty()) throw usage_error("a subcommand is required: " + app.help());
            req.command = app.get_subcommands().front()->get_name();
            req.flags = store.at(req.command);
            req.out_path = out_paths.at(req.command);
        }
        const Table table = execute(req);
        if (req.out_path.empty()) {
            write_table(out, req, table);
        } else {
            std::ofstream file(req.out_path);
            if (!file) throw usage_error("--out: cannot open '" + req.out_path + "'");
            write_table(file, req, table);
        }
        for (const auto& w : table.warnings) err << "warning: " << w << '\n';
        return kExitOk;
    } catch (const usage_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fbmcond::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const convergence_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const fbmcond::overflow_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace fbmcond::cli

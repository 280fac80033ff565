#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli_app.hpp"

using namespace fbmcond;
using fbmcond::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

/// CSV body rows (comment lines dropped), split on commas.
std::vector<std::vector<std::string>> csv_rows(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name)
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    ADD_FAILURE() << "missing column " << name;
    return 0;
}

std::string temp_file(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("fbmcond_cli_" + name)).string();
}

}  // namespace

TEST(Grid, SingleValuesAndRanges)
{
    EXPECT_EQ(cli::parse_grid("hurst", "0.25"), std::vector<double>{0.25});
    const auto g = cli::parse_grid("hurst", "0.1:0.9:0.1");
    ASSERT_EQ(g.size(), 9u);
    EXPECT_EQ(g[2], 0.3);
    EXPECT_EQ(g.back(), 0.9);
    EXPECT_EQ(cli::parse_grid("t", "1:2:0.5").size(), 3u);
    EXPECT_EQ(cli::parse_grid("t", "1:1:0.5").size(), 1u);
}

TEST(Grid, Rejections)
{
    EXPECT_THROW(cli::parse_grid("hurst", "abc"), cli::usage_error);
    EXPECT_THROW(cli::parse_grid("hurst", "0.5x"), cli::usage_error);
    EXPECT_THROW(cli::parse_grid("hurst", "0.1:0.9"), cli::usage_error);
    EXPECT_THROW(cli::parse_grid("hurst", "0.1:0.9:0"), cli::usage_error);
    EXPECT_THROW(cli::parse_grid("hurst", "0.9:0.1:0.1"), cli::usage_error);
    EXPECT_THROW(cli::parse_grid("hurst", "1:2:3:4"), cli::usage_error);
}

TEST(Variance, FouBrownianCase)
{
    const auto r = call({"variance", "--model", "fou", "--sigma", "0.3", "--lambda", "0.5", "--hurst", "0.5", "--s", "0",
                         "--t", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NEAR(std::stod(rows[1][column(rows[0], "std")]), 0.2990, 1e-4);
}

TEST(Variance, FbmBrownianCase)
{
    const auto r = call({"variance", "--model", "fbm", "--hurst", "0.5", "--s", "0", "--t", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    EXPECT_NEAR(std::stod(rows[1][column(rows[0], "std")]), 2.2361, 1e-4);
}

TEST(Variance, HurstGridGivesOneRowPerPoint)
{
    const auto r = call({"variance", "--model", "fbm", "--hurst", "0.1:0.9:0.1", "--t", "4:5:1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 1u + 18u);
    const auto& h = rows[0];
    // t varies fastest
    EXPECT_EQ(rows[1][column(h, "t")], "4");
    EXPECT_EQ(rows[2][column(h, "t")], "5");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double H = std::stod(rows[i][column(h, "hurst")]);
        const double t = std::stod(rows[i][column(h, "t")]);
        EXPECT_NEAR(std::stod(rows[i][column(h, "std")]) / std::pow(t, H), 1.0, 1e-4);
    }
}

TEST(Variance, SeventeenSignificantDigitsRoundTrip)
{
    const auto r = call({"variance", "--hurst", "0.7"});
    ASSERT_EQ(r.code, 0);
    const auto rows = csv_rows(r.out);
    const double printed = std::stod(rows[1][column(rows[0], "variance")]);
    const double direct = conditional_variance(FouParams(0.5, 0.0, 0.3, 0.7), TimeWindow(0.0, 5.0));
    EXPECT_EQ(printed, direct);
}

TEST(Variance, SweptFlagsBecomeColumns)
{
    const auto r = call({"variance", "--hurst", "0.7", "--lambda", "0.5:1.5:0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    EXPECT_EQ(rows[0][0], "lambda");
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[3][0], "1.5");
}

TEST(Validation, ExitTwoNamingTheFlag)
{
    struct Case {
        std::vector<std::string> args;
        std::string flag;
    };
    const Case cases[] = {
        {{"variance", "--s", "3", "--t", "2"}, "--t"},
        {{"variance", "--hurst", "1.2"}, "--hurst"},
        {{"variance", "--hurst", "abc"}, "--hurst"},
        {{"variance", "--sigma", "0"}, "--sigma"},
        {{"variance", "--max-terms", "2.5"}, "--max-terms"},
        {{"variance", "--model", "fbm", "--lambda", "1"}, "--lambda"},
        {{"price", "--t", "3", "--T", "3"}, "--T"},
        {{"price", "--strike", "-1"}, "--strike"},
        {{"mc-validate", "--paths", "0"}, "--paths"},
        {{"pdf", "--model", "gfou", "--z0", "0"}, "--z0"},
    };
    for (const auto& c : cases) {
        const auto r = call(c.args);
        EXPECT_EQ(r.code, cli::kExitUsage) << c.args.back();
        EXPECT_NE(r.err.find(c.flag), std::string::npos) << r.err;
        EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
    }
}

TEST(Validation, ParserErrors)
{
    EXPECT_EQ(call({}).code, cli::kExitUsage);
    EXPECT_EQ(call({"bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(call({"variance", "--nope", "1"}).code, cli::kExitUsage);
    EXPECT_EQ(call({"variance", "--model", "heston"}).code, cli::kExitUsage);
    EXPECT_EQ(call({"price", "--side", "straddle"}).code, cli::kExitUsage);
    EXPECT_EQ(call({"variance", "--format", "xml"}).code, cli::kExitUsage);
    EXPECT_EQ(call({"--help"}).code, 0);
}

TEST(ExitCodes, HardNonConvergenceIsThree)
{
    const auto r = call({"variance", "--hurst", "0.7", "--max-terms", "5", "--tol", "1e-12"});
    EXPECT_EQ(r.code, cli::kExitNumeric);
    EXPECT_NE(r.err.find("exhausted"), std::string::npos);
}

TEST(ExitCodes, SoftWarningKeepsZero)
{
    const auto r = call({"variance", "--hurst", "0.7", "--max-terms", "10", "--tol", "1e-12", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    ASSERT_EQ(doc["meta"]["warnings"].size(), 1u);
    EXPECT_EQ(doc["rows"][0]["warning"], 1);
    EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST(Json, MetaEchoesEveryDefault)
{
    const auto r = call({"variance", "--format", "json"});
    ASSERT_EQ(r.code, 0);
    const auto doc = nlohmann::json::parse(r.out);
    const auto& f = doc["meta"]["flags"];
    EXPECT_EQ(doc["meta"]["command"], "variance");
    EXPECT_EQ(f["step-m"], "0.5");
    EXPECT_EQ(f["range-a"], "5");
    EXPECT_EQ(f["max-terms"], "20");
    EXPECT_EQ(f["terms-L"], "16");
    EXPECT_EQ(f["dt"], "0.01");
    EXPECT_EQ(f["paths"], "10000");
    EXPECT_EQ(f["seed"], "1");
    EXPECT_EQ(f.size(), cli::defaults_for("variance").size());
    ASSERT_EQ(doc["rows"].size(), 1u);
    EXPECT_TRUE(doc["rows"][0].contains("std"));
}

TEST(Replay, JsonAndCsvReproduceBitwise)
{
    for (const std::string fmt : {"json", "csv"}) {
        const std::string first = temp_file("first." + fmt), second = temp_file("second." + fmt);
        const auto a = call({"mean", "--hurst", "0.3:0.7:0.4", "--seed", "7", "--format", fmt, "--out", first});
        ASSERT_EQ(a.code, 0) << a.err;
        const auto b = call({"--replay", first, "--out", second});
        ASSERT_EQ(b.code, 0) << b.err;
        std::ifstream fa(first), fb(second);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        EXPECT_FALSE(sa.str().empty());
        EXPECT_EQ(sa.str(), sb.str()) << fmt;
        // to stdout as well
        EXPECT_EQ(call({"--replay", first}).out, sa.str());
    }
    EXPECT_EQ(call({"--replay", temp_file("missing.json")}).code, cli::kExitUsage);
    EXPECT_EQ(call({"--replay", temp_file("first.json"), "variance"}).code, cli::kExitUsage);
}

TEST(Mean, SeededHistoryMatchesLibrary)
{
    const auto r = call({"mean", "--hurst", "0.3", "--s", "2", "--t", "4", "--dt", "0.05", "--seed", "11"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    const FouParams p(0.5, 0.0, 0.3, 0.3);
    const FbmGrid hist = ConditionalResimulator(0.3, 0.05, 2.0, 2.05).draw_history(11);
    const double expected = conditional_mean(p, TimeWindow(2.0, 4.0), hist, 10.0);
    EXPECT_EQ(std::stod(rows[1][column(rows[0], "mean")]), expected);
}

TEST(Mean, PathFile)
{
    const std::string file = temp_file("path.csv");
    {
        std::ofstream os(file);
        os << "# observed\ntime,value\n0,0\n0.5,0.2\n1,-0.1\n1.5,0.4\n";
    }
    const auto r = call({"mean", "--model", "fbm", "--hurst", "0.7", "--s", "1.5", "--t", "2", "--path", file});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    const FbmGrid hist({0.0, 0.5, 1.0, 1.5}, {0.0, 0.2, -0.1, 0.4});
    const double expected = conditional_mean(FouParams::fbm(0.7), TimeWindow(1.5, 2.0), hist, 0.0);
    EXPECT_EQ(std::stod(rows[1][column(rows[0], "mean")]), expected);
    EXPECT_DOUBLE_EQ(std::stod(rows[1][column(rows[0], "x_s")]), 0.4);

    const auto wrong_end = call({"mean", "--model", "fbm", "--s", "2", "--t", "3", "--path", file});
    EXPECT_EQ(wrong_end.code, cli::kExitUsage);
    EXPECT_NE(wrong_end.err.find("--path"), std::string::npos);
}

TEST(Pdf, TrapezoidMassOnEmittedGrid)
{
    for (const std::string model : {"gfou", "fcir", "poly", "fou"}) {
        const auto r = call({"pdf", "--model", model, "--hurst", "0.75", "--sigma", "0.3", "--lambda", "0.5", "--z0", "10",
                             "--t", "3"});
        ASSERT_EQ(r.code, 0) << model << ": " << r.err;
        const auto rows = csv_rows(r.out);
        const auto zc = column(rows[0], "z"), fc = column(rows[0], "pdf");
        double mass = 0.0;
        for (std::size_t i = 2; i < rows.size(); ++i) {
            const double z0 = std::stod(rows[i - 1][zc]), z1 = std::stod(rows[i][zc]);
            mass += 0.5 * (std::stod(rows[i - 1][fc]) + std::stod(rows[i][fc])) * (z1 - z0);
        }
        EXPECT_NEAR(mass, 1.0, 1e-4) << model;
    }
}

TEST(Pdf, IdentityMapIsNormalCurve)
{
    const auto r = call({"pdf", "--model", "fou", "--hurst", "0.6", "--points", "41"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 42u);
    const auto law = conditional_law(FouParams(0.5, 0.0, 0.3, 0.6), TimeWindow(0.0, 3.0), FbmGrid::origin(), 10.0);
    const auto h = rows[0];
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double z = std::stod(rows[i][column(h, "z")]);
        EXPECT_EQ(z, std::stod(rows[i][column(h, "x")]));
        EXPECT_NEAR(std::stod(rows[i][column(h, "pdf")]), norm_pdf((z - law.mean) / law.stddev()) / law.stddev(), 1e-14);
    }
    EXPECT_NEAR(std::stod(rows[1][column(h, "z")]), law.mean - 4.0 * law.stddev(), 1e-12);
}

TEST(Pdf, MaskWarningForFoldedMap)
{
    // mean near zero: the fCIR law has mass below x = 0
    const auto r = call({"pdf", "--model", "fcir", "--z0", "0.01", "--t", "3", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    ASSERT_FALSE(doc["meta"]["warnings"].empty());
    EXPECT_EQ(doc["meta"]["warnings"][0].get<std::string>().rfind("masked", 0), 0u);
    for (const auto& row : doc["rows"]) EXPECT_GT(row["x"].get<double>(), 0.0);
}

TEST(Price, GfouRowsCarryClosedFormAndErrors)
{
    const auto r = call({"price", "--hurst", "0.1:0.9:0.4", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    ASSERT_EQ(doc["rows"].size(), 6u);
    for (std::size_t i = 0; i < 6; i += 2) {
        const auto& cos = doc["rows"][i];
        const auto& closed = doc["rows"][i + 1];
        EXPECT_EQ(cos["method"], "cos");
        EXPECT_EQ(closed["method"], "closed");
        const double abs_err = std::abs(cos["price"].get<double>() - closed["price"].get<double>());
        EXPECT_EQ(cos["abs_err"].get<double>(), abs_err);
        EXPECT_DOUBLE_EQ(cos["rel_err"].get<double>(), abs_err / closed["price"].get<double>());
        EXPECT_TRUE(closed["abs_err"].is_null());
    }
}

TEST(Price, ParityColumnAtManyTerms)
{
    for (const std::string side : {"call", "put"}) {
        const auto r = call({"price", "--terms-L", "64", "--side", side, "--strike", "8:12:2", "--format", "json"});
        ASSERT_EQ(r.code, 0) << r.err;
        for (const auto& row : nlohmann::json::parse(r.out)["rows"])
            if (row["method"] == "cos") {
                EXPECT_LT(std::abs(row["parity_gap"].get<double>()), 1e-6) << side;
            }
    }
}

TEST(Price, SingleTermUsesConstantDensity)
{
    const auto r = call({"price", "--terms-L", "1", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    const auto model = make_derived_model(MapKind::gfou, 0.75, 0.5, 0.3, 10.0);
    const auto law = conditional_law(model.fou, TimeWindow(0.0, 3.0), FbmGrid::origin(), model.x0);
    CosConfig cfg;
    cfg.n_terms = 1;
    const OptionSpec spec(10.0, 0.1, 0.0, 3.0, OptionSide::call);
    // one term: the density is 1/(d - b), so the price is the discounted payoff average over [b, d]
    const auto iv = cos_interval(law, cfg);
    const double avg = (std::exp(iv.d) - 10.0 - 10.0 * (iv.d - std::log(10.0))) / (iv.d - iv.b);
    EXPECT_NEAR(doc["rows"][0]["price"].get<double>(), spec.discount() * avg, 1e-12);
    EXPECT_EQ(doc["rows"][0]["price"].get<double>(), cos_price(spec, model.map, law, cfg));
}

TEST(Price, OtherMapsHaveNoClosedForm)
{
    const auto r = call({"price", "--model", "poly", "--side", "put"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][column(rows[0], "method")], "cos");
    EXPECT_EQ(rows[1][column(rows[0], "abs_err")], "");
    EXPECT_GT(std::stod(rows[1][column(rows[0], "price")]), 0.0);
}

TEST(McValidate, FixedSeedIsBitwiseStable)
{
    const std::vector<std::string> args = {"mc-validate", "--model", "fou", "--hurst", "0.3", "--s", "1", "--t", "2",
                                           "--paths", "300", "--repeats", "2", "--dt", "0.05"};
    const auto a = call(args), b = call(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    auto more = args;
    more.insert(more.end(), {"--workers", "3"});
    EXPECT_EQ(call(more).out.substr(a.out.find("hurst,")), a.out.substr(a.out.find("hurst,")));
    auto other = args;
    other.insert(other.end(), {"--seed", "2"});
    EXPECT_NE(call(other).out, a.out);
}

TEST(McValidate, RowsAndGuards)
{
    const auto r = call({"mc-validate", "--model", "fbm", "--hurst", "0.7", "--paths", "2000", "--repeats", "2", "--t",
                         "1", "--dt", "0.02"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 2u);
    const auto& h = rows[0];
    EXPECT_EQ(rows[1][column(h, "quantity")], "std");
    EXPECT_NEAR(std::stod(rows[1][column(h, "analytic")]), 1.0, 1e-6);
    EXPECT_LT(std::stod(rows[1][column(h, "rel_error_pct")]), 5.0);

    const auto cond = call({"mc-validate", "--model", "fbm", "--hurst", "0.7", "--paths", "2000", "--repeats", "1",
                            "--s", "1", "--t", "2", "--dt", "0.05"});
    ASSERT_EQ(cond.code, 0) << cond.err;
    EXPECT_EQ(csv_rows(cond.out).size(), 3u);  // std and mean

    EXPECT_EQ(call({"mc-validate", "--paths", "50", "--repeats", "1", "--t", "1"}).code, cli::kExitUsage);
    EXPECT_EQ(call({"mc-validate", "--s", "1", "--t", "1"}).code, cli::kExitUsage);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "stem/experiments.hpp"
#include "stem/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "stem");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = stem::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stem_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

nlohmann::json small_config() {
    nlohmann::json peaks = nlohmann::json::array();
    for (int i = 1; i <= 3; ++i) {
        for (int j = 1; j <= 3; ++j) peaks.push_back({{"amplitude", 55}, {"center", {50 * i, 50 * j}}});
    }
    return {{"peaks", peaks}, {"noise", {{"sigma", 1}, {"nu", 0}, {"seed", 3}}}, {"kernel", {{"gamma", 3}}},
            {"replications", 6}, {"master_seed", 17}};
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"bogus"}).code == 2);
    CHECK(invoke({"curves"}).code == 2);
    CHECK(invoke({"theory", "--alpha", "abc"}).code == 2);
}

TEST_CASE("simulate then detect") {
    const fs::path dir = scratch("detect");
    const fs::path cfg = write_config(dir, small_config());
    const Run sim = invoke({"simulate", "--config", cfg.string(), "--output", (dir / "out").string(), "--seed", "8"});
    REQUIRE(sim.code == 0);
    for (const char* f : {"signal.fld", "noise.fld", "observed.fld", "smoothed.fld"}) CHECK(fs::exists(dir / "out" / f));

    const stem::GridField obs = stem::io::read_field_file(dir / "out" / "observed.fld");
    const stem::GridField sig = stem::io::read_field_file(dir / "out" / "signal.fld");
    const stem::GridField noise = stem::io::read_field_file(dir / "out" / "noise.fld");
    CHECK(obs.values.values() == (sig + noise).values.values());

    const Run det = invoke({"detect", (dir / "out" / "observed.fld").string(), "--scenario", cfg.string()});
    REQUIRE(det.code == 0);
    const auto rows = lines(det.out);
    REQUIRE(rows.size() >= 2);
    const auto summary = nlohmann::json::parse(rows.back())["summary"];
    CHECK(summary["candidates"].get<std::size_t>() == rows.size() - 1);
    const std::size_t k = summary["k"];
    CHECK(k >= 9);
    std::size_t significant = 0;
    std::size_t in_signal = 0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const auto rec = nlohmann::json::parse(rows[i]);
        if (rec["significant"].get<bool>()) {
            ++significant;
            if (rec["region"] == "signal") ++in_signal;
            CHECK(rec["height"].get<double>() >= summary["height_threshold"].get<double>());
        }
    }
    CHECK(significant == k);
    CHECK(in_signal >= 9);

    // same seed, same output
    CHECK(invoke({"detect", (dir / "out" / "observed.fld").string(), "--scenario", cfg.string()}).out == det.out);

    // without a scenario the regions are unknown
    const Run plain = invoke({"detect", (dir / "out" / "observed.fld").string(), "--v", "1"});
    REQUIRE(plain.code == 0);
    CHECK(nlohmann::json::parse(lines(plain.out).front())["region"] == "unknown");

    const Run est = invoke({"detect", (dir / "out" / "observed.fld").string(), "--moments", "estimate", "--mode",
                            "overshoot", "--v", "2"});
    CHECK(est.code == 0);
    fs::remove_all(dir);
}

TEST_CASE("detect failure modes") {
    const fs::path dir = scratch("detect_fail");
    CHECK(invoke({"detect", (dir / "missing.fld").string()}).code == 1);
    stem::GridField f(stem::GridGeometry{40, 40, 1.0, {}});
    stem::io::write_field_file(dir / "zero.fld", f);
    CHECK(invoke({"detect", (dir / "zero.fld").string(), "--mode", "overshoot"}).code == 2);
    CHECK(invoke({"detect", (dir / "zero.fld").string(), "--mode", "overshoot", "--v", "0"}).code == 2);
    CHECK(invoke({"detect", (dir / "zero.fld").string(), "--mode", "sideways"}).code == 2);
    CHECK(invoke({"detect", (dir / "zero.fld").string(), "--gamma", "30"}).code == 2);  // kernel wider than grid
    CHECK(invoke({"detect", (dir / "zero.fld").string(), "--output", (dir / "no/such/dir.jsonl").string()}).code == 1);
    fs::remove_all(dir);
}

TEST_CASE("detect accepts csv input") {
    const fs::path dir = scratch("csv");
    {
        std::ofstream out(dir / "grid.csv");
        for (int r = 0; r < 30; ++r) {
            for (int c = 0; c < 30; ++c) out << (r == 15 && c == 15 ? 40.0 : 0.0) << (c + 1 < 30 ? "," : "\n");
        }
    }
    const Run r = invoke({"detect", (dir / "grid.csv").string(), "--csv", "--spacing", "1", "--gamma", "2"});
    REQUIRE(r.code == 0);
    const auto first = nlohmann::json::parse(lines(r.out).front());
    CHECK(first["row"] == 15);
    CHECK(first["col"] == 15);
    CHECK(first["significant"] == true);
    fs::remove_all(dir);
}

TEST_CASE("detect can fit the bandwidth from a template") {
    const fs::path dir = scratch("fit");
    const stem::PeakSpec p{1.0, 2.5, 6.0, {20.0, 20.0}};
    stem::io::write_field_file(dir / "template.fld",
                               stem::render_signal(std::span<const stem::PeakSpec>(&p, 1), {40, 40, 1.0, {}}));
    stem::io::write_field_file(dir / "field.fld",
                               stem::generate_noise({1.0, 0.0, 1}, stem::GridGeometry{64, 64, 1.0, {}}));
    const Run r = invoke({"detect", (dir / "field.fld").string(), "--fit-gamma", (dir / "template.fld").string()});
    REQUIRE(r.code == 0);
    const auto summary = nlohmann::json::parse(lines(r.out).back())["summary"];
    CHECK(summary["gamma"].get<double>() == doctest::Approx(2.5).epsilon(1e-5));
    fs::remove_all(dir);
}

TEST_CASE("curves output matches the experiment runner") {
    const fs::path dir = scratch("curves");
    auto doc = small_config();
    doc["sweep"] = {{"axis", "gamma"}, {"grid", {2.0, 3.0}}};
    const fs::path cfg = write_config(dir, doc);
    const fs::path csv = dir / "curves.csv";
    const Run r = invoke({"curves", "--config", cfg.string(), "--output", csv.string(), "--replications", "3"});
    REQUIRE(r.code == 0);
    std::ifstream in(csv);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto rows = lines(buf.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == stem::io::kCurveHeader);

    stem::ExperimentConfig c = stem::io::load_experiment_config(cfg);
    c.replications = 3;
    const auto expected = stem::sweep_curves(c);
    std::ostringstream ref;
    stem::io::write_curves_csv(ref, expected);
    CHECK(ref.str() == buf.str());

    // the seed override changes the noise
    const Run other = invoke({"curves", "--config", cfg.string(), "--replications", "3", "--seed", "1"});
    REQUIRE(other.code == 0);
    CHECK(other.out != buf.str());

    doc.erase("sweep");
    CHECK(invoke({"curves", "--config", write_config(dir, doc).string()}).code == 2);
    CHECK(invoke({"curves", "--config", (dir / "missing.json").string()}).code == 1);
    doc.erase("peaks");
    CHECK(invoke({"curves", "--config", write_config(dir, doc).string()}).code == 2);
    fs::remove_all(dir);
}

TEST_CASE("theory table") {
    const Run r = invoke({"theory", "--gamma", "3", "--a2", "0.3", "--v-grid", "0.25:4:0.25"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 2 + 16);
    CHECK(rows[0] == "v_over_sigma,v,u_star,u_double_star,beta,fdr_bh_exact,fdr_bh_overshoot,is_v_opt");
    CHECK(split(rows[1])[0] == "-inf");
    double prev_u = std::stod(split(rows[1])[2]);
    int flagged = 0;
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const auto cells = split(rows[i]);
        REQUIRE(cells.size() == 8);
        const double beta = std::stod(cells[4]);
        CHECK(beta > 0.0);
        CHECK(beta < 1.0);
        const double u = std::stod(cells[2]);
        CHECK(u >= prev_u);
        prev_u = u;
        flagged += std::stoi(cells[7]);
    }
    CHECK(flagged == 1);

    CHECK(invoke({"theory", "--gamma", "0", "--nu", "0"}).code == 2);
    CHECK(invoke({"theory", "--v-grid", "1:0:0.5"}).code == 2);
    CHECK(invoke({"theory", "--v-grid", "0:2:0.5"}).code == 2);
}

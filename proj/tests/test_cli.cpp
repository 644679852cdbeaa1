#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef SYKQB_CLI_PATH
#error "SYKQB_CLI_PATH must point at the syk-battery binary"
#endif

namespace fs = std::filesystem;

namespace {

const std::string kCli = SYKQB_CLI_PATH;

int run(const std::string& args, const fs::path& stderr_file = {}) {
    std::string command = kCli + " " + args + " > /dev/null";
    if (!stderr_file.empty())
        command += " 2> " + stderr_file.string();
    else
        command += " 2> /dev/null";
    const int status = std::system(command.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("sykqb_cli_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("minimal charge run writes the default 321-row trace") {
    TempDir dir("charge");
    const int rc = run("charge --n 4 --realizations 2 --threads 2 --out " + dir.path.string());
    REQUIRE(rc == 0);
    const std::string text = slurp(dir.path / "charge_N4_regularized.csv");
    // comment + header + 321 grid rows
    CHECK(std::count(text.begin(), text.end(), '\n') == 2 + 321);
    CHECK(text.find("t,E,E_se,P,P_se,") != std::string::npos);
    CHECK(fs::exists(dir.path / "charge_regularized_summary.json"));
    CHECK(fs::exists(dir.path / "charge_regularized_manifest.json"));
}

TEST_CASE("fixed-seed reruns are byte-identical") {
    TempDir a("rerun_a");
    TempDir b("rerun_b");
    const std::string args =
        "otoc --n 4 --realizations 3 --seed 7 --grid-points 41 --horizon 6 --out ";
    REQUIRE(run(args + a.path.string() + " --threads 1") == 0);
    REQUIRE(run(args + b.path.string() + " --threads 2") == 0);
    for (const auto& entry : fs::directory_iterator(a.path)) {
        CAPTURE(entry.path().filename().string());
        REQUIRE(fs::exists(b.path / entry.path().filename()));
        CHECK(slurp(entry.path()) == slurp(b.path / entry.path().filename()));
    }
}

TEST_CASE("zero-charger debug produces an all-zero otoc") {
    TempDir dir("zero");
    const int rc = run("otoc --n 4 --realizations 2 --zero-charger --threads 2 --out " +
                       dir.path.string());
    REQUIRE(rc == 0);
    std::ifstream in(dir.path / "otoc_N4_raw.csv");
    std::string line;
    std::getline(in, line);  // comment
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        const auto first_comma = line.find(',');
        const auto second_comma = line.find(',', first_comma + 1);
        const double f = std::stod(line.substr(first_comma + 1, second_comma - first_comma - 1));
        CHECK(f == 0.0);
    }
}

TEST_CASE("report collates a results directory") {
    TempDir dir("report");
    REQUIRE(run("charge --n 4 --realizations 2 --grid-points 41 --horizon 6 --threads 2 --out " +
                dir.path.string()) == 0);
    REQUIRE(run("report --results " + dir.path.string()) == 0);
    CHECK(fs::exists(dir.path / "report.md"));
}

TEST_CASE("failures exit nonzero with a machine-readable record") {
    TempDir dir("errors");
    const fs::path err = dir.path / "stderr.json";
    SUBCASE("unknown variant") {
        CHECK(run("charge --n 4 --variant bogus --out " + dir.path.string(), err) != 0);
        CHECK(slurp(err).find("\"error\"") != std::string::npos);
    }
    SUBCASE("undersized system") {
        CHECK(run("charge --n 3 --realizations 2 --out " + dir.path.string(), err) != 0);
        const std::string text = slurp(err);
        CHECK(text.find("SizeTooSmall") != std::string::npos);
    }
    SUBCASE("report on an empty directory") {
        TempDir empty("report_empty");
        CHECK(run("report --results " + empty.path.string(), err) != 0);
        CHECK(slurp(err).find("MissingResults") != std::string::npos);
    }
}

TEST_CASE("figure presets resolve") {
    TempDir dir("preset");
    // smallest presets only; bigger ones are exercised by the acceptance suite
    REQUIRE(run("commutators --preset fig6 --n 4 --realizations 2 --threads 2 --out " +
                dir.path.string()) == 0);
    CHECK(fs::exists(dir.path / "commutators_regularized.csv"));
    CHECK(run("otoc --preset not_a_preset --out " + dir.path.string(), dir.path / "e.json") != 0);
}

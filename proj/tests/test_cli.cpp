// End-to-end checks of the command-line tool. The test runner exports
// NLAC_CLI (path to the built binary) and NLAC_CONFIG_DIR (bundled example
// configurations); without them these cases skip.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

using Json = nlohmann::ordered_json;

const char* cli_path() { return std::getenv("NLAC_CLI"); }
const char* config_dir() { return std::getenv("NLAC_CONFIG_DIR"); }

#define SKIP_WITHOUT_CLI()                                    \
    do {                                                      \
        if (!cli_path() || !config_dir()) {                   \
            MESSAGE("skipping: NLAC_CLI/NLAC_CONFIG_DIR unset"); \
            return;                                           \
        }                                                     \
    } while (0)

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + cli_path() + "\" " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (fgets(buf, sizeof buf, pipe)) out += buf;
    const int rc = pclose(pipe);
    CliResult res;
    res.output = out;
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

std::string fresh_dir(const std::string& tag) {
    static int counter = 0;
    const auto d = std::filesystem::temp_directory_path() /
                   ("nlac_cli_" + std::to_string(static_cast<long>(getpid())) + "_" + tag + "_" +
                    std::to_string(counter++));
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d.string();
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::string bundled(const std::string& name) {
    return std::string(config_dir()) + "/" + name;
}

}  // namespace

TEST_CASE("version flag and kernel self-test") {
    SKIP_WITHOUT_CLI();
    const CliResult v = run_cli("--version");
    CHECK(v.exit_code == 0);
    CHECK(!v.output.empty());

    const CliResult st = run_cli("frac-selftest");
    CHECK(st.exit_code == 0);
    CHECK(st.output.find("[PASS]") != std::string::npos);
    CHECK(st.output.find("[FAIL]") == std::string::npos);
}

TEST_CASE("time-domain run produces the documented files, deterministically") {
    SKIP_WITHOUT_CLI();
    const std::string out1 = fresh_dir("sim1");
    const std::string out2 = fresh_dir("sim2");
    const std::string cfg = bundled("water_pulse.json");

    const CliResult r1 = run_cli("simulate \"" + cfg + "\" -o \"" + out1 + "\"");
    REQUIRE_MESSAGE(r1.exit_code == 0, r1.output);
    const CliResult r2 = run_cli("simulate \"" + cfg + "\" -o \"" + out2 + "\"");
    REQUIRE(r2.exit_code == 0);

    for (const char* name : {"sensors.csv", "field_final.csv", "metadata.json"}) {
        CHECK(std::filesystem::exists(out1 + "/" + name));
        CHECK(read_text(out1 + "/" + name) == read_text(out2 + "/" + name));
    }

    const std::string sensors = read_text(out1 + "/sensors.csv");
    CHECK(sensors.rfind("t_s,u_s0,ut_s0,u_s1,ut_s1\n", 0) == 0);
    // 501 frames at stride 5 -> 101 sample rows plus the header
    CHECK(count_lines(sensors) == 102);

    const Json meta = Json::parse(read_text(out1 + "/metadata.json"));
    CHECK(meta.at("tool") == "nlac");
    CHECK(meta.at("command") == "simulate");
    CHECK(meta.at("derived").at("n_frames") == 501);
    CHECK(meta.contains("resolved_config"));
}

TEST_CASE("the resolved config embedded in metadata reproduces the run") {
    SKIP_WITHOUT_CLI();
    const std::string out1 = fresh_dir("round1");
    const std::string out2 = fresh_dir("round2");
    const CliResult r1 =
        run_cli("simulate \"" + bundled("water_pulse.json") + "\" -o \"" + out1 + "\"");
    REQUIRE_MESSAGE(r1.exit_code == 0, r1.output);

    const Json meta = Json::parse(read_text(out1 + "/metadata.json"));
    const std::string cfg2 = out2 + "/config.json";
    write_text(cfg2, meta.at("resolved_config").dump(2) + "\n");

    const CliResult r2 = run_cli("simulate \"" + cfg2 + "\" -o \"" + out2 + "\"");
    REQUIRE_MESSAGE(r2.exit_code == 0, r2.output);
    CHECK(read_text(out1 + "/sensors.csv") == read_text(out2 + "/sensors.csv"));
    CHECK(read_text(out1 + "/field_final.csv") == read_text(out2 + "/field_final.csv"));
}

TEST_CASE("unknown configuration keys are rejected with exit code 2") {
    SKIP_WITHOUT_CLI();
    const std::string dir = fresh_dir("badkey");
    Json cfg = Json::parse(read_text(bundled("water_pulse.json")));
    cfg["grid"]["n_cells"] = 100;  // misspelled key
    const std::string path = dir + "/config.json";
    write_text(path, cfg.dump(2));

    const CliResult r = run_cli("simulate \"" + path + "\" -o \"" + dir + "/out\"");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("unknown key") != std::string::npos);
    CHECK(r.output.find("n_cells") != std::string::npos);
}

TEST_CASE("solver failures exit with code 3 and a JSON report") {
    SKIP_WITHOUT_CLI();
    const std::string dir = fresh_dir("degenerate");
    Json cfg = Json::parse(read_text(bundled("water_pulse.json")));
    // push the state far beyond the degeneracy floor of the quadratic model
    cfg["initial"]["u0"]["amplitude"] = 7e8;
    const std::string path = dir + "/config.json";
    write_text(path, cfg.dump(2));

    const CliResult r = run_cli("simulate \"" + path + "\" -o \"" + dir + "/out\"");
    CHECK(r.exit_code == 3);
    const Json err = Json::parse(r.output);
    CHECK(err.at("error").at("type") == "degeneracy");
    CHECK(!err.at("error").at("message").get<std::string>().empty());
}

TEST_CASE("relaxation-time sweep reports a monotone limit approach") {
    SKIP_WITHOUT_CLI();
    const std::string dir = fresh_dir("sweep");
    const CliResult r =
        run_cli("sweep-tau \"" + bundled("tau_sweep.json") + "\" -o \"" + dir + "\"");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);

    const std::string sweep = read_text(dir + "/sweep.csv");
    CHECK(sweep.rfind("value,rel_c_h1,rel_xbar_w\n", 0) == 0);
    CHECK(count_lines(sweep) == 4);

    const Json meta = Json::parse(read_text(dir + "/metadata.json"));
    CHECK(meta.at("derived").at("monotone_c_h1") == true);
    CHECK(meta.at("derived").at("achieved_horizon_s").get<double>() ==
          doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("periodic-state commands: sweep vs self-consistent iteration") {
    SKIP_WITHOUT_CLI();
    const std::string hdir = fresh_dir("harm");
    const CliResult rh =
        run_cli("harmonics \"" + bundled("harmonics_water.json") + "\" -o \"" + hdir + "\"");
    REQUIRE_MESSAGE(rh.exit_code == 0, rh.output);
    CHECK(std::filesystem::exists(hdir + "/field_harmonics.csv"));
    CHECK(std::filesystem::exists(hdir + "/sensors.csv"));
    const Json hmeta = Json::parse(read_text(hdir + "/metadata.json"));
    CHECK(hmeta.at("derived").at("iterations").get<int>() >= 1);

    // the sequential-sweep command keeps a stricter schema: no fixed_point key
    const std::string cdir = fresh_dir("casc");
    const CliResult bad =
        run_cli("cascade \"" + bundled("harmonics_water.json") + "\" -o \"" + cdir + "\"");
    CHECK(bad.exit_code == 2);

    Json cfg = Json::parse(read_text(bundled("harmonics_water.json")));
    cfg.erase("fixed_point");
    const std::string cpath = cdir + "/config.json";
    write_text(cpath, cfg.dump(2));
    const CliResult rc = run_cli("cascade \"" + cpath + "\" -o \"" + cdir + "\"");
    REQUIRE_MESSAGE(rc.exit_code == 0, rc.output);

    const std::string head = read_text(cdir + "/sensors.csv");
    CHECK(head.rfind("sensor_x_m,harmonic,re,im,abs\n", 0) == 0);
    // two sensors, three harmonics each
    CHECK(count_lines(head) == 7);
}

TEST_CASE("coefficient recovery from synthetic and from file data") {
    SKIP_WITHOUT_CLI();
    const std::string dir = fresh_dir("invert");
    const CliResult r =
        run_cli("invert \"" + bundled("invert_two_region.json") + "\" -o \"" + dir + "\"");
    REQUIRE_MESSAGE(r.exit_code == 0, r.output);

    const Json result = Json::parse(read_text(dir + "/result.json"));
    const std::string status = result.at("status").get<std::string>();
    CHECK((status == "discrepancy_reached" || status == "small_update"));
    const auto vals = result.at("recovered_values").get<std::vector<double>>();
    REQUIRE(vals.size() == 2);
    CHECK(std::abs(vals[0] - 1.55e-9) <= 0.10 * 1.55e-9);
    CHECK(std::abs(vals[1] - 2.02e-9) <= 0.10 * 2.02e-9);
    CHECK(std::filesystem::exists(dir + "/observations.csv"));
    CHECK(std::filesystem::exists(dir + "/trace.csv"));

    // feed the written observations back through the file path, keeping the
    // recorded noise magnitude so the stopping rule is identical
    const Json meta = Json::parse(read_text(dir + "/metadata.json"));
    const double noise_norm =
        meta.at("resolved_config").at("recover").at("noise_norm").get<double>();
    const std::string dir2 = fresh_dir("invertfile");
    Json cfg = Json::parse(read_text(bundled("invert_two_region.json")));
    cfg["data"] = Json{{"kind", "file"}, {"path", dir + "/observations.csv"}};
    cfg["recover"]["noise_norm"] = noise_norm;
    const std::string cpath = dir2 + "/config.json";
    write_text(cpath, cfg.dump(2));
    const CliResult r2 = run_cli("invert \"" + cpath + "\" -o \"" + dir2 + "\"");
    REQUIRE_MESSAGE(r2.exit_code == 0, r2.output);
    const Json result2 = Json::parse(read_text(dir2 + "/result.json"));
    const auto vals2 = result2.at("recovered_values").get<std::vector<double>>();
    REQUIRE(vals2.size() == 2);
    // the observation file round-trips exactly, so the runs must agree
    CHECK(std::abs(vals2[0] - vals[0]) <= 1e-9 * std::abs(vals[0]));
    CHECK(std::abs(vals2[1] - vals[1]) <= 1e-9 * std::abs(vals[1]));
}

TEST_CASE("usage errors do not masquerade as success") {
    SKIP_WITHOUT_CLI();
    CHECK(run_cli("simulate").exit_code != 0);                       // missing arguments
    CHECK(run_cli("simulate /nonexistent.json -o /tmp/x").exit_code != 0);
    CHECK(run_cli("does-not-exist").exit_code != 0);
}

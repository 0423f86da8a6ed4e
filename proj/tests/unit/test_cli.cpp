#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const fs::path& scratch()
{
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("elaa_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args, const std::string& tag = "out")
{
    const fs::path out = scratch() / (tag + ".stdout");
    const fs::path err = scratch() / (tag + ".stderr");
    const std::string cmd =
        std::string(ELAA_DOA_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string write_file(const std::string& name, const std::string& text)
{
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

} // namespace

TEST_CASE("run succeeds and writes the metrics CSV")
{
    const auto csv = (scratch() / "metrics.csv").string();
    CHECK(run("run --scenario fig3_large_sep --trials 3 --snr 30 --algos ss_esprit --out " + csv) == 0);
    const std::string text = slurp(csv);
    CHECK(text.rfind("algorithm,snr_db,n_trials,rmse,hit_rate,failure_rate,metric_unit\nss_esprit,30,3,", 0) == 0);
}

TEST_CASE("stdout output and debug CSV")
{
    const auto dbg = (scratch() / "trials.csv").string();
    CHECK(run("run --scenario fig4_near_a --trials 2 --debug-out " + dbg, "nf") == 0);
    CHECK(slurp(scratch() / "nf.stdout").find("nf_localize,30,2,") != std::string::npos);
    CHECK(slurp(dbg).find("algorithm,snr_db,trial,seed,status") == 0);
}

TEST_CASE("scenario file with a bad key exits 2 and names the line")
{
    const auto path = write_file("bad.scn", "[target.a]\nrange_m = 5\nangle_deg = 1\n[run]\ntrails = 3\n");
    CHECK(run("run --scenario " + path, "bad") == 2);
    const std::string err = slurp(scratch() / "bad.stderr");
    CHECK(err.find("line 5") != std::string::npos);
    CHECK(err.find("run.trails") != std::string::npos);
}

TEST_CASE("command-line errors exit 2")
{
    CHECK(run("run", "noargs") == 2);
    CHECK(run("run --scenario fig3_large_sep --algos fft", "algos") == 2);
    CHECK(run("run --scenario no_such_scenario", "missing") == 2);
    CHECK(run("run --scenario fig3_large_sep --trials 0", "trials") == 2);
}

TEST_CASE("majority failures exit 3")
{
    CHECK(run("run --scenario fig4_near_b --trials 40 --snr -10", "fail") == 3);
    CHECK(slurp(scratch() / "fail.stderr").find("failed in") != std::string::npos);
}

TEST_CASE("spectrum and array factor")
{
    CHECK(run("spectrum --scenario fig3_large_sep --snr 30 --seed 4", "spec") == 0);
    CHECK(slurp(scratch() / "spec.stdout").rfind("angle_deg,value\n", 0) == 0);
    CHECK(run("array-factor --scenario fig3_large_sep --step 1", "af") == 0);
    const std::string af = slurp(scratch() / "af.stdout");
    CHECK(af.rfind("angle_deg,elaa_db,ula_db\n", 0) == 0);
    CHECK(std::count(af.begin(), af.end(), '\n') == 181); // header plus the half-open [-90, 90) grid
    CHECK(run("spectrum --scenario fig3_large_sep --mode sum", "mode") == 2);
}

#include <catch2/catch_amalgamated.hpp>

#include "magnon_hybrid/cli.hpp"

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;
using Catch::Approx;

namespace {

const fs::path bin = MAGNON_HYBRID_BIN;
const fs::path configs = MAGNON_HYBRID_CONFIGS;

fs::path scratch(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path p = fs::temp_directory_path() /
                       ("magnon_cli_" + std::to_string(::getpid()) + "_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spill(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct Run {
    int code = -1;
    std::string out, err;
    fs::path dir;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run run(const std::string& command, const fs::path& config, const std::vector<std::string>& sets = {}, const std::string& tag = "run") {
    Run r;
    r.dir = scratch(tag);
    const fs::path out_dir = r.dir / "out";
    std::string cmd = quote(bin.string()) + " " + command + " --config " + quote(config.string());
    for (const auto& s : sets) cmd += " --set " + quote(s);
    cmd += " --out " + quote(out_dir.string());
    cmd += " > " + quote((r.dir / "stdout").string()) + " 2> " + quote((r.dir / "stderr").string());
    const int status = std::system(cmd.c_str());
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(r.dir / "stdout");
    r.err = slurp(r.dir / "stderr");
    r.dir = out_dir;
    return r;
}

fs::path write_config(const json& doc, const std::string& tag = "cfg") {
    const fs::path dir = scratch(tag);
    const fs::path p = dir / "config.json";
    spill(p, doc.dump(2));
    return p;
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

bool empty_or_missing(const fs::path& dir) { return !fs::exists(dir) || fs::is_empty(dir); }

void check_manifest(const fs::path& dir) {
    const json report = load(dir / "run_report.json");
    REQUIRE(report.at("outputs").is_array());
    std::set<std::string> listed;
    for (const auto& o : report.at("outputs")) {
        const fs::path p = dir / o.at("path").get<std::string>();
        REQUIRE(fs::exists(p));
        const std::string bytes = slurp(p);
        CHECK(magnon_hybrid::cli::sha256_hex(bytes) == o.at("sha256").get<std::string>());
        CHECK(bytes.size() == o.at("bytes").get<std::size_t>());
        listed.insert(o.at("path").get<std::string>());
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        CHECK(name.find(".tmp") == std::string::npos);
        if (name != "run_report.json") CHECK(listed.count(name) == 1);
    }
    CHECK(report.at("tool") == "magnon-hybrid");
    CHECK(report.at("version").is_string());
    CHECK(report.at("timing").at("wall_seconds").get<double>() >= 0.0);
    CHECK(report.at("inputs").at("schema_version") == 1);
}

} // namespace

TEST_CASE("sha256 matches the reference digest", "[cli]") {
    CHECK(magnon_hybrid::cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(magnon_hybrid::cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("modes on the four-post ring", "[cli]") {
    const auto r = run("modes", configs / "ring4.json");
    REQUIRE(r.code == 0);
    const json doc = load(r.dir / "modes.json");
    REQUIRE(doc.at("modes").size() == 4);
    CHECK_FALSE(doc.at("modes")[0].at("degenerate").get<bool>());
    CHECK(doc.at("modes")[1].at("degenerate").get<bool>());
    CHECK(doc.at("modes")[2].at("degenerate").get<bool>());
    CHECK(doc.at("modes")[0].at("label") == "↑↑↑↑");
    CHECK(doc.at("modes")[3].at("label") == "↑↓↑↓");
    CHECK(slurp(r.dir / "modes.csv").rfind("mode_index,frequency_ghz,label,degenerate\n", 0) == 0);
    CHECK(slurp(r.dir / "fsr.csv").rfind("lower_index,upper_index,fsr_ghz\n", 0) == 0);
    check_manifest(r.dir);
}

TEST_CASE("modes on a single post", "[cli]") {
    const json cfg = {{"schema_version", 1}, {"network", {{"n_posts", 1}, {"post_freq_ghz", {10.0}}, {"coupling", {{0.0}}}}}};
    const auto r = run("modes", write_config(cfg));
    REQUIRE(r.code == 0);
    const json doc = load(r.dir / "modes.json");
    REQUIRE(doc.at("modes").size() == 1);
    CHECK(doc.at("modes")[0].at("frequency_ghz").get<double>() == Approx(10.0));
}

TEST_CASE("config errors exit 2 without outputs", "[cli]") {
    SECTION("malformed JSON reports a position") {
        const fs::path dir = scratch("bad");
        spill(dir / "c.json", "{\n  \"schema_version\": 1,\n  \"network\": {\n}");
        const auto r = run("modes", dir / "c.json");
        CHECK(r.code == 2);
        CHECK(r.err.find("malformed JSON") != std::string::npos);
        CHECK(r.err.find("c.json:4:") != std::string::npos);
        CHECK(empty_or_missing(r.dir));
    }
    SECTION("unknown keys are named") {
        json cfg = load(configs / "ring4.json");
        cfg["network"]["colour"] = "red";
        const auto r = run("modes", write_config(cfg));
        CHECK(r.code == 2);
        CHECK(r.err.find("colour") != std::string::npos);
        CHECK(empty_or_missing(r.dir));
        cfg = load(configs / "ring4.json");
        cfg["extras"] = 1;
        CHECK(run("modes", write_config(cfg)).code == 2);
    }
    SECTION("schema version") {
        json cfg = load(configs / "ring4.json");
        cfg["schema_version"] = 2;
        CHECK(run("modes", write_config(cfg)).code == 2);
        cfg.erase("schema_version");
        CHECK(run("modes", write_config(cfg)).code == 2);
    }
    SECTION("missing block or file") {
        CHECK(run("sweep", configs / "ring4.json").code == 2);
        CHECK(run("modes", configs / "does_not_exist.json").code == 2);
    }
    SECTION("bad override") {
        CHECK(run("modes", configs / "ring4.json", {"network.n_posts"}).code == 2);
        CHECK(run("modes", configs / "ring4.json", {"network.n_posts.3=1"}).code == 2);
    }
    SECTION("overcoupled network") {
        CHECK(run("modes", configs / "ring4.json", {"network.kappa=-170"}).code == 2);
    }
}

TEST_CASE("usage errors exit 2", "[cli]") {
    auto code = [&](const std::string& args) {
        const int s = std::system((quote(bin.string()) + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(code("") == 2);
    CHECK(code("modes") == 2);
    CHECK(code("transmogrify --config x.json") == 2);
    CHECK(code("--help") == 0);
    CHECK(code("--version") == 0);
}

TEST_CASE("overrides follow dotted paths", "[cli]") {
    const auto r = run("modes", configs / "ring4.json", {"network.n_posts=6", "network.omega0_ghz=12.5"});
    REQUIRE(r.code == 0);
    CHECK(load(r.dir / "modes.json").at("modes").size() == 6);
    const json report = load(r.dir / "run_report.json");
    CHECK(report.at("inputs").at("network").at("n_posts") == 6);
    CHECK(report.at("overrides").size() == 2);
}

TEST_CASE("sweep of the four-post model", "[cli]") {
    const auto r = run("sweep", configs / "n4_reference.json");
    REQUIRE(r.code == 0);
    const auto samples = magnon_hybrid::io::samples_from_csv(slurp(r.dir / "branches.csv"));
    CHECK(samples.size() == 3 * 200);
    const std::string svg = slurp(r.dir / "branches.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    std::size_t lines = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++lines;
    CHECK(lines >= 3);
    check_manifest(r.dir);
}

TEST_CASE("sweep without coupling gives straight lines", "[cli]") {
    const auto r = run("sweep", configs / "n4_reference.json", {"model.g_ghz=0", "sweep.field_points=11"});
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(r.dir / "branches.csv"));
    std::string line;
    std::getline(csv, line);
    std::vector<double> photon;
    while (std::getline(csv, line)) {
        double field = 0.0, freq = 0.0;
        int branch = 0;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%d,%lf", &field, &branch, &freq) == 3);
        if (std::abs(freq - 28.0 * field) > 1e-6) photon.push_back(freq);
    }
    // Everything off the Kittel line is one of two field-independent doublet levels.
    std::sort(photon.begin(), photon.end());
    REQUIRE(photon.size() == 2 * 11);
    CHECK(photon[10] - photon[0] < 1e-9);
    CHECK(photon[21] - photon[11] < 1e-9);
    CHECK(photon[11] - photon[0] == Approx(0.31).epsilon(0.01));
}

TEST_CASE("unstable sweep points", "[cli]") {
    SECTION("partially unstable sweep is marked and succeeds") {
        const auto r = run("sweep", configs / "n4_reference.json", {"model.g_ghz=6", "sweep.field_points=31"});
        REQUIRE(r.code == 0);
        const std::string csv = slurp(r.dir / "branches.csv");
        CHECK(csv.find(",-1,nan,nan,false") != std::string::npos);
        CHECK(csv.find(",true") != std::string::npos);
        CHECK(r.err.find("unstable") != std::string::npos);
        CHECK(slurp(r.dir / "branches.svg").find("<circle") != std::string::npos);
    }
    SECTION("every point unstable exits 3") {
        const auto r = run("sweep", configs / "n4_reference.json", {"model.g_ghz=20", "sweep.field_points=11"});
        CHECK(r.code == 3);
        CHECK(load(r.dir / "run_report.json").at("exit_code") == 3);
    }
}

TEST_CASE("synth is deterministic", "[cli]") {
    const std::vector<std::string> small{"sweep.field_points=20", "synth.freq_points=300", "synth.noise_db=0.5", "synth.seed=11"};
    const auto a = run("synth", configs / "n4_reference.json", small);
    const auto b = run("synth", configs / "n4_reference.json", small);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const auto hash = [](const fs::path& dir) {
        const json report = load(dir / "run_report.json");
        for (const auto& o : report.at("outputs"))
            if (o.at("path") == "map.csv") return o.at("sha256").get<std::string>();
        return std::string();
    };
    CHECK_FALSE(hash(a.dir).empty());
    CHECK(hash(a.dir) == hash(b.dir));
    CHECK(slurp(a.dir / "map.csv") == slurp(b.dir / "map.csv"));
    auto other = small;
    other.back() = "synth.seed=12";
    CHECK(hash(run("synth", configs / "n4_reference.json", other).dir) != hash(a.dir));
    check_manifest(a.dir);
}

TEST_CASE("synth axis errors exit 2", "[cli]") {
    CHECK(run("synth", configs / "n4_reference.json", {"synth.freq_points=0"}).code == 2);
    CHECK(run("synth", configs / "n4_reference.json", {"synth.freq_stop_ghz=5"}).code == 2);
    CHECK(run("synth", configs / "n4_reference.json", {"sweep.field_points=0"}).code == 2);
}

TEST_CASE("eight-post map shows four resonances near 0.43 T", "[cli]") {
    const auto r = run("synth", configs / "n8_reference.json", {"sweep.field_start_t=0.43", "sweep.field_stop_t=0.43", "sweep.field_points=1"});
    REQUIRE(r.code == 0);
    const auto map = magnon_hybrid::io::map_from_csv(slurp(r.dir / "map.csv"));
    const auto ridges = magnon_hybrid::extract_ridges(map, 6.0, 8);
    CHECK(ridges.points.size() == 4);
}

TEST_CASE("fit of the bundled four-post dataset", "[cli]") {
    const auto r = run("fit", configs / "n4_reference.json");
    REQUIRE(r.code == 0);
    const json fit = load(r.dir / "fit_result.json");
    CHECK(fit.at("converged").get<bool>());
    CHECK(fit.at("params").at("omega_c").get<double>() == Approx(13.65).margin(1e-4));
    CHECK(fit.at("params").at("g_rl").get<double>() == Approx(0.155).margin(1e-4));
    CHECK(fit.at("params").at("g").get<double>() == Approx(1.84).margin(1e-4));
    const json regime = load(r.dir / "regime.json");
    CHECK(regime.at("ordinary").at("ultrastrong").get<bool>());
    CHECK(regime.at("ordinary").at("strong").get<bool>());
    CHECK(slurp(r.dir / "residuals.svg").rfind("<svg", 0) == 0);
    check_manifest(r.dir);
}

TEST_CASE("fit of the eight-post fixture reports both readings", "[cli]") {
    const auto r = run("fit", configs / "n8_reference.json");
    REQUIRE(r.code == 0);
    const json regime = load(r.dir / "regime.json");
    CHECK(regime.at("over_pi").at("superstrong").get<bool>());
    CHECK_FALSE(regime.at("ordinary").at("superstrong").get<bool>());
    CHECK(regime.at("fsr_source") == "coupled_modes");
}

TEST_CASE("fit data errors exit 4", "[cli]") {
    const fs::path dir = scratch("data");
    SECTION("one point") {
        spill(dir / "one.csv", "field_t,freq_ghz\n0.5,13.0\n");
        const auto r = run("fit", configs / "n4_reference.json", {"fit.data=" + (dir / "one.csv").string()});
        CHECK(r.code == 4);
        CHECK(r.err.find("insufficient data") != std::string::npos);
        CHECK(empty_or_missing(r.dir));
    }
    SECTION("unreadable file") {
        CHECK(run("fit", configs / "n4_reference.json", {"fit.data=" + (dir / "absent.csv").string()}).code == 4);
    }
    SECTION("malformed rows") {
        spill(dir / "bad.csv", "field_t,freq_ghz\n0.5,abc\n");
        CHECK(run("fit", configs / "n4_reference.json", {"fit.data=" + (dir / "bad.csv").string()}).code == 4);
        spill(dir / "cols.csv", "x,y\n0.5,13\n");
        CHECK(run("fit", configs / "n4_reference.json", {"fit.data=" + (dir / "cols.csv").string()}).code == 4);
    }
}

TEST_CASE("fit config errors exit 2", "[cli]") {
    CHECK(run("fit", configs / "n4_reference.json", {"fit.free_params=[\"omega_c\",\"nonsense\"]"}).code == 2);
    CHECK(run("fit", configs / "n4_reference.json", {"fit.options.max_iter=0"}).code == 2);
    // Starting point inside the unstable region.
    CHECK(run("fit", configs / "n4_reference.json", {"fit.initial.g=6", "fit.bounds.g=[0.1,10]"}).code == 2);
}

TEST_CASE("non-converged fit still exits 0", "[cli]") {
    const auto r = run("fit", configs / "n4_reference.json", {"fit.options.max_iter=1"});
    REQUIRE(r.code == 0);
    const json fit = load(r.dir / "fit_result.json");
    CHECK_FALSE(fit.at("converged").get<bool>());
    CHECK(r.err.find("did not converge") != std::string::npos);
}

TEST_CASE("estimate command", "[cli]") {
    SECTION("YIG reference inputs") {
        const auto r = run("estimate", configs / "estimate_yig.json");
        REQUIRE(r.code == 0);
        const json doc = load(r.dir / "estimate.json");
        CHECK(doc.at("g_est_ghz").get<double>() == Approx(1.84).epsilon(0.10));
        CHECK(doc.at("xi_est").get<double>() >= 0.013);
        CHECK(doc.at("xi_est").get<double>() <= 0.017);
        CHECK(doc.at("formula").is_string());
        CHECK(doc.at("inputs").at("spin_quantum") == 2.5);
        CHECK(doc.at("warnings").empty());
    }
    SECTION("filling factor one is accepted with a warning") {
        const auto r = run("estimate", configs / "estimate_yig.json", {"material.filling_factor=1"});
        REQUIRE(r.code == 0);
        CHECK(r.err.find("unphysical for sphere-in-cavity") != std::string::npos);
        CHECK(load(r.dir / "estimate.json").at("warnings").size() == 1);
    }
    SECTION("invalid inputs exit 2") {
        CHECK(run("estimate", configs / "estimate_yig.json", {"material.spin_density_per_m3=-2e28"}).code == 2);
        CHECK(run("estimate", configs / "estimate_yig.json", {"material.filling_factor=1.5"}).code == 2);
        CHECK(run("estimate", configs / "ring4.json").code == 2);
        json cfg = load(configs / "estimate_yig.json");
        cfg["material"].erase("filling_factor");
        cfg["estimate"].erase("coupling_ghz");
        CHECK(run("estimate", write_config(cfg)).code == 2);
    }
}

TEST_CASE("output directory from the config", "[cli]") {
    json cfg = load(configs / "ring4.json");
    cfg["output"] = {{"dir", "results"}};
    const fs::path p = write_config(cfg);
    const int s = std::system((quote(bin.string()) + " modes --config " + quote(p.string()) + " > /dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(s));
    CHECK(WEXITSTATUS(s) == 0);
    CHECK(fs::exists(p.parent_path() / "results" / "modes.json"));
}

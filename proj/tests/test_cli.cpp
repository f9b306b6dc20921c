#include "sevo/pnm.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

using namespace sevo;
namespace fs = std::filesystem;

namespace {

int sevo_cli(const std::string& args) {
    const std::string cmd = std::string(SEVO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
    CHECK(sevo_cli("") == 1);
    CHECK(sevo_cli("--help") == 0);
    CHECK(sevo_cli("frobnicate") == 1);
    CHECK(sevo_cli("overlay --in a.ppm") == 1);
    CHECK(sevo_cli("eval --policy p.sevp --env moon") == 1);
    CHECK(sevo_cli("train --data /nonexistent --policy frozen --out x.sevp") == 1);
}

TEST_CASE("overlay subcommand") {
    test::TempDir dir("cli_overlay");
    Rng rng(3);
    const auto f = test::random_frame(rng, 12, 10);
    const auto m = test::random_mask(rng, 12, 10);
    pnm::write_ppm(dir.path() / "f.ppm", f);
    pnm::write_pgm(dir.path() / "m.pgm", m);
    const std::string io = " --in " + (dir.path() / "f.ppm").string() + " --mask " + (dir.path() / "m.pgm").string();

    REQUIRE(sevo_cli("overlay" + io + " --alpha 0 --out " + (dir.path() / "o.ppm").string()) == 0);
    CHECK(pnm::read_file(dir.path() / "o.ppm") == pnm::read_file(dir.path() / "f.ppm"));

    REQUIRE(sevo_cli("overlay" + io + " --alpha 0.45 --color 255,255,0 --out " + (dir.path() / "y.ppm").string()) == 0);
    const auto y = pnm::read_ppm(dir.path() / "y.ppm");
    for (int yy = 0; yy < 10; ++yy) {
        for (int x = 0; x < 12; ++x) {
            const auto p = f.at(x, yy);
            Rgb want = p;
            if (m.at(x, yy)) want = {test::oracle_blend(p[0], 255, 0.45), test::oracle_blend(p[1], 255, 0.45),
                                     test::oracle_blend(p[2], 0, 0.45)};
            CHECK(y.at(x, yy) == want);
        }
    }
    CHECK(sevo_cli("overlay" + io + " --alpha 2 --out " + (dir.path() / "z.ppm").string()) == 1);
    CHECK(sevo_cli("overlay" + io + " --color 1,2 --out " + (dir.path() / "z.ppm").string()) == 1);
}

TEST_CASE("collect, train and eval") {
    test::TempDir dir("cli_pipeline");
    const auto data = (dir.path() / "data").string();
    REQUIRE(sevo_cli("collect --episodes 3 --flags overlay,red-light --seed 4 --out " + data) == 0);
    int n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(data)) ++n;
    CHECK(n == 3);
    CHECK(sevo_cli("collect --episodes 2 --flags overlay,ultraviolet --out " + data + "2") == 1);

    const auto policy = (dir.path() / "p.sevp").string();
    REQUIRE(sevo_cli("train --data " + data + " --policy frozen --steps 20 --seed 1 --out " + policy) == 0);
    CHECK(fs::file_size(policy) > 0);
    CHECK(sevo_cli("eval --policy " + policy + " --env novel-similar --trials 3 --seed 2") == 0);
    CHECK(sevo_cli("eval --policy " + (dir.path() / "missing.sevp").string() + " --trials 3") == 1);
}

TEST_CASE("bench reports failure below the threshold with exit 2") {
    CHECK(sevo_cli("bench --width 64 --height 48 --frames 20") == 0);
    CHECK(sevo_cli("bench --width 64 --height 48 --frames 5 --min-fps 1e12") == 2);
}

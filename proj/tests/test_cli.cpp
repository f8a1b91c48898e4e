#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("regkit_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

int run_tool(const std::string& args) {
    const std::string cmd =
        std::string(REGTOOL_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::vector<char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

int count_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    return lines;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("synth writes the full artifact set") {
    TempDir dir("synth");
    CHECK(run_tool("synth --shape 12,12,10 --seed 4 --blobs 3 "
                   "--warp affine:0.2 --out " + dir.file("out")) == 0);
    for (const char* name :
         {"fixed_image", "fixed_labels", "moving_image", "moving_labels"}) {
        CHECK(fs::exists(dir.file(std::string("out/") + name + ".json")));
        CHECK(fs::exists(dir.file(std::string("out/") + name + ".raw")));
    }
    CHECK(fs::exists(dir.file("out/truth_affine.json")));
}

TEST_CASE("synth without --out is a usage error") {
    TempDir dir("synth_noout");
    CHECK(run_tool("synth --shape 8,8,8") == 2);
    CHECK(fs::is_empty(dir.path));
}

TEST_CASE("synth with a zero-scale warp duplicates the fixed pair") {
    TempDir dir("synth_id");
    REQUIRE(run_tool("synth --shape 10,10,10 --seed 1 --warp affine:0 --out " +
                     dir.file("out")) == 0);
    CHECK(read_file(dir.file("out/fixed_image.raw")) ==
          read_file(dir.file("out/moving_image.raw")));
    CHECK(read_file(dir.file("out/fixed_labels.raw")) ==
          read_file(dir.file("out/moving_labels.raw")));
}

TEST_CASE("register affine with defaults logs 11 trace rows") {
    TempDir dir("reg_affine");
    REQUIRE(run_tool("synth --shape 12,12,10 --seed 4 --blobs 3 "
                     "--warp affine:0.1 --out " + dir.file("data")) == 0);
    REQUIRE(run_tool("register --mode affine --moving " +
                     dir.file("data/moving_image") + " --fixed " +
                     dir.file("data/fixed_image") + " --out " +
                     dir.file("run")) == 0);
    // header + iterations 0,100,...,1000
    CHECK(count_lines(dir.file("run/trace.csv")) == 12);
    CHECK(fs::exists(dir.file("run/params.json")));
    CHECK(fs::exists(dir.file("run/warped_moving.raw")));
}

TEST_CASE("register affine on an aligned pair ends near zero SSD") {
    TempDir dir("reg_aligned");
    REQUIRE(run_tool("synth --shape 10,10,10 --seed 2 --warp affine:0 --out " +
                     dir.file("data")) == 0);
    write_text(dir.file("cfg.json"), R"({"iters": 50, "log_every": 10})");
    REQUIRE(run_tool("register --mode affine --moving " +
                     dir.file("data/fixed_image") + " --fixed " +
                     dir.file("data/fixed_image") + " --config " +
                     dir.file("cfg.json") + " --out " + dir.file("run")) == 0);
    std::ifstream in(dir.file("run/trace.csv"));
    std::string line, last;
    std::getline(in, line);  // header
    while (std::getline(in, line)) last = line;
    const auto comma = last.find(',');
    CHECK(std::stod(last.substr(comma + 1)) < 1e-8);
}

TEST_CASE("register ddf with zero deform weight: total equals image") {
    TempDir dir("reg_ddf");
    REQUIRE(run_tool("synth --shape 8,8,8 --seed 3 --blobs 2 --warp ddf:1 "
                     "--out " + dir.file("data")) == 0);
    write_text(dir.file("cfg.json"),
               R"({"iters": 21, "log_every": 10, "window": 3,)"
               R"( "weight_deform_loss": 0})");
    REQUIRE(run_tool("register --mode ddf --seed 1 --moving " +
                     dir.file("data/moving_image") + " --fixed " +
                     dir.file("data/fixed_image") + " --config " +
                     dir.file("cfg.json") + " --out " + dir.file("run")) == 0);
    std::ifstream in(dir.file("run/trace.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const auto c3 = line.find(',', c2 + 1);
        CHECK(line.substr(c1 + 1, c2 - c1 - 1) ==
              line.substr(c2 + 1, c3 - c2 - 1));
    }
    CHECK(fs::exists(dir.file("run/ddf.raw")));
}

TEST_CASE("register with an unknown config key is a usage error") {
    TempDir dir("reg_badcfg");
    REQUIRE(run_tool("synth --shape 8,8,8 --seed 1 --warp affine:0 --out " +
                     dir.file("data")) == 0);
    write_text(dir.file("cfg.json"), R"({"learning_rate": 0.1})");
    CHECK(run_tool("register --mode affine --moving " +
                   dir.file("data/fixed_image") + " --fixed " +
                   dir.file("data/fixed_image") + " --config " +
                   dir.file("cfg.json") + " --out " + dir.file("run")) == 2);
}

TEST_CASE("register divergence exits with code 3") {
    TempDir dir("reg_div");
    REQUIRE(run_tool("synth --shape 8,8,8 --seed 5 --blobs 2 --warp ddf:1 "
                     "--out " + dir.file("data")) == 0);
    write_text(dir.file("cfg.json"),
               R"({"iters": 5, "window": 3, "lr": 1e160})");
    CHECK(run_tool("register --mode ddf --moving " +
                   dir.file("data/moving_image") + " --fixed " +
                   dir.file("data/fixed_image") + " --config " +
                   dir.file("cfg.json") + " --out " + dir.file("run")) == 3);
}

TEST_CASE("warp with identity and zero-ddf parameters is the identity") {
    TempDir dir("warp_id");
    REQUIRE(run_tool("synth --shape 8,8,8 --seed 6 --warp affine:0 --out " +
                     dir.file("data")) == 0);
    // identity affine from the zero-scale synth ground truth
    REQUIRE(run_tool("warp --input " + dir.file("data/fixed_image") +
                     " --params " + dir.file("data/truth_affine.json") +
                     " --out " + dir.file("warped")) == 0);
    CHECK(read_file(dir.file("warped.raw")) ==
          read_file(dir.file("data/fixed_image.raw")));

    REQUIRE(run_tool("synth --shape 8,8,8 --seed 6 --warp ddf:0 --out " +
                     dir.file("data2")) == 0);
    REQUIRE(run_tool("warp --input " + dir.file("data2/fixed_image") +
                     " --params " + dir.file("data2/truth_ddf") + " --out " +
                     dir.file("warped2")) == 0);
    CHECK(read_file(dir.file("warped2.raw")) ==
          read_file(dir.file("data2/fixed_image.raw")));
}

TEST_CASE("warp shape mismatch exits with code 1") {
    TempDir dir("warp_mismatch");
    REQUIRE(run_tool("synth --shape 8,8,8 --seed 7 --warp ddf:1 --out " +
                     dir.file("a")) == 0);
    REQUIRE(run_tool("synth --shape 10,10,10 --seed 7 --warp affine:0 --out " +
                     dir.file("b")) == 0);
    CHECK(run_tool("warp --input " + dir.file("b/fixed_image") + " --params " +
                   dir.file("a/truth_ddf") + " --out " +
                   dir.file("warped")) == 1);
}

TEST_CASE("eval prints the expected metric values") {
    TempDir dir("eval");
    REQUIRE(run_tool("synth --shape 8,8,8 --seed 8 --warp affine:0 --out " +
                     dir.file("data")) == 0);
    const std::string redirect = " > " + dir.file("out.txt") + " 2>/dev/null";
    auto run_capture = [&](const std::string& args) {
        const int status =
            std::system((std::string(REGTOOL_PATH) + " " + args + redirect)
                            .c_str());
        REQUIRE(WEXITSTATUS(status) == 0);
        std::ifstream in(dir.file("out.txt"));
        std::string line;
        std::getline(in, line);
        return line;
    };
    CHECK(std::stod(run_capture("eval --a " + dir.file("data/fixed_image") +
                                " --b " + dir.file("data/fixed_image") +
                                " --metric ssd")) == 0.0);
    CHECK(std::stod(run_capture("eval --a " + dir.file("data/fixed_labels") +
                                " --b " + dir.file("data/fixed_labels") +
                                " --metric dice")) ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("compare writes a PPM slice") {
    TempDir dir("compare");
    REQUIRE(run_tool("synth --shape 8,8,8 --seed 9 --warp affine:0.1 --out " +
                     dir.file("data")) == 0);
    REQUIRE(run_tool("compare --pred " + dir.file("data/moving_labels") +
                     " --truth " + dir.file("data/fixed_labels") +
                     " --thresh 0.1 --axis 0 --index 4 --out " +
                     dir.file("cmp.ppm")) == 0);
    const auto bytes = read_file(dir.file("cmp.ppm"));
    REQUIRE(bytes.size() > 3);
    CHECK(bytes[0] == 'P');
    CHECK(bytes[1] == '6');
}

TEST_CASE("identical invocations produce bitwise-identical outputs") {
    TempDir dir("repro");
    const std::string args = "synth --shape 10,10,10 --seed 11 --blobs 3 "
                             "--warp affine:0.15 --out ";
    REQUIRE(run_tool(args + dir.file("a")) == 0);
    REQUIRE(run_tool(args + dir.file("b")) == 0);
    for (const char* name : {"fixed_image.raw", "moving_image.raw",
                             "fixed_labels.raw", "moving_labels.raw",
                             "truth_affine.json"}) {
        CHECK(read_file(dir.file(std::string("a/") + name)) ==
              read_file(dir.file(std::string("b/") + name)));
    }
}

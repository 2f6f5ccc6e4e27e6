#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "pld/io.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
    const char* bin = std::getenv("PLD_CLI_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

int run(const std::string& args) {
    const std::string cmd = cli_bin() + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

const char* kConfig = R"([dataset]
source = synthetic
num_users = 60
num_items = 60
latent_dim = 4
per_user = 10
min_degree = 1
train_frac = 0.8
val_frac = 0.1
noise_mode = ratio
noise_level = 0.3

[model]
dim = 8
layers = 0

[train]
loss = bpr
denoiser = pld
k = 5
tau = 0.1
learning_rate = 0.05
weight_decay = 0
batch_size = 128
max_epochs = 3
patience = 0

[eval]
k_values = 5,20

[theory]
n = 9
m = 1
delta_mu = 1
sigma = 0.3
k = 1,5
tau = 1
mu1 = 1.0
trials = 5000
)";

size_t count_lines_with(const fs::path& p, const std::string& needle) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::string line;
    size_t hits = 0;
    while (std::getline(in, line)) {
        if (line.find(needle) != std::string::npos) ++hits;
    }
    return hits;
}

} // namespace

TEST_CASE("cli end-to-end flow on a tiny synthetic experiment") {
    const auto work = fs::temp_directory_path() / "pld_cli_flow";
    fs::remove_all(work);
    fs::create_directories(work);
    const auto cfg_path = work / "exp.ini";
    pld::write_file_atomic(cfg_path, kConfig);
    const std::string common =
        "--config " + cfg_path.string() + " --seed 1 --out " + (work / "out").string();

    REQUIRE(run("prepare " + common) == 0);
    const auto seed_dir = work / "out" / "seed_1";
    CHECK(fs::exists(seed_dir / "train_labeled.tsv"));
    CHECK(fs::exists(seed_dir / "validation.tsv"));
    CHECK(fs::exists(seed_dir / "test.tsv"));
    CHECK(fs::exists(seed_dir / "prepare_summary.json"));
    CHECK(fs::exists(seed_dir / "config_snapshot.ini"));

    // injected rows carry the noisy label; count = round(0.3 * train size)
    const auto normal_rows = count_lines_with(seed_dir / "train_labeled.tsv", "\tnormal");
    const auto noisy_rows = count_lines_with(seed_dir / "train_labeled.tsv", "\tnoisy");
    CHECK(noisy_rows ==
          static_cast<size_t>(0.3 * static_cast<double>(normal_rows) + 0.5));

    SECTION("prepare is deterministic per seed") {
        const auto before = pld::read_file(seed_dir / "train_labeled.tsv");
        REQUIRE(run("prepare " + common) == 0);
        CHECK(pld::read_file(seed_dir / "train_labeled.tsv") == before);
    }

    REQUIRE(run("train " + common) == 0);
    CHECK(fs::exists(seed_dir / "checkpoint_best.bin"));
    CHECK(fs::exists(seed_dir / "epochs.csv"));
    CHECK(count_lines_with(seed_dir / "epochs.csv", "") == 4); // header + 3 epochs

    REQUIRE(run("analyze " + common) == 0);
    CHECK(fs::exists(seed_dir / "loss_record.csv"));
    CHECK(fs::exists(seed_dir / "overlap_stats.csv"));
    CHECK(fs::exists(seed_dir / "user_gaps.csv"));
    // loss record covers the labeled training set
    CHECK(count_lines_with(seed_dir / "loss_record.csv", "") == 1 + normal_rows + noisy_rows);

    REQUIRE(run("eval " + common) == 0);
    CHECK(fs::exists(seed_dir / "metrics.csv"));
    CHECK(count_lines_with(seed_dir / "metrics.csv", "") == 3); // header + 2 K rows

    REQUIRE(run("theory " + common) == 0);
    CHECK(fs::exists(seed_dir / "theory_sweep.csv"));
    CHECK(count_lines_with(seed_dir / "theory_sweep.csv", "") == 3); // header + 2 grid rows
    // the k=1 row pins the exact closed form
    CHECK(count_lines_with(seed_dir / "theory_sweep.csv", "9,1,1,2,0.3,1,1,0.8,") == 1);

    fs::remove_all(work);
}

TEST_CASE("cli reports missing inputs with nonzero exit") {
    const auto work = fs::temp_directory_path() / "pld_cli_err";
    fs::remove_all(work);
    fs::create_directories(work);
    const auto cfg_path = work / "bad.ini";
    pld::write_file_atomic(cfg_path,
                           "[dataset]\nsource = file\npath = /nonexistent/data.tsv\n");
    CHECK(run("prepare --config " + cfg_path.string() + " --seed 1 --out " +
              (work / "out").string()) != 0);
    CHECK(run("train --config /nonexistent.ini") != 0);
    CHECK(run("bogus-subcommand") != 0);
    fs::remove_all(work);
}

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include <unistd.h>

#include <doctest.h>

#include "mrmn/data.hpp"
#include "mrmn/parameters.hpp"
#include "mrmn/rng.hpp"

using namespace mrmn;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return std::getenv("MRMN_CLI"); }

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("mrmn_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_toy_data(const std::string& path) {
    std::ofstream out(path);
    // 4 users over 10 items, 2 types; every user touches 7 items and ends on
    // three "buy" records (one stays in train), leaving items for negatives
    out << "# toy interactions\n";
    const char* users[] = {"u1", "u2", "u3", "u4"};
    for (int u = 0; u < 4; ++u) {
        for (int k = 0; k < 4; ++k)
            out << users[u] << ",i" << ((u + k) % 10) << ",click," << k << "\n";
        for (int k = 4; k < 7; ++k)
            out << users[u] << ",i" << ((u + k) % 10) << ",buy," << (5 + k) << "\n";
    }
}

bool skip_without_cli() {
    if (cli_path()) return false;
    MESSAGE("MRMN_CLI not set; skipping CLI integration test");
    return true;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("ingest writes canonical data and stats that match a recount") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    REQUIRE(run("ingest --data " + dir.file("raw.csv") + " --out " + dir.file("out")) == 0);

    // independent recount of the raw file
    std::map<std::string, std::set<std::string>> users_by_type, items_by_type;
    std::map<std::string, std::set<std::pair<std::string, std::string>>> pairs_by_type;
    {
        std::ifstream in(dir.file("raw.csv"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream fields(line);
            std::string u, i, t, ts;
            std::getline(fields, u, ',');
            std::getline(fields, i, ',');
            std::getline(fields, t, ',');
            std::getline(fields, ts, ',');
            users_by_type[t].insert(u);
            items_by_type[t].insert(i);
            pairs_by_type[t].insert({u, i});
        }
    }

    std::ifstream stats(dir.file("out") + "/dataset_stats.csv");
    REQUIRE(stats.good());
    std::string header;
    std::getline(stats, header);
    CHECK(header == "type,users,items,interactions,density");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(stats, line)) {
        std::istringstream fields(line);
        std::string type, users, items, inter, density;
        std::getline(fields, type, ',');
        std::getline(fields, users, ',');
        std::getline(fields, items, ',');
        std::getline(fields, inter, ',');
        std::getline(fields, density, ',');
        CHECK(std::stoul(users) == users_by_type[type].size());
        CHECK(std::stoul(items) == items_by_type[type].size());
        CHECK(std::stoul(inter) == pairs_by_type[type].size());
        ++rows;
    }
    CHECK(rows == 2);

    // canonical dump parses back to the same token sets
    auto canonical = parse_interactions_file(dir.file("out") + "/canonical.csv");
    CHECK(canonical.users.size() == 4);
    CHECK(canonical.items.size() == 10);
    CHECK(canonical.types.size() == 2);
}

TEST_CASE("ingest is byte-deterministic across reruns") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    REQUIRE(run("ingest --data " + dir.file("raw.csv") + " --out " + dir.file("a")) == 0);
    REQUIRE(run("ingest --data " + dir.file("raw.csv") + " --out " + dir.file("b")) == 0);
    CHECK(slurp(dir.file("a") + "/canonical.csv") == slurp(dir.file("b") + "/canonical.csv"));
    CHECK(slurp(dir.file("a") + "/dataset_stats.csv") ==
          slurp(dir.file("b") + "/dataset_stats.csv"));
}

TEST_CASE("over-filtering exits with the data error code") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    CHECK(run("ingest --data " + dir.file("raw.csv") + " --out " + dir.file("out") +
              " --min-user 100") == 3);
}

TEST_CASE("config errors and unknown flags exit with the config error code") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    // no margin configured
    CHECK(run("train --data " + dir.file("raw.csv") + " --out " + dir.file("out") +
              " --epochs 1") == 2);
    CHECK(run("train --bogus-flag 1") == 2);
    CHECK(run("evaluate --data " + dir.file("raw.csv") + " --out " + dir.file("out")) == 2);
    // missing data file is a data error
    CHECK(run("ingest --data " + dir.file("absent.csv") + " --out " + dir.file("out")) == 3);
}

TEST_CASE("zero-epoch training checkpoints the raw initialization") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    REQUIRE(run("train --data " + dir.file("raw.csv") + " --out " + dir.file("out") +
                " --epochs 0 --margin 0.1 --d 6 --slots 3 --seed 11") == 0);

    auto [params, hp] = load_checkpoint(dir.file("out") + "/checkpoint.bin");
    auto log = parse_interactions_file(dir.file("raw.csv"));
    auto ds = leave_one_out_split(log);
    HyperParams want;
    want.d = 6;
    want.slots = 3;
    want.seed = 11;
    auto expect = init_parameters(want, ds.n_users, ds.n_items, ds.type_names);
    CHECK(params == expect);
    CHECK(hp.margins.at("click") == 0.1);
    CHECK(hp.margins.at("buy") == 0.1);
}

TEST_CASE("training twice with one seed gives identical checkpoints") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    std::string args = " --data " + dir.file("raw.csv") +
                       " --epochs 3 --margin 0.2 --d 4 --slots 2 --seed 5 --lr 0.05";
    REQUIRE(run("train --out " + dir.file("a") + args) == 0);
    REQUIRE(run("train --out " + dir.file("b") + args) == 0);
    CHECK(slurp(dir.file("a") + "/checkpoint.bin") == slurp(dir.file("b") + "/checkpoint.bin"));

    std::string log_a = slurp(dir.file("a") + "/training_log.csv");
    CHECK(log_a.rfind("epoch,mean_loss,active_fraction,elapsed_ms", 0) == 0);
}

TEST_CASE("evaluate emits one report per feedback type") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    REQUIRE(run("train --data " + dir.file("raw.csv") + " --out " + dir.file("out") +
                " --epochs 2 --margin 0.1 --d 4 --slots 2 --seed 5") == 0);
    std::string base = "evaluate --data " + dir.file("raw.csv") + " --checkpoint " +
                       dir.file("out") + "/checkpoint.bin --out " + dir.file("out") +
                       " --negatives 3";
    REQUIRE(run(base + " --eval-type click") == 0);
    REQUIRE(run(base + " --eval-type buy") == 0);
    CHECK(fs::exists(dir.file("out") + "/eval_test_click.csv"));
    CHECK(fs::exists(dir.file("out") + "/eval_test_buy.csv"));
    CHECK(fs::exists(dir.file("out") + "/eval_test_click_summary.json"));

    std::string csv = slurp(dir.file("out") + "/eval_test_click.csv");
    CHECK(csv.rfind("user,rank,hit,ndcg", 0) == 0);
    // unknown type is a config error
    CHECK(run(base + " --eval-type wishlist") == 2);
}

TEST_CASE("exported attention rows are distributions") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    REQUIRE(run("train --data " + dir.file("raw.csv") + " --out " + dir.file("out") +
                " --epochs 2 --margin 0.1 --d 4 --slots 5 --seed 6") == 0);
    REQUIRE(run("export-attention --data " + dir.file("raw.csv") + " --checkpoint " +
                dir.file("out") + "/checkpoint.bin --out " + dir.file("out")) == 0);

    std::ifstream in(dir.file("out") + "/attention.csv");
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("type,slot_0", 0) == 0);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string type;
        std::getline(fields, type, ',');
        double sum = 0.0, w = 0.0;
        std::size_t slots = 0;
        std::string field;
        while (std::getline(fields, field, ',')) {
            w = std::stod(field);
            CHECK(w >= 0.0);
            sum += w;
            ++slots;
        }
        CHECK(slots == 5);
        CHECK(std::fabs(sum - 1.0) <= 1e-6);
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("margin grid trains one row per setting") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    REQUIRE(run("margin-grid --data " + dir.file("raw.csv") + " --out " + dir.file("out") +
                " --epochs 2 --d 4 --slots 2 --seed 5 --negatives 3" +
                " --grid \"0.2,0.1;0.1,0.2\"") == 0);
    std::ifstream in(dir.file("out") + "/margin_grid.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "margins,hr@10,ndcg@10");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
    // a single setting is rejected
    CHECK(run("margin-grid --data " + dir.file("raw.csv") + " --out " + dir.file("out") +
              " --epochs 1 --d 4 --slots 2 --grid \"0.2,0.1\"") == 2);
}

TEST_CASE("config file values are overridden by flags") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    {
        std::ofstream cfg(dir.file("run.cfg"));
        cfg << "# experiment config\n"
            << "data=" << dir.file("raw.csv") << "\n"
            << "epochs=1\n"
            << "d=4\n"
            << "slots=2\n"
            << "margin=0.1\n"
            << "seed=100\n"
            << "out=" << dir.file("cfg_out") << "\n";
    }
    REQUIRE(run("train --config " + dir.file("run.cfg")) == 0);
    REQUIRE(run("train --config " + dir.file("run.cfg") + " --out " + dir.file("flag_out") +
                " --seed 200") == 0);

    // different seeds must give different checkpoints; same config reruns agree
    REQUIRE(run("train --config " + dir.file("run.cfg") + " --out " + dir.file("cfg_out2")) == 0);
    CHECK(slurp(dir.file("cfg_out") + "/checkpoint.bin") ==
          slurp(dir.file("cfg_out2") + "/checkpoint.bin"));
    CHECK(slurp(dir.file("cfg_out") + "/checkpoint.bin") !=
          slurp(dir.file("flag_out") + "/checkpoint.bin"));

    // unknown config key is a config error
    {
        std::ofstream cfg(dir.file("bad.cfg"));
        cfg << "wibble=1\n";
    }
    CHECK(run("train --config " + dir.file("bad.cfg")) == 2);
}

TEST_CASE("lrml and collapse-types runs collapse the log before training") {
    if (skip_without_cli()) return;
    TempDir dir;
    write_toy_data(dir.file("raw.csv"));
    REQUIRE(run("train --data " + dir.file("raw.csv") + " --out " + dir.file("lrml") +
                " --model lrml --epochs 1 --margin 0.1 --d 4 --slots 2") == 0);
    auto [params, hp] = load_checkpoint(dir.file("lrml") + "/checkpoint.bin");
    CHECK(params.type_names == std::vector<std::string>{"click"});  // primary name
    CHECK(hp.margins.size() == 1);

    REQUIRE(run("train --data " + dir.file("raw.csv") + " --out " + dir.file("asp") +
                " --model cml --collapse-types --epochs 1 --margin 0.1 --d 4 --slots 2") == 0);
    auto [asp_params, asp_hp] = load_checkpoint(dir.file("asp") + "/checkpoint.bin");
    CHECK(asp_params.type_names == std::vector<std::string>{"click"});
}

}  // TEST_SUITE

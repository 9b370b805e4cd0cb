#include <doctest.h>

#include <filesystem>
#include <set>

#include "dld/dataset.hpp"
#include "dld/errors.hpp"
#include "dld/surrogate.hpp"

using namespace dld;
namespace fs = std::filesystem;

TEST_CASE("grid sizes follow the product of the axes") {
    CHECK(paper_grid().f.size() == 26);
    CHECK(generate_grid(paper_grid()).size() == 2080);
    CHECK(paper_test_grid().f.size() == 9);
    CHECK(generate_grid(paper_test_grid()).size() == 216);
    CHECK(generate_grid(desk_grid()).size() >= 120);
    CHECK(base_pairs(paper_grid()).size() * fine_re_grid(0.499).size() == 10400);
    CHECK(fine_re_grid(0.499).front() == 0.01);
    CHECK(fine_re_grid(0.499).back() == 25.0);
}

TEST_CASE("grid order is f-major, then N, then Re") {
    const SweepSpec s{{0.3, 0.4}, {3, 4}, {1.0, 2.0}};
    const auto g = generate_grid(s);
    REQUIRE(g.size() == 8);
    CHECK(g[0].f == 0.3);
    CHECK(g[0].n == 3);
    CHECK(g[1].re == 2.0);
    CHECK(g[2].n == 4);
    CHECK(g[4].f == 0.4);
    CHECK_THROWS_AS(generate_grid({{}, {3}, {1.0}}), ArgumentError);
    CHECK_THROWS_AS(generate_grid({{0.5}, {}, {1.0}}), ArgumentError);
    CHECK_THROWS_AS(generate_grid({{0.5}, {3}, {}}), ArgumentError);
    CHECK_THROWS_AS(generate_grid({{0.8}, {3}, {1.0}}), RangeError);
}

TEST_CASE("split assigns exact dev counts deterministically") {
    DatasetManifest m;
    for (const DldParams& p : generate_grid(paper_grid())) m.records.push_back({p, "", 0.2, Split::None, false, 0});
    const DatasetManifest a = split(m, 0.2, 42), b = split(m, 0.2, 42), c = split(m, 0.2, 43);
    auto devs = [](const DatasetManifest& x) {
        std::set<std::size_t> d;
        for (std::size_t i = 0; i < x.records.size(); ++i)
            if (x.records[i].split == Split::Dev) d.insert(i);
        return d;
    };
    CHECK(devs(a).size() == 416);
    CHECK(devs(a) == devs(b));
    CHECK(devs(a) != devs(c));
    CHECK(a.split_seed == 42);

    DatasetManifest small;
    for (int k = 0; k < 10; ++k) small.records.push_back({DldParams::make(0.5, 5, 1.0 + k), "", {}, Split::None, false, 0});
    small.records[0].split = Split::Test;
    const DatasetManifest s = split(small, 0.2, 1);
    CHECK(s.records[0].split == Split::Test);
    CHECK(devs(s).size() == 2);
    small.records[0].split = Split::None;
    CHECK(devs(split(small, 0.2, 1)).size() == 2);
    CHECK_THROWS_AS(split(small, 0.0, 1), ArgumentError);
    CHECK_THROWS_AS(split(small, 1.0, 1), ArgumentError);
}

TEST_CASE("manifest round-trips through JSON") {
    const fs::path dir = fs::temp_directory_path() / "dld_manifest_test";
    fs::remove_all(dir);
    DatasetManifest m;
    m.res = 96;
    m.split_seed = 7;
    m.records.push_back({DldParams::make(0.31, 4, 0.1), "fields/00000", 0.1234567890123456789, Split::Dev, false, 12});
    m.records.push_back({DldParams::make(0.75, 10, 25.0), "", std::nullopt, Split::Test, true, 3});
    m.failures.push_back({DldParams::make(0.5, 5, 7.5), "flow solve did not converge"});
    save_manifest(dir, m);
    const DatasetManifest b = load_manifest(dir);
    CHECK(b.res == 96);
    CHECK(b.split_seed == 7);
    REQUIRE(b.records.size() == 2);
    CHECK(b.records[0].d_c == m.records[0].d_c);
    CHECK(b.records[0].params.f == 0.31);
    CHECK(b.records[0].split == Split::Dev);
    CHECK(b.records[0].evaluations == 12);
    CHECK(!b.records[1].d_c.has_value());
    CHECK(b.records[1].augmented);
    REQUIRE(b.failures.size() == 1);
    CHECK(b.failures[0].reason == "flow solve did not converge");
    CHECK(fs::exists(dir / "failures.csv"));
    fs::remove_all(dir);
}

TEST_CASE("empty build writes nothing") {
    const fs::path dir = fs::temp_directory_path() / "dld_empty_build";
    fs::remove_all(dir);
    BuildOptions o;
    o.out_dir = dir;
    const DatasetManifest m = build_dataset({}, o);
    CHECK(m.records.empty());
    CHECK(!fs::exists(dir / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("one-configuration build persists a labelled field") {
    const fs::path dir = fs::temp_directory_path() / "dld_one_build";
    fs::remove_all(dir);
    BuildOptions o;
    o.solver.res = 64;
    o.out_dir = dir;
    o.jobs = 1;
    const DatasetManifest m = build_dataset({DldParams::make(0.5, 5, 1.0)}, o);
    REQUIRE(m.records.size() == 1);
    CHECK(m.failures.empty());
    REQUIRE(m.records[0].d_c.has_value());
    CHECK(*m.records[0].d_c > 0.05);
    CHECK(*m.records[0].d_c < 0.475);
    const StoredField s = load_field(dir / m.records[0].field);
    CHECK(s.d_c == m.records[0].d_c);
    CHECK(s.field.res() == 64);
    const DatasetManifest back = load_manifest(dir);
    CHECK(back.records.size() == 1);
    CHECK(load_record_field(dir, back.records[0]).res() == 64);
    fs::remove_all(dir);
}

TEST_CASE("augmentation labels every fine-Re point or reports it") {
    // A network whose output is a uniform stream along x; the pillar mask supplies the walls.
    nn::NetParams net = cnn_build(32, 16);
    std::fill(net.weights.begin(), net.weights.end(), 0.0);
    net.weights[net.branch_param_count(0) - 1] = 1.0;
    const std::vector<std::pair<double, int>> base{{0.5, 4}};
    const std::vector<double> re = fine_re_grid(24.99 / 5.0);
    REQUIRE(re.size() == 5);

    AugmentOptions o;
    o.jobs = 1;
    const DatasetManifest m = augment(net, base, re, o);
    CHECK(m.records.size() + m.failures.size() == 5);
    CHECK(m.records.size() == 5);
    for (const DataRecord& r : m.records) CHECK(r.augmented);

    net.extra["train_max_speed"] = 0.05;
    const DatasetManifest rejected = augment(net, base, re, o);
    CHECK(rejected.records.empty());
    CHECK(rejected.failures.size() == 5);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "dld/errors.hpp"
#include "dld/optimizer.hpp"
#include "dld/rng.hpp"

using namespace dld;

namespace {

/// O(n^2 m) peeling oracle: a point is in the current front iff nothing left dominates it.
std::vector<std::set<std::size_t>> brute_fronts(const std::vector<Vec>& pts) {
    std::vector<std::set<std::size_t>> out;
    std::set<std::size_t> left;
    for (std::size_t i = 0; i < pts.size(); ++i) left.insert(i);
    while (!left.empty()) {
        std::set<std::size_t> front;
        for (std::size_t i : left) {
            bool dominated = false;
            for (std::size_t j : left) {
                bool all_le = true, one_lt = false;
                for (std::size_t k = 0; k < pts[i].size(); ++k) {
                    all_le = all_le && pts[j][k] <= pts[i][k];
                    one_lt = one_lt || pts[j][k] < pts[i][k];
                }
                if (all_le && one_lt) dominated = true;
            }
            if (!dominated) front.insert(i);
        }
        for (std::size_t i : front) left.erase(i);
        out.push_back(front);
    }
    return out;
}

MooProblem dtlz2(int n_vars = 7, int m = 3) {
    MooProblem p;
    p.n_vars = n_vars;
    p.n_objectives = m;
    p.lower.assign(n_vars, 0.0);
    p.upper.assign(n_vars, 1.0);
    p.evaluate = [n_vars, m](const Vec& x) {
        double g = 0.0;
        for (int i = m - 1; i < n_vars; ++i) g += (x[i] - 0.5) * (x[i] - 0.5);
        Vec f(m, 1.0 + g);
        for (int k = 0; k < m; ++k) {
            for (int j = 0; j < m - 1 - k; ++j) f[k] *= std::cos(x[j] * std::numbers::pi / 2);
            if (k > 0) f[k] *= std::sin(x[m - 1 - k] * std::numbers::pi / 2);
        }
        return f;
    };
    return p;
}

}  // namespace

TEST_CASE("Das-Dennis directions") {
    const auto a = das_dennis(3, 2);
    CHECK(a.size() == 6);
    CHECK(std::find(a.begin(), a.end(), Vec{1, 0, 0}) != a.end());
    const auto b = das_dennis(2, 4);
    REQUIRE(b.size() == 5);
    const std::set<Vec> want{{1, 0}, {.75, .25}, {.5, .5}, {.25, .75}, {0, 1}};
    CHECK(std::set<Vec>(b.begin(), b.end()) == want);
    const auto c = das_dennis(3, 12);
    CHECK(c.size() == 91);
    for (const Vec& v : c) CHECK(std::abs(v[0] + v[1] + v[2] - 1.0) < 1e-12);
    CHECK(das_dennis(5, 3).size() == 35);
    CHECK_THROWS_AS(das_dennis(3, 0), ArgumentError);
}

TEST_CASE("reference directions for a non-Das-Dennis count") {
    const auto d = reference_directions(3, 5);
    CHECK(d.size() == 5);
    for (const Vec& v : d) CHECK(std::abs(v[0] + v[1] + v[2] - 1.0) < 1e-12);
    CHECK(std::set<Vec>(d.begin(), d.end()).size() == 5);
    CHECK(reference_directions(3, 91).size() == 91);
    CHECK(reference_directions(2, 5) == das_dennis(2, 4));
}

TEST_CASE("non-dominated sort small cases") {
    const auto one = non_dominated_sort({{0, 0}});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == std::vector<std::size_t>{0});
    const auto f = non_dominated_sort({{1, 2}, {2, 1}, {3, 3}});
    REQUIRE(f.size() == 2);
    CHECK(f[0] == std::vector<std::size_t>{0, 1});
    CHECK(f[1] == std::vector<std::size_t>{2});
    CHECK(non_dominated_sort({}).empty());
    CHECK_THROWS_AS(non_dominated_sort({{1, 2}, {1}}), ArgumentError);
}

TEST_CASE("non-dominated sort matches the brute-force oracle") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Vec> pts(200);
        for (Vec& p : pts) {
            // Coarse values create ties and duplicates.
            p = {std::floor(uniform01(rng()) * 8), std::floor(uniform01(rng()) * 8), std::floor(uniform01(rng()) * 8)};
            if (trial % 2) p = {uniform01(rng()), uniform01(rng()), uniform01(rng())};
        }
        const auto fast = non_dominated_sort(pts);
        const auto slow = brute_fronts(pts);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t k = 0; k < fast.size(); ++k)
            CHECK(std::set<std::size_t>(fast[k].begin(), fast[k].end()) == slow[k]);
    }
}

TEST_CASE("NSGA-III converges on DTLZ2") {
    Nsga3Options o;
    o.pop_size = 92;
    o.generations = 250;
    o.directions = das_dennis(3, 12);
    o.seed = 7;
    const Nsga3Result r = nsga3_run(dtlz2(), o);
    std::vector<Vec> objs;
    for (const Individual& i : r.population) objs.push_back(i.objectives);
    const auto fronts = non_dominated_sort(objs);
    double err = 0.0;
    for (std::size_t i : fronts[0]) {
        const Vec& f = objs[i];
        err += std::abs(std::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]) - 1.0);
    }
    err /= static_cast<double>(fronts[0].size());
    MESSAGE("DTLZ2 mean radial error " << err << " over " << fronts[0].size() << " points");
    CHECK(err < 0.05);
    // Spread: most directions end up with a member.
    std::set<int> niches;
    for (const Individual& i : r.population) niches.insert(i.niche);
    CHECK(niches.size() > 80);
    CHECK(r.evaluations == 92 * 251);
}

TEST_CASE("NSGA-III is seeded, elitist and respects bounds") {
    MooProblem p = dtlz2(5, 3);
    p.lower = {0.1, 0, 0, -1, 0.2};
    p.upper = {0.9, 1, 1, 2, 0.3};
    Nsga3Options o;
    o.pop_size = 24;
    o.generations = 40;
    o.directions = reference_directions(3, 10);
    o.seed = 3;
    Vec best(3, INFINITY);
    std::vector<Individual> archive;
    bool bounded_ok = true, elitist = true;
    Vec run_best(3, INFINITY);
    o.on_generation = [&](int, const std::vector<Individual>& pop) {
        for (const Individual& i : pop)
            for (int v = 0; v < 5; ++v) bounded_ok = bounded_ok && i.genes[v] >= p.lower[v] && i.genes[v] <= p.upper[v];
    };
    const Nsga3Result a = nsga3_run(p, o);
    const Nsga3Result b = nsga3_run(p, o);
    CHECK(bounded_ok);
    REQUIRE(a.archive.size() == b.archive.size());
    for (std::size_t k = 0; k < a.archive.size(); ++k) {
        CHECK(a.archive[k].genes == b.archive[k].genes);
        CHECK(a.archive[k].objectives == b.archive[k].objectives);
    }
    for (std::size_t i = 0; i < a.archive.size(); ++i)
        for (std::size_t j = 0; j < a.archive.size(); ++j) CHECK(!dominates(a.archive[i].objectives, a.archive[j].objectives));

    // Archive minima never worsen as the run is extended.
    for (int gens : {5, 10, 20, 40}) {
        o.generations = gens;
        o.on_generation = nullptr;
        const Nsga3Result r = nsga3_run(p, o);
        for (int k = 0; k < 3; ++k) {
            double m = INFINITY;
            for (const Individual& i : r.archive) m = std::min(m, i.objectives[k]);
            elitist = elitist && m <= run_best[k];
            run_best[k] = m;
        }
    }
    CHECK(elitist);
}

TEST_CASE("constant objectives keep everyone in front zero") {
    MooProblem p;
    p.n_vars = 2;
    p.n_objectives = 3;
    p.lower = {0, 0};
    p.upper = {1, 1};
    p.evaluate = [](const Vec&) { return Vec{1.0, 1.0, 1.0}; };
    Nsga3Options o;
    o.pop_size = 30;
    o.generations = 5;
    o.directions = das_dennis(3, 2);
    const Nsga3Result r = nsga3_run(p, o);
    std::vector<int> count(6, 0);
    for (const Individual& i : r.population) {
        CHECK(i.rank == 0);
        ++count[i.niche];
    }
    CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
    CHECK(r.archive.size() == 1);
}

TEST_CASE("evaluation failures carry the genes") {
    MooProblem p = dtlz2(3, 2);
    p.evaluate = [](const Vec& x) -> Vec {
        if (x[0] > 0.5) throw RangeError("bad point");
        return {x[0], 1 - x[0]};
    };
    Nsga3Options o;
    o.pop_size = 10;
    o.generations = 3;
    o.directions = das_dennis(2, 4);
    try {
        nsga3_run(p, o);
        FAIL("expected an evaluation error");
    } catch (const EvaluationError& e) {
        CHECK(e.genes().size() == 3);
        CHECK(e.genes()[0] > 0.5);
    }
    o.pop_size = 3;
    CHECK_THROWS_AS(nsga3_run(dtlz2(3, 2), o), ArgumentError);
}

TEST_CASE("population dump is deterministic CSV") {
    const std::vector<Individual> pop{{{0.5, 0.25}, {1.0, 2.0}, 0, 3}};
    CHECK(population_csv(pop, 4, true) == "generation,index,x0,x1,f0,f1,rank,niche\n4,0,0.5,0.25,1,2,0,3\n");
}

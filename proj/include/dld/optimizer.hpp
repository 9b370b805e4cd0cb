#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace dld {

using Vec = std::vector<double>;

/// Box-bounded minimisation problem; `evaluate` must be pure.
struct MooProblem {
    int n_vars = 0;
    Vec lower, upper;
    int n_objectives = 0;
    std::function<Vec(const Vec&)> evaluate;

    void validate() const;
};

struct Individual {
    Vec genes;
    Vec objectives;
    int rank = 0;   ///< non-domination front index
    int niche = -1; ///< associated reference direction
};

/// a dominates b (minimisation): no worse everywhere, strictly better somewhere.
bool dominates(const Vec& a, const Vec& b);

/// Simplex-lattice directions; C(partitions + n_obj - 1, n_obj - 1) of them.
std::vector<Vec> das_dennis(int n_obj, int partitions);

/// Fronts of indices, front 0 non-dominated (fast non-dominated sort).
std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<Vec>& objectives);

/// Greedy max-min subset of `count` points, starting from index 0.
std::vector<Vec> farthest_point_subsample(const std::vector<Vec>& points, std::size_t count);

/// `count` directions: a Das-Dennis set when count is a Das-Dennis number,
/// otherwise a farthest-point subsample of the smallest larger Das-Dennis set.
std::vector<Vec> reference_directions(int n_obj, std::size_t count);

struct Nsga3Options {
    int pop_size = 92;
    int generations = 250;
    std::vector<Vec> directions;
    std::uint64_t seed = 1;
    double crossover_prob = 0.9;
    double crossover_eta = 15.0;
    double mutation_eta = 20.0;
    double mutation_prob = -1.0;  ///< per variable; negative means 1 / n_vars
    int jobs = 1;                 ///< evaluation workers
    std::filesystem::path archive_csv;  ///< optional per-generation population dump
    std::function<void(int generation, const std::vector<Individual>& population)> on_generation;
};

struct Nsga3Result {
    std::vector<Individual> population;
    /// Mutually non-dominated points among everything evaluated.
    std::vector<Individual> archive;
    long evaluations = 0;
};

Nsga3Result nsga3_run(const MooProblem& problem, const Nsga3Options& opts);

/// Header plus one row per individual (17 significant digits).
std::string population_csv(const std::vector<Individual>& pop, int generation, bool header);

}  // namespace dld

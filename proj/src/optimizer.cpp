#include "dld/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "dld/errors.hpp"
#include "dld/io.hpp"
#include "dld/parallel.hpp"
#include "dld/rng.hpp"

namespace dld {

void MooProblem::validate() const {
    if (n_vars < 1) throw ArgumentError("problem needs at least one variable");
    if (n_objectives < 1) throw ArgumentError("problem needs at least one objective");
    if (lower.size() != static_cast<std::size_t>(n_vars) || upper.size() != static_cast<std::size_t>(n_vars)) {
        throw ArgumentError("bounds do not match the variable count");
    }
    for (int i = 0; i < n_vars; ++i)
        if (!(lower[i] <= upper[i])) throw ArgumentError("lower bound exceeds upper bound");
    if (!evaluate) throw ArgumentError("problem has no evaluation function");
}

bool dominates(const Vec& a, const Vec& b) {
    bool better = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] > b[k]) return false;
        if (a[k] < b[k]) better = true;
    }
    return better;
}

namespace {

void das_dennis_rec(int n_obj, int left, int depth, Vec& cur, int partitions, std::vector<Vec>& out) {
    if (depth == n_obj - 1) {
        cur[depth] = static_cast<double>(left) / partitions;
        out.push_back(cur);
        return;
    }
    for (int k = left; k >= 0; --k) {
        cur[depth] = static_cast<double>(k) / partitions;
        das_dennis_rec(n_obj, left - k, depth + 1, cur, partitions, out);
    }
}

std::size_t binomial(std::size_t n, std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::vector<Vec> das_dennis(int n_obj, int partitions) {
    if (n_obj < 1) throw ArgumentError("need at least one objective");
    if (partitions < 1) throw ArgumentError("partitions must be at least 1");
    std::vector<Vec> out;
    Vec cur(n_obj);
    das_dennis_rec(n_obj, partitions, 0, cur, partitions, out);
    return out;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<Vec>& objectives) {
    const std::size_t n = objectives.size();
    for (const Vec& v : objectives)
        if (v.size() != objectives.front().size()) throw ArgumentError("objective vectors differ in length");
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<int> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> cur;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(objectives[i], objectives[j])) {
                dominated[i].push_back(j);
                ++count[j];
            } else if (dominates(objectives[j], objectives[i])) {
                dominated[j].push_back(i);
                ++count[i];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (count[i] == 0) cur.push_back(i);
    while (!cur.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : cur)
            for (std::size_t j : dominated[i])
                if (--count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(cur));
        cur = std::move(next);
    }
    return fronts;
}

std::vector<Vec> farthest_point_subsample(const std::vector<Vec>& points, std::size_t count) {
    if (count > points.size()) throw ArgumentError("cannot subsample more points than available");
    std::vector<Vec> out;
    if (count == 0) return out;
    std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
    std::vector<bool> taken(points.size(), false);
    std::size_t pick = 0;
    for (std::size_t s = 0; s < count; ++s) {
        taken[pick] = true;
        out.push_back(points[pick]);
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (taken[i]) continue;
            double d = 0.0;
            for (std::size_t k = 0; k < points[i].size(); ++k) d += (points[i][k] - points[pick][k]) * (points[i][k] - points[pick][k]);
            dist[i] = std::min(dist[i], d);
            if (dist[i] > best_d) {
                best_d = dist[i];
                best = i;
            }
        }
        pick = best;
    }
    return out;
}

std::vector<Vec> reference_directions(int n_obj, std::size_t count) {
    if (count < 1) throw ArgumentError("need at least one reference direction");
    if (n_obj == 1) return {Vec{1.0}};
    for (int p = 1;; ++p) {
        const std::size_t h = binomial(static_cast<std::size_t>(p + n_obj - 1), static_cast<std::size_t>(n_obj - 1));
        if (h == count) return das_dennis(n_obj, p);
        if (h > count) return farthest_point_subsample(das_dennis(n_obj, p), count);
    }
}

// ---------------------------------------------------------------------------

namespace {

class Variation {
public:
    Variation(const MooProblem& pb, const Nsga3Options& o, std::mt19937_64& rng)
        : pb_(pb), o_(o), rng_(rng), pm_(o.mutation_prob < 0.0 ? 1.0 / pb.n_vars : o.mutation_prob) {}

    double u() { return uniform01(rng_()); }

    void crossover(Vec& a, Vec& b) {
        if (u() > o_.crossover_prob) return;
        const double eta = o_.crossover_eta;
        for (int i = 0; i < pb_.n_vars; ++i) {
            if (u() > 0.5) continue;
            if (std::abs(a[i] - b[i]) <= 1e-14) continue;
            const double lo = pb_.lower[i], hi = pb_.upper[i];
            const double y1 = std::min(a[i], b[i]), y2 = std::max(a[i], b[i]);
            const double r = u();
            auto betaq = [&](double beta) {
                const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
                return r <= 1.0 / alpha ? std::pow(r * alpha, 1.0 / (eta + 1.0))
                                        : std::pow(1.0 / (2.0 - r * alpha), 1.0 / (eta + 1.0));
            };
            double c1 = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * (y1 - lo) / (y2 - y1)) * (y2 - y1));
            double c2 = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (hi - y2) / (y2 - y1)) * (y2 - y1));
            c1 = std::clamp(c1, lo, hi);
            c2 = std::clamp(c2, lo, hi);
            if (u() < 0.5) std::swap(c1, c2);
            a[i] = c1;
            b[i] = c2;
        }
    }

    void mutate(Vec& x) {
        const double eta = o_.mutation_eta;
        for (int i = 0; i < pb_.n_vars; ++i) {
            if (u() >= pm_) continue;
            const double lo = pb_.lower[i], hi = pb_.upper[i];
            if (hi <= lo) continue;
            const double d1 = (x[i] - lo) / (hi - lo), d2 = (hi - x[i]) / (hi - lo);
            const double p = 1.0 / (eta + 1.0);
            const double r = u();
            double dq;
            if (r < 0.5) {
                const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
                dq = std::pow(val, p) - 1.0;
            } else {
                const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
                dq = 1.0 - std::pow(val, p);
            }
            x[i] = std::clamp(x[i] + dq * (hi - lo), lo, hi);
        }
    }

private:
    const MooProblem& pb_;
    const Nsga3Options& o_;
    std::mt19937_64& rng_;
    double pm_;
};

void evaluate_all(const MooProblem& pb, std::vector<Individual>& pop, int jobs) {
    parallel_for(pop.size(), worker_count(jobs, pop.size()), [&](std::size_t i) {
        Individual& ind = pop[i];
        try {
            ind.objectives = pb.evaluate(ind.genes);
        } catch (const EvaluationError&) {
            throw;
        } catch (const std::exception& e) {
            throw EvaluationError(std::string("evaluation failed: ") + e.what(), ind.genes);
        }
        if (ind.objectives.size() != static_cast<std::size_t>(pb.n_objectives)) {
            throw EvaluationError("evaluation returned the wrong number of objectives", ind.genes);
        }
        for (double v : ind.objectives)
            if (!std::isfinite(v)) throw EvaluationError("evaluation returned a non-finite objective", ind.genes);
    });
}

/// Solves A x = b (row-major, n x n) with partial pivoting; false when singular.
bool solve_linear(std::vector<double> a, Vec& b, int n) {
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
        if (std::abs(a[piv * n + c]) < 1e-12) return false;
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
            std::swap(b[c], b[piv]);
        }
        for (int r = c + 1; r < n; ++r) {
            const double m = a[r * n + c] / a[c * n + c];
            for (int k = c; k < n; ++k) a[r * n + k] -= m * a[c * n + k];
            b[r] -= m * b[c];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < n; ++k) s -= a[r * n + k] * b[k];
        b[r] = s / a[r * n + r];
    }
    return true;
}

struct Normalizer {
    Vec ideal, worst;
    std::vector<Vec> extremes;

    /// Returns per-objective denominators (nadir - ideal) for the merged population.
    Vec update(const std::vector<Individual>& pop, const std::vector<std::size_t>& front0) {
        const std::size_t m = pop.front().objectives.size();
        if (ideal.empty()) {
            ideal.assign(m, std::numeric_limits<double>::infinity());
            worst.assign(m, -std::numeric_limits<double>::infinity());
        }
        for (const Individual& p : pop)
            for (std::size_t k = 0; k < m; ++k) {
                ideal[k] = std::min(ideal[k], p.objectives[k]);
                worst[k] = std::max(worst[k], p.objectives[k]);
            }
        // Extreme points by the achievement scalarising function, kept across generations.
        std::vector<Vec> cand = extremes;
        for (const Individual& p : pop) cand.push_back(p.objectives);
        std::vector<Vec> ext(m);
        for (std::size_t j = 0; j < m; ++j) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec& c : cand) {
                double asf = -std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < m; ++k) asf = std::max(asf, (c[k] - ideal[k]) / (k == j ? 1.0 : 1e-6));
                if (asf < best) {
                    best = asf;
                    ext[j] = c;
                }
            }
        }
        extremes = ext;

        Vec front_worst(m, -std::numeric_limits<double>::infinity());
        for (std::size_t i : front0)
            for (std::size_t k = 0; k < m; ++k) front_worst[k] = std::max(front_worst[k], pop[i].objectives[k]);

        Vec nadir(m);
        std::vector<double> a(m * m);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < m; ++k) a[j * m + k] = ext[j][k] - ideal[k];
        Vec b(m, 1.0);
        bool ok = solve_linear(a, b, static_cast<int>(m));
        if (ok) {
            for (std::size_t k = 0; k < m; ++k) {
                const double icpt = 1.0 / b[k];
                if (!std::isfinite(icpt) || icpt <= 1e-6) {
                    ok = false;
                    break;
                }
                nadir[k] = ideal[k] + icpt;
            }
        }
        if (!ok) nadir = front_worst;
        Vec denom(m);
        for (std::size_t k = 0; k < m; ++k) {
            if (nadir[k] - ideal[k] <= 1e-6) nadir[k] = worst[k];
            denom[k] = nadir[k] - ideal[k];
            if (!(denom[k] > 1e-12)) denom[k] = 1.0;
        }
        return denom;
    }
};

struct Association {
    int niche = -1;
    double distance = 0.0;
};

/// Keeps `target` individuals from `pop` using fronts plus reference-direction niching.
std::vector<Individual> survive(std::vector<Individual> pop, std::size_t target, const std::vector<Vec>& dirs,
                                Normalizer& norm, std::mt19937_64& rng) {
    std::vector<Vec> objs;
    objs.reserve(pop.size());
    for (const Individual& p : pop) objs.push_back(p.objectives);
    const auto fronts = non_dominated_sort(objs);
    for (std::size_t f = 0; f < fronts.size(); ++f)
        for (std::size_t i : fronts[f]) pop[i].rank = static_cast<int>(f);

    std::vector<std::size_t> chosen;
    std::size_t last = 0;
    for (; last < fronts.size(); ++last) {
        if (chosen.size() + fronts[last].size() > target) break;
        chosen.insert(chosen.end(), fronts[last].begin(), fronts[last].end());
        if (chosen.size() == target) {
            ++last;
            break;
        }
    }
    std::vector<std::size_t> considered = chosen;
    const bool need_niching = chosen.size() < target;
    if (need_niching) considered.insert(considered.end(), fronts[last].begin(), fronts[last].end());

    std::vector<Individual> sub;
    for (std::size_t i : considered) sub.push_back(pop[i]);
    std::vector<std::size_t> f0;
    for (std::size_t i = 0; i < sub.size(); ++i)
        if (sub[i].rank == 0) f0.push_back(i);
    if (f0.empty())
        for (std::size_t i = 0; i < sub.size(); ++i) f0.push_back(i);
    const Vec denom = norm.update(sub, f0);

    const std::size_t m = denom.size();
    std::vector<Vec> unit(dirs.size());
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        double n2 = 0.0;
        for (double x : dirs[d]) n2 += x * x;
        unit[d] = dirs[d];
        for (double& x : unit[d]) x /= std::sqrt(n2);
    }
    std::vector<Association> assoc(sub.size());
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < sub.size(); ++i) {
        Vec z(m);
        double zz = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            z[k] = (sub[i].objectives[k] - norm.ideal[k]) / denom[k];
            zz += z[k] * z[k];
        }
        std::vector<double> dist(dirs.size());
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            double proj = 0.0;
            for (std::size_t k = 0; k < m; ++k) proj += z[k] * unit[d][k];
            dist[d] = std::sqrt(std::max(0.0, zz - proj * proj));
            best = std::min(best, dist[d]);
        }
        ties.clear();
        for (std::size_t d = 0; d < dirs.size(); ++d)
            if (dist[d] <= best + 1e-12) ties.push_back(d);
        const std::size_t pick = ties.size() == 1 ? ties[0] : ties[bounded(rng, ties.size())];
        assoc[i] = {static_cast<int>(pick), dist[pick]};
        sub[i].niche = assoc[i].niche;
    }

    std::vector<Individual> out;
    for (std::size_t i = 0; i < chosen.size(); ++i) out.push_back(sub[i]);
    if (!need_niching) return out;

    std::vector<int> count(dirs.size(), 0);
    for (std::size_t i = 0; i < chosen.size(); ++i) ++count[assoc[i].niche];
    std::vector<std::vector<std::size_t>> members(dirs.size());
    for (std::size_t i = chosen.size(); i < sub.size(); ++i) members[assoc[i].niche].push_back(i);
    std::vector<bool> open(dirs.size(), true);
    std::vector<std::size_t> cands;
    while (out.size() < target) {
        int lowest = std::numeric_limits<int>::max();
        for (std::size_t d = 0; d < dirs.size(); ++d)
            if (open[d]) lowest = std::min(lowest, count[d]);
        cands.clear();
        for (std::size_t d = 0; d < dirs.size(); ++d)
            if (open[d] && count[d] == lowest) cands.push_back(d);
        const std::size_t d = cands[bounded(rng, cands.size())];
        auto& mem = members[d];
        if (mem.empty()) {
            open[d] = false;
            continue;
        }
        std::size_t pos = 0;
        if (count[d] == 0) {
            for (std::size_t k = 1; k < mem.size(); ++k)
                if (assoc[mem[k]].distance < assoc[mem[pos]].distance) pos = k;
        } else {
            pos = bounded(rng, mem.size());
        }
        out.push_back(sub[mem[pos]]);
        mem.erase(mem.begin() + static_cast<std::ptrdiff_t>(pos));
        ++count[d];
    }
    return out;
}

void archive_insert(std::vector<Individual>& archive, const Individual& ind) {
    for (const Individual& a : archive)
        if (dominates(a.objectives, ind.objectives) || a.objectives == ind.objectives) return;
    std::erase_if(archive, [&](const Individual& a) { return dominates(ind.objectives, a.objectives); });
    archive.push_back(ind);
}

}  // namespace

Nsga3Result nsga3_run(const MooProblem& problem, const Nsga3Options& opts) {
    problem.validate();
    if (opts.directions.empty()) throw ArgumentError("no reference directions given");
    for (const Vec& d : opts.directions)
        if (d.size() != static_cast<std::size_t>(problem.n_objectives)) {
            throw ArgumentError("reference directions do not match the objective count");
        }
    if (opts.pop_size < static_cast<int>(opts.directions.size())) {
        throw ArgumentError("population must be at least the number of reference directions");
    }
    if (opts.generations < 0) throw ArgumentError("generation count must be non-negative");

    std::mt19937_64 rng(opts.seed);
    Variation var(problem, opts, rng);
    Normalizer norm;
    Nsga3Result res;
    const auto pop_size = static_cast<std::size_t>(opts.pop_size);

    std::vector<Individual> pop(pop_size);
    for (Individual& ind : pop) {
        ind.genes.resize(problem.n_vars);
        for (int i = 0; i < problem.n_vars; ++i)
            ind.genes[i] = problem.lower[i] + var.u() * (problem.upper[i] - problem.lower[i]);
    }
    evaluate_all(problem, pop, opts.jobs);
    res.evaluations += static_cast<long>(pop.size());
    for (const Individual& ind : pop) archive_insert(res.archive, ind);
    pop = survive(std::move(pop), pop_size, opts.directions, norm, rng);

    std::string dump;
    const bool dumping = !opts.archive_csv.empty();
    if (dumping) dump = population_csv(pop, 0, true);
    if (opts.on_generation) opts.on_generation(0, pop);

    for (int gen = 1; gen <= opts.generations; ++gen) {
        std::vector<Individual> off;
        off.reserve(pop_size + 1);
        while (off.size() < pop_size) {
            Individual a = pop[bounded(rng, pop.size())];
            Individual b = pop[bounded(rng, pop.size())];
            var.crossover(a.genes, b.genes);
            var.mutate(a.genes);
            var.mutate(b.genes);
            off.push_back(std::move(a));
            if (off.size() < pop_size) off.push_back(std::move(b));
        }
        evaluate_all(problem, off, opts.jobs);
        res.evaluations += static_cast<long>(off.size());
        for (const Individual& ind : off) archive_insert(res.archive, ind);
        pop.insert(pop.end(), std::make_move_iterator(off.begin()), std::make_move_iterator(off.end()));
        pop = survive(std::move(pop), pop_size, opts.directions, norm, rng);
        if (dumping) dump += population_csv(pop, gen, false);
        if (opts.on_generation) opts.on_generation(gen, pop);
    }
    if (dumping) write_text(opts.archive_csv, dump);

    std::vector<Vec> objs;
    for (const Individual& a : res.archive) objs.push_back(a.objectives);
    if (!objs.empty())
        for (Individual& a : res.archive) a.rank = 0;
    res.population = std::move(pop);
    return res;
}

std::string population_csv(const std::vector<Individual>& pop, int generation, bool header) {
    std::ostringstream s;
    if (pop.empty()) return header ? "generation,index,rank,niche\n" : "";
    const std::size_t nv = pop.front().genes.size(), no = pop.front().objectives.size();
    if (header) {
        s << "generation,index";
        for (std::size_t i = 0; i < nv; ++i) s << ",x" << i;
        for (std::size_t i = 0; i < no; ++i) s << ",f" << i;
        s << ",rank,niche\n";
    }
    for (std::size_t k = 0; k < pop.size(); ++k) {
        s << generation << ',' << k;
        for (double x : pop[k].genes) s << ',' << fmt17(x);
        for (double x : pop[k].objectives) s << ',' << fmt17(x);
        s << ',' << pop[k].rank << ',' << pop[k].niche << '\n';
    }
    return s.str();
}

}  // namespace dld

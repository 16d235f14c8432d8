#include "daplan/exact.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include "daplan/audit.hpp"
#include "daplan/parallel.hpp"
#include "daplan/placement.hpp"

namespace daplan {

namespace {

using Mask = std::vector<uint64_t>;

bool covers_all(const Mask& m, const Mask& want) {
    for (size_t w = 0; w < want.size(); ++w)
        if ((m[w] & want[w]) != want[w]) return false;
    return true;
}

bool subset_feasible(const Scenario& s, const std::vector<int>& subset,
                     const std::vector<int>& coverable) {
    try {
        const RoutingForest forest = phase2_routes(s, subset);
        for (int i : coverable)
            if (!forest.routed(i)) return false;
        const AuditResult audit = audit_reliability(s, forest, 1);
        for (int i : coverable)
            if (audit.min_path_r[static_cast<size_t>(i)] < s.rho())
                return false;
        return check_constraints(s, forest, audit).empty();
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

ExactResult exact_min_daps(const Scenario& s, const ExactLimits& limits,
                           int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    };

    std::vector<int> poles, sms;
    for (size_t i = 0; i < s.nodes.size(); ++i) {
        if (s.nodes[i].kind == NodeKind::Pole)
            poles.push_back(static_cast<int>(i));
        else
            sms.push_back(static_cast<int>(i));
    }
    if (static_cast<int>(poles.size()) > limits.max_poles)
        throw std::invalid_argument(
            "exact_min_daps: " + std::to_string(poles.size()) +
            " poles exceed the limit of " + std::to_string(limits.max_poles));
    if (static_cast<int>(sms.size()) > limits.max_sms)
        throw std::invalid_argument(
            "exact_min_daps: " + std::to_string(sms.size()) +
            " SMs exceed the limit of " + std::to_string(limits.max_sms));

    const CoverageSets cov = build_coverage(s, threads);

    // Dense bit position per coverable SM; SMs no pole can reach are
    // excluded from the requirement, mirroring the planner.
    std::vector<int> bit_of(s.nodes.size(), -1);
    std::vector<int> coverable;
    for (int p : poles)
        for (int i : cov.pole_cover[static_cast<size_t>(p)])
            if (bit_of[static_cast<size_t>(i)] < 0) {
                bit_of[static_cast<size_t>(i)] =
                    static_cast<int>(coverable.size());
                coverable.push_back(i);
            }
    std::sort(coverable.begin(), coverable.end());
    for (size_t b = 0; b < coverable.size(); ++b)
        bit_of[static_cast<size_t>(coverable[b])] = static_cast<int>(b);

    ExactResult res;
    if (coverable.empty()) {
        res.optimal_count = 0;
        res.status = "optimal";
        res.wall_s = elapsed();
        return res;
    }

    const size_t words = (coverable.size() + 63) / 64;
    Mask want(words, 0);
    for (size_t b = 0; b < coverable.size(); ++b)
        want[b / 64] |= uint64_t{1} << (b % 64);
    std::vector<Mask> pole_mask(poles.size(), Mask(words, 0));
    for (size_t pi = 0; pi < poles.size(); ++pi)
        for (int i : cov.pole_cover[static_cast<size_t>(poles[pi])]) {
            const int b = bit_of[static_cast<size_t>(i)];
            pole_mask[pi][static_cast<size_t>(b) / 64] |=
                uint64_t{1} << (b % 64);
        }

    const int n = static_cast<int>(poles.size());
    for (int k = 1; k <= n; ++k) {
        // Lexicographic k-combinations of pole positions.
        std::vector<int> comb(static_cast<size_t>(k));
        std::iota(comb.begin(), comb.end(), 0);
        std::vector<std::vector<int>> candidates;
        bool more = true;
        while (more) {
            ++res.explored;
            Mask u(words, 0);
            for (int pi : comb)
                for (size_t w = 0; w < words; ++w)
                    u[w] |= pole_mask[static_cast<size_t>(pi)][w];
            if (covers_all(u, want)) {
                std::vector<int> subset(static_cast<size_t>(k));
                for (int j = 0; j < k; ++j)
                    subset[static_cast<size_t>(j)] =
                        poles[static_cast<size_t>(comb[static_cast<size_t>(j)])];
                candidates.push_back(std::move(subset));
            }
            // advance
            int pos = k - 1;
            while (pos >= 0 && comb[static_cast<size_t>(pos)] == n - k + pos)
                --pos;
            if (pos < 0) {
                more = false;
            } else {
                ++comb[static_cast<size_t>(pos)];
                for (int j = pos + 1; j < k; ++j)
                    comb[static_cast<size_t>(j)] =
                        comb[static_cast<size_t>(j - 1)] + 1;
            }
        }

        // Feasibility checks are independent; batches keep the timeout
        // responsive and the first-in-order winner deterministic.
        const size_t batch = 64;
        for (size_t off = 0; off < candidates.size(); off += batch) {
            if (elapsed() > limits.timeout_s) {
                res.optimal_count = k;  // proven lower bound
                res.status = "incomplete";
                res.wall_s = elapsed();
                return res;
            }
            const size_t count = std::min(batch, candidates.size() - off);
            std::vector<char> ok(count, 0);
            parallel_for(count, threads, [&](size_t j) {
                ok[j] = subset_feasible(s, candidates[off + j], coverable);
            });
            for (size_t j = 0; j < count; ++j) {
                if (!ok[j]) continue;
                res.optimal_count = k;
                res.subset = candidates[off + j];
                res.status = "optimal";
                res.wall_s = elapsed();
                return res;
            }
        }
        if (elapsed() > limits.timeout_s) {
            res.optimal_count = k + 1 <= n ? k + 1 : -1;
            res.status = "incomplete";
            res.wall_s = elapsed();
            return res;
        }
    }

    res.status = "infeasible";
    res.wall_s = elapsed();
    return res;
}

std::vector<double> pb_oracle(const std::vector<double>& p, PbMode mode) {
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument(
                "pb_oracle: probability outside [0,1]");
    const size_t n = p.size();
    if (mode == PbMode::Enumerate) {
        if (n > 25)
            throw std::invalid_argument(
                "pb_oracle: enumeration limited to 25 factors");
        std::vector<double> pmf(n + 1, 0.0);
        const uint64_t total = uint64_t{1} << n;
        for (uint64_t outcome = 0; outcome < total; ++outcome) {
            double pr = 1.0;
            size_t ones = 0;
            for (size_t i = 0; i < n; ++i) {
                if (outcome >> i & 1) {
                    pr *= p[i];
                    ++ones;
                } else {
                    pr *= 1.0 - p[i];
                }
            }
            pmf[ones] += pr;
        }
        return pmf;
    }
    std::vector<double> pmf{1.0};
    for (double v : p) {
        std::vector<double> next(pmf.size() + 1, 0.0);
        for (size_t k = 0; k < pmf.size(); ++k) {
            next[k] += pmf[k] * (1.0 - v);
            next[k + 1] += pmf[k] * v;
        }
        pmf = std::move(next);
    }
    return pmf;
}

}  // namespace daplan

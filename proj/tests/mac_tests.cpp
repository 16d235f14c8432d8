#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "daplan/exact.hpp"
#include "daplan/mac.hpp"
#include "doctest.h"

using namespace daplan;

namespace {

MacParams tiny_mac(int w0, int max_stage, int retries) {
    MacParams mac;
    mac.max_backoff_stage = max_stage;
    mac.max_retries = retries;
    mac.backoff_windows.assign(static_cast<size_t>(max_stage) + 1, w0);
    return mac;
}

double linf_residual(const std::vector<std::vector<double>>& t,
                     const std::vector<double>& pi) {
    double worst = 0.0;
    for (size_t j = 0; j < pi.size(); ++j) {
        double col = 0.0;
        for (size_t i = 0; i < pi.size(); ++i) col += pi[i] * t[i][j];
        worst = std::max(worst, std::abs(col - pi[j]));
    }
    return worst;
}

}  // namespace

TEST_SUITE("mac") {

TEST_CASE("slot budget arithmetic") {
    MacParams mac;
    mac.frame_duration_s = 1.0;
    mac.cap_slots = 10;
    mac.cfp_slots = 6;

    const SlotBudget nc = slot_budget(5.0, TrafficCategory::NonCritical, mac, 4);
    CHECK(nc.total_slots == doctest::Approx(50.0));
    CHECK(nc.per_hop == 12);
    CHECK(nc.feasible());

    const SlotBudget one_hop =
        slot_budget(5.0, TrafficCategory::NonCritical, mac, 1);
    CHECK(one_hop.per_hop == 50);

    MacParams slow;
    slow.frame_duration_s = 2.0;
    slow.cfp_slots = 1;
    const SlotBudget mc = slot_budget(1.0, TrafficCategory::MissionCritical,
                                      slow, 1);
    CHECK(mc.per_hop == 0);
    CHECK_FALSE(mc.feasible());
}

TEST_CASE("poisson binomial closed form on pinned examples") {
    CHECK(poisson_binomial_pmf({}).size() == 1);
    CHECK(poisson_binomial_pmf({})[0] == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> half = poisson_binomial_pmf({0.5, 0.5});
    REQUIRE(half.size() == 3);
    CHECK(half[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(half[1] == doctest::Approx(0.50).epsilon(1e-12));
    CHECK(half[2] == doctest::Approx(0.25).epsilon(1e-12));

    const std::vector<double> mixed = poisson_binomial_pmf({0.1, 0.2, 0.3});
    CHECK(mixed[0] == doctest::Approx(0.504).epsilon(1e-12));
}

TEST_CASE("poisson binomial matches the convolution oracle") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> size(0, 25);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(static_cast<size_t>(size(rng)));
        for (double& v : p) v = prob(rng);
        const std::vector<double> dft = poisson_binomial_pmf(p);
        const std::vector<double> dp = pb_oracle(p, PbMode::Dp);
        REQUIRE(dft.size() == dp.size());
        double sum = 0.0;
        for (size_t i = 0; i < dft.size(); ++i) {
            CHECK(std::abs(dft[i] - dp[i]) < 1e-9);
            CHECK(dft[i] >= 0.0);
            sum += dft[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("markov chain state indexing") {
    MacParams mac;  // M = 4, N_ARQ = 4
    CHECK(csma_state_count(mac) == 21);
    CHECK(csma_state_index(1, 0, 4) == 1);
    CHECK(csma_state_index(1, 4, 4) == 5);
    CHECK(csma_state_index(2, 0, 4) == 6);
    CHECK(csma_state_index(4, 4, 4) == 20);
}

TEST_CASE("stationary distribution closed forms") {
    // Two-state flip chain: pi = (b, a) / (a + b).
    const double a = 0.3, b = 0.1;
    const std::vector<std::vector<double>> flip = {{1.0 - a, a}, {b, 1.0 - b}};
    const std::vector<double> pi = stationary_distribution(flip);
    CHECK(pi[0] == doctest::Approx(b / (a + b)).epsilon(1e-12));
    CHECK(pi[1] == doctest::Approx(a / (a + b)).epsilon(1e-12));

    // Absorbing state 0 drains everything.
    const std::vector<std::vector<double>> absorbing = {
        {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    const std::vector<double> point = stationary_distribution(absorbing);
    CHECK(point[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(point[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("stationary distribution satisfies the definition on random chains") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const size_t n = 2 + static_cast<size_t>(trial % 7);
        std::vector<std::vector<double>> t(n, std::vector<double>(n));
        for (auto& row : t) {
            double sum = 0.0;
            for (double& v : row) {
                v = u(rng);
                sum += v;
            }
            for (double& v : row) v /= sum;
        }
        const std::vector<double> pi = stationary_distribution(t);
        double total = 0.0;
        for (double v : pi) {
            CHECK(v >= -1e-15);
            total += v;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
        CHECK(linf_residual(t, pi) < 1e-10);
    }
}

TEST_CASE("structural chain solution equals the generic solver") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const MacParams mac = tiny_mac(2 + trial % 7, trial % 5, 1 + trial % 4);
        const double p = 0.05 + 0.9 * u(rng);
        const double alpha = 0.05 + 0.9 * u(rng);
        const double chi = 0.9 * u(rng);
        const std::vector<double> direct = csma_stationary(p, alpha, chi, mac);
        const std::vector<double> solved =
            stationary_distribution(csma_transition_matrix(p, alpha, chi, mac));
        REQUIRE(direct.size() == solved.size());
        for (size_t i = 0; i < direct.size(); ++i)
            CHECK(std::abs(direct[i] - solved[i]) < 1e-12);
    }
}

TEST_CASE("idle node sits in the idle state") {
    const MacParams mac = tiny_mac(8, 2, 3);
    const std::vector<double> pi = csma_stationary(0.0, 0.7, 0.1, mac);
    CHECK(pi[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(csma_xi(pi, mac) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fixed point on an idle network") {
    const MacParams mac = tiny_mac(8, 2, 3);
    const std::vector<double> p = {0.0, 0.0, 0.0};
    const std::vector<double> eps = {0.0, 0.0, 0.0};
    const std::vector<std::vector<int>> comp = {{1, 2}, {0, 2}, {0, 1}};
    const CsmaFixedPoint fp = csma_fixed_point(p, eps, comp, mac);
    REQUIRE(fp.converged);
    for (const CsmaNodeState& st : fp.nodes) {
        CHECK(st.xi == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(st.beta1 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(st.beta2 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(st.alpha == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fixed point with no competitors reduces to the link per") {
    const MacParams mac = tiny_mac(8, 2, 3);
    const CsmaFixedPoint fp = csma_fixed_point({0.4}, {0.0}, {{}}, mac);
    REQUIRE(fp.converged);
    CHECK(fp.nodes[0].chi == doctest::Approx(0.0).epsilon(1e-12));

    const CsmaFixedPoint lossy = csma_fixed_point({0.4}, {0.25}, {{}}, mac);
    CHECK(lossy.nodes[0].chi == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("fixed point is symmetric for symmetric competitors") {
    const MacParams mac = tiny_mac(16, 3, 4);
    const std::vector<double> p = {0.5, 0.5};
    const std::vector<double> eps = {0.1, 0.1};
    const std::vector<std::vector<int>> comp = {{1}, {0}};
    const CsmaFixedPoint fp = csma_fixed_point(p, eps, comp, mac);
    REQUIRE(fp.converged);
    CHECK(fp.residual < 1e-9);
    CHECK(std::abs(fp.nodes[0].xi - fp.nodes[1].xi) < 1e-9);
    CHECK(fp.nodes[0].xi > 0.0);
}

TEST_CASE("recomputing the coupled quantities from a converged point is stable") {
    const MacParams mac = tiny_mac(16, 2, 3);
    const std::vector<double> p = {0.6, 0.3, 0.45};
    const std::vector<double> eps = {0.05, 0.15, 0.1};
    const std::vector<std::vector<int>> comp = {{1, 2}, {0, 2}, {0, 1}};
    const CsmaFixedPoint fp = csma_fixed_point(p, eps, comp, mac);
    REQUIRE(fp.converged);

    for (size_t i = 0; i < fp.nodes.size(); ++i) {
        const CsmaNodeState& st = fp.nodes[i];
        double idle_prod = 1.0;
        for (int y : comp[i]) idle_prod *= 1.0 - fp.nodes[static_cast<size_t>(y)].xi;
        const double busy = 1.0 - idle_prod;
        const double beta2 = busy / (1.0 + busy);
        const double beta1 = (1.0 - beta2) * busy / (1.0 + (1.0 - beta2) * busy);
        CHECK(std::abs(st.beta2 - beta2) < 1e-9);
        CHECK(std::abs(st.beta1 - beta1) < 1e-9);
        CHECK(std::abs(st.alpha - (1.0 - beta1) * (1.0 - beta2)) < 1e-9);
        CHECK(std::abs(st.chi - (1.0 - (1.0 - eps[i]) * idle_prod)) < 1e-9);

        const std::vector<double> pi = csma_stationary(p[i], st.alpha, st.chi, mac);
        CHECK(std::abs(csma_xi(pi, mac) - st.xi) < 1e-9);
    }
}

TEST_CASE("hand-unrolled single-attempt csma chain") {
    // M = 0, W0 = 1, one attempt, link per 0.2, empty neighborhood: the
    // packet senses at slot 1 and transmits; only the link loss remains.
    const MacParams mac = tiny_mac(1, 0, 1);
    CsmaNodeState st;
    st.alpha = 1.0;
    st.chi = 0.2;
    CHECK(csma_reliability(st, mac, 3, 0) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(csma_reliability(st, mac, 1, 0) == 0.0);
    CHECK(csma_reliability(st, mac, 5, 4) == 0.0);
}

TEST_CASE("csma reliability saturates at one for a clean unconstrained link") {
    const MacParams mac = tiny_mac(8, 2, 3);
    CsmaNodeState st;
    st.alpha = 1.0;
    st.chi = 0.0;
    CHECK(csma_reliability(st, mac, 1000, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("csma success cdf spreads uniformly over the first window") {
    // alpha = 1, chi = 0, single attempt: theta(k) = phi(k,0) = 1/W0 for
    // k in 1..W0, so the cdf climbs in equal steps and ends at 1.
    const int w0 = 6;
    const MacParams mac = tiny_mac(w0, 0, 1);
    CsmaNodeState st;
    st.alpha = 1.0;
    st.chi = 0.0;
    const std::vector<double> cdf = csma_success_cdf(st, mac, w0 + 1);
    for (int u = 2; u <= w0 + 1; ++u)
        CHECK(cdf[static_cast<size_t>(u)] - cdf[static_cast<size_t>(u - 1)] ==
              doctest::Approx(1.0 / w0).epsilon(1e-12));
    CHECK(cdf.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("csma attempt paths conserve probability") {
    // With an idle channel every attempt fails only through chi, so the
    // unbounded success mass is 1 - chi^retries.
    const MacParams mac = tiny_mac(4, 0, 3);
    CsmaNodeState st;
    st.alpha = 1.0;
    st.chi = 0.2;
    const std::vector<double> cdf = csma_success_cdf(st, mac, 400);
    CHECK(cdf.back() == doctest::Approx(1.0 - 0.2 * 0.2 * 0.2).epsilon(1e-6));
}

TEST_CASE("csma reliability is monotone in the budget and the loss") {
    const MacParams mac = tiny_mac(8, 2, 3);
    CsmaNodeState st;
    st.alpha = 0.8;
    st.chi = 0.3;
    double prev = 0.0;
    for (int s = 2; s <= 120; s += 2) {
        const double r = csma_reliability(st, mac, s, 0);
        CHECK(r >= prev - 1e-15);
        CHECK(r <= 1.0);
        prev = r;
    }
    double prev_r = 1.0;
    for (double chi = 0.0; chi <= 0.95; chi += 0.05) {
        CsmaNodeState v;
        v.alpha = 0.8;
        v.chi = chi;
        const double r = csma_reliability(v, mac, 60, 0);
        CHECK(r <= prev_r + 1e-12);
        prev_r = r;
    }
}

TEST_CASE("tdma grant delay on pinned examples") {
    MacParams mac;
    CHECK(tdma_reliability({}, 0.0, mac, 1, 0) == doctest::Approx(1.0).epsilon(1e-12));

    MacParams two_tries = tiny_mac(8, 0, 2);
    CHECK(tdma_reliability({}, 0.3, two_tries, 5, 0) ==
          doctest::Approx(0.91).epsilon(1e-12));

    MacParams one_try = tiny_mac(8, 0, 1);
    CHECK(tdma_reliability({0.5, 0.5}, 0.0, one_try, 2, 0) ==
          doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("tdma cdf is the cumulative poisson binomial for one attempt") {
    const MacParams mac = tiny_mac(8, 0, 1);
    const std::vector<double> p = {0.2, 0.5, 0.7, 0.35};
    const std::vector<double> cdf = tdma_success_cdf(p, 0.0, mac, 6);
    const std::vector<double> pmf = poisson_binomial_pmf(p);
    double cum = 0.0;
    for (int u = 1; u <= 5; ++u) {
        cum += pmf[static_cast<size_t>(u - 1)];
        CHECK(cdf[static_cast<size_t>(u)] == doctest::Approx(cum).epsilon(1e-9));
    }
}

TEST_CASE("tdma reliability is monotone in budget, loss and competitor load") {
    const MacParams mac = tiny_mac(8, 0, 3);
    double prev = 0.0;
    for (int s = 1; s <= 20; ++s) {
        const double r = tdma_reliability({0.4, 0.4, 0.4}, 0.2, mac, s, 0);
        CHECK(r >= prev - 1e-15);
        prev = r;
    }
    double prev_eps = 1.0;
    for (double e = 0.0; e <= 0.9; e += 0.1) {
        const double r = tdma_reliability({0.4, 0.4}, e, mac, 6, 0);
        CHECK(r <= prev_eps + 1e-12);
        prev_eps = r;
    }
    double prev_p = 1.0;
    for (double np = 0.0; np <= 1.0; np += 0.1) {
        const double r = tdma_reliability({np, np, np}, 0.1, mac, 4, 0);
        CHECK(r <= prev_p + 1e-12);
        prev_p = r;
    }
}

TEST_CASE("service means on pinned shapes") {
    MacParams mac;
    mac.cap_slots = 10;
    mac.cfp_slots = 10;
    // Zero competitor traffic: only the CAP-arrival offset remains.
    CHECK(mean_service_tdma(0.0, mac, 5.0, 1) ==
          doctest::Approx(10.0 * 11.0 / 2.0 / 20.0).epsilon(1e-12));

    // alpha = 1 collapses the backoff series to the first window; deeper
    // stages stop mattering.
    const MacParams shallow = tiny_mac(8, 0, 1);
    const MacParams deep = tiny_mac(8, 4, 1);
    CHECK(mean_service_csma(1.0, shallow) ==
          doctest::Approx(mean_service_csma(1.0, deep)).epsilon(1e-12));
    const MacParams wider = tiny_mac(10, 0, 1);
    CHECK(mean_service_csma(1.0, wider) - mean_service_csma(1.0, shallow) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("service moments expose mu as the inverse mean") {
    const MacParams mac = tiny_mac(8, 2, 3);
    CsmaNodeState st;
    st.alpha = 0.9;
    st.chi = 0.1;
    const ServiceMoments nc = service_moments_csma(st, mac, 5.0, 2);
    CHECK(nc.mu == doctest::Approx(1.0 / nc.ey).epsilon(1e-12));
    CHECK(nc.ey2 > 0.0);

    const ServiceMoments mc =
        service_moments_tdma({0.3, 0.3}, 0.1, 0.02, mac, 5.0, 2);
    CHECK(mc.mu == doctest::Approx(1.0 / mc.ey).epsilon(1e-12));
    CHECK(mc.ey2 > 0.0);
}

TEST_CASE("queue wait follows the mean-value formula") {
    CHECK(queue_wait_slots(1e-9, 4.0, 0.5) < 1e-6);
    CHECK(queue_wait_slots(0.1, 4.0, 0.5) == doctest::Approx(0.25).epsilon(1e-12));

    double prev = 0.0;
    for (double lam = 0.05; lam < 0.5; lam += 0.05) {
        const double w = queue_wait_slots(lam, 4.0, 0.5);
        CHECK(w > prev);
        prev = w;
    }
    CHECK_THROWS_AS(queue_wait_slots(0.5, 4.0, 0.5), UnstableQueue);
    CHECK_THROWS_AS(queue_wait_slots(0.6, 4.0, 0.5), UnstableQueue);
}

TEST_CASE("retransmission factor per class") {
    CHECK(retransmission_factor(TrafficCategory::MissionCritical, 0.0, 0, 0, 4) ==
          doctest::Approx(1.0));
    CHECK(retransmission_factor(TrafficCategory::MissionCritical, 0.5, 0, 0, 4) ==
          doctest::Approx(2.0));
    CHECK(retransmission_factor(TrafficCategory::NonCritical, 0.0, 0.2, 0.5, 1) ==
          doctest::Approx(1.0 / (0.8 * 0.75)).epsilon(1e-12));
    CHECK(std::isinf(
        retransmission_factor(TrafficCategory::NonCritical, 0.0, 1.0, 0.5, 1)));
}

TEST_CASE("path reliability multiplies hops") {
    CHECK(path_reliability({0.97}) == doctest::Approx(0.97));
    CHECK(path_reliability({0.99, 0.98}) == doctest::Approx(0.9702).epsilon(1e-12));
    CHECK(path_reliability({0.99, 0.0, 0.98}) == 0.0);
}

}  // TEST_SUITE

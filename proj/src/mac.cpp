#include "daplan/mac.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "daplan/parallel.hpp"

namespace daplan {

SlotBudget slot_budget(double latency_s, TrafficCategory cls,
                       const MacParams& mac, int hops) {
    SlotBudget b;
    const int n_class = cls == TrafficCategory::MissionCritical
                            ? mac.cfp_slots
                            : mac.cap_slots;
    b.total_slots = latency_s / mac.frame_duration_s * n_class;
    b.per_hop = static_cast<int>(std::floor(b.total_slots / hops));
    return b;
}

std::vector<double> poisson_binomial_pmf(const std::vector<double>& p) {
    const int n = static_cast<int>(p.size());
    std::vector<double> pmf(n + 1, 0.0);
    if (n == 0) {
        pmf[0] = 1.0;
        return pmf;
    }
    using cd = std::complex<double>;
    const double step = 2.0 * std::numbers::pi / (n + 1);
    std::vector<cd> z(n + 1);
    for (int kappa = 0; kappa <= n; ++kappa) {
        const cd w = std::polar(1.0, step * kappa);
        cd prod(1.0, 0.0);
        for (double pk : p) prod *= pk * w + (1.0 - pk);
        z[kappa] = prod;
    }
    for (int i = 0; i <= n; ++i) {
        cd acc(0.0, 0.0);
        for (int kappa = 0; kappa <= n; ++kappa)
            acc += std::polar(1.0, -step * kappa * i) * z[kappa];
        acc /= static_cast<double>(n + 1);
        // The closed form is real up to roundoff; drop the residue.
        pmf[i] = std::max(acc.real(), 0.0);
    }
    return pmf;
}

int csma_state_index(int attempt, int stage, int max_stage) {
    if (attempt == 0) return 0;
    return (attempt - 1) * (max_stage + 1) + stage + 1;
}

int csma_state_count(const MacParams& mac) {
    return 1 + mac.max_retries * (mac.max_backoff_stage + 1);
}

std::vector<std::vector<double>> csma_transition_matrix(double p, double alpha,
                                                        double chi,
                                                        const MacParams& mac) {
    const int m_max = mac.max_backoff_stage;
    const int n_arq = mac.max_retries;
    const int n = csma_state_count(mac);
    std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));

    t[0][0] = 1.0 - p;
    t[0][csma_state_index(1, 0, m_max)] = p;

    for (int i = 1; i <= n_arq; ++i) {
        for (int m = 0; m <= m_max; ++m) {
            const int s = csma_state_index(i, m, m_max);
            const double success = alpha * (1.0 - chi);
            double fail = alpha * chi;
            t[s][0] += success;
            if (m < m_max) {
                t[s][csma_state_index(i, m + 1, m_max)] += 1.0 - alpha;
            } else {
                fail += 1.0 - alpha;  // windows exhausted counts as a miss
            }
            if (i < n_arq)
                t[s][csma_state_index(i + 1, 0, m_max)] += fail;
            else
                t[s][0] += fail;  // retries exhausted, packet dropped
        }
    }
    return t;
}

namespace {

double stationary_residual(const std::vector<std::vector<double>>& t,
                           const std::vector<double>& pi) {
    const size_t n = t.size();
    double worst = 0.0;
    for (size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) acc += pi[i] * t[i][j];
        worst = std::max(worst, std::abs(acc - pi[j]));
    }
    return worst;
}

bool clean_distribution(std::vector<double>& pi) {
    double sum = 0.0;
    for (double& v : pi) {
        if (v < -1e-9) return false;
        v = std::max(v, 0.0);
        sum += v;
    }
    if (sum <= 0.0) return false;
    for (double& v : pi) v /= sum;
    return true;
}

}  // namespace

std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& t) {
    const int n = static_cast<int>(t.size());
    if (n == 0) return {};

    // (T' - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i][j] = t[j][i] - (i == j ? 1.0 : 0.0);
    for (int j = 0; j < n; ++j) a[n - 1][j] = 1.0;
    a[n - 1][n] = 1.0;

    bool singular = false;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12) {
            singular = true;
            break;
        }
        std::swap(a[col], a[pivot]);
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (int c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }

    std::vector<double> pi(n, 0.0);
    if (!singular) {
        for (int i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
        if (clean_distribution(pi) && stationary_residual(t, pi) < 1e-10)
            return pi;
    }

    // Damped power iteration; the damping removes periodic oscillation.
    std::vector<double> cur(n, 1.0 / n), next(n, 0.0);
    for (int it = 0; it < 200000; ++it) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += cur[i] * t[i][j];
            next[j] = 0.5 * cur[j] + 0.5 * acc;
        }
        double delta = 0.0;
        for (int j = 0; j < n; ++j) delta = std::max(delta, std::abs(next[j] - cur[j]));
        cur.swap(next);
        if (delta < 1e-13) break;
    }
    if (clean_distribution(cur) && stationary_residual(t, cur) < 1e-10)
        return cur;
    throw NoConvergence("stationary distribution did not converge",
                        stationary_residual(t, cur));
}

std::vector<double> csma_stationary(double p, double alpha, double chi,
                                    const MacParams& mac) {
    // Visit-rate balance filled forward: every state except (0,0) has
    // inflow only from earlier attempts/stages, so one pass suffices.
    const int m_max = mac.max_backoff_stage;
    const int n_arq = mac.max_retries;
    std::vector<double> m(csma_state_count(mac), 0.0);
    if (p <= 0.0) {
        m[0] = 1.0;
        return m;
    }

    // Unnormalized flow with unit inflow into attempt 1. Every unit
    // eventually returns to the idle state, whose balance then gives
    // pi(0,0)*p = 1, i.e. pi(0,0) = 1/p.
    double enter = 1.0;
    for (int i = 1; i <= n_arq; ++i) {
        m[csma_state_index(i, 0, m_max)] = enter;
        for (int mm = 1; mm <= m_max; ++mm)
            m[csma_state_index(i, mm, m_max)] =
                m[csma_state_index(i, mm - 1, m_max)] * (1.0 - alpha);
        double fail = 0.0;
        for (int mm = 0; mm <= m_max; ++mm)
            fail += m[csma_state_index(i, mm, m_max)] * alpha * chi;
        fail += m[csma_state_index(i, m_max, m_max)] * (1.0 - alpha);
        enter = fail;
    }
    m[0] = 1.0 / p;

    double sum = 0.0;
    for (double v : m) sum += v;
    for (double& v : m) v /= sum;
    return m;
}

double csma_xi(const std::vector<double>& pi, const MacParams& mac) {
    const int m_max = mac.max_backoff_stage;
    double xi = 0.0;
    for (int i = 1; i <= mac.max_retries; ++i)
        for (int mm = 0; mm <= m_max; ++mm)
            xi += pi[csma_state_index(i, mm, m_max)] /
                  mac.backoff_windows[static_cast<size_t>(mm)];
    return xi;
}

namespace {

// One relaxation of (beta1, beta2, alpha, chi) for a node given the
// current competitor xi values, then the refreshed xi from the chain.
void relax_node(CsmaNodeState& st, double p, double eps_h,
                const std::vector<int>& comp, const std::vector<double>& xi,
                const MacParams& mac, double* xi_next) {
    double idle_prod = 1.0;
    for (int y : comp) idle_prod *= 1.0 - xi[static_cast<size_t>(y)];
    const double u = 1.0 - idle_prod;
    const double beta2 = u / (1.0 + u);
    const double beta1 =
        (1.0 - beta2) * u / (1.0 + (1.0 - beta2) * u);
    st.p = p;
    st.eps_h = eps_h;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.alpha = (1.0 - beta1) * (1.0 - beta2);
    st.chi = 1.0 - (1.0 - eps_h) * idle_prod;
    st.pi = csma_stationary(p, st.alpha, st.chi, mac);
    *xi_next = csma_xi(st.pi, mac);
}

}  // namespace

CsmaFixedPoint csma_fixed_point(const std::vector<double>& p,
                                const std::vector<double>& eps_h,
                                const std::vector<std::vector<int>>& competitors,
                                const MacParams& mac, int threads) {
    const size_t n = p.size();
    CsmaFixedPoint fp;
    fp.nodes.resize(n);
    std::vector<double> xi(n, 0.0), xi_next(n, 0.0);

    constexpr int kMaxSweeps = 10000;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        parallel_for(n, threads, [&](size_t i) {
            relax_node(fp.nodes[i], p[i], eps_h[i], competitors[i], xi, mac,
                       &xi_next[i]);
        });
        double residual = 0.0;
        for (size_t i = 0; i < n; ++i)
            residual = std::max(residual, std::abs(xi_next[i] - xi[i]));
        for (size_t i = 0; i < n; ++i)
            xi[i] += 0.5 * (xi_next[i] - xi[i]);
        fp.iterations = sweep + 1;
        fp.residual = residual;
        // Iterate past the contract threshold so that a recompute from the
        // returned state stays within 1e-9 as well.
        if (residual < 1e-10) {
            fp.converged = true;
            break;
        }
    }
    if (!fp.converged && fp.residual >= 1e-9)
        throw NoConvergence("csma fixed point did not converge", fp.residual);
    fp.converged = true;

    // Final consistency pass from the damped xi.
    parallel_for(n, threads, [&](size_t i) {
        relax_node(fp.nodes[i], p[i], eps_h[i], competitors[i], xi, mac,
                   &xi_next[i]);
        fp.nodes[i].xi = xi_next[i];
    });
    return fp;
}

std::vector<double> csma_theta(const CsmaNodeState& st, const MacParams& mac,
                               int k_max) {
    const int m_max = mac.max_backoff_stage;
    std::vector<double> theta(static_cast<size_t>(k_max) + 1, 0.0);
    if (k_max < 1) return theta;

    // phi[m][k]: first sensing of stage m lands on slot k (attempt-local).
    std::vector<std::vector<double>> phi(
        static_cast<size_t>(m_max) + 1,
        std::vector<double>(static_cast<size_t>(k_max) + 1, 0.0));
    const int w0 = mac.backoff_windows[0];
    for (int k = 1; k <= std::min(k_max, w0); ++k)
        phi[0][static_cast<size_t>(k)] = 1.0 / w0;

    for (int m = 1; m <= m_max; ++m) {
        const int w = mac.backoff_windows[static_cast<size_t>(m)];
        // prefix[j] = sum of phi[m-1][1..j]
        std::vector<double> prefix(static_cast<size_t>(k_max) + 1, 0.0);
        for (int j = 1; j <= k_max; ++j)
            prefix[static_cast<size_t>(j)] =
                prefix[static_cast<size_t>(j - 1)] + phi[m - 1][static_cast<size_t>(j)];
        auto range_sum = [&](int lo, int hi) {
            lo = std::max(lo, 1);
            if (hi < lo) return 0.0;
            return prefix[static_cast<size_t>(hi)] -
                   prefix[static_cast<size_t>(lo - 1)];
        };
        for (int k = 1; k <= k_max; ++k) {
            // Busy at the first assessment: back off 1..W slots.
            const double first = range_sum(k - w, k - 1) * st.beta1;
            // Idle then busy at the second: one extra slot elapsed.
            const double second =
                range_sum(k - 1 - w, k - 2) * (1.0 - st.beta1) * st.beta2;
            phi[m][static_cast<size_t>(k)] = (first + second) / w;
        }
    }

    // Collapse stages: total sensing probability and the failure-weighted
    // variant that seeds the next attempt.
    std::vector<double> phi_all(static_cast<size_t>(k_max) + 1, 0.0);
    std::vector<double> phi_fail(static_cast<size_t>(k_max) + 1, 0.0);
    for (int m = 0; m <= m_max; ++m) {
        const double delta = m < m_max
                                 ? st.alpha * st.chi
                                 : st.alpha * st.chi + (1.0 - st.alpha);
        for (int k = 1; k <= k_max; ++k) {
            phi_all[static_cast<size_t>(k)] += phi[m][static_cast<size_t>(k)];
            phi_fail[static_cast<size_t>(k)] +=
                delta * phi[m][static_cast<size_t>(k)];
        }
    }

    // start[t]: attempt begins its stage-0 backoff at slot t (first attempt
    // at t = 0; later attempts two CCA slots after the failed sensing).
    std::vector<double> start(static_cast<size_t>(k_max) + 1, 0.0);
    start[0] = 1.0;
    for (int attempt = 1; attempt <= mac.max_retries; ++attempt) {
        std::vector<double> sense(static_cast<size_t>(k_max) + 1, 0.0);
        for (int t = 0; t <= k_max; ++t) {
            const double s = start[static_cast<size_t>(t)];
            if (s == 0.0) continue;
            for (int k = t + 1; k <= k_max; ++k)
                sense[static_cast<size_t>(k)] +=
                    s * phi_all[static_cast<size_t>(k - t)];
        }
        for (int k = 1; k <= k_max; ++k)
            theta[static_cast<size_t>(k)] +=
                st.alpha * sense[static_cast<size_t>(k)];
        if (attempt == mac.max_retries) break;
        std::vector<double> next(static_cast<size_t>(k_max) + 1, 0.0);
        for (int t = 0; t <= k_max; ++t) {
            const double s = start[static_cast<size_t>(t)];
            if (s == 0.0) continue;
            for (int k = t + 1; k + 2 <= k_max; ++k)
                next[static_cast<size_t>(k + 2)] +=
                    s * phi_fail[static_cast<size_t>(k - t)];
        }
        start.swap(next);
    }
    return theta;
}

std::vector<double> csma_success_cdf(const CsmaNodeState& st,
                                     const MacParams& mac, int k_max) {
    std::vector<double> cdf(static_cast<size_t>(std::max(k_max, 0)) + 1, 0.0);
    if (k_max < 2) return cdf;
    const std::vector<double> theta = csma_theta(st, mac, k_max - 1);
    const double succ = 1.0 - st.chi;
    for (int u = 1; u <= k_max; ++u)
        cdf[static_cast<size_t>(u)] =
            std::min(1.0, cdf[static_cast<size_t>(u - 1)] +
                              succ * theta[static_cast<size_t>(u - 1)]);
    // cdf[u] = (1-chi) * sum_{k=1}^{u-1} theta(k)
    return cdf;
}

double csma_reliability(const CsmaNodeState& st, const MacParams& mac, int s,
                        int t_q) {
    const int u = s - t_q;
    if (u < 2) return 0.0;
    const std::vector<double> cdf = csma_success_cdf(st, mac, u);
    return cdf[static_cast<size_t>(u)];
}

std::vector<double> tdma_success_cdf(const std::vector<double>& neighbor_p,
                                     double eps_h, const MacParams& mac,
                                     int k_max) {
    std::vector<double> cdf(static_cast<size_t>(std::max(k_max, 0)) + 1, 0.0);
    if (k_max < 1) return cdf;

    // Per-attempt grant delay: u slots when u-1 contending neighbors are
    // scheduled first. Support truncated at k_max (budget overrun = loss).
    const std::vector<double> pb = poisson_binomial_pmf(neighbor_p);
    std::vector<double> attempt(static_cast<size_t>(k_max) + 1, 0.0);
    for (int u = 1; u <= k_max && u <= static_cast<int>(pb.size()); ++u)
        attempt[static_cast<size_t>(u)] = pb[static_cast<size_t>(u - 1)];

    std::vector<double> total = attempt;  // delay pmf over i attempts
    double eps_pow = 1.0;
    for (int i = 1; i <= mac.max_retries; ++i) {
        if (i > 1) {
            std::vector<double> conv(static_cast<size_t>(k_max) + 1, 0.0);
            for (int d = i - 1; d <= k_max; ++d) {
                const double v = total[static_cast<size_t>(d)];
                if (v == 0.0) continue;
                for (int u = 1; d + u <= k_max; ++u)
                    conv[static_cast<size_t>(d + u)] +=
                        v * attempt[static_cast<size_t>(u)];
            }
            total.swap(conv);
            eps_pow *= eps_h;
        }
        const double weight = eps_pow * (1.0 - eps_h);
        double cum = 0.0;
        for (int k = 1; k <= k_max; ++k) {
            cum += total[static_cast<size_t>(k)];
            cdf[static_cast<size_t>(k)] += weight * cum;
        }
    }
    for (double& v : cdf) v = std::min(v, 1.0);
    return cdf;
}

double tdma_reliability(const std::vector<double>& neighbor_p, double eps_h,
                        const MacParams& mac, int s, int t_q) {
    const int u = s - t_q;
    if (u < 1) return 0.0;
    const std::vector<double> cdf = tdma_success_cdf(neighbor_p, eps_h, mac, u);
    return cdf[static_cast<size_t>(u)];
}

double mean_service_csma(double alpha, const MacParams& mac) {
    const double nc = mac.cap_slots;
    const double nt = mac.cfp_slots;
    const int m_max = mac.max_backoff_stage;

    // CFP-arrival offset: packets landing during the CFP wait it out.
    double ey = nt * (nt + 1.0) / 2.0 / (nc + nt);
    double busy_pow = 1.0;
    for (int m = 0; m <= m_max; ++m) {
        const double w = mac.backoff_windows[static_cast<size_t>(m)];
        ey += busy_pow * (w + 2.0) / 2.0;
        // Extra CFP inserted when the busy backoff spills past the CAP.
        if (m >= 1) ey += busy_pow * (w + 2.0) / (2.0 * nc) * nt;
        busy_pow *= 1.0 - alpha;
    }
    return ey + 1.0;  // the transmission slot itself
}

double mean_service_tdma(double lambda_window_pps, const MacParams& mac,
                         double latency_s, int hops) {
    const double nc = mac.cap_slots;
    const double nt = mac.cfp_slots;
    // CAP-arrival offset plus whole frames consumed by the CFP backlog
    // accumulated over the per-hop share of the latency window.
    const double backlog = 0.5 * lambda_window_pps * latency_s / hops;
    return nc * (nc + 1.0) / 2.0 / (nc + nt) +
           std::floor(backlog / nt) * (nt + nc) + std::fmod(backlog, nt);
}

namespace {

double second_moment(const std::vector<double>& cdf, int s, double scale) {
    double ey2 = 0.0;
    for (int k = 1; k <= s && k < static_cast<int>(cdf.size()); ++k)
        ey2 += (cdf[static_cast<size_t>(k)] - cdf[static_cast<size_t>(k - 1)]) *
               static_cast<double>(k) * k;
    return ey2 * scale;
}

}  // namespace

ServiceMoments service_moments_csma(const CsmaNodeState& st,
                                    const MacParams& mac, double latency_s,
                                    int hops) {
    ServiceMoments sm;
    sm.ey = mean_service_csma(st.alpha, mac);
    sm.mu = 1.0 / sm.ey;
    const SlotBudget budget =
        slot_budget(latency_s, TrafficCategory::NonCritical, mac, hops);
    const int s = std::max(budget.per_hop, 0);
    sm.ey2 = second_moment(
        csma_success_cdf(st, mac, s), s,
        (mac.cap_slots + mac.cfp_slots) / static_cast<double>(mac.cap_slots));
    return sm;
}

ServiceMoments service_moments_tdma(const std::vector<double>& neighbor_p,
                                    double eps_h, double lambda_window_pps,
                                    const MacParams& mac, double latency_s,
                                    int hops) {
    ServiceMoments sm;
    sm.ey = mean_service_tdma(lambda_window_pps, mac, latency_s, hops);
    sm.mu = 1.0 / sm.ey;
    const SlotBudget budget =
        slot_budget(latency_s, TrafficCategory::MissionCritical, mac, hops);
    const int s = std::max(budget.per_hop, 0);
    sm.ey2 = second_moment(
        tdma_success_cdf(neighbor_p, eps_h, mac, s), s,
        (mac.cap_slots + mac.cfp_slots) / static_cast<double>(mac.cfp_slots));
    return sm;
}

double queue_wait_slots(double lambda_per_slot, double ey2, double mu) {
    const double rho = lambda_per_slot / mu;
    if (rho >= 1.0)
        throw UnstableQueue("queue utilization >= 1");
    return lambda_per_slot * ey2 / (2.0 * (1.0 - rho));
}

double retransmission_factor(TrafficCategory cls, double eps_h, double chi,
                             double alpha, int max_stage) {
    if (cls == TrafficCategory::MissionCritical) {
        if (eps_h >= 1.0) return std::numeric_limits<double>::infinity();
        return 1.0 / (1.0 - eps_h);
    }
    const double reach = 1.0 - std::pow(1.0 - alpha, max_stage + 1);
    const double denom = (1.0 - chi) * reach;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / denom;
}

double path_reliability(const std::vector<double>& hop_r) {
    double r = 1.0;
    for (double h : hop_r) r *= h;
    return r;
}

}  // namespace daplan

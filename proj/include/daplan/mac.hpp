#pragma once

#include <stdexcept>
#include <vector>

#include "daplan/scenario.hpp"

namespace daplan {

struct UnstableQueue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
    NoConvergence(const std::string& what, double res)
        : std::runtime_error(what), residual(res) {}
    double residual;
};

struct SlotBudget {
    double total_slots = 0.0;  // N_s, latency expressed in class slots
    int per_hop = 0;           // S = floor(N_s / H_n)
    bool feasible() const { return per_hop >= 1; }
};

SlotBudget slot_budget(double latency_s, TrafficCategory cls,
                       const MacParams& mac, int hops);

/// Distribution of the number of busy neighbors: pmf over {0..n} computed
/// with the DFT closed form. Imaginary residues below 1e-9 are clamped.
std::vector<double> poisson_binomial_pmf(const std::vector<double>& p);

/// CSMA/CA chain over states (0,0) plus (attempt i, stage m).
/// State index: 0 for (0,0); g(i,m) = (i-1)(M+1) + m + 1.
int csma_state_index(int attempt, int stage, int max_stage);
int csma_state_count(const MacParams& mac);

std::vector<std::vector<double>> csma_transition_matrix(double p, double alpha,
                                                        double chi,
                                                        const MacParams& mac);

/// Stationary distribution of a row-stochastic matrix: direct linear solve
/// with the normalization constraint, damped power iteration as fallback.
std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& T);

/// Same distribution computed structurally from the chain's flow balance
/// (forward fill of visit rates). Used in the fixed-point inner loop.
std::vector<double> csma_stationary(double p, double alpha, double chi,
                                    const MacParams& mac);

/// Probability of a first carrier-sensing attempt in an arbitrary slot.
double csma_xi(const std::vector<double>& pi, const MacParams& mac);

struct CsmaNodeState {
    double p = 0.0;      // packet-presence probability lambda/mu
    double eps_h = 0.0;  // PER of the node's uplink
    double alpha = 1.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double xi = 0.0;
    double chi = 0.0;
    std::vector<double> pi;
};

struct CsmaFixedPoint {
    std::vector<CsmaNodeState> nodes;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Solves the coupled busy/collision system for a set of contending nodes.
/// competitors[i] lists the indices of node i's CAP contenders (i itself
/// excluded). Damped iteration (factor 0.5) on xi until the sweep residual
/// drops below 1e-9; throws NoConvergence after 10000 sweeps.
CsmaFixedPoint csma_fixed_point(const std::vector<double>& p,
                                const std::vector<double>& eps_h,
                                const std::vector<std::vector<int>>& competitors,
                                const MacParams& mac, int threads = 1);

/// Probability that a CSMA node senses the channel at slot k and finds it
/// idle, for k = 0..k_max (index 0 unused, zero).
std::vector<double> csma_theta(const CsmaNodeState& st, const MacParams& mac,
                               int k_max);

/// cdf[u] = probability of successful uplink delivery within u CAP slots
/// (queue wait excluded); cdf[0] = 0. Success within S slots including a
/// queue wait of t_q slots is cdf[S - t_q].
std::vector<double> csma_success_cdf(const CsmaNodeState& st,
                                     const MacParams& mac, int k_max);

double csma_reliability(const CsmaNodeState& st, const MacParams& mac, int s,
                        int t_q);

/// cdf[u] = probability an MC packet is granted, transmitted and received
/// within u CFP slots over up to N_ARQ attempts; per-attempt delay pmf from
/// the busy-neighbor count, truncated at k_max.
std::vector<double> tdma_success_cdf(const std::vector<double>& neighbor_p,
                                     double eps_h, const MacParams& mac,
                                     int k_max);

double tdma_reliability(const std::vector<double>& neighbor_p, double eps_h,
                        const MacParams& mac, int s, int t_q);

struct ServiceMoments {
    double ey = 0.0;   // slots
    double ey2 = 0.0;  // slots squared
    double mu = 0.0;   // 1/ey
};

/// Mean service time alone (first moments of the two branches), for the
/// busy-probability seeding where the second moment is not needed yet.
double mean_service_csma(double alpha, const MacParams& mac);
double mean_service_tdma(double lambda_window_pps, const MacParams& mac,
                         double latency_s, int hops);

/// Mean service time branches. The second moment weights k² by the success
/// cdf increments over the node's own per-hop budget, scaled from class
/// slots to frame slots.
ServiceMoments service_moments_csma(const CsmaNodeState& st,
                                    const MacParams& mac, double latency_s,
                                    int hops);

ServiceMoments service_moments_tdma(const std::vector<double>& neighbor_p,
                                    double eps_h, double lambda_window_pps,
                                    const MacParams& mac, double latency_s,
                                    int hops);

/// Pollaczek-Khinchin mean wait in slots; lambda in packets per slot.
/// Throws UnstableQueue when lambda/mu >= 1.
double queue_wait_slots(double lambda_per_slot, double ey2, double mu);

/// Expected transmissions until success. Returns +inf when the success
/// probability vanishes.
double retransmission_factor(TrafficCategory cls, double eps_h, double chi,
                             double alpha, int max_stage);

double path_reliability(const std::vector<double>& hop_r);

}  // namespace daplan

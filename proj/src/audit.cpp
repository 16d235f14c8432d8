#include "daplan/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "daplan/kdtree.hpp"
#include "daplan/parallel.hpp"

namespace daplan {

namespace {

void aggregate_arrivals(const Scenario& s, const RoutingForest& forest,
                        const std::vector<int>& routed,
                        const std::vector<double>& sigma, double lambda0,
                        double slot_s, std::vector<NodeClassAudit>* out) {
    for (int i : routed) {
        const size_t u = static_cast<size_t>(i);
        NodeClassAudit& a = (*out)[u];
        a.sigma = sigma[u];
        a.lambda_pps = sigma[u] * lambda0 * (forest.feeding[u] + 1);
        a.lambda_slot = a.lambda_pps * slot_s;
    }
}

void finish_queue(NodeClassAudit* a, double ey2, double mu) {
    a->mu = mu;
    a->stable = a->lambda_slot < mu;
    if (!a->stable) {
        a->tq_slots = std::numeric_limits<double>::infinity();
        a->tq_int = std::numeric_limits<int>::max();
        return;
    }
    a->tq_slots = queue_wait_slots(a->lambda_slot, ey2, mu);
    a->tq_int = static_cast<int>(std::ceil(a->tq_slots));
}

}  // namespace

AuditResult audit_reliability(const Scenario& s, const RoutingForest& forest,
                              int threads) {
    const size_t n = s.nodes.size();
    const MacParams& mac = s.mac();
    const PlannerConfig& cfg = s.config;
    const PerCurve curve = cfg.per_curve_file.empty()
                               ? PerCurve::analytic(cfg.coding_gain_db)
                               : PerCurve::from_csv(cfg.per_curve_file);

    AuditResult audit;
    audit.mc.assign(n, {});
    audit.nc.assign(n, {});
    audit.min_path_r.assign(n, 0.0);

    std::vector<int> routed;
    for (size_t i = 0; i < n; ++i)
        if (forest.routed(static_cast<int>(i)) &&
            s.nodes[i].kind == NodeKind::SmartMeter)
            routed.push_back(static_cast<int>(i));
    if (routed.empty()) {
        audit.converged = true;
        return audit;
    }

    // Uplink PER per routed SM; the largest packet size governs the link.
    const int bytes = s.max_packet_bytes();
    std::vector<double> eps_up(n, 0.0);
    parallel_for(routed.size(), threads, [&](size_t k) {
        const size_t u = static_cast<size_t>(routed[k]);
        const Node& a = s.nodes[u];
        const Node& b = s.nodes[static_cast<size_t>(forest.parent[u])];
        const double pl =
            path_loss_db(cfg, distance(a.pos, b.pos), a.height_m, b.height_m);
        eps_up[u] = curve.per(sinr_db(cfg.radio, pl, a.indoor || b.indoor),
                              bytes);
    });

    // Contention neighborhoods: routed SMs within d_smax of each other.
    std::vector<std::vector<int>> psi(n);
    {
        std::vector<SpatialIndex::Entry> entries;
        entries.reserve(routed.size());
        for (int i : routed)
            entries.push_back({i, s.nodes[static_cast<size_t>(i)].pos});
        const SpatialIndex index(entries);
        parallel_for(routed.size(), threads, [&](size_t k) {
            const int i = routed[k];
            psi[static_cast<size_t>(i)] = index.range_query(
                s.nodes[static_cast<size_t>(i)].pos, s.sm_range_m, i);
        });
    }

    const double lambda0_mc =
        s.category_rate_pps(TrafficCategory::MissionCritical);
    const double lambda0_nc = s.category_rate_pps(TrafficCategory::NonCritical);
    const double l_mc = s.category_latency_s(TrafficCategory::MissionCritical);
    const double l_nc = s.category_latency_s(TrafficCategory::NonCritical);
    const double slot_s = mac.slot_duration_s();

    std::vector<double> sigma_mc(n, 1.0), sigma_nc(n, 1.0);
    for (int i : routed) {
        const size_t u = static_cast<size_t>(i);
        sigma_mc[u] = eps_up[u] < 1.0
                          ? 1.0 / (1.0 - eps_up[u])
                          : std::numeric_limits<double>::infinity();
        sigma_nc[u] = sigma_mc[u];  // refreshed after the fixed point
    }

    std::vector<CsmaNodeState> csma(n);
    for (int i : routed) {
        const size_t u = static_cast<size_t>(i);
        csma[u].alpha = 1.0;  // idle-channel seed for the first pass
        csma[u].chi = eps_up[u];
        csma[u].eps_h = eps_up[u];
    }

    std::vector<double> lambda_window_mc(n, 0.0);
    std::vector<std::vector<double>> cdf_mc(n), cdf_nc(n);
    std::vector<int> dense_of(n, -1);
    for (size_t k = 0; k < routed.size(); ++k)
        dense_of[static_cast<size_t>(routed[k])] = static_cast<int>(k);

    // Two passes: the second refreshes arrivals with the retransmission
    // factors produced by the first pass' converged channel state.
    for (int pass = 0; pass < 2; ++pass) {
        aggregate_arrivals(s, forest, routed, sigma_mc, lambda0_mc, slot_s,
                           &audit.mc);
        aggregate_arrivals(s, forest, routed, sigma_nc, lambda0_nc, slot_s,
                           &audit.nc);

        // Busy probabilities from the first moments alone.
        parallel_for(routed.size(), threads, [&](size_t k) {
            const size_t u = static_cast<size_t>(routed[k]);
            audit.nc[u].p = std::min(
                audit.nc[u].lambda_slot * mean_service_csma(csma[u].alpha, mac),
                1.0);
            double lam_win = audit.mc[u].lambda_pps;
            for (int y : psi[u])
                lam_win += audit.mc[static_cast<size_t>(y)].lambda_pps;
            lambda_window_mc[u] = lam_win;
            audit.mc[u].p = std::min(
                audit.mc[u].lambda_slot *
                    mean_service_tdma(lam_win, mac, l_mc, forest.depth[u]),
                1.0);
        });

        // CSMA fixed point over the whole routed population.
        std::vector<double> p_dense(routed.size()), eps_dense(routed.size());
        std::vector<std::vector<int>> comp_dense(routed.size());
        for (size_t k = 0; k < routed.size(); ++k) {
            const size_t u = static_cast<size_t>(routed[k]);
            p_dense[k] = audit.nc[u].p;
            eps_dense[k] = eps_up[u];
            comp_dense[k].reserve(psi[u].size());
            for (int y : psi[u])
                comp_dense[k].push_back(dense_of[static_cast<size_t>(y)]);
        }
        const CsmaFixedPoint fp =
            csma_fixed_point(p_dense, eps_dense, comp_dense, mac, threads);
        audit.converged = fp.converged;
        audit.residual = fp.residual;
        audit.fixed_point_iterations += fp.iterations;
        for (size_t k = 0; k < routed.size(); ++k)
            csma[static_cast<size_t>(routed[k])] = fp.nodes[k];

        // Busy probabilities move once alpha settles; refresh them before
        // any neighbor-dependent quantity reads them.
        parallel_for(routed.size(), threads, [&](size_t k) {
            const size_t u = static_cast<size_t>(routed[k]);
            audit.nc[u].p = std::min(
                audit.nc[u].lambda_slot * mean_service_csma(csma[u].alpha, mac),
                1.0);
        });

        // Success tables sized to the node's own per-hop budget; they also
        // provide the second moments for the queue waits.
        parallel_for(routed.size(), threads, [&](size_t k) {
            const size_t u = static_cast<size_t>(routed[k]);
            const int depth = forest.depth[u];
            const int s_mc =
                slot_budget(l_mc, TrafficCategory::MissionCritical, mac, depth)
                    .per_hop;
            const int s_nc =
                slot_budget(l_nc, TrafficCategory::NonCritical, mac, depth)
                    .per_hop;
            audit.mc[u].own_budget = s_mc;
            audit.nc[u].own_budget = s_nc;

            std::vector<double> nb_p;
            nb_p.reserve(psi[u].size());
            for (int y : psi[u])
                nb_p.push_back(audit.mc[static_cast<size_t>(y)].p);
            cdf_mc[u] = tdma_success_cdf(nb_p, eps_up[u], mac,
                                         std::max(s_mc, 0));
            cdf_nc[u] = csma_success_cdf(csma[u], mac, std::max(s_nc, 0));

            const double frame = mac.cap_slots + mac.cfp_slots;
            double ey2 = 0.0;
            for (int j = 1; j < static_cast<int>(cdf_mc[u].size()); ++j)
                ey2 += (cdf_mc[u][static_cast<size_t>(j)] -
                        cdf_mc[u][static_cast<size_t>(j - 1)]) *
                       static_cast<double>(j) * j;
            finish_queue(&audit.mc[u], ey2 * frame / mac.cfp_slots,
                         1.0 / mean_service_tdma(lambda_window_mc[u], mac,
                                                 l_mc, depth));
            ey2 = 0.0;
            for (int j = 1; j < static_cast<int>(cdf_nc[u].size()); ++j)
                ey2 += (cdf_nc[u][static_cast<size_t>(j)] -
                        cdf_nc[u][static_cast<size_t>(j - 1)]) *
                       static_cast<double>(j) * j;
            finish_queue(&audit.nc[u], ey2 * frame / mac.cap_slots,
                         1.0 / mean_service_csma(csma[u].alpha, mac));

            audit.nc[u].alpha = csma[u].alpha;
            audit.nc[u].xi = csma[u].xi;
            audit.nc[u].chi = csma[u].chi;
        });

        // Retransmission factors feed the second aggregation pass.
        for (int i : routed) {
            const size_t u = static_cast<size_t>(i);
            const double f = retransmission_factor(
                TrafficCategory::NonCritical, eps_up[u], csma[u].chi,
                csma[u].alpha, mac.max_backoff_stage);
            sigma_nc[u] = std::isfinite(f) ? f : 1.0;
            if (!std::isfinite(f)) audit.nc[u].stable = false;
        }
    }

    // Per-source path products; each relay contributes its success table
    // evaluated at the source's budget minus the relay's queue wait.
    const double ns_mc =
        slot_budget(l_mc, TrafficCategory::MissionCritical, mac, 1)
            .total_slots;
    const double ns_nc =
        slot_budget(l_nc, TrafficCategory::NonCritical, mac, 1).total_slots;

    auto hop_factor = [](const std::vector<double>& cdf, bool stable,
                         int budget, int tq) -> double {
        if (!stable || cdf.size() < 2) return 0.0;
        const long long u = static_cast<long long>(budget) - tq;
        if (u < 1) return 0.0;
        return cdf[static_cast<size_t>(
            std::min<long long>(u, static_cast<long long>(cdf.size()) - 1))];
    };

    parallel_for(routed.size(), threads, [&](size_t k) {
        const int i = routed[k];
        const size_t u = static_cast<size_t>(i);
        const int depth = forest.depth[u];
        const int s_mc = static_cast<int>(std::floor(ns_mc / depth));
        const int s_nc = static_cast<int>(std::floor(ns_nc / depth));

        double r_mc = s_mc >= 1 ? 1.0 : 0.0;
        double r_nc = s_nc >= 1 ? 1.0 : 0.0;
        for (int cur = i;
             s.nodes[static_cast<size_t>(cur)].kind == NodeKind::SmartMeter;
             cur = forest.parent[static_cast<size_t>(cur)]) {
            const size_t cu = static_cast<size_t>(cur);
            r_mc *= hop_factor(cdf_mc[cu], audit.mc[cu].stable, s_mc,
                               audit.mc[cu].tq_int);
            r_nc *= hop_factor(cdf_nc[cu], audit.nc[cu].stable, s_nc,
                               audit.nc[cu].tq_int);
            if (r_mc == 0.0 && r_nc == 0.0) break;
        }
        audit.mc[u].path_r = r_mc;
        audit.nc[u].path_r = r_nc;
        audit.mc[u].hop_r = hop_factor(cdf_mc[u], audit.mc[u].stable, s_mc,
                                       audit.mc[u].tq_int);
        audit.nc[u].hop_r = hop_factor(cdf_nc[u], audit.nc[u].stable, s_nc,
                                       audit.nc[u].tq_int);
        audit.min_path_r[u] = std::min(r_mc, r_nc);
    });

    return audit;
}

std::string audit_dump_csv(const Scenario& s, const AuditResult& audit) {
    std::ostringstream out;
    out << "node,class,lambda,mu,p,alpha,xi,chi,TQ,S,R\n";
    char buf[256];
    for (size_t i = 0; i < s.nodes.size(); ++i) {
        if (s.nodes[i].kind != NodeKind::SmartMeter) continue;
        for (int c = 0; c < 2; ++c) {
            const NodeClassAudit& a = c == 0 ? audit.mc[i] : audit.nc[i];
            std::snprintf(buf, sizeof buf,
                          "%d,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g\n",
                          s.nodes[i].id, c == 0 ? "mc" : "nc", a.lambda_pps,
                          a.mu, a.p, a.alpha, a.xi, a.chi, a.tq_slots,
                          a.own_budget, a.path_r);
            out << buf;
        }
    }
    return out.str();
}

}  // namespace daplan

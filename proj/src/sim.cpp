#include "daplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <queue>
#include <random>

#include "daplan/kdtree.hpp"
#include "daplan/link.hpp"

namespace daplan {

namespace {

constexpr int kCatCount = 2;

int cat_index(TrafficCategory c) { return static_cast<int>(c); }

struct Packet {
    long long id = 0;
    int src = -1;
    int cls = -1;
    double gen_t = 0.0;
    int hops = 0;
};

struct QItem {
    int pkt = -1;
    long long avail_slot = 0;
    double enq_t = 0.0;
};

enum class NcPhase : uint8_t { Idle, Backoff, Cca2, Tx };

struct NcEngine {
    NcPhase phase = NcPhase::Idle;
    int attempt = 0;
    int stage = 0;
    int counter = 0;  // CAP slots until the first channel check
    int pkt = -1;
};

struct McEngine {
    bool active = false;
    int attempt = 0;
    int pkt = -1;
};

struct GenEvent {
    double t = 0.0;
    int node = -1;
    int cls = -1;
};

struct GenLater {
    bool operator()(const GenEvent& a, const GenEvent& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.node != b.node) return a.node > b.node;
        return a.cls > b.cls;
    }
};

}  // namespace

double SimSummary::empirical_reliability(int node, TrafficCategory cat) const {
    for (const auto& st : stats)
        if (st.node == node && st.category == cat)
            return st.resolved > 0 ? static_cast<double>(st.within_deadline) /
                                         static_cast<double>(st.resolved)
                                   : 1.0;
    return 1.0;
}

double SimSummary::class_reliability(TrafficCategory cat) const {
    long long within = 0, resolved = 0;
    for (const auto& st : stats) {
        if (st.category != cat) continue;
        within += st.within_deadline;
        resolved += st.resolved;
    }
    return resolved > 0
               ? static_cast<double>(within) / static_cast<double>(resolved)
               : 1.0;
}

SimResult simulate_des(const Scenario& s, const RoutingForest& forest,
                       double sim_duration_s, uint64_t seed,
                       bool keep_samples) {
    const MacParams& mac = s.mac();
    const int n_t = mac.cfp_slots;
    const int frame = mac.slots_per_frame();
    const double slot_s = mac.slot_duration_s();
    const int n_arq = mac.max_retries;
    const int max_stage = mac.max_backoff_stage;
    const size_t n = s.nodes.size();

    SimResult out;
    out.summary.duration_s = sim_duration_s;
    out.summary.seed = seed;

    std::vector<int> routed;
    for (size_t i = 0; i < n; ++i)
        if (forest.routed(static_cast<int>(i)) &&
            s.nodes[i].kind == NodeKind::SmartMeter)
            routed.push_back(static_cast<int>(i));
    if (routed.empty()) return out;

    // Link error per uplink, at the largest packet the network carries.
    const PerCurve curve = s.config.per_curve_file.empty()
                               ? PerCurve::analytic(s.config.coding_gain_db)
                               : PerCurve::from_csv(s.config.per_curve_file);
    const int bytes = s.max_packet_bytes();
    std::vector<double> eps_up(n, 0.0);
    for (int x : routed) {
        const Node& a = s.nodes[static_cast<size_t>(x)];
        const Node& b =
            s.nodes[static_cast<size_t>(forest.parent[static_cast<size_t>(x)])];
        const double pl = path_loss_db(s.config, distance(a.pos, b.pos),
                                       a.height_m, b.height_m);
        eps_up[static_cast<size_t>(x)] =
            curve.per(sinr_db(s.radio(), pl, a.indoor || b.indoor), bytes);
    }

    // Carrier-sense neighborhoods over the routed SMs.
    std::vector<SpatialIndex::Entry> entries;
    for (int x : routed)
        entries.push_back({x, s.nodes[static_cast<size_t>(x)].pos});
    const SpatialIndex index(entries);
    std::vector<std::vector<int>> psi(n);
    for (int x : routed)
        psi[static_cast<size_t>(x)] = index.range_query(
            s.nodes[static_cast<size_t>(x)].pos, s.sm_range_m, x);

    std::vector<int> dap_rank(n, -1);
    for (size_t r = 0; r < forest.dap_nodes.size(); ++r)
        dap_rank[static_cast<size_t>(forest.dap_nodes[r])] =
            static_cast<int>(r);

    // Stats rows: routed SMs x categories, node-ascending.
    std::vector<int> row_of(n, -1);
    for (size_t k = 0; k < routed.size(); ++k) {
        row_of[static_cast<size_t>(routed[k])] =
            static_cast<int>(k) * kCatCount;
        for (int c = 0; c < kCatCount; ++c) {
            NodeCategoryStat st;
            st.node = routed[k];
            st.category = static_cast<TrafficCategory>(c);
            out.summary.stats.push_back(st);
        }
    }
    auto stat = [&](int node, int cat) -> NodeCategoryStat& {
        return out.summary.stats[static_cast<size_t>(
            row_of[static_cast<size_t>(node)] + cat)];
    };
    std::vector<double> wait_sum(out.summary.stats.size(), 0.0);

    double deadline[kCatCount];
    for (int c = 0; c < kCatCount; ++c)
        deadline[c] = s.category_latency_s(static_cast<TrafficCategory>(c));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw_backoff = [&](int stage) {
        return std::uniform_int_distribution<int>(
            1, mac.backoff_windows[static_cast<size_t>(stage)])(rng);
    };

    std::vector<Packet> packets;
    std::vector<std::deque<QItem>> queue(n * kCatCount);
    auto q_of = [&](int node, int cat) -> std::deque<QItem>& {
        return queue[static_cast<size_t>(node) * kCatCount +
                     static_cast<size_t>(cat)];
    };
    std::vector<NcEngine> nc_eng(n);
    std::vector<McEngine> mc_eng(n);
    std::vector<std::deque<int>> grant_q(forest.dap_nodes.size());
    std::vector<long long> tx_slot(n, -1);

    long long in_flight = 0;
    bool drained = true;

    auto resolve = [&](int pkt, double del_t, bool lost) {
        const Packet& p = packets[static_cast<size_t>(pkt)];
        const int cat = cat_index(s.config.traffic[static_cast<size_t>(p.cls)]
                                      .category);
        NodeCategoryStat& st = stat(p.src, cat);
        ++st.resolved;
        if (!lost) {
            ++st.delivered;
            ++out.summary.delivered;
            if (del_t - p.gen_t <= deadline[cat]) ++st.within_deadline;
        } else {
            ++out.summary.lost;
        }
        if (keep_samples)
            out.samples.push_back({p.id, p.src, p.cls, p.gen_t,
                                   lost ? -1.0 : del_t, p.hops, lost});
        --in_flight;
    };

    // Successful transmission at slot t: the packet either reaches the DAP
    // or joins the parent's queue for the next slot.
    auto forward = [&](int node, int pkt, long long t, int cat) {
        Packet& p = packets[static_cast<size_t>(pkt)];
        ++p.hops;
        const int up = forest.parent[static_cast<size_t>(node)];
        if (s.nodes[static_cast<size_t>(up)].kind == NodeKind::Pole) {
            resolve(pkt, static_cast<double>(t + 1) * slot_s, false);
        } else {
            q_of(up, cat).push_back(
                {pkt, t + 1, static_cast<double>(t + 1) * slot_s});
        }
    };

    // Traffic generators: periodic readings start at a uniform phase, the
    // rest draw exponential gaps. Draw order is fixed by (node, class).
    std::priority_queue<GenEvent, std::vector<GenEvent>, GenLater> gen;
    const auto& classes = s.config.traffic;
    for (int x : routed)
        for (size_t c = 0; c < classes.size(); ++c) {
            const double iv = classes[c].arrival_interval_s;
            const double t0 =
                classes[c].arrival == ArrivalModel::Deterministic
                    ? unif(rng) * iv
                    : -std::log1p(-unif(rng)) * iv;
            if (t0 < sim_duration_s) gen.push({t0, x, static_cast<int>(c)});
        }
    long long next_id = 0;
    auto pop_gen = [&] {
        const GenEvent ev = gen.top();
        gen.pop();
        const int cat = cat_index(classes[static_cast<size_t>(ev.cls)].category);
        packets.push_back({next_id++, ev.node, ev.cls, ev.t, 0});
        const long long avail =
            static_cast<long long>(std::floor(ev.t / slot_s)) + 1;
        q_of(ev.node, cat).push_back(
            {static_cast<int>(packets.size()) - 1, avail, ev.t});
        ++in_flight;
        ++out.summary.generated;
        ++stat(ev.node, cat).generated;
        const double iv = classes[static_cast<size_t>(ev.cls)].arrival_interval_s;
        const double tn = classes[static_cast<size_t>(ev.cls)].arrival ==
                                  ArrivalModel::Deterministic
                              ? ev.t + iv
                              : ev.t - std::log1p(-unif(rng)) * iv;
        if (tn < sim_duration_s) gen.push({tn, ev.node, ev.cls});
    };

    auto note_service = [&](int node, int cat, long long t, long long avail) {
        NodeCategoryStat& st = stat(node, cat);
        ++st.serviced;
        wait_sum[static_cast<size_t>(row_of[static_cast<size_t>(node)] + cat)] +=
            static_cast<double>(t - avail) * slot_s;
    };

    const int mc = cat_index(TrafficCategory::MissionCritical);
    const int nc = cat_index(TrafficCategory::NonCritical);
    std::vector<int> tx_list;

    // Waiting ends once the packet reaches the head of the line; the walk
    // to the next grant region is booked as service, as in the delay model.
    auto mc_pickup = [&](long long t) {
        for (int x : routed) {
            McEngine& e = mc_eng[static_cast<size_t>(x)];
            if (e.active) continue;
            auto& q = q_of(x, mc);
            if (q.empty() || q.front().avail_slot > t) continue;
            note_service(x, mc, t, q.front().avail_slot);
            e.active = true;
            e.attempt = 1;
            e.pkt = q.front().pkt;
            q.pop_front();
            grant_q[static_cast<size_t>(
                        dap_rank[static_cast<size_t>(
                            forest.dap[static_cast<size_t>(x)])])]
                .push_back(x);
        }
    };

    auto cfp_slot = [&](long long t) {
        for (auto& gq : grant_q) {
            if (gq.empty()) continue;
            const int x = gq.front();
            gq.pop_front();
            McEngine& e = mc_eng[static_cast<size_t>(x)];
            if (unif(rng) >= eps_up[static_cast<size_t>(x)]) {
                const int pkt = e.pkt;
                e = McEngine{};
                forward(x, pkt, t, mc);
            } else if (e.attempt >= n_arq) {
                const int pkt = e.pkt;
                e = McEngine{};
                resolve(pkt, 0.0, true);
            } else {
                ++e.attempt;
                gq.push_back(x);
            }
        }
    };

    // Retry exhaustion shared by busy-exhaust and transmission failure.
    auto attempt_fail = [&](int x) {
        NcEngine& e = nc_eng[static_cast<size_t>(x)];
        if (e.attempt >= n_arq) {
            const int pkt = e.pkt;
            e = NcEngine{};
            resolve(pkt, 0.0, true);
        } else {
            ++e.attempt;
            e.stage = 0;
            e.counter = draw_backoff(0);
            e.phase = NcPhase::Backoff;
        }
    };
    auto busy_bump = [&](int x) {
        NcEngine& e = nc_eng[static_cast<size_t>(x)];
        if (e.stage < max_stage) {
            ++e.stage;
            e.counter = draw_backoff(e.stage);
            e.phase = NcPhase::Backoff;
        } else {
            attempt_fail(x);
        }
    };

    // Waiting ends at the head of the line. The countdown only runs on
    // later CAP slots, so a node with a backlog re-enters backoff in the
    // slot right after its own transmission and its services stay
    // contiguous, which is what the service-time distribution assumes.
    auto nc_pickup = [&](long long t) {
        for (int x : routed) {
            NcEngine& e = nc_eng[static_cast<size_t>(x)];
            if (e.phase != NcPhase::Idle) continue;
            auto& q = q_of(x, nc);
            if (q.empty() || q.front().avail_slot > t) continue;
            note_service(x, nc, t, q.front().avail_slot);
            e.pkt = q.front().pkt;
            q.pop_front();
            e.attempt = 1;
            e.stage = 0;
            e.counter = draw_backoff(0);
            e.phase = NcPhase::Backoff;
        }
    };

    auto cap_slot = [&](long long t) {
        tx_list.clear();
        for (int x : routed)
            if (nc_eng[static_cast<size_t>(x)].phase == NcPhase::Tx) {
                tx_list.push_back(x);
                tx_slot[static_cast<size_t>(x)] = t;
            }

        auto busy = [&](int x) {
            for (int y : psi[static_cast<size_t>(x)])
                if (tx_slot[static_cast<size_t>(y)] == t) return true;
            return false;
        };
        for (int x : routed) {
            NcEngine& e = nc_eng[static_cast<size_t>(x)];
            if (e.phase == NcPhase::Backoff) {
                if (--e.counter > 0) continue;
                if (busy(x))
                    busy_bump(x);
                else
                    e.phase = NcPhase::Cca2;
            } else if (e.phase == NcPhase::Cca2) {
                if (busy(x))
                    busy_bump(x);
                else
                    e.phase = NcPhase::Tx;
            }
        }

        for (int x : tx_list) {
            NcEngine& e = nc_eng[static_cast<size_t>(x)];
            bool collided = false;
            for (int y : psi[static_cast<size_t>(x)])
                if (tx_slot[static_cast<size_t>(y)] == t) {
                    collided = true;
                    break;
                }
            if (!collided && unif(rng) >= eps_up[static_cast<size_t>(x)]) {
                const int pkt = e.pkt;
                e = NcEngine{};
                forward(x, pkt, t, nc);
            } else {
                attempt_fail(x);
            }
        }
    };

    const double hard_stop_s = sim_duration_s + 3600.0;
    long long t = 0;
    while (true) {
        if (in_flight == 0) {
            if (gen.empty()) break;
            const long long nxt =
                static_cast<long long>(std::floor(gen.top().t / slot_s)) + 1;
            if (nxt > t) t = nxt;
        }
        if (static_cast<double>(t) * slot_s > hard_stop_s) {
            drained = false;
            break;
        }
        while (!gen.empty() && gen.top().t <= static_cast<double>(t) * slot_s)
            pop_gen();
        mc_pickup(t);
        if (t % frame < n_t)
            cfp_slot(t);
        else
            cap_slot(t);
        nc_pickup(t);
        ++t;
    }

    if (!drained) {
        // Whatever is still in flight has long blown its deadline.
        for (int x : routed) {
            NcEngine& e = nc_eng[static_cast<size_t>(x)];
            if (e.phase != NcPhase::Idle) resolve(e.pkt, 0.0, true);
            McEngine& m = mc_eng[static_cast<size_t>(x)];
            if (m.active) resolve(m.pkt, 0.0, true);
        }
        for (auto& q : queue)
            for (const QItem& it : q) resolve(it.pkt, 0.0, true);
    }
    out.summary.drained = drained;

    double cat_sum[kCatCount] = {0.0, 0.0};
    long long cat_n[kCatCount] = {0, 0};
    for (size_t r = 0; r < out.summary.stats.size(); ++r) {
        NodeCategoryStat& st = out.summary.stats[r];
        st.mean_queue_wait_s =
            st.serviced > 0 ? wait_sum[r] / static_cast<double>(st.serviced)
                            : 0.0;
        cat_sum[cat_index(st.category)] += wait_sum[r];
        cat_n[cat_index(st.category)] += st.serviced;
    }
    for (int c = 0; c < kCatCount; ++c)
        out.summary.mean_queue_wait_s[c] =
            cat_n[c] > 0 ? cat_sum[c] / static_cast<double>(cat_n[c]) : 0.0;
    return out;
}

ValidationReport validate(const Scenario& s, const RoutingForest& forest,
                          const AuditResult& audit, const SimSummary& sim) {
    ValidationReport rep;
    double ana_sum[kCatCount] = {0.0, 0.0};
    long long ana_n[kCatCount] = {0, 0};
    long long within[kCatCount] = {0, 0};
    long long resolved[kCatCount] = {0, 0};

    for (size_t i = 0; i < s.nodes.size(); ++i) {
        if (!forest.routed(static_cast<int>(i)) ||
            s.nodes[i].kind != NodeKind::SmartMeter)
            continue;
        for (int c = 0; c < kCatCount; ++c) {
            const auto cat = static_cast<TrafficCategory>(c);
            ValidationRow row;
            row.node = static_cast<int>(i);
            row.category = cat;
            row.analytic_r = cat == TrafficCategory::MissionCritical
                                 ? audit.mc[i].path_r
                                 : audit.nc[i].path_r;
            row.empirical_r = sim.empirical_reliability(row.node, cat);
            row.gap = std::fabs(row.analytic_r - row.empirical_r);
            for (const auto& st : sim.stats)
                if (st.node == row.node && st.category == cat) {
                    row.samples = st.resolved;
                    within[c] += st.within_deadline;
                    resolved[c] += st.resolved;
                    break;
                }
            const double se = std::sqrt(
                std::max(row.analytic_r * (1.0 - row.analytic_r), 1e-12) /
                static_cast<double>(std::max<long long>(row.samples, 1)));
            row.flagged = row.samples > 0 && row.gap > 0.05 + 2.0 * se;
            if (row.samples > 0) rep.max_row_gap = std::max(rep.max_row_gap, row.gap);
            if (row.flagged) ++rep.flagged;
            ana_sum[c] += row.analytic_r;
            ++ana_n[c];
            rep.rows.push_back(row);
        }
    }
    for (int c = 0; c < kCatCount; ++c) {
        rep.class_analytic[c] =
            ana_n[c] > 0 ? ana_sum[c] / static_cast<double>(ana_n[c]) : 1.0;
        rep.class_empirical[c] =
            resolved[c] > 0 ? static_cast<double>(within[c]) /
                                  static_cast<double>(resolved[c])
                            : 1.0;
        rep.class_gap[c] =
            std::fabs(rep.class_analytic[c] - rep.class_empirical[c]);
    }
    return rep;
}

}  // namespace daplan

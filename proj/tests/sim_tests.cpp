#include <cmath>
#include <cstdint>
#include <vector>

#include "daplan/audit.hpp"
#include "daplan/placement.hpp"
#include "daplan/scenario.hpp"
#include "daplan/sim.hpp"
#include "doctest.h"

using namespace daplan;

namespace {

Node sm(int id, double x, double y) {
    Node n;
    n.id = id;
    n.kind = NodeKind::SmartMeter;
    n.pos = {x, y};
    n.height_m = 2.0;
    return n;
}

Node pole(int id, double x, double y) {
    Node n;
    n.id = id;
    n.kind = NodeKind::Pole;
    n.pos = {x, y};
    n.height_m = 10.0;
    return n;
}

// A small star: every meter one hop from the single pole.
Scenario star(int meters) {
    std::vector<Node> nodes = {pole(1000, 0, 0)};
    for (int i = 0; i < meters; ++i) {
        const double angle = 2.0 * 3.14159265358979323846 *
                             static_cast<double>(i) /
                             static_cast<double>(meters);
        nodes.push_back(
            sm(i + 1, 50.0 * std::cos(angle), 50.0 * std::sin(angle)));
    }
    Scenario s;
    s.nodes = std::move(nodes);
    finalize_scenario(s);
    return s;
}

int class_index(const Scenario& s, const std::string& name) {
    for (size_t i = 0; i < s.config.traffic.size(); ++i)
        if (s.config.traffic[i].name == name) return static_cast<int>(i);
    return -1;
}

// Order-independent fingerprint of the delay samples.
double fingerprint(const SimResult& r) {
    double acc = 0.0;
    for (const DelaySample& d : r.samples)
        acc += d.gen_t * 31.0 + d.del_t * 7.0 +
               static_cast<double>(d.hops) +
               (d.lost ? 1e6 : 0.0);
    return acc;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("the same seed reproduces the run exactly") {
    const Scenario s = star(8);
    const RoutingForest f = phase2_routes(s, {0});

    const SimResult a = simulate_des(s, f, 2000.0, 99);
    const SimResult b = simulate_des(s, f, 2000.0, 99);
    CHECK(a.summary.generated == b.summary.generated);
    CHECK(a.summary.delivered == b.summary.delivered);
    CHECK(a.summary.lost == b.summary.lost);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(fingerprint(a) == fingerprint(b));

    const SimResult c = simulate_des(s, f, 2000.0, 100);
    CHECK((c.summary.generated != a.summary.generated ||
           fingerprint(c) != fingerprint(a)));
}

TEST_CASE("every generated packet is eventually resolved") {
    const Scenario s = star(10);
    const RoutingForest f = phase2_routes(s, {0});
    const SimResult r = simulate_des(s, f, 3000.0, 7);

    CHECK(r.summary.drained);
    CHECK(r.summary.generated == r.summary.delivered + r.summary.lost);
    CHECK(r.summary.generated == static_cast<long long>(r.samples.size()));

    long long delivered = 0, lost = 0;
    for (const DelaySample& d : r.samples) {
        if (d.lost) {
            ++lost;
        } else {
            ++delivered;
            CHECK(d.del_t >= d.gen_t);
        }
    }
    CHECK(delivered == r.summary.delivered);
    CHECK(lost == r.summary.lost);
}

TEST_CASE("periodic classes emit an exact packet count per meter") {
    const Scenario s = star(6);
    const RoutingForest f = phase2_routes(s, {0});
    // 1800 s window: two 900 s readings and six 300 s quality reports per
    // meter, whatever the random phase.
    const SimResult r = simulate_des(s, f, 1800.0, 3);

    const int reading = class_index(s, "meter-read");
    const int quality = class_index(s, "power-quality");
    REQUIRE(reading >= 0);
    REQUIRE(quality >= 0);

    std::vector<long long> reads(s.nodes.size(), 0), quals(s.nodes.size(), 0);
    for (const DelaySample& d : r.samples) {
        if (d.traffic_class == reading) ++reads[static_cast<size_t>(d.src)];
        if (d.traffic_class == quality) ++quals[static_cast<size_t>(d.src)];
    }
    for (size_t i = 1; i < s.nodes.size(); ++i) {
        CHECK(reads[i] == 2);
        CHECK(quals[i] == 6);
    }
}

TEST_CASE("delivered packets cross exactly their route depth in links") {
    const Scenario s = star(5);
    const RoutingForest f = phase2_routes(s, {0});
    const SimResult r = simulate_des(s, f, 2500.0, 21);

    REQUIRE(r.summary.delivered > 0);
    for (const DelaySample& d : r.samples) {
        if (d.lost) continue;
        CHECK(d.hops == f.depth[static_cast<size_t>(d.src)]);
    }
}

TEST_CASE("an uncontended star sees near-zero queueing") {
    const Scenario s = star(1);
    const RoutingForest f = phase2_routes(s, {0});
    const SimResult r = simulate_des(s, f, 30000.0, 17);

    REQUIRE(r.summary.delivered > 0);
    // Waiting is counted up to the head of the line only; with one meter
    // and feather-light traffic both queues are almost always empty, so
    // the mean wait is a whisker above zero for either category.
    CHECK(r.summary.mean_queue_wait_s[0] <= 0.02);
    CHECK(r.summary.mean_queue_wait_s[1] <= 0.01);
    CHECK(r.summary.empirical_reliability(0, TrafficCategory::NonCritical) ==
          1.0);
}

TEST_CASE("simulation matches the analytic model on a small star") {
    const Scenario s = star(8);
    const RoutingForest f = phase2_routes(s, {0});
    const AuditResult audit = audit_reliability(s, f);
    REQUIRE(audit.converged);
    const SimResult r = simulate_des(s, f, 4000.0, 5);
    const ValidationReport rep = validate(s, f, audit, r.summary);

    CHECK(rep.rows.size() == 16);
    CHECK(rep.flagged == 0);
    CHECK(rep.class_gap[0] <= 0.05);
    CHECK(rep.class_gap[1] <= 0.05);
    for (const ValidationRow& row : rep.rows) {
        CHECK(row.analytic_r >= 0.0);
        CHECK(row.analytic_r <= 1.0);
        CHECK(row.empirical_r >= 0.0);
        CHECK(row.empirical_r <= 1.0);
        CHECK(row.gap ==
              doctest::Approx(std::abs(row.analytic_r - row.empirical_r))
                  .epsilon(1e-12));
        CHECK(row.samples > 0);
    }
}

TEST_CASE("a flooded cell hits the drain cap instead of spinning forever") {
    Scenario s;
    s.nodes = {pole(1000, 0, 0)};
    for (int i = 0; i < 20; ++i)
        s.nodes.push_back(sm(i + 1, 40.0 + static_cast<double>(i), 0));
    TrafficClass flood;
    flood.name = "flood";
    flood.category = TrafficCategory::NonCritical;
    flood.packet_bytes = 50;
    flood.arrival_interval_s = 0.02;
    flood.latency_req_s = 5.0;
    flood.arrival = ArrivalModel::Deterministic;
    TrafficClass quiet;  // keeps the grant side configured, never fires
    quiet.name = "quiet";
    quiet.category = TrafficCategory::MissionCritical;
    quiet.packet_bytes = 50;
    quiet.arrival_interval_s = 1e7;
    quiet.latency_req_s = 3.0;
    quiet.arrival = ArrivalModel::Poisson;
    s.config.traffic = {flood, quiet};
    // Lift the admission cap so every meter routes; the point here is the
    // drain limit, not admission control.
    s.config.mac.dap_capacity_pps = 10000.0;
    finalize_scenario(s);

    const RoutingForest f = phase2_routes(s, {0});
    const SimResult r = simulate_des(s, f, 600.0, 13, false);

    CHECK_FALSE(r.summary.drained);
    CHECK(r.summary.generated == r.summary.delivered + r.summary.lost);
    CHECK(r.summary.lost > 0);
    CHECK(r.samples.empty());
}

}  // TEST_SUITE("sim")

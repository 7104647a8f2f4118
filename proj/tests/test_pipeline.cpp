#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mersim/pipeline.hpp"

using namespace mersim;

namespace {

const std::string kTestData = MERSIM_TEST_DATA_DIR;
const std::string kData = MERSIM_DATA_DIR;

ContingencyEvent scripted(std::size_t index, std::vector<std::string> failed, double start,
                          double duration) {
    ContingencyEvent e;
    e.index = index;
    e.failed_components = std::move(failed);
    e.start_hour = start;
    e.duration_hours = duration;
    return e;
}

std::vector<ContingencyEvent> fivebus_events() {
    return {
        scripted(0, {"L2"}, 10.0, 6.0),
        scripted(1, {"L3", "T1"}, 100.25, 5.5),
        scripted(2, {"L1"}, 200.6, 3.2),
        scripted(3, {"L3", "T1"}, 300.0, 0.3),
    };
}

}  // namespace

TEST_CASE("five-bus scripted scenario matches the hand computation") {
    Feeder f = load_feeder_file(kTestData + "/fivebus.feeder");
    RoadNetwork roads = load_road_network_file(kTestData + "/roads_fivebus.csv");
    validate_road_coverage(roads, f);
    BaseSeries base = base_year_run(f, 1);

    AnalysisOptions opts;
    opts.installation_minutes = 15.0;
    RunResult res = analyze_events(f, roads, base, fivebus_events(), opts);

    // documented in tests/data/fivebus_oracle.md
    const SizingReport& rep = res.report;
    CHECK(rep.total_events == 4);
    CHECK(rep.n_cont == 3);
    CHECK(rep.restored_events == 1);
    CHECK(rep.restorable_fraction == doctest::Approx(0.25));
    CHECK(rep.t_cont_hours == doctest::Approx(9.0).epsilon(1e-9));
    CHECK(rep.t_avg_hours == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(rep.e_avg_kwh == doctest::Approx(209.2).epsilon(1e-6));
    CHECK(rep.p_max_kw == doctest::Approx(84.0).epsilon(1e-6));
    CHECK(rep.p_avg_kw == doctest::Approx(63.63583201489997).epsilon(1e-6));
    CHECK(rep.unserved_events == 1);

    CHECK(rep.p_avg_kw <= rep.p_max_kw);
    CHECK(rep.e_avg_kwh <= rep.p_max_kw * rep.t_avg_hours);

    CHECK(res.records[1].outcome.e_net_kwh == doctest::Approx(218.0).epsilon(1e-6));
    CHECK(res.records[1].outcome.p_max_kw == doctest::Approx(60.0).epsilon(1e-6));
    CHECK(res.records[2].outcome.e_net_kwh == doctest::Approx(409.6).epsilon(1e-6));
    CHECK(res.records[2].outcome.p_max_kw == doctest::Approx(192.0).epsilon(1e-6));
    CHECK(res.records[0].plan.fully_restorable);
    CHECK(res.records[0].plan.switch_operations == 1);
}

TEST_CASE("disabling reconfiguration never reduces the average energy") {
    Feeder f = load_feeder_file(kTestData + "/fivebus.feeder");
    RoadNetwork roads = load_road_network_file(kTestData + "/roads_fivebus.csv");
    BaseSeries base = base_year_run(f, 1);

    AnalysisOptions on, off;
    off.reconfiguration = false;
    RunResult with_ties = analyze_events(f, roads, base, fivebus_events(), on);
    RunResult without_ties = analyze_events(f, roads, base, fivebus_events(), off);
    CHECK(without_ties.report.e_avg_kwh >= with_ties.report.e_avg_kwh);
    CHECK(without_ties.report.restorable_fraction <= with_ties.report.restorable_fraction);
}

TEST_CASE("worker count does not change results") {
    Feeder f = load_feeder_file(kTestData + "/fivebus.feeder");
    RoadNetwork roads = load_road_network_file(kTestData + "/roads_fivebus.csv");
    BaseSeries base = base_year_run(f, 1);

    AnalysisOptions one, many;
    one.threads = 1;
    many.threads = 4;
    RunResult a = analyze_events(f, roads, base, fivebus_events(), one);
    RunResult b = analyze_events(f, roads, base, fivebus_events(), many);
    CHECK(render_diagnostics_jsonl(a) == render_diagnostics_jsonl(b));
    CHECK(a.report_text == b.report_text);
}

TEST_CASE("full pipeline run on ieee13 is deterministic and classifies every event") {
    RunConfig cfg;
    cfg.feeder_path = kData + "/ieee13.feeder";
    cfg.reliability_path = kData + "/reliability.csv";
    cfg.roads_path = kData + "/roads_ieee13.csv";
    cfg.years = 5;
    cfg.seed = 7;
    cfg.out_dir = std::filesystem::temp_directory_path() / "mersim_test_run";
    cfg.diagnostics_path = (std::filesystem::temp_directory_path() / "mersim_test_run" / "events.jsonl").string();

    RunResult r1 = run_pipeline(cfg);
    cfg.threads = 3;
    RunResult r2 = run_pipeline(cfg);
    CHECK(r1.report_json == r2.report_json);  // byte-identical across worker counts
    CHECK(r1.nonconverged_hours == 0);

    CHECK(r1.report.total_events > 0);
    CHECK(r1.report.n_cont > 0);
    CHECK(r1.report.restored_events + r1.report.n_cont + r1.report.unreachable_events ==
          r1.report.total_events);
    CHECK(r1.report.p_avg_kw <= r1.report.p_max_kw);
    CHECK(r1.report.e_avg_kwh <= r1.report.p_max_kw * r1.report.t_avg_hours);

    // artifacts on disk
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / "report.json"));
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / "report.txt"));
    std::ifstream diag(cfg.diagnostics_path);
    std::size_t lines = 0;
    std::string line;
    while (std::getline(diag, line))
        if (!line.empty()) ++lines;
    CHECK(lines == r1.report.total_events);
}

TEST_CASE("lossless base mode runs end to end") {
    RunConfig cfg;
    cfg.feeder_path = kData + "/ieee13.feeder";
    cfg.reliability_path = kData + "/reliability.csv";
    cfg.roads_path = kData + "/roads_ieee13.csv";
    cfg.years = 2;
    cfg.seed = 3;
    cfg.lossless_base = true;
    cfg.out_dir = std::filesystem::temp_directory_path() / "mersim_test_lossless";
    RunResult r = run_pipeline(cfg);
    CHECK(r.report.total_events > 0);
    CHECK(r.nonconverged_hours == 0);
}

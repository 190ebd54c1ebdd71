#include "moodcast/ingest.hpp"

#include "moodcast/errors.hpp"
#include "moodcast/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace moodcast;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "moodcast_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

} // namespace

TEST_SUITE("ingest") {

TEST_CASE("empty file with valid header parses to nothing") {
    const auto dir = temp_dir("empty_stream");
    write_file(dir / "gps.csv", "t_ms,offset_min,lat,lon,accuracy_m,speed_mps\n");
    std::vector<csv::RejectedRow> rejects;
    const auto fixes = ingest::parse_gps(dir / "gps.csv", rejects);
    CHECK(fixes.empty());
    CHECK(rejects.empty());
}

TEST_CASE("out-of-range lat is quarantined with a reason") {
    const auto dir = temp_dir("bad_lat");
    write_file(dir / "gps.csv",
               "t_ms,offset_min,lat,lon,accuracy_m,speed_mps\n"
               "1000,0,91.0,9.0,10.0,0.5\n");
    std::vector<csv::RejectedRow> rejects;
    const auto fixes = ingest::parse_gps(dir / "gps.csv", rejects);
    CHECK(fixes.empty());
    REQUIRE(rejects.size() == 1);
    CHECK(rejects[0].reason == "lat out of range");
    CHECK(rejects[0].line == 2);
}

TEST_CASE("rows come back time-sorted regardless of file order") {
    const auto dir = temp_dir("unsorted_calls");
    write_file(dir / "calls.csv",
               "t_ms,offset_min,direction,duration_s,contact_hash\n"
               "3000,0,incoming,60,a\n"
               "1000,0,outgoing,30,b\n"
               "2000,0,missed,0,c\n");
    std::vector<csv::RejectedRow> rejects;
    const auto events = ingest::parse_calls(dir / "calls.csv", rejects);
    REQUIRE(events.size() == 3);
    CHECK(events[0].t.instant_ms == 1000);
    CHECK(events[1].t.instant_ms == 2000);
    CHECK(events[2].t.instant_ms == 3000);
    CHECK(rejects.empty());
}

TEST_CASE("missing file and header mismatch are hard errors") {
    const auto dir = temp_dir("hard_errors");
    std::vector<csv::RejectedRow> rejects;
    CHECK_THROWS_AS(ingest::parse_gps(dir / "nope.csv", rejects), DataError);
    write_file(dir / "gps.csv", "time,offset_min,lat,lon,accuracy_m,speed_mps\n");
    CHECK_THROWS_AS(ingest::parse_gps(dir / "gps.csv", rejects), DataError);
}

TEST_CASE("jsonl alternative schema") {
    const auto dir = temp_dir("jsonl");
    write_file(dir / "apps.jsonl",
               "{\"t_ms\": 2000, \"offset_min\": 60, \"app_hash\": \"a1\"}\n"
               "{\"t_ms\": 1000, \"offset_min\": 60, \"app_hash\": \"a2\"}\n"
               "{\"bad\": true}\n");
    std::vector<csv::RejectedRow> rejects;
    const auto events = ingest::parse_apps(dir / "apps.jsonl", rejects);
    REQUIRE(events.size() == 2);
    CHECK(events[0].app == "a2");
    CHECK(events[1].app == "a1");
    REQUIRE(rejects.size() == 1);
    CHECK(rejects[0].line == 3);
}

TEST_CASE("phq duplicates and foreign subjects are quarantined") {
    const auto dir = temp_dir("phq");
    write_file(dir / "phq.csv",
               "subject,day_index,score\n"
               "s1,7,12\n"
               "s1,7,13\n"
               "s2,7,9\n"
               "s1,14,31\n");
    std::vector<csv::RejectedRow> rejects;
    const auto obs = ingest::parse_phq(dir / "phq.csv", rejects, SubjectId{"s1"});
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].score == 12);
    REQUIRE(rejects.size() == 3);
    CHECK(rejects[0].reason == "duplicate observation");
    CHECK(rejects[1].reason == "subject mismatch");
    CHECK(rejects[2].reason == "score out of range");
}

TEST_CASE("round trip: emit then parse is identity") {
    Rng rng(42);
    std::vector<GpsFix> fixes;
    for (int i = 0; i < 200; ++i) {
        GpsFix f;
        f.t = Timestamp{1'600'000'000'000 + i * 300'000, 60};
        f.lat = rng.uniform(-89.0, 89.0);
        f.lon = rng.uniform(-179.0, 179.0);
        f.accuracy_m = rng.uniform(1.0, 50.0);
        f.speed_mps = rng.uniform(-1.0, 5.0);
        fixes.push_back(f);
    }
    const auto dir = temp_dir("roundtrip");
    ingest::write_gps(dir / "gps.csv", fixes);
    std::vector<csv::RejectedRow> rejects;
    const auto parsed = ingest::parse_gps(dir / "gps.csv", rejects);
    REQUIRE(rejects.empty());
    REQUIRE(parsed.size() == fixes.size());
    for (std::size_t i = 0; i < fixes.size(); ++i) {
        CHECK(parsed[i].t.instant_ms == fixes[i].t.instant_ms);
        CHECK(parsed[i].t.offset_min == fixes[i].t.offset_min);
        CHECK(parsed[i].lat == fixes[i].lat);
        CHECK(parsed[i].lon == fixes[i].lon);
        CHECK(parsed[i].accuracy_m == fixes[i].accuracy_m);
        CHECK(parsed[i].speed_mps == fixes[i].speed_mps);
    }
}

TEST_CASE("parsing is independent of row order") {
    Rng rng(77);
    std::vector<std::string> rows;
    for (int i = 0; i < 60; ++i) {
        // deliberately includes duplicate timestamps
        const int t = static_cast<int>(rng.uniform_int(0, 20)) * 1000;
        rows.push_back(std::to_string(t) + ",0," + (i % 2 ? "incoming" : "outgoing") + "," +
                       std::to_string(rng.uniform_int(0, 600)) + ",c" + std::to_string(rng.uniform_int(0, 4)));
    }

    const auto dir = temp_dir("row_order");
    auto write_rows = [&](const fs::path& p, const std::vector<std::string>& r) {
        std::ofstream out(p);
        out << "t_ms,offset_min,direction,duration_s,contact_hash\n";
        for (const auto& line : r) out << line << '\n';
    };
    write_rows(dir / "a.csv", rows);
    auto shuffled = rows;
    rng.shuffle(shuffled);
    write_rows(dir / "b.csv", shuffled);

    std::vector<csv::RejectedRow> rejects;
    const auto a = ingest::parse_calls(dir / "a.csv", rejects);
    const auto b = ingest::parse_calls(dir / "b.csv", rejects);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].t.instant_ms == b[i].t.instant_ms);
        CHECK(a[i].direction == b[i].direction);
        CHECK(a[i].duration_s == b[i].duration_s);
        CHECK(a[i].contact == b[i].contact);
    }
}

TEST_CASE("manifest round trip and duplicate subject detection") {
    const auto dir = temp_dir("manifest");
    auto make_streams = [&](const std::string& id) {
        const auto sub = dir / id;
        fs::create_directories(sub);
        ingest::write_calls(sub / "calls.csv", {});
        ingest::write_usage(sub / "usage.csv", {});
        ingest::write_apps(sub / "apps.csv", {});
        ingest::write_locks(sub / "locks.csv", {});
        ingest::write_gps(sub / "gps.csv", {});
        write_file(sub / "phq.csv", "subject,day_index,score\n");
        ingest::ManifestEntry e;
        e.subject = SubjectId{id};
        e.study_start = Timestamp{0, 0};
        e.calls = sub / "calls.csv";
        e.usage = sub / "usage.csv";
        e.apps = sub / "apps.csv";
        e.locks = sub / "locks.csv";
        e.gps = sub / "gps.csv";
        e.phq = sub / "phq.csv";
        return e;
    };

    ingest::CohortManifest manifest;
    manifest.subjects.push_back(make_streams("s1"));
    ingest::write_manifest(dir / "manifest.csv", manifest);
    const auto read_back = ingest::read_manifest(dir / "manifest.csv");
    REQUIRE(read_back.subjects.size() == 1);
    CHECK(read_back.subjects[0].subject.value == "s1");

    const auto cohort = ingest::load_cohort(read_back);
    REQUIRE(cohort.summaries.size() == 1);
    CHECK(cohort.summaries[0].flagged); // all streams empty
    CHECK(cohort.summaries[0].streams.at("calls").events == 0);

    manifest.subjects.push_back(make_streams("s1"));
    CHECK_THROWS_AS(ingest::load_cohort(manifest), DataError);
}

}

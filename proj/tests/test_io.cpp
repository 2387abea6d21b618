#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tamrl/io/entity_series.hpp"
#include "tamrl/io/manifest.hpp"
#include "tamrl/io/metrics.hpp"
#include "tamrl/io/results.hpp"
#include "tamrl/io/windows.hpp"

using namespace tamrl;
namespace fs = std::filesystem;

namespace {

std::vector<std::size_t> starts_of(const std::vector<SlidingWindow>& ws) {
    std::vector<std::size_t> out;
    for (const auto& w : ws) out.push_back(w.start);
    return out;
}

// Counting oracle: floor((T - L) / S) + 1 windows.
std::size_t expected_windows(std::size_t T, std::size_t L, std::size_t S) { return (T - L) / S + 1; }

SeriesSchema two_driver_schema() { return SeriesSchema{"timestamp", {"ta", "sw"}, "gpp"}; }

csv::Table table_of(const std::string& text) {
    std::istringstream in(text);
    return csv::read_table(in, "mem.csv");
}

std::string load_error(const std::string& text) {
    try {
        parse_entity_table(table_of(text), two_driver_schema(), "e", "mem.csv");
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

std::string manifest_error(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_manifest(in, "m.cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Windows, WorkedExamples) {
    EXPECT_EQ(starts_of(make_windows(100, 30, 15)), (std::vector<std::size_t>{0, 15, 30, 45, 60}));
    EXPECT_EQ(make_windows(30, 30, 15).size(), 1u);
    // A third start would be 366, and 366 + 365 > 730.
    EXPECT_EQ(starts_of(make_windows(730, 365, 183)), (std::vector<std::size_t>{0, 183}));
    EXPECT_EQ(starts_of(make_windows(731, 365, 183)), (std::vector<std::size_t>{0, 183, 366}));
}

TEST(Windows, CountMatchesEnumeration) {
    SeededRng rng(1);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t T = 1 + rng.index(400);
        const std::size_t L = 1 + rng.index(T);
        const std::size_t S = 1 + rng.index(60);
        const auto ws = make_windows(T, L, S);
        ASSERT_EQ(ws.size(), expected_windows(T, L, S));
        for (std::size_t i = 0; i < ws.size(); ++i) {
            ASSERT_EQ(ws[i].start, i * S);
            ASSERT_LE(ws[i].start + ws[i].length, T);
        }
    }
}

TEST(Windows, InvalidArgumentsRejected) {
    EXPECT_THROW(make_windows(10, 11, 1), DataError);
    EXPECT_THROW(make_windows(10, 0, 1), DataError);
    EXPECT_THROW(make_windows(10, 5, 0), DataError);
}

TEST(Split, FractionExample) {
    SeededRng rng(2);
    const WindowSplit s = split_support_query(5, 0.4, rng);
    EXPECT_EQ(s.support.size(), 2u);
    EXPECT_EQ(s.query.size(), 3u);
}

TEST(Split, DisjointAndCovering) {
    SeededRng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.index(40);
        const double f = rng.uniform(0.01, 0.99);
        const WindowSplit s = split_support_query(n, f, rng);
        std::set<std::size_t> all(s.support.begin(), s.support.end());
        for (auto q : s.query) ASSERT_TRUE(all.insert(q).second) << "window " << q << " on both sides";
        ASSERT_EQ(all.size(), n);
        ASSERT_EQ(*all.rbegin(), n - 1);
        ASSERT_FALSE(s.support.empty());
        ASSERT_FALSE(s.query.empty());
    }
}

TEST(Split, SameSeedSamePartition) {
    SeededRng a(4), b(4);
    const WindowSplit x = split_support_query(20, 0.5, a);
    const WindowSplit y = split_support_query(20, 0.5, b);
    EXPECT_EQ(x.support, y.support);
    EXPECT_EQ(x.query, y.query);
}

TEST(Split, TooFewWindowsRejected) {
    SeededRng rng(5);
    EXPECT_THROW(split_support_query(1, 0.5, rng), DataError);
    EXPECT_THROW(split_by_count(4, 4, rng), DataError);
    EXPECT_THROW(split_by_count(4, 0, rng), DataError);
    EXPECT_EQ(split_by_count(4, 3, rng).query.size(), 1u);
}

TEST(Metrics, Rmse) {
    const std::vector<double> p{1, 2}, z{0, 0};
    EXPECT_NEAR(rmse(p, z), 1.5811388300841898, 1e-15);
    EXPECT_EQ(rmse(p, p), 0.0);
    EXPECT_THROW(rmse(p, std::vector<double>{1}), ShapeError);
}

TEST(Metrics, TranslationIsDetected) {
    const std::vector<double> t{0.5, -1.0, 2.0};
    for (double c : {1e-6, -0.3, 4.0}) {
        std::vector<double> p = t;
        for (auto& v : p) v += c;
        EXPECT_GT(rmse(p, t), rmse(t, t));
    }
}

TEST(Metrics, EnsembleAveragesBeforeScoring) {
    EXPECT_EQ(ensemble_rmse({{2.0}, {0.0}}, std::vector<double>{1.0}), 0.0);
    EXPECT_THROW(ensemble_rmse({{1.0}, {1.0, 2.0}}, std::vector<double>{1.0}), ShapeError);
}

TEST(Results, RoundTrip) {
    const std::vector<ResultRow> rows{{"US-Ha1", "3m", "tamrl", "0", 1.25}, {"US-Ha1", "3m", "tamrl", "ensemble", 0.1 + 0.2}};
    std::stringstream ss;
    write_results(ss, rows, {"config_hash=abc;seed=0"});
    EXPECT_EQ(ss.str().rfind("# config_hash=abc;seed=0\nentity_id,budget,model,seed,rmse\n", 0), 0u);
    EXPECT_EQ(read_results(ss), rows);
}

TEST(Results, EmptySetIsHeaderOnly) {
    std::stringstream ss;
    write_results(ss, {});
    EXPECT_EQ(ss.str(), "entity_id,budget,model,seed,rmse\n");
    EXPECT_TRUE(read_results(ss).empty());
}

TEST(Results, NegativeRmseRejected) {
    std::stringstream ss;
    EXPECT_THROW(write_results(ss, {{"e", "b", "m", "0", -1.0}}), DataError);
}

TEST(EntityCsv, WellFormedFile) {
    const auto s = parse_entity_table(table_of("timestamp,ta,sw,gpp\n2001-01-01,1,2,3\n2001-01-02,4,5,6\n2001-01-03,7,8,9\n"),
                                      two_driver_schema(), "e", "mem.csv");
    EXPECT_EQ(s.length(), 3u);
    EXPECT_EQ(s.drivers, Tensor::matrix({{1, 2}, {4, 5}, {7, 8}}));
    EXPECT_EQ(s.response, Tensor::matrix({{3}, {6}, {9}}));
}

TEST(EntityCsv, ColumnOrderFollowsSchema) {
    const auto s = parse_entity_table(table_of("gpp,sw,timestamp,ta\n3,2,2001-01-01,1\n"), two_driver_schema(), "e", "m");
    EXPECT_EQ(s.drivers, Tensor::matrix({{1, 2}}));
}

TEST(EntityCsv, MissingCellNamesRow) {
    const std::string msg = load_error("timestamp,ta,sw,gpp\n2001-01-01,1,2,3\n2001-01-02,4,,6\n");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("missing value in column 'sw'"), std::string::npos) << msg;
}

TEST(EntityCsv, DuplicateTimestampRejected) {
    const std::string msg = load_error("timestamp,ta,sw,gpp\n2001-01-01,1,2,3\n2001-01-01,4,5,6\n");
    EXPECT_NE(msg.find("not after the previous row"), std::string::npos) << msg;
}

TEST(EntityCsv, DecreasingTimestampRejected) {
    const std::string msg = load_error("timestamp,ta,sw,gpp\n2001-01-02,1,2,3\n2001-01-01,4,5,6\n");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(EntityCsv, UnknownColumnRejected) {
    const std::string msg = load_error("timestamp,ta,sw,vpd,gpp\n2001-01-01,1,2,0,3\n");
    EXPECT_NE(msg.find("unknown column 'vpd'"), std::string::npos) << msg;
}

TEST(EntityCsv, AbsentDeclaredColumnRejected) {
    EXPECT_NE(load_error("timestamp,ta,gpp\n2001-01-01,1,3\n").find("'sw'"), std::string::npos);
}

TEST(EntityCsv, BadValuesRejected) {
    EXPECT_NE(load_error("timestamp,ta,sw,gpp\n2001-13-01,1,2,3\n").find("invalid timestamp"), std::string::npos);
    EXPECT_NE(load_error("timestamp,ta,sw,gpp\n2001-01-01,x,2,3\n").find("invalid number 'x'"), std::string::npos);
    EXPECT_NE(load_error("timestamp,ta,sw,gpp\n2001-01-01,nan,2,3\n").find("invalid number"), std::string::npos);
    EXPECT_NE(load_error("timestamp,ta,sw,gpp\n2001-01-01,1,2\n").find("3 fields"), std::string::npos);
}

TEST(EntityCsv, Timestamps) {
    EXPECT_EQ(parse_iso8601("1970-01-02"), 86400);
    EXPECT_EQ(parse_iso8601("1970-01-01T01:00"), 3600);
    EXPECT_EQ(parse_iso8601("1970-01-01 00:00:30"), 30);
    EXPECT_FALSE(parse_iso8601("2001-02-29"));
    EXPECT_FALSE(parse_iso8601("2001/01/01"));
}

TEST(EntityCsv, DirectoryLoadsSortedFiles) {
    const fs::path dir = fs::temp_directory_path() / "tamrl_test_io_dir";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "b.csv") << "timestamp,ta,sw,gpp\n2001-01-01,1,2,3\n";
    std::ofstream(dir / "a.csv") << "timestamp,ta,sw,gpp\n2001-01-01,1,2,3\n2001-01-02,1,2,3\n";
    std::ofstream(dir / "notes.txt") << "ignored\n";
    const auto all = load_entity_dir(dir, two_driver_schema());
    ASSERT_EQ(all.size(), 2u);
    EXPECT_EQ(all[0].entity_id, "a");
    EXPECT_EQ(all[1].length(), 1u);
    fs::remove_all(dir);
}

TEST(EntityCsv, WindowSamplesSliceSeries) {
    const auto s = parse_entity_table(
        table_of("timestamp,ta,sw,gpp\n2001-01-01,1,2,3\n2001-01-02,4,5,6\n2001-01-03,7,8,9\n2001-01-04,1,1,1\n"),
        two_driver_schema(), "e", "m");
    const auto ws = make_windows(s, 2, 1);
    ASSERT_EQ(ws.size(), 3u);
    WindowSplit split{{0}, {1, 2}};
    const TaskEpisode e = window_episode(s, ws, split);
    EXPECT_EQ(e.support[0].x, Tensor::matrix({{1, 2}, {4, 5}}));
    EXPECT_EQ(e.query[1].y, Tensor::matrix({{9}, {1}}));
}

TEST(Manifest, ParsesKeysAndComments) {
    std::istringstream in("# comment\nseed = 7\nwindow.length=365\nschema.drivers = ta, sw\nadapt.lr = 0.01\n");
    const ExperimentConfig c = parse_manifest(in);
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.window_length, 365u);
    EXPECT_EQ(c.schema.drivers, (std::vector<std::string>{"ta", "sw"}));
    EXPECT_EQ(c.adapt_lr, 0.01);
    EXPECT_EQ(c.ensemble_size, 5u);
}

TEST(Manifest, MisspelledKeyNamesKey) {
    const std::string msg = manifest_error("window.lenght = 30\n");
    EXPECT_NE(msg.find("unknown manifest key 'window.lenght'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
}

TEST(Manifest, MalformedLinesRejected) {
    EXPECT_NE(manifest_error("seed 3\n").find("expected 'key = value'"), std::string::npos);
    EXPECT_NE(manifest_error("seed = 1\nseed = 2\n").find("duplicate key 'seed'"), std::string::npos);
    EXPECT_NE(manifest_error("seed = -1\n").find("non-negative integer"), std::string::npos);
}

TEST(Manifest, CanonicalTextRoundTrips) {
    ExperimentConfig c;
    c.seed = 11;
    c.schema.drivers = {"p", "t"};
    c.support_fraction = 0.3;
    std::istringstream in(manifest_text(c));
    EXPECT_EQ(parse_manifest(in), c);
}

TEST(Manifest, Validation) {
    ExperimentConfig c;
    EXPECT_NO_THROW(validate_config(c));
    c.support_fraction = 1.0;
    EXPECT_THROW(validate_config(c), ConfigError);
    c = ExperimentConfig{};
    c.dataset_kind = "series";
    EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Manifest, HashIgnoresSeedOnly) {
    ExperimentConfig a, b;
    b.seed = 99;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.adapt_steps = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(model_config_hash(a), model_config_hash(b));
    b.train_lr = 0.01;
    EXPECT_NE(model_config_hash(a), model_config_hash(b));
    EXPECT_EQ(hex64(255), "00000000000000ff");
}

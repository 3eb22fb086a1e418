#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "poisseq/core_data.hpp"
#include "poisseq/power_transform.hpp"
#include "poisseq/simulator.hpp"
#include "test_util.hpp"

using namespace poisseq;

namespace {

CountMatrix two_by_three() {
    return CountMatrix(2, 3, {1, 2, 3, 4, 5, 6}, {"a", "b"}, {"x", "y", "z"});
}

} // namespace

TEST(CountMatrix, MarginalsAndTotal) {
    const auto m = two_by_three();
    EXPECT_EQ(m.num_samples(), 2u);
    EXPECT_EQ(m.num_features(), 3u);
    EXPECT_EQ(m.row_sums(), (std::vector<double>{6, 15}));
    EXPECT_EQ(m.column_sums(), (std::vector<double>{5, 7, 9}));
    EXPECT_EQ(m.total(), 21.0);
}

TEST(CountMatrix, RejectsInvalidEntriesAndIds) {
    EXPECT_THROW(CountMatrix(1, 2, {1, -1}, {"a"}, {"x", "y"}), ValidationError);
    EXPECT_THROW(CountMatrix(1, 2, {1, std::nan("")}, {"a"}, {"x", "y"}), ValidationError);
    EXPECT_THROW(CountMatrix(1, 2, {1, INFINITY}, {"a"}, {"x", "y"}), ValidationError);
    EXPECT_THROW(CountMatrix(1, 2, {1, 2}, {"a"}, {"x", "x"}), ValidationError);
    EXPECT_THROW(CountMatrix(2, 1, {1, 2}, {"a", "a"}, {"x"}), ValidationError);
    EXPECT_THROW(CountMatrix(0, 0, {}, {}, {}), ValidationError);
    try {
        CountMatrix(1, 2, {1, -1}, {"a"}, {"x", "y"});
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos);
    }
}

TEST(CountMatrix, ColumnTotals) {
    EXPECT_EQ(column_totals(CountMatrix::from_rows({{1, 2}, {3, 4}})), (std::vector<double>{4, 6}));
    EXPECT_EQ(column_totals(CountMatrix::from_rows({{1, 0}, {3, 0}})), (std::vector<double>{4, 0}));
    EXPECT_EQ(column_totals(CountMatrix::from_rows({{7, 8, 9}})), (std::vector<double>{7, 8, 9}));
}

TEST(CountMatrix, TransposeTwiceIsIdentity) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = test::random_matrix(rng, 1 + rng() % 7, 1 + rng() % 9, 20.0);
        EXPECT_EQ(m.transposed().transposed(), m);
        EXPECT_EQ(m.transposed().num_samples(), m.num_features());
    }
}

TEST(CountMatrix, CachedMarginalsMatchFreshSums) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = test::random_matrix(rng, 1 + rng() % 9, 1 + rng() % 30, 1000.0, true);
        std::vector<double> rows(m.num_samples(), 0.0), cols(m.num_features(), 0.0);
        for (std::size_t i = 0; i < m.num_samples(); ++i)
            for (std::size_t j = 0; j < m.num_features(); ++j) {
                rows[i] += m(i, j);
                cols[j] += m(i, j);
            }
        double total = 0;
        for (double r : rows) total += r;
        EXPECT_EQ(rows, m.row_sums());
        EXPECT_EQ(cols, m.column_sums());
        EXPECT_EQ(total, m.total());
    }
}

TEST(LabeledDataset, RequiresNonemptyClasses) {
    const auto m = two_by_three();
    EXPECT_NO_THROW(LabeledDataset(m, {0, 1}, {"A", "B"}));
    EXPECT_THROW(LabeledDataset(m, {0, 0}, {"A", "B"}), ValidationError);
    EXPECT_THROW(LabeledDataset(m, {0}, {"A"}), ValidationError);
    const LabeledDataset d(m, {1, 0}, {"A", "B"});
    EXPECT_EQ(d.members(0), (std::vector<std::size_t>{1}));
    EXPECT_EQ(d.members(1), (std::vector<std::size_t>{0}));
}

TEST(Partition, EveryClusterUsed) {
    EXPECT_NO_THROW(Partition({0, 1, 1, 2}));
    EXPECT_THROW(Partition({0, 2}), ValidationError);
    EXPECT_EQ(Partition({1, 0, 1}).num_clusters(), 2u);
}

class TsvIo : public ::testing::Test {
protected:
    test::TempDir dir;
};

TEST_F(TsvIo, ReadsBothOrientations) {
    const auto path = dir.file("m.tsv");
    test::write_text(path, "id\tx\ty\tz\na\t1\t2\t3\nb\t4\t5\t6\n");
    const auto m = read_count_matrix(path);
    EXPECT_EQ(m, two_by_three());
    EXPECT_EQ(m.total(), 21.0);

    const auto t = read_count_matrix(path, Orientation::features_as_rows);
    EXPECT_EQ(t, two_by_three().transposed());
    EXPECT_EQ(t.sample_ids(), (std::vector<std::string>{"x", "y", "z"}));
}

TEST_F(TsvIo, AcceptsScientificNotationAndCrlf) {
    const auto path = dir.file("m.tsv");
    test::write_text(path, "id\tx\ty\r\na\t1e2\t+2.5E-1\r\n\n");
    const auto m = read_count_matrix(path);
    EXPECT_EQ(m(0, 0), 100.0);
    EXPECT_EQ(m(0, 1), 0.25);
}

TEST_F(TsvIo, NegativeValueNamesTheCell) {
    const auto path = dir.file("m.tsv");
    test::write_text(path, "id\tx\ty\na\t1\t-1\n");
    try {
        read_count_matrix(path);
        FAIL() << "expected a validation error";
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("'a'"), std::string::npos) << what;
        EXPECT_NE(what.find("'y'"), std::string::npos) << what;
    }
}

TEST_F(TsvIo, MalformedFilesGiveLocatedErrors) {
    const auto path = dir.file("m.tsv");
    test::write_text(path, "id\tx\ty\na\t1\t2\nb\t3\n");
    try {
        read_count_matrix(path);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    test::write_text(path, "name\tx\na\t1\n");
    EXPECT_THROW(read_count_matrix(path), ParseError);
    test::write_text(path, "id\tx\na\tone\n");
    EXPECT_THROW(read_count_matrix(path), ParseError);
    test::write_text(path, "id\tx\ta\na\t1\t2\na\t3\t4\n");
    EXPECT_THROW(read_count_matrix(path), ValidationError);
    EXPECT_THROW(read_count_matrix(dir.file("missing.tsv")), IoError);
}

// Random single-character corruptions either still parse to a valid matrix
// or fail with one of the library's located errors; nothing else escapes.
TEST_F(TsvIo, CorruptionFuzz) {
    std::mt19937_64 rng(11);
    const std::string clean = "id\tf1\tf2\tf3\ns1\t1\t20\t3\ns2\t4\t5\t60\ns3\t0\t8\t9\n";
    const std::string alphabet = "\t\n-x.e0 9";
    const auto path = dir.file("fuzz.tsv");
    for (int trial = 0; trial < 500; ++trial) {
        std::string text = clean;
        const int edits = 1 + static_cast<int>(rng() % 3);
        for (int e = 0; e < edits; ++e) {
            const std::size_t pos = rng() % text.size();
            if (rng() % 2 == 0) text[pos] = alphabet[rng() % alphabet.size()];
            else text.erase(pos, 1);
        }
        test::write_text(path, text);
        try {
            const auto m = read_count_matrix(path);
            EXPECT_GE(m.num_samples(), 1u);
        } catch (const ParseError&) {
        } catch (const ValidationError&) {
        }
    }
}

TEST_F(TsvIo, IntegerRoundTrip) {
    SimulationConfig c;
    c.n = 10;
    c.p = 50;
    c.phi = 0.1;
    c.seed = 5;
    const auto m = simulate(c).data.matrix();
    const auto path = dir.file("sim.tsv");
    write_count_matrix(m, path);
    EXPECT_EQ(read_count_matrix(path), m);
}

TEST_F(TsvIo, RealRoundTripAfterTransform) {
    std::mt19937_64 rng(8);
    const auto m = apply_alpha(test::random_matrix(rng, 6, 40, 500.0), 0.37);
    const auto path = dir.file("real.tsv");
    write_count_matrix(m, path);
    const auto back = read_count_matrix(path);
    for (std::size_t i = 0; i < m.num_samples(); ++i)
        for (std::size_t j = 0; j < m.num_features(); ++j)
            EXPECT_NEAR(back(i, j), m(i, j), 1e-15 * std::max(1.0, std::abs(m(i, j))));
}

TEST_F(TsvIo, UnwritableDestination) {
    EXPECT_THROW(write_count_matrix(two_by_three(), dir.file("no/such/dir/m.tsv")), IoError);
}

TEST_F(TsvIo, LabelsMapInFirstAppearanceOrder) {
    const auto counts = dir.file("c.tsv");
    const auto labels = dir.file("l.tsv");
    test::write_text(counts, "id\tx\ty\tz\na\t1\t2\t3\nb\t4\t5\t6\n");
    test::write_text(labels, "b\ttumor\na\tnormal\n");
    const auto d = read_labeled_dataset(counts, labels);
    EXPECT_EQ(d.class_names(), (std::vector<std::string>{"tumor", "normal"}));
    EXPECT_EQ(d.labels(), (std::vector<std::size_t>{1, 0}));

    test::write_text(labels, "id\tclass\na\tA\nc\tB\n");
    EXPECT_THROW(read_labeled_dataset(counts, labels), ValidationError);
}

TEST_F(TsvIo, PartitionRoundTrip) {
    const Partition p({0, 1, 1, 2});
    const std::vector<std::string> ids{"w", "x", "y", "z"};
    const auto path = dir.file("p.tsv");
    write_partition(p, ids, path);
    const auto [read_ids, q] = read_partition(path);
    EXPECT_EQ(read_ids, ids);
    EXPECT_EQ(q.assignments(), p.assignments());
}

#include <gtest/gtest.h>

#include "poisseq/serialization.hpp"
#include "test_util.hpp"

using namespace poisseq;

namespace {

SimulatedDataset dataset(double phi) {
    SimulationConfig c;
    c.n = 12;
    c.p = 400;
    c.phi = phi;
    c.seed = 3;
    c.sigma = 0.3;
    return simulate(c);
}

} // namespace

TEST(ModelJson, RoundTripGivesIdenticalPredictions) {
    test::TempDir dir;
    const auto train = dataset(1.0);
    const auto test = simulate_test_set(train, 7);
    for (const auto method : {SizeFactorMethod::total_count, SizeFactorMethod::quantile,
                              SizeFactorMethod::median_ratio}) {
        FitOptions o;
        o.method = method;
        o.rho = 0.5;
        const auto model = fit(train.data, o);
        write_model(model, dir.file("model.json"));
        const auto back = read_model(dir.file("model.json"));
        EXPECT_EQ(back.d_hat, model.d_hat);
        EXPECT_EQ(back.g_hat, model.g_hat);
        EXPECT_EQ(back.alpha, model.alpha);
        EXPECT_EQ(back.size_factors.values, model.size_factors.values);
        const auto a = predict(model, test.data.matrix());
        const auto b = predict(back, test.data.matrix());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].class_index, b[i].class_index);
            EXPECT_EQ(a[i].scores, b[i].scores);
        }
    }
}

TEST(ModelJson, MalformedRejected) {
    test::TempDir dir;
    const auto model = fit(dataset(0.0).data);
    auto j = to_json(model);

    auto broken = j;
    broken["format"] = "other";
    EXPECT_THROW(plda_model_from_json(broken), ParseError);
    broken = j;
    broken["version"] = 99;
    EXPECT_THROW(plda_model_from_json(broken), ParseError);
    broken = j;
    broken.erase("g_hat");
    EXPECT_THROW(plda_model_from_json(broken), ParseError);
    broken = j;
    broken["d_hat"][0].erase(0);
    EXPECT_THROW(plda_model_from_json(broken), ParseError);
    broken = j;
    broken["d_hat"][0][0] = -1.0;
    EXPECT_THROW(plda_model_from_json(broken), ParseError);
    broken = j;
    broken["priors"] = std::vector<double>{1.0};
    EXPECT_THROW(plda_model_from_json(broken), ParseError);

    test::write_text(dir.file("bad.json"), "{not json");
    EXPECT_THROW(read_model(dir.file("bad.json")), ParseError);
    EXPECT_THROW(read_model(dir.file("missing.json")), IoError);
}

TEST(ResultJson, Fields) {
    const auto t = find_alpha(dataset(1.0).data.matrix());
    const auto j = to_json(t);
    EXPECT_EQ(j.at("alpha").get<double>(), t.alpha);
    EXPECT_TRUE(j.at("overdispersed").get<bool>());

    const auto sim = dataset(0.0);
    const auto s = to_json(sim);
    EXPECT_EQ(s.at("config").at("k").get<std::size_t>(), 3u);
    EXPECT_EQ(s.at("d").size(), 3u);
    EXPECT_EQ(s.at("g").get<std::vector<double>>(), sim.truth.g);
}

TEST(SizeFactorsTsv, Written) {
    test::TempDir dir;
    const auto m = CountMatrix::from_rows({{1, 3}, {2, 2}});
    write_size_factors(estimate_total_count(m), m.sample_ids(), dir.file("sf.tsv"));
    const auto text = test::read_text(dir.file("sf.tsv"));
    EXPECT_EQ(text.substr(0, 15), "id\tsize_factor\n");
    EXPECT_NE(text.find("\t0.5\n"), std::string::npos);
}

TEST(NewickFile, Written) {
    test::TempDir dir;
    const auto d = complete_linkage(DissimilarityMatrix({"a", "b", "c"}, {1, 5, 5}));
    write_newick(d, dir.file("tree.nwk"));
    EXPECT_EQ(test::read_text(dir.file("tree.nwk")), "((a:1,b:1):4,c:5);\n");
}

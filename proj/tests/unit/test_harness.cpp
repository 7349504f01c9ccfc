#include "helpers.hpp"

#include "../common/synthetic.hpp"
#include "fccnn/harness.hpp"

#include <fstream>
#include <sstream>

using namespace fccnn;
using testing::error_code_of;

namespace {

RunConfig small_config(std::size_t epochs, std::uint64_t seed = 1) {
    RunConfig c;
    c.epochs = epochs;
    c.batch_size = 32;
    c.seed = seed;
    c.optimizer.lr = 3e-3;
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST_CASE("FC-CNN on 512 synthetic samples exceeds 3x chance") {
    // doctest re-enters the case once per subcase, so train once
    static const auto train = synthetic::blocks(512, 10, 81);
    static const auto test = synthetic::blocks(200, 10, 82, Split::test);
    const auto config = small_config(6);
    static std::vector<MetricsRecord> seen;
    static auto s1 = train_stage1(config, train, &test, [&](const MetricsRecord& m) { seen.push_back(m); });
    REQUIRE(s1.metrics.size() == 6);
    CHECK(seen.size() == 6);
    MESSAGE("stage-1 test accuracy " << s1.metrics.back().test_acc);
    CHECK(s1.metrics.back().train_acc >= 0.30);
    CHECK(s1.metrics.back().test_acc >= 0.30);
    CHECK(s1.metrics.back().train_loss < s1.metrics.front().train_loss);
    for (std::size_t e = 0; e < 6; ++e) {
        CHECK(s1.metrics[e].epoch == e);
        CHECK(s1.metrics[e].stage == 1);
        CHECK(s1.metrics[e].e_thr == doctest::Approx(std::exp(-0.05 * static_cast<double>(e))));
        CHECK(s1.metrics[e].iteration == (e + 1) * 16);
    }
    CHECK(s1.store.features.shape() == Shape{512, 128});
    CHECK(s1.store.labels == train.labels);
    CHECK(s1.store.checkpoint_id == s1.model.fingerprint());
    CHECK(s1.optimizer.steps() == 6 * 16);

    SUBCASE("stage 2 retrains the head only") {
        auto s2 = train_stage2(s1.model, s1.store, config, &test, {}, s1.metrics.back().iteration);
        REQUIRE(s2.metrics.size() == 6);
        CHECK(s2.metrics.front().stage == 2);
        CHECK(s2.metrics.front().epoch == 0);
        CHECK(s2.metrics.front().e_thr == 1.0);
        CHECK(s2.metrics.back().iteration == 12 * 16);
        for (const char* name : {"conv1.weight", "conv2.weight", "conv3.weight", "depthwise.weight"})
            CHECK(s2.model.parameter(name).value == s1.model.parameter(name).value);
        CHECK_FALSE(s2.model.parameter("linear.weight").value == s1.model.parameter("linear.weight").value);
        CHECK(s2.metrics.back().test_acc >= s1.metrics.back().test_acc - 0.05);
    }
    SUBCASE("stored features reproduce the full forward through the head") {
        const std::vector<std::size_t> rows{0, 17, 511};
        const auto x = train.subset(rows).images;
        const auto full = s1.model.infer(x);
        const auto via_store = s1.model.infer_head(gather_rows(s1.store.features, rows));
        CHECK(testing::max_abs_diff(full, via_store) <= 1e-5);
        const auto a = evaluate(s1.model, train, 64);
        const auto b = evaluate_head(s1.model, s1.store.features, s1.store.labels, 64);
        CHECK(a.accuracy == b.accuracy);
        CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-5));
    }
    SUBCASE("zero stage-2 epochs return the model unchanged") {
        auto c0 = config;
        c0.epochs = 0;
        auto s2 = train_stage2(s1.model, s1.store, c0, &test);
        CHECK(s2.metrics.empty());
        CHECK(s2.model.fingerprint() == s1.model.fingerprint());
    }
    SUBCASE("a feature store from other weights is rejected") {
        auto store = s1.store;
        store.checkpoint_id = "0000000000000000";
        CHECK(error_code_of([&] { train_stage2(s1.model, store, config, &test); }) == ErrorCode::invalid_argument);
        auto short_store = s1.store;
        short_store.labels.pop_back();
        CHECK(error_code_of([&] { train_stage2(s1.model, short_store, config, &test); }) != ErrorCode::internal);
    }
    SUBCASE("re-initialized head variant") {
        auto cr = config;
        cr.stage2_reinit = true;
        cr.epochs = 1;
        auto s2 = train_stage2(s1.model, s1.store, cr, &test);
        CHECK(s2.model.parameter("conv3.weight").value == s1.model.parameter("conv3.weight").value);
    }
}

TEST_CASE("zero learning rate leaves every parameter unchanged") {
    const auto train = synthetic::blocks(64, 10, 83);
    auto config = small_config(1);
    config.optimizer.lr = 0.0;
    const auto before = build_fc_cnn(10, config.seed).fingerprint();
    auto s1 = train_stage1(config, train, nullptr);
    CHECK(s1.model.fingerprint() == before);
    CHECK(s1.metrics.back().test_acc == 0.0);
}

TEST_CASE("baselines train with cross-entropy") {
    const auto train = synthetic::blocks(64, 10, 84);
    for (auto kind : {ModelKind::real_cnn, ModelKind::dcn}) {
        auto config = small_config(2);
        config.model = kind;
        auto s1 = train_stage1(config, train, &train);
        CHECK(s1.metrics.size() == 2);
        CHECK(std::isfinite(s1.metrics.back().train_loss));
        if (kind == ModelKind::real_cnn)
            for (const auto& p : s1.model.all_parameters()) CHECK(p.value.is_real());
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    const auto train = synthetic::blocks(96, 10, 85);
    auto config = small_config(2, 42);
    auto a = train_stage1(config, train, &train);
    auto b = train_stage1(config, train, &train);
    CHECK(a.model.fingerprint() == b.model.fingerprint());
    for (std::size_t e = 0; e < 2; ++e) {
        CHECK(a.metrics[e].train_loss == b.metrics[e].train_loss);
        CHECK(a.metrics[e].test_acc == b.metrics[e].test_acc);
    }
    config.seed = 43;
    CHECK(train_stage1(config, train, nullptr).model.fingerprint() != a.model.fingerprint());
}

TEST_CASE("config validation") {
    const auto train = synthetic::blocks(8, 10, 86);
    auto bad = small_config(1);
    bad.batch_size = 0;
    CHECK(error_code_of([&] { train_stage1(bad, train, nullptr); }) == ErrorCode::invalid_argument);
    bad = small_config(1);
    bad.optimizer.lr = -1;
    CHECK(error_code_of([&] { bad.validate(); }) == ErrorCode::invalid_argument);
    bad = small_config(1);
    bad.dataset = "imagenet";
    CHECK(error_code_of([&] { bad.validate(); }) == ErrorCode::invalid_argument);
}

TEST_CASE("report writes metrics, summary and curves") {
    testing::TempDir dir("report");
    std::vector<MetricsRecord> s1{{0, 1, 0.5, 0.2, 0.25, 1.0, 0.1, 10}, {1, 1, 0.4, 0.3, 0.35, std::exp(-0.05), 0.2, 20}};
    std::vector<MetricsRecord> s2{{0, 2, 0.3, 0.4, 0.45, 1.0, 0.05, 30}, {1, 2, 0.2, 0.5, 0.55, std::exp(-0.05), 0.1, 40}};
    const auto spec = make_spec(ModelKind::fc_cnn, 100);
    report({{"fc-cnn stage 1", s1}, {"fc-cnn stage 2", s2}}, spec, count_params(spec), count_macs(spec), dir.path());
    const auto csv = lines(slurp(dir / "metrics.csv"));
    REQUIRE(csv.size() == 5);
    CHECK(csv[0] == "epoch,stage,train_loss,train_acc,test_acc,e_thr,wall_s");
    CHECK(csv[1].rfind("0,1,0.5,0.2,0.25,1,", 0) == 0);
    CHECK(csv[3].rfind("0,2,", 0) == 0);
    CHECK(csv[4].rfind("1,2,", 0) == 0);
    const auto summary = slurp(dir / "summary.txt");
    CHECK(summary.find("986852") != std::string::npos);
    CHECK(summary.find("34244") != std::string::npos);
    CHECK(summary.find("fc-cnn stage 2: final test accuracy 0.55") != std::string::npos);
    const auto svg = slurp(dir / "curves.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("iteration") != std::string::npos);
    CHECK(svg.find("test accuracy") != std::string::npos);
    std::size_t polylines = 0;
    for (std::size_t at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1)) ++polylines;
    CHECK(polylines == 2);
}

TEST_CASE("empty metrics are an error and write nothing") {
    testing::TempDir dir("report-empty");
    const auto out = dir / "out";
    const auto spec = make_spec(ModelKind::fc_cnn, 10);
    CHECK(error_code_of([&] { report({{"x", {}}}, spec, count_params(spec), count_macs(spec), out); }) ==
          ErrorCode::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(out));
}

TEST_CASE("run_training on CIFAR-format files writes checkpoints and the report") {
    testing::TempDir dir("run");
    synthetic::write_cifar10(dir / "data", 60, 20, 87);
    auto config = small_config(1);
    config.data_dir = dir / "data";
    config.out_dir = dir / "out";
    config.encoding = Encoding::sliding;
    const auto outcome = run_training(config);
    CHECK(outcome.metrics.size() == 2);
    for (const char* f : {"metrics.csv", "summary.txt", "curves.svg", "stage1/manifest.json",
                          "stage1/optimizer/optimizer.json", "final/manifest.json"})
        CHECK_MESSAGE(std::filesystem::exists(dir / "out" / f), f);
    auto final_model = load_checkpoint(outcome.final_checkpoint);
    const auto test = load_split("cifar10", config.data_dir, Split::test, Encoding::sliding);
    CHECK(test.size() == 20);
    CHECK(evaluate(final_model, test).accuracy == doctest::Approx(outcome.final_test_acc));
    const auto manifest = slurp(dir / "out/final/manifest.json");
    CHECK(manifest.find("features_from") != std::string::npos);

    auto limited = load_split("cifar10", config.data_dir, Split::train, Encoding::rgb, 25, 3);
    CHECK(limited.size() == 25);
    CHECK(error_code_of([&] { load_split("cifar10", dir / "nowhere", Split::train, Encoding::rgb); }) == ErrorCode::io);
}
